//! Command-line front end for the experiment harness.
//!
//! Every subcommand takes an optional `--config` TOML file; any flag given on
//! the command line overrides the matching key.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nspolar::bench::{self, ExperimentConfig, ExperimentKind};
use nspolar::construction::PermKind;

#[derive(Parser)]
#[command(name = "nspolar", version, about = "Polar codes for non-stationary channels and crossbar storage")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a code from a characterization (or the synthetic family) and write golden vectors.
    Construct(Options),
    /// Synthetic non-stationary BSC comparison against regular and random-permutation codes.
    SyntheticBsc(Options),
    /// Crossbar BER for the four permutation choices over a wire-resistance sweep.
    CrossbarBer(Options),
    /// Crossbar BER under the symmetric and asymmetric cell models.
    BscVsBac(Options),
    /// Crossbar BER against the number of punctured positions.
    PunctureSweep(Options),
    /// Permutation classes and four-channel optimality on tiny blocklengths.
    Permclass(Options),
    /// Train thresholds and write a cell characterization.
    Characterize(Options),
}

// Declares the override flags together with the config key each one sets.
macro_rules! overrides {
    ($($(#[$doc:meta])* $field:ident => $key:literal, $shape:ident;)*) => {
        #[derive(Args)]
        struct Overrides {
            $($(#[$doc])* #[arg(long)] $field: Option<String>,)*
        }

        impl Overrides {
            fn pairs(&self) -> Vec<(&'static str, Shape, &str)> {
                let mut out = Vec::new();
                $(if let Some(v) = &self.$field { out.push(($key, Shape::$shape, v.as_str())); })*
                out
            }
        }
    };
}

#[derive(Clone, Copy)]
enum Shape {
    Scalar,
    List,
    Perm,
}

overrides! {
    /// Master seed (required here or in the config file).
    seed => "seed", Scalar;
    /// log2 blocklength for synthetic runs.
    n => "n", Scalar;
    /// Code rate; the message length is floor(rate * N).
    rate => "rate", Scalar;
    /// identity | bit-reversal | ordered | ordered-bit-reversal | random:SEED | explicit:I0,I1,...
    perm_kind => "perm_kind", Perm;
    /// Number of punctured positions.
    np => "np", Scalar;
    /// Cell error model: bsc | bac.
    model => "model", Scalar;
    rows => "crossbar.rows", Scalar;
    cols => "crossbar.cols", Scalar;
    /// Wire resistance per segment, ohms.
    rw => "crossbar.wire_resistance", Scalar;
    r_lrs => "crossbar.r_lrs", Scalar;
    r_hrs => "crossbar.r_hrs", Scalar;
    v_read => "crossbar.v_read", Scalar;
    solver_rel_tol => "crossbar.solver_rel_tol", Scalar;
    /// top | bottom.
    sense_edge => "crossbar.sense_edge", Scalar;
    /// grounded | floating.
    unselected_rows => "crossbar.unselected_rows", Scalar;
    /// Comma-separated wire resistances.
    rw_sweep => "rw_sweep", List;
    /// Comma-separated puncturing sizes.
    np_grid => "np_grid", List;
    /// Comma-separated crossover centers.
    p_centers => "p_centers", List;
    p_deviation => "p_deviation", Scalar;
    min_frames => "stop.min_frames", Scalar;
    max_frames => "stop.max_frames", Scalar;
    /// Stop once this many bit errors were seen (0 disables).
    target_bit_errors => "stop.target_bit_errors", Scalar;
    sweep_min_frames => "sweep_stop.min_frames", Scalar;
    sweep_max_frames => "sweep_stop.max_frames", Scalar;
    sweep_target_bit_errors => "sweep_stop.target_bit_errors", Scalar;
    random_perms => "random_perms", Scalar;
    frames_per_random_perm => "frames_per_random_perm", Scalar;
    training_trials => "training_trials", Scalar;
    sweep_training_trials => "sweep_training_trials", Scalar;
    holdout_trials => "holdout_trials", Scalar;
    /// logistic | exhaustive.
    threshold_method => "threshold_method", Scalar;
    /// current | log-current.
    threshold_feature => "threshold_feature", Scalar;
    /// exact | min-sum.
    check_node => "check_node", Scalar;
    llr_saturation => "llr_saturation", Scalar;
    /// capacity | bhattacharyya.
    ordering_metric => "ordering_metric", Scalar;
    /// Saved characterization to use instead of training.
    characterization => "characterization", Scalar;
    golden_vectors => "golden_vectors", Scalar;
    permclass_trials => "permclass_trials", Scalar;
    /// Output file; a manifest is written next to it.
    output => "output", Scalar;
}

#[derive(Args)]
struct Options {
    /// TOML config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

/// Numbers and booleans parse as TOML literals; anything else is a string.
fn literal(text: &str) -> toml::Value {
    format!("v = {text}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(text.to_string()))
}

fn value(shape: Shape, text: &str) -> Result<toml::Value, String> {
    match shape {
        Shape::Scalar => Ok(literal(text)),
        Shape::List => {
            let items = text.split(',').map(str::trim).filter(|s| !s.is_empty());
            Ok(toml::Value::Array(items.map(literal).collect()))
        }
        Shape::Perm => {
            let kind: PermKind = text.parse().map_err(|e| format!("--perm-kind: {e}"))?;
            toml::Value::try_from(kind).map_err(|e| e.to_string())
        }
    }
}

fn set(table: &mut toml::Table, key: &str, v: toml::Value) {
    match key.split_once('.') {
        Some((head, rest)) => {
            let entry = table.entry(head).or_insert_with(|| toml::Value::Table(toml::Table::new()));
            if let toml::Value::Table(inner) = entry {
                set(inner, rest, v);
            }
        }
        None => {
            table.insert(key.to_string(), v);
        }
    }
}

fn config(kind: ExperimentKind, opts: &Options) -> Result<ExperimentConfig, String> {
    let mut table = match &opts.config {
        Some(path) => std::fs::read_to_string(path)
            .map_err(|e| format!("{}: {e}", path.display()))?
            .parse::<toml::Table>()
            .map_err(|e| format!("{}: {e}", path.display()))?,
        None => toml::Table::new(),
    };
    for (key, shape, text) in opts.overrides.pairs() {
        set(&mut table, key, value(shape, text)?);
    }
    set(&mut table, "kind", toml::Value::try_from(kind).map_err(|e| e.to_string())?);
    ExperimentConfig::from_toml(&table.to_string()).map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, opts) = match &cli.command {
        Command::Construct(o) => (ExperimentKind::Construct, o),
        Command::SyntheticBsc(o) => (ExperimentKind::SyntheticBsc, o),
        Command::CrossbarBer(o) => (ExperimentKind::CrossbarBer, o),
        Command::BscVsBac(o) => (ExperimentKind::BscVsBac, o),
        Command::PunctureSweep(o) => (ExperimentKind::PunctureSweep, o),
        Command::Permclass(o) => (ExperimentKind::Permclass, o),
        Command::Characterize(o) => (ExperimentKind::Characterize, o),
    };
    let cfg = match config(kind, opts) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let report = match bench::run(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    print!("{}", report.text);
    if !report.rows.is_empty() {
        if let Err(e) = bench::write_rows(&report.rows, std::io::stdout().lock()) {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    for c in &report.checks {
        println!("[{}] {}: {}", if c.passed { "pass" } else { "FAIL" }, c.name, c.detail);
    }
    for f in &report.files {
        println!("wrote {}", f.display());
    }
    if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
