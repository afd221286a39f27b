use std::path::PathBuf;
use std::process::Command;

use nspolar::bench::{manifest_path, read_rows, Manifest};
use nspolar::codec::GoldenFile;
use nspolar::construction::CodeSpec;
use nspolar::estimation::CellCharacterization;

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("nspolar-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn nspolar(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_nspolar")).args(args).output().expect("binary runs")
}

#[test]
fn missing_seed_is_an_error() {
    let out = nspolar(&["permclass", "--permclass-trials", "5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed"));
}

#[test]
fn unknown_config_key_is_rejected() {
    let cfg = scratch("bad.toml");
    std::fs::write(&cfg, "seed = 1\nnot_a_key = 3\n").unwrap();
    let out = nspolar(&["permclass", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn permclass_writes_report_and_manifest() {
    let out_path = scratch("classes.csv");
    let out = nspolar(&["permclass", "--seed", "3", "--permclass-trials", "20", "--output", out_path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let text = std::fs::read_to_string(&out_path).unwrap();
    assert!(text.starts_with("n_channels,case,classes,bound"));
    let manifest: Manifest = toml::from_str(&std::fs::read_to_string(manifest_path(&out_path)).unwrap()).unwrap();
    assert!(manifest.passed);
    assert_eq!(manifest.config.seed, Some(3));
}

#[test]
fn config_file_with_flag_override() {
    let cfg = scratch("synthetic.toml");
    std::fs::write(
        &cfg,
        "seed = 9\nn = 5\np_centers = [0.08]\nrandom_perms = 2\nframes_per_random_perm = 10\n[stop]\nmax_frames = 400\n",
    )
    .unwrap();
    let out_path = scratch("synthetic.csv");
    let out = nspolar(&[
        "synthetic-bsc",
        "--config",
        cfg.to_str().unwrap(),
        "--max-frames",
        "30",
        "--target-bit-errors",
        "0",
        "--output",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.code().is_some_and(|c| c <= 1), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = read_rows(std::fs::File::open(&out_path).unwrap()).unwrap();
    assert_eq!(rows.len(), 8);
    assert!(rows.iter().filter(|r| r.scenario != "random-average").all(|r| r.frames == 30));
    assert!(rows.iter().all(|r| r.experiment == "synthetic-bsc"));
}

#[test]
fn characterize_then_construct_from_it() {
    let chars = scratch("cells.toml");
    let out = nspolar(&[
        "characterize", "--seed", "4", "--rows", "8", "--cols", "8", "--rw", "20", "--training-trials", "200",
        "--holdout-trials", "100", "--model", "bac", "--output", chars.to_str().unwrap(),
    ]);
    assert!(out.status.code().is_some_and(|c| c <= 1));
    let saved = CellCharacterization::from_toml(&std::fs::read_to_string(&chars).unwrap()).unwrap();
    assert_eq!((saved.rows, saved.cols), (8, 8));
    let mut csv = chars.clone().into_os_string();
    csv.push(".currents.csv");
    assert_eq!(std::fs::read_to_string(PathBuf::from(csv)).unwrap().lines().count(), 65);

    let spec_path = scratch("code.toml");
    let out = nspolar(&[
        "construct", "--seed", "4", "--rate", "0.75", "--np", "4", "--perm-kind", "ordered-bit-reversal",
        "--characterization", chars.to_str().unwrap(), "--output", spec_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let spec = CodeSpec::from_toml(&std::fs::read_to_string(&spec_path).unwrap()).unwrap();
    assert_eq!((spec.len(), spec.k, spec.puncture.punctured_count()), (64, 48, 4));
    let mut golden = spec_path.into_os_string();
    golden.push(".golden.toml");
    let golden = GoldenFile::from_toml(&std::fs::read_to_string(PathBuf::from(golden)).unwrap()).unwrap();
    assert!(golden.check(&spec).unwrap().is_empty());
}
