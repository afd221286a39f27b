use nspolar::bench::{read_rows, write_rows, ExperimentConfig, ResultRow, Tally};
use nspolar::construction::{build_code, CodeSpec, PermKind};
use nspolar::crossbar::{read_array, BitMatrix, CrossbarConfig};
use nspolar::estimation::{estimate_bac, estimate_bsc, fallback_threshold, fit_thresholds, CellCharacterization, ThresholdMethod, TrainingSet};
use nspolar::rng::streams;

#[test]
fn code_spec_survives_text_round_trip_and_rejects_tampering() {
    let channels = nspolar::bench::synthetic_channels(5, 0.08, 0.04).unwrap();
    let spec = build_code(&channels, 20, &PermKind::Random(17), 3).unwrap();
    let text = spec.to_toml();
    assert_eq!(CodeSpec::from_toml(&text).unwrap(), spec);

    let bad = text.replace("k = 20", "k = 21");
    assert!(CodeSpec::from_toml(&bad).is_err());
}

#[test]
fn characterization_round_trip_both_modes() {
    let xb = CrossbarConfig::with_size(4, 8, 30.0);
    let train = TrainingSet::generate(&xb, 150, 2, streams::TRAINING, None).unwrap();
    let th = fit_thresholds(&train, ThresholdMethod::Logistic, fallback_threshold(&xb)).unwrap();
    for c in [estimate_bsc(&train, &th).unwrap(), estimate_bac(&train, &th).unwrap()] {
        let back = CellCharacterization::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.channels().unwrap().len(), 32);
    }
}

#[test]
fn current_map_csv_has_one_line_per_cell() {
    let xb = CrossbarConfig::with_size(3, 5, 10.0);
    let map = read_array(&xb, &BitMatrix::filled(3, 5, 0)).unwrap();
    let mut out = Vec::new();
    map.write_csv(&mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "row,col,amps");
    assert_eq!(lines.len(), 16);
    let last: Vec<&str> = lines[15].split(',').collect();
    assert_eq!((last[0], last[1]), ("2", "4"));
    assert_eq!(last[2].parse::<f64>().unwrap(), map.get(2, 4));
}

#[test]
fn result_rows_round_trip_and_keep_column_order() {
    let cfg = ExperimentConfig { seed: Some(1), ..Default::default() };
    let mut t = Tally::default();
    t.record(100, 3);
    t.record(100, 0);
    let rows = vec![
        ResultRow::new(&cfg, "bit-reversal", "systematic", "p_center", 0.08, &t),
        ResultRow { uncoded_ber: Some(0.01), ..ResultRow::new(&cfg, "identity", "bsc", "rw", 25.0, &t) },
    ];
    let mut out = Vec::new();
    write_rows(&rows, &mut out).unwrap();
    let text = String::from_utf8(out.clone()).unwrap();
    assert!(text.starts_with(
        "experiment,scenario,mode,sweep,value,ber,fer,uncoded_ber,frames,bit_errors,frame_errors,config_hash\n"
    ));
    assert_eq!(read_rows(out.as_slice()).unwrap(), rows);
}

#[test]
fn config_file_documents_every_field() {
    let cfg = ExperimentConfig { seed: Some(5), ..Default::default() };
    let text = cfg.to_toml();
    for key in ["kind", "seed", "rate", "perm_kind", "np_grid", "[crossbar]", "[stop]", "[sweep_stop]", "threshold_method"] {
        assert!(text.contains(key), "missing {key}");
    }
    assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), cfg);
    let explicit = ExperimentConfig { perm_kind: "explicit:1,0,3,2".parse().unwrap(), ..cfg };
    assert_eq!(ExperimentConfig::from_toml(&explicit.to_toml()).unwrap(), explicit);
}
