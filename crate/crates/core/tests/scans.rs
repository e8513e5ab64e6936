use std::fs;

use proptest::prelude::*;
use vacpair_core::io::{read_csv, write_csv, Cell, RunConfig, Table};
use vacpair_core::observables::MomentumGrid;
use vacpair_core::scans::{enhancement_curve, run_scan, ParameterRange, PointStatus, ScanKind, ScanOptions, ScanSpec};
use vacpair_core::{FieldConfig, ModulatedField, PulseTrain, SolverSettings};

fn short_modulated(m: f64) -> FieldConfig {
    FieldConfig::Modulated(ModulatedField {
        e0: 0.05,
        omega_c: 0.8,
        omega_m: 0.1,
        modulation_degree: m,
        t_switch: 10.0,
        t_d: 60.0,
    })
}

fn count_scan(values: Vec<f64>) -> ScanSpec {
    ScanSpec {
        kind: ScanKind::PulseCount,
        base: FieldConfig::PulseTrain(PulseTrain {
            e0: 0.05,
            omega_c: 1.1,
            tau: 4.0,
            delay: 20.0,
            pulses: 1,
        }),
        range: ParameterRange::List(values),
        grid: MomentumGrid::new(-0.8, 0.8, 17).unwrap(),
        settings: SolverSettings::default(),
        duration_scale: 1.0,
    }
}

fn options(workers: usize) -> ScanOptions {
    ScanOptions {
        workers: Some(workers),
        checkpoint: None,
    }
}

#[test]
fn worker_count_does_not_change_results() {
    let spec = count_scan((1..=6).map(f64::from).collect());
    let serial = run_scan(&spec, &options(1)).unwrap();
    let parallel = run_scan(&spec, &options(4)).unwrap();
    assert!(serial.same_results(&parallel));
    assert_eq!(serial.fingerprint, parallel.fingerprint);
    assert!(serial.points.iter().all(|p| p.status == PointStatus::Ok && p.wall_time_s >= 0.0));
}

#[test]
fn resumed_scan_matches_uninterrupted() {
    let dir = tempfile::tempdir().unwrap();
    let spec = count_scan((1..=5).map(f64::from).collect());
    let full = run_scan(&spec, &options(2)).unwrap();

    let ck = dir.path().join("scan.ckpt");
    let with_ck = ScanOptions {
        workers: Some(2),
        checkpoint: Some(ck.clone()),
    };
    run_scan(&spec, &with_ck).unwrap();
    let text = fs::read_to_string(&ck).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    // header, fingerprint, column line, five rows
    assert_eq!(lines.len(), 8, "{text}");

    for kept in [0, 2, 4] {
        // a kill after `kept` rows, with a torn half-written row behind them
        let mut cut = lines[..3 + kept].join("\n");
        cut.push('\n');
        cut.push_str(&lines[3 + kept][..lines[3 + kept].len() / 2]);
        fs::write(&ck, cut).unwrap();
        let resumed = run_scan(&spec, &with_ck).unwrap();
        assert!(resumed.same_results(&full), "kept {kept}");
        let rows = fs::read_to_string(&ck).unwrap().lines().filter(|l| !l.starts_with('#')).count();
        assert_eq!(rows, 6, "kept {kept}");
    }
}

#[test]
fn checkpoint_of_another_scan_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let ck = dir.path().join("scan.ckpt");
    let opts = ScanOptions {
        workers: Some(1),
        checkpoint: Some(ck),
    };
    run_scan(&count_scan(vec![1.0, 2.0]), &opts).unwrap();
    let err = run_scan(&count_scan(vec![1.0, 3.0]), &opts).unwrap_err();
    assert!(err.is_config(), "{err}");
}

#[test]
fn unmodulated_degree_list_scan() {
    let spec = ScanSpec {
        kind: ScanKind::ModulationDegree,
        base: short_modulated(0.5),
        range: ParameterRange::List(vec![0.0]),
        grid: MomentumGrid::new(-1.0, 1.0, 21).unwrap(),
        settings: SolverSettings::default(),
        duration_scale: 1.0,
    };
    let result = run_scan(&spec, &options(1)).unwrap();
    assert_eq!(result.points.len(), 1);
    assert_eq!(result.points[0].value, 0.0);
    assert!(result.points[0].density > 0.0);

    let direct = ScanSpec {
        kind: ScanKind::PulseCount,
        ..spec.clone()
    };
    assert!(run_scan(&direct, &options(1)).is_err(), "pulse count does not apply to a modulated field");
    // same density as the base field built with M = 0 directly
    let again = ScanSpec {
        base: short_modulated(0.0),
        range: ParameterRange::List(vec![0.0]),
        ..spec
    };
    assert!(run_scan(&again, &options(1)).unwrap().same_results(&result));
}

#[test]
fn out_of_range_degree_is_a_config_error() {
    let spec = ScanSpec {
        kind: ScanKind::ModulationDegree,
        base: short_modulated(0.5),
        range: ParameterRange::List(vec![0.5, 1.5]),
        grid: MomentumGrid::new(-1.0, 1.0, 21).unwrap(),
        settings: SolverSettings::default(),
        duration_scale: 1.0,
    };
    let err = run_scan(&spec, &options(1)).unwrap_err();
    assert!(err.is_config() && err.to_string().contains('M'), "{err}");
}

#[test]
fn stepped_ranges_hit_the_end_point() {
    let r = ParameterRange::Stepped {
        start: 0.02,
        stop: 0.1,
        step: 0.002,
    };
    let v = r.values().unwrap();
    assert_eq!(v.len(), 41);
    assert_eq!(v[0], 0.02);
    assert_eq!(*v.last().unwrap(), 0.1);
    assert_eq!(v[18], 0.056);
}

#[test]
fn identical_scans_give_unit_enhancement() {
    let spec = count_scan(vec![1.0, 2.0, 3.0]);
    let a = run_scan(&spec, &options(1)).unwrap();
    let ratio = enhancement_curve(&a, &a).unwrap();
    assert!(ratio.densities().iter().all(|&r| r == 1.0));
    assert_eq!(ratio.quantity, "ratio[1]");
}

#[test]
fn pulse_count_table_columns() {
    let result = run_scan(&count_scan(vec![1.0, 2.0]), &options(1)).unwrap();
    let table = result.to_table();
    assert_eq!(table.columns, ["N[count]", "density[m]", "wall_time_s[s]", "status"]);
    assert!(matches!(table.rows[1][0], Cell::Int(2)));
}

#[test]
fn scan_table_round_trips_through_csv() {
    let dir = tempfile::tempdir().unwrap();
    let result = run_scan(&count_scan(vec![1.0, 2.0, 3.0]), &options(1)).unwrap();
    let path = dir.path().join("scan.csv");
    write_csv(&result.to_table(), &path).unwrap();
    let back = read_csv(&path).unwrap();
    assert!(back.bitwise_eq(&result.to_table()));
    assert_eq!(back.metadata_value("scan_fingerprint"), Some(result.fingerprint.as_str()));
}

#[test]
fn empty_table_is_header_and_metadata_only() {
    let mut t = Table::new(&["p_par[m]", "f[1]"]);
    t.meta("tier", "quick");
    let text = t.to_csv_string();
    assert_eq!(text.lines().count(), 2);
    assert!(Table::parse(&text).unwrap().bitwise_eq(&t));
}

#[test]
fn shipped_configs_parse() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "conf") {
            let cfg = RunConfig::from_path(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            // canonical text parses back to the same run
            assert_eq!(RunConfig::parse(&cfg.to_text()).unwrap(), cfg, "{}", path.display());
            seen += 1;
        }
    }
    assert!(seen >= 8);
}

proptest! {
    #[test]
    fn tables_round_trip_bitwise(
        floats in proptest::collection::vec(any::<f64>(), 1..30),
        key in "[a-z_]{1,12}",
        value in "[ -~]{0,30}",
    ) {
        let mut t = Table::new(&["x[m]", "label"]);
        t.meta(&key, value.trim());
        for (i, v) in floats.iter().enumerate() {
            t.push(vec![Cell::Float(*v), Cell::Text(format!("r{i}"))]);
        }
        let back = Table::parse(&t.to_csv_string()).unwrap();
        prop_assert!(back.bitwise_eq(&t));
    }
}

#[test]
fn unmodulated_baseline_is_computed_once() {
    let spec = ScanSpec {
        kind: ScanKind::ModulationFrequency,
        base: short_modulated(0.0),
        range: ParameterRange::List(vec![0.05, 0.1, 0.15]),
        grid: MomentumGrid::new(-1.0, 1.0, 21).unwrap(),
        settings: SolverSettings::default(),
        duration_scale: 1.0,
    };
    let result = run_scan(&spec, &options(1)).unwrap();
    // copies of one computation share its wall time
    let first = &result.points[0];
    assert!(result
        .points
        .iter()
        .all(|p| p.density.to_bits() == first.density.to_bits() && p.wall_time_s == first.wall_time_s));
    assert_eq!(result.values(), [0.05, 0.1, 0.15]);
}
