use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use vacpair_core::io::{read_csv, Table};
use vacpair_core::observables::{find_peaks, MomentumGrid, Spectrum};

fn vacpair(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vacpair"))
        .args(args)
        .env_remove("VACPAIR_WORKERS")
        .output()
        .expect("binary runs")
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const WEAK_TRAIN: &str = "\
[field]
type = pulse_train
E0 = 0.01
omega_c = 2.2
tau = 10
T_m = 36
N = 2

[grid]
p_min = -0.5
p_max = 0.5
n_points = 5
";

#[test]
fn zero_field_density_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("zero.conf");
    let out = vacpair(&["density", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let table = read_csv(&dir.path().join("density.csv")).unwrap();
    assert_eq!(table.column_f64("density").unwrap(), vec![0.0]);
    assert!(table.metadata_value("manifest_fingerprint").is_some());
    assert_eq!(table.metadata_value("tier"), Some("quick"));
    assert!(dir.path().join("manifest.txt").exists());
}

#[test]
fn out_of_range_degree_exits_2_naming_key() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(configs().join("fig3_modulation_degree.conf"))
        .unwrap()
        .replace("M = 1\n", "M = 1.5\n");
    let cfg = write_config(dir.path(), "bad.conf", &text);
    let out = vacpair(&["density", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("`M`") && err.contains("[0, 1]"), "{err}");
}

#[test]
fn unknown_key_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "typo.conf", &format!("{WEAK_TRAIN}\n[solver]\nreltol = 1e-9\n"));
    let out = vacpair(&["density", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("reltol"), "{}", stderr(&out));
}

#[test]
fn missing_config_exits_2() {
    let out = vacpair(&["density", "--config", "/nonexistent/run.conf"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_flag_exits_2() {
    let out = vacpair(&["density", "--tier", "medium", "--config", "x"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unmodulated_spectrum_peaks_near_four_photon_resonance() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("fig4_unmodulated.conf");
    let out = vacpair(&["spectrum", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let table = read_csv(&dir.path().join("spectrum.csv")).unwrap();
    let p = table.column_f64("p_par").unwrap();
    let f = table.column_f64("f").unwrap();
    let spectrum = Spectrum {
        grid: MomentumGrid::new(p[0], p[p.len() - 1], p.len()).unwrap(),
        values: f,
        fingerprint: table.metadata_value("spectrum_fingerprint").unwrap().to_string(),
    };
    let peaks = find_peaks(&spectrum, 0.05).unwrap();
    let spacing = spectrum.grid.spacing();
    for target in [0.83, -0.83] {
        assert!(
            peaks.iter().any(|pk| (pk.momentum - target).abs() <= 2.0 * spacing),
            "no peak near {target}: {peaks:?}"
        );
    }
}

#[test]
fn resonances_flag_threshold_channel() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("resonances.conf");
    let out = vacpair(&["resonances", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let table = read_csv(&dir.path().join("resonances.csv")).unwrap();
    let k = |name: &str| table.column(name).unwrap();
    let row = table
        .rows
        .iter()
        .find(|r| r[k("k_c")].as_f64() == Some(2.0) && r[k("k_plus")].as_f64() == Some(1.0) && r[k("k_minus")].as_f64() == Some(0.0))
        .expect("row (2, 1, 0)");
    assert!(row[k("p_par")].as_f64().unwrap().abs() < 0.05);
    assert_eq!(table.metadata_value("m_star"), Some("1.003"));
}

#[test]
fn m_star_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("resonances.conf");
    let out = vacpair(&[
        "resonances",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "--m-star",
        "1.002",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let table = read_csv(&dir.path().join("resonances.csv")).unwrap();
    assert_eq!(table.metadata_value("m_star"), Some("1.002"));
}

#[test]
fn effective_mass_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("fig2_enhancement.conf");
    let out = vacpair(&["effective-mass", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let table = read_csv(&dir.path().join("effective_mass.csv")).unwrap();
    let m = table.column_f64("m_star").unwrap()[0];
    assert!((m - 1.0023).abs() < 5e-4, "{m}");
}

fn without_wall_time(table: &Table) -> Table {
    let mut t = table.clone();
    if let Some(i) = t.column("wall_time_s") {
        t.columns.remove(i);
        for row in &mut t.rows {
            row.remove(i);
        }
    }
    t
}

#[test]
fn identical_runs_write_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "weak.conf", WEAK_TRAIN);
    let mut outputs = Vec::new();
    for (run, workers) in [("a", "1"), ("b", "2")] {
        let out_dir = dir.path().join(run);
        let out = vacpair(&[
            "spectrum",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
            "--workers",
            workers,
        ]);
        assert!(out.status.success(), "{}", stderr(&out));
        outputs.push(fs::read(out_dir.join("spectrum.csv")).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn scan_output_columns_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "count.conf",
        &format!("{WEAK_TRAIN}\n[scan]\nkind = pulse-count\nvalues = 1, 2, 3\n"),
    );
    let mut tables = Vec::new();
    for run in ["a", "b"] {
        let out_dir = dir.path().join(run);
        let out = vacpair(&["scan", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
        assert!(out.status.success(), "{}", stderr(&out));
        tables.push(read_csv(&out_dir.join("scan.csv")).unwrap());
    }
    assert_eq!(tables[0].columns, ["N[count]", "density[m]", "wall_time_s[s]", "status"]);
    assert_eq!(tables[0].rows.len(), 3);
    assert!(without_wall_time(&tables[0]).bitwise_eq(&without_wall_time(&tables[1])));
}

#[test]
fn partial_scan_failure_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    // the step budget covers one pulse but not five
    let cfg = write_config(
        dir.path(),
        "budget.conf",
        &format!("{WEAK_TRAIN}\n[solver]\nrel_tol = 1e-6\nmax_steps = 2000\n\n[scan]\nkind = pulse-count\nvalues = 1, 5\n"),
    );
    let out = vacpair(&["scan", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
    let table = read_csv(&dir.path().join("scan.csv")).unwrap();
    let status: Vec<_> = table.rows.iter().map(|r| r[3].as_text().unwrap().to_string()).collect();
    assert_eq!(status, ["ok", "failed"]);
    assert!(stderr(&out).contains("P3 ="), "{}", stderr(&out));
}

#[test]
fn scan_resumes_from_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "count.conf",
        &format!("{WEAK_TRAIN}\n[scan]\nkind = pulse-count\nvalues = 1, 2\n"),
    );
    let ck = dir.path().join("ck.csv");
    let args = |out: &str| {
        vec![
            "scan".to_string(),
            "--config".into(),
            cfg.to_str().unwrap().into(),
            "--out".into(),
            dir.path().join(out).to_str().unwrap().into(),
            "--checkpoint".into(),
            ck.to_str().unwrap().into(),
        ]
    };
    let first = Command::new(env!("CARGO_BIN_EXE_vacpair")).args(args("a")).output().unwrap();
    assert!(first.status.success(), "{}", stderr(&first));
    let rows = fs::read_to_string(&ck).unwrap();
    assert!(rows.contains("# fingerprint:"));
    // resumed run reads both points back instead of recomputing them
    let second = Command::new(env!("CARGO_BIN_EXE_vacpair")).args(args("b")).output().unwrap();
    assert!(second.status.success(), "{}", stderr(&second));
    assert_eq!(fs::read_to_string(&ck).unwrap(), rows);
    let a = read_csv(&dir.path().join("a/scan.csv")).unwrap();
    let b = read_csv(&dir.path().join("b/scan.csv")).unwrap();
    assert!(a.bitwise_eq(&b));

    // a different scan refuses the checkpoint
    let other = write_config(
        dir.path(),
        "other.conf",
        &format!("{WEAK_TRAIN}\n[scan]\nkind = pulse-count\nvalues = 1, 3\n"),
    );
    let out = vacpair(&[
        "scan",
        "--config",
        other.to_str().unwrap(),
        "--out",
        dir.path().join("c").to_str().unwrap(),
        "--checkpoint",
        ck.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("fingerprint"));
}

#[test]
fn workers_env_is_echoed_in_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("zero.conf");
    let out = Command::new(env!("CARGO_BIN_EXE_vacpair"))
        .args(["density", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()])
        .env("VACPAIR_WORKERS", "3")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    let manifest = fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
    assert!(manifest.contains("workers = 3 (VACPAIR_WORKERS=3)"), "{manifest}");
    assert!(manifest.contains("no random numbers"));
}

#[test]
fn oracle_check_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = vacpair(&["oracle-check", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}\n{}", String::from_utf8_lossy(&out.stdout), stderr(&out));
    let table = read_csv(&dir.path().join("oracle.csv")).unwrap();
    assert_eq!(table.rows.len(), 15);
}
