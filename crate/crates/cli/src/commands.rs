use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use vacpair_core::fields::{effective_mass as field_mass, mean_square_potential, RAMP_FRACTION};
use vacpair_core::io::{write_csv, Cell, RunConfig, RunManifest, Table, Tier};
use vacpair_core::observables::{
    find_peaks, momentum_spectrum, number_density, resonance_momentum, with_workers, MomentumGrid, ResonanceCombo,
};
use vacpair_core::scans::{enhancement_curve, run_scan, ScanOptions, ScanResult};
use vacpair_core::solver::oracle;
use vacpair_core::{Error, Field, FieldConfig, Result};

pub struct Run {
    pub tier: Tier,
    pub out: PathBuf,
    pub workers: Option<usize>,
    pub workers_source: String,
    pub checkpoint: Option<PathBuf>,
}

pub enum Status {
    Success,
    /// Some scan points or oracle comparisons failed.
    Partial,
}

impl From<Status> for ExitCode {
    fn from(s: Status) -> ExitCode {
        match s {
            Status::Success => ExitCode::SUCCESS,
            Status::Partial => ExitCode::from(1),
        }
    }
}

struct Loaded {
    config: RunConfig,
    duration_scale: f64,
    field: FieldConfig,
}

fn load(path: &Path, tier: Tier) -> Result<Loaded> {
    let config = RunConfig::from_path(path).map_err(|e| match e {
        Error::Io { path, source } => Error::Config {
            key: "--config".into(),
            message: format!("cannot read {}: {source}", path.display()),
            line: None,
        },
        other => other,
    })?;
    let duration_scale = config.duration_scale(tier);
    let field = config.field.with_duration_scale(duration_scale);
    Ok(Loaded {
        config,
        duration_scale,
        field,
    })
}

impl Run {
    fn manifest(&self, subcommand: &str, config_text: String, outputs: &[&str]) -> RunManifest {
        let mut m = RunManifest::new(subcommand, config_text, self.tier);
        m.outputs = outputs.iter().map(|s| s.to_string()).collect();
        m.workers = self.workers;
        m.workers_source = self.workers_source.clone();
        m
    }

    fn write(&self, manifest: &RunManifest, name: &str, mut table: Table) -> Result<PathBuf> {
        manifest.stamp(&mut table);
        let path = self.out.join(name);
        write_csv(&table, &path)?;
        Ok(path)
    }

    fn finish(&self, manifest: &RunManifest) -> Result<()> {
        manifest.write(&self.out.join("manifest.txt"))
    }
}

fn field_metadata(table: &mut Table, loaded: &Loaded) {
    table
        .meta("duration_scale", loaded.duration_scale.to_string())
        .meta("envelope", "exponential switch on/off")
        .meta("envelope_tau_s", format!("{RAMP_FRACTION} * t_switch"));
}

pub fn spectrum(config: &Path, run: &Run) -> Result<Status> {
    let loaded = load(config, run.tier)?;
    let grid = loaded.config.grid.unwrap_or_else(MomentumGrid::spectrum_default);
    let field = Field::new(loaded.field.clone())?;
    let settings = loaded.config.settings;
    let spec = with_workers(run.workers, || momentum_spectrum(&field, &grid, &settings))??;

    let mut table = Table::new(&["p_par[m]", "f[1]"]);
    table.meta("spectrum_fingerprint", spec.fingerprint.clone());
    field_metadata(&mut table, &loaded);
    for (p, f) in spec.momenta().zip(&spec.values) {
        table.push(vec![Cell::Float(p), Cell::Float(*f)]);
    }
    let manifest = run.manifest("spectrum", loaded.config.to_text(), &["spectrum.csv"]);
    let path = run.write(&manifest, "spectrum.csv", table)?;
    run.finish(&manifest)?;

    let peaks = find_peaks(&spec, loaded.config.observables.min_prominence)?;
    println!("spectrum written to {}", path.display());
    for p in peaks {
        println!("peak p_par = {:+.5} m  f = {:.6e}", p.momentum, p.value);
    }
    Ok(Status::Success)
}

pub fn density(config: &Path, run: &Run) -> Result<Status> {
    let loaded = load(config, run.tier)?;
    let grid = loaded.config.grid.unwrap_or_else(MomentumGrid::density_default);
    let field = Field::new(loaded.field.clone())?;
    let settings = loaded.config.settings;
    let spec = with_workers(run.workers, || momentum_spectrum(&field, &grid, &settings))??;
    let n = number_density(&spec)?;

    let mut table = Table::new(&["density[m]", "p_min[m]", "p_max[m]", "n_points[count]"]);
    table.meta("spectrum_fingerprint", spec.fingerprint.clone());
    field_metadata(&mut table, &loaded);
    table.push(vec![
        Cell::Float(n),
        Cell::Float(grid.p_min),
        Cell::Float(grid.p_max),
        Cell::Int(grid.n_points as i64),
    ]);
    let manifest = run.manifest("density", loaded.config.to_text(), &["density.csv"]);
    run.write(&manifest, "density.csv", table)?;
    run.finish(&manifest)?;
    println!("{n:.16e}");
    Ok(Status::Success)
}

pub fn scan(config: &Path, run: &Run) -> Result<Status> {
    let loaded = load(config, run.tier)?;
    let spec = loaded.config.scan_spec(loaded.duration_scale)?;
    let baseline_m = loaded.config.scan.as_ref().and_then(|s| s.baseline_m);
    let options = ScanOptions {
        workers: run.workers,
        checkpoint: run.checkpoint.clone(),
    };
    let text = loaded.config.to_text();

    let (outputs, results): (Vec<&str>, Vec<ScanResult>) = match baseline_m {
        None => (vec!["scan.csv"], vec![run_scan(&spec, &options)?]),
        Some(m) => {
            let baseline = spec.with_modulation_degree(m)?;
            let baseline_options = ScanOptions {
                workers: run.workers,
                checkpoint: run.checkpoint.as_ref().map(|p| {
                    let mut name = p.as_os_str().to_owned();
                    name.push(".baseline");
                    PathBuf::from(name)
                }),
            };
            let n1 = run_scan(&spec, &options)?;
            let n0 = run_scan(&baseline, &baseline_options)?;
            let ratio = enhancement_curve(&n1, &n0)?;
            (
                vec!["scan.csv", "scan_modulated.csv", "scan_baseline.csv"],
                vec![ratio, n1, n0],
            )
        }
    };
    let manifest = run.manifest("scan", text, &outputs);
    let mut failures = 0;
    for (name, result) in outputs.iter().zip(&results) {
        let mut table = result.to_table();
        table.meta("duration_scale", loaded.duration_scale.to_string());
        run.write(&manifest, name, table)?;
        failures += result.failures();
    }
    run.finish(&manifest)?;

    let main = &results[0];
    for p in &main.points {
        println!("{:.6} {:.6e} {}", p.value, p.density, p.status.label());
        if let vacpair_core::scans::PointStatus::Failed(reason) = &p.status {
            eprintln!("scan point {}: {reason}", p.value);
        }
    }
    Ok(if failures > 0 { Status::Partial } else { Status::Success })
}

pub fn oracle_check(config: Option<&Path>, run: &Run) -> Result<Status> {
    let (cases, text) = match config {
        Some(path) => {
            let loaded = load(path, run.tier)?;
            let (t0, t1) = loaded.field.span();
            if t1 - t0 > 200.0 {
                log::warn!("direct quadrature cost grows with the square of the span ({:.0})", t1 - t0);
            }
            let text = loaded.config.to_text();
            (vec![("config".to_string(), loaded.field)], text)
        }
        None => (
            oracle::oracle_instances()
                .into_iter()
                .map(|(n, c)| (n.to_string(), c))
                .collect(),
            "built-in oracle instances\n".to_string(),
        ),
    };
    let settings = oracle::oracle_settings();
    let rows = with_workers(run.workers, || -> Result<Vec<oracle::OracleRow>> {
        let mut rows = Vec::new();
        for (name, config) in &cases {
            let field = Field::new(config.clone())?;
            rows.extend(oracle::compare(
                name,
                &field,
                &oracle::ORACLE_MOMENTA,
                &settings,
                oracle::DIRECT_GRID_STEP,
            )?);
        }
        Ok(rows)
    })??;

    let mut table = Table::new(&["instance", "p3[m]", "f_ode[1]", "f_direct[1]", "rel_diff[1]", "status"]);
    table
        .meta("tolerance", oracle::EQUIVALENCE_TOLERANCE.to_string())
        .meta("direct_grid_step", oracle::DIRECT_GRID_STEP.to_string());
    let mut failed = 0;
    for r in &rows {
        let status = if r.passes() { "pass" } else { "fail" };
        failed += usize::from(!r.passes());
        println!(
            "{:<16} p3 = {:+.2}  ode = {:.10e}  direct = {:.10e}  rel = {:.2e}  {status}",
            r.instance,
            r.p3,
            r.ode,
            r.direct,
            r.relative_difference()
        );
        table.push(vec![
            Cell::Text(r.instance.clone()),
            Cell::Float(r.p3),
            Cell::Float(r.ode),
            Cell::Float(r.direct),
            Cell::Float(r.relative_difference()),
            Cell::Text(status.into()),
        ]);
    }
    let manifest = run.manifest("oracle-check", text, &["oracle.csv"]);
    run.write(&manifest, "oracle.csv", table)?;
    run.finish(&manifest)?;
    Ok(if failed > 0 { Status::Partial } else { Status::Success })
}

/// Carrier and modulation frequency of a single-member field.
fn frequencies(config: &FieldConfig) -> Result<(f64, f64)> {
    match config {
        FieldConfig::Modulated(m) => Ok((m.omega_c, m.omega_m)),
        FieldConfig::PulseTrain(p) => Ok((p.omega_c, 2.0 * PI / p.delay)),
        FieldConfig::Superposition(_) => Err(Error::Config {
            key: "type".into(),
            message: "resonances need a single modulated field or pulse train".into(),
            line: None,
        }),
    }
}

pub fn resonances(config: &Path, m_star: Option<f64>, run: &Run) -> Result<Status> {
    let loaded = load(config, run.tier)?;
    let (omega_c, omega_m) = frequencies(&loaded.field)?;
    if let Some(m) = m_star {
        if !(m >= 1.0 && m.is_finite()) {
            return Err(Error::Config {
                key: "--m-star".into(),
                message: format!("must be >= 1 (units of m), got {m}"),
                line: None,
            });
        }
    }
    let (m_star, source) = match m_star.or(loaded.config.observables.m_star) {
        Some(m) => (m, "override"),
        None => (field_mass(&Field::new(loaded.field.clone())?)?, "computed"),
    };

    let mut table = Table::new(&[
        "k_c[count]",
        "k_plus[count]",
        "k_minus[count]",
        "photons[count]",
        "energy[m]",
        "p_par[m]",
        "status",
    ]);
    table
        .meta("m_star", m_star.to_string())
        .meta("m_star_source", source)
        .meta("omega_c", omega_c.to_string())
        .meta("omega_m", omega_m.to_string());
    println!("m* = {m_star:.6} m ({source})");
    for combo in ResonanceCombo::all_up_to(loaded.config.observables.max_photons) {
        let energy = combo.energy(omega_c, omega_m);
        let p = resonance_momentum(&combo, omega_c, omega_m, m_star);
        let (p_cell, status) = match p {
            Some(p) => (Cell::Float(p), "open"),
            None => (Cell::Float(f64::NAN), "below-threshold"),
        };
        if let Some(p) = p {
            println!(
                "({}, {}, {})  E = {energy:.6} m  p_par = {p:.6} m",
                combo.k_c, combo.k_plus, combo.k_minus
            );
        }
        table.push(vec![
            Cell::Int(combo.k_c.into()),
            Cell::Int(combo.k_plus.into()),
            Cell::Int(combo.k_minus.into()),
            Cell::Int(combo.photons().into()),
            Cell::Float(energy),
            p_cell,
            Cell::Text(status.into()),
        ]);
    }
    let mut text = loaded.config.to_text();
    text.push_str(&format!("\n# m_star used: {m_star}\n"));
    let manifest = run.manifest("resonances", text, &["resonances.csv"]);
    run.write(&manifest, "resonances.csv", table)?;
    run.finish(&manifest)?;
    Ok(Status::Success)
}

pub fn effective_mass(config: &Path, run: &Run) -> Result<Status> {
    let loaded = load(config, run.tier)?;
    let field = Field::new(loaded.field.clone())?;
    let mass = field_mass(&field)?;
    let a2 = mean_square_potential(&field)?;
    let (w0, w1) = loaded.field.averaging_window().unwrap_or((0.0, 0.0));

    let mut table = Table::new(&["m_star[m]", "mean_square_potential[m2]", "window_start[1/m]", "window_end[1/m]"]);
    field_metadata(&mut table, &loaded);
    table.push(vec![Cell::Float(mass), Cell::Float(a2), Cell::Float(w0), Cell::Float(w1)]);
    let manifest = run.manifest("effective-mass", loaded.config.to_text(), &["effective_mass.csv"]);
    run.write(&manifest, "effective_mass.csv", table)?;
    run.finish(&manifest)?;
    println!("m* = {mass:.8} m   <A^2> = {a2:.8e} m^2   window = [{w0:.4}, {w1:.4}]");
    Ok(Status::Success)
}
