//! Parameter sweeps of the number density.
//!
//! Each scan point derives a field from the base configuration, computes a
//! momentum spectrum and integrates it. Points run in parallel; completed
//! points are appended to an optional checkpoint file so that an interrupted
//! scan can resume. A checkpoint is bound to its scan by a fingerprint.

use std::f64::consts::PI;
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fields::{Field, FieldConfig, ModulatedField, PulseTrain};
use crate::io::csv::{format_float, Cell, Table};
use crate::io::fingerprint::Fingerprint;
use crate::observables::{momentum_spectrum, number_density, with_workers, MomentumGrid};
use crate::solver::SolverSettings;

/// Which parameter a scan varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScanKind {
    /// `w_m`, or the pulse-train frequency `2 pi / T_m`.
    ModulationFrequency,
    /// `M`, modulated fields only.
    ModulationDegree,
    /// `w_c`.
    CarrierFrequency,
    /// `N`, pulse trains only.
    PulseCount,
}

impl ScanKind {
    pub fn name(self) -> &'static str {
        match self {
            ScanKind::ModulationFrequency => "modulation-frequency",
            ScanKind::ModulationDegree => "modulation-degree",
            ScanKind::CarrierFrequency => "carrier-frequency",
            ScanKind::PulseCount => "pulse-count",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        [
            ScanKind::ModulationFrequency,
            ScanKind::ModulationDegree,
            ScanKind::CarrierFrequency,
            ScanKind::PulseCount,
        ]
        .into_iter()
        .find(|k| k.name() == s)
    }

    /// CSV column header for the scanned parameter.
    pub fn column(self) -> &'static str {
        match self {
            ScanKind::ModulationFrequency => "omega_m[m]",
            ScanKind::ModulationDegree => "M[1]",
            ScanKind::CarrierFrequency => "omega_c[m]",
            ScanKind::PulseCount => "N[count]",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParameterRange {
    Stepped { start: f64, stop: f64, step: f64 },
    List(Vec<f64>),
}

impl ParameterRange {
    /// Parameter values; stepped ranges include `stop` when it lies on the lattice.
    pub fn values(&self) -> Result<Vec<f64>> {
        let values = match self {
            ParameterRange::Stepped { start, stop, step } => {
                if !(*step > 0.0 && step.is_finite()) {
                    return Err(Error::config("step", format!("must be positive, got {step}")));
                }
                if !(stop >= start) {
                    return Err(Error::config("stop", format!("must be >= start ({start}), got {stop}")));
                }
                let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
                (0..count)
                    .map(|i| round_13(start + i as f64 * step))
                    .collect()
            }
            ParameterRange::List(v) => v.clone(),
        };
        if values.is_empty() {
            return Err(Error::config("values", "scan range is empty"));
        }
        if let Some(w) = values.windows(2).find(|w| !(w[1] > w[0])) {
            return Err(Error::config(
                "values",
                format!("parameter values must be strictly increasing ({} then {})", w[0], w[1]),
            ));
        }
        Ok(values)
    }
}

/// Rounds to 13 significant digits so stepped values print cleanly.
fn round_13(v: f64) -> f64 {
    format!("{v:.12e}").parse().unwrap_or(v)
}

/// A complete, self-describing sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanSpec {
    pub kind: ScanKind,
    pub base: FieldConfig,
    pub range: ParameterRange,
    pub grid: MomentumGrid,
    pub settings: SolverSettings,
    /// Factor applied to the flat-top duration of modulated fields.
    pub duration_scale: f64,
}

impl ScanSpec {
    pub fn validate(&self) -> Result<Vec<FieldConfig>> {
        if !(self.duration_scale > 0.0 && self.duration_scale <= 1.0) {
            return Err(Error::config(
                "duration_scale",
                format!("must lie in (0, 1], got {}", self.duration_scale),
            ));
        }
        self.grid.validate()?;
        self.settings.validate()?;
        self.base.validate()?;
        let values = self.range.values()?;
        values.iter().map(|&v| self.derive(v)).collect()
    }

    /// Field for one parameter value, duration scaling applied.
    pub fn derive(&self, value: f64) -> Result<FieldConfig> {
        let config = apply(self.kind, &self.base, value)?;
        let config = config.with_duration_scale(self.duration_scale);
        config.validate()?;
        Ok(config)
    }

    /// Same sweep with every modulated member set to modulation degree `m`.
    pub fn with_modulation_degree(&self, m: f64) -> Result<ScanSpec> {
        if self.kind == ScanKind::ModulationDegree {
            return Err(Error::config("baseline_M", "a modulation-degree scan has no fixed baseline"));
        }
        fn set(c: &FieldConfig, m: f64, found: &mut bool) -> FieldConfig {
            match c {
                FieldConfig::Modulated(f) => {
                    *found = true;
                    FieldConfig::Modulated(ModulatedField {
                        modulation_degree: m,
                        ..*f
                    })
                }
                FieldConfig::PulseTrain(p) => FieldConfig::PulseTrain(*p),
                FieldConfig::Superposition(v) => FieldConfig::Superposition(v.iter().map(|c| set(c, m, found)).collect()),
            }
        }
        let mut found = false;
        let base = set(&self.base, m, &mut found);
        if !found {
            return Err(Error::config("baseline_M", "the field has no modulated member"));
        }
        Ok(ScanSpec { base, ..self.clone() })
    }

    pub fn fingerprint(&self) -> String {
        let mut fp = Fingerprint::new("scan");
        fp.text("kind", self.kind.name());
        fp.field_config(&self.base);
        match &self.range {
            ParameterRange::Stepped { start, stop, step } => {
                fp.float("start", *start).float("stop", *stop).float("step", *step);
            }
            ParameterRange::List(v) => {
                fp.int("count", v.len() as u64);
                for x in v {
                    fp.float("value", *x);
                }
            }
        }
        fp.grid(&self.grid)
            .settings(&self.settings)
            .float("duration_scale", self.duration_scale)
            .finish()
    }
}

fn apply(kind: ScanKind, base: &FieldConfig, value: f64) -> Result<FieldConfig> {
    let unsupported = |what: &str| {
        Error::config(
            "kind",
            format!("a {} scan does not apply to {what} fields", kind.name()),
        )
    };
    Ok(match (kind, base) {
        (_, FieldConfig::Superposition(members)) => FieldConfig::Superposition(
            members
                .iter()
                .map(|m| apply(kind, m, value))
                .collect::<Result<_>>()?,
        ),
        (ScanKind::ModulationFrequency, FieldConfig::Modulated(m)) => {
            FieldConfig::Modulated(ModulatedField { omega_m: value, ..*m })
        }
        (ScanKind::ModulationFrequency, FieldConfig::PulseTrain(p)) => {
            if !(value > 0.0) {
                return Err(Error::config("omega_m", format!("must be positive, got {value}")));
            }
            FieldConfig::PulseTrain(PulseTrain {
                delay: 2.0 * PI / value,
                ..*p
            })
        }
        (ScanKind::ModulationDegree, FieldConfig::Modulated(m)) => FieldConfig::Modulated(ModulatedField {
            modulation_degree: value,
            ..*m
        }),
        (ScanKind::ModulationDegree, FieldConfig::PulseTrain(_)) => return Err(unsupported("pulse-train")),
        (ScanKind::CarrierFrequency, FieldConfig::Modulated(m)) => {
            FieldConfig::Modulated(ModulatedField { omega_c: value, ..*m })
        }
        (ScanKind::CarrierFrequency, FieldConfig::PulseTrain(p)) => {
            FieldConfig::PulseTrain(PulseTrain { omega_c: value, ..*p })
        }
        (ScanKind::PulseCount, FieldConfig::PulseTrain(p)) => {
            if !(value >= 1.0 && value.fract() == 0.0 && value <= u32::MAX as f64) {
                return Err(Error::config("N", format!("pulse count must be an integer >= 1, got {value}")));
            }
            FieldConfig::PulseTrain(PulseTrain {
                pulses: value as u32,
                ..*p
            })
        }
        (ScanKind::PulseCount, FieldConfig::Modulated(_)) => return Err(unsupported("modulated")),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum PointStatus {
    Ok,
    Failed(String),
    /// Ratio with a zero or failed baseline.
    Undefined,
}

impl PointStatus {
    pub fn label(&self) -> &'static str {
        match self {
            PointStatus::Ok => "ok",
            PointStatus::Failed(_) => "failed",
            PointStatus::Undefined => "undefined",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanPoint {
    pub value: f64,
    /// Density (or ratio); NaN unless the status is `Ok`.
    pub density: f64,
    pub wall_time_s: f64,
    pub status: PointStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub kind: ScanKind,
    pub points: Vec<ScanPoint>,
    pub fingerprint: String,
    pub version: String,
    /// Name of the value column, `density[m]` or `ratio[1]`.
    pub quantity: String,
}

impl ScanResult {
    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }

    pub fn densities(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.density).collect()
    }

    pub fn failures(&self) -> usize {
        self.points
            .iter()
            .filter(|p| matches!(p.status, PointStatus::Failed(_)))
            .count()
    }

    /// `(value, density)` of every successful point.
    pub fn successful(&self) -> Vec<(f64, f64)> {
        self.points
            .iter()
            .filter(|p| p.status == PointStatus::Ok)
            .map(|p| (p.value, p.density))
            .collect()
    }

    /// Table with columns `(parameter, quantity, wall_time_s, status)`.
    pub fn to_table(&self) -> Table {
        let mut t = Table::new(&[self.kind.column(), &self.quantity, "wall_time_s[s]", "status"]);
        t.meta("scan_fingerprint", self.fingerprint.clone())
            .meta("scan_kind", self.kind.name())
            .meta("version", self.version.clone());
        for p in &self.points {
            let param = if self.kind == ScanKind::PulseCount {
                Cell::Int(p.value as i64)
            } else {
                Cell::Float(p.value)
            };
            t.push(vec![
                param,
                Cell::Float(p.density),
                Cell::Float(p.wall_time_s),
                Cell::Text(p.status.label().to_string()),
            ]);
        }
        t
    }

    /// Same points, ignoring wall time and failure messages.
    pub fn same_results(&self, other: &ScanResult) -> bool {
        self.points.len() == other.points.len()
            && self.points.iter().zip(&other.points).all(|(a, b)| {
                a.value.to_bits() == b.value.to_bits()
                    && (a.density.to_bits() == b.density.to_bits() || (a.density.is_nan() && b.density.is_nan()))
                    && a.status.label() == b.status.label()
            })
    }
}

#[derive(Debug, Clone, Default)]
pub struct ScanOptions {
    /// Worker threads; `None` uses rayon's default pool.
    pub workers: Option<usize>,
    pub checkpoint: Option<PathBuf>,
}

/// Runs (or resumes) a scan.
///
/// Per-point integration failures do not abort the scan: they are recorded
/// with a `failed` status and a NaN density.
pub fn run_scan(spec: &ScanSpec, options: &ScanOptions) -> Result<ScanResult> {
    let configs = spec.validate()?;
    let values = spec.range.values()?;
    let fingerprint = spec.fingerprint();

    let mut done: Vec<Option<ScanPoint>> = vec![None; values.len()];
    let writer = match &options.checkpoint {
        Some(path) => {
            for (index, point) in load_checkpoint(path, &fingerprint)? {
                let slot = done.get_mut(index).ok_or_else(|| {
                    Error::Data(format!("checkpoint {} has out-of-range index {index}", path.display()))
                })?;
                if point.value.to_bits() != values[index].to_bits() {
                    return Err(Error::Data(format!(
                        "checkpoint {} row {index} has value {}, scan expects {}",
                        path.display(),
                        point.value,
                        values[index]
                    )));
                }
                *slot = Some(point);
            }
            Some(Mutex::new(CheckpointWriter::open(path, &fingerprint)?))
        }
        None => None,
    };

    let pending: Vec<usize> = (0..values.len()).filter(|&i| done[i].is_none()).collect();
    if pending.len() < values.len() {
        log::info!(
            "resuming scan {fingerprint}: {} of {} points from checkpoint",
            values.len() - pending.len(),
            values.len()
        );
    }

    // physically identical fields (e.g. an unmodulated baseline swept over w_m) run once
    let keys: Vec<FieldConfig> = configs.iter().map(physical_form).collect();
    let mut unique: Vec<usize> = Vec::new();
    let mut representative = Vec::with_capacity(pending.len());
    for &i in &pending {
        match unique.iter().find(|&&u| keys[u] == keys[i]) {
            Some(&u) => representative.push(u),
            None => {
                unique.push(i);
                representative.push(i);
            }
        }
    }

    let record = |i: usize, point: &ScanPoint| {
        if let (Some(w), PointStatus::Ok) = (&writer, &point.status) {
            let mut w = w.lock().unwrap_or_else(|e| e.into_inner());
            if let Err(e) = w.append(i, point) {
                log::error!("checkpoint write failed: {e}");
            }
        }
    };
    let computed: Vec<(usize, ScanPoint)> = with_workers(options.workers, || {
        unique
            .par_iter()
            .map(|&i| {
                let point = compute_point(values[i], &configs[i], spec);
                record(i, &point);
                (i, point)
            })
            .collect()
    })?;
    for (&i, &rep) in pending.iter().zip(&representative) {
        let (_, point) = computed.iter().find(|(j, _)| *j == rep).expect("representative computed");
        if rep != i {
            let copy = ScanPoint {
                value: values[i],
                ..point.clone()
            };
            record(i, &copy);
            done[i] = Some(copy);
        } else {
            done[i] = Some(point.clone());
        }
    }

    Ok(ScanResult {
        kind: spec.kind,
        points: done.into_iter().map(|p| p.expect("every point computed")).collect(),
        fingerprint,
        version: crate::VERSION.to_string(),
        quantity: "density[m]".to_string(),
    })
}

/// `config` with parameters that cannot affect the field cleared.
fn physical_form(config: &FieldConfig) -> FieldConfig {
    match config {
        FieldConfig::Modulated(m) if m.modulation_degree == 0.0 => FieldConfig::Modulated(ModulatedField { omega_m: 0.0, ..*m }),
        FieldConfig::Superposition(v) => FieldConfig::Superposition(v.iter().map(physical_form).collect()),
        other => other.clone(),
    }
}

fn compute_point(value: f64, config: &FieldConfig, spec: &ScanSpec) -> ScanPoint {
    let start = Instant::now();
    let result = Field::new(config.clone())
        .and_then(|field| momentum_spectrum(&field, &spec.grid, &spec.settings))
        .and_then(|s| number_density(&s));
    let wall_time_s = start.elapsed().as_secs_f64();
    match result {
        Ok(density) => ScanPoint {
            value,
            density,
            wall_time_s,
            status: PointStatus::Ok,
        },
        Err(e) => {
            log::warn!("scan point {value} failed: {e}");
            ScanPoint {
                value,
                density: f64::NAN,
                wall_time_s,
                status: PointStatus::Failed(e.to_string()),
            }
        }
    }
}

/// Pointwise `n1 / n0` on a shared parameter axis.
pub fn enhancement_curve(modulated: &ScanResult, baseline: &ScanResult) -> Result<ScanResult> {
    let same_axis = modulated.kind == baseline.kind
        && modulated.points.len() == baseline.points.len()
        && modulated
            .points
            .iter()
            .zip(&baseline.points)
            .all(|(a, b)| a.value.to_bits() == b.value.to_bits());
    if !same_axis {
        return Err(Error::Data("enhancement curve needs identical parameter axes".into()));
    }
    let points = modulated
        .points
        .iter()
        .zip(&baseline.points)
        .map(|(n1, n0)| {
            let defined = n1.status == PointStatus::Ok && n0.status == PointStatus::Ok && n0.density != 0.0;
            ScanPoint {
                value: n1.value,
                density: if defined { n1.density / n0.density } else { f64::NAN },
                wall_time_s: n1.wall_time_s + n0.wall_time_s,
                status: if defined {
                    PointStatus::Ok
                } else {
                    PointStatus::Undefined
                },
            }
        })
        .collect();
    let mut fp = Fingerprint::new("enhancement");
    fp.text("modulated", &modulated.fingerprint)
        .text("baseline", &baseline.fingerprint);
    Ok(ScanResult {
        kind: modulated.kind,
        points,
        fingerprint: fp.finish(),
        version: crate::VERSION.to_string(),
        quantity: "ratio[1]".to_string(),
    })
}

const CHECKPOINT_COLUMNS: &str = "index,value,density,wall_time_s";

struct CheckpointWriter {
    file: File,
    path: PathBuf,
}

impl CheckpointWriter {
    fn open(path: &Path, fingerprint: &str) -> Result<Self> {
        let fresh = fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        if fresh {
            let header = format!(
                "# vacpair scan checkpoint\n# fingerprint: {fingerprint}\n{CHECKPOINT_COLUMNS}\n"
            );
            file.write_all(header.as_bytes()).map_err(|e| Error::io(path, e))?;
            file.sync_data().map_err(|e| Error::io(path, e))?;
        }
        Ok(CheckpointWriter {
            file,
            path: path.to_path_buf(),
        })
    }

    /// One complete row per `write_all`, synced before returning.
    fn append(&mut self, index: usize, point: &ScanPoint) -> Result<()> {
        let row = format!(
            "{index},{},{},{}\n",
            format_float(point.value),
            format_float(point.density),
            format_float(point.wall_time_s)
        );
        self.file
            .write_all(row.as_bytes())
            .and_then(|_| self.file.sync_data())
            .map_err(|e| Error::io(&self.path, e))
    }
}

/// Completed points recorded in a checkpoint; a torn final line is ignored.
fn load_checkpoint(path: &Path, fingerprint: &str) -> Result<Vec<(usize, ScanPoint)>> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(Error::io(path, e)),
    };
    if text.is_empty() {
        return Ok(Vec::new());
    }
    let found = text
        .lines()
        .find_map(|l| l.strip_prefix("# fingerprint:"))
        .map(|s| s.trim().to_string())
        .unwrap_or_default();
    if found != fingerprint {
        return Err(Error::FingerprintMismatch {
            path: path.to_path_buf(),
            expected: fingerprint.to_string(),
            found,
        });
    }
    let complete = match text.rfind('\n') {
        Some(end) => &text[..=end],
        None => "",
    };
    let mut points = Vec::new();
    for line in complete.lines() {
        if line.starts_with('#') || line.trim().is_empty() || line == CHECKPOINT_COLUMNS {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let parsed = (|| {
            if fields.len() != 4 {
                return None;
            }
            Some((
                fields[0].parse::<usize>().ok()?,
                ScanPoint {
                    value: fields[1].parse().ok()?,
                    density: fields[2].parse().ok()?,
                    wall_time_s: fields[3].parse().ok()?,
                    status: PointStatus::Ok,
                },
            ))
        })();
        match parsed {
            Some(p) => points.push(p),
            None => {
                return Err(Error::Data(format!(
                    "malformed checkpoint row in {}: {line}",
                    path.display()
                )))
            }
        }
    }
    Ok(points)
}
