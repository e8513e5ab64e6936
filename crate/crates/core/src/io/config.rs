//! Run configuration files.
//!
//! A flat `key = value` format with `[section]` headers:
//!
//! ```text
//! [field]
//! type = modulated        # modulated | pulse_train | superposition | zero
//! E0 = 0.1                # units of E_cr
//! omega_c = 0.65          # units of m
//! omega_m = 0.056
//! M = 1
//! t_switch = 100pi        # units of 1/m
//! t_d = 1000pi
//!
//! [grid]
//! p_min = -2
//! p_max = 2
//! n_points = 401
//! ```
//!
//! Pulse trains take `E0, omega_c, tau, N` and exactly one of `T_m` or
//! `omega_m`. A superposition lists its members in `[field.1]`, `[field.2]`,
//! ... Optional sections: `[solver]`, `[scan]`, `[observables]`. Numbers may
//! carry a `pi` factor (`100pi`, `100*pi`, `π`). Comments start with `#`.
//! Unknown, duplicate, or missing keys are errors naming the key and line.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fields::{FieldConfig, ModulatedField, PulseTrain};
use crate::observables::{MomentumGrid, DEFAULT_MIN_PROMINENCE};
use crate::io::Tier;
use crate::scans::{ParameterRange, ScanKind, ScanSpec};
use crate::solver::{Method, SolverSettings};

/// Scan section of a configuration file.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanConfig {
    pub kind: ScanKind,
    pub range: ParameterRange,
    /// Overrides the tier's duration scale when present.
    pub duration_scale: Option<f64>,
    /// Modulation degree of a baseline scan; the output is then the ratio `n / n_baseline`.
    pub baseline_m: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObservablesConfig {
    /// Effective mass override; computed from the field when absent.
    pub m_star: Option<f64>,
    pub min_prominence: f64,
    pub max_photons: u32,
}

impl Default for ObservablesConfig {
    fn default() -> Self {
        ObservablesConfig {
            m_star: None,
            min_prominence: DEFAULT_MIN_PROMINENCE,
            max_photons: 4,
        }
    }
}

/// Everything a run needs, fully resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub field: FieldConfig,
    pub grid: Option<MomentumGrid>,
    pub settings: SolverSettings,
    pub scan: Option<ScanConfig>,
    pub observables: ObservablesConfig,
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let doc = Document::parse(text)?;
        let config = RunConfig {
            field: parse_field(&doc, "field")?,
            grid: doc.optional_section("grid", parse_grid)?,
            settings: doc
                .optional_section("solver", parse_solver)?
                .unwrap_or_default(),
            scan: doc.optional_section("scan", parse_scan)?,
            observables: doc
                .optional_section("observables", parse_observables)?
                .unwrap_or_default(),
        };
        for name in doc.sections.keys() {
            let known = matches!(name.as_str(), "field" | "grid" | "solver" | "scan" | "observables")
                || is_member_section(name);
            if !known {
                return Err(Error::Config {
                    key: format!("[{name}]"),
                    message: "unknown section".into(),
                    line: Some(doc.sections[name].line),
                });
            }
        }
        doc.check_consumed()?;
        Ok(config)
    }

    /// Flat-top scale for `tier`, unless the scan section fixes one.
    pub fn duration_scale(&self, tier: Tier) -> f64 {
        self.scan
            .as_ref()
            .and_then(|s| s.duration_scale)
            .unwrap_or(tier.duration_scale())
    }

    /// The sweep described by the `[scan]` section.
    pub fn scan_spec(&self, duration_scale: f64) -> Result<ScanSpec> {
        let Some(scan) = &self.scan else {
            return Err(Error::Config {
                key: "[scan]".into(),
                message: "a scan needs a [scan] section".into(),
                line: None,
            });
        };
        Ok(ScanSpec {
            kind: scan.kind,
            base: self.field.clone(),
            range: scan.range.clone(),
            grid: self.grid.unwrap_or_else(MomentumGrid::density_default),
            settings: self.settings,
            duration_scale,
        })
    }

    /// Canonical text; parsing it yields an equal configuration.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        write_field(&mut out, "field", &self.field);
        if let Some(g) = &self.grid {
            writeln!(out, "\n[grid]\np_min = {}\np_max = {}\nn_points = {}", g.p_min, g.p_max, g.n_points).unwrap();
        }
        let s = &self.settings;
        writeln!(
            out,
            "\n[solver]\nrel_tol = {}\nabs_tol = {}\nmethod = {}\nmax_steps = {}",
            s.rel_tol,
            s.abs_tol,
            s.method.name(),
            s.max_steps
        )
        .unwrap();
        if let Some(h) = s.max_step {
            writeln!(out, "max_step = {h}").unwrap();
        }
        if let Some(sc) = &self.scan {
            writeln!(out, "\n[scan]\nkind = {}", sc.kind.name()).unwrap();
            match &sc.range {
                ParameterRange::Stepped { start, stop, step } => {
                    writeln!(out, "start = {start}\nstop = {stop}\nstep = {step}").unwrap()
                }
                ParameterRange::List(v) => {
                    let list: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                    writeln!(out, "values = {}", list.join(", ")).unwrap()
                }
            }
            if let Some(d) = sc.duration_scale {
                writeln!(out, "duration_scale = {d}").unwrap();
            }
            if let Some(b) = sc.baseline_m {
                writeln!(out, "baseline_M = {b}").unwrap();
            }
        }
        let o = &self.observables;
        writeln!(
            out,
            "\n[observables]\nmin_prominence = {}\nmax_photons = {}",
            o.min_prominence, o.max_photons
        )
        .unwrap();
        if let Some(m) = o.m_star {
            writeln!(out, "m_star = {m}").unwrap();
        }
        out
    }
}

fn is_member_section(name: &str) -> bool {
    name.strip_prefix("field.")
        .is_some_and(|rest| rest.split('.').all(|p| !p.is_empty() && p.bytes().all(|b| b.is_ascii_digit())))
}

fn write_field(out: &mut String, section: &str, field: &FieldConfig) {
    if !out.is_empty() {
        out.push('\n');
    }
    writeln!(out, "[{section}]").unwrap();
    match field {
        FieldConfig::Modulated(m) => writeln!(
            out,
            "type = modulated\nE0 = {}\nomega_c = {}\nomega_m = {}\nM = {}\nt_switch = {}\nt_d = {}",
            m.e0, m.omega_c, m.omega_m, m.modulation_degree, m.t_switch, m.t_d
        )
        .unwrap(),
        FieldConfig::PulseTrain(p) => writeln!(
            out,
            "type = pulse_train\nE0 = {}\nomega_c = {}\ntau = {}\nT_m = {}\nN = {}",
            p.e0, p.omega_c, p.tau, p.delay, p.pulses
        )
        .unwrap(),
        FieldConfig::Superposition(members) if members.is_empty() => writeln!(out, "type = zero").unwrap(),
        FieldConfig::Superposition(members) => {
            writeln!(out, "type = superposition").unwrap();
            for (i, m) in members.iter().enumerate() {
                write_field(out, &format!("{section}.{}", i + 1), m);
            }
        }
    }
}

/// Parses a number with an optional `pi` factor.
pub fn parse_number(raw: &str) -> Option<f64> {
    let s = raw.trim().replace('π', "pi");
    let s = s.trim();
    if s.is_empty() {
        return None;
    }
    let (mantissa, factor) = match s.strip_suffix("pi") {
        Some(head) => {
            let head = head.trim_end();
            let head = head.strip_suffix('*').unwrap_or(head).trim_end();
            (head, PI)
        }
        None => (s, 1.0),
    };
    let value = match mantissa {
        "" => 1.0,
        "-" => -1.0,
        m => m.parse::<f64>().ok()?,
    };
    let v = value * factor;
    v.is_finite().then_some(v)
}

struct Entry {
    value: String,
    line: usize,
    used: std::cell::Cell<bool>,
}

struct Section {
    line: usize,
    entries: BTreeMap<String, Entry>,
}

struct Document {
    sections: BTreeMap<String, Section>,
}

impl Document {
    fn parse(text: &str) -> Result<Self> {
        let mut sections: BTreeMap<String, Section> = BTreeMap::new();
        let mut current: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(name) = content.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| Error::Config {
                        key: content.to_string(),
                        message: "malformed section header".into(),
                        line: Some(line),
                    })?
                    .trim()
                    .to_string();
                if let Some(prev) = sections.get(&name) {
                    return Err(Error::Config {
                        key: format!("[{name}]"),
                        message: format!("duplicate section (first on line {})", prev.line),
                        line: Some(line),
                    });
                }
                sections.insert(
                    name.clone(),
                    Section {
                        line,
                        entries: BTreeMap::new(),
                    },
                );
                current = Some(name);
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| Error::Config {
                key: content.to_string(),
                message: "expected `key = value`".into(),
                line: Some(line),
            })?;
            let key = key.trim().to_string();
            let section = current.as_ref().ok_or_else(|| Error::Config {
                key: key.clone(),
                message: "key outside of any section".into(),
                line: Some(line),
            })?;
            let entries = &mut sections.get_mut(section).expect("section exists").entries;
            if let Some(prev) = entries.get(&key) {
                return Err(Error::Config {
                    key,
                    message: format!("duplicate key (first on line {})", prev.line),
                    line: Some(line),
                });
            }
            entries.insert(
                key,
                Entry {
                    value: value.trim().to_string(),
                    line,
                    used: std::cell::Cell::new(false),
                },
            );
        }
        Ok(Document { sections })
    }

    fn section<'a>(&'a self, name: &'a str) -> Result<SectionReader<'a>> {
        self.sections
            .get(name)
            .map(|s| SectionReader { name, section: s })
            .ok_or_else(|| Error::config(format!("[{name}]"), "missing section"))
    }

    fn optional_section<'a, T>(&'a self, name: &'a str, f: impl FnOnce(&SectionReader<'a>) -> Result<T>) -> Result<Option<T>> {
        match self.sections.get(name) {
            Some(s) => f(&SectionReader { name, section: s }).map(Some),
            None => Ok(None),
        }
    }

    fn check_consumed(&self) -> Result<()> {
        let mut unused: Vec<(&str, &Entry)> = self
            .sections
            .values()
            .flat_map(|s| s.entries.iter().map(|(k, e)| (k.as_str(), e)))
            .filter(|(_, e)| !e.used.get())
            .collect();
        unused.sort_by_key(|(_, e)| e.line);
        match unused.first() {
            Some((key, e)) => Err(Error::Config {
                key: key.to_string(),
                message: "unknown key".into(),
                line: Some(e.line),
            }),
            None => Ok(()),
        }
    }
}

struct SectionReader<'a> {
    name: &'a str,
    section: &'a Section,
}

impl SectionReader<'_> {
    fn raw(&self, key: &str) -> Option<&Entry> {
        let e = self.section.entries.get(key)?;
        e.used.set(true);
        Some(e)
    }

    fn err(&self, key: &str, message: impl Into<String>) -> Error {
        Error::Config {
            key: key.to_string(),
            message: message.into(),
            line: self.section.entries.get(key).map(|e| e.line).or(Some(self.section.line)),
        }
    }

    fn missing(&self, key: &str) -> Error {
        self.err(key, format!("missing key in [{}]", self.name))
    }

    fn opt_f64(&self, key: &str) -> Result<Option<f64>> {
        self.raw(key)
            .map(|e| parse_number(&e.value).ok_or_else(|| self.err(key, format!("not a number: `{}`", e.value))))
            .transpose()
    }

    fn f64(&self, key: &str) -> Result<f64> {
        self.opt_f64(key)?.ok_or_else(|| self.missing(key))
    }

    fn opt_uint(&self, key: &str) -> Result<Option<u64>> {
        self.raw(key)
            .map(|e| {
                e.value
                    .parse::<u64>()
                    .map_err(|_| self.err(key, format!("not a non-negative integer: `{}`", e.value)))
            })
            .transpose()
    }

    fn opt_text(&self, key: &str) -> Option<&str> {
        self.raw(key).map(|e| e.value.as_str())
    }

    fn text(&self, key: &str) -> Result<&str> {
        self.opt_text(key).ok_or_else(|| self.missing(key))
    }

    /// Attaches this section's line numbers to a validation error.
    fn locate(&self, e: Error) -> Error {
        match e {
            Error::Config { key, message, line: None } => self.err(&key, message),
            other => other,
        }
    }
}

fn parse_field(doc: &Document, name: &str) -> Result<FieldConfig> {
    let s = doc.section(name)?;
    let kind = s.text("type")?;
    let config = match kind {
        "modulated" => FieldConfig::Modulated(ModulatedField {
            e0: s.f64("E0")?,
            omega_c: s.f64("omega_c")?,
            omega_m: s.f64("omega_m")?,
            modulation_degree: s.f64("M")?,
            t_switch: s.f64("t_switch")?,
            t_d: s.f64("t_d")?,
        }),
        "pulse_train" => {
            let e0 = s.f64("E0")?;
            let omega_c = s.f64("omega_c")?;
            let tau = s.f64("tau")?;
            let pulses = s.opt_uint("N")?.ok_or_else(|| s.missing("N"))?;
            let pulses = u32::try_from(pulses).map_err(|_| s.err("N", "pulse count too large"))?;
            let delay = match (s.opt_f64("T_m")?, s.opt_f64("omega_m")?) {
                (Some(t), None) => t,
                (None, Some(w)) if w > 0.0 => 2.0 * PI / w,
                (None, Some(w)) => return Err(s.err("omega_m", format!("must be positive, got {w}"))),
                (Some(_), Some(_)) => return Err(s.err("omega_m", "give exactly one of `T_m` and `omega_m`")),
                (None, None) => return Err(s.err("T_m", "missing key; give `T_m` or `omega_m`")),
            };
            FieldConfig::PulseTrain(PulseTrain {
                e0,
                omega_c,
                tau,
                delay,
                pulses,
            })
        }
        "zero" => FieldConfig::zero(),
        "superposition" => {
            let mut members = Vec::new();
            while doc.sections.contains_key(&format!("{name}.{}", members.len() + 1)) {
                members.push(parse_field(doc, &format!("{name}.{}", members.len() + 1))?);
            }
            if members.is_empty() {
                return Err(s.err("type", format!("a superposition needs members in [{name}.1], [{name}.2], ...")));
            }
            FieldConfig::Superposition(members)
        }
        other => {
            return Err(s.err(
                "type",
                format!("unknown field type `{other}` (modulated, pulse_train, superposition, zero)"),
            ))
        }
    };
    if !matches!(config, FieldConfig::Superposition(_)) {
        config.validate().map_err(|e| s.locate(e))?;
    }
    Ok(config)
}

fn parse_grid(s: &SectionReader<'_>) -> Result<MomentumGrid> {
    let n = s.opt_uint("n_points")?.ok_or_else(|| s.missing("n_points"))?;
    let grid = MomentumGrid {
        p_min: s.f64("p_min")?,
        p_max: s.f64("p_max")?,
        n_points: usize::try_from(n).map_err(|_| s.err("n_points", "too large"))?,
    };
    grid.validate().map_err(|e| s.locate(e))?;
    Ok(grid)
}

fn parse_solver(s: &SectionReader<'_>) -> Result<SolverSettings> {
    let d = SolverSettings::default();
    let method = match s.opt_text("method") {
        Some(m) => Method::from_name(m).ok_or_else(|| s.err("method", format!("unknown method `{m}` (dopri5, dop853)")))?,
        None => d.method,
    };
    let settings = SolverSettings {
        rel_tol: s.opt_f64("rel_tol")?.unwrap_or(d.rel_tol),
        abs_tol: s.opt_f64("abs_tol")?.unwrap_or(d.abs_tol),
        max_step: s.opt_f64("max_step")?.or(d.max_step),
        method,
        max_steps: match s.opt_uint("max_steps")? {
            Some(n) => usize::try_from(n).map_err(|_| s.err("max_steps", "too large"))?,
            None => d.max_steps,
        },
    };
    settings.validate().map_err(|e| s.locate(e))?;
    Ok(settings)
}

fn parse_scan(s: &SectionReader<'_>) -> Result<ScanConfig> {
    let kind_name = s.text("kind")?;
    let kind = ScanKind::from_name(kind_name).ok_or_else(|| {
        s.err(
            "kind",
            format!("unknown scan kind `{kind_name}` (modulation-frequency, modulation-degree, carrier-frequency, pulse-count)"),
        )
    })?;
    let stepped = [s.opt_f64("start")?, s.opt_f64("stop")?, s.opt_f64("step")?];
    let range = match (s.opt_text("values"), stepped) {
        (Some(list), [None, None, None]) => ParameterRange::List(
            list.split(',')
                .map(|v| parse_number(v).ok_or_else(|| s.err("values", format!("not a number: `{}`", v.trim()))))
                .collect::<Result<_>>()?,
        ),
        (None, [Some(start), Some(stop), Some(step)]) => ParameterRange::Stepped { start, stop, step },
        (Some(_), _) => return Err(s.err("values", "give either `values` or `start`/`stop`/`step`, not both")),
        (None, [start, stop, _]) => {
            let key = if start.is_none() {
                "start"
            } else if stop.is_none() {
                "stop"
            } else {
                "step"
            };
            return Err(s.missing(key));
        }
    };
    range.values().map_err(|e| s.locate(e))?;
    let duration_scale = s.opt_f64("duration_scale")?;
    if let Some(d) = duration_scale {
        if !(d > 0.0 && d <= 1.0) {
            return Err(s.err("duration_scale", format!("must lie in (0, 1], got {d}")));
        }
    }
    let baseline_m = s.opt_f64("baseline_M")?;
    if let Some(m) = baseline_m {
        if !(0.0..=1.0).contains(&m) {
            return Err(s.err("baseline_M", format!("modulation degree must lie in [0, 1], got {m}")));
        }
    }
    Ok(ScanConfig {
        kind,
        range,
        duration_scale,
        baseline_m,
    })
}

fn parse_observables(s: &SectionReader<'_>) -> Result<ObservablesConfig> {
    let d = ObservablesConfig::default();
    let m_star = s.opt_f64("m_star")?;
    if let Some(m) = m_star {
        if !(m >= 1.0) {
            return Err(s.err("m_star", format!("must be >= 1 (units of m), got {m}")));
        }
    }
    let min_prominence = s.opt_f64("min_prominence")?.unwrap_or(d.min_prominence);
    if !(min_prominence >= 0.0 && min_prominence <= 1.0) {
        return Err(s.err("min_prominence", format!("must lie in [0, 1], got {min_prominence}")));
    }
    let max_photons = match s.opt_uint("max_photons")? {
        Some(n) if (1..=64).contains(&n) => n as u32,
        Some(n) => return Err(s.err("max_photons", format!("must lie in 1..=64, got {n}"))),
        None => d.max_photons,
    };
    Ok(ObservablesConfig {
        m_star,
        min_prominence,
        max_photons,
    })
}
