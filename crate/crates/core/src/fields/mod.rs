//! Time-dependent, spatially homogeneous electric fields.
//!
//! Everything is in natural units with the electron mass as the energy unit:
//! frequencies and momenta are in units of `m`, times in units of the Compton
//! time `1/m`, and field strengths in units of the critical field, so that a
//! configured strength of `0.1` means `eE = 0.1 m^2`. The vector potential is
//! returned as `eA` in units of `m`.

mod analysis;
mod envelope;
mod potential;

use std::f64::consts::PI;

pub use analysis::{effective_mass, mean_square_potential, power_suppression_factor, FourierComponent};
pub use envelope::{Envelope, RAMP_FRACTION};
pub use potential::PotentialTable;

use crate::error::{Error, Result};

/// Beyond this many pulse widths a Gaussian underflows to exactly zero in f64.
const GAUSSIAN_CUTOFF: f64 = 28.0;

/// Extra time after the last pulse center, in pulse widths.
const PULSE_TAIL_WIDTHS: f64 = 5.0;

/// Sinusoidally amplitude-modulated carrier with exponential switch on/off.
///
/// `E(t) = env(t) (1 - M (1 + cos w_m t) / 2) E0 sin(w_c t)`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModulatedField {
    pub e0: f64,
    pub omega_c: f64,
    pub omega_m: f64,
    pub modulation_degree: f64,
    pub t_switch: f64,
    pub t_d: f64,
}

impl ModulatedField {
    pub fn validate(&self) -> Result<()> {
        check_positive("E0", self.e0)?;
        check_positive("omega_c", self.omega_c)?;
        if !(self.omega_m >= 0.0 && self.omega_m.is_finite()) {
            return Err(Error::config("omega_m", format!("must be >= 0, got {}", self.omega_m)));
        }
        if self.omega_m >= self.omega_c {
            return Err(Error::config(
                "omega_m",
                format!(
                    "modulation frequency {} must be below the carrier frequency {}",
                    self.omega_m, self.omega_c
                ),
            ));
        }
        check_modulation_degree(self.modulation_degree)?;
        if !(self.t_switch >= 0.0 && self.t_switch.is_finite()) {
            return Err(Error::config("t_switch", format!("must be >= 0, got {}", self.t_switch)));
        }
        check_positive("t_d", self.t_d)
    }

    pub fn envelope(&self) -> Envelope {
        Envelope::switching(self.t_switch, self.t_d)
    }

    pub fn span(&self) -> (f64, f64) {
        (0.0, 2.0 * self.t_switch + self.t_d)
    }

    /// The slow modulation factor `1 - M (1 + cos w_m t) / 2`.
    #[inline]
    pub fn modulation(&self, t: f64) -> f64 {
        1.0 - self.modulation_degree * 0.5 * (1.0 + (self.omega_m * t).cos())
    }

    /// Field without the switching envelope.
    #[inline]
    pub fn bare_value(&self, t: f64) -> f64 {
        self.modulation(t) * self.e0 * (self.omega_c * t).sin()
    }

    #[inline]
    pub fn value(&self, t: f64) -> f64 {
        self.envelope().value(t) * self.bare_value(t)
    }

    /// Carrier and the two sidebands `w_c +- w_m` of the bare field.
    pub fn fourier_components(&self) -> [FourierComponent; 3] {
        let m = self.modulation_degree;
        [
            FourierComponent {
                frequency: self.omega_c,
                amplitude: (1.0 - 0.5 * m) * self.e0,
            },
            FourierComponent {
                frequency: self.omega_c + self.omega_m,
                amplitude: -0.25 * m * self.e0,
            },
            FourierComponent {
                frequency: self.omega_c - self.omega_m,
                amplitude: -0.25 * m * self.e0,
            },
        ]
    }

    pub fn flat_top(&self) -> (f64, f64) {
        (self.t_switch, self.t_switch + self.t_d)
    }
}

/// Train of `N` Gaussian subcycle pulses centered at `n T_m`, `n = 1..=N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseTrain {
    pub e0: f64,
    pub omega_c: f64,
    /// Gaussian width `tau`.
    pub tau: f64,
    /// Delay `T_m` between successive pulse centers.
    pub delay: f64,
    pub pulses: u32,
}

impl PulseTrain {
    /// Builds a train whose delay is set by the pulse-train frequency `w_m = 2 pi / T_m`.
    pub fn from_modulation_frequency(e0: f64, omega_c: f64, omega_m: f64, tau: f64, pulses: u32) -> Self {
        PulseTrain {
            e0,
            omega_c,
            tau,
            delay: 2.0 * PI / omega_m,
            pulses,
        }
    }

    pub fn modulation_frequency(&self) -> f64 {
        2.0 * PI / self.delay
    }

    pub fn validate(&self) -> Result<()> {
        check_positive("E0", self.e0)?;
        check_positive("omega_c", self.omega_c)?;
        check_positive("tau", self.tau)?;
        check_positive("T_m", self.delay)?;
        if self.pulses == 0 {
            return Err(Error::config("N", "pulse count must be at least 1"));
        }
        Ok(())
    }

    pub fn span(&self) -> (f64, f64) {
        (
            0.0,
            (self.pulses as f64 + 1.0) * self.delay + PULSE_TAIL_WIDTHS * self.tau,
        )
    }

    /// Sum of the Gaussian envelopes at `t`.
    #[inline]
    pub fn envelope_sum(&self, t: f64) -> f64 {
        let reach = GAUSSIAN_CUTOFF * self.tau;
        let first = (((t - reach) / self.delay).ceil().max(1.0)) as u32;
        let last = (((t + reach) / self.delay).floor()).min(self.pulses as f64);
        if last < first as f64 {
            return 0.0;
        }
        let last = last as u32;
        let inv_tau = 1.0 / self.tau;
        (first..=last)
            .map(|n| {
                let x = (t - n as f64 * self.delay) * inv_tau;
                (-x * x).exp()
            })
            .sum()
    }

    #[inline]
    pub fn value(&self, t: f64) -> f64 {
        self.e0 * self.envelope_sum(t) * (self.omega_c * t).sin()
    }

    /// Index (1-based) of the middle pulse.
    pub fn central_pulse(&self) -> u32 {
        (self.pulses + 1) / 2
    }

    /// Full width at half maximum of the central pulse's field envelope.
    pub fn central_fwhm(&self) -> (f64, f64) {
        let center = self.central_pulse() as f64 * self.delay;
        let half = self.tau * std::f64::consts::LN_2.sqrt();
        (center - half, center + half)
    }
}

/// Declarative description of a field.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldConfig {
    Modulated(ModulatedField),
    PulseTrain(PulseTrain),
    /// Sum of member fields; an empty list is the zero field.
    Superposition(Vec<FieldConfig>),
}

impl FieldConfig {
    pub fn zero() -> Self {
        FieldConfig::Superposition(Vec::new())
    }

    pub fn is_zero(&self) -> bool {
        match self {
            FieldConfig::Superposition(members) => members.iter().all(FieldConfig::is_zero),
            _ => false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            FieldConfig::Modulated(m) => m.validate(),
            FieldConfig::PulseTrain(p) => p.validate(),
            FieldConfig::Superposition(members) => members.iter().try_for_each(FieldConfig::validate),
        }
    }

    /// Simulation interval `[start, end]`.
    pub fn span(&self) -> (f64, f64) {
        match self {
            FieldConfig::Modulated(m) => m.span(),
            FieldConfig::PulseTrain(p) => p.span(),
            FieldConfig::Superposition(members) => members
                .iter()
                .map(FieldConfig::span)
                .reduce(|a, b| (a.0.min(b.0), a.1.max(b.1)))
                .unwrap_or((0.0, 0.0)),
        }
    }

    /// Electric field at `t`, evaluated analytically.
    #[inline]
    pub fn value(&self, t: f64) -> f64 {
        match self {
            FieldConfig::Modulated(m) => m.value(t),
            FieldConfig::PulseTrain(p) => p.value(t),
            FieldConfig::Superposition(members) => members.iter().map(|c| c.value(t)).sum(),
        }
    }

    /// Highest angular frequency scale present, used to size tables and steps.
    pub fn frequency_scale(&self) -> f64 {
        match self {
            FieldConfig::Modulated(m) => {
                let ramp = if m.t_switch > 0.0 {
                    1.0 / m.envelope().tau_s
                } else {
                    0.0
                };
                m.omega_c + m.omega_m + ramp
            }
            FieldConfig::PulseTrain(p) => p.omega_c + 3.0 / p.tau,
            FieldConfig::Superposition(members) => members
                .iter()
                .map(FieldConfig::frequency_scale)
                .fold(0.0, f64::max),
        }
    }

    /// Interior times where `E(t)` has a derivative kink (envelope joints), sorted.
    pub fn breakpoints(&self) -> Vec<f64> {
        let (t0, t1) = self.span();
        let mut points = Vec::new();
        self.collect_breakpoints(&mut points);
        points.retain(|&t| t > t0 && t < t1);
        points.sort_by(f64::total_cmp);
        points.dedup();
        points
    }

    fn collect_breakpoints(&self, out: &mut Vec<f64>) {
        match self {
            FieldConfig::Modulated(m) => {
                let (a, b) = m.flat_top();
                out.extend([a, b]);
            }
            FieldConfig::PulseTrain(_) => {}
            FieldConfig::Superposition(members) => members.iter().for_each(|c| c.collect_breakpoints(out)),
        }
    }

    /// Carrier frequency of the fastest member, if any.
    pub fn carrier_frequency(&self) -> Option<f64> {
        match self {
            FieldConfig::Modulated(m) => Some(m.omega_c),
            FieldConfig::PulseTrain(p) => Some(p.omega_c),
            FieldConfig::Superposition(members) => members
                .iter()
                .filter_map(FieldConfig::carrier_frequency)
                .reduce(f64::max),
        }
    }

    /// Window used for time averages (flat top, or the central pulse's FWHM).
    ///
    /// `None` for the zero field; `Some((a, b))` with `a >= b` means the
    /// members' windows do not overlap.
    pub fn averaging_window(&self) -> Option<(f64, f64)> {
        match self {
            FieldConfig::Modulated(m) => Some(m.flat_top()),
            FieldConfig::PulseTrain(p) => Some(p.central_fwhm()),
            FieldConfig::Superposition(members) => members
                .iter()
                .filter_map(FieldConfig::averaging_window)
                .reduce(|a, b| (a.0.max(b.0), a.1.min(b.1))),
        }
    }

    /// Same field with the flat-top duration of every modulated member scaled by `s`.
    pub fn with_duration_scale(&self, s: f64) -> FieldConfig {
        match self {
            FieldConfig::Modulated(m) => FieldConfig::Modulated(ModulatedField { t_d: m.t_d * s, ..*m }),
            FieldConfig::PulseTrain(p) => FieldConfig::PulseTrain(*p),
            FieldConfig::Superposition(members) => {
                FieldConfig::Superposition(members.iter().map(|c| c.with_duration_scale(s)).collect())
            }
        }
    }
}

/// A validated field with its precomputed vector-potential table.
///
/// Immutable after construction and safe to share between threads.
#[derive(Debug, Clone)]
pub struct Field {
    config: FieldConfig,
    span: (f64, f64),
    table: Option<PotentialTable>,
}

impl Field {
    pub fn new(config: FieldConfig) -> Result<Self> {
        config.validate()?;
        let span = config.span();
        let table = if config.is_zero() {
            None
        } else {
            Some(PotentialTable::build(&config)?)
        };
        Ok(Field {
            config,
            span,
            table,
        })
    }

    pub fn config(&self) -> &FieldConfig {
        &self.config
    }

    pub fn span(&self) -> (f64, f64) {
        self.span
    }

    /// `eE(t)` in units of `m^2`.
    #[inline]
    pub fn value(&self, t: f64) -> f64 {
        self.config.value(t)
    }

    /// `eA(t) = -int_0^t eE` in units of `m`.
    #[inline]
    pub fn vector_potential(&self, t: f64) -> f64 {
        match &self.table {
            Some(table) => table.eval(t),
            None => 0.0,
        }
    }

    pub fn table(&self) -> Option<&PotentialTable> {
        self.table.as_ref()
    }

    /// Checks that `t` lies within the simulation span.
    pub fn check_time(&self, t: f64) -> Result<()> {
        let (a, b) = self.span;
        if t >= a && t <= b {
            Ok(())
        } else {
            Err(Error::Data(format!("time {t} outside simulation span [{a}, {b}]")))
        }
    }
}

/// `eE(t)` for a config, checking the config and that `t` is inside its span.
pub fn field_value(config: &FieldConfig, t: f64) -> Result<f64> {
    config.validate()?;
    let (a, b) = config.span();
    if !(t >= a && t <= b) {
        return Err(Error::Data(format!("time {t} outside simulation span [{a}, {b}]")));
    }
    Ok(config.value(t))
}

fn check_positive(key: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(key, format!("must be positive and finite, got {v}")))
    }
}

pub(crate) fn check_modulation_degree(m: f64) -> Result<()> {
    if (0.0..=1.0).contains(&m) {
        Ok(())
    } else {
        Err(Error::config("M", format!("modulation degree must lie in [0, 1], got {m}")))
    }
}
