//! Quantum Vlasov dynamics of a single momentum mode.
//!
//! The kinetic equation for the occupation `f(p, t)` is non-Markovian: its
//! source term integrates over the whole field history with the kernel
//! `cos 2Θ(p, t', t)`. The production path uses the equivalent local system
//!
//! ```text
//! f' = q g / 2
//! g' = q (1 - 2f) - 2 ω w
//! w' = 2 ω g
//! ```
//!
//! with `q = eE ε⊥ / ω²`, integrated by an embedded Runge–Kutta pair
//! ([`solve_mode`]). [`solve_mode_direct`] evaluates the memory integral
//! itself on a uniform grid and is kept as an independent cross-check.

mod direct;
pub mod oracle;
pub mod rk;

use std::f64::consts::PI;

pub use direct::{solve_mode_direct, MAX_DIRECT_STEPS};
pub use rk::Method;

use crate::error::{Error, Result};
use crate::fields::Field;

/// Slack below zero tolerated on `f` after an accepted step.
pub const PAULI_UNDERSHOOT: f64 = 1e-12;

/// `(f, g, w)` for one mode at time `t`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ModeState {
    pub f: f64,
    pub g: f64,
    pub w: f64,
    pub t: f64,
}

impl ModeState {
    /// Vacuum initial condition at `t`.
    pub fn vacuum(t: f64) -> Self {
        ModeState {
            t,
            ..Default::default()
        }
    }

    /// `(1 - 2f)^2 + g^2 + w^2`, conserved (and equal to 1) by the dynamics.
    pub fn bloch_norm(&self) -> f64 {
        (1.0 - 2.0 * self.f).powi(2) + self.g * self.g + self.w * self.w
    }
}

/// Canonical momentum of a mode and its transverse energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeKinematics {
    /// Canonical longitudinal momentum `P3`.
    pub p3: f64,
    pub p_perp: f64,
}

impl ModeKinematics {
    /// Mode with vanishing transverse momentum.
    pub fn longitudinal(p3: f64) -> Self {
        ModeKinematics { p3, p_perp: 0.0 }
    }

    /// `ε⊥ = sqrt(m² + p⊥²)`.
    #[inline]
    pub fn eps_perp(&self) -> f64 {
        (1.0 + self.p_perp * self.p_perp).sqrt()
    }

    /// Kinetic momentum `p∥ = P3 - eA`.
    #[inline]
    pub fn kinetic_momentum(&self, potential: f64) -> f64 {
        self.p3 - potential
    }

    /// `ω = sqrt(ε⊥² + p∥²)`.
    #[inline]
    pub fn energy(&self, potential: f64) -> f64 {
        let p = self.kinetic_momentum(potential);
        (1.0 + self.p_perp * self.p_perp + p * p).sqrt()
    }
}

/// Integrator controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Largest allowed step; `None` means a tenth of the carrier period.
    pub max_step: Option<f64>,
    pub method: Method,
    /// Budget of attempted steps per mode.
    pub max_steps: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            rel_tol: 1e-8,
            abs_tol: 1e-13,
            max_step: None,
            method: Method::DormandPrince54,
            max_steps: 20_000_000,
        }
    }
}

impl SolverSettings {
    pub fn with_tolerances(rel_tol: f64, abs_tol: f64) -> Self {
        SolverSettings {
            rel_tol,
            abs_tol,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(Error::config("rel_tol", format!("must lie in (0, 1), got {}", self.rel_tol)));
        }
        if !(self.abs_tol > 0.0 && self.abs_tol < 1.0) {
            return Err(Error::config("abs_tol", format!("must lie in (0, 1), got {}", self.abs_tol)));
        }
        if let Some(h) = self.max_step {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::config("max_step", format!("must be positive, got {h}")));
            }
        }
        if self.max_steps == 0 {
            return Err(Error::config("max_steps", "must be positive"));
        }
        Ok(())
    }

    /// Step cap for a given field.
    pub fn resolved_max_step(&self, field: &Field) -> f64 {
        self.max_step.unwrap_or_else(|| match field.config().carrier_frequency() {
            Some(w) => 2.0 * PI / w / 10.0,
            None => 1.0,
        })
    }
}

/// Right-hand side `(f', g', w')` of the local Vlasov system.
#[inline]
pub fn vlasov_rhs(state: &ModeState, kin: &ModeKinematics, field: &Field, t: f64) -> [f64; 3] {
    rhs(kin, field, t, &[state.f, state.g, state.w])
}

#[inline]
fn rhs(kin: &ModeKinematics, field: &Field, t: f64, y: &[f64; 3]) -> [f64; 3] {
    let e = field.value(t);
    let p = kin.p3 - field.vector_potential(t);
    let eps2 = 1.0 + kin.p_perp * kin.p_perp;
    let omega2 = eps2 + p * p;
    let omega = omega2.sqrt();
    let q = e * eps2.sqrt() / omega2;
    [
        0.5 * q * y[1],
        q * (1.0 - 2.0 * y[0]) - 2.0 * omega * y[2],
        2.0 * omega * y[1],
    ]
}

/// Outcome of integrating one mode across the field's span.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeSolution {
    pub state: ModeState,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    /// Extremes of `f` over accepted steps.
    pub f_min: f64,
    pub f_max: f64,
}

/// Integrates one mode from vacuum across the span and returns the full solution.
pub fn integrate_mode(kin: &ModeKinematics, field: &Field, settings: &SolverSettings) -> Result<ModeSolution> {
    settings.validate()?;
    let (t0, t1) = field.span();
    let tol = rk::Tolerances {
        rel: settings.rel_tol,
        abs: settings.abs_tol,
        max_step: settings.resolved_max_step(field),
        max_steps: settings.max_steps,
    };
    let mut f_min = 0.0f64;
    let mut f_max = 0.0f64;
    let observe = |_t: f64, y: &[f64; 3]| {
        f_min = f_min.min(y[0]);
        f_max = f_max.max(y[0]);
        if y[0] < -PAULI_UNDERSHOOT || y[0] > 1.0 {
            Err(format!("occupation {} left [0, 1]", y[0]))
        } else {
            Ok(())
        }
    };
    let result = rk::integrate(
        settings.method,
        |t, y| rhs(kin, field, t, y),
        t0,
        t1,
        [0.0; 3],
        &tol,
        observe,
    );
    match result {
        Ok((y, stats)) => Ok(ModeSolution {
            state: ModeState {
                f: y[0],
                g: y[1],
                w: y[2],
                t: t1,
            },
            accepted_steps: stats.accepted,
            rejected_steps: stats.rejected,
            f_min,
            f_max,
        }),
        Err(failure) => Err(integration_error(kin, failure)),
    }
}

/// Final occupation `f(P3, t_end)` read at the end of the field's span.
pub fn solve_mode(kin: &ModeKinematics, field: &Field, settings: &SolverSettings) -> Result<f64> {
    integrate_mode(kin, field, settings).map(|s| s.state.f)
}

fn integration_error(kin: &ModeKinematics, failure: rk::Failure) -> Error {
    let (t, y, reason) = match failure {
        rk::Failure::StepUnderflow { t, y, h } => (t, y, format!("step size underflow (h = {h:e})")),
        rk::Failure::StepBudget { t, y } => (t, y, "step budget exceeded".to_string()),
        rk::Failure::NonFinite { t, y } => (t, y, "non-finite state".to_string()),
        rk::Failure::Rejected { t, y, reason } => (t, y, reason),
    };
    Error::Integration {
        p3: kin.p3,
        t,
        f: y[0],
        g: y[1],
        w: y[2],
        reason,
    }
}
