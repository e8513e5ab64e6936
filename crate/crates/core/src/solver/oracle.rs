//! Cross-check of the ODE route against direct quadrature of the memory integral.

use super::{solve_mode, solve_mode_direct, Method, ModeKinematics, SolverSettings};
use crate::error::Result;
use crate::fields::{Field, FieldConfig, ModulatedField, PulseTrain};

/// Largest accepted `|ode - direct| / max(ode, 1e-30)`.
pub const EQUIVALENCE_TOLERANCE: f64 = 1e-5;

/// Grid step used for the direct route.
pub const DIRECT_GRID_STEP: f64 = 0.01;

/// Longitudinal momenta checked per instance.
pub const ORACLE_MOMENTA: [f64; 3] = [-0.3, 0.0, 0.45];

/// ODE settings for the comparison; tight enough that the direct route dominates the error.
pub fn oracle_settings() -> SolverSettings {
    SolverSettings {
        method: Method::DormandPrince853,
        ..SolverSettings::with_tolerances(1e-11, 1e-18)
    }
}

/// Five weak, short fields (`E0 <= 0.01`, span <= 200) in the one-photon regime.
pub fn oracle_instances() -> Vec<(&'static str, FieldConfig)> {
    let train = |e0, omega_c, tau, delay, pulses| {
        FieldConfig::PulseTrain(PulseTrain {
            e0,
            omega_c,
            tau,
            delay,
            pulses,
        })
    };
    let modulated = |e0, omega_c, omega_m, m, t_switch, t_d| {
        FieldConfig::Modulated(ModulatedField {
            e0,
            omega_c,
            omega_m,
            modulation_degree: m,
            t_switch,
            t_d,
        })
    };
    vec![
        ("train-3", train(0.01, 2.2, 10.0, 36.0, 3)),
        ("train-4", train(0.005, 2.05, 8.0, 30.0, 4)),
        ("modulated-half", modulated(0.01, 2.1, 0.2, 0.5, 20.0, 100.0)),
        ("modulated-full", modulated(0.008, 1.2, 0.15, 1.0, 15.0, 120.0)),
        (
            "superposition",
            FieldConfig::Superposition(vec![
                train(0.006, 2.3, 6.0, 35.0, 2),
                modulated(0.004, 1.1, 0.3, 0.3, 10.0, 80.0),
            ]),
        ),
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleRow {
    pub instance: String,
    pub p3: f64,
    pub ode: f64,
    pub direct: f64,
}

impl OracleRow {
    pub fn relative_difference(&self) -> f64 {
        (self.ode - self.direct).abs() / self.ode.abs().max(1e-30)
    }

    pub fn passes(&self) -> bool {
        self.relative_difference() < EQUIVALENCE_TOLERANCE
    }
}

/// Solves every momentum in `momenta` both ways.
pub fn compare(
    name: &str,
    field: &Field,
    momenta: &[f64],
    settings: &SolverSettings,
    grid_step: f64,
) -> Result<Vec<OracleRow>> {
    momenta
        .iter()
        .map(|&p3| {
            let kin = ModeKinematics::longitudinal(p3);
            Ok(OracleRow {
                instance: name.to_string(),
                p3,
                ode: solve_mode(&kin, field, settings)?,
                direct: solve_mode_direct(&kin, field, grid_step)?,
            })
        })
        .collect()
}
