//! Field configurations shared by the benchmarks.

use std::f64::consts::PI;

use vacpair_core::{FieldConfig, ModulatedField, PulseTrain};

/// Fully modulated carrier at `w_c = 0.65`, `w_m = 0.056`, flat top scaled by `scale`.
pub fn modulated(scale: f64) -> FieldConfig {
    FieldConfig::Modulated(ModulatedField {
        e0: 0.1,
        omega_c: 0.65,
        omega_m: 0.056,
        modulation_degree: 1.0,
        t_switch: 100.0 * PI,
        t_d: 1000.0 * PI * scale,
    })
}

/// Ten-pulse train at the threshold carrier `w_c = 0.631`.
pub fn train() -> FieldConfig {
    FieldConfig::PulseTrain(PulseTrain::from_modulation_frequency(0.1, 0.631, 0.056, 16.0, 10))
}

/// Short weak pulse small enough for the quadratic-cost direct route.
pub fn weak_pulse() -> FieldConfig {
    FieldConfig::PulseTrain(PulseTrain {
        e0: 0.001,
        omega_c: 2.2,
        tau: 5.0,
        delay: 20.0,
        pulses: 1,
    })
}
