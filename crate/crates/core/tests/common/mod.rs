#![allow(dead_code)]

use std::f64::consts::PI;

use vacpair_core::{FieldConfig, ModulatedField, PulseTrain};

pub const T_SWITCH: f64 = 100.0 * PI;
pub const T_D: f64 = 1000.0 * PI;

pub fn modulated(m: f64, omega_c: f64, omega_m: f64) -> FieldConfig {
    FieldConfig::Modulated(ModulatedField {
        e0: 0.1,
        omega_c,
        omega_m,
        modulation_degree: m,
        t_switch: T_SWITCH,
        t_d: T_D,
    })
}

/// Fig. 2 / Fig. 4 family at the carrier `w_c = 0.65`.
pub fn carrier_065(m: f64, omega_m: f64) -> FieldConfig {
    modulated(m, 0.65, omega_m)
}

/// Fig. 6-8 pulse trains: `tau = 16`, `w_m = 0.056`.
pub fn train(omega_c: f64, omega_m: f64, pulses: u32) -> FieldConfig {
    FieldConfig::PulseTrain(PulseTrain::from_modulation_frequency(0.1, omega_c, omega_m, 16.0, pulses))
}

/// Short weak single pulse used by the two-route checks.
pub fn weak_pulse() -> FieldConfig {
    FieldConfig::PulseTrain(PulseTrain {
        e0: 0.001,
        omega_c: 2.2,
        tau: 5.0,
        delay: 20.0,
        pulses: 1,
    })
}
