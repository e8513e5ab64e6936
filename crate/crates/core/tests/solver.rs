mod common;

use proptest::prelude::*;
use vacpair_core::solver::{integrate_mode, vlasov_rhs, Method, PAULI_UNDERSHOOT};
use vacpair_core::{
    solve_mode, solve_mode_direct, Error, Field, FieldConfig, ModeKinematics, ModeState, PulseTrain, SolverSettings,
};

use common::{carrier_065, weak_pulse};

fn tight() -> SolverSettings {
    SolverSettings {
        method: Method::DormandPrince853,
        ..SolverSettings::with_tolerances(1e-12, 1e-20)
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(1e-30)
}

#[test]
fn rhs_vanishes_without_field_or_history() {
    let field = Field::new(FieldConfig::zero()).unwrap();
    let kin = ModeKinematics::longitudinal(0.3);
    let d = vlasov_rhs(&ModeState::vacuum(0.0), &kin, &field, 5.0);
    assert_eq!(d, [0.0, 0.0, 0.0]);
}

#[test]
fn rhs_source_is_pauli_blocked_at_half_filling() {
    let field = Field::new(carrier_065(0.0, 0.056)).unwrap();
    let kin = ModeKinematics::longitudinal(0.2);
    let t = 1500.0;
    let state = ModeState {
        f: 0.5,
        g: 0.0,
        w: 0.3,
        t,
    };
    let d = vlasov_rhs(&state, &kin, &field, t);
    let omega = kin.energy(field.vector_potential(t));
    assert_eq!(d[1], -2.0 * omega * 0.3);
}

#[test]
fn rhs_coupling_at_rest_equals_field() {
    // with P3 = A(t) the kinetic momentum is zero, so omega = m and q = eE
    let field = Field::new(carrier_065(0.0, 0.056)).unwrap();
    let t = (1500.0f64 / (std::f64::consts::PI / 0.65)).round() * std::f64::consts::PI / 0.65 + 0.5 * std::f64::consts::PI / 0.65;
    let kin = ModeKinematics::longitudinal(field.vector_potential(t));
    let state = ModeState {
        f: 0.0,
        g: 1.0,
        w: 0.0,
        t,
    };
    let d = vlasov_rhs(&state, &kin, &field, t);
    let e = field.value(t);
    assert!((e.abs() - 0.1).abs() < 1e-9);
    assert!((d[0] - 0.5 * e).abs() < 1e-15);
}

#[test]
fn zero_field_creates_nothing() {
    let field = Field::new(FieldConfig::zero()).unwrap();
    let kin = ModeKinematics::longitudinal(0.0);
    assert_eq!(solve_mode(&kin, &field, &SolverSettings::default()).unwrap(), 0.0);
    assert_eq!(solve_mode_direct(&kin, &field, 0.01).unwrap(), 0.0);
}

#[test]
fn weak_pulse_direct_self_converges() {
    let field = Field::new(weak_pulse()).unwrap();
    for p3 in [0.0, 0.4] {
        let kin = ModeKinematics::longitudinal(p3);
        let coarse = solve_mode_direct(&kin, &field, 0.004).unwrap();
        let fine = solve_mode_direct(&kin, &field, 0.002).unwrap();
        assert!(rel(fine, coarse) < 1e-8, "p3 = {p3}: {coarse} vs {fine}");
    }
}

#[test]
fn weak_pulse_routes_agree() {
    let field = Field::new(weak_pulse()).unwrap();
    for p3 in [-0.2, 0.0, 0.4] {
        let kin = ModeKinematics::longitudinal(p3);
        let ode = solve_mode(&kin, &field, &tight()).unwrap();
        let direct = solve_mode_direct(&kin, &field, 0.002).unwrap();
        assert!(ode > 0.0);
        assert!(rel(ode, direct) < 1e-6, "p3 = {p3}: {ode} vs {direct}");
    }
}

#[test]
fn weak_pulse_default_settings_agree_with_direct() {
    let field = Field::new(weak_pulse()).unwrap();
    let kin = ModeKinematics::longitudinal(0.0);
    let ode = solve_mode(&kin, &field, &SolverSettings::default()).unwrap();
    let direct = solve_mode_direct(&kin, &field, 0.002).unwrap();
    assert!(rel(ode, direct) < 1e-5, "{ode} vs {direct}");
}

#[test]
fn direct_refuses_long_spans() {
    let field = Field::new(carrier_065(0.0, 0.056)).unwrap();
    let err = solve_mode_direct(&ModeKinematics::longitudinal(0.0), &field, 0.01).unwrap_err();
    assert!(matches!(err, Error::Resource(_)), "{err}");
}

#[test]
fn direct_refuses_unresolved_step() {
    let field = Field::new(weak_pulse()).unwrap();
    let err = solve_mode_direct(&ModeKinematics::longitudinal(0.0), &field, 0.5).unwrap_err();
    assert!(err.is_config());
}

#[test]
fn tightening_tolerances_barely_moves_peak_mode() {
    // Fig. 2 second enhancement peak, at the dominant spectral mode
    let field = Field::new(carrier_065(1.0, 0.056)).unwrap();
    for p3 in [0.0, 0.05] {
        let kin = ModeKinematics::longitudinal(p3);
        let loose = solve_mode(&kin, &field, &SolverSettings::with_tolerances(1e-8, 1e-12)).unwrap();
        let strict = solve_mode(&kin, &field, &SolverSettings::with_tolerances(1e-10, 1e-14)).unwrap();
        assert!(rel(strict, loose) < 1e-3, "p3 = {p3}: {loose} vs {strict}");
    }
}

#[test]
fn dop853_agrees_with_default_pair() {
    let field = Field::new(carrier_065(1.0, 0.056).with_duration_scale(0.1)).unwrap();
    let kin = ModeKinematics::longitudinal(0.05);
    let a = solve_mode(&kin, &field, &SolverSettings::with_tolerances(1e-10, 1e-16)).unwrap();
    let b = solve_mode(&kin, &field, &tight()).unwrap();
    assert!(rel(b, a) < 1e-5, "{a} vs {b}");
}

/// Mean of `A` over the flat top of a modulated field.
fn drift_offset(field: &Field, window: (f64, f64)) -> f64 {
    let n = 100_000;
    (0..n)
        .map(|i| field.vector_potential(window.0 + (window.1 - window.0) * (i as f64 + 0.5) / n as f64))
        .sum::<f64>()
        / n as f64
}

#[test]
fn exponential_ramp_leaves_drift_offset() {
    // after the ramp, A oscillates about E0 a^2 / (w (a^2 + w^2)) with a = 1 / tau_s
    let field = Field::new(carrier_065(0.0, 0.056).with_duration_scale(0.1)).unwrap();
    let a = 1.0 / (10.0 * std::f64::consts::PI);
    let w: f64 = 0.65;
    let closed = 0.1 * a * a / (w * (a * a + w * w));
    let window = field.config().averaging_window().unwrap();
    let c = drift_offset(&field, window);
    assert!((c - closed).abs() < 0.02 * closed, "{c} vs {closed}");
}

#[test]
fn spectrum_is_symmetric_about_drift_momentum() {
    let field = Field::new(carrier_065(0.0, 0.056).with_duration_scale(0.1)).unwrap();
    let c = drift_offset(&field, field.config().averaging_window().unwrap());
    let settings = SolverSettings::default();
    for x in [0.05, 0.8264] {
        let plus = solve_mode(&ModeKinematics::longitudinal(c + x), &field, &settings).unwrap();
        let minus = solve_mode(&ModeKinematics::longitudinal(c - x), &field, &settings).unwrap();
        assert!(rel(plus, minus) < 1e-4, "x = {x}: {plus} vs {minus}");
    }
}

#[test]
fn cosine_phase_pulse_spectrum_is_symmetric() {
    // E even about the pulse center makes A odd, and time reversal then maps
    // P3 onto -P3
    let omega_c: f64 = 0.631;
    let center = 22.5 * std::f64::consts::PI / omega_c;
    let field = Field::new(FieldConfig::PulseTrain(PulseTrain {
        e0: 0.1,
        omega_c,
        tau: 16.0,
        delay: center,
        pulses: 1,
    }))
    .unwrap();
    let settings = SolverSettings::with_tolerances(1e-10, 1e-16);
    for p3 in [0.05, 0.24, 0.6] {
        let plus = solve_mode(&ModeKinematics::longitudinal(p3), &field, &settings).unwrap();
        let minus = solve_mode(&ModeKinematics::longitudinal(-p3), &field, &settings).unwrap();
        assert!(rel(plus, minus) < 1e-6, "p3 = {p3}: {plus} vs {minus}");
    }
}

#[test]
fn identical_inputs_are_bitwise_identical() {
    let field = Field::new(carrier_065(0.8, 0.056).with_duration_scale(0.1)).unwrap();
    let kin = ModeKinematics::longitudinal(0.123);
    let a = integrate_mode(&kin, &field, &SolverSettings::default()).unwrap();
    let b = integrate_mode(&kin, &field, &SolverSettings::default()).unwrap();
    assert_eq!(a.state.f.to_bits(), b.state.f.to_bits());
    assert_eq!(a.state.g.to_bits(), b.state.g.to_bits());
    assert_eq!(a.accepted_steps, b.accepted_steps);
}

#[test]
fn step_budget_failure_carries_diagnostics() {
    let field = Field::new(weak_pulse()).unwrap();
    let settings = SolverSettings {
        max_steps: 50,
        ..SolverSettings::default()
    };
    let err = solve_mode(&ModeKinematics::longitudinal(0.25), &field, &settings).unwrap_err();
    match err {
        Error::Integration { p3, t, .. } => {
            assert_eq!(p3, 0.25);
            assert!(t > 0.0);
        }
        other => panic!("unexpected {other}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn occupation_respects_pauli_bound(p3 in -1.5f64..1.5, e0 in 0.05f64..1.0, omega_c in 0.3f64..2.5) {
        let field = Field::new(FieldConfig::PulseTrain(PulseTrain {
            e0,
            omega_c,
            tau: 6.0,
            delay: 25.0,
            pulses: 2,
        }))
        .unwrap();
        let sol = integrate_mode(&ModeKinematics::longitudinal(p3), &field, &SolverSettings::default()).unwrap();
        prop_assert!(sol.f_min >= -PAULI_UNDERSHOOT);
        prop_assert!(sol.f_max <= 1.0);
        prop_assert!(sol.state.f >= -PAULI_UNDERSHOOT && sol.state.f <= 1.0);
    }

    #[test]
    fn bloch_vector_norm_is_conserved(p3 in -1.0f64..1.0, e0 in 0.05f64..0.5) {
        // (1 - 2f, g, w) evolves by a rotation, so its length stays 1
        let field = Field::new(FieldConfig::PulseTrain(PulseTrain {
            e0,
            omega_c: 0.8,
            tau: 6.0,
            delay: 25.0,
            pulses: 1,
        }))
        .unwrap();
        let settings = SolverSettings::with_tolerances(1e-10, 1e-14);
        let sol = integrate_mode(&ModeKinematics::longitudinal(p3), &field, &settings).unwrap();
        prop_assert!((sol.state.bloch_norm() - 1.0).abs() < 1e-6);
    }
}
