//! Adaptive embedded Runge–Kutta integration of small fixed-size systems.
//!
//! Two pairs are available: Dormand–Prince 5(4) with PI step control and
//! Dormand–Prince 8(5,3). Both use the Hairer–Wanner step-size controller.

pub type State = [f64; 3];

/// Embedded Runge–Kutta pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Method {
    /// Dormand–Prince 5(4), FSAL, PI-controlled.
    #[default]
    DormandPrince54,
    /// Dormand–Prince 8(5,3).
    DormandPrince853,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::DormandPrince54 => "dopri5",
            Method::DormandPrince853 => "dop853",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "dopri5" | "rk45" => Some(Method::DormandPrince54),
            "dop853" => Some(Method::DormandPrince853),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub rel: f64,
    pub abs: f64,
    pub max_step: f64,
    pub max_steps: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Failure {
    StepUnderflow { t: f64, y: State, h: f64 },
    StepBudget { t: f64, y: State },
    NonFinite { t: f64, y: State },
    /// Raised by the observer.
    Rejected { t: f64, y: State, reason: String },
}

/// Integrates `y' = rhs(t, y)` from `t0` to `t1`.
///
/// `observe` sees every accepted step and may abort the integration.
pub fn integrate<F, O>(
    method: Method,
    mut rhs: F,
    t0: f64,
    t1: f64,
    y0: State,
    tol: &Tolerances,
    mut observe: O,
) -> Result<(State, Stats), Failure>
where
    F: FnMut(f64, &State) -> State,
    O: FnMut(f64, &State) -> Result<(), String>,
{
    let mut stats = Stats::default();
    if t1 <= t0 {
        return Ok((y0, stats));
    }
    let controller = match method {
        Method::DormandPrince54 => Controller::new(5.0, 0.04),
        Method::DormandPrince853 => Controller::new(8.0, 0.0),
    };
    let mut t = t0;
    let mut y = y0;
    let mut k1 = rhs(t, &y);
    stats.evaluations += 1;
    let mut h = initial_step(t0, t1, &y, &k1, tol);
    let mut err_old = 1e-4;
    let mut last_rejected = false;

    while t < t1 {
        if stats.accepted + stats.rejected >= tol.max_steps {
            return Err(Failure::StepBudget { t, y });
        }
        let mut last = false;
        if t + h >= t1 || t + 1.01 * h >= t1 {
            h = t1 - t;
            last = true;
        }
        if h <= 1e-13 * t.abs().max(1.0) {
            return Err(Failure::StepUnderflow { t, y, h });
        }

        let (y_new, k_new, err) = match method {
            Method::DormandPrince54 => dopri5_step(&mut rhs, t, &y, &k1, h, tol, &mut stats),
            Method::DormandPrince853 => dop853_step(&mut rhs, t, &y, &k1, h, tol, &mut stats),
        };
        if !err.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
            // treat as a huge error and retry smaller, unless already tiny
            stats.rejected += 1;
            if h <= 1e-10 * t.abs().max(1.0) {
                return Err(Failure::NonFinite { t, y });
            }
            h *= 0.1;
            last_rejected = true;
            continue;
        }

        if err <= 1.0 {
            let t_new = if last { t1 } else { t + h };
            observe(t_new, &y_new).map_err(|reason| Failure::Rejected {
                t: t_new,
                y: y_new,
                reason,
            })?;
            stats.accepted += 1;
            t = t_new;
            y = y_new;
            k1 = k_new;
            let mut h_new = h * controller.accept_factor(err, err_old);
            err_old = err.max(1e-4);
            if last_rejected {
                h_new = h_new.min(h);
            }
            last_rejected = false;
            h = h_new.min(tol.max_step);
        } else {
            stats.rejected += 1;
            h *= controller.reject_factor(err);
            last_rejected = true;
        }
    }
    Ok((y, stats))
}

#[derive(Debug, Clone, Copy)]
struct Controller {
    order: f64,
    alpha: f64,
    beta: f64,
}

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 10.0;

impl Controller {
    fn new(order: f64, beta: f64) -> Self {
        Controller {
            order,
            alpha: 1.0 / order - 0.75 * beta,
            beta,
        }
    }

    fn accept_factor(&self, err: f64, err_old: f64) -> f64 {
        if err == 0.0 {
            return MAX_FACTOR;
        }
        let fac = SAFETY * err.powf(-self.alpha) * err_old.powf(self.beta);
        fac.clamp(MIN_FACTOR, MAX_FACTOR)
    }

    fn reject_factor(&self, err: f64) -> f64 {
        (SAFETY * err.powf(-1.0 / self.order)).clamp(MIN_FACTOR, 1.0)
    }
}

fn initial_step(t0: f64, t1: f64, y: &State, f: &State, tol: &Tolerances) -> f64 {
    let scale = |i: usize| tol.abs + tol.rel * y[i].abs();
    let d0 = rms(|i| y[i] / scale(i));
    let d1 = rms(|i| f[i] / scale(i));
    let h = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    h.max(1e-6).min(tol.max_step).min(t1 - t0)
}

#[inline]
fn rms(f: impl Fn(usize) -> f64) -> f64 {
    let s: f64 = (0..3).map(|i| f(i).powi(2)).sum();
    (s / 3.0).sqrt()
}

#[inline]
fn axpy(y: &State, h: f64, terms: &[(f64, &State)]) -> State {
    let mut out = *y;
    for i in 0..3 {
        let mut acc = 0.0;
        for &(c, k) in terms {
            acc += c * k[i];
        }
        out[i] += h * acc;
    }
    out
}

#[inline]
fn error_scale(tol: &Tolerances, y: &State, y_new: &State, i: usize) -> f64 {
    tol.abs + tol.rel * y[i].abs().max(y_new[i].abs())
}

// Dormand–Prince 5(4) tableau.
const DP_C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const DP_A21: f64 = 1.0 / 5.0;
const DP_A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const DP_A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const DP_A5: [f64; 4] = [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0];
const DP_A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const DP_B: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
// b - b_hat
const DP_E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

fn dopri5_step<F: FnMut(f64, &State) -> State>(
    rhs: &mut F,
    t: f64,
    y: &State,
    k1: &State,
    h: f64,
    tol: &Tolerances,
    stats: &mut Stats,
) -> (State, State, f64) {
    let k2 = rhs(t + DP_C[1] * h, &axpy(y, h, &[(DP_A21, k1)]));
    let k3 = rhs(t + DP_C[2] * h, &axpy(y, h, &[(DP_A3[0], k1), (DP_A3[1], &k2)]));
    let k4 = rhs(
        t + DP_C[3] * h,
        &axpy(y, h, &[(DP_A4[0], k1), (DP_A4[1], &k2), (DP_A4[2], &k3)]),
    );
    let k5 = rhs(
        t + DP_C[4] * h,
        &axpy(
            y,
            h,
            &[(DP_A5[0], k1), (DP_A5[1], &k2), (DP_A5[2], &k3), (DP_A5[3], &k4)],
        ),
    );
    let k6 = rhs(
        t + h,
        &axpy(
            y,
            h,
            &[
                (DP_A6[0], k1),
                (DP_A6[1], &k2),
                (DP_A6[2], &k3),
                (DP_A6[3], &k4),
                (DP_A6[4], &k5),
            ],
        ),
    );
    let y_new = axpy(
        y,
        h,
        &[
            (DP_B[0], k1),
            (DP_B[2], &k3),
            (DP_B[3], &k4),
            (DP_B[4], &k5),
            (DP_B[5], &k6),
        ],
    );
    let k7 = rhs(t + h, &y_new);
    stats.evaluations += 6;

    let mut sum = 0.0;
    for i in 0..3 {
        let e = h
            * (DP_E[0] * k1[i]
                + DP_E[2] * k3[i]
                + DP_E[3] * k4[i]
                + DP_E[4] * k5[i]
                + DP_E[5] * k6[i]
                + DP_E[6] * k7[i]);
        sum += (e / error_scale(tol, y, &y_new, i)).powi(2);
    }
    (y_new, k7, (sum / 3.0).sqrt())
}

// Dormand–Prince 8(5,3) tableau (Hairer, Norsett & Wanner).
const D8_C: [f64; 12] = [
    0.0,
    0.05260015195876773,
    0.0789002279381516,
    0.1183503419072274,
    0.2816496580927726,
    0.3333333333333333,
    0.25,
    0.3076923076923077,
    0.6512820512820513,
    0.6,
    0.8571428571428571,
    1.0,
];

const D8_A: [&[f64]; 12] = [
    &[],
    &[0.05260015195876773],
    &[0.0197250569845379, 0.0591751709536137],
    &[0.02958758547680685, 0.0, 0.08876275643042054],
    &[0.2413651341592667, 0.0, -0.8845494793282861, 0.924834003261792],
    &[0.037037037037037035, 0.0, 0.0, 0.17082860872947386, 0.12546768756682242],
    &[0.037109375, 0.0, 0.0, 0.17025221101954405, 0.06021653898045596, -0.017578125],
    &[
        0.03709200011850479,
        0.0,
        0.0,
        0.17038392571223998,
        0.10726203044637328,
        -0.015319437748624402,
        0.008273789163814023,
    ],
    &[
        0.6241109587160757,
        0.0,
        0.0,
        -3.3608926294469414,
        -0.868219346841726,
        27.59209969944671,
        20.154067550477894,
        -43.48988418106996,
    ],
    &[
        0.47766253643826434,
        0.0,
        0.0,
        -2.4881146199716677,
        -0.590290826836843,
        21.230051448181193,
        15.279233632882423,
        -33.28821096898486,
        -0.020331201708508627,
    ],
    &[
        -0.9371424300859873,
        0.0,
        0.0,
        5.186372428844064,
        1.0914373489967295,
        -8.149787010746927,
        -18.52006565999696,
        22.739487099350505,
        2.4936055526796523,
        -3.0467644718982196,
    ],
    &[
        2.273310147516538,
        0.0,
        0.0,
        -10.53449546673725,
        -2.0008720582248625,
        -17.9589318631188,
        27.94888452941996,
        -2.8589982771350235,
        -8.87285693353063,
        12.360567175794303,
        0.6433927460157636,
    ],
];

const D8_B: [f64; 12] = [
    0.054293734116568765,
    0.0,
    0.0,
    0.0,
    0.0,
    4.450312892752409,
    1.8915178993145003,
    -5.801203960010585,
    0.3111643669578199,
    -0.1521609496625161,
    0.20136540080403034,
    0.04471061572777259,
];

const D8_E3: [f64; 12] = [
    -0.18980075407240762,
    0.0,
    0.0,
    0.0,
    0.0,
    4.450312892752409,
    1.8915178993145003,
    -5.801203960010585,
    -0.4226823213237919,
    -0.1521609496625161,
    0.20136540080403034,
    0.02265179219836082,
];

const D8_E5: [f64; 12] = [
    0.01312004499419488,
    0.0,
    0.0,
    0.0,
    0.0,
    -1.2251564463762044,
    -0.4957589496572502,
    1.6643771824549864,
    -0.35032884874997366,
    0.3341791187130175,
    0.08192320648511571,
    -0.022355307863886294,
];

fn dop853_step<F: FnMut(f64, &State) -> State>(
    rhs: &mut F,
    t: f64,
    y: &State,
    k1: &State,
    h: f64,
    tol: &Tolerances,
    stats: &mut Stats,
) -> (State, State, f64) {
    let mut k = [[0.0; 3]; 12];
    k[0] = *k1;
    for s in 1..12 {
        let mut ys = *y;
        for i in 0..3 {
            let mut acc = 0.0;
            for (j, a) in D8_A[s].iter().enumerate() {
                acc += a * k[j][i];
            }
            ys[i] += h * acc;
        }
        k[s] = rhs(t + D8_C[s] * h, &ys);
    }
    let mut y_new = *y;
    for i in 0..3 {
        let mut acc = 0.0;
        for s in 0..12 {
            acc += D8_B[s] * k[s][i];
        }
        y_new[i] += h * acc;
    }
    let k_new = rhs(t + h, &y_new);
    stats.evaluations += 12;

    let mut err5 = 0.0;
    let mut err3 = 0.0;
    for i in 0..3 {
        let sc = error_scale(tol, y, &y_new, i);
        let mut e5 = 0.0;
        let mut e3 = 0.0;
        for s in 0..12 {
            e5 += D8_E5[s] * k[s][i];
            e3 += D8_E3[s] * k[s][i];
        }
        err5 += (e5 / sc).powi(2);
        err3 += (e3 / sc).powi(2);
    }
    let err = if err5 == 0.0 && err3 == 0.0 {
        0.0
    } else {
        h.abs() * err5 / (3.0 * (err5 + 0.01 * err3)).sqrt()
    };
    (y_new, k_new, err)
}
