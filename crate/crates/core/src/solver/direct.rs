//! Direct quadrature of the non-Markovian kinetic equation
//!
//! ```text
//! f'(t) = q(t)/2 ∫_{t0}^{t} q(t') [1 - 2f(t')] cos 2Θ(t', t) dt',   Θ(t', t) = ∫_{t'}^{t} ω
//! ```
//!
//! The memory integral is re-evaluated over the stored history at every grid
//! point (quadratic cost) with fourth-order Gregory end corrections, and `f`
//! is advanced with a fourth-order Adams–Moulton corrector. The grid is
//! uniform between the field's derivative kinks, which sit on grid nodes;
//! each smooth segment gets its own end corrections and the multistep
//! history restarts there. Intended for short spans only.

use super::ModeKinematics;
use crate::error::{Error, Result};
use crate::fields::Field;
use crate::quad;

/// Largest grid accepted by [`solve_mode_direct`].
pub const MAX_DIRECT_STEPS: usize = 200_000;

/// Samples per period of the fastest phase oscillation `2ω` required of `grid_step`.
const RESOLUTION: f64 = 20.0;

/// Fewest steps per smooth segment.
const MIN_SEGMENT_STEPS: usize = 8;

/// Final occupation from direct quadrature of the memory integral.
///
/// `grid_step` is an upper bound on the spacing; each smooth segment of the
/// span is divided uniformly.
pub fn solve_mode_direct(kin: &ModeKinematics, field: &Field, grid_step: f64) -> Result<f64> {
    let (t0, t1) = field.span();
    if field.config().is_zero() || t1 <= t0 {
        return Ok(0.0);
    }
    if !(grid_step > 0.0 && grid_step.is_finite()) {
        return Err(Error::config("grid_step", format!("must be positive, got {grid_step}")));
    }
    let omega_max = max_energy(kin, field);
    let limit = std::f64::consts::PI / omega_max / RESOLUTION;
    if grid_step > limit {
        return Err(Error::config(
            "grid_step",
            format!("{grid_step} does not resolve the phase oscillation; need <= {limit:.6}"),
        ));
    }

    let mut edges = vec![t0];
    edges.extend(field.config().breakpoints());
    edges.push(t1);
    let segments: Vec<Segment> = edges
        .windows(2)
        .map(|w| {
            let steps = (((w[1] - w[0]) / grid_step).ceil() as usize).max(MIN_SEGMENT_STEPS);
            Segment {
                start: w[0],
                end: w[1],
                h: (w[1] - w[0]) / steps as f64,
                steps,
                first: 0,
            }
        })
        .collect();
    let total: usize = segments.iter().map(|s| s.steps).sum();
    if total > MAX_DIRECT_STEPS {
        return Err(Error::Resource(format!(
            "direct quadrature needs {total} grid steps (limit {MAX_DIRECT_STEPS})"
        )));
    }
    let mut segments = segments;
    let mut times = vec![t0];
    for seg in &mut segments {
        seg.first = times.len() - 1;
        times.extend((1..=seg.steps).map(|i| seg.start + i as f64 * seg.h));
        *times.last_mut().expect("non-empty") = seg.end;
    }
    let n = times.len();

    let eps = kin.eps_perp();
    let omega_at = |t: f64| kin.energy(field.vector_potential(t));
    let mut q = Vec::with_capacity(n);
    let mut cos2 = Vec::with_capacity(n);
    let mut sin2 = Vec::with_capacity(n);
    let mut phase = 0.0;
    for k in 0..n {
        let t = times[k];
        if k > 0 {
            phase += quad::gauss_legendre_8(omega_at, times[k - 1], t);
        }
        let omega = omega_at(t);
        q.push(field.value(t) * eps / (omega * omega));
        let (s, c) = (2.0 * phase).sin_cos();
        cos2.push(c);
        sin2.push(s);
    }

    // source[j] = q_j (1 - 2 f_j), the history the kernel acts on
    let mut source = vec![0.0; n];
    let mut f = vec![0.0; n];
    let mut fdot = vec![0.0; n];
    source[0] = q[0];
    // quadrature weight of each node of the completed segments
    let mut closed_weight = vec![0.0; n];

    for seg in &segments {
        let base = seg.first;
        let h = seg.h;
        for local in 1..=seg.steps {
            let k = base + local;
            let (ck, sk) = (cos2[k], sin2[k]);
            let kernel = |j: usize| source[j] * (ck * cos2[j] + sk * sin2[j]);
            let closed: f64 = (0..=base).map(|j| closed_weight[j] * kernel(j)).sum();
            let weights = GregoryWeights::new(local);
            // open segment: unit weights on base..k, corrected near both ends
            let mut open: f64 = (base..k).map(kernel).sum();
            for j in weights.corrected(local) {
                open += (weights.get(j) - 1.0) * kernel(base + j);
            }
            let history = closed + h * open;
            let w_end = h * weights.get(local);
            let explicit = adams_explicit_part(&fdot[base..], local, h);
            let ac = adams_implicit_coefficient(local);
            // f_k = f_{k-1} + explicit + ac h fdot_k, fdot_k = q_k/2 (history + w_end q_k (1 - 2 f_k))
            let mut fk = f[k - 1];
            for _ in 0..4 {
                let d = 0.5 * q[k] * (history + w_end * q[k] * (1.0 - 2.0 * fk));
                let next = f[k - 1] + explicit + ac * h * d;
                let done = next == fk;
                fk = next;
                if done {
                    break;
                }
            }
            f[k] = fk;
            source[k] = q[k] * (1.0 - 2.0 * fk);
            fdot[k] = 0.5 * q[k] * (history + w_end * source[k]);
        }
        let weights = GregoryWeights::new(seg.steps);
        // the last node is shared with the next segment, so weights accumulate
        for j in 0..=seg.steps {
            closed_weight[base + j] += h * weights.get(j);
        }
    }
    Ok(f[n - 1])
}

/// Uniformly divided stretch of the span between derivative kinks.
struct Segment {
    start: f64,
    end: f64,
    h: f64,
    steps: usize,
    /// Index of the segment's first node.
    first: usize,
}

fn max_energy(kin: &ModeKinematics, field: &Field) -> f64 {
    let a_max = field
        .table()
        .map(|t| {
            let n = t.len();
            let (t0, _) = field.span();
            (0..n)
                .map(|i| field.vector_potential(t0 + i as f64 * t.step()).abs())
                .fold(0.0, f64::max)
        })
        .unwrap_or(0.0);
    let p = kin.p3.abs() + a_max;
    (kin.eps_perp().powi(2) + p * p).sqrt()
}

/// Unit-spacing weights of a composite rule over points `0..=k`.
struct GregoryWeights {
    k: usize,
}

impl GregoryWeights {
    fn new(k: usize) -> Self {
        GregoryWeights { k }
    }

    /// Indices below `upto` whose weight differs from 1.
    fn corrected(&self, upto: usize) -> impl Iterator<Item = usize> {
        let k = self.k;
        let (head, tail) = if k < 5 { (k + 1, k + 1) } else { (3, k - 2) };
        (0..head.min(upto)).chain(tail.max(head)..upto)
    }

    #[inline]
    fn get(&self, j: usize) -> f64 {
        const END: [f64; 3] = [3.0 / 8.0, 7.0 / 6.0, 23.0 / 24.0];
        let k = self.k;
        match k {
            0 => 0.0,
            1 => 0.5,
            2 => [1.0 / 3.0, 4.0 / 3.0, 1.0 / 3.0][j],
            3 => [3.0 / 8.0, 9.0 / 8.0, 9.0 / 8.0, 3.0 / 8.0][j],
            4 => [14.0 / 45.0, 64.0 / 45.0, 24.0 / 45.0, 64.0 / 45.0, 14.0 / 45.0][j],
            _ => {
                let from_end = j.min(k - j);
                if from_end < 3 {
                    END[from_end]
                } else {
                    1.0
                }
            }
        }
    }
}

/// Implicit coefficient of the Adams–Moulton step ending at `k`.
fn adams_implicit_coefficient(k: usize) -> f64 {
    match k {
        1 => 0.5,
        2 => 5.0 / 12.0,
        _ => 9.0 / 24.0,
    }
}

fn adams_explicit_part(fdot: &[f64], k: usize, h: f64) -> f64 {
    match k {
        1 => h * 0.5 * fdot[0],
        2 => h * (8.0 * fdot[1] - fdot[0]) / 12.0,
        _ => h * (19.0 * fdot[k - 1] - 5.0 * fdot[k - 2] + fdot[k - 3]) / 24.0,
    }
}
