use super::FieldConfig;
use crate::error::{Error, Result};
use crate::quad;

/// Table spacing in units of `1 / frequency_scale`. Gives a cubic Hermite
/// interpolation error around `3e-11` of the potential amplitude.
const SPACING: f64 = 0.01;

/// Cumulative table of `eA(t) = -int_{t0}^{t} eE` on a uniform grid.
///
/// Nodes store `A` and the exact derivative `-E`; lookups use cubic Hermite
/// interpolation, so the table is C1 and consistent with the analytic field.
#[derive(Debug, Clone)]
pub struct PotentialTable {
    t0: f64,
    step: f64,
    inv_step: f64,
    /// `(A, dA/dt)` per node.
    nodes: Vec<[f64; 2]>,
}

impl PotentialTable {
    pub fn build(config: &FieldConfig) -> Result<Self> {
        let (t0, t1) = config.span();
        let scale = config.frequency_scale();
        if !(t1 > t0) || !(scale > 0.0) {
            return Err(Error::Numerical(format!(
                "cannot tabulate potential on span [{t0}, {t1}]"
            )));
        }
        let cells = (((t1 - t0) * scale / SPACING).ceil() as usize).max(2);
        let step = (t1 - t0) / cells as f64;
        let amplitude = peak_amplitude(config);
        // node times carry a rounding error of about eps * t, which shifts
        // the integrand by up to eps * t * scale relative to its amplitude
        let t_max = t0.abs().max(t1.abs());
        let abs_tol = amplitude * step * (1e-15 + 8.0 * f64::EPSILON * scale * t_max);

        let field = |t: f64| config.value(t);
        let mut nodes = Vec::with_capacity(cells + 1);
        let mut a = 0.0;
        // Kahan compensation for the running sum
        let mut carry = 0.0;
        nodes.push([0.0, -field(t0)]);
        for i in 0..cells {
            let lo = t0 + i as f64 * step;
            let hi = t0 + (i + 1) as f64 * step;
            let inc = -quad::adaptive(&field, lo, hi, abs_tol, 1e-14).map_err(|e| {
                Error::Numerical(format!("vector potential table, cell [{lo}, {hi}]: {e}"))
            })?;
            let y = inc - carry;
            let sum = a + y;
            carry = (sum - a) - y;
            a = sum;
            nodes.push([a, -field(hi)]);
        }
        Ok(PotentialTable {
            t0,
            step,
            inv_step: 1.0 / step,
            nodes,
        })
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn end(&self) -> f64 {
        self.t0 + (self.nodes.len() - 1) as f64 * self.step
    }

    #[inline]
    fn locate(&self, t: f64) -> (usize, f64) {
        let x = ((t - self.t0) * self.inv_step).max(0.0);
        let last = self.nodes.len() - 2;
        let i = (x as usize).min(last);
        (i, (x - i as f64).min(1.0))
    }

    /// Interpolated `eA(t)`; clamped to the end values outside the span.
    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        let (i, s) = self.locate(t);
        self.hermite(i, s)
    }

    #[inline]
    fn hermite(&self, i: usize, s: f64) -> f64 {
        let [a0, d0] = self.nodes[i];
        let [a1, d1] = self.nodes[i + 1];
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * a0 + h01 * a1 + self.step * (h10 * d0 + h11 * d1)
    }

    /// `(int A dt, int A^2 dt)` over `[a, b]`, exact for the interpolant.
    pub fn moments(&self, a: f64, b: f64) -> (f64, f64) {
        let (a, b) = (a.max(self.t0), b.min(self.end()));
        if b <= a {
            return (0.0, 0.0);
        }
        let first = ((a - self.t0) * self.inv_step).floor() as usize;
        let last = (((b - self.t0) * self.inv_step).ceil() as usize).min(self.nodes.len() - 1);
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        for i in first..last {
            let lo = (self.t0 + i as f64 * self.step).max(a);
            let hi = (self.t0 + (i + 1) as f64 * self.step).min(b);
            if hi <= lo {
                continue;
            }
            let local = |t: f64| {
                let s = ((t - self.t0) * self.inv_step - i as f64).clamp(0.0, 1.0);
                self.hermite(i, s)
            };
            m1 += quad::gauss_legendre_8(local, lo, hi);
            m2 += quad::gauss_legendre_8(|t| local(t).powi(2), lo, hi);
        }
        (m1, m2)
    }
}

/// Rough upper bound on `|E|`, used only to scale absolute tolerances.
fn peak_amplitude(config: &FieldConfig) -> f64 {
    match config {
        FieldConfig::Modulated(m) => m.e0,
        FieldConfig::PulseTrain(p) => p.e0 * 1.0f64.max(2.0 * p.tau / p.delay),
        FieldConfig::Superposition(members) => members.iter().map(peak_amplitude).sum(),
    }
}
