//! Momentum spectra and the quantities read off them.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fields::Field;
use crate::io::fingerprint::Fingerprint;
use crate::solver::{solve_mode, ModeKinematics, SolverSettings};

/// Default prominence threshold for [`find_peaks`], as a fraction of the maximum.
pub const DEFAULT_MIN_PROMINENCE: f64 = 0.05;

/// Uniform grid of canonical longitudinal momenta (transverse momentum zero).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentumGrid {
    pub p_min: f64,
    pub p_max: f64,
    pub n_points: usize,
}

impl MomentumGrid {
    pub fn new(p_min: f64, p_max: f64, n_points: usize) -> Result<Self> {
        let grid = MomentumGrid {
            p_min,
            p_max,
            n_points,
        };
        grid.validate()?;
        Ok(grid)
    }

    /// Grid symmetric about zero.
    pub fn symmetric(p_max: f64, n_points: usize) -> Result<Self> {
        Self::new(-p_max, p_max, n_points)
    }

    /// `[-2, 2]`, 401 nodes: the default for spectra.
    pub fn spectrum_default() -> Self {
        MomentumGrid {
            p_min: -2.0,
            p_max: 2.0,
            n_points: 401,
        }
    }

    /// `[-1.5, 1.5]`, 301 nodes: the default for density scans.
    pub fn density_default() -> Self {
        MomentumGrid {
            p_min: -1.5,
            p_max: 1.5,
            n_points: 301,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_points < 2 {
            return Err(Error::config("n_points", format!("need at least 2 nodes, got {}", self.n_points)));
        }
        if !(self.p_min.is_finite() && self.p_max.is_finite() && self.p_min < self.p_max) {
            return Err(Error::config(
                "p_min",
                format!("need p_min < p_max, got [{}, {}]", self.p_min, self.p_max),
            ));
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        (self.p_max - self.p_min) / (self.n_points - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i + 1 == self.n_points {
            self.p_max
        } else {
            self.p_min + i as f64 * self.spacing()
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(|i| self.node(i))
    }

    /// Same range with `2 (n - 1) + 1` nodes, so every old node is kept.
    pub fn refined(&self) -> Self {
        MomentumGrid {
            n_points: 2 * (self.n_points - 1) + 1,
            ..*self
        }
    }
}

/// Final occupation `f(P3, t_end)` sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub grid: MomentumGrid,
    pub values: Vec<f64>,
    /// Hash of the field, grid and solver settings that produced the values.
    pub fingerprint: String,
}

impl Spectrum {
    pub fn momenta(&self) -> impl Iterator<Item = f64> + '_ {
        self.grid.nodes()
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// `|f(p) - f(-p)| / max(|f(p)|, |f(-p)|)` at node `i`, for grids symmetric about zero.
    pub fn mirror_deviation(&self, i: usize) -> f64 {
        let a = self.values[i];
        let b = self.values[self.values.len() - 1 - i];
        let scale = a.abs().max(b.abs());
        if scale == 0.0 {
            0.0
        } else {
            (a - b).abs() / scale
        }
    }

    /// Index of the node closest to momentum `p`.
    pub fn nearest_node(&self, p: f64) -> usize {
        let x = (p - self.grid.p_min) / self.grid.spacing();
        (x.round().max(0.0) as usize).min(self.grid.n_points - 1)
    }
}

/// Spectrum fingerprint from everything that determines its values.
pub fn spectrum_fingerprint(field: &Field, grid: &MomentumGrid, settings: &SolverSettings) -> String {
    let mut fp = Fingerprint::new("spectrum");
    fp.field_config(field.config());
    fp.grid(grid);
    fp.settings(settings);
    fp.finish()
}

/// Solves every grid mode in the ambient rayon pool, preserving node order.
///
/// Each mode is independent, so the values do not depend on the number of
/// worker threads. The first failing node (in grid order) is reported.
pub fn momentum_spectrum(field: &Field, grid: &MomentumGrid, settings: &SolverSettings) -> Result<Spectrum> {
    grid.validate()?;
    settings.validate()?;
    let results: Vec<Result<f64>> = (0..grid.n_points)
        .into_par_iter()
        .map(|i| solve_mode(&ModeKinematics::longitudinal(grid.node(i)), field, settings))
        .collect();
    let values = results.into_iter().collect::<Result<Vec<f64>>>()?;
    Ok(Spectrum {
        grid: *grid,
        values,
        fingerprint: spectrum_fingerprint(field, grid, settings),
    })
}

/// Runs `f` on a dedicated pool of `workers` threads (`None`: rayon's default).
pub fn with_workers<R: Send>(workers: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    match workers {
        None => Ok(f()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::Resource(format!("cannot start {n} workers: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Reduced 1D density `n = 2 ∫ dp∥/(2π) f(p∥)` by the trapezoidal rule.
pub fn number_density(spec: &Spectrum) -> Result<f64> {
    if let Some((i, v)) = spec.values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::Data(format!(
            "non-finite spectrum value {v} at p = {}",
            spec.grid.node(i)
        )));
    }
    if spec.values.len() != spec.grid.n_points {
        return Err(Error::Data(format!(
            "spectrum has {} values for {} grid nodes",
            spec.values.len(),
            spec.grid.n_points
        )));
    }
    let n = spec.values.len();
    let interior: f64 = spec.values.iter().sum();
    let trapezoid = interior - 0.5 * (spec.values[0] + spec.values[n - 1]);
    Ok(2.0 * spec.grid.spacing() * trapezoid / (2.0 * PI))
}

/// A local maximum of a spectrum, refined by parabolic interpolation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub momentum: f64,
    pub value: f64,
    pub prominence: f64,
    pub node: usize,
}

/// Interior local maxima whose prominence is at least `min_prominence * max`.
///
/// Sorted by descending value; equal values are ordered by momentum.
pub fn find_peaks(spec: &Spectrum, min_prominence: f64) -> Result<Vec<Peak>> {
    let y = &spec.values;
    let n = y.len();
    if n < 3 {
        return Err(Error::Data(format!("peak search needs at least 3 nodes, got {n}")));
    }
    let threshold = min_prominence * spec.max_value();
    let dp = spec.grid.spacing();
    let mut peaks = Vec::new();
    for i in 1..n - 1 {
        if !(y[i] > y[i - 1] && y[i] >= y[i + 1]) {
            continue;
        }
        let prominence = prominence(y, i);
        if prominence < threshold || prominence <= 0.0 {
            continue;
        }
        let (shift, value) = parabolic_vertex(y[i - 1], y[i], y[i + 1]);
        peaks.push(Peak {
            momentum: spec.grid.node(i) + shift * dp,
            value,
            prominence,
            node: i,
        });
    }
    peaks.sort_by(|a, b| {
        b.value
            .total_cmp(&a.value)
            .then(a.momentum.total_cmp(&b.momentum))
    });
    Ok(peaks)
}

fn prominence(y: &[f64], i: usize) -> f64 {
    let peak = y[i];
    let mut left_min = peak;
    for &v in y[..i].iter().rev() {
        if v > peak {
            break;
        }
        left_min = left_min.min(v);
    }
    let mut right_min = peak;
    for &v in &y[i + 1..] {
        if v > peak {
            break;
        }
        right_min = right_min.min(v);
    }
    peak - left_min.max(right_min)
}

/// Offset (in nodes) and height of the parabola through three samples.
fn parabolic_vertex(left: f64, mid: f64, right: f64) -> (f64, f64) {
    let curvature = left - 2.0 * mid + right;
    if curvature >= 0.0 {
        return (0.0, mid);
    }
    let shift = (0.5 * (left - right) / curvature).clamp(-0.5, 0.5);
    (shift, mid - 0.25 * (left - right) * shift)
}

/// Photon counts drawn from the carrier and the two sidebands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ResonanceCombo {
    pub k_c: u32,
    pub k_plus: u32,
    pub k_minus: u32,
}

impl ResonanceCombo {
    pub fn new(k_c: u32, k_plus: u32, k_minus: u32) -> Result<Self> {
        if k_c + k_plus + k_minus == 0 {
            return Err(Error::Data("a resonance needs at least one photon".into()));
        }
        Ok(ResonanceCombo { k_c, k_plus, k_minus })
    }

    pub fn photons(&self) -> u32 {
        self.k_c + self.k_plus + self.k_minus
    }

    /// Absorbed energy `k_c w_c + k_+ (w_c + w_m) + k_- (w_c - w_m)`.
    pub fn energy(&self, omega_c: f64, omega_m: f64) -> f64 {
        self.k_c as f64 * omega_c
            + self.k_plus as f64 * (omega_c + omega_m)
            + self.k_minus as f64 * (omega_c - omega_m)
    }

    /// Every combination with between 1 and `max_photons` photons, ordered
    /// by photon count, then by `k_c`, `k_plus` descending.
    pub fn all_up_to(max_photons: u32) -> Vec<Self> {
        let mut out = Vec::new();
        for total in 1..=max_photons {
            for k_c in (0..=total).rev() {
                for k_plus in (0..=total - k_c).rev() {
                    out.push(ResonanceCombo {
                        k_c,
                        k_plus,
                        k_minus: total - k_c - k_plus,
                    });
                }
            }
        }
        out
    }
}

/// Relative slack under which an energy just short of `2 m*` counts as at threshold.
const THRESHOLD_SLACK: f64 = 1e-12;

/// Momentum `p∥` at which `combo` is resonant, `Ω = 2 sqrt(p∥² + m*²)`.
///
/// `None` when the combination is below the pair threshold `2 m*`.
pub fn resonance_momentum(combo: &ResonanceCombo, omega_c: f64, omega_m: f64, m_star: f64) -> Option<f64> {
    let half = 0.5 * combo.energy(omega_c, omega_m);
    let gap = half * half - m_star * m_star;
    if gap >= 0.0 {
        Some(gap.sqrt())
    } else if gap >= -THRESHOLD_SLACK * m_star * m_star {
        Some(0.0)
    } else {
        None
    }
}

/// Least-squares power law `n = a N^b` fitted in log–log space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub prefactor: f64,
    /// RMS residual of `ln n`.
    pub residual: f64,
}

pub fn fit_power_law(points: &[(f64, f64)]) -> Result<PowerLawFit> {
    if points.len() < 3 {
        return Err(Error::Data(format!("power-law fit needs at least 3 points, got {}", points.len())));
    }
    if let Some(&(x, y)) = points.iter().find(|(x, y)| !(*x > 0.0 && *y > 0.0 && x.is_finite() && y.is_finite())) {
        return Err(Error::Data(format!("power-law fit needs positive finite data, got ({x}, {y})")));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Data("power-law fit needs at least two distinct abscissae".into()));
    }
    let exponent = sxy / sxx;
    let intercept = my - exponent * mx;
    let ss: f64 = logs
        .iter()
        .map(|p| (p.1 - intercept - exponent * p.0).powi(2))
        .sum();
    Ok(PowerLawFit {
        exponent,
        prefactor: intercept.exp(),
        residual: (ss / n).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spectrum(grid: MomentumGrid, f: impl Fn(f64) -> f64) -> Spectrum {
        Spectrum {
            values: grid.nodes().map(f).collect(),
            grid,
            fingerprint: String::new(),
        }
    }

    #[test]
    fn grid_nodes() {
        let g = MomentumGrid::spectrum_default();
        assert_eq!(g.node(0), -2.0);
        assert_eq!(g.node(400), 2.0);
        assert!((g.spacing() - 0.01).abs() < 1e-15);
        assert!(g.node(200).abs() < 1e-15);
        assert!(MomentumGrid::new(1.0, 1.0, 5).is_err());
        assert!(MomentumGrid::new(0.0, 1.0, 1).is_err());
    }

    #[test]
    fn density_of_zero_and_constant() {
        let g = MomentumGrid::symmetric(1.5, 301).unwrap();
        assert_eq!(number_density(&spectrum(g, |_| 0.0)).unwrap(), 0.0);
        let n = number_density(&spectrum(g, |_| 0.25)).unwrap();
        let exact = 2.0 * 0.25 * 3.0 / (2.0 * PI);
        assert!((n - exact).abs() < 1e-14);
    }

    #[test]
    fn density_rejects_nan() {
        let g = MomentumGrid::symmetric(1.0, 11).unwrap();
        let mut s = spectrum(g, |_| 0.1);
        s.values[3] = f64::NAN;
        assert!(matches!(number_density(&s), Err(Error::Data(_))));
    }

    #[test]
    fn triangular_bump_on_node() {
        let g = MomentumGrid::symmetric(1.0, 201).unwrap();
        let s = spectrum(g, |p| (1.0 - (p - 0.3).abs() / 0.1).max(0.0));
        let peaks = find_peaks(&s, 0.05).unwrap();
        assert_eq!(peaks.len(), 1);
        assert!((peaks[0].momentum - 0.3).abs() < 1e-12);
        assert!((peaks[0].value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn symmetric_double_bump() {
        let g = MomentumGrid::symmetric(1.0, 201).unwrap();
        let bump = |p: f64, c: f64| (-(p - c).powi(2) / 0.005).exp();
        let s = spectrum(g, |p| bump(p, 0.437) + bump(p, -0.437));
        let peaks = find_peaks(&s, 0.05).unwrap();
        assert_eq!(peaks.len(), 2);
        assert!((peaks[0].value - peaks[1].value).abs() < 1e-12);
        assert!((peaks[0].momentum + peaks[1].momentum).abs() < 1e-12);
        // parabolic refinement pulls the estimate toward the true center
        assert!((peaks[1].momentum - 0.437).abs() < 0.003);
    }

    #[test]
    fn ripples_below_prominence_are_dropped() {
        let g = MomentumGrid::symmetric(1.0, 401).unwrap();
        let s = spectrum(g, |p| (-(p * p) / 0.01).exp() + 0.01 * (60.0 * p).cos().powi(2));
        let peaks = find_peaks(&s, 0.05).unwrap();
        assert_eq!(peaks.len(), 1);
        assert!(peaks[0].momentum.abs() < 1e-9);
    }

    #[test]
    fn too_few_nodes() {
        let g = MomentumGrid::symmetric(1.0, 2).unwrap();
        assert!(find_peaks(&spectrum(g, |_| 0.0), 0.05).is_err());
    }

    #[test]
    fn resonance_four_photon() {
        let c = ResonanceCombo::new(4, 0, 0).unwrap();
        let p = resonance_momentum(&c, 0.65, 0.056, 1.0).unwrap();
        assert!((p - (1.3f64 * 1.3 - 1.0).sqrt()).abs() < 1e-15);
        assert!((p - 0.83).abs() < 0.005);
    }

    #[test]
    fn resonance_at_threshold() {
        let c = ResonanceCombo::new(2, 1, 0).unwrap();
        let p = resonance_momentum(&c, 0.65, 0.056, 1.003).unwrap();
        assert!(p < 0.05, "{p}");
    }

    #[test]
    fn one_photon_below_threshold() {
        let c = ResonanceCombo::new(1, 0, 0).unwrap();
        assert_eq!(resonance_momentum(&c, 0.65, 0.056, 1.0), None);
        assert!(ResonanceCombo::new(0, 0, 0).is_err());
    }

    #[test]
    fn combo_enumeration() {
        let all = ResonanceCombo::all_up_to(4);
        // number of (a, b, c) >= 0 with 1 <= a + b + c <= 4
        assert_eq!(all.len(), 3 + 6 + 10 + 15);
        assert!(all.contains(&ResonanceCombo { k_c: 2, k_plus: 1, k_minus: 0 }));
        assert!(all.iter().all(|c| c.photons() >= 1 && c.photons() <= 4));
    }

    #[test]
    fn exact_power_laws() {
        let pts: Vec<(f64, f64)> = (1..=10).map(|n| (n as f64, 5.0 * (n as f64).powi(2))).collect();
        let fit = fit_power_law(&pts).unwrap();
        assert!((fit.exponent - 2.0).abs() < 1e-12);
        assert!((fit.prefactor - 5.0).abs() < 1e-11);
        assert!(fit.residual < 1e-12);

        let pts: Vec<(f64, f64)> = (1..=10).map(|n| (n as f64, 3e-7 * (n as f64).powf(1.6))).collect();
        assert!((fit_power_law(&pts).unwrap().exponent - 1.6).abs() < 1e-12);
    }

    #[test]
    fn power_law_rejects_bad_data() {
        assert!(fit_power_law(&[(1.0, 1.0), (2.0, 2.0)]).is_err());
        assert!(fit_power_law(&[(1.0, 1.0), (2.0, 0.0), (3.0, 1.0)]).is_err());
    }
}
