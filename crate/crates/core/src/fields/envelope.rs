/// Exponential switch-on / switch-off envelope around a flat top.
///
/// `exp((t - t_on)/tau_s)` before `t_on`, `1` on `[t_on, t_off]`,
/// `exp(-(t - t_off)/tau_s)` after `t_off`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Envelope {
    pub t_on: f64,
    pub t_off: f64,
    pub tau_s: f64,
}

/// Ramp time constant as a fraction of the switching time.
pub const RAMP_FRACTION: f64 = 0.1;

impl Envelope {
    /// Envelope for a field switched on over `[0, t_switch]` and held for `t_d`.
    pub fn switching(t_switch: f64, t_d: f64) -> Self {
        Envelope {
            t_on: t_switch,
            t_off: t_switch + t_d,
            tau_s: RAMP_FRACTION * t_switch,
        }
    }

    #[inline]
    pub fn value(&self, t: f64) -> f64 {
        if t < self.t_on {
            if self.tau_s > 0.0 {
                ((t - self.t_on) / self.tau_s).exp()
            } else {
                0.0
            }
        } else if t <= self.t_off {
            1.0
        } else if self.tau_s > 0.0 {
            (-(t - self.t_off) / self.tau_s).exp()
        } else {
            0.0
        }
    }
}
