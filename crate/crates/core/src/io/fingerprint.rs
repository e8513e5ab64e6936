use sha2::{Digest, Sha256};

use crate::fields::FieldConfig;
use crate::observables::MomentumGrid;
use crate::solver::SolverSettings;

/// Incremental SHA-256 over labeled values; floats hash by their bit pattern.
pub struct Fingerprint {
    hasher: Sha256,
}

impl Fingerprint {
    pub fn new(domain: &str) -> Self {
        let mut fp = Fingerprint {
            hasher: Sha256::new(),
        };
        fp.text("domain", domain);
        fp
    }

    pub fn text(&mut self, label: &str, value: &str) -> &mut Self {
        self.hasher.update(label.as_bytes());
        self.hasher.update(b"=");
        self.hasher.update((value.len() as u64).to_le_bytes());
        self.hasher.update(value.as_bytes());
        self.hasher.update(b";");
        self
    }

    pub fn float(&mut self, label: &str, value: f64) -> &mut Self {
        self.text(label, &format!("{:016x}", value.to_bits()))
    }

    pub fn int(&mut self, label: &str, value: u64) -> &mut Self {
        self.text(label, &value.to_string())
    }

    pub fn field_config(&mut self, config: &FieldConfig) -> &mut Self {
        match config {
            FieldConfig::Modulated(m) => {
                self.text("field", "modulated")
                    .float("E0", m.e0)
                    .float("omega_c", m.omega_c)
                    .float("omega_m", m.omega_m)
                    .float("M", m.modulation_degree)
                    .float("t_switch", m.t_switch)
                    .float("t_d", m.t_d);
            }
            FieldConfig::PulseTrain(p) => {
                self.text("field", "pulse_train")
                    .float("E0", p.e0)
                    .float("omega_c", p.omega_c)
                    .float("tau", p.tau)
                    .float("T_m", p.delay)
                    .int("N", p.pulses as u64);
            }
            FieldConfig::Superposition(members) => {
                self.text("field", "superposition").int("members", members.len() as u64);
                for m in members {
                    self.field_config(m);
                }
            }
        }
        self
    }

    pub fn grid(&mut self, grid: &MomentumGrid) -> &mut Self {
        self.float("p_min", grid.p_min)
            .float("p_max", grid.p_max)
            .int("n_points", grid.n_points as u64)
    }

    pub fn settings(&mut self, s: &SolverSettings) -> &mut Self {
        self.float("rel_tol", s.rel_tol)
            .float("abs_tol", s.abs_tol)
            .float("max_step", s.max_step.unwrap_or(-1.0))
            .text("method", s.method.name())
            .int("max_steps", s.max_steps as u64)
    }

    /// First 16 hex digits of the digest.
    pub fn finish(&mut self) -> String {
        let digest = std::mem::take(&mut self.hasher).finalize();
        hex::encode(&digest[..8])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distinguishes_values() {
        let a = Fingerprint::new("x").float("v", 0.1).finish();
        let b = Fingerprint::new("x").float("v", 0.1 + 1e-18).finish();
        let c = Fingerprint::new("x").float("v", 0.1000000000000001).finish();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.len(), 16);
    }

    #[test]
    fn labels_are_not_ambiguous() {
        let a = Fingerprint::new("x").text("ab", "c").finish();
        let b = Fingerprint::new("x").text("a", "bc").finish();
        assert_ne!(a, b);
    }
}
