use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::csv::Table;
use super::fingerprint::Fingerprint;
use crate::error::{Error, Result};

/// Run scale. `Quick` shortens modulated flat tops to a tenth.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tier {
    Quick,
    Full,
}

impl Tier {
    pub fn name(self) -> &'static str {
        match self {
            Tier::Quick => "quick",
            Tier::Full => "full",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "quick" => Some(Tier::Quick),
            "full" => Some(Tier::Full),
            _ => None,
        }
    }

    pub fn duration_scale(self) -> f64 {
        match self {
            Tier::Quick => 0.1,
            Tier::Full => 1.0,
        }
    }
}

pub const DETERMINISM_NOTE: &str = "deterministic; no random numbers are drawn anywhere";

/// Provenance of one invocation.
///
/// The fingerprint covers everything that determines the numbers written
/// (subcommand, resolved configuration, tier, output names, version) but
/// not the worker count, which never changes results.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub subcommand: String,
    /// Canonical text of the resolved configuration.
    pub config: String,
    pub tier: Tier,
    pub outputs: Vec<String>,
    pub workers: Option<usize>,
    /// Where the worker count came from, e.g. `--workers` or `VACPAIR_WORKERS=4`.
    pub workers_source: String,
    pub version: String,
}

impl RunManifest {
    pub fn new(subcommand: &str, config: impl Into<String>, tier: Tier) -> Self {
        RunManifest {
            subcommand: subcommand.to_string(),
            config: config.into(),
            tier,
            outputs: Vec::new(),
            workers: None,
            workers_source: "default".to_string(),
            version: crate::VERSION.to_string(),
        }
    }

    pub fn fingerprint(&self) -> String {
        let mut fp = Fingerprint::new("manifest");
        fp.text("subcommand", &self.subcommand)
            .text("config", &self.config)
            .text("tier", self.tier.name())
            .int("outputs", self.outputs.len() as u64);
        for o in &self.outputs {
            fp.text("output", o);
        }
        fp.text("version", &self.version).finish()
    }

    /// Adds the standard `#` metadata lines to a table.
    pub fn stamp(&self, table: &mut Table) {
        let mut stamped = vec![
            ("manifest_fingerprint".to_string(), self.fingerprint()),
            ("subcommand".to_string(), self.subcommand.clone()),
            ("tier".to_string(), self.tier.name().to_string()),
            ("version".to_string(), self.version.clone()),
            ("determinism".to_string(), DETERMINISM_NOTE.to_string()),
        ];
        stamped.append(&mut table.metadata);
        table.metadata = stamped;
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "# vacpair run manifest").unwrap();
        writeln!(out, "fingerprint = {}", self.fingerprint()).unwrap();
        writeln!(out, "subcommand = {}", self.subcommand).unwrap();
        writeln!(out, "tier = {}", self.tier.name()).unwrap();
        writeln!(out, "version = {}", self.version).unwrap();
        writeln!(out, "outputs = {}", self.outputs.join(", ")).unwrap();
        let workers = self.workers.map_or("all cores".to_string(), |w| w.to_string());
        writeln!(out, "workers = {workers} ({})", self.workers_source).unwrap();
        writeln!(out, "determinism = {DETERMINISM_NOTE}").unwrap();
        writeln!(out, "\n# resolved configuration\n").unwrap();
        out.push_str(&self.config);
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::RunConfig;

    fn manifest() -> RunManifest {
        let config = RunConfig::parse("[field]\ntype = zero\n").unwrap();
        let mut m = RunManifest::new("density", config.to_text(), Tier::Quick);
        m.outputs.push("density.csv".into());
        m
    }

    #[test]
    fn workers_do_not_change_fingerprint() {
        let a = manifest();
        let mut b = a.clone();
        b.workers = Some(3);
        b.workers_source = "VACPAIR_WORKERS=3".into();
        assert_eq!(a.fingerprint(), b.fingerprint());
        assert!(b.to_text().contains("VACPAIR_WORKERS=3"));
    }

    #[test]
    fn tier_changes_fingerprint() {
        let a = manifest();
        let mut b = a.clone();
        b.tier = Tier::Full;
        assert_ne!(a.fingerprint(), b.fingerprint());
    }

    #[test]
    fn stamp_prepends_metadata() {
        let m = manifest();
        let mut t = Table::new(&["x"]);
        t.meta("extra", "1");
        m.stamp(&mut t);
        assert_eq!(t.metadata[0].0, "manifest_fingerprint");
        assert_eq!(t.metadata_value("manifest_fingerprint"), Some(m.fingerprint().as_str()));
        assert_eq!(t.metadata.last().unwrap().0, "extra");
    }
}
