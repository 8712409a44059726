//! Run configuration: a JSON or TOML document, the `PSEUDOROT_CONFIG`
//! default and command-line overrides.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::induction::{Mode, StageSchedule};

pub const CONFIG_ENV: &str = "PSEUDOROT_CONFIG";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub stages: u32,
    pub out: PathBuf,
    #[serde(flatten)]
    pub schedule: StageSchedule,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self { stages: 2, out: PathBuf::from("run"), schedule: StageSchedule::default() }
    }
}

/// Values given on the command line; `None` keeps the file value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub mode: Option<Mode>,
    pub stages: Option<u32>,
    pub rho: Option<f64>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    /// Parses TOML when the extension is `.toml`, JSON otherwise.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
        let is_toml = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml"));
        let parsed = if is_toml {
            toml::from_str(&text).map_err(|e| e.to_string())
        } else {
            serde_json::from_str(&text).map_err(|e| e.to_string())
        };
        let cfg: Self = parsed.map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// The explicit path, else `$PSEUDOROT_CONFIG`, else the defaults.
    pub fn resolve(explicit: Option<&Path>) -> Result<Self> {
        if let Some(p) = explicit {
            return Self::from_path(p);
        }
        match std::env::var_os(CONFIG_ENV) {
            Some(p) if !p.is_empty() => Self::from_path(Path::new(&p)),
            _ => Ok(Self::default()),
        }
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(s) = o.seed {
            self.schedule.seed = s;
        }
        if let Some(m) = o.mode {
            self.schedule.mode = m;
        }
        if let Some(n) = o.stages {
            self.stages = n;
        }
        if let Some(r) = o.rho {
            self.schedule.rho = r;
        }
        if let Some(out) = &o.out {
            self.out = out.clone();
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        if self.stages == 0 {
            return Err(Error::Input("stages must be at least 1".into()));
        }
        let rho = self.schedule.rho;
        if !(rho.is_finite() && rho > 0.0) {
            return Err(Error::Input(format!("rho must be positive, got {rho}")));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_documents_keep_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let json = dir.path().join("c.json");
        fs::write(&json, r#"{"stages": 1, "seed": 7, "mode": "paper-safe"}"#).unwrap();
        let c = RunConfig::from_path(&json).unwrap();
        assert_eq!((c.stages, c.schedule.seed, c.schedule.mode), (1, 7, Mode::PaperSafe));
        assert_eq!(c.schedule.rho, StageSchedule::default().rho);

        let toml_path = dir.path().join("c.toml");
        fs::write(&toml_path, "rho = 0.02\nout = \"elsewhere\"\n").unwrap();
        let c = RunConfig::from_path(&toml_path).unwrap();
        assert_eq!(c.schedule.rho, 0.02);
        assert_eq!(c.out, PathBuf::from("elsewhere"));
    }

    #[test]
    fn overrides_and_bad_input() {
        let mut c = RunConfig::default();
        c.apply(&Overrides { seed: Some(3), rho: Some(0.1), ..Default::default() }).unwrap();
        assert_eq!((c.schedule.seed, c.schedule.rho), (3, 0.1));
        assert!(c.apply(&Overrides { stages: Some(0), ..Default::default() }).is_err());

        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.json");
        fs::write(&p, "{ not json").unwrap();
        assert!(matches!(RunConfig::from_path(&p), Err(Error::Input(_))));
    }

    #[test]
    fn round_trip_is_flat() {
        let c = RunConfig::default();
        let v = serde_json::to_value(&c).unwrap();
        assert!(v.get("seed").is_some() && v.get("schedule").is_none());
        let back: RunConfig = serde_json::from_value(v).unwrap();
        assert_eq!(back, c);
    }
}
