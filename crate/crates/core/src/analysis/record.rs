//! Measurement records and the JSON-lines run ledger.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub measure: String,
    pub parameters: Value,
    pub value: Value,
    pub grid: Value,
    /// Wall-clock seconds; kept out of reports so they stay reproducible.
    pub elapsed: f64,
}

/// Appends one JSON line to the ledger file, creating it if needed.
pub fn append_ledger(path: &Path, m: &Measurement) -> Result<()> {
    let mut f = OpenOptions::new().create(true).append(true).open(path)?;
    let line = serde_json::to_string(m)?;
    writeln!(f, "{line}")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ledger_appends_lines() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ledger.jsonl");
        let m = Measurement {
            measure: "density".into(),
            parameters: serde_json::json!({"stage": 1}),
            value: serde_json::json!(0.1),
            grid: serde_json::json!({"res": 8}),
            elapsed: 0.0,
        };
        append_ledger(&path, &m).unwrap();
        append_ledger(&path, &m).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(serde_json::from_str::<Measurement>(lines[1]).unwrap(), m);
    }
}
