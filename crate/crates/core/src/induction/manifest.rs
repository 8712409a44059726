//! Stage files and the run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use super::audit::audit_stage;
use super::feasibility::FeasibilityReport;
use super::rational::RationalVector;
use super::schedule::StageSchedule;
use super::stage::Stage;
use crate::conjugacy::verify_conjugacy;
use crate::error::{Error, Result};
use crate::report::{Check, VerificationReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "kebab-case")]
pub enum RunStatus {
    Complete,
    /// Paper-safe mode refused to build `stage`.
    Infeasible { stage: u32 },
    /// Stages whose certified audit entries do not all pass.
    AuditFailed { stages: Vec<u32> },
    Error { stage: u32, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub schedule: StageSchedule,
    /// Stage files relative to the manifest, in order.
    pub stages: Vec<String>,
    pub status: RunStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feasibility: Option<FeasibilityReport>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

fn to_json<T: Serialize>(x: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(x)?;
    s.push('\n');
    Ok(s)
}

/// Writes `stage-<n>.json` for every stage and the manifest into `dir`.
pub fn write_run(dir: &Path, manifest: &Manifest, stages: &[Stage]) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    for (name, st) in manifest.stages.iter().zip(stages) {
        fs::write(dir.join(name), to_json(st)?)?;
    }
    let path = dir.join(MANIFEST_FILE);
    fs::write(&path, to_json(manifest)?)?;
    Ok(path)
}

pub fn stage_file_name(n: u32) -> String {
    format!("stage-{n}.json")
}

pub fn load_stage(path: &Path) -> Result<Stage> {
    let text = fs::read_to_string(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
}

/// Reads a manifest (or the manifest inside a directory) and its stages.
pub fn load_run(path: &Path) -> Result<(Manifest, Vec<Stage>)> {
    let path = if path.is_dir() { path.join(MANIFEST_FILE) } else { path.to_path_buf() };
    let text = fs::read_to_string(&path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
    if manifest.stages.is_empty() {
        return Err(Error::Input(format!("{}: the manifest lists no stages", path.display())));
    }
    let base = path.parent().unwrap_or(Path::new("."));
    let stages = manifest.stages.iter().map(|s| load_stage(&base.join(s))).collect::<Result<Vec<_>>>()?;
    for (i, st) in stages.iter().enumerate() {
        if st.n as usize != i + 1 {
            return Err(Error::Input(format!("stage file {} holds stage {}, expected {}", manifest.stages[i], st.n, i + 1)));
        }
    }
    Ok((manifest, stages))
}

/// `k q_(n-1) omega_n - k w_(n-1) = (k, k v) / r_n` for `k = 1..=k_max`, exactly.
pub fn rational_identity_holds(prev: &RationalVector, next: &RationalVector, r: &BigInt, v: &BigInt, k_max: u64) -> bool {
    let q = &prev.den;
    (1..=k_max).all(|k| {
        let k = BigInt::from(k);
        let [a, b] = next.components();
        let lhs = [
            &a * BigRational::from_integer(&k * q) - BigRational::from_integer(&k * &prev.num[0]),
            &b * BigRational::from_integer(&k * q) - BigRational::from_integer(&k * &prev.num[1]),
        ];
        let rhs = [BigRational::new(k.clone(), r.clone()), BigRational::new(&k * v, r.clone())];
        lhs == rhs
    })
}

/// Re-runs every audit from the stage data alone.
pub fn verify_run(stages: &[Stage], sched: &StageSchedule) -> VerificationReport {
    let mut rep = VerificationReport::new(format!("verification of {} stage(s)", stages.len()));
    for (i, st) in stages.iter().enumerate() {
        let prev = if i > 0 { stages.get(i - 1) } else { None };
        let n = st.n;
        match prev {
            None => {
                let start = RationalVector::from_ints(1, 10, 100).expect("valid");
                rep.push(Check::flag(format!("stage {n}: omega_1 = (1, 10)/100"), st.omega == start));
            }
            Some(p) => match (&st.r, &st.v) {
                (Some(r), Some(v)) => {
                    let chained = p.omega.advance(r, v).map_or(false, |w| w == st.omega);
                    rep.push(Check::flag(format!("stage {n}: omega_n = omega_(n-1) + (1, v)/(q r)"), chained));
                    rep.push(Check::flag(
                        format!("stage {n}: k q omega_n - k w = (k, kv)/r, k <= 100"),
                        rational_identity_holds(&p.omega, &st.omega, r, v, 100),
                    ));
                }
                _ => rep.push(Check::failed(format!("stage {n}: r_n, v_n"), "missing from the stage file")),
            },
        }
        if let (Some(l), Some(h)) = (&st.lemma, st.h_list.last()) {
            let res = l.result(h.clone());
            rep.extend(&format!("stage {n} conjugacy: "), verify_conjugacy(&res, &l.request, &sched.conjugacy));
        }
        rep.extend(&format!("stage {n}: "), audit_stage(st, prev, sched));
    }
    rep
}
