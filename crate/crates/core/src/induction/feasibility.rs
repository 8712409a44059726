//! The sufficient size of `r_(n+1)` for the closeness of consecutive stages.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::maps::{lipschitz_log_bound, IteratedLog};

/// Inputs of the bound, for the advance `n -> n+1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdInputs {
    pub n: u32,
    pub ln_q: f64,
    pub eps_n: f64,
    pub v: f64,
    /// `N_(n+1)` and `A` of the new conjugacy.
    #[serde(rename = "N")]
    pub big_n: usize,
    #[serde(rename = "A")]
    pub a: f64,
    pub q: u64,
    pub rho_n: f64,
    /// `sup ||D H~_n||` over `B_(rho_n + 1)`.
    pub d: IteratedLog,
}

/// `r` such that `rho'_n < 2^-n eps_n / (D + 1)`, where
/// `rho'_n = (1 + C + C^2 + (1 + C) v) / (q_n r)` and `C` is the Lipschitz
/// constant of the new conjugacy's profiles on `B_(rho_n)`.
pub fn required_r(inp: &ThresholdInputs) -> (IteratedLog, IteratedLog) {
    let c = lipschitz_log_bound(inp.big_n, inp.q, inp.a, inp.rho_n, 1);
    let one = IteratedLog::ln(0.0);
    let x = one.add(c).add(c.powf(2.0)).add(one.add(c).mul(IteratedLog::from_value(inp.v)));
    let scale = inp.n as f64 * std::f64::consts::LN_2 - inp.ln_q - inp.eps_n.ln();
    (x.mul(inp.d.add(one)).mul(IteratedLog::ln(scale)), c)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub stage: u32,
    pub rho: f64,
    pub inputs: ThresholdInputs,
    pub kappa: f64,
    /// `ceil(100 v / kappa)`.
    pub r_min: f64,
    pub lipschitz: IteratedLog,
    pub required: IteratedLog,
    pub log10_r: Option<f64>,
    pub log10_log10_r: Option<f64>,
    pub max_log10_r: f64,
    pub feasible: bool,
}

impl FeasibilityReport {
    pub fn new(stage: u32, rho: f64, inputs: ThresholdInputs, kappa: f64, max_log10_r: f64) -> Self {
        let (required, lipschitz) = required_r(&inputs);
        let r_min = (100.0 * inputs.v / kappa).ceil();
        let log10_r = required.log10();
        let feasible = log10_r.map_or(false, |l| l <= max_log10_r) && r_min.log10() <= max_log10_r;
        Self {
            stage,
            rho,
            inputs,
            kappa,
            r_min,
            lipschitz,
            required,
            log10_r,
            log10_log10_r: required.log10_log10(),
            max_log10_r,
            feasible,
        }
    }
}

impl fmt::Display for FeasibilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let i = &self.inputs;
        writeln!(f, "paper-safe requirement for r_{}", self.stage)?;
        writeln!(f, "  rho = {}  rho_n = {}  q_n = e^{:.6}  eps_n = {:e}", self.rho, i.rho_n, i.ln_q, i.eps_n)?;
        writeln!(f, "  N = {}  A = {:.6e}  kappa = {:e}  v = {}", i.big_n, i.a, self.kappa, i.v)?;
        writeln!(f, "  Lipschitz constant C: {}", self.lipschitz)?;
        writeln!(f, "  r >= 100 v / kappa = {:e}", self.r_min)?;
        match (self.log10_r, self.log10_log10_r) {
            (Some(l), _) => writeln!(f, "  required log10 r = {l:.6}")?,
            (None, Some(ll)) if ll < 1e6 => writeln!(f, "  required log10 r = 10^{ll:.6}")?,
            (None, Some(ll)) => writeln!(f, "  required log10 r = 10^({ll:.6e})")?,
            _ => writeln!(f, "  required r: {}", self.required)?,
        }
        writeln!(
            f,
            "  limit log10 r <= {}: {}",
            self.max_log10_r,
            if self.feasible { "feasible" } else { "infeasible" }
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inputs(rho: f64, a: f64) -> ThresholdInputs {
        ThresholdInputs {
            n: 1,
            ln_q: 100f64.ln(),
            eps_n: 1e-2,
            v: 50.0,
            big_n: 406,
            a,
            q: 100,
            rho_n: rho,
            d: IteratedLog::from_value(1.0),
        }
    }

    #[test]
    fn requirement_is_a_tower_at_default_rho() {
        let (r, c) = required_r(&inputs(0.05, 3e4));
        assert!(c.is_tower() && r.is_tower());
        assert!(r.log10().is_none());
        let ll = r.log10_log10().unwrap();
        assert!(ll > 10.0, "{ll}");
    }

    #[test]
    fn requirement_is_monotone() {
        let mut prev = required_r(&inputs(0.001, 3e4)).0;
        for rho in [0.002, 0.005, 0.01, 0.02, 0.05, 0.1] {
            let cur = required_r(&inputs(rho, 3e4)).0;
            assert!(cur > prev, "rho {rho}: {cur} vs {prev}");
            prev = cur;
        }
        let mut prev = required_r(&inputs(0.05, 10.0)).0;
        for a in [100.0, 1e3, 1e4, 1e5] {
            let cur = required_r(&inputs(0.05, a)).0;
            assert!(cur > prev, "A {a}");
            prev = cur;
        }
    }

    #[test]
    fn tiny_strip_gives_a_finite_requirement() {
        let (r, _) = required_r(&inputs(0.0, 1.0));
        assert!(r.log10().is_some());
    }
}
