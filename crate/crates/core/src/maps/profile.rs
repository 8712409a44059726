//! Step functions on `[0,1)` and their double-exponential analytic approximants.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::magnitude::IteratedLog;
use crate::error::{Error, Result};
use crate::geom::frac;

/// Beyond this exponent `e^{-e^t}` is 0 (or 1 for `-t`) to double precision.
const SATURATE: f64 = 710.0;

/// Piecewise-constant `1/q`-periodic function taking the value `beta[j mod N]`
/// on `[j/(Nq), (j+1)/(Nq))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepProfile {
    pub beta: Vec<f64>,
    pub q: u64,
    #[serde(rename = "N")]
    pub n: usize,
    /// Declared bound: every entry lies in `[-m, m)`.
    pub m: u32,
}

impl StepProfile {
    pub fn new(beta: Vec<f64>, q: u64, n: usize, m: u32) -> Result<Self> {
        let p = Self { beta, q, n, m };
        p.validate()?;
        Ok(p)
    }

    /// The zero profile; evaluates to 0 everywhere.
    pub fn zero(q: u64, n: usize) -> Self {
        Self { beta: vec![0.0; n], q, n, m: 1 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.q == 0 {
            return Err(Error::InvalidProfile("q must be positive".into()));
        }
        if self.n < 2 || self.n % 2 != 0 {
            return Err(Error::InvalidProfile(format!("N = {} must be even and >= 2", self.n)));
        }
        if self.beta.len() != self.n {
            return Err(Error::InvalidProfile(format!(
                "beta has {} entries, expected N = {}",
                self.beta.len(),
                self.n
            )));
        }
        if self.m == 0 {
            return Err(Error::InvalidProfile("m must be positive".into()));
        }
        let m = self.m as f64;
        if let Some((i, b)) = self
            .beta
            .iter()
            .enumerate()
            .find(|(_, b)| !b.is_finite() || **b < -m || **b >= m)
        {
            return Err(Error::InvalidProfile(format!("beta[{i}] = {b} outside [-{m}, {m})")));
        }
        Ok(())
    }

    /// Number of cells of length `1/(Nq)` in `[0,1)`.
    pub fn cells(&self) -> u64 {
        self.n as u64 * self.q
    }

    pub fn abs_sum(&self) -> f64 {
        self.beta.iter().map(|b| b.abs()).sum()
    }

    pub fn eval(&self, x: f64) -> f64 {
        step_eval(self, x)
    }
}

/// Evaluates the step function at `x mod 1`.
pub fn step_eval(profile: &StepProfile, x: f64) -> f64 {
    let cells = profile.cells();
    let j = ((frac(x) * cells as f64).floor() as u64).min(cells - 1);
    profile.beta[(j % profile.n as u64) as usize]
}

/// `A_0(eps', delta, N)` with `eps' = eps / (4m)`: the sharpness threshold
/// above which the analytic approximant is `eps`-close to the step function
/// off the bad set.
pub fn a0_threshold(epsilon: f64, delta: f64, n: usize, m: u32) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 0.125) {
        return Err(Error::Domain(format!("epsilon = {epsilon} not in (0, 1/8)")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("delta = {delta} not in (0, 1)")));
    }
    if m == 0 || n == 0 {
        return Err(Error::Domain("N and m must be positive".into()));
    }
    let eps = epsilon / (4.0 * m as f64);
    let c = 2.0 * n as f64 / (PI * delta);
    // -ln(1 - eps/8) via ln_1p keeps the small argument accurate
    let first = -c * (-(-eps / 8.0).ln_1p()).ln();
    let second = c * (-(eps / (2.0 * n as f64)).ln()).ln();
    Ok(first.max(second))
}

/// True iff `x` lies within `delta/(2Nq)` of the grid `(1/(Nq)) Z`.
pub fn bad_set_contains(q: u64, n: usize, delta: f64, x: f64) -> bool {
    let cells = (n as u64 * q) as f64;
    let t = x * cells;
    let dist = (t - t.round()).abs() / cells;
    dist < delta / (2.0 * cells)
}

/// The analytic approximant of a step profile with smoothing data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProfileRecord", into = "ProfileRecord")]
pub struct AnalyticProfile {
    base: StepProfile,
    epsilon: f64,
    delta: f64,
    a: f64,
    /// Indices with nonzero beta; zero terms contribute nothing.
    support: Vec<usize>,
}

/// Flat JSON record `{beta, q, N, m, epsilon, delta, A}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileRecord {
    pub beta: Vec<f64>,
    pub q: u64,
    #[serde(rename = "N")]
    pub n: usize,
    pub m: u32,
    pub epsilon: f64,
    pub delta: f64,
    #[serde(rename = "A")]
    pub a: f64,
}

impl TryFrom<ProfileRecord> for AnalyticProfile {
    type Error = Error;

    fn try_from(r: ProfileRecord) -> Result<Self> {
        AnalyticProfile::new(StepProfile::new(r.beta, r.q, r.n, r.m)?, r.epsilon, r.delta, r.a)
    }
}

impl From<AnalyticProfile> for ProfileRecord {
    fn from(p: AnalyticProfile) -> Self {
        ProfileRecord {
            beta: p.base.beta,
            q: p.base.q,
            n: p.base.n,
            m: p.base.m,
            epsilon: p.epsilon,
            delta: p.delta,
            a: p.a,
        }
    }
}

/// Overflow of a complex double exponential inside the strip.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Overflow;

impl AnalyticProfile {
    pub fn new(base: StepProfile, epsilon: f64, delta: f64, a: f64) -> Result<Self> {
        base.validate()?;
        let a0 = a0_threshold(epsilon, delta, base.n, base.m)?;
        if !(a > a0) || !a.is_finite() {
            return Err(Error::InvalidProfile(format!("A = {a} must exceed A0 = {a0}")));
        }
        let support = base.beta.iter().enumerate().filter(|(_, b)| **b != 0.0).map(|(i, _)| i).collect();
        Ok(Self { base, epsilon, delta, a, support })
    }

    /// Builds with `A = margin * A0^(m)(epsilon, delta, N)`.
    pub fn with_margin(base: StepProfile, epsilon: f64, delta: f64, margin: f64) -> Result<Self> {
        let a0 = a0_threshold(epsilon, delta, base.n, base.m)?;
        Self::new(base, epsilon, delta, margin * a0)
    }

    /// Zero profile evaluating to 0; used for the identity conjugacy.
    pub fn zero(q: u64, n: usize) -> Self {
        Self::with_margin(StepProfile::zero(q, n), 0.1, 0.5, 1.05).expect("zero profile is admissible")
    }

    pub fn base(&self) -> &StepProfile {
        &self.base
    }
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
    pub fn delta(&self) -> f64 {
        self.delta
    }
    pub fn a(&self) -> f64 {
        self.a
    }
    pub fn q(&self) -> u64 {
        self.base.q
    }
    pub fn n(&self) -> usize {
        self.base.n
    }
    pub fn is_zero(&self) -> bool {
        self.support.is_empty()
    }

    /// Real evaluation. Never returns a non-finite value for finite `x`.
    pub fn eval(&self, x: f64) -> f64 {
        if self.support.is_empty() {
            return 0.0;
        }
        let u = frac(self.base.q as f64 * x);
        let nf = self.base.n as f64;
        let half = self.base.n / 2;
        let edge = |v: f64| dexp_neg(-self.a * (TAU * v).sin());
        let (mut low, mut high) = (0.0, 0.0);
        for &j in &self.support {
            let d = edge(u - j as f64 / nf) - edge(u - (j + 1) as f64 / nf);
            if j < half {
                low += self.base.beta[j] * d;
            } else {
                high += self.base.beta[j] * d;
            }
        }
        let s = (TAU * u).sin();
        let mut out = 0.0;
        if low != 0.0 {
            out += low * dexp_neg(-self.a * s);
        }
        if high != 0.0 {
            out += high * dexp_neg(self.a * s);
        }
        out
    }

    /// Evaluation of the entire extension at complex `z`.
    pub fn eval_complex(&self, z: Complex64) -> std::result::Result<Complex64, Overflow> {
        if self.support.is_empty() {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let qz = z * self.base.q as f64;
        // the real part may be reduced mod 1 since only sin(2 pi (qz - c)) enters
        let u = Complex64::new(frac(qz.re), qz.im);
        let nf = self.base.n as f64;
        let half = self.base.n / 2;
        let a = self.a;
        let edge = |v: Complex64| dexp_neg_complex((v * TAU).sin() * (-a));
        let (mut low, mut high) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        for &j in &self.support {
            let d = edge(u - j as f64 / nf)? - edge(u - (j + 1) as f64 / nf)?;
            if j < half {
                low += d * self.base.beta[j];
            } else {
                high += d * self.base.beta[j];
            }
        }
        let s = (u * TAU).sin();
        let mut out = Complex64::new(0.0, 0.0);
        if low != Complex64::new(0.0, 0.0) {
            out += low * dexp_neg_complex(s * (-a))?;
        }
        if high != Complex64::new(0.0, 0.0) {
            out += high * dexp_neg_complex(s * a)?;
        }
        if out.re.is_finite() && out.im.is_finite() {
            Ok(out)
        } else {
            Err(Overflow)
        }
    }

    /// `ln C^(m)` of the sampled Lipschitz bound on the strip of width `rho`.
    pub fn lipschitz_log_bound(&self, rho: f64) -> IteratedLog {
        lipschitz_log_bound(self.base.n, self.base.q, self.a, rho, self.base.m)
    }
}

/// `e^{-e^t}` with saturation outside the double-precision exponent range.
#[inline]
pub fn dexp_neg(t: f64) -> f64 {
    if t > SATURATE {
        0.0
    } else if t < -SATURATE {
        1.0
    } else {
        (-t.exp()).exp()
    }
}

/// Complex `e^{-e^t}`, evaluated through `ln|e^{-e^t}| = -e^{Re t} cos(Im t)`.
pub fn dexp_neg_complex(t: Complex64) -> std::result::Result<Complex64, Overflow> {
    if !t.re.is_finite() || !t.im.is_finite() {
        return Err(Overflow);
    }
    if t.re < -SATURATE {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let (s, c) = t.im.sin_cos();
    if t.re > SATURATE {
        // |e^t| overflows; the sign of Re(e^t) decides between 0 and overflow
        return if c > 0.0 { Ok(Complex64::new(0.0, 0.0)) } else { Err(Overflow) };
    }
    let r = t.re.exp();
    let log_mod = -r * c;
    if log_mod < -745.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    if log_mod > 709.0 {
        return Err(Overflow);
    }
    Ok(Complex64::from_polar(log_mod.exp(), -r * s))
}

/// `ln C^(m)` where `C^(m) = 4m * 6 pi A N q e^{4 e^{A e^{2 pi q rho}}}`.
///
/// Falls back to deeper iterated logarithms when `ln C` itself overflows.
pub fn lipschitz_log_bound(n: usize, q: u64, a: f64, rho: f64, m: u32) -> IteratedLog {
    let prefactor = (24.0 * PI * m as f64 * a * n as f64 * q as f64).ln();
    let t = TAU * q as f64 * rho;
    let ln_inner = a.ln() + t; // ln(A e^{2 pi q rho})
    let inner = ln_inner.exp();
    if inner.is_finite() {
        let term = 4.0 * inner.exp();
        if term.is_finite() {
            return IteratedLog::ln(prefactor + term);
        }
        // ln ln C = ln(4 e^{inner} + prefactor) ~ ln 4 + inner
        return IteratedLog { depth: 2, value: 4f64.ln() + inner };
    }
    // ln ln ln C = ln(inner + ln 4 + ...) and inner is beyond f64, so ln 4 is lost
    IteratedLog { depth: 3, value: ln_inner }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example() -> StepProfile {
        StepProfile::new(vec![0.5, 0.0, 0.0, 0.0], 1, 4, 1).unwrap()
    }

    #[test]
    fn step_eval_examples() {
        let p = example();
        assert_eq!(step_eval(&p, 0.1), 0.5);
        assert_eq!(step_eval(&p, 0.3), 0.0);
        let p2 = StepProfile::new(vec![0.5, 0.0, 0.0, 0.0], 2, 4, 1).unwrap();
        assert_eq!(step_eval(&p2, 0.6), 0.5);
        // periodic extension
        assert_eq!(step_eval(&p, -0.9), 0.5);
    }

    #[test]
    fn step_profile_rejects_bad_input() {
        assert!(StepProfile::new(vec![0.0; 3], 1, 3, 1).is_err());
        assert!(StepProfile::new(vec![0.0; 4], 1, 2, 1).is_err());
        assert!(StepProfile::new(vec![1.0, 0.0], 1, 2, 1).is_err());
        assert!(StepProfile::new(vec![-1.0, 0.0], 1, 2, 1).is_ok());
        assert!(StepProfile::new(vec![0.0, 0.0], 0, 2, 1).is_err());
    }

    #[test]
    fn a0_matches_high_precision_oracle() {
        // frozen from a 50-digit evaluation of the closed form
        let a = a0_threshold(0.1, 0.5, 4, 1).unwrap();
        assert!((a - 29.369_849_466_007_911).abs() < 1e-10, "{a}");
        let b = a0_threshold(0.1, 0.5, 4, 2).unwrap();
        assert!((b - 32.904_005_730_304_453).abs() < 1e-10, "{b}");
        let c = a0_threshold(0.05, 0.3, 8, 1).unwrap();
        assert!((c - 109.680_019_101_014_85).abs() < 1e-9, "{c}");
        assert!(b >= a);
    }

    #[test]
    fn a0_domain_and_blowup() {
        assert!(a0_threshold(0.125, 0.5, 4, 1).is_err());
        assert!(a0_threshold(0.1, 1.0, 4, 1).is_err());
        assert!(a0_threshold(0.0, 0.5, 4, 1).is_err());
        let mut prev = 0.0;
        for k in 1..12 {
            let v = a0_threshold(0.1 / 10f64.powi(k), 0.5, 4, 1).unwrap();
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn bad_set_examples() {
        assert!(bad_set_contains(1, 4, 0.5, 0.0));
        assert!(!bad_set_contains(1, 4, 0.5, 0.125));
        // the half-width is delta / (2Nq) = 1/16, so 0.9 * delta / 8 from 1/4 is inside
        assert!(bad_set_contains(1, 4, 0.5, 0.25 + 0.9 * 0.5 / 8.0));
        assert!(!bad_set_contains(1, 4, 0.5, 0.25 + 1.1 * 0.5 / 8.0));
        assert!(!bad_set_contains(1, 4, 0.5, 0.25 - 1.1 * 0.5 / 8.0));
        assert!(bad_set_contains(1, 4, 0.5, 1.0 - 1e-6));
    }

    #[test]
    fn analytic_zero_and_periodicity() {
        let z = AnalyticProfile::zero(3, 4);
        assert_eq!(z.eval(0.37), 0.0);
        let p = AnalyticProfile::with_margin(
            StepProfile::new(vec![0.5, -0.25, 0.0, 0.75], 3, 4, 1).unwrap(),
            0.1,
            0.5,
            1.05,
        )
        .unwrap();
        for i in 0..50 {
            let x = 0.0137 * i as f64;
            for k in 1..=5 {
                let d = (p.eval(x + k as f64 / 3.0) - p.eval(x)).abs();
                assert!(d < 1e-12, "x={x} k={k} d={d}");
            }
        }
    }

    #[test]
    fn analytic_real_on_real_axis_and_finite() {
        let p = AnalyticProfile::with_margin(
            StepProfile::new(vec![0.9, -0.9, 0.3, 0.0, 0.0, -0.5], 5, 6, 1).unwrap(),
            0.01,
            0.1,
            1.05,
        )
        .unwrap();
        for i in 0..1000 {
            let x = i as f64 / 997.0;
            let r = p.eval(x);
            let c = p.eval_complex(Complex64::new(x, 0.0)).unwrap();
            assert!(r.is_finite());
            assert!((c.re - r).abs() < 1e-12 && c.im.abs() < 1e-12, "x={x} {r} {c}");
        }
    }

    #[test]
    fn approximation_off_bad_set() {
        let base = StepProfile::new(vec![0.5, -0.3, 0.8, 0.1], 2, 4, 1).unwrap();
        let p = AnalyticProfile::with_margin(base.clone(), 0.1, 0.5, 1.05).unwrap();
        let mut worst: f64 = 0.0;
        for i in 0..10_000 {
            let x = i as f64 / 10_000.0;
            if bad_set_contains(2, 4, 0.5, x) {
                continue;
            }
            worst = worst.max((p.eval(x) - base.eval(x)).abs());
        }
        assert!(worst < 0.1, "{worst}");
    }

    #[test]
    fn lipschitz_log_bound_values() {
        // rho = 0 reduces to ln(24 pi A N q) + 4 e^A
        let r0 = lipschitz_log_bound(4, 1, 10.0, 0.0, 1).ln_value().unwrap();
        let expect = (24.0 * PI * 40.0f64).ln() + 4.0 * 10f64.exp();
        assert!((r0 - expect).abs() < 1e-9 * expect);
        // frozen from a 50-digit evaluation
        let v = lipschitz_log_bound(4, 1, 10.0, 0.1, 1).ln_value().unwrap();
        assert!((v - 552_992_640.710_864_6).abs() / v < 1e-12, "{v}");
    }

    #[test]
    fn lipschitz_log_bound_towers_stay_ordered() {
        let small = lipschitz_log_bound(4, 1, 10.0, 0.1, 1);
        let mid = lipschitz_log_bound(402, 100, 3e4, 0.05, 1);
        let big = lipschitz_log_bound(402, 100, 3e4, 2.0, 1);
        assert!(!small.is_tower());
        assert!(mid.is_tower());
        assert_eq!(big.depth, 3);
        assert!(small < mid && mid < big);
    }

    #[test]
    fn complex_guard_saturates() {
        assert_eq!(dexp_neg_complex(Complex64::new(800.0, 0.0)).unwrap(), Complex64::new(0.0, 0.0));
        assert!(dexp_neg_complex(Complex64::new(800.0, PI)).is_err());
        assert_eq!(dexp_neg_complex(Complex64::new(-800.0, 3.0)).unwrap(), Complex64::new(1.0, 0.0));
        assert_eq!(dexp_neg(1e300), 0.0);
        assert_eq!(dexp_neg(-1e300), 1.0);
    }
}
