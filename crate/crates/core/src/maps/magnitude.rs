use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

/// A positive magnitude `X` stored through iterated natural logarithms:
/// `ln^depth(X) = value`. Depth 1 is the plain logarithm.
///
/// Used for constants such as the Lipschitz bound of the analytic step
/// approximant, which are double-exponential towers and overflow any float.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IteratedLog {
    pub depth: u8,
    pub value: f64,
}

impl IteratedLog {
    pub fn ln(value: f64) -> Self {
        Self { depth: 1, value }
    }

    pub fn from_value(x: f64) -> Self {
        Self::ln(x.ln())
    }

    /// True when this is a tower that `ln X` cannot hold in an `f64`.
    pub fn is_tower(&self) -> bool {
        self.depth > 1
    }

    /// `ln X` if it is representable.
    pub fn ln_value(&self) -> Option<f64> {
        self.at_depth(1)
    }

    /// `X` itself if representable.
    pub fn value(&self) -> Option<f64> {
        let l = self.ln_value()?;
        let x = l.exp();
        x.is_finite().then_some(x)
    }

    /// `ln^k(X)` for `k >= 1`, if it is a finite float.
    pub fn at_depth(&self, k: u8) -> Option<f64> {
        let mut v = self.value;
        let mut d = self.depth;
        while d > k {
            v = v.exp();
            d -= 1;
        }
        while d < k {
            if v <= 0.0 {
                return None;
            }
            v = v.ln();
            d += 1;
        }
        v.is_finite().then_some(v)
    }

    /// Re-express at the shallowest depth whose value is finite.
    pub fn normalized(self) -> Self {
        let mut cur = self;
        while cur.depth > 1 {
            let up = cur.value.exp();
            if !up.is_finite() {
                break;
            }
            cur = Self { depth: cur.depth - 1, value: up };
        }
        cur
    }

    /// `log10 X` when finite.
    pub fn log10(&self) -> Option<f64> {
        self.ln_value().map(|l| l / std::f64::consts::LN_10)
    }

    /// `log10 log10 X` when `ln ln X` is finite and `X > 1`.
    pub fn log10_log10(&self) -> Option<f64> {
        let ll = self.at_depth(2)?;
        // log10(log10 X) = log10(ln X) - log10(ln 10) = (ln ln X)/ln 10 - log10(ln 10)
        Some(ll / std::f64::consts::LN_10 - std::f64::consts::LN_10.log10())
    }
}

impl IteratedLog {
    fn ordered(self, other: Self) -> (Self, Self) {
        let (a, b) = (self.normalized(), other.normalized());
        if a >= b {
            (a, b)
        } else {
            (b, a)
        }
    }

    /// The magnitude `X * Y`. Below depth 2 exact up to rounding; at depth 3
    /// the smaller factor is below float resolution and is dropped.
    pub fn mul(self, other: Self) -> Self {
        let (big, small) = self.ordered(other);
        match big.depth {
            1 => {
                let s = big.value + small.value;
                if s.is_finite() {
                    Self::ln(s)
                } else {
                    Self { depth: 2, value: big.value.ln() + (small.value / big.value).ln_1p() }
                }
            }
            2 => {
                let ratio = match small.ln_value() {
                    Some(l) => l * (-big.value).exp(),
                    None => (small.at_depth(2).unwrap_or(f64::NEG_INFINITY) - big.value).exp(),
                };
                Self { depth: 2, value: big.value + ratio.ln_1p() }
            }
            _ => big,
        }
    }

    /// The magnitude `X + Y`; the smaller term is dropped beyond depth 1.
    pub fn add(self, other: Self) -> Self {
        let (big, small) = self.ordered(other);
        if big.depth == 1 && small.depth == 1 {
            Self::ln(big.value + (small.value - big.value).exp().ln_1p())
        } else {
            big
        }
    }

    /// The magnitude `X^k` for `k > 0`.
    pub fn powf(self, k: f64) -> Self {
        let a = self.normalized();
        match a.depth {
            1 => {
                let s = k * a.value;
                if s.is_finite() {
                    Self::ln(s)
                } else {
                    Self { depth: 2, value: k.ln() + a.value.ln() }
                }
            }
            2 => Self { depth: 2, value: a.value + k.ln() },
            _ => a,
        }
    }
}

impl PartialOrd for IteratedLog {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        let d = self.depth.max(other.depth);
        match (self.at_depth(d), other.at_depth(d)) {
            (Some(a), Some(b)) => a.partial_cmp(&b),
            // None at a deeper level means the magnitude is below e^e^...; compare shallower
            _ => {
                let s = self.depth.min(other.depth);
                match (self.at_depth(s), other.at_depth(s)) {
                    (Some(a), Some(b)) => a.partial_cmp(&b),
                    (None, Some(_)) => Some(Ordering::Greater),
                    (Some(_), None) => Some(Ordering::Less),
                    (None, None) => None,
                }
            }
        }
    }
}

impl fmt::Display for IteratedLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.normalized();
        if let Some(l10) = n.log10() {
            write!(f, "log10 = {l10:.6}")
        } else if let Some(ll) = n.log10_log10() {
            write!(f, "log10 log10 = {ll:.6}")
        } else {
            write!(f, "ln^{} = {:.6}", n.depth, n.value)
        }
    }
}
