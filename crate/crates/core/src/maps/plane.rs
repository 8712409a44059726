//! Closed-form maps of the plane: analytic shears, block-slide conjugacies,
//! translations and their compositions. Every map descends to the torus.

use std::fmt;
use std::ops::{Add, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::profile::{AnalyticProfile, Overflow};
use crate::error::{Error, Result};
use crate::geom::Point;

/// Scalar type a map can be evaluated on: real points or points of `C^2`.
pub trait Coord: Copy + Add<Output = Self> + Sub<Output = Self> + Add<f64, Output = Self> {
    fn profile(p: &AnalyticProfile, x: Self) -> std::result::Result<Self, Overflow>;
    fn finite(self) -> bool;
    fn real(self) -> f64;
}

impl Coord for f64 {
    #[inline]
    fn profile(p: &AnalyticProfile, x: f64) -> std::result::Result<f64, Overflow> {
        Ok(p.eval(x))
    }
    #[inline]
    fn finite(self) -> bool {
        self.is_finite()
    }
    #[inline]
    fn real(self) -> f64 {
        self
    }
}

impl Coord for Complex64 {
    fn profile(p: &AnalyticProfile, z: Complex64) -> std::result::Result<Complex64, Overflow> {
        p.eval_complex(z)
    }
    fn finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
    fn real(self) -> f64 {
        self.re
    }
}

/// A point `(z1, z2)` of `C^2`.
pub type ComplexPoint = [Complex64; 2];

/// Membership in the strip `B_rho = {|Im z1|, |Im z2| < rho}`.
pub fn in_strip(p: &ComplexPoint, rho: f64) -> bool {
    p[0].im.abs() < rho && p[1].im.abs() < rho
}

pub fn complexify(p: Point) -> ComplexPoint {
    [Complex64::new(p[0], 0.0), Complex64::new(p[1], 0.0)]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    /// `(a, b) -> (a - s(b), b)`
    #[serde(rename = "horizontal-slide")]
    Horizontal,
    /// `(a, b) -> (a, b - s(a))`
    #[serde(rename = "vertical-slide")]
    Vertical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Shear {
    pub axis: Axis,
    pub profile: AnalyticProfile,
}

fn checked<C: Coord>(label: &str, p: [C; 2]) -> Result<[C; 2]> {
    if p[0].finite() && p[1].finite() {
        Ok(p)
    } else {
        Err(Error::NonFinite { map: label.to_string(), x: p[0].real(), y: p[1].real() })
    }
}

fn eval<C: Coord>(label: &str, prof: &AnalyticProfile, x: C, at: [C; 2]) -> Result<C> {
    C::profile(prof, x).map_err(|_| Error::NonFinite { map: label.to_string(), x: at[0].real(), y: at[1].real() })
}

impl Shear {
    pub fn vertical(profile: AnalyticProfile) -> Self {
        Self { axis: Axis::Vertical, profile }
    }

    pub fn horizontal(profile: AnalyticProfile) -> Self {
        Self { axis: Axis::Horizontal, profile }
    }

    fn label(&self) -> &'static str {
        match self.axis {
            Axis::Vertical => "vertical shear",
            Axis::Horizontal => "horizontal shear",
        }
    }

    pub fn apply<C: Coord>(&self, p: [C; 2]) -> Result<[C; 2]> {
        self.shift(p, false)
    }

    pub fn apply_inverse<C: Coord>(&self, p: [C; 2]) -> Result<[C; 2]> {
        self.shift(p, true)
    }

    fn shift<C: Coord>(&self, [a, b]: [C; 2], inverse: bool) -> Result<[C; 2]> {
        let label = self.label();
        let out = match self.axis {
            Axis::Vertical => {
                let s = eval(label, &self.profile, a, [a, b])?;
                [a, if inverse { b + s } else { b - s }]
            }
            Axis::Horizontal => {
                let s = eval(label, &self.profile, b, [a, b])?;
                [if inverse { a + s } else { a - s }, b]
            }
        };
        checked(label, out)
    }
}

/// `h(a,b) = (a - s_beta(b - s_alpha(a)), b - s_alpha(a))`, the horizontal
/// slide by `beta` after the vertical slide by `alpha`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockSlide {
    pub alpha: AnalyticProfile,
    pub beta: AnalyticProfile,
}

impl BlockSlide {
    pub fn new(alpha: AnalyticProfile, beta: AnalyticProfile) -> Result<Self> {
        if alpha.q() != beta.q() {
            return Err(Error::InvalidProfile(format!(
                "block slide profiles have periods 1/{} and 1/{}",
                alpha.q(),
                beta.q()
            )));
        }
        Ok(Self { alpha, beta })
    }

    pub fn identity(q: u64) -> Self {
        Self { alpha: AnalyticProfile::zero(q, 2), beta: AnalyticProfile::zero(q, 2) }
    }

    pub fn q(&self) -> u64 {
        self.alpha.q()
    }

    pub fn is_identity(&self) -> bool {
        self.alpha.is_zero() && self.beta.is_zero()
    }

    pub fn apply<C: Coord>(&self, [a, b]: [C; 2]) -> Result<[C; 2]> {
        let sa = eval("block slide (alpha)", &self.alpha, a, [a, b])?;
        let b1 = b - sa;
        let sb = eval("block slide (beta)", &self.beta, b1, [a, b])?;
        checked("block slide", [a - sb, b1])
    }

    pub fn apply_inverse<C: Coord>(&self, [a, b]: [C; 2]) -> Result<[C; 2]> {
        let sb = eval("block slide inverse (beta)", &self.beta, b, [a, b])?;
        let a1 = a + sb;
        let sa = eval("block slide inverse (alpha)", &self.alpha, a1, [a, b])?;
        checked("block slide inverse", [a1, b + sa])
    }
}

/// A map of the plane given in closed form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PlaneMap {
    Shear(Shear),
    BlockSlide(BlockSlide),
    Translation { offset: Point },
    /// Composition `maps[0] o maps[1] o ...`, applied right to left.
    Composition { maps: Vec<PlaneMap> },
    Inverse { map: Box<PlaneMap> },
}

impl PlaneMap {
    pub fn identity() -> Self {
        PlaneMap::Composition { maps: Vec::new() }
    }

    pub fn translation(offset: Point) -> Self {
        PlaneMap::Translation { offset }
    }

    pub fn compose(maps: Vec<PlaneMap>) -> Self {
        PlaneMap::Composition { maps }
    }

    pub fn inverse(&self) -> Self {
        match self {
            PlaneMap::Inverse { map } => (**map).clone(),
            PlaneMap::Translation { offset } => PlaneMap::Translation { offset: [-offset[0], -offset[1]] },
            PlaneMap::Composition { maps } => {
                PlaneMap::Composition { maps: maps.iter().rev().map(PlaneMap::inverse).collect() }
            }
            m => PlaneMap::Inverse { map: Box::new(m.clone()) },
        }
    }

    pub fn apply<C: Coord>(&self, p: [C; 2]) -> Result<[C; 2]> {
        match self {
            PlaneMap::Shear(s) => s.apply(p),
            PlaneMap::BlockSlide(h) => h.apply(p),
            PlaneMap::Translation { offset } => Ok([p[0] + offset[0], p[1] + offset[1]]),
            PlaneMap::Composition { maps } => maps.iter().rev().try_fold(p, |z, m| m.apply(z)),
            PlaneMap::Inverse { map } => map.apply_inverse(p),
        }
    }

    pub fn apply_inverse<C: Coord>(&self, p: [C; 2]) -> Result<[C; 2]> {
        match self {
            PlaneMap::Shear(s) => s.apply_inverse(p),
            PlaneMap::BlockSlide(h) => h.apply_inverse(p),
            PlaneMap::Translation { offset } => Ok([p[0] + -offset[0], p[1] + -offset[1]]),
            PlaneMap::Composition { maps } => maps.iter().try_fold(p, |z, m| m.apply_inverse(z)),
            PlaneMap::Inverse { map } => map.apply(p),
        }
    }
}

impl From<Shear> for PlaneMap {
    fn from(s: Shear) -> Self {
        PlaneMap::Shear(s)
    }
}

impl From<BlockSlide> for PlaneMap {
    fn from(h: BlockSlide) -> Self {
        PlaneMap::BlockSlide(h)
    }
}

impl fmt::Display for PlaneMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlaneMap::Shear(s) => write!(f, "{:?} shear (q={}, N={})", s.axis, s.profile.q(), s.profile.n()),
            PlaneMap::BlockSlide(h) => write!(f, "block slide (q={})", h.q()),
            PlaneMap::Translation { offset } => write!(f, "translation ({}, {})", offset[0], offset[1]),
            PlaneMap::Composition { maps } => write!(f, "composition of {} maps", maps.len()),
            PlaneMap::Inverse { map } => write!(f, "inverse of {map}"),
        }
    }
}

/// A real map of the plane (a lift of a torus map).
pub trait Mapping {
    fn map(&self, p: Point) -> Result<Point>;

    /// Derivative matrix at `p` by central differences with the given step.
    /// Closed-form composites difference each factor at its own input point
    /// and multiply (chain rule).
    fn jacobian(&self, p: Point, step: f64) -> Result<[[f64; 2]; 2]> {
        central_difference(&|z| self.map(z), p, step)
    }
}

impl<M: Mapping + ?Sized> Mapping for &M {
    fn map(&self, p: Point) -> Result<Point> {
        (**self).map(p)
    }

    fn jacobian(&self, p: Point, step: f64) -> Result<[[f64; 2]; 2]> {
        (**self).jacobian(p, step)
    }
}

fn matmul(a: [[f64; 2]; 2], b: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

const IDENTITY: [[f64; 2]; 2] = [[1.0, 0.0], [0.0, 1.0]];

impl PlaneMap {
    /// `(image, derivative)` of the forward or inverse map at `p`.
    fn jet(&self, p: Point, step: f64, inverse: bool) -> Result<(Point, [[f64; 2]; 2])> {
        let fd = |f: &dyn Fn(Point) -> Result<Point>| -> Result<(Point, [[f64; 2]; 2])> {
            Ok((f(p)?, central_difference(f, p, step)?))
        };
        match self {
            PlaneMap::Translation { .. } => Ok((if inverse { self.apply_inverse(p)? } else { self.apply(p)? }, IDENTITY)),
            PlaneMap::Shear(s) => {
                if inverse {
                    fd(&|z| s.apply_inverse(z))
                } else {
                    fd(&|z| s.apply(z))
                }
            }
            PlaneMap::BlockSlide(h) => {
                let v = PlaneMap::Shear(Shear::vertical(h.alpha.clone()));
                let hz = PlaneMap::Shear(Shear::horizontal(h.beta.clone()));
                let factors = if inverse { [hz, v] } else { [v, hz] };
                let mut z = p;
                let mut d = IDENTITY;
                for f in &factors {
                    let (z1, df) = f.jet(z, step, inverse)?;
                    d = matmul(df, d);
                    z = z1;
                }
                Ok((z, d))
            }
            PlaneMap::Composition { maps } => {
                let mut z = p;
                let mut d = IDENTITY;
                if inverse {
                    for m in maps.iter() {
                        let (z1, dm) = m.jet(z, step, true)?;
                        d = matmul(dm, d);
                        z = z1;
                    }
                } else {
                    for m in maps.iter().rev() {
                        let (z1, dm) = m.jet(z, step, false)?;
                        d = matmul(dm, d);
                        z = z1;
                    }
                }
                Ok((z, d))
            }
            PlaneMap::Inverse { map } => map.jet(p, step, !inverse),
        }
    }
}

impl Mapping for PlaneMap {
    fn map(&self, p: Point) -> Result<Point> {
        self.apply(p)
    }

    fn jacobian(&self, p: Point, step: f64) -> Result<[[f64; 2]; 2]> {
        Ok(self.jet(p, step, false)?.1)
    }
}

impl Mapping for BlockSlide {
    fn map(&self, p: Point) -> Result<Point> {
        self.apply(p)
    }

    fn jacobian(&self, p: Point, step: f64) -> Result<[[f64; 2]; 2]> {
        Ok(PlaneMap::BlockSlide(self.clone()).jet(p, step, false)?.1)
    }
}

impl Mapping for Shear {
    fn map(&self, p: Point) -> Result<Point> {
        self.apply(p)
    }
}

/// Adapts a closure into a [`Mapping`].
pub struct FnMapping<F>(pub F);

impl<F: Fn(Point) -> Point> Mapping for FnMapping<F> {
    fn map(&self, p: Point) -> Result<Point> {
        Ok((self.0)(p))
    }
}

/// Central-difference derivative matrix (row-major) of the whole map at `p`.
pub fn derivative<M: Mapping + ?Sized>(map: &M, p: Point, step: f64) -> Result<[[f64; 2]; 2]> {
    central_difference(&|z| map.map(z), p, step)
}

fn central_difference(map: &dyn Fn(Point) -> Result<Point>, p: Point, step: f64) -> Result<[[f64; 2]; 2]> {
    // divide by the representable spacing, not the nominal 2 * step
    let (a0, a1) = (p[0] - step, p[0] + step);
    let (b0, b1) = (p[1] - step, p[1] + step);
    let fa = map([a1, p[1]])?;
    let ba = map([a0, p[1]])?;
    let fb = map([p[0], b1])?;
    let bb = map([p[0], b0])?;
    let (ha, hb) = (a1 - a0, b1 - b0);
    Ok([
        [(fa[0] - ba[0]) / ha, (fb[0] - bb[0]) / hb],
        [(fa[1] - ba[1]) / ha, (fb[1] - bb[1]) / hb],
    ])
}

/// `|det D - 1|` for the derivative `D = map.jacobian(p, step)`.
/// Evaluation failures give `+inf` so that they register as defects.
pub fn jacobian_defect<M: Mapping + ?Sized>(map: &M, p: Point, step: f64) -> f64 {
    det_defect(map.jacobian(p, step))
}

/// [`jacobian_defect`] with the whole map differenced as a black box.
pub fn jacobian_defect_direct<M: Mapping + ?Sized>(map: &M, p: Point, step: f64) -> f64 {
    det_defect(derivative(map, p, step))
}

fn det_defect(d: Result<[[f64; 2]; 2]>) -> f64 {
    match d {
        Ok([[a, b], [c, d]]) => {
            let det = a * d - b * c;
            if det.is_finite() {
                (det - 1.0).abs()
            } else {
                f64::INFINITY
            }
        }
        Err(_) => f64::INFINITY,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::profile::StepProfile;

    fn prof(beta: Vec<f64>, q: u64) -> AnalyticProfile {
        let n = beta.len();
        AnalyticProfile::with_margin(StepProfile::new(beta, q, n, 1).unwrap(), 0.05, 0.3, 1.05).unwrap()
    }

    fn sample() -> BlockSlide {
        BlockSlide::new(prof(vec![0.0, 0.3, 0.0, 0.0], 3), prof(vec![0.0, 0.0, -0.2, 0.0], 3)).unwrap()
    }

    #[test]
    fn zero_block_slide_is_identity() {
        let h = BlockSlide::identity(5);
        assert_eq!(h.apply([0.3, 0.7]).unwrap(), [0.3, 0.7]);
    }

    #[test]
    fn inverse_round_trip() {
        let h = sample();
        for i in 0..200 {
            let p = [i as f64 * 0.00731, 1.0 - i as f64 * 0.00417];
            let back = h.apply(h.apply_inverse(p).unwrap()).unwrap();
            assert!((back[0] - p[0]).abs() < 1e-12 && (back[1] - p[1]).abs() < 1e-12);
            let back = h.apply_inverse(h.apply(p).unwrap()).unwrap();
            assert!((back[0] - p[0]).abs() < 1e-12 && (back[1] - p[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn commutes_with_rational_translations() {
        let h = sample();
        let p = [0.1234, 0.5678];
        let hp = h.apply(p).unwrap();
        for (k1, k2) in [(1, 0), (0, 1), (2, -1), (-3, 5)] {
            let v = [k1 as f64 / 3.0, k2 as f64 / 3.0];
            let lhs = h.apply([p[0] + v[0], p[1] + v[1]]).unwrap();
            assert!((lhs[0] - hp[0] - v[0]).abs() < 1e-12);
            assert!((lhs[1] - hp[1] - v[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn composition_is_right_to_left() {
        let t = PlaneMap::translation([0.5, 0.0]);
        let s = PlaneMap::Shear(Shear::vertical(prof(vec![0.25, 0.0], 1)));
        let ts = PlaneMap::compose(vec![t.clone(), s.clone()]);
        let p = [0.1, 0.1];
        let expect = t.apply(s.apply(p).unwrap()).unwrap();
        assert_eq!(ts.apply(p).unwrap(), expect);
        let back = ts.inverse().apply(expect).unwrap();
        assert!((back[0] - p[0]).abs() < 1e-14 && (back[1] - p[1]).abs() < 1e-14);
    }

    #[test]
    fn complex_agrees_on_real_axis() {
        let h = PlaneMap::BlockSlide(sample());
        let p = [0.21, 0.83];
        let r = h.apply(p).unwrap();
        let c = h.apply(complexify(p)).unwrap();
        assert!((c[0].re - r[0]).abs() < 1e-12 && c[0].im.abs() < 1e-12);
        assert!((c[1].re - r[1]).abs() < 1e-12 && c[1].im.abs() < 1e-12);
    }

    #[test]
    fn shear_is_unimodular() {
        let s = Shear::horizontal(prof(vec![0.5, -0.5, 0.0, 0.25], 2));
        for i in 0..100 {
            let p = [i as f64 * 0.0093, i as f64 * 0.0071];
            assert!(jacobian_defect(&s, p, 1e-5) < 1e-6);
        }
        assert_eq!(jacobian_defect(&PlaneMap::identity(), [0.3, 0.4], 1e-5), 0.0);
    }

    #[test]
    fn json_round_trip_is_lossless() {
        let m = PlaneMap::compose(vec![
            PlaneMap::BlockSlide(sample()),
            PlaneMap::translation([0.1, 1.0 / 3.0]),
            PlaneMap::BlockSlide(sample()).inverse(),
        ]);
        let s = serde_json::to_string(&m).unwrap();
        let back: PlaneMap = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
        assert!(s.contains("\"kind\":\"block-slide\""));
    }

    #[test]
    fn json_rejects_inadmissible_profile() {
        let s = r#"{"beta":[0.5,0.0],"q":1,"N":2,"m":1,"epsilon":0.1,"delta":0.5,"A":1.0}"#;
        assert!(serde_json::from_str::<AnalyticProfile>(s).is_err());
    }
}
