//! Measurements on torus maps and their lifts.

mod density;
mod record;

pub use density::{density_gap, DensityAccumulator};
pub use record::{append_ledger, Measurement};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{frac, norm, sub, Point};
use crate::maps::{jacobian_defect, Mapping, PlaneMap};

/// A point of the plane tracked as a lift of a torus point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LiftedPoint {
    pub lift: Point,
}

impl LiftedPoint {
    pub fn new(lift: Point) -> Self {
        Self { lift }
    }

    pub fn base(&self) -> Point {
        [frac(self.lift[0]), frac(self.lift[1])]
    }

    pub fn step<M: Mapping + ?Sized>(&self, f: &M) -> Result<Self> {
        let p = f.map(self.lift)?;
        if !p[0].is_finite() || !p[1].is_finite() {
            return Err(Error::NonFinite { map: "lift".into(), x: p[0], y: p[1] });
        }
        Ok(Self { lift: p })
    }
}

/// `(F^n(z) - z) / n`.
pub fn rotation_vector_estimate<M: Mapping + ?Sized>(f: &M, z: LiftedPoint, n: u64) -> Result<Point> {
    if n == 0 {
        return Err(Error::Domain("n must be at least 1".into()));
    }
    let mut cur = z;
    for _ in 0..n {
        cur = cur.step(f)?;
    }
    let d = sub(cur.lift, z.lift);
    Ok([d[0] / n as f64, d[1] / n as f64])
}

/// `max ||F^n(z) - z - n omega||` over the samples and `1 <= n <= n_max`.
pub fn bmm_deviation<M: Mapping + ?Sized>(f: &M, omega: Point, samples: &[Point], n_max: u64) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &z in samples {
        let mut cur = LiftedPoint::new(z);
        for n in 1..=n_max {
            cur = cur.step(f)?;
            let nf = n as f64;
            let dev = [cur.lift[0] - z[0] - nf * omega[0], cur.lift[1] - z[1] - nf * omega[1]];
            worst = worst.max(norm(dev));
        }
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiophantineOutcome {
    pub pass: bool,
    /// First violating `k`, or the `k` with the smallest margin when passing.
    pub worst_k: Option<[i64; 2]>,
    /// `||k . alpha|| (|k1|+|k2|)^sigma / gamma` at `worst_k`; below 1 means violation.
    pub worst_ratio: f64,
}

/// Checks `||k1 a1 + k2 a2|| >= gamma / (|k1|+|k2|)^sigma` for `0 < |k1|+|k2| <= k_max`,
/// where `||.||` is the distance to the nearest integer.
pub fn diophantine_test(alpha: Point, gamma: f64, sigma: f64, k_max: u32) -> DiophantineOutcome {
    let mut best = DiophantineOutcome { pass: true, worst_k: None, worst_ratio: f64::INFINITY };
    let km = k_max as i64;
    for s in 1..=km {
        for k1 in -s..=s {
            let r = s - k1.abs();
            let k2s: &[i64] = if r == 0 { &[0] } else { &[-r, r] };
            for &k2 in k2s {
                let v = k1 as f64 * alpha[0] + k2 as f64 * alpha[1];
                let dist = (v - v.round()).abs();
                let ratio = dist * (s as f64).powf(sigma) / gamma;
                if ratio < 1.0 {
                    return DiophantineOutcome { pass: false, worst_k: Some([k1, k2]), worst_ratio: ratio };
                }
                if ratio < best.worst_ratio {
                    best.worst_ratio = ratio;
                    best.worst_k = Some([k1, k2]);
                }
            }
        }
    }
    best
}

/// Sampling of the strip `B_rho`: `per_period` real points times `im_levels`
/// imaginary levels per coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StripGrid {
    pub per_period: usize,
    pub im_levels: usize,
}

impl Default for StripGrid {
    fn default() -> Self {
        Self { per_period: 256, im_levels: 17 }
    }
}

impl StripGrid {
    /// Sample values of one complex coordinate; imaginary levels are symmetric
    /// about 0 and stay inside the open strip.
    pub fn coordinate_samples(&self, rho: f64) -> Vec<Complex64> {
        let l = self.im_levels.max(1);
        let mut out = Vec::with_capacity(self.per_period * l);
        for i in 0..self.per_period {
            let re = i as f64 / self.per_period as f64;
            for k in 0..l {
                let im = rho * (-1.0 + 2.0 * (k + 1) as f64 / (l + 1) as f64);
                out.push(Complex64::new(re, im));
            }
        }
        out
    }
}

/// Sampled lower bound of `d_rho(f, g) = max(d~(f, g), d~(f^-1, g^-1))`, where
/// `d~` takes for each coordinate function the smallest sup over the strip of
/// `|f_i - g_i - k|`, `k in {-1, 0, 1}`.
pub fn strip_distance(f: &PlaneMap, g: &PlaneMap, rho: f64, grid: StripGrid) -> Result<f64> {
    let samples = grid.coordinate_samples(rho);
    // sups[coordinate function][shift]
    let mut sups = [[0.0f64; 3]; 4];
    let eval = |name: &str, m: &PlaneMap, z: [Complex64; 2], inverse: bool| -> Result<[Complex64; 2]> {
        let r = if inverse { m.apply_inverse(z) } else { m.apply(z) };
        r.map_err(|e| Error::Overflow(format!("strip evaluation of {name} at ({}, {}): {e}", z[0], z[1])))
    };
    for &z1 in &samples {
        for &z2 in &samples {
            let z = [z1, z2];
            let fz = eval("f", f, z, false)?;
            let gz = eval("g", g, z, false)?;
            let fi = eval("f^-1", f, z, true)?;
            let gi = eval("g^-1", g, z, true)?;
            let diffs = [fz[0] - gz[0], fz[1] - gz[1], fi[0] - gi[0], fi[1] - gi[1]];
            for (c, d) in diffs.iter().enumerate() {
                for (s, k) in [-1.0, 0.0, 1.0].iter().enumerate() {
                    let v = (d - k).norm();
                    if !v.is_finite() {
                        return Err(Error::Overflow(format!("non-finite strip difference at ({z1}, {z2})")));
                    }
                    sups[c][s] = sups[c][s].max(v);
                }
            }
        }
    }
    Ok(sups.iter().map(|s| s.iter().cloned().fold(f64::INFINITY, f64::min)).fold(0.0, f64::max))
}

/// Sampled `d_C0(F, G) = sup |F(z) - G(z)|` over a grid of `[0,1)^2`.
pub fn c0_distance<F: Mapping + ?Sized, G: Mapping + ?Sized>(f: &F, g: &G, res: usize) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for p in cell_centers(res) {
        worst = worst.max(norm(sub(f.map(p)?, g.map(p)?)));
    }
    Ok(worst)
}

/// Centers `((i+1/2)/res, (j+1/2)/res)` of a regular grid on `[0,1)^2`.
pub fn cell_centers(res: usize) -> impl Iterator<Item = Point> {
    let h = 1.0 / res as f64;
    (0..res).flat_map(move |i| (0..res).map(move |j| [(i as f64 + 0.5) * h, (j as f64 + 0.5) * h]))
}

/// `max |det D - 1|` of the central-difference derivative (step `1e-5`) over
/// the centers of a `grid_res x grid_res` grid.
pub fn area_defect<M: Mapping + ?Sized>(map: &M, grid_res: usize) -> f64 {
    cell_centers(grid_res).map(|p| jacobian_defect(map, p, 1e-5)).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::FnMapping;

    #[test]
    fn translation_rotation_vector() {
        let t = PlaneMap::translation([0.01, 0.1]);
        let r = rotation_vector_estimate(&t, LiftedPoint::new([0.3, 0.7]), 10_000).unwrap();
        assert!((r[0] - 0.01).abs() < 1e-12 && (r[1] - 0.1).abs() < 1e-12);
        let id = PlaneMap::identity();
        assert_eq!(rotation_vector_estimate(&id, LiftedPoint::new([0.3, 0.7]), 5).unwrap(), [0.0, 0.0]);
        assert!(rotation_vector_estimate(&id, LiftedPoint::new([0.3, 0.7]), 0).is_err());
    }

    #[test]
    fn bmm_of_translations() {
        let t = PlaneMap::translation([0.01, 0.1]);
        let zs = [[0.1, 0.2], [0.5, 0.9]];
        assert!(bmm_deviation(&t, [0.01, 0.1], &zs, 1000).unwrap() < 1e-9 * 1000.0);
        let wrong = bmm_deviation(&t, [0.02, 0.1], &zs, 1000).unwrap();
        assert!((wrong - 10.0).abs() < 1e-6);
    }

    #[test]
    fn diophantine_examples() {
        let res = diophantine_test([0.01, 0.1], 1e-6, 2.0, 110);
        assert!(!res.pass);
        let res = diophantine_test([2f64.sqrt() - 1.0, 3f64.sqrt() - 1.0], 1e-3, 3.0, 200);
        assert!(res.pass);
        // frozen from an independent brute-force scan
        assert_eq!(res.worst_k, Some([0, -1]));
        assert!((res.worst_ratio - 267.949).abs() < 1e-3);
        assert!(diophantine_test([0.01, 0.1], 1.0, 2.0, 0).pass);
    }

    #[test]
    fn strip_distance_of_translation() {
        let grid = StripGrid { per_period: 8, im_levels: 3 };
        let t = PlaneMap::translation([0.3, 0.0]);
        let id = PlaneMap::identity();
        let d = strip_distance(&t, &id, 0.1, grid).unwrap();
        assert!((d - 0.3).abs() < 1e-12);
        assert_eq!(strip_distance(&t, &t, 0.1, grid).unwrap(), 0.0);
        let far = PlaneMap::translation([0.9, 0.0]);
        assert!((strip_distance(&far, &id, 0.1, grid).unwrap() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn area_defect_controls() {
        assert!(area_defect(&PlaneMap::identity(), 64) < 1e-12);
        let doubling = FnMapping(|p: Point| [frac(2.0 * p[0]), p[1]]);
        let d = area_defect(&doubling, 16);
        assert!((d - 1.0).abs() < 1e-6, "{d}");
    }

    #[test]
    fn lifted_point_tracks_winding() {
        let t = PlaneMap::translation([0.37, 0.91]);
        let mut z = LiftedPoint::new([0.5, 0.5]);
        for _ in 0..1000 {
            let base = z.base();
            z = z.step(&t).unwrap();
            let expect = [frac(base[0] + 0.37), frac(base[1] + 0.91)];
            assert!(crate::geom::torus_dist(z.base(), expect) < 1e-12);
        }
    }
}
