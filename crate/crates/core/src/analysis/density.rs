//! Covering-radius bounds for finite orbits on the torus.

use crate::geom::{frac, torus_dist, Point};

fn cell_of(p: Point, res: usize) -> (usize, usize) {
    let c = |x: f64| ((frac(x) * res as f64) as usize).min(res - 1);
    (c(p[0]), c(p[1]))
}

fn center(i: usize, j: usize, res: usize) -> Point {
    let h = 1.0 / res as f64;
    [(i as f64 + 0.5) * h, (j as f64 + 0.5) * h]
}

fn half_diagonal(res: usize) -> f64 {
    std::f64::consts::SQRT_2 / (2.0 * res as f64)
}

/// Upper bound on the covering radius of `orbit`: the largest distance from a
/// cell center of a `grid_res x grid_res` grid to its nearest orbit point,
/// plus the cell half-diagonal.
pub fn density_gap(orbit: &[Point], grid_res: usize) -> f64 {
    if orbit.is_empty() {
        return f64::INFINITY;
    }
    let res = grid_res.max(1);
    let mut buckets: Vec<Vec<Point>> = vec![Vec::new(); res * res];
    for &p in orbit {
        let (i, j) = cell_of(p, res);
        buckets[i * res + j].push(p);
    }
    let w = 1.0 / res as f64;
    let mut worst: f64 = 0.0;
    for ci in 0..res {
        for cj in 0..res {
            let c = center(ci, cj, res);
            let mut best = f64::INFINITY;
            let mut r = 0usize;
            loop {
                let ri = r as isize;
                for di in -ri..=ri {
                    for dj in -ri..=ri {
                        if di.abs().max(dj.abs()) != ri {
                            continue;
                        }
                        let bi = (ci as isize + di).rem_euclid(res as isize) as usize;
                        let bj = (cj as isize + dj).rem_euclid(res as isize) as usize;
                        for &p in &buckets[bi * res + bj] {
                            best = best.min(torus_dist(c, p));
                        }
                    }
                }
                // points beyond ring r are at least (r + 1/2) w away
                if best <= (r as f64 + 0.5) * w || 2 * r + 1 >= res {
                    break;
                }
                r += 1;
            }
            worst = worst.max(best);
        }
    }
    worst + half_diagonal(res)
}

/// Streaming variant of [`density_gap`] for orbits too long to store. Each
/// point only updates the cells in its 3x3 neighbourhood, so the result is
/// still an upper bound, and it is exact once every cell has an orbit point
/// within 1.5 cell widths of its center.
#[derive(Debug, Clone)]
pub struct DensityAccumulator {
    res: usize,
    mins: Vec<f64>,
    count: u64,
    kept: Vec<Point>,
    keep_limit: usize,
}

impl DensityAccumulator {
    pub fn new(grid_res: usize) -> Self {
        let res = grid_res.max(1);
        Self { res, mins: vec![f64::INFINITY; res * res], count: 0, kept: Vec::new(), keep_limit: 0 }
    }

    /// Also stores up to `keep_limit` points so that [`DensityAccumulator::refined_gap`]
    /// can fall back to the exact search.
    pub fn keeping(grid_res: usize, keep_limit: usize) -> Self {
        Self { keep_limit, ..Self::new(grid_res) }
    }

    pub fn push(&mut self, p: Point) {
        let res = self.res;
        let (i, j) = cell_of(p, res);
        let reach: isize = if res >= 3 { 1 } else { 0 };
        for di in -reach..=reach {
            for dj in -reach..=reach {
                let bi = (i as isize + di).rem_euclid(res as isize) as usize;
                let bj = (j as isize + dj).rem_euclid(res as isize) as usize;
                let d = torus_dist(center(bi, bj, res), p);
                let m = &mut self.mins[bi * res + bj];
                if d < *m {
                    *m = d;
                }
            }
        }
        self.count += 1;
        if self.kept.len() < self.keep_limit {
            self.kept.push(p);
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn gap(&self) -> f64 {
        self.mins.iter().cloned().fold(0.0, f64::max) + half_diagonal(self.res)
    }

    /// [`DensityAccumulator::gap`], replaced by [`density_gap`] of the stored
    /// points when every pushed point was stored.
    pub fn refined_gap(&self) -> f64 {
        let g = self.gap();
        if g.is_finite() && self.mins.iter().all(|m| *m <= 1.5 / self.res as f64) {
            return g;
        }
        if self.count as usize == self.kept.len() && !self.kept.is_empty() {
            return g.min(density_gap(&self.kept, self.res));
        }
        g
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_covering_radius() {
        let orbit: Vec<Point> = (0..100).map(|k| [(k / 10) as f64 / 10.0, (k % 10) as f64 / 10.0]).collect();
        let g = density_gap(&orbit, 100);
        let exact = 2f64.sqrt() / 20.0;
        assert!(g >= exact - 1e-12 && g <= exact + half_diagonal(100) + 1e-12, "{g}");
    }

    #[test]
    fn single_point() {
        let g = density_gap(&[[0.25, 0.25]], 16);
        let far = 2f64.sqrt() / 2.0;
        assert!(g <= far + half_diagonal(16) + 1e-12 && g >= far - half_diagonal(16), "{g}");
    }

    #[test]
    fn streaming_bounds_exact() {
        let orbit: Vec<Point> = (0..5000).map(|k| [frac(k as f64 * 0.618_034), frac(k as f64 * 0.414_214)]).collect();
        let mut acc = DensityAccumulator::new(16);
        for &p in &orbit {
            acc.push(p);
        }
        let exact = density_gap(&orbit, 16);
        assert!(acc.gap() >= exact - 1e-15);
        assert!((acc.gap() - exact).abs() < 1e-12);
    }
}
