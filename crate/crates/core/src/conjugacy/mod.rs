//! Block-slide conjugacies that move a close pair of points to a far pair.
//!
//! Given `q`, `sigma` and torus points `x`, `y` off the rational grid,
//! [`build_conjugacy`] produces a real-analytic block slide `h` commuting with
//! the `1/q` translations, points `x'`, `y'` that `h` sends near `x`, `y`, and an
//! even `N` such that `h T_(2/(Nq), 0)` brings `x'`, `y'` back within `sigma`.

mod exact;

pub use exact::{step_dry_run, DryRun, ExactStepSlide};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{add, frac, irrational_direction, norm, reduce, scale, sub, torus_dist, wrap_centered, Point};
use crate::maps::{jacobian_defect, AnalyticProfile, BlockSlide, StepProfile};
use crate::report::{Check, Relation, VerificationReport};

/// Tunables of the construction and of its audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConjugacyConfig {
    /// Gamma-avoidance uses denominators up to `denom_factor * N * q`.
    pub denom_factor: u64,
    /// Upper bound for the Gamma-avoidance tolerance; see [`ConjugacyConfig::gamma_tolerance`].
    pub gamma_tol: f64,
    pub n_ceiling: usize,
    pub eps_halvings: u32,
    /// `A = a_margin * A0^(1)`.
    pub a_margin: f64,
    pub perturb_step: f64,
    pub perturb_max: u32,
    pub lift_grid: usize,
    pub lift_slack: f64,
    pub commute_tol: f64,
    pub commute_grid: usize,
    pub jacobian_grid: usize,
    pub jacobian_step: f64,
    pub jacobian_tol: f64,
}

impl Default for ConjugacyConfig {
    fn default() -> Self {
        Self {
            denom_factor: 8,
            gamma_tol: 1e-9,
            n_ceiling: 1_000_000,
            eps_halvings: 20,
            a_margin: 1.05,
            perturb_step: 1e-7,
            perturb_max: 10_000,
            lift_grid: 64,
            lift_slack: 1e-9,
            commute_tol: 1e-12,
            commute_grid: 16,
            jacobian_grid: 32,
            jacobian_step: 1e-5,
            jacobian_tol: 1e-6,
        }
    }
}

impl ConjugacyConfig {
    /// `min(gamma_tol, 0.1 / D^2)`. A generic point is only about `1/D^2` away
    /// from the nearest fraction of denominator at most `D`, so a fixed
    /// tolerance would reject almost every point once `D` is large.
    pub fn gamma_tolerance(&self, denom_bound: u64) -> f64 {
        let d = denom_bound as f64;
        self.gamma_tol.min(0.1 / (d * d))
    }
}

/// Distance from the coordinates of `p` to the fractions `k/d` with `d <= denom_bound`.
pub fn gamma_distance(p: Point, denom_bound: u64) -> f64 {
    let mut best = f64::INFINITY;
    for c in p {
        let c = frac(c);
        for d in 1..=denom_bound.max(1) {
            let df = d as f64;
            let dist = (c - (c * df).round() / df).abs();
            if dist < best {
                best = dist;
                if best == 0.0 {
                    return 0.0;
                }
            }
        }
    }
    best
}

/// Cells `(floor(p_1 n q), floor(p_2 n q))` of a point of `[0,1)^2`.
pub fn cell_indices(p: Point, q: u64, n: usize) -> Result<(u64, u64)> {
    let cells = n as u64 * q;
    let cf = cells as f64;
    let mut out = [0u64; 2];
    for (t, &c) in p.iter().enumerate() {
        if !(0.0..1.0).contains(&c) {
            return Err(Error::Domain(format!("coordinate {c} outside [0,1)")));
        }
        let s = c * cf;
        if (s - s.round()).abs() < 1e-9 {
            return Err(Error::GridCollision { coord: t, value: c, denom: cells });
        }
        out[t] = (s.floor() as u64).min(cells - 1);
    }
    Ok((out[0], out[1]))
}

/// The smallest even integer strictly greater than `max(3, 4/(q sigma))`.
pub fn n_lower_bound(q: u64, sigma: f64) -> usize {
    let lower = (4.0 / (q as f64 * sigma)).max(3.0);
    let mut n = lower.floor() as usize + 1;
    if n % 2 == 1 {
        n += 1;
    }
    n
}

fn dist_to_lattice(t: f64, q: u64) -> f64 {
    let s = t * q as f64;
    (s - s.round()).abs() / q as f64
}

/// Smallest admissible even `N` for the representatives `x`, `y` in `[0,1)^2`.
pub fn select_n(q: u64, sigma: f64, x: Point, y: Point, ceiling: usize) -> Result<usize> {
    let gap = dist_to_lattice(x[0] - y[0], q).min(dist_to_lattice(x[1] - y[1], q)).min((1.0 - y[0]) / 4.0);
    if !(gap > 0.0) {
        return Err(Error::Domain(format!("x - y lies on the 1/{q} lattice or y_1 = 1")));
    }
    let mut n = n_lower_bound(q, sigma);
    while n <= ceiling {
        if 1.0 / (q as f64 * n as f64) < gap {
            let (i1, i2) = cell_indices(x, q, n)?;
            let (j1, j2) = cell_indices(y, q, n)?;
            let nn = n as u64;
            if i1 % nn != j1 % nn && i2 % nn != j2 % nn {
                return Ok(n);
            }
        }
        n += 2;
    }
    Err(Error::SearchExhausted(format!("no admissible even N below the ceiling {ceiling}")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cells {
    pub i1: u64,
    pub i2: u64,
    pub j1: u64,
    pub j2: u64,
}

/// The vertical (`alpha`) and horizontal (`beta`) step profiles, each with one nonzero entry.
pub fn build_profiles(x: Point, y: Point, n: usize, q: u64) -> Result<(StepProfile, StepProfile, Cells)> {
    let (i1, i2) = cell_indices(x, q, n)?;
    let (j1, j2) = cell_indices(y, q, n)?;
    let nq = (n as u64 * q) as f64;
    let nn = n as u64;
    let mut beta = vec![0.0; n];
    beta[(i2 % nn) as usize] = (j1 as f64 + 1.5) / nq - x[0];
    let mut alpha = vec![0.0; n];
    alpha[((j1 + 1) % nn) as usize] = (j2 as f64 + 0.5) / nq - x[1];
    Ok((StepProfile::new(alpha, q, n, 1)?, StepProfile::new(beta, q, n, 1)?, Cells { i1, i2, j1, j2 }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConjugacyRequest {
    pub q: u64,
    pub sigma: f64,
    pub x: Point,
    pub y: Point,
}

impl ConjugacyRequest {
    pub fn new(q: u64, sigma: f64, x: Point, y: Point) -> Self {
        Self { q, sigma, x: reduce(x), y: reduce(y) }
    }

    /// Denominator bound used for the hypotheses on `x`, `y`: `denom_factor * q * N0`
    /// with `N0` the lower bound for `N`.
    pub fn denom_bound(&self, cfg: &ConjugacyConfig) -> u64 {
        cfg.denom_factor * self.q * n_lower_bound(self.q, self.sigma) as u64
    }

    pub fn validate(&self, cfg: &ConjugacyConfig) -> Result<()> {
        if self.q < 2 {
            return Err(Error::Domain(format!("q = {} must be at least 2", self.q)));
        }
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::Domain(format!("sigma = {} must be positive", self.sigma)));
        }
        let d = self.denom_bound(cfg);
        let tol = cfg.gamma_tolerance(d);
        for (what, p) in [("x", self.x), ("y", self.y), ("x - y", sub(self.x, self.y))] {
            let g = gamma_distance(p, d);
            if !(g > tol) {
                return Err(Error::GammaResonance { what: what.into(), distance: g, tol });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConjugacyResult {
    pub h: BlockSlide,
    pub x_prime: Point,
    pub y_prime: Point,
    #[serde(rename = "N")]
    pub n: usize,
    pub delta: f64,
    pub epsilon: f64,
    #[serde(rename = "A")]
    pub a: f64,
    pub cells: Cells,
    /// The construction runs on `x + shift/q`, `y + shift/q`.
    pub shift: [u64; 2],
    /// Number of `perturb_step` moves applied to `x'` and `y'`.
    pub perturb_steps: [u32; 2],
}

impl ConjugacyResult {
    pub fn cells_total(&self) -> u64 {
        self.n as u64 * self.h.q()
    }

    /// The translation `T_(2/(Nq), 0)`.
    pub fn offset(&self) -> Point {
        [2.0 / self.cells_total() as f64, 0.0]
    }
}

/// For each coordinate, the shift by `k/q` placing both points on one side of
/// the seam with the most clearance. `h` commutes with these shifts, so
/// building on shifted points and shifting back is harmless.
pub fn choose_shift(q: u64, x: Point, y: Point) -> [u64; 2] {
    let mut out = [0u64; 2];
    for t in 0..2 {
        let mut best = (f64::NEG_INFINITY, 0u64);
        for k in 0..q {
            let s = k as f64 / q as f64;
            let a = frac(x[t] + s);
            let b = frac(y[t] + s);
            if (a - b).abs() > 0.5 {
                continue;
            }
            let clearance = a.min(b).min(1.0 - a.max(b));
            if clearance > best.0 {
                best = (clearance, k);
            }
        }
        out[t] = best.1;
    }
    out
}

fn shift_point(p: Point, shift: [u64; 2], q: u64, sign: f64) -> Point {
    reduce([p[0] + sign * shift[0] as f64 / q as f64, p[1] + sign * shift[1] as f64 / q as f64])
}

/// Shifted representatives `(x~, y~)` of a request.
pub fn representatives(req: &ConjugacyRequest, shift: [u64; 2]) -> (Point, Point) {
    (shift_point(req.x, shift, req.q, 1.0), shift_point(req.y, shift, req.q, 1.0))
}

fn grid_distance(c: f64, cells: f64) -> f64 {
    let s = c * cells;
    (s - s.round()).abs()
}

/// Runs the construction. Fails with the measured defects when no `epsilon`
/// on the halving schedule gives a result passing [`verify_conjugacy`].
pub fn build_conjugacy(req: &ConjugacyRequest, cfg: &ConjugacyConfig) -> Result<ConjugacyResult> {
    req.validate(cfg)?;
    let q = req.q;
    let shift = choose_shift(q, req.x, req.y);
    let (xt, yt) = representatives(req, shift);
    let n = select_n(q, req.sigma, xt, yt, cfg.n_ceiling)?;
    let (alpha, beta, cells) = build_profiles(xt, yt, n, q)?;
    let nq = (n as u64 * q) as f64;

    let hx = [(cells.j1 as f64 + 1.5) / nq, (cells.j2 as f64 + 0.5) / nq];
    let marked = [xt, yt, hx, yt];
    let closest = marked.iter().flat_map(|p| p.iter()).map(|&c| grid_distance(c, nq)).fold(f64::INFINITY, f64::min);
    let delta = closest.min(0.5);
    if !(delta > 0.0) {
        return Err(Error::GridCollision { coord: 0, value: closest, denom: nq as u64 });
    }

    let nonzero = alpha.beta.iter().chain(beta.beta.iter()).filter(|b| **b != 0.0).map(|b| b.abs());
    let eps0 = 0.9 * nonzero.fold(1.0 / 9.0, f64::min);
    let offset = [2.0 / nq, 0.0];
    let denom = cfg.denom_factor * n as u64 * q;
    let tol = cfg.gamma_tolerance(denom);

    let mut last_failing = vec!["no epsilon on the schedule met the sigma conditions".to_string()];
    for i in 0..=cfg.eps_halvings {
        let epsilon = eps0 / 2f64.powi(i as i32);
        let sa = AnalyticProfile::with_margin(alpha.clone(), epsilon, delta, cfg.a_margin)?;
        let sb = AnalyticProfile::with_margin(beta.clone(), epsilon, delta, cfg.a_margin)?;
        let a = sa.a().max(sb.a());
        let h = BlockSlide::new(sa, sb)?;
        let xp = h.apply_inverse(xt)?;
        let yp = h.apply_inverse(yt)?;
        let near = torus_dist(xp, yp) < req.sigma
            && torus_dist(h.apply(add(xp, offset))?, h.apply(add(yp, offset))?) < req.sigma;
        if !near {
            continue;
        }
        let (x_prime, sx) = avoid_gamma(shift_point(xp, shift, q, -1.0), denom, tol, None, cfg)?;
        let (y_prime, sy) = avoid_gamma(shift_point(yp, shift, q, -1.0), denom, tol, Some(x_prime), cfg)?;
        let res = ConjugacyResult {
            h,
            x_prime,
            y_prime,
            n,
            delta,
            epsilon,
            a,
            cells,
            shift,
            perturb_steps: [sx, sy],
        };
        let report = verify_conjugacy(&res, req, cfg);
        if report.all_pass() {
            return Ok(res);
        }
        last_failing = report.failing();
    }
    Err(Error::ConjugacyFailed { failing: last_failing })
}

/// Moves `p` along the golden direction in `perturb_step` increments until it
/// (and `p - other`, when given) clears the Gamma tolerance.
fn avoid_gamma(p: Point, denom: u64, tol: f64, other: Option<Point>, cfg: &ConjugacyConfig) -> Result<(Point, u32)> {
    let dir = irrational_direction();
    let mut cur = p;
    for k in 0..=cfg.perturb_max {
        let ok = gamma_distance(cur, denom) > tol && other.map_or(true, |o| gamma_distance(sub(cur, o), denom) > tol);
        if ok {
            return Ok((cur, k));
        }
        cur = reduce(add(cur, scale(dir, cfg.perturb_step)));
    }
    Err(Error::GammaResonance { what: "witness preimage".into(), distance: gamma_distance(cur, denom), tol })
}

/// Sample points `((i + 1/phi) / res, (j + 1/phi^2) / res)`, offset off every rational grid.
pub fn offset_grid(res: usize) -> impl Iterator<Item = Point> {
    let ox = 0.618_033_988_749_895;
    let oy = 0.381_966_011_250_105;
    let h = 1.0 / res as f64;
    (0..res).flat_map(move |i| (0..res).map(move |j| [(i as f64 + ox) * h, (j as f64 + oy) * h]))
}

/// Audits each assertion of the construction; one entry per property.
pub fn verify_conjugacy(res: &ConjugacyResult, req: &ConjugacyRequest, cfg: &ConjugacyConfig) -> VerificationReport {
    let mut r = VerificationReport::new(format!("conjugacy q={} N={} sigma={:e}", req.q, res.n, req.sigma));
    let h = &res.h;
    let q = req.q;
    r.push(Check::new("N even", (res.n % 2) as f64, Relation::Eq, 0.0));
    r.push(Check::new("N >= 4", res.n as f64, Relation::Gt, 3.0));

    // commutation with the 1/q translations
    let qf = q as f64;
    let mut defect: f64 = 0.0;
    let mut failed = false;
    let pts: Vec<Point> = offset_grid(cfg.commute_grid).chain([res.x_prime, res.y_prime]).collect();
    for p in &pts {
        for v in [[1.0 / qf, 0.0], [0.0, 1.0 / qf]] {
            match (h.apply(add(*p, v)), h.apply(*p)) {
                (Ok(a), Ok(b)) => {
                    let d = sub(sub(a, b), v);
                    defect = defect.max(d[0].abs().max(d[1].abs()));
                }
                _ => failed = true,
            }
        }
    }
    r.push(Check::new("commutation defect", if failed { f64::INFINITY } else { defect }, Relation::Lt, cfg.commute_tol));

    let offset = res.offset();
    let sigma = req.sigma;
    let img = |p: Point| h.apply(p).ok();
    let dist_opt = |a: Option<Point>, b: Option<Point>| match (a, b) {
        (Some(a), Some(b)) => torus_dist(a, b),
        _ => f64::INFINITY,
    };
    r.push(Check::new("d(x', y')", torus_dist(res.x_prime, res.y_prime), Relation::Lt, sigma));
    r.push(Check::new("d(x, h x')", dist_opt(Some(req.x), img(res.x_prime)), Relation::Lt, sigma));
    r.push(Check::new("d(y, h y')", dist_opt(Some(req.y), img(res.y_prime)), Relation::Lt, sigma));
    r.push(Check::new(
        "d(h T x', h T y')",
        dist_opt(img(add(res.x_prime, offset)), img(add(res.y_prime, offset))),
        Relation::Lt,
        sigma,
    ));

    let denom = cfg.denom_factor * res.cells_total();
    let tol = cfg.gamma_tolerance(denom);
    let g = gamma_distance(res.x_prime, denom)
        .min(gamma_distance(res.y_prime, denom))
        .min(gamma_distance(sub(res.x_prime, res.y_prime), denom));
    r.push(Check::new("x', y', x'-y' avoid Gamma", g, Relation::Gt, tol));

    let mut lift: f64 = 0.0;
    for p in crate::geom::unit_grid(cfg.lift_grid).chain([res.x_prime, res.y_prime]) {
        lift = lift.max(match h.apply(p) {
            Ok(hp) => norm(sub(hp, p)),
            Err(_) => f64::INFINITY,
        });
    }
    let lift_bound = 2.0 * torus_dist(req.x, req.y) + 4.0 / res.cells_total() as f64 + cfg.lift_slack;
    r.push(Check::new("lift sup |h - Id|", lift, Relation::Le, lift_bound));

    let jac = offset_grid(cfg.jacobian_grid)
        .map(|p| jacobian_defect(h, p, cfg.jacobian_step))
        .fold(0.0, f64::max);
    r.push(Check::new("jacobian defect", jac, Relation::Lt, cfg.jacobian_tol));
    r
}

/// Signed plane offset from `y` to `x` through the shortest torus path.
pub fn torus_offset(x: Point, y: Point) -> Point {
    [wrap_centered(x[0] - y[0]), wrap_centered(x[1] - y[1])]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn request(q: u64, sigma: f64) -> ConjugacyRequest {
        let x = [0.5f64.sqrt(), 3f64.sqrt() - 1.0];
        let y = [x[0] + 0.0731 * 2f64.sqrt(), x[1] - 0.0417 * 5f64.sqrt()];
        ConjugacyRequest::new(q, sigma, x, y)
    }

    #[test]
    fn gamma_distance_examples() {
        assert_eq!(gamma_distance([0.5, 0.3], 2), 0.0);
        let d = gamma_distance([0.25 + 1e-9, 0.7], 4);
        assert!((d - 1e-9).abs() < 1e-15);
        // brute-force oracle value frozen from an independent scan
        let p = [0.5f64.sqrt(), 1.0 / 3f64.sqrt()];
        assert!((gamma_distance(p, 50) - 2.102_919_841_841_8e-4).abs() < 1e-15);
    }

    #[test]
    fn cell_index_examples() {
        assert_eq!(cell_indices([0.13, 0.77], 2, 5).unwrap(), (1, 7));
        assert_eq!(cell_indices([0.999, 0.001], 1, 4).unwrap(), (3, 0));
        assert!(matches!(cell_indices([0.25, 0.3], 1, 4), Err(Error::GridCollision { .. })));
    }

    #[test]
    fn n_selection() {
        // wide separation and large sigma: the first admissible even value
        assert_eq!(select_n(2, 1.0, [0.12, 0.31], [0.37, 0.11], 1000).unwrap(), 4);
        // the strict inequality rejects N = 4/(q sigma) itself
        assert_eq!(n_lower_bound(2, 0.5), 6);
        assert_eq!(n_lower_bound(2, 0.05), 42);
        let n = select_n(3, 1e-3, [0.12, 0.31], [0.37, 0.11], 1_000_000).unwrap();
        assert!(n > 1333 && n % 2 == 0 && n < 1340);
        assert!(select_n(2, 1e-3, [0.12, 0.31], [0.37, 0.11], 100).is_err());
    }

    #[test]
    fn profiles_have_single_entries() {
        let req = request(3, 0.05);
        let shift = choose_shift(req.q, req.x, req.y);
        let (xt, yt) = representatives(&req, shift);
        let n = select_n(3, 0.05, xt, yt, 1_000_000).unwrap();
        let (alpha, beta, c) = build_profiles(xt, yt, n, 3).unwrap();
        assert_eq!(alpha.beta.iter().filter(|b| **b != 0.0).count(), 1);
        assert_eq!(beta.beta.iter().filter(|b| **b != 0.0).count(), 1);
        let nq = (n * 3) as f64;
        let nn = n as u64;
        assert_eq!(beta.beta[(c.i2 % nn) as usize], (c.j1 as f64 + 1.5) / nq - xt[0]);
        assert_eq!(alpha.beta[((c.j1 + 1) % nn) as usize], (c.j2 as f64 + 0.5) / nq - xt[1]);
    }

    #[test]
    fn end_to_end_passes_audit() {
        let cfg = ConjugacyConfig::default();
        for (q, sigma) in [(2, 0.05), (3, 0.01), (5, 0.05)] {
            let req = request(q, sigma);
            let res = build_conjugacy(&req, &cfg).unwrap();
            let rep = verify_conjugacy(&res, &req, &cfg);
            assert!(rep.all_pass(), "{rep}");
            let dry = step_dry_run(&req, &res);
            assert!(dry.preimage_of_x_matches && dry.fixes_shifted && dry.preimage_distance < 4.0 / res.cells_total() as f64);
        }
    }

    #[test]
    fn corrupted_beta_fails_audit() {
        let cfg = ConjugacyConfig::default();
        let req = request(3, 0.01);
        let mut res = build_conjugacy(&req, &cfg).unwrap();
        let mut base = res.h.beta.base().clone();
        let i = base.beta.iter().position(|b| *b != 0.0).unwrap();
        base.beta[i] += 0.1;
        res.h.beta = AnalyticProfile::new(base, res.h.beta.epsilon(), res.h.beta.delta(), res.h.beta.a()).unwrap();
        let rep = verify_conjugacy(&res, &req, &cfg);
        let sigma_fail = ["d(x, h x')", "d(y, h y')", "d(x', y')", "d(h T x', h T y')"]
            .iter()
            .any(|n| !rep.get(n).unwrap().pass);
        assert!(sigma_fail, "{rep}");
    }

    #[test]
    fn resonant_request_is_rejected() {
        let cfg = ConjugacyConfig::default();
        let req = ConjugacyRequest::new(2, 0.05, [0.25, 0.3141], [0.3, 0.35]);
        assert!(matches!(build_conjugacy(&req, &cfg), Err(Error::GammaResonance { .. })));
        let req = ConjugacyRequest::new(1, 0.05, [0.2718, 0.3141], [0.3, 0.35]);
        assert!(matches!(build_conjugacy(&req, &cfg), Err(Error::Domain(_))));
    }

    #[test]
    fn shift_avoids_the_seam() {
        let s = choose_shift(2, [0.999, 0.4], [0.002, 0.41]);
        assert_eq!(s[0], 1);
        let s = choose_shift(100, [0.9995, 0.5], [0.9985, 0.5]);
        let a = frac(0.9995 + s[0] as f64 / 100.0);
        assert!(a > 0.3 && a < 0.7);
    }
}
