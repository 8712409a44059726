use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::audit::audit_stage;
use super::feasibility::{FeasibilityReport, ThresholdInputs};
use super::rational::RationalVector;
use super::schedule::{Mode, StageSchedule};
use super::stage::{Lattice, LemmaRecord, Separation, Stage, StageMaps};
use crate::analysis::{cell_centers, DensityAccumulator};
use crate::conjugacy::{build_conjugacy, torus_offset, ConjugacyRequest, ConjugacyResult};
use crate::error::{Error, Result};
use crate::geom::{add, irrational_direction, norm, op_norm, reduce, scale, torus_dist, wrap_centered, Point};
use crate::maps::{complexify, lipschitz_log_bound, BlockSlide, IteratedLog, Mapping, PlaneMap};
use crate::report::VerificationReport;

/// Separation threshold of the witness pairs.
pub const SEPARATION: f64 = 1e-3;

pub(crate) const RNG_WITNESS: u64 = 1;
pub(crate) const RNG_EPSILON: u64 = 2;
pub(crate) const RNG_AUDIT: u64 = 3;

pub(crate) fn stage_rng(sched: &StageSchedule, n: u32, purpose: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(sched.seed);
    r.set_stream(((n as u64) << 8) | purpose);
    r
}

fn unit(theta: f64) -> Point {
    [theta.cos(), theta.sin()]
}

fn pow10(e: i32) -> f64 {
    10f64.powi(e)
}

/// `max ||DH||` over cell centers; exactly 1 for the identity.
pub fn derivative_norm(h: &PlaneMap, grid: usize, step: f64) -> f64 {
    if matches!(h, PlaneMap::Composition { maps } if maps.is_empty()) {
        return 1.0;
    }
    cell_centers(grid)
        .map(|p| h.jacobian(p, step).map(op_norm).unwrap_or(f64::INFINITY))
        .fold(0.0, f64::max)
}

fn image_distance(h: &PlaneMap, x: Point, y: Point) -> f64 {
    match (h.apply(x), h.apply(y)) {
        (Ok(a), Ok(b)) => torus_dist(a, b),
        _ => 0.0,
    }
}

/// Half the largest radius `r` such that moving `x_n` and `y_n` by `r` along
/// any pair of sampled directions keeps `d(H x, H y) > 1/1000`.
pub fn separation_margin(st: &Stage, sched: &StageSchedule) -> Result<f64> {
    let h = st.conjugacy();
    let (x, y) = (st.x_n, st.y_n);
    let slack = image_distance(&h, x, y) - SEPARATION;
    if !(slack >= 1e-12) {
        return Err(Error::Domain(format!("separation slack {slack:e} of the witness pair is below 1e-12")));
    }
    let off = torus_offset(x, y);
    let theta0 = off[1].atan2(off[0]);
    let nd = sched.margin_directions.max(1);
    let dirs: Vec<Point> = (0..nd).map(|k| unit(theta0 + std::f64::consts::TAU * k as f64 / nd as f64)).collect();
    let holds = |r: f64| {
        dirs.iter().all(|&u| {
            dirs.iter().all(|&w| image_distance(&h, reduce(add(x, scale(u, r))), reduce(add(y, scale(w, r)))) > SEPARATION)
        })
    };
    let mut hi = torus_dist(x, y).max(1e-12);
    if holds(hi) {
        return Ok(hi / 2.0);
    }
    let mut lo = 0.0;
    for _ in 0..sched.margin_bisections {
        let mid = 0.5 * (lo + hi);
        if holds(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo / 2.0)
}

/// `sigma_n = min(0.99 * 10^(-2n-2) * min(1/||DH_n||, 1), margin)`.
pub fn sigma_n(st: &Stage, sched: &StageSchedule) -> Result<f64> {
    let d = derivative_norm(&st.conjugacy(), sched.grid, sched.derivative_step);
    let cond = 0.99 * pow10(-2 * st.n as i32 - 2) * (1.0 / d).min(1.0);
    Ok(cond.min(separation_margin(st, sched)?))
}

/// Measured margins at the accepted `epsilon_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSearch {
    pub eps: f64,
    pub halvings: u32,
    /// Largest `||F^k z - z - k omega||` over the perturbations.
    pub worst_drift: f64,
    /// Smallest separation of the witnesses after `m_n` perturbed steps.
    pub min_separation: f64,
    /// Largest covering-radius bound of the perturbed orbits.
    pub worst_gap: f64,
}

struct Probe {
    drift: f64,
    separation: f64,
    gap: f64,
}

/// Halves `epsilon` from `min(eps_start, eps_prev / 2)` until all sampled
/// perturbations `T_tau f_n`, `T_tau F_n`, `omega_n + tau'` with
/// `|tau|, |tau'| = 0.999 epsilon` satisfy the drift, separation and density displays.
pub fn epsilon_n_search(st: &Stage, sched: &StageSchedule, eps_prev: Option<f64>) -> Result<EpsilonSearch> {
    let maps = st.stage_maps();
    let n = st.n;
    let mut rng = stage_rng(sched, n, RNG_EPSILON);
    let tau: Vec<Point> = (0..sched.eps_perturbations).map(|_| unit(rng.gen_range(0.0..std::f64::consts::TAU))).collect();
    let tau_w: Vec<Point> = (0..sched.eps_perturbations).map(|_| unit(rng.gen_range(0.0..std::f64::consts::TAU))).collect();
    let tests: Vec<Point> = (0..sched.eps_test_points).map(|_| [rng.gen(), rng.gen()]).collect();
    let z0: Point = [rng.gen(), rng.gen()];
    let omega = st.omega_f64();
    let q = st.q.to_f64().unwrap_or(f64::INFINITY);
    let orbit_len = ((10.0 * 2f64.powi(n as i32) * q).min(sched.orbit_cap as f64)) as u64;
    let dense = 2f64.powi(1 - n as i32);
    let res = 1usize << (n + 2).min(12);

    let probe = |t: Point, w: Point| -> Result<std::result::Result<Probe, &'static str>> {
        let lift = maps.lift();
        let mut drift: f64 = 0.0;
        for &z in &tests {
            let mut cur = z;
            for k in 1..=n {
                cur = add(lift.apply(cur)?, t);
                let kf = k as f64;
                drift = drift.max(norm([cur[0] - z[0] - kf * w[0], cur[1] - z[1] - kf * w[1]]));
            }
        }
        if !(drift < 10.0) {
            return Ok(Err("drift"));
        }
        let separation = torus_dist(maps.iterate_with(st.x_sup, st.m_n, t)?, maps.iterate_with(st.y_sup, st.m_n, t)?);
        if !(separation > SEPARATION) {
            return Ok(Err("separation"));
        }
        let mut acc = DensityAccumulator::keeping(res, sched.exact_density_limit);
        let mut cur = z0;
        let mut gap = f64::INFINITY;
        for k in 0..orbit_len {
            acc.push(cur);
            cur = reduce(add(maps.step(cur)?, t));
            if k % 4096 == 4095 {
                gap = acc.gap();
                if gap < dense {
                    break;
                }
            }
        }
        gap = gap.min(acc.refined_gap());
        if !(gap < dense) {
            return Ok(Err("density"));
        }
        Ok(Ok(Probe { drift, separation, gap }))
    };

    let start = eps_prev.map_or(sched.eps_start, |p| sched.eps_start.min(0.5 * p));
    let mut last = "none";
    for i in 0..=sched.eps_budget {
        let eps = start / 2f64.powi(i as i32);
        let size = 0.999 * eps;
        let mut out = EpsilonSearch { eps, halvings: i, worst_drift: 0.0, min_separation: f64::INFINITY, worst_gap: 0.0 };
        let mut ok = true;
        for j in 0..tau.len() {
            match probe(scale(tau[j], size), add(omega, scale(tau_w[j], size)))? {
                Ok(p) => {
                    out.worst_drift = out.worst_drift.max(p.drift);
                    out.min_separation = out.min_separation.min(p.separation);
                    out.worst_gap = out.worst_gap.max(p.gap);
                }
                Err(display) => {
                    last = display;
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            return Ok(out);
        }
    }
    Err(Error::SearchExhausted(format!(
        "epsilon_{n}: no value down to {:e} passed; last failing display: {last}",
        start / 2f64.powi(sched.eps_budget as i32)
    )))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaSearch {
    pub kappa: f64,
    /// Largest sampled radius `2^-j` keeping the separation.
    pub radius: f64,
    /// `2^(-n-1) / ||DH_(n+1)||`.
    pub cap: f64,
    pub derivative_norm: f64,
}

/// `G^gamma(z) = H(H^-1 z + (-2/(N q_n), 0) + gamma)`.
pub fn g_gamma(h: &PlaneMap, offset: f64, gamma: Point, z: Point) -> Result<Point> {
    let w = h.apply_inverse(z)?;
    Ok(reduce(h.apply([w[0] - offset + gamma[0], w[1] + gamma[1]])?))
}

/// Radius `kappa` such that every `G^gamma` with `|gamma| < kappa` keeps the
/// witnesses `1/1000` apart, capped below `2^(-n-1)/||DH_(n+1)||`.
pub fn kappa_search(
    h_next: &PlaneMap,
    n: u32,
    cells_total: u64,
    x_sup: Point,
    y_sup: Point,
    sched: &StageSchedule,
) -> Result<KappaSearch> {
    let offset = 2.0 / cells_total as f64;
    let sep = |g: Point| -> f64 {
        match (g_gamma(h_next, offset, g, x_sup), g_gamma(h_next, offset, g, y_sup)) {
            (Ok(a), Ok(b)) => torus_dist(a, b),
            _ => 0.0,
        }
    };
    let s0 = sep([0.0, 0.0]);
    if !(s0 > SEPARATION) {
        return Err(Error::Domain(format!("G^0 separates the witnesses by only {s0:e}")));
    }
    let dh = derivative_norm(h_next, sched.grid, sched.derivative_step);
    let cap = 2f64.powi(-(n as i32) - 1) / dh;
    let nd = sched.kappa_directions.max(1);
    for j in 1..=sched.kappa_max_j {
        let r = 2f64.powi(-(j as i32));
        let all = (0..nd).all(|k| sep(scale(unit(std::f64::consts::TAU * k as f64 / nd as f64), r)) > SEPARATION);
        if all {
            return Ok(KappaSearch { kappa: r.min(0.99 * cap), radius: r, cap, derivative_norm: dh });
        }
    }
    Err(Error::SearchExhausted(format!(
        "no radius down to 2^-{} keeps the witnesses apart; the witnesses are likely corrupted",
        sched.kappa_max_j
    )))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaChoice {
    pub eta: RationalVector,
    #[serde(with = "super::rational::decimal")]
    pub r: BigInt,
    #[serde(with = "super::rational::decimal")]
    pub v: BigInt,
    pub certified: bool,
    /// True when `v` still has to be tuned against the separation lattice.
    pub tune_v: bool,
    pub report: FeasibilityReport,
    pub notes: Vec<String>,
}

fn ceil_big(x: f64) -> Result<BigInt> {
    use num_traits::FromPrimitive;
    BigInt::from_f64(x.ceil()).ok_or_else(|| Error::Overflow(format!("{x} is not a finite integer bound")))
}

/// `eta = (1, v) / (q_n r)`. Paper-safe: `v = ceil(100/kappa) + 1` and
/// `r = max(ceil(100 v / kappa), Q)`; practical: from the schedule.
pub fn choose_eta(n: u32, q_n: &BigInt, kappa: f64, sched: &StageSchedule, threshold: ThresholdInputs) -> Result<EtaChoice> {
    if !(kappa > 0.0) {
        return Err(Error::Domain(format!("kappa = {kappa} must be positive")));
    }
    let stage = n + 1;
    let mut notes = Vec::new();
    let (mut r, v, certified, tune_v, report) = match sched.mode {
        Mode::PaperSafe => {
            let v: BigInt = ceil_big(100.0 / kappa)? + 1;
            let vf = v.to_f64().unwrap_or(f64::INFINITY);
            let report = FeasibilityReport::new(stage, sched.rho, ThresholdInputs { v: vf, ..threshold }, kappa, sched.max_log10_r);
            if !report.feasible {
                return Err(Error::Infeasible { stage, required: report.required });
            }
            let q_bound = report.required.value().unwrap_or(f64::INFINITY);
            let r = ceil_big(report.r_min.max(q_bound))?;
            (r, v, true, false, report)
        }
        Mode::Practical => {
            let o = sched.override_for(stage);
            let r = BigInt::from(o.r.unwrap_or(sched.default_r));
            let v = BigInt::from(o.v.unwrap_or(1));
            let vf = v.to_f64().unwrap_or(f64::INFINITY);
            let report = FeasibilityReport::new(stage, sched.rho, ThresholdInputs { v: vf, ..threshold }, kappa, sched.max_log10_r);
            notes.push(format!("practical r_{stage} = {r}: non-certified (a5), closeness measured only"));
            (r, v, false, o.v.is_none(), report)
        }
    };
    if r <= BigInt::zero() {
        return Err(Error::Input(format!("r_{stage} must be positive")));
    }
    if sched.enforce_q_growth {
        let floor = num_traits::pow(BigInt::from(10), stage as usize);
        let before = r.clone();
        while q_n * &r <= floor {
            r *= 10;
        }
        if r != before {
            notes.push(format!("r_{stage} inflated from {before} to {r} so that q_{stage} > 10^{stage}"));
        }
    }
    let eta = RationalVector::new([BigInt::one(), v.clone()], q_n * &r)?;
    Ok(EtaChoice { eta, r, v, certified, tune_v, report, notes })
}

/// Scans `k = 1..=r` for the lattice point `(k/r, kv/r) mod 1` nearest the
/// target of `G^gamma` and returns the first `k` whose separation is confirmed
/// by direct iteration of `f_(n+1)`.
#[allow(clippy::too_many_arguments)]
pub fn find_separation_time(
    maps: &StageMaps,
    q_n: u64,
    r: u64,
    v: u64,
    cells_total: u64,
    kappa: f64,
    lattice: Lattice,
    x_sup: Point,
    y_sup: Point,
    sched: &StageSchedule,
) -> Result<Separation> {
    if r == 0 {
        return Err(Error::Domain("r must be positive".into()));
    }
    let rf = r as f64;
    let (target, radius) = match lattice {
        Lattice::AllIterates => (2.0 * q_n as f64 / cells_total as f64, q_n as f64 * kappa),
        Lattice::MultiplesOfQ => (2.0 / cells_total as f64, kappa),
    };
    let mut tried = 0u32;
    let mut skipped = 0u32;
    for k in 1..=r {
        let a = (k % r) as f64 / rf;
        let b = ((k as u128 * v as u128) % r as u128) as f64 / rf;
        let g = [wrap_centered(a + target), wrap_centered(b)];
        if !(norm(g) < radius) {
            continue;
        }
        let (m, gamma) = match lattice {
            Lattice::AllIterates => (k, scale(g, 1.0 / q_n as f64)),
            Lattice::MultiplesOfQ => match k.checked_mul(q_n) {
                Some(m) => (m, g),
                None => {
                    skipped += 1;
                    continue;
                }
            },
        };
        if m > sched.direct_cap {
            skipped += 1;
            continue;
        }
        tried += 1;
        let distance = torus_dist(maps.iterate(x_sup, m)?, maps.iterate(y_sup, m)?);
        if distance > SEPARATION {
            let mb = BigInt::from(m);
            let closed_form_distance = torus_dist(maps.orbit_point(x_sup, &mb)?, maps.orbit_point(y_sup, &mb)?);
            return Ok(Separation { k, m, lattice, gamma, distance, closed_form_distance, candidates_tried: tried });
        }
    }
    Err(Error::SearchExhausted(format!(
        "no k <= r = {r} (v = {v}) reaches the separation target within kappa = {kappa:e} \
         ({tried} candidates failed, {skipped} beyond the direct-iteration cap)"
    )))
}

fn witness_request_ok(st: &Stage, sched: &StageSchedule) -> bool {
    let Ok(sigma) = sigma_n(st, sched) else { return false };
    let Ok(q) = st.q_u64() else { return false };
    ConjugacyRequest::new(q, sigma, st.x_n, st.y_n).validate(&sched.conjugacy).is_ok()
}

/// The first stage: `h_1 = Id`, `omega_1 = (1, 10)/100`, and a seeded witness
/// pair at distance `witness_distance` along the golden direction.
pub fn init_stage1(sched: &StageSchedule) -> Result<Stage> {
    let omega = RationalVector::from_ints(1, 10, 100)?;
    let mut rng = stage_rng(sched, 1, RNG_WITNESS);
    let dir = irrational_direction();
    for draw in 0..sched.witness_draws {
        let x: Point = [rng.gen_range(0.05..0.95), rng.gen_range(0.05..0.95)];
        let y = reduce(add(x, scale(dir, sched.witness_distance)));
        let mut st = Stage {
            n: 1,
            mode: sched.mode,
            h_list: vec![BlockSlide::identity(1)],
            omega: omega.clone(),
            q: omega.den.clone(),
            big_n: None,
            x_n: x,
            y_n: y,
            x_sup: x,
            y_sup: y,
            m_n: 0,
            eps_n: 0.0,
            sigma: None,
            kappa: None,
            r: None,
            v: None,
            lemma: None,
            separation: None,
            feasibility: None,
            notes: Vec::new(),
            audit: VerificationReport::default(),
        };
        if !witness_request_ok(&st, sched) {
            continue;
        }
        let maps = st.stage_maps();
        let period = st.omega.period().to_u64().unwrap_or(u64::MAX);
        let mut m = None;
        for k in 1..=period.min(sched.direct_cap) {
            let kb = BigInt::from(k);
            if torus_dist(maps.orbit_point(x, &kb)?, maps.orbit_point(y, &kb)?) > SEPARATION {
                m = Some(k);
                break;
            }
        }
        let Some(m) = m else { continue };
        st.m_n = m;
        st.eps_n = epsilon_n_search(&st, sched, None)?.eps;
        st.notes.push(format!("witness pair from draw {draw}; separation time m_1 = {m}"));
        st.audit = audit_stage(&st, None, sched);
        return Ok(st);
    }
    Err(Error::SearchExhausted(format!("no admissible witness pair in {} draws", sched.witness_draws)))
}

/// `rho + 2n * e`, with `e` the largest sampled growth of `|Im|` under the
/// inverse of one conjugacy on the boundary of `B_rho`.
pub fn strip_radius(st: &Stage, sched: &StageSchedule) -> f64 {
    let rho = sched.rho;
    let s = sched.boundary_samples.max(1);
    let mut growth: f64 = 0.0;
    for h in st.h_list.iter().filter(|h| !h.is_identity()) {
        for k in 0..s {
            let a = k as f64 / s as f64;
            let b = crate::geom::frac(a * crate::geom::GOLDEN + 0.5);
            for (ia, ib) in [(rho, 0.0), (-rho, 0.0), (0.0, rho), (0.0, -rho), (rho, rho), (-rho, rho), (rho, -rho), (-rho, -rho)] {
                let mut z = complexify([a, b]);
                z[0].im = ia;
                z[1].im = ib;
                match h.apply_inverse(z) {
                    Ok(w) => growth = growth.max(w[0].im.abs().max(w[1].im.abs()) - rho),
                    Err(_) => return f64::INFINITY,
                }
            }
        }
    }
    rho + 2.0 * st.n as f64 * growth.max(0.0)
}

/// Bound on `sup ||D H~_n||` over `B_(rho_n + 1)`: the product over the
/// conjugacies of `(1 + C_i)^2`, and exactly 1 for the identity.
pub fn conjugacy_derivative_bound(st: &Stage, rho_n: f64) -> IteratedLog {
    let one = IteratedLog::ln(0.0);
    st.h_list.iter().filter(|h| !h.is_identity()).fold(one, |acc, h| {
        let n = h.alpha.n().max(h.beta.n());
        let a = h.alpha.a().max(h.beta.a());
        let c = lipschitz_log_bound(n, h.q(), a, rho_n + 1.0, 1);
        acc.mul(one.add(c).powf(2.0))
    })
}

/// Everything of an advance that does not depend on `eta`.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub sigma: f64,
    pub request: ConjugacyRequest,
    pub result: ConjugacyResult,
    pub h_list: Vec<BlockSlide>,
    pub h: PlaneMap,
    pub x_sup: Point,
    pub y_sup: Point,
    pub kappa: KappaSearch,
    pub threshold: ThresholdInputs,
}

pub fn prepare_advance(st: &Stage, sched: &StageSchedule) -> Result<Prepared> {
    let sigma = sigma_n(st, sched)?;
    let q = st.q_u64()?;
    let request = ConjugacyRequest::new(q, sigma, st.x_n, st.y_n);
    let result = build_conjugacy(&request, &sched.conjugacy)?;
    let mut h_list = st.h_list.clone();
    h_list.push(result.h.clone());
    let h = PlaneMap::compose(h_list.iter().filter(|h| !h.is_identity()).cloned().map(PlaneMap::BlockSlide).collect());
    let off = result.offset();
    let x_sup = reduce(h.apply(add(result.x_prime, off))?);
    let y_sup = reduce(h.apply(add(result.y_prime, off))?);
    let kappa = kappa_search(&h, st.n, result.cells_total(), x_sup, y_sup, sched)?;
    let rho_n = strip_radius(st, sched);
    let threshold = ThresholdInputs {
        n: st.n,
        ln_q: st.q.to_f64().map_or(f64::INFINITY, f64::ln),
        eps_n: st.eps_n,
        v: 1.0,
        big_n: result.n,
        a: result.a,
        q,
        rho_n,
        d: conjugacy_derivative_bound(st, rho_n),
    };
    Ok(Prepared { sigma, request, result, h_list, h, x_sup, y_sup, kappa, threshold })
}

/// The paper-safe requirement on `r_(n+1)` for the advance from `st`.
pub fn feasibility(st: &Stage, sched: &StageSchedule) -> Result<FeasibilityReport> {
    let p = prepare_advance(st, sched).map_err(|e| e.at_stage(st.n + 1))?;
    let kappa = p.kappa.kappa;
    let v = (100.0 / kappa).ceil() + 1.0;
    Ok(FeasibilityReport::new(st.n + 1, sched.rho, ThresholdInputs { v, ..p.threshold }, kappa, sched.max_log10_r))
}

/// One induction step `n -> n+1`.
pub fn advance_stage(st: &Stage, sched: &StageSchedule) -> Result<Stage> {
    let next = st.n + 1;
    advance_inner(st, sched).map_err(|e| e.at_stage(next))
}

fn advance_inner(st: &Stage, sched: &StageSchedule) -> Result<Stage> {
    let next = st.n + 1;
    let p = prepare_advance(st, sched)?;
    let mut eta = choose_eta(st.n, &st.q, p.kappa.kappa, sched, p.threshold)?;
    let q_n = st.q_u64()?;
    let lattice = if st.conjugacy_is_identity() { Lattice::AllIterates } else { Lattice::MultiplesOfQ };
    let r = eta.r.to_u64().ok_or_else(|| Error::Overflow(format!("r_{next} = {} is beyond the scan range", eta.r)))?;
    let cells = p.result.cells_total();
    let mut notes = eta.notes.clone();
    if lattice == Lattice::AllIterates {
        notes.push("H_n = Id: separation searched over all iterates m, not only m in q_n N".into());
    }
    let scan = |v: u64| -> Result<(RationalVector, Separation)> {
        let omega = st.omega.advance(&eta.r, &BigInt::from(v))?;
        let maps = StageMaps::new(p.h.clone(), omega.clone());
        let sep = find_separation_time(&maps, q_n, r, v, cells, p.kappa.kappa, lattice, p.x_sup, p.y_sup, sched)?;
        Ok((omega, sep))
    };
    let (omega, separation) = if eta.tune_v {
        let mut found = None;
        for v in 1..=sched.v_max {
            match scan(v) {
                Ok(x) => {
                    eta.v = BigInt::from(v);
                    found = Some(x);
                    break;
                }
                Err(Error::SearchExhausted(_)) => continue,
                Err(e) => return Err(e),
            }
        }
        let found = found.ok_or_else(|| {
            Error::SearchExhausted(format!("no v <= {} gives a separation time with r = {r}", sched.v_max))
        })?;
        notes.push(format!("v_{next} = {} tuned as the smallest v with a confirmed separation time", eta.v));
        found
    } else {
        let v = eta.v.to_u64().ok_or_else(|| Error::Overflow(format!("v = {} is beyond the scan range", eta.v)))?;
        scan(v)?
    };
    let eta_vec = RationalVector::new([BigInt::one(), eta.v.clone()], &st.q * &eta.r)?;
    debug_assert_eq!(omega.sub(&st.omega), eta_vec.components());
    let mut stage = Stage {
        n: next,
        mode: sched.mode,
        h_list: p.h_list,
        q: omega.den.clone(),
        omega,
        big_n: Some(p.result.n),
        x_n: p.result.x_prime,
        y_n: p.result.y_prime,
        x_sup: p.x_sup,
        y_sup: p.y_sup,
        m_n: separation.m,
        eps_n: 0.0,
        sigma: Some(p.sigma),
        kappa: Some(p.kappa.kappa),
        r: Some(eta.r.clone()),
        v: Some(eta.v.clone()),
        lemma: Some(LemmaRecord::new(p.request, &p.result)),
        separation: Some(separation),
        feasibility: Some(FeasibilityReport::new(
            next,
            sched.rho,
            ThresholdInputs { v: eta.v.to_f64().unwrap_or(f64::INFINITY), ..p.threshold },
            p.kappa.kappa,
            sched.max_log10_r,
        )),
        notes,
        audit: VerificationReport::default(),
    };
    stage.eps_n = epsilon_n_search(&stage, sched, Some(st.eps_n))?.eps;
    stage.audit = audit_stage(&stage, Some(st), sched);
    Ok(stage)
}
