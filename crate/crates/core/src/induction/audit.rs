use num_bigint::BigInt;
use num_traits::ToPrimitive;
use rand::Rng;

use super::schedule::{Mode, StageSchedule};
use super::stage::Stage;
use super::steps::{sigma_n, stage_rng, RNG_AUDIT, SEPARATION};
use crate::analysis::{area_defect, bmm_deviation, c0_distance, strip_distance, DensityAccumulator};
use crate::conjugacy::{gamma_distance, n_lower_bound};
use crate::geom::{norm, sub, torus_dist, unit_grid, Point};
use crate::maps::{Mapping, PlaneMap};
use crate::report::{Check, Relation, VerificationReport};

fn lift_sup<M: Mapping + ?Sized>(h: &M, grid: usize, extra: &[Point]) -> f64 {
    unit_grid(grid)
        .chain(extra.iter().copied())
        .map(|p| h.map(p).map_or(f64::INFINITY, |hp| norm(sub(hp, p))))
        .fold(0.0, f64::max)
}

fn gamma_denominator(st: &Stage, sched: &StageSchedule) -> Option<u64> {
    let f = sched.conjugacy.denom_factor;
    match &st.lemma {
        Some(l) => Some(f * l.n as u64 * l.request.q),
        None => {
            let sigma = sigma_n(st, sched).ok()?;
            let q = st.q_u64().ok()?;
            Some(f * q * n_lower_bound(q, sigma) as u64)
        }
    }
}

/// Orbit length for the density audit: `orbit_factor * 2^n * q_n`, at most
/// one period and at most `orbit_cap`.
pub fn orbit_length(st: &Stage, sched: &StageSchedule) -> u64 {
    let budget = BigInt::from(sched.orbit_factor) * BigInt::from(1u64 << st.n.min(62)) * &st.q;
    let len = budget.min(st.omega.period()).min(BigInt::from(sched.orbit_cap));
    len.to_u64().unwrap_or(sched.orbit_cap)
}

/// One entry per induction hypothesis of the stage; `(a5)` entries compare
/// with the previous stage when given.
pub fn audit_stage(st: &Stage, prev: Option<&Stage>, sched: &StageSchedule) -> VerificationReport {
    let n = st.n;
    let ni = n as i32;
    let mut r = VerificationReport::new(format!("stage {n} ({})", st.mode));
    let h = st.conjugacy();
    let maps = st.stage_maps();
    let witnesses = [st.x_n, st.y_n, st.x_sup, st.y_sup];

    // (a1)
    for (i, hi) in st.h_list.iter().enumerate() {
        let i = i as i32 + 1;
        let sup = if hi.is_identity() { 0.0 } else { lift_sup(hi, sched.grid, &witnesses) };
        r.push(Check::new(format!("(a1) sup |h~_{i} - Id|"), sup, Relation::Lt, 2f64.powi(-i)));
    }
    let sup_h = lift_sup(&h, sched.grid, &witnesses);
    r.push(Check::new(format!("(a1) sup |H~_{n} - Id|"), sup_h, Relation::Lt, 1.0 - 2f64.powi(-ni)));

    // (a2)
    r.push(Check::new("(a2) d(x_n, y_n)", torus_dist(st.x_n, st.y_n), Relation::Lt, 10f64.powi(-2 * ni)));
    let hxy = match (h.apply(st.x_n), h.apply(st.y_n)) {
        (Ok(a), Ok(b)) => torus_dist(a, b),
        _ => f64::NAN,
    };
    r.push(Check::new("(a2) d(H x_n, H y_n)", hxy, Relation::Gt, SEPARATION));
    match gamma_denominator(st, sched) {
        Some(d) => {
            let g = gamma_distance(st.x_n, d)
                .min(gamma_distance(st.y_n, d))
                .min(gamma_distance(sub(st.x_n, st.y_n), d));
            r.push(
                Check::new("(a2) x_n, y_n, x_n - y_n avoid Gamma", g, Relation::Gt, sched.conjugacy.gamma_tolerance(d))
                    .with_note(format!("denominators up to {d}")),
            );
        }
        None => r.push(Check::failed("(a2) x_n, y_n, x_n - y_n avoid Gamma", "denominator bound unavailable")),
    }

    // (a3)
    r.push(Check::new("(a3) d(x^(n), y^(n))", torus_dist(st.x_sup, st.y_sup), Relation::Lt, 10f64.powi(-ni)));
    let m = st.m_n;
    let sep = if m == 0 {
        Check::failed("(a3) d(f^m x^(n), f^m y^(n))", "separation time missing")
    } else if m <= sched.direct_cap {
        match (maps.iterate(st.x_sup, m), maps.iterate(st.y_sup, m)) {
            (Ok(a), Ok(b)) => Check::new("(a3) d(f^m x^(n), f^m y^(n))", torus_dist(a, b), Relation::Gt, SEPARATION)
                .with_note(format!("m = {m}, direct iteration")),
            (Err(e), _) | (_, Err(e)) => Check::failed("(a3) d(f^m x^(n), f^m y^(n))", e.to_string()),
        }
    } else {
        let mb = BigInt::from(m);
        match (maps.orbit_point(st.x_sup, &mb), maps.orbit_point(st.y_sup, &mb)) {
            (Ok(a), Ok(b)) => Check::new("(a3) d(f^m x^(n), f^m y^(n))", torus_dist(a, b), Relation::Gt, SEPARATION)
                .with_note(format!("m = {m}, closed form")),
            (Err(e), _) | (_, Err(e)) => Check::failed("(a3) d(f^m x^(n), f^m y^(n))", e.to_string()),
        }
    };
    r.push(sep);

    // (a4)
    let mut rng = stage_rng(sched, n, RNG_AUDIT);
    let z0: Point = [rng.gen(), rng.gen()];
    let len = orbit_length(st, sched);
    let res = 1usize << (n + 2).min(12);
    let mut acc = DensityAccumulator::keeping(res, sched.exact_density_limit);
    let a4 = match maps.for_each_orbit_point(z0, len, |_, p| {
        acc.push(p);
        true
    }) {
        Ok(()) => Check::new("(a4) orbit covering radius", acc.refined_gap(), Relation::Lt, 2f64.powi(-ni))
            .with_note(format!("{len} points, grid {res}x{res}")),
        Err(e) => Check::failed("(a4) orbit covering radius", e.to_string()),
    };
    r.push(a4);

    let samples: Vec<Point> = (0..sched.bmm_samples).map(|_| [rng.gen(), rng.gen()]).collect();
    r.push(match bmm_deviation(&maps, st.omega_f64(), &samples, sched.bmm_steps) {
        Ok(d) => Check::new("bounded mean motion", d, Relation::Lt, 10.0),
        Err(e) => Check::failed("bounded mean motion", e.to_string()),
    });
    r.push(Check::new("area defect f_n", area_defect(maps.lift(), sched.grid), Relation::Lt, sched.area_tol));
    r.push(Check::new("eps_n", st.eps_n, Relation::Gt, 0.0));
    r.push(Check::new(
        "log10 q_n",
        st.q.to_f64().map_or(f64::INFINITY, f64::log10),
        Relation::Gt,
        n as f64,
    ));
    let consistent = st.q == st.omega.den && st.h_list.len() == n as usize;
    r.push(Check::flag("q_n = den(omega_n) and n conjugacies", consistent));

    if let Some(p) = prev {
        audit_closeness(&mut r, st, p, sched);
    }
    r
}

/// `(a5)` for the step from `prev` to `st`.
fn audit_closeness(r: &mut VerificationReport, st: &Stage, prev: &Stage, sched: &StageSchedule) {
    let k = prev.n as i32;
    let bound = 2f64.powi(-k) * prev.eps_n;
    let certify = |c: Check| if st.mode == Mode::PaperSafe { c } else { c.uncertified().with_note("non-certified (a5)") };
    r.push(certify(Check::new("eps_n < eps_(n-1)", st.eps_n, Relation::Lt, prev.eps_n)));
    let f_next: &PlaneMap = &st.lift_map();
    let f_prev: &PlaneMap = &prev.lift_map();
    let drho = match strip_distance(f_next, f_prev, sched.rho, sched.strip) {
        Ok(d) => Check::new("(a5) d_rho(f_n, f_(n-1))", d, Relation::Lt, bound),
        Err(e) => Check::failed("(a5) d_rho(f_n, f_(n-1))", e.to_string()),
    };
    r.push(certify(drho));
    let dc0 = match c0_distance(f_next, f_prev, sched.grid) {
        Ok(d) => Check::new("(a5) d_C0(F_n, F_(n-1))", d, Relation::Lt, bound),
        Err(e) => Check::failed("(a5) d_C0(F_n, F_(n-1))", e.to_string()),
    };
    r.push(certify(dc0));
    r.push(certify(Check::new("(a5) ||omega_n - omega_(n-1)||", st.omega.distance(&prev.omega), Relation::Lt, bound)));
    if let (Some(f), Some(rn)) = (&st.feasibility, &st.r) {
        let lr = rn.to_f64().map_or(f64::INFINITY, f64::log10);
        let req = f.log10_r.unwrap_or(f64::INFINITY);
        let mut c = Check::new("(a5) log10 r_n against the sufficient bound", lr, Relation::Gt, req);
        if f.log10_r.is_none() {
            c = c.with_note(format!("required r: {}", f.required));
        }
        r.push(certify(c));
    }
}
