//! Acceptance criteria, one line each. Runs without the libtest harness so the
//! lines are always printed; exits nonzero if any criterion fails.

use std::time::Instant;

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pseudorot::analysis::{area_defect, bmm_deviation, density_gap, rotation_vector_estimate, LiftedPoint};
use pseudorot::cli::run_from;
use pseudorot::conjugacy::{build_conjugacy, verify_conjugacy, ConjugacyConfig, ConjugacyRequest};
use pseudorot::geom::{norm, sub, torus_dist, Point};
use pseudorot::induction::{advance_stage, feasibility, init_stage1, required_r, Stage, StageSchedule};
use pseudorot::maps::{a0_threshold, bad_set_contains, AnalyticProfile, Mapping, PlaneMap, Shear, StepProfile};

type Outcome = Result<String, String>;

fn profiles(seed: u64) -> Vec<AnalyticProfile> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..20)
        .map(|_| {
            let n = [4, 6, 8][rng.gen_range(0..3)];
            let q = [2, 3, 5][rng.gen_range(0..3)];
            let eps = [0.05, 0.1][rng.gen_range(0..2)];
            let delta = [0.3, 0.5][rng.gen_range(0..2)];
            let beta: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let base = StepProfile::new(beta, q, n, 1).unwrap();
            let a = 1.05 * a0_threshold(eps, delta, n, 1).unwrap();
            AnalyticProfile::new(base, eps, delta, a).unwrap()
        })
        .collect()
}

fn approximation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst_ratio: f64 = 0.0;
    for p in profiles(1) {
        let (q, n, delta) = (p.q(), p.n(), p.delta());
        let mut sup: f64 = 0.0;
        for _ in 0..10_000 {
            let x: f64 = rng.gen();
            if !bad_set_contains(q, n, delta, x) {
                sup = sup.max((p.eval(x) - p.base().eval(x)).abs());
            }
        }
        worst_ratio = worst_ratio.max(sup / p.epsilon());
    }
    let detail = format!("max over 20 profiles of sup|s~ - s| / eps = {worst_ratio:.4} (< 1)");
    if worst_ratio < 1.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn periodicity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst: f64 = 0.0;
    for p in profiles(1) {
        let q = p.q() as f64;
        for _ in 0..100 {
            let x: f64 = rng.gen();
            for k in -3..=3 {
                worst = worst.max((p.eval(x + k as f64 / q) - p.eval(x)).abs());
            }
        }
    }
    let detail = format!("max |s~(x + k/q) - s~(x)| = {worst:.3e} (< 1e-10)");
    if worst < 1e-10 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn uniform_bound() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut violations = 0;
    let mut worst: f64 = 0.0;
    for p in profiles(1) {
        let bound = p.base().abs_sum();
        for _ in 0..10_000 {
            let v = p.eval(rng.gen()).abs();
            worst = worst.max(v / bound);
            if v > bound {
                violations += 1;
            }
        }
    }
    let detail = format!("{violations} violations in 2e5 samples; max |s~| / sum|beta| = {worst:.4}");
    if violations == 0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn requests() -> Vec<ConjugacyRequest> {
    let cfg = ConjugacyConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let mut out = Vec::new();
    while out.len() < 50 {
        let q = [2, 3, 5][rng.gen_range(0..3)];
        let sigma = [0.05, 0.01][rng.gen_range(0..2)];
        let x: Point = [rng.gen(), rng.gen()];
        let y: Point = [rng.gen(), rng.gen()];
        let req = ConjugacyRequest::new(q, sigma, x, y);
        if req.validate(&cfg).is_ok() {
            out.push(req);
        }
    }
    out
}

fn stages() -> Result<(Stage, Stage), String> {
    let sched = StageSchedule::default();
    let s1 = init_stage1(&sched).map_err(|e| e.to_string())?;
    let s2 = advance_stage(&s1, &sched).map_err(|e| e.to_string())?;
    Ok((s1, s2))
}

fn area_preservation() -> Outcome {
    let cfg = ConjugacyConfig::default();
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for p in profiles(1) {
        for s in [Shear::vertical(p.clone()), Shear::horizontal(p)] {
            worst = worst.max(area_defect(&s, 64));
            count += 1;
        }
    }
    for req in requests() {
        let res = build_conjugacy(&req, &cfg).map_err(|e| e.to_string())?;
        worst = worst.max(area_defect(&res.h, 64));
        count += 1;
    }
    let (s1, s2) = stages()?;
    for st in [&s1, &s2] {
        worst = worst.max(area_defect(&st.lift_map(), 64));
        worst = worst.max(area_defect(&st.conjugacy(), 64));
        count += 2;
    }
    let detail = format!("max area defect over {count} maps on 64x64 = {worst:.3e} (< 1e-6)");
    if worst < 1e-6 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn lemma_end_to_end() -> Outcome {
    let cfg = ConjugacyConfig::default();
    let mut failures = Vec::new();
    let (mut lift_margin, mut commute) = (f64::INFINITY, 0.0f64);
    for (i, req) in requests().iter().enumerate() {
        let res = match build_conjugacy(req, &cfg) {
            Ok(r) => r,
            Err(e) => {
                failures.push(format!("#{i}: {e}"));
                continue;
            }
        };
        let rep = verify_conjugacy(&res, req, &cfg);
        if !rep.all_pass() {
            failures.push(format!("#{i}: {:?}", rep.failing()));
        }
        let c = rep.get("commutation defect").unwrap().value;
        commute = commute.max(c);
        let lift = rep.get("lift sup |h - Id|").unwrap().value;
        let bound = 2.0 * torus_dist(req.x, req.y) + 4.0 / res.cells_total() as f64 + 1e-9;
        lift_margin = lift_margin.min(bound - lift);
        if c >= 1e-12 || lift > bound {
            failures.push(format!("#{i}: commutation {c:e}, lift {lift} vs {bound}"));
        }
    }
    let detail = format!(
        "50 requests; max commutation defect {commute:.2e}; min lift slack {lift_margin:.3e}; failures {failures:?}"
    );
    if failures.is_empty() {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn stage_one() -> Outcome {
    let sched = StageSchedule::default();
    let s1 = init_stage1(&sched).map_err(|e| e.to_string())?;
    let t = PlaneMap::translation([0.01, 0.1]);
    let f = s1.lift_map();
    let mut map_err: f64 = 0.0;
    for i in 0..16 {
        for j in 0..16 {
            let p = [i as f64 / 16.0 + 0.01, j as f64 / 16.0 + 0.02];
            map_err = map_err.max(norm(sub(f.map(p).unwrap(), t.map(p).unwrap())));
        }
    }
    let est = rotation_vector_estimate(&f, LiftedPoint::new([0.3, 0.7]), 10_000).map_err(|e| e.to_string())?;
    let rot_err = (est[0] - 0.01).abs().max((est[1] - 0.1).abs());
    let orbit: Vec<Point> = (0..100).map(|k| [(k % 100) as f64 / 100.0, (k % 10) as f64 / 10.0]).collect();
    let mut direct = Vec::new();
    s1.stage_maps()
        .for_each_orbit_point([0.0, 0.0], 100, |_, p| {
            direct.push(p);
            true
        })
        .map_err(|e| e.to_string())?;
    let enum_err = orbit.iter().zip(&direct).map(|(a, b)| torus_dist(*a, *b)).fold(0.0, f64::max);
    let radius = density_gap(&direct, 64);
    let omega_ok = s1.omega.to_string() == "(1, 10)/100";
    let detail = format!(
        "omega_1 = {}; |f_1 - T| = {map_err:.1e}; rotation error {rot_err:.1e} (< 1e-12); covering radius {radius:.4} (<= 0.5)",
        s1.omega
    );
    if omega_ok && map_err < 1e-15 && rot_err < 1e-12 && enum_err < 1e-12 && radius <= 0.5 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn stage_two() -> Outcome {
    let (_, s2) = stages()?;
    let needed = [
        "(a1) sup |H~_2 - Id|",
        "(a2) d(x_n, y_n)",
        "(a2) d(H x_n, H y_n)",
        "(a2) x_n, y_n, x_n - y_n avoid Gamma",
        "(a3) d(x^(n), y^(n))",
        "(a3) d(f^m x^(n), f^m y^(n))",
        "(a4) orbit covering radius",
        "bounded mean motion",
    ];
    let mut failing: Vec<String> = needed
        .iter()
        .filter(|n| s2.audit.get(n).map_or(true, |c| !c.pass))
        .map(|n| n.to_string())
        .collect();
    let h = s2.conjugacy();
    let d = torus_dist(s2.x_n, s2.y_n);
    let dh = torus_dist(h.map(s2.x_n).unwrap(), h.map(s2.y_n).unwrap());
    let maps = s2.stage_maps();
    let (mut a, mut b) = (s2.x_n, s2.y_n);
    for _ in 0..s2.m_n {
        a = maps.step(a).unwrap();
        b = maps.step(b).unwrap();
    }
    let sep = torus_dist(a, b);
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let samples: Vec<Point> = (0..128).map(|_| [rng.gen(), rng.gen()]).collect();
    let bmm = bmm_deviation(&s2.lift_map(), s2.omega_f64(), &samples, 1000).map_err(|e| e.to_string())?;
    if !(d < 1e-4) {
        failing.push("d(x_2, y_2)".into());
    }
    if !(dh > 1e-3) {
        failing.push("d(H x_2, H y_2)".into());
    }
    if !(sep > 1e-3) {
        failing.push("direct separation".into());
    }
    if !(bmm < 10.0) {
        failing.push("bmm".into());
    }
    let detail = format!(
        "d(x2,y2) = {d:.3e}; d(Hx2,Hy2) = {dh:.4}; m2 = {} with direct separation {sep:.4}; bmm {bmm:.3e}; failing {failing:?}",
        s2.m_n
    );
    if failing.is_empty() {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn rational_identity() -> Outcome {
    let (s1, s2) = stages()?;
    let (r, v) = (s2.r.clone().unwrap(), s2.v.clone().unwrap());
    let w1 = s1.omega.components();
    let w2 = s2.omega.components();
    let q1 = BigRational::from_integer(s1.q.clone());
    let mut bad = 0;
    for k in 1..=100u32 {
        let kk = BigRational::from_integer(BigInt::from(k));
        for c in 0..2 {
            let lhs = &kk * &q1 * &w2[c] - &kk * &q1 * &w1[c];
            let num = if c == 0 { BigInt::from(k) } else { BigInt::from(k) * &v };
            if lhs != BigRational::new(num, r.clone()) {
                bad += 1;
            }
        }
    }
    let detail = format!("k = 1..100, r_2 = {r}, v_2 = {v}: {bad} mismatches");
    if bad == 0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn feasibility_honesty() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let out_dir = dir.path().join("run");
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let args = ["pseudorot", "build", "--mode", "paper-safe", "--stages", "2", "--out"];
    let code = run_from(
        args.iter().map(|s| s.to_string()).chain([out_dir.display().to_string()]),
        &mut out,
        &mut err,
    );
    let text = String::from_utf8_lossy(&out);
    let printed = text.lines().find(|l| l.contains("required log10 r")).unwrap_or("").trim().to_string();

    let mut sched = StageSchedule::default();
    let s1 = init_stage1(&sched).map_err(|e| e.to_string())?;
    let mut by_rho = Vec::new();
    for rho in [0.01, 0.02, 0.05, 0.1] {
        sched.rho = rho;
        by_rho.push(feasibility(&s1, &sched).map_err(|e| e.to_string())?);
    }
    let rho_monotone = by_rho.windows(2).all(|w| w[0].required < w[1].required);
    let inputs = by_rho[2].inputs;
    let by_a: Vec<_> = [1.0, 2.0, 10.0]
        .iter()
        .map(|f| required_r(&pseudorot::induction::ThresholdInputs { a: inputs.a * f, ..inputs }).0)
        .collect();
    let a_monotone = by_a.windows(2).all(|w| w[0] < w[1]);
    let detail = format!("exit {code}; \"{printed}\"; monotone in rho: {rho_monotone}; monotone in A: {a_monotone}");
    if code == 2 && !printed.is_empty() && rho_monotone && a_monotone {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut codes = Vec::new();
    for name in ["a", "b"] {
        let d = dir.path().join(name).display().to_string();
        let (mut out, mut err) = (Vec::new(), Vec::new());
        codes.push(run_from(["pseudorot", "build", "--stages", "2", "--out", &d], &mut out, &mut err));
        codes.push(run_from(["pseudorot", "verify", &d], &mut out, &mut err));
    }
    let files = ["manifest.json", "stage-1.json", "stage-2.json", "build-report.txt", "verification.json", "verification.txt"];
    let mut differ = Vec::new();
    for f in files {
        let a = std::fs::read(dir.path().join("a").join(f)).map_err(|e| format!("{f}: {e}"))?;
        let b = std::fs::read(dir.path().join("b").join(f)).map_err(|e| format!("{f}: {e}"))?;
        if a != b {
            differ.push(f);
        }
    }
    let detail = format!("exit codes {codes:?}; {} files compared; differing {differ:?}", files.len());
    if differ.is_empty() && codes.iter().all(|c| *c == 0) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn main() {
    let criteria: [(&str, f64, fn() -> Outcome); 10] = [
        ("analytic approximation off the bad set", 10.0, approximation),
        ("periodicity under 1/q translations", 1.0, periodicity),
        ("uniform bound by sum |beta|", 10.0, uniform_bound),
        ("area preservation of shears, conjugacies, stage maps", 30.0, area_preservation),
        ("block-slide conjugacy end to end", 60.0, lemma_end_to_end),
        ("stage 1 exactness", 10.0, stage_one),
        ("stage 2 practical audits", 300.0, stage_two),
        ("exact rational identity", 10.0, rational_identity),
        ("paper-safe feasibility honesty", 60.0, feasibility_honesty),
        ("determinism of manifests and reports", 60.0, determinism),
    ];
    let mut failed = 0;
    for (i, (name, limit, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = f();
        let secs = t.elapsed().as_secs_f64();
        let (ok, detail) = match outcome {
            Ok(d) => (secs < *limit, d),
            Err(d) => (false, d),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "{} [{:>2}] {name}: {detail}; {secs:.2} s (limit {limit} s)",
            if ok { "PASS" } else { "FAIL" },
            i + 1
        );
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
