//! A step profile, its analytic approximant, and where they differ.

use pseudorot::maps::{a0_threshold, bad_set_contains, AnalyticProfile, StepProfile};

fn main() -> pseudorot::Result<()> {
    let (q, n, eps, delta) = (3, 4, 0.1, 0.5);
    let base = StepProfile::new(vec![0.5, -0.25, 0.0, 0.75], q, n, 1)?;
    let a0 = a0_threshold(eps, delta, n, 1)?;
    let p = AnalyticProfile::new(base.clone(), eps, delta, 1.05 * a0)?;
    println!("A0 = {a0:.4}, A = {:.4}", p.a());

    println!("{:>8} {:>10} {:>10} {:>8}", "x", "step", "analytic", "bad set");
    for i in 0..=24 {
        let x = i as f64 / 24.0;
        println!("{x:>8.4} {:>10.6} {:>10.6} {:>8}", base.eval(x), p.eval(x), bad_set_contains(q, n, delta, x));
    }

    let mut worst: f64 = 0.0;
    for i in 0..10_000 {
        let x = i as f64 / 10_000.0;
        if !bad_set_contains(q, n, delta, x) {
            worst = worst.max((p.eval(x) - base.eval(x)).abs());
        }
    }
    println!("sup off the bad set: {worst:.3e} (eps = {eps})");
    println!("ln C on the strip of width 0.01: {}", p.lipschitz_log_bound(0.01));
    Ok(())
}
