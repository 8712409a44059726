//! Builds a conjugacy separating a close pair and prints its audit.

use pseudorot::conjugacy::{build_conjugacy, step_dry_run, verify_conjugacy, ConjugacyConfig, ConjugacyRequest};
use pseudorot::geom::torus_dist;

fn main() -> pseudorot::Result<()> {
    let cfg = ConjugacyConfig::default();
    let x = [0.5f64.sqrt(), 3f64.sqrt() - 1.0];
    let y = [x[0] + 0.0731 * 2f64.sqrt(), x[1] - 0.0417 * 5f64.sqrt()];
    let req = ConjugacyRequest::new(3, 0.01, x, y);
    let res = build_conjugacy(&req, &cfg)?;
    println!("N = {}, delta = {:.4}, epsilon = {:.3e}, A = {:.3e}", res.n, res.delta, res.epsilon, res.a);
    println!("x' = {:?}\ny' = {:?}\nd(x', y') = {:.3e}", res.x_prime, res.y_prime, torus_dist(res.x_prime, res.y_prime));
    print!("{}", verify_conjugacy(&res, &req, &cfg));
    let dry = step_dry_run(&req, &res);
    println!("step-function stage in exact arithmetic: {dry:?}");
    Ok(())
}
