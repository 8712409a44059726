//! Diophantine checks on rational, algebraic and stage rotation vectors.

use pseudorot::analysis::diophantine_test;

fn main() {
    let c = 2f64.cbrt();
    let cases = [
        ("omega_1", [0.01, 0.1]),
        ("omega_2", [0.010001, 0.1002]),
        ("(sqrt2 - 1, sqrt3 - 1)", [2f64.sqrt() - 1.0, 3f64.sqrt() - 1.0]),
        ("(2^(1/3) - 1, 4^(1/3) - 1)", [c - 1.0, c * c - 1.0]),
    ];
    for (name, alpha) in cases {
        for k_max in [10, 100, 1000] {
            let r = diophantine_test(alpha, 1e-3, 2.0, k_max);
            println!("{name:<28} k <= {k_max:<5} pass {:<5} worst k {:?} ratio {:.3e}", r.pass, r.worst_k, r.worst_ratio);
        }
    }
}
