//! Sampled strip distances, and the overflow of the double exponential.

use pseudorot::analysis::{strip_distance, StripGrid};
use pseudorot::maps::{AnalyticProfile, BlockSlide, PlaneMap, StepProfile};

fn main() -> pseudorot::Result<()> {
    let grid = StripGrid { per_period: 16, im_levels: 5 };
    let t = PlaneMap::translation([0.25, 0.1]);
    let id = PlaneMap::identity();
    println!("d_rho(T, Id) = {:.6}", strip_distance(&t, &id, 0.05, grid)?);

    let prof = |v: f64| AnalyticProfile::with_margin(StepProfile::new(vec![0.0, v, 0.0, 0.0], 1, 4, 1)?, 0.1, 0.5, 1.05);
    let h = PlaneMap::from(BlockSlide::new(prof(0.1)?, prof(-0.05)?)?);
    for rho in [1e-4, 1e-3, 1e-2, 5e-2] {
        match strip_distance(&h, &id, rho, grid) {
            Ok(d) => println!("rho = {rho:e}: d_rho(h, Id) = {d:.6}"),
            Err(e) => println!("rho = {rho:e}: {e}"),
        }
    }
    Ok(())
}
