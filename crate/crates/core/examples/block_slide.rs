//! A block slide: inverse, commutation with 1/q translations, area.

use pseudorot::analysis::area_defect;
use pseudorot::geom::torus_dist;
use pseudorot::maps::{AnalyticProfile, BlockSlide, Mapping, PlaneMap, StepProfile};

fn profile(beta: Vec<f64>, q: u64) -> pseudorot::Result<AnalyticProfile> {
    let n = beta.len();
    AnalyticProfile::with_margin(StepProfile::new(beta, q, n, 1)?, 0.05, 0.3, 1.05)
}

fn main() -> pseudorot::Result<()> {
    let q = 3;
    let h = BlockSlide::new(profile(vec![0.0, 0.3, 0.0, 0.0], q)?, profile(vec![0.0, 0.0, -0.2, 0.0], q)?)?;
    let map = PlaneMap::from(h.clone());
    let inv = map.inverse();

    for p in [[0.1, 0.2], [0.4, 0.45], [0.77, 0.13]] {
        let hp = map.map(p)?;
        let back = inv.map(hp)?;
        let shifted = map.map([p[0] + 1.0 / q as f64, p[1]])?;
        println!(
            "p = {p:?}  h(p) = [{:.6}, {:.6}]  |h^-1 h p - p| = {:.1e}  commutation defect = {:.1e}",
            hp[0],
            hp[1],
            torus_dist(back, p),
            torus_dist(shifted, [hp[0] + 1.0 / q as f64, hp[1]])
        );
    }
    println!("area defect on 64x64: {:.3e}", area_defect(&h, 64));
    println!("serialized: {} bytes of json", serde_json::to_string(&h)?.len());
    Ok(())
}
