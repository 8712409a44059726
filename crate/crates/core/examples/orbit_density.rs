//! Covering radius of finite orbits of the stage maps.

use pseudorot::analysis::{density_gap, DensityAccumulator};
use pseudorot::induction::{advance_stage, init_stage1, StageSchedule};

fn main() -> pseudorot::Result<()> {
    let sched = StageSchedule::default();
    let s1 = init_stage1(&sched)?;
    let s2 = advance_stage(&s1, &sched)?;
    for st in [&s1, &s2] {
        let maps = st.stage_maps();
        for len in [10u64, 100, 10_000, 1_000_000] {
            let res = 1usize << (st.n + 2);
            let mut acc = DensityAccumulator::keeping(res, 2_000_000);
            maps.for_each_orbit_point([0.1, 0.2], len, |_, p| {
                acc.push(p);
                true
            })?;
            println!("stage {} orbit length {len:>8}: covering radius {:.5} (grid {res})", st.n, acc.refined_gap());
        }
    }
    let lattice: Vec<[f64; 2]> = (0..100).map(|k| [(k % 10) as f64 / 10.0, (k / 10) as f64 / 10.0]).collect();
    println!("(i/10, j/10) lattice: {:.5}; closed form sqrt2/20 = {:.5}", density_gap(&lattice, 100), 2f64.sqrt() / 20.0);
    Ok(())
}
