//! Rotation vector and mean-motion deviation of the stage maps.

use pseudorot::analysis::{bmm_deviation, rotation_vector_estimate, LiftedPoint};
use pseudorot::induction::{advance_stage, init_stage1, StageSchedule};

fn main() -> pseudorot::Result<()> {
    let sched = StageSchedule::default();
    let s1 = init_stage1(&sched)?;
    let s2 = advance_stage(&s1, &sched)?;
    let samples: Vec<[f64; 2]> = (0..32).map(|i| [(0.137 * i as f64) % 1.0, (0.731 * i as f64) % 1.0]).collect();
    for st in [&s1, &s2] {
        let f = st.lift_map();
        let w = st.omega_f64();
        for steps in [10u64, 1_000, 100_000] {
            let est = rotation_vector_estimate(&f, LiftedPoint::new([0.3, 0.6]), steps)?;
            println!(
                "stage {} steps {steps:>7}: estimate [{:.9}, {:.9}]  error {:.2e}",
                st.n,
                est[0],
                est[1],
                (est[0] - w[0]).hypot(est[1] - w[1])
            );
        }
        println!("stage {} bmm over 32 samples, 1000 steps: {:.3e}", st.n, bmm_deviation(&f, w, &samples, 1000)?);
    }
    Ok(())
}
