//! The paper-safe requirement on r_2 and how it grows with the strip width.

use pseudorot::induction::{feasibility, init_stage1, required_r, Mode, StageSchedule, ThresholdInputs};

fn main() -> pseudorot::Result<()> {
    let mut sched = StageSchedule { mode: Mode::PaperSafe, ..StageSchedule::default() };
    let s1 = init_stage1(&sched)?;
    let report = feasibility(&s1, &sched)?;
    print!("{report}");

    println!("{:>6} {:>22}", "rho", "log10 log10 r");
    for rho in [0.0, 0.001, 0.01, 0.02, 0.05, 0.1] {
        sched.rho = rho;
        let r = feasibility(&s1, &sched)?;
        println!("{rho:>6} {:>22.6e}", r.log10_log10_r.unwrap_or(f64::NAN));
    }

    println!("{:>6} {:>22}", "A x", "required r");
    for f in [0.01, 0.1, 1.0, 10.0] {
        let inp = ThresholdInputs { a: report.inputs.a * f, ..report.inputs };
        println!("{f:>6} {:>22}", required_r(&inp).0.to_string());
    }
    Ok(())
}
