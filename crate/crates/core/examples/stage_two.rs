//! Builds stages 1 and 2 in practical mode and prints their audits.

use pseudorot::induction::{advance_stage, init_stage1, StageSchedule};

fn main() -> pseudorot::Result<()> {
    let sched = StageSchedule::default();
    let s1 = init_stage1(&sched)?;
    print!("{}", s1.audit);
    let s2 = advance_stage(&s1, &sched)?;
    print!("{}", s2.audit);
    println!("omega_2 = {}  q_2 = {}  N_2 = {:?}  m_2 = {}  eps_2 = {}", s2.omega, s2.q, s2.big_n, s2.m_n, s2.eps_n);
    for note in &s2.notes {
        println!("note: {note}");
    }
    Ok(())
}
