//! Writes a run to disk, reloads it, re-verifies it, and breaks it.

use pseudorot::config::RunConfig;
use pseudorot::induction::{load_run, verify_run, write_run, RationalVector};

fn main() -> pseudorot::Result<()> {
    let dir = std::env::temp_dir().join("pseudorot-example-run");
    let cfg = RunConfig { stages: 2, out: dir.clone(), ..RunConfig::default() };
    let built = pseudorot::cli::build_run(&cfg)?;
    let path = write_run(&dir, &built.manifest, &built.stages)?;
    println!("wrote {}", path.display());

    let (manifest, stages) = load_run(&path)?;
    let report = verify_run(&stages, &manifest.schedule);
    println!("fresh run: {} checks, certified pass = {}", report.checks.len(), report.certified_pass());

    let mut broken = stages.clone();
    broken[1].omega = RationalVector::from_ints(1, 11, 100)?;
    let report = verify_run(&broken, &manifest.schedule);
    println!("edited omega_2: certified pass = {}", report.certified_pass());
    for name in report.checks.iter().filter(|c| c.certified && !c.pass).map(|c| &c.name) {
        println!("  failing: {name}");
    }
    Ok(())
}
