use std::fs;
use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pseudorot"))
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = bin().args(args).env_remove("PSEUDOROT_CONFIG").output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn build(dir: &Path, stages: u32) -> (i32, String) {
    let d = dir.to_str().unwrap();
    let (code, out, _) = run(&["build", "--stages", &stages.to_string(), "--out", d]);
    (code, out)
}

#[test]
fn build_one_stage_writes_the_base_rotation() {
    let dir = tempfile::tempdir().unwrap();
    let run_dir = dir.path().join("r");
    let (code, out) = build(&run_dir, 1);
    assert_eq!(code, 0, "{out}");
    let stage: serde_json::Value = serde_json::from_str(&fs::read_to_string(run_dir.join("stage-1.json")).unwrap()).unwrap();
    assert_eq!(stage["omega"]["num"], serde_json::json!(["1", "10"]));
    assert_eq!(stage["omega"]["den"], "100");
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(run_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["status"]["state"], "complete");
}

#[test]
fn practical_two_stages_verify_and_export() {
    let dir = tempfile::tempdir().unwrap();
    let r = dir.path().join("r");
    let (code, out) = build(&r, 2);
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("non-certified (a5)"));
    let rs = r.to_str().unwrap();

    let (code, out, _) = run(&["verify", rs]);
    assert_eq!(code, 0, "{out}");
    assert!(r.join("verification.json").exists() && r.join("verification.txt").exists());

    let csv = dir.path().join("o.csv");
    let (code, _, err) = run(&["orbit", "--run", rs, "--stage", "1", "--steps", "100", "--csv", csv.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("step,x,y,lift_x,lift_y"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 100);
    for row in &rows {
        let (i, j) = (row[1] * 100.0, row[2] * 10.0);
        assert!((i - i.round()).abs() < 1e-9 && (j - j.round()).abs() < 1e-9, "{row:?}");
    }

    let (code, _, _) = run(&["orbit", "--run", rs, "--stage", "1", "--steps", "1", "--csv", csv.to_str().unwrap()]);
    assert_eq!(code, 0);
    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().nth(1), Some("1,0.01,0.1,0.01,0.1"));
    assert_eq!(text.lines().count(), 2);

    let (code, out, err) = run(&["orbit", "--run", rs, "--witness", "--steps", "10"]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("distance at m_n"));
    let w = fs::read_to_string(r.join("orbit-stage-2-witness.csv")).unwrap();
    let stage: serde_json::Value = serde_json::from_str(&fs::read_to_string(r.join("stage-2.json")).unwrap()).unwrap();
    let m = stage["m_n"].as_u64().unwrap() as usize;
    let row: Vec<f64> = w.lines().nth(m + 1).unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(row[0] as usize, m);
    assert!(row[5] > 1e-3);
    let first: Vec<f64> = w.lines().nth(1).unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert!(first[5] < 1e-4);

    let ledger = dir.path().join("m.jsonl");
    for what in ["rotation", "area", "diophantine"] {
        let (code, out, err) = run(&["measure", what, "--run", rs, "--stage", "1", "--ledger", ledger.to_str().unwrap()]);
        assert_eq!(code, 0, "{err}");
        assert!(out.contains(&format!("\"measure\":\"{what}\"")));
    }
    assert_eq!(fs::read_to_string(&ledger).unwrap().lines().count(), 3);
    let (code, _, err) = run(&["measure", "c0", "--run", rs, "--stage", "1"]);
    assert_eq!(code, 3, "{err}");
}

#[test]
fn paper_safe_build_is_refused_with_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let r = dir.path().join("ps");
    let (code, out, _) = run(&["build", "--mode", "paper-safe", "--stages", "2", "--out", r.to_str().unwrap()]);
    assert_eq!(code, 2, "{out}");
    assert!(out.contains("required log10 r"));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(r.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["status"]["state"], "infeasible");
    assert_eq!(manifest["stages"].as_array().unwrap().len(), 1);
    assert!(manifest["feasibility"]["log10_log10_r"].as_f64().unwrap() > 15f64.log10());
    // the stored first stage still verifies
    let (code, _, _) = run(&["verify", r.to_str().unwrap()]);
    assert_eq!(code, 0);
}

#[test]
fn builds_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(build(&a, 2).0, 0);
    assert_eq!(build(&b, 2).0, 0);
    for f in ["manifest.json", "stage-1.json", "stage-2.json", "build-report.txt"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let c = dir.path().join("c");
    let (code, _, _) = run(&["build", "--stages", "1", "--seed", "0x1234", "--out", c.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_ne!(fs::read(a.join("stage-1.json")).unwrap(), fs::read(c.join("stage-1.json")).unwrap());
}

#[test]
fn edited_beta_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    let r = dir.path().join("r");
    assert_eq!(build(&r, 2).0, 0);
    let path = r.join("stage-2.json");
    let mut stage: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    let beta = stage["h_list"][1]["beta"]["beta"].as_array_mut().unwrap();
    let i = beta.iter().position(|b| b.as_f64().unwrap() != 0.0).unwrap();
    beta[i] = serde_json::json!(beta[i].as_f64().unwrap() + 0.01);
    fs::write(&path, serde_json::to_string(&stage).unwrap()).unwrap();
    let (code, out, _) = run(&["verify", r.to_str().unwrap()]);
    assert_eq!(code, 1, "{out}");
    let tail = out.split("verification failed:").nth(1).unwrap();
    assert!(tail.contains("stage 2 conjugacy: d(x, h x')"), "{tail}");
}

#[test]
fn input_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("manifest.json");
    let sched = serde_json::to_value(pseudorot::induction::StageSchedule::default()).unwrap();
    let manifest = serde_json::json!({"version": 1, "schedule": sched, "stages": [], "status": {"state": "complete"}});
    fs::write(&empty, manifest.to_string()).unwrap();
    assert_eq!(run(&["verify", empty.to_str().unwrap()]).0, 3);
    fs::write(&empty, "{").unwrap();
    assert_eq!(run(&["verify", empty.to_str().unwrap()]).0, 3);
    assert_eq!(run(&["verify", dir.path().join("missing").to_str().unwrap()]).0, 3);
    assert_eq!(run(&["build", "--stages", "0"]).0, 3);
    assert_eq!(run(&["build", "--mode", "fast"]).0, 3);
    assert_eq!(run(&["frobnicate"]).0, 3);
    let (code, out, _) = run(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("feasibility"));
}

#[test]
fn config_file_env_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    let out_dir = dir.path().join("from-config");
    fs::write(&cfg, format!("stages = 1\nseed = 99\nout = {:?}\n", out_dir.to_str().unwrap())).unwrap();
    let status = bin().arg("build").env("PSEUDOROT_CONFIG", &cfg).output().unwrap();
    assert_eq!(status.status.code(), Some(0));
    let m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["schedule"]["seed"], 99);

    let flagged = dir.path().join("flagged");
    let status = bin()
        .args(["build", "--seed", "5", "--out", flagged.to_str().unwrap()])
        .env("PSEUDOROT_CONFIG", &cfg)
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(0));
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(flagged.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["schedule"]["seed"], 5);
    assert_eq!(m["stages"].as_array().unwrap().len(), 1);

    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\"stages\": \"two\"}").unwrap();
    assert_eq!(run(&["build", "--config", bad.to_str().unwrap()]).0, 3);
}

#[test]
fn feasibility_sweep_is_monotone() {
    let (code, out, _) = run(&["feasibility", "--json", "--sweep", "0.01,0.05,0.1"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let ll: Vec<f64> = v["sweep"].as_array().unwrap().iter().map(|r| r["log10_log10_r"].as_f64().unwrap()).collect();
    assert!(ll.windows(2).all(|w| w[0] < w[1]), "{ll:?}");
    assert_eq!(v["report"]["feasible"], false);
}
