use std::fs;
use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_topo-son"))
}

fn run_config(cfg: &Path, out: &Path) -> std::process::Output {
    bin()
        .arg("run")
        .arg(cfg)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

#[test]
fn run_is_byte_identical_across_invocations() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("energy.cfg");
    fs::write(&cfg, "kind = energy\nseeds = 4\nseed0 = 11\n").unwrap();
    for out in ["a", "b"] {
        let o = run_config(&cfg, &dir.path().join(out));
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for file in ["energy.csv", "energy_raw.csv"] {
        let a = fs::read(dir.path().join("a").join(file)).unwrap();
        let b = fs::read(dir.path().join("b").join(file)).unwrap();
        assert_eq!(a, b, "{file}");
    }
}

#[test]
fn seeds_flags_override_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("f.cfg");
    fs::write(&cfg, "kind = frequency\nseeds = 50\n").unwrap();
    let o = bin()
        .args([
            "run",
            cfg.to_str().unwrap(),
            "--seeds",
            "3",
            "--seed0",
            "5",
            "--out",
        ])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    let raw = fs::read_to_string(dir.path().join("frequency_raw.csv")).unwrap();
    let seeds: Vec<&str> = raw
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(seeds, ["5", "6", "7"]);
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "kind = frequency\nsigma = 3\n").unwrap();
    assert_eq!(run_config(&cfg, dir.path()).status.code(), Some(2));
    assert_eq!(
        run_config(&dir.path().join("missing.cfg"), dir.path())
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn betti_and_complex_on_a_node_file() {
    let dir = tempfile::tempdir().unwrap();
    let nodes = dir.path().join("ring.txt");
    // four disks around an uncovered center
    fs::write(&nodes, "a=2\n0 0.5 0.5 0.6 0.4 0.2 0\n1 1.5 0.5 0.6 0.4 0.2 0\n2 1.5 1.5 0.6 0.4 0.2 0\n3 0.5 1.5 0.6 0.4 0.2 0\n").unwrap();
    let o = bin().arg("betti").arg(&nodes).output().unwrap();
    assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), "4 0");
    let o = bin()
        .arg("betti")
        .arg(&nodes)
        .args(["--role", "comm"])
        .output()
        .unwrap();
    assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), "1 1");

    let cx = dir.path().join("ring.cx");
    let o = bin()
        .arg("complex")
        .arg(&nodes)
        .args(["--role", "comm"])
        .output()
        .unwrap();
    fs::write(&cx, &o.stdout).unwrap();
    let o = bin()
        .arg("betti")
        .arg(&cx)
        .arg("--complex-file")
        .output()
        .unwrap();
    assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), "1 1");
}

#[test]
fn reduce_prints_trace_and_keeps_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cx = dir.path().join("k5.cx");
    fs::write(&cx, "0 1 2 3 4\n").unwrap();
    let o = bin()
        .arg("reduce")
        .arg(&cx)
        .args(["--flags", "0,1", "--trace"])
        .output()
        .unwrap();
    assert!(o.status.success());
    let out = String::from_utf8_lossy(&o.stdout);
    assert!(out.lines().any(|l| l.trim() == "0"));
    assert!(out.lines().any(|l| l.trim() == "1"));
    assert!(!String::from_utf8_lossy(&o.stderr).trim().is_empty());
}

#[test]
fn recover_writes_one_row_per_seed() {
    let o = bin()
        .args([
            "recover",
            "--coverage",
            "0.8",
            "--planner",
            "setcover",
            "--seeds",
            "3",
        ])
        .output()
        .unwrap();
    assert!(o.status.success());
    let out = String::from_utf8_lossy(&o.stdout);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(
        lines[0],
        "seed,N_i,n_added_total,n_added_kept,beta1_after_perturbation"
    );
    assert_eq!(lines.len(), 4);
}

#[test]
fn plan_freq_and_conserve_round_trip_node_files() {
    let dir = tempfile::tempdir().unwrap();
    let nodes = dir.path().join("n.txt");
    fs::write(
        &nodes,
        "a=2\n0 0.5 0.5 0.8 0.5 0.4 0\n1 1.0 0.6 0.8 0.5 0.4 0\n2 1.5 0.5 0.8 0.5 0.4 0\n3 1.0 1.4 0.8 0.5 0.4 0\n",
    )
    .unwrap();
    let o = bin().arg("plan-freq").arg(&nodes).output().unwrap();
    assert!(o.status.success());
    assert_eq!(String::from_utf8_lossy(&o.stdout).lines().count(), 4);

    let kept = dir.path().join("kept.txt");
    let o = bin()
        .arg("conserve")
        .arg(&nodes)
        .arg("--out")
        .arg(&kept)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(fs::read_to_string(&kept).unwrap().starts_with("a=2\n"));
}
