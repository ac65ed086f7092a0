use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn fpsp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fpsp"))
        .args(args)
        .output()
        .expect("failed to launch fpsp")
}

fn short_run_args(out: &Path) -> Vec<String> {
    ["--N", "41", "--T", "0.5", "--record-every", "10", "--out"]
        .iter()
        .map(|s| s.to_string())
        .chain([out.display().to_string()])
        .collect()
}

fn run_with(args: &[String]) -> Output {
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    fpsp(&refs)
}

#[test]
fn help_lists_the_experiment_flags() {
    let out = fpsp(&["--help"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for flag in [
        "--test", "--beta", "--eps", "--L", "--N", "--T", "--dt", "--integrator", "--weights", "--initial", "--out",
        "--record-every", "--sweep-beta", "--strict-cfl", "--config",
    ] {
        assert!(text.contains(flag), "missing {flag}");
    }
}

#[test]
fn short_run_writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_with(&short_run_args(dir.path()));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["diagnostics.csv", "solution.csv", "entropy_comparison.csv", "run_manifest.txt"] {
        assert!(dir.path().join(name).exists(), "{name}");
    }
    let diag = fs::read_to_string(dir.path().join("diagnostics.csv")).unwrap();
    assert!(diag.starts_with("t,mass,entropy,dissipation,hellinger,rel_l1,d_p,moment\n"));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("rel_l1 = "));
}

#[test]
fn identical_invocations_give_identical_files() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert!(run_with(&short_run_args(a.path())).status.success());
    assert!(run_with(&short_run_args(b.path())).status.success());
    for name in ["diagnostics.csv", "solution.csv"] {
        assert_eq!(
            fs::read(a.path().join(name)).unwrap(),
            fs::read(b.path().join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# short generalized run\ntest = generalized_gaussian\nbeta = 2\nN = 31\nT = 0.2\nweights = sp4\n").unwrap();
    let out_dir = dir.path().join("out");
    let out = fpsp(&[
        "--config",
        cfg.to_str().unwrap(),
        "--N",
        "21",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest = fs::read_to_string(out_dir.join("run_manifest.txt")).unwrap();
    assert!(manifest.contains("N = 21"));
    assert!(manifest.contains("beta = 2"));
    assert!(manifest.contains("weights = sp4"));
    assert!(manifest.contains("test = generalized_gaussian"));
    let diag = fs::read_to_string(out_dir.join("diagnostics.csv")).unwrap();
    let first = diag.lines().nth(1).unwrap();
    assert!(!first.ends_with(','), "moment column should be filled: {first}");
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["--N", "2"],
        vec!["--weights", "sp3"],
        vec!["--integrator", "euler"],
        vec!["--dt", "-1"],
        vec!["--test", "generalized_gaussian", "--beta", "0.4"],
        vec!["--no-such-flag"],
    ] {
        let out = fpsp(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let bad = dir.path().join("bad.cfg");
    fs::write(&bad, "N = 11\nthis is not a pair\n").unwrap();
    let out = fpsp(&["--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains(":2"));
    let missing = dir.path().join("missing.cfg");
    assert_eq!(fpsp(&["--config", missing.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn numerical_failures_exit_with_three() {
    let strict = fpsp(&["--N", "41", "--T", "1", "--dt", "0.5", "--strict-cfl"]);
    assert_eq!(strict.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&strict.stderr).contains("CFL"));

    let unstable = fpsp(&["--N", "101", "--T", "2", "--dt", "0.05"]);
    assert_eq!(unstable.status.code(), Some(3), "{}", String::from_utf8_lossy(&unstable.stderr));
}

#[test]
fn beta_sweep_writes_one_directory_per_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = fpsp(&[
        "--sweep-beta",
        "1,2,3",
        "--N",
        "31",
        "--T",
        "0.3",
        "--strict-cfl",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for b in ["beta_1", "beta_2", "beta_3"] {
        let manifest = fs::read_to_string(dir.path().join(b).join("run_manifest.txt")).unwrap();
        assert!(manifest.contains(&format!("beta = {}", &b[5..])));
    }
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.matches("[beta_").count() >= 3);
}

#[test]
fn eps_sweep_runs_three_smoothings() {
    let dir = tempfile::tempdir().unwrap();
    let out = fpsp(&["--sweep-eps", "--N", "21", "--T", "0.1", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for e in ["eps_0.1", "eps_0.01", "eps_0.001"] {
        assert!(dir.path().join(e).join("diagnostics.csv").exists(), "{e}");
    }
}
