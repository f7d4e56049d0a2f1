use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn nematic(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nematic"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("run.toml");
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

const SMALL: &str = "t_end = 0.05\n[grid]\ndims = [12, 12]\n[initial]\npreset = \"random_smooth\"\nepsilon = 0.2\n[stepper]\ndt = 0.005\nslab_t = 0.025\n";

#[test]
fn simulate_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("out");
    let o = nematic(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for name in ["energy.csv", "picard.csv", "final_state.bin", "final_state.toml", "manifest.toml"] {
        assert!(out.join(name).is_file(), "{name}");
    }
    let energy = fs::read_to_string(out.join("energy.csv")).unwrap();
    let mut lines = energy.lines();
    let hash_line = lines.next().unwrap();
    assert!(hash_line.starts_with("# config_hash="));
    assert_eq!(lines.next().unwrap(), "t,E,D,residual,drift,U0_proxy");
    assert_eq!(lines.count(), 11);
    let manifest = fs::read_to_string(out.join("manifest.toml")).unwrap();
    assert!(manifest.contains(hash_line.trim_start_matches("# config_hash=")));
}

#[test]
fn same_seed_gives_identical_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = nematic(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap(), "--seed", "5", "--threads", "1"]);
        assert!(o.status.success());
        out
    };
    let (a, b) = (run("a"), run("b"));
    for f in ["energy.csv", "picard.csv", "final_state.bin"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let out = dir.path().join("c");
    nematic(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap(), "--seed", "6"]);
    assert_ne!(fs::read(a.join("energy.csv")).unwrap(), fs::read(out.join("energy.csv")).unwrap());
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    for (text, needle) in [
        ("[grid]\ndims = [3, 8]\n", "grid.dims"),
        ("[grid]\nsize = 3\n", "grid.size"),
        ("[stepper]\ndt = \"x\"\n", "stepper.dt"),
    ] {
        let cfg = write_config(dir.path(), text);
        let o = nematic(&["simulate", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2), "{text}");
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(err.contains("exit_code = 2") && err.contains(needle), "{err}");
    }
    let o = nematic(&["simulate", "--config", "/nonexistent/run.toml"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unwritable_output_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let o = nematic(&["simulate", "--config", &cfg, "--out", blocker.join("sub").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("kind = \"Io\""));
}

#[test]
fn solver_failure_exits_3_with_error_block() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "t_end = 4.0\n[grid]\ndims = [16, 16]\n[initial]\npreset = \"random_smooth\"\nepsilon = 3.0\n[stepper]\ndt = 0.4\nslab_t = 4.0\nmax_halvings = 0\n",
    );
    let out = dir.path().join("out");
    let o = nematic(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("MaxHalvingsExceeded"));
    assert!(out.join("error.toml").is_file());
}

#[test]
fn study_commands_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[grid]\ndims = [8, 8]\n[initial]\npreset = \"random_smooth\"\nepsilon = 0.1\n[stepper]\ndt = 0.01\nslab_t = 0.02\n\
         [picard_study]\nslab_ts = [0.02, 0.01]\nepsilons = [0.0, 0.1]\n\
         [mms]\ncase = \"steady_twist\"\nresolutions = [8, 12, 16]\nt_end = 0.02\nbase_steps = 2\nsteps_per_slab = 2\n\
         [weak_strong]\nfine = [16, 16]\ncoarse = [[4, 4], [8, 8]]\nt_end = 0.02\nsample_every = 1\n",
    );
    for (cmd, file) in [
        ("picard-study", "picard_study.csv"),
        ("mms", "convergence.csv"),
        ("weak-strong", "weak_strong_summary.txt"),
        ("energy-report", "energy_report.toml"),
    ] {
        let out = dir.path().join(cmd);
        let o = nematic(&[cmd, "--config", &cfg, "--out", out.to_str().unwrap(), "--threads", "2"]);
        assert!(o.status.success(), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(out.join(file).is_file(), "{cmd}");
        assert!(out.join("manifest.toml").is_file(), "{cmd}");
    }
    let ws = dir.path().join("weak-strong");
    assert!(ws.join("rel_energy_4x4.csv").is_file() && ws.join("rel_energy_8x8.csv").is_file());
}
