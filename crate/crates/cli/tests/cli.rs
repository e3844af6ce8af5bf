use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const QUICK: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/quick.toml");

fn fxarb(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_fxarb"));
    c.args(args).env("RUST_LOG", "warn");
    for (k, v) in envs {
        c.env(k, v);
    }
    c.output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

fn files_config(dir: &Path, fx: &Path, ir: &Path) -> PathBuf {
    let base = read(Path::new(QUICK)).replace(
        "source = \"synthetic\"",
        &format!("source = \"files\"\nfx_path = {:?}\nir_path = {:?}", fx, ir),
    );
    let p = dir.join("files.toml");
    std::fs::write(&p, base).unwrap();
    p
}

#[test]
fn verify_reports_every_check_as_passing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = fxarb(&["--out", out, "verify"], &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.lines().count() >= 7);
    assert!(text.lines().all(|l| l.starts_with("PASS")), "{text}");
    let report = read(&dir.path().join("verify.csv"));
    assert!(report.starts_with("# fxarb "));
    assert!(!report.contains(",FAIL,"));
}

#[test]
fn synthesized_files_feed_the_backtest() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let o = fxarb(&["--config", QUICK, "--out", data.to_str().unwrap(), "synth"], &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let cfg = files_config(dir.path(), &data.join("fx.csv"), &data.join("ir.csv"));
    let run = dir.path().join("run");
    let o = fxarb(&["--config", cfg.to_str().unwrap(), "--out", run.to_str().unwrap(), "backtest"], &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["summary.csv", "daily.csv", "rolling.csv", "refits.csv", "predictions.csv", "backtest_manifest.txt"] {
        assert!(run.join(f).is_file(), "{f} missing");
    }
    // The echo is the input file, byte for byte.
    assert_eq!(std::fs::read(run.join("config.toml")).unwrap(), std::fs::read(&cfg).unwrap());
    let summary = read(&run.join("summary.csv"));
    assert!(summary.lines().any(|l| l.starts_with("gnn,")) && summary.lines().any(|l| l.starts_with("lp,")));
    assert!(read(&run.join("certificate_failures.csv")).lines().count() == 2, "violations reported");
}

#[test]
fn equal_config_and_seed_give_identical_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for (d, threads) in [(&a, "1"), (&b, "0")] {
        let o = fxarb(&["--config", QUICK, "--out", d.to_str().unwrap(), "--threads", threads, "backtest"], &[]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for f in ["summary.csv", "daily.csv", "rolling.csv", "refits.csv", "predictions.csv", "fxsa_grid.csv"] {
        assert!(read(&a.join(f)) == read(&b.join(f)), "{f} differs");
    }
    let stamp = read(&a.join("summary.csv")).lines().next().unwrap().to_string();
    assert!(stamp.contains("config_sha256=") && stamp.contains("seed=3"), "{stamp}");
}

#[test]
fn seed_and_strategy_follow_flags_and_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = fxarb(&["--config", QUICK, "--out", out, "--strategy", "lp", "backtest"], &[("FXARB_SEED", "11")]);
    assert!(o.status.success(), "{}", stderr(&o));
    let summary = read(&dir.path().join("summary.csv"));
    assert!(summary.lines().next().unwrap().ends_with("seed=11"));
    assert!(!summary.contains("\ngnn,"));
    let eff = read(&dir.path().join("effective_config.toml"));
    assert!(eff.contains("seed = 11") && eff.contains("strategy = \"lp\""), "{eff}");
}

#[test]
fn unknown_keys_fail_before_any_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("typo.toml");
    std::fs::write(&cfg, "schema_version = 1\n[backtest.schedule]\nrefit_month = 2\n").unwrap();
    let out = dir.path().join("out");
    let o = fxarb(&["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "backtest"], &[]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("refit_month"), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn missing_inputs_are_named_and_leave_nothing_behind() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = files_config(dir.path(), &dir.path().join("nope_fx.csv"), &dir.path().join("nope_ir.csv"));
    let out = dir.path().join("out");
    let o = fxarb(&["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "ingest"], &[]);
    assert!(!o.status.success());
    let err = stderr(&o);
    assert!(err.contains("missing prerequisite") && err.contains("nope_fx.csv"), "{err}");
    assert!(!out.exists() || std::fs::read_dir(&out).unwrap().next().is_none());
}

#[test]
fn a_failing_run_removes_its_partial_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad_home.toml");
    std::fs::write(&cfg, read(Path::new(QUICK)).replace("home = \"USD\"", "home = \"XAU\"")).unwrap();
    let out = dir.path().join("out");
    let o = fxarb(&["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "backtest"], &[]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("XAU"));
    let left: Vec<_> = std::fs::read_dir(&out).map(|d| d.flatten().collect()).unwrap_or_default();
    assert!(left.is_empty(), "{left:?}");
}
