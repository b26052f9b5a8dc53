use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use chenlee::io::read_trajectory;

fn chenlee(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chenlee"))
        .args(args)
        .current_dir(cwd)
        .env("CHENLEE_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn summary(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn files(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(files(&p));
        } else {
            out.push(p);
        }
    }
    out.sort();
    out
}

#[test]
fn zero_data_gives_zero_trajectory() {
    let tmp = tempfile::tempdir().unwrap();
    let o = chenlee(&["simulate", "--config", &fixture("base.cfg"), "--set", "initial=zero", "--out", "z"], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let traj = read_trajectory(&tmp.path().join("z/trajectory")).unwrap();
    assert_eq!(traj.len(), 51);
    assert!(traj.states().iter().all(|u| u.coeffs().iter().all(|c| c.norm() == 0.0)));
    assert_eq!(summary(&tmp.path().join("z"))["pass"], true);
}

#[test]
fn oracle_check_passes_at_n4() {
    let tmp = tempfile::tempdir().unwrap();
    let o = chenlee(&["oracle-check", "--N=4", "--s=-1.5", "--t=1"], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s = summary(&tmp.path().join("out-oracle-check"));
    assert!(s["results"]["max_abs_err"].as_f64().unwrap() <= 1e-8);
}

#[test]
fn corrupted_constant_fails_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let o = chenlee(&["verify-estimates", "--config", &fixture("corrupted_constant.cfg")], tmp.path());
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    let s = summary(&tmp.path().join("out-verify-estimates"));
    assert_eq!(s["pass"], false);
    assert!(s["results"][0]["violations"].as_u64().unwrap() > 0);
}

#[test]
fn quick_estimates_pass_and_embed_config() {
    let tmp = tempfile::tempdir().unwrap();
    let o = chenlee(&["verify-estimates", "--config", &fixture("quick_estimates.cfg"), "--seed", "11"], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = tmp.path().join("out-verify-estimates");
    assert_eq!(summary(&out)["seed"], 11);
    for f in files(&out) {
        let text = fs::read_to_string(&f).unwrap();
        assert!(text.contains("seed = 11") || text.contains("\"seed\": \"11\""), "{}", f.display());
        assert!(text.contains("linear_samples"), "{}", f.display());
    }
}

#[test]
fn repeated_runs_are_bit_identical() {
    let tmp = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        let o = chenlee(&["simulate", "--config", &fixture("base.cfg"), "--set", "s=-0.25", "--set", "profile=-0.25", "--out", out], tmp.path());
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let (a, b) = (files(&tmp.path().join("a")), files(&tmp.path().join("b")));
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap(), "{}", x.display());
    }
}

#[test]
fn picard_rejects_s_outside_the_well_posed_range() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("rough.cfg");
    fs::write(&cfg, "s = -0.6\n").unwrap();
    let o = chenlee(&["picard", "--config", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("s > -1/2"), "{}", stderr(&o));
}

#[test]
fn picard_converges_with_auto_horizon() {
    let tmp = tempfile::tempdir().unwrap();
    let o = chenlee(&["picard", "--set", "contraction_constant=1", "--set", "max_mode=16"], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s = summary(&tmp.path().join("out-picard"));
    assert_eq!(s["results"]["picard"]["converged"], true);
    assert_eq!(s["results"]["horizon"], 1.0);
}

#[test]
fn numerical_failure_writes_a_record() {
    let tmp = tempfile::tempdir().unwrap();
    let o = chenlee(
        &["picard", "--set", "contraction_constant=1", "--set", "max_mode=16", "--set", "picard_max_iter=1"],
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let rec: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("out-picard/failure.json")).unwrap()).unwrap();
    assert_eq!(rec["error_kind"], "not_converged");
    assert_eq!(rec["exit_code"], 3);
    assert_eq!(rec["config"]["picard_max_iter"], "1");
}

#[test]
fn input_errors_map_to_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let o = chenlee(&["simulate", "--set", "etaa=1"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("etaa"));
    let o = chenlee(&["simulate", "--config", "missing.cfg"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    let o = chenlee(&["simulate", "--set", "initial=nowhere.field", "--out", "f"], tmp.path());
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    let o = Command::new(env!("CARGO_BIN_EXE_chenlee"))
        .args(["oracle-check"])
        .current_dir(tmp.path())
        .env("CHENLEE_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn existing_output_needs_force() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["inflation-scan", "--s=0", "--N=4..64"];
    assert_eq!(chenlee(&args, tmp.path()).status.code(), Some(0));
    assert_eq!(chenlee(&args, tmp.path()).status.code(), Some(4));
    let mut forced = args.to_vec();
    forced.push("--force");
    assert_eq!(chenlee(&forced, tmp.path()).status.code(), Some(0));
}
