use std::path::Path;
use std::process::Command;

use hankel_lab::{find, ExperimentConfig};

fn lab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lab"))
}

#[test]
fn list_names_every_experiment() {
    let out = lab().arg("list").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["restrict-p-le-1", "counterexample", "converse-sup", "laguerre-equivalence", "hilbert-schmidt"] {
        assert!(text.contains(name), "{name}");
    }
}

#[test]
fn run_writes_reports_to_env_dir() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.conf");
    std::fs::write(&cfg, "[experiment]\nname = symbol-identity\n[kernels]\nlabels = exp\n[grid]\nxi = i\nN = 50\n").unwrap();
    let out = lab()
        .args(["run", "symbol-identity", "--config"])
        .arg(&cfg)
        .env("HANKEL_LAB_OUT", dir.path().join("out"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for ext in ["csv", "json", "dat", "gp"] {
        assert!(dir.path().join("out").join(format!("symbol-identity.{ext}")).exists(), "{ext}");
    }
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/symbol-identity.json")).unwrap()).unwrap();
    assert_eq!(json["schema"], "hankel-lab/1");
    assert_eq!(json["pass"], true);
    assert_eq!(json["record_count"], 1);
    let csv = std::fs::read_to_string(dir.path().join("out/symbol-identity.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
}

#[test]
fn reruns_are_bitwise_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |sub: &str| {
        let out = lab().args(["run", "averaging-factorization", "--quick", "--format", "json", "--out"]).arg(dir.path().join(sub)).output().unwrap();
        assert!(out.status.success());
        let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join(sub).join("averaging-factorization.json")).unwrap()).unwrap();
        v["records"].as_array().unwrap().iter().map(|r| (r["value"].clone(), r["config_hash"].clone())).collect::<Vec<_>>()
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn failing_pinned_check_sets_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.conf");
    // A tolerance nothing can meet.
    std::fs::write(&cfg, "[experiment]\nname = counterexample\n[grid]\np = 2\nN = 2, 4\n[tolerances]\npinned = 1e-12\n").unwrap();
    let out = lab().args(["run", "counterexample", "--config"]).arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bad_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.conf");
    std::fs::write(&cfg, "[grid]\nq = 1\n").unwrap();
    let out = lab().args(["run", "counterexample", "--config"]).arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown key q"));
    let out = lab().args(["run", "no-such-thing"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut count = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let name = path.file_stem().unwrap().to_str().unwrap().to_string();
        let e = find(&name).unwrap_or_else(|| panic!("{name} is not an experiment"));
        ExperimentConfig::load(&path, (e.defaults)(false)).unwrap_or_else(|err| panic!("{name}: {err}"));
        count += 1;
    }
    assert!(count >= 5);
}

#[test]
fn defaults_round_trip_through_the_file_format() {
    let out = lab().args(["defaults", "restrict-p-le-1"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let e = find("restrict-p-le-1").unwrap();
    let parsed = ExperimentConfig::from_text(&text, "stdout", (e.defaults)(true)).unwrap();
    assert_eq!(parsed, (e.defaults)(false));
}
