use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn heavytail(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_heavytail"))
        .arg("--out")
        .arg(out)
        .arg("-q")
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit status")
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn subexponential_pareto_holds() {
    let dir = tempfile::tempdir().unwrap();
    let o = heavytail(dir.path(), &["test", "subexp", "--law", "pareto(alpha=1.5)"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let json: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("test_subexp.json")).unwrap()).unwrap();
    assert_eq!(json["result"]["verdict"], "holds");
    assert_eq!(json["config"]["law"], "pareto(alpha=1.5)");
}

#[test]
fn exponential_is_not_long_tailed() {
    let dir = tempfile::tempdir().unwrap();
    let o = heavytail(dir.path(), &["test", "longtail", "--law", "exponential(lambda=1)"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn closure_parts_agree() {
    let dir = tempfile::tempdir().unwrap();
    let o = heavytail(
        dir.path(),
        &["theorem", "closure.S", "--F", "pareto(alpha=1)", "--G", "pareto(alpha=1)", "--p", "0.5"],
    );
    assert_eq!(code(&o), 0);
    let json: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("theorem_closure.S.json")).unwrap()).unwrap();
    let parts = json["result"]["parts"].as_array().unwrap();
    assert_eq!(parts.len(), 4);
    assert!(parts.iter().all(|p| p["verdict"] == "holds"));
    assert_eq!(json["result"]["agreement"], true);
}

#[test]
fn unknown_ids_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let o = heavytail(dir.path(), &["theorem", "nope"]);
    assert_eq!(code(&o), 64);
    assert!(String::from_utf8_lossy(&o.stderr).contains("closure.S"));
    let o = heavytail(dir.path(), &["test", "longtail", "--law", "gauss(mu=0)"]);
    assert_eq!(code(&o), 64);
    assert!(String::from_utf8_lossy(&o.stderr).contains("pareto, lognormal"));
    let o = heavytail(dir.path(), &["lemma", "h9"]);
    assert_eq!(code(&o), 64);
    assert!(String::from_utf8_lossy(&o.stderr).contains("eq14"));
    let o = heavytail(dir.path(), &["frobnicate"]);
    assert_eq!(code(&o), 64);
}

#[test]
fn reruns_are_byte_identical() {
    let args: [&[&str]; 4] = [
        &["--svg", "test", "h-insensitive", "--law", "pareto(alpha=1)", "--h", "sqrt"],
        &["mc", "big-jump", "--law", "pareto(alpha=1)", "--n", "20000", "--points", "4"],
        &["decompose", "--F", "pareto(alpha=1)", "--G", "weibull(k=0.5)", "--h", "sqrt", "--x", "10,100"],
        &["families", "dump-breakpoints", "--alpha", "1", "--n", "8"],
    ];
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for args in args {
        heavytail(a.path(), args);
        heavytail(b.path(), args);
    }
    let (fa, fb) = (files(a.path()), files(b.path()));
    assert!(fa.len() >= 8);
    assert_eq!(fa, fb);
}

#[test]
fn every_table_carries_the_config_header() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["families", "list"][..],
        &["families", "dump-breakpoints", "--n", "4"],
        &["conv-tail", "--F", "pareto(alpha=1)", "--G", "pareto(alpha=1)", "--x", "10,100"],
        &["decompose", "--F", "pareto(alpha=1)", "--G", "pareto(alpha=1)", "--x", "100"],
        &["test", "tail-equiv", "--law", "pareto(alpha=1)", "--law2", "regvarying(alpha=1, c=2)"],
        &["construct-h", "--law", "lognormal(mu=0, sigma=1)"],
        &["mc", "conv-tail", "--F", "pareto(alpha=1)", "--G", "pareto(alpha=1)", "--x", "100", "--n", "10000"],
        &["lemma", "h1"],
    ] {
        let o = heavytail(dir.path(), args);
        assert!(code(&o) != 64, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let all = files(dir.path());
    assert!(all.iter().filter(|(n, _)| n.ends_with(".csv")).count() >= 8);
    for (name, bytes) in all {
        let text = String::from_utf8(bytes).unwrap();
        if name.ends_with(".csv") {
            assert!(text.starts_with("# command="), "{name}");
            assert!(text.contains("# version="), "{name}");
        } else if name.ends_with(".json") {
            let v: serde_json::Value = serde_json::from_str(&text).unwrap();
            assert!(v["config"]["command"].is_string(), "{name}");
        }
    }
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("from-env");
    let o = Command::new(env!("CARGO_BIN_EXE_heavytail"))
        .env("HEAVYTAIL_OUT", &target)
        .args(["-q", "families", "list"])
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(target.join("families.csv").exists());
}

#[test]
fn config_file_supplies_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    fs::write(&cfg, "# mc run\nseed = 9\nn = 5000\n").unwrap();
    let o = heavytail(
        dir.path(),
        &["--config", cfg.to_str().unwrap(), "mc", "conv-tail", "--F", "pareto(alpha=1)", "--G", "pareto(alpha=1)", "--x", "50"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("mc_conv_tail.csv")).unwrap();
    assert!(csv.contains("# seed=9"));
    assert!(csv.contains(",5000,"));
}

#[test]
fn suite_coarse_grid_is_inconclusive_and_seeded_runs_repeat() {
    let a = tempfile::tempdir().unwrap();
    let o = heavytail(a.path(), &["--grid-top", "1e4", "suite", "all", "--mc-n", "100000", "--mc-n-large", "1000000"]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stdout));
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    for d in [&b, &c] {
        let o = heavytail(d.path(), &["--seed", "7", "suite", "all"]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    }
    let (fb, fc) = (files(b.path()), files(c.path()));
    assert!(fb.iter().any(|(n, _)| n.starts_with("mc_")));
    assert_eq!(fb, fc);
}
