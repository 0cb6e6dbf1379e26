use std::process::{Command, Output};

use serde_json::Value;

fn corpus(name: &str) -> String {
    format!("{}/../../corpus/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cmreflex")).args(args).output().expect("binary runs")
}

fn records(o: &Output) -> Vec<Value> {
    String::from_utf8_lossy(&o.stdout).lines().map(|l| serde_json::from_str(l).expect("one JSON record per line")).collect()
}

#[test]
fn cm_reports() {
    let o = run(&["cm", &corpus("fields/gaussian.json")]);
    assert_eq!(o.status.code(), Some(0));
    let r = records(&o);
    assert_eq!(r[0]["config"]["seed"], 0);
    assert_eq!(r[1]["cm"], true);
    let types = r[1]["types"].as_array().unwrap();
    assert_eq!(types.len(), 2);
    for t in types {
        assert_eq!(t["reflex_field"], r[1]["field"]);
    }

    let o = run(&["cm", &corpus("fields/cube_root2.json")]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(records(&o)[1]["cm"], false);

    let o = run(&["cm", &corpus("fields/quartic_d4.json")]);
    let r = records(&o);
    let types = r[1]["types"].as_array().unwrap();
    assert_eq!(types.len(), 4);
    assert!(types.iter().all(|t| t["reflex_degree"] == 4));
    assert_eq!(r[1]["galois_group"], "D4");
}

#[test]
fn cm_exit_codes() {
    let dir = std::env::temp_dir().join(format!("cmreflex-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.json");
    std::fs::write(&bad, "{\"min_poly\": [1, 0, \"x\"]}").unwrap();
    assert_eq!(run(&["cm", bad.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(run(&["cm", dir.join("missing.json").to_str().unwrap()]).status.code(), Some(2));
    let z11 = dir.join("z11.json");
    std::fs::write(&z11, "{\"min_poly\": [1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1]}").unwrap();
    assert_eq!(run(&["cm", z11.to_str().unwrap()]).status.code(), Some(3));
}

#[test]
fn reflex_verify_passes_and_catches_faults() {
    let g = corpus("fields/gaussian.json");
    let o = run(&["reflex-verify", &g, "--type", "0", "--samples", "100", "--seed", "42"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let o = run(&["reflex-verify", &corpus("fields/zeta5.json"), "--type", "1", "--samples", "100", "--seed", "42"]);
    assert_eq!(o.status.code(), Some(0));
    let o = run(&["reflex-verify", &g, "--samples", "20", "--inject-fault"]);
    assert_eq!(o.status.code(), Some(1));
    let r = records(&o);
    let failing: Vec<&Value> = r.iter().filter(|v| v["failures"].as_u64().map_or(false, |f| f > 0)).collect();
    assert!(!failing.is_empty());
    assert!(failing.iter().all(|v| v["witness"].is_string()));
    assert_eq!(run(&["reflex-verify", &g, "--type", "7"]).status.code(), Some(2));
}

#[test]
fn st_runs() {
    let o = run(&["--format", "summary", "st", "--p-min", "5", "--p-max", "1000"]);
    assert_eq!(o.status.code(), Some(0));
    let r = records(&o);
    assert_eq!(r.len(), 2);
    assert_eq!(r[1]["summary"]["fail"], 0);
    assert!(r[1]["summary"]["pass"].as_u64().unwrap() > 150);

    // 11 is supersingular for both curves
    let o = run(&["st", "--p-min", "11", "--p-max", "11"]);
    assert_eq!(o.status.code(), Some(0));
    let r = records(&o);
    assert!(r[1..r.len() - 1].iter().all(|v| v["status"] == "supersingular"));

    assert_eq!(run(&["st", "--p-min", "100", "--p-max", "10"]).status.code(), Some(2));

    let o = run(&["st", "--corpus", &corpus("curves.json"), "--p-min", "5", "--p-max", "50"]);
    assert_eq!(o.status.code(), Some(0));
    let rows = records(&o);
    let p13: Vec<&Value> = rows.iter().filter(|v| v["p"] == 13).collect();
    assert_eq!(p13.len(), 2);
    assert!(p13.iter().all(|v| v["ideal_match"] == true && v["valuation_match"] == true));
}

#[test]
fn output_is_deterministic() {
    let args = ["--seed", "9", "st", "--p-min", "5", "--p-max", "200"];
    assert_eq!(run(&args).stdout, run(&args).stdout);
    let args = ["--seed", "3", "reflex-verify", &corpus("fields/sqrt_minus5.json"), "--samples", "10"];
    assert_eq!(run(&args).stdout, run(&args).stdout);
}
