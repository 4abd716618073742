use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

struct Workspace {
    dir: TempDir,
}

impl Workspace {
    fn new() -> Self {
        Self {
            dir: TempDir::new().unwrap(),
        }
    }

    fn file(&self, name: &str, contents: &str) -> PathBuf {
        let path = self.dir.path().join(name);
        fs::write(&path, contents).unwrap();
        path
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

fn hunt(args: &[&dyn AsRef<std::ffi::OsStr>]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_hunt"));
    for a in args {
        cmd.arg(a);
    }
    cmd.output().unwrap()
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout)
        .unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

const EXCLUSIVE: &str = r#"{"f":[0.1,0.4,0.3,0.2],"k":3,"T":2,"policy":{"kind":"exclusive"}}"#;
const UNIFORM_K2: &str = r#"{"f":[0.25,0.25,0.25,0.25],"k":2,"T":2,"policy":{"kind":"exclusive"}}"#;
const AUNIF: &str = r#"{"M":4,"T":2,"rows":[[0.25,0.25],[0.25,0.25],[0.25,0.25],[0.25,0.25]]}"#;

fn astar_file(ws: &Workspace, config: &Path, name: &str) -> PathBuf {
    let out_path = ws.path(name);
    let out = hunt(&[&"astar", &"--config", &config, &"--out", &out_path]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    out_path
}

#[test]
fn astar_profile_certifies_as_equilibrium() {
    let ws = Workspace::new();
    let config = ws.file("ex.json", EXCLUSIVE);
    let a = astar_file(&ws, &config, "a.json");
    let matrix: Value = serde_json::from_str(&fs::read_to_string(&a).unwrap()).unwrap();
    let rows: Vec<Value> = matrix["rows"].as_array().unwrap().clone();
    let players = format!(
        r#"{{"players":[{0},{0},{0}]}}"#,
        serde_json::to_string(&matrix).unwrap()
    );
    let profile = ws.file("astar_k.json", &players);
    let out = hunt(&[
        &"certify",
        &"--config",
        &config,
        &"--profile",
        &profile,
        &"--expect-equilibrium",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report = stdout_json(&out);
    assert!((report["report"]["ratio"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["seed"], 0);
    assert_eq!(report["config_hash"].as_str().unwrap().len(), 64);
    // box 2 is the most likely, so it is opened most in round one
    let first: Vec<f64> = rows.iter().map(|r| r[0].as_f64().unwrap()).collect();
    assert!(first[1] > first[2] && first[2] > first[3] && first[3] >= first[0]);
}

#[test]
fn poa_of_uniform_profile() {
    let ws = Workspace::new();
    let config = ws.file("uniform_k2.json", UNIFORM_K2);
    let a = ws.file("aunif.json", AUNIF);
    let out = hunt(&[&"poa", &"--config", &config, &"--strategy", &a]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let ratio = stdout_json(&out)["report"]["ratio"].as_f64().unwrap();
    assert!((ratio - 4.0 / 3.0).abs() < 1e-9);
    assert_eq!(format!("{ratio:.4}"), "1.3333");
}

#[test]
fn pure_search_reports_count() {
    let ws = Workspace::new();
    let third = 1.0f64 / 3.0;
    let config = ws.file(
        "m3t2k2.json",
        &format!(
            r#"{{"f":[{third},{third},{}],"k":2,"T":2,"policy":{{"kind":"exclusive"}}}}"#,
            1.0 - 2.0 * third
        ),
    );
    let out = hunt(&[&"pure-search", &"--config", &config]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stderr(&out).contains("0 pure equilibria"));
    assert_eq!(stdout_json(&out)["report"]["count"], 0);

    let single = ws.file(
        "t1.json",
        r#"{"f":[0.2,0.5,0.3],"k":2,"T":1,"policy":{"kind":"exclusive"}}"#,
    );
    let out = hunt(&[&"pure-search", &"--config", &single]);
    assert_eq!(code(&out), 0);
    let eq = &stdout_json(&out)["report"]["equilibria"];
    // the unique equilibrium opens the two likeliest boxes, labels 2 and 3
    assert_eq!(eq.as_array().unwrap().len(), 1);
    assert_eq!(eq[0][0]["1"], 2);
    assert_eq!(eq[0][1]["1"], 3);

    let big = ws.file("big.json", r#"{"f":[0.1,0.1,0.1,0.1,0.1,0.1,0.1,0.1,0.1,0.1],"k":3,"T":3,"policy":{"kind":"exclusive"}}"#);
    let out = hunt(&[&"pure-search", &"--config", &big]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("too large"));
}

#[test]
fn validation_errors_exit_two_and_name_the_invariant() {
    let ws = Workspace::new();
    let config = ws.file("ex.json", EXCLUSIVE);
    let cases = [
        (
            "rows.json",
            r#"{"M":4,"T":2,"rows":[[0.9,0.3],[0,0],[0,0],[0,0]]}"#,
            "doubly-substochastic",
        ),
        (
            "shape.json",
            r#"{"M":2,"T":2,"rows":[[0,0],[0,0]]}"#,
            "boxes",
        ),
        ("broken.json", r#"{"M":4"#, "parse error"),
    ];
    for (name, text, needle) in cases {
        let path = ws.file(name, text);
        let out = hunt(&[&"certify", &"--config", &config, &"--strategy", &path]);
        assert_eq!(code(&out), 2, "{name}");
        assert!(stderr(&out).contains(needle), "{name}: {}", stderr(&out));
    }
    let bad_f = ws.file(
        "f.json",
        r#"{"f":[0.5,0.6],"k":2,"T":1,"policy":{"kind":"sharing"}}"#,
    );
    let out = hunt(&[&"astar", &"--config", &bad_f]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("sum to"));
    let bad_c = ws.file(
        "c.json",
        r#"{"f":[0.5,0.5],"k":2,"T":1,"policy":{"kind":"table","rewards":[1,1]}}"#,
    );
    let out = hunt(&[&"astar", &"--config", &bad_c]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("identically 1"));
    let a = ws.file("aunif.json", AUNIF);
    let out = hunt(&[
        &"poa",
        &"--config",
        &config,
        &"--strategy",
        &a,
        &"--format",
        &"csv",
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn expect_equilibrium_fails_with_three() {
    let ws = Workspace::new();
    let config = ws.file("ex.json", EXCLUSIVE);
    let a = ws.file("aunif.json", AUNIF);
    let out = hunt(&[
        &"certify",
        &"--config",
        &config,
        &"--strategy",
        &a,
        &"--expect-equilibrium",
    ]);
    assert_eq!(code(&out), 3);
    assert_eq!(stdout_json(&out)["report"]["is_equilibrium"], false);
    let out = hunt(&[&"certify", &"--config", &config, &"--strategy", &a]);
    assert_eq!(code(&out), 0);
}

#[test]
fn emitted_strategies_round_trip() {
    let ws = Workspace::new();
    let config = ws.file(
        "sh.json",
        r#"{"f":[0.2,0.45,0.35],"k":2,"T":2,"policy":{"kind":"sharing"}}"#,
    );
    let json_path = ws.path("g.json");
    let csv_path = ws.path("g.csv");
    for (fmt, path) in [("json", &json_path), ("csv", &csv_path)] {
        let out = hunt(&[
            &"sgreedy",
            &"--config",
            &config,
            &"--theta",
            &"0.01",
            &"--format",
            &fmt,
            &"--out",
            path,
        ]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
    }
    let from_json = hunt(&[&"certify", &"--config", &config, &"--strategy", &json_path]);
    let from_csv = hunt(&[&"certify", &"--config", &config, &"--strategy", &csv_path]);
    assert_eq!(code(&from_json), 0);
    let (a, b) = (stdout_json(&from_json), stdout_json(&from_csv));
    assert_eq!(a["report"], b["report"]);
    assert!(a["report"]["ratio"].as_f64().unwrap() <= 1.5 * 1.01 + 1e-6);

    let sim = |seed: &str| {
        hunt(&[
            &"simulate",
            &"--config",
            &config,
            &"--strategy",
            &json_path,
            &"--trials",
            &"20000",
            &"--seed",
            &seed,
        ])
    };
    let (x, y, z) = (sim("5"), sim("5"), sim("6"));
    assert_eq!(code(&x), 0, "{}", stderr(&x));
    assert_eq!(x.stdout, y.stdout);
    assert_ne!(x.stdout, z.stdout);
    let report = stdout_json(&x);
    assert_eq!(report["seed"], 5);
    assert_eq!(report["report"]["trials"], 20000);
}

#[test]
fn simulate_defaults_seed_zero() {
    let ws = Workspace::new();
    let config = ws.file("u.json", UNIFORM_K2);
    let a = ws.file("aunif.json", AUNIF);
    let out = hunt(&[
        &"simulate",
        &"--config",
        &config,
        &"--strategy",
        &a,
        &"--trials",
        &"1000",
    ]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout_json(&out)["seed"], 0);
    let out = hunt(&[
        &"simulate",
        &"--config",
        &config,
        &"--strategy",
        &a,
        &"--trials",
        &"0",
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn decompose_emits_labelled_terms() {
    let ws = Workspace::new();
    let config = ws.file("ex.json", EXCLUSIVE);
    let a = astar_file(&ws, &config, "a.json");
    let out = hunt(&[&"decompose", &"--config", &config, &"--strategy", &a]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let terms = stdout_json(&out);
    let total: f64 = terms
        .as_array()
        .unwrap()
        .iter()
        .map(|t| t["weight"].as_f64().unwrap())
        .sum();
    assert!((total - 1.0).abs() < 1e-9);
    for t in terms.as_array().unwrap() {
        for (round, label) in t["visits"].as_object().unwrap() {
            assert!(["1", "2"].contains(&round.as_str()));
            assert!((1..=4).contains(&label.as_u64().unwrap()));
        }
    }
}

#[test]
fn robustness_kinds_and_tables() {
    let ws = Workspace::new();
    let config = ws.file("ex.json", EXCLUSIVE);
    let a = astar_file(&ws, &config, "a.json");
    let out = hunt(&[
        &"robustness",
        &"--config",
        &config,
        &"--strategy",
        &a,
        &"--extra",
        &"1",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stdout_json(&out)["report"]["ratio"].as_f64().unwrap() >= 1.0 - 1e-9);

    let table = ws.file(
        "t.json",
        r#"{"f":[0.6,0.4],"k":2,"T":1,"policy":{"kind":"table","rewards":[1,0.3]}}"#,
    );
    let s = ws.file("s.json", r#"{"M":2,"T":1,"rows":[[0.5],[0.5]]}"#);
    let out = hunt(&[
        &"robustness",
        &"--config",
        &table,
        &"--strategy",
        &s,
        &"--extra",
        &"1",
    ]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("explicit rewards"));
    let out = hunt(&[
        &"robustness",
        &"--config",
        &table,
        &"--strategy",
        &s,
        &"--extra",
        &"1",
        &"--extended-rewards",
        &"1,0.3,0.2",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let out = hunt(&[
        &"robustness",
        &"--config",
        &table,
        &"--strategy",
        &s,
        &"--extra",
        &"1",
        &"--extended-rewards",
        &"1,0.3",
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn usage_errors_exit_two() {
    let ws = Workspace::new();
    let config = ws.file("ex.json", EXCLUSIVE);
    let a = ws.file("aunif.json", AUNIF);
    assert_eq!(code(&hunt(&[&"certify", &"--config", &config])), 2);
    assert_eq!(
        code(&hunt(&[
            &"certify",
            &"--config",
            &config,
            &"--strategy",
            &a,
            &"--profile",
            &a
        ])),
        2
    );
    assert_eq!(
        code(&hunt(&[&"astar", &"--config", &ws.path("missing.json")])),
        2
    );
}
