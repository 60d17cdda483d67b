use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SINGLE_QUBIT: &str = r#"
kind = "anneal"
seed = 3
T = [1.0, 10.0, 100.0]

[instance]
generator = "inline"
h = [1.0]
"#;

fn dqalab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dqalab")).args(args).env_remove("DQALAB_THREADS").output().unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path.display().to_string()
}

fn run_kind(kind: &str, config: &str, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![kind, "--config", config, "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    dqalab(&args)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn anneal_writes_three_rows_per_metric() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", SINGLE_QUBIT);
    let out = dir.path().join("out");
    let o = run_kind("anneal", &cfg, &out, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("results.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("instance,seed,T,metric,value"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    for metric in ["success_probability", "residual_energy", "tts"] {
        let times: Vec<&str> = rows.iter().filter(|r| r[3] == metric).map(|r| r[2]).collect();
        assert_eq!(times, ["1", "10", "100"], "{metric}");
    }
    let slow: f64 = rows.iter().find(|r| r[3] == "success_probability" && r[2] == "100").unwrap()[4].parse().unwrap();
    assert!(slow > 0.99);
    assert!(out.join("summary.json").exists());
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["kind"], "anneal");
    assert_eq!(manifest["config"]["T"], serde_json::json!([1.0, 10.0, 100.0]));
    assert!(manifest["version"].is_string());
}

#[test]
fn invalid_kind_exits_with_schema_status() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", SINGLE_QUBIT);
    assert_eq!(run_kind("annealing", &cfg, &dir.path().join("o"), &[]).status.code(), Some(2));

    let bad = write_config(dir.path(), "bad.toml", &SINGLE_QUBIT.replace("kind = \"anneal\"", "kind = \"melt\""));
    let o = run_kind("anneal", &bad, &dir.path().join("o"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bad.toml:2: error: invalid kind `melt`"), "{}", stderr(&o));
}

#[test]
fn identical_configs_give_identical_results() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
seed = 11
T = [0.5, 4.0]

[instance]
generator = "max2sat"
n = 6
clauses = 12
count = 3
"#;
    let cfg = write_config(dir.path(), "c.toml", text);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(run_kind("anneal", &cfg, &a, &["--threads", "1"]).status.success());
    assert!(run_kind("anneal", &cfg, &b, &["--threads", "3"]).status.success());
    for file in ["results.csv", "summary.json"] {
        assert_eq!(fs::read(a.join(file)).unwrap(), fs::read(b.join(file)).unwrap(), "{file}");
    }
    let replay = dir.path().join("replay");
    let manifest = a.join("manifest.json");
    let o = run_kind("anneal", manifest.to_str().unwrap(), &replay, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read(a.join("results.csv")).unwrap(), fs::read(replay.join("results.csv")).unwrap());
}

#[test]
fn validation_reports_missing_time_and_warns_on_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "ok.toml", SINGLE_QUBIT);
    let o = dqalab(&["anneal", "--config", &cfg, "--validate-only"]);
    assert!(o.status.success());
    assert!(stderr(&o).is_empty());

    let missing = write_config(dir.path(), "missing.toml", &SINGLE_QUBIT.replace("T = [1.0, 10.0, 100.0]", ""));
    let o = dqalab(&["anneal", "--config", &missing, "--validate-only"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("missing required field `T`"), "{}", stderr(&o));

    let extra = write_config(dir.path(), "extra.toml", &format!("{SINGLE_QUBIT}color = \"blue\"\n"));
    let o = dqalab(&["anneal", "--config", &extra, "--validate-only"]);
    assert!(o.status.success());
    assert!(stderr(&o).contains("extra.toml:9: warning: unknown key `instance.color` ignored"), "{}", stderr(&o));
}

#[test]
fn type_errors_are_line_anchored() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", &SINGLE_QUBIT.replace("seed = 3", "seed = \"three\""));
    let o = dqalab(&["anneal", "--config", &cfg, "--validate-only"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("c.toml:3: error:"), "{}", stderr(&o));
}

#[test]
fn numeric_failure_exits_with_status_three() {
    let dir = tempfile::tempdir().unwrap();
    let text = "T = [1.0]\n\n[instance]\ngenerator = \"maxcut3\"\nn = 5\n";
    let cfg = write_config(dir.path(), "c.toml", text);
    let o = run_kind("anneal", &cfg, &dir.path().join("o"), &[]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("even n"), "{}", stderr(&o));
}

#[test]
fn other_kinds_produce_their_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("walk", "T = [5.0]\n[instance]\ngenerator = \"sk\"\nn = 4\n", "hopping_rate"),
        ("gluedtrees", "T = [8.0]\n[instance]\ngenerator = \"glued-trees\"\ndepth = 2\n", "classical_hit_fraction"),
        ("qaoa", "[instance]\ngenerator = \"maxcut3\"\nn = 4\n[qaoa]\np = [1, 2]\n", "energy_p2"),
        ("optimize", "T = [1.0]\n[instance]\ngenerator = \"sk\"\nn = 3\n[optimize]\nsegments = 4\niterations = 5\n", "end_bang"),
        ("baseline", "T = [50]\n[instance]\ngenerator = \"sk\"\nn = 5\n[baseline]\nrepetitions = 4\n", "success_fraction"),
        ("spectrum", "[instance]\ngenerator = \"sk\"\nn = 4\n", "min_gap_s"),
        ("instance-gen", "[instance]\ngenerator = \"rem\"\nn = 3\ncount = 2\n", "ground_energy"),
        ("reverse", "T = [2.0]\n[instance]\ngenerator = \"sk\"\nn = 3\n[reverse]\ncycles = 3\n", "best_energy"),
        ("anneal", "T = [3.0]\n[instance]\ngenerator = \"spike\"\nn = 64\n", "residual_energy"),
    ];
    for (kind, text, metric) in cases {
        let cfg = write_config(dir.path(), &format!("{kind}.toml"), text);
        let out = dir.path().join(kind);
        let o = run_kind(kind, &cfg, &out, &[]);
        assert!(o.status.success(), "{kind}: {}", stderr(&o));
        let csv = fs::read_to_string(out.join("results.csv")).unwrap();
        assert!(csv.lines().any(|l| l.split(',').nth(3) == Some(metric)), "{kind}: {csv}");
    }
    assert!(dir.path().join("instance-gen/instances/rem-n3-s1.json").exists());
}

#[test]
fn observables_filter_rows() {
    let dir = tempfile::tempdir().unwrap();
    let text = SINGLE_QUBIT.replace("seed = 3", "seed = 3\nobservables = [\"tts\"]");
    let cfg = write_config(dir.path(), "c.toml", &text);
    let out = dir.path().join("o");
    assert!(run_kind("anneal", &cfg, &out, &[]).status.success());
    let csv = fs::read_to_string(out.join("results.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.lines().skip(1).all(|l| l.contains(",tts,")));

    let bad = write_config(dir.path(), "bad.toml", &SINGLE_QUBIT.replace("seed = 3", "observables = [\"speed\"]"));
    assert_eq!(run_kind("anneal", &bad, &out, &[]).status.code(), Some(2));
}
