use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use fock_cli::config::ExperimentConfig;

fn focklab(args: &[&str], out: &Path, cache: &Path) -> Output {
    // global flags go first: eval's point list accepts leading hyphens
    Command::new(env!("CARGO_BIN_EXE_focklab"))
        .arg("--out")
        .arg(out)
        .args(args)
        .env("FOCKLAB_CACHE_DIR", cache)
        .output()
        .expect("focklab runs")
}

fn stdout_json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn write_config(dir: &Path, c: &ExperimentConfig) -> std::path::PathBuf {
    let p = dir.join("experiment.toml");
    fs::write(&p, c.to_toml()).unwrap();
    p
}

#[test]
fn eval_marks_zeros_with_the_sentinel() {
    let dir = tempfile::tempdir().unwrap();
    let o = focklab(&["eval", "sigma", "0", "0.5+0.25i"], dir.path(), &dir.path().join("c"));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout_json(&o)["rows"], 2);
    let rows = csv_rows(&dir.path().join("eval-sigma.csv"));
    assert_eq!(rows[0][2], "NEGINF");
    assert!(rows[1][2].parse::<f64>().unwrap().is_finite());
}

#[test]
fn weight_is_real_on_the_real_axis() {
    let dir = tempfile::tempdir().unwrap();
    let o = focklab(&["eval", "F", "3", "1.5"], dir.path(), &dir.path().join("c"));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for row in csv_rows(&dir.path().join("eval-F.csv")) {
        let phase: f64 = row[3].parse().unwrap();
        let off_axis = phase.abs().min((phase.abs() - std::f64::consts::PI).abs());
        assert!(off_axis < 1e-9, "phase {phase}");
    }
}

#[test]
fn f1_does_not_depend_on_the_contour() {
    let dir = tempfile::tempdir().unwrap();
    let mut logs = Vec::new();
    for radius in [0.75, 1.2] {
        let mut c = ExperimentConfig::preset("counterexample-default").unwrap();
        c.contour.radius = radius;
        let sub = dir.path().join(format!("r{radius}"));
        fs::create_dir_all(&sub).unwrap();
        let cfg = write_config(&sub, &c);
        let o = focklab(&["--config", cfg.to_str().unwrap(), "eval", "f1", "2+0.5i"], &sub, &dir.path().join("c"));
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let row = &csv_rows(&sub.join("eval-f1.csv"))[0];
        logs.push((row[2].parse::<f64>().unwrap(), row[3].parse::<f64>().unwrap()));
    }
    let (a, b) = (logs[0], logs[1]);
    assert!((a.0 - b.0).abs() < 1e-8 && (a.1 - b.1).abs() < 1e-8, "{a:?} vs {b:?}");
}

#[test]
fn config_round_trip_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    for preset in ["positive-constant", "positive-exponential", "counterexample-default"] {
        let first = focklab(&["config", "--preset", preset], dir.path(), &dir.path().join("c"));
        assert!(first.status.success());
        let path = dir.path().join(format!("{preset}.toml"));
        fs::write(&path, &first.stdout).unwrap();
        let second = focklab(&["config", "--config", path.to_str().unwrap()], dir.path(), &dir.path().join("c"));
        assert_eq!(first.stdout, second.stdout, "{preset}");
    }
}

#[test]
fn invalid_chain_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = ExperimentConfig::preset("counterexample-default").unwrap();
    c.params.beta = c.params.delta;
    let cfg = write_config(dir.path(), &c);
    let o = focklab(&["verify", "--config", cfg.to_str().unwrap()], dir.path(), &dir.path().join("c"));
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stdout_json(&o)["error"], "config");
}

#[test]
fn unknown_preset_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = focklab(&["distance", "--preset", "nope"], dir.path(), &dir.path().join("c"));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn exponential_weight_approximates_and_survives_a_tampered_cache() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let o = focklab(&["distance", "--preset", "positive-exponential"], &a, &cache);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = stdout_json(&o);
    assert_eq!(summary["verdict"], "decays");
    let rows = csv_rows(&a.join("distance.csv"));
    assert_eq!(rows.len(), 21);
    assert!(rows[16][2].parse::<f64>().unwrap() <= 1e-3);

    let file = fs::read_dir(&cache).unwrap().map(|e| e.unwrap().path()).find(|p| p.extension().is_some_and(|x| x == "json")).unwrap();
    let text = fs::read_to_string(&file).unwrap();
    let pos = text.find("\"entries\":[[").unwrap() + 12;
    let mut tampered = text.clone();
    tampered.insert(pos, '9');
    fs::write(&file, tampered).unwrap();

    let o = focklab(&["distance", "--preset", "positive-exponential"], &b, &cache);
    assert!(o.status.success());
    let warnings = stdout_json(&o)["warnings"].as_array().unwrap().clone();
    assert_eq!(warnings.len(), 1, "{warnings:?}");
    assert!(warnings[0].as_str().unwrap().contains("checksum mismatch"));
    let record: serde_json::Value = serde_json::from_slice(&fs::read(b.join("run-distance.json")).unwrap()).unwrap();
    assert_eq!(record["warnings"].as_array().unwrap().len(), 1);
    assert_eq!(fs::read(a.join("distance.csv")).unwrap(), fs::read(b.join("distance.csv")).unwrap());
    // the cache was rewritten with a valid file
    assert_eq!(fs::read_to_string(&file).unwrap(), text);
}

#[test]
fn degree_zero_gives_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = ExperimentConfig::preset("positive-constant").unwrap();
    c.n_max = 0;
    let cfg = write_config(dir.path(), &c);
    let o = focklab(&["distance", "--config", cfg.to_str().unwrap()], dir.path(), &dir.path().join("c"));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&dir.path().join("distance.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0], "0");
}

#[test]
fn keyest_lists_every_point_and_degree() {
    let dir = tempfile::tempdir().unwrap();
    let o = focklab(&["keyest", "--preset", "positive-constant", "--threads", "1"], dir.path(), &dir.path().join("c"));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&dir.path().join("keyest.csv"));
    assert_eq!(rows.len(), 4 * 11);
    // constant weight: K_n(x)^2 = pi sum_k (pi x^2)^k / k!
    let x: f64 = rows[10][0].parse().unwrap();
    let exact: f64 = (0..=10).scan(1.0, |t, k| {
        let v = *t;
        *t *= std::f64::consts::PI * x * x / (k + 1) as f64;
        Some(v)
    }).sum();
    let got: f64 = rows[10][2].parse().unwrap();
    let want = 0.5 * (std::f64::consts::PI * exact).ln();
    assert!((got - want).abs() < 1e-9, "{got} vs {want}");
}

#[test]
fn cauchy_rows_stay_inside_the_tail_bound() {
    let dir = tempfile::tempdir().unwrap();
    let o = focklab(&["cauchy", "--preset", "positive-constant"], dir.path(), &dir.path().join("c"));
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&dir.path().join("cauchy.csv"));
    assert_eq!(rows.len(), 3);
    for r in rows {
        let (res, bound): (f64, f64) = (r[6].parse().unwrap(), r[7].parse().unwrap());
        assert!(res <= bound, "{res} > {bound}");
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let mut fingerprints = Vec::new();
    for (out, cache) in [(&a, "c1"), (&b, "c2")] {
        let o = focklab(&["keyest", "--preset", "positive-exponential"], out, &dir.path().join(cache));
        assert!(o.status.success());
        fingerprints.push(stdout_json(&o)["config_fingerprint"].clone());
    }
    assert_eq!(fs::read(a.join("keyest.csv")).unwrap(), fs::read(b.join("keyest.csv")).unwrap());
    assert_eq!(fingerprints[0], fingerprints[1]);
}
