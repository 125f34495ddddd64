use std::path::Path;
use std::process::{Command, Output};

fn halfline(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_halfline")).args(args).current_dir(dir).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) {
    std::fs::write(dir.join(name), body).unwrap();
}

/// Column `col` of the first data row whose first column parses to `key`.
fn lookup(csv: &str, key: f64, col: &str) -> f64 {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let j = header.iter().position(|h| *h == col).unwrap();
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        if fields[0].parse::<f64>().unwrap() == key {
            return fields[j].parse().unwrap();
        }
    }
    panic!("no row for {key}");
}

#[test]
fn m_constant_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "run.toml", "[problem]\npotential = \"constant\"\nq0 = 1.0\n[m]\nkappas = [2.0]\n");
    let out = halfline(&["m", "--config", "run.toml", "--out", "o"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("o/m.csv")).unwrap();
    assert_eq!(csv, String::from_utf8(out.stdout).unwrap());
    let m = lookup(&csv, 2.0, "m_re");
    assert!((m + 2.2360680).abs() < 1e-7, "{m}");
    // 17 significant digits
    let field = csv.lines().nth(1).unwrap().split(',').nth(2).unwrap();
    assert_eq!(field.split('e').next().unwrap().trim_start_matches('-').len(), 18);
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("o/m_bounds.json")).unwrap()).unwrap();
    assert_eq!(json["schema"], 1);
}

#[test]
fn bridge_bargmann_one_eigenvalue() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "run.toml",
        "[problem]\npotential = \"bargmann_one_eigenvalue\"\nkappa1 = 1.0\nc1 = 1.0\n[bridge]\nalphas = [0.5]\n",
    );
    let out = halfline(&["bridge", "--config", "run.toml", "--out", "o"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let a = lookup(&String::from_utf8(out.stdout).unwrap(), 0.5, "A");
    assert!((a + 2.3504024).abs() < 1e-4, "{a}");
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "unknown.toml", "[problem]\npotential = \"constant\"\nq0 = 1.0\nq1 = 2.0\n");
    write(dir.path(), "missing.toml", "[problem]\npotential = \"constant\"\n");
    write(dir.path(), "section.toml", "[problem]\npotential = \"zero\"\n[mm]\nkappas = [1.0]\n");
    for name in ["unknown.toml", "missing.toml", "section.toml", "absent.toml"] {
        let out = halfline(&["m", "--config", name, "--out", "o"], dir.path());
        assert_eq!(out.status.code(), Some(2), "{name}: {}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(halfline(&["m", "--out", "o"], dir.path()).status.code(), Some(2));
}

#[test]
fn computation_errors_exit_1_with_serialized_error() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "run.toml", "[problem]\npotential = \"zero\"\n[m]\nkappas = [-1.0]\n");
    let out = halfline(&["m", "--config", "run.toml", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err: serde_json::Value = serde_json::from_str(String::from_utf8(out.stderr).unwrap().lines().last().unwrap()).unwrap();
    assert_eq!(err["schema"], 1);
    assert_eq!(err["error"]["kind"], "invalid_argument");
}

#[test]
fn sampled_table_with_header() {
    let dir = tempfile::tempdir().unwrap();
    let mut table = String::from("x,q\n");
    for i in 0..=200 {
        table.push_str(&format!("{},1.0\n", i as f64 * 0.01));
    }
    write(dir.path(), "q.csv", &table);
    write(dir.path(), "run.toml", "[problem]\npotential = \"sampled\"\ntable = \"q.csv\"\n[m]\nkappas = [3.0]\n");
    let out = halfline(&["m", "--config", "run.toml", "--out", "o"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    // q = 1 on [0, 2] and 0 beyond, against q = 1 throughout: close for κ = 3
    let m = lookup(&String::from_utf8(out.stdout).unwrap(), 3.0, "m_re");
    assert!((m + 10f64.sqrt()).abs() < 1e-4, "{m}");
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "run.toml",
        "[problem]\npotential = \"bargmann_resonance\"\nbeta = 1.0\ngamma = 2.0\n[amplitude]\na = 1.0\nd_alpha = 0.01\n[m]\nray = { arg = -0.5, from = 1.0, to = 50.0, count = 6 }\n",
    );
    for cmd in ["m", "amplitude"] {
        for out in ["a", "b"] {
            let o = halfline(&[cmd, "--config", "run.toml", "--out", out, "--threads", "2"], dir.path());
            assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        }
    }
    for name in ["m.csv", "m_bounds.json", "amplitude.csv", "amplitude.json", "amplitude_bounds.json"] {
        let a = std::fs::read(dir.path().join("a").join(name)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name}");
    }
}

#[test]
fn verify_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "run.toml", "[verify]\ncriteria = [2]\n");
    let out = halfline(&["verify", "--config", "run.toml", "--out", "o"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("criterion  2: PASS"));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("o/verify.json")).unwrap()).unwrap();
    assert_eq!(report["schema"], 1);
    assert_eq!(report["criteria"][0]["id"], 2);
    assert!(report["criteria"][0]["checks"].as_array().unwrap().len() >= 10);
}
