use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use toml::{Table, Value};

fn default_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.toml")
}

fn load_default() -> Table {
    std::fs::read_to_string(default_config())
        .unwrap()
        .parse()
        .unwrap()
}

fn section<'a>(t: &'a mut Table, name: &str) -> &'a mut Table {
    t.get_mut(name).and_then(Value::as_table_mut).unwrap()
}

/// The shipped config scaled down so a full verify run takes seconds.
fn quick_config() -> Table {
    let mut t = load_default();
    let v = section(&mut t, "verify");
    for (key, value) in [
        ("algebra_samples", 50),
        ("homotopy_samples", 3),
        ("derivative_samples", 5),
        ("bogovskii_pairs", 2),
        ("bogovskii_points", 3),
        ("locality_points", 10),
        ("trace_forms", 2),
    ] {
        v.insert(key.into(), Value::Integer(value));
    }
    v.insert("trace_cell".into(), Value::Float(0.1));
    v.insert("chain_links".into(), Value::Array(vec![Value::Integer(2)]));
    v.insert("chain_bc".into(), Value::Boolean(false));
    let levels: Vec<Value> = [6, 8, 12]
        .iter()
        .map(|&o| {
            let mut level = Table::new();
            for key in ["angular", "radial", "ray"] {
                level.insert(key.into(), Value::Integer(o));
            }
            Value::Table(level)
        })
        .collect();
    v.insert("bogovskii_levels".into(), Value::Array(levels));
    section(&mut t, "tolerances").insert("bogovskii".into(), Value::Float(1.0));
    let glue = section(&mut t, "glue");
    glue.insert("samples".into(), Value::Integer(40));
    glue.insert("ensemble".into(), Value::Integer(2));
    section(&mut t, "geometry").insert("samples".into(), Value::Integer(500));
    let sweep = section(&mut t, "sweep");
    sweep.insert("ensemble".into(), Value::Integer(2));
    sweep.insert(
        "kinds".into(),
        Value::Array(vec![Value::String("poincare".into())]),
    );
    t
}

fn write_config(dir: &Path, t: &Table) -> PathBuf {
    let path = dir.join("run.toml");
    std::fs::write(&path, toml::to_string(t).unwrap()).unwrap();
    path
}

fn run(command: &str, config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_starforms"))
        .args([command, "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

#[test]
fn default_config_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.txt");
    let result = run("verify", &default_config(), &out);
    let report = std::fs::read_to_string(&out).unwrap();
    assert_eq!(
        result.status.code(),
        Some(0),
        "{report}\n{}",
        String::from_utf8_lossy(&result.stderr)
    );
    assert!(report
        .lines()
        .any(|l| l.starts_with("PASS gluing.bc_N2_l1_dv_relative")));
    assert!(!report.contains("FAIL"));
}

#[test]
fn unsupported_dimension_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut t = quick_config();
    section(&mut t, "verify").insert("algebra_dims".into(), Value::Array(vec![Value::Integer(7)]));
    let result = run(
        "verify",
        &write_config(dir.path(), &t),
        &dir.path().join("r.txt"),
    );
    assert_eq!(result.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&result.stderr).contains("dimension 7"));

    let mut t = quick_config();
    section(&mut t, "moments").insert("center".into(), Value::Array(vec![Value::Float(0.0); 7]));
    let result = run(
        "moments",
        &write_config(dir.path(), &t),
        &dir.path().join("m.csv"),
    );
    assert_eq!(result.status.code(), Some(2));
}

#[test]
fn zero_tolerance_fails_and_names_the_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let mut t = quick_config();
    section(&mut t, "tolerances").insert("algebra".into(), Value::Float(0.0));
    let out = dir.path().join("report.txt");
    let result = run("verify", &write_config(dir.path(), &t), &out);
    assert_eq!(result.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(stderr.contains("algebra."), "{stderr}");
    assert!(std::fs::read_to_string(&out)
        .unwrap()
        .lines()
        .any(|l| l.starts_with("FAIL algebra.")));
}

#[test]
fn quick_verify_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.txt");
    let result = run("verify", &write_config(dir.path(), &quick_config()), &out);
    assert_eq!(
        result.status.code(),
        Some(0),
        "{}",
        std::fs::read_to_string(&out).unwrap_or_default()
    );
}

#[test]
fn parse_and_io_errors_have_their_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[verify\nseed = ").unwrap();
    assert_eq!(
        run("verify", &bad, &dir.path().join("r.txt")).status.code(),
        Some(2)
    );

    let mut t = quick_config();
    section(&mut t, "moments").insert("unexpected".into(), Value::Integer(1));
    assert_eq!(
        run(
            "moments",
            &write_config(dir.path(), &t),
            &dir.path().join("m.csv")
        )
        .status
        .code(),
        Some(2)
    );

    let missing = dir.path().join("missing.toml");
    assert_eq!(
        run("verify", &missing, &dir.path().join("r.txt"))
            .status
            .code(),
        Some(3)
    );

    let unwritable = dir.path().join("no/such/dir/m.csv");
    assert_eq!(
        run("moments", &default_config(), &unwritable).status.code(),
        Some(3)
    );
}

#[test]
fn moments_csv_format() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m.csv");
    assert_eq!(
        run("moments", &default_config(), &out).status.code(),
        Some(0)
    );
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(!text.contains('\r'));
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("alpha_1,alpha_2,value"));
    assert_eq!(lines.next(), Some("0,0,1.0000000000000000e0"));
    // Degrees 0..=6 in two variables.
    assert_eq!(text.lines().count(), 1 + 28);
    for line in text.lines().skip(1) {
        let value: f64 = line.rsplit(',').next().unwrap().parse().unwrap();
        assert_eq!(round_trip(value), line.rsplit(',').next().unwrap());
    }
}

/// 17 significant digits round-trip exactly.
fn round_trip(x: f64) -> String {
    let s = format!("{x:.16e}");
    assert_eq!(s.parse::<f64>().unwrap(), x);
    s
}

#[test]
fn outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let mut t = quick_config();
    let sweep = section(&mut t, "sweep");
    sweep.insert(
        "eccentricities".into(),
        Value::Array(vec![Value::Float(1.0), Value::Float(2.0)]),
    );
    sweep.insert("degrees".into(), Value::Array(vec![Value::Integer(1)]));
    let config = write_config(dir.path(), &t);
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    assert_eq!(run("sweep", &config, &a).status.code(), Some(0));
    assert_eq!(run("sweep", &config, &b).status.code(), Some(0));
    let (a, b) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert_eq!(
        text.lines().next(),
        Some("n,ell,kind,R,rho,vol_ratio,kappa,bound,empirical,seed,ensemble")
    );
    assert_eq!(text.lines().count(), 1 + 2);
}

#[test]
fn chain_without_runs_writes_only_the_header() {
    let dir = tempfile::tempdir().unwrap();
    let mut t = quick_config();
    let chain = section(&mut t, "chain");
    for key in ["links", "degrees", "bc_links"] {
        chain.insert(key.into(), Value::Array(Vec::new()));
    }
    let out = dir.path().join("c.csv");
    assert_eq!(
        run("chain", &write_config(dir.path(), &t), &out)
            .status
            .code(),
        Some(0)
    );
    assert_eq!(
        std::fs::read_to_string(&out).unwrap(),
        "N,ell,mode,max_dv_residual,max_interface_jump,v_h1,chain_bound,C_T,C_S,C_P,seed\n"
    );
}

#[test]
fn chain_rows_follow_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let mut t = quick_config();
    let chain = section(&mut t, "chain");
    chain.insert(
        "links".into(),
        Value::Array(vec![Value::Integer(2), Value::Integer(3)]),
    );
    chain.insert("degrees".into(), Value::Array(vec![Value::Integer(1)]));
    chain.insert("bc_links".into(), Value::Array(Vec::new()));
    let out = dir.path().join("c.csv");
    let result = run("chain", &write_config(dir.path(), &t), &out);
    assert_eq!(
        result.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&result.stderr)
    );
    let text = std::fs::read_to_string(&out).unwrap();
    let rows: Vec<Vec<&str>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect())
        .collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(&rows[0][..3], ["2", "1", "no-bc"]);
    assert_eq!(&rows[1][..3], ["3", "1", "no-bc"]);
    // ℓ = 1 without boundary conditions: the bound is 2·C_T, the same for every N.
    for row in &rows {
        let bound: f64 = row[6].parse().unwrap();
        let c_t: f64 = row[7].parse().unwrap();
        assert!((bound - 2.0 * c_t).abs() <= 1e-12 * bound);
    }
    assert_eq!(rows[0][6], rows[1][6]);
}

#[test]
fn worker_count_must_be_positive() {
    let dir = tempfile::tempdir().unwrap();
    let result = Command::new(env!("CARGO_BIN_EXE_starforms"))
        .env("STARFORMS_WORKERS", "0")
        .args(["moments", "--config"])
        .arg(default_config())
        .arg("--out")
        .arg(dir.path().join("m.csv"))
        .output()
        .unwrap();
    assert_eq!(result.status.code(), Some(2));
}
