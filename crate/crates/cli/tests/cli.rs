use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use gmplab_cli::manifest::{manifest_path, RunManifest};
use serde_json::Value;

fn gmplab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gmplab"))
        .args(args)
        .env_remove("GMPLAB_THREADS")
        .output()
        .unwrap()
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn vandam_exact_csv_has_one_row_per_n() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.csv");
    let o = gmplab(&["vandam", "exact", "--tau", "0", "--n", "1..4", "--csv", path_str(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,p_exact,jn_exact,jn_lb");
    assert_eq!(lines.len(), 5);
    assert!(!text.contains('\r'));
    // P(1, 0) = (1 + 1/sqrt 2)/2.
    assert!(lines[1].starts_with("1,0.853553390593,"));
    let m = RunManifest::read(&manifest_path(&out)).unwrap();
    assert!(m.verify());
    assert_eq!(m.command_line[1], "vandam");
}

#[test]
fn bound_lambda_quantum() {
    let o = gmplab(&["bound", "lambda", "--eta", "quantum"]);
    assert_eq!(o.status.code(), Some(0));
    let v = stdout_json(&o);
    let l = v["lambda_bound"].as_f64().unwrap();
    assert!((l - 0.89898).abs() < 1e-5, "{l}");
    assert_eq!(v["eta_name"], "quantum");
}

#[test]
fn bound_lambda_from_table_file() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("eta.csv");
    let mut text = String::from("eps,eta\n");
    for k in 0..=1000 {
        let e = k as f64 / 1000.0;
        text.push_str(&format!("{e},{}\n", e.sqrt() + e / 2.0));
    }
    fs::write(&table, text).unwrap();
    let spec = format!("file:{}", table.display());
    let o = gmplab(&["bound", "lambda", "--eta", &spec]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let l = stdout_json(&o)["lambda_bound"].as_f64().unwrap();
    assert!((l - 0.89898).abs() < 1e-3, "{l}");
}

#[test]
fn bound_tau_reports_solver_output() {
    let o = gmplab(&["bound", "tau", "--eta", "quantum"]);
    assert_eq!(o.status.code(), Some(0));
    let v = stdout_json(&o);
    let t = v["tau_star"].as_f64().unwrap();
    assert!((t - 0.954183).abs() < 1e-5, "{t}");
    assert!(v["grid_crosscheck"]["agrees"].as_bool().unwrap());
}

#[test]
fn chsh_at_inverse_sqrt_two_prints_twelve_digits() {
    let o = gmplab(&["chsh", "--lambda", "0.7071067811865476"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout.clone()).unwrap();
    assert!(text.contains("\"lambda\": 0.707106781187"), "{text}");
    assert!(text.contains("\"S\": 2.82842712475"));
    let v = stdout_json(&o);
    assert_eq!(v["is_ns"], true);
    assert_eq!(v["conditionals"].as_array().unwrap().len(), 4);
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let o = gmplab(&["vandam", "exact", "--bogus"]);
    assert_eq!(o.status.code(), Some(64));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    assert_eq!(gmplab(&["frobnicate"]).status.code(), Some(64));
    assert_eq!(gmplab(&["--help"]).status.code(), Some(0));
}

#[test]
fn validation_errors_exit_two() {
    assert_eq!(gmplab(&["chsh", "--lambda", "1.5"]).status.code(), Some(2));
    assert_eq!(gmplab(&["vandam", "exact", "--tau", "2", "--n", "1..3"]).status.code(), Some(2));
    assert_eq!(gmplab(&["vandam", "threshold", "--tau", "0"]).status.code(), Some(2));
    assert_eq!(gmplab(&["bound", "lambda", "--eta", "cubic"]).status.code(), Some(2));
    assert_eq!(
        gmplab(&["vandam", "mc", "--tau", "0.5", "--n", "2", "--targets", "9"]).status.code(),
        Some(2)
    );
}

#[test]
fn threshold_overflow_is_numeric_failure() {
    // Tiny stretch: no violation before the layer cap.
    let o = gmplab(&["vandam", "threshold", "--tau", "1e-6"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn threshold_at_full_stretch() {
    let o = gmplab(&["vandam", "threshold", "--tau", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout_json(&o)["n_star"], 1);
}

#[test]
fn jn_lb_header_and_rows() {
    let o = gmplab(&["jn-lb", "--tau", "0.5", "--n-range", "3..5"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,jn_lower_bound");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("3,"));
}

#[test]
fn same_seed_gives_identical_primary_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let runs: [&[&str]; 3] = [
        &["vandam", "mc", "--tau", "0.5", "--n", "3", "--trials", "2000", "--seed", "9", "--out"],
        &["gentle", "verify", "--dim", "3", "--trials", "50", "--seed", "9", "--out"],
        &["lemma35", "--trials", "200", "--seed", "9", "--out"],
    ];
    for (k, args) in runs.iter().enumerate() {
        let mut bytes = Vec::new();
        for rep in 0..2 {
            let out = dir.path().join(format!("{k}-{rep}.json"));
            let mut a = args.to_vec();
            a.push(path_str(&out));
            let o = gmplab(&a);
            assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
            bytes.push(fs::read(&out).unwrap());
        }
        assert_eq!(bytes[0], bytes[1], "{args:?}");
    }
}

#[test]
fn mc_report_echoes_seed_and_rng() {
    let o = gmplab(&["vandam", "mc", "--tau", "1", "--n", "2", "--trials", "500", "--seed", "5", "--targets", "0,3"]);
    assert_eq!(o.status.code(), Some(0));
    let v = stdout_json(&o);
    assert_eq!(v["config"]["seed"], 5);
    assert!(v["rng"].as_str().unwrap().contains("ChaCha8"));
    let t = v["targets"].as_array().unwrap();
    assert_eq!(t.len(), 2);
    assert_eq!(t[1]["index"], 3);
    assert_eq!(t[1]["frequency"], 1.0);
}

#[test]
fn params_file_supplies_missing_flags() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("p.json");
    fs::write(&p, r#"{"tau": 0.5, "n": "1..2"}"#).unwrap();
    let o = gmplab(&["vandam", "exact", "--params", path_str(&p)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.contains("1,0.926776695297,"));
}

#[test]
fn cone_state_and_effect_from_matrix_json() {
    let dir = tempfile::tempdir().unwrap();
    let state = dir.path().join("state.json");
    // Bloch vector (0, 1.2, 0): both diagonals stay at 1/2, the spectrum dips
    // to -0.1, so it lies outside the quantum set but inside at tau = 1.
    fs::write(
        &state,
        r#"{"dim": 2, "subsystem_dims": [2], "entries": [[0.5, 0], [0, -0.6], [0, 0.6], [0.5, 0]]}"#,
    )
    .unwrap();
    let member = |tau: &str| {
        let o = gmplab(&["cone", "state", "--tau", tau, "--file", path_str(&state)]);
        assert_eq!(o.status.code(), Some(0));
        stdout_json(&o)
    };
    assert_eq!(member("0")["member"], false);
    let v = member("1");
    assert_eq!(v["member"], true);
    assert!(v["margins"]["spectral"].as_f64().unwrap() > 0.0);

    let effect = dir.path().join("effect.json");
    fs::write(
        &effect,
        r#"{"dim": 2, "subsystem_dims": [], "entries": [[1, 0], [0, 0], [0, 0], [0, 0]]}"#,
    )
    .unwrap();
    let o = gmplab(&["cone", "effect", "--tau", "0", "--file", path_str(&effect)]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout_json(&o)["member"], true);

    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"dim": 2, "subsystem_dims": [2], "entries": [[1, 0]]}"#).unwrap();
    let o = gmplab(&["cone", "state", "--tau", "0", "--file", path_str(&bad)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn gentle_lemma_on_single_pair() {
    let dir = tempfile::tempdir().unwrap();
    let rho = dir.path().join("rho.json");
    let x = dir.path().join("x.json");
    fs::write(&rho, r#"{"dim": 2, "subsystem_dims": [2], "entries": [[0.5, 0], [0.5, 0], [0.5, 0], [0.5, 0]]}"#).unwrap();
    fs::write(&x, r#"{"dim": 2, "subsystem_dims": [2], "entries": [[1, 0], [0, 0], [0, 0], [0, 0]]}"#).unwrap();
    let o = gmplab(&["gentle", "lemma", "--rho", path_str(&rho), "--x", path_str(&x)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = stdout_json(&o);
    assert_eq!(v["holds"], true);
    // |+><+| against |0><0|: rho - |0><0|/2 has eigenvalues (1 +- sqrt 5)/4.
    assert!((v["lhs"].as_f64().unwrap() - 5f64.sqrt() / 2.0).abs() < 1e-11);
    assert!((v["rhs"].as_f64().unwrap() - 2f64.sqrt()).abs() < 1e-11);
}

#[test]
fn empty_range_is_rejected_but_header_only_csv_is_possible() {
    assert_eq!(gmplab(&["jn-lb", "--tau", "0.5", "--n-range", "5..2"]).status.code(), Some(64));
    assert_eq!(
        gmplab_cli::emit::csv_string(&["n", "jn_lower_bound"], &[]).unwrap(),
        "n,jn_lower_bound\n"
    );
}

#[test]
fn threads_env_var_is_validated() {
    let o = Command::new(env!("CARGO_BIN_EXE_gmplab"))
        .args(["bound", "lambda"])
        .env("GMPLAB_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = Command::new(env!("CARGO_BIN_EXE_gmplab"))
        .args(["vandam", "mc", "--tau", "0.5", "--n", "2", "--trials", "100"])
        .env("GMPLAB_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
}
