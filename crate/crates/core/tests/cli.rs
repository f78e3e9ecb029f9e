use std::path::Path;
use std::process::{Command, Output};

fn gradpower(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gradpower")).args(args).env_remove("GRADPOWER_THREADS").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

/// Data rows of a CSV document (comment lines dropped, header kept first).
fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines().filter(|l| !l.starts_with('#')).map(|l| l.split(',').map(str::to_string).collect()).collect()
}

#[test]
fn stat_worked_example() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "x.txt", "# n = 10, mean 2\n1\n3\n2\n2\n0.5\n3.5\n1.5\n2.5\n2\n2\n");
    let o = gradpower(&["stat", "--model", "gamma", "--fixed", "k=1", "--theta0", "1", "--data", &data]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["theta_hat"], 0.5);
    assert!((v["statistics"]["lr"].as_f64().unwrap() - 6.1371).abs() < 1e-4);
    assert_eq!(v["statistics"]["wald"], 10.0);
    assert_eq!(v["statistics"]["score"], 10.0);
    assert_eq!(v["statistics"]["gradient"], 5.0);
    assert_eq!(v["config"]["model"], "gamma");
    assert_eq!(v["config"]["fixed"]["k"], 1.0);

    let o = gradpower(&["stat", "--model", "gamma", "--fixed", "k=1", "--theta0", "1", "--data", &data, "--format", "csv"]);
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows[0], ["test", "statistic", "p_value"]);
    assert_eq!(rows[4][..2], ["gradient".to_string(), "5.0".to_string()]);
}

#[test]
fn power_size_row() {
    let o = gradpower(&["power", "--model", "gamma", "--fixed", "k=2", "--theta0", "1", "--eps", "0", "--n", "50", "--alpha", "0.05"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("# alpha=0.05") && text.contains("# n=50") && text.contains("# source=consistent-chain"));
    let rows = csv_rows(&text);
    assert_eq!(rows[0], ["eps", "lambda", "pi_lr", "pi_wald", "pi_score", "pi_gradient"]);
    assert_eq!(rows.len(), 2);
    for v in &rows[1][2..] {
        assert!((v.parse::<f64>().unwrap() - 0.05).abs() < 1e-12);
    }
}

#[test]
fn power_csv_round_trips() {
    let o = gradpower(&["power", "--model", "tev", "--theta0", "1", "--eps", ":", "--n", "40", "--alpha", "0.05", "--source", "table"]);
    assert!(o.status.success());
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 22);
    for row in &rows[1..] {
        for field in row {
            let v: f64 = field.parse().unwrap();
            assert_eq!(format!("{v:?}"), *field);
        }
    }
    assert_eq!(rows[4][0], "0.3");
}

#[test]
fn order_gamma_example() {
    let o = gradpower(&["order", "--model", "gamma", "--fixed", "k=2", "--theta0", "1", "--alpha", "0.05", "--direction", "above"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["ordering"], "gradient > lr > wald = score (uniform in x)");
    assert_eq!(v["config"]["direction"], "above");
    assert_eq!(v["per_eps"].as_array().unwrap().len(), 4);
}

#[test]
fn expand_from_tensor_file() {
    let dir = tempfile::tempdir().unwrap();
    let file = write(
        dir.path(),
        "t.json",
        r#"{"p": 2, "q": 1, "K": [[1, 0], [0, 1]], "k3": [[[0, 0], [0, 0]], [[0, 0], [0, 1]]], "k21": [[[0, 0], [0, 0]], [[0, 0], [0, 0]]]}"#,
    );
    let o = gradpower(&["expand", "--tensors", &file, "--eps", "1", "--n", "25", "--x", "0.5:4:0.5"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 9);
    let header = &rows[0];
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    let first = &rows[1];
    assert_eq!(first[col("lambda")].parse::<f64>().unwrap(), 0.5);
    assert!((first[col("a3")].parse::<f64>().unwrap() - 1.0 / 12.0).abs() < 1e-15);
    assert!(first[col("mean_literal")].parse::<f64>().is_ok() && first[col("mean_mixture")].parse::<f64>().is_ok());

    let bad = write(dir.path(), "bad.json", r#"{"p": 1, "q": 0, "K": [[1]], "k3": [[[0]]]}"#);
    let o = gradpower(&["expand", "--tensors", &bad, "--eps", "1", "--n", "25", "--x", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn simulate_output_is_byte_identical() {
    let args = [
        "simulate", "--model", "gamma", "--fixed", "k=2", "--theta0", "1", "--eps", "0.5", "--n", "30", "--reps", "3000",
        "--alpha", "0.05", "--seed", "17", "--compare-sources",
    ];
    let a = gradpower(&args);
    let b = gradpower(&args);
    assert!(a.status.success(), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let mut threaded = args.to_vec();
    threaded.extend(["--threads", "3"]);
    assert_eq!(gradpower(&threaded).stdout, a.stdout);
    let env = Command::new(env!("CARGO_BIN_EXE_gradpower")).args(args).env("GRADPOWER_THREADS", "2").output().unwrap();
    assert_eq!(env.stdout, a.stdout);
    assert!(stderr(&a).contains("wall time"));
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["config"]["seed"], 17);
    assert!(v["source_adjudication"]["statement"].as_str().unwrap().contains("consistent-chain"));
}

#[test]
fn output_file_written_only_on_success() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.csv");
    let out_s = out.to_str().unwrap();
    let o = gradpower(&["power", "--model", "gamma", "--fixed", "k=2", "--theta0", "1", "--eps", "0:1:0.5", "--n", "50", "--alpha", "0.05", "--output", out_s]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    assert_eq!(csv_rows(&std::fs::read_to_string(&out).unwrap()).len(), 4);
    std::fs::remove_file(&out).unwrap();

    let o = gradpower(&["power", "--model", "gamma", "--theta0", "1", "--n", "50", "--output", out_s]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!out.exists());
    let o = gradpower(&["power", "--model", "gamma", "--fixed", "k=2", "--theta0", "1", "--eps", "-40", "--n", "50", "--alpha", "0.05", "--output", out_s]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn exit_codes() {
    let o = gradpower(&["power", "--model", "gamma", "--theta0", "1", "--eps", "0", "--n", "50"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--alpha"));
    let o = gradpower(&["stat", "--model", "gamma", "--unknown-flag", "3"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--unknown-flag"));
    let o = gradpower(&["power", "--model", "gamma", "--fixed", "k=2", "--theta0", "1", "--eps", "1:0:1", "--n", "5", "--alpha", "0.05"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--eps"));
    let o = gradpower(&["model", "info", "gamma"]);
    assert_eq!(o.status.code(), Some(2));
    let o = gradpower(&["power", "--model", "gamma", "--fixed", "k=2", "--theta0", "1", "--eps", "0", "--n", "50", "--alpha", "1.5"]);
    assert_eq!(o.status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "flat.txt", "0\n0\n0\n");
    let o = gradpower(&["stat", "--model", "laplace", "--fixed", "k=0", "--theta0", "1", "--data", &data]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let o = gradpower(&["stat", "--model", "gamma", "--fixed", "k=1", "--theta0", "1", "--data", "/nonexistent/file"]);
    assert_eq!(o.status.code(), Some(2));

    let o = Command::new(env!("CARGO_BIN_EXE_gradpower"))
        .args(["simulate", "--model", "tev", "--theta0", "1", "--eps", "0", "--n", "5", "--reps", "5", "--alpha", "0.05", "--seed", "1"])
        .env("GRADPOWER_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn help_documents_every_flag() {
    let cases: &[(&[&str], &[&str])] = &[
        (&["stat"], &["--model", "--fixed", "--theta0", "--data", "--format", "--output"]),
        (&["power"], &["--model", "--fixed", "--theta0", "--eps", "--n", "--alpha", "--source"]),
        (&["order"], &["--model", "--fixed", "--theta0", "--alpha", "--direction", "--source", "--eps-grid"]),
        (&["expand"], &["--tensors", "--eps", "--n", "--x"]),
        (&["simulate"], &["--model", "--fixed", "--theta0", "--eps", "--n", "--reps", "--alpha", "--seed", "--threads", "--compare-sources", "GRADPOWER_THREADS"]),
        (&["model", "info"], &["--fixed"]),
    ];
    for (cmd, flags) in cases {
        let mut args = cmd.to_vec();
        args.push("--help");
        let o = gradpower(&args);
        assert_eq!(o.status.code(), Some(0));
        let text = stdout(&o);
        for f in *flags {
            assert!(text.contains(f), "{cmd:?} help lacks {f}");
        }
    }
}

#[test]
fn model_catalog_commands() {
    let o = gradpower(&["model", "list", "--format", "csv"]);
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 10);
    let o = gradpower(&["model", "info", "power", "--fixed", "phi=2"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["model"]["support"], "(0, 2)");
    assert_eq!(v["model"]["natural"], true);
    assert_eq!(v["model"]["fixed"]["phi"], 2.0);
}
