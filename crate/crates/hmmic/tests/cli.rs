use std::path::Path;
use std::process::{Command, Output};

fn hmmic(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hmmic"))
        .args(args)
        .env("HMMIC_WORKERS", "2")
        .output()
        .unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn lines(p: &Path) -> Vec<String> {
    std::fs::read_to_string(p)
        .unwrap()
        .lines()
        .map(String::from)
        .collect()
}

#[test]
fn simulate_writes_header_plus_n_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d.csv");
    let r = hmmic(&[
        "simulate",
        "--model",
        "sv",
        "--n",
        "100",
        "--seed",
        "1",
        "--out",
        s(&out),
    ]);
    assert!(r.status.success());
    let rows = lines(&out);
    assert_eq!(rows.len(), 101);
    assert_eq!(rows[0], "t,x,y");
    assert_eq!(rows[1].split(',').next(), Some("0"));
}

#[test]
fn compare_writes_one_row_per_model() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    assert!(hmmic(&[
        "simulate",
        "--model",
        "svj",
        "--n",
        "150",
        "--out",
        s(&data)
    ])
    .status
    .success());
    let r = hmmic(&[
        "compare",
        "--data",
        s(&data),
        "--models",
        "sv,svj",
        "--N",
        "32",
    ]);
    assert!(r.status.success());
    let text = String::from_utf8(r.stdout).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "model,d,n,loglik,aic,bic,log_evidence");
    assert_eq!(rows.len(), 3);
    assert!(rows[1].starts_with("sv,2,150,"));
    assert!(rows[2].starts_with("svj,4,150,"));
}

#[test]
fn usage_and_configuration_errors_exit_with_two() {
    let r = hmmic(&["simulate", "--bogus"]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("Usage"));

    assert_eq!(hmmic(&["simulate", "--model", "sv"]).status.code(), Some(2));
    assert_eq!(
        hmmic(&["simulate", "--model", "garch", "--n", "5"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        hmmic(&["simulate", "--model", "sv", "--n", "5", "--phi", "1.5"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        hmmic(&["fit", "--model", "sv", "--data", "/nonexistent/d.csv"])
            .status
            .code(),
        Some(2)
    );

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "model = sv\ncolour = red\n").unwrap();
    let r = hmmic(&["simulate", "--config", s(&cfg), "--n", "5"]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("line 2"));
}

#[test]
fn numerical_failure_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    std::fs::write(&data, "y\n0.1\n1e200\n0.3\n").unwrap();
    let r = hmmic(&["fit", "--model", "lg", "--data", s(&data), "--N", "16"]);
    assert_eq!(
        r.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&r.stderr)
    );
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    let out = dir.path().join("d.csv");
    std::fs::write(
        &cfg,
        format!("model = lg\nn = 20\nseed = 3\nout = {}\n", s(&out)),
    )
    .unwrap();
    assert!(hmmic(&["simulate", "--config", s(&cfg), "--n", "10"])
        .status
        .success());
    assert_eq!(lines(&out).len(), 11);
}

#[test]
fn fit_writes_report_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    let trace = dir.path().join("trace.csv");
    assert!(
        hmmic(&["simulate", "--model", "sv", "--n", "120", "--out", s(&data)])
            .status
            .success()
    );
    let r = hmmic(&[
        "fit",
        "--model",
        "sv",
        "--data",
        s(&data),
        "--N",
        "32",
        "--trace",
        s(&trace),
    ]);
    assert!(r.status.success());
    let report = String::from_utf8(r.stdout).unwrap();
    for key in [
        "model,sv", "n,120", "phi,", "sigma_x,", "loglik,", "aic,", "bic,",
    ] {
        assert!(report.lines().any(|l| l.starts_with(key)), "missing {key}");
    }
    let rows = lines(&trace);
    assert_eq!(rows[0], "k,phi,sigma_x");
    assert_eq!(rows.len(), 121);
}

#[test]
fn oracle_reports_exact_quantities() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("lg.csv");
    assert!(
        hmmic(&["simulate", "--model", "lg", "--n", "300", "--out", s(&data)])
            .status
            .success()
    );
    let r = hmmic(&["oracle", "--data", s(&data), "--mle"]);
    assert!(r.status.success());
    let text = String::from_utf8(r.stdout).unwrap();
    let value = |key: &str| -> String {
        text.lines()
            .find_map(|l| l.strip_prefix(&format!("{key},")))
            .unwrap()
            .to_string()
    };
    assert_eq!(value("mle_converged"), "true");
    let at_truth: f64 = value("loglik").parse().unwrap();
    let at_mle: f64 = value("mle_loglik").parse().unwrap();
    assert!(at_mle >= at_truth);
}

#[test]
fn replication_study_resumes_to_identical_output() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let base = [
        "replicate",
        "--scenario",
        "2",
        "--n",
        "150,200",
        "--N",
        "24",
        "--seed",
        "9",
    ];
    let run = |out: &Path, r: &str| {
        let mut args = base.to_vec();
        args.extend(["--r", r, "--out-dir", s(out)]);
        let o = hmmic(&args);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        o.stdout
    };
    run(&a, "2");
    // An interrupted append leaves a partial final line.
    let records = a.join("records.csv");
    let mut text = std::fs::read_to_string(&records).unwrap();
    text.push_str("2,2,150,123");
    std::fs::write(&records, text).unwrap();
    let resumed = run(&a, "3");
    let fresh = run(&b, "3");
    assert_eq!(resumed, fresh);
    for f in ["records.csv", "fractions.csv", "run.csv"] {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
    let rows = lines(&b.join("records.csv"));
    assert_eq!(rows.len(), 1 + 3 * 2);
    let reps: Vec<&str> = rows[1..]
        .iter()
        .map(|r| r.split(',').nth(1).unwrap())
        .collect();
    assert_eq!(reps, ["0", "0", "1", "1", "2", "2"]);

    // Different settings in the same directory are refused.
    let o = hmmic(&[
        "replicate",
        "--scenario",
        "1",
        "--n",
        "150,200",
        "--N",
        "24",
        "--r",
        "1",
        "--out-dir",
        s(&a),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn fraction_columns_sum_to_replications() {
    let dir = tempfile::tempdir().unwrap();
    let o = hmmic(&[
        "replicate",
        "--scenario",
        "1",
        "--n",
        "150,250",
        "--N",
        "24",
        "--r",
        "4",
        "--out-dir",
        s(dir.path()),
    ]);
    assert!(o.status.success());
    let rows = lines(&dir.path().join("fractions.csv"));
    assert_eq!(rows[0], "criterion,model,n,selected,successful,failures");
    for criterion in ["aic", "bic"] {
        for n in ["150", "250"] {
            let matching: Vec<Vec<&str>> = rows[1..]
                .iter()
                .map(|r| r.split(',').collect::<Vec<_>>())
                .filter(|f| f[0] == criterion && f[2] == n)
                .collect();
            assert_eq!(matching.len(), 2);
            let selected: usize = matching
                .iter()
                .map(|f| f[3].parse::<usize>().unwrap())
                .sum();
            let failures: usize = matching[0][5].parse().unwrap();
            assert_eq!(selected, 4 - failures);
        }
    }
}

#[test]
fn single_checkpoint_path_has_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let o = hmmic(&[
        "path",
        "--checkpoints",
        "200",
        "--N",
        "24",
        "--out-dir",
        s(dir.path()),
    ]);
    assert!(o.status.success());
    let rows = lines(&dir.path().join("path.csv"));
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0], "n,aic_diff,bic_diff");
    assert!(rows[1].starts_with("200,"));
    let script = std::fs::read_to_string(dir.path().join("path.gp")).unwrap();
    assert!(script.contains("path.csv"));
}
