use std::path::Path;
use std::process::{Command, Output};

fn gibbsmax(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gibbsmax"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn config_errors_exit_one_with_single_json_line() {
    for args in [
        vec!["estimate"],
        vec!["estimate", "--iid", "1,1.0", "--beta", "1"],
        vec!["estimate", "--iid", "4,1.0", "--beta", "-1"],
        vec!["estimate", "--iid", "4,1.0", "--beta-grid", "2:1:0.5"],
        vec!["rem-sweep", "--spins", "40", "--beta", "1"],
        vec!["bounds", "--iid", "4,1.0", "--beta", "1", "--c", "1.5"],
        vec!["estimate", "--iid", "4,1.0", "--beta", "1", "--observable", "nope"],
        vec!["frobnicate"],
    ] {
        let out = gibbsmax(&args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        let err = stderr(&out);
        assert_eq!(err.lines().count(), 1, "{args:?}: {err}");
        let v: serde_json::Value = serde_json::from_str(err.trim()).unwrap();
        assert!(v["error"].is_string());
        assert!(v["message"].is_string());
        assert!(out.stdout.is_empty());
    }
}

#[test]
fn unknown_config_field_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.json");
    std::fs::write(&path, r#"{"command":"estimate","beta_grid":[1.0],"bogus":3}"#).unwrap();
    let out = gibbsmax(&["--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn estimate_csv_has_header_comment() {
    let out = gibbsmax(&[
        "estimate", "--iid", "8,1.0", "--beta", "0", "--beta", "1", "--n", "500", "--seed", "3",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    let comment = lines.next().unwrap();
    assert!(comment.starts_with("# config_hash="));
    assert!(comment.contains("seed=3"));
    assert!(comment.contains("command=estimate"));
    assert_eq!(lines.next().unwrap(), "observable,beta,mean,se,n_samples,seed");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 2);
    // centered process: ⟨X⟩_0 is the plain average, mean zero
    let first: Vec<&str> = rows[0].split(',').collect();
    assert_eq!(first[0], "gibbs_average");
    assert!(first[2].parse::<f64>().unwrap().abs() < 4.0 * first[3].parse::<f64>().unwrap());
}

#[test]
fn csv_is_byte_identical_across_threads_and_reruns() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for (i, threads) in ["1", "4", "8", "4"].iter().enumerate() {
        let prefix = dir.path().join(format!("run{i}"));
        let out = gibbsmax(&[
            "bounds",
            "--iid",
            "8,1.0",
            "--beta-grid",
            "0.5:2:0.5",
            "--n",
            "2000",
            "--seed",
            "9",
            "--threads",
            threads,
            "--out",
            prefix.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        outputs.push(std::fs::read(prefix.with_extension("csv")).unwrap());
    }
    assert!(outputs.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn json_output_carries_hash_and_rows() {
    let out = gibbsmax(&[
        "estimate",
        "--iid",
        "4,2.0",
        "--beta",
        "1",
        "--observable",
        "kl_to_uniform",
        "--observable",
        "renyi:0.5",
        "--n",
        "300",
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["command"], "estimate");
    assert_eq!(v["config_hash"].as_str().unwrap().len(), 64);
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r["mean"].as_f64().unwrap() >= 0.0));
}

#[test]
fn rem_fixture_all_rows_hold_and_plot_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("rem");
    let out = gibbsmax(&[
        "rem-sweep",
        "--spins",
        "10",
        "--beta-grid",
        "0:4:0.25",
        "--n",
        "2000",
        "--seed",
        "42",
        "--out",
        prefix.to_str().unwrap(),
        "--plot",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let csv = read(&prefix.with_extension("csv"));
    let mut lines = csv.lines().skip(1);
    assert_eq!(
        lines.next().unwrap(),
        "beta,p_hat,p_se,q_lower,q_upper_min,q_upper_cap,limit,sandwich_verdict"
    );
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 17);
    assert!(rows.iter().all(|r| r[7] == "holds"));
    assert_eq!(rows[0][1].parse::<f64>().unwrap(), std::f64::consts::LN_2);
    assert_eq!(rows[0][2].parse::<f64>().unwrap(), 0.0);

    let svg = read(&prefix.with_extension("svg"));
    assert!(svg.starts_with("<svg"));
    assert!(svg.trim_end().ends_with("</svg>"));
}

#[test]
fn plot_without_output_is_rejected() {
    let out = gibbsmax(&["rem-sweep", "--spins", "4", "--beta", "1", "--plot"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn oracle_check_passes_on_default_fixtures() {
    let out = gibbsmax(&["oracle-check", "--n", "20000", "--seed", "5"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
}

#[test]
fn config_file_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.json");
    std::fs::write(
        &path,
        r#"{"command":"estimate","ensemble":{"labels":["a","b"],"covariance":[[1.0,0.5],[0.5,1.0]]},"beta_grid":[1.0],"n_samples":100,"seed":1}"#,
    )
    .unwrap();
    let a = gibbsmax(&["--config", path.to_str().unwrap()]);
    let b = gibbsmax(&["--config", path.to_str().unwrap(), "--seed", "2"]);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(b.status.code(), Some(0));
    let (a, b) = (
        String::from_utf8(a.stdout).unwrap(),
        String::from_utf8(b.stdout).unwrap(),
    );
    assert!(a.contains("seed=1"));
    assert!(b.contains("seed=2"));
    assert_ne!(a.lines().next(), b.lines().next());
}
