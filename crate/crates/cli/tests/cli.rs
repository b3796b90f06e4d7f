use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn skillscore(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_skillscore"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn synth(dir: &Path, name: &str, extra: &[&str]) -> PathBuf {
    let path = dir.join(name);
    let mut args = vec!["synth", "--out", s(&path)];
    args.extend_from_slice(extra);
    let o = skillscore(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    path
}

const SCORE_KEYS: [&str; 17] = [
    "n",
    "horizon_h",
    "rho",
    "gamma_h",
    "sigma_x",
    "rmse_f",
    "mae_f",
    "nmae",
    "nrmse",
    "rmse_cliper",
    "mae_cliper",
    "s_rmse_actual",
    "s_mae_actual",
    "s_rmse_potential",
    "s_mse_potential",
    "mase",
    "warnings",
];

#[test]
fn score_perfect_forecast() {
    let dir = tempfile::tempdir().unwrap();
    let mut body = String::from("time,obs,fcst\n");
    for (t, x) in [3.0, 5.0, 4.0, 6.0, 8.0, 7.0, 5.0, 6.0, 9.0, 4.0]
        .iter()
        .enumerate()
    {
        body.push_str(&format!("{t},{x},{x}\n"));
    }
    let input = write(dir.path(), "perfect.csv", &body);
    let o = skillscore(&["score", "--input", s(&input), "--format", "json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let raw = stdout(&o);
    let positions: Vec<usize> = SCORE_KEYS
        .iter()
        .map(|k| {
            raw.find(&format!("\"{k}\":"))
                .unwrap_or_else(|| panic!("missing {k}"))
        })
        .collect();
    assert!(
        positions.windows(2).all(|w| w[0] < w[1]),
        "key order: {raw}"
    );
    let v: Value = serde_json::from_str(&raw).unwrap();
    assert_eq!(v.as_object().unwrap().len(), SCORE_KEYS.len());
    assert_eq!(v["s_rmse_actual"], 1.0);
    assert_eq!(v["s_rmse_potential"], 1.0);
    assert_eq!(v["n"], 10);
}

#[test]
fn score_recovers_known_potential_skill() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(
        dir.path(),
        "data.csv",
        &[
            "--n",
            "100000",
            "--phi",
            "0.6",
            "--rho-target",
            "0.8",
            "--seed",
            "3",
        ],
    );
    let o = skillscore(&[
        "score",
        "--input",
        s(&data),
        "--fcst-cols",
        "fcst",
        "--format",
        "json",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let skill = v["s_rmse_potential"].as_f64().unwrap();
    assert!((skill - 0.25).abs() < 0.02, "{skill}");
}

#[test]
fn score_json_satisfies_link_identity() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(
        dir.path(),
        "data.csv",
        &["--n", "3000", "--seed", "11", "--members", "3"],
    );
    let o = skillscore(&[
        "score",
        "--input",
        s(&data),
        "--format",
        "json",
        "--horizon",
        "2",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let map = v.as_object().unwrap();
    assert_eq!(map.len(), 4);
    for report in map.values() {
        let rho = report["rho"].as_f64().unwrap();
        let gamma = report["gamma_h"].as_f64().unwrap();
        let s = report["s_rmse_potential"].as_f64().unwrap();
        let closed = 1.0 - ((1.0 - rho * rho) / (1.0 - gamma * gamma)).sqrt();
        assert!((s - closed).abs() <= 1e-12);
        assert_eq!(report["horizon_h"], 2);
    }
}

#[test]
fn score_text_and_csv_formats() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(dir.path(), "data.csv", &["--n", "500", "--seed", "2"]);
    let o = skillscore(&["score", "--input", s(&data)]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("potential RMSE skill"));
    assert!(text.contains(" %"));

    let out = dir.path().join("scores.csv");
    let o = skillscore(&[
        "score",
        "--input",
        s(&data),
        "--format",
        "csv",
        "--out",
        s(&out),
    ]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let table = std::fs::read_to_string(&out).unwrap();
    assert_eq!(table.lines().count(), 2);
    assert!(table.starts_with("name,n,horizon_h,rho,"));
}

#[test]
fn score_constant_observations_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(
        dir.path(),
        "c.csv",
        "obs,fcst\n2,1\n2,2\n2,3\n2,4\n2,5\n2,6\n",
    );
    let o = skillscore(&["score", "--input", s(&input)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("constant"), "{}", stderr(&o));
}

#[test]
fn score_usage_and_data_errors() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "d.csv", "obs,fcst\n1,2\n3,x\n");
    assert_eq!(skillscore(&["score"]).status.code(), Some(1));
    assert_eq!(
        skillscore(&["score", "--input", s(&input), "--normalize", "capacity:-1"])
            .status
            .code(),
        Some(1)
    );
    let o = skillscore(&["score", "--input", s(&input)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("row"), "{}", stderr(&o));
    assert_eq!(skillscore(&["--help"]).status.code(), Some(0));
}

const FOUR_POINT: &str = "time,obs,fp\n0,1,2\n1,2,2\n2,3,4\n3,4,4\n";

#[test]
fn calibrate_mse_four_points() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "four.csv", FOUR_POINT);
    let out = dir.path().join("cal.csv");
    let o = skillscore(&[
        "calibrate",
        "--input",
        s(&input),
        "--scheme",
        "mse",
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), "column,a,b,scheme,fit_n\nfp,-0.5,1,mse,4\n");
    let table = std::fs::read_to_string(&out).unwrap();
    let cal: Vec<&str> = table
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap())
        .collect();
    assert_eq!(cal, ["1.5", "1.5", "3.5", "3.5"]);
    assert!(table.starts_with("time,obs,fp,fp_cal_mse\n"));
}

#[test]
fn calibrate_json_report_and_stdout_table() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "four.csv", FOUR_POINT);
    let o = skillscore(&[
        "calibrate",
        "--input",
        s(&input),
        "--scheme",
        "variance",
        "--format",
        "json",
    ]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("time,obs,fp,fp_cal_variance\n"));
    let v: Value = serde_json::from_str(&stderr(&o)).unwrap();
    let b = v[0]["gain_b"].as_f64().unwrap();
    let a = v[0]["intercept_a"].as_f64().unwrap();
    assert!((b - 1.25f64.sqrt()).abs() < 1e-12);
    assert!((a - (2.5 - 3.0 * 1.25f64.sqrt())).abs() < 1e-12);
}

#[test]
fn calibrate_variance_identity() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "same.csv", "obs,f\n1,1\n4,4\n2,2\n8,8\n");
    let o = skillscore(&[
        "calibrate",
        "--input",
        s(&input),
        "--scheme",
        "variance",
        "--out",
        s(&dir.path().join("o.csv")),
    ]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "column,a,b,scheme,fit_n\nf,0,1,variance,4\n");
}

#[test]
fn calibrate_mae_constant_forecast_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "flat.csv", "obs,f\n1,3\n4,3\n2,3\n8,3\n");
    let o = skillscore(&["calibrate", "--input", s(&input), "--scheme", "mae"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn calibrate_unknown_scheme_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "four.csv", FOUR_POINT);
    let o = skillscore(&["calibrate", "--input", s(&input), "--scheme", "huber"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn ensemble_three_columns() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(
        dir.path(),
        "data.csv",
        &["--n", "400", "--seed", "5", "--members", "2"],
    );
    let svg = dir.path().join("front.svg");
    let o = skillscore(&["ensemble", "--input", s(&data), "--svg", s(&svg)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = stdout(&o);
    assert_eq!(csv.lines().count(), 4);
    assert_eq!(
        csv.lines().next().unwrap(),
        "name,nmae,nrmse,rho,s_rmse_actual,s_rmse_potential,on_front"
    );
    let summary = stderr(&o);
    for needle in ["front:", "min nMAE", "min nRMSE", "max potential skill"] {
        assert!(summary.contains(needle), "{summary}");
    }
    assert!(std::fs::read_to_string(&svg).unwrap().starts_with("<svg"));
}

#[test]
fn ensemble_duplicate_columns_share_the_front() {
    let dir = tempfile::tempdir().unwrap();
    let mut body = String::from("obs,a,b,c\n");
    for (t, x) in [3.0, 5.0, 4.0, 6.0, 8.0, 7.0, 5.0, 6.0, 9.0, 4.0]
        .iter()
        .enumerate()
    {
        let f = x + if t % 2 == 0 { 0.5 } else { -0.25 };
        body.push_str(&format!("{x},{f},{f},{}\n", x + 2.0));
    }
    let input = write(dir.path(), "dup.csv", &body);
    let o = skillscore(&["ensemble", "--input", s(&input)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let lines: Vec<String> = stdout(&o).lines().map(String::from).collect();
    assert_eq!(
        lines[1].replacen("a,", "", 1),
        lines[2].replacen("b,", "", 1)
    );
    assert!(lines[1].ends_with(",true"));
    assert!(lines[3].ends_with(",false"));
}

/// Members in input order, as `(nmae, nrmse, s_rmse_potential, on_front)`.
fn ensemble_rows(csv: &str) -> Vec<(f64, f64, f64, bool)> {
    csv.lines()
        .skip(1)
        .map(|l| {
            let c: Vec<&str> = l.split(',').collect();
            (
                c[1].parse().unwrap(),
                c[2].parse().unwrap(),
                c[5].parse().unwrap(),
                c[6] == "true",
            )
        })
        .collect()
}

fn argbest(rows: &[(f64, f64, f64, bool)], key: impl Fn(&(f64, f64, f64, bool)) -> f64) -> usize {
    (0..rows.len())
        .min_by(|&a, &b| key(&rows[a]).total_cmp(&key(&rows[b])))
        .unwrap()
}

#[test]
fn ensemble_500_members_best_members_on_front() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(
        dir.path(),
        "data.csv",
        &["--n", "2000", "--seed", "9", "--members", "500"],
    );
    let cols: Vec<String> = (0..500).map(|k| format!("fcst_{k}")).collect();
    let o = skillscore(&[
        "ensemble",
        "--input",
        s(&data),
        "--fcst-cols",
        &cols.join(","),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = ensemble_rows(&stdout(&o));
    assert_eq!(rows.len(), 500);
    assert!(rows[argbest(&rows, |r| r.0)].3);
    assert!(rows[argbest(&rows, |r| r.1)].3);
}

#[test]
fn ensemble_500_members_max_potential_on_front() {
    let dir = tempfile::tempdir().unwrap();
    let data = synth(
        dir.path(),
        "data.csv",
        &["--n", "2000", "--seed", "9", "--members", "500"],
    );
    let cols: Vec<String> = (0..500).map(|k| format!("fcst_{k}")).collect();
    let o = skillscore(&[
        "ensemble",
        "--input",
        s(&data),
        "--fcst-cols",
        &cols.join(","),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = ensemble_rows(&stdout(&o));
    assert!(
        rows[argbest(&rows, |r| -r.2)].3,
        "max-potential member is not on the front"
    );
}

#[test]
fn synth_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = synth(dir.path(), "a.csv", &["--n", "100", "--seed", "7"]);
    let b = synth(dir.path(), "b.csv", &["--n", "100", "--seed", "7"]);
    let c = synth(dir.path(), "c.csv", &["--n", "100", "--seed", "8"]);
    let read = |p: &Path| std::fs::read(p).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
    let text = String::from_utf8(read(&a)).unwrap();
    assert_eq!(text.lines().count(), 101);
    assert_eq!(text.lines().next().unwrap(), "time,obs,fcst");
}

#[test]
fn synth_reports_sample_autocorrelation() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("big.csv");
    let o = skillscore(&[
        "synth",
        "--n",
        "100000",
        "--phi",
        "0.9",
        "--seed",
        "1",
        "--out",
        s(&out),
    ]);
    assert!(o.status.success());
    let msg = stderr(&o);
    let gamma: f64 = msg
        .split("gamma(1) = ")
        .nth(1)
        .and_then(|r| r.split(',').next())
        .unwrap()
        .parse()
        .unwrap();
    assert!((0.88..=0.92).contains(&gamma), "{msg}");
}

#[test]
fn synth_negative_gain_warns() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("neg.csv");
    let o = skillscore(&["synth", "--gain", "-1", "--out", s(&out)]);
    assert!(o.status.success());
    assert!(stderr(&o).contains("warning"), "{}", stderr(&o));
}

#[test]
fn qc_threshold_drops_rows() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(
        dir.path(),
        "qc.csv",
        "obs,f\n0,1\n5,4\n20,18\n30,33\n12,14\n25,22\n",
    );
    let o = skillscore(&[
        "score",
        "--input",
        s(&input),
        "--qc-min-obs",
        "10",
        "--format",
        "json",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["n"], 4);
}
