use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn lorenz(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lorenz")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn ok(args: &[&str]) -> String {
    let o = lorenz(args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    stdout(&o)
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

#[test]
fn index_two_point_family() {
    let v: Value = serde_json::from_str(&ok(&["index", "mix(0.25*atom(0),0.75*atom(1))"])).unwrap();
    for key in
        ["gini_mean_difference", "gini_dorfman", "gini_lorenz", "hoover_mean_deviation", "hoover_cdf", "hoover_max"]
    {
        assert!(close(v[key].as_f64().unwrap(), 0.25, 1e-12), "{key}");
    }
    assert_eq!(v["exact"], Value::Bool(true));
}

#[test]
fn index_of_an_atom_is_zero() {
    let v: Value = serde_json::from_str(&ok(&["index", "atom(7)"])).unwrap();
    assert_eq!(v["gini_lorenz"].as_f64(), Some(0.0));
    assert_eq!(v["hoover_max"].as_f64(), Some(0.0));
    assert_eq!(v["mean"].as_f64(), Some(7.0));
}

#[test]
fn index_from_sample_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sample.csv");
    fs::write(&path, "# wealth\n0\n0\n1\n3\n").unwrap();
    let spec = format!("file:{}", path.display());
    let v: Value = serde_json::from_str(&ok(&["index", &spec])).unwrap();
    assert!(close(v["hoover_cdf"].as_f64().unwrap(), 0.5, 1e-12));
    assert!(close(v["gini_mean_difference"].as_f64().unwrap(), 0.625, 1e-12));
}

#[test]
fn index_rejects_bad_input() {
    let o = lorenz(&["index", "mix(0.5*atom(0),0.4*atom(1))"]);
    assert_eq!(o.status.code(), Some(1));
    let o = lorenz(&["index", "atom(1) junk"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("position 8"));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    fs::write(&path, "1\n-2\n").unwrap();
    let o = lorenz(&["index", &format!("file:{}", path.display())]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

#[test]
fn zero_mean_exits_two() {
    let o = lorenz(&["index", "atom(0)"]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn lorenz_reproduces_the_atom_plus_uniform_grid() {
    let out = ok(&["lorenz", "mix(0.5*uniform(0,1),0.5*atom(0.5))", "--res", "4"]);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "p\tL\tLambda");
    assert_eq!(lines.len(), 6);
    assert_eq!(lines[2], "0.25\t0.125\t0.625");
}

#[test]
fn lorenz_of_an_atom() {
    let out = ok(&["lorenz", "atom(1)", "--res", "2"]);
    let rows: Vec<Vec<f64>> =
        out.lines().skip(1).map(|l| l.split('\t').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 3);
    assert_eq!(&rows[1], &[0.5, 0.5, 1.0]);
    assert_eq!(&rows[2], &[1.0, 1.0, 1.0]);
    assert_eq!(&rows[0][..2], &[0.0, 0.0]);
}

#[test]
fn lorenz_from_sample_file_and_kendall_block() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.csv");
    fs::write(&path, "1\n1\n2\n").unwrap();
    let out = ok(&["lorenz", &format!("file:{}", path.display()), "--res", "3", "--kendall"]);
    let (curve, kendall) = out.split_once("\n\n").unwrap();
    let row: Vec<f64> = curve.lines().nth(2).unwrap().split('\t').map(|x| x.parse().unwrap()).collect();
    assert!(close(row[0], 1.0 / 3.0, 1e-11) && close(row[1], 0.25, 1e-11));
    assert!(kendall.starts_with("F\tshare\n"));
    assert!(kendall.lines().any(|l| l == "0.666666666667\t0.5"));
}

#[test]
fn lorenz_rejects_small_resolution() {
    assert_eq!(lorenz(&["lorenz", "atom(1)", "--res", "1"]).status.code(), Some(1));
}

#[test]
fn w1_examples() {
    assert_eq!(ok(&["w1", "atom(1)", "atom(4)"]), "3\n");
    assert_eq!(ok(&["w1", "mix(0.5*atom(0),0.5*atom(1))", "atom(0.5)"]), "0.5\n");
    assert_eq!(ok(&["w1", "gamma(2,1.5)", "gamma(2,1.5)"]), "0\n");
    let v: Value = serde_json::from_str(&ok(&["w1", "exp(1)", "uniform(0,2)", "--json"])).unwrap();
    assert!(close(v["quantile_route"].as_f64().unwrap(), v["cdf_route"].as_f64().unwrap(), 1e-8));
    let verbose = ok(&["w1", "atom(1)", "atom(4)", "--verbose"]);
    assert!(verbose.contains("cdf_route\t3"));
}

#[test]
fn converge_counterexamples() {
    let out = ok(&["converge", "counterexample2", "--steps", "50"]);
    assert_eq!(out.lines().last(), Some("verdict: weak_only"));
    let v: Value = serde_json::from_str(&ok(&["converge", "counterexample2", "--steps", "50", "--json"])).unwrap();
    let last = &v["steps"][49];
    assert!(close(last["gini"].as_f64().unwrap(), 5.0 / 6.0, 2e-3));
    assert!(close(last["hoover"].as_f64().unwrap(), 2.0 / 3.0, 2e-3));
    let out = ok(&["converge", "counterexample1", "--steps", "50"]);
    assert_eq!(out.lines().last(), Some("verdict: weak_only"));
}

#[test]
fn converge_sampling_experiment_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("exp.json");
    fs::write(
        &spec,
        r#"{"scheme":"sampling","source":"uniform(0,1)","seed":4,"schedule":{"n":[100,1000,3000,10000]}}"#,
    )
    .unwrap();
    let out_base = dir.path().join("report");
    let out = ok(&["converge", spec.to_str().unwrap(), "--out", out_base.to_str().unwrap()]);
    assert_eq!(out, "verdict: w1_convergent\n");
    let report: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["verdict"], "w1_convergent");
    let table = fs::read_to_string(dir.path().join("report.tsv")).unwrap();
    assert_eq!(table.lines().count(), 5);
}

#[test]
fn converge_rejects_unknown_targets() {
    assert_eq!(lorenz(&["converge", "counterexample9"]).status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("exp.json");
    fs::write(&spec, r#"{"scheme":"bootstrap","source":"atom(1)"}"#).unwrap();
    assert_eq!(lorenz(&["converge", spec.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn extremal_examples() {
    assert_eq!(ok(&["extremal", "0.5"]), "[0.5, 0.75)\n");
    let out = ok(&["extremal", "0.5", "--alpha", "0.5", "--mean", "1"]);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[1], "mix(0.5*atom(0),0.5*atom(2))");
    assert_eq!(lines[2], "G\t0.5");
    assert_eq!(lines[3], "H\t0.5");
    assert_eq!(lorenz(&["extremal", "1.5"]).status.code(), Some(1));
    assert_eq!(lorenz(&["extremal", "-0.2"]).status.code(), Some(1));
}

#[test]
fn outputs_are_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("exp.json");
    fs::write(&spec, r#"{"scheme":"kde","source":"exp(1)","schedule":{"n":[50,200],"h":[0.3,0.1]}}"#).unwrap();
    let args = ["converge", spec.to_str().unwrap(), "--seed", "11", "--json"];
    assert_eq!(ok(&args), ok(&args));
    let args = ["index", "mix(0.3*lognormal(0,1),0.7*atom(2))"];
    assert_eq!(ok(&args), ok(&args));
}

#[test]
fn index_smoke_on_battery_specs() {
    for spec in [
        "mix(0.5*uniform(0,1),0.5*atom(0.5))",
        "mix(0.3*atom(0),0.7*uniform(0,2))",
        "mix(0.25*atom(1),0.75*lognormal(0,0.3))",
        "mix(0.5*atom(0),0.5*gamma(2,0.5))",
        "mix(0.2*atom(0),0.3*atom(2),0.5*exp(1))",
        "lognormal(-0.125,0.5)",
    ] {
        let v: Value = serde_json::from_str(&ok(&["index", spec])).unwrap();
        assert!(v["max_cross_route_residual"].as_f64().unwrap() <= v["tolerance"].as_f64().unwrap(), "{spec}");
    }
}

#[test]
fn help_and_version_exit_zero() {
    let o = lorenz(&["--help"]);
    assert!(o.status.success());
    let help = stdout(&o);
    for word in ["index", "lorenz", "w1", "converge", "extremal", "--seed", "--tol", "--json", "--tsv", "--out"] {
        assert!(help.contains(word), "{word}");
    }
    assert!(lorenz(&["--version"]).status.success());
    assert_eq!(lorenz(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn lorenz_table_and_mean_reproduce_the_indices() {
    use lorenz_core::indices::{gini, hoover};
    use lorenz_core::lorenz::{reconstruct, CurveGrid};

    for spec in ["mix(0.5*uniform(0,1),0.5*atom(0.5))", "gamma(2,0.5)", "mix(0.25*atom(0),0.75*atom(1))"] {
        let report: Value = serde_json::from_str(&ok(&["index", spec])).unwrap();
        let table = ok(&["lorenz", spec, "--res", "256"]);
        let (mut p, mut l) = (Vec::new(), Vec::new());
        for line in table.lines().skip(1) {
            let cols: Vec<f64> = line.split('\t').map(|x| x.parse().unwrap()).collect();
            p.push(cols[0]);
            l.push(cols[1]);
        }
        let d = reconstruct(&CurveGrid::new(p, l).unwrap(), report["mean"].as_f64().unwrap()).unwrap();
        let g = report["gini_lorenz"].as_f64().unwrap();
        let h = report["hoover_max"].as_f64().unwrap();
        assert!(close(gini(&d).unwrap(), g, 4.0 / 256.0), "{spec}");
        assert!(close(hoover(&d).unwrap(), h, 4.0 / 256.0), "{spec}");
    }
}
