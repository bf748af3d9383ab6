use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use superres::table::SweepTable;

fn superres(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_superres"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json_without_timing(text: &str) -> serde_json::Value {
    let mut v: serde_json::Value = serde_json::from_str(text).unwrap();
    v.as_object_mut().unwrap().remove("timing");
    v
}

#[test]
fn exit_codes() {
    let ok = superres(&["qfim", "--s", "1", "--q", "0.5"]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    assert_eq!(superres(&["qfim", "--s", "1"]).status.code(), Some(2));
    assert_eq!(superres(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(superres(&["sweep", "--s", "0.1", "--q", ""]).status.code(), Some(2));
    assert_eq!(superres(&["qfim", "--s", "1", "--q", "1.5"]).status.code(), Some(2));
    assert_eq!(
        superres(&["qfim", "--s", "1", "--q", "0.5", "--psf", "/nonexistent/psf.txt"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        superres(&["optimize", "--s", "0.5", "--q", "0.5", "--objective", "bogus"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn oracle_check_passes_for_gaussian() {
    let o = superres(&[
        "qfim",
        "--s",
        "0.2,1",
        "--q",
        "0.3",
        "--check-oracle",
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json_without_timing(&stdout(&o));
    assert_eq!(v["results"].as_array().unwrap().len(), 2);
    assert_eq!(v["results"][0]["matrices"].as_array().unwrap().len(), 3);
}

#[test]
fn sweep_csv_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let o = superres(&[
        "sweep",
        "--s-log",
        "0.01:1:7",
        "--q",
        "0.5,0.2",
        "--measure",
        "direct,hg3",
        "-o",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    let table = SweepTable::read_csv(text.as_bytes()).unwrap();
    assert_eq!(table.rows.len(), 14);
    assert_eq!(table.columns.len(), 12);
    assert_eq!(table.to_csv_string().unwrap(), text);
    let hs = table.column("Hs_opt").unwrap();
    assert!(table.rows[..7].iter().all(|r| (r[hs] - 0.25).abs() < 1e-12));

    let json = superres(&[
        "sweep",
        "--s-log",
        "0.01:1:7",
        "--q",
        "0.5,0.2",
        "--measure",
        "direct,hg3",
        "--format",
        "json",
    ]);
    let v = json_without_timing(&stdout(&json));
    let back: SweepTable = serde_json::from_value(v["results"].clone()).unwrap();
    assert_eq!(back, table);
}

#[test]
fn config_file_flags_can_be_overridden() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    fs::write(&conf, "# small sweep\nq 0.5,0.3\ns 0.1,0.2\nformat json\n").unwrap();
    let c = conf.to_str().unwrap();
    let o = superres(&["sweep", "--config", c, "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let table = SweepTable::read_csv(o.stdout.as_slice()).unwrap();
    assert_eq!(table.rows.len(), 4);
    fs::write(&conf, "q 0.5\nconfig other.conf\n").unwrap();
    assert_eq!(superres(&["sweep", "--config", c]).status.code(), Some(2));
}

#[test]
fn recipes_parse() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../recipes");
    for name in ["fig1.conf", "fig2.conf", "fig3.conf"] {
        let args =
            superres::config::expand_config(vec!["--config".into(), root.join(name).to_str().unwrap().into()]).unwrap();
        assert!(args.iter().any(|a| a == "--q"), "{name}");
    }
}

#[test]
fn sampled_psf_is_renormalized() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("psf.txt");
    let mut text = String::from("# x amplitude\n");
    for i in 0..=2000 {
        let x = -10.0 + 0.01 * i as f64;
        text.push_str(&format!("{x} {}\n", 3.0 * (-x * x / 4.0f64).exp()));
    }
    fs::write(&path, text).unwrap();
    let o = superres(&[
        "qfim",
        "--s",
        "1",
        "--q",
        "0.5",
        "--format",
        "json",
        "--psf",
        path.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("rescaled"));
    let v = json_without_timing(&stdout(&o));
    let hs = v["results"][0]["precisions"]["Hs"].as_f64().unwrap();
    assert!((hs - 0.25).abs() < 1e-6, "{hs}");
}

#[test]
fn complex_psf_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("psf.txt");
    let mut text = String::new();
    for i in 0..=1000 {
        let x = -10.0 + 0.02 * i as f64;
        let g = (-x * x / 4.0f64).exp();
        text.push_str(&format!("{x},{g},{}\n", 0.5 * x * g));
    }
    fs::write(&path, text).unwrap();
    let o = superres(&["qfim", "--s", "1", "--q", "0.5", "--psf", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("not real"));
}

#[test]
fn optimize_is_reproducible_and_exports() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("design.txt");
    let args = [
        "optimize",
        "--s",
        "0.5",
        "--q",
        "0.5",
        "--modes",
        "3",
        "--restarts",
        "4",
        "--seed",
        "9",
    ];
    let a = superres(&[&args[..], &["--export", m.to_str().unwrap()]].concat());
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    let b = superres(&args);
    assert_eq!(json_without_timing(&stdout(&a)), json_without_timing(&stdout(&b)));
    let exported = fs::read_to_string(&m).unwrap();
    assert!(exported.starts_with("# bucket: true\nx opt0 opt1 opt2\n"));

    let achieved = json_without_timing(&stdout(&a))["results"]["objective"]
        .as_f64()
        .unwrap();
    let sweep = superres(&["sweep", "--s", "0.5", "--q", "0.5", "--measure", m.to_str().unwrap()]);
    assert_eq!(
        sweep.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&sweep.stderr)
    );
    let table = SweepTable::read_csv(sweep.stdout.as_slice()).unwrap();
    let hs = table.rows[0][table.column("Hs_design").unwrap()];
    assert!((hs - achieved).abs() < 1e-6 * achieved, "{hs} vs {achieved}");
}

#[test]
fn simulate_reports_ratios() {
    let o = superres(&[
        "simulate", "--s", "1", "--q", "0.5", "--n", "10000", "--trials", "100", "--free", "s", "--seed", "3",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json_without_timing(&stdout(&o));
    assert_eq!(v["results"]["trials"].as_u64(), Some(100));
    let again = superres(&[
        "simulate", "--s", "1", "--q", "0.5", "--n", "10000", "--trials", "100", "--free", "s", "--seed", "3",
    ]);
    assert_eq!(v, json_without_timing(&stdout(&again)));
    assert_eq!(
        superres(&["simulate", "--s", "1", "--q", "0.5", "--n", "100"])
            .status
            .code(),
        Some(2)
    );
}
