use std::path::Path;
use std::process::{Command, Output};

fn dmetro(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dmetro"))
        .args(args)
        .env("RUST_LOG", "off")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn data_lines(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn space_info_lists_blocks() {
    let out = dmetro(&["space-info", "--n", "3", "--workers", "1"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("# d_D=6\r\n"));
    assert!(text.contains("\r\n"));
    assert_eq!(
        data_lines(&text),
        vec![
            "two_j,j,dim,degeneracy,offset",
            "3,1.5,4,1,0",
            "1,0.5,2,2,4"
        ]
    );
}

#[test]
fn space_info_json() {
    let out = dmetro(&[
        "space-info",
        "--n",
        "4",
        "--format",
        "json",
        "--workers",
        "1",
    ]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["result"]["d_D"], 9);
    assert_eq!(v["result"]["sectors"].as_array().unwrap().len(), 3);
    assert_eq!(v["meta"]["command"], "space-info");
}

#[test]
fn invalid_input_exits_two() {
    assert_eq!(dmetro(&["space-info", "--n", "0"]).status.code(), Some(2));
    assert_eq!(
        dmetro(&["sweep-time", "--n", "4", "--gamma", "-1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        dmetro(&["space-info", "--workers", "0"]).status.code(),
        Some(2)
    );
    let out = dmetro(&["space-info", "--n", "0"]);
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error: "));
}

#[test]
fn nonparallel_field_exits_four_unless_allowed() {
    let base = [
        "evolve",
        "--n",
        "3",
        "--phi",
        "0.1,0,0",
        "--t",
        "0.5",
        "--workers",
        "1",
    ];
    assert_eq!(dmetro(&base).status.code(), Some(4));
    let mut allowed = base.to_vec();
    allowed.push("--allow-nonparallel");
    let out = dmetro(&allowed);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["result"]["split"], false);
    assert!(v["result"]["qfim"].is_null());
}

#[test]
fn evolve_reports_state_and_bound() {
    let out = dmetro(&[
        "evolve",
        "--n",
        "4",
        "--t",
        "2",
        "--gamma",
        "0.05",
        "--method",
        "rk4",
        "--workers",
        "1",
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let r = &v["result"];
    assert!((r["trace"].as_f64().unwrap() - 1.0).abs() < 1e-10);
    assert!((r["purity"].as_f64().unwrap() - 0.33332129407314504).abs() < 1e-9);
    assert!((r["qfim"][0][0].as_f64().unwrap() - 11.7806).abs() < 1e-3);
    assert!(r["i-sim"].as_f64().unwrap() > 0.0);
    assert_eq!(v["meta"]["gamma-assumed"], false);
}

#[test]
fn outputs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let out = dmetro(&[
            "sweep-time",
            "--n",
            "6",
            "--t-grid",
            "12,0.1,20",
            "--workers",
            "2",
            "--out",
            p.to_str().unwrap(),
        ]);
        assert!(out.status.success());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn config_file_values_yield_to_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"n": 5, "gamma": 0.1, "format": "json"}"#).unwrap();
    let c = cfg.to_str().unwrap();
    let from_file: serde_json::Value =
        serde_json::from_str(&stdout(&dmetro(&["space-info", "--config", c]))).unwrap();
    assert_eq!(from_file["meta"]["config"]["n"], 5);
    assert_eq!(from_file["meta"]["config"]["gamma"], 0.1);
    assert_eq!(from_file["meta"]["gamma-assumed"], false);
    let flagged: serde_json::Value =
        serde_json::from_str(&stdout(&dmetro(&["space-info", "--config", c, "--n", "7"]))).unwrap();
    assert_eq!(flagged["meta"]["config"]["n"], 7);
    assert_eq!(flagged["result"]["d_D"], 20);

    std::fs::write(&cfg, r#"{"n": 5, "colour": "red"}"#).unwrap();
    assert_eq!(
        dmetro(&["space-info", "--config", c]).status.code(),
        Some(2)
    );
}

#[test]
fn sweep_footer_and_scan_fit_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let sweep = dmetro(&[
        "sweep-time",
        "--n",
        "6",
        "--t-grid",
        "20,0.1,20",
        "--gamma",
        "0.05",
        "--workers",
        "1",
    ]);
    let text = stdout(&sweep);
    let t_opt: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("# t_opt: "))
        .expect("footer present")
        .parse()
        .unwrap();
    assert!(t_opt > 0.1 && t_opt < 20.0);
    assert!(text.contains("# I_min: "));
    assert_eq!(data_lines(&text)[0], "t,I_sim");
    assert_eq!(data_lines(&text).len(), 21);

    let scan = dir.path().join("scan.csv");
    let out = dmetro(&[
        "scan-n",
        "--n-list",
        "4,5,6",
        "--t-grid",
        "16,0.1,20",
        "--kind",
        "markovian",
        "--scenario",
        "sim",
        "--workers",
        "2",
        "--out",
        scan.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert_eq!(
        data_lines(&std::fs::read_to_string(&scan).unwrap()).len(),
        4
    );
    let fit = dmetro(&["fit", "--input", scan.to_str().unwrap(), "--n-min", "4"]);
    assert!(fit.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&fit)).unwrap();
    let fits = v["result"].as_array().unwrap();
    assert_eq!(fits.len(), 2);
    assert!(fits.iter().all(|f| f["points"] == 3));
    assert!(fits[1]["exponent"].as_f64().unwrap() < 0.0);
}

#[test]
fn husimi_writes_axes_descriptor() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("q.csv");
    let out = dmetro(&[
        "husimi",
        "--n",
        "8",
        "--grid",
        "31,40",
        "--workers",
        "1",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let table = std::fs::read_to_string(&out_path).unwrap();
    let rows = data_lines(&table);
    assert_eq!(rows.len(), 32);
    assert_eq!(rows[0].split(',').count(), 41);
    let axes: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(Path::new(&out_path).with_extension("axes.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(axes["result"]["rows"]["count"], 31);
    assert_eq!(axes["result"]["j"], 4.0);
}

#[test]
fn verify_passes_small_systems() {
    let out = dmetro(&["verify", "--n", "3", "--workers", "1"]);
    let text = stdout(&out);
    assert!(out.status.success(), "{text}");
    assert!(text.contains("brute-force,PASS"));
    assert!(text.contains("# failed: 0"));
    assert!(!text.contains("FAIL"));
}
