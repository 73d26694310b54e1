use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cpvsoil::io::scan_file_name;
use cpvsoil::Spectrum;
use serde_json::Value;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/data")
        .join(name)
}

fn cpvsoil(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cpvsoil"))
        .args(args)
        .env_remove("CPVSOIL_DATA")
        .output()
        .unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout)
        .unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn error_kind(out: &Output) -> String {
    json(out)["error"]["kind"].as_str().unwrap().to_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn compute_flat_tau_gives_unit_spectral_ratios() {
    let out = cpvsoil(&[
        "compute",
        "--spectrum",
        p(&data("flat_300_900.csv")),
        "--tau",
        p(&data("toy_tau_flat.csv")),
        "--cell",
        "builtin:2j-toy",
    ]);
    assert!(out.status.success());
    let r = json(&out);
    assert_eq!(r["ssratio"], 1.0);
    assert_eq!(r["smratio"], 1.0);
    assert_eq!(r["sratio"], 0.8);
    assert_eq!(r["bsratio"], 0.8);
}

#[test]
fn compute_toy_matches_hand_integrals() {
    let out = cpvsoil(&[
        "compute",
        "--spectrum",
        p(&data("flat_300_900.csv")),
        "--tau",
        p(&data("toy_tau_linear.csv")),
        "--cell",
        p(&data("cell_2j_toy.toml")),
    ]);
    assert!(out.status.success());
    let r = json(&out);
    // τ = 0.5 + (λ-300)/1200 on E ≡ 1, SR ≡ 1: top 800/3, mid 550/3, clean 400/200
    let (top, mid) = (800.0 / 3.0, 550.0 / 3.0);
    let want = [
        ("sratio", mid / 200.0),
        ("bsratio", 0.75),
        ("ssratio", mid / 200.0 / 0.75),
        ("smr_cleaned", 1.0),
        ("smratio", (top / mid) / 2.0),
        ("ast_MJ", 0.75),
        ("ast_top", 2.0 / 3.0),
        ("ast_mid", 11.0 / 12.0),
    ];
    for (k, v) in want {
        assert!(
            (r[k].as_f64().unwrap() - v).abs() < 1e-12,
            "{k}: {} vs {v}",
            r[k]
        );
    }
    assert_eq!(r["limiting_soiled"], "mid");
}

#[test]
fn compute_missing_file_is_input_error() {
    let out = cpvsoil(&[
        "compute",
        "--spectrum",
        "no/such.csv",
        "--tau",
        p(&data("toy_tau_flat.csv")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_kind(&out), "FileNotFound");
}

#[test]
fn compute_out_of_band_tau_is_computation_error() {
    // valid files, but τ stops at 900 nm while the 3J cell needs 1810 nm
    let out = cpvsoil(&[
        "compute",
        "--spectrum",
        p(&data("astm_g173_direct.csv")),
        "--tau",
        p(&data("toy_tau_flat.csv")),
    ]);
    assert_eq!(
        out.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    assert!(json(&out)["error"]["message"].is_string());
}

#[test]
fn unknown_builtin_cell_is_usage_error() {
    let out = cpvsoil(&[
        "compute",
        "--spectrum",
        p(&data("flat_300_900.csv")),
        "--tau",
        p(&data("toy_tau_flat.csv")),
        "--cell",
        "builtin:5j",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_kind(&out), "Usage");
}

#[test]
fn bad_flag_is_usage_error() {
    let out = cpvsoil(&[
        "campaign",
        "--aggregation",
        "hourly",
        "--data",
        ".",
        "--out",
        "x",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_kind(&out), "Usage");
}

#[test]
fn version_prints_reference_hash() {
    let out = cpvsoil(&["--version"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains(&cpvsoil::reference::provenance_hash()));
}

#[test]
fn campaign_on_empty_dir_reports_no_weeks() {
    let tmp = tempfile::tempdir().unwrap();
    let out = cpvsoil(&[
        "campaign",
        "--data",
        p(tmp.path()),
        "--out",
        p(&tmp.path().join("res")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_kind(&out), "NoWeeksFound");
    assert!(!tmp.path().join("res").exists());
}

#[test]
fn synth_with_zero_weeks_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = tmp.path().join("s.toml");
    fs::write(
        &scenario,
        "weeks = 0\ndeposition_per_week = 0.01\nseed = 1\n",
    )
    .unwrap();
    let out = cpvsoil(&[
        "synth",
        "--scenario",
        p(&scenario),
        "--out",
        p(&tmp.path().join("d")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_kind(&out), "EmptyScenario");
    assert!(!tmp.path().join("d").exists());
}

fn small_scenario(dir: &Path) -> PathBuf {
    let path = dir.join("s.toml");
    fs::write(
        &path,
        "weeks = 4\ndeposition_per_week = 0.02\nseed = 7\ncloudy_probability = 0.0\n",
    )
    .unwrap();
    path
}

#[test]
fn seed_changes_noise_only() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = small_scenario(tmp.path());
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(
        cpvsoil(&["synth", "--scenario", p(&scenario), "--out", p(&a)])
            .status
            .success()
    );
    assert!(cpvsoil(&[
        "synth",
        "--scenario",
        p(&scenario),
        "--out",
        p(&b),
        "--seed",
        "8"
    ])
    .status
    .success());
    let scan = scan_file_name(2, "soiled", 1);
    assert_ne!(
        fs::read(a.join(&scan)).unwrap(),
        fs::read(b.join(&scan)).unwrap()
    );
    assert_eq!(
        fs::read(a.join("weeks.csv")).unwrap(),
        fs::read(b.join("weeks.csv")).unwrap()
    );

    // same deposition trajectory: mean AST_MJ per week agrees to noise level
    let ast = |dir: &Path| -> Vec<f64> {
        let res = dir.join("res");
        assert!(cpvsoil(&["campaign", "--data", p(dir), "--out", p(&res)])
            .status
            .success());
        let v: Value =
            serde_json::from_slice(&fs::read(res.join("campaign.json")).unwrap()).unwrap();
        v["weekly"]
            .as_array()
            .unwrap()
            .iter()
            .map(|w| w["report"]["ast_MJ"].as_f64().unwrap())
            .collect()
    };
    for (x, y) in ast(&a).iter().zip(ast(&b)) {
        assert!((x - y).abs() < 1e-3, "{x} vs {y}");
    }
}

#[test]
fn synth_refuses_to_replace_unrelated_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = small_scenario(tmp.path());
    let keep = tmp.path().join("keep");
    fs::create_dir(&keep).unwrap();
    fs::write(keep.join("notes.txt"), "mine").unwrap();
    let out = cpvsoil(&["synth", "--scenario", p(&scenario), "--out", p(&keep)]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_kind(&out), "OutputNotEmpty");
    assert_eq!(fs::read_to_string(keep.join("notes.txt")).unwrap(), "mine");
}

#[test]
fn campaign_lists_spread_rejection_and_writes_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let scenario = small_scenario(tmp.path());
    let d = tmp.path().join("d");
    assert!(
        cpvsoil(&["synth", "--scenario", p(&scenario), "--out", p(&d)])
            .status
            .success()
    );

    // darken one soiled replicate of week 3 by 2%, about 0.018 in AST
    let scan = d.join(scan_file_name(3, "soiled", 2));
    let s = Spectrum::from_csv_str(&fs::read_to_string(&scan).unwrap()).unwrap();
    fs::write(&scan, s.scaled(0.98).unwrap().to_csv_string()).unwrap();

    let res = tmp.path().join("res");
    let out = Command::new(env!("CARGO_BIN_EXE_cpvsoil"))
        .args(["campaign", "--out", p(&res), "--aggregation", "noon"])
        .env("CPVSOIL_DATA", &d)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );

    let v: Value = serde_json::from_slice(&fs::read(res.join("campaign.json")).unwrap()).unwrap();
    assert_eq!(v["aggregation"], "noon");
    assert_eq!(v["summary"]["accepted_weeks"], 3);
    assert_eq!(v["weekly"][2]["rejection"]["kind"], "SpreadExceeded");

    let fits: Value = serde_json::from_slice(&fs::read(res.join("fits.json")).unwrap()).unwrap();
    for key in ["sratio", "bsratio", "ssratio", "smratio", "ast_top/ast_mid"] {
        assert!(
            fits["fits"][format!("{key}_vs_ast_MJ")].is_object(),
            "missing fit {key}"
        );
    }

    let csv = fs::read_to_string(res.join("weekly.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 5);
    assert!(lines[0].starts_with("week_id,scan_date,accepted"));
    assert!(lines[3].contains("SpreadExceeded"));
}
