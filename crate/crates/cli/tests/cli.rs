use std::path::Path;
use std::process::{Command, Output};

fn homsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_homsim")).args(args).output().unwrap()
}

fn data_rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn hom_orthogonal_column_starts_at_one_half() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    for preset in ["builtin:barium", "builtin:calcium"] {
        let o = homsim(&["hom", "--config", preset, "--out", out, "--phi", "90"]);
        assert!(o.status.success(), "{}", stderr(&o));
        let rows = data_rows(&dir.path().join("hom_phi90.csv"));
        assert_eq!(rows[0][0], "0");
        let v: f64 = rows[0][1].parse().unwrap();
        assert!((v - 0.5).abs() <= 1e-9);
    }
}

#[test]
fn hom_emits_the_polarisation_scan_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = homsim(&["hom", "--config", "builtin:barium", "--out", out, "--phi", "0,26,47,64,90"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("polarization_scan.csv")).unwrap();
    assert!(text.starts_with("# config_hash="));
    let rows = data_rows(&dir.path().join("polarization_scan.csv"));
    let angles: Vec<&str> = rows.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(angles, ["0", "26", "47", "64", "90"]);
    for r in &rows {
        let model: f64 = r[1].parse().unwrap();
        let law: f64 = r[2].parse().unwrap();
        assert!((model - law).abs() < 1e-12);
    }
    let report = std::fs::read_to_string(dir.path().join("contrast.txt")).unwrap();
    assert!(report.contains("contrast_detected_phi0="));
    assert!(report.contains("nutation_reduction="));
    for phi in ["0", "26", "47", "64", "90"] {
        assert!(dir.path().join(format!("hom_phi{phi}_detected.csv")).exists());
    }
}

#[test]
fn every_output_carries_the_config_hash() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert!(homsim(&["correlations", "--config", "builtin:calcium", "--out", out]).status.success());
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    let hash = manifest["config_hash"].as_str().unwrap().to_string();
    assert_eq!(hash.len(), 12);
    for name in ["g1.csv", "g2.csv", "g2_detected.csv", "rates.txt"] {
        let text = std::fs::read_to_string(dir.path().join(name)).unwrap();
        assert!(text.contains(&format!("config_hash={hash}")), "{name}");
    }
    let g1 = std::fs::read_to_string(dir.path().join("g1.csv")).unwrap();
    assert!(g1.contains("tau_ns,re,im"));
}

#[test]
fn spectrum_scan_has_requested_points() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = homsim(&[
        "spectrum", "--config", "builtin:barium", "--out", out, "--scan", "red", "--from", "-300", "--to", "100",
        "--points", "41", "--counts",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = data_rows(&dir.path().join("spectrum_red.csv"));
    assert_eq!(rows.len(), 41);
    assert!(rows.iter().all(|r| r[2] == "ok" && r[1].parse::<f64>().unwrap() >= 0.0));
}

#[test]
fn simulate_then_correlate() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = homsim(&[
        "simulate", "--config", "builtin:barium", "--out", out, "--phi", "90", "--duration", "0.01", "--seed", "3",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let tags = dir.path().join("tags_phi90.htag");
    assert!(tags.exists());
    assert!(dir.path().join("tags_phi90.htag.meta.json").exists());
    let o = homsim(&["correlate", tags.to_str().unwrap(), "--out", out, "--mode", "tac", "--bin", "2", "--window", "40"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = data_rows(&dir.path().join("tags_phi90_tac.csv"));
    assert_eq!(rows.len(), 41);
    assert_eq!(rows[20][0], "0");
    let text = std::fs::read_to_string(dir.path().join("tags_phi90_tac.csv")).unwrap();
    assert!(text.contains("lag=t(I4)-t(I3)"));

    let o = homsim(&["correlate", tags.to_str().unwrap(), "--out", out, "--start", "i4"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("tags_phi90_multistop.csv")).unwrap();
    assert!(text.contains("lag=t(I3)-t(I4)"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();

    // unknown preset and bad flags: configuration errors
    let o = homsim(&["hom", "--config", "builtin:strontium", "--out", out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("strontium"));
    let o = homsim(&["hom", "--config", "builtin:barium", "--out", out, "--phi", "120"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(homsim(&["hom", "--bogus"]).status.code(), Some(2));

    // invalid field: the message names it
    let mut doc: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../core/presets/barium.json")).unwrap(),
    )
    .unwrap();
    doc["simulation"]["duration_s"] = serde_json::json!(-1.0);
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, doc.to_string()).unwrap();
    let o = homsim(&["hom", "--config", bad.to_str().unwrap(), "--out", out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("simulation.duration_s"), "{}", stderr(&o));

    // both lasers off: no unique steady state, a numeric failure
    doc["simulation"]["duration_s"] = serde_json::json!(0.6);
    doc["lasers"][0]["rabi_frequency"] = serde_json::json!(0.0);
    doc["lasers"][1]["rabi_frequency"] = serde_json::json!(0.0);
    let dark = dir.path().join("dark.json");
    std::fs::write(&dark, doc.to_string()).unwrap();
    let o = homsim(&["correlations", "--config", dark.to_str().unwrap(), "--out", out]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));

    // missing and corrupt files: I/O errors
    let o = homsim(&["hom", "--config", "/nonexistent/config.json", "--out", out]);
    assert_eq!(o.status.code(), Some(4));
    let junk = dir.path().join("junk.htag");
    std::fs::write(&junk, b"not a tag file").unwrap();
    let o = homsim(&["correlate", junk.to_str().unwrap(), "--out", out, "--duration", "1"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("byte 0"));

    // no sidecar and no --duration
    let bare = dir.path().join("bare.htag");
    std::fs::write(&bare, b"HOMTAG1\0").unwrap();
    let o = homsim(&["correlate", bare.to_str().unwrap(), "--out", out]);
    assert_eq!(o.status.code(), Some(2));
}
