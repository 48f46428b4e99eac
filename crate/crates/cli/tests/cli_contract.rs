//! Exit-code and reproducibility contract of the binary.

use std::process::Command;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_chainform")
}

fn fixture(name: &str) -> String {
    format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn tmp(name: &str) -> std::path::PathBuf {
    std::env::temp_dir().join(format!("chainform-contract-{name}"))
}

#[test]
fn malformed_input_exits_2() {
    let dir = tmp("bad");
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    for sub in ["resonance", "normalize", "theorem-a", "repelling"] {
        let out = Command::new(bin())
            .args([sub, bad.to_str().unwrap(), "--out", dir.to_str().unwrap()])
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(2), "{sub}");
    }
    let missing = dir.join("missing.json");
    let out = Command::new(bin())
        .args(["resonance", missing.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn identical_config_gives_byte_identical_csv() {
    let d1 = tmp("rep1");
    let d2 = tmp("rep2");
    for d in [&d1, &d2] {
        let _ = std::fs::remove_dir_all(d);
        let status = Command::new(bin())
            .args([
                "repelling",
                &fixture("z2.json"),
                "--window",
                "6",
                "--out",
                d.to_str().unwrap(),
            ])
            .status()
            .unwrap();
        assert!(status.success());
    }
    let a = std::fs::read(d1.join("z2.repelling.csv")).unwrap();
    let b = std::fs::read(d2.join("z2.repelling.csv")).unwrap();
    // provenance line embeds the out dir through the config hash, so
    // compare from the header row on
    let strip = |v: &[u8]| {
        let s = String::from_utf8(v.to_vec()).unwrap();
        s.lines().skip(1).collect::<Vec<_>>().join("\n")
    };
    assert_eq!(strip(&a), strip(&b));
}

#[test]
fn resonance_output_reparses_and_revalidates() {
    let dir = tmp("res");
    let _ = std::fs::remove_dir_all(&dir);
    let status = Command::new(bin())
        .args([
            "resonance",
            &fixture("spectrum_log4_log2.json"),
            "--out",
            dir.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let raw = std::fs::read_to_string(dir.join("spectrum_log4_log2.resonance.json")).unwrap();
    let parsed: serde_json::Value = serde_json::from_str(&raw).unwrap();
    assert_eq!(parsed["resonant_indices"][0][0], serde_json::json!([0, 2]));
    assert_eq!(parsed["resonant_indices"][1], serde_json::json!([]));
    // round trip: feed the embedded spectrum back in, identical payload
    let spectrum = parsed["spectrum"].clone();
    let back = dir.join("spectrum-back.json");
    std::fs::write(&back, serde_json::to_string(&spectrum).unwrap()).unwrap();
    let second = Command::new(bin())
        .args(["resonance", back.to_str().unwrap(), "--out", dir.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(second.status.success());
    let reparsed: serde_json::Value =
        serde_json::from_str(&String::from_utf8(second.stdout).unwrap()).unwrap();
    for key in [
        "spectrum",
        "resonant_indices",
        "gap_constant",
        "suggested_gamma",
        "suggested_epsilon",
    ] {
        assert_eq!(parsed[key], reparsed[key], "{key} drifted");
    }
}

#[test]
fn critical_seed_point_exits_5() {
    let dir = tmp("crit");
    // z = 0 is critical for the squaring map
    let out = Command::new(bin())
        .args([
            "theorem-a",
            &fixture("z2.json"),
            "--orbit-point",
            "0,0",
            "--out",
            dir.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(5));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("critical"), "{stderr}");
}

#[test]
fn spectrum_of_wrong_dimension_exits_validation() {
    let dir = tmp("dim");
    std::fs::create_dir_all(&dir).unwrap();
    // chain JSON with mismatched window/maps
    let raw = std::fs::read_to_string(fixture("linear_chain.json")).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&raw).unwrap();
    v["window"] = serde_json::json!([0, 3]);
    let bad = dir.join("badchain.json");
    std::fs::write(&bad, serde_json::to_string(&v).unwrap()).unwrap();
    let out = Command::new(bin())
        .args(["normalize", bad.to_str().unwrap(), "--out", dir.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}
