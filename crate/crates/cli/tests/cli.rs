use std::process::{Command, Output};

fn backscatter(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_backscatter"))
        .args(args)
        .output()
        .unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn plan_check_reports_verdict() {
    let v = json(&backscatter(&[
        "plan-check",
        "--f-b",
        "2e6",
        "--f-m",
        "250e3",
        "--f-s",
        "24e6",
    ]));
    assert_eq!(v["verdict"], "concentric-circles");
}

#[test]
fn simulation_commands_require_a_seed() {
    let out = backscatter(&["link"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--seed"));
}

#[test]
fn flags_override_the_config_file_and_change_the_hash() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(
        &cfg,
        r#"{"protocol": {"kind": "ble"}, "trials": 2, "channel": {"fixed_snr_db": 30}}"#,
    )
    .unwrap();
    let path = cfg.to_str().unwrap();
    let a = json(&backscatter(&["link", "--config", path, "--seed", "3"]));
    let b = json(&backscatter(&[
        "link",
        "--config",
        path,
        "--seed",
        "3",
        "--d-tag-rx",
        "4",
    ]));
    assert_eq!(a["protocol"], "ble");
    assert_eq!(a["seeds"].as_array().unwrap().len(), 2);
    assert_eq!(b["d_tag_rx"], 4.0);
    assert_ne!(a["provenance"]["config_sha256"], b["provenance"]["config_sha256"]);
    assert_eq!(a["provenance"]["seed"], 3);
}

#[test]
fn sweep_csv_starts_with_provenance() {
    let out = backscatter(&[
        "sweep", "--seed", "1", "--trials", "1", "--axis", "sf", "--values", "7,8",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# backscatter "));
    assert!(lines.next().unwrap().starts_with("axis,value,"));
    assert_eq!(lines.count(), 2);
}

#[test]
fn synth_writes_iq_that_reads_back() {
    let dir = tempfile::tempdir().unwrap();
    let iq = dir.path().join("zb.iq");
    let out = backscatter(&[
        "synth",
        "--bits",
        "a5",
        "--set",
        "protocol.kind=zigbee",
        "-o",
        iq.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (stream, side) = backscatter_core::IqStream::read(&iq).unwrap();
    assert_eq!(side.sample_rate, stream.sample_rate);
    let bias = std::fs::read_to_string(dir.path().join("zb.bias.csv")).unwrap();
    assert_eq!(bias.lines().count(), stream.len() + 2);
}

#[test]
fn bad_override_is_rejected() {
    let out = backscatter(&["link", "--seed", "1", "--set", "trials=zero"]);
    assert!(!out.status.success());
}
