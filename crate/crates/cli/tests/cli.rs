use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_amp-sentinel");

fn run(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("AMP_SENTINEL_CONFIG")
        .output()
        .expect("spawn binary")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

const SCENARIOS: &str = r#"[
  {"protocol": "NTP", "dst_ip": "198.18.0.1", "reflector_count": 60,
   "start_ms": 1569888000000, "duration_ms": 600000, "target_rate_bps": 4000000000,
   "pkt_size_mean_bytes": 481.1, "pkt_size_std_bytes": 10, "fragment_share": 0.2},
  {"protocol": "Memcached", "dst_ip": "198.18.0.2", "reflector_count": 25,
   "start_ms": 1569888300000, "duration_ms": 300000, "target_rate_bps": 12000000000,
   "pkt_size_mean_bytes": 1285, "pkt_size_std_bytes": 207},
  {"protocol": "DNS", "dst_ip": "198.18.0.3", "reflector_count": 5,
   "start_ms": 1569888000000, "duration_ms": 600000, "target_rate_bps": 9000000000,
   "pkt_size_mean_bytes": 1474}
]"#;

/// Runs synth then detect into `dir`, returning the detect output directory.
fn synth_and_detect(dir: &Path) -> std::path::PathBuf {
    let scenario = dir.join("s.json");
    fs::write(&scenario, SCENARIOS).unwrap();
    let corpus = dir.join("corpus");
    let out = run(&[
        "synth",
        "--scenario",
        scenario.to_str().unwrap(),
        "--seed",
        "7",
        "--out",
        corpus.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let det = dir.join("det");
    let flows = corpus.join("flows.csv");
    let out = run(&[
        "detect",
        "--flows",
        flows.to_str().unwrap(),
        "--out",
        det.to_str().unwrap(),
        "--strict",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    det
}

#[test]
fn detect_reproduces_ground_truth() {
    let dir = tempfile::tempdir().unwrap();
    let det = synth_and_detect(dir.path());
    let truth = json(&dir.path().join("corpus/ground_truth.json"));
    let truth_events = truth["events"].as_array().unwrap();
    let events: Vec<Value> = fs::read_to_string(det.join("events.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(events.len(), 2);
    assert_eq!(events.len(), truth_events.len());
    for (e, t) in events.iter().zip(truth_events) {
        assert_eq!(e["dst_ip"], t["dst_ip"]);
        assert_eq!(e["protocol"], t["protocol"]);
        assert_eq!(
            e["start_ms"].as_u64().unwrap() / 60_000,
            t["start_window"].as_u64().unwrap()
        );
        assert_eq!(e["peak_bps"], t["peak_rate_bps"]);
        assert_eq!(e["port0_surplus_bytes"], t["port0_bytes"]);
    }

    let manifest = json(&det.join("manifest.json"));
    assert_eq!(manifest["command"], "detect");
    assert_eq!(manifest["config"]["k_min_reflectors"], 10);
    assert_eq!(manifest["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
    assert!(manifest["records_per_sec"].as_f64().unwrap() > 0.0);
}

#[test]
fn detect_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let det = synth_and_detect(dir.path());
    let flows = dir.path().join("corpus/flows.csv");
    let again = dir.path().join("again");
    let out = run(&[
        "detect",
        "--flows",
        flows.to_str().unwrap(),
        "--out",
        again.to_str().unwrap(),
        "--shards",
        "3",
    ]);
    assert!(out.status.success());
    for name in [
        "events.csv",
        "events.jsonl",
        "event_reflectors.csv",
        "port0_events.csv",
    ] {
        assert_eq!(
            fs::read(det.join(name)).unwrap(),
            fs::read(again.join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn synth_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("s.json");
    fs::write(&scenario, SCENARIOS).unwrap();
    let outputs: Vec<_> = ["a", "b"]
        .iter()
        .map(|name| {
            let out = dir.path().join(name);
            let st = run(&[
                "synth",
                "--scenario",
                scenario.to_str().unwrap(),
                "--seed",
                "7",
                "--out",
                out.to_str().unwrap(),
            ]);
            assert!(st.status.success());
            (
                fs::read(out.join("flows.csv")).unwrap(),
                fs::read(out.join("ground_truth.json")).unwrap(),
            )
        })
        .collect();
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn missing_input_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "detect",
        "--flows",
        "/nonexistent/missing.csv",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.csv"));
}

#[test]
fn malformed_line_is_exit_2_only_when_strict() {
    let dir = tempfile::tempdir().unwrap();
    let flows = dir.path().join("bad.csv");
    fs::write(
        &flows,
        "timestamp_ms,src_ip,dst_ip,ip_protocol,src_port,dst_port,packets,bytes\n\
         0,192.0.2.1,198.51.100.1,17,123,4444,10,4810\n\
         0,192.0.2.2,not-an-ip,17,123,4444,10,4810\n",
    )
    .unwrap();
    let strict = run(&[
        "detect",
        "--flows",
        flows.to_str().unwrap(),
        "--out",
        dir.path().join("s").to_str().unwrap(),
        "--strict",
    ]);
    assert_eq!(strict.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&strict.stderr).contains("line 3"));

    let lenient = run(&[
        "detect",
        "--flows",
        flows.to_str().unwrap(),
        "--out",
        dir.path().join("l").to_str().unwrap(),
    ]);
    assert_eq!(lenient.status.code(), Some(0));
    assert_eq!(json(&dir.path().join("l/manifest.json"))["parse_errors"], 1);
}

#[test]
fn invalid_config_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let flows = dir.path().join("f.csv");
    fs::write(&flows, "").unwrap();
    let out = run(&[
        "detect",
        "--flows",
        flows.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
        "--window-seconds",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn flags_override_config_file_from_env() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("amp.conf");
    fs::write(
        &cfg,
        "# site thresholds\nk_min_reflectors=20\nt_rate_bps=2_000_000_000\n",
    )
    .unwrap();
    let flows = dir.path().join("f.csv");
    fs::write(&flows, "#sampling_rate=100\n").unwrap();
    let out_dir = dir.path().join("o");
    let out = Command::new(BIN)
        .args([
            "detect",
            "--flows",
            flows.to_str().unwrap(),
            "--out",
            out_dir.to_str().unwrap(),
            "--k-min-reflectors",
            "15",
        ])
        .env("AMP_SENTINEL_CONFIG", &cfg)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let config = &json(&out_dir.join("manifest.json"))["config"];
    assert_eq!(config["k_min_reflectors"], 15);
    assert_eq!(config["t_rate_bps"], 2_000_000_000u64);
    assert_eq!(config["sampling_rate"], 100);
}

#[test]
fn analytics_subcommands_delegate() {
    let dir = tempfile::tempdir().unwrap();
    let det = synth_and_detect(dir.path());
    let events = det.join("events.csv");
    let d = dir.path();

    let out = run(&[
        "stats",
        "--events",
        events.to_str().unwrap(),
        "--out",
        d.join("stats").to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let table = fs::read_to_string(d.join("stats/protocol_stats.csv")).unwrap();
    assert!(table.starts_with("protocol,port,max_gbps"));
    assert_eq!(table.lines().count(), 3);
    let summary = json(&d.join("stats/stats_summary.json"));
    assert_eq!(summary["events"], 2);
    assert!(summary["ceiling_error"].as_str().unwrap().contains("days"));

    fs::write(
        d.join("cap.csv"),
        "member_id,dst_prefix,capacity_bps\nas1,198.18.0.0/24,10000000000\n",
    )
    .unwrap();
    let out = run(&[
        "capacity",
        "--events",
        events.to_str().unwrap(),
        "--capacity",
        d.join("cap.csv").to_str().unwrap(),
        "--out",
        d.join("cap").to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let cap = json(&d.join("cap/capacity_summary.json"));
    assert_eq!(cap["over_capacity"], 1);
    assert_eq!(cap["over_half"], 1);

    fs::write(
        d.join("labels.csv"),
        "kind,dst_prefix,start_ms,end_ms\nblackhole,198.18.0.2,1569888370000,\n",
    )
    .unwrap();
    let out = run(&[
        "mitigation",
        "--events",
        events.to_str().unwrap(),
        "--labels",
        d.join("labels.csv").to_str().unwrap(),
        "--out",
        d.join("mit").to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let mit = json(&d.join("mit/mitigation_summary.json"));
    assert_eq!(mit["summary"]["mitigated"], 1);
    assert_eq!(mit["summary"]["mean_positive_delay_ms"], 70_000.0);

    fs::write(d.join("hp.csv"), "target_ip,start_ms,end_ms,src_port,source\n198.18.0.1,1569888100000,1569888200000,123,hp\n").unwrap();
    let out = run(&[
        "correlate",
        "--events",
        events.to_str().unwrap(),
        "--honeypot",
        d.join("hp.csv").to_str().unwrap(),
        "--out",
        d.join("corr").to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let corr = json(&d.join("corr/correlation.json"));
    assert_eq!(corr["event_match_share"], 0.5);

    let out = run(&[
        "capacity",
        "--events",
        events.to_str().unwrap(),
        "--capacity",
        "/nonexistent.csv",
    ]);
    assert_eq!(out.status.code(), Some(1));
}
