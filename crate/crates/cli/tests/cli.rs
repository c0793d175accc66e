use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use serde_json::Value;

fn palp(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_palp"))
        .args(args)
        .current_dir(dir)
        .env_remove("PALP_HTTP_LISTEN")
        .env_remove("PALP_INGEST_LISTEN")
        .output()
        .unwrap()
}

fn stderr_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).unwrap_or_else(|_| panic!("stderr not JSON: {}", String::from_utf8_lossy(&out.stderr)))
}

/// Simulate the three ideal tasks; returns their file names.
fn ideal_files(dir: &Path, seed: &str) -> Vec<String> {
    ["ideal-superficial", "ideal-deep", "ideal-liver"]
        .iter()
        .map(|a| {
            let name = format!("{a}-{seed}.palp.jsonl");
            let out = palp(dir, &["simulate", "--archetype", a, "--seed", seed, "--participant", "p1", "-o", &name]);
            assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
            name
        })
        .collect()
}

fn assess_json(dir: &Path, extra: &[&str], files: &[String]) -> Value {
    let mut args = vec!["assess", "--format", "json"];
    args.extend_from_slice(extra);
    args.extend(files.iter().map(String::as_str));
    let out = palp(dir, &args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn simulate_then_assess_ideal_sessions() {
    let dir = tempfile::tempdir().unwrap();
    let files = ideal_files(dir.path(), "7");
    let mut args = vec!["assess", "-o", "report.json"];
    args.extend(files.iter().map(String::as_str));
    let out = palp(dir.path(), &args);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("Total                        30.00 / 30"));
    assert!(text.contains("Excellent"));

    let report: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["total"], 30.0);
    assert_eq!(report["participant_id"], "p1");

    let again = palp(dir.path(), &["report", "report.json"]);
    assert_eq!(String::from_utf8(again.stdout).unwrap(), text);
}

#[test]
fn simulation_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["a.palp.jsonl", "b.palp.jsonl"] {
        palp(dir.path(), &["simulate", "--archetype", "tutor2-deep", "--seed", "11", "-o", name]);
    }
    let a = std::fs::read(dir.path().join("a.palp.jsonl")).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, std::fs::read(dir.path().join("b.palp.jsonl")).unwrap());
    let stdout = palp(dir.path(), &["simulate", "--archetype", "tutor2-deep", "--seed", "11"]).stdout;
    assert_eq!(stdout, a);
}

#[test]
fn missing_file_is_a_data_error_naming_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let files = ideal_files(dir.path(), "1");
    let out = palp(dir.path(), &["assess", &files[0], "missing.palp.jsonl", &files[2]]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr_json(&out);
    assert_eq!(err["error"]["code"], "not_found");
    assert_eq!(err["error"]["path"], "missing.palp.jsonl");
}

#[test]
fn missing_task_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let files = ideal_files(dir.path(), "2");
    let out = palp(dir.path(), &["assess", &files[0], &files[1]]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["error"]["code"], "missing_task");
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["simulate", "--archetype", "nonsense"],
        vec!["frobnicate"],
        vec!["simulate"],
        vec!["--quartet-bound", "2", "simulate", "--archetype", "ideal-deep"],
    ] {
        let out = palp(dir.path(), &args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert_eq!(stderr_json(&out)["error"]["code"], "usage");
    }
    assert_eq!(palp(dir.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn config_precedence_flags_over_file_over_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let files = ideal_files(dir.path(), "3");
    std::fs::write(dir.path().join("palp.toml"), "[segmentation]\nquartet_bound = 800\n").unwrap();
    let bound = |r: &Value| r["config"]["segmentation"]["quartet_bound"].as_u64().unwrap();
    assert_eq!(bound(&assess_json(dir.path(), &[], &files)), 600);
    assert_eq!(bound(&assess_json(dir.path(), &["--config", "palp.toml"], &files)), 800);
    assert_eq!(
        bound(&assess_json(dir.path(), &["--config", "palp.toml", "--quartet-bound", "700"], &files)),
        700
    );
    std::fs::write(dir.path().join("bad.toml"), "[segmentation]\nonset = 1\n").unwrap();
    let out = palp(dir.path(), &["--config", "bad.toml", "assess", &files[0]]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"]["path"], "bad.toml");
}

#[test]
fn calibration_adds_safety_flags() {
    let dir = tempfile::tempdir().unwrap();
    let files = ideal_files(dir.path(), "4");
    std::fs::write(
        dir.path().join("cal.json"),
        r#"{"schema_version":1,"default":[[0,0],[600,3.0]]}"#,
    )
    .unwrap();
    let report = assess_json(dir.path(), &["--calibration", "cal.json"], &files);
    let deep = &report["tasks"][1];
    assert_eq!(deep["safety"]["threshold_newtons"], 1.65);
    // Ideal deep peaks sit in Q3/Q4, i.e. above 330 arb = 1.65 N.
    assert!(!deep["safety"]["exceeded"].as_array().unwrap().is_empty());
    assert!(report["tasks"][0]["safety"]["exceeded"].as_array().unwrap().len() < 14);
}

#[test]
fn build_reference_from_tutor_sessions() {
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for (a, seed) in [
        ("tutor1-deep", "1"),
        ("tutor2-deep", "2"),
        ("tutor3-deep", "3"),
        ("tutor4-deep", "4"),
        ("ideal-superficial", "5"),
        ("ideal-liver", "6"),
    ] {
        let name = format!("{a}.palp.jsonl");
        palp(dir.path(), &["simulate", "--archetype", a, "--seed", seed, "-o", &name]);
        files.push(name);
    }
    let mut args = vec!["build-reference", "-o", "model.json"];
    args.extend(files.iter().map(String::as_str));
    let out = palp(dir.path(), &args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let model: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("model.json")).unwrap()).unwrap();
    let deep = &model["tasks"][1];
    assert_eq!(deep["task"], "deep");
    assert_eq!((deep["press_count_min"].as_u64(), deep["press_count_max"].as_u64()), (Some(6), Some(21)));
    assert_eq!(model["quartet_bound"], 600);

    let out = palp(dir.path(), &["build-reference", &files[0]]);
    assert_eq!(out.status.code(), Some(1));
}

fn http(addr: &str, method: &str, path: &str) -> (u16, String) {
    let mut conn = TcpStream::connect(addr).unwrap();
    write!(conn, "{method} {path} HTTP/1.1\r\nHost: {addr}\r\nContent-Length: 0\r\nConnection: close\r\n\r\n").unwrap();
    let mut raw = String::new();
    conn.read_to_string(&mut raw).unwrap();
    let status = raw[9..12].parse().unwrap();
    let body = raw.split_once("\r\n\r\n").map(|(_, b)| b.to_string()).unwrap_or_default();
    (status, body)
}

struct Server(std::process::Child);

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

#[test]
fn serve_and_replay_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let files = ideal_files(dir.path(), "9");
    let data = dir.path().join("data");
    let mut server = Server(
        Command::new(env!("CARGO_BIN_EXE_palp"))
            .args(["serve", "--http", "127.0.0.1:0", "--ingest", "127.0.0.1:0", "--data-dir"])
            .arg(&data)
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .unwrap(),
    );
    let mut first = String::new();
    BufReader::new(server.0.stdout.take().unwrap()).read_line(&mut first).unwrap();
    let addrs: Value = serde_json::from_str(&first).unwrap();
    let (http_addr, ingest) = (addrs["http"].as_str().unwrap(), addrs["ingest"].as_str().unwrap());

    for f in &files {
        let out = palp(dir.path(), &["replay", f, "--to", ingest, "--speed", "0"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let lines: Vec<Value> = String::from_utf8(out.stdout)
            .unwrap()
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect();
        assert_eq!(lines[0]["ok"], true);
        assert_eq!(lines[1]["finalized"]["codec_errors"], 0);
    }
    let (status, body) = http(http_addr, "POST", "/participants/p1/finalize");
    assert_eq!(status, 200, "{body}");
    let report: Value = serde_json::from_str(&body).unwrap();
    assert_eq!(report["total"], 30.0);

    // The stored recordings replay to the same report offline.
    let recordings: Vec<String> = files
        .iter()
        .map(|f| {
            let id = serde_json::from_str::<Value>(
                std::fs::read_to_string(dir.path().join(f)).unwrap().lines().next().unwrap(),
            )
            .unwrap()["session_id"]
                .as_str()
                .unwrap()
                .to_string();
            data.join("sessions").join(format!("{id}.palp.jsonl")).display().to_string()
        })
        .collect();
    let offline = assess_json(dir.path(), &[], &recordings);
    assert_eq!(offline, report);
    let stored: PathBuf = data.join("reports/p1.json");
    assert_eq!(serde_json::from_str::<Value>(&std::fs::read_to_string(stored).unwrap()).unwrap(), report);

    // A second replay of the same session id is refused.
    let out = palp(dir.path(), &["replay", &files[0], "--to", ingest, "--speed", "0"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["error"]["code"], "rejected");
}
