use std::io::{BufRead, BufReader};
use std::process::{Child, Command, Stdio};

use serde_json::{json, Value};

const BIN: &str = env!("CARGO_BIN_EXE_clay");

fn clay(args: &[&str]) -> std::process::Output {
    Command::new(BIN).args(args).env_remove("CLAY_CONFIG").env("RUST_LOG", "warn").output().unwrap()
}

#[test]
fn validate_taxonomy() {
    let out = clay(&["validate-taxonomy"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("ok: 7 styles"), "{text}");

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    let out = clay(&["validate-taxonomy", bad.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8(out.stderr).unwrap().contains("bad.json"));
}

#[test]
fn report_renders_bundled_tables() {
    let out = clay(&["report"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for needle in ["Interaction Count", "Control Activities", "<0.001", "Enjoyment"] {
        assert!(text.contains(needle), "missing {needle}");
    }
}

#[test]
fn simulate_then_analyze() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let data = d.join("data");
    let logs = d.join("logs");
    // Converger counts 6 and 8, baseline counts 11 and 9.
    let runs = [
        ("converger", "0", "--k", "2"),
        ("converger", "10", "--k", "4"),
        ("baseline-free", "50", "--prompts", "11"),
        ("baseline-free", "60", "--prompts", "9"),
    ];
    for (policy, seed, flag, value) in runs {
        let out = clay(&[
            "simulate", "--policy", policy, "--count", "2", "--seed", seed, "--random-style", flag, value,
            "--out", logs.to_str().unwrap(), "--data-dir", data.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 2);
    }
    let out_dir = d.join("analysis");
    let out = clay(&["analyze", logs.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["rows"][0]["mean_a"], 7.0);
    assert_eq!(report["rows"][0]["mean_b"], 10.0);

    let out = clay(&["audit", "--data-dir", data.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));

    let empty = d.join("empty");
    std::fs::create_dir_all(&empty).unwrap();
    let out = clay(&["analyze", empty.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert!(!out.status.success());
}

#[test]
fn remote_serve_without_credential_fails() {
    let out = Command::new(BIN)
        .args(["serve", "--bind", "127.0.0.1:0", "--backend", "remote", "--chat-url", "http://127.0.0.1:9/v1"])
        .args(["--image-url", "http://127.0.0.1:9/v1", "--credential-env", "CLAY_TEST_UNSET_CREDENTIAL"])
        .env_remove("CLAY_TEST_UNSET_CREDENTIAL")
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8(out.stderr).unwrap().contains("CLAY_TEST_UNSET_CREDENTIAL"));
}

fn spawn_server(data: &std::path::Path) -> (Child, String) {
    let mut child = Command::new(BIN)
        .args(["serve", "--bind", "127.0.0.1:0", "--data-dir", data.to_str().unwrap(), "--clock", "logical"])
        .env("RUST_LOG", "warn")
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap()).read_line(&mut line).unwrap();
    let base = line.trim().strip_prefix("listening on ").unwrap().to_string();
    (child, base)
}

#[tokio::test]
async fn acknowledged_events_survive_a_kill() {
    let dir = tempfile::tempdir().unwrap();
    let (mut child, base) = spawn_server(dir.path());
    let c = reqwest::Client::new();
    let s: Value = c
        .post(format!("{base}/sessions"))
        .json(&json!({"mode": "clay", "style_seed": "feminine", "seed": 8}))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    let id = s["id"].as_str().unwrap().to_string();
    let post = |path: &str, body: Value| c.post(format!("{base}/sessions/{id}/{path}")).json(&body).send();
    assert!(post("vague-prompt", json!({"text": "soft romantic dress"})).await.unwrap().status().is_success());
    assert!(post("refine", json!({"keywords": ["lace", "pastel"]})).await.unwrap().status().is_success());
    let gen: Value = c.post(format!("{base}/sessions/{id}/generate")).send().await.unwrap().json().await.unwrap();
    let acked = gen["session"]["event_count"].as_u64().unwrap();
    let hash = gen["result"]["image_refs"][0].as_str().unwrap().to_string();

    child.kill().unwrap();
    child.wait().unwrap();

    let (mut child, base) = spawn_server(dir.path());
    let ev: Value = c.get(format!("{base}/sessions/{id}/events")).send().await.unwrap().json().await.unwrap();
    assert_eq!(ev["events"].as_array().unwrap().len() as u64, acked);
    assert_eq!(ev["interaction_count"], 2);
    let img = c.get(format!("{base}/artifacts/{hash}")).send().await.unwrap();
    assert_eq!(img.status(), 200);
    // The restarted process can keep working on the session.
    let r = c.post(format!("{base}/sessions/{id}/composition")).json(&json!({"directive": "increase_tile_count"})).send().await.unwrap();
    assert!(r.status().is_success());
    child.kill().unwrap();
    child.wait().unwrap();

    let out = clay(&["audit", "--data-dir", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
}
