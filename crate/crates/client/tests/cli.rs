use std::path::Path;
use std::process::{Command, Output};
use std::sync::Arc;

use nimbus_client::Client;
use nimbus_core::algorithms::Registry;
use nimbus_service::{router, AppState, WorkerMode};

/// Serves the API on an ephemeral port from a background runtime.
fn start_server() -> String {
    let (tx, rx) = std::sync::mpsc::channel();
    std::thread::spawn(move || {
        let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build().unwrap();
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
            tx.send(listener.local_addr().unwrap()).unwrap();
            let app = router(AppState::new(Arc::new(Registry::with_builtins()), WorkerMode::Threads));
            axum::serve(listener, app).await.unwrap();
        });
    });
    format!("http://{}", rx.recv().unwrap())
}

fn nimbus(server: &str, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nimbus")).arg("--server").arg(server).args(args).output().unwrap()
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}\nstdout: {}", String::from_utf8_lossy(&out.stderr), String::from_utf8_lossy(&out.stdout));
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn partition_run_and_result_file() {
    let server = start_server();
    let dir = tempfile::tempdir().unwrap();
    let edges = dir.path().join("g.txt");
    // two components: a triangle {5,6,7} and an edge {20,21}
    std::fs::write(&edges, "5 6\n6 7\n7 5\n20 21\n").unwrap();
    let out = ok(&nimbus(&server, &["partition", "--input", path_str(&edges), "--partitions", "2", "--out", "mem://g"]));
    assert!(out.starts_with("5 vertices in 2 partitions"), "{out}");

    let result = dir.path().join("wcc.txt");
    let report = dir.path().join("report.json");
    let out = ok(&nimbus(
        &server,
        &[
            "run", "--algorithm", "WCC", "--partitions", "2", "--max-worker", "1", "--threads", "1", "--maas", "mem://g",
            "--out", path_str(&result), "--report", path_str(&report),
        ],
    ));
    assert!(out.contains("rotating mode"), "{out}");
    assert_eq!(std::fs::read_to_string(&result).unwrap(), "5 0\n6 0\n7 0\n20 3\n21 3\n");
    let rep: serde_json::Value = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    assert_eq!(rep["algorithm"], "WCC");
    assert!(rep["core_seconds"].as_f64().unwrap() > 0.0);

    let out = ok(&nimbus(&server, &["jobs"]));
    assert!(out.contains("WCC") && out.contains("Succeeded"), "{out}");
    let one: serde_json::Value = serde_json::from_str(&ok(&nimbus(&server, &["jobs", "1"]))).unwrap();
    assert_eq!(one["status"], "succeeded");
}

#[test]
fn params_reach_the_algorithm() {
    let server = start_server();
    let dir = tempfile::tempdir().unwrap();
    let edges = dir.path().join("path.txt");
    std::fs::write(&edges, "0 1\n1 2\n2 3\n").unwrap();
    ok(&nimbus(&server, &["partition", "--input", path_str(&edges), "--partitions", "2", "--out", "mem://p"]));
    let result = dir.path().join("bfs.txt");
    ok(&nimbus(
        &server,
        &[
            "run", "--algorithm", "BFS", "--partitions", "2", "--max-worker", "2", "--param", "root=3", "--maas", "mem://p",
            "--out", path_str(&result),
        ],
    ));
    assert_eq!(std::fs::read_to_string(&result).unwrap(), "0 3\n1 2\n2 1\n3 0\n");

    let bad = nimbus(
        &server,
        &["run", "--algorithm", "BFS", "--partitions", "2", "--param", "depth=3", "--maas", "mem://p", "--out", path_str(&result)],
    );
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("depth"));
}

#[test]
fn verify_exit_codes() {
    let server = start_server();
    let args = ["verify", "--algorithm", "PAGERANK", "--partitions", "4", "--max-worker", "4", "--random", "150", "--seed", "2"];
    let out = ok(&nimbus(&server, &args));
    assert!(out.starts_with("pass: 150 vertices"), "{out}");

    let mut bad_args = args.to_vec();
    bad_args.push("--corrupt");
    let bad = nimbus(&server, &bad_args);
    assert_eq!(bad.status.code(), Some(1));
    let text = String::from_utf8_lossy(&bad.stdout);
    assert!(text.starts_with("FAIL") && text.contains("vertex "), "{text}");
}

#[test]
fn bench_writes_one_line_per_run() {
    let server = start_server();
    let dir = tempfile::tempdir().unwrap();
    let matrix = dir.path().join("m.toml");
    std::fs::write(
        &matrix,
        "algorithms = [\"BFS\", \"WCC\"]\npartitions = [2]\nmax_worker = [1, 2]\n[[graphs]]\nkind = \"tree\"\nn = 30\n",
    )
    .unwrap();
    let report = dir.path().join("bench.jsonl");
    let out = ok(&nimbus(&server, &["bench", "--matrix", path_str(&matrix), "--report", path_str(&report)]));
    assert!(out.starts_with("4 runs, 0 oracle mismatches"), "{out}");
    let text = std::fs::read_to_string(&report).unwrap();
    assert_eq!(text.lines().count(), 4);
    for line in text.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        for k in ["config_hash", "wall_seconds", "core_seconds", "gb_seconds", "key_ops", "message_bytes"] {
            assert!(v.get(k).is_some(), "{k} missing from {line}");
        }
    }
}

#[test]
fn client_reports_server_errors() {
    let server = start_server();
    let c = Client::new(&server).unwrap();
    assert_eq!(c.health().unwrap()["status"], "ok");
    match c.job(42) {
        Err(nimbus_client::ClientError::Server { status, message }) => {
            assert_eq!(status, 404);
            assert!(message.contains("42"));
        }
        other => panic!("{other:?}"),
    }
    let down = nimbus("http://127.0.0.1:1", &["health"]);
    assert_eq!(down.status.code(), Some(2));
}
