//! End-to-end tests of the dirsim binary.

use std::path::Path;
use std::process::{Command, Output};

fn dirsim(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dirsim"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("spawn dirsim")
}

fn assert_ok(output: &Output) {
    assert!(
        output.status.success(),
        "stdout:\n{}\nstderr:\n{}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
}

#[test]
fn unknown_subcommand_exits_2_with_usage() {
    let dir = tempfile::tempdir().unwrap();
    let output = dirsim(&["frobnicate"], dir.path());
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.to_lowercase().contains("usage"), "stderr: {stderr}");
}

#[test]
fn missing_input_file_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let output = dirsim(
        &["stats", "--input", "nope.ndjson", "--out-dir", "out"],
        dir.path(),
    );
    assert_eq!(output.status.code(), Some(1));
    assert!(!String::from_utf8_lossy(&output.stderr).is_empty());
}

#[test]
fn synth_is_byte_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    assert_ok(&dirsim(
        &["synth", "--seed", "7", "--sites", "6", "--paths-per-site", "20", "--out", "a.ndjson"],
        dir.path(),
    ));
    assert_ok(&dirsim(
        &["synth", "--seed", "7", "--sites", "6", "--paths-per-site", "20", "--out", "b.ndjson"],
        dir.path(),
    ));
    let a = std::fs::read(dir.path().join("a.ndjson")).unwrap();
    let b = std::fs::read(dir.path().join("b.ndjson")).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b);
    assert!(dir.path().join("manifest.json").exists());
}

#[test]
fn ingest_filters_crawl_records() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("crawl.ndjson"),
        concat!(
            r#"{"domain":"a.test","path":"/x/y?q=1","status":200}"#, "\n",
            r#"{"domain":"a.test","path":"/x/y","status":200}"#, "\n",
            r#"{"domain":"a.test","path":"/gone","status":404}"#, "\n",
            "garbage\n",
        ),
    )
    .unwrap();
    let output = dirsim(
        &["ingest", "--input", "crawl.ndjson", "--out", "corpus.ndjson"],
        dir.path(),
    );
    assert_ok(&output);
    let corpus = std::fs::read_to_string(dir.path().join("corpus.ndjson")).unwrap();
    assert_eq!(corpus, "{\"domain\":\"a.test\",\"path\":\"/x/y\"}\n");
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("1 malformed"), "stdout: {stdout}");
}

/// synth -> split -> build-tree -> stats -> coverage -> stem -> simulate
/// (breadth + prob) -> report, all through the binary.
#[test]
fn full_offline_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name).display().to_string();

    assert_ok(&dirsim(
        &["synth", "--seed", "3", "--sites", "10", "--paths-per-site", "30",
          "--out", &p("corpus.ndjson"), "--grammar-out", &p("grammar.json")],
        dir.path(),
    ));
    assert_ok(&dirsim(
        &["split", "--input", &p("corpus.ndjson"), "--seed", "3", "--out-dir", &p("splits")],
        dir.path(),
    ));
    assert_ok(&dirsim(
        &["build-tree", "--input", &p("splits/train.ndjson"), "--out", &p("tree.json")],
        dir.path(),
    ));
    assert_ok(&dirsim(
        &["stats", "--input", &p("corpus.ndjson"), "--out-dir", &p("stats")],
        dir.path(),
    ));

    std::fs::write(dir.path().join("words.txt"), "news\nabout\nlogin\n2023\n2024\n").unwrap();
    assert_ok(&dirsim(
        &["coverage", "--input", &p("corpus.ndjson"), "--wordlist", &p("words.txt"),
          "--by-depth", "--out-dir", &p("coverage")],
        dir.path(),
    ));
    assert_ok(&dirsim(
        &["stem", "--input", &p("corpus.ndjson"), "--out-dir", &p("stem")],
        dir.path(),
    ));
    assert_ok(&dirsim(
        &["build-wordlist-tree", "--tree", &p("tree.json"), "--wordlist", &p("words.txt"),
          "--out", &p("pruned.json")],
        dir.path(),
    ));

    assert_ok(&dirsim(
        &["simulate", "--strategy", "breadth", "--targets", &p("splits/test.ndjson"),
          "--wordlist", &p("words.txt"), "--budget", "500", "--out", &p("sim_breadth")],
        dir.path(),
    ));
    assert_ok(&dirsim(
        &["simulate", "--strategy", "prob", "--targets", &p("splits/test.ndjson"),
          "--tree", &p("tree.json"), "--wordlist", &p("words.txt"), "--budget", "500",
          "--out", &p("sim_prob")],
        dir.path(),
    ));
    assert_ok(&dirsim(
        &["report", "--inputs", &p("sim_breadth/eval.json"), "--inputs", &p("sim_prob/eval.json"),
          "--out", &p("report")],
        dir.path(),
    ));

    for file in [
        "splits/train.ndjson", "splits/val.ndjson", "splits/test.ndjson",
        "tree.json", "stats/stats.csv", "stats/summary.txt",
        "coverage/coverage.csv", "stem/stem.csv", "pruned.json",
        "sim_breadth/eval.json", "report/results_table.csv", "report/bins.csv",
        "report/mean_successes.svg", "report/bins_efficiency.svg",
    ] {
        assert!(dir.path().join(file).exists(), "missing {file}");
    }

    // one trace CSV per target domain, with the documented header
    let traces: Vec<_> = std::fs::read_dir(dir.path().join("sim_breadth/traces"))
        .unwrap()
        .collect();
    assert!(!traces.is_empty());
    let first = std::fs::read_to_string(traces[0].as_ref().unwrap().path()).unwrap();
    assert!(first.starts_with("index,path,hit\n"));
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("cfg.json"), r#"{"seed": 9}"#).unwrap();
    // seed comes from the config file
    assert_ok(&dirsim(
        &["--config", "cfg.json", "synth", "--sites", "4", "--paths-per-site", "10",
          "--out", "from_config.ndjson"],
        dir.path(),
    ));
    // explicit flag overrides it
    assert_ok(&dirsim(
        &["--config", "cfg.json", "synth", "--seed", "9", "--sites", "4",
          "--paths-per-site", "10", "--out", "from_flag.ndjson"],
        dir.path(),
    ));
    let a = std::fs::read(dir.path().join("from_config.ndjson")).unwrap();
    let b = std::fs::read(dir.path().join("from_flag.ndjson")).unwrap();
    assert_eq!(a, b);
    let manifest = std::fs::read_to_string(dir.path().join("manifest.json")).unwrap();
    assert!(manifest.contains("\"seed\": 9"));
}

#[test]
fn fetch_honors_index_url_env_var() {
    use std::io::{Read, Write};
    // minimal fixture index: one page with one record
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { continue };
            let mut buf = [0u8; 2048];
            let n = stream.read(&mut buf).unwrap_or(0);
            let request = String::from_utf8_lossy(&buf[..n]);
            let body = if request.contains("showNumPages=true") {
                r#"{"pages": 1}"#.to_string()
            } else {
                r#"{"url":"https://example.com/found","status":"200"}"#.to_string()
            };
            let _ = stream.write_all(
                format!(
                    "HTTP/1.1 200 OK\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                    body.len()
                )
                .as_bytes(),
            );
        }
    });

    let dir = tempfile::tempdir().unwrap();
    let output = Command::new(env!("CARGO_BIN_EXE_dirsim"))
        .args(["fetch", "--domain", "example.com", "--crawl-id", "TEST-1", "--out", "records.ndjson"])
        .env("DIRSIM_INDEX_URL", format!("http://{addr}"))
        .current_dir(dir.path())
        .output()
        .expect("spawn dirsim");
    assert_ok(&output);
    let records = std::fs::read_to_string(dir.path().join("records.ndjson")).unwrap();
    assert_eq!(
        records,
        "{\"domain\":\"example.com\",\"path\":\"/found\",\"status\":200}\n"
    );
}

#[test]
fn gradcheck_subcommand_passes() {
    let dir = tempfile::tempdir().unwrap();
    let output = dirsim(
        &["gradcheck", "--seed", "1", "--vocab", "30", "--embedding-size", "8", "--n-layers", "2"],
        dir.path(),
    );
    assert_ok(&output);
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("max relative error"), "stdout: {stdout}");
}
