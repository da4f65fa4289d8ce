//! Crawl-index client tests against a local fixture HTTP server.

use dirsim::dataset::{CdxClient, CdxConfig, DatasetError};
use std::io::{Read, Write};
use std::net::TcpListener;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

/// Minimal one-request-per-connection HTTP server. The handler maps the
/// request target (path + query) to (status, body).
fn spawn_server<F>(handler: F) -> String
where
    F: Fn(&str) -> (u16, String) + Send + Sync + 'static,
{
    let listener = TcpListener::bind("127.0.0.1:0").expect("bind fixture server");
    let addr = listener.local_addr().unwrap();
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { continue };
            let mut buf = [0u8; 4096];
            let mut request = Vec::new();
            loop {
                match stream.read(&mut buf) {
                    Ok(0) => break,
                    Ok(n) => {
                        request.extend_from_slice(&buf[..n]);
                        if request.windows(4).any(|w| w == b"\r\n\r\n") {
                            break;
                        }
                    }
                    Err(_) => break,
                }
            }
            let text = String::from_utf8_lossy(&request);
            let target = text
                .lines()
                .next()
                .and_then(|line| line.split_whitespace().nth(1))
                .unwrap_or("/")
                .to_string();
            let (status, body) = handler(&target);
            let reason = match status {
                200 => "OK",
                404 => "Not Found",
                500 => "Internal Server Error",
                _ => "Status",
            };
            let response = format!(
                "HTTP/1.1 {status} {reason}\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                body.len()
            );
            let _ = stream.write_all(response.as_bytes());
        }
    });
    format!("http://{addr}")
}

fn client(index_url: &str) -> CdxClient {
    CdxClient::new(CdxConfig {
        index_url: index_url.to_string(),
        crawl_id: "TEST-2023-40".to_string(),
        max_attempts: 5,
        backoff_base: Duration::from_millis(1),
        jobs: 1,
    })
}

fn row(url: &str, status: &str) -> String {
    format!(r#"{{"urlkey":"k","timestamp":"20230101000000","url":"{url}","status":"{status}","mime":"text/html"}}"#)
}

#[test]
fn paginates_and_maps_records() {
    let url = spawn_server(|target| {
        assert!(target.starts_with("/TEST-2023-40-index?"), "target {target}");
        if target.contains("showNumPages=true") {
            (200, r#"{"pages": 2, "pageSize": 2}"#.to_string())
        } else if target.contains("page=0") {
            (
                200,
                [
                    row("https://example.com/news/2024", "200"),
                    row("https://example.com/about", "200"),
                ]
                .join("\n"),
            )
        } else if target.contains("page=1") {
            (
                200,
                [
                    row("https://other.org/steal", "200"),
                    row("https://example.com/login?next=/", "301"),
                ]
                .join("\n"),
            )
        } else {
            (404, "unexpected".to_string())
        }
    });
    let records = client(&url).fetch_domain("example.com").unwrap();
    assert_eq!(records.len(), 3);
    assert!(records.iter().all(|r| r.domain == "example.com"));
    // merged in page order
    assert_eq!(records[0].raw_path, "/news/2024");
    assert_eq!(records[1].raw_path, "/about");
    assert_eq!(records[2].raw_path, "/login?next=/");
    assert_eq!(records[2].status, 301);
}

#[test]
fn empty_index_response_is_empty_stream() {
    // both the page-count probe and any page read come back empty
    let url = spawn_server(|_| (200, String::new()));
    let records = client(&url).fetch_domain("example.com").unwrap();
    assert!(records.is_empty());
}

#[test]
fn index_404_is_unknown_crawl() {
    let url = spawn_server(|_| (404, "not found".to_string()));
    match client(&url).fetch_domain("example.com") {
        Err(DatasetError::UnknownCrawl(id)) => assert_eq!(id, "TEST-2023-40"),
        other => panic!("expected UnknownCrawl, got {other:?}"),
    }
}

#[test]
fn retries_transient_server_errors() {
    let failures = Arc::new(AtomicUsize::new(0));
    let failures_in_handler = failures.clone();
    let url = spawn_server(move |target| {
        if target.contains("showNumPages=true") {
            // first two attempts fail, third succeeds
            if failures_in_handler.fetch_add(1, Ordering::SeqCst) < 2 {
                (500, "flaky".to_string())
            } else {
                (200, r#"{"pages": 1}"#.to_string())
            }
        } else {
            (200, row("https://example.com/ok", "200"))
        }
    });
    let records = client(&url).fetch_domain("example.com").unwrap();
    assert_eq!(records.len(), 1);
    assert!(failures.load(Ordering::SeqCst) >= 3);
}

#[test]
fn gives_up_after_max_attempts() {
    let hits = Arc::new(AtomicUsize::new(0));
    let hits_in_handler = hits.clone();
    let url = spawn_server(move |_| {
        hits_in_handler.fetch_add(1, Ordering::SeqCst);
        (500, "always broken".to_string())
    });
    match client(&url).fetch_domain("example.com") {
        Err(DatasetError::Network { attempts, .. }) => assert_eq!(attempts, 5),
        other => panic!("expected Network error, got {other:?}"),
    }
    assert_eq!(hits.load(Ordering::SeqCst), 5);
}

#[test]
fn connection_refused_is_a_network_error() {
    // Bind then drop to get a port with no listener.
    let port = {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        listener.local_addr().unwrap().port()
    };
    let result = client(&format!("http://127.0.0.1:{port}")).fetch_domain("example.com");
    assert!(matches!(result, Err(DatasetError::Network { .. })));
}

#[test]
fn concurrent_pages_merge_in_order() {
    let url = spawn_server(|target| {
        if target.contains("showNumPages=true") {
            return (200, r#"{"pages": 6}"#.to_string());
        }
        for page in 0..6 {
            if target.contains(&format!("page={page}")) {
                // later pages respond instantly, earlier ones are not
                // delayed either; order must come from merging, not timing
                return (200, row(&format!("https://example.com/p{page}"), "200"));
            }
        }
        (404, String::new())
    });
    let config = CdxConfig {
        index_url: url,
        crawl_id: "TEST-2023-40".to_string(),
        max_attempts: 2,
        backoff_base: Duration::from_millis(1),
        jobs: 4,
    };
    let records = CdxClient::new(config).fetch_domain("example.com").unwrap();
    let paths: Vec<&str> = records.iter().map(|r| r.raw_path.as_str()).collect();
    assert_eq!(paths, ["/p0", "/p1", "/p2", "/p3", "/p4", "/p5"]);
}
