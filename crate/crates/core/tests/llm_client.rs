use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use forge_core::llm::{complete, EndpointConfig, LlmClient};
use forge_core::ForgeError;

#[derive(Clone)]
enum Reply {
    Echo,
    Status(u16),
    /// Sleep before echoing.
    Slow(u64),
}

struct Mock {
    url: String,
    hits: Arc<AtomicUsize>,
    max_in_flight: Arc<AtomicUsize>,
    auth: Arc<Mutex<Vec<String>>>,
}

/// Serves `script[i]` to the i-th request; the last entry repeats.
fn serve(script: Vec<Reply>) -> Mock {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/complete", listener.local_addr().unwrap());
    let hits = Arc::new(AtomicUsize::new(0));
    let in_flight = Arc::new(AtomicUsize::new(0));
    let max_in_flight = Arc::new(AtomicUsize::new(0));
    let auth = Arc::new(Mutex::new(Vec::new()));
    let (h, f, m, a) = (hits.clone(), in_flight.clone(), max_in_flight.clone(), auth.clone());
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { continue };
            let n = h.fetch_add(1, Ordering::SeqCst);
            let reply = script[n.min(script.len() - 1)].clone();
            let (f, m, a) = (f.clone(), m.clone(), a.clone());
            std::thread::spawn(move || {
                let now = f.fetch_add(1, Ordering::SeqCst) + 1;
                m.fetch_max(now, Ordering::SeqCst);
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut len = 0usize;
                loop {
                    let mut line = String::new();
                    if reader.read_line(&mut line).unwrap_or(0) == 0 || line == "\r\n" {
                        break;
                    }
                    let lower = line.to_ascii_lowercase();
                    if let Some(v) = lower.strip_prefix("content-length:") {
                        len = v.trim().parse().unwrap();
                    }
                    if lower.starts_with("authorization:") {
                        a.lock().unwrap().push(line.trim().to_string());
                    }
                }
                let mut body = vec![0u8; len];
                reader.read_exact(&mut body).unwrap();
                let req: serde_json::Value = serde_json::from_slice(&body).unwrap();
                let echo = || serde_json::json!({ "text": req["prompt"] }).to_string();
                let (code, payload) = match reply {
                    Reply::Echo => (200, echo()),
                    Reply::Status(c) => (c, r#"{"error":"scripted"}"#.to_string()),
                    Reply::Slow(ms) => {
                        std::thread::sleep(Duration::from_millis(ms));
                        (200, echo())
                    }
                };
                let _ = write!(
                    stream,
                    "HTTP/1.1 {code} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{payload}",
                    payload.len()
                );
                f.fetch_sub(1, Ordering::SeqCst);
            });
        }
    });
    Mock {
        url,
        hits,
        max_in_flight,
        auth,
    }
}

fn cfg(url: &str, retries: u32) -> EndpointConfig {
    EndpointConfig {
        max_retries: retries,
        backoff_ms: 5,
        timeout_ms: 2_000,
        ..EndpointConfig::new(url)
    }
}

#[test]
fn echo_endpoint_returns_prompt() {
    let mock = serve(vec![Reply::Echo]);
    assert_eq!(complete(&cfg(&mock.url, 0), "hello {world}").unwrap(), "hello {world}");
    assert_eq!(mock.hits.load(Ordering::SeqCst), 1);
}

#[test]
fn two_failures_then_success() {
    let mock = serve(vec![Reply::Status(503), Reply::Status(500), Reply::Echo]);
    assert_eq!(complete(&cfg(&mock.url, 3), "p").unwrap(), "p");
    assert_eq!(mock.hits.load(Ordering::SeqCst), 3);
}

#[test]
fn zero_retries_means_one_attempt() {
    let mock = serve(vec![Reply::Status(502)]);
    let err = complete(&cfg(&mock.url, 0), "p").unwrap_err();
    assert!(matches!(err, ForgeError::Llm { attempts: 1, .. }), "{err}");
    assert_eq!(mock.hits.load(Ordering::SeqCst), 1);
}

#[test]
fn request_count_is_bounded_by_retries() {
    let mock = serve(vec![Reply::Status(500)]);
    let err = complete(&cfg(&mock.url, 2), "p").unwrap_err();
    assert!(matches!(err, ForgeError::Llm { attempts: 3, .. }));
    assert_eq!(mock.hits.load(Ordering::SeqCst), 3);
}

#[test]
fn client_error_is_not_retried() {
    let mock = serve(vec![Reply::Status(400), Reply::Echo]);
    let err = complete(&cfg(&mock.url, 5), "p").unwrap_err();
    assert!(matches!(err, ForgeError::Llm { attempts: 1, .. }));
    assert_eq!(mock.hits.load(Ordering::SeqCst), 1);
}

#[test]
fn timeout_is_retried() {
    let mock = serve(vec![Reply::Slow(1_000), Reply::Echo]);
    let mut c = cfg(&mock.url, 1);
    c.timeout_ms = 150;
    assert_eq!(complete(&c, "late").unwrap(), "late");
    assert_eq!(mock.hits.load(Ordering::SeqCst), 2);
}

#[test]
fn unreachable_endpoint_fails_without_fabricating_text() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/complete", listener.local_addr().unwrap());
    drop(listener);
    assert!(matches!(complete(&cfg(&url, 1), "p"), Err(ForgeError::Llm { attempts: 2, .. })));
}

#[test]
fn bearer_token_is_sent() {
    let mock = serve(vec![Reply::Echo]);
    let mut c = cfg(&mock.url, 0);
    c.auth_token = Some("sekrit".into());
    complete(&c, "p").unwrap();
    assert_eq!(mock.auth.lock().unwrap().len(), 1);
    assert!(mock.auth.lock().unwrap()[0].ends_with("Bearer sekrit"));
}

#[test]
fn batch_respects_concurrency_and_correlates_results() {
    let mock = serve(vec![Reply::Slow(60)]);
    let mut c = cfg(&mock.url, 0);
    c.concurrency = 2;
    let client = LlmClient::new(c).unwrap();
    let prompts: Vec<String> = (0..6).map(|i| format!("prompt-{i}")).collect();
    let out = client.complete_many(&prompts);
    for (p, r) in prompts.iter().zip(&out) {
        assert_eq!(r.as_ref().unwrap(), p);
    }
    assert!(mock.max_in_flight.load(Ordering::SeqCst) <= 2);
    assert_eq!(mock.hits.load(Ordering::SeqCst), 6);
}
