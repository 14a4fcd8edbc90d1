#![cfg(feature = "fetch")]

mod common;

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::thread;
use std::time::Duration;

use common::*;
use ffesn::topology::{fetch_edge_list, parse_edge_list, FetchRequest, TopologyError};

/// Serves one request with the given status, content type and body, and
/// returns the request head and body it received.
fn serve_once(
    status: &'static str,
    content_type: &'static str,
    body: String,
) -> (String, thread::JoinHandle<String>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    let handle = thread::spawn(move || {
        let (stream, _) = listener.accept().unwrap();
        let mut reader = BufReader::new(stream.try_clone().unwrap());
        let mut head = String::new();
        let mut length = 0;
        loop {
            let mut line = String::new();
            reader.read_line(&mut line).unwrap();
            if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                length = v.trim().parse().unwrap();
            }
            if line == "\r\n" {
                break;
            }
            head.push_str(&line);
        }
        let mut req_body = vec![0; length];
        reader.read_exact(&mut req_body).unwrap();
        let mut stream = stream;
        write!(
            stream,
            "HTTP/1.1 {status}\r\nContent-Type: {content_type}\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
            body.len()
        )
        .unwrap();
        head + "\n" + &String::from_utf8(req_body).unwrap()
    });
    (url, handle)
}

fn request(url: &str) -> FetchRequest {
    let mut req = FetchRequest::new(url, "secret-token", "LH(R)");
    req.timeout = Duration::from_secs(10);
    req
}

#[test]
fn csv_response_equals_file_parse() {
    let body = fs::read_to_string(fixture_path()).unwrap();
    let (url, server) = serve_once("200 OK", "text/csv", body.clone());
    let fetched = fetch_edge_list(&request(&url)).unwrap();
    let seen = server.join().unwrap();
    let expected = parse_edge_list(body.as_bytes(), Some("LH(R)".into())).unwrap();
    assert_eq!(fetched, expected);
    assert!(seen.starts_with("POST /api/custom/custom"));
    assert!(seen
        .to_ascii_lowercase()
        .contains("authorization: bearer secret-token"));
    assert!(seen.contains("ConnectsTo"));
}

#[test]
fn json_table_response_equals_file_parse() {
    let body = fs::read_to_string(fixture_path()).unwrap();
    let rows: Vec<String> = body.lines().skip(1).map(|l| format!("[{l}]")).collect();
    let json = format!(
        "{{\"columns\":[\"pre_body_id\",\"post_body_id\",\"weight\"],\"data\":[{}]}}",
        rows.join(",")
    );
    let (url, server) = serve_once("200 OK", "application/json", json);
    let fetched = fetch_edge_list(&request(&url)).unwrap();
    server.join().unwrap();
    let expected = parse_edge_list(body.as_bytes(), Some("LH(R)".into())).unwrap();
    assert_eq!(fetched, expected);
}

#[test]
fn empty_result_is_empty_input() {
    let json =
        "{\"columns\":[\"pre_body_id\",\"post_body_id\",\"weight\"],\"data\":[]}".to_string();
    let (url, server) = serve_once("200 OK", "application/json", json);
    assert!(matches!(
        fetch_edge_list(&request(&url)),
        Err(TopologyError::EmptyInput)
    ));
    server.join().unwrap();
}

#[test]
fn rejected_token_is_auth_error() {
    let (url, server) = serve_once("401 Unauthorized", "text/plain", "no".into());
    assert!(matches!(
        fetch_edge_list(&request(&url)),
        Err(TopologyError::Auth(_))
    ));
    server.join().unwrap();
}

#[test]
fn garbage_body_is_malformed() {
    let (url, server) = serve_once("200 OK", "application/json", "{\"oops\": 1}".into());
    assert!(matches!(
        fetch_edge_list(&request(&url)),
        Err(TopologyError::MalformedResponse(_))
    ));
    server.join().unwrap();
}

#[test]
fn unreachable_endpoint_is_transport_error() {
    let port = {
        let l = TcpListener::bind("127.0.0.1:0").unwrap();
        l.local_addr().unwrap().port()
    };
    let err = fetch_edge_list(&request(&format!("http://127.0.0.1:{port}"))).unwrap_err();
    assert!(matches!(err, TopologyError::Transport(_)), "{err:?}");
}
