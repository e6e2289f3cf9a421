//! Wire-format test for the chat-completions adapter against a local
//! single-shot HTTP stub; no external network involved.

use lexbench::backend::{Backend, CompletionRequest, OpenAiChatBackend};
use lexbench::conditions::ConditionId;
use std::io::{Read, Write};
use std::net::TcpListener;
use std::sync::mpsc;

/// Serve canned HTTP responses, returning received request bodies.
fn spawn_stub(responses: Vec<(u16, String)>) -> (String, mpsc::Receiver<String>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let (tx, rx) = mpsc::channel();
    std::thread::spawn(move || {
        for (status, body) in responses {
            let (mut stream, _) = listener.accept().unwrap();
            let mut buf = Vec::new();
            let mut chunk = [0u8; 4096];
            let request = loop {
                let n = stream.read(&mut chunk).unwrap();
                buf.extend_from_slice(&chunk[..n]);
                if let Some(header_end) = find_header_end(&buf) {
                    let headers = String::from_utf8_lossy(&buf[..header_end]).to_string();
                    let content_length: usize = headers
                        .lines()
                        .find_map(|l| {
                            l.to_ascii_lowercase()
                                .strip_prefix("content-length:")
                                .map(|v| v.trim().parse().unwrap())
                        })
                        .unwrap_or(0);
                    while buf.len() < header_end + 4 + content_length {
                        let n = stream.read(&mut chunk).unwrap();
                        buf.extend_from_slice(&chunk[..n]);
                    }
                    break String::from_utf8_lossy(&buf[header_end + 4..]).to_string();
                }
            };
            let _ = tx.send(request);
            let reason = if status == 200 { "OK" } else { "Error" };
            let response = format!(
                "HTTP/1.1 {status} {reason}\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                body.len()
            );
            stream.write_all(response.as_bytes()).unwrap();
        }
    });
    (format!("http://{addr}/v1/chat/completions"), rx)
}

fn find_header_end(buf: &[u8]) -> Option<usize> {
    buf.windows(4).position(|w| w == b"\r\n\r\n")
}

fn request<'a>(system: &'a str, user: &'a str) -> CompletionRequest<'a> {
    CompletionRequest {
        system_prompt: system,
        user_prompt: user,
        temperature: 0.7,
        seed: 99,
        max_tokens: 2048,
        item_id: "it-1",
        condition: ConditionId::Control,
        trial_index: 2,
        attempt: 0,
    }
}

#[test]
fn sends_chat_payload_and_parses_completion() {
    let completion = serde_json::json!({
        "choices": [{"message": {"content": "## ANSWER\nB"}, "finish_reason": "stop"}]
    });
    let (endpoint, rx) = spawn_stub(vec![(200, completion.to_string())]);
    let backend = OpenAiChatBackend::new(endpoint, "test-model".into(), Some("sk-test".into())).unwrap();
    let out = backend.complete(&request("sys prompt", "user prompt")).unwrap();
    assert_eq!(out.text, "## ANSWER\nB");
    assert_eq!(out.finish_reason, "stop");

    let body: serde_json::Value = serde_json::from_str(&rx.recv().unwrap()).unwrap();
    assert_eq!(body["model"], "test-model");
    assert_eq!(body["temperature"], 0.7);
    assert_eq!(body["max_tokens"], 2048);
    assert_eq!(body["seed"], 99);
    assert_eq!(body["messages"][0]["role"], "system");
    assert_eq!(body["messages"][0]["content"], "sys prompt");
    assert_eq!(body["messages"][1]["role"], "user");
    assert_eq!(body["messages"][1]["content"], "user prompt");
}

#[test]
fn server_errors_are_retryable_client_errors_are_not() {
    let (endpoint, _rx) = spawn_stub(vec![(500, "{}".into())]);
    let backend = OpenAiChatBackend::new(endpoint, "m".into(), None).unwrap();
    let err = backend.complete(&request("s", "u")).unwrap_err();
    assert!(err.retryable);

    let (endpoint, _rx) = spawn_stub(vec![(400, "{\"error\":\"bad request\"}".into())]);
    let backend = OpenAiChatBackend::new(endpoint, "m".into(), None).unwrap();
    let err = backend.complete(&request("s", "u")).unwrap_err();
    assert!(!err.retryable);
}
