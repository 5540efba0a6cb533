#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

use confdebate::agents::{AgentSpec, BackendConfig, ScriptEntry, ScriptedAgent, ScriptedConfig};
use confdebate::QuestionRecord;

/// One request seen by [`MockServer`].
#[derive(Debug, Clone)]
pub struct Recorded {
    pub path: String,
    pub headers: Vec<(String, String)>,
    pub body: serde_json::Value,
}

impl Recorded {
    pub fn header(&self, name: &str) -> Option<&str> {
        self.headers
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.as_str())
    }
}

/// Minimal HTTP/1.1 server replaying canned responses in order; the last one
/// repeats once the queue is exhausted.
pub struct MockServer {
    pub base_url: String,
    pub requests: Arc<Mutex<Vec<Recorded>>>,
    _handle: JoinHandle<()>,
}

fn handle(mut stream: TcpStream, responses: &Mutex<Vec<(u16, String)>>, log: &Mutex<Vec<Recorded>>) {
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut line = String::new();
    if reader.read_line(&mut line).unwrap_or(0) == 0 {
        return;
    }
    let path = line.split_whitespace().nth(1).unwrap_or("").to_string();
    let mut headers = Vec::new();
    let mut len = 0usize;
    loop {
        let mut h = String::new();
        reader.read_line(&mut h).unwrap();
        let h = h.trim_end();
        if h.is_empty() {
            break;
        }
        if let Some((k, v)) = h.split_once(':') {
            if k.eq_ignore_ascii_case("content-length") {
                len = v.trim().parse().unwrap();
            }
            headers.push((k.trim().to_string(), v.trim().to_string()));
        }
    }
    let mut body = vec![0u8; len];
    reader.read_exact(&mut body).unwrap();
    log.lock().unwrap().push(Recorded {
        path,
        headers,
        body: serde_json::from_slice(&body).unwrap_or(serde_json::Value::Null),
    });
    let (status, text) = {
        let mut q = responses.lock().unwrap();
        if q.len() > 1 {
            q.remove(0)
        } else {
            q[0].clone()
        }
    };
    let reason = match status {
        200 => "OK",
        429 => "Too Many Requests",
        500 => "Internal Server Error",
        _ => "Status",
    };
    let reply = format!(
        "HTTP/1.1 {status} {reason}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{text}",
        text.len()
    );
    let _ = stream.write_all(reply.as_bytes());
    let _ = stream.flush();
}

impl MockServer {
    pub fn start(responses: Vec<(u16, String)>) -> Self {
        assert!(!responses.is_empty());
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let base_url = format!("http://{}", listener.local_addr().unwrap());
        let requests = Arc::new(Mutex::new(Vec::new()));
        let log = Arc::clone(&requests);
        let responses = Arc::new(Mutex::new(responses));
        let handle = std::thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(stream) = stream else { break };
                handle(stream, &responses, &log);
            }
        });
        Self {
            base_url,
            requests,
            _handle: handle,
        }
    }

    pub fn requests(&self) -> Vec<Recorded> {
        self.requests.lock().unwrap().clone()
    }
}

/// Chat-completions body with per-token log-probabilities.
pub fn completion(tokens: &[(&str, f64)]) -> String {
    let content: String = tokens.iter().map(|(t, _)| *t).collect();
    let lp: Vec<serde_json::Value> = tokens
        .iter()
        .map(|(t, p)| {
            serde_json::json!({
                "token": t,
                "logprob": p.ln(),
                "top_logprobs": [
                    {"token": t, "logprob": p.ln()},
                    {"token": "x", "logprob": ((1.0 - p) / 2.0).max(1e-9).ln()},
                ],
            })
        })
        .collect();
    serde_json::json!({
        "choices": [{
            "index": 0,
            "message": {"role": "assistant", "content": content},
            "logprobs": {"content": lp},
        }]
    })
    .to_string()
}

pub fn completion_without_logprobs(text: &str) -> String {
    serde_json::json!({"choices": [{"index": 0, "message": {"role": "assistant", "content": text}}]}).to_string()
}

pub fn scripted_spec(id: &str) -> AgentSpec {
    AgentSpec::new(
        id,
        format!("Debater {}", id.to_uppercase()),
        BackendConfig::Scripted(ScriptedConfig { script: "inline".into() }),
    )
}

/// Scripted agents answering every (question, round) with a fixed SV reply.
pub fn scripted_agents(n: usize, rounds: usize, questions: &[QuestionRecord]) -> Vec<Arc<ScriptedAgent>> {
    (0..n)
        .map(|i| {
            let id = format!("a{}", i + 1);
            let entries = questions.iter().flat_map(|q| {
                let id = id.clone();
                (0..=rounds).map(move |r| ScriptEntry {
                    question_id: q.id.clone(),
                    round: r,
                    agent_id: id.clone(),
                    text: format!(
                        "Reason: agent {id} thinking in round {r}\nAnswer: {}\nConfidence score: {}",
                        if i == 0 { q.gold_answer.clone() } else { format!("{}-{r}", id) },
                        60 + 10 * i
                    ),
                    token_logprobs: None,
                    attempt: None,
                })
            });
            Arc::new(ScriptedAgent::new(scripted_spec(&id), entries))
        })
        .collect()
}

pub fn numeric_questions(prefix: &str, n: usize) -> Vec<QuestionRecord> {
    confdebate::harness::synthetic_dataset(prefix, n)
}
