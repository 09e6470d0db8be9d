//! Chat-completions backend for a hosted language model.

use std::collections::BTreeSet;
use std::time::Duration;

use serde_json::{json, Value as Json};

use super::prompt::{build_propose_prompt, build_verify_prompt, Prompt};
use super::response::parse_verify_response;
use super::{Oracle, OracleRequest};
use crate::error::OracleError;
use crate::model::VerifyJudgment;

pub const DEFAULT_ENDPOINT: &str = "https://api.openai.com/v1/chat/completions";
pub const DEFAULT_MODEL: &str = "gpt-4.1-nano";
pub const DEFAULT_API_KEY_ENV: &str = "LOGITEXT_API_KEY";

#[derive(Debug, Clone, PartialEq)]
pub struct RemoteConfig {
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the bearer token.
    pub api_key_env: String,
    pub propose_temperature: f64,
    pub request_timeout: Duration,
    /// Extra attempts after a verify reply that cannot be parsed.
    pub verify_retries: u32,
    /// Extra attempts after a transport failure or non-2xx status.
    pub transport_retries: u32,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        RemoteConfig {
            endpoint: DEFAULT_ENDPOINT.to_string(),
            model: DEFAULT_MODEL.to_string(),
            api_key_env: DEFAULT_API_KEY_ENV.to_string(),
            propose_temperature: 0.7,
            request_timeout: Duration::from_secs(120),
            verify_retries: 2,
            transport_retries: 2,
        }
    }
}

pub struct RemoteOracle {
    config: RemoteConfig,
    api_key: String,
    agent: ureq::Agent,
}

impl std::fmt::Debug for RemoteOracle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RemoteOracle")
            .field("config", &self.config)
            .finish_non_exhaustive()
    }
}

impl RemoteOracle {
    /// Fails if the API key variable is unset or empty.
    pub fn new(config: RemoteConfig) -> Result<Self, OracleError> {
        let api_key = std::env::var(&config.api_key_env)
            .ok()
            .filter(|k| !k.trim().is_empty())
            .ok_or_else(|| OracleError::Config(format!("environment variable {} is not set", config.api_key_env)))?;
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.request_timeout))
            .http_status_as_error(false)
            .build()
            .new_agent();
        Ok(RemoteOracle { config, api_key, agent })
    }

    pub fn config(&self) -> &RemoteConfig {
        &self.config
    }

    fn post_once(&self, body: &Json) -> Result<String, OracleError> {
        let mut resp = self
            .agent
            .post(&self.config.endpoint)
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .send_json(body)
            .map_err(|e| OracleError::Transport(e.to_string()))?;
        let status = resp.status();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| OracleError::Transport(e.to_string()))?;
        if !status.is_success() {
            return Err(OracleError::Transport(format!("HTTP {status}: {}", text.trim())));
        }
        let reply: Json = serde_json::from_str(&text)
            .map_err(|e| OracleError::MalformedResponse(format!("bad completion body: {e}")))?;
        reply["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| OracleError::MalformedResponse("completion has no message content".into()))
    }

    fn complete(&self, prompt: &Prompt, temperature: f64) -> Result<String, OracleError> {
        let body = json!({
            "model": self.config.model,
            "messages": [
                {"role": "system", "content": prompt.system},
                {"role": "user", "content": prompt.user},
            ],
            "temperature": temperature,
        });
        let mut attempt = 0;
        loop {
            match self.post_once(&body) {
                Err(OracleError::Transport(e)) if attempt < self.config.transport_retries => {
                    log::warn!("oracle transport error (attempt {}): {e}", attempt + 1);
                    attempt += 1;
                }
                other => return other,
            }
        }
    }
}

impl Oracle for RemoteOracle {
    fn propose(&self, req: &OracleRequest) -> Result<String, OracleError> {
        let text = self.complete(&build_propose_prompt(req), self.config.propose_temperature)?;
        Ok(text.trim().to_string())
    }

    fn verify(&self, req: &OracleRequest) -> Result<Vec<VerifyJudgment>, OracleError> {
        if req.candidate.is_none() {
            return Err(OracleError::MissingCandidate);
        }
        let prompt = build_verify_prompt(req);
        let expected: BTreeSet<String> = req.ids().into_iter().map(str::to_string).collect();
        let mut attempt = 0;
        let mut judgments = loop {
            let raw = self.complete(&prompt, 0.0)?;
            match parse_verify_response(&raw, &expected) {
                Ok(js) => break js,
                Err(e) if attempt < self.config.verify_retries => {
                    log::warn!("unparseable verifier reply (attempt {}): {e}", attempt + 1);
                    attempt += 1;
                }
                Err(e) => return Err(e),
            }
        };
        // Return judgments in request order with the requested targets.
        judgments.sort_by_key(|j| req.constraints.iter().position(|c| c.nltc.id == j.id));
        for (j, c) in judgments.iter_mut().zip(&req.constraints) {
            j.target = c.target;
        }
        Ok(judgments)
    }
}

#[cfg(test)]
mod tests {
    use super::super::testing::targeted;
    use super::*;
    use crate::model::Assignment;
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;
    use std::sync::{Arc, Mutex};

    /// Serves the given completion contents in order and records each request body.
    fn mock_server(replies: Vec<(u16, String)>) -> (String, Arc<Mutex<Vec<Json>>>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let seen = Arc::new(Mutex::new(Vec::new()));
        let log = seen.clone();
        std::thread::spawn(move || {
            for (status, content) in replies {
                let (stream, _) = listener.accept().unwrap();
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut len = 0;
                loop {
                    let mut line = String::new();
                    reader.read_line(&mut line).unwrap();
                    if line == "\r\n" || line.is_empty() {
                        break;
                    }
                    if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                        len = v.trim().parse().unwrap();
                    }
                }
                let mut body = vec![0; len];
                reader.read_exact(&mut body).unwrap();
                log.lock().unwrap().push(serde_json::from_slice(&body).unwrap());
                let payload = json!({"choices": [{"message": {"role": "assistant", "content": content}}]}).to_string();
                let mut stream = stream;
                write!(
                    stream,
                    "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{payload}",
                    payload.len()
                )
                .unwrap();
            }
        });
        (format!("http://{addr}/v1/chat/completions"), seen)
    }

    fn oracle(endpoint: String) -> RemoteOracle {
        std::env::set_var("LOGITEXT_TEST_KEY", "sk-test");
        RemoteOracle::new(RemoteConfig {
            endpoint,
            api_key_env: "LOGITEXT_TEST_KEY".into(),
            ..RemoteConfig::default()
        })
        .unwrap()
    }

    #[test]
    fn missing_key_is_a_config_error() {
        let cfg = RemoteConfig {
            api_key_env: "LOGITEXT_SURELY_UNSET".into(),
            ..RemoteConfig::default()
        };
        assert!(matches!(RemoteOracle::new(cfg), Err(OracleError::Config(_))));
    }

    #[test]
    fn propose_and_verify_round_trip() {
        let verdict = r#"Sure: [{"id":"C2","description":"b","target":true,"predicted":true,"rationale":"ok"},
                          {"id":"C1","description":"a","target":false,"predicted":true,"rationale":"ok"}]"#;
        let (url, seen) = mock_server(vec![
            (200, "  a text \n".into()),
            (200, "not json".into()),
            (200, verdict.into()),
        ]);
        let o = oracle(url);
        let cs = vec![targeted("C1", "a", true), targeted("C2", "b", false)];
        let req = OracleRequest::propose("M", cs.clone(), Assignment::new()).unwrap();
        assert_eq!(o.propose(&req).unwrap(), "a text");

        let req = OracleRequest::verify(Some("M".into()), cs, Assignment::new(), "a text").unwrap();
        let js = o.verify(&req).unwrap();
        assert_eq!(
            js.iter().map(|j| (j.id.as_str(), j.target)).collect::<Vec<_>>(),
            [("C1", true), ("C2", false)]
        );

        let bodies = seen.lock().unwrap();
        assert_eq!(bodies.len(), 3);
        assert_eq!(bodies[0]["temperature"], 0.7);
        assert_eq!(bodies[0]["model"], DEFAULT_MODEL);
        assert_eq!(bodies[0]["messages"][0]["role"], "system");
        assert_eq!(bodies[2]["temperature"], 0.0);
    }

    #[test]
    fn http_errors_are_retried_then_reported() {
        let (url, _) = mock_server(vec![(500, "x".into()), (500, "x".into()), (500, "x".into())]);
        let o = oracle(url);
        let req = OracleRequest::propose("M", vec![targeted("C1", "a", true)], Assignment::new()).unwrap();
        assert!(matches!(o.propose(&req), Err(OracleError::Transport(_))));
    }
}
