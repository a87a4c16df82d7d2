//! Chat-completions style HTTP adapter for live endpoints.

use std::time::Duration;

use base64::Engine as _;
use serde_json::{json, Value};

use super::{ClientError, ModelClient, ModelRequest, RequestPart};
use crate::error::{Error, Result};

pub const API_KEY_ENV: &str = "MODEL_API_KEY";
pub const API_URL_ENV: &str = "MODEL_API_URL";
pub const DEFAULT_MODEL: &str = "gpt-4o";

/// Posts one user message with text parts and base64 PNG data URLs, and
/// reads `choices[0].message.content` from the reply. HTTP 429 and 5xx,
/// timeouts and connection failures are transient.
pub struct LiveClient {
    model: String,
    identity: String,
    url: String,
    api_key: String,
    temperature: f64,
    agent: ureq::Agent,
}

impl LiveClient {
    pub fn new(model: &str, url: &str, api_key: &str, temperature: f64, timeout: Duration) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build()
            .into();
        LiveClient {
            model: model.to_string(),
            identity: format!("live:{model}"),
            url: url.to_string(),
            api_key: api_key.to_string(),
            temperature,
            agent,
        }
    }

    /// Reads the endpoint and key from `MODEL_API_URL` and `MODEL_API_KEY`.
    pub fn from_env(model: &str, temperature: f64) -> Result<Self> {
        let key = env_var(API_KEY_ENV)?;
        let url = env_var(API_URL_ENV)?;
        Ok(Self::new(model, &url, &key, temperature, Duration::from_secs(120)))
    }

    /// The JSON request body.
    pub fn body(&self, req: &ModelRequest) -> Value {
        let content: Vec<Value> = req
            .parts
            .iter()
            .map(|p| match p {
                RequestPart::Text(t) => json!({ "type": "text", "text": t }),
                RequestPart::Image { png, .. } => {
                    let data = base64::engine::general_purpose::STANDARD.encode(png);
                    json!({
                        "type": "image_url",
                        "image_url": { "url": format!("data:image/png;base64,{data}") },
                    })
                }
            })
            .collect();
        json!({
            "model": self.model,
            "temperature": self.temperature,
            "messages": [{ "role": "user", "content": content }],
        })
    }
}

fn env_var(name: &'static str) -> Result<String> {
    match std::env::var(name) {
        Ok(v) if !v.trim().is_empty() => Ok(v),
        _ => Err(Error::MissingEnv(name)),
    }
}

/// Pulls the assistant text out of a chat-completions reply.
pub fn extract_content(reply: &Value) -> Option<String> {
    let content = reply.pointer("/choices/0/message/content")?;
    match content {
        Value::String(s) => Some(s.clone()),
        Value::Array(parts) => Some(
            parts
                .iter()
                .filter_map(|p| p.get("text").and_then(Value::as_str))
                .collect::<Vec<_>>()
                .join(""),
        ),
        _ => None,
    }
}

impl ModelClient for LiveClient {
    fn identity(&self) -> &str {
        &self.identity
    }

    fn temperature(&self) -> f64 {
        self.temperature
    }

    fn send(&self, req: &ModelRequest) -> std::result::Result<String, ClientError> {
        let body = self.body(req).to_string();
        let response = self
            .agent
            .post(&self.url)
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .header("Content-Type", "application/json")
            .send(body.as_bytes());
        let mut response = match response {
            Ok(r) => r,
            Err(ureq::Error::StatusCode(code)) if code == 429 || code >= 500 => {
                return Err(ClientError::Transient(format!("HTTP {code}")))
            }
            Err(ureq::Error::StatusCode(code)) => return Err(ClientError::Fatal(format!("HTTP {code}"))),
            Err(e @ (ureq::Error::Timeout(_) | ureq::Error::Io(_) | ureq::Error::ConnectionFailed)) => {
                return Err(ClientError::Transient(e.to_string()))
            }
            Err(e) => return Err(ClientError::Fatal(e.to_string())),
        };
        let text = response
            .body_mut()
            .read_to_string()
            .map_err(|e| ClientError::Transient(e.to_string()))?;
        let reply: Value = serde_json::from_str(&text).map_err(|e| ClientError::Fatal(format!("bad JSON reply: {e}")))?;
        extract_content(&reply).ok_or_else(|| ClientError::Fatal("reply has no choices[0].message.content".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charlevels::LevelTag;
    use crate::evalharness::SampleContext;
    use crate::promptkit::{ImageRole, PromptStrategy};
    use crate::sentiment::Sentiment;

    #[test]
    fn body_shape() {
        let c = LiveClient::new("m", "http://localhost:1", "k", 0.7, Duration::from_secs(1));
        let req = ModelRequest {
            parts: vec![
                RequestPart::Text("hi".into()),
                RequestPart::Image {
                    role: ImageRole::Sample,
                    png: vec![1, 2, 3],
                },
            ],
            context: SampleContext {
                sample_id: "s".into(),
                word: "BAD".into(),
                level: LevelTag::L1,
                label: Sentiment::Negative,
                strategy: PromptStrategy::Normal,
            },
            repeat: 0,
        };
        let b = c.body(&req);
        assert_eq!(b["model"], "m");
        assert_eq!(b["temperature"], 0.7);
        assert_eq!(b["messages"][0]["content"][0]["text"], "hi");
        assert_eq!(b["messages"][0]["content"][1]["image_url"]["url"], "data:image/png;base64,AQID");
        assert_eq!(c.identity(), "live:m");
    }

    #[test]
    fn content_extraction() {
        let v = json!({"choices": [{"message": {"content": "Emotion: Negative; Reason: x"}}]});
        assert_eq!(extract_content(&v).unwrap(), "Emotion: Negative; Reason: x");
        let v = json!({"choices": [{"message": {"content": [{"type": "text", "text": "a"}, {"text": "b"}]}}]});
        assert_eq!(extract_content(&v).unwrap(), "ab");
        assert!(extract_content(&json!({})).is_none());
    }

    #[test]
    fn unreachable_endpoint_is_transient() {
        let c = LiveClient::new("m", "http://127.0.0.1:9/v1", "k", 0.7, Duration::from_secs(2));
        let req = ModelRequest {
            parts: vec![RequestPart::Text("x".into())],
            context: SampleContext {
                sample_id: "s".into(),
                word: "BAD".into(),
                level: LevelTag::L1,
                label: Sentiment::Negative,
                strategy: PromptStrategy::Normal,
            },
            repeat: 0,
        };
        assert!(matches!(c.send(&req), Err(ClientError::Transient(_))));
    }
}
