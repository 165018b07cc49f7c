use std::sync::{Condvar, Mutex};
use std::thread;
use std::time::Duration;

use serde::Deserialize;
use serde_json::json;

use crate::provider::{ChatRequest, Provider, ProviderConfig, ProviderError};

/// OpenAI-compatible chat-completions client.
///
/// The blocking HTTP client is built on first use so that constructing the
/// provider inside an async runtime is safe; calls must come from a thread
/// that may block.
pub struct RemoteProvider {
    config: ProviderConfig,
    client: Mutex<Option<reqwest::blocking::Client>>,
    in_flight: Gate,
}

struct Gate {
    free: Mutex<usize>,
    cv: Condvar,
}

struct Pass<'a>(&'a Gate);

impl Gate {
    fn new(n: usize) -> Self {
        Self {
            free: Mutex::new(n),
            cv: Condvar::new(),
        }
    }

    fn enter(&self) -> Pass<'_> {
        let mut free = self.free.lock().unwrap_or_else(|e| e.into_inner());
        while *free == 0 {
            free = self.cv.wait(free).unwrap_or_else(|e| e.into_inner());
        }
        *free -= 1;
        Pass(self)
    }
}

impl Drop for Pass<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.cv.notify_one();
    }
}

#[derive(Deserialize)]
struct Completion {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: Message,
}

#[derive(Deserialize)]
struct Message {
    #[serde(default)]
    content: Option<String>,
}

impl RemoteProvider {
    pub fn new(config: ProviderConfig) -> Result<Self, ProviderError> {
        config.validate()?;
        let in_flight = Gate::new(config.max_in_flight.max(1));
        Ok(Self {
            config,
            client: Mutex::new(None),
            in_flight,
        })
    }

    fn client(&self) -> Result<reqwest::blocking::Client, ProviderError> {
        let mut slot = self.client.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(client) = slot.as_ref() {
            return Ok(client.clone());
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(self.config.request_timeout())
            .build()
            .map_err(|e| ProviderError::Config(e.to_string()))?;
        *slot = Some(client.clone());
        Ok(client)
    }

    fn credential(&self) -> Result<String, ProviderError> {
        let var = self.config.credential.as_deref().unwrap_or_default();
        std::env::var(var).map_err(|_| ProviderError::Auth(format!("environment variable {var} is not set")))
    }

    fn attempt(&self, client: &reqwest::blocking::Client, key: &str, request: &ChatRequest) -> Result<String, ProviderError> {
        let body = json!({
            "model": self.config.model_name,
            "temperature": request.temperature,
            "messages": [
                {"role": "system", "content": request.system},
                {"role": "user", "content": request.user},
            ],
        });
        let endpoint = self.config.endpoint.as_deref().unwrap_or_default();
        let response = client
            .post(endpoint)
            .bearer_auth(key)
            .json(&body)
            .send()
            .map_err(|e| {
                if e.is_timeout() {
                    ProviderError::Timeout
                } else {
                    ProviderError::Transport(e.to_string())
                }
            })?;
        let status = response.status().as_u16();
        let text = response.text().map_err(|e| ProviderError::Transport(e.to_string()))?;
        match status {
            200..=299 => {}
            401 | 403 => return Err(ProviderError::Auth(format!("HTTP {status}"))),
            429 => return Err(ProviderError::RateLimited),
            _ => {
                return Err(ProviderError::Http {
                    status,
                    body: text.chars().take(500).collect(),
                })
            }
        }
        let completion: Completion =
            serde_json::from_str(&text).map_err(|e| ProviderError::Malformed(e.to_string()))?;
        completion
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| ProviderError::Malformed("no message content".into()))
    }
}

impl Provider for RemoteProvider {
    fn name(&self) -> &str {
        "remote-llm"
    }

    fn model(&self) -> &str {
        &self.config.model_name
    }

    fn complete(&self, request: &ChatRequest) -> Result<String, ProviderError> {
        let key = self.credential()?;
        let client = self.client()?;
        let mut delay = Duration::from_millis(self.config.retry_backoff_ms);
        let mut tries = 0;
        loop {
            tries += 1;
            let result = {
                let _pass = self.in_flight.enter();
                self.attempt(&client, &key, request)
            };
            match result {
                Err(e) if e.is_retryable() && tries < self.config.max_attempts => {
                    tracing::warn!(error = %e, attempt = tries, "provider call failed; retrying");
                    thread::sleep(delay);
                    delay *= 2;
                }
                other => return other,
            }
        }
    }
}
