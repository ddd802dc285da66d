//! Blocking HTTP client for the generate endpoint.

use super::{Backend, BackendConfig, BackendError};
use serde::{Deserialize, Serialize};
use std::net::IpAddr;

#[derive(Serialize)]
struct GenerateRequest<'a> {
    model: &'a str,
    prompt: &'a str,
    stream: bool,
    options: &'a super::SamplingOptions,
}

#[derive(Deserialize)]
struct GenerateResponse {
    response: String,
}

fn is_loopback_url(url: &str) -> bool {
    let Ok(parsed) = reqwest::Url::parse(url) else {
        return false;
    };
    match parsed.host_str() {
        Some("localhost") => true,
        Some(host) => {
            let host = host.trim_start_matches('[').trim_end_matches(']');
            host.parse::<IpAddr>().map(|ip| ip.is_loopback()).unwrap_or(false)
        }
        None => false,
    }
}

pub struct HttpBackend {
    config: BackendConfig,
    client: reqwest::blocking::Client,
}

impl HttpBackend {
    pub fn new(config: BackendConfig) -> Result<Self, BackendError> {
        config.validate()?;
        if !config.allow_remote && !is_loopback_url(&config.endpoint_url) {
            return Err(BackendError::RemoteEndpointRefused(
                config.endpoint_url.clone(),
            ));
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| BackendError::InvalidConfig(e.to_string()))?;
        Ok(Self { config, client })
    }

    pub fn config(&self) -> &BackendConfig {
        &self.config
    }

    /// The exact JSON body sent for `prompt`. Field order is fixed by the
    /// struct, so identical (config, prompt) yields identical bytes.
    pub fn request_body(&self, prompt: &str) -> String {
        serde_json::to_string(&GenerateRequest {
            model: &self.config.model_name,
            prompt,
            stream: self.config.options.stream,
            options: &self.config.options,
        })
        .expect("request serialization cannot fail")
    }

    fn attempt(&self, body: &str) -> Result<String, BackendError> {
        let send_result = self
            .client
            .post(&self.config.endpoint_url)
            .header("content-type", "application/json")
            .body(body.to_string())
            .send();
        let response = match send_result {
            Ok(r) => r,
            Err(e) if e.is_timeout() => {
                return Err(BackendError::Timeout {
                    attempts: 0,
                    timeout: self.config.timeout,
                })
            }
            Err(e) => {
                return Err(BackendError::Connect {
                    url: self.config.endpoint_url.clone(),
                    attempts: 0,
                    reason: e.to_string(),
                })
            }
        };
        let status = response.status();
        if status.as_u16() >= 400 {
            return Err(BackendError::HttpStatus {
                status: status.as_u16(),
                attempts: 0,
            });
        }
        let text = response.text().map_err(|e| {
            if e.is_timeout() {
                BackendError::Timeout {
                    attempts: 0,
                    timeout: self.config.timeout,
                }
            } else {
                BackendError::MalformedResponse {
                    attempts: 0,
                    reason: e.to_string(),
                }
            }
        })?;
        let parsed: GenerateResponse =
            serde_json::from_str(&text).map_err(|e| BackendError::MalformedResponse {
                attempts: 0,
                reason: e.to_string(),
            })?;
        Ok(parsed.response)
    }
}

fn stamp_attempts(err: BackendError, attempts: u32) -> BackendError {
    match err {
        BackendError::Connect { url, reason, .. } => BackendError::Connect {
            url,
            attempts,
            reason,
        },
        BackendError::HttpStatus { status, .. } => BackendError::HttpStatus { status, attempts },
        BackendError::Timeout { timeout, .. } => BackendError::Timeout { attempts, timeout },
        BackendError::MalformedResponse { reason, .. } => {
            BackendError::MalformedResponse { attempts, reason }
        }
        other => other,
    }
}

impl Backend for HttpBackend {
    /// One request per attempt, `max_retries + 1` attempts total, with
    /// exponential backoff between attempts (local servers briefly block
    /// while loading a model). All transport-class failures are retried.
    fn complete(&self, prompt: &str) -> Result<String, BackendError> {
        if prompt.is_empty() {
            return Err(BackendError::EmptyPrompt);
        }
        let body = self.request_body(prompt);
        let attempts = self.config.max_retries + 1;
        let mut last_err = None;
        for i in 0..attempts {
            if i > 0 {
                std::thread::sleep(self.config.retry_backoff * 2u32.pow(i - 1));
            }
            match self.attempt(&body) {
                Ok(text) => return Ok(text),
                Err(e) => last_err = Some(e),
            }
        }
        Err(stamp_attempts(
            last_err.expect("at least one attempt"),
            attempts,
        ))
    }
}
