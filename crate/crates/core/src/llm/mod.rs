//! Client layer for a locally hosted text-generation server.
//!
//! [`HttpBackend`] speaks the de-facto local-LLM generate interface:
//! `POST {endpoint}` with `{model, prompt, stream, options}` returning
//! `{response: text}`. [`MockBackend`] replays canned responses keyed by
//! a hash of the exact prompt, so everything downstream runs offline and
//! deterministically. Both implement [`Backend`].
//!
//! Privacy posture: the default configuration refuses to talk to
//! anything but a loopback address; `allow_remote` must be set
//! explicitly to send prompts off the machine.

mod http;
mod mock;
mod pool;

pub use http::HttpBackend;
pub use mock::{fingerprint, MockBackend, MockFixture, MockMode, RecordingBackend};
pub use pool::{parallel_map, DEFAULT_CONCURRENCY};

use serde::{Deserialize, Serialize};
use std::time::Duration;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("invalid backend config: {0}")]
    InvalidConfig(String),
    #[error("prompt is empty")]
    EmptyPrompt,
    #[error("endpoint `{0}` is not a loopback address; set allow_remote to permit it")]
    RemoteEndpointRefused(String),
    #[error("cannot connect to `{url}` after {attempts} attempt(s): {reason}")]
    Connect {
        url: String,
        attempts: u32,
        reason: String,
    },
    #[error("server returned HTTP {status} after {attempts} attempt(s)")]
    HttpStatus { status: u16, attempts: u32 },
    #[error("request timed out after {attempts} attempt(s), timeout {timeout:?}")]
    Timeout { attempts: u32, timeout: Duration },
    #[error("malformed response body after {attempts} attempt(s): {reason}")]
    MalformedResponse { attempts: u32, reason: String },
    #[error("no fixture for prompt fingerprint {fingerprint}")]
    MissingFixture { fingerprint: String },
    #[error("fixture file `{path}`: {reason}")]
    FixtureFile { path: String, reason: String },
}

/// Decoding parameters sent verbatim inside the request's `options`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingOptions {
    pub temperature: f64,
    pub top_p: f64,
    pub top_k: u32,
    pub num_predict: u32,
    pub num_ctx: u32,
    pub stream: bool,
}

impl Default for SamplingOptions {
    /// Near-greedy decoding with room for long, complete answers.
    fn default() -> Self {
        Self {
            temperature: 0.1,
            top_p: 0.9,
            top_k: 10,
            num_predict: 1000,
            num_ctx: 10000,
            stream: false,
        }
    }
}

impl SamplingOptions {
    pub fn validate(&self) -> Result<(), BackendError> {
        let bad = |m: &str| Err(BackendError::InvalidConfig(m.to_string()));
        if !(self.temperature >= 0.0) {
            return bad("temperature must be >= 0");
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return bad("top_p must be in (0, 1]");
        }
        if self.top_k < 1 {
            return bad("top_k must be >= 1");
        }
        if self.num_predict < 1 {
            return bad("num_predict must be >= 1");
        }
        if self.num_ctx < 1 {
            return bad("num_ctx must be >= 1");
        }
        if self.stream {
            return bad("streaming responses are not supported");
        }
        Ok(())
    }
}

/// Connection settings for the generation server.
#[derive(Debug, Clone, PartialEq)]
pub struct BackendConfig {
    /// Full URL of the generate endpoint.
    pub endpoint_url: String,
    pub model_name: String,
    pub options: SamplingOptions,
    pub timeout: Duration,
    pub max_retries: u32,
    /// Permit non-loopback endpoints. Off by default: prompts may carry
    /// clinical speech and must not leave the machine unnoticed.
    pub allow_remote: bool,
    /// First retry delay; doubles per attempt.
    pub retry_backoff: Duration,
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self {
            endpoint_url: "http://127.0.0.1:11434/api/generate".to_string(),
            model_name: "qwen3:8b".to_string(),
            options: SamplingOptions::default(),
            timeout: Duration::from_secs(120),
            max_retries: 2,
            allow_remote: false,
            retry_backoff: Duration::from_millis(500),
        }
    }
}

impl BackendConfig {
    pub fn validate(&self) -> Result<(), BackendError> {
        if self.endpoint_url.is_empty() {
            return Err(BackendError::InvalidConfig("endpoint_url is empty".into()));
        }
        if self.model_name.is_empty() {
            return Err(BackendError::InvalidConfig("model_name is empty".into()));
        }
        if self.timeout.is_zero() {
            return Err(BackendError::InvalidConfig("timeout must be > 0".into()));
        }
        self.options.validate()
    }
}

/// A text-completion provider. Implementations must be shareable across
/// threads; callers correlate responses to requests by their own
/// handles (indices), never by arrival order.
pub trait Backend: Send + Sync {
    /// Submit one prompt and return the complete response text.
    fn complete(&self, prompt: &str) -> Result<String, BackendError>;
}

impl<B: Backend + ?Sized> Backend for &B {
    fn complete(&self, prompt: &str) -> Result<String, BackendError> {
        (**self).complete(prompt)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_options_match_deployment_parameters() {
        let value = serde_json::to_value(SamplingOptions::default()).unwrap();
        assert_eq!(
            value,
            serde_json::json!({
                "temperature": 0.1,
                "top_p": 0.9,
                "top_k": 10,
                "num_predict": 1000,
                "num_ctx": 10000,
                "stream": false
            })
        );
    }

    #[test]
    fn options_serialization_is_byte_stable() {
        let a = serde_json::to_string(&SamplingOptions::default()).unwrap();
        let b = serde_json::to_string(&SamplingOptions::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn option_validation_bounds() {
        let ok = SamplingOptions::default();
        assert!(ok.validate().is_ok());
        assert!(SamplingOptions { temperature: -0.1, ..ok.clone() }.validate().is_err());
        assert!(SamplingOptions { top_p: 0.0, ..ok.clone() }.validate().is_err());
        assert!(SamplingOptions { top_p: 1.2, ..ok.clone() }.validate().is_err());
        assert!(SamplingOptions { top_k: 0, ..ok.clone() }.validate().is_err());
        assert!(SamplingOptions { num_predict: 0, ..ok.clone() }.validate().is_err());
        assert!(SamplingOptions { num_ctx: 0, ..ok.clone() }.validate().is_err());
        assert!(SamplingOptions { stream: true, ..ok }.validate().is_err());
    }

    #[test]
    fn config_validation() {
        assert!(BackendConfig::default().validate().is_ok());
        let zero_timeout = BackendConfig {
            timeout: Duration::ZERO,
            ..BackendConfig::default()
        };
        assert!(zero_timeout.validate().is_err());
        let no_model = BackendConfig {
            model_name: String::new(),
            ..BackendConfig::default()
        };
        assert!(no_model.validate().is_err());
    }
}
