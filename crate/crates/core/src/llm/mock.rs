//! Deterministic offline backend driven by a fixture file.
//!
//! Responses are keyed by a SHA-256 fingerprint of the exact prompt
//! text: prompts are long, and hashing makes fixtures immune to
//! incidental formatting drift in test code. [`RecordingBackend`] wraps
//! a live backend and captures its traffic into the same fixture
//! format, so recorded sessions replay byte-identically.

use super::{Backend, BackendError};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Mutex;

/// SHA-256 of the prompt bytes, lowercase hex.
pub fn fingerprint(prompt: &str) -> String {
    let digest = Sha256::digest(prompt.as_bytes());
    let mut out = String::with_capacity(64);
    for byte in digest {
        use std::fmt::Write;
        let _ = write!(out, "{byte:02x}");
    }
    out
}

/// What to do when a prompt has no recorded response.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum MockMode {
    /// Unknown prompts are an error. Use in tests that must prove every
    /// prompt was anticipated.
    #[default]
    Strict,
    /// Unknown prompts return `fallback_response`.
    Fallback,
}

fn default_fallback() -> String {
    "Classification: NEITHER".to_string()
}

/// On-disk fixture format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MockFixture {
    #[serde(default)]
    pub mode: MockMode,
    #[serde(default = "default_fallback")]
    pub fallback_response: String,
    /// Prompt fingerprint -> response text.
    #[serde(default)]
    pub responses: BTreeMap<String, String>,
}

impl Default for MockFixture {
    fn default() -> Self {
        Self {
            mode: MockMode::default(),
            fallback_response: default_fallback(),
            responses: BTreeMap::new(),
        }
    }
}

pub struct MockBackend {
    fixture: MockFixture,
}

impl MockBackend {
    pub fn new(fixture: MockFixture) -> Self {
        Self { fixture }
    }

    pub fn from_file(path: &Path) -> Result<Self, BackendError> {
        let text = std::fs::read_to_string(path).map_err(|e| BackendError::FixtureFile {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        let fixture: MockFixture =
            serde_json::from_str(&text).map_err(|e| BackendError::FixtureFile {
                path: path.display().to_string(),
                reason: e.to_string(),
            })?;
        Ok(Self::new(fixture))
    }

    /// Register `response` for the exact text of `prompt`.
    pub fn insert(&mut self, prompt: &str, response: impl Into<String>) {
        self.fixture
            .responses
            .insert(fingerprint(prompt), response.into());
    }

    pub fn fixture(&self) -> &MockFixture {
        &self.fixture
    }
}

impl Backend for MockBackend {
    fn complete(&self, prompt: &str) -> Result<String, BackendError> {
        if prompt.is_empty() {
            return Err(BackendError::EmptyPrompt);
        }
        let fp = fingerprint(prompt);
        match self.fixture.responses.get(&fp) {
            Some(text) => Ok(text.clone()),
            None => match self.fixture.mode {
                MockMode::Strict => Err(BackendError::MissingFixture { fingerprint: fp }),
                MockMode::Fallback => Ok(self.fixture.fallback_response.clone()),
            },
        }
    }
}

/// Pass-through backend that records every (prompt, response) pair for
/// later replay through [`MockBackend`].
pub struct RecordingBackend<B> {
    inner: B,
    recorded: Mutex<BTreeMap<String, String>>,
}

impl<B: Backend> RecordingBackend<B> {
    pub fn new(inner: B) -> Self {
        Self {
            inner,
            recorded: Mutex::new(BTreeMap::new()),
        }
    }

    /// Snapshot of the recorded traffic as a strict-mode fixture.
    pub fn fixture(&self) -> MockFixture {
        MockFixture {
            mode: MockMode::Strict,
            fallback_response: default_fallback(),
            responses: self.recorded.lock().expect("recorder poisoned").clone(),
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), BackendError> {
        let text = serde_json::to_string_pretty(&self.fixture()).expect("fixture serializes");
        std::fs::write(path, text).map_err(|e| BackendError::FixtureFile {
            path: path.display().to_string(),
            reason: e.to_string(),
        })
    }
}

impl<B: Backend> Backend for RecordingBackend<B> {
    fn complete(&self, prompt: &str) -> Result<String, BackendError> {
        let response = self.inner.complete(prompt)?;
        self.recorded
            .lock()
            .expect("recorder poisoned")
            .insert(fingerprint(prompt), response.clone());
        Ok(response)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fingerprint_is_sha256_hex() {
        // Independently verifiable: sha256 of the ASCII bytes "abc".
        assert_eq!(
            fingerprint("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        assert_eq!(fingerprint("abc"), fingerprint("abc"));
        assert_ne!(fingerprint("abc"), fingerprint("abc "));
    }

    #[test]
    fn replay_is_deterministic() {
        let mut backend = MockBackend::new(MockFixture::default());
        backend.insert("What is up?", "Classification: NEITHER\nReasoning: small talk");
        let a = backend.complete("What is up?").unwrap();
        let b = backend.complete("What is up?").unwrap();
        assert_eq!(a, b);
        assert_eq!(a, "Classification: NEITHER\nReasoning: small talk");
    }

    #[test]
    fn strict_mode_rejects_unknown_prompts() {
        let backend = MockBackend::new(MockFixture::default());
        match backend.complete("never seen") {
            Err(BackendError::MissingFixture { fingerprint: fp }) => {
                assert_eq!(fp, fingerprint("never seen"));
            }
            other => panic!("expected missing fixture, got {other:?}"),
        }
    }

    #[test]
    fn fallback_mode_returns_configured_default() {
        let backend = MockBackend::new(MockFixture {
            mode: MockMode::Fallback,
            ..MockFixture::default()
        });
        assert_eq!(
            backend.complete("never seen").unwrap(),
            "Classification: NEITHER"
        );
    }

    #[test]
    fn fixture_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fixture.json");
        let mut backend = MockBackend::new(MockFixture::default());
        backend.insert("p1", "r1");
        backend.insert("p2", "r2");
        std::fs::write(
            &path,
            serde_json::to_string_pretty(backend.fixture()).unwrap(),
        )
        .unwrap();
        let loaded = MockBackend::from_file(&path).unwrap();
        assert_eq!(loaded.fixture(), backend.fixture());
        assert_eq!(loaded.complete("p2").unwrap(), "r2");
    }

    #[test]
    fn unreadable_fixture_file_is_a_config_error() {
        assert!(matches!(
            MockBackend::from_file(Path::new("/nonexistent/fixture.json")),
            Err(BackendError::FixtureFile { .. })
        ));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        std::fs::write(&path, "{ not json").unwrap();
        assert!(matches!(
            MockBackend::from_file(&path),
            Err(BackendError::FixtureFile { .. })
        ));
    }

    #[test]
    fn record_then_replay_matches_live_responses() {
        let mut live = MockBackend::new(MockFixture::default());
        live.insert("alpha", "Classification: CONSENT\nReasoning: permission");
        live.insert("beta", "Classification: INSTRUCTION\nReasoning: command");

        let recorder = RecordingBackend::new(live);
        let live_a = recorder.complete("alpha").unwrap();
        let live_b = recorder.complete("beta").unwrap();

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("recorded.json");
        recorder.save(&path).unwrap();

        let replay = MockBackend::from_file(&path).unwrap();
        assert_eq!(replay.complete("alpha").unwrap(), live_a);
        assert_eq!(replay.complete("beta").unwrap(), live_b);
        assert!(replay.complete("gamma").is_err());
    }
}
