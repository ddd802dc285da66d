//! Exit-code taxonomy and the machine-readable failure report.
//!
//! Every failure leaves the process through one of four exits so shell
//! pipelines can branch without parsing prose: 1 usage, 2 bad input,
//! 3 backend transport, 4 safety violation. The same classification is
//! printed to stderr as a single JSON object.

use gesturebot::bvh::BvhError;
use gesturebot::corpus::CorpusError;
use gesturebot::gsd::GsdError;
use gesturebot::llm::BackendError;
use gesturebot::metrics::MetricsError;
use gesturebot::motion::MotionError;
use gesturebot::pose::PoseError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad invocation or unusable configuration.
    Usage,
    /// An input file is missing, unreadable, or malformed.
    Input,
    /// The generation server (or its stand-in) failed to answer.
    Backend,
    /// A trajectory violates the robot's safety envelope.
    Safety,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Usage => 1,
            ErrorKind::Input => 2,
            ErrorKind::Backend => 3,
            ErrorKind::Safety => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ErrorKind::Usage => "usage",
            ErrorKind::Input => "input",
            ErrorKind::Backend => "backend",
            ErrorKind::Safety => "safety",
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::Usage,
            message: message.into(),
        }
    }

    pub fn input(message: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::Input,
            message: message.into(),
        }
    }

    pub fn safety(message: impl Into<String>) -> Self {
        Self {
            kind: ErrorKind::Safety,
            message: message.into(),
        }
    }

    /// The stderr report: one JSON object, nothing else.
    pub fn to_json(&self) -> String {
        serde_json::json!({
            "error": {
                "kind": self.kind.name(),
                "exit_code": self.kind.exit_code(),
                "message": self.message,
            }
        })
        .to_string()
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.kind.name(), self.message)
    }
}

fn backend_kind(e: &BackendError) -> ErrorKind {
    match e {
        BackendError::Connect { .. }
        | BackendError::HttpStatus { .. }
        | BackendError::Timeout { .. }
        | BackendError::MalformedResponse { .. }
        | BackendError::MissingFixture { .. } => ErrorKind::Backend,
        BackendError::InvalidConfig(_)
        | BackendError::EmptyPrompt
        | BackendError::RemoteEndpointRefused(_)
        | BackendError::FixtureFile { .. } => ErrorKind::Input,
    }
}

impl From<BackendError> for CliError {
    fn from(e: BackendError) -> Self {
        Self {
            kind: backend_kind(&e),
            message: e.to_string(),
        }
    }
}

impl From<GsdError> for CliError {
    fn from(e: GsdError) -> Self {
        let kind = match &e {
            GsdError::Backend(inner) => backend_kind(inner),
            _ => ErrorKind::Input,
        };
        Self {
            kind,
            message: e.to_string(),
        }
    }
}

impl From<MotionError> for CliError {
    fn from(e: MotionError) -> Self {
        let kind = match &e {
            MotionError::SafetyViolations(_) => ErrorKind::Safety,
            _ => ErrorKind::Input,
        };
        Self {
            kind,
            message: e.to_string(),
        }
    }
}

impl From<BvhError> for CliError {
    fn from(e: BvhError) -> Self {
        match e {
            BvhError::Motion(inner) => inner.into(),
            other => Self::input(other.to_string()),
        }
    }
}

impl From<PoseError> for CliError {
    fn from(e: PoseError) -> Self {
        match e {
            PoseError::Motion(inner) => inner.into(),
            other => Self::input(other.to_string()),
        }
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        Self::input(e.to_string())
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        let kind = match &e {
            MetricsError::AllFailed { .. } => ErrorKind::Backend,
            _ => ErrorKind::Input,
        };
        Self {
            kind,
            message: e.to_string(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_the_taxonomy() {
        assert_eq!(ErrorKind::Usage.exit_code(), 1);
        assert_eq!(ErrorKind::Input.exit_code(), 2);
        assert_eq!(ErrorKind::Backend.exit_code(), 3);
        assert_eq!(ErrorKind::Safety.exit_code(), 4);
    }

    #[test]
    fn transport_failures_map_to_backend() {
        let e = BackendError::HttpStatus {
            status: 503,
            attempts: 3,
        };
        assert_eq!(CliError::from(e).kind, ErrorKind::Backend);
        let e = BackendError::RemoteEndpointRefused("http://example.com".into());
        assert_eq!(CliError::from(e).kind, ErrorKind::Input);
    }

    #[test]
    fn safety_violations_map_through_wrappers() {
        let violation = gesturebot::motion::VelocityViolation {
            joint: "HeadYaw".into(),
            joint_index: 0,
            frame_index: 0,
            velocity: 9.0,
            limit: 7.0,
        };
        let e = PoseError::Motion(MotionError::SafetyViolations(vec![violation]));
        let cli = CliError::from(e);
        assert_eq!(cli.kind, ErrorKind::Safety);
        assert_eq!(cli.kind.exit_code(), 4);
    }

    #[test]
    fn report_is_valid_json_with_fields() {
        let report = CliError::input("file `x` missing").to_json();
        let v: serde_json::Value = serde_json::from_str(&report).unwrap();
        assert_eq!(v["error"]["kind"], "input");
        assert_eq!(v["error"]["exit_code"], 2);
        assert!(v["error"]["message"]
            .as_str()
            .unwrap()
            .contains("file `x` missing"));
    }
}
