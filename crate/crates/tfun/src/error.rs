use std::fmt;
use std::path::Path;

use serde_json::{json, Value};

use tfun_core::behavior::BehaviorError;
use tfun_core::localpoly::LocalPolyError;
use tfun_core::quantum::QuantumError;
use tfun_core::scenario::ScenarioError;
use tfun_core::spacetime::SpacetimeError;
use tfun_core::tf::TfError;

/// Exit status 1 for usage errors, 2 for everything raised while running.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    Usage(String),
    Domain {
        module: &'static str,
        kind: &'static str,
        message: String,
    },
}

impl CliError {
    pub fn format(message: impl Into<String>) -> Self {
        CliError::Domain {
            module: "cli",
            kind: "InvalidInput",
            message: message.into(),
        }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Domain {
            module: "cli",
            kind: "Io",
            message: format!("{}: {e}", path.display()),
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Domain { .. } => 2,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "Usage",
            CliError::Domain { kind, .. } => kind,
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            CliError::Usage(message) => json!({
                "schema": crate::format::SCHEMA,
                "error": {"module": "cli", "kind": "Usage", "message": message},
            }),
            CliError::Domain {
                module,
                kind,
                message,
            } => json!({
                "schema": crate::format::SCHEMA,
                "error": {"module": module, "kind": kind, "message": message},
            }),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Domain {
                module,
                kind,
                message,
            } => write!(f, "{module}: {kind}: {message}"),
        }
    }
}

impl std::error::Error for CliError {}

macro_rules! domain {
    ($ty:ty, $module:literal) => {
        impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                CliError::Domain {
                    module: $module,
                    kind: e.name(),
                    message: e.to_string(),
                }
            }
        }
    };
}

domain!(TfError, "tfcore");
domain!(BehaviorError, "behavior");
domain!(LocalPolyError, "localpoly");
domain!(QuantumError, "quantum");
domain!(SpacetimeError, "spacetime");
domain!(ScenarioError, "scenario");
