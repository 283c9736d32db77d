use serde_json::json;

/// Process outcome other than success, with its exit code.
#[derive(Debug, Clone, PartialEq)]
pub enum Failure {
    /// Malformed input or arguments (exit 2).
    Config(String),
    /// Engine cannot handle the domain, or engines disagree (exit 3).
    Mismatch(String),
    /// A numerical target was not met (exit 4).
    Numeric(String),
}

impl Failure {
    pub fn config(msg: impl Into<String>) -> Self {
        Failure::Config(msg.into())
    }

    pub fn code(&self) -> i32 {
        match self {
            Failure::Config(_) => 2,
            Failure::Mismatch(_) => 3,
            Failure::Numeric(_) => 4,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            Failure::Config(_) => "config",
            Failure::Mismatch(_) => "engine_mismatch",
            Failure::Numeric(_) => "numeric",
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Config(m) | Failure::Mismatch(m) | Failure::Numeric(m) => m,
        }
    }

    pub fn report(&self) -> String {
        json!({
            "schema": crate::output::SCHEMA,
            "error": { "kind": self.kind(), "code": self.code(), "message": self.message() },
        })
        .to_string()
    }
}

impl From<indicatrix::Error> for Failure {
    fn from(e: indicatrix::Error) -> Self {
        use indicatrix::Error as E;
        let msg = e.to_string();
        if e.is_engine_mismatch() {
            Failure::Mismatch(msg)
        } else if e.is_numeric() || matches!(e, E::InsufficientData(_) | E::Invariant(_)) {
            Failure::Numeric(msg)
        } else {
            Failure::Config(msg)
        }
    }
}
