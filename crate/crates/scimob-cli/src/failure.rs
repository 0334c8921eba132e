//! Error classification for exit codes: usage problems (bad flags, invalid
//! configuration) exit 1, data problems (unreadable or malformed inputs,
//! contract violations, missing stage artifacts) exit 2.

use std::fmt;

use scimob_core::CoreError;

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Data(String),
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure::Usage(message.into())
    }

    pub fn data(message: impl Into<String>) -> Self {
        Failure::Data(message.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(msg) | Failure::Data(msg) => write!(f, "{msg}"),
        }
    }
}

impl From<CoreError> for Failure {
    fn from(error: CoreError) -> Self {
        match error {
            CoreError::Config(msg) => Failure::Usage(msg),
            other => Failure::Data(other.to_string()),
        }
    }
}
