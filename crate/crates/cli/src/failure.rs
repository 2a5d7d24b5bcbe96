use bvlab::Error;

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NONCONVERGENCE: i32 = 3;
pub const EXIT_RESOURCE: i32 = 4;

/// An error together with the process exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }

    pub fn cap(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_RESOURCE,
            message: message.into(),
        }
    }

    pub fn numeric(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_NONCONVERGENCE,
            message: message.into(),
        }
    }

    pub fn io(e: std::io::Error) -> Self {
        Self::config(format!("i/o error: {e}"))
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e.root_cause() {
            Error::ResourceCap { .. } => EXIT_RESOURCE,
            Error::NumericFailure { .. } => EXIT_NONCONVERGENCE,
            _ => EXIT_CONFIG,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}
