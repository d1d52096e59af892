use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config key `{key}`: {message}")]
    Config { key: String, message: String },
    #[error("config line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error(transparent)]
    Core(#[from] mixed_eig_core::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl HarnessError {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Config { key: key.into(), message: message.into() }
    }

    /// Process exit code: configuration and input problems map to 1.
    pub fn exit_code(&self) -> i32 {
        1
    }
}

macro_rules! core_from {
    ($($t:ty),*) => {$(
        impl From<$t> for HarnessError {
            fn from(e: $t) -> Self {
                Self::Core(e.into())
            }
        }
    )*};
}

core_from!(
    mixed_eig_core::GeometryError,
    mixed_eig_core::RearrangeError,
    mixed_eig_core::EnergyError,
    mixed_eig_core::EigsolveError
);

pub type Result<T> = std::result::Result<T, HarnessError>;
