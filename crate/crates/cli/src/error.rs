use serde::Serialize;

/// A failed run, classified by exit code.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    /// Bad flags, unusable parameter files or an unwritable output directory.
    #[error("{0}")]
    Config(String),
    /// Unreadable or malformed input data, or observations outside the support.
    #[error("{0}")]
    Data(String),
    /// Estimation, filtering or simulation failed numerically.
    #[error("{0}")]
    Numerical(String),
}

#[derive(Serialize)]
struct ErrorObject<'a> {
    kind: &'a str,
    exit_code: i32,
    message: String,
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Data(_) => "data",
            CliError::Numerical(_) => "numerical",
        }
    }

    /// One-line JSON object `{"error": {"kind", "exit_code", "message"}}`.
    pub fn to_json(&self) -> String {
        let body = ErrorObject {
            kind: self.kind(),
            exit_code: self.exit_code(),
            message: self.to_string(),
        };
        serde_json::json!({ "error": body }).to_string()
    }
}

fn is_data_error(e: &garmagarch::Error) -> bool {
    use garmagarch::Error;
    match e {
        Error::Support { .. } | Error::Data(_) => true,
        Error::Filter { source, .. } => is_data_error(source),
        _ => false,
    }
}

impl From<garmagarch::Error> for CliError {
    fn from(e: garmagarch::Error) -> Self {
        use garmagarch::Error;
        match e {
            Error::Spec(_) | Error::Params(_) => CliError::Config(e.to_string()),
            ref e if is_data_error(e) => CliError::Data(e.to_string()),
            e => CliError::Numerical(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
