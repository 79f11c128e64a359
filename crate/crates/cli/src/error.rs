use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("cannot parse configuration: {0}")]
    Parse(#[from] toml::de::Error),
    #[error(transparent)]
    Core(#[from] hypercqed::Error),
    #[error("warning promoted to error: {0}")]
    Strict(String),
    #[error("acceptance thresholds violated: {}", .0.join("; "))]
    Verdict(Vec<String>),
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Parse(_) => "parse",
            CliError::Core(e) => e.kind(),
            CliError::Strict(_) => "strict",
            CliError::Verdict(_) => "verdict",
            CliError::Io { .. } => "io",
            CliError::Json(_) => "json",
        }
    }

    /// Configuration problems exit with 2, threshold violations with 3, everything else with 1.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Parse(_) => 2,
            CliError::Core(e) if matches!(e.kind(), "invalid_spec" | "domain") => 2,
            CliError::Verdict(_) => 3,
            _ => 1,
        }
    }

    pub fn to_json(&self) -> String {
        let mut body = serde_json::json!({ "kind": self.kind(), "message": self.to_string() });
        if let CliError::Verdict(failures) = self {
            body["failures"] = serde_json::json!(failures);
        }
        serde_json::json!({ "error": body }).to_string()
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

pub fn io_err(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.display().to_string(), source }
}
