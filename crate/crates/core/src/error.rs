use thiserror::Error;

/// Errors produced by the simulation library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain where the quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// A lattice, model or run specification is inconsistent.
    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    /// A request would exceed a resource guard (site budget, memory).
    #[error("resource limit exceeded: {0}")]
    Resource(String),

    /// A numerical procedure failed to converge or lost accuracy.
    #[error("numerical failure: {0}")]
    Numeric(String),

    /// A root-finding bracket did not contain a sign change.
    #[error("root bracketing failed: {0}")]
    Bracketing(String),

    /// A caller violated an API contract (e.g. eigenvectors were not computed).
    #[error("contract violation: {0}")]
    Contract(String),

    /// The energy lies inside the band where the undamped resolvent is singular.
    #[error("near-singular resolvent at omega = {omega}: {hint}")]
    NearSingular { omega: f64, hint: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable name of the error class.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::InvalidSpec(_) => "invalid_spec",
            Error::Resource(_) => "resource",
            Error::Numeric(_) => "numeric",
            Error::Bracketing(_) => "bracketing",
            Error::Contract(_) => "contract",
            Error::NearSingular { .. } => "near_singular",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
