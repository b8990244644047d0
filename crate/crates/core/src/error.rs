use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or input failed validation. `field` names the offending key.
    #[error("invalid {field}: {message}")]
    Validation { field: String, message: String },

    #[error("no root of eta(x) = 1/2 in [{lo}, {hi}]: eta(lo) = {eta_lo}, eta(hi) = {eta_hi}")]
    NoRoot {
        lo: f64,
        hi: f64,
        eta_lo: f64,
        eta_hi: f64,
    },

    #[error("x = {x} lies outside the domain [{lo}, {hi}]")]
    Domain { x: f64, lo: f64, hi: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("sampler failed to mix: {0}")]
    Mixing(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("config error{}: {message}", fmt_location(*.line, .key.as_deref()))]
    Config {
        line: Option<usize>,
        key: Option<String>,
        message: String,
    },

    #[error("replication {rep} (seed {seed}) failed: {source}")]
    Replication {
        rep: usize,
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn fmt_location(line: Option<usize>, key: Option<&str>) -> String {
    match (line, key) {
        (Some(l), Some(k)) => format!(" at line {l}, key `{k}`"),
        (Some(l), None) => format!(" at line {l}"),
        (None, Some(k)) => format!(" at key `{k}`"),
        (None, None) => String::new(),
    }
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by bad input rather than numerical trouble.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Validation { .. } | Error::Config { .. } | Error::Domain { .. } | Error::Io(_) => {
                true
            }
            Error::Replication { source, .. } => source.is_validation(),
            _ => false,
        }
    }

    /// Short machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Validation { .. } => "validation",
            Error::NoRoot { .. } => "no-root",
            Error::Domain { .. } => "domain",
            Error::Numerical(_) => "numerical",
            Error::Mixing(_) => "mixing",
            Error::Invariant(_) => "invariant",
            Error::Config { .. } => "config",
            Error::Replication { source, .. } => source.kind(),
            Error::Io(_) => "io",
        }
    }
}
