use std::fmt;
use std::process::ExitCode;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Config,
    Data,
    Numeric,
}

/// A failed command: which exit code to use and why.
#[derive(Debug)]
pub struct Failure {
    pub kind: Kind,
    pub message: String,
}

pub type CliResult<T> = Result<T, Failure>;

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Self {
            kind: Kind::Config,
            message: message.into(),
        }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self {
            kind: Kind::Data,
            message: message.into(),
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self.kind {
            Kind::Config => 2,
            Kind::Data => 3,
            Kind::Numeric => 4,
        })
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let label = match self.kind {
            Kind::Config => "config error",
            Kind::Data => "data error",
            Kind::Numeric => "numerical failure",
        };
        write!(f, "{label}: {}", self.message)
    }
}

/// Attaches an exit-code class to library errors. Numerical failures keep
/// their own class whatever the caller asks for.
pub trait Classify<T> {
    fn or_config(self, what: &str) -> CliResult<T>;
    fn or_data(self, what: &str) -> CliResult<T>;
}

fn classify(err: lccf_core::Error, fallback: Kind, what: &str) -> Failure {
    let kind = if err.is_numerical() { Kind::Numeric } else { fallback };
    Failure {
        kind,
        message: format!("{what}: {err}"),
    }
}

impl<T> Classify<T> for lccf_core::Result<T> {
    fn or_config(self, what: &str) -> CliResult<T> {
        self.map_err(|e| classify(e, Kind::Config, what))
    }

    fn or_data(self, what: &str) -> CliResult<T> {
        self.map_err(|e| classify(e, Kind::Data, what))
    }
}

impl<T> Classify<T> for std::io::Result<T> {
    fn or_config(self, what: &str) -> CliResult<T> {
        self.map_err(|e| Failure::config(format!("{what}: {e}")))
    }

    fn or_data(self, what: &str) -> CliResult<T> {
        self.map_err(|e| Failure::data(format!("{what}: {e}")))
    }
}
