//! Failure classification for the process exit code. Everything a command can
//! go wrong on lands in one of three buckets: the inputs did not parse, the
//! computation itself failed, or a file could not be read or written.

use renewal_core::Error;
use std::fmt;

/// Exit code 2. Scenario files, command-line values and control shapes.
pub const EXIT_PARSE: i32 = 2;
/// Exit code 3. Grid alignment, non-finite samples, singular fits.
pub const EXIT_NUMERIC: i32 = 3;
/// Exit code 4. Filesystem reads and writes.
pub const EXIT_IO: i32 = 4;

#[derive(Debug)]
pub enum Failure {
    Parse(String),
    Numeric(String),
    Io(String),
}

pub type CliResult<T> = Result<T, Failure>;

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Parse(_) => EXIT_PARSE,
            Failure::Numeric(_) => EXIT_NUMERIC,
            Failure::Io(_) => EXIT_IO,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Parse(m) => write!(f, "parse error: {m}"),
            Failure::Numeric(m) => write!(f, "numeric error: {m}"),
            Failure::Io(m) => write!(f, "io error: {m}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match &e {
            Error::InvalidArgument(_)
            | Error::InvalidScenario(_)
            | Error::InvalidControls(_)
            | Error::DimensionMismatch(_) => Failure::Parse(e.to_string()),
            Error::GridAlignment(_)
            | Error::Numerical { .. }
            | Error::Unreachable { .. }
            | Error::IllConditioned { .. }
            | Error::EnumerationCap(_)
            | Error::Fit(_) => Failure::Numeric(e.to_string()),
        }
    }
}

/// Wraps a filesystem error with the path it concerns.
pub fn io_fail(path: &std::path::Path, e: std::io::Error) -> Failure {
    Failure::Io(format!("{}: {e}", path.display()))
}
