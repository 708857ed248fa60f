use std::fmt;
use std::path::Path;

use mfdepth::Error;

/// Exit status 2 for problems with what the user supplied, 1 for everything
/// else.
#[derive(Debug)]
pub enum Failure {
    BadInput(anyhow::Error),
    Internal(anyhow::Error),
}

impl Failure {
    pub fn bad(msg: impl fmt::Display) -> Self {
        Failure::BadInput(anyhow::anyhow!("{msg}"))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::BadInput(_) => 2,
            Failure::Internal(_) => 1,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::BadInput(e) => write!(f, "bad input: {e:#}"),
            Failure::Internal(e) => write!(f, "internal error: {e:#}"),
        }
    }
}

/// Errors raised while processing inputs that were read successfully.
/// Shape or domain problems still trace back to the inputs.
impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Dimension(_) | Error::Domain(_) | Error::Format(_) | Error::Json(_) => {
                Failure::BadInput(e.into())
            }
            Error::FitFailure(_) | Error::Io(_) | Error::Csv(_) => Failure::Internal(e.into()),
        }
    }
}

pub type CmdResult<T = ()> = std::result::Result<T, Failure>;

pub trait InputContext<T> {
    /// Marks a failure as bad input, naming the offending file.
    fn input(self, path: &Path) -> CmdResult<T>;
}

impl<T> InputContext<T> for mfdepth::Result<T> {
    fn input(self, path: &Path) -> CmdResult<T> {
        self.map_err(|e| Failure::BadInput(anyhow::Error::new(e).context(format!("{}", path.display()))))
    }
}

pub trait OutputContext<T> {
    fn output(self, path: &Path) -> CmdResult<T>;
}

impl<T> OutputContext<T> for mfdepth::Result<T> {
    fn output(self, path: &Path) -> CmdResult<T> {
        self.map_err(|e| {
            Failure::Internal(anyhow::Error::new(e).context(format!("writing {}", path.display())))
        })
    }
}
