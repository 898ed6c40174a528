//! Exit codes shared by every subcommand.

use sparsecf_core::Error;

/// Output could not be written.
pub const OUTPUT: u8 = 1;
/// Bad arguments, unreadable or inconsistent input.
pub const INPUT: u8 = 2;
/// The tracker failed on a frame.
pub const TRACKING: u8 = 3;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

pub type Outcome = Result<(), Failure>;

pub fn input(msg: impl std::fmt::Display) -> Failure {
    Failure {
        code: INPUT,
        error: anyhow::anyhow!("{msg}"),
    }
}

pub trait Classify<T> {
    fn or_input(self, what: &str) -> Result<T, Failure>;
    fn or_output(self, what: &str) -> Result<T, Failure>;
    /// Input when a frame could not be read, tracking otherwise.
    fn or_tracking(self) -> Result<T, Failure>;
}

fn is_input(e: &Error) -> bool {
    match e {
        Error::Frame { source, .. } => is_input(source),
        Error::UnreadableImage { .. }
        | Error::Io(_)
        | Error::CountMismatch { .. }
        | Error::MissingGroundTruth(_)
        | Error::BadGroundTruth { .. }
        | Error::BadBox
        | Error::BadConfig(_) => true,
        _ => false,
    }
}

impl<T, E> Classify<T> for Result<T, E>
where
    E: Into<anyhow::Error>,
{
    fn or_input(self, what: &str) -> Result<T, Failure> {
        self.map_err(|e| Failure {
            code: INPUT,
            error: e.into().context(what.to_string()),
        })
    }

    fn or_output(self, what: &str) -> Result<T, Failure> {
        self.map_err(|e| Failure {
            code: OUTPUT,
            error: e.into().context(what.to_string()),
        })
    }

    fn or_tracking(self) -> Result<T, Failure> {
        self.map_err(|e| {
            let error = e.into();
            let code = match error.downcast_ref::<Error>() {
                Some(core) if is_input(core) => INPUT,
                _ => TRACKING,
            };
            Failure { code, error }
        })
    }
}
