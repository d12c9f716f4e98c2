//! Exit-code classification: 1 usage, 2 data, 3 backend.

use seren_core::calibrate::CalibrateError;
use seren_core::corpus::CorpusError;
use seren_core::judge::JudgeError;
use seren_core::metrics::MetricsError;
use seren_core::recsys::RecsysError;
use seren_core::split::SplitError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    Usage = 1,
    Data = 2,
    Backend = 3,
}

#[derive(Debug)]
pub struct CliError {
    pub kind: ExitKind,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self { kind: ExitKind::Usage, message: message.into() }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Self { kind: ExitKind::Data, message: message.into() }
    }

    pub fn backend(message: impl Into<String>) -> Self {
        Self { kind: ExitKind::Backend, message: message.into() }
    }
}

fn chain(err: &dyn std::error::Error) -> String {
    let mut message = err.to_string();
    let mut source = err.source();
    while let Some(s) = source {
        message.push_str(": ");
        message.push_str(&s.to_string());
        source = s.source();
    }
    message
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        CliError::data(chain(&e))
    }
}

impl From<SplitError> for CliError {
    fn from(e: SplitError) -> Self {
        CliError::data(chain(&e))
    }
}

impl From<RecsysError> for CliError {
    fn from(e: RecsysError) -> Self {
        CliError::data(chain(&e))
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        CliError::data(chain(&e))
    }
}

impl From<JudgeError> for CliError {
    fn from(e: JudgeError) -> Self {
        if e.is_backend() {
            CliError::backend(chain(&e))
        } else {
            CliError::data(chain(&e))
        }
    }
}

impl From<CalibrateError> for CliError {
    fn from(e: CalibrateError) -> Self {
        match &e {
            CalibrateError::Backend { .. } => CliError::backend(chain(&e)),
            _ => CliError::data(chain(&e)),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::data(e.to_string())
    }
}
