use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("{0}")]
    Core(#[from] splitgt_core::Error),
    #[error("trial {trial}: {source}")]
    Trial {
        trial: usize,
        #[source]
        source: splitgt_core::Error,
    },
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Harness(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl BenchError {
    pub(crate) fn in_trial(self, trial: usize) -> Self {
        match self {
            BenchError::Core(source) => BenchError::Trial { trial, source },
            other => other,
        }
    }

    /// Parameter and usage problems, as opposed to failures while running.
    pub fn is_usage(&self) -> bool {
        matches!(self, BenchError::Usage(_) | BenchError::Core(_))
    }
}
