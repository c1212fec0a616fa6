use thiserror::Error;

/// Errors raised by the learners, samplers and experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or inconsistent input (empty data, mismatched dimensions, bad parameters).
    #[error("invalid input: {0}")]
    Input(String),

    /// The weak learner never reached the promised edge.
    #[error("weak learner contract violated: best edge {best_edge} < required {required} after {attempts} call(s)")]
    Contract {
        attempts: usize,
        best_edge: f64,
        required: f64,
    },

    /// A classic boosting round whose hypothesis is no better than a coin flip.
    #[error("weak hypothesis has no advantage (weighted error {error})")]
    NoAdvantage { error: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Final margin below the guarantee. Never fires when the weak learner honours its contract.
    #[error("margin shortfall: achieved {achieved}, required {required}")]
    MarginShortfall { achieved: f64, required: f64 },

    #[error("sub-sample {index}: {source}")]
    SubSample {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("generator infeasible: {0}")]
    Infeasible(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    /// True for failures caused by a weak learner not delivering its edge.
    pub fn is_contract_violation(&self) -> bool {
        match self {
            Error::Contract { .. } | Error::NoAdvantage { .. } | Error::MarginShortfall { .. } => {
                true
            }
            Error::SubSample { source, .. } => source.is_contract_violation(),
            _ => false,
        }
    }

    /// Process exit code used by the CLI: 2 for input errors, 3 for contract violations.
    pub fn exit_code(&self) -> i32 {
        if self.is_contract_violation() {
            3
        } else {
            2
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
