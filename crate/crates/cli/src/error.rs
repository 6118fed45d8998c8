use std::fmt;

use cptree::analytic_bounds::BoundsError;
use cptree::exact_oracle::OracleError;
use cptree::simulator::SimError;
use cptree::walk_counts::WalkError;
use cptree::TreeError;

/// A failed run, classified by exit code.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags, config or input files; exit code 1.
    Usage(String),
    /// A solve, iteration or bracket did not produce a trustworthy number; 2.
    Numerical(String),
    /// A size or length limit was exceeded; 3.
    Capacity(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Numerical(_) => 2,
            Failure::Capacity(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (kind, msg) = match self {
            Failure::Usage(m) => ("usage error", m),
            Failure::Numerical(m) => ("numerical failure", m),
            Failure::Capacity(m) => ("limit exceeded", m),
        };
        write!(f, "{kind}: {msg}")
    }
}

impl From<BoundsError> for Failure {
    fn from(e: BoundsError) -> Self {
        match e {
            BoundsError::InvalidRate(_) | BoundsError::InvalidShape(_) | BoundsError::WeightCount { .. } => {
                Failure::Usage(e.to_string())
            }
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        match e {
            SimError::BracketFailure { .. } => Failure::Numerical(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<WalkError> for Failure {
    fn from(e: WalkError) -> Self {
        match e {
            WalkError::LimitExceeded { .. } => Failure::Capacity(e.to_string()),
            WalkError::OddLength(_) => Failure::Usage(e.to_string()),
        }
    }
}

impl From<OracleError> for Failure {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::TooLarge { .. } => Failure::Capacity(e.to_string()),
            OracleError::SolveFailure { .. } => Failure::Numerical(e.to_string()),
            OracleError::InvalidRate(_) => Failure::Usage(e.to_string()),
            OracleError::Walk(w) => w.into(),
        }
    }
}

impl From<TreeError> for Failure {
    fn from(e: TreeError) -> Self {
        match e {
            TreeError::CapacityExceeded { .. } => Failure::Capacity(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}
