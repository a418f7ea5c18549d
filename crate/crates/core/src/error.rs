use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QError {
    #[error("q-exponential domain violated: 1 + (1 - q) u <= 0 at u = {u}, q = {q}{}", location_suffix(.location))]
    QExpDomain {
        u: f64,
        q: f64,
        location: Option<String>,
    },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("size guard exceeded: {0}")]
    SizeGuard(String),
    #[error("no convergence: {0}")]
    NonConvergence(String),
    #[error("no branch with strictly positive summands was found")]
    NoPositiveBranch,
    #[error("branch tracking failed: {0}")]
    BranchTracking(String),
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
}

fn location_suffix(location: &Option<String>) -> String {
    match location {
        Some(loc) => format!(" ({loc})"),
        None => String::new(),
    }
}

impl QError {
    /// True for errors caused by inputs leaving a function's domain.
    pub fn is_domain(&self) -> bool {
        matches!(
            self,
            QError::QExpDomain { .. }
                | QError::Domain(_)
                | QError::InvalidInput(_)
                | QError::SizeGuard(_)
                | QError::Unsupported(_)
        )
    }

    /// True for errors caused by an iterative method failing to converge.
    pub fn is_nonconvergence(&self) -> bool {
        matches!(
            self,
            QError::NonConvergence(_) | QError::NoPositiveBranch | QError::BranchTracking(_)
        )
    }

    pub(crate) fn with_location(self, loc: impl Into<String>) -> Self {
        match self {
            QError::QExpDomain { u, q, .. } => QError::QExpDomain {
                u,
                q,
                location: Some(loc.into()),
            },
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, QError>;
