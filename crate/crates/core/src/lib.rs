//! Non-extensive (Tsallis) thermodynamic formalism on the one-sided full shift.

pub mod error;
pub mod optim;
pub mod qfun;
pub mod qsolve;
pub mod regression;
pub mod ruelle;
pub mod shift;
pub mod staticq;
pub mod subadd;
pub mod variational;

pub use error::{QError, Result};
pub use qfun::{exp_q, log_q, QParam};
pub use shift::{Potential, Word};
