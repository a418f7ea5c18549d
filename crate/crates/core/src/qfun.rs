//! q-deformed logarithm and exponential with their derivatives.

use serde::Serialize;

use crate::error::{QError, Result};

pub mod identities;

/// Default width of the band around `q = 1` treated with the classical log/exp.
pub const Q_TOL_DEFAULT: f64 = 1e-8;

/// Whether a deformation parameter is handled by the deformed or the classical formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Deformed,
    Classical,
}

/// Deformation parameter `q` with its classical-crossover tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QParam {
    q: f64,
    q_tol: f64,
}

impl QParam {
    pub fn new(q: f64) -> Result<Self> {
        Self::with_tol(q, Q_TOL_DEFAULT)
    }

    pub fn with_tol(q: f64, q_tol: f64) -> Result<Self> {
        if !q.is_finite() {
            return Err(QError::InvalidInput(format!("q must be finite, got {q}")));
        }
        if !(q_tol.is_finite() && q_tol >= 0.0) {
            return Err(QError::InvalidInput(format!(
                "q tolerance must be a nonnegative finite number, got {q_tol}"
            )));
        }
        Ok(Self { q, q_tol })
    }

    /// Panicking constructor for literals known to be finite.
    pub fn of(q: f64) -> Self {
        Self::new(q).expect("finite q")
    }

    pub fn value(&self) -> f64 {
        self.q
    }

    pub fn tol(&self) -> f64 {
        self.q_tol
    }

    pub fn regime(&self) -> Regime {
        if (self.q - 1.0).abs() <= self.q_tol {
            Regime::Classical
        } else {
            Regime::Deformed
        }
    }

    pub fn is_classical(&self) -> bool {
        self.regime() == Regime::Classical
    }

    /// The dual index `2 - q`.
    pub fn dual(&self) -> Self {
        Self {
            q: 2.0 - self.q,
            q_tol: self.q_tol,
        }
    }

    /// `n` when the exponent `1/(1-q)` is a positive integer `n`.
    ///
    /// For such `q` the q-exponential `(1 + (1-q)u)^n` is a polynomial and
    /// extends to the whole real line.
    pub fn polynomial_degree(&self) -> Option<u32> {
        if self.is_classical() {
            return None;
        }
        let n = 1.0 / (1.0 - self.q);
        let r = n.round();
        if r >= 1.0 && r <= 64.0 && (n - r).abs() <= 1e-12 * r.max(1.0) {
            Some(r as u32)
        } else {
            None
        }
    }
}

/// `log_q(u) = (u^{1-q} - 1)/(1-q)`, the natural log in the classical regime.
pub fn log_q(u: f64, q: QParam) -> Result<f64> {
    if !(u.is_finite() && u > 0.0) {
        return Err(QError::Domain(format!("log_q requires u > 0, got {u}")));
    }
    if q.is_classical() {
        return Ok(u.ln());
    }
    let a = 1.0 - q.value();
    Ok((a * u.ln()).exp_m1() / a)
}

/// The base `1 + (1-q)u` of the q-exponential.
pub fn exp_q_base(u: f64, q: QParam) -> f64 {
    1.0 + (1.0 - q.value()) * u
}

/// `exp_q(u) = (1 + (1-q)u)^{1/(1-q)}`, the natural exp in the classical regime.
///
/// Fails with [`QError::QExpDomain`] when `1 + (1-q)u <= 0`.
pub fn exp_q(u: f64, q: QParam) -> Result<f64> {
    if !u.is_finite() {
        return Err(QError::Domain(format!("exp_q requires finite u, got {u}")));
    }
    if q.is_classical() {
        return Ok(u.exp());
    }
    let a = 1.0 - q.value();
    if a * u <= -1.0 {
        return Err(QError::QExpDomain {
            u,
            q: q.value(),
            location: None,
        });
    }
    Ok(((a * u).ln_1p() / a).exp())
}

/// `exp_q` extended by its polynomial continuation when `1/(1-q)` is a positive integer.
///
/// Equal to [`exp_q`] on its domain. Outside the domain it returns `base^n`
/// when `q` has a polynomial degree `n`, and a domain error otherwise.
pub fn exp_q_ext(u: f64, q: QParam) -> Result<f64> {
    match exp_q(u, q) {
        Err(QError::QExpDomain { .. }) if q.polynomial_degree().is_some() => {
            let n = q.polynomial_degree().unwrap_or(1) as i32;
            Ok(exp_q_base(u, q).powi(n))
        }
        other => other,
    }
}

/// Derivative of `exp_q`: `exp_q(u)^q`.
pub fn dexp_q(u: f64, q: QParam) -> Result<f64> {
    let e = exp_q(u, q)?;
    if q.is_classical() {
        return Ok(e);
    }
    Ok(e.powf(q.value()))
}

/// Derivative of [`exp_q_ext`]: `base^{n-1}` on the continuation.
pub fn dexp_q_ext(u: f64, q: QParam) -> Result<f64> {
    match dexp_q(u, q) {
        Err(QError::QExpDomain { .. }) if q.polynomial_degree().is_some() => {
            let n = q.polynomial_degree().unwrap_or(1) as i32;
            Ok(exp_q_base(u, q).powi(n - 1))
        }
        other => other,
    }
}

/// Derivative of `log_q`: `u^{-q}`.
pub fn dlog_q(u: f64, q: QParam) -> Result<f64> {
    if !(u.is_finite() && u > 0.0) {
        return Err(QError::Domain(format!("dlog_q requires u > 0, got {u}")));
    }
    if q.is_classical() {
        return Ok(1.0 / u);
    }
    Ok(u.powf(-q.value()))
}
