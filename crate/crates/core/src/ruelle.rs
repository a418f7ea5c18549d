//! Classical thermodynamic formalism for locally constant potentials.

use serde::Serialize;

use crate::error::{QError, Result};
use crate::optim::{bfgs, fixed_probability_vector};
use crate::qfun::{log_q, QParam};
use crate::shift::{context_len, Potential};

/// Largest memory accepted by [`transfer_matrix`].
pub const MAX_TRANSFER_MEMORY: usize = 6;
/// Largest number of context words accepted by dense routines.
pub const MAX_STATES: usize = 4096;

/// Value of `A` on the length-`len` word with index `idx` (requires `len >= m`).
pub(crate) fn eval_index(a: &Potential, len: usize, idx: usize) -> f64 {
    let drop = a.d().pow((len - a.memory()) as u32);
    a.values()[idx / drop]
}

/// The transfer operator `L_A f(x) = Σ_a e^{A(ax)} f(ax)` on functions of the
/// first `k = max(m-1, 1)` symbols, as a dense row-major matrix over context words.
#[derive(Debug, Clone, Serialize)]
pub struct TransferMatrix {
    pub d: usize,
    pub k: usize,
    pub entries: Vec<f64>,
}

impl TransferMatrix {
    pub fn states(&self) -> usize {
        self.d.pow(self.k as u32)
    }

    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        let n = self.states();
        (0..n)
            .map(|i| (0..n).map(|j| self.entries[i * n + j] * f[j]).sum())
            .collect()
    }

    pub fn apply_left(&self, nu: &[f64]) -> Vec<f64> {
        let n = self.states();
        (0..n)
            .map(|j| (0..n).map(|i| nu[i] * self.entries[i * n + j]).sum())
            .collect()
    }
}

fn check_size(d: usize, k: usize) -> Result<usize> {
    let n = d
        .checked_pow(k as u32)
        .filter(|&n| n <= MAX_STATES)
        .ok_or_else(|| QError::SizeGuard(format!("{d}^{k} context words")))?;
    Ok(n)
}

/// Builds the matrix of `f ↦ Σ_a w(a x) f(a x)` for weights over length-`(k+1)` words.
pub(crate) fn weighted_matrix(d: usize, k: usize, weight: impl Fn(usize) -> f64) -> Result<TransferMatrix> {
    let n = check_size(d, k)?;
    let mut entries = vec![0.0; n * n];
    for x in 0..n {
        for a in 0..d {
            let y = a * n + x;
            entries[x * n + y / d] += weight(y);
        }
    }
    Ok(TransferMatrix { d, k, entries })
}

/// The transfer matrix of `A`.
pub fn transfer_matrix(a: &Potential) -> Result<TransferMatrix> {
    if a.memory() > MAX_TRANSFER_MEMORY {
        return Err(QError::SizeGuard(format!(
            "memory {} exceeds {MAX_TRANSFER_MEMORY}",
            a.memory()
        )));
    }
    let k = a.context_len();
    weighted_matrix(a.d(), k, |y| eval_index(a, k + 1, y).exp())
}

/// Leading eigenvalue with right eigenvector `h` and left eigenvector `ν`,
/// normalized by `Σ ν = 1` and `Σ h ν = 1`.
#[derive(Debug, Clone, Serialize)]
pub struct Eigendata {
    pub lambda: f64,
    pub h: Vec<f64>,
    pub nu: Vec<f64>,
    pub iterations: usize,
}

fn power_iterate(
    n: usize,
    step: &dyn Fn(&[f64]) -> Vec<f64>,
    tol: f64,
    cap: usize,
) -> Result<(f64, Vec<f64>, usize)> {
    let mut v = vec![1.0 / n as f64; n];
    let mut lambda_prev = f64::NAN;
    for it in 1..=cap {
        let w = step(&v);
        let s: f64 = w.iter().sum();
        if !(s.is_finite() && s > 0.0) {
            return Err(QError::NonConvergence("power iteration degenerated".into()));
        }
        let lambda = s / v.iter().sum::<f64>();
        let next: Vec<f64> = w.iter().map(|x| x / s).collect();
        let resid = step(&next)
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - lambda * b).abs())
            .fold(0.0, f64::max);
        let vmax = next.iter().copied().fold(0.0, f64::max);
        v = next;
        if (lambda - lambda_prev).abs() < tol * lambda && resid <= tol * lambda * vmax {
            return Ok((lambda, v, it));
        }
        lambda_prev = lambda;
    }
    Err(QError::NonConvergence(format!(
        "power iteration did not converge in {cap} iterations"
    )))
}

/// Leading eigendata of a primitive nonnegative matrix by power iteration.
pub fn leading_eig(m: &TransferMatrix, tol: f64) -> Result<Eigendata> {
    let n = m.states();
    let cap = 1_000_000;
    let (lambda, mut h, it1) = power_iterate(n, &|v| m.apply(v), tol, cap)?;
    let (_, mut nu, it2) = power_iterate(n, &|v| m.apply_left(v), tol, cap)?;
    if h.iter().chain(nu.iter()).any(|&x| !(x > 0.0)) {
        return Err(QError::NonConvergence(
            "eigenvector not strictly positive".into(),
        ));
    }
    let s: f64 = nu.iter().sum();
    nu.iter_mut().for_each(|x| *x /= s);
    let hn: f64 = h.iter().zip(&nu).map(|(a, b)| a * b).sum();
    h.iter_mut().for_each(|x| *x /= hn);
    Ok(Eigendata {
        lambda,
        h,
        nu,
        iterations: it1.max(it2),
    })
}

/// Default tolerance of [`leading_eig`].
pub const EIG_TOL: f64 = 1e-13;

/// Topological pressure `P(A) = log λ_A`.
pub fn classical_pressure(a: &Potential) -> Result<f64> {
    Ok(leading_eig(&transfer_matrix(a)?, EIG_TOL)?.lambda.ln())
}

/// A Jacobian: positive table over length-`(k+1)` words with `Σ_a J(a x̄) = 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Jacobian {
    d: usize,
    k: usize,
    values: Vec<f64>,
}

/// Tolerance on `Σ_a J(a x̄) = 1`.
pub const JACOBIAN_TOL: f64 = 1e-10;

impl Jacobian {
    pub fn new(d: usize, k: usize, values: Vec<f64>) -> Result<Self> {
        let n = check_size(d, k)?;
        if values.len() != n * d {
            return Err(QError::InvalidInput(format!(
                "Jacobian table length {} != d^(k+1) = {}",
                values.len(),
                n * d
            )));
        }
        if values.iter().any(|&v| !(v > 0.0 && v <= 1.0 + JACOBIAN_TOL)) {
            return Err(QError::InvalidInput("Jacobian entries must lie in (0, 1]".into()));
        }
        let j = Self { d, k, values };
        let dev = j.max_row_defect();
        if dev > JACOBIAN_TOL {
            return Err(QError::InvalidInput(format!(
                "Jacobian preimage sums deviate from 1 by {dev}"
            )));
        }
        Ok(j)
    }

    /// Jacobian `exp(log_j)` of a normalized potential of memory at most `k+1`.
    pub fn from_log(log_j: &Potential) -> Result<Self> {
        let k = context_len(log_j.memory());
        let lifted = log_j.with_memory(k + 1)?;
        Self::new(log_j.d(), k, lifted.values().iter().map(|v| v.exp()).collect())
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `max_x |Σ_a J(a x̄) - 1|`.
    pub fn max_row_defect(&self) -> f64 {
        row_defect(self.d, self.k, &self.values)
    }

    pub fn log_potential(&self) -> Potential {
        Potential::new(self.d, self.k + 1, self.values.iter().map(|v| v.ln()).collect())
            .expect("positive Jacobian entries have finite logs")
    }
}

/// `max_x |Σ_a w(a x̄) - 1|` over context words.
pub(crate) fn row_defect(d: usize, k: usize, w: &[f64]) -> f64 {
    let n = d.pow(k as u32);
    (0..n)
        .map(|x| ((0..d).map(|a| w[a * n + x]).sum::<f64>() - 1.0).abs())
        .fold(0.0, f64::max)
}

/// Normalization of a potential: `log J = A + log h - log h∘σ - log λ`.
#[derive(Debug, Clone, Serialize)]
pub struct Normalized {
    pub log_j: Potential,
    pub lambda: f64,
    pub h: Vec<f64>,
}

/// Normalizes `A` by its leading eigendata.
pub fn normalize(a: &Potential) -> Result<Normalized> {
    let m = transfer_matrix(a)?;
    let eig = leading_eig(&m, EIG_TOL)?;
    let (d, k) = (a.d(), a.context_len());
    let n = d.pow(k as u32);
    let ll = eig.lambda.ln();
    let log_h: Vec<f64> = eig.h.iter().map(|v| v.ln()).collect();
    let values: Vec<f64> = (0..n * d)
        .map(|y| eval_index(a, k + 1, y) + log_h[y / d] - log_h[y % n] - ll)
        .collect();
    Ok(Normalized {
        log_j: Potential::new(d, k + 1, values)?,
        lambda: eig.lambda,
        h: eig.h,
    })
}

/// A stationary Markov measure of memory `k`.
///
/// `transitions[w·b] = P(w → w[1..]·b)` for context words `w` of length `k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarkovMeasure {
    d: usize,
    k: usize,
    transitions: Vec<f64>,
    pi: Vec<f64>,
}

impl MarkovMeasure {
    /// Builds the stationary chain from row-stochastic transitions over length-`(k+1)` words.
    pub fn from_transitions(d: usize, k: usize, transitions: Vec<f64>) -> Result<Self> {
        let n = check_size(d, k)?;
        if transitions.len() != n * d {
            return Err(QError::InvalidInput("transition table has wrong length".into()));
        }
        if transitions.iter().any(|&p| !(p.is_finite() && p >= 0.0)) {
            return Err(QError::InvalidInput("transition probabilities must be nonnegative".into()));
        }
        for w in 0..n {
            let s: f64 = transitions[w * d..(w + 1) * d].iter().sum();
            if (s - 1.0).abs() > 1e-12 {
                return Err(QError::InvalidInput(format!("row {w} sums to {s}")));
            }
        }
        let mut t = vec![0.0; n * n];
        for w in 0..n {
            for b in 0..d {
                let next = (w * d + b) % n;
                t[next * n + w] += transitions[w * d + b];
            }
        }
        let pi = fixed_probability_vector(n, &t).ok_or_else(|| {
            QError::NonConvergence("stationary vector solve failed".into())
        })?;
        Ok(Self {
            d,
            k,
            transitions,
            pi,
        })
    }

    /// Two-state chain with off-diagonal transition probabilities `P12`, `P21`.
    pub fn two_state(p12: f64, p21: f64) -> Result<Self> {
        Self::from_transitions(2, 1, vec![1.0 - p12, p12, p21, 1.0 - p21])
    }

    /// Bernoulli measure of `p`, represented with memory `k`.
    pub fn bernoulli(p: &[f64], k: usize) -> Result<Self> {
        let d = p.len();
        let n = check_size(d, k)?;
        let transitions = (0..n * d).map(|y| p[y % d]).collect();
        Self::from_transitions(d, k, transitions)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn transitions(&self) -> &[f64] {
        &self.transitions
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    /// Dense row-stochastic matrix over context words.
    pub fn transition_matrix(&self) -> Vec<Vec<f64>> {
        let n = self.pi.len();
        let mut p = vec![vec![0.0; n]; n];
        for w in 0..n {
            for b in 0..self.d {
                p[w][(w * self.d + b) % n] += self.transitions[w * self.d + b];
            }
        }
        p
    }

    /// `max_v |(πP)(v) - π(v)|`.
    pub fn stationarity_defect(&self) -> f64 {
        let n = self.pi.len();
        let mut out = vec![0.0; n];
        for w in 0..n {
            for b in 0..self.d {
                out[(w * self.d + b) % n] += self.pi[w] * self.transitions[w * self.d + b];
            }
        }
        out.iter()
            .zip(&self.pi)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Masses of all cylinders of length `len >= k` in lexicographic order.
    pub fn cylinder_masses(&self, len: usize) -> Result<Vec<f64>> {
        if len < self.k {
            let full = self.cylinder_masses(self.k)?;
            let drop = self.d.pow((self.k - len) as u32);
            let mut out = vec![0.0; full.len() / drop];
            for (i, v) in full.iter().enumerate() {
                out[i / drop] += v;
            }
            return Ok(out);
        }
        let total = self
            .d
            .checked_pow(len as u32)
            .filter(|&t| t <= 1 << 22)
            .ok_or_else(|| QError::SizeGuard(format!("{}^{len} cylinders", self.d)))?;
        let n = self.pi.len();
        let mut masses = self.pi.clone();
        let mut cur_len = self.k;
        while cur_len < len {
            let mut next = Vec::with_capacity(masses.len() * self.d);
            for (i, &m) in masses.iter().enumerate() {
                let w = i % n;
                for b in 0..self.d {
                    next.push(m * self.transitions[w * self.d + b]);
                }
            }
            masses = next;
            cur_len += 1;
        }
        debug_assert_eq!(masses.len(), total);
        Ok(masses)
    }

    /// Jacobian `J(y) = μ[y]/μ[σy]` on length-`(k+1)` words.
    pub fn jacobian_table(&self) -> Vec<f64> {
        let n = self.pi.len();
        (0..n * self.d)
            .map(|y| {
                let den = self.pi[y % n];
                if den > 0.0 {
                    self.pi[y / self.d] * self.transitions[y] / den
                } else {
                    0.0
                }
            })
            .collect()
    }

    pub fn jacobian(&self) -> Result<Jacobian> {
        Jacobian::new(self.d, self.k, self.jacobian_table())
    }

    /// Integral of a potential of memory at most `k+1`... or any memory, via cylinder masses.
    pub fn integrate(&self, a: &Potential) -> Result<f64> {
        let len = a.memory().max(self.k);
        let masses = self.cylinder_masses(len)?;
        Ok(masses
            .iter()
            .enumerate()
            .map(|(i, &m)| m * eval_index(a, len, i))
            .sum())
    }

    /// Largest total-variation distance between corresponding transition rows.
    pub fn row_tv_distance(&self, other: &MarkovMeasure) -> Result<f64> {
        if self.d != other.d || self.k != other.k {
            return Err(QError::InvalidInput("measures have different shapes".into()));
        }
        let d = self.d;
        Ok((0..self.pi.len())
            .map(|w| {
                0.5 * (0..d)
                    .map(|b| (self.transitions[w * d + b] - other.transitions[w * d + b]).abs())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max))
    }

    /// The same measure described with a longer memory.
    pub fn with_memory(&self, k: usize) -> Result<Self> {
        if k < self.k {
            return Err(QError::InvalidInput("cannot shorten memory".into()));
        }
        let n_old = self.pi.len();
        let n = check_size(self.d, k)?;
        let transitions = (0..n * self.d)
            .map(|y| {
                let w = (y / self.d) % n_old;
                self.transitions[w * self.d + y % self.d]
            })
            .collect();
        let pi = self.cylinder_masses(k)?;
        Ok(Self {
            d: self.d,
            k,
            transitions,
            pi,
        })
    }
}

/// Equilibrium (Gibbs) measure `μ_{log J}` of a Jacobian.
pub fn equilibrium_markov(j: &Jacobian) -> Result<MarkovMeasure> {
    let (d, k) = (j.d, j.k);
    let n = d.pow(k as u32);
    let mut t = vec![0.0; n * n];
    for y in 0..n * d {
        t[(y / d) * n + y % n] += j.values[y];
    }
    let pi = fixed_probability_vector(n, &t)
        .ok_or_else(|| QError::NonConvergence("stationary vector solve failed".into()))?;
    if pi.iter().any(|&p| !(p > 0.0)) {
        return Err(QError::NonConvergence("stationary vector not positive".into()));
    }
    let transitions: Vec<f64> = (0..n * d)
        .map(|y| j.values[y] * pi[y % n] / pi[y / d])
        .collect();
    let mut mu = MarkovMeasure {
        d,
        k,
        transitions,
        pi,
    };
    for w in 0..n {
        let s: f64 = mu.transitions[w * d..(w + 1) * d].iter().sum();
        mu.transitions[w * d..(w + 1) * d].iter_mut().for_each(|p| *p /= s);
    }
    Ok(mu)
}

/// Kolmogorov–Sinai entropy `-Σ μ[y] log J(y)`.
pub fn ks_entropy(mu: &MarkovMeasure) -> f64 {
    let masses = mu.cylinder_masses(mu.k + 1).expect("sized at construction");
    masses
        .iter()
        .zip(mu.jacobian_table())
        .filter(|(&m, _)| m > 0.0)
        .map(|(&m, j)| -m * j.ln())
        .sum()
}

/// Dynamical q-entropy `Σ μ[y] log_q(1/J(y))` of a Markov measure.
pub fn q_entropy_markov(mu: &MarkovMeasure, q: QParam) -> f64 {
    let masses = mu.cylinder_masses(mu.k + 1).expect("sized at construction");
    masses
        .iter()
        .zip(mu.jacobian_table())
        .filter(|(&m, _)| m > 0.0)
        .map(|(&m, j)| m * log_q(1.0 / j, q).unwrap_or(0.0))
        .sum()
}

/// Relative q-entropy `∫ log_q(1/J_2) dμ_1 - ∫ log_q(1/J_1) dμ_1`.
pub fn relative_q_entropy(mu1: &MarkovMeasure, mu2: &MarkovMeasure, q: QParam) -> Result<f64> {
    if mu1.d != mu2.d || mu1.k != mu2.k {
        return Err(QError::InvalidInput("measures have different shapes".into()));
    }
    let masses = mu1.cylinder_masses(mu1.k + 1)?;
    let (j1, j2) = (mu1.jacobian_table(), mu2.jacobian_table());
    let mut total = 0.0;
    for (i, &m) in masses.iter().enumerate() {
        if m > 0.0 {
            if !(j2[i] > 0.0) {
                return Err(QError::Domain("second measure vanishes where the first does not".into()));
            }
            total += m * (log_q(1.0 / j2[i], q)? - log_q(1.0 / j1[i], q)?);
        }
    }
    Ok(total)
}

/// Classical Kullback–Leibler divergence rate `Σ π_1 P_1 log(P_1/P_2)`.
pub fn kl_rate(mu1: &MarkovMeasure, mu2: &MarkovMeasure) -> Result<f64> {
    if mu1.d != mu2.d || mu1.k != mu2.k {
        return Err(QError::InvalidInput("measures have different shapes".into()));
    }
    let d = mu1.d;
    let mut total = 0.0;
    for (w, &p) in mu1.pi.iter().enumerate() {
        for b in 0..d {
            let (a, c) = (mu1.transitions[w * d + b], mu2.transitions[w * d + b]);
            if a > 0.0 {
                total += p * a * (a / c).ln();
            }
        }
    }
    Ok(total)
}

/// Outcome of the variational q-entropy minimization.
#[derive(Debug, Clone, Serialize)]
pub struct VariationalEntropy {
    pub value: f64,
    /// Minimizing `log u` table over words of length `u_memory`.
    pub log_u: Vec<f64>,
    pub restarts: usize,
    pub converged_restarts: usize,
}

/// Number of random restarts in [`q_entropy_variational`].
pub const VARIATIONAL_RESTARTS: usize = 20;

/// `inf_u ∫ log_q(Σ_a u(ax)/u(x)) dμ` over positive `u` of memory `u_memory`, where
/// `masses` are the masses of the length-`u_memory` cylinders of an invariant measure.
pub fn q_entropy_variational_masses(
    d: usize,
    u_memory: usize,
    masses: &[f64],
    q: QParam,
    seed: u64,
) -> Result<VariationalEntropy> {
    use rand::{Rng, SeedableRng};
    if !(1..=4).contains(&u_memory) {
        return Err(QError::InvalidInput(format!("u_memory must be 1..=4, got {u_memory}")));
    }
    let n = d.pow(u_memory as u32);
    if masses.len() != n {
        return Err(QError::InvalidInput("mass table has wrong length".into()));
    }
    let shift = d.pow(u_memory as u32 - 1);
    let s = 1.0 - q.value();
    let classical = q.is_classical();
    let objective = |theta: &[f64]| -> (f64, Vec<f64>) {
        let mut val = 0.0;
        let mut grad = vec![0.0; n];
        for x in 0..n {
            let m = masses[x];
            if m <= 0.0 {
                continue;
            }
            let pre = x / d;
            let mx = (0..d)
                .map(|a| theta[a * shift + pre])
                .fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = (0..d).map(|a| (theta[a * shift + pre] - mx).exp()).sum();
            let t = mx + z.ln() - theta[x];
            let (g, dg) = if classical {
                (t, 1.0)
            } else {
                let e = (s * t).exp();
                ((s * t).exp_m1() / s, e)
            };
            val += m * g;
            for a in 0..d {
                let idx = a * shift + pre;
                grad[idx] += m * dg * (theta[idx] - mx).exp() / z;
            }
            grad[x] -= m * dg;
        }
        (val, grad)
    };
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut converged = 0;
    for r in 0..VARIATIONAL_RESTARTS {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed.wrapping_add(r as u64));
        let x0: Vec<f64> = if r == 0 {
            vec![0.0; n]
        } else {
            (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect()
        };
        let res = bfgs(&objective, &x0, 1e-12, 2000);
        if res.converged {
            converged += 1;
        }
        if best.as_ref().map_or(true, |(v, _)| res.value < *v) {
            best = Some((res.value, res.x));
        }
    }
    let (value, log_u) = best.ok_or_else(|| QError::NonConvergence("no restart finished".into()))?;
    Ok(VariationalEntropy {
        value,
        log_u,
        restarts: VARIATIONAL_RESTARTS,
        converged_restarts: converged,
    })
}

/// Variational q-entropy of a Markov measure with test functions of memory `u_memory`.
pub fn q_entropy_variational(mu: &MarkovMeasure, q: QParam, u_memory: usize) -> Result<VariationalEntropy> {
    let masses = mu.cylinder_masses(u_memory)?;
    q_entropy_variational_masses(mu.d, u_memory, &masses, q, 0)
}
