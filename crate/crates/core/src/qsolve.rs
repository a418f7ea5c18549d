//! Multi-branch solution of the deformed Ruelle functional equation
//! `Σ_a exp_q̃(A(a x) + φ(a x) - φ(x) - c) = 1` and derived quantities.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::Serialize;

use crate::error::{QError, Result};
use crate::optim::solve_dense;
use crate::qfun::{dexp_q_ext, exp_q, exp_q_base, exp_q_ext, log_q, QParam};
use crate::ruelle::{
    equilibrium_markov, eval_index, leading_eig, q_entropy_markov, weighted_matrix, Jacobian,
    MarkovMeasure, TransferMatrix, EIG_TOL,
};
use crate::shift::{index_word, Potential};

/// Tuning of [`qruelle_solve`].
#[derive(Debug, Clone, Serialize)]
pub struct SolveOptions {
    pub continuation_steps: usize,
    pub min_continuation_step: f64,
    pub residual_tol: f64,
    pub dedup_tol: f64,
    pub lattice_phi: Vec<f64>,
    pub lattice_c_offsets: Vec<f64>,
    pub max_starts: usize,
    pub positivity_margin: f64,
    pub allow_boundary: bool,
    pub max_newton_iter: usize,
    pub seed: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            continuation_steps: 64,
            min_continuation_step: 1e-4,
            residual_tol: 1e-10,
            dedup_tol: 1e-7,
            lattice_phi: vec![-3.0, -1.5, 0.0, 1.5, 3.0],
            lattice_c_offsets: vec![0.0, -2.0, 2.0, -4.0, 4.0],
            max_starts: 2000,
            positivity_margin: 1e-12,
            allow_boundary: false,
            max_newton_iter: 100,
            seed: 0,
        }
    }
}

/// One solution branch `(φ, c)`.
#[derive(Debug, Clone, Serialize)]
pub struct SolveResult {
    /// `φ` over context words in lexicographic order, with `φ(first word) = 0`.
    pub phi: Vec<f64>,
    pub c: f64,
    /// Max-norm of the per-context defect.
    pub residual: f64,
    pub summands_positive: bool,
    /// Positive branch with some summand base inside the positivity margin.
    pub boundary: bool,
    /// Smallest summand base `1 + (1 - q̃)u`.
    pub min_base: f64,
    pub jacobian: Option<Jacobian>,
    pub branch_id: usize,
}

impl SolveResult {
    /// The gauge `∫ φ dν = 0` for a given probability vector `ν` on context words.
    pub fn phi_centered(&self, nu: &[f64]) -> Vec<f64> {
        let mean: f64 = self.phi.iter().zip(nu).map(|(a, b)| a * b).sum();
        self.phi.iter().map(|p| p - mean).collect()
    }
}

/// All branches found, plus continuation diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct SolveOutput {
    pub branches: Vec<SolveResult>,
    /// Homotopy parameter at which continuation broke down, if it did.
    pub continuation_breakdown: Option<f64>,
    pub starts: usize,
}

struct Problem {
    d: usize,
    k: usize,
    n: usize,
    a: Vec<f64>,
    q: QParam,
}

impl Problem {
    fn new(a: &Potential, q_tilde: QParam) -> Result<Self> {
        let d = a.d();
        let k = a.context_len();
        let n = d
            .checked_pow(k as u32)
            .filter(|&n| n <= 512)
            .ok_or_else(|| QError::SizeGuard(format!("{d}^{k} context words")))?;
        let values = (0..n * d).map(|y| eval_index(a, k + 1, y)).collect();
        Ok(Self {
            d,
            k,
            n,
            a: values,
            q: q_tilde,
        })
    }

    fn scaled(&self, t: f64) -> Self {
        Self {
            d: self.d,
            k: self.k,
            n: self.n,
            a: self.a.iter().map(|v| t * v).collect(),
            q: self.q,
        }
    }

    fn argument(&self, y: usize, phi: &[f64], c: f64) -> f64 {
        self.a[y] + phi[y / self.d] - phi[y % self.n] - c
    }

    fn residual(&self, phi: &[f64], c: f64) -> Result<Vec<f64>> {
        (0..self.n)
            .map(|x| {
                let mut s = 0.0;
                for a in 0..self.d {
                    let y = a * self.n + x;
                    s += exp_q_ext(self.argument(y, phi, c), self.q).map_err(|e| {
                        e.with_location(format!(
                            "symbol {} in context {}",
                            a + 1,
                            context_label(self.d, self.k, x)
                        ))
                    })?;
                }
                Ok(s - 1.0)
            })
            .collect()
    }

    fn unpack(&self, v: &[f64]) -> (Vec<f64>, f64) {
        let mut phi = vec![0.0; self.n];
        phi[1..].copy_from_slice(&v[..self.n - 1]);
        (phi, v[self.n - 1])
    }

    fn newton_system(&self, v: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let (phi, c) = self.unpack(v);
        let n = self.n;
        let mut r = vec![0.0; n];
        let mut jac = vec![0.0; n * n];
        for x in 0..n {
            let mut s = 0.0;
            for a in 0..self.d {
                let y = a * n + x;
                let u = self.argument(y, &phi, c);
                s += exp_q_ext(u, self.q)?;
                let du = dexp_q_ext(u, self.q)?;
                let target = y / self.d;
                if target > 0 {
                    jac[x * n + target - 1] += du;
                }
                if x > 0 {
                    jac[x * n + x - 1] -= du;
                }
                jac[x * n + n - 1] -= du;
            }
            r[x] = s - 1.0;
        }
        Ok((r, jac))
    }

    fn norm(&self, v: &[f64]) -> f64 {
        match self.newton_system(v) {
            Ok((r, _)) => r.iter().fold(0.0f64, |m, x| m.max(x.abs())),
            Err(_) => f64::INFINITY,
        }
    }

    /// Damped Newton iteration; returns the final point and its residual norm.
    fn newton(&self, v0: &[f64], max_iter: usize) -> Option<(Vec<f64>, f64)> {
        let mut v = v0.to_vec();
        let mut rn = self.norm(&v);
        if !rn.is_finite() {
            return None;
        }
        for _ in 0..max_iter {
            if rn <= 1e-15 {
                break;
            }
            let (r, jac) = self.newton_system(&v).ok()?;
            let neg: Vec<f64> = r.iter().map(|x| -x).collect();
            let delta = solve_dense(self.n, &jac, &neg)?;
            let mut step = 1.0;
            let mut improved = false;
            for _ in 0..40 {
                let cand: Vec<f64> = v.iter().zip(&delta).map(|(a, b)| a + step * b).collect();
                let cn = self.norm(&cand);
                if cn < rn {
                    v = cand;
                    rn = cn;
                    improved = true;
                    break;
                }
                step *= 0.5;
            }
            if !improved {
                break;
            }
            if v.iter().any(|x| !x.is_finite() || x.abs() > 1e8) {
                return None;
            }
        }
        Some((v, rn))
    }
}

fn context_label(d: usize, k: usize, x: usize) -> String {
    index_word(d, k, x).iter().map(|s| s.to_string()).collect::<Vec<_>>().join("")
}

/// Per-context defect `Σ_a exp_q̃(A(a x̄) + φ(a x̄) - φ(x̄) - c) - 1`.
///
/// When `1/(1 - q̃)` is a positive integer the q-exponential is evaluated by its
/// polynomial continuation, so every real argument is admissible; otherwise an
/// argument outside the domain raises [`QError::QExpDomain`] naming the symbol
/// and context.
pub fn qruelle_residual(a: &Potential, q_tilde: QParam, phi: &[f64], c: f64) -> Result<Vec<f64>> {
    let p = Problem::new(a, q_tilde)?;
    if phi.len() != p.n {
        return Err(QError::InvalidInput(format!(
            "phi has {} entries, expected {}",
            phi.len(),
            p.n
        )));
    }
    p.residual(phi, c)
}

/// Smallest base `1 + (1 - q̃)u` over all summands.
pub fn min_summand_base(a: &Potential, q_tilde: QParam, phi: &[f64], c: f64) -> Result<f64> {
    let p = Problem::new(a, q_tilde)?;
    Ok((0..p.n * p.d)
        .map(|y| summand_base(&p, y, phi, c))
        .fold(f64::INFINITY, f64::min))
}

fn summand_base(p: &Problem, y: usize, phi: &[f64], c: f64) -> f64 {
    if p.q.is_classical() {
        f64::INFINITY
    } else {
        exp_q_base(p.argument(y, phi, c), p.q)
    }
}

/// The constant `c` of the trivial solution for `A ≡ 0`: `-log_q̃(1/d)`.
pub fn trivial_c(d: usize, q_tilde: QParam) -> Result<f64> {
    Ok(-log_q(1.0 / d as f64, q_tilde)?)
}

fn build_result(p: &Problem, v: &[f64], opts: &SolveOptions) -> Result<SolveResult> {
    let (phi, c) = p.unpack(v);
    let r = p.residual(&phi, c)?;
    let residual = r.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let min_base = (0..p.n * p.d)
        .map(|y| summand_base(p, y, &phi, c))
        .fold(f64::INFINITY, f64::min);
    let margin = if opts.allow_boundary { 0.0 } else { opts.positivity_margin };
    let positive = min_base > margin || (opts.allow_boundary && min_base >= 0.0);
    let boundary = positive && min_base <= opts.positivity_margin;
    let jacobian = if positive && !boundary {
        let values = (0..p.n * p.d)
            .map(|y| exp_q(p.argument(y, &phi, c), p.q))
            .collect::<Result<Vec<f64>>>()?;
        Jacobian::new(p.d, p.k, values).ok()
    } else {
        None
    };
    Ok(SolveResult {
        phi,
        c,
        residual,
        summands_positive: positive,
        boundary,
        min_base,
        jacobian,
        branch_id: 0,
    })
}

/// Continuation along `t·A`, `t: 0 → 1`, from the trivial solution.
fn continuation(p: &Problem, opts: &SolveOptions) -> (Option<Vec<f64>>, Option<f64>) {
    let c0 = match trivial_c(p.d, p.q) {
        Ok(c) => c,
        Err(_) => return (None, Some(0.0)),
    };
    let mut v = vec![0.0; p.n];
    v[p.n - 1] = c0;
    let mut t = 0.0;
    let base_step = 1.0 / opts.continuation_steps.max(1) as f64;
    let mut step = base_step;
    while t < 1.0 {
        let t_next = (t + step).min(1.0);
        let prob = p.scaled(t_next);
        match prob.newton(&v, opts.max_newton_iter) {
            Some((w, rn)) if rn <= opts.residual_tol => {
                v = w;
                t = t_next;
                step = (step * 2.0).min(base_step);
            }
            _ => {
                step *= 0.5;
                if step < opts.min_continuation_step {
                    return (None, Some(t_next));
                }
            }
        }
    }
    (Some(v), None)
}

fn lattice_starts(p: &Problem, a_mean: f64, opts: &SolveOptions) -> Vec<Vec<f64>> {
    let c0 = trivial_c(p.d, p.q).unwrap_or(0.0);
    let mut centers = vec![c0];
    if (a_mean).abs() > 1e-12 {
        centers.push(c0 + a_mean);
    }
    let mut cs = Vec::new();
    for &center in &centers {
        for &off in &opts.lattice_c_offsets {
            cs.push(center + off);
        }
    }
    let dims = p.n - 1;
    let per = opts.lattice_phi.len().max(1);
    let phi_count = per.checked_pow(dims as u32).unwrap_or(usize::MAX);
    let total = phi_count.saturating_mul(cs.len());
    let mut indices: Vec<usize> = if total <= opts.max_starts {
        (0..total).collect()
    } else {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(opts.seed);
        let mut chosen = std::collections::BTreeSet::new();
        let mut pool: Vec<usize> = Vec::new();
        let cap = usize::try_from(1u64 << 40).unwrap_or(usize::MAX).min(usize::MAX / cs.len().max(1));
        while chosen.len() < opts.max_starts {
            use rand::Rng;
            let i = rng.gen_range(0..cs.len()) + cs.len() * rng.gen_range(0..phi_count.min(cap));
            if chosen.insert(i) {
                pool.push(i);
            }
        }
        pool.shuffle(&mut rng);
        pool
    };
    indices.sort_unstable();
    indices
        .into_iter()
        .map(|i| {
            let c = cs[i % cs.len()];
            let mut rest = i / cs.len();
            let mut v = Vec::with_capacity(p.n);
            for _ in 0..dims {
                v.push(opts.lattice_phi[rest % per]);
                rest /= per;
            }
            v.push(c);
            v
        })
        .collect()
}

fn run_starts(p: &Problem, starts: &[Vec<f64>], opts: &SolveOptions) -> Vec<Vec<f64>> {
    let one = |s: &Vec<f64>| -> Option<Vec<f64>> {
        let (v, rn) = p.newton(s, opts.max_newton_iter)?;
        (rn <= opts.residual_tol).then_some(v)
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        starts.par_iter().filter_map(one).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        starts.iter().filter_map(one).collect()
    }
}

fn dedup(mut roots: Vec<Vec<f64>>, tol: f64) -> Vec<Vec<f64>> {
    roots.sort_by(|a, b| {
        let n = a.len();
        b[n - 1]
            .total_cmp(&a[n - 1])
            .then_with(|| a[..n - 1].iter().zip(&b[..n - 1]).fold(std::cmp::Ordering::Equal, |o, (x, y)| o.then(x.total_cmp(y))))
    });
    let mut out: Vec<Vec<f64>> = Vec::new();
    for r in roots {
        let dup = out.iter().any(|o| {
            o.iter().zip(&r).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())) < tol
        });
        if !dup {
            out.push(r);
        }
    }
    out
}

/// Finds solution branches `(φ, c)` of the deformed Ruelle equation at index `q̃`.
///
/// Branches come from continuation along `t·A` starting at the trivial solution
/// and from Newton's method started on a lattice of initial guesses. Roots closer
/// than `dedup_tol` are merged, and branches are sorted by `c` descending.
pub fn qruelle_solve(a: &Potential, q_tilde: QParam, opts: &SolveOptions) -> Result<SolveOutput> {
    if a.memory() > 4 {
        return Err(QError::SizeGuard(format!("memory {} exceeds 4", a.memory())));
    }
    let p = Problem::new(a, q_tilde)?;
    let (cont, breakdown) = continuation(&p, opts);
    let a_mean = a.values().iter().sum::<f64>() / a.values().len() as f64;
    let starts = lattice_starts(&p, a_mean, opts);
    let mut roots = run_starts(&p, &starts, opts);
    if let Some(v) = cont {
        roots.push(v);
    }
    let roots = dedup(roots, opts.dedup_tol);
    let mut branches = roots
        .iter()
        .map(|v| build_result(&p, v, opts))
        .collect::<Result<Vec<_>>>()?;
    branches.retain(|b| b.residual <= opts.residual_tol);
    for (i, b) in branches.iter_mut().enumerate() {
        b.branch_id = i;
    }
    Ok(SolveOutput {
        branches,
        continuation_breakdown: breakdown,
        starts: starts.len() + 1,
    })
}

/// Newton refinement of a given `(φ, c)` for potential `A` (no branch search).
pub fn qruelle_refine(
    a: &Potential,
    q_tilde: QParam,
    phi: &[f64],
    c: f64,
    opts: &SolveOptions,
) -> Result<SolveResult> {
    let p = Problem::new(a, q_tilde)?;
    if phi.len() != p.n {
        return Err(QError::InvalidInput("phi has wrong length".into()));
    }
    let mut v: Vec<f64> = phi[1..].iter().map(|x| x - phi[0]).collect();
    v.push(c);
    let (w, rn) = p
        .newton(&v, opts.max_newton_iter)
        .ok_or_else(|| QError::NonConvergence("Newton refinement failed".into()))?;
    if rn > opts.residual_tol {
        return Err(QError::NonConvergence(format!("residual {rn} above tolerance")));
    }
    build_result(&p, &w, opts)
}

/// Closed-form branches for `q̃ = 1/2`, `a11 = a22 = 0`: `c` and the two values of `φ2`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TwoBranchClosedForm {
    pub c: f64,
    pub phi2: [f64; 2],
}

/// `c = (4 + √(16 - a12² + 2 a12 a21 - a21²))/2` and `φ2 = -2 - a21 + c ± √(4c - c²)`.
pub fn two_branch_closed_form(a12: f64, a21: f64) -> Result<TwoBranchClosedForm> {
    let disc = 16.0 - a12 * a12 + 2.0 * a12 * a21 - a21 * a21;
    if disc < 0.0 {
        return Err(QError::Domain(format!("negative discriminant {disc}")));
    }
    let c = 0.5 * (4.0 + disc.sqrt());
    let disc2 = 4.0 * c - c * c;
    if disc2 < 0.0 {
        return Err(QError::Domain(format!("negative discriminant {disc2}")));
    }
    let r = disc2.sqrt();
    Ok(TwoBranchClosedForm {
        c,
        phi2: [-2.0 - a21 + c + r, -2.0 - a21 + c - r],
    })
}

/// Closed form for `q̃ = 1/2` and the memory-one potential `a + s·b` on two symbols.
///
/// Returns `(φ2, c)` where `φ2` is the value of `φ` on the cylinder `[1]` when `φ`
/// vanishes on `[2]`.
pub fn memory_one_closed_form(a1: f64, a2: f64, b1: f64, b2: f64, s: f64) -> Result<(f64, f64)> {
    let (x1, x2) = (a1 + s * b1, a2 + s * b2);
    let c = 0.5 * (4.0 + x1 + x2);
    let disc = 16.0 - (x1 - x2) * (x1 - x2);
    if disc < 0.0 {
        return Err(QError::Domain(format!("negative square-root argument {disc}")));
    }
    Ok((0.5 * (x2 - x1 + disc.sqrt()), c))
}

/// `(a12, a22, φ2, c)` of the explicit two-symbol family with `a11 = a21 = 0`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ExplicitFamily {
    pub a12: f64,
    pub a22: f64,
    pub phi2: f64,
    pub c: f64,
}

impl ExplicitFamily {
    pub fn potential(&self) -> Potential {
        Potential::new(2, 2, vec![0.0, self.a12, 0.0, self.a22]).expect("finite family")
    }
}

/// Potential and solution built so that the summands equal `q1, 1-q1` and `1-q2, q2`.
pub fn explicit_family(q_tilde: QParam, q1: f64, q2: f64) -> Result<ExplicitFamily> {
    for (name, v) in [("q1", q1), ("q2", q2)] {
        if !(v > 0.0 && v < 1.0) {
            return Err(QError::InvalidInput(format!("{name} must lie in (0, 1), got {v}")));
        }
    }
    let c = -log_q(q1, q_tilde)?;
    let phi2 = log_q(1.0 - q1, q_tilde)? + c;
    let a22 = log_q(q2, q_tilde)? + c;
    let a12 = log_q(1.0 - q2, q_tilde)? + phi2 + c;
    Ok(ExplicitFamily { a12, a22, phi2, c })
}

/// `H_q(μ_J) + ∫ A dμ_J` for a positive branch at `q̃ = 2 - q`.
pub fn branch_variational_value(a: &Potential, q: QParam, branch: &SolveResult) -> Result<f64> {
    let j = branch
        .jacobian
        .as_ref()
        .ok_or(QError::NoPositiveBranch)?;
    let mu = equilibrium_markov(j)?;
    Ok(q_entropy_markov(&mu, q) + mu.integrate(a)?)
}

/// `-log_q(1/J)` as a potential over length-`(k+1)` words.
pub fn minus_log_q_inverse(j: &Jacobian, q: QParam) -> Result<Potential> {
    let values = j
        .values()
        .iter()
        .map(|&v| log_q(1.0 / v, q).map(|x| -x))
        .collect::<Result<Vec<f64>>>()?;
    Potential::new(j.d(), j.k() + 1, values)
}

/// The q-equilibrium selected among positive branches.
#[derive(Debug, Clone, Serialize)]
pub struct QEquilibrium {
    pub pressure: f64,
    pub mu: MarkovMeasure,
    pub branch: SolveResult,
    pub variational_value: f64,
    /// `c'` of the re-solve with potential `-log_q(1/J)`.
    pub bowen_c: f64,
}

/// Solves at `q̃ = 2 - q`, keeps positive branches, and selects the one with the
/// largest `H_q(μ_J) + ∫A dμ_J` (ties by branch id).
pub fn q_equilibrium(a: &Potential, q: QParam, opts: &SolveOptions) -> Result<QEquilibrium> {
    let q_tilde = q.dual();
    let out = qruelle_solve(a, q_tilde, opts)?;
    let mut best: Option<(f64, SolveResult)> = None;
    for b in out.branches.into_iter().filter(|b| b.jacobian.is_some()) {
        let v = branch_variational_value(a, q, &b)?;
        if best.as_ref().map_or(true, |(bv, _)| v > *bv + 1e-12) {
            best = Some((v, b));
        }
    }
    let (variational_value, branch) = best.ok_or(QError::NoPositiveBranch)?;
    let j = branch.jacobian.clone().ok_or(QError::NoPositiveBranch)?;
    let mu = equilibrium_markov(&j)?;
    let bowen = minus_log_q_inverse(&j, q)?;
    let re = qruelle_solve(&bowen, q_tilde, opts)?;
    let bowen_c = re
        .branches
        .iter()
        .filter_map(|b| {
            let jb = b.jacobian.as_ref()?;
            let dist = jb
                .values()
                .iter()
                .zip(j.values())
                .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
            Some((dist, b.c))
        })
        .min_by(|x, y| x.0.total_cmp(&y.0))
        .map(|(_, c)| c)
        .ok_or_else(|| QError::NonConvergence("Bowen re-solve found no positive branch".into()))?;
    Ok(QEquilibrium {
        pressure: branch.c,
        mu,
        branch,
        variational_value,
        bowen_c,
    })
}

/// `A_q = log(1 + (1-q)A)/(1-q)`, entrywise.
pub fn a_q_transform(a: &Potential, q: QParam) -> Result<Potential> {
    if q.is_classical() {
        return Ok(a.clone());
    }
    let s = 1.0 - q.value();
    if let Some(i) = a.values().iter().position(|&v| s * v <= -1.0) {
        return Err(QError::Domain(format!(
            "entry {i} = {} violates 1 + (1-q)A > 0",
            a.values()[i]
        )));
    }
    a.map(|v| (s * v).ln_1p() / s)
}

/// Matrix of `f ↦ Σ_a exp_q(A(a x)) f(a x)` on functions of context words.
pub fn q_transfer_matrix(a: &Potential, q: QParam) -> Result<TransferMatrix> {
    let k = a.context_len();
    let weights = (0..a.d().pow(k as u32 + 1))
        .map(|y| exp_q(eval_index(a, k + 1, y), q))
        .collect::<Result<Vec<f64>>>()?;
    weighted_matrix(a.d(), k, |y| weights[y])
}

/// `g = log_{2-q}(exp_q(a)·e^L) - L` with `L = a1 - a2 - C`.
pub fn bridge_general_g(a: f64, a1: f64, a2: f64, c: f64, q: QParam) -> Result<f64> {
    let l = a1 - a2 - c;
    let rhs = exp_q(a, q)? * l.exp();
    if !(rhs.is_finite() && rhs > 0.0) {
        return Err(QError::Domain(format!("right-hand side {rhs} outside the range")));
    }
    let mut g = log_q(rhs, q.dual())? - l;
    for _ in 0..3 {
        let u = g + l;
        let (val, der) = match (exp_q(u, q.dual()), crate::qfun::dexp_q(u, q.dual())) {
            (Ok(v), Ok(dv)) => (v, dv),
            _ => break,
        };
        let err = val - rhs;
        if err.abs() <= 1e-15 * rhs || der <= 0.0 {
            break;
        }
        let g_new = g - err / der;
        let ok = exp_q(g_new + l, q.dual()).map(|v| (v - rhs).abs() < err.abs()).unwrap_or(false);
        if !ok {
            break;
        }
        g = g_new;
    }
    Ok(g)
}

/// Closed form of `g` at `q = 1/2`: `2 - 4/((2 + a)√(e^L)) - L`.
pub fn bridge_half_g(a: f64, a1: f64, a2: f64, c: f64) -> Result<f64> {
    if !(2.0 + a > 0.0) {
        return Err(QError::Domain(format!("2 + a must be positive, got a = {a}")));
    }
    let l = a1 - a2 - c;
    Ok(2.0 - 4.0 / ((2.0 + a) * (0.5 * l).exp()) - l)
}

/// Potential `B` with its solution `(φ_B, c_B)` of the `q̃ = 3/2` equation built
/// from the classical eigendata of `A_{1/2}`.
#[derive(Debug, Clone, Serialize)]
pub struct Bridge {
    pub b: Potential,
    pub phi_b: Vec<f64>,
    pub c_b: f64,
    /// Max-norm defect of the `q̃ = 3/2` equation for `(B, φ_B, c_B)`.
    pub residual: f64,
}

/// Builds `B(y) = g(log h(y[..k]), log h(σy), log λ, A(y))` at `q = 1/2`.
pub fn bridge_half(a: &Potential) -> Result<Bridge> {
    let half = QParam::of(0.5);
    let a_half = a_q_transform(a, half)?;
    let eig = leading_eig(&crate::ruelle::transfer_matrix(&a_half)?, EIG_TOL)?;
    let (d, k) = (a.d(), a.context_len());
    let n = d.pow(k as u32);
    let log_h: Vec<f64> = eig.h.iter().map(|v| v.ln()).collect();
    let c_b = eig.lambda.ln();
    let values = (0..n * d)
        .map(|y| bridge_half_g(eval_index(a, k + 1, y), log_h[y / d], log_h[y % n], c_b))
        .collect::<Result<Vec<f64>>>()?;
    let b = Potential::new(d, k + 1, values)?;
    let r = qruelle_residual(&b, half.dual(), &log_h, c_b)?;
    let residual = r.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    Ok(Bridge {
        b,
        phi_b: log_h,
        c_b,
        residual,
    })
}

/// Finite-difference derivative of the solved constant along a direction.
#[derive(Debug, Clone, Serialize)]
pub struct PressureDerivative {
    /// Richardson-refined central difference.
    pub dpds: f64,
    pub central: f64,
    pub branch: SolveResult,
    /// `∫ J^{q̃-1}(v + φ' - φ'∘σ) dμ / ∫ J^{q̃-1} dμ` for positive branches.
    pub integral_formula: Option<f64>,
    pub integral_defect: Option<f64>,
}

/// `d/ds c(A + sB)` at `s = 0` along a tracked branch.
///
/// The branch at `s = 0` is `branch_id` (default: the first positive branch, or
/// branch 0 when none is positive); the roots at `s = ±h, ±h/2` are obtained by
/// Newton continuation from it.
pub fn pressure_derivative(
    a: &Potential,
    b: &Potential,
    q: QParam,
    h_step: f64,
    branch_id: Option<usize>,
    opts: &SolveOptions,
) -> Result<PressureDerivative> {
    if !(h_step > 0.0 && h_step.is_finite()) {
        return Err(QError::InvalidInput("h_step must be positive".into()));
    }
    let q_tilde = q.dual();
    let m = a.memory().max(b.memory());
    let a = a.with_memory(m)?;
    let b = b.with_memory(m)?;
    let out = qruelle_solve(&a, q_tilde, opts)?;
    let branch = match branch_id {
        Some(id) => out
            .branches
            .iter()
            .find(|br| br.branch_id == id)
            .cloned()
            .ok_or_else(|| QError::BranchTracking(format!("no branch {id}")))?,
        None => out
            .branches
            .iter()
            .find(|br| br.summands_positive)
            .or_else(|| out.branches.first())
            .cloned()
            .ok_or_else(|| QError::BranchTracking("no branch at s = 0".into()))?,
    };
    let track = |s: f64| -> Result<SolveResult> {
        let pot = a.add_scaled(&b, s)?;
        let mut cur_phi = branch.phi.clone();
        let mut cur_c = branch.c;
        let pieces = 4;
        let mut last = None;
        for i in 1..=pieces {
            let si = s * i as f64 / pieces as f64;
            let pi = a.add_scaled(&b, si)?;
            let r = qruelle_refine(&pi, q_tilde, &cur_phi, cur_c, opts)
                .map_err(|e| QError::BranchTracking(format!("at s = {si}: {e}")))?;
            cur_phi = r.phi.clone();
            cur_c = r.c;
            last = Some(r);
        }
        let r = last.ok_or_else(|| QError::BranchTracking("empty path".into()))?;
        let _ = pot;
        let jump = r
            .phi
            .iter()
            .zip(&branch.phi)
            .map(|(x, y)| (x - y).abs())
            .fold((r.c - branch.c).abs(), f64::max);
        if jump > 1e3 * s.abs().max(1e-12) {
            return Err(QError::BranchTracking(format!("branch jumped by {jump} at s = {s}")));
        }
        Ok(r)
    };
    let (p1, m1) = (track(h_step)?, track(-h_step)?);
    let (p2, m2) = (track(0.5 * h_step)?, track(-0.5 * h_step)?);
    let d1 = (p1.c - m1.c) / (2.0 * h_step);
    let d2 = (p2.c - m2.c) / h_step;
    let dpds = (4.0 * d2 - d1) / 3.0;

    let (integral_formula, integral_defect) = match &branch.jacobian {
        Some(j) => {
            let n = branch.phi.len();
            let d = a.d();
            let dphi: Vec<f64> = (0..n)
                .map(|i| {
                    let c1 = (p1.phi[i] - m1.phi[i]) / (2.0 * h_step);
                    let c2 = (p2.phi[i] - m2.phi[i]) / h_step;
                    (4.0 * c2 - c1) / 3.0
                })
                .collect();
            let mu = equilibrium_markov(j)?;
            let masses = mu.cylinder_masses(mu.k() + 1)?;
            let k = mu.k();
            let w_exp = q_tilde.value() - 1.0;
            let mut num = 0.0;
            let mut den = 0.0;
            for (y, &mass) in masses.iter().enumerate() {
                let w = mass * j.values()[y].powf(w_exp);
                num += w * (eval_index(&b, k + 1, y) + dphi[y / d] - dphi[y % n]);
                den += w;
            }
            let rhs = num / den;
            (Some(rhs), Some((rhs - dpds).abs()))
        }
        None => (None, None),
    };
    Ok(PressureDerivative {
        dpds,
        central: d1,
        branch,
        integral_formula,
        integral_defect,
    })
}
