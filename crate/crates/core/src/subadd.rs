//! Asymptotic q-pressure through the non-additive sequence `φ_n = log exp_q(S_n A)`.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{QError, Result};
use crate::qfun::{exp_q_base, QParam};
use crate::ruelle::{eval_index, ks_entropy, MarkovMeasure};
use crate::shift::{index_word, preimages, word_index, Potential, Word};
use crate::staticq::ProbVector;

/// Quantum used to merge Birkhoff sums into one bucket.
pub const BUCKET_QUANTUM: f64 = 1e-9;

/// Largest `n` accepted by [`frak_l_n`] and [`asymptotic_pressure`].
pub const MAX_STEPS: usize = 5000;

/// Largest `n` for which [`frak_l_n_enumerate`] visits every preimage.
pub const MAX_ENUMERATION: usize = 24;

/// `log(1 + (1-q)s)/(1-q)`, the q-logarithm of `exp_q(s)`.
pub fn log_exp_q(s: f64, q: QParam) -> Result<f64> {
    if q.is_classical() {
        return Ok(s);
    }
    let base = exp_q_base(s, q);
    if !(base > 0.0) {
        return Err(QError::Domain(format!(
            "1 + (1-q)S = {base} is not positive (S = {s}, q = {})",
            q.value()
        )));
    }
    let a = 1.0 - q.value();
    Ok((a * s).ln_1p() / a)
}

/// `φ_n(w·tail) = log(1 + (1-q) S_n A(w·tail))/(1-q)` with `n = |w|`.
pub fn phi_n(a: &Potential, q: QParam, w: &Word, tail: &Word) -> Result<f64> {
    log_exp_q(a.birkhoff_sum(w, tail)?, q)
}

/// `φ_m∘σ^n + φ_n - φ_{m+n}` evaluated at `w·tail` with `|w| = m + n`.
pub fn subadditivity_slack(a: &Potential, q: QParam, w: &Word, n: usize, tail: &Word) -> Result<f64> {
    if n > w.len() {
        return Err(QError::InvalidInput("n exceeds the word length".into()));
    }
    let head = Word::new(w.d(), w.symbols()[..n].to_vec())?;
    let rest = Word::new(w.d(), w.symbols()[n..].to_vec())?;
    let rest_tail = rest.concat(tail);
    let phi_head = phi_n(a, q, &head, &rest_tail)?;
    let phi_rest = phi_n(a, q, &rest, tail)?;
    let phi_all = phi_n(a, q, w, tail)?;
    Ok(phi_head + phi_rest - phi_all)
}

/// Birkhoff sums of all preimages grouped by context and quantized sum.
#[derive(Debug, Clone)]
pub struct SumBuckets {
    d: usize,
    k: usize,
    steps: usize,
    states: Vec<HashMap<i64, (f64, BigUint)>>,
}

impl SumBuckets {
    /// The single preimage of length zero: the base point with sum 0.
    pub fn new(a: &Potential, x0_prefix: &Word) -> Result<Self> {
        let d = a.d();
        let k = a.context_len();
        if x0_prefix.d() != d {
            return Err(QError::InvalidInput("base point alphabet differs from the potential".into()));
        }
        if x0_prefix.len() < k {
            return Err(QError::InvalidInput(format!(
                "base point prefix needs at least {k} symbols"
            )));
        }
        let n = d.pow(k as u32);
        let mut states = vec![HashMap::new(); n];
        let s = word_index(d, &x0_prefix.symbols()[..k]);
        states[s].insert(0, (0.0, BigUint::from(1u8)));
        Ok(Self { d, k, steps: 0, states })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn bucket_count(&self) -> usize {
        self.states.iter().map(|m| m.len()).sum()
    }

    /// Sum of all counts, equal to `d^steps`.
    pub fn total_count(&self) -> BigUint {
        self.states
            .iter()
            .flat_map(|m| m.values().map(|(_, c)| c))
            .fold(BigUint::ZERO, |acc, c| acc + c)
    }

    /// Prepends every symbol to every stored preimage.
    pub fn step(&mut self, a: &Potential) {
        let (d, k) = (self.d, self.k);
        let n = self.states.len();
        let mut next: Vec<HashMap<i64, (f64, BigUint)>> = vec![HashMap::new(); n];
        for (s, map) in self.states.iter().enumerate() {
            for (&key, (sum, count)) in map {
                for sym in 0..d {
                    let y = sym * n + s;
                    let add = eval_index(a, k + 1, y);
                    let new_sum = sum + add;
                    let new_key = key + (add / BUCKET_QUANTUM).round() as i64;
                    let target = y / d;
                    next[target]
                        .entry(new_key)
                        .and_modify(|(_, c)| *c += count)
                        .or_insert_with(|| (new_sum, count.clone()));
                }
            }
        }
        self.states = next;
        self.steps += 1;
    }

    /// `log Σ count·exp_q(sum)` over all buckets, with the fraction of preimages
    /// whose sum lies outside the exp_q domain (those are left out of the sum).
    pub fn log_total(&self, q: QParam) -> (f64, f64, Option<(usize, f64)>) {
        let mut terms = Vec::with_capacity(self.bucket_count());
        let mut bad = Vec::new();
        let mut first_bad = None;
        for (s, map) in self.states.iter().enumerate() {
            let mut keys: Vec<&i64> = map.keys().collect();
            keys.sort_unstable();
            for (sum, count) in keys.into_iter().map(|k| &map[k]) {
                let lc = log_biguint(count);
                match log_exp_q(*sum, q) {
                    Ok(v) if exp_q_base(*sum, q) > 0.0 || q.is_classical() => terms.push(lc + v),
                    _ => {
                        bad.push(lc);
                        if first_bad.is_none() {
                            first_bad = Some((s, *sum));
                        }
                    }
                }
            }
        }
        let total_log = self.steps as f64 * (self.d as f64).ln();
        let bad_fraction = if bad.is_empty() { 0.0 } else { (logsumexp(&bad) - total_log).exp() };
        (logsumexp(&terms), bad_fraction, first_bad)
    }
}

fn log_biguint(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits == 0 {
        return f64::NEG_INFINITY;
    }
    let mut digits = x.iter_u64_digits().rev();
    let hi = digits.next().unwrap_or(0) as f64;
    let lo = digits.next().map_or(0.0, |v| v as f64 / 18_446_744_073_709_551_616.0);
    let skipped = x.iter_u64_digits().len().saturating_sub(1);
    (hi + lo).ln() + (64 * skipped) as f64 * std::f64::consts::LN_2
}

fn logsumexp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for x in v {
        let t = (x - m).exp();
        let s = sum + t;
        comp += if sum.abs() >= t.abs() { (sum - s) + t } else { (t - s) + sum };
        sum = s;
    }
    m + (sum + comp).ln()
}

/// `𝔏_n(1)(x₀)` kept in logarithmic form, since it grows like `d^n`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LogValue {
    pub ln: f64,
}

impl LogValue {
    pub fn value(&self) -> f64 {
        self.ln.exp()
    }
}

fn check_size(a: &Potential, n: usize) -> Result<()> {
    if a.memory() > 2 || a.d() > 3 {
        return Err(QError::SizeGuard(format!(
            "bucketed evaluation needs memory <= 2 and d <= 3, got memory {} and d {}",
            a.memory(),
            a.d()
        )));
    }
    if n > MAX_STEPS {
        return Err(QError::SizeGuard(format!("n = {n} exceeds {MAX_STEPS}")));
    }
    Ok(())
}

/// `𝔏_n(1)(x₀) = Σ_{σ^n y = x₀} exp_q(S_n A(y))` by the bucketed dynamic program.
pub fn frak_l_n(a: &Potential, q: QParam, x0_prefix: &Word, n: usize) -> Result<LogValue> {
    check_size(a, n)?;
    let mut b = SumBuckets::new(a, x0_prefix)?;
    for _ in 0..n {
        b.step(a);
    }
    let (ln, bad, first_bad) = b.log_total(q);
    if bad > 0.0 {
        let (s, sum) = first_bad.unwrap_or((0, f64::NAN));
        return Err(QError::Domain(format!(
            "bucket with context {} and sum {sum} leaves the exp_q domain",
            index_word(a.d(), a.context_len(), s).iter().map(|v| v.to_string()).collect::<String>()
        )));
    }
    Ok(LogValue { ln })
}

/// Same quantity by visiting all `d^n` preimages.
pub fn frak_l_n_enumerate(a: &Potential, q: QParam, x0_prefix: &Word, n: usize) -> Result<LogValue> {
    if n > MAX_ENUMERATION {
        return Err(QError::SizeGuard(format!("enumeration limited to n <= {MAX_ENUMERATION}")));
    }
    let mut terms = Vec::with_capacity(a.d().pow(n as u32));
    for w in preimages(a.d(), n) {
        terms.push(log_exp_q(a.birkhoff_sum(&w, x0_prefix)?, q)?);
    }
    Ok(LogValue { ln: logsumexp(&terms) })
}

/// Least-squares fit of `(1/n) log 𝔏_n = P + α (log n)/n + β/n`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TailFit {
    pub pressure: f64,
    pub alpha: f64,
    pub beta: f64,
}

/// Output of [`asymptotic_pressure`].
#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticPressure {
    pub estimate: f64,
    pub fit: TailFit,
    /// `(n, (1/n) log 𝔏_n)` for `n = 1..=n_max`.
    pub sequence: Vec<(usize, f64)>,
    /// Largest fraction of preimages left out of the sum because `1 + (1-q)S_n <= 0`.
    pub excluded_fraction: f64,
}

impl AsymptoticPressure {
    /// Max minus min of `(1/n) log 𝔏_n` over the last tenth of the sequence.
    pub fn tail_oscillation(&self) -> f64 {
        let start = self.sequence.len() - self.sequence.len() / 10 - 1;
        let tail = &self.sequence[start..];
        let hi = tail.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        let lo = tail.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        hi - lo
    }
}

/// Fits `(1/n)log 𝔏_n` on `[n_max/2, n_max]` and returns the constant term.
pub fn fit_tail(sequence: &[(usize, f64)]) -> Result<TailFit> {
    let n_max = sequence.last().map(|p| p.0).unwrap_or(0);
    let rows: Vec<&(usize, f64)> = sequence.iter().filter(|p| 2 * p.0 >= n_max && p.0 > 0).collect();
    if rows.len() < 3 {
        return Err(QError::InvalidInput("need at least 3 points in the fitting window".into()));
    }
    let m = DMatrix::from_fn(rows.len(), 3, |i, j| {
        let n = rows[i].0 as f64;
        match j {
            0 => 1.0,
            1 => n.ln() / n,
            _ => 1.0 / n,
        }
    });
    let rhs = DVector::from_iterator(rows.len(), rows.iter().map(|p| p.1));
    let sol = m
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|e| QError::NonConvergence(format!("least squares failed: {e}")))?;
    Ok(TailFit {
        pressure: sol[0],
        alpha: sol[1],
        beta: sol[2],
    })
}

/// Estimates `lim (1/n) log 𝔏_n(1)(x₀)` from the exact values up to `n_max`.
///
/// Preimages with `1 + (1-q)S_n A <= 0` are dropped from the sum and the largest
/// dropped fraction is reported.
pub fn asymptotic_pressure(a: &Potential, q: QParam, x0_prefix: &Word, n_max: usize) -> Result<AsymptoticPressure> {
    check_size(a, n_max)?;
    if n_max < 6 {
        return Err(QError::InvalidInput("n_max must be at least 6".into()));
    }
    let mut b = SumBuckets::new(a, x0_prefix)?;
    let mut sequence = Vec::with_capacity(n_max);
    let mut excluded: f64 = 0.0;
    for n in 1..=n_max {
        b.step(a);
        let (ln, bad, _) = b.log_total(q);
        excluded = excluded.max(bad);
        if !ln.is_finite() {
            return Err(QError::Domain(format!("every preimage at n = {n} leaves the exp_q domain")));
        }
        sequence.push((n, ln / n as f64));
    }
    let fit = fit_tail(&sequence)?;
    Ok(AsymptoticPressure {
        estimate: fit.pressure,
        fit,
        sequence,
        excluded_fraction: excluded,
    })
}

/// `max_{m+n <= limit} (a_{m+n} - a_m - a_n)` for `a_n = log 𝔏_n`.
pub fn weak_subadditivity_excess(sequence: &[(usize, f64)], limit: usize) -> f64 {
    let a: HashMap<usize, f64> = sequence.iter().map(|&(n, v)| (n, v * n as f64)).collect();
    let mut worst = f64::NEG_INFINITY;
    for m in 1..limit {
        for n in 1..=(limit - m) {
            if let (Some(am), Some(an), Some(amn)) = (a.get(&m), a.get(&n), a.get(&(m + n))) {
                worst = worst.max(amn - am - an);
            }
        }
    }
    worst
}

fn random_word(rng: &mut ChaCha8Rng, p: &ProbVector, n: usize) -> Vec<u8> {
    (0..n)
        .map(|_| {
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            for (i, &pi) in p.as_slice().iter().enumerate() {
                acc += pi;
                if u < acc {
                    return (i + 1) as u8;
                }
            }
            p.len() as u8
        })
        .collect()
}

/// Monte Carlo mean of `φ_n/n` under the Bernoulli measure `p`.
pub fn kingman_mean(a: &Potential, q: QParam, p: &ProbVector, n: usize, samples: usize, seed: u64) -> Result<f64> {
    if p.len() != a.d() {
        return Err(QError::InvalidInput("probability vector length differs from d".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tail_len = a.memory().saturating_sub(1);
    let mut total = 0.0;
    for _ in 0..samples.max(1) {
        let w = Word::new(a.d(), random_word(&mut rng, p, n))?;
        let tail = Word::new(a.d(), random_word(&mut rng, p, tail_len))?;
        total += phi_n(a, q, &w, &tail)? / n as f64;
    }
    Ok(total / samples.max(1) as f64)
}

/// Comparison of `φ_n` with `ψ_n`, the same sequence built from `A + c`, `c = -2 min A`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ShiftComparison {
    /// `max |φ_n - ψ_n| / n` over sampled words inside the domain.
    pub max_ratio: f64,
    /// `4/((1-q)n)`.
    pub bound: f64,
    pub in_domain_fraction: f64,
}

/// Samples uniform words of length `n` and compares `φ_n` with `ψ_n`.
pub fn shifted_sequence_comparison(a: &Potential, q: QParam, n: usize, samples: usize, seed: u64) -> Result<ShiftComparison> {
    if !(q.value() < 1.0) || q.is_classical() {
        return Err(QError::InvalidInput("comparison needs q < 1".into()));
    }
    let c = -2.0 * a.min().min(0.0);
    let shifted = a.map(|v| v + c)?;
    let p = ProbVector::uniform(a.d());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tail_len = a.memory().saturating_sub(1);
    let (mut inside, mut worst) = (0usize, 0.0f64);
    for _ in 0..samples.max(1) {
        let w = Word::new(a.d(), random_word(&mut rng, &p, n))?;
        let tail = Word::new(a.d(), random_word(&mut rng, &p, tail_len))?;
        if let (Ok(x), Ok(y)) = (phi_n(a, q, &w, &tail), phi_n(&shifted, q, &w, &tail)) {
            inside += 1;
            worst = worst.max((x - y).abs() / n as f64);
        }
    }
    Ok(ShiftComparison {
        max_ratio: worst,
        bound: 4.0 / ((1.0 - q.value()) * n as f64),
        in_domain_fraction: inside as f64 / samples.max(1) as f64,
    })
}

/// Maximum of `h(ν) + ℓ(ν)` over a grid of two-symbol Markov measures.
#[derive(Debug, Clone, Serialize)]
pub struct SubaddScan {
    pub value: f64,
    pub argmax: MarkovMeasure,
    pub grid_n: usize,
    pub excluded_fraction: f64,
}

/// Grid search of `h(ν)` over Markov measures with `∫A dν > 0` (where `ℓ(ν) = 0`).
pub fn variational_scan_subadd(a: &Potential, _q: QParam, grid_n: usize) -> Result<SubaddScan> {
    if a.d() != 2 {
        return Err(QError::InvalidInput("scan supports d = 2 only".into()));
    }
    let k = a.context_len();
    if k > 2 {
        return Err(QError::SizeGuard("scan supports memory up to 3".into()));
    }
    let points = crate::variational::grid_points(k, grid_n);
    let mut best: Option<(f64, MarkovMeasure)> = None;
    let mut excluded = 0usize;
    let total = points.len();
    for theta in points {
        let mu = crate::variational::markov_from_theta(k, &theta)?;
        if mu.integrate(a)? <= 0.0 {
            excluded += 1;
            continue;
        }
        let h = ks_entropy(&mu);
        if best.as_ref().map_or(true, |(v, _)| h > *v) {
            best = Some((h, mu));
        }
    }
    let (value, argmax) = best.ok_or_else(|| QError::InvalidInput("no measure with positive integral".into()))?;
    Ok(SubaddScan {
        value,
        argmax,
        grid_n,
        excluded_fraction: excluded as f64 / total as f64,
    })
}
