//! Tsallis and Rényi entropies of probability vectors and the static q-pressure.

use serde::Serialize;

use crate::error::{QError, Result};
use crate::qfun::{exp_q, log_q, QParam};

/// A probability vector on `{1, ..., d}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbVector {
    p: Vec<f64>,
}

impl ProbVector {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(QError::InvalidInput("empty probability vector".into()));
        }
        if p.iter().any(|&x| !(x.is_finite() && x >= 0.0)) {
            return Err(QError::InvalidInput(
                "probability entries must be finite and nonnegative".into(),
            ));
        }
        let s: f64 = p.iter().sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(QError::InvalidInput(format!(
                "probabilities sum to {s}, not 1"
            )));
        }
        Ok(Self { p })
    }

    /// Normalizes nonnegative weights to a probability vector.
    pub fn from_weights(w: &[f64]) -> Result<Self> {
        let s: f64 = w.iter().sum();
        if !(s.is_finite() && s > 0.0) || w.iter().any(|&x| !(x >= 0.0)) {
            return Err(QError::InvalidInput(
                "weights must be nonnegative with a positive finite sum".into(),
            ));
        }
        Self::new(w.iter().map(|&x| x / s).collect())
    }

    pub fn uniform(d: usize) -> Self {
        Self {
            p: vec![1.0 / d as f64; d],
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.p
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }
}

/// Outcome of a static q-pressure computation.
#[derive(Debug, Clone, Serialize)]
pub struct StaticEquilibrium {
    pub pressure: f64,
    pub p_star: ProbVector,
    pub objective_at_p: f64,
}

/// `p log_q(1/p)` with the convention `0 log_q(1/0) = 0`.
fn q_surprise(p: f64, q: QParam) -> f64 {
    if p <= 0.0 {
        0.0
    } else {
        p * log_q(1.0 / p, q).unwrap_or(0.0)
    }
}

/// Tsallis entropy `Σ p_i log_q(1/p_i) = (Σ p_i^q - 1)/(1 - q)`.
pub fn q_entropy_vec(p: &ProbVector, q: QParam) -> f64 {
    p.as_slice().iter().map(|&x| q_surprise(x, q)).sum()
}

/// Shannon entropy `-Σ p_i ln p_i`.
pub fn shannon_entropy(p: &ProbVector) -> f64 {
    q_entropy_vec(p, QParam::of(1.0))
}

/// Rényi entropy `log(Σ p_j^q)/(1 - q)`; Shannon entropy in the classical regime.
pub fn renyi_entropy(p: &ProbVector, q: QParam) -> f64 {
    if q.is_classical() {
        return shannon_entropy(p);
    }
    let s: f64 = p
        .as_slice()
        .iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| x.powf(q.value()))
        .sum();
    s.ln() / (1.0 - q.value())
}

/// The map `F(x) = log(1 + (1-q)x)/(1-q)` carrying Tsallis to Rényi entropy.
pub fn tsallis_to_renyi(x: f64, q: QParam) -> Result<f64> {
    if q.is_classical() {
        return Ok(x);
    }
    let a = 1.0 - q.value();
    if a * x <= -1.0 {
        return Err(QError::Domain(format!("1 + (1-q)x <= 0 at x = {x}")));
    }
    Ok((a * x).ln_1p() / a)
}

fn objective(p: &[f64], a: &[f64], beta: f64, q: QParam) -> f64 {
    p.iter()
        .zip(a)
        .map(|(&pj, &aj)| q_surprise(pj, q) + beta * aj * pj)
        .sum()
}

fn check_static_input(a: &[f64], beta: f64) -> Result<()> {
    if a.len() < 2 {
        return Err(QError::InvalidInput("need at least two symbols".into()));
    }
    if !beta.is_finite() || a.iter().any(|x| !x.is_finite()) {
        return Err(QError::InvalidInput("non-finite potential or beta".into()));
    }
    Ok(())
}

/// Static q-pressure from the weights `p_j ∝ exp_{2-q}(β a_j)`.
///
/// The returned `pressure` is the objective `H_q(p) + β⟨a, p⟩` at that
/// candidate. It coincides with the maximum of the objective only when the
/// normalization multiplier vanishes; [`static_q_pressure_kkt`] returns the
/// exact maximizer.
pub fn static_q_pressure(a: &[f64], beta: f64, q: QParam) -> Result<StaticEquilibrium> {
    check_static_input(a, beta)?;
    let dual = q.dual();
    let weights = a
        .iter()
        .enumerate()
        .map(|(j, &aj)| {
            exp_q(beta * aj, dual).map_err(|e| e.with_location(format!("weight of symbol {}", j + 1)))
        })
        .collect::<Result<Vec<f64>>>()?;
    let p_star = ProbVector::from_weights(&weights)?;
    let value = objective(p_star.as_slice(), a, beta, q);
    Ok(StaticEquilibrium {
        pressure: value,
        p_star,
        objective_at_p: value,
    })
}

/// Exact maximizer of `H_q(p) + β⟨a, p⟩` over the simplex, for `q > 0`.
///
/// The objective is concave, so its maximizer is the KKT point
/// `p_j = ((1 + (1-q)(λ - β a_j))/q)^{1/(q-1)}` (clipped at zero when `q > 1`),
/// with the multiplier `λ` fixed by bisection on `Σ p_j = 1`.
pub fn static_q_pressure_kkt(a: &[f64], beta: f64, q: QParam) -> Result<StaticEquilibrium> {
    check_static_input(a, beta)?;
    let qv = q.value();
    if !(qv > 0.0) {
        return Err(QError::Domain(format!("requires q > 0, got {qv}")));
    }
    let ba: Vec<f64> = a.iter().map(|&x| beta * x).collect();
    if q.is_classical() {
        let mx = ba.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = ba.iter().map(|&x| (x - mx).exp()).collect();
        let p = ProbVector::from_weights(&w)?;
        let v = objective(p.as_slice(), a, beta, q);
        return Ok(StaticEquilibrium {
            pressure: v,
            p_star: p,
            objective_at_p: v,
        });
    }
    let s = 1.0 - qv;
    let probs = |lambda: f64| -> Vec<f64> {
        ba.iter()
            .map(|&x| {
                let base = (1.0 + s * (lambda - x)) / qv;
                if base <= 0.0 {
                    if s < 0.0 {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                } else {
                    base.powf(1.0 / (qv - 1.0))
                }
            })
            .collect()
    };
    let total = |lambda: f64| probs(lambda).iter().sum::<f64>();
    let (bmin, bmax) = ba
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let mut lo;
    let mut hi;
    if s > 0.0 {
        lo = bmax - 1.0 / s + 1e-300_f64.max(1e-15 * (1.0 + bmax.abs()));
        hi = lo.abs() + bmax.abs() + 1.0;
        while total(hi) > 1.0 {
            hi = 2.0 * hi + 1.0;
        }
    } else {
        hi = bmin - 1.0 / s;
        lo = hi - 1.0;
        while total(lo) < 1.0 {
            lo = hi - 2.0 * (hi - lo);
        }
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if total(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let raw = probs(0.5 * (lo + hi));
    let p = ProbVector::from_weights(&raw)?;
    let v = objective(p.as_slice(), a, beta, q);
    Ok(StaticEquilibrium {
        pressure: v,
        p_star: p,
        objective_at_p: v,
    })
}

fn golden_max(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64, iters: usize) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..iters {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Brute-force maximization of `H_q(p) + β⟨a, p⟩` over a simplex grid of stride
/// `1/grid_n`, followed by one coordinate-wise golden-section pass.
pub fn static_q_pressure_scan(
    a: &[f64],
    beta: f64,
    q: QParam,
    grid_n: usize,
) -> Result<StaticEquilibrium> {
    check_static_input(a, beta)?;
    if grid_n < 100 {
        return Err(QError::InvalidInput(format!("grid_n must be >= 100, got {grid_n}")));
    }
    let n = grid_n as f64;
    let best: Vec<f64> = match a.len() {
        2 => {
            let f = |t: f64| objective(&[t, 1.0 - t], a, beta, q);
            let (mut bi, mut bv) = (0usize, f64::NEG_INFINITY);
            for i in 0..=grid_n {
                let v = f(i as f64 / n);
                if v > bv {
                    bi = i;
                    bv = v;
                }
            }
            let c = bi as f64 / n;
            let (t, v) = golden_max(&f, (c - 1.0 / n).max(0.0), (c + 1.0 / n).min(1.0), 200);
            if v >= bv {
                vec![t, 1.0 - t]
            } else {
                vec![c, 1.0 - c]
            }
        }
        3 => {
            let f = |x: f64, y: f64| objective(&[x, y, (1.0 - x - y).max(0.0)], a, beta, q);
            let (mut bx, mut by, mut bv) = (0.0, 0.0, f64::NEG_INFINITY);
            for i in 0..=grid_n {
                for j in 0..=(grid_n - i) {
                    let (x, y) = (i as f64 / n, j as f64 / n);
                    let v = f(x, y);
                    if v > bv {
                        bx = x;
                        by = y;
                        bv = v;
                    }
                }
            }
            let fx = |x: f64| f(x, by);
            let (x, vx) = golden_max(&fx, (bx - 1.0 / n).max(0.0), (bx + 1.0 / n).min(1.0 - by), 200);
            if vx >= bv {
                bx = x;
                bv = vx;
            }
            let fy = |y: f64| f(bx, y);
            let (y, vy) = golden_max(&fy, (by - 1.0 / n).max(0.0), (by + 1.0 / n).min(1.0 - bx), 200);
            if vy >= bv {
                by = y;
            }
            vec![bx, by, (1.0 - bx - by).max(0.0)]
        }
        d => return Err(QError::Unsupported(format!("scan supports d = 2 or 3, got {d}"))),
    };
    let p = ProbVector::from_weights(&best)?;
    let v = objective(p.as_slice(), a, beta, q);
    Ok(StaticEquilibrium {
        pressure: v,
        p_star: p,
        objective_at_p: v,
    })
}

/// One point of a β-sweep; `pressure` is absent where β is inadmissible.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SweepPoint {
    pub beta: f64,
    pub pressure: Option<f64>,
}

/// The curve `β ↦ P_q(βa)` on `steps` equally spaced points of `[lo, hi]`.
pub fn beta_sweep(a: &[f64], q: QParam, lo: f64, hi: f64, steps: usize) -> Vec<SweepPoint> {
    let betas: Vec<f64> = match steps {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..steps)
            .map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64)
            .collect(),
    };
    let eval = |beta: f64| SweepPoint {
        beta,
        pressure: static_q_pressure(a, beta, q).ok().map(|e| e.pressure),
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        betas.into_par_iter().map(eval).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        betas.into_iter().map(eval).collect()
    }
}

/// Discrete second differences of the admissible part of a sweep.
pub fn second_differences(curve: &[SweepPoint]) -> Vec<f64> {
    curve
        .windows(3)
        .filter_map(|w| match (w[0].pressure, w[1].pressure, w[2].pressure) {
            (Some(a), Some(b), Some(c)) => Some(a - 2.0 * b + c),
            _ => None,
        })
        .collect()
}

/// Méson–Vericat entropy of the Bernoulli measure of `p`: `log Σ p_i^q`.
pub fn meson_vericat_bernoulli(p: &ProbVector, q: QParam) -> Result<f64> {
    let qv = q.value();
    if !(qv > 0.0 && qv < 1.0) {
        return Err(QError::Domain(format!("requires 0 < q < 1, got {qv}")));
    }
    let s: f64 = p
        .as_slice()
        .iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| x.powf(qv))
        .sum();
    Ok(s.ln())
}

/// The quotients `(1/n) log Σ_{|w| = n} μ[w]^q` for the Bernoulli measure of `p`,
/// computed by enumerating all cylinders of length `n = 1..=n_max`.
pub fn meson_vericat_quotients(p: &ProbVector, q: QParam, n_max: usize) -> Result<Vec<f64>> {
    let d = p.len();
    let cap = (d as f64).powi(n_max as i32);
    if cap > 4e6 {
        return Err(QError::SizeGuard(format!("{d}^{n_max} cylinders")));
    }
    let qv = q.value();
    let mut masses = vec![1.0f64];
    let mut out = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        masses = masses
            .iter()
            .flat_map(|&m| p.as_slice().iter().map(move |&x| m * x))
            .collect();
        let s: f64 = masses.iter().filter(|&&m| m > 0.0).map(|&m| m.powf(qv)).sum();
        out.push(s.ln() / n as f64);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pv(v: &[f64]) -> ProbVector {
        ProbVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn entropy_of_degenerate_and_uniform() {
        assert_eq!(q_entropy_vec(&pv(&[1.0, 0.0, 0.0]), QParam::of(0.5)), 0.0);
        let u = q_entropy_vec(&ProbVector::uniform(2), QParam::of(0.5));
        assert!((u - 0.828_427_124_746_190_1).abs() < 1e-14);
    }

    #[test]
    fn entropy_is_nonadditive() {
        let r = pv(&[0.2, 0.8]);
        let s = pv(&[0.5, 0.3, 0.2]);
        let q = QParam::of(0.7);
        let mut prod = Vec::new();
        for &x in r.as_slice() {
            for &y in s.as_slice() {
                prod.push(x * y);
            }
        }
        let joint = q_entropy_vec(&ProbVector::from_weights(&prod).unwrap(), q);
        let (hr, hs) = (q_entropy_vec(&r, q), q_entropy_vec(&s, q));
        assert!((joint - (hr + hs + 0.3 * hr * hs)).abs() < 1e-13);
    }

    #[test]
    fn renyi_values() {
        for q in [0.3, 0.5, 2.0] {
            let r = renyi_entropy(&ProbVector::uniform(5), QParam::of(q));
            assert!((r - 5f64.ln()).abs() < 1e-14);
        }
        assert_eq!(renyi_entropy(&pv(&[1.0, 0.0]), QParam::of(0.5)), 0.0);
    }

    #[test]
    fn closed_form_static_equilibrium() {
        let eq = static_q_pressure(&[0.5, 0.8], 1.2, QParam::of(1.0 / 3.0)).unwrap();
        assert!((eq.pressure - 1.6895).abs() < 5e-4);
        assert!((eq.p_star.as_slice()[0] - 0.3172).abs() < 5e-4);
        assert!((eq.p_star.as_slice()[1] - 0.6828).abs() < 5e-4);
        assert_eq!(eq.pressure, eq.objective_at_p);
    }

    #[test]
    fn beta_zero_is_uniform() {
        let q = QParam::of(0.4);
        let eq = static_q_pressure(&[0.3, -1.0, 2.0], 0.0, q).unwrap();
        for &p in eq.p_star.as_slice() {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
        assert!((eq.pressure - log_q(3.0, q).unwrap()).abs() < 1e-14);
        let scan = static_q_pressure_scan(&[0.3, -1.0, 2.0], 0.0, q, 300).unwrap();
        for &p in scan.p_star.as_slice() {
            assert!((p - 1.0 / 3.0).abs() < 1e-6);
        }
    }

    #[test]
    fn closed_form_at_one_half() {
        let (a1, a2, b) = (0.4, -0.9, 0.7);
        let eq = static_q_pressure(&[a1, a2], b, QParam::of(0.5)).unwrap();
        let den = 8.0 - 4.0 * a1 * b - 4.0 * a2 * b + a1 * a1 * b * b + a2 * a2 * b * b;
        let p1 = (a2 * b - 2.0).powi(2) / den;
        assert!((eq.p_star.as_slice()[0] - p1).abs() < 1e-14);
    }

    #[test]
    fn inadmissible_beta_is_typed_error() {
        let err = static_q_pressure(&[3.0, 7.0], 1.0, QParam::of(0.5)).unwrap_err();
        assert!(matches!(err, QError::QExpDomain { .. }));
    }

    #[test]
    fn kkt_maximizer_beats_closed_form() {
        let q = QParam::of(1.0 / 3.0);
        let kkt = static_q_pressure_kkt(&[0.5, 0.8], 1.2, q).unwrap();
        let closed = static_q_pressure(&[0.5, 0.8], 1.2, q).unwrap();
        assert!((kkt.pressure - 1.690527).abs() < 1e-6);
        assert!((kkt.p_star.as_slice()[0] - 0.34255).abs() < 1e-5);
        assert!(kkt.pressure > closed.pressure + 5e-4);
    }

    #[test]
    fn sweep_single_step() {
        let q = QParam::of(0.5);
        let c = beta_sweep(&[3.0, 7.0], q, 0.1, 0.2, 1);
        assert_eq!(c.len(), 1);
        let p = static_q_pressure(&[3.0, 7.0], 0.1, q).unwrap().pressure;
        assert_eq!(c[0].pressure, Some(p));
    }

    #[test]
    fn meson_vericat_values() {
        let q = QParam::of(0.5);
        let v = meson_vericat_bernoulli(&ProbVector::uniform(2), q).unwrap();
        assert!((v - 0.346_573_590_279_972_65).abs() < 1e-15);
        assert_eq!(meson_vericat_bernoulli(&pv(&[1.0, 0.0]), q).unwrap(), 0.0);
        assert!(meson_vericat_bernoulli(&ProbVector::uniform(2), QParam::of(1.5)).is_err());
        let p = pv(&[0.1, 0.6, 0.3]);
        let quot = meson_vericat_quotients(&p, q, 8).unwrap();
        let v = meson_vericat_bernoulli(&p, q).unwrap();
        for x in quot {
            assert!((x - v).abs() < 1e-12);
        }
    }
}
