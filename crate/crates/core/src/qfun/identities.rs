//! Randomized evaluation of the algebraic identities satisfied by `log_q` and `exp_q`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{exp_q, log_q, QParam};

/// Whether a check compares two sides for equality or asserts `lhs <= rhs`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckKind {
    Equality,
    Inequality,
}

/// Worst-case outcome of one identity over all sampled points.
#[derive(Debug, Clone, Serialize)]
pub struct IdentityCheck {
    pub name: &'static str,
    pub kind: CheckKind,
    pub samples: usize,
    /// Largest `|lhs - rhs|` (equalities) or `max(lhs - rhs, 0)` (inequalities).
    pub max_abs: f64,
    /// Largest defect divided by `max(1, |rhs|)`.
    pub violation: f64,
    /// Point at which `violation` was attained.
    pub worst_point: Vec<f64>,
    /// Report-only entries never count towards pass/fail.
    pub report_only: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityReport {
    pub seed: u64,
    pub samples: usize,
    pub checks: Vec<IdentityCheck>,
}

impl IdentityReport {
    /// Largest violation among the checks that are not report-only.
    pub fn worst(&self) -> f64 {
        self.checks
            .iter()
            .filter(|c| !c.report_only)
            .map(|c| c.violation)
            .fold(0.0, f64::max)
    }

    pub fn failing(&self, tol: f64) -> Vec<&IdentityCheck> {
        self.checks
            .iter()
            .filter(|c| !c.report_only && !(c.violation <= tol))
            .collect()
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.failing(tol).is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&IdentityCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

struct Acc {
    check: IdentityCheck,
}

impl Acc {
    fn new(name: &'static str, kind: CheckKind, report_only: bool) -> Self {
        Self {
            check: IdentityCheck {
                name,
                kind,
                samples: 0,
                max_abs: 0.0,
                violation: 0.0,
                worst_point: Vec::new(),
                report_only,
            },
        }
    }

    fn record(&mut self, lhs: f64, rhs: f64, point: &[f64]) {
        let defect = match self.check.kind {
            CheckKind::Equality => (lhs - rhs).abs(),
            CheckKind::Inequality => (lhs - rhs).max(0.0),
        };
        let defect = if defect.is_nan() { f64::INFINITY } else { defect };
        let scaled = defect / rhs.abs().max(1.0);
        self.check.samples += 1;
        self.check.max_abs = self.check.max_abs.max(defect);
        if scaled > self.check.violation || self.check.worst_point.is_empty() {
            self.check.violation = self.check.violation.max(scaled);
            self.check.worst_point = point.to_vec();
        }
    }
}

fn q_of(q: f64) -> QParam {
    QParam::of(q)
}

fn e(u: f64, q: f64) -> Option<f64> {
    exp_q(u, q_of(q)).ok()
}

fn l(u: f64, q: f64) -> Option<f64> {
    log_q(u, q_of(q)).ok()
}

/// Taylor polynomial of `exp_q` at 0, summed until terms drop below 1e-18.
pub fn exp_q_taylor(x: f64, q: f64, max_terms: usize) -> f64 {
    let mut sum = 1.0;
    let mut coeff = 1.0;
    for n in 1..=max_terms {
        let j = (n - 1) as f64;
        coeff *= (j * q - (j - 1.0)) * x / n as f64;
        sum += coeff;
        if coeff.abs() < 1e-18 * sum.abs().max(1.0) {
            break;
        }
    }
    sum
}

/// Taylor polynomial of `log_q(1 + x)` at 0.
pub fn log_q_taylor(x: f64, q: f64, max_terms: usize) -> f64 {
    let mut sum = x;
    let mut coeff = x;
    for n in 2..=max_terms {
        let nf = n as f64;
        coeff *= -(q + nf - 2.0) * x / nf;
        sum += coeff;
        if coeff.abs() < 1e-18 * sum.abs().max(1.0) {
            break;
        }
    }
    sum
}

fn random_prob(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let d = rng.gen_range(2..=6);
    let w: Vec<f64> = (0..d).map(|_| rng.gen_range(1e-3..1.0)).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

fn shannon(p: &[f64]) -> f64 {
    -p.iter().filter(|&&x| x > 0.0).map(|&x| x * x.ln()).sum::<f64>()
}

fn tsallis(p: &[f64], q: f64) -> f64 {
    p.iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| x * l(1.0 / x, q).unwrap_or(f64::NAN))
        .sum()
}

fn fd1(f: &dyn Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h)
}

fn fd2(f: &dyn Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (-f(x + 2.0 * h) + 16.0 * f(x + h) - 30.0 * f(x) + 16.0 * f(x - h) - f(x - 2.0 * h))
        / (12.0 * h * h)
}

fn smooth_around(alpha: f64, beta: f64, q: f64) -> bool {
    [alpha, alpha + beta - 0.01, alpha + beta + 0.01]
        .iter()
        .all(|u| 1.0 + (1.0 - q) * u >= 0.5)
}

const MAX_REDRAWS: usize = 10_000;

/// Evaluates every identity at `samples` random admissible points drawn from `seed`.
///
/// The report-only entries (`dual_product_abs_form`, `dual_exp_composition`) are evaluated where both sides
/// are finite and never count as failures.
pub fn identity_suite(samples: usize, seed: u64) -> IdentityReport {
    let samples = samples.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();

    let draw = |rng: &mut ChaCha8Rng,
                    acc: &mut Acc,
                    f: &mut dyn FnMut(&mut ChaCha8Rng) -> Option<(f64, f64, Vec<f64>)>| {
        for _ in 0..samples {
            for _ in 0..MAX_REDRAWS {
                if let Some((lhs, rhs, pt)) = f(rng) {
                    if lhs.is_finite() && rhs.is_finite() {
                        acc.record(lhs, rhs, &pt);
                        break;
                    }
                }
            }
        }
    };

    let mut acc = Acc::new("dual_product", CheckKind::Equality, false);
    draw(&mut rng, &mut acc, &mut |r| {
        let q = r.gen_range(0.05..2.5);
        let z = r.gen_range(-5.0..5.0);
        Some((e(z, q)? * e(-z, 2.0 - q)?, 1.0, vec![q, z]))
    });
    checks.push(acc.check);

    let mut acc = Acc::new("exp_pseudo_additivity", CheckKind::Equality, false);
    draw(&mut rng, &mut acc, &mut |r| {
        let q = r.gen_range(0.05..2.5);
        let x = r.gen_range(-2.0..2.0);
        let y = r.gen_range(-2.0..2.0);
        let lhs = e(x + y + (1.0 - q) * x * y, q)?;
        Some((lhs, e(x, q)? * e(y, q)?, vec![q, x, y]))
    });
    checks.push(acc.check);

    let mut acc = Acc::new("log_pseudo_additivity", CheckKind::Equality, false);
    draw(&mut rng, &mut acc, &mut |r| {
        let q = r.gen_range(0.05..2.5);
        let a = 10f64.powf(r.gen_range(-2.0..2.0));
        let b = 10f64.powf(r.gen_range(-2.0..2.0));
        let (la, lb) = (l(a, q)?, l(b, q)?);
        Some((l(a * b, q)?, la + lb + (1.0 - q) * la * lb, vec![q, a, b]))
    });
    checks.push(acc.check);

    let mut acc = Acc::new("log_reciprocal", CheckKind::Equality, false);
    draw(&mut rng, &mut acc, &mut |r| {
        let q = r.gen_range(0.05..2.5);
        let p = r.gen_range(1e-3..1.0);
        Some((l(1.0 / p, q)?, -p.powf(q - 1.0) * l(p, q)?, vec![q, p]))
    });
    checks.push(acc.check);

    let mut acc = Acc::new("exp_power", CheckKind::Equality, false);
    draw(&mut rng, &mut acc, &mut |r| {
        let q = r.gen_range(0.05..2.5);
        let a = r.gen_range(0.2..3.0);
        let x = r.gen_range(-2.0..2.0);
        let q2 = 1.0 - (1.0 - q) / a;
        Some((e(x, q)?.powf(a), e(a * x, q2)?, vec![q, a, x]))
    });
    checks.push(acc.check);

    let mut acc = Acc::new("dual_exp_of_log", CheckKind::Equality, false);
    draw(&mut rng, &mut acc, &mut |r| {
        let q = r.gen_range(0.05..2.5);
        let y = 10f64.powf(r.gen_range(-2.0..1.0));
        let u = -l(1.0 / y, q)?;
        Some((e(u, 2.0 - q)?, y, vec![q, y]))
    });
    checks.push(acc.check);

    let mut acc = Acc::new("exp_first_derivative", CheckKind::Equality, false);
    draw(&mut rng, &mut acc, &mut |r| {
        let q = r.gen_range(0.1..2.0);
        let alpha = r.gen_range(-0.5..0.5);
        let beta = r.gen_range(-0.5..0.5);
        if !smooth_around(alpha, beta, q) {
            return None;
        }
        let f = |b: f64| e(alpha + b, q).unwrap_or(f64::NAN) - e(alpha, q).unwrap_or(f64::NAN);
        let exact = (1.0 + (alpha + beta) * (1.0 - q)).powf(-1.0 + 1.0 / (1.0 - q));
        Some((fd1(&f, beta, 1e-3), exact, vec![q, alpha, beta]))
    });
    checks.push(acc.check);

    let mut acc = Acc::new("exp_second_derivative", CheckKind::Equality, false);
    draw(&mut rng, &mut acc, &mut |r| {
        let q = r.gen_range(0.1..2.0);
        let alpha = r.gen_range(-0.5..0.5);
        let beta = r.gen_range(-0.5..0.5);
        if !smooth_around(alpha, beta, q) {
            return None;
        }
        let f = |b: f64| e(alpha + b, q).unwrap_or(f64::NAN) - e(alpha, q).unwrap_or(f64::NAN);
        let a = 1.0 - q;
        let exact = (-1.0 + 1.0 / a) * a * (1.0 + (alpha + beta) * a).powf(-2.0 + 1.0 / a);
        Some((fd2(&f, beta, 2e-3), exact, vec![q, alpha, beta]))
    });
    checks.push(acc.check);

    let mut acc = Acc::new("exp_taylor", CheckKind::Equality, false);
    draw(&mut rng, &mut acc, &mut |r| {
        let q: f64 = r.gen_range(0.05..2.5);
        let radius = (0.25 / (1.0 - q).abs().max(1e-9)).min(0.5);
        let x = r.gen_range(-radius..radius);
        Some((exp_q_taylor(x, q, 200), e(x, q)?, vec![q, x]))
    });
    checks.push(acc.check);

    let mut acc = Acc::new("log_taylor", CheckKind::Equality, false);
    draw(&mut rng, &mut acc, &mut |r| {
        let q = r.gen_range(0.05..2.5);
        let x = r.gen_range(-0.25..0.25);
        Some((log_q_taylor(x, q, 200), l(1.0 + x, q)?, vec![q, x]))
    });
    checks.push(acc.check);

    let mut acc = Acc::new("tsallis_at_most_shannon_below_one", CheckKind::Inequality, false);
    draw(&mut rng, &mut acc, &mut |r| {
        let q = r.gen_range(0.01..0.99);
        let p = random_prob(r);
        let mut pt = vec![q];
        pt.extend_from_slice(&p);
        Some((tsallis(&p, q), shannon(&p), pt))
    });
    checks.push(acc.check);

    let mut acc = Acc::new("shannon_at_most_tsallis_above_one", CheckKind::Inequality, false);
    draw(&mut rng, &mut acc, &mut |r| {
        let q = r.gen_range(1.01..3.0);
        let p = random_prob(r);
        let mut pt = vec![q];
        pt.extend_from_slice(&p);
        Some((shannon(&p), tsallis(&p, q), pt))
    });
    checks.push(acc.check);

    let mut acc = Acc::new("exp_of_log_reciprocal_below_one", CheckKind::Inequality, false);
    draw(&mut rng, &mut acc, &mut |r| {
        let q = r.gen_range(0.01..0.99);
        let x = 10f64.powf(r.gen_range(-2.0..1.0));
        Some((e(-l(1.0 / x, q)?, q)?, x, vec![q, x]))
    });
    checks.push(acc.check);

    let mut acc = Acc::new("dual_product_abs_form", CheckKind::Equality, true);
    draw(&mut rng, &mut acc, &mut |r| {
        let q = 0.5;
        let a: f64 = r.gen_range(-1.9..3.0);
        let b: f64 = r.gen_range(-3.0..1.9);
        let v = -2.0 * (-1.0 + (b - 2.0).abs() / (2.0 + a).abs());
        Some((e(a, q)? * e(b, 2.0 - q)?, e(v, 2.0 - q)?, vec![q, a, b]))
    });
    checks.push(acc.check);

    let mut acc = Acc::new("dual_exp_composition", CheckKind::Equality, true);
    draw(&mut rng, &mut acc, &mut |r| {
        let q: f64 = r.gen_range(0.1..0.9);
        let x: f64 = r.gen_range(-0.5..0.5);
        let y: f64 = r.gen_range(-0.5..0.5);
        let inner = (-1.0 + (y * (q - 1.0)).exp() / (1.0 + (q - 1.0) * (x + y))) / (1.0 - q);
        Some((e(x + y, 2.0 - q)?, e(inner, q)? * y.exp(), vec![q, x, y]))
    });
    checks.push(acc.check);

    IdentityReport {
        seed,
        samples,
        checks,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dual_product_at_zero_is_exact() {
        for q in [0.2, 0.5, 1.0, 1.7] {
            assert_eq!(e(0.0, q).unwrap() * e(0.0, 2.0 - q).unwrap(), 1.0);
        }
    }

    #[test]
    fn log_pseudo_additivity_at_one() {
        let q = 0.4;
        assert_eq!(l(1.0, q).unwrap(), 0.0);
    }

    #[test]
    fn taylor_series_match_direct_evaluation() {
        for &q in &[0.3, 0.5, 1.5, 2.0] {
            for &x in &[-0.1, 0.05, 0.2] {
                assert!((exp_q_taylor(x, q, 200) - e(x, q).unwrap()).abs() < 1e-14);
                assert!((log_q_taylor(x, q, 200) - l(1.0 + x, q).unwrap()).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn suite_is_deterministic() {
        let a = identity_suite(50, 7);
        let b = identity_suite(50, 7);
        for (x, y) in a.checks.iter().zip(&b.checks) {
            assert_eq!(x.violation.to_bits(), y.violation.to_bits());
        }
    }

    #[test]
    fn exact_identities_hold() {
        let report = identity_suite(2000, 3);
        for name in [
            "dual_product",
            "exp_pseudo_additivity",
            "log_pseudo_additivity",
            "log_reciprocal",
            "exp_power",
            "dual_exp_of_log",
            "exp_first_derivative",
            "exp_second_derivative",
            "exp_taylor",
            "log_taylor",
            "exp_of_log_reciprocal_below_one",
        ] {
            let c = report.get(name).unwrap();
            assert!(c.violation <= 1e-9, "{name}: {}", c.violation);
            assert_eq!(c.samples, 2000);
        }
    }

    #[test]
    fn dual_product_abs_form_holds_at_one_half() {
        let report = identity_suite(500, 11);
        assert!(report.get("dual_product_abs_form").unwrap().violation <= 1e-9);
    }

    #[test]
    fn tsallis_entropy_dominates_shannon_below_one() {
        let report = identity_suite(1000, 5);
        assert!(report.get("tsallis_at_most_shannon_below_one").unwrap().violation > 1e-3);
        assert!(report.get("shannon_at_most_tsallis_above_one").unwrap().violation > 1e-3);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..1000 {
            let p = random_prob(&mut rng);
            let lo = rng.gen_range(0.01..0.99);
            let hi = rng.gen_range(1.01..3.0);
            assert!(tsallis(&p, lo) >= shannon(&p) - 1e-12);
            assert!(tsallis(&p, hi) <= shannon(&p) + 1e-12);
        }
    }
}
