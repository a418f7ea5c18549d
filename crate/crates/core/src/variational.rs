//! Brute-force maximization of `H_q(μ) + ∫A dμ` over two-symbol Markov measures.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{QError, Result};
use crate::optim::nelder_mead_max;
use crate::qfun::QParam;
use crate::ruelle::{q_entropy_markov, q_entropy_variational_masses, MarkovMeasure};
use crate::shift::Potential;

/// Clipping of free transition probabilities away from 0 and 1.
pub const SCAN_EPS: f64 = 1e-4;

/// Per-axis grid size used when the measure has four free parameters.
pub const MAX_GRID_MEMORY_TWO: usize = 24;

/// Nelder–Mead iterations of the refinement step.
pub const REFINE_ITERATIONS: usize = 400;

/// Two-symbol Markov measure of memory `k` with `θ_w = P(next symbol is 2 | w)`.
pub fn markov_from_theta(k: usize, theta: &[f64]) -> Result<MarkovMeasure> {
    let n = 1usize << k;
    if theta.len() != n {
        return Err(QError::InvalidInput(format!("expected {n} parameters")));
    }
    let transitions = theta.iter().flat_map(|&t| [1.0 - t, t]).collect();
    MarkovMeasure::from_transitions(2, k, transitions)
}

fn axis(g: usize) -> Vec<f64> {
    let g = g.max(2);
    (0..g)
        .map(|i| SCAN_EPS + (1.0 - 2.0 * SCAN_EPS) * i as f64 / (g - 1) as f64)
        .collect()
}

/// Grid of `θ` vectors for memory `k` with `grid_n` points per axis
/// (capped at [`MAX_GRID_MEMORY_TWO`] when `k = 2`).
pub fn grid_points(k: usize, grid_n: usize) -> Vec<Vec<f64>> {
    let dims = 1usize << k;
    let per = if k >= 2 { grid_n.min(MAX_GRID_MEMORY_TWO) } else { grid_n };
    let ax = axis(per);
    let total = ax.len().pow(dims as u32);
    (0..total)
        .map(|mut i| {
            let mut v = vec![0.0; dims];
            for slot in v.iter_mut() {
                *slot = ax[i % ax.len()];
                i /= ax.len();
            }
            v
        })
        .collect()
}

/// `H_q(μ) + ∫A dμ`.
pub fn q_pressure_objective(a: &Potential, q: QParam, mu: &MarkovMeasure) -> Result<f64> {
    Ok(q_entropy_markov(mu, q) + mu.integrate(a)?)
}

/// Outcome of [`q_pressure_scan`].
#[derive(Debug, Clone, Serialize)]
pub struct ScanResult {
    pub value: f64,
    pub argmax: MarkovMeasure,
    pub grid_n: usize,
    pub refined: bool,
    pub excluded_fraction: f64,
}

fn eval_theta(a: &Potential, q: QParam, k: usize, theta: &[f64]) -> f64 {
    if theta.iter().any(|&t| !(SCAN_EPS..=1.0 - SCAN_EPS).contains(&t)) {
        return f64::NEG_INFINITY;
    }
    markov_from_theta(k, theta)
        .and_then(|mu| q_pressure_objective(a, q, &mu))
        .unwrap_or(f64::NEG_INFINITY)
}

fn best_index(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, v) in values.iter().enumerate() {
        if v.is_finite() && best.map_or(true, |b| *v > values[b]) {
            best = Some(i);
        }
    }
    best
}

/// Maximizes `H_q(μ) + ∫A dμ` over Markov measures of memory `max(m-1, 1)` on a
/// grid, then refines the best grid point with Nelder–Mead.
pub fn q_pressure_scan(a: &Potential, q: QParam, grid_n: usize) -> Result<ScanResult> {
    if a.d() != 2 {
        return Err(QError::InvalidInput("scan supports d = 2 only".into()));
    }
    let k = a.context_len();
    if k > 2 {
        return Err(QError::SizeGuard("scan supports memory up to 3".into()));
    }
    let points = grid_points(k, grid_n);
    let f = |t: &Vec<f64>| eval_theta(a, q, k, t);
    #[cfg(feature = "parallel")]
    let values: Vec<f64> = {
        use rayon::prelude::*;
        points.par_iter().map(f).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let values: Vec<f64> = points.iter().map(f).collect();
    let i = best_index(&values).ok_or_else(|| QError::NonConvergence("no finite grid value".into()))?;
    let spacing = (1.0 - 2.0 * SCAN_EPS) / (grid_points_per_axis(k, grid_n) - 1) as f64;
    let obj = |t: &[f64]| eval_theta(a, q, k, t);
    let (theta_r, v_r) = nelder_mead_max(&obj, &points[i], spacing, REFINE_ITERATIONS);
    let (theta, refined) = if v_r > values[i] { (theta_r, true) } else { (points[i].clone(), false) };
    let argmax = markov_from_theta(k, &theta)?;
    let value = q_pressure_objective(a, q, &argmax)?;
    Ok(ScanResult {
        value,
        argmax,
        grid_n,
        refined,
        excluded_fraction: values.iter().filter(|v| !v.is_finite()).count() as f64 / values.len() as f64,
    })
}

fn grid_points_per_axis(k: usize, grid_n: usize) -> usize {
    (if k >= 2 { grid_n.min(MAX_GRID_MEMORY_TWO) } else { grid_n }).max(2)
}

/// One sample of the q-entropy surface of two-state chains.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SurfacePoint {
    pub p12: f64,
    pub p21: f64,
    pub h_q: f64,
}

/// Midpoint test `H((x+y)/2) - (H(x)+H(y))/2` along grid lines.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MidpointReport {
    pub tests: usize,
    /// Tests whose defect is below `-1e-10`.
    pub failures: usize,
    pub worst_defect: f64,
    pub worst_at: [f64; 4],
}

/// `H_q` of two-state chains on the grid `P12, P21 ∈ {i/grid_n : 0 < i < grid_n}`.
#[derive(Debug, Clone, Serialize)]
pub struct EntropySurface {
    pub q: f64,
    pub grid_n: usize,
    pub points: Vec<SurfacePoint>,
    pub max: SurfacePoint,
    pub midpoint: MidpointReport,
}

impl EntropySurface {
    /// CSV with header `p12,p21,h_q`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("p12,p21,h_q\n");
        for p in &self.points {
            s.push_str(&format!("{},{},{}\n", p.p12, p.p21, p.h_q));
        }
        s
    }
}

fn two_state_entropy(q: QParam, p12: f64, p21: f64) -> Result<f64> {
    Ok(q_entropy_markov(&MarkovMeasure::two_state(p12, p21)?, q))
}

/// Number of random midpoint tests in [`entropy_surface`].
pub const MIDPOINT_TESTS: usize = 1000;

/// Tabulates `H_q` over two-state chains and runs random midpoint tests along grid lines.
pub fn entropy_surface(q: QParam, grid_n: usize) -> Result<EntropySurface> {
    if grid_n < 2 {
        return Err(QError::InvalidInput("grid_n must be at least 2".into()));
    }
    let g = grid_n as f64;
    let coords: Vec<(usize, usize)> = (1..grid_n).flat_map(|i| (1..grid_n).map(move |j| (i, j))).collect();
    let eval = |&(i, j): &(usize, usize)| -> Result<SurfacePoint> {
        let (p12, p21) = (i as f64 / g, j as f64 / g);
        Ok(SurfacePoint { p12, p21, h_q: two_state_entropy(q, p12, p21)? })
    };
    #[cfg(feature = "parallel")]
    let points: Vec<SurfacePoint> = {
        use rayon::prelude::*;
        coords.par_iter().map(eval).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let points: Vec<SurfacePoint> = coords.iter().map(eval).collect::<Result<_>>()?;
    let values: Vec<f64> = points.iter().map(|p| p.h_q).collect();
    let max = points[best_index(&values).unwrap_or(0)];

    let mut rng = ChaCha8Rng::seed_from_u64(grid_n as u64);
    let mut report = MidpointReport {
        tests: 0,
        failures: 0,
        worst_defect: f64::INFINITY,
        worst_at: [0.0; 4],
    };
    if grid_n >= 3 {
        for _ in 0..MIDPOINT_TESTS {
            let fixed = rng.gen_range(1..grid_n) as f64 / g;
            let mut a = rng.gen_range(1..grid_n) as f64 / g;
            let mut b = rng.gen_range(1..grid_n) as f64 / g;
            if a == b {
                b = if b * g < (grid_n - 1) as f64 { b + 1.0 / g } else { b - 1.0 / g };
            }
            if a > b {
                std::mem::swap(&mut a, &mut b);
            }
            let along_p12 = rng.gen::<bool>();
            let at = |t: f64| {
                if along_p12 {
                    two_state_entropy(q, t, fixed)
                } else {
                    two_state_entropy(q, fixed, t)
                }
            };
            let defect = at(0.5 * (a + b))? - 0.5 * (at(a)? + at(b)?);
            report.tests += 1;
            if defect < -1e-10 {
                report.failures += 1;
            }
            if defect < report.worst_defect {
                report.worst_defect = defect;
                report.worst_at = if along_p12 { [a, fixed, b, fixed] } else { [fixed, a, fixed, b] };
            }
        }
    }
    Ok(EntropySurface {
        q: q.value(),
        grid_n,
        points,
        max,
        midpoint: report,
    })
}

/// Distribution of `H_q(λμ1 + (1-λ)μ2) - λH_q(μ1) - (1-λ)H_q(μ2)` for the variational q-entropy.
#[derive(Debug, Clone, Serialize)]
pub struct AffinityReport {
    pub q: f64,
    pub samples: usize,
    pub defects: Vec<f64>,
    pub min_defect: f64,
    pub max_defect: f64,
    pub mean_defect: f64,
    /// Minimizations where no restart met the gradient tolerance.
    pub optimizer_failures: usize,
}

/// Samples pairs of two-state chains and mixing weights and evaluates the
/// variational q-entropy (test functions of memory 2) on each mixture.
pub fn entropy_affinity_report(q: QParam, samples: usize, seed: u64) -> Result<AffinityReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut defects = Vec::with_capacity(samples);
    let mut failures = 0;
    for s in 0..samples {
        let mu1 = MarkovMeasure::two_state(rng.gen_range(0.05..0.95), rng.gen_range(0.05..0.95))?;
        let mu2 = MarkovMeasure::two_state(rng.gen_range(0.05..0.95), rng.gen_range(0.05..0.95))?;
        let lambda: f64 = rng.gen_range(0.05..0.95);
        let (m1, m2) = (mu1.cylinder_masses(2)?, mu2.cylinder_masses(2)?);
        let mix: Vec<f64> = m1.iter().zip(&m2).map(|(a, b)| lambda * a + (1.0 - lambda) * b).collect();
        let mut h = |m: &[f64]| -> Result<f64> {
            let r = q_entropy_variational_masses(2, 2, m, q, seed.wrapping_add(s as u64))?;
            if r.converged_restarts == 0 {
                failures += 1;
            }
            Ok(r.value)
        };
        let (h1, h2, hm) = (h(&m1)?, h(&m2)?, h(&mix)?);
        defects.push(hm - lambda * h1 - (1.0 - lambda) * h2);
    }
    let min_defect = defects.iter().copied().fold(f64::INFINITY, f64::min);
    let max_defect = defects.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean_defect = defects.iter().sum::<f64>() / defects.len().max(1) as f64;
    Ok(AffinityReport {
        q: q.value(),
        samples,
        defects,
        min_defect,
        max_defect,
        mean_defect,
        optimizer_failures: failures,
    })
}
