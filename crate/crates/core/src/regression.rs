//! Reference regression: fourteen numbered checks against published values,
//! closed forms and identity suites.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::qfun::identities::identity_suite;
use crate::qfun::{exp_q, log_q, QParam};
use crate::qsolve::{
    bridge_general_g, bridge_half, bridge_half_g, explicit_family, pressure_derivative, q_equilibrium,
    qruelle_solve, SolveOptions,
};
use crate::ruelle::{classical_pressure, equilibrium_markov, normalize, Jacobian};
use crate::shift::{Potential, Word};
use crate::staticq::{meson_vericat_bernoulli, q_entropy_vec, renyi_entropy, static_q_pressure, tsallis_to_renyi, ProbVector};
use crate::subadd::{asymptotic_pressure, frak_l_n, subadditivity_slack};
use crate::variational::{entropy_surface, q_pressure_scan};

/// Outcome of one numbered check.
#[derive(Debug, Clone, Serialize)]
pub struct CriterionOutcome {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed_ms: f64,
    pub time_limit_ms: f64,
}

impl CriterionOutcome {
    /// `PASS`/`FAIL` line with id, name, timing and detail.
    pub fn line(&self) -> String {
        format!(
            "[{}] criterion {:>2} {}: {} ({:.1} ms, limit {} ms)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.elapsed_ms,
            self.time_limit_ms
        )
    }
}

struct Check {
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Check {
    fn new() -> Self {
        Self { failures: Vec::new(), notes: Vec::new() }
    }

    fn close(&mut self, what: &str, got: f64, want: f64, tol: f64) {
        let ok = (got - want).abs() <= tol;
        let msg = format!("{what} = {got:.10} (want {want} ± {tol:e})");
        if ok {
            self.notes.push(msg);
        } else {
            self.failures.push(msg);
        }
    }

    fn at_most(&mut self, what: &str, got: f64, bound: f64) {
        let msg = format!("{what} = {got:.3e} (bound {bound:e})");
        if got <= bound {
            self.notes.push(msg);
        } else {
            self.failures.push(msg);
        }
    }

    fn require(&mut self, what: String, ok: bool) {
        if ok {
            self.notes.push(what);
        } else {
            self.failures.push(what);
        }
    }

    fn error(&mut self, what: &str, e: impl std::fmt::Display) {
        self.failures.push(format!("{what}: {e}"));
    }
}

fn run(id: u32, name: &'static str, limit_ms: f64, body: impl FnOnce(&mut Check)) -> CriterionOutcome {
    let start = Instant::now();
    let mut c = Check::new();
    body(&mut c);
    let elapsed: Duration = start.elapsed();
    let elapsed_ms = elapsed.as_secs_f64() * 1e3;
    if elapsed_ms > limit_ms {
        c.failures.push(format!("runtime {elapsed_ms:.1} ms exceeds {limit_ms} ms"));
    }
    let passed = c.failures.is_empty();
    let detail = if passed { c.notes.join("; ") } else { c.failures.join("; ") };
    CriterionOutcome { id, name, passed, detail, elapsed_ms, time_limit_ms: limit_ms }
}

macro_rules! tryc {
    ($c:expr, $what:expr, $e:expr) => {
        match $e {
            Ok(v) => v,
            Err(err) => {
                $c.error($what, err);
                return;
            }
        }
    };
}

/// Static equilibrium at `q = 1/3`, `β = 1.2`, `a = (0.5, 0.8)`.
pub fn criterion_1() -> CriterionOutcome {
    run(1, "static equilibrium", 1.0, |c| {
        let r = tryc!(c, "static_q_pressure", static_q_pressure(&[0.5, 0.8], 1.2, QParam::of(1.0 / 3.0)));
        c.close("pressure", r.pressure, 1.6895, 5e-4);
        c.close("p*_1", r.p_star.as_slice()[0], 0.3172, 5e-4);
        c.close("p*_2", r.p_star.as_slice()[1], 0.6828, 5e-4);
    })
}

/// Two-branch solve at `q̃ = 1/2` with `a12 = 2`, `a21 = 3.5`.
pub fn criterion_2() -> CriterionOutcome {
    run(2, "two-branch solve", 1000.0, |c| {
        let a = Potential::new(2, 2, vec![0.0, 2.0, 3.5, 0.0]).expect("finite table");
        let out = tryc!(c, "qruelle_solve", qruelle_solve(&a, QParam::of(0.5), &SolveOptions::default()));
        c.require(format!("{} branches found (want 2)", out.branches.len()), out.branches.len() == 2);
        let mut wanted = vec![-0.89595, -2.39595];
        for b in &out.branches {
            c.at_most(&format!("residual of branch {}", b.branch_id), b.residual, 1e-10);
            c.close(&format!("c of branch {}", b.branch_id), b.c, 3.85405, 1e-4);
            let phi2 = b.phi[1];
            if let Some(i) = wanted.iter().position(|w| (w - phi2).abs() <= 1e-4) {
                wanted.remove(i);
            } else {
                c.require(format!("phi2 = {phi2:.6} of branch {} matches no expected value", b.branch_id), false);
            }
        }
        c.require(format!("unmatched expected phi2 values: {wanted:?}"), wanted.is_empty());
    })
}

/// Memory-one solve at `q̃ = 1/2`, `A = (2, 5.5)`, and its derivative along `(1, 0)`.
pub fn criterion_3() -> CriterionOutcome {
    run(3, "memory-one regression", 2000.0, |c| {
        let a = Potential::new(2, 1, vec![2.0, 5.5]).expect("finite table");
        let opts = SolveOptions::default();
        let out = tryc!(c, "qruelle_solve", qruelle_solve(&a, QParam::of(0.5), &opts));
        let Some(b) = out.branches.iter().find(|b| (b.phi[0] - b.phi[1] - 2.71825).abs() <= 1e-4) else {
            c.require("no branch with phi(1) - phi(2) = 2.71825".into(), false);
            return;
        };
        c.close("c", b.c, 5.75, 1e-8);
        c.close("phi(1) - phi(2)", b.phi[0] - b.phi[1], 2.71825, 1e-4);
        let dir = Potential::new(2, 1, vec![1.0, 0.0]).expect("finite table");
        let d = tryc!(
            c,
            "pressure_derivative",
            pressure_derivative(&a, &dir, QParam::of(1.5), 1e-4, Some(b.branch_id), &opts)
        );
        c.close("dc/ds", d.dpds, 0.5, 1e-6);
    })
}

/// Explicit family rows at `q̃ = 2/3` and `q̃ = 4/5`, with solver recovery.
pub fn criterion_4() -> CriterionOutcome {
    run(4, "explicit family", 1000.0, |c| {
        let rows = [
            (2.0 / 3.0, 0.3, 0.6, [0.857533, 0.52199, 0.655413, 0.991701]),
            (0.8, 0.2, 0.3, [2.18972, 0.306117, 1.15786, 1.3761]),
        ];
        for (qt, q1, q2, want) in rows {
            let q = QParam::of(qt);
            let f = tryc!(c, "explicit_family", explicit_family(q, q1, q2));
            for (name, got, w) in [("a12", f.a12, want[0]), ("a22", f.a22, want[1]), ("phi2", f.phi2, want[2]), ("c", f.c, want[3])] {
                c.close(&format!("q̃={qt:.4} {name}"), got, w, 1e-5);
            }
            let out = tryc!(c, "qruelle_solve", qruelle_solve(&f.potential(), q, &SolveOptions::default()));
            let found = out
                .branches
                .iter()
                .any(|b| (b.phi[1] - f.phi2).abs() <= 1e-6 && (b.c - f.c).abs() <= 1e-6);
            c.require(format!("q̃={qt:.4}: solver recovers (phi2, c)"), found);
        }
    })
}

fn random_memory_two(rng: &mut ChaCha8Rng) -> Potential {
    Potential::new(2, 2, (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect()).expect("finite table")
}

/// Random two-symbol Jacobian of memory one.
pub fn random_jacobian(rng: &mut ChaCha8Rng) -> Jacobian {
    let p: [f64; 2] = [rng.gen_range(0.1..0.9), rng.gen_range(0.1..0.9)];
    Jacobian::new(2, 1, vec![p[0], p[1], 1.0 - p[0], 1.0 - p[1]]).expect("rows sum to one")
}

/// Scan value against the solved constant for 20 random memory-two potentials.
pub fn criterion_5() -> CriterionOutcome {
    run(5, "solver constant vs variational scan", 60_000.0, |c| {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let q = QParam::of(1.5);
        let opts = SolveOptions::default();
        let (mut used, mut worst, mut tried) = (0, 0.0f64, 0);
        while used < 20 && tried < 500 {
            tried += 1;
            let a = random_memory_two(&mut rng);
            let Ok(eq) = q_equilibrium(&a, q, &opts) else { continue };
            let scan = tryc!(c, "q_pressure_scan", q_pressure_scan(&a, q, 400));
            worst = worst.max((scan.value - eq.pressure).abs());
            used += 1;
        }
        c.require(format!("{used} potentials with a positive branch"), used == 20);
        c.at_most("max |scan - c|", worst, 1e-3);
    })
}

/// Round trip `A = -log_q(1/J)` for 20 random Jacobians.
pub fn criterion_6() -> CriterionOutcome {
    run(6, "Bowen round trip", 60_000.0, |c| {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let q = QParam::of(1.5);
        let opts = SolveOptions::default();
        let (mut c_err, mut tv, mut scan_err, mut scan_tv) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for _ in 0..20 {
            let j = random_jacobian(&mut rng);
            let a = tryc!(c, "potential", crate::qsolve::minus_log_q_inverse(&j, q));
            let target = tryc!(c, "equilibrium_markov", equilibrium_markov(&j));
            let eq = tryc!(c, "q_equilibrium", q_equilibrium(&a, q, &opts));
            c_err = c_err.max(eq.pressure.abs());
            tv = tv.max(tryc!(c, "tv", eq.mu.row_tv_distance(&target)));
            let scan = tryc!(c, "q_pressure_scan", q_pressure_scan(&a, q, 400));
            scan_err = scan_err.max(scan.value.abs());
            scan_tv = scan_tv.max(tryc!(c, "tv", scan.argmax.row_tv_distance(&target)));
        }
        c.at_most("max |solver c|", c_err, 1e-8);
        c.at_most("max row TV of solver measure", tv, 1e-2);
        c.at_most("max |scan value|", scan_err, 1e-3);
        c.at_most("max row TV of scan argmax", scan_tv, 1e-2);
    })
}

/// Identity suite at `10^4` points per identity.
pub fn criterion_7() -> CriterionOutcome {
    run(7, "identity suite", 5000.0, |c| {
        let report = identity_suite(10_000, 7);
        for chk in report.checks.iter().filter(|k| !k.report_only) {
            c.at_most(&format!("{} violation", chk.name), chk.violation, 1e-9);
        }
    })
}

/// Maximum of the two-state q-entropy surface.
pub fn criterion_8() -> CriterionOutcome {
    run(8, "entropy maximum", 10_000.0, |c| {
        for qv in [0.5, 0.9] {
            let q = QParam::of(qv);
            let s = tryc!(c, "entropy_surface", entropy_surface(q, 200));
            c.require(
                format!("q={qv}: argmax ({}, {})", s.max.p12, s.max.p21),
                s.max.p12 == 0.5 && s.max.p21 == 0.5,
            );
            c.close(&format!("q={qv}: max"), s.max.h_q, log_q(2.0, q).unwrap_or(f64::NAN), 1e-6);
        }
        c.close("q=0.5 reference", log_q(2.0, QParam::of(0.5)).unwrap_or(f64::NAN), 0.828427, 1e-6);
    })
}

/// Exact values and tail fits of `(1/n) log 𝔏_n`.
pub fn criterion_9() -> CriterionOutcome {
    run(9, "asymptotic pressure", 30_000.0, |c| {
        let q = QParam::of(0.5);
        let x1 = Word::parse(2, "1").expect("valid word");
        let x2 = Word::parse(2, "2").expect("valid word");
        let one = Potential::constant(2, 1, 1.0).expect("finite");
        let mut worst: f64 = 0.0;
        for n in 0..=50usize {
            let dp = tryc!(c, "frak_l_n", frak_l_n(&one, q, &x1, n)).ln;
            let exact = n as f64 * 2f64.ln() + 2.0 * (1.0 + 0.5 * n as f64).ln();
            worst = worst.max(((dp - exact).exp_m1()).abs());
        }
        c.at_most("A≡1 relative error for n <= 50", worst, 1e-12);
        let r = tryc!(c, "asymptotic_pressure", asymptotic_pressure(&one, q, &x1, 2000));
        c.close("A≡1 estimate", r.estimate, 2f64.ln(), 0.01);
        let a01 = Potential::new(2, 1, vec![0.0, 1.0]).expect("finite");
        let r = tryc!(c, "asymptotic_pressure", asymptotic_pressure(&a01, q, &x1, 2000));
        c.close("A=(0,1) estimate", r.estimate, 2f64.ln(), 0.02);
        let m2 = Potential::new(2, 2, vec![0.0, 0.5, 1.0, 0.5]).expect("finite");
        let r1 = tryc!(c, "asymptotic_pressure", asymptotic_pressure(&m2, q, &x1, 2000));
        let r2 = tryc!(c, "asymptotic_pressure", asymptotic_pressure(&m2, q, &x2, 2000));
        c.at_most("base point difference", (r1.estimate - r2.estimate).abs(), 1e-3);
    })
}

/// `φ_{m+n} <= φ_m∘σ^n + φ_n` for random nonnegative potentials.
pub fn criterion_10() -> CriterionOutcome {
    run(10, "sub-additivity", 5000.0, |c| {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let q = QParam::of(0.5);
        let mut worst = f64::INFINITY;
        for p in 0..5 {
            let memory = 1 + p % 2;
            let a = Potential::new(2, memory, (0..(1 << memory)).map(|_| rng.gen_range(0.0..2.0)).collect())
                .expect("finite");
            let tail = Word::new(2, vec![1; memory - 1]).expect("valid");
            for _ in 0..10_000 {
                let n = rng.gen_range(1..40);
                let m = rng.gen_range(1..40);
                let w = Word::new(2, (0..n + m).map(|_| rng.gen_range(1..=2u8)).collect()).expect("valid");
                let s = tryc!(c, "subadditivity_slack", subadditivity_slack(&a, q, &w, n, &tail));
                worst = worst.min(s);
            }
        }
        c.require(format!("minimum slack {worst:.3e} (floor -1e-12)"), worst >= -1e-12);
    })
}

/// Classical pressure, normalization and Rokhlin consistency.
pub fn criterion_11() -> CriterionOutcome {
    run(11, "classical oracle", 5000.0, |c| {
        let a = Potential::new(2, 1, vec![0.0, 1.0]).expect("finite");
        let p = tryc!(c, "classical_pressure", classical_pressure(&a));
        c.close("P((0,1))", p, (1.0 + 1f64.exp()).ln(), 1e-10);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (mut rows, mut rokhlin) = (0.0f64, 0.0f64);
        for i in 0..100 {
            let d = 2 + i % 2;
            let memory = 1 + (i / 2) % 2;
            let a = Potential::new(d, memory, (0..d.pow(memory as u32)).map(|_| rng.gen_range(-2.0..2.0)).collect())
                .expect("finite");
            let nz = tryc!(c, "normalize", normalize(&a));
            let j = tryc!(c, "jacobian", Jacobian::from_log(&nz.log_j));
            rows = rows.max(j.max_row_defect());
            rokhlin = rokhlin.max(tryc!(c, "classical_pressure", classical_pressure(&nz.log_j)).abs());
        }
        c.at_most("max row-sum defect", rows, 1e-10);
        c.at_most("max |P(log J)|", rokhlin, 1e-10);
    })
}

/// Scalar identity, normalized equation and general inverse at `q = 1/2`.
pub fn criterion_12() -> CriterionOutcome {
    run(12, "bridge identities", 5000.0, |c| {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let half = QParam::of(0.5);
        let (mut scalar, mut general) = (0.0f64, 0.0f64);
        for _ in 0..1000 {
            let (a, a1, a2, cc) = (
                rng.gen_range(-1.5..3.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            let l = a1 - a2 - cc;
            let g = tryc!(c, "bridge_half_g", bridge_half_g(a, a1, a2, cc));
            let lhs = tryc!(c, "exp_q", exp_q(g + l, half.dual()));
            let rhs = tryc!(c, "exp_q", exp_q(a, half)) * l.exp();
            scalar = scalar.max((lhs - rhs).abs());
            let gg = tryc!(c, "bridge_general_g", bridge_general_g(a, a1, a2, cc, half));
            general = general.max((gg - g).abs());
        }
        c.at_most("scalar identity error", scalar, 1e-10);
        let mut worst: f64 = 0.0;
        for _ in 0..10 {
            let a = Potential::new(2, 1, vec![rng.gen_range(-1.0..2.0), rng.gen_range(-1.0..2.0)]).expect("finite");
            let br = tryc!(c, "bridge_half", bridge_half(&a));
            worst = worst.max(br.residual);
        }
        c.at_most("normalized equation residual", worst, 1e-9);
        c.at_most("general g vs closed form", general, 1e-9);
    })
}

/// Tsallis–Rényi relation and the Méson–Vericat Bernoulli value.
pub fn criterion_13() -> CriterionOutcome {
    run(13, "Renyi relation", 2000.0, |c| {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let (mut rel, mut mv) = (0.0f64, 0.0f64);
        for _ in 0..10_000 {
            let d = rng.gen_range(2..6);
            let w: Vec<f64> = (0..d).map(|_| rng.gen_range(0.01..1.0)).collect();
            let p = tryc!(c, "prob", ProbVector::from_weights(&w));
            let q = QParam::of(rng.gen_range(0.05..0.95));
            let hr = renyi_entropy(&p, q);
            let f = tryc!(c, "tsallis_to_renyi", tsallis_to_renyi(q_entropy_vec(&p, q), q));
            rel = rel.max((hr - f).abs() / hr.abs().max(1.0));
            let m = tryc!(c, "meson_vericat_bernoulli", meson_vericat_bernoulli(&p, q));
            mv = mv.max((m - (1.0 - q.value()) * hr).abs());
        }
        c.at_most("Renyi relation defect", rel, 1e-10);
        c.at_most("Meson-Vericat defect", mv, 1e-12);
    })
}

/// Derivative identity on a fixed memory-two potential at `q = 1/2`.
pub fn criterion_14() -> CriterionOutcome {
    run(14, "derivative identity", 5000.0, |c| {
        let a = Potential::new(2, 2, vec![0.3, -0.2, 0.5, 0.1]).expect("finite");
        let v = Potential::new(2, 2, vec![1.0, 0.0, -0.5, 0.25]).expect("finite");
        let d = tryc!(
            c,
            "pressure_derivative",
            pressure_derivative(&a, &v, QParam::of(0.5), 1e-4, None, &SolveOptions::default())
        );
        match d.integral_defect {
            Some(defect) => c.at_most(&format!("|{:.10} - integral formula|", d.dpds), defect, 1e-4),
            None => c.require("tracked branch has no positive summands".into(), false),
        }
    })
}

/// All fourteen checks in order.
pub fn run_all() -> Vec<CriterionOutcome> {
    vec![
        criterion_1(),
        criterion_2(),
        criterion_3(),
        criterion_4(),
        criterion_5(),
        criterion_6(),
        criterion_7(),
        criterion_8(),
        criterion_9(),
        criterion_10(),
        criterion_11(),
        criterion_12(),
        criterion_13(),
        criterion_14(),
    ]
}

/// Looks up a check by number.
pub fn run_one(id: u32) -> Option<CriterionOutcome> {
    Some(match id {
        1 => criterion_1(),
        2 => criterion_2(),
        3 => criterion_3(),
        4 => criterion_4(),
        5 => criterion_5(),
        6 => criterion_6(),
        7 => criterion_7(),
        8 => criterion_8(),
        9 => criterion_9(),
        10 => criterion_10(),
        11 => criterion_11(),
        12 => criterion_12(),
        13 => criterion_13(),
        14 => criterion_14(),
        _ => return None,
    })
}
