//! `qthermo` command-line front end.

mod output;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use qthermo::qfun::identities::identity_suite;
use qthermo::qfun::{dexp_q, dlog_q, exp_q, exp_q_ext, log_q, QParam};
use qthermo::qsolve::{pressure_derivative, q_equilibrium, qruelle_solve, SolveOptions};
use qthermo::regression::{run_all, run_one};
use qthermo::ruelle::{
    equilibrium_markov, ks_entropy, leading_eig, normalize, q_entropy_markov, q_entropy_variational,
    transfer_matrix, Jacobian, MarkovMeasure,
};
use qthermo::shift::{Potential, PotentialSpec, Word};
use qthermo::staticq::{
    beta_sweep, renyi_entropy, shannon_entropy, static_q_pressure, static_q_pressure_kkt, static_q_pressure_scan,
    q_entropy_vec, ProbVector,
};
use qthermo::subadd::asymptotic_pressure;
use qthermo::variational::{entropy_surface, q_pressure_scan};
use qthermo::QError;

use output::{csv_number, to_json, CliError};

#[derive(Parser, Debug)]
#[command(name = "qthermo", version, about = "Tsallis thermodynamic formalism on the one-sided full shift")]
struct Cli {
    /// Write the result to this file instead of standard output.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Seed for randomized steps; echoed in every JSON result.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate one deformed function at a point.
    ///
    /// log_q(u) = (u^(1-q) - 1)/(1 - q); exp_q(u) = (1 + (1-q)u)^(1/(1-q)) for
    /// 1 + (1-q)u > 0; dexp and dlog are their derivatives; exp-ext is the polynomial
    /// continuation of exp_q used when 1/(1-q) is a positive integer.
    Qfun(QfunArgs),
    /// Run the randomized identity suite for log_q and exp_q.
    ///
    /// Every non-report-only identity must hold within the tolerance at all sampled
    /// points; the exit status is 1 otherwise.
    Selftest(SelftestArgs),
    /// Static q-pressure P_q(βa) = max_p H_q(p) + β⟨a, p⟩ over the simplex.
    ///
    /// H_q(p) = Σ p_i log_q(1/p_i).
    StaticPressure(StaticArgs),
    /// CSV of β ↦ P_q(βa) on an equally spaced grid (header beta,pressure).
    ///
    /// Inadmissible β leave the pressure field empty.
    SweepBeta(SweepArgs),
    /// Entropies of a probability vector or of a two-state Markov chain.
    ///
    /// Vector: Shannon, Tsallis Σ p_i log_q(1/p_i) and Rényi log(Σ p_i^q)/(1-q).
    /// Chain (--p12, --p21): Kolmogorov–Sinai entropy, ∫ log_q(1/J) dμ, and with
    /// --variational the infimum over u of ∫ log_q(Σ_a u(ax)/u(x)) dμ.
    Entropy(EntropyArgs),
    /// Classical transfer operator L_A f(x) = Σ_a e^{A(ax)} f(ax).
    ///
    /// pressure = log λ for the leading eigenvalue λ with eigenfunction h;
    /// --normalize adds log J = A + log h - log h∘σ - log λ; --entropy q adds the
    /// entropies of the equilibrium state.
    Ruelle(RuelleArgs),
    /// Solve Σ_a e_{q̃}^{A(ax) + φ(ax) - φ(x) - c} = 1 for (φ, c), with q̃ = 2 - q.
    ///
    /// By default only branches whose summand bases 1 + (1-q̃)(·) are all positive are
    /// printed; --all-branches prints every root. --equilibrium (needs q) selects the
    /// positive branch maximizing H_q(μ_J) + ∫A dμ_J and reports the constant c' of
    /// the re-solve with potential -log_q(1/J).
    Solve(SolveArgs),
    /// d/ds c(A + sB) at s = 0 by Richardson-refined central differences.
    ///
    /// Also compares with ∫ J^{q̃-1}(B + φ' - φ'∘σ) dμ / ∫ J^{q̃-1} dμ and reports the gap.
    Derivative(DerivativeArgs),
    /// Growth rate of 𝔏_n(1)(x₀) = Σ_{σ^n y = x₀} e_q^{S_n A(y)}.
    ///
    /// (1/n) log 𝔏_n is computed exactly for n ≤ n_max and fitted as
    /// P + α log(n)/n + β/n on the upper half of the range.
    AsymPressure(AsymArgs),
    /// Grid search plus Nelder–Mead for sup_μ H_q(μ) + ∫A dμ over Markov measures.
    Scan(ScanArgs),
    /// CSV of H_q over two-state chains on the grid P12, P21 ∈ {i/grid} (header p12,p21,h_q).
    EntropySurface(SurfaceArgs),
    /// Replay the numbered acceptance checks with wall-clock timings.
    ///
    /// Prints one JSON record per check; the exit status is 1 if any check fails.
    #[command(name = "paper-regression")]
    Regression(RegressionArgs),
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum QFunction {
    Log,
    Exp,
    ExpExt,
    Dexp,
    Dlog,
}

#[derive(Args, Debug)]
struct QfunArgs {
    #[arg(long = "fn", value_enum)]
    function: QFunction,
    #[arg(long, allow_negative_numbers = true)]
    q: f64,
    #[arg(long, allow_negative_numbers = true)]
    u: f64,
}

#[derive(Args, Debug)]
struct SelftestArgs {
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum StaticMethod {
    Closed,
    Kkt,
    Scan,
}

#[derive(Args, Debug)]
struct StaticArgs {
    /// Comma-separated values a_1,...,a_d.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
    a: Vec<f64>,
    #[arg(long, allow_negative_numbers = true)]
    beta: f64,
    #[arg(long, allow_negative_numbers = true)]
    q: f64,
    #[arg(long, value_enum, default_value_t = StaticMethod::Closed)]
    method: StaticMethod,
    /// Grid resolution for --method scan.
    #[arg(long, default_value_t = 400)]
    grid: usize,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
    a: Vec<f64>,
    #[arg(long, allow_negative_numbers = true)]
    q: f64,
    #[arg(long = "from", allow_negative_numbers = true, default_value_t = 0.0)]
    lo: f64,
    #[arg(long = "to", allow_negative_numbers = true, default_value_t = 2.0)]
    hi: f64,
    #[arg(long, default_value_t = 101)]
    steps: usize,
}

#[derive(Args, Debug)]
struct EntropyArgs {
    #[arg(long, allow_negative_numbers = true)]
    q: f64,
    /// Probability vector p_1,...,p_d.
    #[arg(long, value_delimiter = ',', conflicts_with_all = ["p12", "p21"])]
    p: Option<Vec<f64>>,
    #[arg(long, requires = "p21")]
    p12: Option<f64>,
    #[arg(long, requires = "p12")]
    p21: Option<f64>,
    /// Also compute the variational q-entropy of the chain.
    #[arg(long, requires = "p12")]
    variational: bool,
}

#[derive(Args, Debug)]
struct RuelleArgs {
    #[arg(long)]
    potential: PathBuf,
    #[arg(long)]
    normalize: bool,
    /// Report KS and q-entropies of the equilibrium state at this q.
    #[arg(long, allow_negative_numbers = true)]
    entropy: Option<f64>,
}

#[derive(Args, Debug)]
struct QArgs {
    #[arg(long, allow_negative_numbers = true)]
    q: Option<f64>,
    #[arg(long = "q-tilde", allow_negative_numbers = true)]
    q_tilde: Option<f64>,
}

impl QArgs {
    fn resolve(&self) -> Result<(QParam, QParam), CliError> {
        let (q, q_tilde) = match (self.q, self.q_tilde) {
            (Some(q), None) => (q, 2.0 - q),
            (None, Some(t)) => (2.0 - t, t),
            (Some(q), Some(t)) => {
                if (q + t - 2.0).abs() > 1e-12 {
                    return Err(CliError::Usage(format!("--q {q} and --q-tilde {t} violate q-tilde = 2 - q")));
                }
                (q, t)
            }
            (None, None) => return Err(CliError::Usage("one of --q or --q-tilde is required".into())),
        };
        Ok((QParam::new(q)?, QParam::new(q_tilde)?))
    }
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[arg(long)]
    potential: PathBuf,
    #[command(flatten)]
    q: QArgs,
    #[arg(long)]
    all_branches: bool,
    #[arg(long)]
    equilibrium: bool,
    /// Accept positive branches whose smallest summand base is within the margin of 0.
    #[arg(long)]
    allow_boundary: bool,
}

#[derive(Args, Debug)]
struct DerivativeArgs {
    #[arg(long)]
    potential: PathBuf,
    #[arg(long)]
    direction: PathBuf,
    #[command(flatten)]
    q: QArgs,
    #[arg(long, default_value_t = 1e-3)]
    h: f64,
    /// Branch to differentiate along (default: first positive branch).
    #[arg(long)]
    branch: Option<usize>,
}

#[derive(Args, Debug)]
struct AsymArgs {
    #[arg(long)]
    potential: PathBuf,
    #[command(flatten)]
    q: QArgs,
    #[arg(long, default_value_t = 2000)]
    n_max: usize,
    /// Base point prefix as a digit string, e.g. 12.
    #[arg(long, default_value = "1")]
    x0: String,
    /// Also write the sequence (header n,value) to this CSV file.
    #[arg(long)]
    sequence_csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ScanArgs {
    #[arg(long)]
    potential: PathBuf,
    #[command(flatten)]
    q: QArgs,
    #[arg(long, default_value_t = 400)]
    grid: usize,
}

#[derive(Args, Debug)]
struct SurfaceArgs {
    #[arg(long, allow_negative_numbers = true)]
    q: f64,
    #[arg(long, default_value_t = 200)]
    grid: usize,
}

#[derive(Args, Debug)]
struct RegressionArgs {
    /// Run a single check by id.
    #[arg(long)]
    only: Option<u32>,
}

enum Rendered {
    Json(Value),
    Csv(String),
}

struct Outcome {
    rendered: Rendered,
    failed: bool,
}

impl Outcome {
    fn ok(rendered: Rendered) -> Self {
        Self { rendered, failed: false }
    }
}

fn load_potential(path: &Path) -> Result<Potential, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(path.display().to_string(), e))?;
    let spec: PotentialSpec = serde_json::from_str(&text).map_err(|e| CliError::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    spec.into_potential().map_err(|e| CliError::Parse {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn with_seed(mut v: Value, seed: u64) -> Value {
    if let Value::Object(map) = &mut v {
        map.insert("seed".into(), json!(seed));
    }
    v
}

fn chain_entropies(mu: &MarkovMeasure, q: QParam) -> Result<Value, CliError> {
    to_json(&json!({
        "ks": ks_entropy(mu),
        "q_entropy": q_entropy_markov(mu, q),
        "q": q.value(),
    }))
}

fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let seed = cli.seed;
    let json_out = |v: Value| Ok(Outcome::ok(Rendered::Json(with_seed(v, seed))));
    match &cli.command {
        Command::Qfun(a) => {
            let q = QParam::new(a.q)?;
            let value = match a.function {
                QFunction::Log => log_q(a.u, q)?,
                QFunction::Exp => exp_q(a.u, q)?,
                QFunction::ExpExt => exp_q_ext(a.u, q)?,
                QFunction::Dexp => dexp_q(a.u, q)?,
                QFunction::Dlog => dlog_q(a.u, q)?,
            };
            let name = format!("{:?}", a.function).to_lowercase();
            json_out(to_json(&json!({ "function": name, "q": a.q, "u": a.u, "value": value }))?)
        }
        Command::Selftest(a) => {
            let report = identity_suite(a.samples, seed);
            let failing: Vec<&str> = report.failing(a.tol).iter().map(|c| c.name).collect();
            let mut v = to_json(&report)?;
            if let Value::Object(map) = &mut v {
                map.insert("tolerance".into(), to_json(&a.tol)?);
                map.insert("failing".into(), json!(failing));
                map.insert("passed".into(), json!(failing.is_empty()));
            }
            Ok(Outcome {
                rendered: Rendered::Json(with_seed(v, seed)),
                failed: !failing.is_empty(),
            })
        }
        Command::StaticPressure(a) => {
            let q = QParam::new(a.q)?;
            let eq = match a.method {
                StaticMethod::Closed => static_q_pressure(&a.a, a.beta, q)?,
                StaticMethod::Kkt => static_q_pressure_kkt(&a.a, a.beta, q)?,
                StaticMethod::Scan => static_q_pressure_scan(&a.a, a.beta, q, a.grid)?,
            };
            let method = format!("{:?}", a.method).to_lowercase();
            json_out(to_json(&json!({
                "pressure": eq.pressure,
                "p_star": eq.p_star.as_slice(),
                "method": method,
                "q": a.q,
                "beta": a.beta,
            }))?)
        }
        Command::SweepBeta(a) => {
            let q = QParam::new(a.q)?;
            if a.a.is_empty() || a.a.iter().any(|x| !x.is_finite()) {
                return Err(CliError::Usage("--a must be a non-empty list of finite values".into()));
            }
            let mut csv = String::from("beta,pressure\n");
            for p in beta_sweep(&a.a, q, a.lo, a.hi, a.steps) {
                let pressure = p.pressure.map(csv_number).unwrap_or_default();
                csv.push_str(&format!("{},{}\n", csv_number(p.beta), pressure));
            }
            Ok(Outcome::ok(Rendered::Csv(csv)))
        }
        Command::Entropy(a) => {
            let q = QParam::new(a.q)?;
            if let Some(p) = &a.p {
                let p = ProbVector::new(p.clone())?;
                return json_out(to_json(&json!({
                    "shannon": shannon_entropy(&p),
                    "tsallis": q_entropy_vec(&p, q),
                    "renyi": renyi_entropy(&p, q),
                    "q": q.value(),
                }))?);
            }
            let (Some(p12), Some(p21)) = (a.p12, a.p21) else {
                return Err(CliError::Usage("give --p or both --p12 and --p21".into()));
            };
            let mu = MarkovMeasure::two_state(p12, p21)?;
            let mut v = chain_entropies(&mu, q)?;
            if a.variational {
                let var = q_entropy_variational(&mu, q, 2)?;
                if let Value::Object(map) = &mut v {
                    map.insert("q_entropy_variational".into(), to_json(&var.value)?);
                }
            }
            json_out(v)
        }
        Command::Ruelle(a) => {
            let pot = load_potential(&a.potential)?;
            let eig = leading_eig(&transfer_matrix(&pot)?, 1e-13)?;
            let mut v = json!({
                "pressure": eig.lambda.ln(),
                "lambda": eig.lambda,
                "h": eig.h,
            });
            let needs_normal = a.normalize || a.entropy.is_some();
            let normal = if needs_normal { Some(normalize(&pot)?) } else { None };
            if let (true, Some(n)) = (a.normalize, &normal) {
                v["logJ"] = json!(n.log_j.values());
            }
            if let (Some(q), Some(n)) = (a.entropy, &normal) {
                let mu = equilibrium_markov(&Jacobian::from_log(&n.log_j)?)?;
                v["entropies"] = chain_entropies(&mu, QParam::new(q)?)?;
            }
            json_out(to_json(&v)?)
        }
        Command::Solve(a) => {
            let pot = load_potential(&a.potential)?;
            let (q, q_tilde) = a.q.resolve()?;
            let opts = SolveOptions { allow_boundary: a.allow_boundary, seed, ..SolveOptions::default() };
            let out = qruelle_solve(&pot, q_tilde, &opts)?;
            let branches: Vec<_> = if a.all_branches {
                out.branches.clone()
            } else {
                out.branches.iter().filter(|b| b.summands_positive).cloned().collect()
            };
            if branches.is_empty() {
                return Err(CliError::Core(if a.all_branches {
                    QError::NonConvergence("no root found".into())
                } else {
                    QError::NoPositiveBranch
                }));
            }
            let mut v = json!({
                "q": q.value(),
                "q_tilde": q_tilde.value(),
                "branches": to_json(&branches)?,
                "continuation_breakdown": out.continuation_breakdown,
                "starts": out.starts,
            });
            if a.equilibrium {
                let eq = q_equilibrium(&pot, q, &opts)?;
                v["equilibrium"] = json!({
                    "pressure": eq.pressure,
                    "variational_value": eq.variational_value,
                    "bowen_c": eq.bowen_c,
                    "branch_id": eq.branch.branch_id,
                    "transitions": eq.mu.transitions(),
                    "stationary": eq.mu.pi(),
                });
            }
            json_out(to_json(&v)?)
        }
        Command::Derivative(a) => {
            let pot = load_potential(&a.potential)?;
            let dir = load_potential(&a.direction)?;
            let (q, _) = a.q.resolve()?;
            let opts = SolveOptions { seed, ..SolveOptions::default() };
            let d = pressure_derivative(&pot, &dir, q, a.h, a.branch, &opts)?;
            json_out(to_json(&json!({
                "dPds": d.dpds,
                "central": d.central,
                "c": d.branch.c,
                "branch_id": d.branch.branch_id,
                "integral_formula": d.integral_formula,
                "integral_defect": d.integral_defect,
                "q": q.value(),
                "h": a.h,
            }))?)
        }
        Command::AsymPressure(a) => {
            let pot = load_potential(&a.potential)?;
            let (q, _) = a.q.resolve()?;
            let x0 = Word::parse(pot.d(), &a.x0)?;
            let res = asymptotic_pressure(&pot, q, &x0, a.n_max)?;
            let csv_path = match &a.sequence_csv {
                Some(path) => {
                    let mut csv = String::from("n,value\n");
                    for (n, v) in &res.sequence {
                        csv.push_str(&format!("{n},{}\n", csv_number(*v)));
                    }
                    fs::write(path, csv).map_err(|e| CliError::Io(path.display().to_string(), e))?;
                    Some(path.display().to_string())
                }
                None => None,
            };
            json_out(to_json(&json!({
                "estimate": res.estimate,
                "fit_params": res.fit,
                "excluded_fraction": res.excluded_fraction,
                "tail_oscillation": res.tail_oscillation(),
                "sequence_csv_path": csv_path,
                "q": q.value(),
                "n_max": a.n_max,
                "x0": a.x0,
            }))?)
        }
        Command::Scan(a) => {
            let pot = load_potential(&a.potential)?;
            let (q, _) = a.q.resolve()?;
            let res = q_pressure_scan(&pot, q, a.grid)?;
            json_out(to_json(&res)?)
        }
        Command::EntropySurface(a) => {
            let surface = entropy_surface(QParam::new(a.q)?, a.grid)?;
            let mut csv = String::from("p12,p21,h_q\n");
            for p in &surface.points {
                csv.push_str(&format!("{},{},{}\n", csv_number(p.p12), csv_number(p.p21), csv_number(p.h_q)));
            }
            Ok(Outcome::ok(Rendered::Csv(csv)))
        }
        Command::Regression(a) => {
            let outcomes = match a.only {
                Some(id) => vec![run_one(id).ok_or_else(|| CliError::Usage(format!("no check with id {id}")))?],
                None => run_all(),
            };
            let failed = outcomes.iter().any(|o| !o.passed);
            let v = json!({
                "criteria": to_json(&outcomes)?,
                "passed": !failed,
            });
            Ok(Outcome {
                rendered: Rendered::Json(with_seed(v, seed)),
                failed,
            })
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    if let Ok(raw) = std::env::var("QTHERMO_THREADS") {
        let n: usize = raw
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("QTHERMO_THREADS must be a positive integer, got {raw:?}")))?;
        if n == 0 {
            return Err(CliError::Usage("QTHERMO_THREADS must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn emit(cli: &Cli, outcome: &Outcome) -> Result<(), CliError> {
    let text = match &outcome.rendered {
        Rendered::Json(v) => {
            let mut s = serde_json::to_string_pretty(v).map_err(|e| CliError::NonFinite(e.to_string()))?;
            s.push('\n');
            s
        }
        Rendered::Csv(s) => s.clone(),
    };
    match &cli.output {
        Some(path) => fs::write(path, text).map_err(|e| CliError::Io(path.display().to_string(), e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads()
        .and_then(|()| run(&cli))
        .and_then(|outcome| emit(&cli, &outcome).map(|()| outcome.failed));
    match result {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
