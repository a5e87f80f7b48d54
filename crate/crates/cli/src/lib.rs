//! Command-line front end for `simplexflow`.
//!
//! Every command writes one JSON envelope `{command, version, seed, config,
//! result}` where `config` is the fully resolved parameter set. Exit codes:
//! 0 on success, 1 for invalid input or I/O failures, 2 for numerical
//! failures (the envelope is still written when a flow stops on a failed step).

pub mod args;
pub mod config;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::Path;

use clap::Parser;
use serde::Serialize;
use serde_json::{json, Value};
use simplexflow::dynamics::Termination;
use simplexflow::minimize::{energy_of_candidates_with, restart_rng, sample_ball};
use simplexflow::verify::{self, DescentSearch, PerturbationConfig};
use simplexflow::{Attraction, DiscreteMeasure, PowerLawParams};

use crate::args::{Cli, Command, Format, VerifyCommand};
use crate::config::*;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) | CliError::Io(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

impl From<simplexflow::Error> for CliError {
    fn from(e: simplexflow::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

#[derive(Debug, Serialize)]
struct Envelope<'a> {
    command: &'a str,
    version: &'a str,
    seed: Option<u64>,
    config: Value,
    result: Value,
}

/// What a command produced, before formatting.
struct Outcome {
    command: &'static str,
    seed: Option<u64>,
    config: Value,
    result: Value,
    csv: Option<String>,
    /// Set when the result is complete but the run itself failed numerically.
    failure: Option<String>,
}

impl Outcome {
    fn new<C: Serialize, R: Serialize>(command: &'static str, seed: Option<u64>, config: &C, result: &R) -> Result<Self, CliError> {
        Ok(Self {
            command,
            seed,
            config: to_value(config)?,
            result: to_value(result)?,
            csv: None,
            failure: None,
        })
    }

    fn with_csv(mut self, csv: String) -> Self {
        self.csv = Some(csv);
        self
    }
}

fn to_value<T: Serialize>(v: &T) -> Result<Value, CliError> {
    serde_json::to_value(v).map_err(|e| CliError::Validation(e.to_string()))
}

/// Parses `argv` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(argv: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(CliError::Validation("--threads must be at least 1".into()));
        }
        // A pool built earlier in this process stays in place.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    let file = match &cli.config {
        Some(path) => Some(read_json(path)?),
        None => None,
    };
    let outcome = dispatch(&cli.command, file)?;
    let text = match cli.format {
        Format::Json => {
            let envelope = Envelope {
                command: outcome.command,
                version: env!("CARGO_PKG_VERSION"),
                seed: outcome.seed,
                config: outcome.config,
                result: outcome.result,
            };
            let mut s = simplexflow::json::to_string(&envelope).map_err(|e| CliError::Io(e.to_string()))?;
            s.push('\n');
            s
        }
        Format::Csv => outcome
            .csv
            .ok_or_else(|| CliError::Validation(format!("`{}` has no CSV output", outcome.command)))?,
    };
    match &cli.out {
        Some(path) => fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?,
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Io(e.to_string()))?,
    }
    match outcome.failure {
        Some(msg) => Err(CliError::Numerical(msg)),
        None => Ok(()),
    }
}

fn read_json(path: &Path) -> Result<Value, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

fn read_measure(path: &Path) -> Result<DiscreteMeasure, CliError> {
    serde_json::from_value(read_json(path)?).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

fn params(alpha: Attraction, beta: f64) -> Result<PowerLawParams, CliError> {
    Ok(PowerLawParams::from_attraction(alpha, beta)?)
}

fn finite_alpha(alpha: Attraction) -> Result<f64, CliError> {
    alpha
        .finite()
        .ok_or_else(|| CliError::Validation("this command needs a finite alpha".into()))
}

fn dispatch(command: &Command, file: Option<Value>) -> Result<Outcome, CliError> {
    match command {
        Command::Energy(a) => run_energy(resolve(file, a)?),
        Command::Flow(a) => run_flow(resolve(file, a)?),
        Command::Minimize(a) => run_minimize(resolve(file, a)?),
        Command::Metric(a) => run_metric(resolve(file, a)?),
        Command::Verify(VerifyCommand::Variance(a)) => run_variance(resolve(file, a)?),
        Command::Verify(VerifyCommand::VertexPotential(a)) => run_vertex_potential(resolve(file, a)?),
        Command::Verify(VerifyCommand::LocalMin(a)) => run_local_min(resolve(file, a)?),
        Command::Verify(VerifyCommand::Jung(a)) => run_jung(resolve(file, a)?),
        Command::Verify(VerifyCommand::Gamma(a)) => run_gamma(resolve(file, a)?),
        Command::ScanThreshold(a) => run_scan(resolve(file, a)?),
        Command::Candidates(a) => run_candidates(resolve(file, a)?),
    }
}

fn run_energy(cfg: EnergyConfig) -> Result<Outcome, CliError> {
    let mu = read_measure(&cfg.measure)?;
    let p = params(cfg.alpha, cfg.beta)?;
    let report = simplexflow::energy_report(&mu, &p);
    let el = if p.alpha().is_finite() {
        Some(simplexflow::euler_lagrange_residual(&mu, &p, None, cfg.probe_tol)?)
    } else {
        None
    };
    let result = json!({
        "energy": report.value,
        "potential_at_atoms": report.potential_at_atoms,
        "el_residual": report.el_residual,
        "euler_lagrange": el,
        "atoms": mu.len(),
        "dim": mu.dim(),
    });
    Outcome::new("energy", None, &cfg, &result)
}

fn run_flow(cfg: FlowRunConfig) -> Result<Outcome, CliError> {
    let p = params(cfg.alpha, cfg.beta)?;
    let mu0 = match &cfg.measure {
        Some(path) => read_measure(path)?,
        None => {
            if cfg.n == 0 || cfg.atoms == 0 {
                return Err(CliError::Validation("n and atoms must be positive".into()));
            }
            let radius = match cfg.init_radius {
                Some(r) if r > 0.0 && r.is_finite() => r,
                Some(r) => return Err(CliError::Validation(format!("init_radius must be positive, got {r}"))),
                None => p.radius_or_limit(),
            };
            let points = sample_ball(&mut restart_rng(cfg.seed, 0), cfg.n, cfg.atoms, radius);
            DiscreteMeasure::uniform(points)?
        }
    };
    let trace = simplexflow::flow(&mu0, &p, &cfg.flow_config(), cfg.seed)?;
    let failure = (trace.terminated_by == Termination::StepFailure)
        .then(|| format!("flow stopped on a failed step at t = {}", trace.times.last().copied().unwrap_or(0.0)));
    let mut out = Outcome::new("flow", Some(cfg.seed), &cfg, &trace)?.with_csv(trace.to_csv());
    out.failure = failure;
    Ok(out)
}

fn atoms_csv(mu: &DiscreteMeasure) -> String {
    let mut out: Vec<String> = (0..mu.dim()).map(|k| format!("x{k}")).collect();
    out.push("weight".into());
    let mut s = out.join(",");
    s.push('\n');
    for (i, x) in mu.points().enumerate() {
        for c in x {
            s.push_str(&format!("{c:.16e},"));
        }
        s.push_str(&format!("{:.16e}\n", mu.weight(i)));
    }
    s
}

fn run_minimize(cfg: MinimizeRunConfig) -> Result<Outcome, CliError> {
    let p = params(cfg.alpha, cfg.beta)?;
    let report = simplexflow::minimize_global(&p, &cfg.minimize_config())?;
    let csv = atoms_csv(&report.best);
    Ok(Outcome::new("minimize", Some(cfg.seed), &cfg, &report)?.with_csv(csv))
}

fn run_metric(cfg: MetricConfig) -> Result<Outcome, CliError> {
    let a = read_measure(&cfg.a)?;
    let b = read_measure(&cfg.b)?;
    let p = match cfg.p {
        Attraction::Finite(p) => p,
        Attraction::Infinite => f64::INFINITY,
    };
    let (distance, plan) = simplexflow::wasserstein(&a, &b, p)?;
    Outcome::new("metric", None, &cfg, &json!({ "distance": distance, "plan": plan }))
}

fn run_variance(cfg: VarianceConfig) -> Result<Outcome, CliError> {
    let report = verify::isodiametric_sweep(cfg.n, cfg.clouds, cfg.seed)?;
    Outcome::new("verify variance", Some(cfg.seed), &cfg, &report)
}

fn run_vertex_potential(cfg: VertexPotentialConfig) -> Result<Outcome, CliError> {
    let report = verify::vertex_potential_argmin(cfg.beta, cfg.n, cfg.h)?;
    Outcome::new("verify vertex-potential", None, &cfg, &report)
}

fn run_local_min(cfg: LocalMinConfig) -> Result<Outcome, CliError> {
    if cfg.masses.len() < 2 {
        return Err(CliError::Validation("local-min needs at least two vertex masses".into()));
    }
    let p = params(cfg.alpha, cfg.beta)?;
    let alpha = finite_alpha(cfg.alpha)?;
    let mu_hat = simplexflow::make_unit_simplex(cfg.masses.len() - 1, true)?.measure(&cfg.masses)?;
    let pert = PerturbationConfig {
        radius: cfg.radius,
        trials: cfg.trials,
        split_factor: cfg.split_factor,
        seed: cfg.seed,
    };
    let report = verify::local_min_perturbation_test(&mu_hat, &p, &pert)?;
    let second_variation = verify::second_variation_check(alpha, cfg.beta, &cfg.masses)?;
    let sweep = if cfg.radii.is_empty() {
        None
    } else {
        Some(verify::radius_sweep(&mu_hat, &p, &pert, &cfg.radii)?)
    };
    let result = json!({
        "perturbation": to_value(&report)?,
        "second_variation": to_value(&second_variation)?,
        "radius_sweep": to_value(&sweep)?,
    });
    Outcome::new("verify local-min", Some(cfg.seed), &cfg, &result)
}

fn run_jung(cfg: JungConfig) -> Result<Outcome, CliError> {
    let report = verify::jung_check(cfg.n, cfg.clouds, cfg.samples, cfg.seed)?;
    Outcome::new("verify jung", Some(cfg.seed), &cfg, &report)
}

fn run_gamma(cfg: GammaConfig) -> Result<Outcome, CliError> {
    let mcfg = simplexflow::MinimizeConfig {
        n: cfg.n,
        atoms: cfg.atoms,
        restarts: cfg.restarts,
        seed: cfg.seed,
        ..Default::default()
    };
    let table = verify::gamma_convergence_experiment(cfg.beta, &cfg.alphas, cfg.n, &mcfg)?;
    let csv = table.to_csv();
    Ok(Outcome::new("verify gamma", Some(cfg.seed), &cfg, &table)?.with_csv(csv))
}

fn run_scan(cfg: ScanConfig) -> Result<Outcome, CliError> {
    if cfg.masses.len() < 2 {
        return Err(CliError::Validation("scan-threshold needs at least two vertex masses".into()));
    }
    let search = DescentSearch {
        radius: cfg.radius,
        random_trials: cfg.random_trials,
        seed: cfg.seed,
        ..Default::default()
    };
    let estimate = verify::scan_local_threshold(cfg.beta, &cfg.masses, cfg.masses.len() - 1, cfg.bracket_tol, &search)?;
    let mut csv = String::from("alpha,descent_found\n");
    for probe in &estimate.probes {
        csv.push_str(&format!("{:.16e},{}\n", probe.alpha, probe.descent_found));
    }
    Ok(Outcome::new("scan-threshold", Some(cfg.seed), &cfg, &estimate)?.with_csv(csv))
}

fn run_candidates(cfg: CandidatesConfig) -> Result<Outcome, CliError> {
    let p = params(cfg.alpha, cfg.beta)?;
    let sphere_atoms = cfg.sphere_atoms.unwrap_or(if cfg.n <= 2 { 720 } else { 240 });
    let table = energy_of_candidates_with(&p, cfg.n, sphere_atoms)?;
    let resolved = CandidatesConfig {
        sphere_atoms: Some(sphere_atoms),
        ..cfg
    };
    let result = json!({ "table": to_value(&table)?, "min": table.min() });
    Outcome::new("candidates", None, &resolved, &result)
}
