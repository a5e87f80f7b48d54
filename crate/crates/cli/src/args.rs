use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use simplexflow::Attraction;

#[derive(Debug, Parser)]
#[command(name = "simplexflow", version, about = "Power-law interaction energies, flows, minimizers and simplex checks")]
pub struct Cli {
    /// JSON file with parameters for the subcommand; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Worker threads; 1 gives fully serial execution.
    #[arg(long, global = true, env = "SIMPLEXFLOW_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Energy, atom potentials and Euler-Lagrange residual of a measure.
    Energy(EnergyArgs),
    /// Integrate the particle aggregation flow.
    Flow(FlowArgs),
    /// Multistart search for a global minimizer.
    Minimize(MinimizeArgs),
    /// Wasserstein distance between two measures.
    Metric(MetricArgs),
    #[command(subcommand)]
    Verify(VerifyCommand),
    /// Empirical bracket for the local threshold on beta = 2.
    ScanThreshold(ScanArgs),
    /// Energies of the simplex, sphere and single-atom candidates.
    Candidates(CandidatesArgs),
}

#[derive(Debug, Subcommand)]
pub enum VerifyCommand {
    /// Isodiametric variance bound on random clouds.
    Variance(VarianceArgs),
    /// Vertex potential minimizers on the Reuleaux domain.
    VertexPotential(VertexPotentialArgs),
    /// Perturbation test of a simplex measure.
    LocalMin(LocalMinArgs),
    /// Jung radius bound on random clouds and on the Reuleaux domain.
    Jung(JungArgs),
    /// Distance of minimizers to the simplex family for growing alpha.
    Gamma(GammaArgs),
}

pub fn parse_exponent(s: &str) -> Result<Attraction, String> {
    match s.trim() {
        "inf" | "infinity" | "+inf" => Ok(Attraction::Infinite),
        t => t
            .parse::<f64>()
            .map(Attraction::Finite)
            .map_err(|e| format!("expected a number or \"inf\": {e}")),
    }
}

#[derive(Debug, Args, Serialize)]
pub struct EnergyArgs {
    /// Measure file: {"dim", "points", "weights"}.
    #[arg(long)]
    pub measure: Option<PathBuf>,
    #[arg(long, value_parser = parse_exponent)]
    pub alpha: Option<Attraction>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub probe_tol: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct FlowArgs {
    /// Initial measure; without it `atoms` uniform atoms are sampled in a ball.
    #[arg(long)]
    pub measure: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub atoms: Option<usize>,
    #[arg(long)]
    pub init_radius: Option<f64>,
    #[arg(long, value_parser = parse_exponent)]
    pub alpha: Option<Attraction>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub dt_init: Option<f64>,
    #[arg(long)]
    pub t_max: Option<f64>,
    /// euler or rk4.
    #[arg(long)]
    pub integrator: Option<String>,
    #[arg(long)]
    pub adapt: Option<bool>,
    #[arg(long)]
    pub grad_tol: Option<f64>,
    #[arg(long)]
    pub record_every: Option<usize>,
    #[arg(long)]
    pub snapshot_every: Option<usize>,
    #[arg(long)]
    pub dt_max: Option<f64>,
    #[arg(long)]
    pub merge_tol: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct MinimizeArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, value_parser = parse_exponent)]
    pub alpha: Option<Attraction>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub atoms: Option<usize>,
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub init_radius: Option<f64>,
    #[arg(long)]
    pub cluster_tol: Option<f64>,
    #[arg(long)]
    pub polish_iters: Option<usize>,
    #[arg(long)]
    pub candidate_atoms: Option<usize>,
    #[arg(long)]
    pub dt_init: Option<f64>,
    #[arg(long)]
    pub t_max: Option<f64>,
    #[arg(long)]
    pub grad_tol: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct MetricArgs {
    /// 1, 2, any finite p >= 1, or inf.
    #[arg(long, value_parser = parse_exponent)]
    pub p: Option<Attraction>,
    #[arg(long)]
    pub a: Option<PathBuf>,
    #[arg(long)]
    pub b: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct VarianceArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub clouds: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args, Serialize)]
pub struct VertexPotentialArgs {
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Grid spacing.
    #[arg(long)]
    pub h: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct LocalMinArgs {
    #[arg(long, value_parser = parse_exponent)]
    pub alpha: Option<Attraction>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// Vertex masses, comma separated; their count fixes n.
    #[arg(long, value_delimiter = ',')]
    pub masses: Option<Vec<f64>>,
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub split_factor: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Extra radii for a sweep reporting the largest passing radius.
    #[arg(long, value_delimiter = ',')]
    pub radii: Option<Vec<f64>>,
}

#[derive(Debug, Args, Serialize)]
pub struct JungArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub clouds: Option<usize>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args, Serialize)]
pub struct GammaArgs {
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub alphas: Option<Vec<f64>>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub atoms: Option<usize>,
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args, Serialize)]
pub struct ScanArgs {
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub masses: Option<Vec<f64>>,
    #[arg(long)]
    pub bracket_tol: Option<f64>,
    /// Largest splitting offset of the descent search.
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long)]
    pub random_trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args, Serialize)]
pub struct CandidatesArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, value_parser = parse_exponent)]
    pub alpha: Option<Attraction>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub sphere_atoms: Option<usize>,
}
