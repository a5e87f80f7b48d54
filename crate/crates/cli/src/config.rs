//! Resolved per-command configurations. Values come from the `--config`
//! file, then from flags, and unknown keys are rejected.

use std::path::PathBuf;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use simplexflow::{Attraction, FlowConfig, Integrator};

use crate::CliError;

/// Overlays the non-null flag values on the file object and deserializes the
/// result.
pub fn resolve<T: DeserializeOwned, A: Serialize>(file: Option<Value>, flags: &A) -> Result<T, CliError> {
    let mut merged = match file {
        None => Map::new(),
        Some(Value::Object(map)) => map,
        Some(_) => return Err(CliError::Validation("config file must hold a JSON object".into())),
    };
    let flags = serde_json::to_value(flags).map_err(|e| CliError::Validation(e.to_string()))?;
    if let Value::Object(map) = flags {
        for (key, value) in map {
            if !value.is_null() {
                merged.insert(key, value);
            }
        }
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| CliError::Validation(format!("invalid configuration: {e}")))
}

fn default_seed() -> u64 {
    0
}

fn default_n() -> usize {
    2
}

fn default_beta_two() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyConfig {
    pub measure: PathBuf,
    pub alpha: Attraction,
    pub beta: f64,
    #[serde(default = "EnergyConfig::default_probe_tol")]
    pub probe_tol: f64,
}

impl EnergyConfig {
    fn default_probe_tol() -> f64 {
        1e-12
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowRunConfig {
    #[serde(default)]
    pub measure: Option<PathBuf>,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "FlowRunConfig::default_atoms")]
    pub atoms: usize,
    #[serde(default)]
    pub init_radius: Option<f64>,
    pub alpha: Attraction,
    pub beta: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "FlowRunConfig::defaults")]
    pub dt_init: f64,
    #[serde(default = "FlowRunConfig::default_t_max")]
    pub t_max: f64,
    #[serde(default = "FlowRunConfig::default_integrator")]
    pub integrator: Integrator,
    #[serde(default = "FlowRunConfig::default_adapt")]
    pub adapt: bool,
    #[serde(default = "FlowRunConfig::default_grad_tol")]
    pub grad_tol: f64,
    #[serde(default = "FlowRunConfig::default_record_every")]
    pub record_every: usize,
    #[serde(default)]
    pub snapshot_every: usize,
    #[serde(default)]
    pub dt_max: Option<f64>,
    #[serde(default = "FlowRunConfig::default_merge_tol")]
    pub merge_tol: f64,
}

impl FlowRunConfig {
    fn defaults() -> f64 {
        FlowConfig::default().dt_init
    }
    fn default_atoms() -> usize {
        60
    }
    fn default_t_max() -> f64 {
        FlowConfig::default().t_max
    }
    fn default_integrator() -> Integrator {
        FlowConfig::default().integrator
    }
    fn default_adapt() -> bool {
        FlowConfig::default().adapt
    }
    fn default_grad_tol() -> f64 {
        FlowConfig::default().grad_tol
    }
    fn default_record_every() -> usize {
        FlowConfig::default().record_every
    }
    fn default_merge_tol() -> f64 {
        FlowConfig::default().merge_tol
    }

    pub fn flow_config(&self) -> FlowConfig {
        FlowConfig {
            dt_init: self.dt_init,
            t_max: self.t_max,
            integrator: self.integrator,
            adapt: self.adapt,
            grad_tol: self.grad_tol,
            record_every: self.record_every,
            snapshot_every: self.snapshot_every,
            dt_max: self.dt_max,
            merge_tol: self.merge_tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MinimizeRunConfig {
    #[serde(default = "default_n")]
    pub n: usize,
    pub alpha: Attraction,
    pub beta: f64,
    #[serde(default = "MinimizeRunConfig::default_atoms")]
    pub atoms: usize,
    #[serde(default = "MinimizeRunConfig::default_restarts")]
    pub restarts: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub init_radius: Option<f64>,
    #[serde(default = "MinimizeRunConfig::default_cluster_tol")]
    pub cluster_tol: f64,
    #[serde(default = "MinimizeRunConfig::default_polish_iters")]
    pub polish_iters: usize,
    #[serde(default = "MinimizeRunConfig::default_candidate_atoms")]
    pub candidate_atoms: usize,
    #[serde(default = "MinimizeRunConfig::default_dt_init")]
    pub dt_init: f64,
    #[serde(default = "MinimizeRunConfig::default_t_max")]
    pub t_max: f64,
    #[serde(default = "MinimizeRunConfig::default_grad_tol")]
    pub grad_tol: f64,
}

impl MinimizeRunConfig {
    fn base() -> simplexflow::MinimizeConfig {
        simplexflow::MinimizeConfig::default()
    }
    fn default_atoms() -> usize {
        Self::base().atoms
    }
    fn default_restarts() -> usize {
        Self::base().restarts
    }
    fn default_cluster_tol() -> f64 {
        Self::base().cluster_tol
    }
    fn default_polish_iters() -> usize {
        Self::base().polish_iters
    }
    fn default_candidate_atoms() -> usize {
        Self::base().candidate_atoms
    }
    fn default_dt_init() -> f64 {
        Self::base().flow.dt_init
    }
    fn default_t_max() -> f64 {
        Self::base().flow.t_max
    }
    fn default_grad_tol() -> f64 {
        Self::base().flow.grad_tol
    }

    pub fn minimize_config(&self) -> simplexflow::MinimizeConfig {
        let base = Self::base();
        simplexflow::MinimizeConfig {
            n: self.n,
            atoms: self.atoms,
            restarts: self.restarts,
            init_radius: self.init_radius,
            cluster_tol: self.cluster_tol,
            polish_iters: self.polish_iters,
            seed: self.seed,
            flow: FlowConfig {
                dt_init: self.dt_init,
                t_max: self.t_max,
                grad_tol: self.grad_tol,
                ..base.flow
            },
            candidate_atoms: self.candidate_atoms,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricConfig {
    pub p: Attraction,
    pub a: PathBuf,
    pub b: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VarianceConfig {
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "VarianceConfig::default_clouds")]
    pub clouds: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

impl VarianceConfig {
    fn default_clouds() -> usize {
        1000
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VertexPotentialConfig {
    #[serde(default = "default_beta_two")]
    pub beta: f64,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "VertexPotentialConfig::default_h")]
    pub h: f64,
}

impl VertexPotentialConfig {
    fn default_h() -> f64 {
        0.01
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalMinConfig {
    pub alpha: Attraction,
    pub beta: f64,
    pub masses: Vec<f64>,
    #[serde(default = "LocalMinConfig::default_radius")]
    pub radius: f64,
    #[serde(default = "LocalMinConfig::default_trials")]
    pub trials: usize,
    #[serde(default = "LocalMinConfig::default_split_factor")]
    pub split_factor: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub radii: Vec<f64>,
}

impl LocalMinConfig {
    fn default_radius() -> f64 {
        simplexflow::verify::PerturbationConfig::default().radius
    }
    fn default_trials() -> usize {
        simplexflow::verify::PerturbationConfig::default().trials
    }
    fn default_split_factor() -> usize {
        simplexflow::verify::PerturbationConfig::default().split_factor
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JungConfig {
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "VarianceConfig::default_clouds")]
    pub clouds: usize,
    #[serde(default = "JungConfig::default_samples")]
    pub samples: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

impl JungConfig {
    fn default_samples() -> usize {
        10_000
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaConfig {
    #[serde(default = "default_beta_two")]
    pub beta: f64,
    #[serde(default = "GammaConfig::default_alphas")]
    pub alphas: Vec<f64>,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "MinimizeRunConfig::default_atoms")]
    pub atoms: usize,
    #[serde(default = "MinimizeRunConfig::default_restarts")]
    pub restarts: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

impl GammaConfig {
    fn default_alphas() -> Vec<f64> {
        vec![6.0, 10.0, 20.0, 40.0]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    #[serde(default = "default_beta_two")]
    pub beta: f64,
    pub masses: Vec<f64>,
    #[serde(default = "ScanConfig::default_bracket_tol")]
    pub bracket_tol: f64,
    #[serde(default = "ScanConfig::default_radius")]
    pub radius: f64,
    #[serde(default = "ScanConfig::default_random_trials")]
    pub random_trials: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

impl ScanConfig {
    fn default_bracket_tol() -> f64 {
        0.25
    }
    fn default_radius() -> f64 {
        simplexflow::verify::DescentSearch::default().radius
    }
    fn default_random_trials() -> usize {
        simplexflow::verify::DescentSearch::default().random_trials
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CandidatesConfig {
    #[serde(default = "default_n")]
    pub n: usize,
    pub alpha: Attraction,
    pub beta: f64,
    /// Defaults to 720 for `n <= 2` and 240 otherwise.
    #[serde(default)]
    pub sphere_atoms: Option<usize>,
}
