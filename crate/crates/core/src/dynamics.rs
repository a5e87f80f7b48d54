//! Particle discretization of the aggregation equation
//!
//! ```text
//! dx_i/dt = -sum_j m_j grad W(x_i - x_j)
//! ```
//!
//! with fixed weights. The energy is a Lyapunov function of the exact flow,
//! so the integrator monitors it: with `adapt` on, a step that raises the
//! energy by more than `1e-9 (1 + |E|)` is rejected and retried at half the
//! step size, and accepted steps let the step size grow again up to `dt_max`.

use serde::{Deserialize, Serialize};

use crate::energy::{energy, velocity_from_coords};
use crate::error::{Error, Result};
use crate::kernel::PowerLawParams;
use crate::measure::DiscreteMeasure;
use crate::numeric::norm;

/// Relative energy slack allowed on an accepted step.
pub const LYAPUNOV_TOL: f64 = 1e-9;
/// Step sizes below this abort the run.
pub const DT_FLOOR: f64 = 1e-15;
const GROWTH: f64 = 1.1;
const MERGE_CHECK_EVERY: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Integrator {
    Euler,
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowConfig {
    pub dt_init: f64,
    pub t_max: f64,
    pub integrator: Integrator,
    pub adapt: bool,
    /// Stop once every atom moves slower than this.
    pub grad_tol: f64,
    /// Record `(t, E)` every this many accepted steps.
    pub record_every: usize,
    /// Keep a configuration snapshot every this many accepted steps (0: first and last only).
    pub snapshot_every: usize,
    /// Upper bound on the adaptive step; defaults to `16 * dt_init`.
    pub dt_max: Option<f64>,
    /// Atoms closer than this are merged (mass conserving).
    pub merge_tol: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            dt_init: 0.05,
            t_max: 1000.0,
            integrator: Integrator::Rk4,
            adapt: true,
            grad_tol: 1e-9,
            record_every: 1,
            snapshot_every: 0,
            dt_max: None,
            merge_tol: 1e-12,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt_init > 0.0 && self.dt_init.is_finite()) {
            return Err(Error::InvalidParams("dt_init must be positive".into()));
        }
        if !(self.t_max > 0.0) {
            return Err(Error::InvalidParams("t_max must be positive".into()));
        }
        if !(self.grad_tol >= 0.0) {
            return Err(Error::InvalidParams("grad_tol must be >= 0".into()));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidParams("record_every must be >= 1".into()));
        }
        if let Some(m) = self.dt_max {
            if !(m >= self.dt_init) {
                return Err(Error::InvalidParams("dt_max must be >= dt_init".into()));
            }
        }
        if !(self.merge_tol >= 0.0) {
            return Err(Error::InvalidParams("merge_tol must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Tol,
    TMax,
    StepFailure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Snapshot {
    pub t: f64,
    pub measure: DiscreteMeasure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowTrace {
    pub times: Vec<f64>,
    pub energies: Vec<f64>,
    pub configs: Vec<Snapshot>,
    pub terminated_by: Termination,
    pub steps_accepted: usize,
    pub steps_rejected: usize,
    /// Largest atom speed at the final state.
    pub final_speed: f64,
    /// Largest distance of the barycenter from its initial position.
    pub max_barycenter_drift: f64,
    pub seed: u64,
}

impl FlowTrace {
    pub fn final_measure(&self) -> &DiscreteMeasure {
        &self.configs.last().expect("trace holds the final state").measure
    }

    /// `t,E` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,E\n");
        for (t, e) in self.times.iter().zip(&self.energies) {
            out.push_str(&format!("{t:.16e},{e:.16e}\n"));
        }
        out
    }

    /// Largest energy increase between consecutive records, relative to `1 + |E|`.
    pub fn worst_energy_increase(&self) -> f64 {
        self.energies
            .windows(2)
            .map(|w| (w[1] - w[0]) / (1.0 + w[0].abs()))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

struct State<'a> {
    dim: usize,
    weights: Vec<f64>,
    params: &'a PowerLawParams,
    alpha: f64,
}

impl State<'_> {
    fn velocity(&self, coords: &[f64]) -> Vec<f64> {
        velocity_from_coords(self.dim, coords, &self.weights, self.params, self.alpha)
    }

    fn energy(&self, coords: &[f64]) -> f64 {
        if coords.iter().any(|c| !c.is_finite()) {
            return f64::INFINITY;
        }
        let mu = DiscreteMeasure::from_flat(self.dim, coords.to_vec(), self.weights.clone())
            .expect("flow keeps a valid measure");
        energy(&mu, self.params)
    }

    fn step(&self, integrator: Integrator, x: &[f64], k1: &[f64], dt: f64) -> Vec<f64> {
        let axpy = |a: f64, v: &[f64]| -> Vec<f64> { x.iter().zip(v).map(|(xi, vi)| xi + a * vi).collect() };
        match integrator {
            Integrator::Euler => axpy(dt, k1),
            Integrator::Rk4 => {
                let k2 = self.velocity(&axpy(0.5 * dt, k1));
                let k3 = self.velocity(&axpy(0.5 * dt, &k2));
                let k4 = self.velocity(&axpy(dt, &k3));
                x.iter()
                    .enumerate()
                    .map(|(i, xi)| xi + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
                    .collect()
            }
        }
    }

    fn max_speed(&self, v: &[f64]) -> f64 {
        v.chunks_exact(self.dim).map(norm).fold(0.0, f64::max)
    }
}

/// Integrates the particle flow from `mu0`. The run is deterministic; `seed`
/// is carried into the trace so callers can tie it to their own sampling.
pub fn flow(mu0: &DiscreteMeasure, params: &PowerLawParams, cfg: &FlowConfig, seed: u64) -> Result<FlowTrace> {
    cfg.validate()?;
    let alpha = params.require_dynamics()?;
    let mut mu = if cfg.merge_tol > 0.0 {
        mu0.collapse_clusters(cfg.merge_tol)?
    } else {
        mu0.clone()
    };
    let mut state = State {
        dim: mu.dim(),
        weights: mu.weights().to_vec(),
        params,
        alpha,
    };
    let dt_max = cfg.dt_max.unwrap_or(16.0 * cfg.dt_init);
    let bary0 = mu.barycenter();
    let mut x = mu.coords().to_vec();
    let mut e = state.energy(&x);
    let mut t = 0.0;
    let mut dt = cfg.dt_init;
    let mut trace = FlowTrace {
        times: vec![0.0],
        energies: vec![e],
        configs: vec![Snapshot { t: 0.0, measure: mu.clone() }],
        terminated_by: Termination::TMax,
        steps_accepted: 0,
        steps_rejected: 0,
        final_speed: 0.0,
        max_barycenter_drift: 0.0,
        seed,
    };
    let mut last_recorded = 0usize;

    let mut v = state.velocity(&x);
    loop {
        let speed = state.max_speed(&v);
        trace.final_speed = speed;
        if speed < cfg.grad_tol {
            trace.terminated_by = Termination::Tol;
            break;
        }
        if t >= cfg.t_max {
            trace.terminated_by = Termination::TMax;
            break;
        }
        let h = dt.min(cfg.t_max - t);
        let candidate = state.step(cfg.integrator, &x, &v, h);
        let e_new = state.energy(&candidate);
        let allowed = e + LYAPUNOV_TOL * (1.0 + e.abs());
        if !(e_new <= allowed) {
            trace.steps_rejected += 1;
            if !cfg.adapt {
                trace.terminated_by = Termination::StepFailure;
                break;
            }
            dt *= 0.5;
            if dt < DT_FLOOR {
                trace.terminated_by = Termination::StepFailure;
                break;
            }
            continue;
        }
        x = candidate;
        e = e_new;
        t += h;
        trace.steps_accepted += 1;
        if cfg.adapt {
            dt = (dt * GROWTH).min(dt_max);
        }

        if cfg.merge_tol > 0.0 && trace.steps_accepted.is_multiple_of(MERGE_CHECK_EVERY) {
            let current = mu.with_coords(x.clone())?;
            let merged = current.collapse_clusters(cfg.merge_tol)?;
            if merged.len() < current.len() {
                x = merged.coords().to_vec();
                state.weights = merged.weights().to_vec();
                e = state.energy(&x);
                mu = merged;
            }
        }

        let drift = norm(
            &DiscreteMeasure::from_flat(state.dim, x.clone(), state.weights.clone())?
                .barycenter()
                .iter()
                .zip(&bary0)
                .map(|(a, b)| a - b)
                .collect::<Vec<_>>(),
        );
        trace.max_barycenter_drift = trace.max_barycenter_drift.max(drift);

        if trace.steps_accepted.is_multiple_of(cfg.record_every) {
            trace.times.push(t);
            trace.energies.push(e);
            last_recorded = trace.steps_accepted;
        }
        if cfg.snapshot_every > 0 && trace.steps_accepted.is_multiple_of(cfg.snapshot_every) {
            trace.configs.push(Snapshot {
                t,
                measure: DiscreteMeasure::from_flat(state.dim, x.clone(), state.weights.clone())?,
            });
        }
        v = state.velocity(&x);
    }

    if last_recorded != trace.steps_accepted {
        trace.times.push(t);
        trace.energies.push(e);
    }
    let final_measure = DiscreteMeasure::from_flat(state.dim, x, state.weights)?;
    if trace.configs.last().map(|s| s.t) != Some(t) || trace.configs.len() == 1 {
        trace.configs.push(Snapshot { t, measure: final_measure });
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::make_unit_simplex;
    use crate::numeric::dist;

    fn p(a: f64, b: f64) -> PowerLawParams {
        PowerLawParams::new(a, b).unwrap()
    }

    #[test]
    fn simplex_is_stationary() {
        let mu = make_unit_simplex(3, true).unwrap().uniform_measure();
        let trace = flow(&mu, &p(6.0, 2.0), &FlowConfig::default(), 0).unwrap();
        assert_eq!(trace.terminated_by, Termination::Tol);
        let end = trace.final_measure();
        for i in 0..mu.len() {
            assert!(dist(end.point(i), mu.point(i)) < 1e-10);
        }
    }

    #[test]
    fn config_validation() {
        let mu = DiscreteMeasure::dirac(vec![0.0]).unwrap();
        let bad = FlowConfig {
            dt_init: 0.0,
            ..FlowConfig::default()
        };
        assert!(flow(&mu, &p(4.0, 2.0), &bad, 0).is_err());
        let bad = FlowConfig {
            record_every: 0,
            ..FlowConfig::default()
        };
        assert!(flow(&mu, &p(4.0, 2.0), &bad, 0).is_err());
        assert!(flow(&mu, &PowerLawParams::hard(2.0).unwrap(), &FlowConfig::default(), 0).is_err());
        assert!(flow(&mu, &p(4.0, 1.5), &FlowConfig::default(), 0).is_err());
    }

    #[test]
    fn fixed_step_too_large_fails() {
        let mu = DiscreteMeasure::uniform(vec![vec![0.0], vec![0.5]]).unwrap();
        let cfg = FlowConfig {
            dt_init: 50.0,
            adapt: false,
            integrator: Integrator::Euler,
            ..FlowConfig::default()
        };
        let trace = flow(&mu, &p(40.0, 2.0), &cfg, 0).unwrap();
        assert_eq!(trace.terminated_by, Termination::StepFailure);
    }

    #[test]
    fn coincident_atoms_are_merged() {
        let mu = DiscreteMeasure::uniform(vec![vec![0.0, 0.0], vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let trace = flow(&mu, &p(4.0, 2.0), &FlowConfig::default(), 0).unwrap();
        let end = trace.final_measure();
        assert_eq!(end.len(), 2);
        assert!((end.weights().iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn csv_export() {
        let mu = DiscreteMeasure::uniform(vec![vec![0.0], vec![0.5]]).unwrap();
        let trace = flow(&mu, &p(4.0, 2.0), &FlowConfig { t_max: 0.2, ..FlowConfig::default() }, 0).unwrap();
        let csv = trace.to_csv();
        assert!(csv.starts_with("t,E\n"));
        assert_eq!(csv.lines().count(), trace.times.len() + 1);
    }
}
