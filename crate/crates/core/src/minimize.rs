//! Multistart search for global minimizers of the interaction energy.
//!
//! Each restart samples equal-mass atoms in a ball, runs the aggregation
//! flow to rest, merges the resulting clusters and then polishes both the
//! atom positions and the atom masses. The lowest-energy outcome wins.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{flow, FlowConfig, Termination};
use crate::energy::{energy, euler_lagrange_residual, velocity_field};
use crate::error::{Error, Result};
use crate::geometry::{is_regular_simplex, make_unit_simplex};
use crate::kernel::{Attraction, PowerLawParams};
use crate::measure::DiscreteMeasure;
use crate::numeric::{dist, norm, project_to_simplex};

/// Tolerance of the regular-simplex test applied to the reported minimizer.
pub const SIMPLEX_TOL: f64 = 1e-3;
/// Euler-Lagrange spread a converged minimizer must meet.
pub const EL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MinimizeConfig {
    pub n: usize,
    /// Atom budget per restart.
    pub atoms: usize,
    pub restarts: usize,
    /// Radius of the sampling ball; defaults to `R_{alpha,beta}`.
    pub init_radius: Option<f64>,
    pub cluster_tol: f64,
    pub polish_iters: usize,
    pub seed: u64,
    pub flow: FlowConfig,
    /// Atoms on the discretized sphere used in the convergence cross-check.
    pub candidate_atoms: usize,
}

impl Default for MinimizeConfig {
    fn default() -> Self {
        Self {
            n: 2,
            atoms: 60,
            restarts: 8,
            init_radius: None,
            cluster_tol: 1e-3,
            polish_iters: 500,
            seed: 0,
            flow: FlowConfig {
                dt_init: 0.02,
                t_max: 400.0,
                grad_tol: 1e-7,
                record_every: 1_000_000,
                ..FlowConfig::default()
            },
            candidate_atoms: 240,
        }
    }
}

impl MinimizeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(Error::InvalidParams("dimension must be >= 1".into()));
        }
        if self.atoms < self.n + 1 {
            return Err(Error::InvalidParams(format!(
                "atom budget {} is below n + 1 = {}",
                self.atoms,
                self.n + 1
            )));
        }
        if self.restarts < 1 {
            return Err(Error::InvalidParams("need at least one restart".into()));
        }
        if let Some(r) = self.init_radius {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::InvalidParams("init_radius must be positive".into()));
            }
        }
        if !(self.cluster_tol >= 0.0) {
            return Err(Error::InvalidParams("cluster_tol must be >= 0".into()));
        }
        self.flow.validate()
    }
}

/// Outcome of one restart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RestartOutcome {
    pub index: usize,
    pub energy: Option<f64>,
    pub atoms: Option<usize>,
    pub terminated_by: Option<Termination>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SphereCandidate {
    pub energy: f64,
    pub radius: f64,
    pub atoms: usize,
}

/// Baseline energies a minimizer must beat.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CandidateTable {
    pub simplex: f64,
    pub sphere: SphereCandidate,
    pub single_atom: f64,
}

impl CandidateTable {
    pub fn min(&self) -> f64 {
        self.simplex.min(self.sphere.energy).min(self.single_atom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MinimizerReport {
    pub best: DiscreteMeasure,
    pub energy: f64,
    pub atom_count_after_collapse: usize,
    pub is_unit_simplex: bool,
    pub mass_profile: Vec<f64>,
    pub diam: f64,
    /// `R_{alpha,beta}`, the bound on `diam` for converged runs.
    pub diameter_bound: f64,
    pub el_spread: f64,
    pub el_excess: f64,
    /// Energy of the uniform unit simplex, `n/(n+1) (1/alpha - 1/beta)`.
    pub simplex_energy: f64,
    pub candidates: CandidateTable,
    /// The reported measure is at rest (every atom slower than `grad_tol`),
    /// beats the candidates and meets the Euler-Lagrange spread tolerance.
    pub converged: bool,
    pub best_restart: usize,
    pub restarts: Vec<RestartOutcome>,
}

/// Runs the multistart pipeline.
pub fn minimize_global(params: &PowerLawParams, cfg: &MinimizeConfig) -> Result<MinimizerReport> {
    cfg.validate()?;
    let alpha = params.require_dynamics()?;
    if !(alpha > params.beta()) {
        return Err(Error::InvalidParams("need alpha > beta".into()));
    }
    let radius = cfg.init_radius.unwrap_or(params.radius_r()?);

    let runs: Vec<(RestartOutcome, Option<(DiscreteMeasure, bool)>)> = (0..cfg.restarts)
        .into_par_iter()
        .map(|index| run_restart(params, cfg, radius, index))
        .collect();

    let mut best: Option<(usize, f64, DiscreteMeasure, bool)> = None;
    for (outcome, result) in &runs {
        if let (Some(e), Some((mu, at_rest))) = (outcome.energy, result) {
            if best.as_ref().is_none_or(|b| e < b.1) {
                best = Some((outcome.index, e, mu.clone(), *at_rest));
            }
        }
    }
    let restarts: Vec<RestartOutcome> = runs.into_iter().map(|(o, _)| o).collect();
    let Some((best_restart, e, mu, at_rest)) = best else {
        let first = restarts.iter().find_map(|o| o.error.clone()).unwrap_or_default();
        return Err(Error::Numerical(format!("every restart failed: {first}")));
    };

    let n = cfg.n;
    let points = mu.points_vec();
    let is_unit_simplex = mu.len() == n + 1 && {
        let (ok, d) = is_regular_simplex(&points, SIMPLEX_TOL);
        ok && (d - 1.0).abs() <= SIMPLEX_TOL
    };
    let el = euler_lagrange_residual(&mu, params, Some(&[]), 0.0)?;
    let candidates = energy_of_candidates_with(params, n, cfg.candidate_atoms)?;
    let beats_candidates = e <= candidates.min() + 1e-10 * (1.0 + e.abs());
    Ok(MinimizerReport {
        atom_count_after_collapse: mu.len(),
        is_unit_simplex,
        mass_profile: mu.mass_profile(),
        diam: mu.diameter(),
        diameter_bound: params.radius_r()?,
        el_spread: el.spread,
        el_excess: el.excess,
        simplex_energy: n as f64 / (n as f64 + 1.0) * params.well_depth(),
        converged: at_rest && beats_candidates && el.spread <= EL_TOL,
        candidates,
        best_restart,
        restarts,
        energy: e,
        best: mu,
    })
}

/// RNG stream for one restart, independent of scheduling.
pub fn restart_rng(seed: u64, restart: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64);
    rng
}

/// Uniform sample of `count` points in the ball of radius `radius` in `R^n`.
pub fn sample_ball<R: Rng>(rng: &mut R, n: usize, count: usize, radius: f64) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| {
            let g: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
            let len = g.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
            let r = radius * rng.random::<f64>().powf(1.0 / n as f64);
            g.iter().map(|x| x * r / len).collect()
        })
        .collect()
}

fn run_restart(
    params: &PowerLawParams,
    cfg: &MinimizeConfig,
    radius: f64,
    index: usize,
) -> (RestartOutcome, Option<(DiscreteMeasure, bool)>) {
    let mut outcome = RestartOutcome {
        index,
        energy: None,
        atoms: None,
        terminated_by: None,
        error: None,
    };
    let result = (|| -> Result<(DiscreteMeasure, bool)> {
        let mut rng = restart_rng(cfg.seed, index);
        let mu0 = DiscreteMeasure::uniform(sample_ball(&mut rng, cfg.n, cfg.atoms, radius))?;
        let trace = flow(&mu0, params, &cfg.flow, cfg.seed)?;
        outcome.terminated_by = Some(trace.terminated_by);
        if trace.terminated_by == Termination::StepFailure {
            return Err(Error::Numerical(format!("flow failed on restart {index}")));
        }
        let collapsed = trace.final_measure().collapse_clusters(cfg.cluster_tol)?;
        let polished = polish(&collapsed, params, cfg.polish_iters)?;
        let polished = polished.collapse_clusters(cfg.cluster_tol.min(1e-6))?;
        let polished = polish(&polished, params, cfg.polish_iters)?;
        let polished = polished.center();
        let speed = velocity_field(&polished, params)?
            .chunks_exact(cfg.n)
            .map(norm)
            .fold(0.0, f64::max);
        Ok((polished, speed <= cfg.flow.grad_tol))
    })();
    match result {
        Ok((mu, at_rest)) => {
            outcome.energy = Some(energy(&mu, params));
            outcome.atoms = Some(mu.len());
            (outcome, Some((mu, at_rest)))
        }
        Err(err) => {
            outcome.error = Some(err.to_string());
            (outcome, None)
        }
    }
}

/// Alternating descent on masses (projected gradient on the probability
/// simplex) and positions (gradient flow steps with backtracking). Every
/// accepted step lowers the energy.
pub fn polish(mu: &DiscreteMeasure, params: &PowerLawParams, iters: usize) -> Result<DiscreteMeasure> {
    let mut mu = mu.clone();
    let mut e = energy(&mu, params);
    let mut weight_step = 1.0;
    let mut position_step = 1.0;
    for _ in 0..iters {
        let before = e;
        (mu, e, weight_step) = weight_descent_step(&mu, params, e, weight_step)?;
        (mu, e, position_step) = position_descent_step(&mu, params, e, position_step)?;
        if before - e <= 1e-16 * (1.0 + e.abs()) {
            let v = velocity_field(&mu, params)?;
            if v.iter().all(|x| x.abs() < 1e-13) {
                break;
            }
        }
    }
    Ok(mu)
}

/// Gram matrix `G_ij = w(|x_i - x_j|)`; the energy is `m^T G m`.
fn gram(mu: &DiscreteMeasure, params: &PowerLawParams) -> Vec<Vec<f64>> {
    let n = mu.len();
    let mut g = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let w = params.eval_w(dist(mu.point(i), mu.point(j)));
            g[i][j] = w;
            g[j][i] = w;
        }
    }
    g
}

fn quadratic(g: &[Vec<f64>], m: &[f64]) -> f64 {
    g.iter()
        .zip(m)
        .map(|(row, mi)| mi * row.iter().zip(m).map(|(a, b)| a * b).sum::<f64>())
        .sum()
}

fn weight_descent_step(
    mu: &DiscreteMeasure,
    params: &PowerLawParams,
    e: f64,
    step: f64,
) -> Result<(DiscreteMeasure, f64, f64)> {
    let g = gram(mu, params);
    let m = mu.weights();
    let f0 = quadratic(&g, m);
    let grad: Vec<f64> = g
        .iter()
        .map(|row| 2.0 * row.iter().zip(m).map(|(a, b)| a * b).sum::<f64>())
        .collect();
    let mut s = step * 2.0;
    for _ in 0..60 {
        let trial: Vec<f64> = m.iter().zip(&grad).map(|(mi, gi)| mi - s * gi).collect();
        let proj = project_to_simplex(&trial);
        let moved: f64 = proj.iter().zip(m).map(|(a, b)| (a - b) * (a - b)).sum();
        if moved == 0.0 {
            return Ok((mu.clone(), e, s));
        }
        let f1 = quadratic(&g, &proj);
        if f1 <= f0 - 1e-4 / s * moved {
            let next = mu.with_weights(proj)?;
            let e1 = energy(&next, params);
            if e1 <= e {
                return Ok((next, e1, s));
            }
        }
        s *= 0.5;
    }
    Ok((mu.clone(), e, step))
}

fn position_descent_step(
    mu: &DiscreteMeasure,
    params: &PowerLawParams,
    e: f64,
    step: f64,
) -> Result<(DiscreteMeasure, f64, f64)> {
    let v = velocity_field(mu, params)?;
    let dim = mu.dim();
    // directional derivative along v is -2 sum_i m_i |v_i|^2
    let slope: f64 = v
        .chunks_exact(dim)
        .zip(mu.weights())
        .map(|(vi, m)| 2.0 * m * vi.iter().map(|x| x * x).sum::<f64>())
        .sum();
    if slope == 0.0 {
        return Ok((mu.clone(), e, step));
    }
    let mut s = step * 2.0;
    for _ in 0..60 {
        let coords: Vec<f64> = mu.coords().iter().zip(&v).map(|(x, vi)| x + s * vi).collect();
        let next = mu.with_coords(coords)?;
        let e1 = energy(&next, params);
        if e1 <= e - 1e-4 * s * slope {
            return Ok((next, e1, s));
        }
        s *= 0.5;
    }
    Ok((mu.clone(), e, step))
}

/// Baseline energies for comparison: the uniform unit simplex, the best
/// uniform sphere (720 atoms for `n <= 2`, 240 otherwise) and a single atom.
pub fn energy_of_candidates(params: &PowerLawParams, n: usize) -> Result<CandidateTable> {
    energy_of_candidates_with(params, n, if n <= 2 { 720 } else { 240 })
}

pub fn energy_of_candidates_with(params: &PowerLawParams, n: usize, sphere_atoms: usize) -> Result<CandidateTable> {
    // spheres wider than diameter 1 have infinite hard-kernel energy
    let r_max = match params.alpha() {
        Attraction::Finite(a) if a > params.beta() => params.radius_r()?,
        Attraction::Finite(_) => return Err(Error::InvalidParams("need alpha > beta".into())),
        Attraction::Infinite => 0.5,
    };
    let simplex = energy(&make_unit_simplex(n, true)?.uniform_measure(), params);
    let directions = sphere_directions(n, sphere_atoms.max(2));
    let k = directions.len();
    let sphere_energy = |r: f64| -> f64 {
        if n <= 2 {
            // regular polygon: every atom sees the same chord lengths
            (1..k)
                .map(|j| params.eval_w(2.0 * r * (std::f64::consts::PI * j as f64 / k as f64).sin()))
                .sum::<f64>()
                / k as f64
        } else {
            let pts = directions.iter().map(|d| d.iter().map(|x| x * r).collect()).collect();
            energy(&DiscreteMeasure::uniform(pts).expect("sphere points"), params)
        }
    };
    let (radius, value) = golden_section(sphere_energy, 1e-3, r_max, 80);
    Ok(CandidateTable {
        simplex,
        sphere: SphereCandidate {
            energy: value,
            radius,
            atoms: k,
        },
        single_atom: 0.0,
    })
}

/// Quasi-uniform unit directions: polygon in 2D (two points in 1D),
/// Fibonacci lattice in 3D, fixed Gaussian sample above.
fn sphere_directions(n: usize, k: usize) -> Vec<Vec<f64>> {
    match n {
        1 => vec![vec![-1.0], vec![1.0]],
        2 => (0..k)
            .map(|j| {
                let t = 2.0 * std::f64::consts::PI * j as f64 / k as f64;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        3 => {
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..k)
                .map(|j| {
                    let z = 1.0 - 2.0 * (j as f64 + 0.5) / k as f64;
                    let rho = (1.0 - z * z).sqrt();
                    let phi = golden * j as f64;
                    vec![rho * phi.cos(), rho * phi.sin(), z]
                })
                .collect()
        }
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(0x5fe7e);
            (0..k)
                .map(|_| {
                    let g: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
                    let len = g.iter().map(|x| x * x).sum::<f64>().sqrt();
                    g.iter().map(|x| x / len).collect()
                })
                .collect()
        }
    }
}

/// Golden-section minimization of `f` on `[lo, hi]`; returns `(argmin, min)`.
pub(crate) fn golden_section<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, iters: usize) -> (f64, f64) {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - ratio * (hi - lo);
    let mut d = lo + ratio * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - ratio * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + ratio * (hi - lo);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn p(a: f64, b: f64) -> PowerLawParams {
        PowerLawParams::new(a, b).unwrap()
    }

    #[test]
    fn candidate_table_values() {
        for &(a, b, n) in &[(10.0, 2.0, 2usize), (6.0, 3.0, 1), (5.0, 2.0, 3)] {
            let k = p(a, b);
            let t = energy_of_candidates_with(&k, n, 60).unwrap();
            let closed = n as f64 / (n as f64 + 1.0) * (1.0 / a - 1.0 / b);
            assert_relative_eq!(t.simplex, closed, epsilon = 1e-14);
            assert_eq!(t.single_atom, 0.0);
        }
    }

    #[test]
    fn hard_kernel_candidates() {
        let t = energy_of_candidates_with(&PowerLawParams::hard(2.0).unwrap(), 2, 60).unwrap();
        assert_relative_eq!(t.simplex, -1.0 / 3.0, epsilon = 1e-14);
        // ring of diameter 1: the mean of sin^2 over the chords is 1/2
        assert_relative_eq!(t.sphere.energy, -0.25, epsilon = 1e-9);
        assert!(t.sphere.radius <= 0.5);
    }

    #[test]
    fn simplex_beats_ring_for_strong_attraction() {
        let t = energy_of_candidates(&p(10.0, 2.0), 2).unwrap();
        assert_eq!(t.sphere.atoms, 720);
        assert!(t.simplex < t.sphere.energy, "{t:?}");
    }

    #[test]
    fn polygon_shortcut_matches_direct_sum() {
        let k = p(7.0, 2.0);
        let dirs = sphere_directions(2, 50);
        let r = 0.6;
        let mu = DiscreteMeasure::uniform(dirs.iter().map(|d| d.iter().map(|x| x * r).collect()).collect()).unwrap();
        let direct = energy(&mu, &k);
        let shortcut = (1..50)
            .map(|j| k.eval_w(2.0 * r * (std::f64::consts::PI * j as f64 / 50.0).sin()))
            .sum::<f64>()
            / 50.0;
        assert_relative_eq!(direct, shortcut, epsilon = 1e-13);
    }

    #[test]
    fn one_dimensional_two_atom_minimizer() {
        // E(d, m) = 2 m (1 - m) w(d) is minimized at d = 1, m = 1/2
        let k = p(6.0, 2.0);
        let mut best = (f64::INFINITY, 0.0, 0.0);
        for i in 1..200 {
            for j in 1..100 {
                let (d, m) = (i as f64 * 0.01, j as f64 * 0.01);
                let e = 2.0 * m * (1.0 - m) * k.eval_w(d);
                if e < best.0 {
                    best = (e, d, m);
                }
            }
        }
        assert_relative_eq!(best.1, 1.0, epsilon = 1e-12);
        assert_relative_eq!(best.2, 0.5, epsilon = 1e-12);

        let cfg = MinimizeConfig {
            n: 1,
            atoms: 20,
            restarts: 4,
            seed: 3,
            ..MinimizeConfig::default()
        };
        let report = minimize_global(&k, &cfg).unwrap();
        assert_eq!(report.atom_count_after_collapse, 2);
        assert!((report.diam - 1.0).abs() < 1e-6);
        for m in &report.mass_profile {
            assert!((m - 0.5).abs() < 1e-6);
        }
        assert_relative_eq!(report.energy, best.0, epsilon = 1e-9);
    }

    #[test]
    fn polish_never_increases_energy() {
        let k = p(8.0, 2.0);
        let mu = DiscreteMeasure::new(
            vec![vec![0.0, 0.0], vec![1.1, 0.1], vec![0.4, 0.8], vec![0.5, 0.3]],
            vec![0.4, 0.3, 0.2, 0.1],
        )
        .unwrap();
        let mut current = mu.clone();
        let mut e = energy(&current, &k);
        let mut step = 1.0;
        for _ in 0..50 {
            let (next, e1, s) = weight_descent_step(&current, &k, e, step).unwrap();
            assert!(e1 <= e + 1e-12);
            assert_relative_eq!(e1, energy(&next, &k), epsilon = 1e-15);
            current = next;
            e = e1;
            step = s;
        }
        let polished = polish(&mu, &k, 200).unwrap();
        assert!(energy(&polished, &k) <= energy(&mu, &k));
    }

    #[test]
    fn config_validation() {
        let k = p(6.0, 2.0);
        let cfg = MinimizeConfig {
            n: 2,
            atoms: 2,
            ..MinimizeConfig::default()
        };
        assert!(minimize_global(&k, &cfg).is_err());
        let cfg = MinimizeConfig {
            restarts: 0,
            ..MinimizeConfig::default()
        };
        assert!(minimize_global(&k, &cfg).is_err());
    }

    #[test]
    fn restart_streams_are_distinct_and_reproducible() {
        let a: Vec<u64> = (0..4).map(|_| restart_rng(9, 0).random()).collect();
        let b: u64 = restart_rng(9, 1).random();
        assert_eq!(a[0], a[1]);
        assert_ne!(a[0], b);
    }
}
