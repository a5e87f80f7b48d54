//! Perturbation tests around measures carried by unit-simplex vertices:
//! one-sided local minimality checks, descent searches below the threshold,
//! and a bisection scanner for the local threshold on `beta = 2`.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::energy::energy;
use crate::error::{Error, Result};
use crate::geometry::{make_unit_simplex, weighted_edge_operator};
use crate::kernel::PowerLawParams;
use crate::measure::DiscreteMeasure;
use crate::numeric::{dist, norm};

/// Slack allowed before an energy drop counts.
pub const GAP_TOL: f64 = 1e-12;
const UNIT_EDGE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PerturbationConfig {
    /// Every split atom stays strictly inside this ball about its vertex.
    pub radius: f64,
    pub trials: usize,
    /// Atoms per vertex after splitting.
    pub split_factor: usize,
    pub seed: u64,
}

impl Default for PerturbationConfig {
    fn default() -> Self {
        Self {
            radius: 1e-2,
            trials: 1000,
            split_factor: 3,
            seed: 0,
        }
    }
}

impl PerturbationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0 && self.radius < 0.5) {
            return Err(Error::InvalidParams(format!("radius must lie in (0, 1/2), got {}", self.radius)));
        }
        if self.trials < 1 {
            return Err(Error::InvalidParams("trials must be >= 1".into()));
        }
        if self.split_factor < 1 {
            return Err(Error::InvalidParams("split_factor must be >= 1".into()));
        }
        Ok(())
    }
}

/// Constants in the localization estimate for a given `(alpha, beta)` and
/// mass profile. `alpha_star` is placed halfway between its smallest
/// admissible value and `alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalizationConstants {
    /// `m_0 m_1 / m_n^2` for the sorted masses.
    pub rho: f64,
    pub alpha_star: f64,
    pub beta_star: f64,
    /// `(alpha_star - beta_star) / 2`.
    pub eta: f64,
}

/// Upper bound `2 + m_n^2 min{n, 2} / (m_0 m_1)` on the local threshold
/// along `beta = 2`.
pub fn aloc_bound(masses: &[f64]) -> Result<f64> {
    if masses.len() < 2 {
        return Err(Error::InvalidParams("need at least two masses".into()));
    }
    let sorted = sorted_masses(masses);
    let n = masses.len() - 1;
    let (m0, m1, mn) = (sorted[0], sorted[1], sorted[n]);
    Ok(2.0 + mn * mn * n.min(2) as f64 / (m0 * m1))
}

fn sorted_masses(masses: &[f64]) -> Vec<f64> {
    let mut m = masses.to_vec();
    m.sort_by(f64::total_cmp);
    m
}

pub fn localization_constants(alpha: f64, beta: f64, masses: &[f64]) -> Result<LocalizationConstants> {
    let n = masses.len().saturating_sub(1);
    if n < 1 {
        return Err(Error::InvalidParams("need at least two masses".into()));
    }
    let sorted = sorted_masses(masses);
    let rho = sorted[0] * sorted[1] / (sorted[n] * sorted[n]);
    let spread = if beta == 2.0 { n.min(2) as f64 / rho } else { 0.0 };
    let lowest = beta + spread;
    if !(beta >= 2.0) {
        return Err(Error::Precondition(format!("beta = {beta} is below 2")));
    }
    if !(alpha > lowest) {
        return Err(Error::Precondition(format!(
            "alpha = {alpha} does not exceed the localization threshold {lowest}"
        )));
    }
    let alpha_star = 0.5 * (alpha + lowest);
    let beta_star = (alpha_star + 2.0 * beta - spread) / 3.0;
    Ok(LocalizationConstants {
        rho,
        alpha_star,
        beta_star,
        eta: 0.5 * (alpha_star - beta_star),
    })
}

/// Instantiation of the coefficient `lambda - 2 epsilon / (eta rho)` in front
/// of `Var(nu_i)` in the localization estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecondVariation {
    pub constants: LocalizationConstants,
    pub lambda: f64,
    pub epsilon: f64,
    pub coefficient: f64,
    pub positive: bool,
}

/// For `beta > 2` any small `epsilon` works and `epsilon = eta lambda rho / 4`
/// is used. On `beta = 2` the self energy forces `epsilon = 1/2`, and `lambda`
/// is taken just below `2 / min{n, 2}` so that `eta rho > 1 / lambda`.
pub fn second_variation_check(alpha: f64, beta: f64, masses: &[f64]) -> Result<SecondVariation> {
    let constants = localization_constants(alpha, beta, masses)?;
    let n = masses.len() - 1;
    let k = n.min(2) as f64;
    let LocalizationConstants { rho, beta_star, eta, .. } = constants;
    let (lambda, epsilon) = if beta > 2.0 {
        let lambda = 1.5 / k;
        (lambda, eta * lambda * rho / 4.0)
    } else {
        (1.0 / (0.5 * k + 0.5 * rho * (beta_star - 2.0)), 0.5)
    };
    let coefficient = lambda - 2.0 * epsilon / (eta * rho);
    Ok(SecondVariation {
        constants,
        lambda,
        epsilon,
        coefficient,
        positive: coefficient > 0.0 && lambda < 2.0 / k && 2.0 * epsilon < eta * lambda * rho,
    })
}

/// Vertex positions and masses of a measure carried by a unit simplex.
struct SimplexSupport {
    positions: Vec<Vec<f64>>,
    masses: Vec<f64>,
}

fn simplex_support(mu_hat: &DiscreteMeasure) -> Result<SimplexSupport> {
    let k = mu_hat.len();
    if k < 2 {
        return Err(Error::Precondition("need at least two atoms".into()));
    }
    if mu_hat.dim() < k - 1 {
        return Err(Error::Precondition(format!(
            "{k} atoms cannot form a unit simplex in R^{}",
            mu_hat.dim()
        )));
    }
    let positions = mu_hat.points_vec();
    for i in 0..k {
        for j in i + 1..k {
            let d = dist(&positions[i], &positions[j]);
            if (d - 1.0).abs() > UNIT_EDGE_TOL {
                return Err(Error::Precondition(format!(
                    "atoms {i} and {j} are at distance {d}, not 1"
                )));
            }
        }
    }
    Ok(SimplexSupport {
        positions,
        masses: mu_hat.weights().to_vec(),
    })
}

/// Energy terms attached to one vertex of a split configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexTerms {
    pub mass: f64,
    pub barycenter: Vec<f64>,
    /// Variance of the normalized restriction to the vertex ball.
    pub variance: f64,
    pub self_energy: f64,
    /// `sum_{j != i}` of the cross terms with `w(1)` subtracted.
    pub exchange_energy: f64,
    /// `sum_{j != i} (|y_i - y_j| - 1)^2` over barycenters.
    pub separation: f64,
}

fn decompose(
    mu: &DiscreteMeasure,
    owner: &[usize],
    vertices: usize,
    params: &PowerLawParams,
) -> Vec<VertexTerms> {
    let dim = mu.dim();
    let w1 = params.eval_w(1.0);
    let mut terms: Vec<VertexTerms> = (0..vertices)
        .map(|_| VertexTerms {
            mass: 0.0,
            barycenter: vec![0.0; dim],
            variance: 0.0,
            self_energy: 0.0,
            exchange_energy: 0.0,
            separation: 0.0,
        })
        .collect();
    for a in 0..mu.len() {
        let t = &mut terms[owner[a]];
        t.mass += mu.weight(a);
        for d in 0..dim {
            t.barycenter[d] += mu.weight(a) * mu.point(a)[d];
        }
    }
    for t in &mut terms {
        t.barycenter.iter_mut().for_each(|c| *c /= t.mass);
    }
    for a in 0..mu.len() {
        let i = owner[a];
        let offset = dist(mu.point(a), &terms[i].barycenter);
        terms[i].variance += mu.weight(a) * offset * offset / terms[i].mass;
        for b in 0..mu.len() {
            if a == b {
                continue;
            }
            let pair = mu.weight(a) * mu.weight(b);
            let w = params.eval_w(dist(mu.point(a), mu.point(b)));
            if owner[b] == i {
                terms[i].self_energy += pair * w;
            } else {
                terms[i].exchange_energy += pair * (w - w1);
            }
        }
    }
    for i in 0..vertices {
        terms[i].separation = (0..vertices)
            .filter(|&j| j != i)
            .map(|j| (dist(&terms[i].barycenter, &terms[j].barycenter) - 1.0).powi(2))
            .sum();
    }
    terms
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalMinReport {
    pub n: usize,
    pub alpha: f64,
    pub beta: f64,
    pub masses: Vec<f64>,
    pub config: PerturbationConfig,
    pub base_energy: f64,
    /// Smallest `E(mu) - E(mu_hat)` over the trials.
    pub min_gap: f64,
    pub violations: usize,
    pub worst_trial: usize,
    pub constants: LocalizationConstants,
    /// Per-vertex terms of the worst trial.
    pub decomposition: Vec<VertexTerms>,
    /// `|sum_i (self + exchange) - gap|` for the worst trial.
    pub decomposition_residual: f64,
    pub passed: bool,
}

fn sample_in_ball<R: Rng>(rng: &mut R, dim: usize, radius: f64) -> Vec<f64> {
    let g: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
    let len = norm(&g);
    let scale = radius * rng.random::<f64>().powf(1.0 / dim as f64) / len;
    g.into_iter().map(|c| c * scale).collect()
}

/// Splits every vertex atom of `mu_hat` into `split_factor` atoms with random
/// masses, each displaced by a uniform vector of norm below `radius`. The
/// vertex-wise coupling keeps `d_inf(mu, mu_hat) < radius`.
///
/// Measures outside the hypotheses (not on a unit simplex, `alpha` not above
/// the localization threshold, or infinite `alpha`) are rejected.
pub fn local_min_perturbation_test(
    mu_hat: &DiscreteMeasure,
    params: &PowerLawParams,
    cfg: &PerturbationConfig,
) -> Result<LocalMinReport> {
    cfg.validate()?;
    let alpha = params.require_dynamics()?;
    let support = simplex_support(mu_hat)?;
    let constants = localization_constants(alpha, params.beta(), &support.masses)?;
    let vertices = support.positions.len();
    let dim = mu_hat.dim();
    let base_energy = energy(mu_hat, params);
    let owner: Vec<usize> = (0..vertices).flat_map(|i| std::iter::repeat_n(i, cfg.split_factor)).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut min_gap = f64::INFINITY;
    let mut worst: Option<(usize, DiscreteMeasure)> = None;
    let mut violations = 0;
    for trial in 0..cfg.trials {
        let mut points = Vec::with_capacity(owner.len());
        let mut weights = Vec::with_capacity(owner.len());
        for (i, x) in support.positions.iter().enumerate() {
            let raw: Vec<f64> = (0..cfg.split_factor).map(|_| Exp1.sample(&mut rng)).collect();
            let total: f64 = raw.iter().sum();
            for r in raw {
                let shift = sample_in_ball(&mut rng, dim, cfg.radius);
                points.push(x.iter().zip(&shift).map(|(a, s)| a + s).collect::<Vec<f64>>());
                weights.push(support.masses[i] * r / total);
            }
        }
        let mu = DiscreteMeasure::normalized(points, weights)?;
        let gap = energy(&mu, params) - base_energy;
        if gap < -GAP_TOL {
            violations += 1;
        }
        if gap < min_gap {
            min_gap = gap;
            worst = Some((trial, mu));
        }
    }
    let (worst_trial, worst_mu) = worst.expect("at least one trial");
    // zero-weight atoms are dropped on construction, so owners are rebuilt
    let owner: Vec<usize> = worst_mu
        .points()
        .map(|p| {
            (0..vertices)
                .min_by(|&a, &b| dist(p, &support.positions[a]).total_cmp(&dist(p, &support.positions[b])))
                .unwrap_or(0)
        })
        .collect();
    let decomposition = decompose(&worst_mu, &owner, vertices, params);
    let total: f64 = decomposition.iter().map(|t| t.self_energy + t.exchange_energy).sum();
    Ok(LocalMinReport {
        n: vertices - 1,
        alpha,
        beta: params.beta(),
        masses: support.masses,
        config: *cfg,
        base_energy,
        min_gap,
        violations,
        worst_trial,
        constants,
        decomposition,
        decomposition_residual: (total - min_gap).abs(),
        passed: violations == 0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusSweepRow {
    pub radius: f64,
    pub min_gap: f64,
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusSweep {
    pub rows: Vec<RadiusSweepRow>,
    pub largest_passing: Option<f64>,
}

/// Runs the perturbation test at each radius and reports the largest one
/// without violations.
pub fn radius_sweep(
    mu_hat: &DiscreteMeasure,
    params: &PowerLawParams,
    cfg: &PerturbationConfig,
    radii: &[f64],
) -> Result<RadiusSweep> {
    let mut rows = Vec::with_capacity(radii.len());
    for &radius in radii {
        let report = local_min_perturbation_test(mu_hat, params, &PerturbationConfig { radius, ..*cfg })?;
        rows.push(RadiusSweepRow {
            radius,
            min_gap: report.min_gap,
            violations: report.violations,
        });
    }
    let largest_passing = rows
        .iter()
        .filter(|r| r.violations == 0)
        .map(|r| r.radius)
        .fold(None, |acc: Option<f64>, r| Some(acc.map_or(r, |a| a.max(r))));
    Ok(RadiusSweep { rows, largest_passing })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DescentSearch {
    /// Largest splitting offset tried.
    pub radius: f64,
    /// Offsets `radius / 3^k` for `k < scales`.
    pub scales: usize,
    pub random_trials: usize,
    pub seed: u64,
}

impl Default for DescentSearch {
    fn default() -> Self {
        Self {
            radius: 1e-2,
            scales: 8,
            random_trials: 200,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescentCertificate {
    pub measure: DiscreteMeasure,
    pub energy: f64,
    pub base_energy: f64,
    pub gap: f64,
    pub vertex: usize,
    pub direction: Vec<f64>,
    pub offset: f64,
    pub method: String,
}

fn split_vertex(support: &SimplexSupport, i: usize, direction: &[f64], offset: f64, share: f64) -> Result<DiscreteMeasure> {
    let mut points = Vec::with_capacity(support.positions.len() + 1);
    let mut weights = Vec::with_capacity(support.positions.len() + 1);
    for (j, x) in support.positions.iter().enumerate() {
        if j != i {
            points.push(x.clone());
            weights.push(support.masses[j]);
            continue;
        }
        // the two parts keep the barycenter of the split vertex in place
        let up = 2.0 * offset * (1.0 - share);
        let down = 2.0 * offset * share;
        points.push(x.iter().zip(direction).map(|(a, v)| a + up * v).collect());
        weights.push(support.masses[j] * share);
        points.push(x.iter().zip(direction).map(|(a, v)| a - down * v).collect());
        weights.push(support.masses[j] * (1.0 - share));
    }
    DiscreteMeasure::new(points, weights)
}

/// Looks for a nearby measure with lower energy. Every vertex is split in two
/// along the eigenvectors of its weighted edge operator, the edge directions
/// and the coordinate axes, at offsets `radius / 3^k`; then random splits are
/// tried. Returns the first certificate found.
pub fn descent_direction_search(
    mu_hat: &DiscreteMeasure,
    params: &PowerLawParams,
    search: &DescentSearch,
) -> Result<Option<DescentCertificate>> {
    if !(search.radius > 0.0 && search.radius < 0.5) {
        return Err(Error::InvalidParams(format!("radius must lie in (0, 1/2), got {}", search.radius)));
    }
    let support = simplex_support(mu_hat)?;
    let base_energy = energy(mu_hat, params);
    let dim = mu_hat.dim();
    let vertices = support.positions.len();

    let check = |mu: DiscreteMeasure, vertex: usize, direction: &[f64], offset: f64, method: &str| {
        let e = energy(&mu, params);
        (e - base_energy < -GAP_TOL).then(|| DescentCertificate {
            measure: mu,
            energy: e,
            base_energy,
            gap: e - base_energy,
            vertex,
            direction: direction.to_vec(),
            offset,
            method: method.to_string(),
        })
    };

    for i in 0..vertices {
        let mut directions: Vec<(Vec<f64>, &str)> = Vec::new();
        let op = weighted_edge_operator(&support.positions, &support.masses, i)?;
        let eig = op.symmetric_eigen();
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        for k in order {
            directions.push((eig.eigenvectors.column(k).iter().copied().collect(), "edge-operator eigenvector"));
        }
        for j in (0..vertices).filter(|&j| j != i) {
            let u: Vec<f64> = support.positions[i].iter().zip(&support.positions[j]).map(|(a, b)| a - b).collect();
            let len = norm(&u);
            directions.push((u.into_iter().map(|c| c / len).collect(), "edge direction"));
        }
        for k in 0..dim {
            let mut e = vec![0.0; dim];
            e[k] = 1.0;
            directions.push((e, "coordinate axis"));
        }
        for s in 0..search.scales {
            let offset = search.radius / 3f64.powi(s as i32);
            for (direction, method) in &directions {
                let mu = split_vertex(&support, i, direction, offset, 0.5)?;
                if let Some(cert) = check(mu, i, direction, offset, method) {
                    return Ok(Some(cert));
                }
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(search.seed);
    for _ in 0..search.random_trials {
        let i = rng.random_range(0..vertices);
        let g: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        let len = norm(&g);
        let direction: Vec<f64> = g.into_iter().map(|c| c / len).collect();
        let share = rng.random_range(0.1..0.9);
        let offset = 0.5 * search.radius * rng.random::<f64>();
        let mu = split_vertex(&support, i, &direction, offset, share)?;
        if let Some(cert) = check(mu, i, &direction, offset, "random split") {
            return Ok(Some(cert));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdProbe {
    pub alpha: f64,
    pub descent_found: bool,
}

/// Empirical bracket for the local threshold: below `lower` a descent
/// perturbation was found, at `upper` none was.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdEstimate {
    pub lower: f64,
    pub upper: f64,
    pub beta: f64,
    pub n: usize,
    pub masses: Vec<f64>,
    pub method: String,
    pub bound: f64,
    pub probes: Vec<ThresholdProbe>,
}

/// Bisection on `alpha` in `[2, bound + 2]` with `beta = 2`, classifying each
/// midpoint by [`descent_direction_search`] on the unit simplex carrying
/// `masses`.
pub fn scan_local_threshold(
    beta: f64,
    masses: &[f64],
    n: usize,
    bracket_tol: f64,
    search: &DescentSearch,
) -> Result<ThresholdEstimate> {
    if beta != 2.0 {
        return Err(Error::InvalidParams(format!("the scanner runs on beta = 2, got {beta}")));
    }
    if !(bracket_tol > 0.0) {
        return Err(Error::InvalidParams("bracket_tol must be positive".into()));
    }
    if masses.len() != n + 1 {
        return Err(Error::InvalidParams(format!("expected {} masses, got {}", n + 1, masses.len())));
    }
    let mu_hat = make_unit_simplex(n, true)?.measure(masses)?;
    if mu_hat.len() != n + 1 {
        return Err(Error::InvalidParams("masses must be positive".into()));
    }
    let bound = aloc_bound(masses)?;
    let mut lower = 2.0;
    let mut upper = bound + 2.0;
    let mut probes = Vec::new();
    while upper - lower > bracket_tol {
        let alpha = 0.5 * (lower + upper);
        let params = PowerLawParams::new(alpha, beta)?;
        let descent_found = descent_direction_search(&mu_hat, &params, search)?.is_some();
        probes.push(ThresholdProbe { alpha, descent_found });
        if descent_found {
            lower = alpha;
        } else {
            upper = alpha;
        }
    }
    Ok(ThresholdEstimate {
        lower,
        upper,
        beta,
        n,
        masses: mu_hat.weights().to_vec(),
        method: "empirical bracket: bisection with descent_direction_search".into(),
        bound,
        probes,
    })
}

/// Energy of the configuration where vertex `i` of `mu_hat` is split into two
/// equal halves at `x_i +- offset v`; used by tests as a closed-form check.
pub fn symmetric_split_energy(
    mu_hat: &DiscreteMeasure,
    params: &PowerLawParams,
    i: usize,
    direction: &[f64],
    offset: f64,
) -> Result<f64> {
    let support = simplex_support(mu_hat)?;
    if i >= support.positions.len() {
        return Err(Error::InvalidParams(format!("vertex {i} out of range")));
    }
    let v = DVector::from_column_slice(direction);
    let len = v.norm();
    if len == 0.0 {
        return Err(Error::InvalidParams("direction must be nonzero".into()));
    }
    let unit: Vec<f64> = (v / len).iter().copied().collect();
    Ok(energy(&split_vertex(&support, i, &unit, offset, 0.5)?, params))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simplex(n: usize, masses: &[f64]) -> DiscreteMeasure {
        make_unit_simplex(n, true).unwrap().measure(masses).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(PerturbationConfig::default().validate().is_ok());
        for bad in [0.0, 0.5, -1.0] {
            let cfg = PerturbationConfig { radius: bad, ..Default::default() };
            assert!(cfg.validate().is_err());
        }
        assert!(PerturbationConfig { trials: 0, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn bound_values() {
        assert!((aloc_bound(&[0.25, 0.75]).unwrap() - 5.0).abs() < 1e-14);
        assert!((aloc_bound(&[0.5, 0.5]).unwrap() - 3.0).abs() < 1e-14);
        assert!((aloc_bound(&[1.0 / 3.0; 3]).unwrap() - 4.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_hypothesis_violations() {
        let mu = simplex(1, &[0.25, 0.75]);
        let cfg = PerturbationConfig { trials: 5, ..Default::default() };
        let below = PowerLawParams::new(4.5, 2.0).unwrap();
        assert!(matches!(
            local_min_perturbation_test(&mu, &below, &cfg),
            Err(Error::Precondition(_))
        ));
        let squashed = DiscreteMeasure::uniform(vec![vec![0.0], vec![0.9]]).unwrap();
        let ok = PowerLawParams::new(6.0, 2.0).unwrap();
        assert!(matches!(
            local_min_perturbation_test(&squashed, &ok, &cfg),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn decomposition_adds_up() {
        let mu = simplex(2, &[0.2, 0.3, 0.5]);
        let params = PowerLawParams::new(3.75, 3.0).unwrap();
        let cfg = PerturbationConfig { trials: 50, radius: 0.05, ..Default::default() };
        let report = local_min_perturbation_test(&mu, &params, &cfg).unwrap();
        assert!(report.decomposition_residual < 1e-12, "{}", report.decomposition_residual);
        assert_eq!(report.violations, 0);
        assert!(report.min_gap > 0.0);
    }

    #[test]
    fn split_of_the_heavy_vertex_detects_the_threshold() {
        let mu = simplex(1, &[0.25, 0.75]);
        let below = PowerLawParams::new(4.5, 2.0).unwrap();
        let cert = descent_direction_search(&mu, &below, &DescentSearch::default()).unwrap();
        let cert = cert.expect("descent below the threshold");
        assert!((cert.measure.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let above = PowerLawParams::new(5.5, 2.0).unwrap();
        assert!(descent_direction_search(&mu, &above, &DescentSearch::default()).unwrap().is_none());
    }

    #[test]
    fn second_variation_is_positive_above_threshold() {
        let sv = second_variation_check(3.75, 3.0, &[0.2, 0.3, 0.5]).unwrap();
        assert!(sv.positive, "{sv:?}");
        for alpha in [5.01, 6.0, 20.0] {
            let sv = second_variation_check(alpha, 2.0, &[0.25, 0.75]).unwrap();
            assert!(sv.positive, "{alpha} {sv:?}");
        }
        assert!(second_variation_check(4.9, 2.0, &[0.25, 0.75]).is_err());
    }
}
