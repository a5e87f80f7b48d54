//! Exact Wasserstein distances `d_p` between discrete measures.
//!
//! `p` finite is the transportation LP with cost `|x - y|^p`, solved by the
//! transportation simplex. `p = inf` is the bottleneck problem: the smallest
//! pairwise distance `t` admitting a coupling supported on `|x - y| <= t`,
//! found by bisection over the sorted candidate distances with max-flow
//! feasibility checks.

mod maxflow;
mod simplex;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{align_rigid, make_unit_simplex, AlignOptions};
use crate::kernel::pow;
use crate::measure::DiscreteMeasure;
use crate::numeric::dist;

use maxflow::FlowNetwork;

/// Mass tolerance for bottleneck feasibility.
const FEASIBILITY_TOL: f64 = 1e-12;

/// Sparse coupling between the atoms of two measures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingPlan {
    pub rows: usize,
    pub cols: usize,
    /// `(row, col, mass)` triplets with positive mass.
    pub flow: Vec<(usize, usize, f64)>,
}

impl CouplingPlan {
    pub fn row_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.rows];
        for &(i, _, f) in &self.flow {
            s[i] += f;
        }
        s
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.cols];
        for &(_, j, f) in &self.flow {
            s[j] += f;
        }
        s
    }

    pub fn dense(&self) -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; self.cols]; self.rows];
        for &(i, j, f) in &self.flow {
            m[i][j] += f;
        }
        m
    }

    fn from_cells(rows: usize, cols: usize, cells: impl IntoIterator<Item = (usize, usize, f64)>) -> Self {
        let mut flow: Vec<_> = cells.into_iter().filter(|c| c.2 > 0.0).collect();
        flow.sort_by_key(|a| (a.0, a.1));
        Self { rows, cols, flow }
    }
}

fn check_dims(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<()> {
    if mu.dim() != nu.dim() {
        return Err(Error::InvalidParams(format!(
            "measures live in R^{} and R^{}",
            mu.dim(),
            nu.dim()
        )));
    }
    Ok(())
}

/// `d_p(mu, nu)` for finite `p >= 1` together with an optimal coupling.
pub fn wasserstein_p(mu: &DiscreteMeasure, nu: &DiscreteMeasure, p: f64) -> Result<(f64, CouplingPlan)> {
    check_dims(mu, nu)?;
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::InvalidParams(format!(
            "finite p >= 1 required, got {p}; use wasserstein_inf for p = inf"
        )));
    }
    let cost = |i: usize, j: usize| pow(dist(mu.point(i), nu.point(j)), p);
    let sol = simplex::solve(mu.weights(), nu.weights(), cost)?;
    let plan = CouplingPlan::from_cells(mu.len(), nu.len(), sol.cells);
    Ok((sol.cost.max(0.0).powf(1.0 / p), plan))
}

/// `d_inf(mu, nu)`: the smallest pairwise distance `t` for which some
/// coupling is supported on pairs at distance `<= t`.
pub fn wasserstein_inf(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<(f64, CouplingPlan)> {
    check_dims(mu, nu)?;
    let mut candidates: Vec<f64> = (0..mu.len())
        .flat_map(|i| (0..nu.len()).map(move |j| dist(mu.point(i), nu.point(j))))
        .collect();
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();
    // the largest candidate always admits the product coupling
    let (mut lo, mut hi) = (0usize, candidates.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if bottleneck_flow(mu, nu, candidates[mid]).0 {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let t = candidates[hi];
    let (_, plan) = bottleneck_flow(mu, nu, t);
    Ok((t, plan))
}

/// Whether a coupling supported on `{|x - y| <= t}` exists, and the
/// max-flow coupling found.
fn bottleneck_flow(mu: &DiscreteMeasure, nu: &DiscreteMeasure, t: f64) -> (bool, CouplingPlan) {
    let (m, n) = (mu.len(), nu.len());
    let (source, sink) = (m + n, m + n + 1);
    let mut net = FlowNetwork::new(m + n + 2);
    for i in 0..m {
        net.add_edge(source, i, mu.weight(i));
    }
    for j in 0..n {
        net.add_edge(m + j, sink, nu.weight(j));
    }
    let mut arcs = Vec::new();
    for i in 0..m {
        for j in 0..n {
            if dist(mu.point(i), nu.point(j)) <= t {
                arcs.push((i, j, net.add_edge(i, m + j, f64::INFINITY)));
            }
        }
    }
    let flow = net.max_flow(source, sink);
    let plan = CouplingPlan::from_cells(m, n, arcs.iter().map(|&(i, j, e)| (i, j, net.flow_on(e))));
    (flow >= 1.0 - FEASIBILITY_TOL, plan)
}

/// Dispatches on `p`; `f64::INFINITY` selects the bottleneck distance.
pub fn wasserstein(mu: &DiscreteMeasure, nu: &DiscreteMeasure, p: f64) -> Result<(f64, CouplingPlan)> {
    if p == f64::INFINITY {
        wasserstein_inf(mu, nu)
    } else {
        wasserstein_p(mu, nu, p)
    }
}

/// Search controls for [`distance_to_simplex_family_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySearch {
    pub random_seeds: usize,
    pub initial_step: f64,
    pub min_step: f64,
    pub seed: u64,
}

impl Default for FamilySearch {
    fn default() -> Self {
        Self {
            random_seeds: 8,
            initial_step: 0.2,
            min_step: 1e-10,
            seed: 0x5eed,
        }
    }
}

/// `min_R d_2(mu, R mu_hat)` over orthogonal `R`, where `mu_hat` is the
/// uniform measure on the centered unit `n`-simplex.
pub fn distance_to_simplex_family(mu: &DiscreteMeasure, n: usize) -> Result<f64> {
    distance_to_simplex_family_with(mu, n, FamilySearch::default())
}

pub fn distance_to_simplex_family_with(mu: &DiscreteMeasure, n: usize, search: FamilySearch) -> Result<f64> {
    if mu.dim() != n {
        return Err(Error::InvalidParams(format!(
            "measure lives in R^{}, expected R^{n}",
            mu.dim()
        )));
    }
    let reference = make_unit_simplex(n, true)?.uniform_measure();
    let objective = |r: &DMatrix<f64>| -> Result<f64> {
        let rotated = reference.transformed(&row_major(r), &vec![0.0; n]);
        Ok(wasserstein_p(mu, &rotated, 2.0)?.0)
    };

    let mut seeds = vec![DMatrix::identity(n, n)];
    if let Ok(al) = align_rigid(&reference, mu, AlignOptions::default()) {
        seeds.push(DMatrix::from_row_slice(n, n, &al.rotation));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(search.seed);
    for _ in 0..search.random_seeds {
        let g = DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(&mut rng));
        seeds.push(g.qr().q());
    }
    let mut scored = Vec::with_capacity(seeds.len());
    for s in seeds {
        let v = objective(&s)?;
        scored.push((v, s));
    }
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));

    let planes: Vec<(usize, usize)> = (0..n).flat_map(|p| ((p + 1)..n).map(move |q| (p, q))).collect();
    let mut best = f64::INFINITY;
    for (mut value, mut rot) in scored.into_iter().take(2) {
        let mut step = search.initial_step;
        while step >= search.min_step && !planes.is_empty() {
            let mut improved = false;
            for &(p, q) in &planes {
                for sign in [1.0, -1.0] {
                    let trial = givens(n, p, q, sign * step) * &rot;
                    let v = objective(&trial)?;
                    if v < value {
                        value = v;
                        rot = trial;
                        improved = true;
                        break;
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        best = best.min(value);
    }
    Ok(best)
}

fn givens(n: usize, p: usize, q: usize, angle: f64) -> DMatrix<f64> {
    let mut g = DMatrix::identity(n, n);
    let (s, c) = angle.sin_cos();
    g[(p, p)] = c;
    g[(q, q)] = c;
    g[(p, q)] = -s;
    g[(q, p)] = s;
    g
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    (0..n)
        .flat_map(|r| (0..m.ncols()).map(move |c| (r, c)))
        .map(|(r, c)| m[(r, c)])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn line(points: &[f64], weights: &[f64]) -> DiscreteMeasure {
        DiscreteMeasure::new(points.iter().map(|&x| vec![x]).collect(), weights.to_vec()).unwrap()
    }

    #[test]
    fn dirac_to_dirac() {
        let a = DiscreteMeasure::dirac(vec![0.0, 0.0]).unwrap();
        let b = DiscreteMeasure::dirac(vec![3.0, 4.0]).unwrap();
        for p in [1.0, 2.0] {
            assert_relative_eq!(wasserstein_p(&a, &b, p).unwrap().0, 5.0, epsilon = 1e-14);
        }
        assert_eq!(wasserstein_inf(&a, &b).unwrap().0, 5.0);
    }

    #[test]
    fn two_point_polytope() {
        // vertices of the 2x2 polytope are parameterized by gamma_00 in [1/4, 1/2]
        let mu = line(&[0.0, 1.0], &[0.5, 0.5]);
        let nu = line(&[0.0, 1.0], &[0.25, 0.75]);
        let (d1, plan) = wasserstein_p(&mu, &nu, 1.0).unwrap();
        assert_relative_eq!(d1, 0.25, epsilon = 1e-15);
        assert_relative_eq!(wasserstein_p(&mu, &nu, 2.0).unwrap().0, 0.5, epsilon = 1e-15);
        for (s, w) in plan.row_sums().iter().zip(mu.weights()) {
            assert!((s - w).abs() < 1e-12);
        }
        let (dinf, plan) = wasserstein_inf(&mu, &nu).unwrap();
        assert_eq!(dinf, 1.0);
        assert!(!bottleneck_flow(&mu, &nu, 0.0).0);
        for (s, w) in plan.col_sums().iter().zip(nu.weights()) {
            assert!((s - w).abs() < 1e-12);
        }
    }

    #[test]
    fn dirac_to_symmetric_pair() {
        let a = line(&[0.0], &[1.0]);
        let b = line(&[-0.7, 0.7], &[0.5, 0.5]);
        assert_relative_eq!(wasserstein_inf(&a, &b).unwrap().0, 0.7);
    }

    #[test]
    fn self_distance_is_zero_with_diagonal_plan() {
        let mu = DiscreteMeasure::new(
            vec![vec![0.0, 1.0], vec![2.0, 0.5], vec![-1.0, 0.0]],
            vec![0.2, 0.3, 0.5],
        )
        .unwrap();
        for p in [1.0, 2.0] {
            let (d, plan) = wasserstein_p(&mu, &mu, p).unwrap();
            assert!(d.abs() < 1e-12);
            assert!(plan.flow.iter().all(|&(i, j, _)| i == j));
        }
        let (d, plan) = wasserstein_inf(&mu, &mu).unwrap();
        assert_eq!(d, 0.0);
        assert!(plan.flow.iter().all(|&(i, j, _)| i == j));
    }

    #[test]
    fn rejects_bad_inputs() {
        let a = line(&[0.0], &[1.0]);
        let b = DiscreteMeasure::dirac(vec![0.0, 0.0]).unwrap();
        assert!(wasserstein_p(&a, &b, 2.0).is_err());
        assert!(wasserstein_p(&a, &a, 0.5).is_err());
    }

    #[test]
    fn simplex_family_distance() {
        for n in 1..=3 {
            let hat = make_unit_simplex(n, true).unwrap().uniform_measure();
            assert!(distance_to_simplex_family(&hat, n).unwrap() < 1e-12);
        }
        let hat = make_unit_simplex(2, true).unwrap().uniform_measure();
        let (s, c) = 0.7f64.sin_cos();
        let rotated = hat.transformed(&[c, -s, s, c], &[0.0, 0.0]);
        assert!(distance_to_simplex_family(&rotated, 2).unwrap() <= 1e-8);

        for n in [2usize, 3] {
            let spec = make_unit_simplex(n, true).unwrap();
            let eps = 0.05;
            let v = spec.vertices();
            let mut pts = v.to_vec();
            let dir: Vec<f64> = v[1].iter().zip(&v[0]).map(|(a, b)| a - b).collect();
            pts[0].iter_mut().zip(&dir).for_each(|(x, d)| *x += eps * d);
            let mu = DiscreteMeasure::uniform(pts).unwrap();
            let bound = eps / ((n + 1) as f64).sqrt();
            // identity coupling gives exactly the bound
            assert_relative_eq!(wasserstein_p(&mu, &spec.uniform_measure(), 2.0).unwrap().0, bound, epsilon = 1e-14);
            assert!(distance_to_simplex_family(&mu, n).unwrap() <= bound + 1e-8);
        }
    }
}
