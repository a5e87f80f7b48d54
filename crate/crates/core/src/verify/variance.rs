//! Largest variance over probability weights on a fixed finite support, and
//! sweeps of the isodiametric bound `Var <= n / (2n + 2)`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{jung_radius, make_unit_simplex, reuleaux_membership};
use crate::numeric::{dist, dot, norm, project_to_simplex};

const MAX_ITERS: usize = 5000;
const REFINE_EVERY: usize = 25;
const KKT_TOL: f64 = 1e-12;

/// Maximizes `sum w_i |x_i|^2 - |sum w_i x_i|^2` over the probability simplex.
///
/// The points are first rescaled to unit diameter, so the returned value is
/// the variance bound for the rescaled cloud. Weights come back in input
/// order. A cloud with a single distinct point has value 0 and uniform weights.
pub fn max_variance_given_support(points: &[Vec<f64>]) -> Result<(f64, Vec<f64>)> {
    let k = points.len();
    if k == 0 {
        return Err(Error::InvalidParams("support is empty".into()));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim || p.iter().any(|c| !c.is_finite())) {
        return Err(Error::InvalidParams("support points must be finite and share a dimension".into()));
    }
    let mut diam = 0.0f64;
    for i in 0..k {
        for j in i + 1..k {
            diam = diam.max(dist(&points[i], &points[j]));
        }
    }
    if diam == 0.0 {
        return Ok((0.0, vec![1.0 / k as f64; k]));
    }
    let mean: Vec<f64> = (0..dim)
        .map(|d| points.iter().map(|p| p[d]).sum::<f64>() / k as f64)
        .collect();
    let x: Vec<Vec<f64>> = points
        .iter()
        .map(|p| p.iter().zip(&mean).map(|(a, c)| (a - c) / diam).collect())
        .collect();
    let gram = DMatrix::from_fn(k, k, |i, j| dot(&x[i], &x[j]));
    let b = DVector::from_fn(k, |i, _| gram[(i, i)]);
    let objective = |w: &DVector<f64>| b.dot(w) - w.dot(&(&gram * w));

    let mut w = DVector::from_element(k, 1.0 / k as f64);
    let mut step = 1.0;
    for iter in 0..MAX_ITERS {
        let grad = &b - 2.0 * (&gram * &w);
        if iter % REFINE_EVERY == REFINE_EVERY - 1 {
            if let Some(exact) = kkt_refine(&gram, &b, &w) {
                if objective(&exact) >= objective(&w) - 1e-15 {
                    w = exact;
                    break;
                }
            }
        }
        let trial: Vec<f64> = w.iter().zip(grad.iter()).map(|(wi, gi)| wi + step * gi).collect();
        let d = DVector::from_vec(project_to_simplex(&trial)) - &w;
        let slope = grad.dot(&d);
        if slope <= 1e-18 {
            break;
        }
        let curvature = d.dot(&(&gram * &d));
        let t = if curvature > 0.0 { (slope / (2.0 * curvature)).min(1.0) } else { 1.0 };
        w += t * d;
        // long steps are cheap here because the line search is exact
        step = if t >= 1.0 { step * 2.0 } else { (step * 0.5).max(1e-3) };
    }
    let mut weights: Vec<f64> = w.iter().map(|v| v.max(0.0)).collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|v| *v /= total);
    let value = objective(&DVector::from_vec(weights.clone()));
    Ok((value.max(0.0), weights))
}

/// Solves the stationarity system on the current support and accepts the
/// result only if it is primal and dual feasible.
fn kkt_refine(gram: &DMatrix<f64>, b: &DVector<f64>, w: &DVector<f64>) -> Option<DVector<f64>> {
    let k = w.len();
    let support: Vec<usize> = (0..k).filter(|&i| w[i] > 1e-9).collect();
    let s = support.len();
    let mut lhs = DMatrix::zeros(s + 1, s + 1);
    let mut rhs = DVector::zeros(s + 1);
    for (a, &i) in support.iter().enumerate() {
        for (c, &j) in support.iter().enumerate() {
            lhs[(a, c)] = 2.0 * gram[(i, j)];
        }
        lhs[(a, s)] = 1.0;
        lhs[(s, a)] = 1.0;
        rhs[a] = b[i];
    }
    rhs[s] = 1.0;
    let sol = lhs.svd(true, true).solve(&rhs, 1e-13).ok()?;
    if sol.iter().take(s).any(|v| *v < -KKT_TOL || !v.is_finite()) {
        return None;
    }
    let mut out = DVector::zeros(k);
    for (a, &i) in support.iter().enumerate() {
        out[i] = sol[a].max(0.0);
    }
    let total = out.sum();
    if (total - 1.0).abs() > 1e-9 {
        return None;
    }
    out /= total;
    let grad = b - 2.0 * (gram * &out);
    let lambda = sol[s];
    if (0..k).any(|i| grad[i] > lambda + 1e-10) {
        return None;
    }
    Some(out)
}

/// The cloud with the largest optimum in a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremalCloud {
    pub index: usize,
    pub value: f64,
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsodiametricReport {
    pub n: usize,
    pub clouds: usize,
    pub seed: u64,
    pub bound: f64,
    pub max_value: f64,
    pub min_value: f64,
    pub violations: usize,
    /// Clouds built from a rigidly moved unit simplex plus interior points.
    pub embedded_clouds: usize,
    pub embedded_min_value: f64,
    /// Largest `|w - 1/(n+1)|` over the vertex weights of embedded clouds.
    pub embedded_vertex_weight_error: f64,
    /// Largest weight put on an interior point of an embedded cloud.
    pub embedded_noise_weight: f64,
    pub extremal: ExtremalCloud,
    pub passed: bool,
}

/// `(embedded, points, value, weights)` for one cloud.
type CloudOutcome = (bool, Vec<Vec<f64>>, f64, Vec<f64>);

/// Every tenth cloud embeds a unit simplex; the rest are random point sets of
/// random size. Each cloud draws from its own stream, so the report does not
/// depend on the thread count.
pub fn isodiametric_sweep(n: usize, clouds: usize, seed: u64) -> Result<IsodiametricReport> {
    if n < 1 {
        return Err(Error::InvalidParams("n must be >= 1".into()));
    }
    if clouds < 1 {
        return Err(Error::InvalidParams("need at least one cloud".into()));
    }
    let simplex = make_unit_simplex(n, false)?;
    let results: Vec<Result<CloudOutcome>> = (0..clouds)
        .into_par_iter()
        .map(|index| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(index as u64);
            let embedded = index % 10 == 9;
            let points = if embedded {
                embedded_cloud(&mut rng, simplex.vertices())
            } else {
                random_cloud(&mut rng, n)
            };
            let (value, weights) = max_variance_given_support(&points)?;
            Ok((embedded, points, value, weights))
        })
        .collect();

    let bound = n as f64 / (2.0 * n as f64 + 2.0);
    let uniform = 1.0 / (n as f64 + 1.0);
    let mut report = IsodiametricReport {
        n,
        clouds,
        seed,
        bound,
        max_value: f64::NEG_INFINITY,
        min_value: f64::INFINITY,
        violations: 0,
        embedded_clouds: 0,
        embedded_min_value: f64::INFINITY,
        embedded_vertex_weight_error: 0.0,
        embedded_noise_weight: 0.0,
        extremal: ExtremalCloud {
            index: 0,
            value: f64::NEG_INFINITY,
            points: Vec::new(),
            weights: Vec::new(),
        },
        passed: false,
    };
    for (index, result) in results.into_iter().enumerate() {
        let (embedded, points, value, weights) = result?;
        if value > bound + 1e-9 {
            report.violations += 1;
        }
        report.min_value = report.min_value.min(value);
        if embedded {
            report.embedded_clouds += 1;
            report.embedded_min_value = report.embedded_min_value.min(value);
            for (i, w) in weights.iter().enumerate() {
                if i <= n {
                    report.embedded_vertex_weight_error = report.embedded_vertex_weight_error.max((w - uniform).abs());
                } else {
                    report.embedded_noise_weight = report.embedded_noise_weight.max(*w);
                }
            }
        }
        if value > report.max_value {
            report.max_value = value;
            report.extremal = ExtremalCloud { index, value, points, weights };
        }
    }
    report.passed = report.violations == 0
        && (report.embedded_clouds == 0 || report.embedded_min_value >= bound - 1e-6);
    Ok(report)
}

fn random_cloud<R: Rng>(rng: &mut R, n: usize) -> Vec<Vec<f64>> {
    let count = rng.random_range(2..=2 * n + 6);
    let gaussian = rng.random_bool(0.5);
    (0..count)
        .map(|_| {
            (0..n)
                .map(|_| {
                    if gaussian {
                        StandardNormal.sample(rng)
                    } else {
                        rng.random_range(-1.0..1.0)
                    }
                })
                .collect()
        })
        .collect()
}

/// Rotated, translated unit simplex followed by random interior points.
fn embedded_cloud<R: Rng>(rng: &mut R, vertices: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = vertices[0].len();
    let q = random_orthogonal(rng, n);
    let shift: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
    let moved: Vec<Vec<f64>> = vertices
        .iter()
        .map(|v| {
            let y = &q * DVector::from_column_slice(v);
            y.iter().zip(&shift).map(|(a, s)| a + s).collect()
        })
        .collect();
    let mut points = moved.clone();
    let extra = rng.random_range(1..=5);
    for _ in 0..extra {
        let raw: Vec<f64> = (0..moved.len()).map(|_| rng.random_range(0.05..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let p: Vec<f64> = (0..n)
            .map(|d| moved.iter().zip(&raw).map(|(v, c)| v[d] * c / total).sum())
            .collect();
        points.push(p);
    }
    points
}

pub(crate) fn random_orthogonal<R: Rng>(rng: &mut R, n: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(rng));
    g.qr().q()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JungReport {
    pub n: usize,
    pub seed: u64,
    pub jung_radius: f64,
    pub clouds: usize,
    /// Largest smallest-enclosing-ball radius over unit-diameter clouds.
    pub max_enclosing_radius: f64,
    pub omega_samples: usize,
    /// Largest distance from the simplex center to a sampled point of `Omega`.
    pub omega_max_radius: f64,
    pub passed: bool,
}

/// Jung's inequality on random unit-diameter clouds, using that the largest
/// variance on a support is the squared radius of its smallest enclosing
/// ball, plus a sampled check that `Omega` lies in the Jung ball.
pub fn jung_check(n: usize, clouds: usize, samples: usize, seed: u64) -> Result<JungReport> {
    let sweep = isodiametric_sweep(n, clouds, seed)?;
    let spec = make_unit_simplex(n, true)?;
    let r = jung_radius(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::MAX);
    let mut omega_samples = 0;
    let mut omega_max_radius = 0.0f64;
    let mut drawn = 0usize;
    while omega_samples < samples && drawn < samples.saturating_mul(1000) {
        drawn += 1;
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        if reuleaux_membership(&spec, &x, 0.0) {
            omega_samples += 1;
            omega_max_radius = omega_max_radius.max(norm(&x));
        }
    }
    for v in spec.vertices() {
        omega_max_radius = omega_max_radius.max(norm(v));
    }
    let max_enclosing_radius = sweep.max_value.max(0.0).sqrt();
    Ok(JungReport {
        n,
        seed,
        jung_radius: r,
        clouds,
        max_enclosing_radius,
        omega_samples,
        omega_max_radius,
        passed: max_enclosing_radius <= r + 1e-9 && omega_max_radius <= r + 1e-12,
    })
}
