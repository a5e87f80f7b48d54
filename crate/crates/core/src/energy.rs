//! Interaction energy `E(mu) = sum_i sum_j m_i m_j w(|x_i - x_j|)` and its
//! first variations.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{pow, PowerLawParams};
use crate::measure::DiscreteMeasure;
use crate::numeric::{compensated_sum, dist, CompensatedSum};

/// Below this many atoms the pairwise loops stay on the calling thread.
const PARALLEL_MIN_ATOMS: usize = 128;

/// Energy, potential at each atom and the spread of that potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyReport {
    pub value: f64,
    pub potential_at_atoms: Vec<f64>,
    pub el_residual: f64,
}

/// Euler-Lagrange diagnostics; see [`euler_lagrange_residual`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElResidual {
    /// `max_i V(x_i) - min_i V(x_i)`.
    pub spread: f64,
    /// `max(0, E(mu) - min_i V(x_i))`.
    pub excess: f64,
    pub min_atom_potential: f64,
    pub probes_checked: usize,
    /// Off-support points where `V < min_i V(x_i) - tol`.
    pub violations: Vec<ProbeViolation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeViolation {
    pub point: Vec<f64>,
    pub potential: f64,
}

fn row_sum(mu: &DiscreteMeasure, params: &PowerLawParams, i: usize) -> f64 {
    let xi = mu.point(i);
    let mut acc = CompensatedSum::new();
    for j in (i + 1)..mu.len() {
        let w = params.eval_w(dist(xi, mu.point(j)));
        if w.is_infinite() {
            return f64::INFINITY;
        }
        acc.add(mu.weight(j) * w);
    }
    mu.weight(i) * acc.value()
}

/// `E_W(mu)`, counting both orderings of each pair. For the hard kernel the
/// result is `+inf` exactly when the support diameter exceeds 1.
pub fn energy(mu: &DiscreteMeasure, params: &PowerLawParams) -> f64 {
    let n = mu.len();
    let rows: Vec<f64> = if n >= PARALLEL_MIN_ATOMS {
        (0..n).into_par_iter().map(|i| row_sum(mu, params, i)).collect()
    } else {
        (0..n).map(|i| row_sum(mu, params, i)).collect()
    };
    if rows.iter().any(|r| r.is_infinite()) {
        return f64::INFINITY;
    }
    2.0 * compensated_sum(rows)
}

/// Convolution potential `(mu * W)(x) = sum_j m_j w(|x - x_j|)`.
pub fn potential_field(mu: &DiscreteMeasure, params: &PowerLawParams, x: &[f64]) -> f64 {
    let mut acc = CompensatedSum::new();
    for (y, m) in mu.points().zip(mu.weights()) {
        let t = params.eval_w(dist(x, y));
        if t.is_infinite() {
            return f64::INFINITY;
        }
        acc.add(m * t);
    }
    acc.value()
}

/// `(mu * W)(x_i)` at every atom.
pub fn potential_at_atoms(mu: &DiscreteMeasure, params: &PowerLawParams) -> Vec<f64> {
    let eval = |i: usize| potential_field(mu, params, mu.point(i));
    if mu.len() >= PARALLEL_MIN_ATOMS {
        (0..mu.len()).into_par_iter().map(eval).collect()
    } else {
        (0..mu.len()).map(eval).collect()
    }
}

pub fn energy_report(mu: &DiscreteMeasure, params: &PowerLawParams) -> EnergyReport {
    let potential_at_atoms = potential_at_atoms(mu, params);
    let (lo, hi) = min_max(&potential_at_atoms);
    let el_residual = if hi.is_finite() { hi - lo } else { f64::INFINITY };
    EnergyReport {
        value: energy(mu, params),
        potential_at_atoms,
        el_residual,
    }
}

fn min_max(values: &[f64]) -> (f64, f64) {
    values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

/// Per-atom velocity `-sum_j m_j grad W(x_i - x_j)` as a flat buffer.
///
/// Each atom's sum runs over `j` in index order, so the result is identical
/// whether or not the outer loop runs in parallel.
pub fn velocity_field(mu: &DiscreteMeasure, params: &PowerLawParams) -> Result<Vec<f64>> {
    let alpha = params.require_dynamics()?;
    Ok(velocity_from_coords(mu.dim(), mu.coords(), mu.weights(), params, alpha))
}

pub(crate) fn velocity_from_coords(
    dim: usize,
    coords: &[f64],
    weights: &[f64],
    params: &PowerLawParams,
    alpha: f64,
) -> Vec<f64> {
    let n = weights.len();
    let atom = |i: usize, out: &mut [f64]| {
        let xi = &coords[i * dim..(i + 1) * dim];
        out.iter_mut().for_each(|v| *v = 0.0);
        for j in 0..n {
            if j == i {
                continue;
            }
            let xj = &coords[j * dim..(j + 1) * dim];
            let r = dist(xi, xj);
            if r == 0.0 {
                continue;
            }
            let g = weights[j] * (pow(r, alpha - 2.0) - pow(r, params.beta() - 2.0));
            for d in 0..dim {
                out[d] -= g * (xi[d] - xj[d]);
            }
        }
    };
    let mut vel = vec![0.0; n * dim];
    if n >= PARALLEL_MIN_ATOMS {
        vel.par_chunks_mut(dim)
            .enumerate()
            .for_each(|(i, out)| atom(i, out));
    } else {
        vel.chunks_mut(dim).enumerate().for_each(|(i, out)| atom(i, out));
    }
    vel
}

/// Position gradient `g_i = 2 m_i sum_{j != i} m_j grad W(x_i - x_j)`.
pub fn energy_gradient(mu: &DiscreteMeasure, params: &PowerLawParams) -> Result<Vec<Vec<f64>>> {
    let vel = velocity_field(mu, params)?;
    Ok(vel
        .chunks_exact(mu.dim())
        .zip(mu.weights())
        .map(|(v, m)| v.iter().map(|vi| -2.0 * m * vi).collect())
        .collect())
}

/// Default probes: pair midpoints, the barycenter, and unit offsets along
/// each coordinate axis from the barycenter and from every atom.
pub fn default_probes(mu: &DiscreteMeasure) -> Vec<Vec<f64>> {
    let n = mu.dim();
    let mut probes = Vec::new();
    for i in 0..mu.len() {
        for j in (i + 1)..mu.len() {
            probes.push(
                mu.point(i)
                    .iter()
                    .zip(mu.point(j))
                    .map(|(a, b)| 0.5 * (a + b))
                    .collect(),
            );
        }
    }
    let bary = mu.barycenter();
    let anchors = std::iter::once(bary.clone()).chain(mu.points().map(<[f64]>::to_vec));
    probes.push(bary.clone());
    for anchor in anchors {
        for d in 0..n {
            for sign in [-1.0, 1.0] {
                let mut p = anchor.clone();
                p[d] += sign;
                probes.push(p);
            }
        }
    }
    probes
}

/// Euler-Lagrange check: at a minimizer `mu * W` is constant on the support
/// and no smaller anywhere else. Reports the spread over atoms, the excess
/// of `E(mu)` over the smallest atom potential, and probes (default:
/// [`default_probes`]) where the potential dips more than `tol` below the
/// support level.
pub fn euler_lagrange_residual(
    mu: &DiscreteMeasure,
    params: &PowerLawParams,
    probes: Option<&[Vec<f64>]>,
    tol: f64,
) -> Result<ElResidual> {
    params.alpha_finite()?;
    let at_atoms = potential_at_atoms(mu, params);
    let (lo, hi) = min_max(&at_atoms);
    let e = energy(mu, params);
    let owned;
    let probes = match probes {
        Some(p) => p,
        None => {
            owned = default_probes(mu);
            &owned
        }
    };
    let violations = probes
        .iter()
        .filter(|p| p.len() == mu.dim())
        .filter_map(|p| {
            let v = potential_field(mu, params, p);
            (v < lo - tol).then(|| ProbeViolation {
                point: p.clone(),
                potential: v,
            })
        })
        .collect();
    Ok(ElResidual {
        spread: hi - lo,
        excess: (e - lo).max(0.0),
        min_atom_potential: lo,
        probes_checked: probes.len(),
        violations,
    })
}

/// Energy of the pure power `|x|^p / p`. For `p = 2` this is `Var(mu)`.
pub fn power_energy(mu: &DiscreteMeasure, p: f64) -> Result<f64> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::InvalidParams(format!("exponent must be positive and finite, got {p}")));
    }
    let mut acc = CompensatedSum::new();
    for i in 0..mu.len() {
        for j in i + 1..mu.len() {
            acc.add(mu.weight(i) * mu.weight(j) * pow(dist(mu.point(i), mu.point(j)), p));
        }
    }
    Ok(2.0 * acc.value() / p)
}

/// Moment comparison `(beta E_beta)^(1/beta) <= (alpha E_alpha)^(1/alpha)`
/// where `E_p` is the energy of `|x|^p / p`, with relative slack `1e-10`.
pub fn jensen_moment_check(mu: &DiscreteMeasure, alpha: f64, beta: f64) -> Result<bool> {
    if !(alpha > beta && beta > 0.0) {
        return Err(Error::InvalidParams(format!(
            "need alpha > beta > 0, got ({alpha}, {beta})"
        )));
    }
    let lhs = (beta * power_energy(mu, beta)?).max(0.0).powf(1.0 / beta);
    let rhs = (alpha * power_energy(mu, alpha)?).max(0.0).powf(1.0 / alpha);
    Ok(lhs <= rhs * (1.0 + 1e-10) + f64::MIN_POSITIVE)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::make_unit_simplex;
    use approx::assert_relative_eq;

    fn p(a: f64, b: f64) -> PowerLawParams {
        PowerLawParams::new(a, b).unwrap()
    }

    fn two_atoms(d: f64) -> DiscreteMeasure {
        DiscreteMeasure::uniform(vec![vec![0.0, 0.0], vec![d, 0.0]]).unwrap()
    }

    fn unit_simplex_uniform(n: usize) -> DiscreteMeasure {
        DiscreteMeasure::uniform(make_unit_simplex(n, true).unwrap().vertices().to_vec()).unwrap()
    }

    #[test]
    fn energy_examples() {
        assert_relative_eq!(energy(&two_atoms(1.0), &p(4.0, 2.0)), -0.125, epsilon = 1e-16);
        assert_relative_eq!(
            energy(&unit_simplex_uniform(2), &p(4.0, 2.0)),
            -1.0 / 6.0,
            epsilon = 1e-15
        );
        assert_eq!(energy(&DiscreteMeasure::dirac(vec![1.0, 2.0]).unwrap(), &p(4.0, 2.0)), 0.0);
    }

    #[test]
    fn hard_kernel_energy() {
        let hard = PowerLawParams::hard(2.0).unwrap();
        assert_eq!(energy(&two_atoms(1.01), &hard), f64::INFINITY);
        assert_relative_eq!(energy(&two_atoms(1.0), &hard), 2.0 * 0.25 * -0.5);
    }

    #[test]
    fn gradient_examples() {
        let g = energy_gradient(&two_atoms(1.0), &p(4.0, 2.0)).unwrap();
        assert!(g.iter().flatten().all(|v| v.abs() < 1e-15));
        for n in 1..=4 {
            for &(a, b) in &[(4.0, 2.0), (7.0, 3.0)] {
                let g = energy_gradient(&unit_simplex_uniform(n), &p(a, b)).unwrap();
                assert!(g.iter().flatten().all(|v| v.abs() < 1e-13), "n={n}");
            }
        }
        assert!(energy_gradient(&two_atoms(1.0), &PowerLawParams::hard(2.0).unwrap()).is_err());
    }

    #[test]
    fn gradient_matches_finite_differences_on_five_atoms() {
        let mu = DiscreteMeasure::new(
            vec![
                vec![0.1, 0.2],
                vec![0.9, -0.3],
                vec![-0.4, 0.7],
                vec![0.3, 1.1],
                vec![-0.6, -0.5],
            ],
            vec![0.1, 0.3, 0.2, 0.15, 0.25],
        )
        .unwrap();
        let k = p(4.0, 2.0);
        let g = energy_gradient(&mu, &k).unwrap();
        let h = 1e-6;
        for i in 0..mu.len() {
            for d in 0..2 {
                let mut plus = mu.coords().to_vec();
                let mut minus = mu.coords().to_vec();
                plus[i * 2 + d] += h;
                minus[i * 2 + d] -= h;
                let fd = (energy(&mu.with_coords(plus).unwrap(), &k)
                    - energy(&mu.with_coords(minus).unwrap(), &k))
                    / (2.0 * h);
                assert_relative_eq!(g[i][d], fd, max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn potential_examples() {
        let k = p(4.0, 2.0);
        let delta = DiscreteMeasure::dirac(vec![0.0, 0.0]).unwrap();
        assert_relative_eq!(potential_field(&delta, &k, &[0.6, 0.8]), -0.25, epsilon = 1e-15);
        let tri = unit_simplex_uniform(2);
        assert_relative_eq!(
            potential_field(&tri, &k, tri.point(1)),
            -1.0 / 6.0,
            epsilon = 1e-15
        );
        let hard = PowerLawParams::hard(2.0).unwrap();
        assert_eq!(potential_field(&delta, &hard, &[2.0, 0.0]), f64::INFINITY);
    }

    #[test]
    fn euler_lagrange_on_simplex_and_dirac() {
        let k = p(6.0, 2.0);
        for n in 1..=3 {
            let res = euler_lagrange_residual(&unit_simplex_uniform(n), &k, None, 1e-12).unwrap();
            assert!(res.spread < 1e-12 && res.excess < 1e-12);
        }
        let res =
            euler_lagrange_residual(&DiscreteMeasure::dirac(vec![0.0]).unwrap(), &k, None, 1e-12)
                .unwrap();
        assert_eq!((res.spread, res.excess), (0.0, 0.0));
    }

    #[test]
    fn euler_lagrange_exposes_non_minimizer() {
        let k = p(4.0, 2.0);
        let mu = DiscreteMeasure::uniform(vec![vec![-0.25, 0.0], vec![0.25, 0.0]]).unwrap();
        let res = euler_lagrange_residual(&mu, &k, None, 1e-9).unwrap();
        assert!(res.spread < 1e-15 && res.excess < 1e-15);
        // atom potential: (w(0) + w(1/2)) / 2 = -0.0546875
        assert_relative_eq!(res.min_atom_potential, -0.0546875, epsilon = 1e-16);
        // the midpoint sees w(1/4) = -0.0302734375, which is higher
        let mid = potential_field(&mu, &k, &[0.0, 0.0]);
        assert_relative_eq!(mid, -0.0302734375, epsilon = 1e-16);
        assert!(mid > res.min_atom_potential);
        // unit offset from the barycenter: (w(3/4) + w(5/4)) / 2
        let off = potential_field(&mu, &k, &[1.0, 0.0]);
        let expected = 0.5 * (k.eval_w(0.75) + k.eval_w(1.25));
        assert_relative_eq!(off, expected, epsilon = 1e-15);
        assert!(!res.violations.is_empty());
        assert!(res.violations.iter().any(|v| v.point == vec![1.0, 0.0]));
    }

    #[test]
    fn jensen_examples() {
        assert!(jensen_moment_check(&two_atoms(0.7), 5.0, 2.0).unwrap());
        assert!(jensen_moment_check(&unit_simplex_uniform(3), 9.0, 3.0).unwrap());
        assert!(jensen_moment_check(&two_atoms(0.7), 2.0, 5.0).is_err());
    }

    #[test]
    fn report_residual_is_spread() {
        let mu = DiscreteMeasure::new(
            vec![vec![0.0], vec![0.7], vec![1.9]],
            vec![0.2, 0.5, 0.3],
        )
        .unwrap();
        let r = energy_report(&mu, &p(5.0, 2.0));
        let (lo, hi) = min_max(&r.potential_at_atoms);
        assert_eq!(r.el_residual, hi - lo);
        let weighted: f64 = r
            .potential_at_atoms
            .iter()
            .zip(mu.weights())
            .map(|(v, m)| v * m)
            .sum();
        assert_relative_eq!(weighted, r.value, epsilon = 1e-14);
    }
}
