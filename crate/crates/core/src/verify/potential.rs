//! Grid scan of the vertex potential `V(x) = -sum_i |x - x_i|^beta` over the
//! Reuleaux domain of a unit simplex.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{jung_radius, make_unit_simplex, reuleaux_membership};
use crate::kernel::pow;
use crate::numeric::dist;

const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexPotentialReport {
    pub beta: f64,
    pub n: usize,
    pub grid_h: f64,
    /// Grid points inside `Omega`.
    pub grid_points: usize,
    pub grid_min_value: f64,
    /// Grid points attaining the grid minimum (within `1e-12`).
    pub grid_argmin: Vec<Vec<f64>>,
    /// Largest distance from a grid minimizer to its nearest vertex.
    pub argmin_vertex_distance: f64,
    /// `min V + n` over grid points farther than `2h` from every vertex.
    pub margin: f64,
    pub vertex_values: Vec<f64>,
    pub center_value: f64,
    /// `-(n + 1) r_n^beta`.
    pub center_expected: f64,
    pub passed: bool,
}

fn potential(vertices: &[Vec<f64>], beta: f64, x: &[f64]) -> f64 {
    -vertices.iter().map(|v| pow(dist(x, v), beta)).sum::<f64>()
}

/// Scans the cube `[-r_n, r_n]^n` about the simplex center at spacing `h`,
/// keeping the points of `Omega`. The grid contains the center.
pub fn vertex_potential_argmin(beta: f64, n: usize, h: f64) -> Result<VertexPotentialReport> {
    if !(beta >= 2.0) || !beta.is_finite() {
        return Err(Error::InvalidParams(format!("beta must be finite and >= 2, got {beta}")));
    }
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidParams(format!("grid_h must be positive, got {h}")));
    }
    if n < 1 {
        return Err(Error::InvalidParams("n must be >= 1".into()));
    }
    let spec = make_unit_simplex(n, true)?;
    let vertices = spec.vertices();
    let rn = jung_radius(n);
    let half = (rn / h).floor() as i64;
    let side = (2 * half + 1) as usize;
    let total = side
        .checked_pow(n as u32)
        .filter(|t| *t <= 200_000_000)
        .ok_or_else(|| Error::InvalidParams("grid too fine for this dimension".into()))?;

    struct Partial {
        count: usize,
        min: f64,
        argmin: Vec<Vec<f64>>,
        margin: f64,
    }
    let scan = |start: usize, end: usize| -> Partial {
        let mut p = Partial {
            count: 0,
            min: f64::INFINITY,
            argmin: Vec::new(),
            margin: f64::INFINITY,
        };
        let mut x = vec![0.0; n];
        for flat in start..end {
            let mut rest = flat;
            for c in x.iter_mut() {
                *c = ((rest % side) as i64 - half) as f64 * h;
                rest /= side;
            }
            if !reuleaux_membership(&spec, &x, 0.0) {
                continue;
            }
            p.count += 1;
            let v = potential(vertices, beta, &x);
            if v < p.min - TIE_TOL {
                p.min = v;
                p.argmin.clear();
                p.argmin.push(x.clone());
            } else if v <= p.min + TIE_TOL {
                p.argmin.push(x.clone());
            }
            let near = vertices.iter().map(|y| dist(&x, y)).fold(f64::INFINITY, f64::min);
            if near > 2.0 * h {
                p.margin = p.margin.min(v + n as f64);
            }
        }
        p
    };
    let chunk = side.max(1024);
    let partials: Vec<Partial> = (0..total.div_ceil(chunk))
        .into_par_iter()
        .map(|c| scan(c * chunk, ((c + 1) * chunk).min(total)))
        .collect();

    let mut count = 0;
    let mut min = f64::INFINITY;
    let mut margin = f64::INFINITY;
    for p in &partials {
        count += p.count;
        min = min.min(p.min);
        margin = margin.min(p.margin);
    }
    let grid_argmin: Vec<Vec<f64>> = partials
        .into_iter()
        .filter(|p| p.min <= min + TIE_TOL)
        .flat_map(|p| p.argmin)
        .collect();
    let argmin_vertex_distance = grid_argmin
        .iter()
        .map(|x| vertices.iter().map(|y| dist(x, y)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);
    let vertex_values: Vec<f64> = vertices.iter().map(|v| potential(vertices, beta, v)).collect();
    let center_value = potential(vertices, beta, &vec![0.0; n]);
    let center_expected = -(n as f64 + 1.0) * pow(rn, beta);
    let nf = n as f64;
    let passed = !grid_argmin.is_empty()
        && argmin_vertex_distance <= 2.0 * h
        && margin > 0.0
        && vertex_values.iter().all(|v| (v + nf).abs() <= 1e-12)
        && (center_value - center_expected).abs() <= 1e-12;
    Ok(VertexPotentialReport {
        beta,
        n,
        grid_h: h,
        grid_points: count,
        grid_min_value: min,
        grid_argmin,
        argmin_vertex_distance,
        margin,
        vertex_values,
        center_value,
        center_expected,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planar_quadratic_case() {
        let r = vertex_potential_argmin(2.0, 2, 0.01).unwrap();
        assert!(r.passed, "{r:?}");
        for v in &r.vertex_values {
            assert!((v + 2.0).abs() < 1e-12);
        }
        assert!((r.center_value + 1.0).abs() < 1e-12);
        assert!(r.center_value > -2.0);
    }

    #[test]
    fn segment() {
        let r = vertex_potential_argmin(3.0, 1, 0.01).unwrap();
        assert!(r.passed, "{r:?}");
        assert_eq!(r.grid_points, 101);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(vertex_potential_argmin(1.5, 2, 0.01).is_err());
        assert!(vertex_potential_argmin(2.0, 2, 0.0).is_err());
    }
}
