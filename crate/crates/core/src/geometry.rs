//! Regular simplices, Jung radius, Reuleaux domains, the edge operator `A_0`
//! and rigid alignment of weighted point sets.

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::DiscreteMeasure;
use crate::numeric::{dist, norm_sq};

/// Vertex set of a regular simplex with common edge length `diameter`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimplexSpec {
    dim_ambient: usize,
    dim_simplex: usize,
    diameter: f64,
    vertices: Vec<Vec<f64>>,
}

impl SimplexSpec {
    /// Validates that all pairwise distances agree to `1e-10` relative.
    pub fn from_vertices(vertices: Vec<Vec<f64>>) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::InvalidParams("a simplex needs at least 2 vertices".into()));
        }
        let dim_ambient = vertices[0].len();
        if vertices.iter().any(|v| v.len() != dim_ambient) {
            return Err(Error::InvalidParams("vertices have mixed dimensions".into()));
        }
        if vertices.len() > dim_ambient + 1 {
            return Err(Error::InvalidParams(format!(
                "{} vertices cannot form a simplex in R^{dim_ambient}",
                vertices.len()
            )));
        }
        let (regular, diameter) = is_regular_simplex(&vertices, 1e-10);
        if !regular {
            return Err(Error::InvalidParams("vertices are not equidistant".into()));
        }
        Ok(Self {
            dim_ambient,
            dim_simplex: vertices.len() - 1,
            diameter,
            vertices,
        })
    }

    pub fn dim_ambient(&self) -> usize {
        self.dim_ambient
    }

    pub fn dim_simplex(&self) -> usize {
        self.dim_simplex
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    /// Centroid of the vertices.
    pub fn center(&self) -> Vec<f64> {
        let k = self.vertices.len() as f64;
        (0..self.dim_ambient)
            .map(|d| self.vertices.iter().map(|v| v[d]).sum::<f64>() / k)
            .collect()
    }

    pub fn circumradius(&self) -> f64 {
        dist(&self.vertices[0], &self.center())
    }

    /// Uniform measure on the vertices.
    pub fn uniform_measure(&self) -> DiscreteMeasure {
        DiscreteMeasure::uniform(self.vertices.clone()).expect("simplex vertices form a measure")
    }

    /// Measure with prescribed vertex masses.
    pub fn measure(&self, masses: &[f64]) -> Result<DiscreteMeasure> {
        if masses.len() != self.vertices.len() {
            return Err(Error::InvalidParams(format!(
                "{} masses for {} vertices",
                masses.len(),
                self.vertices.len()
            )));
        }
        DiscreteMeasure::new(self.vertices.clone(), masses.to_vec())
    }
}

/// Unit-diameter `n`-simplex in `R^n`, built by lifting an apex over the
/// centroid of the previous face one coordinate at a time. With `centered`
/// the barycenter is moved to the origin; otherwise vertex 0 is the origin.
pub fn make_unit_simplex(n: usize, centered: bool) -> Result<SimplexSpec> {
    if n < 1 {
        return Err(Error::InvalidParams("simplex dimension must be >= 1".into()));
    }
    let mut vertices = vec![vec![0.0; n]];
    for k in 0..n {
        let m = vertices.len() as f64;
        let mut apex: Vec<f64> = (0..n)
            .map(|d| vertices.iter().map(|v| v[d]).sum::<f64>() / m)
            .collect();
        // previous face has circumradius^2 = k / (2k + 2)
        let rho_sq = k as f64 / (2.0 * k as f64 + 2.0);
        apex[k] = (1.0 - rho_sq).sqrt();
        vertices.push(apex);
    }
    if centered {
        let c: Vec<f64> = (0..n)
            .map(|d| vertices.iter().map(|v| v[d]).sum::<f64>() / (n as f64 + 1.0))
            .collect();
        for v in &mut vertices {
            for d in 0..n {
                v[d] -= c[d];
            }
        }
    }
    Ok(SimplexSpec {
        dim_ambient: n,
        dim_simplex: n,
        diameter: 1.0,
        vertices,
    })
}

/// Jung radius `sqrt(n / (2n + 2))`: every unit-diameter set in `R^n` fits
/// in a closed ball of this radius.
pub fn jung_radius(n: usize) -> f64 {
    let n = n as f64;
    (n / (2.0 * n + 2.0)).sqrt()
}

/// Whether all pairwise distances agree within `tol * d`, where `d` is the
/// mean pairwise distance (returned alongside).
pub fn is_regular_simplex(points: &[Vec<f64>], tol: f64) -> (bool, f64) {
    if points.len() < 2 {
        return (false, 0.0);
    }
    let dists: Vec<f64> = points
        .iter()
        .tuple_combinations()
        .map(|(a, b)| dist(a, b))
        .collect();
    let d = dists.iter().sum::<f64>() / dists.len() as f64;
    let ok = d > 0.0 && dists.iter().all(|x| (x - d).abs() <= tol * d);
    (ok, d)
}

/// Membership in `Omega_delta`, the intersection of the closed balls of
/// radius `1 + delta` about the vertices.
pub fn reuleaux_membership(spec: &SimplexSpec, x: &[f64], delta: f64) -> bool {
    spec.vertices.iter().all(|v| dist(x, v) <= 1.0 + delta)
}

/// `A_i = sum_{j != i} u_ij u_ij^T` with unit edge directions
/// `u_ij = (y_i - y_j) / |y_i - y_j|`.
pub fn a0_matrix(positions: &[Vec<f64>], i: usize) -> Result<DMatrix<f64>> {
    let ones = vec![1.0; positions.len()];
    weighted_edge_operator(positions, &ones, i)
}

/// `sum_{j != i} m_j u_ij u_ij^T`.
pub fn weighted_edge_operator(
    positions: &[Vec<f64>],
    weights: &[f64],
    i: usize,
) -> Result<DMatrix<f64>> {
    let n = positions
        .first()
        .map(Vec::len)
        .ok_or_else(|| Error::InvalidParams("no positions".into()))?;
    if i >= positions.len() {
        return Err(Error::InvalidParams(format!("vertex index {i} out of range")));
    }
    let mut a = DMatrix::zeros(n, n);
    for (j, y) in positions.iter().enumerate() {
        if j == i {
            continue;
        }
        let diff = DVector::from_iterator(n, positions[i].iter().zip(y).map(|(a, b)| a - b));
        let len = diff.norm();
        if len == 0.0 {
            return Err(Error::InvalidParams(format!(
                "positions {i} and {j} coincide"
            )));
        }
        let u = diff / len;
        a += weights[j] * &u * u.transpose();
    }
    Ok(a)
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn symmetric_eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = a.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Unit eigenvector for the smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvector(a: &DMatrix<f64>) -> Vec<f64> {
    let eig = a.clone().symmetric_eigen();
    let k = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(y.1))
        .map(|(k, _)| k)
        .unwrap_or(0);
    eig.eigenvectors.column(k).iter().copied().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlignOptions {
    /// Admit improper orthogonal maps (reflections).
    pub allow_reflection: bool,
    /// Tolerance when matching atom masses.
    pub weight_tol: f64,
}

impl Default for AlignOptions {
    fn default() -> Self {
        Self {
            allow_reflection: true,
            weight_tol: 1e-9,
        }
    }
}

/// Result of [`align_rigid`]: `x -> rotation * x + translation` maps atom `i`
/// of the first measure onto atom `assignment[i]` of the second.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Alignment {
    /// Row-major `n x n` orthogonal matrix.
    pub rotation: Vec<f64>,
    pub translation: Vec<f64>,
    /// Weighted RMS distance after alignment.
    pub residual: f64,
    pub reflection_used: bool,
    pub assignment: Vec<usize>,
}

const EXHAUSTIVE_MAX_ATOMS: usize = 8;

/// Best orthogonal map plus translation taking `a` onto `b`, minimizing
/// `sum_i m_i |R x_i + t - y_sigma(i)|^2` over weight-compatible assignments.
///
/// Small problems (at most `n + 1` atoms, and at most 8) enumerate every
/// assignment; larger ones alternate a Hungarian assignment with a weighted
/// Kabsch fit from several starting frames.
pub fn align_rigid(
    a: &DiscreteMeasure,
    b: &DiscreteMeasure,
    opts: AlignOptions,
) -> Result<Alignment> {
    if a.dim() != b.dim() {
        return Err(Error::InvalidParams("measures live in different dimensions".into()));
    }
    if a.len() != b.len() {
        return Err(Error::InvalidParams(format!(
            "atom counts differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let (pa, pb) = (a.mass_profile(), b.mass_profile());
    if pa.iter().zip(&pb).any(|(x, y)| (x - y).abs() > opts.weight_tol) {
        return Err(Error::InvalidParams("mass profiles do not match".into()));
    }
    let n = a.len();
    let compatible =
        |i: usize, j: usize| (a.weight(i) - b.weight(j)).abs() <= opts.weight_tol;

    let mut best: Option<Alignment> = None;
    let mut consider = |cand: Alignment| {
        if best.as_ref().is_none_or(|b| cand.residual < b.residual) {
            best = Some(cand);
        }
    };

    if n <= (a.dim() + 1).max(2) && n <= EXHAUSTIVE_MAX_ATOMS {
        for perm in (0..n).permutations(n) {
            if perm.iter().enumerate().all(|(i, &j)| compatible(i, j)) {
                consider(kabsch(a, b, &perm, opts.allow_reflection));
            }
        }
    } else {
        for start in starting_frames(a, b, opts.allow_reflection) {
            let mut current = start;
            let mut assignment: Vec<usize> = Vec::new();
            for _ in 0..64 {
                let cost: Vec<Vec<f64>> = (0..n)
                    .map(|i| {
                        let x = apply(&current, a.point(i));
                        (0..n)
                            .map(|j| {
                                if compatible(i, j) {
                                    a.weight(i) * norm_sq(&sub(&x, b.point(j)))
                                } else {
                                    f64::INFINITY
                                }
                            })
                            .collect()
                    })
                    .collect();
                let next = hungarian(&cost);
                if next == assignment {
                    break;
                }
                assignment = next;
                current = kabsch(a, b, &assignment, opts.allow_reflection);
            }
            consider(current);
        }
    }
    best.ok_or_else(|| Error::InvalidParams("no weight-compatible assignment".into()))
}

fn sub(x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| a - b).collect()
}

fn apply(al: &Alignment, x: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|r| {
            al.rotation[r * n..(r + 1) * n]
                .iter()
                .zip(x)
                .map(|(a, b)| a * b)
                .sum::<f64>()
                + al.translation[r]
        })
        .collect()
}

/// Weighted Kabsch fit for a fixed assignment.
fn kabsch(a: &DiscreteMeasure, b: &DiscreteMeasure, assignment: &[usize], allow_reflection: bool) -> Alignment {
    let n = a.dim();
    let ca = a.barycenter();
    let mut cb = vec![0.0; n];
    for (i, &j) in assignment.iter().enumerate() {
        for d in 0..n {
            cb[d] += a.weight(i) * b.point(j)[d];
        }
    }
    let mut h = DMatrix::<f64>::zeros(n, n);
    for (i, &j) in assignment.iter().enumerate() {
        let xa = DVector::from_iterator(n, a.point(i).iter().zip(&ca).map(|(x, c)| x - c));
        let xb = DVector::from_iterator(n, b.point(j).iter().zip(&cb).map(|(x, c)| x - c));
        h += a.weight(i) * xa * xb.transpose();
    }
    let svd = h.svd(true, true);
    let u = svd.u.expect("requested U");
    let v = svd.v_t.expect("requested V^T").transpose();
    let mut r = &v * u.transpose();
    let mut reflection_used = r.determinant() < 0.0;
    if reflection_used && !allow_reflection {
        // flip the axis of the smallest singular value
        let k = svd
            .singular_values
            .iter()
            .enumerate()
            .min_by(|x, y| x.1.total_cmp(y.1))
            .map(|(k, _)| k)
            .unwrap_or(n - 1);
        let mut v2 = v.clone();
        v2.column_mut(k).neg_mut();
        r = &v2 * u.transpose();
        reflection_used = false;
    }
    let rca = &r * DVector::from_column_slice(&ca);
    let translation: Vec<f64> = (0..n).map(|d| cb[d] - rca[d]).collect();
    let rotation: Vec<f64> = (0..n).flat_map(|row| (0..n).map(move |col| (row, col))).map(|(row, col)| r[(row, col)]).collect();
    let mut al = Alignment {
        rotation,
        translation,
        residual: 0.0,
        reflection_used,
        assignment: assignment.to_vec(),
    };
    let sq: f64 = assignment
        .iter()
        .enumerate()
        .map(|(i, &j)| a.weight(i) * norm_sq(&sub(&apply(&al, a.point(i)), b.point(j))))
        .sum();
    al.residual = sq.max(0.0).sqrt();
    al
}

/// Starting frames for the iterative matcher: translation-only, plus
/// principal-axis frames with every sign pattern (up to 4 dimensions).
fn starting_frames(a: &DiscreteMeasure, b: &DiscreteMeasure, allow_reflection: bool) -> Vec<Alignment> {
    let n = a.dim();
    let ca = a.barycenter();
    let cb = b.barycenter();
    let frame = |rotation: DMatrix<f64>| {
        let rca = &rotation * DVector::from_column_slice(&ca);
        Alignment {
            rotation: (0..n).flat_map(|r| (0..n).map(move |c| (r, c))).map(|(r, c)| rotation[(r, c)]).collect(),
            translation: (0..n).map(|d| cb[d] - rca[d]).collect(),
            residual: f64::INFINITY,
            reflection_used: rotation.determinant() < 0.0,
            assignment: Vec::new(),
        }
    };
    let mut frames = vec![frame(DMatrix::identity(n, n))];
    if n <= 4 {
        let pa = principal_axes(a);
        let pb = principal_axes(b);
        for signs in 0..(1u32 << n) {
            let mut pb_signed = pb.clone();
            for k in 0..n {
                if signs & (1 << k) != 0 {
                    pb_signed.column_mut(k).neg_mut();
                }
            }
            let r = &pb_signed * pa.transpose();
            if allow_reflection || r.determinant() > 0.0 {
                frames.push(frame(r));
            }
        }
    }
    frames
}

fn principal_axes(mu: &DiscreteMeasure) -> DMatrix<f64> {
    let n = mu.dim();
    let c = mu.barycenter();
    let mut cov = DMatrix::<f64>::zeros(n, n);
    for (x, w) in mu.points().zip(mu.weights()) {
        let v = DVector::from_iterator(n, x.iter().zip(&c).map(|(a, b)| a - b));
        cov += *w * &v * v.transpose();
    }
    let eig = cov.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    DMatrix::from_fn(n, n, |r, k| eig.eigenvectors[(r, order[k])])
}

/// Minimum-cost perfect assignment (rows to columns) on a square cost
/// matrix; infinite entries are forbidden pairs.
pub fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    let big = cost
        .iter()
        .flatten()
        .filter(|c| c.is_finite())
        .fold(0.0f64, |m, c| m.max(c.abs()))
        * (n as f64 + 1.0)
        + 1.0;
    let c = |i: usize, j: usize| {
        let v = cost[i][j];
        if v.is_finite() {
            v
        } else {
            big
        }
    };
    // potentials over 1-based rows/columns, column 0 is a sentinel
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = c(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=n {
        if owner[j] > 0 {
            assignment[owner[j] - 1] = j - 1;
        }
    }
    assignment
}
