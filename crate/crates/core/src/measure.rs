//! Discrete probability measures `mu = sum_i m_i delta_{x_i}` on `R^n`.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::numeric::{compensated_sum, dist, norm_sq};

/// Tolerance on `sum m_i = 1`.
pub const MASS_TOL: f64 = 1e-12;

/// Finitely supported probability measure with strictly positive weights.
///
/// Positions are stored row-major in a flat buffer; `point(i)` borrows one row.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    dim: usize,
    coords: Vec<f64>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    /// Builds a measure from points and weights. Zero-weight atoms are
    /// dropped; the remaining weights must be positive and sum to one.
    pub fn new(points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        let dim = points.first().map(Vec::len).unwrap_or(0);
        let coords: Vec<f64> = points.iter().flatten().copied().collect();
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::InvalidMeasure("points have mixed dimensions".into()));
        }
        Self::from_flat(dim, coords, weights)
    }

    /// Uniform weights `1/N`.
    pub fn uniform(points: Vec<Vec<f64>>) -> Result<Self> {
        let n = points.len();
        Self::new(points, vec![1.0 / n.max(1) as f64; n])
    }

    /// Like [`DiscreteMeasure::new`] but rescales positive weights to unit mass.
    pub fn normalized(points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidMeasure("weights must be finite and >= 0".into()));
        }
        let total = compensated_sum(weights.iter().copied());
        if total <= 0.0 {
            return Err(Error::InvalidMeasure("total mass is zero".into()));
        }
        let weights = weights.iter().map(|w| w / total).collect();
        Self::new(points, weights)
    }

    /// Flat row-major constructor.
    pub fn from_flat(dim: usize, coords: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidMeasure("dimension must be at least 1".into()));
        }
        if coords.len() != dim * weights.len() {
            return Err(Error::InvalidMeasure(format!(
                "{} coordinates do not match {} weights in dimension {dim}",
                coords.len(),
                weights.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidMeasure("non-finite coordinate".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidMeasure("weights must be finite and >= 0".into()));
        }
        let total = compensated_sum(weights.iter().copied());
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidMeasure(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        let (coords, weights) = if weights.contains(&0.0) {
            let mut kept_coords = Vec::with_capacity(coords.len());
            let mut kept_weights = Vec::with_capacity(weights.len());
            for (i, &w) in weights.iter().enumerate() {
                if w > 0.0 {
                    kept_coords.extend_from_slice(&coords[i * dim..(i + 1) * dim]);
                    kept_weights.push(w);
                }
            }
            (kept_coords, kept_weights)
        } else {
            (coords, weights)
        };
        if weights.is_empty() {
            return Err(Error::InvalidMeasure("measure has no atoms".into()));
        }
        Ok(Self {
            dim,
            coords,
            weights,
        })
    }

    /// Dirac mass at `x`.
    pub fn dirac(x: Vec<f64>) -> Result<Self> {
        Self::new(vec![x], vec![1.0])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    pub fn points_vec(&self) -> Vec<Vec<f64>> {
        self.points().map(<[f64]>::to_vec).collect()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    /// Same weights, new flat positions.
    pub fn with_coords(&self, coords: Vec<f64>) -> Result<Self> {
        if coords.len() != self.coords.len() {
            return Err(Error::InvalidMeasure("coordinate buffer has wrong length".into()));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidMeasure("non-finite coordinate".into()));
        }
        Ok(Self {
            dim: self.dim,
            coords,
            weights: self.weights.clone(),
        })
    }

    /// Same positions, new weights (zero weights dropped).
    pub fn with_weights(&self, weights: Vec<f64>) -> Result<Self> {
        Self::from_flat(self.dim, self.coords.clone(), weights)
    }

    /// Applies `x -> R x + t` to every atom; `rotation` is row-major `n x n`.
    pub fn transformed(&self, rotation: &[f64], translation: &[f64]) -> Self {
        let n = self.dim;
        let mut coords = Vec::with_capacity(self.coords.len());
        for x in self.points() {
            for r in 0..n {
                let row = &rotation[r * n..(r + 1) * n];
                coords.push(row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + translation[r]);
            }
        }
        Self {
            dim: n,
            coords,
            weights: self.weights.clone(),
        }
    }

    pub fn translated(&self, shift: &[f64]) -> Self {
        let coords = self
            .points()
            .flat_map(|x| x.iter().zip(shift).map(|(a, b)| a + b))
            .collect();
        Self {
            dim: self.dim,
            coords,
            weights: self.weights.clone(),
        }
    }

    /// Barycenter `sum_i m_i x_i`.
    pub fn barycenter(&self) -> Vec<f64> {
        (0..self.dim)
            .map(|d| {
                compensated_sum(
                    self.weights
                        .iter()
                        .enumerate()
                        .map(|(i, w)| w * self.coords[i * self.dim + d]),
                )
            })
            .collect()
    }

    /// `Var(mu) = sum m_i |x_i|^2 - |barycenter|^2`, evaluated about the
    /// barycenter for stability.
    pub fn variance(&self) -> f64 {
        let c = self.barycenter();
        compensated_sum(self.points().zip(&self.weights).map(|(x, w)| {
            w * x.iter().zip(&c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
        }))
    }

    /// Second moment about the origin, `sum m_i |x_i|^2`.
    pub fn second_moment(&self) -> f64 {
        compensated_sum(self.points().zip(&self.weights).map(|(x, w)| w * norm_sq(x)))
    }

    /// Translate so the barycenter sits at the origin.
    pub fn center(&self) -> Self {
        let c = self.barycenter();
        let shift: Vec<f64> = c.iter().map(|v| -v).collect();
        self.translated(&shift)
    }

    /// Largest pairwise distance in the support; 0 for a single atom.
    pub fn diameter(&self) -> f64 {
        let mut best = 0.0f64;
        for i in 0..self.len() {
            for j in (i + 1)..self.len() {
                best = best.max(dist(self.point(i), self.point(j)));
            }
        }
        best
    }

    /// Single-linkage clustering at distance `tol`. Each cluster becomes one
    /// atom at its weighted barycenter carrying the cluster's total mass.
    /// Clusters are ordered by their smallest member index.
    pub fn collapse_clusters(&self, tol: f64) -> Result<Self> {
        if !(tol >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "cluster tolerance must be >= 0, got {tol}"
            )));
        }
        let n = self.len();
        let mut forest = DisjointSet::new(n);
        for i in 0..n {
            for j in (i + 1)..n {
                if dist(self.point(i), self.point(j)) <= tol {
                    forest.union(i, j);
                }
            }
        }
        let mut label = vec![usize::MAX; n];
        let mut order: Vec<usize> = Vec::new();
        for i in 0..n {
            let root = forest.find(i);
            if label[root] == usize::MAX {
                label[root] = order.len();
                order.push(root);
            }
        }
        if order.len() == n {
            return Ok(self.clone());
        }
        let k = order.len();
        let mut mass = vec![0.0; k];
        let mut moment = vec![0.0; k * self.dim];
        for i in 0..n {
            let c = label[forest.find(i)];
            let w = self.weights[i];
            mass[c] += w;
            for (d, x) in self.point(i).iter().enumerate() {
                moment[c * self.dim + d] += w * x;
            }
        }
        for c in 0..k {
            for d in 0..self.dim {
                moment[c * self.dim + d] /= mass[c];
            }
        }
        Ok(Self {
            dim: self.dim,
            coords: moment,
            weights: mass,
        })
    }

    /// Weights sorted ascending.
    pub fn mass_profile(&self) -> Vec<f64> {
        let mut w = self.weights.clone();
        w.sort_by(f64::total_cmp);
        w
    }
}

/// Union-find over `0..n` with path halving; roots are the smallest index.
#[derive(Debug, Clone)]
pub(crate) struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    pub(crate) fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeasureRepr {
    dim: usize,
    points: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weights: Option<Vec<f64>>,
}

impl Serialize for DiscreteMeasure {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MeasureRepr {
            dim: self.dim,
            points: self.points_vec(),
            weights: Some(self.weights.clone()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for DiscreteMeasure {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = MeasureRepr::deserialize(d)?;
        if repr.points.iter().any(|p| p.len() != repr.dim) {
            return Err(serde::de::Error::custom(format!(
                "every point must have dim = {} coordinates",
                repr.dim
            )));
        }
        let n = repr.points.len();
        let weights = repr.weights.unwrap_or_else(|| vec![1.0 / n.max(1) as f64; n]);
        if weights.len() != n {
            return Err(serde::de::Error::custom("weights and points differ in length"));
        }
        let coords = repr.points.into_iter().flatten().collect();
        DiscreteMeasure::from_flat(repr.dim, coords, weights).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn line(points: &[f64], weights: &[f64]) -> DiscreteMeasure {
        DiscreteMeasure::new(points.iter().map(|&x| vec![x]).collect(), weights.to_vec()).unwrap()
    }

    #[test]
    fn construction_validates() {
        assert!(DiscreteMeasure::new(vec![], vec![]).is_err());
        assert!(DiscreteMeasure::new(vec![vec![0.0], vec![1.0]], vec![0.5, 0.4]).is_err());
        assert!(DiscreteMeasure::new(vec![vec![0.0], vec![1.0, 2.0]], vec![0.5, 0.5]).is_err());
        assert!(DiscreteMeasure::new(vec![vec![0.0], vec![1.0]], vec![1.5, -0.5]).is_err());
        let mu = DiscreteMeasure::new(vec![vec![0.0], vec![1.0], vec![2.0]], vec![0.5, 0.0, 0.5])
            .unwrap();
        assert_eq!(mu.len(), 2);
        assert_eq!(mu.point(1), &[2.0]);
    }

    #[test]
    fn barycenter_examples() {
        assert_eq!(line(&[0.0, 1.0], &[0.5, 0.5]).barycenter(), vec![0.5]);
        assert_eq!(line(&[0.0, 1.0], &[0.25, 0.75]).barycenter(), vec![0.75]);
        let tri = DiscreteMeasure::uniform(vec![
            vec![-0.5, -(3f64.sqrt()) / 6.0],
            vec![0.5, -(3f64.sqrt()) / 6.0],
            vec![0.0, 3f64.sqrt() / 3.0],
        ])
        .unwrap();
        for c in tri.barycenter() {
            assert!(c.abs() < 1e-16);
        }
    }

    #[test]
    fn variance_examples() {
        assert_relative_eq!(line(&[-0.5, 0.5], &[0.5, 0.5]).variance(), 0.25);
        let tri = DiscreteMeasure::uniform(vec![
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![0.5, 3f64.sqrt() / 2.0],
        ])
        .unwrap();
        assert_relative_eq!(tri.variance(), 1.0 / 3.0, epsilon = 1e-15);
        assert_eq!(DiscreteMeasure::dirac(vec![3.0, -1.0]).unwrap().variance(), 0.0);
    }

    #[test]
    fn center_examples() {
        let c = line(&[0.0, 1.0], &[0.5, 0.5]).center();
        assert_eq!(c.points_vec(), vec![vec![-0.5], vec![0.5]]);
        let centered = line(&[-0.5, 0.5], &[0.5, 0.5]);
        assert_eq!(centered.center(), centered);
        let c = line(&[3.0, 7.0], &[0.25, 0.75]).center();
        assert_eq!(c.points_vec(), vec![vec![-3.0], vec![1.0]]);
        assert!(c.barycenter()[0].abs() < 1e-14);
    }

    #[test]
    fn diameter_examples() {
        assert_eq!(DiscreteMeasure::dirac(vec![1.0]).unwrap().diameter(), 0.0);
        assert_relative_eq!(line(&[0.0, 0.3, 1.2], &[0.2, 0.3, 0.5]).diameter(), 1.2);
    }

    #[test]
    fn collapse_examples() {
        let mu = line(&[0.0, 1e-9], &[0.25, 0.75]);
        let c = mu.collapse_clusters(1e-6).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.weights(), &[1.0]);
        assert_relative_eq!(c.point(0)[0], 0.75e-9, epsilon = 1e-24);
        assert!(mu.collapse_clusters(-1.0).is_err());
    }

    #[test]
    fn collapse_matches_brute_force_clustering() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let centers = [[0.0, 0.0], [1.0, 0.0], [0.5, 3f64.sqrt() / 2.0]];
        let mut pts = Vec::new();
        let mut ws = Vec::new();
        for k in 0..30 {
            let c = centers[k % 3];
            pts.push(vec![
                c[0] + rng.random_range(-1e-3..1e-3),
                c[1] + rng.random_range(-1e-3..1e-3),
            ]);
            ws.push(rng.random_range(0.5..1.5));
        }
        let mu = DiscreteMeasure::normalized(pts.clone(), ws).unwrap();
        let collapsed = mu.collapse_clusters(1e-2).unwrap();
        assert_eq!(collapsed.len(), 3);

        // brute-force oracle: label propagation until fixpoint
        let n = pts.len();
        let mut label: Vec<usize> = (0..n).collect();
        loop {
            let mut changed = false;
            for i in 0..n {
                for j in 0..n {
                    if dist(&pts[i], &pts[j]) <= 1e-2 && label[j] < label[i] {
                        label[i] = label[j];
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let mut roots: Vec<usize> = label.clone();
        roots.sort();
        roots.dedup();
        assert_eq!(roots.len(), 3);
        for (k, root) in roots.iter().enumerate() {
            let mut m = 0.0;
            let mut b = [0.0, 0.0];
            for i in 0..n {
                if label[i] == *root {
                    m += mu.weight(i);
                    b[0] += mu.weight(i) * pts[i][0];
                    b[1] += mu.weight(i) * pts[i][1];
                }
            }
            assert_relative_eq!(collapsed.weight(k), m, epsilon = 1e-15);
            assert_relative_eq!(collapsed.point(k)[0], b[0] / m, epsilon = 1e-14);
            assert_relative_eq!(collapsed.point(k)[1], b[1] / m, epsilon = 1e-14);
        }
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let mu = DiscreteMeasure::new(
            vec![vec![0.1, 1.0 / 3.0], vec![-2.0e-7, std::f64::consts::PI]],
            vec![0.3, 0.7],
        )
        .unwrap();
        let s = crate::json::to_string(&mu).unwrap();
        let back: DiscreteMeasure = serde_json::from_str(&s).unwrap();
        assert_eq!(back, mu);
    }

    #[test]
    fn json_weights_default_to_uniform() {
        let mu: DiscreteMeasure =
            serde_json::from_str(r#"{"dim": 1, "points": [[0.0], [1.0], [2.0], [3.0]]}"#).unwrap();
        assert_eq!(mu.weights(), &[0.25; 4]);
        assert!(serde_json::from_str::<DiscreteMeasure>(r#"{"dim": 2, "points": [[0.0]]}"#).is_err());
        assert!(serde_json::from_str::<DiscreteMeasure>(
            r#"{"dim": 1, "points": [[0.0]], "extra": 1}"#
        )
        .is_err());
    }
}
