//! Distance of numerical minimizers to the unit-simplex family as `alpha`
//! grows.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::PowerLawParams;
use crate::minimize::{minimize_global, MinimizeConfig};
use crate::transport::distance_to_simplex_family;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaRow {
    pub alpha: f64,
    pub energy: f64,
    pub simplex_energy: f64,
    /// `d_2` from the best minimizer to the closest rotated uniform simplex.
    pub distance: f64,
    pub is_unit_simplex: bool,
    pub atoms: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaTable {
    pub beta: f64,
    pub n: usize,
    pub seed: u64,
    pub rows: Vec<GammaRow>,
    /// `d_{k+1} <= 1.1 d_k + 1e-6` over the upper half of the `alpha` range.
    pub monotone_top_half: bool,
}

impl GammaTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("alpha,energy,simplex_energy,distance,is_unit_simplex,atoms\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e},{},{}\n",
                r.alpha, r.energy, r.simplex_energy, r.distance, r.is_unit_simplex, r.atoms
            ));
        }
        out
    }
}

pub fn gamma_convergence_experiment(
    beta: f64,
    alphas: &[f64],
    n: usize,
    cfg: &MinimizeConfig,
) -> Result<GammaTable> {
    if !(beta >= 2.0) {
        return Err(Error::InvalidParams(format!("beta must be >= 2, got {beta}")));
    }
    if alphas.is_empty() || alphas.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParams("alphas must be non-empty and increasing".into()));
    }
    let cfg = MinimizeConfig { n, ..cfg.clone() };
    let mut rows = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let params = PowerLawParams::new(alpha, beta)?;
        let report = minimize_global(&params, &cfg)?;
        rows.push(GammaRow {
            alpha,
            energy: report.energy,
            simplex_energy: report.simplex_energy,
            distance: distance_to_simplex_family(&report.best.center(), n)?,
            is_unit_simplex: report.is_unit_simplex,
            atoms: report.atom_count_after_collapse,
        });
    }
    let start = rows.len() / 2;
    let monotone_top_half = rows[start..]
        .windows(2)
        .all(|w| w[1].distance <= 1.1 * w[0].distance + 1e-6);
    Ok(GammaTable {
        beta,
        n,
        seed: cfg.seed,
        rows,
        monotone_top_half,
    })
}
