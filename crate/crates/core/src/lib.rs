//! Attractive-repulsive power-law interaction energies on discrete
//! probability measures.
//!
//! The crate evaluates `E(mu) = sum_ij m_i m_j w(|x_i - x_j|)` for
//! `w(r) = r^alpha/alpha - r^beta/beta`, integrates the particle aggregation
//! flow, searches for global minimizers, computes exact Wasserstein distances
//! and runs numerical checks of the unit-simplex structure of minimizers.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod dynamics;
pub mod energy;
pub mod error;
pub mod geometry;
pub mod json;
pub mod kernel;
pub mod measure;
pub mod minimize;
pub mod numeric;
pub mod transport;
pub mod verify;

pub use dynamics::{flow, FlowConfig, FlowTrace, Integrator, Termination};
pub use energy::{
    energy, energy_gradient, energy_report, euler_lagrange_residual, potential_field, power_energy, velocity_field,
    EnergyReport,
};
pub use error::{Error, Result};
pub use geometry::{jung_radius, make_unit_simplex, SimplexSpec};
pub use kernel::{Attraction, PowerLawParams};
pub use measure::DiscreteMeasure;
pub use minimize::{minimize_global, MinimizeConfig, MinimizerReport};
pub use transport::{wasserstein, wasserstein_inf, wasserstein_p, CouplingPlan};
