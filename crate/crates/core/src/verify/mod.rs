//! Numerical checks of the structural results: the isodiametric variance
//! bound, the vertex-potential lemma, local minimality of simplex measures
//! and the approach of minimizers to the simplex family.

mod gamma;
mod local;
mod potential;
mod variance;

pub use gamma::{gamma_convergence_experiment, GammaRow, GammaTable};
pub use local::{
    aloc_bound, descent_direction_search, local_min_perturbation_test, localization_constants, radius_sweep,
    scan_local_threshold, second_variation_check, symmetric_split_energy, DescentCertificate, DescentSearch,
    LocalMinReport, LocalizationConstants, PerturbationConfig, RadiusSweep, RadiusSweepRow, SecondVariation,
    ThresholdEstimate, ThresholdProbe, VertexTerms, GAP_TOL,
};
pub use potential::{vertex_potential_argmin, VertexPotentialReport};
pub use variance::{
    isodiametric_sweep, jung_check, max_variance_given_support, ExtremalCloud, IsodiametricReport, JungReport,
};
