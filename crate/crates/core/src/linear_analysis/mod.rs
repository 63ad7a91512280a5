//! Spectral splittings, Lyapunov forms and linear evolution operators.

pub mod evolution;
pub mod lyapunov;
pub mod spectral;

pub use evolution::{
    evolve, evolve_matrix, growth_bound_check, integrate_orbit, picard_solve, trajectory_residual,
    variational_flow, GrowthReport, GrowthSample, PicardResult, Timeline, VariationalFlow,
};
pub use lyapunov::{
    dissipativity_check, lyapunov_form, metric_variation_bound, spectral_abscissa, LyapunovForm,
    MetricVariation,
};
pub use spectral::{
    auto_gap, eigen_split, eigenvalues, hamiltonian_symmetry_check, LinearOperator, SpectralBlock,
    SpectralSplitting, SymmetryReport,
};
