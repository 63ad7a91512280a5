//! Lyapunov-Perron fixed points, manifold graphs and their diagnostics.

pub mod budget;
pub mod graph;
pub mod quasilinear;
pub mod solver;
pub mod split;
pub mod variational;

pub use budget::{contraction_budget, sample_constants, ContractionBudget, SampledConstants};
pub use graph::{
    base_points, build_manifold_graph, decay_rate_fit, invariance_residual, BaseGrid, DecayFit,
    InvarianceReport, InvarianceSample, ManifoldGraph, ManifoldSample, SampleStatus, TangencyFit,
};
pub use quasilinear::{quasilinearize, QuasiPieces, Quasilinear};
pub use solver::{lp_apply, lp_solve, LpConfig, LpDiagnostics, LpSolution, LpSolver};
pub use split::{prepare_field, split_field, Side, SplitField};
pub use variational::{lp_variational, LpVariational};
