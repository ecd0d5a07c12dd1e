//! Spectra of Laplacians on metric graphs with Neumann-Kirchhoff and
//! Robin (δ-type) vertex conditions, computed from the scattering-matrix
//! secular equation, together with Robin-Neumann gap statistics and the
//! explicit gap bounds.

pub mod bounds;
pub mod eigenfunction;
pub mod eigensolve;
pub mod error;
pub mod fd;
pub mod graph;
pub mod scattering;
pub mod stats;

pub use bounds::{
    check_all, check_sensitivities, gap_cap, improved_bound, lowest_eigenvalue_slope,
    sensitivity_bound, thm_bound, BoundParams, BoundReport, BoundRow, GapBoundCheck,
};
pub use eigenfunction::{
    evaluate, kernel_vector, l2_norm_sq, robin_residual, sensitivity, tangent_sum, vertex_value,
    AmplitudeVector, EigenfunctionHandle, Sensitivity,
};
pub use eigensolve::{
    compute_spectrum, compute_spectrum_with, counting_function, robin_homotopy, spectral_shift,
    EigenvalueCurve, SolverOptions, Spectrum, SpectrumRecord, SpectrumTarget,
};
pub use error::{Error, Result};
pub use fd::{discretize, oracle_eigenvalues, DiscreteOperator};
pub use graph::{
    boundary_star_decomposition, incommensurate_lengths, make_complete4, make_interval,
    make_star, midpoint_star_decomposition, GraphFile, MetricGraph, RobinSpec, StarDecomposition,
};
pub use scattering::{
    build_unitary, secular_det, total_phase, vertex_scattering_entry, ScatteringSystem,
    TotalPhase, UnitaryAtK,
};
pub use stats::{
    accumulation_clusters, arctan_prediction, cesaro_mean, empirical_cdf, lipschitz_audit,
    rng_sequence, running_average, sensitivity_prediction, theoretical_mean, weyl_moments,
    CdfEstimate, MomentReport, RngSeries,
};
