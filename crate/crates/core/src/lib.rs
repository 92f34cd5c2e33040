//! Collisional decoherence of an N-atom two-mode interferometer.
//!
//! Atoms are distinguishable and each sits in one of two arms, L or R. The
//! environment enters only through four real numbers (s, γ, τ, φ) collected in
//! [`DecoherenceParams`]; [`rates`] computes them from a probe gas, and the
//! remaining modules turn them into density matrices and observables. Every
//! closed form has a dense 2^N counterpart in [`oracle`].

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod evolution;
pub mod kernels;
pub mod model;
pub mod observables;
pub mod oracle;
pub mod rates;
pub mod units;

pub use error::{Error, Result};
pub use evolution::{
    early_time_o_plus, element_factor, full_rho, noon_coherence, partial_trace, reduced_element, DensityBlock,
    ORACLE_MAX_ATOMS,
};
pub use kernels::{
    coeffs_decoherence, coeffs_unitary, kernel_d, kernel_d_positions, kernel_u, kernel_u_positions, DecoherenceCoeffs,
    KernelValue, PositionTuple, UnitaryCoeffs,
};
pub use model::{
    validate_spec, BranchLabel, DecoherenceParams, EnvironmentSpec, ExperimentSpec, PotentialSpec, Segment, StatePrep,
};
pub use observables::{
    counting_distribution, expect_o_plus, moment, moment_coefficients, noon_fringe, sample_runs,
    variance_closed_form, visibility_phase, MomentCoefficients, PortProjector, SampleReport,
};
pub use rates::{
    compute_gamma, compute_params, compute_s, compute_tau, potential_fourier, rates_to_params, Estimate,
    QuadratureSettings, RateDensities,
};
pub use num_complex::Complex64;
