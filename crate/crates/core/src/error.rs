use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A field of an input record violates its documented bound.
    #[error("invalid {field}: {reason}")]
    InvalidSpec { field: String, reason: String },

    #[error("branch label out of range: N_L = {n_left_ket}, N_L' = {n_left_bra}, N = {total}")]
    InvalidLabel { n_left_ket: i64, n_left_bra: i64, total: u64 },

    #[error("atom asymmetry |n| = {n} exceeds atom count N = {total}")]
    AsymmetryOutOfRange { n: i64, total: u64 },

    #[error("position tuples differ in length ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },

    #[error("quadrature for {integral} did not converge: relative change {rel_change:.3e} between refinement levels exceeds {tolerance:.3e}")]
    NonConvergent { integral: &'static str, rel_change: f64, tolerance: f64 },

    #[error("principal value for {integral} depends on the exclusion window: spread {rel_change:.3e} exceeds {tolerance:.3e}")]
    PvWindowSensitivity { integral: &'static str, rel_change: f64, tolerance: f64 },

    #[error("|q| = {q} outside tabulated range [{lo}, {hi}]")]
    OutOfTableRange { q: f64, lo: f64, hi: f64 },

    #[error("dense oracle refused for N = {n_atoms} (limit {limit}); it would need about {bytes} bytes")]
    OracleTooLarge { n_atoms: usize, limit: usize, bytes: u128 },

    #[error("{op} requires a {expected} state preparation")]
    UnsupportedPrep { op: &'static str, expected: &'static str },

    #[error("cannot keep {keep} atoms of a {alpha}-atom block")]
    KeepExceedsAlpha { keep: usize, alpha: usize },

    #[error("moment of order {eta} has imaginary residue {residue:.3e}")]
    ImaginaryResidue { eta: u32, residue: f64 },

    #[error("invalid probability distribution: {0}")]
    InvalidDistribution(String),

    #[error("integer overflow in {0}")]
    Overflow(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::InvalidSpec { field: field.into(), reason: reason.into() }
}
