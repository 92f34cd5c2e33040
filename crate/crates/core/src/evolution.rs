//! Element-wise evolution in the two-mode pointer basis.
//!
//! Basis states of α atoms are bit strings: bit i set means atom i sits in the
//! left arm, so atom 0 is the least significant bit. An element ⟨x|ρ|x'⟩ only
//! depends on the label (N_L, N_L') = (popcount x, popcount x'), and evolves by
//!
//! ```text
//! exp[−n²s − i n N γ − i n (n + N − 2N_L) τ + i n φ],   n = N_L − N_L'.
//! ```

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{check_normalized, BranchLabel, DecoherenceParams, ExperimentSpec, StatePrep};

/// Largest N accepted by the dense builders (4^N complex entries).
pub const ORACLE_MAX_ATOMS: usize = 12;

/// A full or reduced density matrix over `alpha` atoms, in bit-string order.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityBlock {
    pub alpha: usize,
    pub entries: DMatrix<Complex64>,
}

impl DensityBlock {
    pub fn new(alpha: usize, entries: DMatrix<Complex64>) -> Result<Self> {
        let dim = 1usize << alpha;
        if entries.nrows() != dim || entries.ncols() != dim {
            return Err(crate::error::invalid(
                "entries",
                format!("expected {dim}x{dim} for {alpha} atoms, got {}x{}", entries.nrows(), entries.ncols()),
            ));
        }
        Ok(Self { alpha, entries })
    }

    pub fn dim(&self) -> usize {
        1 << self.alpha
    }

    pub fn trace(&self) -> Complex64 {
        self.entries.trace()
    }

    /// max |ρ − ρ†| over entries.
    pub fn hermiticity_error(&self) -> f64 {
        let m = &self.entries;
        let d = self.dim();
        let mut worst = 0.0f64;
        for j in 0..d {
            for i in 0..=j {
                worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.entries + self.entries.adjoint()) * Complex64::new(0.5, 0.0);
        herm.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn get(&self, ket: usize, bra: usize) -> Complex64 {
        self.entries[(ket, bra)]
    }
}

/// Evolution factor of one element class.
pub fn element_factor(label: BranchLabel, params: &DecoherenceParams) -> Complex64 {
    factor_raw(label.asymmetry(), label.total(), label.n_left_ket(), params)
}

fn factor_raw(n: i64, total: u64, n_left: u64, p: &DecoherenceParams) -> Complex64 {
    if n == 0 {
        return Complex64::new(1.0, 0.0);
    }
    let nf = n as f64;
    let big_n = total as f64;
    let u = nf + big_n - 2.0 * n_left as f64;
    let phase = -nf * big_n * p.gamma - nf * u * p.tau + nf * p.phi;
    Complex64::from_polar((-nf * nf * p.s).exp(), phase)
}

/// Element of the α-atom reduced density matrix of a product preparation, for
/// any ket/bra configuration with `n_left_ket` and `n_left_bra` of the α atoms in L.
pub fn reduced_element(
    alpha: usize,
    n_left_ket: usize,
    n_left_bra: usize,
    spec: &ExperimentSpec,
    params: &DecoherenceParams,
) -> Result<Complex64> {
    let (a_l, a_r) = spec.prep.product_amplitudes("reduced_element")?;
    let big_n = spec.n_atoms;
    if alpha > big_n || n_left_ket > alpha || n_left_bra > alpha {
        return Err(Error::InvalidLabel {
            n_left_ket: n_left_ket as i64,
            n_left_bra: n_left_bra as i64,
            total: alpha as u64,
        });
    }
    Ok(reduced_element_raw(alpha, n_left_ket, n_left_bra, big_n, a_l, a_r, params))
}

pub(crate) fn reduced_element_raw(
    alpha: usize,
    k: usize,
    kp: usize,
    big_n: usize,
    a_l: Complex64,
    a_r: Complex64,
    p: &DecoherenceParams,
) -> Complex64 {
    let amp = a_l.powu(k as u32) * a_r.powu((alpha - k) as u32);
    let amp_bra = a_l.powu(kp as u32) * a_r.powu((alpha - kp) as u32);
    let base = amp * amp_bra.conj();
    let n = k as i64 - kp as i64;
    if n == 0 {
        return base;
    }
    // Traced atoms keep n fixed and shift N_L: each contributes p_R + p_L e^{2inτ}.
    let nf = n as f64;
    let traced = Complex64::new(a_r.norm_sqr(), 0.0) + a_l.norm_sqr() * Complex64::cis(2.0 * nf * p.tau);
    let f = factor_raw(n, big_n as u64, k as u64, p);
    base * f * traced.powu((big_n - alpha) as u32)
}

fn oracle_guard(n_atoms: usize) -> Result<()> {
    if n_atoms > ORACLE_MAX_ATOMS {
        let bytes = 16u128 << (2 * n_atoms.min(60));
        return Err(Error::OracleTooLarge { n_atoms, limit: ORACLE_MAX_ATOMS, bytes });
    }
    Ok(())
}

/// Dense evolved density matrix of all N atoms.
pub fn full_rho(spec: &ExperimentSpec, params: &DecoherenceParams) -> Result<DensityBlock> {
    let big_n = spec.n_atoms;
    oracle_guard(big_n)?;
    let dim = 1usize << big_n;
    let factors: Vec<Complex64> = (0..=big_n)
        .flat_map(|k| (0..=big_n).map(move |kp| (k, kp)))
        .map(|(k, kp)| factor_raw(k as i64 - kp as i64, big_n as u64, k as u64, params))
        .collect();
    let factor = |k: usize, kp: usize| factors[k * (big_n + 1) + kp];

    let mut m = DMatrix::<Complex64>::zeros(dim, dim);
    match spec.prep {
        StatePrep::Product { a_left, a_right } => {
            check_normalized("prep", a_left, a_right)?;
            let amps: Vec<Complex64> = (0..dim)
                .map(|x| {
                    let k = x.count_ones();
                    a_left.powu(k) * a_right.powu(big_n as u32 - k)
                })
                .collect();
            m.as_mut_slice().par_chunks_mut(dim).enumerate().for_each(|(j, col)| {
                let bj = amps[j].conj();
                let kp = j.count_ones() as usize;
                for (i, e) in col.iter_mut().enumerate() {
                    *e = amps[i] * bj * factor(i.count_ones() as usize, kp);
                }
            });
        }
        StatePrep::Noon => {
            let all = dim - 1;
            m[(0, 0)] = Complex64::new(0.5, 0.0);
            m[(all, all)] = Complex64::new(0.5, 0.0);
            m[(all, 0)] = 0.5 * factor(big_n, 0);
            m[(0, all)] = 0.5 * factor(0, big_n);
        }
    }
    DensityBlock::new(big_n, m)
}

/// Trace out the atoms `keep..alpha` (the high bits), keeping the first `keep`.
pub fn partial_trace(block: &DensityBlock, keep: usize) -> Result<DensityBlock> {
    if keep > block.alpha {
        return Err(Error::KeepExceedsAlpha { keep, alpha: block.alpha });
    }
    let d = 1usize << keep;
    let reps = 1usize << (block.alpha - keep);
    let src = &block.entries;
    let m = DMatrix::from_fn(d, d, |i, j| (0..reps).map(|t| src[(i + (t << keep), j + (t << keep))]).sum());
    DensityBlock::new(keep, m)
}

/// ⟨L…L|ρ|R…R⟩ of an evolved N00N state.
pub fn noon_coherence(n_atoms: u64, params: &DecoherenceParams) -> Complex64 {
    let nf = n_atoms as f64;
    Complex64::from_polar(0.5 * (-nf * nf * params.s).exp(), nf * params.phi - nf * nf * params.gamma)
}

/// Second-order small-(s, γ, τ) expansion of ⟨O_+⟩ for the balanced product state.
pub fn early_time_o_plus(n_atoms: u64, params: &DecoherenceParams) -> f64 {
    let nf = n_atoms as f64;
    let DecoherenceParams { s, gamma: g, tau: t, phi } = *params;
    let (sin, cos) = phi.sin_cos();
    let first = s * cos - nf * g * sin;
    let second = 0.5 * cos * (s * s - nf * nf * g * g - (nf - 1.0) * t * t) - nf * s * g * sin;
    0.5 * nf * ((1.0 + cos) - first + second)
}
