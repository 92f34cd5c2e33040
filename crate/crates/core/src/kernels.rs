//! Unitary and decoherence kernels.
//!
//! Two-mode closed forms use θ = q·(x_L − x_R). With that orientation
//!
//! ```text
//! K_D = n²(1 − cos θ) − i n N sin θ
//! K_U = i n (n + N − 2N_L)(1 − cos θ)
//! ```
//!
//! and the positional sums below reproduce them for every assignment of atoms
//! to the two arms.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::BranchLabel;

/// Dimensionless complex kernel value.
pub type KernelValue = Complex64;

/// Integer coefficients of the pair sum
/// `Σ_ij [2e^{iq(x_i−x'_j)} − e^{iq(x_i−x_j)} − e^{iq(x'_i−x'_j)}] / 2
///  = (A1 + A+ e^{iq·(x_R−x_L)} + A− e^{−iq·(x_R−x_L)}) / 2`,
/// which equals −K_D.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecoherenceCoeffs {
    pub a1: i128,
    pub a_plus: i128,
    pub a_minus: i128,
}

/// Integer coefficients of
/// `Σ_ij [e^{iq(x_i−x_j)} − e^{iq(x'_i−x'_j)}] = B1 + B+ e^{iθ} + B− e^{−iθ}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UnitaryCoeffs {
    pub b1: i128,
    pub b_plus: i128,
    pub b_minus: i128,
}

fn check_asymmetry(n: i64, n_atoms: u64) -> Result<()> {
    if n.unsigned_abs() > n_atoms {
        return Err(Error::AsymmetryOutOfRange { n, total: n_atoms });
    }
    Ok(())
}

/// A1 = −2n², A+ = n(n − N), A− = n(n + N).
///
/// The same polynomials hold for n < 0; there they coincide with the n > 0
/// values under A+ ↔ A−.
pub fn coeffs_decoherence(n: i64, n_atoms: u64) -> Result<DecoherenceCoeffs> {
    check_asymmetry(n, n_atoms)?;
    let n = n as i128;
    let big_n = n_atoms as i128;
    Ok(DecoherenceCoeffs { a1: -2 * n * n, a_plus: n * (n - big_n), a_minus: n * (n + big_n) })
}

/// B1 = −2n(n + N − 2N_L), B± = n(n + N − 2N_L).
pub fn coeffs_unitary(n: i64, n_atoms: u64, n_left: i64) -> Result<UnitaryCoeffs> {
    BranchLabel::from_asymmetry(n, n_left, n_atoms)?;
    let b = unitary_weight(n, n_atoms, n_left);
    Ok(UnitaryCoeffs { b1: -2 * b, b_plus: b, b_minus: b })
}

/// n(n + N − 2N_L) = h(N_L) − h(N_L') with h(k) = Nk − k².
fn unitary_weight(n: i64, n_atoms: u64, n_left: i64) -> i128 {
    let n = n as i128;
    n * (n + n_atoms as i128 - 2 * n_left as i128)
}

/// 1 − cos θ without cancellation at small θ.
pub(crate) fn one_minus_cos(theta: f64) -> f64 {
    let h = (0.5 * theta).sin();
    2.0 * h * h
}

pub fn kernel_d(n: i64, n_atoms: u64, q_dot_dx: f64) -> Result<KernelValue> {
    check_asymmetry(n, n_atoms)?;
    let nf = n as f64;
    Ok(Complex64::new(nf * nf * one_minus_cos(q_dot_dx), -nf * n_atoms as f64 * q_dot_dx.sin()))
}

pub fn kernel_u(n: i64, n_atoms: u64, n_left: i64, q_dot_dx: f64) -> Result<KernelValue> {
    BranchLabel::from_asymmetry(n, n_left, n_atoms)?;
    let b = unitary_weight(n, n_atoms, n_left) as f64;
    Ok(Complex64::new(0.0, b * one_minus_cos(q_dot_dx)))
}

/// Atom positions, one 3-vector per atom (eV⁻¹).
#[derive(Debug, Clone, PartialEq)]
pub struct PositionTuple(pub Vec<[f64; 3]>);

impl PositionTuple {
    /// Two-mode configuration: atom i sits at `left` when `in_left[i]`.
    pub fn two_mode(in_left: &[bool], left: [f64; 3], right: [f64; 3]) -> Self {
        Self(in_left.iter().map(|&l| if l { left } else { right }).collect())
    }

    /// Two-mode configuration from a bit mask (bit i set: atom i in L).
    pub fn from_mask(mask: u64, n_atoms: usize, left: [f64; 3], right: [f64; 3]) -> Self {
        Self((0..n_atoms).map(|i| if mask >> i & 1 == 1 { left } else { right }).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn phase_sum(a: &[[f64; 3]], b: &[[f64; 3]], q: [f64; 3]) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for xi in a {
        for xj in b {
            acc += Complex64::cis(dot(q, *xi) - dot(q, *xj));
        }
    }
    acc
}

fn check_lengths(x: &PositionTuple, x_prime: &PositionTuple) -> Result<()> {
    if x.len() != x_prime.len() {
        return Err(Error::LengthMismatch { left: x.len(), right: x_prime.len() });
    }
    Ok(())
}

/// `½ Σ_ij [e^{iq(x_i−x_j)} + e^{iq(x'_i−x'_j)} − 2e^{iq(x_i−x'_j)}]` by explicit
/// double sum.
pub fn kernel_d_positions(x: &PositionTuple, x_prime: &PositionTuple, q: [f64; 3]) -> Result<KernelValue> {
    check_lengths(x, x_prime)?;
    let (a, b) = (&x.0, &x_prime.0);
    Ok(0.5 * (phase_sum(a, a, q) + phase_sum(b, b, q) - 2.0 * phase_sum(a, b, q)))
}

/// `(i/2) Σ_ij [e^{iq(x'_i−x'_j)} − e^{iq(x_i−x_j)}]` by explicit double sum.
pub fn kernel_u_positions(x: &PositionTuple, x_prime: &PositionTuple, q: [f64; 3]) -> Result<KernelValue> {
    check_lengths(x, x_prime)?;
    let (a, b) = (&x.0, &x_prime.0);
    Ok(Complex64::new(0.0, 0.5) * (phase_sum(b, b, q) - phase_sum(a, a, q)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    // Pair-by-pair bucketing of the exponentials into 1, e^{iq(x_R−x_L)} and
    // e^{−iq(x_R−x_L)}; independent of the closed-form polynomials.
    fn brute_coeffs(ket: &[bool], bra: &[bool]) -> (DecoherenceCoeffs, UnitaryCoeffs) {
        // 0: same arm, 1: (R, L) => e^{iq(x_R−x_L)}, 2: (L, R) => e^{−iq(x_R−x_L)}
        let bucket = |a: bool, b: bool| match (a, b) {
            (x, y) if x == y => 0usize,
            (false, true) => 1,
            _ => 2,
        };
        let mut a = [0i128; 3];
        let mut bu = [0i128; 3];
        for &xi in ket {
            for &xj in bra {
                a[bucket(xi, xj)] += 2;
            }
            for &xj in ket {
                a[bucket(xi, xj)] -= 1;
                bu[bucket(xi, xj)] += 1;
            }
        }
        for &xi in bra {
            for &xj in bra {
                a[bucket(xi, xj)] -= 1;
                bu[bucket(xi, xj)] -= 1;
            }
        }
        (
            DecoherenceCoeffs { a1: a[0], a_plus: a[1], a_minus: a[2] },
            UnitaryCoeffs { b1: bu[0], b_plus: bu[2], b_minus: bu[1] },
        )
    }

    fn mask_bits(mask: u32, n: usize) -> Vec<bool> {
        (0..n).map(|i| mask >> i & 1 == 1).collect()
    }

    #[test]
    fn decoherence_coeff_examples() {
        assert_eq!(coeffs_decoherence(0, 5).unwrap(), DecoherenceCoeffs { a1: 0, a_plus: 0, a_minus: 0 });
        assert_eq!(coeffs_decoherence(2, 3).unwrap(), DecoherenceCoeffs { a1: -8, a_plus: -2, a_minus: 10 });
        let neg = coeffs_decoherence(-2, 3).unwrap();
        assert_eq!((neg.a1, neg.a_plus, neg.a_minus), (-8, 10, -2));
        assert!(coeffs_decoherence(4, 3).is_err());
    }

    #[test]
    fn unitary_coeff_examples() {
        assert_eq!(coeffs_unitary(0, 7, 3).unwrap(), UnitaryCoeffs { b1: 0, b_plus: 0, b_minus: 0 });
        assert_eq!(coeffs_unitary(5, 5, 5).unwrap(), UnitaryCoeffs { b1: 0, b_plus: 0, b_minus: 0 });
        assert_eq!(coeffs_unitary(1, 4, 3).unwrap(), UnitaryCoeffs { b1: 2, b_plus: -1, b_minus: -1 });
        assert!(coeffs_unitary(2, 4, 1).is_err());
    }

    #[test]
    fn coefficients_match_pair_enumeration() {
        for n_atoms in 1..=6usize {
            for ket in 0..1u32 << n_atoms {
                for bra in 0..1u32 << n_atoms {
                    let (k, b) = (mask_bits(ket, n_atoms), mask_bits(bra, n_atoms));
                    let nl = ket.count_ones() as i64;
                    let n = nl - bra.count_ones() as i64;
                    let (ba, bb) = brute_coeffs(&k, &b);
                    assert_eq!(coeffs_decoherence(n, n_atoms as u64).unwrap(), ba);
                    assert_eq!(coeffs_unitary(n, n_atoms as u64, nl).unwrap(), bb);
                }
            }
        }
    }

    #[test]
    fn coefficients_rebuild_kernels() {
        let theta = 0.77;
        for (n, big_n, nl) in [(2i64, 3u64, 2i64), (-1, 4, 1), (3, 5, 4)] {
            let a = coeffs_decoherence(n, big_n).unwrap();
            let e = Complex64::cis(theta);
            let rebuilt = -0.5 * (a.a1 as f64 + a.a_plus as f64 * e.conj() + a.a_minus as f64 * e);
            let k = kernel_d(n, big_n, theta).unwrap();
            assert_abs_diff_eq!(rebuilt.re, k.re, epsilon = 1e-12);
            assert_abs_diff_eq!(rebuilt.im, k.im, epsilon = 1e-12);

            let b = coeffs_unitary(n, big_n, nl).unwrap();
            let ku = Complex64::new(0.0, -0.5) * (b.b1 as f64 + b.b_plus as f64 * e + b.b_minus as f64 * e.conj());
            let k = kernel_u(n, big_n, nl, theta).unwrap();
            assert_abs_diff_eq!(ku.im, k.im, epsilon = 1e-12);
        }
    }

    #[test]
    fn kernel_examples() {
        assert_eq!(kernel_d(0, 4, 1.3).unwrap(), Complex64::new(0.0, 0.0));
        let k = kernel_d(2, 2, PI).unwrap();
        assert_abs_diff_eq!(k.re, 8.0, epsilon = 1e-12);
        assert_abs_diff_eq!(k.im, 0.0, epsilon = 1e-12);
        assert!(kernel_d(3, 3, 1e-9).unwrap().norm() < 1e-7);
        assert_eq!(kernel_u(0, 4, 2, 0.4).unwrap(), Complex64::new(0.0, 0.0));
        assert_eq!(kernel_u(6, 6, 6, 0.4).unwrap(), Complex64::new(0.0, 0.0));
        let k = kernel_u(1, 2, 1, PI).unwrap();
        assert_abs_diff_eq!(k.re, 0.0);
        assert_abs_diff_eq!(k.im, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn single_atom_positional() {
        let x = PositionTuple(vec![[0.1, 0.2, 0.3]]);
        let xp = PositionTuple(vec![[-0.4, 0.0, 0.9]]);
        let q = [1.0, -2.0, 0.5];
        let k = kernel_d_positions(&x, &xp, q).unwrap();
        let expect = Complex64::new(1.0, 0.0) - Complex64::cis(dot(q, x.0[0]) - dot(q, xp.0[0]));
        assert_abs_diff_eq!(k.re, expect.re, epsilon = 1e-14);
        assert_abs_diff_eq!(k.im, expect.im, epsilon = 1e-14);
        assert_abs_diff_eq!(kernel_u_positions(&x, &xp, q).unwrap().norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn length_mismatch() {
        let x = PositionTuple(vec![[0.0; 3]; 2]);
        let xp = PositionTuple(vec![[0.0; 3]; 3]);
        assert_eq!(kernel_d_positions(&x, &xp, [1.0; 3]).unwrap_err(), Error::LengthMismatch { left: 2, right: 3 });
        assert!(kernel_u_positions(&x, &xp, [1.0; 3]).is_err());
    }

    #[test]
    fn small_angle_expansion() {
        for &(n, big_n) in &[(1i64, 1u64), (2, 5), (-3, 4)] {
            let theta = 1e-3;
            let k = kernel_d(n, big_n, theta).unwrap();
            let nf = n as f64;
            assert!((k.re - nf * nf * theta * theta / 2.0).abs() < nf * nf * theta.powi(4));
            assert!((k.im + nf * big_n as f64 * theta).abs() < (nf * big_n as f64).abs() * theta.powi(3));
        }
    }

    proptest! {
        #[test]
        fn identical_configurations_vanish(pos in prop::collection::vec(prop::array::uniform3(-3.0f64..3.0), 1..6),
                                           q in prop::array::uniform3(-4.0f64..4.0)) {
            let x = PositionTuple(pos);
            prop_assert!(kernel_d_positions(&x, &x, q).unwrap().norm() < 1e-12);
            prop_assert!(kernel_u_positions(&x, &x, q).unwrap().norm() < 1e-12);
        }

        #[test]
        fn swap_conjugates_positional(a in prop::collection::vec(prop::array::uniform3(-3.0f64..3.0), 3),
                                      b in prop::collection::vec(prop::array::uniform3(-3.0f64..3.0), 3),
                                      q in prop::array::uniform3(-4.0f64..4.0)) {
            let (x, xp) = (PositionTuple(a), PositionTuple(b));
            for f in [kernel_d_positions, kernel_u_positions] {
                let k = f(&x, &xp, q).unwrap();
                let ks = f(&xp, &x, q).unwrap();
                prop_assert!((k.conj() - ks).norm() < 1e-11);
            }
        }

        #[test]
        fn transpose_conjugates_closed_forms(big_n in 1u64..40, ket in 0u64..40, bra in 0u64..40, theta in -7.0f64..7.0) {
            prop_assume!(ket <= big_n && bra <= big_n);
            let l = BranchLabel::new(ket, bra, big_n).unwrap();
            let t = l.transposed();
            let kd = kernel_d(l.asymmetry(), big_n, theta).unwrap();
            let kdt = kernel_d(t.asymmetry(), big_n, theta).unwrap();
            prop_assert!((kd.conj() - kdt).norm() < 1e-9);
            let ku = kernel_u(l.asymmetry(), big_n, ket as i64, theta).unwrap();
            let kut = kernel_u(t.asymmetry(), big_n, bra as i64, theta).unwrap();
            prop_assert!((ku.conj() - kut).norm() < 1e-9);
            prop_assert!(kd.re >= 0.0);
        }

        #[test]
        fn two_mode_positional_matches_closed_form(ket in 0u32..64, bra in 0u32..64, theta in -6.0f64..6.0) {
            let n_atoms = 6;
            let xl = [0.0, 0.0, 0.0];
            let xr = [0.0, 0.0, -1.0];
            let q = [0.0, 0.0, theta];
            let x = PositionTuple::from_mask(ket as u64, n_atoms, xl, xr);
            let xp = PositionTuple::from_mask(bra as u64, n_atoms, xl, xr);
            let nl = ket.count_ones() as i64;
            let n = nl - bra.count_ones() as i64;
            let kd = kernel_d(n, n_atoms as u64, theta).unwrap();
            let ku = kernel_u(n, n_atoms as u64, nl, theta).unwrap();
            prop_assert!((kd - kernel_d_positions(&x, &xp, q).unwrap()).norm() < 1e-12);
            prop_assert!((ku - kernel_u_positions(&x, &xp, q).unwrap()).norm() < 1e-12);
        }
    }

    #[test]
    fn large_n_coefficients_are_exact() {
        let big_n = 1_000_000_000u64;
        let a = coeffs_decoherence(999_999_999, big_n).unwrap();
        assert_eq!(a.a_minus, 999_999_999i128 * 1_999_999_999i128);
    }
}
