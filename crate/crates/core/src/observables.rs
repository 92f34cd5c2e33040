//! Port populations, visibility, moments and counting statistics.
//!
//! The one-body operator counts atoms found in the single-atom state
//! |A⟩ = a_L|L⟩ + a_R|R⟩: O = Σ_i |A⟩⟨A|_i. Its moments expand as
//!
//! ```text
//! ⟨O^η⟩ = Σ_α C(η, α) · N!/(N−α)! · Tr[O_1 ⋯ O_α ρ_α]
//! ```
//!
//! with C(η, α) the Stirling numbers of the second kind.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::evolution::{full_rho, noon_coherence, reduced_element_raw};
use crate::model::{check_normalized, DecoherenceParams, ExperimentSpec, StatePrep};

/// Relative tolerance on the imaginary part of a moment.
pub const IMAG_RESIDUE_TOL: f64 = 1e-10;

/// Tolerance used when validating probability sequences.
pub const DISTRIBUTION_TOL: f64 = 1e-10;

/// Single-atom port state |A⟩ = a_L|L⟩ + a_R|R⟩.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PortProjector {
    pub a_left: Complex64,
    pub a_right: Complex64,
}

impl PortProjector {
    pub fn new(a_left: Complex64, a_right: Complex64) -> Result<Self> {
        check_normalized("port", a_left, a_right)?;
        Ok(Self { a_left, a_right })
    }

    /// |+⟩ = (|L⟩ + |R⟩)/√2.
    pub fn plus() -> Self {
        let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self { a_left: h, a_right: h }
    }

    pub fn is_plus(&self) -> bool {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        (self.a_left - h).norm() < 1e-12 && (self.a_right - h).norm() < 1e-12
    }
}

impl Default for PortProjector {
    fn default() -> Self {
        Self::plus()
    }
}

/// Row η of the moment coefficient table, C(η, 1..=η).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MomentCoefficients {
    pub eta: u32,
    pub coeffs: Vec<u128>,
}

impl MomentCoefficients {
    /// C(η, α) for 1 ≤ α ≤ η.
    pub fn get(&self, alpha: usize) -> u128 {
        self.coeffs[alpha - 1]
    }
}

/// Stirling numbers of the second kind by C(η,α) = α·C(η−1,α) + C(η−1,α−1).
pub fn moment_coefficients(eta: u32) -> Result<MomentCoefficients> {
    if eta < 1 {
        return Err(invalid("eta", "moment order must be at least 1"));
    }
    let mut row: Vec<u128> = vec![1];
    for e in 2..=eta as usize {
        let mut next = vec![0u128; e];
        for a in 1..=e {
            let stay = if a < e { row[a - 1].checked_mul(a as u128) } else { Some(0) };
            let up = if a >= 2 { row[a - 2] } else { 0 };
            next[a - 1] = stay.and_then(|v| v.checked_add(up)).ok_or(Error::Overflow("moment coefficients"))?;
        }
        row = next;
    }
    Ok(MomentCoefficients { eta, coeffs: row })
}

/// N!/(N−k)! exactly, if it fits in 128 bits.
pub fn falling_factorial_exact(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    (0..k).try_fold(1u128, |acc, i| acc.checked_mul((n - i) as u128))
}

/// N!/(N−k)! as a float; exact products while they fit, log-domain beyond.
pub fn falling_factorial(n: u64, k: u64) -> f64 {
    match falling_factorial_exact(n, k) {
        Some(v) => v as f64,
        None => (0..k).map(|i| ((n - i) as f64).ln()).sum::<f64>().exp(),
    }
}

/// ⟨L|ρ₁|R⟩ for either preparation.
pub fn one_body_coherence(spec: &ExperimentSpec, params: &DecoherenceParams) -> Result<Complex64> {
    match spec.prep {
        StatePrep::Product { a_left, a_right } => {
            check_normalized("prep", a_left, a_right)?;
            Ok(reduced_element_raw(1, 1, 0, spec.n_atoms, a_left, a_right, params))
        }
        StatePrep::Noon if spec.n_atoms == 1 => Ok(noon_coherence(1, params)),
        StatePrep::Noon => Ok(Complex64::new(0.0, 0.0)),
    }
}

/// ⟨O_+⟩ = (N/2)(1 + 2 Re⟨L|ρ₁|R⟩).
pub fn expect_o_plus(spec: &ExperimentSpec, params: &DecoherenceParams) -> Result<f64> {
    let c = one_body_coherence(spec, params)?;
    Ok(0.5 * spec.n_atoms as f64 * (1.0 + 2.0 * c.re))
}

/// V = 2|⟨L|ρ₁|R⟩| and phase = arg⟨L|ρ₁|R⟩, so that V cos(phase) = 2 Re⟨L|ρ₁|R⟩.
pub fn visibility_phase(spec: &ExperimentSpec, params: &DecoherenceParams) -> Result<(f64, f64)> {
    let c = one_body_coherence(spec, params)?;
    Ok((2.0 * c.norm(), c.arg()))
}

fn binomial_f64(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// ⟨A^{⊗α}|ρ_α|A^{⊗α}⟩ for a product preparation, summed over left counts.
fn port_trace(alpha: usize, spec: &ExperimentSpec, a_l: Complex64, a_r: Complex64, params: &DecoherenceParams, port: &PortProjector) -> Complex64 {
    let (pl, pr) = (port.a_left, port.a_right);
    let bra_amp: Vec<Complex64> =
        (0..=alpha).map(|k| binomial_f64(alpha, k) * (pl.conj().powu(k as u32) * pr.conj().powu((alpha - k) as u32))).collect();
    let mut acc = Complex64::new(0.0, 0.0);
    for (k, bra) in bra_amp.iter().enumerate() {
        for kp in 0..=alpha {
            let ket_amp = binomial_f64(alpha, kp) * pl.powu(kp as u32) * pr.powu((alpha - kp) as u32);
            acc += bra * ket_amp * reduced_element_raw(alpha, k, kp, spec.n_atoms, a_l, a_r, params);
        }
    }
    acc
}

/// Raw moment ⟨O^η⟩ for the port `port`.
pub fn moment(eta: u32, spec: &ExperimentSpec, params: &DecoherenceParams, port: &PortProjector) -> Result<f64> {
    let coeffs = moment_coefficients(eta)?;
    check_normalized("port", port.a_left, port.a_right)?;
    let (a_l, a_r) = match spec.prep {
        StatePrep::Noon => {
            let dist = noon_port_distribution(spec.n_atoms, params, port)?;
            return Ok(distribution_moment(&dist, eta));
        }
        StatePrep::Product { a_left, a_right } => (a_left, a_right),
    };
    check_normalized("prep", a_l, a_r)?;
    let big_n = spec.n_atoms;
    let mut total = Complex64::new(0.0, 0.0);
    for alpha in 1..=(eta as usize).min(big_n) {
        let weight = coeffs.get(alpha) as f64 * falling_factorial(big_n as u64, alpha as u64);
        total += weight * port_trace(alpha, spec, a_l, a_r, params, port);
    }
    let residue = total.im.abs() / total.re.abs().max(1.0);
    if residue > IMAG_RESIDUE_TOL {
        return Err(Error::ImaginaryResidue { eta, residue });
    }
    Ok(total.re)
}

/// Variance of O_+ from ⟨LL|ρ₂|RR⟩ and ⟨L|ρ₁|R⟩ (balanced product state only).
pub fn variance_closed_form(spec: &ExperimentSpec, params: &DecoherenceParams) -> Result<f64> {
    if !spec.prep.is_balanced() {
        return Err(Error::UnsupportedPrep { op: "variance_closed_form", expected: "balanced product" });
    }
    let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let big_n = spec.n_atoms;
    let r1 = reduced_element_raw(1, 1, 0, big_n, h, h, params);
    let r2 = if big_n >= 2 { reduced_element_raw(2, 2, 0, big_n, h, h, params) } else { Complex64::new(0.0, 0.0) };
    let nf = big_n as f64;
    let mean = 0.5 * nf * (1.0 + 2.0 * r1.re);
    let second = mean + 0.25 * nf * (nf - 1.0) * (1.5 + 4.0 * r1.re + 2.0 * r2.re);
    Ok(second - mean * mean)
}

/// Σ_k k^η P(k).
pub fn distribution_moment(dist: &[f64], eta: u32) -> f64 {
    dist.iter().enumerate().map(|(k, p)| p * (k as f64).powi(eta as i32)).sum()
}

/// (mean, variance) of a distribution over 0..=N.
pub fn distribution_mean_variance(dist: &[f64]) -> (f64, f64) {
    let mean = distribution_moment(dist, 1);
    let var = dist.iter().enumerate().map(|(k, p)| p * (k as f64 - mean).powi(2)).sum();
    (mean, var)
}

fn ln_pow(ln_x: f64, k: usize) -> f64 {
    if k == 0 {
        0.0
    } else {
        k as f64 * ln_x
    }
}

/// Exact P(k) for an evolved N00N state measured in an arbitrary port.
///
/// Every outcome string with k atoms in |A⟩ has amplitude u = ⟨A|L⟩^k⟨A⊥|L⟩^{N−k}
/// on |L…L⟩ and v = ⟨A|R⟩^k⟨A⊥|R⟩^{N−k} on |R…R⟩, with |A⊥⟩ = a_R*|L⟩ − a_L*|R⟩.
pub fn noon_port_distribution(n_atoms: usize, params: &DecoherenceParams, port: &PortProjector) -> Result<Vec<f64>> {
    if n_atoms == 0 {
        return Err(invalid("n_atoms", "must be at least 1, got 0"));
    }
    check_normalized("port", port.a_left, port.a_right)?;
    let c = noon_coherence(n_atoms as u64, params);
    let (al, ar) = (port.a_left, port.a_right);
    // ⟨A|L⟩ = a_L*, ⟨A⊥|L⟩ = a_R, ⟨A|R⟩ = a_R*, ⟨A⊥|R⟩ = −a_L.
    let (ln_pl, ln_pr) = (al.norm_sqr().ln(), ar.norm_sqr().ln());
    let (arg_l, arg_r) = (al.arg(), ar.arg());
    let big_n = n_atoms;
    let mut ln_binom = 0.0f64;
    let mut out = Vec::with_capacity(big_n + 1);
    for k in 0..=big_n {
        if k > 0 {
            ln_binom += ((big_n - k + 1) as f64).ln() - (k as f64).ln();
        }
        let m = big_n - k;
        let ln_u2 = ln_pow(ln_pl, k) + ln_pow(ln_pr, m);
        let ln_v2 = ln_pow(ln_pr, k) + ln_pow(ln_pl, m);
        // arg(u v*) with u = (a_L*)^k a_R^m, v = (a_R*)^k (−a_L)^m
        let arg = -(k as f64) * arg_l + m as f64 * arg_r + k as f64 * arg_r - m as f64 * (arg_l + std::f64::consts::PI);
        let cross = 2.0 * (c * Complex64::from_polar((0.5 * (ln_u2 + ln_v2)).exp(), arg)).re;
        let p = (ln_binom + ln_u2).exp() * 0.5 + (ln_binom + ln_v2).exp() * 0.5 + ln_binom.exp() * cross;
        out.push(p);
    }
    Ok(out)
}

/// ⟨ψ|ρ|ψ⟩ for ψ the undecohered N00N state.
pub fn noon_fringe(n_atoms: u64, params: &DecoherenceParams) -> f64 {
    0.5 * (1.0 + 2.0 * noon_coherence(n_atoms, params).re)
}

/// Rotate every atom into the {|A⊥⟩, |A⟩} basis (bit set means |A⟩) on the
/// ket side of each column.
fn rotate_columns(m: &mut DMatrix<Complex64>, n_atoms: usize, port: &PortProjector) {
    let dim = 1usize << n_atoms;
    let (al, ar) = (port.a_left, port.a_right);
    // rows of U: ⟨A| = (a_L*, a_R*) on (L, R); ⟨A⊥| = (a_R, −a_L)
    let (u_a_l, u_a_r, u_p_l, u_p_r) = (al.conj(), ar.conj(), ar, -al);
    m.as_mut_slice().par_chunks_mut(dim).for_each(|col| {
        for i in 0..n_atoms {
            let b = 1usize << i;
            for x in 0..dim {
                if x & b == 0 {
                    let (r, l) = (col[x], col[x | b]);
                    col[x | b] = u_a_l * l + u_a_r * r;
                    col[x] = u_p_l * l + u_p_r * r;
                }
            }
        }
    });
}

/// P(k) of finding exactly k atoms in the port state, from the dense matrix.
pub fn counting_distribution(spec: &ExperimentSpec, params: &DecoherenceParams, port: &PortProjector) -> Result<Vec<f64>> {
    check_normalized("port", port.a_left, port.a_right)?;
    let rho = full_rho(spec, params)?;
    let n_atoms = spec.n_atoms;
    let mut m = rho.entries;
    // U ρ U† = U (U ρ)†, using ρ = ρ†.
    rotate_columns(&mut m, n_atoms, port);
    m.adjoint_mut();
    rotate_columns(&mut m, n_atoms, port);
    let mut dist = vec![0.0; n_atoms + 1];
    for x in 0..1usize << n_atoms {
        dist[x.count_ones() as usize] += m[(x, x)].re;
    }
    Ok(dist)
}

/// Per-run outcomes and estimators over ℵ runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleReport {
    pub counts: Vec<u32>,
    pub mean: f64,
    /// (1/ℵ) Σ (k − mean)².
    pub variance: f64,
    pub mean_se: f64,
    pub variance_se: f64,
}

fn check_distribution(dist: &[f64]) -> Result<()> {
    if dist.is_empty() {
        return Err(Error::InvalidDistribution("empty".into()));
    }
    if let Some((k, p)) = dist.iter().enumerate().find(|(_, p)| !p.is_finite() || **p < -DISTRIBUTION_TOL) {
        return Err(Error::InvalidDistribution(format!("P({k}) = {p}")));
    }
    let sum: f64 = dist.iter().sum();
    if (sum - 1.0).abs() > DISTRIBUTION_TOL {
        return Err(Error::InvalidDistribution(format!("probabilities sum to {sum}")));
    }
    Ok(())
}

/// Draw ℵ outcomes by inverse CDF from a ChaCha8 stream seeded with `seed`.
pub fn sample_runs(dist: &[f64], runs: usize, seed: u64) -> Result<SampleReport> {
    check_distribution(dist)?;
    if runs == 0 {
        return Err(invalid("runs", "must be at least 1"));
    }
    let mut cdf = Vec::with_capacity(dist.len());
    let mut acc = 0.0;
    for p in dist {
        acc += p.max(0.0);
        cdf.push(acc);
    }
    let total = acc;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let counts: Vec<u32> = (0..runs)
        .map(|_| {
            let u = rng.gen::<f64>() * total;
            cdf.partition_point(|&c| c <= u).min(dist.len() - 1) as u32
        })
        .collect();
    let n = runs as f64;
    let mean = counts.iter().map(|&c| c as f64).sum::<f64>() / n;
    let central = |p: i32| counts.iter().map(|&c| (c as f64 - mean).powi(p)).sum::<f64>() / n;
    let variance = central(2);
    let m4 = central(4);
    Ok(SampleReport {
        counts,
        mean,
        variance,
        mean_se: (variance / n).sqrt(),
        variance_se: ((m4 - variance * variance).max(0.0) / n).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Segment;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn spec(n: usize, prep: StatePrep) -> ExperimentSpec {
        ExperimentSpec::new(n, vec![Segment { duration: 1.0, delta_x: 1.0 }], 0.0, prep)
    }

    fn params(s: f64, gamma: f64, tau: f64, phi: f64) -> DecoherenceParams {
        DecoherenceParams { s, gamma, tau, phi }
    }

    // Brute-force recount: number of surjections of an η-set onto α labelled
    // blocks divided by α!.
    fn stirling_by_counting(eta: u32, alpha: u32) -> u128 {
        let mut count = 0u128;
        let total = (alpha as u64).pow(eta);
        for code in 0..total {
            let mut seen = vec![false; alpha as usize];
            let mut c = code;
            for _ in 0..eta {
                seen[(c % alpha as u64) as usize] = true;
                c /= alpha as u64;
            }
            if seen.iter().all(|&s| s) {
                count += 1;
            }
        }
        count / (1..=alpha as u128).product::<u128>()
    }

    #[test]
    fn table_rows() {
        assert_eq!(moment_coefficients(5).unwrap().coeffs, vec![1, 15, 25, 10, 1]);
        assert_eq!(moment_coefficients(7).unwrap().coeffs, vec![1, 63, 301, 350, 140, 21, 1]);
        assert!(moment_coefficients(0).is_err());
        for eta in 1..=7 {
            let row = moment_coefficients(eta).unwrap();
            for a in 1..=eta {
                assert_eq!(row.get(a as usize), stirling_by_counting(eta, a));
            }
        }
    }

    #[test]
    fn large_orders_overflow_cleanly() {
        assert!(moment_coefficients(30).is_ok());
        assert_eq!(moment_coefficients(200).unwrap_err(), Error::Overflow("moment coefficients"));
    }

    #[test]
    fn falling_factorials() {
        assert_eq!(falling_factorial_exact(8, 3), Some(336));
        assert_eq!(falling_factorial_exact(3, 5), Some(0));
        assert_eq!(falling_factorial_exact(200, 40), None);
        let big = falling_factorial(200, 40);
        let direct: f64 = (161..=200).map(|v| v as f64).product();
        assert!((big / direct - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_params_all_in_plus() {
        let s = spec(5, StatePrep::balanced());
        let p = DecoherenceParams::default();
        assert_abs_diff_eq!(expect_o_plus(&s, &p).unwrap(), 5.0, epsilon = 1e-14);
        let (v, ph) = visibility_phase(&s, &p).unwrap();
        assert_abs_diff_eq!(v, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(ph, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(variance_closed_form(&s, &p).unwrap(), 0.0, epsilon = 1e-12);
        let d = counting_distribution(&s, &p, &PortProjector::plus()).unwrap();
        assert_abs_diff_eq!(d[5], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn visibility_limits() {
        let s = spec(6, StatePrep::balanced());
        let (v, ph) = visibility_phase(&s, &DecoherenceParams::free(0.8)).unwrap();
        assert_abs_diff_eq!(v, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(ph, 0.8, epsilon = 1e-14);
        let (v, _) = visibility_phase(&s, &params(0.0, 0.0, 0.4, 0.0)).unwrap();
        assert_abs_diff_eq!(v, 0.4f64.cos().powi(5).abs(), epsilon = 1e-14);
        for n in [1, 3, 9] {
            let (v, _) = visibility_phase(&spec(n, StatePrep::balanced()), &params(0.7, 0.0, 0.0, 0.0)).unwrap();
            assert_abs_diff_eq!(v, (-0.7f64).exp(), epsilon = 1e-14);
        }
        let (_, ph) = visibility_phase(&s, &params(0.0, 0.05, 0.0, 0.9)).unwrap();
        assert_abs_diff_eq!(ph, 0.9 - 6.0 * 0.05, epsilon = 1e-14);
    }

    #[test]
    fn strong_decoherence_mean() {
        let s = spec(7, StatePrep::balanced());
        assert_abs_diff_eq!(expect_o_plus(&s, &params(40.0, 0.3, 0.2, 1.0)).unwrap(), 3.5, epsilon = 1e-12);
    }

    #[test]
    fn first_moment_is_mean() {
        let s = spec(5, StatePrep::balanced());
        let p = params(0.3, 0.1, 0.2, 0.4);
        assert_abs_diff_eq!(
            moment(1, &s, &p, &PortProjector::plus()).unwrap(),
            expect_o_plus(&s, &p).unwrap(),
            epsilon = 1e-13
        );
    }

    #[test]
    fn variance_two_paths() {
        let p = params(0.3, 0.1, 0.2, 0.4);
        for n in 1..8 {
            let s = spec(n, StatePrep::balanced());
            let port = PortProjector::plus();
            let m1 = moment(1, &s, &p, &port).unwrap();
            let m2 = moment(2, &s, &p, &port).unwrap();
            assert_abs_diff_eq!(variance_closed_form(&s, &p).unwrap(), m2 - m1 * m1, epsilon = 1e-12);
        }
    }

    #[test]
    fn counting_moments_match_machinery() {
        let prep = StatePrep::Product { a_left: Complex64::new(0.6, 0.0), a_right: Complex64::from_polar(0.8, 1.0) };
        let port = PortProjector::new(Complex64::from_polar(0.8, -0.3), Complex64::new(0.6, 0.0)).unwrap();
        let s = spec(5, prep);
        let p = params(0.2, 0.15, -0.4, 0.3);
        let d = counting_distribution(&s, &p, &port).unwrap();
        assert_abs_diff_eq!(d.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        for eta in 1..=4 {
            let a = distribution_moment(&d, eta);
            let b = moment(eta, &s, &p, &port).unwrap();
            assert!((a - b).abs() <= 1e-11 * b.abs().max(1.0), "{eta}: {a} vs {b}");
        }
    }

    #[test]
    fn noon_distribution_matches_dense() {
        let p = params(0.03, 0.2, 0.9, 0.5);
        let ports = [
            PortProjector::plus(),
            PortProjector::new(Complex64::from_polar(0.6, 0.4), Complex64::new(0.8, 0.0)).unwrap(),
            PortProjector::new(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)).unwrap(),
        ];
        for n in 1..=6 {
            let s = spec(n, StatePrep::Noon);
            for port in &ports {
                let dense = counting_distribution(&s, &p, port).unwrap();
                let closed = noon_port_distribution(n, &p, port).unwrap();
                for (a, b) in dense.iter().zip(&closed) {
                    assert_abs_diff_eq!(a, b, epsilon = 1e-13);
                }
            }
        }
    }

    #[test]
    fn noon_fringe_values() {
        assert_abs_diff_eq!(noon_fringe(4, &DecoherenceParams::default()), 1.0, epsilon = 1e-15);
        let p = params(0.01, 0.0, 0.3, 0.0);
        assert_abs_diff_eq!(noon_fringe(5, &p), 0.5 * (1.0 + (-0.25f64).exp()), epsilon = 1e-15);
    }

    #[test]
    fn sampling_point_mass() {
        let r = sample_runs(&[0.0, 0.0, 1.0], 1000, 3).unwrap();
        assert!(r.counts.iter().all(|&c| c == 2));
        assert_eq!(r.variance, 0.0);
    }

    #[test]
    fn sampling_rejects_bad_input() {
        assert!(sample_runs(&[0.5, 0.6], 10, 1).is_err());
        assert!(sample_runs(&[1.2, -0.2], 10, 1).is_err());
        assert!(sample_runs(&[], 10, 1).is_err());
    }

    #[test]
    fn sampling_is_seeded() {
        let d = [0.1, 0.2, 0.3, 0.4];
        assert_eq!(sample_runs(&d, 500, 9).unwrap(), sample_runs(&d, 500, 9).unwrap());
        assert_ne!(sample_runs(&d, 500, 9).unwrap().counts, sample_runs(&d, 500, 10).unwrap().counts);
    }

    proptest! {
        #[test]
        fn sum_rule(eta in 1u32..=12, n in 1u64..=20) {
            let row = moment_coefficients(eta).unwrap();
            let lhs: u128 = (1..=eta as u64).map(|a| row.get(a as usize) * falling_factorial_exact(n, a).unwrap()).sum();
            prop_assert_eq!(lhs, (n as u128).pow(eta));
        }

        #[test]
        fn noon_distribution_normalized(n in 1usize..200, s in 0.0f64..0.1, g in -1.0f64..1.0, phi in -3.0f64..3.0, th in 0.0f64..1.57) {
            let port = PortProjector::new(Complex64::new(th.cos(), 0.0), Complex64::from_polar(th.sin(), 0.7)).unwrap();
            let d = noon_port_distribution(n, &params(s, g, 0.0, phi), &port).unwrap();
            prop_assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-10);
            prop_assert!(d.iter().all(|&p| p > -1e-12));
        }
    }
}
