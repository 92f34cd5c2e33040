//! Brute-force 2^N cross-checks of the closed forms.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::evolution::{element_factor, full_rho, noon_coherence, partial_trace, reduced_element, DensityBlock};
use crate::kernels::{coeffs_unitary, kernel_d, kernel_d_positions, kernel_u, kernel_u_positions, PositionTuple};
use crate::model::{BranchLabel, DecoherenceParams, ExperimentSpec, StatePrep};
use crate::observables::{moment, noon_fringe, noon_port_distribution, PortProjector};

/// Largest N accepted by [`oracle_check`].
pub const CHECK_MAX_ATOMS: usize = 10;

/// Apply O = Σ_i |A⟩⟨A|_i to every column of `m`.
pub fn apply_port_operator(m: &DMatrix<Complex64>, n_atoms: usize, port: &PortProjector) -> DMatrix<Complex64> {
    let dim = 1usize << n_atoms;
    let (al, ar) = (port.a_left, port.a_right);
    // P_{xy} = A_x A_y*, x, y ∈ {L, R}
    let (p_ll, p_lr, p_rl, p_rr) = (al * al.conj(), al * ar.conj(), ar * al.conj(), ar * ar.conj());
    let mut out = DMatrix::<Complex64>::zeros(dim, m.ncols());
    out.as_mut_slice().par_chunks_mut(dim).zip(m.as_slice().par_chunks(dim)).for_each(|(o, col)| {
        for i in 0..n_atoms {
            let b = 1usize << i;
            for x in 0..dim {
                let v = if x & b != 0 { p_ll * col[x] + p_lr * col[x ^ b] } else { p_rl * col[x | b] + p_rr * col[x] };
                o[x] += v;
            }
        }
    });
    out
}

/// Tr[O^η ρ] by repeated dense application of O.
pub fn dense_moment(rho: &DensityBlock, eta: u32, port: &PortProjector) -> f64 {
    let mut m = rho.entries.clone();
    for _ in 0..eta {
        m = apply_port_operator(&m, rho.alpha, port);
    }
    m.trace().re
}

/// ⟨ψ|ρ|ψ⟩ for a dense state vector ψ.
pub fn dense_expectation(rho: &DensityBlock, psi: &[Complex64]) -> Complex64 {
    let m = &rho.entries;
    let mut acc = Complex64::new(0.0, 0.0);
    for (j, pj) in psi.iter().enumerate() {
        if pj.norm_sqr() == 0.0 {
            continue;
        }
        for (i, pi) in psi.iter().enumerate() {
            acc += pi.conj() * m[(i, j)] * pj;
        }
    }
    acc
}

/// P(k) by summing ⟨y|ρ|y⟩ over product states y, each atom in |A⟩ or |A⊥⟩.
/// Cost 4^N per outcome string, so only for small N.
pub fn dense_counting_bruteforce(rho: &DensityBlock, port: &PortProjector) -> Vec<f64> {
    let n = rho.alpha;
    let dim = 1usize << n;
    let (al, ar) = (port.a_left, port.a_right);
    let mut dist = vec![0.0; n + 1];
    for y in 0..dim {
        let psi: Vec<Complex64> = (0..dim)
            .map(|x| {
                (0..n).fold(Complex64::new(1.0, 0.0), |acc, i| {
                    let in_a = y >> i & 1 == 1;
                    let in_l = x >> i & 1 == 1;
                    acc * match (in_a, in_l) {
                        (true, true) => al,
                        (true, false) => ar,
                        (false, true) => ar.conj(),
                        (false, false) => -al.conj(),
                    }
                })
            })
            .collect();
        dist[y.count_ones() as usize] += dense_expectation(rho, &psi).re;
    }
    dist
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct OracleOptions {
    /// Offset added to τ in the closed-form path only.
    pub perturb_tau: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub worst_error: f64,
    pub worst_label: String,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub checks: Vec<CheckResult>,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

struct Worst {
    name: &'static str,
    tol: f64,
    err: f64,
    label: String,
}

impl Worst {
    fn new(name: &'static str, tol: f64) -> Self {
        Self { name, tol, err: 0.0, label: String::new() }
    }

    fn see(&mut self, err: f64, label: impl FnOnce() -> String) {
        if err > self.err || err.is_nan() || self.label.is_empty() {
            self.err = if err.is_nan() { f64::INFINITY } else { err.max(self.err) };
            self.label = label();
        }
    }

    fn finish(self) -> CheckResult {
        CheckResult { name: self.name, passed: self.err <= self.tol, worst_error: self.err, worst_label: self.label, tolerance: self.tol }
    }
}

const THETAS: [f64; 3] = [0.37, 1.9, -2.6];

fn kernel_check(n_atoms: usize) -> Result<CheckResult> {
    let mut w = Worst::new("kernels_vs_positions", 1e-12);
    let dim = 1u64 << n_atoms;
    let (xl, xr) = ([0.0, 0.0, 0.0], [0.0, 0.0, -1.0]);
    for ket in 0..dim {
        let x = PositionTuple::from_mask(ket, n_atoms, xl, xr);
        for bra in 0..dim {
            let xp = PositionTuple::from_mask(bra, n_atoms, xl, xr);
            let nl = ket.count_ones() as i64;
            let n = nl - bra.count_ones() as i64;
            for &theta in &THETAS {
                let q = [0.0, 0.0, theta];
                let ed = (kernel_d(n, n_atoms as u64, theta)? - kernel_d_positions(&x, &xp, q)?).norm();
                let eu = (kernel_u(n, n_atoms as u64, nl, theta)? - kernel_u_positions(&x, &xp, q)?).norm();
                w.see(ed.max(eu), || format!("ket={ket:b} bra={bra:b} q.dx={theta}"));
            }
        }
    }
    Ok(w.finish())
}

fn invariants_check(rho: &DensityBlock) -> Vec<CheckResult> {
    let mut herm = Worst::new("hermiticity", 1e-12);
    herm.see(rho.hermiticity_error(), || "full_rho".into());
    let mut tr = Worst::new("unit_trace", 1e-12);
    tr.see((rho.trace() - 1.0).norm(), || "full_rho".into());
    let mut eig = Worst::new("eigenvalue_floor", 1e-10);
    let min = rho.min_eigenvalue();
    eig.see((-min).max(0.0), || format!("min eigenvalue {min:e}"));
    vec![herm.finish(), tr.finish(), eig.finish()]
}

fn conjugation_check(n_atoms: usize, params: &DecoherenceParams) -> Result<CheckResult> {
    let mut w = Worst::new("conjugation", 1e-12);
    let big_n = n_atoms as u64;
    for k in 0..=big_n {
        for kp in 0..=big_n {
            let l = BranchLabel::new(k, kp, big_n)?;
            let f = element_factor(l, params);
            let ft = element_factor(l.transposed(), params);
            w.see((f.conj() - ft).norm(), || format!("N_L={k} N_L'={kp}"));
            for &theta in &THETAS {
                let n = l.asymmetry();
                let d = (kernel_d(n, big_n, theta)?.conj() - kernel_d(-n, big_n, theta)?).norm();
                let u = (kernel_u(n, big_n, k as i64, theta)?.conj() - kernel_u(-n, big_n, kp as i64, theta)?).norm();
                w.see(d.max(u), || format!("N_L={k} N_L'={kp} q.dx={theta}"));
            }
        }
    }
    Ok(w.finish())
}

/// Compare every closed form that applies to `spec` against dense 2^N
/// computations.
pub fn oracle_check(spec: &ExperimentSpec, params: &DecoherenceParams, opts: OracleOptions) -> Result<OracleReport> {
    let n_atoms = spec.n_atoms;
    if n_atoms > CHECK_MAX_ATOMS {
        let bytes = 16u128 << (2 * n_atoms.min(60));
        return Err(Error::OracleTooLarge { n_atoms, limit: CHECK_MAX_ATOMS, bytes });
    }
    let closed = DecoherenceParams { tau: params.tau + opts.perturb_tau, ..*params };
    let rho = full_rho(spec, params)?;
    let mut checks = Vec::new();
    checks.push(kernel_check(n_atoms.min(6))?);
    checks.extend(invariants_check(&rho));
    checks.push(conjugation_check(n_atoms, params)?);

    match spec.prep {
        StatePrep::Product { .. } => {
            let mut w = Worst::new("reduced_element_vs_partial_trace", 1e-12);
            let mut reduced = rho.clone();
            for alpha in (0..=n_atoms).rev() {
                if alpha < reduced.alpha {
                    reduced = partial_trace(&reduced, alpha)?;
                }
                let dim = 1usize << alpha;
                for i in 0..dim {
                    for j in 0..dim {
                        let (k, kp) = (i.count_ones() as usize, j.count_ones() as usize);
                        let e = reduced_element(alpha, k, kp, spec, &closed)?;
                        w.see((e - reduced.get(i, j)).norm(), || format!("alpha={alpha} N_L={k} N_L'={kp}"));
                    }
                }
            }
            checks.push(w.finish());

            let port = PortProjector::plus();
            let mut w = Worst::new("moments_vs_dense_trace", 1e-10);
            for eta in 1..=4u32 {
                let a = moment(eta, spec, &closed, &port)?;
                let b = dense_moment(&rho, eta, &port);
                w.see((a - b).abs() / b.abs().max(1e-300), || format!("eta={eta}"));
            }
            checks.push(w.finish());
        }
        StatePrep::Noon => {
            let big_n = n_atoms as u64;
            let all = (1usize << n_atoms) - 1;
            let mut w = Worst::new("noon_coherence", 1e-12);
            let c = noon_coherence(big_n, &closed);
            w.see((c - rho.get(all, 0)).norm(), || format!("N_L={n_atoms} N_L'=0"));
            checks.push(w.finish());

            let mut w = Worst::new("noon_unitary_kernel_zero", 0.0);
            let b = coeffs_unitary(n_atoms as i64, big_n, n_atoms as i64)?;
            let mut worst = (b.b1.abs() + b.b_plus.abs() + b.b_minus.abs()) as f64;
            for &theta in &THETAS {
                worst = worst.max(kernel_u(n_atoms as i64, big_n, n_atoms as i64, theta)?.norm());
            }
            w.see(worst, || format!("n={n_atoms} N_L={n_atoms}"));
            checks.push(w.finish());

            let mut w = Worst::new("noon_fringe", 1e-12);
            let mut psi = vec![Complex64::new(0.0, 0.0); all + 1];
            psi[0] = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            psi[all] = psi[0];
            let dense = dense_expectation(&rho, &psi).re;
            w.see((noon_fringe(big_n, &closed) - dense).abs(), || "psi = (|L..L> + |R..R>)/sqrt2".into());
            checks.push(w.finish());

            let port = PortProjector::plus();
            let mut w = Worst::new("noon_port_distribution", 1e-12);
            let closed_dist = noon_port_distribution(n_atoms, &closed, &port)?;
            for eta in 1..=4u32 {
                let a: f64 = closed_dist.iter().enumerate().map(|(k, p)| p * (k as f64).powi(eta as i32)).sum();
                let b = dense_moment(&rho, eta, &port);
                w.see((a - b).abs() / b.abs().max(1.0), || format!("eta={eta}"));
            }
            checks.push(w.finish());
        }
    }
    Ok(OracleReport { checks })
}
