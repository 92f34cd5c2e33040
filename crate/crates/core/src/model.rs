//! Domain types shared by every module.
//!
//! All quantities use natural units (ħ = c = k_B = 1) with energies in eV:
//! lengths and times are in eV⁻¹, number densities in eV³. See [`crate::units`]
//! for conversion constants.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Tolerance on |a_L|² + |a_R|² = 1.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// One piece of the piecewise-constant arm separation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    /// Duration of the segment (eV⁻¹).
    pub duration: f64,
    /// Arm separation |x_R − x_L| held during the segment (eV⁻¹).
    pub delta_x: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StatePrep {
    /// Every atom in a_L|L⟩ + a_R|R⟩.
    Product { a_left: Complex64, a_right: Complex64 },
    /// (|L…L⟩ + |R…R⟩)/√2.
    Noon,
}

impl StatePrep {
    pub fn balanced() -> Self {
        let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        StatePrep::Product { a_left: h, a_right: h }
    }

    /// Amplitudes of a product preparation.
    pub fn product_amplitudes(&self, op: &'static str) -> Result<(Complex64, Complex64)> {
        match *self {
            StatePrep::Product { a_left, a_right } => Ok((a_left, a_right)),
            StatePrep::Noon => Err(Error::UnsupportedPrep { op, expected: "product" }),
        }
    }

    pub fn is_balanced(&self) -> bool {
        match *self {
            StatePrep::Product { a_left, a_right } => {
                let h = std::f64::consts::FRAC_1_SQRT_2;
                (a_left - h).norm() < 1e-12 && (a_right - h).norm() < 1e-12
            }
            StatePrep::Noon => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub n_atoms: usize,
    pub separation_profile: Vec<Segment>,
    /// Dynamical phase φ (radians), independent of the environment.
    pub dynamical_phase: f64,
    pub prep: StatePrep,
}

impl ExperimentSpec {
    pub fn new(n_atoms: usize, separation_profile: Vec<Segment>, dynamical_phase: f64, prep: StatePrep) -> Self {
        Self { n_atoms, separation_profile, dynamical_phase, prep }
    }

    pub fn validate(self) -> Result<Self> {
        validate_spec(self)
    }

    pub fn total_duration(&self) -> f64 {
        self.separation_profile.iter().map(|s| s.duration).sum()
    }
}

/// Check every invariant of an [`ExperimentSpec`], returning it unchanged.
pub fn validate_spec(spec: ExperimentSpec) -> Result<ExperimentSpec> {
    if spec.n_atoms == 0 {
        return Err(invalid("n_atoms", "must be at least 1, got 0"));
    }
    if spec.n_atoms as u64 > u32::MAX as u64 {
        return Err(invalid("n_atoms", format!("must be at most {}, got {}", u32::MAX, spec.n_atoms)));
    }
    if !spec.dynamical_phase.is_finite() {
        return Err(invalid("dynamical_phase", "must be finite"));
    }
    for (i, seg) in spec.separation_profile.iter().enumerate() {
        if !(seg.duration > 0.0) || !seg.duration.is_finite() {
            return Err(invalid(
                format!("separation_profile[{i}].duration"),
                format!("must be finite and > 0, got {}", seg.duration),
            ));
        }
        if !(seg.delta_x >= 0.0) || !seg.delta_x.is_finite() {
            return Err(invalid(
                format!("separation_profile[{i}].delta_x"),
                format!("must be finite and >= 0, got {}", seg.delta_x),
            ));
        }
    }
    if let StatePrep::Product { a_left, a_right } = spec.prep {
        check_normalized("prep", a_left, a_right)?;
    }
    Ok(spec)
}

pub(crate) fn check_normalized(field: &str, a_left: Complex64, a_right: Complex64) -> Result<()> {
    let norm = a_left.norm_sqr() + a_right.norm_sqr();
    if (norm - 1.0).abs() > NORMALIZATION_TOL || !norm.is_finite() {
        return Err(invalid(field, format!("|a_L|^2 + |a_R|^2 must be 1 within {NORMALIZATION_TOL:e}, got {norm}")));
    }
    Ok(())
}

/// Time-integrated environment parameters that fully determine two-mode
/// evolution.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DecoherenceParams {
    /// Decay exponent.
    pub s: f64,
    /// Decoherence phase (radians).
    pub gamma: f64,
    /// Forward-scattering phase (radians).
    pub tau: f64,
    /// Dynamical phase (radians).
    pub phi: f64,
}

impl DecoherenceParams {
    pub fn new(s: f64, gamma: f64, tau: f64, phi: f64) -> Result<Self> {
        Self { s, gamma, tau, phi }.validate()
    }

    /// No environment, only the dynamical phase.
    pub fn free(phi: f64) -> Self {
        Self { s: 0.0, gamma: 0.0, tau: 0.0, phi }
    }

    pub fn validate(self) -> Result<Self> {
        if !(self.s >= 0.0) || !self.s.is_finite() {
            return Err(invalid("s", format!("decay exponent must be finite and >= 0, got {}", self.s)));
        }
        for (name, v) in [("gamma", self.gamma), ("tau", self.tau), ("phi", self.phi)] {
            if !v.is_finite() {
                return Err(invalid(name, "must be finite"));
            }
        }
        Ok(self)
    }

    /// Scale the environment-induced parts (s, γ, τ) by `eps`, keeping φ.
    pub fn scaled(self, eps: f64) -> Self {
        Self { s: self.s * eps, gamma: self.gamma * eps, tau: self.tau * eps, phi: self.phi }
    }
}

/// (N_L, N_L') class of a density-matrix element ⟨{x}|ρ|{x'}⟩: N_L atoms of
/// the ket configuration {x} and N_L' of the bra configuration {x'} sit in the
/// left arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BranchLabel {
    n_left_ket: u64,
    n_left_bra: u64,
    total: u64,
}

impl BranchLabel {
    pub fn new(n_left_ket: u64, n_left_bra: u64, total: u64) -> Result<Self> {
        if n_left_ket > total || n_left_bra > total {
            return Err(Error::InvalidLabel {
                n_left_ket: n_left_ket as i64,
                n_left_bra: n_left_bra as i64,
                total,
            });
        }
        Ok(Self { n_left_ket, n_left_bra, total })
    }

    /// Label from the asymmetry n and N_L, as used by the kernel closed forms.
    pub fn from_asymmetry(n: i64, n_left_ket: i64, total: u64) -> Result<Self> {
        let bra = n_left_ket - n;
        if n_left_ket < 0 || bra < 0 || n_left_ket as u64 > total || bra as u64 > total {
            return Err(Error::InvalidLabel { n_left_ket, n_left_bra: bra, total });
        }
        Ok(Self { n_left_ket: n_left_ket as u64, n_left_bra: bra as u64, total })
    }

    pub fn n_left_ket(&self) -> u64 {
        self.n_left_ket
    }

    pub fn n_left_bra(&self) -> u64 {
        self.n_left_bra
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Atom asymmetry n = N_L − N_L'.
    pub fn asymmetry(&self) -> i64 {
        self.n_left_ket as i64 - self.n_left_bra as i64
    }

    /// The transposed element: n → −n with N_L + N_L' fixed.
    pub fn transposed(&self) -> Self {
        Self { n_left_ket: self.n_left_bra, n_left_bra: self.n_left_ket, total: self.total }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialSpec {
    /// Ṽ(q) = g / (q² + μ²).
    Yukawa { coupling: f64, mediator_mass: f64 },
    /// Samples (|q|, Ṽ(q)) with strictly increasing |q|.
    Tabulated { samples: Vec<(f64, f64)> },
}

impl PotentialSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            PotentialSpec::Yukawa { coupling, mediator_mass } => {
                if !coupling.is_finite() || *coupling < 0.0 {
                    return Err(invalid("potential.coupling", format!("must be finite and >= 0, got {coupling}")));
                }
                if !(*mediator_mass > 0.0) || !mediator_mass.is_finite() {
                    return Err(invalid("potential.mediator_mass", format!("must be finite and > 0, got {mediator_mass}")));
                }
            }
            PotentialSpec::Tabulated { samples } => {
                if samples.len() < 2 {
                    return Err(invalid("potential.samples", "need at least two samples"));
                }
                if samples[0].0 < 0.0 {
                    return Err(invalid("potential.samples", "|q| must be >= 0"));
                }
                for w in samples.windows(2) {
                    if !(w[1].0 > w[0].0) {
                        return Err(invalid("potential.samples", format!("|q| must be strictly increasing ({} then {})", w[0].0, w[1].0)));
                    }
                }
                if samples.iter().any(|(q, v)| !q.is_finite() || !v.is_finite()) {
                    return Err(invalid("potential.samples", "samples must be finite"));
                }
            }
        }
        Ok(())
    }
}

/// Probe gas and interaction potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentSpec {
    /// Probe mass (eV).
    pub probe_mass: f64,
    /// Gas temperature (eV).
    pub temperature: f64,
    /// Probe number density (eV³).
    pub number_density: f64,
    /// Bulk drift velocity of the gas in units of c; z is the arm axis.
    #[serde(default)]
    pub wind_velocity: [f64; 3],
    pub potential: PotentialSpec,
    /// Exposure window starting at t = 0 (eV⁻¹).
    pub interaction_time: f64,
}

impl EnvironmentSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("probe_mass", self.probe_mass),
            ("temperature", self.temperature),
            ("number_density", self.number_density),
            ("interaction_time", self.interaction_time),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(invalid(name, format!("must be finite and >= 0, got {v}")));
            }
        }
        let w2: f64 = self.wind_velocity.iter().map(|w| w * w).sum();
        if !(w2 < 1.0) {
            return Err(invalid("wind_velocity", format!("|v| must be < 1, got {}", w2.sqrt())));
        }
        self.potential.validate()
    }

    pub fn is_isotropic(&self) -> bool {
        self.wind_velocity == [0.0; 3]
    }
}
