//! Decoherence parameters (s, γ, τ) of a probe gas.
//!
//! Momentum-transfer densities for a gas with momentum distribution
//! N(m·w, mT·1) and number density n:
//!
//! ```text
//! ω_D(q) = 2π n (m/|q|) g(−|q|/2) |Ṽ(q)|²
//! ω_U(q) = −(2 m n/|q|) |Ṽ(q)|² PV E[1/(p∥ + |q|/2)]
//! ```
//!
//! where p∥ = p·q̂ and g is its Gaussian density. Per unit time, with
//! Δx = x_R − x_L = δ ẑ,
//!
//! ```text
//! ṡ = ∫ d³q/(2π)³ ω_D(q) [1 − cos(q·Δx)]
//! γ̇ = ∫ d³q/(2π)³ ω_D(q) sin(q·Δx)
//! τ̇ = ∫ d³q/(2π)³ ω_U(q) [1 − cos(q·Δx)]
//! ```
//!
//! Each profile segment contributes its duration (clipped to the exposure
//! window) times the rate at its separation.

mod pvtable;
pub mod quadrature;

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{DecoherenceParams, EnvironmentSpec, PotentialSpec, Segment};
use pvtable::PvTable;
use quadrature::{graded_breaks, integrate, merge_breaks, uniform_breaks, PvOptions, PANEL_ORDER};

/// Gaussian support half-width in standard deviations.
pub(crate) const GAUSS_REACH: f64 = 12.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureSettings {
    /// Radial resolution; 128 gives eight uniform Gauss-Legendre panels plus graded ones.
    pub speed_nodes: usize,
    /// Nodes per polar panel group and azimuthal points.
    pub angle_nodes: usize,
    /// PV exclusion half-width relative to the momentum spread.
    pub pv_exclusion: f64,
    pub target_rel_error: f64,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        Self { speed_nodes: 128, angle_nodes: 32, pv_exclusion: 1e-3, target_rel_error: 1e-6 }
    }
}

impl QuadratureSettings {
    pub fn validate(&self) -> Result<()> {
        if self.speed_nodes == 0 || self.angle_nodes == 0 {
            return Err(invalid("quadrature", "node counts must be positive"));
        }
        if !(self.pv_exclusion > 0.0 && self.pv_exclusion < 1.0) {
            return Err(invalid("quadrature.pv_exclusion", format!("must lie in (0, 1), got {}", self.pv_exclusion)));
        }
        if !(self.target_rel_error > 0.0) || !self.target_rel_error.is_finite() {
            return Err(invalid("quadrature.target_rel_error", format!("must be > 0, got {}", self.target_rel_error)));
        }
        Ok(())
    }

    pub fn doubled(&self) -> Self {
        Self { speed_nodes: 2 * self.speed_nodes, angle_nodes: 2 * self.angle_nodes, ..*self }
    }

    fn radial_refine(&self) -> f64 {
        self.speed_nodes as f64 / 128.0
    }

    fn angular_refine(&self) -> f64 {
        self.angle_nodes as f64 / 32.0
    }

    fn pv(&self) -> PvOptions {
        PvOptions { exclusion: self.pv_exclusion, panels_per_scale: 2.0 * self.radial_refine(), target_rel_error: self.target_rel_error }
    }
}

/// A quadrature result with the change observed under node doubling.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub abs_error: f64,
}

/// Monotone piecewise-cubic interpolant (Fritsch-Carlson slopes).
#[derive(Debug, Clone)]
struct Monotone {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl Monotone {
    fn new(samples: &[(f64, f64)]) -> Self {
        let x: Vec<f64> = samples.iter().map(|s| s.0).collect();
        let y: Vec<f64> = samples.iter().map(|s| s.1).collect();
        let k = x.len();
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let d: Vec<f64> = (0..k - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        let mut m = vec![0.0; k];
        if k == 2 {
            m = vec![d[0], d[0]];
        } else {
            for i in 1..k - 1 {
                if d[i - 1] * d[i] > 0.0 {
                    let w1 = 2.0 * h[i] + h[i - 1];
                    let w2 = h[i] + 2.0 * h[i - 1];
                    m[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
                }
            }
            m[0] = Self::edge(h[0], h[1], d[0], d[1]);
            m[k - 1] = Self::edge(h[k - 2], h[k - 3], d[k - 2], d[k - 3]);
        }
        Self { x, y, m }
    }

    fn edge(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
        let s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if s.signum() != d0.signum() {
            0.0
        } else if d0.signum() != d1.signum() && s.abs() > 3.0 * d0.abs() {
            3.0 * d0
        } else {
            s
        }
    }

    fn eval(&self, q: f64) -> Result<f64> {
        let (lo, hi) = (self.x[0], *self.x.last().unwrap());
        if !(q >= lo && q <= hi) {
            return Err(Error::OutOfTableRange { q, lo, hi });
        }
        let i = self.x.partition_point(|&v| v <= q).clamp(1, self.x.len() - 1) - 1;
        let h = self.x[i + 1] - self.x[i];
        let t = (q - self.x[i]) / h;
        let (t2, t3) = (t * t, t * t * t);
        Ok((2.0 * t3 - 3.0 * t2 + 1.0) * self.y[i]
            + (t3 - 2.0 * t2 + t) * h * self.m[i]
            + (-2.0 * t3 + 3.0 * t2) * self.y[i + 1]
            + (t3 - t2) * h * self.m[i + 1])
    }
}

#[derive(Debug, Clone)]
enum Potential {
    Yukawa { coupling: f64, mass: f64 },
    Table(Monotone),
}

impl Potential {
    fn new(spec: &PotentialSpec) -> Result<Self> {
        spec.validate()?;
        Ok(match spec {
            PotentialSpec::Yukawa { coupling, mediator_mass } => Potential::Yukawa { coupling: *coupling, mass: *mediator_mass },
            PotentialSpec::Tabulated { samples } => Potential::Table(Monotone::new(samples)),
        })
    }

    fn eval(&self, q: f64) -> Result<f64> {
        match self {
            Potential::Yukawa { coupling, mass } => Ok(coupling / (q * q + mass * mass)),
            Potential::Table(t) => t.eval(q),
        }
    }

    /// |q| range over which the potential is known.
    fn support(&self) -> (f64, f64) {
        match self {
            Potential::Yukawa { .. } => (0.0, f64::INFINITY),
            Potential::Table(t) => (t.x[0], *t.x.last().unwrap()),
        }
    }

    fn scale(&self) -> Option<f64> {
        match self {
            Potential::Yukawa { mass, .. } => Some(*mass),
            Potential::Table(_) => None,
        }
    }
}

/// Fourier amplitude Ṽ(|q|).
pub fn potential_fourier(q_mag: f64, pot: &PotentialSpec) -> Result<f64> {
    if !(q_mag >= 0.0) {
        return Err(invalid("q_mag", format!("must be >= 0, got {q_mag}")));
    }
    Potential::new(pot)?.eval(q_mag)
}

/// Direction average of PV 1/(2p·q + q²) over isotropic p̂ at fixed |p|, |q|.
pub fn angular_pv_average(p: f64, q: f64) -> f64 {
    ((q + 2.0 * p) / (q - 2.0 * p)).abs().ln() / (4.0 * p * q)
}

fn gaussian(x: f64, mean: f64, sigma: f64) -> f64 {
    let z = (x - mean) / sigma;
    (-0.5 * z * z).exp() / ((2.0 * PI).sqrt() * sigma)
}

/// Momentum-transfer densities of one environment.
#[derive(Debug, Clone)]
pub struct RateDensities {
    mass: f64,
    sigma: f64,
    density: f64,
    wind: [f64; 3],
    potential: Potential,
}

impl RateDensities {
    pub fn new(env: &EnvironmentSpec) -> Result<Self> {
        env.validate()?;
        if !(env.temperature > 0.0) {
            return Err(invalid("temperature", "must be > 0 for rate quadrature"));
        }
        if !(env.probe_mass > 0.0) {
            return Err(invalid("probe_mass", "must be > 0 for rate quadrature"));
        }
        Ok(Self {
            mass: env.probe_mass,
            sigma: (env.probe_mass * env.temperature).sqrt(),
            density: env.number_density,
            wind: env.wind_velocity,
            potential: Potential::new(&env.potential)?,
        })
    }

    /// Standard deviation of each probe momentum component, √(mT).
    pub fn momentum_spread(&self) -> f64 {
        self.sigma
    }

    fn drift(&self, w_par: f64) -> f64 {
        self.mass * w_par
    }

    fn omega_d_at(&self, q: f64, w_par: f64) -> Result<f64> {
        let v = self.potential.eval(q)?;
        Ok(2.0 * PI * self.density * self.mass / q * gaussian(-0.5 * q, self.drift(w_par), self.sigma) * v * v)
    }

    /// PV E[1/(p∥ + q/2)] for p∥ ~ N(m w∥, mT).
    fn pv_mean(&self, q: f64, w_par: f64, table: &PvTable) -> f64 {
        table.eval((-0.5 * q - self.drift(w_par)) / self.sigma) / self.sigma
    }

    fn omega_u_at(&self, q: f64, w_par: f64, table: &PvTable) -> Result<f64> {
        let v = self.potential.eval(q)?;
        Ok(-2.0 * self.mass * self.density / q * v * v * self.pv_mean(q, w_par, table))
    }

    /// ω_D at momentum transfer `q` (eV).
    pub fn omega_d(&self, q: [f64; 3]) -> Result<f64> {
        let (mag, w_par) = self.split(q);
        self.omega_d_at(mag, w_par)
    }

    /// ω_U at momentum transfer `q` (eV).
    pub fn omega_u(&self, q: [f64; 3], qs: &QuadratureSettings) -> Result<f64> {
        let (mag, w_par) = self.split(q);
        self.omega_u_at(mag, w_par, &*PvTable::get(&qs.pv())?)
    }

    fn split(&self, q: [f64; 3]) -> (f64, f64) {
        let mag = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2]).sqrt();
        let w_par = (q[0] * self.wind[0] + q[1] * self.wind[1] + q[2] * self.wind[2]) / mag;
        (mag, w_par)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    S,
    Gamma,
    Tau,
}

impl Kind {
    fn name(self) -> &'static str {
        match self {
            Kind::S => "s",
            Kind::Gamma => "gamma",
            Kind::Tau => "tau",
        }
    }
}

/// 1 − sin(x)/x without cancellation.
pub(crate) fn one_minus_sinc(x: f64) -> f64 {
    let x2 = x * x;
    if x.abs() < 0.1 {
        x2 / 6.0 * (1.0 - x2 / 20.0 * (1.0 - x2 / 42.0 * (1.0 - x2 / 72.0 * (1.0 - x2 / 110.0))))
    } else {
        1.0 - x.sin() / x
    }
}

#[derive(Clone, Copy)]
enum Geometry {
    Isotropic,
    /// Wind parallel to the arm axis, w_z.
    Axial(f64),
    /// Wind with components along (z, ⊥).
    General(f64, f64),
}

struct Integrand<'a> {
    dens: &'a RateDensities,
    kind: Kind,
    delta: f64,
    geom: Geometry,
    qs: &'a QuadratureSettings,
    table: Option<Arc<PvTable>>,
}

impl Integrand<'_> {
    fn omega(&self, q: f64, w_par: f64) -> Result<f64> {
        match self.kind {
            Kind::S | Kind::Gamma => self.dens.omega_d_at(q, w_par),
            Kind::Tau => self.dens.omega_u_at(q, w_par, self.table.as_ref().expect("table built for tau")),
        }
    }

    fn bracket(&self, phase: f64) -> f64 {
        match self.kind {
            Kind::S | Kind::Tau => {
                let h = (0.5 * phase).sin();
                2.0 * h * h
            }
            Kind::Gamma => phase.sin(),
        }
    }

    fn polar_breaks(&self, q: f64, wind: f64) -> Vec<f64> {
        let sharp = 2.0 * self.dens.mass * wind.abs() / self.dens.sigma;
        let osc = q * self.delta / PI;
        let per = (self.qs.angular_refine() * (1.0 + osc.min(256.0) + sharp.min(256.0))).ceil() as usize;
        uniform_breaks(-1.0, 1.0, per.max(1))
    }

    /// ∫dΩ ω(q, q̂) B(q δ cos θ).
    fn angular(&self, q: f64) -> Result<f64> {
        match self.geom {
            Geometry::Isotropic => {
                let om = self.omega(q, 0.0)?;
                Ok(match self.kind {
                    Kind::Gamma => 0.0,
                    _ => 4.0 * PI * om * one_minus_sinc(q * self.delta),
                })
            }
            Geometry::Axial(wz) => {
                let mut err = None;
                let v = integrate(&self.polar_breaks(q, wz), |c| match self.omega(q, wz * c) {
                    Ok(o) => o * self.bracket(q * self.delta * c),
                    Err(e) => {
                        err.get_or_insert(e);
                        0.0
                    }
                });
                err.map_or(Ok(2.0 * PI * v), Err)
            }
            Geometry::General(wz, wp) => {
                let sharp = (self.dens.mass * wp.abs() / self.dens.sigma).min(256.0);
                let m = ((self.qs.angle_nodes as f64) * (1.0 + sharp)).ceil() as usize;
                let mut err = None;
                let v = integrate(&self.polar_breaks(q, wz.abs() + wp.abs()), |c| {
                    let st = (1.0 - c * c).max(0.0).sqrt();
                    let b = self.bracket(q * self.delta * c);
                    let mut acc = 0.0;
                    for j in 0..m {
                        let phi = 2.0 * PI * j as f64 / m as f64;
                        match self.omega(q, wz * c + wp * st * phi.cos()) {
                            Ok(o) => acc += o,
                            Err(e) => {
                                err.get_or_insert(e);
                            }
                        }
                    }
                    acc * b * 2.0 * PI / m as f64
                });
                err.map_or(Ok(v), Err)
            }
        }
    }
}

fn radial_breaks(lo: f64, hi: f64, scales: &[f64], qs: &QuadratureSettings, delta: f64) -> Vec<f64> {
    let uniform = ((qs.speed_nodes / PANEL_ORDER).max(1) as f64 + (hi - lo) * delta / PI).min(20000.0) as usize;
    let smallest = scales.iter().cloned().filter(|s| *s > 0.0 && s.is_finite()).fold(f64::INFINITY, f64::min);
    let mut pts = uniform_breaks(lo, hi, uniform);
    if smallest.is_finite() {
        pts.extend(graded_breaks(0.0, hi, smallest).into_iter().filter(|p| *p > lo));
    }
    let base = merge_breaks(pts, lo, hi);
    let sub = qs.radial_refine().max(1.0) as usize;
    let mut out = vec![base[0]];
    for w in base.windows(2) {
        out.extend(uniform_breaks(w[0], w[1], sub).into_iter().skip(1));
    }
    out
}

/// Rate (per unit time) of one parameter at separation `delta`, single refinement level.
fn rate_once(dens: &RateDensities, kind: Kind, delta: f64, qs: &QuadratureSettings) -> Result<f64> {
    let w = dens.wind;
    let wp = (w[0] * w[0] + w[1] * w[1]).sqrt();
    let geom = if wp == 0.0 && w[2] == 0.0 {
        Geometry::Isotropic
    } else if wp == 0.0 {
        Geometry::Axial(w[2])
    } else {
        Geometry::General(w[2], wp)
    };
    if delta == 0.0 || (kind == Kind::Gamma && matches!(geom, Geometry::Isotropic)) {
        return Ok(0.0);
    }
    let table = if kind == Kind::Tau { Some(PvTable::get(&qs.pv())?) } else { None };
    let integrand = Integrand { dens, kind, delta, geom, qs, table };
    let wmag = (wp * wp + w[2] * w[2]).sqrt();
    let q_cut = 2.0 * (dens.mass * wmag + GAUSS_REACH * dens.sigma);
    let (t_lo, t_hi) = dens.potential.support();
    let (lo, hi) = (t_lo, q_cut.min(t_hi));
    let mut scales = vec![dens.sigma, 1.0 / delta];
    scales.extend(dens.potential.scale());
    let mut total = 0.0;
    if hi > lo {
        let nodes = quadrature::nodes_on(&radial_breaks(lo, hi, &scales, qs, delta));
        let parts: Vec<f64> = nodes
            .par_iter()
            .map(|&(q, wt)| integrand.angular(q).map(|a| wt * q * q * a))
            .collect::<Result<Vec<f64>>>()?;
        total += parts.iter().sum::<f64>();
    }
    // ω_U has no thermal cutoff: map [q_cut, ∞) onto t = q_cut/q ∈ (0, 1].
    if kind == Kind::Tau && t_hi.is_infinite() {
        let panels = (4.0 * qs.radial_refine()).ceil() as usize;
        let nodes = quadrature::nodes_on(&uniform_breaks(0.0, 1.0, panels));
        let parts: Vec<f64> = nodes
            .par_iter()
            .map(|&(t, wt)| {
                let q = q_cut / t;
                integrand.angular(q).map(|a| wt * q_cut / (t * t) * q * q * a)
            })
            .collect::<Result<Vec<f64>>>()?;
        total += parts.iter().sum::<f64>();
    }
    Ok(total / (8.0 * PI * PI * PI))
}

fn rate_checked(dens: &RateDensities, kind: Kind, delta: f64, qs: &QuadratureSettings) -> Result<Estimate> {
    let coarse = rate_once(dens, kind, delta, qs)?;
    let fine = rate_once(dens, kind, delta, &qs.doubled())?;
    let diff = (fine - coarse).abs();
    let rel = if fine == 0.0 && coarse == 0.0 { 0.0 } else { diff / fine.abs().max(coarse.abs()) };
    if rel > qs.target_rel_error {
        return Err(Error::NonConvergent { integral: kind.name(), rel_change: rel, tolerance: qs.target_rel_error });
    }
    Ok(Estimate { value: fine, abs_error: diff })
}

/// Durations of the profile segments inside [0, window].
fn clipped(profile: &[Segment], window: f64) -> Vec<(f64, f64)> {
    let mut start = 0.0;
    let mut out = Vec::new();
    for seg in profile {
        let dt = (start + seg.duration).min(window) - start.min(window);
        if dt > 0.0 {
            out.push((dt, seg.delta_x));
        }
        start += seg.duration;
    }
    out
}

fn integrate_profile(env: &EnvironmentSpec, profile: &[Segment], qs: &QuadratureSettings, kind: Kind) -> Result<Estimate> {
    qs.validate()?;
    for (i, seg) in profile.iter().enumerate() {
        if !(seg.duration > 0.0) || !(seg.delta_x >= 0.0) || !seg.duration.is_finite() || !seg.delta_x.is_finite() {
            return Err(invalid(format!("separation_profile[{i}]"), "duration must be > 0 and delta_x >= 0"));
        }
    }
    let dens = RateDensities::new(env)?;
    let mut cache: HashMap<u64, Estimate> = HashMap::new();
    let mut out = Estimate::default();
    for (dt, delta) in clipped(profile, env.interaction_time) {
        let r = match cache.get(&delta.to_bits()) {
            Some(r) => *r,
            None => {
                let r = rate_checked(&dens, kind, delta, qs)?;
                cache.insert(delta.to_bits(), r);
                r
            }
        };
        out.value += dt * r.value;
        out.abs_error += dt * r.abs_error;
    }
    Ok(out)
}

pub fn compute_s(env: &EnvironmentSpec, profile: &[Segment], qs: &QuadratureSettings) -> Result<Estimate> {
    integrate_profile(env, profile, qs, Kind::S)
}

pub fn compute_gamma(env: &EnvironmentSpec, profile: &[Segment], qs: &QuadratureSettings) -> Result<Estimate> {
    integrate_profile(env, profile, qs, Kind::Gamma)
}

pub fn compute_tau(env: &EnvironmentSpec, profile: &[Segment], qs: &QuadratureSettings) -> Result<Estimate> {
    integrate_profile(env, profile, qs, Kind::Tau)
}

/// s, γ and τ together.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub s: Estimate,
    pub gamma: Estimate,
    pub tau: Estimate,
}

pub fn compute_params(env: &EnvironmentSpec, profile: &[Segment], qs: &QuadratureSettings) -> Result<RateReport> {
    Ok(RateReport { s: compute_s(env, profile, qs)?, gamma: compute_gamma(env, profile, qs)?, tau: compute_tau(env, profile, qs)? })
}

pub fn rates_to_params(s: f64, gamma: f64, tau: f64, phi: f64) -> Result<DecoherenceParams> {
    DecoherenceParams::new(s, gamma, tau, phi)
}
