use std::f64::consts::PI;

use decoheren_core::rates::quadrature::{principal_value, PvOptions};
use decoheren_core::rates::{angular_pv_average, RateDensities};
use decoheren_core::{
    compute_gamma, compute_s, compute_tau, potential_fourier, EnvironmentSpec, Error, PotentialSpec, QuadratureSettings,
    Segment,
};
use gauss_quad::legendre::GaussLegendre;

const MASS: f64 = 1e6;
const TEMP: f64 = 1.0;
const DENSITY: f64 = 1e3;
const COUPLING: f64 = 1e-3;
const MEDIATOR: f64 = 1e3;

fn env(wind: [f64; 3]) -> EnvironmentSpec {
    EnvironmentSpec {
        probe_mass: MASS,
        temperature: TEMP,
        number_density: DENSITY,
        wind_velocity: wind,
        potential: PotentialSpec::Yukawa { coupling: COUPLING, mediator_mass: MEDIATOR },
        interaction_time: 1e7,
    }
}

fn seg(dt: f64, dx: f64) -> Vec<Segment> {
    vec![Segment { duration: dt, delta_x: dx }]
}

fn yukawa2(q: f64) -> f64 {
    let v = COUPLING / (q * q + MEDIATOR * MEDIATOR);
    v * v
}

fn one_minus_sinc(x: f64) -> f64 {
    if x.abs() < 1e-3 {
        x * x / 6.0 - x.powi(4) / 120.0
    } else {
        1.0 - x.sin() / x
    }
}

/// Composite Gauss-Legendre with `panels` equal panels of order 20.
fn gl(a: f64, b: f64, panels: usize, f: impl Fn(f64) -> f64) -> f64 {
    let rule = GaussLegendre::new(20.try_into().unwrap());
    let h = (b - a) / panels as f64;
    (0..panels).map(|i| rule.integrate(a + i as f64 * h, a + (i + 1) as f64 * h, &f)).sum()
}

/// ∫ over [a, b] with panels graded geometrically away from `a`.
fn gl_graded(a: f64, b: f64, first: f64, f: impl Fn(f64) -> f64) -> f64 {
    let mut edges = vec![a];
    let mut step = first;
    while a + step < b {
        edges.push(a + step);
        step *= 1.5;
    }
    edges.push(b);
    edges.windows(2).map(|w| gl(w[0], w[1], 1, &f)).sum()
}

/// Speed × scattering-angle nested integral of the Born rate,
/// n ∫dv f(v) v ∫dΩ (m/2π)² |Ṽ(q)|² [1 − sinc(q δ)], with q = 2 m v sin(θ/2).
fn reference_s_rate(delta: f64) -> f64 {
    let vt = (TEMP / MASS).sqrt();
    let norm = (MASS / (2.0 * PI * TEMP)).powf(1.5);
    gl(0.0, 14.0 * vt, 400, |v| {
        let f = 4.0 * PI * v * v * norm * (-MASS * v * v / (2.0 * TEMP)).exp();
        let qmax = 2.0 * MASS * v;
        let solid = 2.0 * PI / (MASS * MASS * v * v)
            * gl(0.0, qmax, 40, |q| q * (MASS / (2.0 * PI)).powi(2) * yukawa2(q) * one_minus_sinc(q * delta));
        DENSITY * f * v * solid
    })
}

/// Isotropic ω_U from the speed integral of the angular log form.
fn reference_omega_u(q: f64) -> f64 {
    let sigma = (MASS * TEMP).sqrt();
    let dens = |p: f64| 4.0 * PI * p * p * (2.0 * PI * sigma * sigma).powf(-1.5) * (-p * p / (2.0 * sigma * sigma)).exp();
    let g = |p: f64| dens(p) * angular_pv_average(p, q);
    let pole = 0.5 * q;
    let top = 14.0 * sigma;
    let below = gl_graded(0.0, pole, 1e-9 * sigma, |u| g(pole - u));
    let above = gl_graded(0.0, (top - pole).max(0.0), 1e-9 * sigma, |u| g(pole + u));
    let inner = if pole < top { below + above } else { gl(0.0, top, 200, g) };
    -4.0 * MASS * DENSITY * yukawa2(q) * inner
}

fn reference_tau_rate(delta: f64) -> f64 {
    let sigma = (MASS * TEMP).sqrt();
    let f = |q: f64| q * q * reference_omega_u(q) * one_minus_sinc(q * delta);
    (gl(0.0, 40.0 * sigma, 160, f) + gl_graded(40.0 * sigma, 1e4 * sigma, 10.0 * sigma, f)) / (2.0 * PI * PI)
}

/// Dawson function D(y) = e^{−y²} ∫₀^y e^{t²} dt.
fn dawson(y: f64) -> f64 {
    (-y * y).exp() * gl(0.0, y, 200, |t| (t * t).exp())
}

#[test]
fn benchmark_s_matches_nested_reference() {
    let qs = QuadratureSettings::default();
    let s = compute_s(&env([0.0; 3]), &seg(1e6, 1e-3), &qs).unwrap();
    let reference = 1e6 * reference_s_rate(1e-3);
    assert!(s.value > 0.0);
    assert!((s.value / reference - 1.0).abs() < 1e-6, "{} vs {reference}", s.value);
}

#[test]
fn benchmark_tau_matches_log_form_reference() {
    let qs = QuadratureSettings::default();
    let tau = compute_tau(&env([0.0; 3]), &seg(1e6, 1e-3), &qs).unwrap();
    let reference = 1e6 * reference_tau_rate(1e-3);
    assert!(tau.value != 0.0);
    assert!((tau.value / reference - 1.0).abs() < 1e-6, "{} vs {reference}", tau.value);
}

#[test]
fn omega_u_matches_dawson_closed_form() {
    let dens = RateDensities::new(&env([0.0, 0.0, 2e-4])).unwrap();
    let sigma = dens.momentum_spread();
    let qs = QuadratureSettings::default();
    for (q, dir) in [(10.0, [0.0, 0.0, 1.0]), (800.0, [0.6, 0.0, -0.8]), (2500.0, [0.0, 1.0, 0.0]), (3e4, [0.0, 0.0, -1.0])] {
        let qv = [q * dir[0], q * dir[1], q * dir[2]];
        let mu = MASS * 2e-4 * dir[2];
        let b = -0.5 * q;
        let pv_mean = -(2.0f64.sqrt() / sigma) * dawson((b - mu) / (2.0f64.sqrt() * sigma));
        let expect = -2.0 * MASS * DENSITY / q * yukawa2(q) * pv_mean;
        let got = dens.omega_u(qv, &qs).unwrap();
        assert!((got / expect - 1.0).abs() < 1e-8, "q={q}: {got} vs {expect}");
    }
}

#[test]
fn angular_log_form_matches_direct_pv() {
    let opts = PvOptions { exclusion: 1e-3, panels_per_scale: 8.0, target_rel_error: 1e-6 };
    for (p, q) in [(1.0, 0.7), (2.0, 5.0), (0.3, 0.59), (10.0, 1.0)] {
        // (1/2) PV ∫dc 1/(2pqc + q²) over c = cos θ
        let c0 = -q / (2.0 * p);
        let direct = 0.5 * principal_value(|_| 1.0 / (2.0 * p * q), c0, -1.0, 1.0, 1.0, &opts, "test").unwrap();
        let closed = angular_pv_average(p, q);
        assert!((direct / closed - 1.0).abs() < 1e-6, "p={p} q={q}: {direct} vs {closed}");
    }
}

#[test]
fn isotropic_gamma_is_exactly_zero() {
    for dx in [1e-6, 1e-3, 1e-1] {
        assert_eq!(compute_gamma(&env([0.0; 3]), &seg(1e6, dx), &QuadratureSettings::default()).unwrap().value, 0.0);
    }
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.abs().ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let cov: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let var: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    cov / var
}

#[test]
fn small_separation_power_laws() {
    let qs = QuadratureSettings::default();
    let dxs = [1e-6, 2e-6, 4e-6, 8e-6];
    let s: Vec<f64> = dxs.iter().map(|&d| compute_s(&env([0.0; 3]), &seg(1e6, d), &qs).unwrap().value).collect();
    let g: Vec<f64> = dxs.iter().map(|&d| compute_gamma(&env([0.0, 0.0, 1e-4]), &seg(1e6, d), &qs).unwrap().value).collect();
    let (ks, kg) = (slope(&dxs, &s), slope(&dxs, &g));
    assert!((ks - 2.0).abs() < 0.05, "{ks}");
    assert!((kg - 1.0).abs() < 0.05, "{kg}");
}

#[test]
fn wind_reversal_flips_gamma() {
    let qs = QuadratureSettings::default();
    let up = compute_gamma(&env([0.0, 0.0, 1e-4]), &seg(1e6, 1e-3), &qs).unwrap().value;
    let down = compute_gamma(&env([0.0, 0.0, -1e-4]), &seg(1e6, 1e-3), &qs).unwrap().value;
    assert!(up != 0.0);
    assert!((up + down).abs() < 1e-9 * up.abs(), "{up} {down}");
}

#[test]
fn oblique_wind_uses_full_angles() {
    let qs = QuadratureSettings::default();
    let axial = compute_gamma(&env([0.0, 0.0, 1e-4]), &seg(1e6, 1e-3), &qs).unwrap().value;
    // same projection on the arm axis, extra transverse drift
    let oblique = compute_gamma(&env([1e-4, 0.0, 1e-4]), &seg(1e6, 1e-3), &qs).unwrap().value;
    let rotated = compute_gamma(&env([0.0, 1e-4, 1e-4]), &seg(1e6, 1e-3), &qs).unwrap().value;
    assert!(oblique != 0.0 && axial != 0.0);
    assert!((oblique / rotated - 1.0).abs() < 1e-6, "{oblique} {rotated}");
    let s_axial = compute_s(&env([0.0, 0.0, 1e-4]), &seg(1e6, 1e-3), &qs).unwrap().value;
    let s_iso = compute_s(&env([0.0; 3]), &seg(1e6, 1e-3), &qs).unwrap().value;
    assert!(s_axial > 0.0 && s_iso > 0.0);
}

#[test]
fn segment_splitting_is_additive() {
    let qs = QuadratureSettings::default();
    let e = env([0.0, 0.0, 1e-4]);
    let whole = vec![Segment { duration: 3e6, delta_x: 1e-3 }, Segment { duration: 1e6, delta_x: 2e-3 }];
    let split = vec![
        Segment { duration: 1e6, delta_x: 1e-3 },
        Segment { duration: 2e6, delta_x: 1e-3 },
        Segment { duration: 1e6, delta_x: 2e-3 },
    ];
    for f in [compute_s, compute_gamma, compute_tau] {
        let a = f(&e, &whole, &qs).unwrap().value;
        let b = f(&e, &split, &qs).unwrap().value;
        assert!((a - b).abs() <= 1e-10 * a.abs(), "{a} {b}");
    }
}

#[test]
fn coupling_squared_scaling() {
    let qs = QuadratureSettings::default();
    let mut e2 = env([0.0, 0.0, 1e-4]);
    e2.potential = PotentialSpec::Yukawa { coupling: 3.0 * COUPLING, mediator_mass: MEDIATOR };
    for f in [compute_s, compute_gamma, compute_tau] {
        let a = f(&env([0.0, 0.0, 1e-4]), &seg(1e6, 1e-3), &qs).unwrap().value;
        let b = f(&e2, &seg(1e6, 1e-3), &qs).unwrap().value;
        assert!((b / a - 9.0).abs() < 1e-9, "{a} {b}");
    }
}

#[test]
fn doubling_changes_less_than_target() {
    let qs = QuadratureSettings::default();
    let e = env([0.0, 0.0, 1e-4]);
    for f in [compute_s, compute_gamma, compute_tau] {
        let a = f(&e, &seg(1e6, 1e-3), &qs).unwrap();
        let b = f(&e, &seg(1e6, 1e-3), &qs.doubled()).unwrap();
        assert!((a.value - b.value).abs() <= 1e-6 * b.value.abs());
        assert!(a.abs_error <= 1e-6 * a.value.abs());
    }
}

#[test]
fn tabulated_potential_tracks_yukawa() {
    let qs = QuadratureSettings::default();
    let pot = PotentialSpec::Yukawa { coupling: COUPLING, mediator_mass: MEDIATOR };
    let samples: Vec<(f64, f64)> = (0..=60000).map(|i| i as f64).map(|q| (q, potential_fourier(q, &pot).unwrap())).collect();
    let mut e = env([0.0; 3]);
    let analytic = compute_s(&e, &seg(1e6, 1e-3), &qs).unwrap().value;
    e.potential = PotentialSpec::Tabulated { samples };
    let table = compute_s(&e, &seg(1e6, 1e-3), &qs).unwrap().value;
    assert!((table / analytic - 1.0).abs() < 1e-6, "{table} vs {analytic}");
}

#[test]
fn starved_quadrature_reports_non_convergence() {
    let qs = QuadratureSettings { speed_nodes: 16, angle_nodes: 1, ..Default::default() };
    let err = compute_gamma(&env([0.0, 0.0, 1e-2]), &seg(1e6, 1e-3), &qs).unwrap_err();
    assert!(matches!(err, Error::NonConvergent { integral: "gamma", .. }), "{err}");
}

