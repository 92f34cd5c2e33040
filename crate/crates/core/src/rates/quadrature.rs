//! Composite Gauss-Legendre rules and a principal-value integrator.

use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::legendre::GaussLegendre;

use crate::error::{Error, Result};

/// Points per Gauss-Legendre panel.
pub const PANEL_ORDER: usize = 16;

fn rule() -> &'static [(f64, f64)] {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(NonZeroUsize::new(PANEL_ORDER).unwrap())).as_node_weight_pairs()
}

/// Nodes and weights of one panel mapped onto [a, b].
pub fn panel(a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> {
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    rule().iter().map(move |&(x, w)| (mid + half * x, half * w))
}

/// Composite rule over consecutive breakpoints.
pub fn nodes_on(breaks: &[f64]) -> Vec<(f64, f64)> {
    breaks.windows(2).filter(|w| w[1] > w[0]).flat_map(|w| panel(w[0], w[1])).collect()
}

pub fn integrate(breaks: &[f64], mut f: impl FnMut(f64) -> f64) -> f64 {
    let mut total = 0.0;
    for w in breaks.windows(2).filter(|w| w[1] > w[0]) {
        let mut part = 0.0;
        for (x, wt) in panel(w[0], w[1]) {
            part += wt * f(x);
        }
        total += part;
    }
    total
}

/// `count` equal panels on [a, b].
pub fn uniform_breaks(a: f64, b: f64, count: usize) -> Vec<f64> {
    let count = count.max(1);
    (0..=count).map(|i| a + (b - a) * i as f64 / count as f64).collect()
}

/// Breakpoints a + d·2^k for k = 0.. until b, starting at distance `d` from `a`.
/// The first panel is [a, a + d].
pub fn graded_breaks(a: f64, b: f64, d: f64) -> Vec<f64> {
    let mut out = vec![a];
    let mut step = d;
    while a + step < b {
        out.push(a + step);
        step *= 2.0;
    }
    out.push(b);
    out
}

/// Sort, deduplicate and clip breakpoints to [lo, hi].
pub fn merge_breaks(mut pts: Vec<f64>, lo: f64, hi: f64) -> Vec<f64> {
    pts.retain(|p| p.is_finite() && *p > lo && *p < hi);
    pts.push(lo);
    pts.push(hi);
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * b.abs().max(1e-300));
    pts
}

/// Controls for [`principal_value`].
#[derive(Debug, Clone, Copy)]
pub struct PvOptions {
    /// Exclusion half-width as a fraction of `scale`.
    pub exclusion: f64,
    /// Panels per `scale` on the regular pieces.
    pub panels_per_scale: f64,
    pub target_rel_error: f64,
}

/// PV ∫_a^b f(x)/(x − x0) dx for f smooth on [a, b] and varying on length `scale`.
///
/// The pole neighbourhood [x0 − d, x0 + d] is folded onto u ∈ (0, d] as
/// (f(x0+u) − f(x0−u))/u, which is even in u. Dropping u < ε·w therefore leaves
/// an error with odd powers of ε only; three windows ε, ε/2, ε/4 and two
/// Richardson stages remove the ε and ε³ terms.
pub fn principal_value(
    f: impl Fn(f64) -> f64,
    x0: f64,
    a: f64,
    b: f64,
    scale: f64,
    opts: &PvOptions,
    integral: &'static str,
) -> Result<f64> {
    let step = scale / opts.panels_per_scale;
    if !(x0 > a && x0 < b) {
        // pole outside: regular integral, graded towards the end nearest x0
        let g = |x: f64| f(x) / (x - x0);
        let breaks = if x0 <= a {
            let near = graded_breaks(a, b, (a - x0).max(1e-15 * scale));
            merge_breaks([near, uniform_breaks(a, b, ((b - a) / step).ceil() as usize)].concat(), a, b)
        } else {
            let near: Vec<f64> = graded_breaks(0.0, b - a, (x0 - b).max(1e-15 * scale)).iter().map(|t| b - t).collect();
            merge_breaks([near, uniform_breaks(a, b, ((b - a) / step).ceil() as usize)].concat(), a, b)
        };
        return Ok(integrate(&breaks, g));
    }
    let d = (x0 - a).min(b - x0);
    let w = d.min(scale);
    let pair = |u: f64| (f(x0 + u) - f(x0 - u)) / u;
    let mut fmax = 0.0f64;

    // symmetric region beyond the window
    let mid_breaks = uniform_breaks(w, d, ((d - w) / step).ceil() as usize);
    let mid = if d > w { integrate(&mid_breaks, pair) } else { 0.0 };

    // one-sided remainder, graded away from the pole
    let tail = if x0 + d < b {
        let br = merge_breaks(
            [graded_breaks(x0 + d, b, d.max(1e-15 * scale)), uniform_breaks(x0 + d, b, ((b - x0 - d) / step).ceil() as usize)].concat(),
            x0 + d,
            b,
        );
        integrate(&br, |x| {
            let v = f(x);
            fmax = fmax.max(v.abs());
            v / (x - x0)
        })
    } else if x0 - d > a {
        let br = merge_breaks(
            [
                graded_breaks(0.0, x0 - d - a, d.max(1e-15 * scale)).iter().map(|t| x0 - d - t).collect::<Vec<_>>(),
                uniform_breaks(a, x0 - d, ((x0 - d - a) / step).ceil() as usize),
            ]
            .concat(),
            a,
            x0 - d,
        );
        integrate(&br, |x| {
            let v = f(x);
            fmax = fmax.max(v.abs());
            v / (x - x0)
        })
    } else {
        0.0
    };

    // window [εw, w] in t = ln u
    let inner = |eps: f64| {
        let (t0, t1) = ((eps * w).ln(), w.ln());
        let panels = ((t1 - t0) / 2.0).ceil() as usize;
        integrate(&uniform_breaks(t0, t1, panels), |t| {
            let u = t.exp();
            pair(u) * u
        })
    };
    let eps = opts.exclusion;
    let (i1, i2, i4) = (inner(eps), inner(eps / 2.0), inner(eps / 4.0));
    let r1 = 2.0 * i2 - i1;
    let r2 = 2.0 * i4 - i2;
    let window = (8.0 * r2 - r1) / 7.0;
    let total = window + mid + tail;

    fmax = fmax.max(f(x0).abs()).max(f(x0 + w).abs()).max(f(x0 - w).abs());
    let tol = opts.target_rel_error * (total.abs() + fmax);
    let spread = (r2 - r1).abs();
    if spread > tol {
        return Err(Error::PvWindowSensitivity { integral, rel_change: spread / (total.abs() + fmax).max(1e-300), tolerance: opts.target_rel_error });
    }
    Ok(total)
}
