//! Tabulated h(z) = PV E[1/(Y − z)] for a standard normal Y.
//!
//! Every ω_U evaluation needs PV E[1/(p∥ + q/2)] with p∥ ~ N(μ, σ²), which is
//! h((−q/2 − μ)/σ)/σ. h is odd and smooth, so it is sampled once per set of
//! PV options with the principal-value integrator on Chebyshev panels and
//! interpolated barycentrically. Beyond `Z_MAX` the asymptotic series is exact
//! to rounding.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;

use super::quadrature::{principal_value, PvOptions};
use super::GAUSS_REACH;
use crate::error::Result;

const DEGREE: usize = 16;
const PANEL: f64 = 0.25;
const Z_MAX: f64 = 40.0;

#[derive(Debug)]
pub(crate) struct PvTable {
    panels: Vec<[f64; DEGREE + 1]>,
}

fn cheb_node(j: usize) -> f64 {
    (j as f64 * PI / DEGREE as f64).cos()
}

fn std_normal(y: f64) -> f64 {
    (-0.5 * y * y).exp() / (2.0 * PI).sqrt()
}

/// Direct PV quadrature of h at one point.
pub(crate) fn h_direct(z: f64, opts: &PvOptions) -> Result<f64> {
    let (lo, hi) = (-GAUSS_REACH, GAUSS_REACH);
    let (a, b) = if z.abs() > GAUSS_REACH + 1.0 { (lo, hi) } else { (lo.min(z - 1.0), hi.max(z + 1.0)) };
    principal_value(std_normal, z, a, b, 1.0, opts, "tau")
}

fn asymptotic(z: f64) -> f64 {
    // −Σ (2k−1)!!/z^{2k+1}
    let inv2 = 1.0 / (z * z);
    let (mut term, mut sum) = (1.0 / z, 0.0f64);
    let mut k = 0.0;
    while term.abs() > 1e-18 * sum.abs().max(1e-300) && k < 60.0 {
        sum += term;
        k += 1.0;
        term *= (2.0 * k - 1.0) * inv2;
    }
    -sum
}

impl PvTable {
    fn build(opts: &PvOptions) -> Result<Self> {
        let count = (Z_MAX / PANEL).round() as usize;
        let panels = (0..count)
            .into_par_iter()
            .map(|i| {
                let mid = (i as f64 + 0.5) * PANEL;
                let mut vals = [0.0; DEGREE + 1];
                for (j, v) in vals.iter_mut().enumerate() {
                    *v = h_direct(mid + 0.5 * PANEL * cheb_node(j), opts)?;
                }
                Ok(vals)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { panels })
    }

    pub(crate) fn eval(&self, z: f64) -> f64 {
        let (sign, x) = if z < 0.0 { (-1.0, -z) } else { (1.0, z) };
        if x >= Z_MAX {
            return sign * asymptotic(x);
        }
        let i = ((x / PANEL) as usize).min(self.panels.len() - 1);
        let t = (x - (i as f64 + 0.5) * PANEL) / (0.5 * PANEL);
        let vals = &self.panels[i];
        let (mut num, mut den) = (0.0, 0.0);
        for (j, &v) in vals.iter().enumerate() {
            let d = t - cheb_node(j);
            if d == 0.0 {
                return sign * v;
            }
            let mut w = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == DEGREE {
                w *= 0.5;
            }
            num += w / d * v;
            den += w / d;
        }
        sign * num / den
    }

    /// Shared table for `opts`, built on first use.
    pub(crate) fn get(opts: &PvOptions) -> Result<Arc<PvTable>> {
        static CACHE: OnceLock<Mutex<HashMap<[u64; 3], Arc<PvTable>>>> = OnceLock::new();
        let key = [opts.exclusion.to_bits(), opts.panels_per_scale.to_bits(), opts.target_rel_error.to_bits()];
        let cache = CACHE.get_or_init(Default::default);
        if let Some(t) = cache.lock().unwrap().get(&key) {
            return Ok(t.clone());
        }
        let table = Arc::new(Self::build(opts)?);
        cache.lock().unwrap().insert(key, table.clone());
        Ok(table)
    }
}
