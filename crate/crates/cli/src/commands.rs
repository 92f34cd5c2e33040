//! Subcommand bodies. Each sweep point yields a small table; points run in
//! parallel and their tables are concatenated in sweep order.

use anyhow::{bail, Context, Result};
use decoheren_core::observables::{distribution_mean_variance, falling_factorial_exact, noon_port_distribution};
use decoheren_core::oracle::{oracle_check, OracleOptions, CHECK_MAX_ATOMS};
use decoheren_core::{
    compute_params, counting_distribution, expect_o_plus, moment, moment_coefficients, noon_fringe, sample_runs,
    variance_closed_form, visibility_phase, DecoherenceParams, PortProjector, StatePrep, ORACLE_MAX_ATOMS,
};
use rayon::prelude::*;

use crate::config::{ConfigError, RunConfig};
use crate::table::{Cell, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Rates,
    Observe,
    Moments { eta_max: u32 },
    Sample { runs: usize },
    OracleCheck,
}

/// Result of one subcommand over all sweep points.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub table: Table,
    /// Lines for stderr (sampling summaries, oracle verdicts).
    pub notes: Vec<String>,
    /// Set when an oracle comparison exceeded its tolerance.
    pub oracle_failed: bool,
}

struct Point {
    table: Table,
    notes: Vec<String>,
    oracle_failed: bool,
}

impl Point {
    fn table(table: Table) -> Self {
        Self { table, notes: Vec::new(), oracle_failed: false }
    }
}

/// (s, γ, τ, φ) for a config, integrating the environment when needed.
pub fn resolve_params(cfg: &RunConfig) -> Result<DecoherenceParams> {
    if let Some(p) = cfg.params_override() {
        return p;
    }
    let env = cfg.environment.as_ref().expect("validated config has an environment");
    let r = compute_params(env, &cfg.experiment.separation_profile, &cfg.quadrature)?;
    Ok(DecoherenceParams::new(r.s.value, r.gamma.value, r.tau.value, cfg.experiment.dynamical_phase)?)
}

pub fn execute(cmd: Command, cfg: &RunConfig, seed: u64) -> Result<Report> {
    let points: Vec<(Option<f64>, RunConfig)> = match &cfg.sweep {
        None => vec![(None, cfg.clone())],
        Some(sw) => sw
            .values
            .iter()
            .map(|&v| cfg.with_parameter(&sw.parameter, v).map(|c| (Some(v), c)))
            .collect::<Result<_>>()?,
    };
    let results: Vec<Point> = points
        .par_iter()
        .enumerate()
        .map(|(i, (value, c))| {
            let point_seed = seed.wrapping_add(i as u64);
            run_point(cmd, c, point_seed).with_context(|| match (value, &cfg.sweep) {
                (Some(v), Some(sw)) => format!("sweep point {}={v}", sw.parameter),
                _ => "run".to_string(),
            })
        })
        .collect::<Result<_>>()?;

    let mut report = Report { table: Table::default(), notes: Vec::new(), oracle_failed: false };
    for ((value, _), point) in points.iter().zip(results) {
        let t = match (value, &cfg.sweep) {
            (Some(v), Some(sw)) => point.table.with_leading(&format!("sweep_{}", sw.parameter), Cell::Float(*v)),
            _ => point.table,
        };
        if report.table.columns.is_empty() {
            report.table = t;
        } else {
            report.table.extend(t);
        }
        report.notes.extend(point.notes);
        report.oracle_failed |= point.oracle_failed;
    }
    Ok(report)
}

fn run_point(cmd: Command, cfg: &RunConfig, seed: u64) -> Result<Point> {
    match cmd {
        Command::Rates => rates(cfg).map(Point::table),
        Command::Observe => observe(cfg).map(Point::table),
        Command::Moments { eta_max } => moments(cfg, eta_max).map(Point::table),
        Command::Sample { runs } => sample(cfg, runs, seed),
        Command::OracleCheck => oracle(cfg),
    }
}

fn rates(cfg: &RunConfig) -> Result<Table> {
    let Some(env) = &cfg.environment else {
        return Err(ConfigError("`rates` needs an [environment] section".into()).into());
    };
    let r = compute_params(env, &cfg.experiment.separation_profile, &cfg.quadrature)?;
    let mut t = Table::new(&["s", "s_abs_error", "gamma", "gamma_abs_error", "tau", "tau_abs_error"]);
    t.push(vec![
        r.s.value.into(),
        r.s.abs_error.into(),
        r.gamma.value.into(),
        r.gamma.abs_error.into(),
        r.tau.value.into(),
        r.tau.abs_error.into(),
    ]);
    Ok(t)
}

fn variance_plus(cfg: &RunConfig, p: &DecoherenceParams) -> Result<f64> {
    if cfg.experiment.prep.is_balanced() {
        return Ok(variance_closed_form(&cfg.experiment, p)?);
    }
    let plus = PortProjector::plus();
    let m1 = moment(1, &cfg.experiment, p, &plus)?;
    let m2 = moment(2, &cfg.experiment, p, &plus)?;
    Ok(m2 - m1 * m1)
}

fn observe(cfg: &RunConfig) -> Result<Table> {
    let p = resolve_params(cfg)?;
    let spec = &cfg.experiment;
    let noon = matches!(spec.prep, StatePrep::Noon);
    let mut cols = vec!["n_atoms", "s", "gamma", "tau", "phi", "o_plus", "visibility", "phase", "variance"];
    if noon {
        cols.push("noon_fringe");
    }
    let (v, phase) = visibility_phase(spec, &p)?;
    let mut row: Vec<Cell> = vec![
        (spec.n_atoms as i64).into(),
        p.s.into(),
        p.gamma.into(),
        p.tau.into(),
        p.phi.into(),
        expect_o_plus(spec, &p)?.into(),
        v.into(),
        phase.into(),
        variance_plus(cfg, &p)?.into(),
    ];
    if noon {
        row.push(noon_fringe(spec.n_atoms as u64, &p).into());
    }
    let mut t = Table::new(&cols);
    t.push(row);
    Ok(t)
}

/// Σ_α C(η, α) N!/(N−α)! against N^η in exact integers.
fn sum_rule(eta: u32, n: u64, coeffs: &[u128]) -> &'static str {
    let lhs = coeffs.iter().enumerate().try_fold(0u128, |acc, (i, c)| {
        falling_factorial_exact(n, i as u64 + 1).and_then(|f| c.checked_mul(f)).and_then(|x| acc.checked_add(x))
    });
    match (lhs, (n as u128).checked_pow(eta)) {
        (Some(a), Some(b)) if a == b => "exact",
        (Some(_), Some(_)) => "mismatch",
        _ => "overflow",
    }
}

fn moments(cfg: &RunConfig, eta_max: u32) -> Result<Table> {
    if eta_max < 1 {
        return Err(ConfigError("--eta-max must be at least 1".into()).into());
    }
    let p = resolve_params(cfg)?;
    let port = cfg.port_projector()?;
    let n = cfg.experiment.n_atoms;
    let mut raw = vec![1.0];
    for eta in 1..=eta_max {
        raw.push(moment(eta, &cfg.experiment, &p, &port)?);
    }
    let mean = raw[1];
    let mut t = Table::new(&["eta", "raw_moment", "central_moment", "coefficients", "sum_rule"]);
    for eta in 1..=eta_max as usize {
        // μ_η = Σ_j binom(η, j) ⟨O^j⟩ (−mean)^{η−j}
        let mut binom = 1.0;
        let mut central = 0.0;
        for (j, r) in raw.iter().enumerate().take(eta + 1) {
            central += binom * r * (-mean).powi((eta - j) as i32);
            binom = binom * (eta - j) as f64 / (j + 1) as f64;
        }
        let c = moment_coefficients(eta as u32)?;
        let check = sum_rule(eta as u32, n as u64, &c.coeffs);
        if check == "mismatch" {
            bail!("moment coefficient sum rule failed for eta = {eta}, N = {n}");
        }
        let listed = c.coeffs.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(";");
        t.push(vec![(eta as i64).into(), raw[eta].into(), central.into(), listed.into(), check.into()]);
    }
    Ok(t)
}

fn sample(cfg: &RunConfig, runs: usize, seed: u64) -> Result<Point> {
    let n = cfg.experiment.n_atoms;
    if n > ORACLE_MAX_ATOMS {
        return Err(ConfigError(format!("sample needs n_atoms <= {ORACLE_MAX_ATOMS}, got {n}")).into());
    }
    let p = resolve_params(cfg)?;
    let port = cfg.port_projector()?;
    let dist = match cfg.experiment.prep {
        StatePrep::Noon => noon_port_distribution(n, &p, &port)?,
        StatePrep::Product { .. } => counting_distribution(&cfg.experiment, &p, &port)?,
    };
    let rep = sample_runs(&dist, runs, seed)?;
    let (mean, var) = distribution_mean_variance(&dist);
    let mut t = Table::new(&["run", "count"]);
    for (i, c) in rep.counts.iter().enumerate() {
        t.push(vec![(i as i64).into(), (*c as i64).into()]);
    }
    let note = format!(
        "runs={runs} seed={seed} mean={} ± {} variance={} ± {} (exact mean={mean} variance={var})",
        rep.mean, rep.mean_se, rep.variance, rep.variance_se
    );
    Ok(Point { table: t, notes: vec![note], oracle_failed: false })
}

fn oracle(cfg: &RunConfig) -> Result<Point> {
    let n = cfg.experiment.n_atoms;
    if n > CHECK_MAX_ATOMS {
        return Err(ConfigError(format!("oracle-check needs n_atoms <= {CHECK_MAX_ATOMS}, got {n}")).into());
    }
    let p = resolve_params(cfg)?;
    let report = oracle_check(&cfg.experiment, &p, OracleOptions { perturb_tau: cfg.oracle.perturb_tau })?;
    let mut t = Table::new(&["check", "worst_error", "worst_label", "tolerance", "passed"]);
    let mut notes = Vec::new();
    for c in &report.checks {
        t.push(vec![c.name.into(), c.worst_error.into(), c.worst_label.clone().into(), c.tolerance.into(), c.passed.into()]);
        if !c.passed {
            notes.push(format!(
                "oracle mismatch in {}: worst error {} at {} exceeds tolerance {}",
                c.name, c.worst_error, c.worst_label, c.tolerance
            ));
        }
    }
    Ok(Point { table: t, notes, oracle_failed: !report.passed() })
}
