//! Run configuration: TOML or JSON, versioned by `schema_version`.

use std::fmt;
use std::path::Path;

use anyhow::{Context, Result};
use decoheren_core::{Complex64, DecoherenceParams, EnvironmentSpec, ExperimentSpec, PortProjector, PotentialSpec, QuadratureSettings};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

/// Parameters a sweep may vary.
pub const SWEEP_WHITELIST: &[&str] = &[
    "n_atoms",
    "dynamical_phase",
    "delta_x",
    "s",
    "gamma",
    "tau",
    "temperature",
    "number_density",
    "probe_mass",
    "interaction_time",
    "wind_x",
    "wind_y",
    "wind_z",
    "coupling",
    "mediator_mass",
];

/// A malformed or inconsistent configuration (exit code 2).
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn config_err(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

/// Environment overrides: φ always comes from `experiment.dynamical_phase`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsOverride {
    pub s: f64,
    pub gamma: f64,
    pub tau: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub parameter: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub format: Format,
    pub path: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PortSpec {
    pub a_left: Complex64,
    pub a_right: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleSpec {
    /// Offset added to τ in the closed-form path only; nonzero values must fail.
    pub perturb_tau: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub experiment: ExperimentSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub environment: Option<EnvironmentSpec>,
    #[serde(default, rename = "params", skip_serializing_if = "Option::is_none")]
    pub params_override: Option<ParamsOverride>,
    #[serde(default)]
    pub quadrature: QuadratureSettings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Sweep>,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub port: Option<PortSpec>,
    #[serde(default)]
    pub oracle: OracleSpec,
}

impl RunConfig {
    /// Parse TOML, or JSON when the text starts with `{` or the path ends in `.json`.
    pub fn parse(text: &str, json: bool) -> Result<Self> {
        let cfg: RunConfig = if json || text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| config_err(format!("invalid JSON config: {e}")))?
        } else {
            toml::from_str(text).map_err(|e| config_err(format!("invalid TOML config: {e}")))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let json = path.extension().is_some_and(|e| e == "json");
        Self::parse(&text, json).with_context(|| format!("loading {}", path.display()))
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(config_err(format!("unsupported schema_version {} (expected {SCHEMA_VERSION})", self.schema_version)));
        }
        match (&self.environment, &self.params_override) {
            (Some(_), Some(_)) => return Err(config_err("give exactly one of [environment] or [params], not both")),
            (None, None) => return Err(config_err("give exactly one of [environment] or [params]")),
            _ => {}
        }
        if let Some(sweep) = &self.sweep {
            check_sweep(sweep)?;
        }
        self.experiment.clone().validate().map_err(|e| config_err(e.to_string()))?;
        if let Some(env) = &self.environment {
            env.validate().map_err(|e| config_err(e.to_string()))?;
        }
        if let Some(p) = &self.params_override {
            self.decoherence_params_from(p).map_err(|e| config_err(e.to_string()))?;
        }
        self.quadrature.validate().map_err(|e| config_err(e.to_string()))?;
        self.port_projector()?;
        if !self.oracle.perturb_tau.is_finite() {
            return Err(config_err("oracle.perturb_tau must be finite"));
        }
        Ok(())
    }

    fn decoherence_params_from(&self, p: &ParamsOverride) -> decoheren_core::Result<DecoherenceParams> {
        DecoherenceParams::new(p.s, p.gamma, p.tau, self.experiment.dynamical_phase)
    }

    /// Port state for moments and sampling; |+⟩ when absent.
    pub fn port_projector(&self) -> Result<PortProjector> {
        match self.port {
            None => Ok(PortProjector::plus()),
            Some(p) => PortProjector::new(p.a_left, p.a_right).map_err(|e| config_err(e.to_string())),
        }
    }

    /// (s, γ, τ, φ) from the override, or `None` when an environment must be integrated.
    pub fn params_override(&self) -> Option<Result<DecoherenceParams>> {
        self.params_override.as_ref().map(|p| self.decoherence_params_from(p).map_err(|e| config_err(e.to_string())))
    }

    /// Copy of this config with one whitelisted parameter set to `value`.
    pub fn with_parameter(&self, name: &str, value: f64) -> Result<Self> {
        let mut c = self.clone();
        match name {
            "n_atoms" => {
                if !(value >= 1.0 && value.fract() == 0.0 && value <= u32::MAX as f64) {
                    return Err(config_err(format!("n_atoms must be a positive integer, got {value}")));
                }
                c.experiment.n_atoms = value as usize;
            }
            "dynamical_phase" => c.experiment.dynamical_phase = value,
            "delta_x" => c.experiment.separation_profile.iter_mut().for_each(|s| s.delta_x = value),
            "s" => override_field(&mut c, name)?.s = value,
            "gamma" => override_field(&mut c, name)?.gamma = value,
            "tau" => override_field(&mut c, name)?.tau = value,
            "temperature" => env_field(&mut c, name)?.temperature = value,
            "number_density" => env_field(&mut c, name)?.number_density = value,
            "probe_mass" => env_field(&mut c, name)?.probe_mass = value,
            "interaction_time" => env_field(&mut c, name)?.interaction_time = value,
            "wind_x" => env_field(&mut c, name)?.wind_velocity[0] = value,
            "wind_y" => env_field(&mut c, name)?.wind_velocity[1] = value,
            "wind_z" => env_field(&mut c, name)?.wind_velocity[2] = value,
            "coupling" | "mediator_mass" => match &mut env_field(&mut c, name)?.potential {
                PotentialSpec::Yukawa { coupling, mediator_mass } => {
                    *if name == "coupling" { coupling } else { mediator_mass } = value;
                }
                PotentialSpec::Tabulated { .. } => return Err(config_err(format!("`{name}` applies to Yukawa potentials only"))),
            },
            other => return Err(config_err(format!("unknown sweep parameter `{other}`; allowed: {}", SWEEP_WHITELIST.join(", ")))),
        }
        c.sweep = None;
        c.validate()?;
        Ok(c)
    }
}

fn env_field<'a>(c: &'a mut RunConfig, name: &str) -> Result<&'a mut EnvironmentSpec> {
    c.environment.as_mut().ok_or_else(|| config_err(format!("sweep parameter `{name}` needs [environment]")))
}

fn override_field<'a>(c: &'a mut RunConfig, name: &str) -> Result<&'a mut ParamsOverride> {
    c.params_override.as_mut().ok_or_else(|| config_err(format!("sweep parameter `{name}` needs [params]")))
}

fn check_sweep(sweep: &Sweep) -> Result<()> {
    if !SWEEP_WHITELIST.contains(&sweep.parameter.as_str()) {
        return Err(config_err(format!(
            "unknown sweep parameter `{}`; allowed: {}",
            sweep.parameter,
            SWEEP_WHITELIST.join(", ")
        )));
    }
    if sweep.values.is_empty() {
        return Err(config_err("sweep needs at least one value"));
    }
    if let Some(v) = sweep.values.iter().find(|v| !v.is_finite()) {
        return Err(config_err(format!("sweep value {v} is not finite")));
    }
    Ok(())
}

/// Parse `--sweep name=v1,v2,...`.
pub fn parse_sweep_arg(arg: &str) -> Result<Sweep> {
    let (name, list) = arg.split_once('=').ok_or_else(|| config_err(format!("--sweep expects name=v1,v2,..., got `{arg}`")))?;
    let values = list
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| config_err(format!("bad sweep value `{v}`: {e}"))))
        .collect::<Result<Vec<f64>>>()?;
    let sweep = Sweep { parameter: name.trim().to_string(), values };
    check_sweep(&sweep)?;
    Ok(sweep)
}
