//! Sectioned key/value configuration: parsing, validation, and conversion
//! into the library's scenario and solver types.
//!
//! Unknown keys are rejected with the offending key named; numeric bounds
//! are checked after parsing with the violating field named.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use locfuse::harness::{BiasMode, NoiseParams, Scenario};
use locfuse::{IsConfig, Method};

#[derive(Debug, Error)]
pub enum ConfigError {
    /// TOML-level failure; the message carries line/column context.
    #[error("config parse error: {0}")]
    Parse(String),

    /// A parsed value violates a documented bound.
    #[error("invalid config value for `{field}`: {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSection {
    pub hex_circumradius: f64,
    pub bs_height: f64,
    pub target_height: f64,
    /// "unbiased" or "biased".
    pub bias_mode: String,
    pub trials: usize,
    pub seed: u64,
    pub methods: Vec<String>,
    /// Draw one bias per station for the whole run instead of per trial.
    pub fixed_bias: bool,
    /// Report 3-D instead of horizontal error.
    pub error_3d: bool,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        Self {
            hex_circumradius: 50.0,
            bs_height: 10.0,
            target_height: 1.0,
            bias_mode: "unbiased".to_string(),
            trials: 1000,
            seed: 1,
            methods: Method::ALL.iter().map(|m| m.label().to_string()).collect(),
            fixed_bias: false,
            error_3d: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSection {
    pub sigma_d: f64,
    pub sigma_az_deg: f64,
    pub sigma_el_deg: f64,
    pub kappa: f64,
    pub bias_lo: f64,
    pub bias_hi: f64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self {
            sigma_d: 1.0,
            sigma_az_deg: 3.2,
            sigma_el_deg: 3.2,
            kappa: 10.0,
            bias_lo: 0.0,
            bias_hi: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub num_samples: usize,
    pub grid_nx: usize,
    pub grid_ny: usize,
    pub epsilon: f64,
    pub max_iters: usize,
    pub damping: f64,
    pub hessian_ridge: f64,
    /// Sample counts for the sweep-samples experiment, ascending.
    pub sweep_counts: Vec<usize>,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = IsConfig::default();
        Self {
            num_samples: d.num_samples,
            grid_nx: d.grid_nx,
            grid_ny: d.grid_ny,
            epsilon: d.epsilon,
            max_iters: d.max_iters,
            damping: d.damping,
            hessian_ridge: d.hessian_ridge,
            sweep_counts: vec![50, 100, 200, 500, 1000, 2000],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: String,
    /// "csv", "json", or "both".
    pub format: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: "out".to_string(),
            format: "both".to_string(),
        }
    }
}

/// The full experiment configuration; every field has a default matching
/// the stock three-station scenario.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: ScenarioSection,
    pub noise: NoiseSection,
    pub solver: SolverSection,
    pub output: OutputSection,
}

impl RunConfig {
    pub fn bias_mode(&self) -> Result<BiasMode, ConfigError> {
        match self.scenario.bias_mode.as_str() {
            "unbiased" => Ok(BiasMode::Unbiased),
            "biased" => Ok(BiasMode::Biased),
            other => Err(invalid(
                "bias_mode",
                format!("expected \"unbiased\" or \"biased\", got \"{other}\""),
            )),
        }
    }

    pub fn methods(&self) -> Result<Vec<Method>, ConfigError> {
        let mut methods = Vec::new();
        for name in &self.scenario.methods {
            let m: Method = name
                .parse()
                .map_err(|_| invalid("methods", format!("unknown method \"{name}\"")))?;
            if !methods.contains(&m) {
                methods.push(m);
            }
        }
        if methods.is_empty() {
            return Err(invalid("methods", "at least one method required"));
        }
        Ok(methods)
    }

    pub fn noise_params(&self) -> NoiseParams {
        NoiseParams {
            sigma_d: self.noise.sigma_d,
            sigma_az: self.noise.sigma_az_deg.to_radians(),
            sigma_el: self.noise.sigma_el_deg.to_radians(),
            kappa: self.noise.kappa,
            bias_lo: self.noise.bias_lo,
            bias_hi: self.noise.bias_hi,
        }
    }

    pub fn scenario(&self) -> Result<Scenario, ConfigError> {
        let mut scn = Scenario::three_station_hex(
            self.scenario.hex_circumradius,
            self.scenario.bs_height,
            self.scenario.target_height,
            &self.noise_params(),
            self.bias_mode()?,
        )
        .map_err(|e| invalid("scenario", e.to_string()))?;
        scn.num_trials = self.scenario.trials;
        scn.master_seed = self.scenario.seed;
        scn.redraw_bias_per_trial = !self.scenario.fixed_bias;
        scn.error_3d = self.scenario.error_3d;
        Ok(scn)
    }

    pub fn is_config(&self) -> IsConfig {
        IsConfig {
            num_samples: self.solver.num_samples,
            grid_nx: self.solver.grid_nx,
            grid_ny: self.solver.grid_ny,
            epsilon: self.solver.epsilon,
            max_iters: self.solver.max_iters,
            damping: self.solver.damping,
            hessian_ridge: self.solver.hessian_ridge,
        }
    }

    /// Bound checks with the violating field named.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let s = &self.scenario;
        if !(s.hex_circumradius > 0.0) || !s.hex_circumradius.is_finite() {
            return Err(invalid("hex_circumradius", "must be > 0 and finite"));
        }
        if !(s.bs_height >= 0.0) {
            return Err(invalid("bs_height", "must be >= 0"));
        }
        if !(s.target_height >= 0.0) {
            return Err(invalid("target_height", "must be >= 0"));
        }
        if s.trials == 0 {
            return Err(invalid("trials", "must be at least 1"));
        }
        self.bias_mode()?;
        self.methods()?;

        let n = &self.noise;
        for (field, v) in [
            ("sigma_d", n.sigma_d),
            ("sigma_az_deg", n.sigma_az_deg),
            ("sigma_el_deg", n.sigma_el_deg),
            ("kappa", n.kappa),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(invalid(field, format!("must be > 0 and finite, got {v}")));
            }
        }
        if !(n.bias_lo >= 0.0) || !(n.bias_lo < n.bias_hi) {
            return Err(invalid(
                "bias_lo",
                format!("requires 0 <= bias_lo < bias_hi, got ({}, {})", n.bias_lo, n.bias_hi),
            ));
        }

        let sv = &self.solver;
        if sv.num_samples < 2 {
            return Err(invalid("num_samples", "must be at least 2"));
        }
        if sv.grid_nx < 2 || sv.grid_ny < 2 {
            return Err(invalid("grid_nx", "grid must be at least 2x2"));
        }
        if !(sv.epsilon > 0.0) {
            return Err(invalid("epsilon", "must be > 0"));
        }
        if sv.max_iters == 0 {
            return Err(invalid("max_iters", "must be at least 1"));
        }
        if !(sv.damping > 0.0 && sv.damping <= 1.0) {
            return Err(invalid("damping", "must lie in (0, 1]"));
        }
        if !(sv.hessian_ridge >= 0.0) {
            return Err(invalid("hessian_ridge", "must be >= 0"));
        }
        if sv.sweep_counts.is_empty() || sv.sweep_counts.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("sweep_counts", "must be non-empty and strictly ascending"));
        }

        match self.output.format.as_str() {
            "csv" | "json" | "both" => {}
            other => {
                return Err(invalid(
                    "format",
                    format!("expected \"csv\", \"json\", or \"both\", got \"{other}\""),
                ))
            }
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}

/// Parses and bound-checks a configuration document. An empty document
/// yields the full default configuration.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}
