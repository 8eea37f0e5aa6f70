//! Flat `key = value` run configuration.
//!
//! Values come from an optional config file and are then overridden by
//! command-line flags. Every key is checked against [`KNOWN_KEYS`] and every
//! value is parsed and range-checked before any model runs.

use std::collections::BTreeMap;
use std::path::Path;

use qkd_ratelab::{
    Axis, CvDeviceParams, DvDeviceParams, FiberSpec, Model, ModelParams, OptimizerConfig, Scenario,
};

use crate::CliError;

pub const KNOWN_KEYS: &[&str] = &[
    "model",
    "scenario",
    "axis",
    "start",
    "stop",
    "points",
    "loss_db",
    "distance_km",
    "l_a",
    "l_b",
    "mu_a",
    "mu_b",
    "optimize",
    "out",
    "svg",
    "csv",
    "lo",
    "hi",
    "figure",
    "out_dir",
    "fig2.eta_d_values",
    "dv.eta_d",
    "dv.e_d",
    "dv.y0",
    "dv.f_e",
    "cv.eta_d",
    "cv.epsilon",
    "cv.phi",
    "cv.xi",
    "fiber.alpha",
    "optimizer.mu_min",
    "optimizer.mu_max",
    "optimizer.grid_points",
    "optimizer.refine_iterations",
    "optimizer.refine_tolerance",
    "optimizer.seed",
    "optimizer.restarts",
];

#[derive(Debug, Clone, Default)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn parse_str(text: &str) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Validation(format!(
                    "config line {}: expected `key = value`, got `{}`",
                    lineno + 1,
                    raw.trim()
                )));
            };
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse_str(&text)
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<(), CliError> {
        if !KNOWN_KEYS.contains(&key) {
            return Err(CliError::Validation(format!("unknown configuration key `{key}`")));
        }
        self.values.insert(key.to_owned(), value.into());
        Ok(())
    }

    /// Applies `Some` overrides on top of the current values.
    pub fn overlay<'a>(
        &mut self,
        overrides: impl IntoIterator<Item = (&'a str, Option<String>)>,
    ) -> Result<(), CliError> {
        for (key, value) in overrides {
            if let Some(v) = value {
                self.set(key, v)?;
            }
        }
        Ok(())
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn has(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    fn invalid(key: &str, value: &str, what: &str) -> CliError {
        CliError::Validation(format!("invalid value `{value}` for `{key}`: {what}"))
    }

    pub fn f64(&self, key: &str) -> Result<Option<f64>, CliError> {
        self.raw(key)
            .map(|v| match v.parse::<f64>() {
                Ok(x) if x.is_finite() => Ok(x),
                _ => Err(Self::invalid(key, v, "expected a finite number")),
            })
            .transpose()
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, CliError> {
        Ok(self.f64(key)?.unwrap_or(default))
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize, CliError> {
        self.raw(key)
            .map(|v| v.parse::<usize>().map_err(|_| Self::invalid(key, v, "expected a non-negative integer")))
            .transpose()
            .map(|o| o.unwrap_or(default))
    }

    pub fn bool_or(&self, key: &str, default: bool) -> Result<bool, CliError> {
        match self.raw(key) {
            None => Ok(default),
            Some("true" | "yes" | "1") => Ok(true),
            Some("false" | "no" | "0") => Ok(false),
            Some(v) => Err(Self::invalid(key, v, "expected true or false")),
        }
    }

    pub fn required(&self, key: &str) -> Result<&str, CliError> {
        self.raw(key)
            .ok_or_else(|| CliError::Validation(format!("missing required key `{key}`")))
    }

    pub fn model(&self) -> Result<Model, CliError> {
        let v = self.required("model")?;
        v.parse().map_err(|_| Self::invalid("model", v, "expected dv, cv or tgw"))
    }

    pub fn scenario(&self) -> Result<Scenario, CliError> {
        match self.raw("scenario") {
            None => Ok(Scenario::Symmetric),
            Some(v) => v
                .parse()
                .map_err(|_| Self::invalid("scenario", v, "expected asymmetric or symmetric")),
        }
    }

    pub fn axis(&self) -> Result<Axis, CliError> {
        match self.raw("axis") {
            None => Ok(Axis::TotalLossDb),
            Some(v) => v.parse().map_err(|_| Self::invalid("axis", v, "expected loss or distance")),
        }
    }

    pub fn fiber(&self) -> Result<FiberSpec, CliError> {
        let alpha = self.f64_or("fiber.alpha", FiberSpec::default().alpha())?;
        FiberSpec::new(alpha).map_err(|e| field_error("fiber.alpha", e))
    }

    pub fn model_params(&self) -> Result<ModelParams, CliError> {
        let dv0 = DvDeviceParams::default();
        let dv = DvDeviceParams::new(
            self.f64_or("dv.eta_d", dv0.eta_d())?,
            self.f64_or("dv.e_d", dv0.e_d())?,
            self.f64_or("dv.y0", dv0.y0())?,
            self.f64_or("dv.f_e", dv0.f_e())?,
        )
        .map_err(|e| prefixed_error("dv", e))?;

        let cv0 = CvDeviceParams::default();
        let cv = CvDeviceParams::new(
            self.f64_or("cv.eta_d", cv0.eta_d())?,
            self.f64_or("cv.epsilon", cv0.epsilon())?,
            self.f64_or("cv.phi", cv0.phi())?,
            self.f64_or("cv.xi", cv0.xi())?,
        )
        .map_err(|e| prefixed_error("cv", e))?;

        let o = OptimizerConfig::default();
        let optimizer = OptimizerConfig {
            mu_min: self.f64_or("optimizer.mu_min", o.mu_min)?,
            mu_max: self.f64_or("optimizer.mu_max", o.mu_max)?,
            grid_points: self.usize_or("optimizer.grid_points", o.grid_points)?,
            refine_iterations: self.usize_or("optimizer.refine_iterations", o.refine_iterations)?,
            refine_tolerance: self.f64_or("optimizer.refine_tolerance", o.refine_tolerance)?,
            seed: self.usize_or("optimizer.seed", o.seed as usize)? as u64,
            restarts: self.usize_or("optimizer.restarts", o.restarts)?,
        };
        optimizer.validate().map_err(|e| prefixed_error("optimizer", e))?;

        Ok(ModelParams { dv, cv, optimizer })
    }
}

/// Turns a library validation error into one that names the config key.
fn prefixed_error(section: &str, e: qkd_ratelab::Error) -> CliError {
    match e {
        qkd_ratelab::Error::Domain { name, value, expected } => CliError::Validation(format!(
            "invalid value `{value}` for `{section}.{name}`: expected {expected}"
        )),
        other => CliError::Validation(format!("{section}: {other}")),
    }
}

fn field_error(key: &str, e: qkd_ratelab::Error) -> CliError {
    CliError::Validation(format!("`{key}`: {e}"))
}
