use std::path::{Path, PathBuf};

use sbc_core::blockmap::log_range;
use sbc_core::{BlockMapConfig, HCorrection, IntegratorConfig, MassParams};
use serde::{Deserialize, Serialize};

use crate::failure::Failure;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogRange {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

/// Offsets as an explicit list or as `{"min", "max", "count"}` spaced logarithmically.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Offsets {
    List(Vec<f64>),
    Range(LogRange),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub masses: [f64; 4],
    pub delta: f64,
    pub h_star: [f64; 2],
    pub y_star: f64,
    pub offsets: Offsets,
    pub integrator: IntegratorConfig,
    pub outputs: PathBuf,
    pub seed: u64,
    pub chart_degree: usize,
    pub tube_radius: f64,
    pub uncoupled: bool,
    /// `sbc blockmap` fails when the fitted exponent leaves this band.
    pub exponent_band: [f64; 2],
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let bm = BlockMapConfig::default();
        ExperimentConfig {
            masses: bm.masses.as_array(),
            delta: bm.delta,
            h_star: bm.h_star,
            y_star: bm.y_star,
            offsets: Offsets::Range(LogRange { min: 1e-3, max: 3e-2, count: 12 }),
            integrator: bm.integrator,
            outputs: PathBuf::from("sbc-out"),
            seed: 0,
            chart_degree: bm.chart_degree,
            tube_radius: bm.tube_radius,
            uncoupled: false,
            exponent_band: [2.63, 2.71],
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, Failure> {
        let cfg = match path {
            None => ExperimentConfig::default(),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Failure::new("io", format!("cannot read config {}: {e}", p.display())))?;
                serde_json::from_str(&text).map_err(|e| Failure::new("config", format!("{}: {e}", p.display())))?
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), Failure> {
        self.mass_params()?;
        self.block_map_config()?.validate()?;
        self.offsets()?;
        let [lo, hi] = self.exponent_band;
        if !(lo < hi) {
            return Err(Failure::new("config", "exponent_band must be increasing"));
        }
        Ok(())
    }

    pub fn mass_params(&self) -> Result<MassParams, Failure> {
        let [a, b, c, d] = self.masses;
        Ok(MassParams::new(a, b, c, d)?)
    }

    pub fn block_map_config(&self) -> Result<BlockMapConfig, Failure> {
        Ok(BlockMapConfig {
            masses: self.mass_params()?,
            delta: self.delta,
            h_star: self.h_star,
            y_star: self.y_star,
            integrator: self.integrator,
            chart_degree: self.chart_degree,
            tube_radius: self.tube_radius,
            uncoupled: self.uncoupled,
            h_correction: HCorrection::Resummed,
        })
    }

    pub fn offsets(&self) -> Result<Vec<f64>, Failure> {
        let v = match &self.offsets {
            Offsets::List(v) => v.clone(),
            Offsets::Range(r) => log_range(r.min, r.max, r.count)?,
        };
        if v.is_empty() || v.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Failure::new("config", "offsets must be a non-empty list of positive numbers"));
        }
        Ok(v)
    }
}
