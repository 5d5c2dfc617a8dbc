//! Run configuration: JSON file values, command-line overrides, defaults.
//!
//! Every field is optional. Values are resolved as flag, then (for the seed)
//! the `QSUPPRESS_SEED` environment variable, then the config file, then the
//! built-in default. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use qsuppress_core::optimize::AnnealConfig;
use qsuppress_core::protocol::default_branch_count;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const DEFAULT_GRID_POINTS: usize = 11;
pub const DEFAULT_SAMPLES: usize = 100_000;
pub const DEFAULT_INSTANCES: usize = 100;
pub const DEFAULT_EPSILON: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum NamedProtocol {
    /// Do nothing: identity instrument and corrections.
    Dn,
    /// Discriminate in the computational basis and reprepare.
    Dr,
    /// Random valid protocol drawn from the seed.
    Random,
}

impl NamedProtocol {
    pub fn label(self) -> &'static str {
        match self {
            NamedProtocol::Dn => "dn",
            NamedProtocol::Dr => "dr",
            NamedProtocol::Random => "random",
        }
    }
}

/// Annealing parameters; see [`AnnealConfig`] for their meaning.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnealSection {
    pub lambda: Option<f64>,
    pub restarts: Option<usize>,
    pub steps: Option<usize>,
    pub initial_temperature: Option<f64>,
    pub cooling: Option<f64>,
    pub step_size: Option<f64>,
    pub adaptive_step: Option<bool>,
    pub lambda_start: Option<f64>,
    pub ramp_fraction: Option<f64>,
    pub projection_interval: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dim: Option<usize>,
    pub branches: Option<usize>,
    pub epsilon: Option<f64>,
    /// Explicit noise strengths for `sweep`.
    pub grid: Option<Vec<f64>>,
    /// Evenly spaced points on `[0, 1]` when no explicit grid is given.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_points: Option<usize>,
    pub samples: Option<usize>,
    /// Random cases per `verify` suite.
    pub instances: Option<usize>,
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub format: Option<OutputFormat>,
    pub protocol: Option<NamedProtocol>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub protocol_file: Option<PathBuf>,
    pub anneal: Option<AnnealSection>,
}

fn pick<T>(flag: Option<T>, file: Option<T>) -> Option<T> {
    flag.or(file)
}

impl AnnealSection {
    pub fn overlay(self, base: AnnealSection) -> AnnealSection {
        AnnealSection {
            lambda: pick(self.lambda, base.lambda),
            restarts: pick(self.restarts, base.restarts),
            steps: pick(self.steps, base.steps),
            initial_temperature: pick(self.initial_temperature, base.initial_temperature),
            cooling: pick(self.cooling, base.cooling),
            step_size: pick(self.step_size, base.step_size),
            adaptive_step: pick(self.adaptive_step, base.adaptive_step),
            lambda_start: pick(self.lambda_start, base.lambda_start),
            ramp_fraction: pick(self.ramp_fraction, base.ramp_fraction),
            projection_interval: pick(self.projection_interval, base.projection_interval),
        }
    }

    fn resolve(&self, seed: u64) -> AnnealConfig {
        let d = AnnealConfig::default();
        AnnealConfig {
            lambda: self.lambda.unwrap_or(d.lambda),
            restarts: self.restarts.unwrap_or(d.restarts),
            steps: self.steps.unwrap_or(d.steps),
            initial_temperature: self.initial_temperature.unwrap_or(d.initial_temperature),
            cooling: self.cooling.unwrap_or(d.cooling),
            step_size: self.step_size.unwrap_or(d.step_size),
            adaptive_step: self.adaptive_step.unwrap_or(d.adaptive_step),
            lambda_start: self.lambda_start.unwrap_or(d.lambda_start),
            ramp_fraction: self.ramp_fraction.unwrap_or(d.ramp_fraction),
            projection_interval: self.projection_interval.unwrap_or(d.projection_interval),
            seed,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Usage(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    /// `self` (the flags) wins wherever it has a value. An explicit grid and
    /// a point count exclude each other, so a flag for either one drops the
    /// other from the file.
    pub fn overlay(self, base: RunConfig) -> RunConfig {
        let (grid, grid_points) = if self.grid.is_some() || self.grid_points.is_some() {
            (self.grid, self.grid_points)
        } else {
            (base.grid, base.grid_points)
        };
        let anneal = match (self.anneal, base.anneal) {
            (Some(a), Some(b)) => Some(a.overlay(b)),
            (a, b) => a.or(b),
        };
        RunConfig {
            dim: pick(self.dim, base.dim),
            branches: pick(self.branches, base.branches),
            epsilon: pick(self.epsilon, base.epsilon),
            grid,
            grid_points,
            samples: pick(self.samples, base.samples),
            instances: pick(self.instances, base.instances),
            seed: pick(self.seed, base.seed),
            output: pick(self.output, base.output),
            format: pick(self.format, base.format),
            protocol: pick(self.protocol, base.protocol),
            protocol_file: pick(self.protocol_file, base.protocol_file),
            anneal,
        }
    }

    /// Fills defaults and checks ranges.
    pub fn resolve(&self) -> Result<Settings, CliError> {
        let usage = |m: String| Err(CliError::Usage(m));
        let dim = self.dim.unwrap_or(2);
        if dim < 2 {
            return usage(format!("dim must be at least 2, got {dim}"));
        }
        let branches = self.branches.unwrap_or_else(|| default_branch_count(dim));
        let epsilon = self.epsilon.unwrap_or(DEFAULT_EPSILON);
        let grid = match (&self.grid, self.grid_points) {
            (Some(_), Some(_)) => return usage("give either grid or grid_points, not both".into()),
            (Some(g), None) => g.clone(),
            (None, points) => {
                let n = points.unwrap_or(DEFAULT_GRID_POINTS);
                if n < 2 {
                    return usage(format!("grid_points must be at least 2, got {n}"));
                }
                (0..n).map(|k| k as f64 / (n - 1) as f64).collect()
            }
        };
        if grid.is_empty() {
            return usage("grid must not be empty".into());
        }
        for e in grid.iter().chain([&epsilon]) {
            if !(0.0..=1.0).contains(e) {
                return usage(format!("noise strength {e} lies outside [0, 1]"));
            }
        }
        let seed = self.seed.unwrap_or(0);
        let settings = Settings {
            dim,
            branches,
            epsilon,
            grid,
            samples: self.samples.unwrap_or(DEFAULT_SAMPLES),
            instances: self.instances.unwrap_or(DEFAULT_INSTANCES),
            seed,
            output: self.output.clone(),
            format: self.format.unwrap_or(OutputFormat::Csv),
            protocol: self.protocol.unwrap_or(NamedProtocol::Dn),
            protocol_file: self.protocol_file.clone(),
            anneal: self.anneal.clone().unwrap_or_default().resolve(seed),
        };
        for (name, count) in [
            ("branches", settings.branches),
            ("samples", settings.samples),
            ("instances", settings.instances),
        ] {
            if count == 0 {
                return usage(format!("{name} must be at least 1"));
            }
        }
        settings
            .anneal
            .validate()
            .map_err(|e| CliError::Usage(format!("anneal: {e}")))?;
        Ok(settings)
    }
}

/// Fully resolved configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct Settings {
    pub dim: usize,
    pub branches: usize,
    pub epsilon: f64,
    pub grid: Vec<f64>,
    pub samples: usize,
    pub instances: usize,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub format: OutputFormat,
    pub protocol: NamedProtocol,
    pub protocol_file: Option<PathBuf>,
    pub anneal: AnnealConfig,
}

impl Settings {
    /// The resolved values as a config document, which reproduces the run
    /// when fed back through `--config`.
    pub fn to_config(&self) -> RunConfig {
        let a = &self.anneal;
        RunConfig {
            dim: Some(self.dim),
            branches: Some(self.branches),
            epsilon: Some(self.epsilon),
            grid: Some(self.grid.clone()),
            grid_points: None,
            samples: Some(self.samples),
            instances: Some(self.instances),
            seed: Some(self.seed),
            output: self.output.clone(),
            format: Some(self.format),
            protocol: Some(self.protocol),
            protocol_file: self.protocol_file.clone(),
            anneal: Some(AnnealSection {
                lambda: Some(a.lambda),
                restarts: Some(a.restarts),
                steps: Some(a.steps),
                initial_temperature: Some(a.initial_temperature),
                cooling: Some(a.cooling),
                step_size: Some(a.step_size),
                adaptive_step: Some(a.adaptive_step),
                lambda_start: Some(a.lambda_start),
                ramp_fraction: Some(a.ramp_fraction),
                projection_interval: Some(a.projection_interval),
            }),
        }
    }
}
