//! TOML run configuration shared by the command-line front end and the
//! verification suite.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::functions::BuiltinFn;
use crate::matrix::Matrix;
use crate::oracle::OracleConfig;
use crate::solver::{ProblemSpec, QuadratureConfig};
use crate::special::SeriesConfig;

/// Problems with a configuration file, kept apart from numerical failures so
/// the front end can map them to a distinct exit code.
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

impl From<Error> for ConfigError {
    fn from(e: Error) -> Self {
        ConfigError::Invalid(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    #[serde(default)]
    pub numerics: NumericsConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub h: f64,
    pub alpha: f64,
    pub t_end: f64,
    /// Second Mittag-Leffler parameter for `eval-x`.
    #[serde(default = "default_beta")]
    pub beta: f64,
    pub history: BuiltinFn,
    #[serde(default)]
    pub history_caputo: CaputoMode,
    /// Zero when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forcing: Option<BuiltinFn>,
}

fn default_beta() -> f64 {
    1.0
}

/// Source of `ᶜD^α φ` on `[-h, 0]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CaputoMode {
    /// Power rule on the polynomial history.
    #[default]
    Analytic,
    /// L1 differences of sampled `φ`.
    Numeric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NumericsConfig {
    pub series_tol: f64,
    pub max_terms: usize,
    pub nodes_per_unit: usize,
    pub caputo_fallback_step: f64,
    /// Output spacing of `solve`.
    pub mesh: f64,
    pub oracle_step: f64,
    /// Node grading of the oracle; absent picks one from `alpha`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_grading: Option<f64>,
    /// Sample spacing of the fundamental-matrix residual check.
    pub residual_step: f64,
    pub seed: u64,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        let series = SeriesConfig::default();
        let quad = QuadratureConfig::default();
        Self {
            series_tol: series.tol,
            max_terms: series.max_terms,
            nodes_per_unit: quad.nodes_per_unit,
            caputo_fallback_step: 1e-4,
            mesh: 0.01,
            oracle_step: 1e-3,
            oracle_grading: None,
            residual_step: 1e-3,
            seed: 20_240_611,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Default destination for `solve` when `--out` is not given.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    pub mode: OutputMode,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputMode {
    #[default]
    Overwrite,
    /// Refuse to replace an existing file.
    CreateNew,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration is always representable in TOML")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.to_problem()?;
        self.series()?;
        self.quadrature().validate()?;
        self.oracle().cells_per_delay(self.problem.h)?;
        let n = &self.numerics;
        if !(n.mesh > 0.0) || n.mesh > self.problem.h / 4.0 {
            return Err(ConfigError::Invalid(format!(
                "numerics.mesh must lie in (0, h/4], got {}",
                n.mesh
            )));
        }
        if !(n.residual_step > 0.0) || ((self.problem.h / n.residual_step).round() * n.residual_step - self.problem.h).abs()
            > 1e-9 * self.problem.h
        {
            return Err(ConfigError::Invalid(format!(
                "numerics.residual_step must divide h, got {}",
                n.residual_step
            )));
        }
        if !(self.problem.beta > 0.0) || !self.problem.beta.is_finite() {
            return Err(ConfigError::Invalid(format!(
                "problem.beta must be positive, got {}",
                self.problem.beta
            )));
        }
        Ok(())
    }

    pub fn a(&self) -> Result<Matrix, ConfigError> {
        matrix_field("problem.a", &self.problem.a)
    }

    pub fn b(&self) -> Result<Matrix, ConfigError> {
        matrix_field("problem.b", &self.problem.b)
    }

    pub fn forcing(&self) -> Result<BuiltinFn, ConfigError> {
        let n = self.a()?.rows();
        Ok(self.problem.forcing.clone().unwrap_or_else(|| BuiltinFn::zero(n)))
    }

    pub fn series(&self) -> Result<SeriesConfig, ConfigError> {
        Ok(SeriesConfig::new(self.numerics.series_tol, self.numerics.max_terms)?)
    }

    pub fn quadrature(&self) -> QuadratureConfig {
        QuadratureConfig {
            nodes_per_unit: self.numerics.nodes_per_unit,
            caputo_fallback_step: Some(self.numerics.caputo_fallback_step),
        }
    }

    pub fn oracle(&self) -> OracleConfig {
        let step = self.numerics.oracle_step;
        match self.numerics.oracle_grading {
            Some(grading) => OracleConfig { step, grading },
            None => OracleConfig::graded(step, self.problem.alpha),
        }
    }

    /// The problem described by the file, with dimensions checked.
    pub fn to_problem(&self) -> Result<ProblemSpec, ConfigError> {
        let p = &self.problem;
        let a = self.a()?;
        let b = self.b()?;
        let n = a.rows();
        let forcing = self.forcing()?;
        for (name, f) in [("problem.history", &p.history), ("problem.forcing", &forcing)] {
            let dim = f.dim().map_err(|e| ConfigError::Invalid(format!("{name}: {e}")))?;
            if dim != n {
                return Err(ConfigError::Invalid(format!(
                    "{name} has dimension {dim} but A is {n}x{n}"
                )));
            }
        }
        let caputo = match p.history_caputo {
            CaputoMode::Analytic => Some(p.history.caputo_fn(p.alpha, -p.h).ok_or_else(|| {
                ConfigError::Invalid(format!(
                    "problem.history: kind \"{}\" has no analytic Caputo derivative; set history_caputo = \"numeric\"",
                    p.history.kind()
                ))
            })?),
            CaputoMode::Numeric => None,
        };
        let spec = ProblemSpec::new(a, b, p.h, p.alpha, p.t_end)?
            .with_history(p.history.to_fn(), caputo)
            .with_forcing(forcing.to_fn());
        spec.validate()?;
        Ok(spec)
    }
}

fn matrix_field(name: &str, rows: &[Vec<f64>]) -> Result<Matrix, ConfigError> {
    let m = Matrix::from_rows(rows).map_err(|e| ConfigError::Invalid(format!("{name}: {e}")))?;
    if !m.is_square() {
        return Err(ConfigError::Invalid(format!(
            "{name} must be square, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    Ok(m)
}
