//! Experiment configuration, presets and canonical fingerprints.

use std::path::{Path, PathBuf};

use fock_core::approx::{projection_strategy, DEFAULT_TAU};
use fock_core::experiment::counterexample_quadrature;
use fock_core::registry::{FunctionContext, FunctionRegistry};
use fock_core::sector::{ContourSpec, CounterexampleParams};
use fock_core::QuadratureSpec;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const MAX_DEGREE: usize = 64;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("cannot parse config: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("unknown preset {0:?}; expected one of {1:?}")]
    UnknownPreset(String, Vec<&'static str>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CauchySection {
    pub f1: String,
    /// Must vanish at `mu`.
    pub f2: String,
    pub mu: [f64; 2],
    pub points: Vec<[f64; 2]>,
}

impl Default for CauchySection {
    fn default() -> Self {
        CauchySection {
            f1: "exp:1".into(),
            f2: "shift:0.5".into(),
            mu: [0.5, 0.0],
            points: vec![[3.5, 2.5], [1.5, 0.5], [-2.5, 3.5]],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub preset: String,
    pub seed_tag: String,
    /// Function spec of the weight `F`.
    pub weight: String,
    /// Function spec of the target `H`.
    pub target: String,
    pub strategy: String,
    pub tau: f64,
    pub n_max: usize,
    pub x_samples: Vec<f64>,
    pub lattice_radius: f64,
    /// Not part of the fingerprint.
    pub output_dir: PathBuf,
    pub eval_points: Vec<[f64; 2]>,
    pub params: CounterexampleParams,
    pub quadrature: QuadratureSpec,
    pub contour: ContourSpec,
    pub cauchy: CauchySection,
}

pub const PRESETS: [&str; 3] = ["positive-constant", "positive-exponential", "counterexample-default"];

pub const DEFAULT_PRESET: &str = "counterexample-default";

impl ExperimentConfig {
    fn base(preset: &str) -> Self {
        ExperimentConfig {
            preset: preset.to_string(),
            seed_tag: "default".into(),
            weight: "const".into(),
            target: "exp:1".into(),
            strategy: "gram-svd".into(),
            tau: DEFAULT_TAU,
            n_max: 10,
            x_samples: vec![0.5, 1.0, 1.5, 2.0],
            lattice_radius: 12.0,
            output_dir: PathBuf::from("focklab-out"),
            eval_points: vec![[0.0, 0.0], [0.5, 0.25], [3.0, 0.0], [2.0, 0.5]],
            params: CounterexampleParams::default(),
            quadrature: QuadratureSpec::default(),
            contour: ContourSpec::default(),
            cauchy: CauchySection::default(),
        }
    }

    pub fn preset(name: &str) -> Result<Self, ConfigError> {
        let mut c = Self::base(name);
        match name {
            "positive-constant" => {}
            "positive-exponential" => {
                c.weight = "exp:1".into();
                c.target = "exp:2*exp:1".into();
                c.n_max = 20;
            }
            "counterexample-default" => {
                c.weight = "F".into();
                c.target = "F*G".into();
                c.strategy = "arnoldi".into();
                c.n_max = 32;
                c.x_samples = vec![2.0, 3.0, 4.0, 5.0];
                c.quadrature = counterexample_quadrature();
            }
            other => return Err(ConfigError::UnknownPreset(other.to_string(), PRESETS.to_vec())),
        }
        Ok(c)
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    /// Sorted-key TOML; the same text is written to disk and hashed.
    pub fn to_toml(&self) -> String {
        let value = toml::Value::try_from(self).expect("config is representable in TOML");
        toml::to_string(&value).expect("TOML value serializes")
    }

    /// SHA-256 of the canonical form with the output directory removed.
    pub fn fingerprint(&self) -> String {
        let mut value = toml::Value::try_from(self).expect("config is representable in TOML");
        if let toml::Value::Table(t) = &mut value {
            t.remove("output_dir");
        }
        let text = toml::to_string(&value).expect("TOML value serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    pub fn function_context(&self) -> FunctionContext {
        FunctionContext::new(self.params, self.contour)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        self.params.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.quadrature.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.contour.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        projection_strategy(&self.strategy).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.n_max > MAX_DEGREE {
            return bad(format!("n_max = {} exceeds {MAX_DEGREE}", self.n_max));
        }
        if 2 * self.n_max + 1 > self.quadrature.n_angular {
            return bad(format!("n_angular = {} cannot resolve degree {}", self.quadrature.n_angular, self.n_max));
        }
        if !(self.tau > 0.0 && self.tau < 1e-2) {
            return bad(format!("tau must lie in (0, 1e-2), got {}", self.tau));
        }
        if self.x_samples.is_empty() || self.x_samples.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return bad("x_samples must be a non-empty list of finite non-negative reals".into());
        }
        if !(self.lattice_radius >= 1.0 && self.lattice_radius <= 40.0) {
            return bad(format!("lattice_radius must lie in [1, 40], got {}", self.lattice_radius));
        }
        let finite = |p: &[f64; 2]| p.iter().all(|v| v.is_finite());
        if !self.eval_points.iter().all(finite) || !self.cauchy.points.iter().all(finite) || !finite(&self.cauchy.mu) {
            return bad("points must be finite".into());
        }
        let registry = FunctionRegistry::builtin();
        let names = [&self.weight, &self.target, &self.cauchy.f1, &self.cauchy.f2];
        for spec in names {
            // parse only: building the counterexample family happens on first use
            for factor in spec.split('*') {
                let name = factor.split_once(':').map_or(factor, |(n, _)| n).trim();
                if registry.get(name).is_none() {
                    return bad(format!("unknown function {name:?} in {spec:?}"));
                }
            }
        }
        Ok(())
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::preset(DEFAULT_PRESET).expect("default preset exists")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate_and_round_trip() {
        for name in PRESETS {
            let c = ExperimentConfig::preset(name).unwrap();
            c.validate().unwrap();
            let text = c.to_toml();
            let back = ExperimentConfig::from_toml(&text).unwrap();
            assert_eq!(back, c);
            assert_eq!(back.to_toml(), text);
        }
    }

    #[test]
    fn canonical_form_has_sorted_keys() {
        let text = ExperimentConfig::default().to_toml();
        let top: Vec<&str> = text
            .lines()
            .take_while(|l| !l.starts_with('['))
            .filter_map(|l| l.split_once(" = ").map(|(k, _)| k))
            .collect();
        let mut sorted = top.clone();
        sorted.sort();
        assert_eq!(top, sorted);
    }

    #[test]
    fn fingerprint_ignores_output_dir_only() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        b.output_dir = PathBuf::from("/elsewhere");
        assert_eq!(a.fingerprint(), b.fingerprint());
        b.n_max = 31;
        assert_ne!(a.fingerprint(), b.fingerprint());
    }

    #[test]
    fn chain_violation_is_rejected() {
        let mut c = ExperimentConfig::default();
        c.params.beta = 1.6;
        assert!(matches!(c.validate(), Err(ConfigError::Invalid(_))));
        assert!(matches!(ExperimentConfig::preset("nope"), Err(ConfigError::UnknownPreset(..))));
    }

    #[test]
    fn field_order_in_the_file_does_not_matter() {
        let c = ExperimentConfig::preset("positive-constant").unwrap();
        let text = c.to_toml();
        // move the first top-level line to the end of the top-level block
        let mut lines: Vec<&str> = text.lines().collect();
        let first = lines.remove(0);
        let split = lines.iter().position(|l| l.starts_with('[')).unwrap();
        lines.insert(split, first);
        let shuffled = lines.join("\n");
        let back = ExperimentConfig::from_toml(&shuffled).unwrap();
        assert_eq!(back.fingerprint(), c.fingerprint());
    }
}
