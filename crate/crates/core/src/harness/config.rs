//! Experiment configuration as read from JSON.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ensemble::{role_seed, EnsembleKind, EnsembleSpec};
use super::SuiteId;
use crate::connection::ConnectionFunction;
use crate::error::{Error, Result};
use crate::spectral::GaugeNormKind;
use crate::tensor::TensorShape;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ensembles {
    pub x: EnsembleKind,
    pub y: EnsembleKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Exponents {
    /// Mean exponent `q`.
    pub q: f64,
    /// Outer tail-bound exponent `p`.
    pub p: f64,
    /// Lift order `m` of `x^m f(x)`.
    pub m: u32,
    /// Accepted for config compatibility; no suite reads it.
    pub n: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub trials: usize,
    pub shape: TensorShape,
    pub ensembles: Ensembles,
    /// Connection function id; `null` lets each suite use its own default.
    #[serde(default)]
    pub function: Option<String>,
    pub exponents: Exponents,
    pub tolerance: f64,
    pub norm: String,
    pub suites: Vec<SuiteId>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let bounded = EnsembleKind::SpectrumBounded { m: 0.5, big_m: 2.0 };
        Self {
            seed: 20_240_611,
            trials: 500,
            shape: TensorShape::new(vec![2, 2]).expect("static shape"),
            ensembles: Ensembles { x: bounded, y: bounded },
            function: None,
            exponents: Exponents { q: 2.0, p: 1.0, m: 2, n: 2 },
            tolerance: 1e-8,
            norm: "frobenius".into(),
            suites: SuiteId::ALL.to_vec(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(s)?;
        c.validate()?;
        Ok(c)
    }

    /// `"default"` yields the built-in config, anything else is a file path.
    pub fn load(arg: &str) -> Result<Self> {
        if arg == "default" {
            return Ok(Self::default());
        }
        Self::from_json_str(&std::fs::read_to_string(Path::new(arg))?)
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be positive".into()));
        }
        if !(self.tolerance >= 0.0 && self.tolerance.is_finite()) {
            return Err(Error::Config(format!("tolerance {} must be finite and >= 0", self.tolerance)));
        }
        let e = &self.exponents;
        if !(e.q > 0.0 && e.q.is_finite()) || !(e.p >= 1.0 && e.p.is_finite()) {
            return Err(Error::Config(format!("need q > 0 and p >= 1, got q = {}, p = {}", e.q, e.p)));
        }
        if e.m < 2 {
            return Err(Error::Config(format!("lift order m must be >= 2, got {}", e.m)));
        }
        self.ensembles.x.validate(self.shape.side())?;
        self.ensembles.y.validate(self.shape.side())?;
        self.norm_kind()?;
        self.connection()?;
        Ok(())
    }

    pub fn norm_kind(&self) -> Result<GaugeNormKind> {
        self.norm.parse()
    }

    pub fn connection(&self) -> Result<Option<ConnectionFunction>> {
        self.function.as_deref().map(ConnectionFunction::parse).transpose()
    }

    /// The ensemble for a role, keyed off the config seed.
    pub fn ensemble(&self, kind: EnsembleKind, role: &str) -> EnsembleSpec {
        EnsembleSpec {
            shape: self.shape.clone(),
            kind,
            seed: role_seed(self.seed, role),
        }
    }
}
