//! Monte Carlo verification harness: seeded ensembles, premise enforcement
//! and one suite per ordering or tail-bound statement.

pub mod config;
pub mod ensemble;
pub mod report;
mod suites;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use config::{Ensembles, ExperimentConfig, Exponents};
pub use ensemble::{EnsembleKind, EnsembleSpec};
pub use report::{TailResult, VerificationReport, REPORT_VERSION};
pub use suites::{markov_tail, run_all, run_suite, C_SWEEP};

use crate::connection::ConnectionFunction;
use crate::error::{Error, Result};
use crate::means::mean_pd;
use crate::tensor::HermitianTensor;

macro_rules! suite_ids {
    ($($variant:ident => $name:literal),* $(,)?) => {
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub enum SuiteId {
            $(#[serde(rename = $name)] $variant,)*
        }

        impl SuiteId {
            pub const ALL: &'static [SuiteId] = &[$(SuiteId::$variant,)*];

            pub fn name(self) -> &'static str {
                match self {
                    $(SuiteId::$variant => $name,)*
                }
            }
        }
    };
}

suite_ids! {
    L1PowerMonotone => "L1_PowerMonotone",
    L2Kantorovich => "L2_Kantorovich",
    L3MarkovChebyshev => "L3_MarkovChebyshev",
    T1AndoHiaiGeneralized => "T1_AndoHiaiGeneralized",
    C1AndoHiaiDual => "C1_AndoHiaiDual",
    T2LieTrotterLimit => "T2_LieTrotterLimit",
    T3LieTrotterTail => "T3_LieTrotterTail",
    T7Psi => "T7_Psi",
    T8Phi => "T8_Phi",
    T9Tc => "T9_TC",
    C2MajorizationTmi => "C2_MajorizationTMI",
    C3MajorizationTmd => "C3_MajorizationTMD",
    C4MajorizationTc => "C4_MajorizationTC",
    T63PsdLimit => "T63_PsdLimit",
    T65JointConvexity => "T65_JointConvexity",
    AppFusion => "APP_Fusion",
    AppLinearTransform => "APP_LinearTransform",
}

impl SuiteId {
    /// The part before the first underscore, e.g. `"L3"`.
    pub fn short(self) -> &'static str {
        self.name().split('_').next().unwrap_or_default()
    }
}

impl fmt::Display for SuiteId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Accepts the full id or its short prefix, case-insensitively.
impl FromStr for SuiteId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SuiteId::ALL
            .iter()
            .copied()
            .find(|id| id.name().eq_ignore_ascii_case(s) || id.short().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Parse(format!("unknown suite {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PremiseDirection {
    /// `X #_F Y <= I`.
    BelowIdentity,
    /// `X #_F Y >= I`.
    AboveIdentity,
}

/// Rescale a PD pair jointly so that `X' #_F Y' <= I` (or `>= I`) with the
/// extreme eigenvalue equal to 1. Returns `(X', Y', t)` with `X' = X / t`.
pub fn enforce_premise(
    x: &HermitianTensor,
    y: &HermitianTensor,
    f: &ConnectionFunction,
    direction: PremiseDirection,
) -> Result<(HermitianTensor, HermitianTensor, f64)> {
    let mean = mean_pd(x, y, f)?;
    let t = match direction {
        PremiseDirection::BelowIdentity => mean.lambda_max(),
        PremiseDirection::AboveIdentity => mean.lambda_min(),
    };
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::Precondition(format!("cannot rescale a mean with extreme eigenvalue {t}")));
    }
    Ok((x.scale(1.0 / t), y.scale(1.0 / t), t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connection::geometric;
    use crate::tensor::TensorShape;

    #[test]
    fn suite_ids_round_trip() {
        assert_eq!(SuiteId::ALL.len(), 17);
        for &id in SuiteId::ALL {
            assert_eq!(id.name().parse::<SuiteId>().unwrap(), id);
            assert_eq!(serde_json::to_string(&id).unwrap(), format!("\"{}\"", id.name()));
        }
        assert_eq!("l3".parse::<SuiteId>().unwrap(), SuiteId::L3MarkovChebyshev);
        assert_eq!("APP_Fusion".parse::<SuiteId>().unwrap(), SuiteId::AppFusion);
        assert!("T4".parse::<SuiteId>().is_err());
    }

    #[test]
    fn premise_scaling_commuting() {
        let s = TensorShape::new(vec![2]).unwrap();
        let four = HermitianTensor::identity(&s).scale(4.0);
        let (x, y, t) = enforce_premise(&four, &four, &geometric(), PremiseDirection::BelowIdentity).unwrap();
        assert!((t - 4.0).abs() < 1e-14);
        assert!(x.sub(&HermitianTensor::identity(&s)).unwrap().frobenius_norm() < 1e-14);
        assert_eq!(x, y);
    }
}
