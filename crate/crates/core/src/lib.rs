//! Bivariate means of Hermitian tensors under the Einstein product, the
//! scalar factors that bound them, and a Monte Carlo harness for checking
//! Loewner-order inequalities between random tensors.

// `!(a > b)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod connection;
pub mod error;
pub mod harness;
pub mod lie_trotter;
pub mod means;
pub mod numeric;
pub mod processing;
pub mod spectral;
pub mod tensor;

pub use error::{Error, Result};
pub use spectral::{
    apply_spectral, distance, gauge_norm, loewner_compare, range_projector, spectral_decompose,
    GaugeNormKind, LoewnerRelation, LoewnerVerdict, SpectralDecomposition, Tolerances,
};
pub use tensor::{HermitianTensor, Tensor, TensorJson, TensorShape};
pub use connection::{ClassTags, ConnectionFunction};
