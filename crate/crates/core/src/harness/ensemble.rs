//! Seeded random Hermitian ensembles. Every draw is a pure function of
//! `(seed, role, trial)`, so results never depend on scheduling.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{HermitianTensor, TensorShape};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum EnsembleKind {
    /// `G^H G / dof + 1e-6 I` with a `dof x D` complex Gaussian `G`.
    WishartLike { dof: usize },
    /// `U diag(uniform[m, M]) U^H` with a random unitary `U`.
    SpectrumBounded {
        m: f64,
        #[serde(rename = "M")]
        big_m: f64,
    },
    /// `G G^H / rank` with a `D x rank` complex Gaussian `G`: exact rank.
    RankDeficient { rank: usize },
}

impl EnsembleKind {
    pub fn validate(&self, side: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        match *self {
            Self::WishartLike { dof: 0 } => bad("WishartLike needs dof >= 1".into()),
            Self::SpectrumBounded { m, big_m } if !(m > 0.0 && big_m >= m && big_m.is_finite()) => {
                bad(format!("SpectrumBounded needs 0 < m <= M, got ({m}, {big_m})"))
            }
            Self::RankDeficient { rank } if rank == 0 || rank > side => {
                bad(format!("RankDeficient rank {rank} outside 1..={side}"))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleSpec {
    pub shape: TensorShape,
    pub kind: EnsembleKind,
    pub seed: u64,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive an independent seed for a named role (`"x"`, `"y"`, `"k"`, ...).
pub fn role_seed(seed: u64, role: &str) -> u64 {
    role.bytes().fold(splitmix(seed), |h, b| splitmix(h ^ b as u64))
}

/// The RNG for one trial: key from the seed, stream from the trial index.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha12Rng {
    let mut key = [0u8; 32];
    let mut s = seed;
    for chunk in key.chunks_mut(8) {
        s = splitmix(s);
        chunk.copy_from_slice(&s.to_le_bytes());
    }
    let mut rng = ChaCha12Rng::from_seed(key);
    rng.set_stream(trial);
    rng
}

/// Complex standard normal: real and imaginary parts each `N(0, 1/2)`.
pub fn complex_gaussian(rng: &mut impl Rng, rows: usize, cols: usize) -> DMatrix<Complex64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    DMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re * s, im * s)
    })
}

/// A random unitary from the QR factor of a complex Gaussian matrix.
pub fn random_unitary(rng: &mut impl Rng, d: usize) -> DMatrix<Complex64> {
    complex_gaussian(rng, d, d).qr().q()
}

impl EnsembleSpec {
    pub fn new(shape: TensorShape, kind: EnsembleKind, seed: u64) -> Result<Self> {
        kind.validate(shape.side())?;
        Ok(Self { shape, kind, seed })
    }

    pub fn sample(&self, trial: u64) -> HermitianTensor {
        let mut rng = trial_rng(self.seed, trial);
        sample_with(&self.shape, &self.kind, &mut rng)
    }
}

pub fn sample_with(shape: &TensorShape, kind: &EnsembleKind, rng: &mut impl Rng) -> HermitianTensor {
    let d = shape.side();
    let build = |m: DMatrix<Complex64>| HermitianTensor::from_unfolded(shape, m).expect("Gram matrices are Hermitian");
    match *kind {
        EnsembleKind::WishartLike { dof } => {
            let g = complex_gaussian(rng, dof, d);
            let mut w = g.adjoint() * g / Complex64::new(dof as f64, 0.0);
            for i in 0..d {
                w[(i, i)] += 1e-6;
            }
            build(w)
        }
        EnsembleKind::SpectrumBounded { m, big_m } => {
            if m == big_m {
                return HermitianTensor::identity(shape).scale(m);
            }
            let u = random_unitary(rng, d);
            let vals: Vec<f64> = (0..d).map(|_| rng.random_range(m..=big_m)).collect();
            let mut scaled = u.clone();
            for (j, v) in vals.iter().enumerate() {
                scaled.column_mut(j).scale_mut(*v);
            }
            build(scaled * u.adjoint())
        }
        EnsembleKind::RankDeficient { rank } => {
            let g = complex_gaussian(rng, d, rank);
            build(&g * g.adjoint() / Complex64::new(rank as f64, 0.0))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shape() -> TensorShape {
        TensorShape::new(vec![2, 2]).unwrap()
    }

    #[test]
    fn degenerate_spectrum_is_exact_identity() {
        let e = EnsembleSpec::new(shape(), EnsembleKind::SpectrumBounded { m: 1.0, big_m: 1.0 }, 7).unwrap();
        assert_eq!(e.sample(3), HermitianTensor::identity(&shape()));
    }

    #[test]
    fn draws_are_deterministic_and_distinct() {
        let e = EnsembleSpec::new(shape(), EnsembleKind::WishartLike { dof: 6 }, 42).unwrap();
        assert_eq!(e.sample(5), e.sample(5));
        assert_ne!(e.sample(5), e.sample(6));
        assert_ne!(role_seed(42, "x"), role_seed(42, "y"));
    }

    #[test]
    fn spectrum_bounds_and_rank() {
        let e = EnsembleSpec::new(shape(), EnsembleKind::SpectrumBounded { m: 0.5, big_m: 2.0 }, 1).unwrap();
        for t in 0..20 {
            let sd = e.sample(t).eig();
            assert!(sd.lambda_min() >= 0.5 - 1e-12 && sd.lambda_max() <= 2.0 + 1e-12);
        }
        let r = EnsembleSpec::new(shape(), EnsembleKind::RankDeficient { rank: 2 }, 1).unwrap();
        assert_eq!(r.sample(0).eig().rank(), 2);
        assert!(EnsembleSpec::new(shape(), EnsembleKind::RankDeficient { rank: 5 }, 1).is_err());
    }

    #[test]
    fn kind_json_shape() {
        let k: EnsembleKind = serde_json::from_str(r#"{"kind":"SpectrumBounded","m":0.5,"M":2}"#).unwrap();
        assert_eq!(k, EnsembleKind::SpectrumBounded { m: 0.5, big_m: 2.0 });
        let k: EnsembleKind = serde_json::from_str(r#"{"kind":"WishartLike","dof":8}"#).unwrap();
        assert_eq!(serde_json::to_string(&k).unwrap(), r#"{"kind":"WishartLike","dof":8}"#);
    }
}
