//! Spectral calculus on Hermitian tensors: decomposition, functions of a
//! tensor, gauge norms, Loewner comparison and range projectors.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{HermitianTensor, Tensor, TensorShape};

/// Numerical slack used across the crate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Relative slack for PSD and Loewner tests.
    pub psd: f64,
    /// Eigenvalues at or below `rank * lambda_max` count as zero.
    pub rank: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            psd: 1e-8,
            rank: 1e-10,
        }
    }
}

pub const DEFAULT_RANK_TOL: f64 = 1e-10;
pub const DEFAULT_PSD_TOL: f64 = 1e-8;

/// Eigenvalues in descending order with a unitary eigenbasis.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    shape: TensorShape,
    eigenvalues: Vec<f64>,
    basis: DMatrix<Complex64>,
    rank: usize,
}

impl SpectralDecomposition {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Unitary tensor whose unfolding has the eigenvectors as columns.
    pub fn eigenbasis(&self) -> Tensor {
        Tensor::fold(&self.shape, self.basis.clone()).expect("basis has the unfolding side")
    }

    pub fn eigenvector(&self, i: usize) -> Vec<Complex64> {
        self.basis.column(i).iter().copied().collect()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn shape(&self) -> &TensorShape {
        &self.shape
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn lambda_min(&self) -> f64 {
        *self.eigenvalues.last().expect("nonempty spectrum")
    }

    /// Largest absolute eigenvalue (spectral norm).
    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |a, l| a.max(l.abs()))
    }

    /// `U diag(phi(lambda)) U^H`.
    pub fn map(&self, phi: impl Fn(f64) -> f64) -> HermitianTensor {
        let vals: Vec<f64> = self.eigenvalues.iter().map(|&l| phi(l)).collect();
        self.with_values(&vals)
    }

    /// `U diag(values) U^H` for a replacement spectrum aligned with this basis.
    pub fn with_values(&self, values: &[f64]) -> HermitianTensor {
        let mut scaled = self.basis.clone();
        for (j, &v) in values.iter().enumerate() {
            scaled.column_mut(j).scale_mut(v);
        }
        let mat = scaled * self.basis.adjoint();
        HermitianTensor::symmetrized(Tensor::fold(&self.shape, mat).expect("side preserved"))
    }

    pub fn reconstruct(&self) -> HermitianTensor {
        self.with_values(&self.eigenvalues)
    }
}

/// Spectral decomposition with the default rank tolerance.
pub fn spectral_decompose(h: &HermitianTensor) -> SpectralDecomposition {
    spectral_decompose_with(h, DEFAULT_RANK_TOL)
}

pub fn spectral_decompose_with(h: &HermitianTensor, rank_tol: f64) -> SpectralDecomposition {
    let eig = SymmetricEigen::new(h.unfold().clone());
    let d = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut basis = DMatrix::<Complex64>::zeros(d, d);
    for (dst, &src) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(src);
        // Fix the phase: largest-magnitude component real positive.
        let mut pivot = 0;
        let mut best = -1.0;
        for (i, z) in col.iter().enumerate() {
            let n = z.norm();
            if n > best {
                best = n;
                pivot = i;
            }
        }
        let p = col[pivot];
        let phase = if p.norm() > 0.0 { p.conj() / p.norm() } else { Complex64::new(1.0, 0.0) };
        for (i, z) in col.iter().enumerate() {
            basis[(i, dst)] = z * phase;
        }
        basis[(pivot, dst)] = Complex64::new(basis[(pivot, dst)].norm(), 0.0);
    }

    let scale = eigenvalues.iter().fold(0.0f64, |a, l| a.max(l.abs()));
    let rank = if scale == 0.0 {
        0
    } else {
        eigenvalues.iter().filter(|l| l.abs() > rank_tol * scale).count()
    };
    SpectralDecomposition {
        shape: h.shape().clone(),
        eigenvalues,
        basis,
        rank,
    }
}

/// Apply a scalar function through the spectrum. With `domain_check`, any
/// non-finite image is reported instead of propagated.
pub fn apply_spectral(
    h: &HermitianTensor,
    phi: impl Fn(f64) -> f64,
    domain_check: bool,
) -> Result<HermitianTensor> {
    apply_named(h, "phi", phi, domain_check)
}

pub(crate) fn apply_named(
    h: &HermitianTensor,
    name: &str,
    phi: impl Fn(f64) -> f64,
    domain_check: bool,
) -> Result<HermitianTensor> {
    let sd = spectral_decompose(h);
    let vals: Vec<f64> = sd.eigenvalues().iter().map(|&l| phi(l)).collect();
    if domain_check {
        if let Some((at, value)) = sd
            .eigenvalues()
            .iter()
            .zip(&vals)
            .find(|(_, v)| !v.is_finite())
        {
            return Err(Error::Domain {
                function: name.to_string(),
                at: *at,
                value: *value,
            });
        }
    }
    Ok(sd.with_values(&vals))
}

/// Fails unless the tensor is numerically full rank with positive spectrum.
pub fn require_pd(h: &HermitianTensor) -> Result<SpectralDecomposition> {
    let sd = spectral_decompose(h);
    let lmin = sd.lambda_min();
    if !(lmin > 0.0 && lmin > DEFAULT_RANK_TOL * sd.lambda_max()) {
        return Err(Error::NotPositiveDefinite { lambda_min: lmin });
    }
    Ok(sd)
}

pub fn require_psd(h: &HermitianTensor, psd_tol: f64) -> Result<SpectralDecomposition> {
    let sd = spectral_decompose(h);
    let lmin = sd.lambda_min();
    if lmin < -psd_tol * sd.spectral_radius().max(1.0) {
        return Err(Error::NotPositiveSemidefinite { lambda_min: lmin });
    }
    Ok(sd)
}

pub fn is_pd(h: &HermitianTensor) -> bool {
    require_pd(h).is_ok()
}

impl HermitianTensor {
    pub fn eig(&self) -> SpectralDecomposition {
        spectral_decompose(self)
    }

    pub fn lambda_max(&self) -> f64 {
        self.eig().lambda_max()
    }

    pub fn lambda_min(&self) -> f64 {
        self.eig().lambda_min()
    }

    /// `H^p` for PD `H` (any real `p`), or PSD `H` when `p > 0`.
    pub fn powf(&self, p: f64) -> Result<HermitianTensor> {
        if p > 0.0 {
            require_psd(self, DEFAULT_PSD_TOL)?;
            Ok(self.eig().map(|l| l.max(0.0).powf(p)))
        } else {
            Ok(require_pd(self)?.map(|l| l.powf(p)))
        }
    }

    pub fn sqrt(&self) -> Result<HermitianTensor> {
        self.powf(0.5)
    }

    pub fn inverse_pd(&self) -> Result<HermitianTensor> {
        Ok(require_pd(self)?.map(|l| 1.0 / l))
    }

    /// Integer power by repeated Einstein products; valid for any Hermitian tensor.
    pub fn powi(&self, n: u32) -> HermitianTensor {
        let mut acc = HermitianTensor::identity(self.shape());
        for _ in 0..n {
            acc = HermitianTensor::symmetrized(acc.einstein(self).expect("same shape"));
        }
        acc
    }
}

/// Symmetric gauge functions applied to `|lambda|`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GaugeNormKind {
    Spectral,
    Frobenius,
    Trace,
    #[serde(rename = "kyfan")]
    KyFan(usize),
}

impl std::str::FromStr for GaugeNormKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spectral" => Ok(Self::Spectral),
            "frobenius" => Ok(Self::Frobenius),
            "trace" => Ok(Self::Trace),
            _ => {
                if let Some(k) = s.strip_prefix("kyfan:") {
                    let k = k
                        .parse()
                        .map_err(|_| Error::Parse(format!("bad Ky Fan index in {s:?}")))?;
                    Ok(Self::KyFan(k))
                } else {
                    Err(Error::Parse(format!("unknown norm {s:?}")))
                }
            }
        }
    }
}

pub fn gauge_norm(h: &HermitianTensor, kind: GaugeNormKind) -> Result<f64> {
    let mut abs: Vec<f64> = h.eig().eigenvalues().iter().map(|l| l.abs()).collect();
    abs.sort_by(|a, b| b.total_cmp(a));
    Ok(match kind {
        GaugeNormKind::Spectral => abs[0],
        GaugeNormKind::Frobenius => abs.iter().map(|a| a * a).sum::<f64>().sqrt(),
        GaugeNormKind::Trace => abs.iter().sum(),
        GaugeNormKind::KyFan(k) => {
            if k == 0 || k > abs.len() {
                return Err(Error::KyFanOutOfRange { k, dim: abs.len() });
            }
            abs[..k].iter().sum()
        }
    })
}

/// Gauge-norm distance `||a - b||`.
pub fn distance(a: &HermitianTensor, b: &HermitianTensor, kind: GaugeNormKind) -> Result<f64> {
    gauge_norm(&a.sub(b)?, kind)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum LoewnerRelation {
    Leq,
    Geq,
    Eq,
    Incomparable,
}

/// Outcome of comparing `X` against `Y`, with the extreme eigenvalues of `Y - X`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoewnerVerdict {
    pub relation: LoewnerRelation,
    pub diff_min: f64,
    pub diff_max: f64,
    pub scale: f64,
}

impl LoewnerVerdict {
    /// `X <= Y` holds (including equality).
    pub fn leq(&self) -> bool {
        matches!(self.relation, LoewnerRelation::Leq | LoewnerRelation::Eq)
    }

    pub fn geq(&self) -> bool {
        matches!(self.relation, LoewnerRelation::Geq | LoewnerRelation::Eq)
    }

    /// How far `X <= Y` fails, in absolute units (0 when it holds exactly).
    pub fn leq_violation(&self) -> f64 {
        (-self.diff_min).max(0.0)
    }

    pub fn geq_violation(&self) -> f64 {
        self.diff_max.max(0.0)
    }
}

pub fn loewner_compare(x: &HermitianTensor, y: &HermitianTensor, tol: f64) -> Result<LoewnerVerdict> {
    let diff = y.sub(x)?.eig();
    let scale = x
        .eig()
        .spectral_radius()
        .max(y.eig().spectral_radius())
        .max(1.0);
    let diff_min = diff.lambda_min();
    let diff_max = diff.lambda_max();
    let le = diff_min >= -tol * scale;
    let ge = diff_max <= tol * scale;
    let relation = match (le, ge) {
        (true, true) => LoewnerRelation::Eq,
        (true, false) => LoewnerRelation::Leq,
        (false, true) => LoewnerRelation::Geq,
        (false, false) => LoewnerRelation::Incomparable,
    };
    Ok(LoewnerVerdict {
        relation,
        diff_min,
        diff_max,
        scale,
    })
}

/// Orthogonal projector onto the range of a PSD tensor.
pub fn range_projector(h: &HermitianTensor, rank_tol: f64) -> Result<HermitianTensor> {
    require_psd(h, DEFAULT_PSD_TOL)?;
    let sd = spectral_decompose_with(h, rank_tol);
    let cut = rank_tol * sd.lambda_max().max(0.0);
    Ok(sd.map(|l| if l > cut && l > 0.0 { 1.0 } else { 0.0 }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s2() -> TensorShape {
        TensorShape::new(vec![2]).unwrap()
    }

    fn diag(v: &[f64]) -> HermitianTensor {
        HermitianTensor::diagonal(&TensorShape::new(vec![v.len()]).unwrap(), v).unwrap()
    }

    #[test]
    fn diagonal_decomposition() {
        let sd = diag(&[1.0, 3.0]).eig();
        assert_eq!(sd.eigenvalues(), &[3.0, 1.0]);
        let u = sd.eigenbasis();
        // Columns are e_2, e_1 after sorting.
        assert_eq!(u.unfold()[(1, 0)], Complex64::new(1.0, 0.0));
        assert_eq!(u.unfold()[(0, 1)], Complex64::new(1.0, 0.0));
        let sd = diag(&[3.0, 1.0]).eig();
        assert_eq!(sd.eigenbasis(), Tensor::identity(&s2()));
    }

    #[test]
    fn phase_convention() {
        let h = HermitianTensor::from_unfolded(
            &s2(),
            DMatrix::from_row_slice(
                2,
                2,
                &[
                    Complex64::new(2.0, 0.0),
                    Complex64::new(0.0, 1.0),
                    Complex64::new(0.0, -1.0),
                    Complex64::new(5.0, 0.0),
                ],
            ),
        )
        .unwrap();
        let sd = h.eig();
        for i in 0..2 {
            let v = sd.eigenvector(i);
            let pivot = v
                .iter()
                .max_by(|a, b| a.norm().total_cmp(&b.norm()))
                .unwrap();
            assert_eq!(pivot.im, 0.0);
            assert!(pivot.re > 0.0);
        }
    }

    #[test]
    fn rank_one_rank() {
        let h = HermitianTensor::from_real_rows(&s2(), &[1.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!(h.eig().rank(), 1);
    }

    #[test]
    fn sqrt_of_diag() {
        let r = apply_spectral(&diag(&[4.0, 9.0]), f64::sqrt, true).unwrap();
        assert_eq!(r, diag(&[2.0, 3.0]));
    }

    #[test]
    fn domain_check_reports() {
        let r = apply_spectral(&diag(&[-1.0, 1.0]), |x| x.powf(-0.5), true);
        assert!(matches!(r, Err(Error::Domain { .. })));
    }

    #[test]
    fn loewner_examples() {
        let v = loewner_compare(&diag(&[1.0, 2.0]), &diag(&[2.0, 3.0]), 1e-8).unwrap();
        assert_eq!(v.relation, LoewnerRelation::Leq);
        let x = diag(&[1.0, 2.0]);
        assert_eq!(loewner_compare(&x, &x, 1e-8).unwrap().relation, LoewnerRelation::Eq);
        let v = loewner_compare(&diag(&[1.0, 3.0]), &diag(&[2.0, 2.0]), 1e-8).unwrap();
        assert_eq!(v.relation, LoewnerRelation::Incomparable);
    }

    #[test]
    fn gauge_examples() {
        let h = diag(&[3.0, -4.0]);
        assert_eq!(gauge_norm(&h, GaugeNormKind::Spectral).unwrap(), 4.0);
        assert_eq!(gauge_norm(&h, GaugeNormKind::Trace).unwrap(), 7.0);
        assert_eq!(gauge_norm(&h, GaugeNormKind::Frobenius).unwrap(), 5.0);
        assert_eq!(gauge_norm(&h, GaugeNormKind::KyFan(1)).unwrap(), 4.0);
        assert!(matches!(
            gauge_norm(&h, GaugeNormKind::KyFan(3)),
            Err(Error::KyFanOutOfRange { k: 3, dim: 2 })
        ));
        assert!("kyfan:2".parse::<GaugeNormKind>().unwrap() == GaugeNormKind::KyFan(2));
    }

    #[test]
    fn projector_examples() {
        assert_eq!(range_projector(&diag(&[2.0, 5.0]), 1e-10).unwrap(), diag(&[1.0, 1.0]));
        assert_eq!(range_projector(&diag(&[1.0, 0.0]), 1e-10).unwrap(), diag(&[1.0, 0.0]));
        assert!(range_projector(&diag(&[1.0, -1.0]), 1e-10).is_err());
    }

    #[test]
    fn pd_checks() {
        assert!(is_pd(&diag(&[1.0, 1e-3])));
        assert!(!is_pd(&diag(&[1.0, 0.0])));
        assert!(diag(&[1.0, 0.0]).inverse_pd().is_err());
    }
}
