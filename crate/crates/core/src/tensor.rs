//! Even-order square tensors over the complex field and the Einstein product.
//!
//! A tensor in `C^{I_1 x ... x I_N x I_1 x ... x I_N}` is stored through its
//! square unfolding: a `D x D` matrix with `D = I_1 * ... * I_N`, where the
//! row index is the row-major mixed-radix encoding of `(i_1, ..., i_N)` and
//! the column index that of `(j_1, ..., j_N)`. Under this isomorphism the
//! Einstein product `A *_N B` is the matrix product of the unfoldings.

use std::ops::Deref;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance for accepting a tensor as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-9;

/// Index dimensions `(I_1, ..., I_N)` of an even-order square tensor.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct TensorShape {
    dims: Vec<usize>,
}

impl TensorShape {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidShape("dims must be nonempty".into()));
        }
        if let Some(pos) = dims.iter().position(|&d| d == 0) {
            return Err(Error::InvalidShape(format!("dimension {pos} is zero")));
        }
        dims.iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .and_then(|d| d.checked_mul(d))
            .ok_or_else(|| Error::InvalidShape("unfolding size overflows".into()))?;
        Ok(Self { dims })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// The order parameter `N` (the tensor itself has order `2N`).
    pub fn order(&self) -> usize {
        self.dims.len()
    }

    /// Side length `D` of the square unfolding.
    pub fn side(&self) -> usize {
        self.dims.iter().product()
    }

    /// Row-major mixed-radix encoding of a multi-index.
    pub fn encode(&self, index: &[usize]) -> Result<usize> {
        if index.len() != self.dims.len() {
            return Err(Error::InvalidArgument(format!(
                "multi-index of length {} for order {}",
                index.len(),
                self.dims.len()
            )));
        }
        let mut flat = 0;
        for (&i, &d) in index.iter().zip(&self.dims) {
            if i >= d {
                return Err(Error::InvalidArgument(format!("index {i} out of range {d}")));
            }
            flat = flat * d + i;
        }
        Ok(flat)
    }

    pub fn decode(&self, mut flat: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        for (slot, &d) in out.iter_mut().zip(&self.dims).rev() {
            *slot = flat % d;
            flat /= d;
        }
        out
    }
}

impl TryFrom<Vec<usize>> for TensorShape {
    type Error = Error;
    fn try_from(dims: Vec<usize>) -> Result<Self> {
        Self::new(dims)
    }
}

impl From<TensorShape> for Vec<usize> {
    fn from(shape: TensorShape) -> Self {
        shape.dims
    }
}

/// A general (not necessarily Hermitian) even-order square tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    shape: TensorShape,
    mat: DMatrix<Complex64>,
}

impl Tensor {
    pub fn zeros(shape: &TensorShape) -> Self {
        let d = shape.side();
        Self {
            shape: shape.clone(),
            mat: DMatrix::zeros(d, d),
        }
    }

    pub fn identity(shape: &TensorShape) -> Self {
        let d = shape.side();
        Self {
            shape: shape.clone(),
            mat: DMatrix::identity(d, d),
        }
    }

    /// Inverse of [`Tensor::unfold`]: reinterpret a `D x D` matrix as a tensor.
    pub fn fold(shape: &TensorShape, mat: DMatrix<Complex64>) -> Result<Self> {
        let d = shape.side();
        if mat.nrows() != d || mat.ncols() != d {
            return Err(Error::InvalidShape(format!(
                "unfolding is {}x{}, shape {:?} needs {d}x{d}",
                mat.nrows(),
                mat.ncols(),
                shape.dims()
            )));
        }
        Ok(Self {
            shape: shape.clone(),
            mat,
        })
    }

    /// Build from entries in row-major `(i_1..i_N, j_1..j_N)` order.
    pub fn from_entries(shape: &TensorShape, entries: &[Complex64]) -> Result<Self> {
        let d = shape.side();
        if entries.len() != d * d {
            return Err(Error::InvalidShape(format!(
                "expected {} entries, got {}",
                d * d,
                entries.len()
            )));
        }
        Ok(Self {
            shape: shape.clone(),
            mat: DMatrix::from_row_slice(d, d, entries),
        })
    }

    /// Entries in row-major `(i_1..i_N, j_1..j_N)` order.
    pub fn entries(&self) -> Vec<Complex64> {
        let d = self.side();
        let mut out = Vec::with_capacity(d * d);
        for r in 0..d {
            for c in 0..d {
                out.push(self.mat[(r, c)]);
            }
        }
        out
    }

    pub fn entry(&self, row: &[usize], col: &[usize]) -> Result<Complex64> {
        Ok(self.mat[(self.shape.encode(row)?, self.shape.encode(col)?)])
    }

    pub fn shape(&self) -> &TensorShape {
        &self.shape
    }

    pub fn side(&self) -> usize {
        self.mat.nrows()
    }

    /// The square unfolding as a `D x D` matrix view.
    pub fn unfold(&self) -> &DMatrix<Complex64> {
        &self.mat
    }

    pub fn into_unfolded(self) -> DMatrix<Complex64> {
        self.mat
    }

    fn check_shape(&self, other: &Tensor) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch {
                left: self.shape.dims().to_vec(),
                right: other.shape.dims().to_vec(),
            });
        }
        Ok(())
    }

    /// Einstein product `self *_N other`.
    pub fn einstein(&self, other: &Tensor) -> Result<Tensor> {
        self.check_shape(other)?;
        Ok(Tensor {
            shape: self.shape.clone(),
            mat: &self.mat * &other.mat,
        })
    }

    /// Conjugate index swap `T^H`.
    pub fn adjoint(&self) -> Tensor {
        Tensor {
            shape: self.shape.clone(),
            mat: self.mat.adjoint(),
        }
    }

    pub fn add(&self, other: &Tensor) -> Result<Tensor> {
        self.check_shape(other)?;
        Ok(Tensor {
            shape: self.shape.clone(),
            mat: &self.mat + &other.mat,
        })
    }

    pub fn sub(&self, other: &Tensor) -> Result<Tensor> {
        self.check_shape(other)?;
        Ok(Tensor {
            shape: self.shape.clone(),
            mat: &self.mat - &other.mat,
        })
    }

    pub fn scale(&self, s: f64) -> Tensor {
        Tensor {
            shape: self.shape.clone(),
            mat: &self.mat * Complex64::new(s, 0.0),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.mat.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `||T - T^H||_F`.
    pub fn hermitian_defect(&self) -> f64 {
        (&self.mat - self.mat.adjoint())
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn trace(&self) -> Complex64 {
        self.mat.trace()
    }

    /// Inverse under the Einstein product, if the unfolding is invertible.
    pub fn inverse(&self) -> Result<Tensor> {
        let inv = self
            .mat
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::InvalidArgument("tensor is singular".into()))?;
        Ok(Tensor {
            shape: self.shape.clone(),
            mat: inv,
        })
    }

    pub fn to_json(&self) -> TensorJson {
        let entries = self.entries();
        TensorJson {
            dims: self.shape.dims().to_vec(),
            re: entries.iter().map(|z| z.re).collect(),
            im: entries.iter().map(|z| z.im).collect(),
        }
    }

    pub fn from_json(json: &TensorJson) -> Result<Tensor> {
        if json.re.len() != json.im.len() {
            return Err(Error::Parse(format!(
                "re has {} entries, im has {}",
                json.re.len(),
                json.im.len()
            )));
        }
        let shape = TensorShape::new(json.dims.clone())?;
        let entries: Vec<Complex64> = json
            .re
            .iter()
            .zip(&json.im)
            .map(|(&re, &im)| Complex64::new(re, im))
            .collect();
        Tensor::from_entries(&shape, &entries)
    }
}

/// On-disk tensor layout: `{"dims": [...], "re": [...], "im": [...]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensorJson {
    pub dims: Vec<usize>,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl Serialize for Tensor {
    fn serialize<S: serde::Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Tensor {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> core::result::Result<Self, D::Error> {
        let json = TensorJson::deserialize(d)?;
        Tensor::from_json(&json).map_err(serde::de::Error::custom)
    }
}

/// A tensor whose unfolding is Hermitian.
///
/// Construction accepts inputs with `||H - H^H||_F <= 1e-9 * max(1, ||H||_F)`
/// and stores the symmetrized `(H + H^H) / 2`.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianTensor(Tensor);

impl HermitianTensor {
    pub fn new(t: Tensor) -> Result<Self> {
        let defect = t.hermitian_defect();
        let allowed = HERMITIAN_TOL * t.frobenius_norm().max(1.0);
        if !(defect <= allowed) {
            return Err(Error::NotHermitian { defect, allowed });
        }
        Ok(Self::symmetrized(t))
    }

    /// Symmetrize without the tolerance check. Callers guarantee the input
    /// is Hermitian up to rounding.
    pub(crate) fn symmetrized(t: Tensor) -> Self {
        let Tensor { shape, mat } = t;
        let half = Complex64::new(0.5, 0.0);
        let sym = (&mat + mat.adjoint()) * half;
        HermitianTensor(Tensor { shape, mat: sym })
    }

    pub fn from_unfolded(shape: &TensorShape, mat: DMatrix<Complex64>) -> Result<Self> {
        Self::new(Tensor::fold(shape, mat)?)
    }

    /// Real symmetric unfolding given row-major.
    pub fn from_real_rows(shape: &TensorShape, rows: &[f64]) -> Result<Self> {
        let entries: Vec<Complex64> = rows.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Self::new(Tensor::from_entries(shape, &entries)?)
    }

    pub fn identity(shape: &TensorShape) -> Self {
        HermitianTensor(Tensor::identity(shape))
    }

    pub fn zeros(shape: &TensorShape) -> Self {
        HermitianTensor(Tensor::zeros(shape))
    }

    pub fn diagonal(shape: &TensorShape, diag: &[f64]) -> Result<Self> {
        let d = shape.side();
        if diag.len() != d {
            return Err(Error::InvalidShape(format!(
                "diagonal has {} entries, side is {d}",
                diag.len()
            )));
        }
        let mut mat = DMatrix::zeros(d, d);
        for (i, &v) in diag.iter().enumerate() {
            mat[(i, i)] = Complex64::new(v, 0.0);
        }
        Ok(HermitianTensor(Tensor {
            shape: shape.clone(),
            mat,
        }))
    }

    pub fn as_tensor(&self) -> &Tensor {
        &self.0
    }

    pub fn into_tensor(self) -> Tensor {
        self.0
    }

    pub fn add(&self, other: &HermitianTensor) -> Result<HermitianTensor> {
        Ok(HermitianTensor(self.0.add(&other.0)?))
    }

    pub fn sub(&self, other: &HermitianTensor) -> Result<HermitianTensor> {
        Ok(HermitianTensor(self.0.sub(&other.0)?))
    }

    pub fn scale(&self, s: f64) -> HermitianTensor {
        HermitianTensor(self.0.scale(s))
    }

    /// `self + s * I`.
    pub fn shift(&self, s: f64) -> HermitianTensor {
        let mut mat = self.0.mat.clone();
        for i in 0..mat.nrows() {
            mat[(i, i)] += Complex64::new(s, 0.0);
        }
        HermitianTensor(Tensor {
            shape: self.0.shape.clone(),
            mat,
        })
    }

    /// Linear combination `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &HermitianTensor, b: f64) -> Result<HermitianTensor> {
        Ok(HermitianTensor(self.0.scale(a).add(&other.0.scale(b))?))
    }

    /// `K^H *_N self *_N K`.
    pub fn congruence(&self, k: &Tensor) -> Result<HermitianTensor> {
        let t = k.adjoint().einstein(&self.0)?.einstein(k)?;
        Ok(Self::symmetrized(t))
    }

    /// `self *_N inner *_N self`, Hermitian whenever both factors are.
    pub fn sandwich(&self, inner: &HermitianTensor) -> Result<HermitianTensor> {
        let t = self.0.einstein(&inner.0)?.einstein(&self.0)?;
        Ok(Self::symmetrized(t))
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.0)?)
    }

    pub fn from_json_str(s: &str) -> Result<HermitianTensor> {
        let t: Tensor = serde_json::from_str(s)?;
        HermitianTensor::new(t)
    }
}

impl Deref for HermitianTensor {
    type Target = Tensor;
    fn deref(&self) -> &Tensor {
        &self.0
    }
}

impl Serialize for HermitianTensor {
    fn serialize<S: serde::Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

impl<'de> Deserialize<'de> for HermitianTensor {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> core::result::Result<Self, D::Error> {
        let t = Tensor::deserialize(d)?;
        HermitianTensor::new(t).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shape22() -> TensorShape {
        TensorShape::new(vec![2, 2]).unwrap()
    }

    #[test]
    fn shape_rejects_empty_and_zero() {
        assert!(TensorShape::new(vec![]).is_err());
        assert!(TensorShape::new(vec![2, 0]).is_err());
    }

    #[test]
    fn encode_decode_mixed_radix() {
        let s = TensorShape::new(vec![2, 3, 4]).unwrap();
        assert_eq!(s.side(), 24);
        assert_eq!(s.encode(&[1, 2, 3]).unwrap(), 23);
        assert_eq!(s.encode(&[0, 1, 0]).unwrap(), 4);
        for flat in 0..24 {
            assert_eq!(s.encode(&s.decode(flat)).unwrap(), flat);
        }
        assert!(s.encode(&[2, 0, 0]).is_err());
    }

    #[test]
    fn identity_unfolds_to_identity_matrix() {
        let i = Tensor::identity(&shape22());
        assert_eq!(i.unfold(), &DMatrix::<Complex64>::identity(4, 4));
    }

    #[test]
    fn fold_unfold_is_exact() {
        let s = shape22();
        let m = DMatrix::from_fn(4, 4, |r, c| Complex64::new(r as f64 * 0.1 + 1.0 / 3.0, c as f64));
        let t = Tensor::fold(&s, m.clone()).unwrap();
        assert_eq!(t.unfold(), &m);
        assert_eq!(Tensor::fold(&s, t.clone().into_unfolded()).unwrap(), t);
        assert!(Tensor::fold(&s, DMatrix::zeros(3, 3)).is_err());
    }

    #[test]
    fn einstein_shape_mismatch() {
        let a = Tensor::identity(&shape22());
        let b = Tensor::identity(&TensorShape::new(vec![4]).unwrap());
        assert!(matches!(a.einstein(&b), Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn hermitian_tolerance_and_symmetrization() {
        let s = TensorShape::new(vec![2]).unwrap();
        let ok = Tensor::from_entries(
            &s,
            &[
                Complex64::new(1.0, 0.0),
                Complex64::new(0.5, 0.25 + 1e-12),
                Complex64::new(0.5, -0.25),
                Complex64::new(2.0, 0.0),
            ],
        )
        .unwrap();
        let h = HermitianTensor::new(ok).unwrap();
        assert_eq!(h.hermitian_defect(), 0.0);
        let bad = Tensor::from_entries(
            &s,
            &[
                Complex64::new(1.0, 0.0),
                Complex64::new(0.5, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(2.0, 0.0),
            ],
        )
        .unwrap();
        assert!(matches!(HermitianTensor::new(bad), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn json_layout_and_round_trip() {
        let s = TensorShape::new(vec![2]).unwrap();
        let h = HermitianTensor::from_unfolded(
            &s,
            DMatrix::from_row_slice(
                2,
                2,
                &[
                    Complex64::new(0.1, 0.0),
                    Complex64::new(1.0 / 3.0, 0.7),
                    Complex64::new(1.0 / 3.0, -0.7),
                    Complex64::new(2.0, 0.0),
                ],
            ),
        )
        .unwrap();
        let text = h.to_json_string().unwrap();
        assert!(text.starts_with("{\"dims\":[2],\"re\":[0.1,0.3333333333333333"));
        let back = HermitianTensor::from_json_str(&text).unwrap();
        assert_eq!(back, h);
    }
}
