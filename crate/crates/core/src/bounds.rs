//! Scalar bound factors: the Kantorovich constant, Kantorovich products
//! `K_k`, the spectral ratio factors `Psi`/`Phi`, and Monte Carlo trace tail
//! bounds with Ky Fan statistics.

use serde::{Deserialize, Serialize};

use crate::connection::ConnectionFunction;
use crate::error::{Error, Result};
use crate::means::eta;
use crate::numeric::{mean_stat, MeanStat};
use crate::spectral::{require_pd, spectral_decompose_with, DEFAULT_RANK_TOL};
use crate::tensor::HermitianTensor;

/// `K(m, M, p)`, the Kantorovich constant for spectra in `[m, M]`.
///
/// Equals 1 for `p` in `[0, 1]` or `m = M`. Evaluated in the scale-free form
/// with `h = M / m`.
pub fn kantorovich(m: f64, big_m: f64, p: f64) -> Result<f64> {
    if !(m > 0.0) || !(big_m >= m) || !big_m.is_finite() || !p.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "Kantorovich constant needs 0 < m <= M, got m = {m}, M = {big_m}"
        )));
    }
    if (0.0..=1.0).contains(&p) {
        return Ok(1.0);
    }
    let h = big_m / m;
    if h - 1.0 <= 1e-14 {
        return Ok(1.0);
    }
    let hp = h.powf(p);
    let first = ((p - 1.0) * (hp - 1.0) / (p * (hp - h))).powf(p);
    let second = (hp - h) / ((p - 1.0) * (h - 1.0));
    Ok((first * second).max(1.0))
}

/// Kantorovich factors `K_k` for `k = from..=m`, together with their product.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KkFactors {
    pub from: u32,
    pub factors: Vec<f64>,
    pub product: f64,
}

/// `K_k = K(1/lambda_max(T_k), 1/lambda_min(T_k), 2q)` with
/// `T_k = X^{-1} g(X)^{m-k}`, `g^{m-k}` read as a scalar power.
///
/// `X^{-1}` and `g(X)` share an eigenbasis, so the spectrum of `T_k` is
/// `g(lambda)^{m-k} / lambda` over the eigenvalues of `X`.
pub fn kk_factors(x: &HermitianTensor, g: &ConnectionFunction, m: u32, q: f64, from: u32) -> Result<KkFactors> {
    if !(q > 0.0) {
        return Err(Error::InvalidArgument(format!("q must be positive, got {q}")));
    }
    if from == 0 || from > m {
        return Err(Error::InvalidArgument(format!("k range {from}..={m} is empty")));
    }
    let sd = require_pd(x)?;
    let gl: Vec<f64> = sd.eigenvalues().iter().map(|&l| g.eval(l)).collect();
    let mut factors = Vec::with_capacity((m - from + 1) as usize);
    for k in from..=m {
        let e = (m - k) as i32;
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for (&l, &gv) in sd.eigenvalues().iter().zip(&gl) {
            let t = gv.powi(e) / l;
            if !(t > 0.0) || !t.is_finite() {
                return Err(Error::Domain {
                    function: g.id().to_string(),
                    at: l,
                    value: gv,
                });
            }
            lo = lo.min(t);
            hi = hi.max(t);
        }
        factors.push(kantorovich(1.0 / hi, 1.0 / lo, 2.0 * q)?);
    }
    let product = factors.iter().product();
    Ok(KkFactors {
        from,
        factors,
        product,
    })
}

/// `q = 2^n q0` with `q0` in `[1, 2]`, `n` as small as possible.
/// Exponents `q <= 1` map to `(0, q)`.
pub fn decompose_exponent(q: f64) -> Result<(u32, f64)> {
    if !(q > 0.0) || !q.is_finite() {
        return Err(Error::InvalidArgument(format!("exponent must be positive, got {q}")));
    }
    if q <= 2.0 {
        return Ok((0, q));
    }
    let mut n = (q / 2.0).log2().ceil().max(0.0) as u32;
    let mut q0 = q / 2f64.powi(n as i32);
    if q0 > 2.0 {
        n += 1;
        q0 = q / 2f64.powi(n as i32);
    } else if q0 < 1.0 && n > 0 {
        n -= 1;
        q0 = q / 2f64.powi(n as i32);
    }
    Ok((n, q0))
}

/// Extreme-eigenvalue products defining `Psi` (or `Phi` for decreasing `h`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioFactors {
    pub lower: f64,
    pub upper: f64,
    pub n: u32,
    pub q0: f64,
}

/// `(lambda_min, lambda_max)` of `f(Z)^{-a} f(Z^a)` over the range of `Z`.
fn ratio_extremes(z: &HermitianTensor, f: &ConnectionFunction, a: f64) -> Result<(f64, f64)> {
    let sd = spectral_decompose_with(z, DEFAULT_RANK_TOL);
    let cut = DEFAULT_RANK_TOL * sd.lambda_max().max(0.0);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &l in sd.eigenvalues().iter().filter(|&&l| l > cut && l > 0.0) {
        let r = f.eval(l.powf(a)) / f.eval(l).powf(a);
        if !r.is_finite() {
            return Err(Error::Domain {
                function: f.id().to_string(),
                at: l,
                value: r,
            });
        }
        lo = lo.min(r);
        hi = hi.max(r);
    }
    if lo > hi {
        return Err(Error::Precondition("Z has empty range".into()));
    }
    Ok((lo, hi))
}

/// `Z_k = eta(Y^{2^k}, X^{2^k})`.
pub fn z_level(x: &HermitianTensor, y: &HermitianTensor, k: u32) -> Result<HermitianTensor> {
    let e = 2f64.powi(k as i32);
    Ok(eta(&y.powf(e)?, &x.powf(e)?, DEFAULT_RANK_TOL)?.eta)
}

fn ratio_factors(q: f64, f: &ConnectionFunction, x: &HermitianTensor, y: &HermitianTensor) -> Result<RatioFactors> {
    let (n, q0) = decompose_exponent(q)?;
    let (mut lower, mut upper) = ratio_extremes(&z_level(x, y, n)?, f, q0)?;
    for k in 1..=n {
        let (lo, hi) = ratio_extremes(&z_level(x, y, k - 1)?, f, 2.0)?;
        lower *= lo;
        upper *= hi;
    }
    Ok(RatioFactors { lower, upper, n, q0 })
}

/// `Psi_lower`, `Psi_upper` for increasing `f`. Needs domination at every
/// dyadic level `0..=n`.
pub fn psi_factors(q: f64, f: &ConnectionFunction, x: &HermitianTensor, y: &HermitianTensor) -> Result<RatioFactors> {
    ratio_factors(q, f, x, y)
}

/// `Phi_lower`, `Phi_upper`: the same construction for decreasing `h`.
pub fn phi_factors(q: f64, h: &ConnectionFunction, x: &HermitianTensor, y: &HermitianTensor) -> Result<RatioFactors> {
    ratio_factors(q, h, x, y)
}

/// `(K1, K2) = (K(1/lmax, 1/lmin, q - 1), K(1/lmax, 1/lmin, 2q - 1))`.
pub fn prop310_factors(x: &HermitianTensor, q: f64) -> Result<(f64, f64)> {
    if !(q >= 1.0) {
        return Err(Error::InvalidArgument(format!("q must be >= 1, got {q}")));
    }
    let sd = require_pd(x)?;
    let (a, b) = (1.0 / sd.lambda_max(), 1.0 / sd.lambda_min());
    Ok((kantorovich(a, b, q - 1.0)?, kantorovich(a, b, 2.0 * q - 1.0)?))
}

/// Monte Carlo estimate of `Tr(E[Z^q] C^{-1})` and its standard error.
pub fn trace_tail_bound(samples: &[HermitianTensor], q: f64, c: &HermitianTensor) -> Result<MeanStat> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("no samples".into()));
    }
    if !(q >= 1.0) {
        return Err(Error::InvalidArgument(format!("q must be >= 1, got {q}")));
    }
    let c_inv = c.inverse_pd()?;
    let stats = samples
        .iter()
        .map(|z| trace_statistic(z, q, &c_inv))
        .collect::<Result<Vec<f64>>>()?;
    Ok(mean_stat(&stats))
}

/// `Tr(Z^q C^{-1})` for one sample, given `C^{-1}`.
pub fn trace_statistic(z: &HermitianTensor, q: f64, c_inv: &HermitianTensor) -> Result<f64> {
    let zq = if q == 1.0 { z.clone() } else { z.powf(q)? };
    Ok(zq.einstein(c_inv)?.trace().re)
}

/// Sum and product of the `k` largest eigenvalues.
pub fn kyfan_stats(h: &HermitianTensor, k: usize) -> Result<(f64, f64)> {
    let sd = h.eig();
    let d = sd.eigenvalues().len();
    if k == 0 || k > d {
        return Err(Error::KyFanOutOfRange { k, dim: d });
    }
    let top = &sd.eigenvalues()[..k];
    Ok((top.iter().sum(), top.iter().product()))
}

/// The scalar factors reported alongside a verification run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundFactors {
    pub kantorovich: f64,
    pub kk_list: Vec<f64>,
    pub psi_lower: f64,
    pub psi_upper: f64,
    pub phi_lower: f64,
    pub phi_upper: f64,
    pub k1: f64,
    pub k2: f64,
    pub m1: f64,
    pub m2: f64,
}

impl Default for BoundFactors {
    fn default() -> Self {
        Self {
            kantorovich: 1.0,
            kk_list: Vec::new(),
            psi_lower: 1.0,
            psi_upper: 1.0,
            phi_lower: 1.0,
            phi_upper: 1.0,
            k1: 1.0,
            k2: 1.0,
            m1: 1.0,
            m2: 1.0,
        }
    }
}
