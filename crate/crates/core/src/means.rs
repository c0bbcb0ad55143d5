//! Bivariate means `X #_g Y = Y^{1/2} g(Y^{-1/2} X Y^{-1/2}) Y^{1/2}`.
//!
//! The second argument is the outer conjugation. For positive semidefinite
//! inputs the inner ratio is replaced by `eta(X, Y)`, the range-compatible
//! solution of `X = Y^{1/2} eta Y^{1/2}`.

use serde::{Deserialize, Serialize};

use crate::connection::{power_lift, ConnectionFunction};
use crate::error::{Error, Result};
use crate::numeric::NeumaierSum;
use crate::spectral::{
    apply_named, distance, gauge_norm, require_pd, require_psd, spectral_decompose_with,
    GaugeNormKind, DEFAULT_PSD_TOL, DEFAULT_RANK_TOL,
};
use crate::tensor::HermitianTensor;

fn apply_g(h: &HermitianTensor, g: &ConnectionFunction) -> Result<HermitianTensor> {
    apply_named(h, g.id(), |l| g.eval(l), true)
}

/// Mean of two positive definite tensors.
pub fn mean_pd(x: &HermitianTensor, y: &HermitianTensor, g: &ConnectionFunction) -> Result<HermitianTensor> {
    if x.shape() != y.shape() {
        return Err(Error::ShapeMismatch {
            left: x.shape().dims().to_vec(),
            right: y.shape().dims().to_vec(),
        });
    }
    require_pd(x)?;
    let sd = require_pd(y)?;
    let y_half = sd.map(f64::sqrt);
    let y_ihalf = sd.map(|l| 1.0 / l.sqrt());
    let ratio = y_ihalf.sandwich(x)?;
    y_half.sandwich(&apply_g(&ratio, g)?)
}

/// `X #_{F_n} Y` with `F_n(x) = x^n f(x)`, through
/// `X #_{F_n} Y = X Y^{-1} (X #_{F_{n-2}} Y) Y^{-1} X`.
pub fn mean_recursive(
    x: &HermitianTensor,
    y: &HermitianTensor,
    f: &ConnectionFunction,
    n: u32,
) -> Result<HermitianTensor> {
    match n {
        0 => mean_pd(x, y, f),
        1 => mean_pd(x, y, &power_lift(f, 1)),
        _ => {
            let inner = mean_recursive(x, y, f, n - 2)?;
            let y_inv = y.inverse_pd()?;
            // K = Y^{-1} X, so K^H inner K = X Y^{-1} inner Y^{-1} X.
            let k = y_inv.einstein(x)?;
            inner.congruence(&k)
        }
    }
}

#[derive(Clone, Debug)]
pub struct EtaResult {
    pub eta: HermitianTensor,
    /// Orthogonal projector onto the range of `Y`.
    pub projector: HermitianTensor,
    /// Least `c` with `X <= c Y`, i.e. `lambda_max(eta)`.
    pub domination_constant: f64,
    /// `eta (I - P) = 0` within tolerance.
    pub range_ok: bool,
}

/// `eta(X, Y) = (Y^{1/2})^+ X (Y^{1/2})^+`, compressed to the range of `Y`.
pub fn eta(x: &HermitianTensor, y: &HermitianTensor, rank_tol: f64) -> Result<EtaResult> {
    require_psd(x, DEFAULT_PSD_TOL)?;
    require_psd(y, DEFAULT_PSD_TOL)?;
    let sd = spectral_decompose_with(y, rank_tol);
    let cut = rank_tol * sd.lambda_max().max(0.0);
    let keep = |l: f64| l > cut && l > 0.0;
    let p = sd.map(|l| if keep(l) { 1.0 } else { 0.0 });
    let pinv_half = sd.map(|l| if keep(l) { 1.0 / l.sqrt() } else { 0.0 });

    let compressed = p.sandwich(x)?;
    let residual = x.sub(&compressed)?.frobenius_norm();
    if residual > DEFAULT_PSD_TOL * x.frobenius_norm() {
        return Err(Error::Domination { residual });
    }
    let eta = p.sandwich(&pinv_half.sandwich(x)?)?;
    let complement = HermitianTensor::identity(y.shape()).sub(&p)?;
    let leak = eta.einstein(&complement)?.frobenius_norm();
    let domination_constant = eta.lambda_max().max(0.0);
    Ok(EtaResult {
        range_ok: leak <= 1e-10 * eta.frobenius_norm().max(1.0),
        eta,
        projector: p,
        domination_constant,
    })
}

/// Mean of positive semidefinite tensors with `X <= cY`, defined as the
/// limit `Y^{1/2} g(eta) Y^{1/2}`. Null eigenvalues of `eta` map to `g(0+)`.
pub fn mean_psd(x: &HermitianTensor, y: &HermitianTensor, g: &ConnectionFunction) -> Result<HermitianTensor> {
    mean_psd_with(x, y, g, DEFAULT_RANK_TOL)
}

pub fn mean_psd_with(
    x: &HermitianTensor,
    y: &HermitianTensor,
    g: &ConnectionFunction,
    rank_tol: f64,
) -> Result<HermitianTensor> {
    let g0 = g.value_at_0plus();
    if !g0.is_finite() {
        return Err(Error::UnsupportedFunction(format!(
            "{} has g(0+) = inf; the mean is undefined on singular inputs",
            g.id()
        )));
    }
    let e = eta(x, y, rank_tol)?;
    let sd = e.eta.eig();
    let cut = rank_tol * sd.lambda_max().max(0.0);
    let vals: Vec<f64> = sd
        .eigenvalues()
        .iter()
        .map(|&l| if l > cut && l > 0.0 { g.eval(l) } else { g0 })
        .collect();
    if let Some((&at, &value)) = sd.eigenvalues().iter().zip(&vals).find(|(_, v)| !v.is_finite()) {
        return Err(Error::Domain {
            function: g.id().to_string(),
            at,
            value,
        });
    }
    let g_eta = sd.with_values(&vals);
    let y_half = y.powf(0.5)?;
    y_half.sandwich(&g_eta)
}

/// Convergence record for a perturbed sequence approaching a PSD mean.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RttDiagnostic {
    /// Perturbation sizes (`eps`, or `1/n` for a sequence).
    pub epsilon_grid: Vec<f64>,
    /// Mean gauge-norm distance to the limit at each step.
    pub errors: Vec<f64>,
    /// Last error divided by the norm of the limit (absolute if the limit is zero).
    pub final_relative_error: f64,
    /// Errors nonincreasing and final relative error at most `1e-3`.
    pub converged: bool,
    /// Errors strictly decreasing.
    pub strictly_decreasing: bool,
}

pub const RTT_THRESHOLD: f64 = 1e-3;

fn diagnostic(grid: Vec<f64>, errors: Vec<f64>, limit_norm: f64) -> RttDiagnostic {
    let nonincreasing = errors.windows(2).all(|w| w[1] <= w[0]);
    let strictly_decreasing = errors.windows(2).all(|w| w[1] < w[0]);
    let last = errors.last().copied().unwrap_or(0.0);
    let final_relative_error = if limit_norm > 0.0 { last / limit_norm } else { last };
    RttDiagnostic {
        epsilon_grid: grid,
        errors,
        final_relative_error,
        converged: nonincreasing && final_relative_error <= RTT_THRESHOLD,
        strictly_decreasing,
    }
}

fn check_grid(eps_grid: &[f64]) -> Result<()> {
    if eps_grid.is_empty() || eps_grid.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::InvalidArgument("perturbation grid must be nonempty and positive".into()));
    }
    if eps_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument("perturbation grid must be strictly descending".into()));
    }
    Ok(())
}

/// `(X + eps I) #_g (Y + eps I)` along a descending grid, measured against
/// [`mean_psd`].
pub fn epsilon_mean_limit(
    x: &HermitianTensor,
    y: &HermitianTensor,
    g: &ConnectionFunction,
    eps_grid: &[f64],
    norm: GaugeNormKind,
) -> Result<(HermitianTensor, RttDiagnostic)> {
    check_grid(eps_grid)?;
    let shape = x.shape();
    let perturbations: Vec<HermitianTensor> = eps_grid
        .iter()
        .map(|&e| HermitianTensor::identity(shape).scale(e))
        .collect();
    let (limit, mut diag) = sequence_mean_limit(x, y, g, &perturbations, norm)?;
    diag.epsilon_grid = eps_grid.to_vec();
    Ok((limit, diag))
}

/// `(X + A_n) #_g (Y + A_n)` for a sequence of PD perturbations `A_n -> 0`.
/// The recorded grid is the spectral norm of each perturbation.
pub fn sequence_mean_limit(
    x: &HermitianTensor,
    y: &HermitianTensor,
    g: &ConnectionFunction,
    perturbations: &[HermitianTensor],
    norm: GaugeNormKind,
) -> Result<(HermitianTensor, RttDiagnostic)> {
    let limit = mean_psd(x, y, g)?;
    let mut grid = Vec::with_capacity(perturbations.len());
    let mut errors = Vec::with_capacity(perturbations.len());
    for a in perturbations {
        grid.push(gauge_norm(a, GaugeNormKind::Spectral)?);
        let m = mean_pd(&x.add(a)?, &y.add(a)?, g)?;
        errors.push(distance(&m, &limit, norm)?);
    }
    let limit_norm = gauge_norm(&limit, norm)?;
    Ok((limit, diagnostic(grid, errors, limit_norm)))
}

/// Expected-distance version over a sample of pairs: convergence in the
/// random tensor topology, with the expectation taken as a sample mean.
pub fn rtt_study(
    pairs: &[(HermitianTensor, HermitianTensor)],
    g: &ConnectionFunction,
    eps_grid: &[f64],
    norm: GaugeNormKind,
) -> Result<RttDiagnostic> {
    check_grid(eps_grid)?;
    if pairs.is_empty() {
        return Err(Error::InvalidArgument("no sample pairs".into()));
    }
    let mut sums = vec![NeumaierSum::default(); eps_grid.len()];
    let mut limit_norm = NeumaierSum::default();
    for (x, y) in pairs {
        let (limit, d) = epsilon_mean_limit(x, y, g, eps_grid, norm)?;
        for (s, e) in sums.iter_mut().zip(&d.errors) {
            s.add(*e);
        }
        limit_norm.add(gauge_norm(&limit, norm)?);
    }
    let n = pairs.len() as f64;
    let errors = sums.iter().map(|s| s.sum() / n).collect();
    Ok(diagnostic(eps_grid.to_vec(), errors, limit_norm.sum() / n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connection::{geometric, square};
    use crate::tensor::TensorShape;

    fn diag(v: &[f64]) -> HermitianTensor {
        HermitianTensor::diagonal(&TensorShape::new(vec![v.len()]).unwrap(), v).unwrap()
    }

    fn close(a: &HermitianTensor, b: &HermitianTensor, tol: f64) -> bool {
        a.sub(b).unwrap().frobenius_norm() <= tol * b.frobenius_norm().max(1.0)
    }

    #[test]
    fn commuting_geometric() {
        let m = mean_pd(&diag(&[4.0, 4.0]), &diag(&[1.0, 1.0]), &geometric()).unwrap();
        assert!(close(&m, &diag(&[2.0, 2.0]), 1e-15));
    }

    #[test]
    fn scalar_recursion() {
        let m = mean_recursive(&diag(&[4.0, 4.0]), &diag(&[1.0, 1.0]), &geometric(), 2).unwrap();
        assert!(close(&m, &diag(&[32.0, 32.0]), 1e-14));
    }

    #[test]
    fn non_pd_rejected() {
        assert!(matches!(
            mean_pd(&diag(&[1.0, 0.0]), &diag(&[1.0, 1.0]), &geometric()),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn eta_examples() {
        let x = diag(&[0.3, 2.0]);
        let e = eta(&x, &diag(&[1.0, 1.0]), 1e-10).unwrap();
        assert!(close(&e.eta, &x, 1e-15));
        let e = eta(&diag(&[0.5, 0.0]), &diag(&[1.0, 0.0]), 1e-10).unwrap();
        assert!(close(&e.eta, &diag(&[0.5, 0.0]), 1e-15));
        assert!(e.range_ok);
        assert!((e.domination_constant - 0.5).abs() < 1e-15);
        assert!(matches!(
            eta(&diag(&[0.0, 1.0]), &diag(&[1.0, 0.0]), 1e-10),
            Err(Error::Domination { .. })
        ));
    }

    #[test]
    fn psd_mean_examples() {
        let m = mean_psd(&diag(&[0.5, 0.0]), &diag(&[1.0, 0.0]), &geometric()).unwrap();
        assert!(close(&m, &diag(&[0.5f64.sqrt(), 0.0]), 1e-15));
        let m = mean_psd(&diag(&[0.0, 0.0]), &diag(&[1.0, 2.0]), &geometric()).unwrap();
        assert_eq!(m.frobenius_norm(), 0.0);
        let z = diag(&[0.0, 0.0]);
        assert_eq!(mean_psd(&z, &z, &square()).unwrap().frobenius_norm(), 0.0);
        assert!(mean_psd(&diag(&[1.0, 0.0]), &z, &square()).is_err());
        let inv = crate::connection::power(-1.0);
        assert!(matches!(
            mean_psd(&diag(&[0.5, 0.0]), &diag(&[1.0, 0.0]), &inv),
            Err(Error::UnsupportedFunction(_))
        ));
    }

    #[test]
    fn epsilon_limit_on_rank_deficient_y() {
        let (limit, d) = epsilon_mean_limit(
            &diag(&[0.5, 0.0]),
            &diag(&[1.0, 0.0]),
            &geometric(),
            &[1e-2, 1e-4, 1e-6, 1e-8],
            GaugeNormKind::Frobenius,
        )
        .unwrap();
        assert!(close(&limit, &diag(&[0.5f64.sqrt(), 0.0]), 1e-15));
        assert!(d.strictly_decreasing && d.converged, "{d:?}");
        assert!(epsilon_mean_limit(
            &diag(&[0.5, 0.0]),
            &diag(&[1.0, 0.0]),
            &geometric(),
            &[1e-4, 1e-2],
            GaugeNormKind::Frobenius
        )
        .is_err());
    }
}
