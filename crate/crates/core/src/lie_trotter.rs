//! Tensor exponential and logarithm, the Lie-Trotter expression
//! `(e^{qX} #_g e^{qY})^{1/q}` and its limit `exp(g'(1) X + (1 - g'(1)) Y)`.

use serde::{Deserialize, Serialize};

use crate::connection::{derivative_at_one, power_lift, ConnectionFunction, PowerProperty};
use crate::error::{Error, Result};
use crate::means::mean_pd;
use crate::spectral::{distance, gauge_norm, loewner_compare, require_pd, GaugeNormKind, LoewnerVerdict};
use crate::tensor::HermitianTensor;

pub fn tensor_exp(h: &HermitianTensor) -> HermitianTensor {
    h.eig().map(f64::exp)
}

pub fn tensor_log(p: &HermitianTensor) -> Result<HermitianTensor> {
    Ok(require_pd(p)?.map(f64::ln))
}

/// `(e^{qX} #_g e^{qY})^{1/q}`.
pub fn lt_expression(q: f64, x: &HermitianTensor, y: &HermitianTensor, g: &ConnectionFunction) -> Result<HermitianTensor> {
    if q == 0.0 || !q.is_finite() {
        return Err(Error::InvalidArgument(format!("q must be finite and nonzero, got {q}")));
    }
    let m = mean_pd(&tensor_exp(&x.scale(q)), &tensor_exp(&y.scale(q)), g)?;
    Ok(require_pd(&m)?.map(|l| l.powf(1.0 / q)))
}

/// `exp(g'(1) X + (1 - g'(1)) Y)`, the `q -> 0` limit for normalized `g`.
pub fn lt_limit(x: &HermitianTensor, y: &HermitianTensor, g: &ConnectionFunction) -> Result<HermitianTensor> {
    if (g.value_at_1() - 1.0).abs() > 1e-12 {
        return Err(Error::Precondition(format!(
            "{} has g(1) = {}, the limit needs g(1) = 1",
            g.id(),
            g.value_at_1()
        )));
    }
    let w = derivative_at_one(g)?;
    Ok(tensor_exp(&x.combine(w, y, 1.0 - w)?))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceStudy {
    pub q_grid: Vec<f64>,
    pub distances: Vec<f64>,
    /// Each halving step grows the distance by at most 5%.
    pub monotone: bool,
    pub final_relative_error: f64,
}

/// Default grid `2^-1, ..., 2^-8`.
pub fn default_q_grid() -> Vec<f64> {
    (1..=8).map(|k| 2f64.powi(-k)).collect()
}

pub const MONOTONE_SLACK: f64 = 1.05;

pub fn convergence_study(
    x: &HermitianTensor,
    y: &HermitianTensor,
    g: &ConnectionFunction,
    q_grid: &[f64],
    norm: GaugeNormKind,
) -> Result<ConvergenceStudy> {
    if q_grid.is_empty() || q_grid.iter().any(|&q| !(q > 0.0)) || q_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument("q grid must be positive and strictly descending".into()));
    }
    let limit = lt_limit(x, y, g)?;
    let limit_norm = gauge_norm(&limit, norm)?;
    let distances = q_grid
        .iter()
        .map(|&q| distance(&lt_expression(q, x, y, g)?, &limit, norm))
        .collect::<Result<Vec<f64>>>()?;
    // Rounding-level distances do not count against monotonicity.
    let floor = 1e-12 * limit_norm.max(1.0);
    let monotone = distances.windows(2).all(|w| w[1] <= MONOTONE_SLACK * w[0] + floor);
    let last = *distances.last().expect("nonempty grid");
    Ok(ConvergenceStudy {
        q_grid: q_grid.to_vec(),
        distances,
        monotone,
        final_relative_error: last / limit_norm,
    })
}

/// Both sides of the Lie-Trotter ordering: the log-affine exponential
/// `exp((m + g'(1)) log X + (1 - m - g'(1)) log Y)` and the root mean
/// `(X^q #_{x^m g} Y^q)^{1/q}`.
pub fn lt_ordering_sides(
    x: &HermitianTensor,
    y: &HermitianTensor,
    g: &ConnectionFunction,
    m: u32,
    q: f64,
) -> Result<(HermitianTensor, HermitianTensor)> {
    let w = m as f64 + derivative_at_one(g)?;
    let lhs = tensor_exp(&tensor_log(x)?.combine(w, &tensor_log(y)?, 1.0 - w)?);
    let lifted = power_lift(g, m);
    let mean = mean_pd(&x.powf(q)?, &y.powf(q)?, &lifted)?;
    let rhs = require_pd(&mean)?.map(|l| l.powf(1.0 / q));
    Ok((lhs, rhs))
}

/// Compare the log-affine exponential against the root mean. The premise
/// `X #_{x^m g} Y <= I` (pmi branch) or `>= I` (pmd branch) is checked first.
/// The pmi branch asserts `LEQ`, the pmd branch `GEQ`.
pub fn lt_ordering_check(
    x: &HermitianTensor,
    y: &HermitianTensor,
    g: &ConnectionFunction,
    m: u32,
    q: f64,
    branch: PowerProperty,
    tol: f64,
) -> Result<LoewnerVerdict> {
    if !(q > 0.0 && q <= 0.5) {
        return Err(Error::InvalidArgument(format!("q must lie in (0, 1/2], got {q}")));
    }
    let lifted = power_lift(g, m);
    let premise = mean_pd(x, y, &lifted)?;
    let id = HermitianTensor::identity(x.shape());
    let v = loewner_compare(&premise, &id, tol)?;
    let ok = match branch {
        PowerProperty::Pmi => v.leq(),
        PowerProperty::Pmd => v.geq(),
    };
    if !ok {
        return Err(Error::Precondition(format!(
            "premise on X #_(x^{m} g) Y versus I fails (difference spectrum [{:e}, {:e}])",
            v.diff_min, v.diff_max
        )));
    }
    let (lhs, rhs) = lt_ordering_sides(x, y, g, m, q)?;
    loewner_compare(&lhs, &rhs, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connection::{geometric, power, transpose_fn};
    use crate::spectral::LoewnerRelation;
    use crate::tensor::TensorShape;

    fn diag(v: &[f64]) -> HermitianTensor {
        HermitianTensor::diagonal(&TensorShape::new(vec![v.len()]).unwrap(), v).unwrap()
    }

    fn close(a: &HermitianTensor, b: &HermitianTensor, tol: f64) -> bool {
        a.sub(b).unwrap().frobenius_norm() <= tol * b.frobenius_norm().max(1.0)
    }

    #[test]
    fn exp_log_basics() {
        let s = TensorShape::new(vec![2, 2]).unwrap();
        assert_eq!(tensor_exp(&HermitianTensor::zeros(&s)), HermitianTensor::identity(&s));
        let h = diag(&[1.0, -1.0]);
        assert!(close(&tensor_log(&tensor_exp(&h)).unwrap(), &h, 1e-15));
        assert!(tensor_log(&diag(&[1.0, 0.0])).is_err());
    }

    #[test]
    fn commuting_expression_is_exact() {
        let x = diag(&[4f64.ln(), 0.0]);
        let y = diag(&[0.0, 9f64.ln()]);
        for q in [1.0, 0.25, 1e-3] {
            let e = lt_expression(q, &x, &y, &geometric()).unwrap();
            assert!(close(&e, &diag(&[2.0, 3.0]), 1e-9), "q = {q}");
        }
        assert!(lt_expression(0.0, &x, &y, &geometric()).is_err());
    }

    #[test]
    fn limit_weights() {
        let x = diag(&[0.3, -0.2]);
        let y = diag(&[-0.5, 0.9]);
        let l = lt_limit(&x, &y, &transpose_fn(&power(0.3))).unwrap();
        let expect = diag(&[(0.7f64 * 0.3 + 0.3 * -0.5).exp(), (0.7f64 * -0.2 + 0.3 * 0.9).exp()]);
        assert!(close(&l, &expect, 1e-14));
        let l = lt_limit(&x, &y, &power(1.0)).unwrap();
        assert!(close(&l, &tensor_exp(&x), 1e-15));
        let bad = crate::connection::psi(1.0).unwrap();
        assert!(matches!(lt_limit(&x, &y, &bad), Err(Error::Precondition(_))));
    }

    #[test]
    fn ordering_equality_case() {
        let x = diag(&[(-1f64).exp(), (-1f64).exp()]);
        let v = lt_ordering_check(&x, &x, &geometric(), 2, 0.25, PowerProperty::Pmi, 1e-8).unwrap();
        assert_eq!(v.relation, LoewnerRelation::Eq);
        assert!(lt_ordering_check(&x, &x, &geometric(), 2, 0.75, PowerProperty::Pmi, 1e-8).is_err());
        let big = diag(&[3.0, 3.0]);
        assert!(matches!(
            lt_ordering_check(&big, &big, &geometric(), 2, 0.25, PowerProperty::Pmi, 1e-8),
            Err(Error::Precondition(_))
        ));
    }
}
