//! Mean inequalities under data fusion and positive linear maps.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::connection::{transpose_fn, ConnectionFunction};
use crate::error::{Error, Result};
use crate::means::{eta, mean_psd};
use crate::spectral::{loewner_compare, LoewnerVerdict, DEFAULT_RANK_TOL};
use crate::tensor::{HermitianTensor, Tensor, TensorShape};

/// Completely positive maps: congruences, pinchings and convex mixtures.
#[derive(Clone, Debug, PartialEq)]
pub enum PositiveLinearMap {
    /// `H -> K^H H K`.
    Congruence(Tensor),
    /// `H -> sum_i P_i H P_i` for a partition of the unfolding index set.
    Pinching(Vec<Vec<usize>>),
    /// `H -> sum_i w_i L_i(H)` with nonnegative weights summing to 1.
    ConvexCombination(Vec<(f64, PositiveLinearMap)>),
}

impl PositiveLinearMap {
    pub fn pinching(groups: Vec<Vec<usize>>, side: usize) -> Result<Self> {
        let mut seen = vec![false; side];
        for &i in groups.iter().flatten() {
            if i >= side {
                return Err(Error::InvalidArgument(format!("pinching index {i} out of range {side}")));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidArgument(format!("pinching index {i} repeated")));
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidArgument("pinching groups must cover every index".into()));
        }
        Ok(Self::Pinching(groups))
    }

    pub fn mix(parts: Vec<(f64, PositiveLinearMap)>) -> Result<Self> {
        if parts.is_empty() || parts.iter().any(|(w, _)| !(*w >= 0.0)) {
            return Err(Error::InvalidArgument("mixture weights must be nonnegative".into()));
        }
        let total: f64 = parts.iter().map(|(w, _)| w).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("mixture weights sum to {total}, not 1")));
        }
        Ok(Self::ConvexCombination(parts))
    }

    /// Parse `congruence:<tensor-file>`, `pinching:1|2,3` (1-based unfolding
    /// indices) or `mix:w:<map>:w:<map>...`. A nested `mix` consumes the rest
    /// of the string, so it must come last.
    pub fn parse(spec: &str, shape: &TensorShape, base: &Path) -> Result<Self> {
        let tokens: Vec<&str> = spec.split(':').collect();
        let (map, used) = Self::parse_tokens(&tokens, shape, base)?;
        if used != tokens.len() {
            return Err(Error::Parse(format!("trailing input in map spec {spec:?}")));
        }
        Ok(map)
    }

    fn parse_tokens(tokens: &[&str], shape: &TensorShape, base: &Path) -> Result<(Self, usize)> {
        let arg = |i: usize| {
            tokens
                .get(i)
                .copied()
                .ok_or_else(|| Error::Parse(format!("{} needs an argument", tokens[0])))
        };
        match tokens.first().copied() {
            Some("identity") => Ok((Self::Congruence(Tensor::identity(shape)), 1)),
            Some("congruence") => {
                let path = base.join(arg(1)?);
                let text = std::fs::read_to_string(&path)?;
                let k: Tensor = serde_json::from_str(&text)?;
                if k.shape() != shape {
                    return Err(Error::ShapeMismatch {
                        left: k.shape().dims().to_vec(),
                        right: shape.dims().to_vec(),
                    });
                }
                Ok((Self::Congruence(k), 2))
            }
            Some("pinching") => {
                let groups = arg(1)?
                    .split('|')
                    .map(|g| {
                        g.split(',')
                            .map(|i| match i.trim().parse::<usize>() {
                                Ok(v) if v >= 1 => Ok(v - 1),
                                _ => Err(Error::Parse(format!("bad pinching index {i:?}"))),
                            })
                            .collect::<Result<Vec<usize>>>()
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok((Self::pinching(groups, shape.side())?, 2))
            }
            Some("mix") => {
                let mut parts = Vec::new();
                let mut i = 1;
                while i < tokens.len() {
                    let w: f64 = tokens[i]
                        .parse()
                        .map_err(|_| Error::Parse(format!("bad mixture weight {:?}", tokens[i])))?;
                    let (m, used) = Self::parse_tokens(&tokens[i + 1..], shape, base)?;
                    parts.push((w, m));
                    i += 1 + used;
                }
                Ok((Self::mix(parts)?, tokens.len()))
            }
            Some(other) => Err(Error::Parse(format!("unknown map {other:?}"))),
            None => Err(Error::Parse("empty map spec".into())),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::Congruence(_) => "congruence".into(),
            Self::Pinching(groups) => format!(
                "pinching:{}",
                groups
                    .iter()
                    .map(|g| g.iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(","))
                    .collect::<Vec<_>>()
                    .join("|")
            ),
            Self::ConvexCombination(parts) => format!(
                "mix({})",
                parts
                    .iter()
                    .map(|(w, m)| format!("{w}*{}", m.label()))
                    .collect::<Vec<_>>()
                    .join(" + ")
            ),
        }
    }
}

pub fn apply_map(map: &PositiveLinearMap, h: &HermitianTensor) -> Result<HermitianTensor> {
    match map {
        PositiveLinearMap::Congruence(k) => h.congruence(k),
        PositiveLinearMap::Pinching(groups) => {
            let d = h.side();
            let src = h.unfold();
            let mut out = nalgebra::DMatrix::zeros(d, d);
            for g in groups {
                if g.iter().any(|&i| i >= d) {
                    return Err(Error::InvalidArgument(format!("pinching index out of range {d}")));
                }
                for &r in g {
                    for &c in g {
                        out[(r, c)] = src[(r, c)];
                    }
                }
            }
            HermitianTensor::from_unfolded(h.shape(), out)
        }
        PositiveLinearMap::ConvexCombination(parts) => {
            let mut acc = HermitianTensor::zeros(h.shape());
            for (w, m) in parts {
                acc = acc.combine(1.0, &apply_map(m, h)?, *w)?;
            }
            Ok(acc)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DominationSide {
    /// `X <= c Y`.
    LeftDominated,
    /// `c X >= Y`.
    RightDominated,
}

/// A PSD pair with a verified domination constant.
#[derive(Clone, Debug)]
pub struct DominationPair {
    pub x: HermitianTensor,
    pub y: HermitianTensor,
    pub side: DominationSide,
    pub constant: f64,
}

impl DominationPair {
    pub fn new(x: HermitianTensor, y: HermitianTensor, side: DominationSide) -> Result<Self> {
        let constant = match side {
            DominationSide::LeftDominated => eta(&x, &y, DEFAULT_RANK_TOL)?.domination_constant,
            DominationSide::RightDominated => eta(&y, &x, DEFAULT_RANK_TOL)?.domination_constant,
        };
        Ok(Self { x, y, side, constant })
    }

    /// `X #_g Y` through whichever argument dominates.
    pub fn mean(&self, g: &ConnectionFunction) -> Result<HermitianTensor> {
        side_mean(&self.x, &self.y, self.side, g)
    }
}

fn side_mean(x: &HermitianTensor, y: &HermitianTensor, side: DominationSide, g: &ConnectionFunction) -> Result<HermitianTensor> {
    match side {
        DominationSide::LeftDominated => mean_psd(x, y, g),
        // X #_g Y = Y #_{g~} X with g~(x) = x g(1/x).
        DominationSide::RightDominated => mean_psd(y, x, &transpose_fn(g)),
    }
}

fn require_convex(g: &ConnectionFunction) -> Result<()> {
    if !g.tags().tc {
        return Err(Error::UnsupportedFunction(format!("{} is not tagged operator convex", g.id())));
    }
    if !g.value_at_0plus().is_finite() {
        return Err(Error::UnsupportedFunction(format!("{} has g(0+) = inf", g.id())));
    }
    Ok(())
}

/// `lambda_min(X1#Y1 + X2#Y2 - (X1+X2)#(Y1+Y2))` and the verdict of the
/// fused mean against the sum (`LEQ` expected).
pub fn fusion_gap(
    p1: &DominationPair,
    p2: &DominationPair,
    g: &ConnectionFunction,
    tol: f64,
) -> Result<(f64, LoewnerVerdict)> {
    require_convex(g)?;
    if p1.side != p2.side {
        return Err(Error::Precondition("fusion pairs must share a domination side".into()));
    }
    let lhs = side_mean(&p1.x.add(&p2.x)?, &p1.y.add(&p2.y)?, p1.side, g)?;
    let rhs = p1.mean(g)?.add(&p2.mean(g)?)?;
    let v = loewner_compare(&lhs, &rhs, tol)?;
    Ok((v.diff_min, v))
}

/// `lambda_min(L(X#Y) - L(X)#L(Y))` and the verdict of `L(X#Y)` against
/// `L(X)#L(Y)` (`GEQ` expected).
pub fn transform_gap(
    map: &PositiveLinearMap,
    pair: &DominationPair,
    g: &ConnectionFunction,
    tol: f64,
) -> Result<(f64, LoewnerVerdict)> {
    require_convex(g)?;
    let mapped_mean = apply_map(map, &pair.mean(g)?)?;
    let mean_mapped = side_mean(&apply_map(map, &pair.x)?, &apply_map(map, &pair.y)?, pair.side, g)?;
    let v = loewner_compare(&mapped_mean, &mean_mapped, tol)?;
    Ok((-v.diff_max, v))
}

/// Joint convexity gap: `lambda_min(l m(X1,Y1) + (1-l) m(X2,Y2) - m(l X1 + (1-l) X2, l Y1 + (1-l) Y2))`.
pub fn joint_convexity_gap(
    p1: &DominationPair,
    p2: &DominationPair,
    lambda: f64,
    g: &ConnectionFunction,
    tol: f64,
) -> Result<(f64, LoewnerVerdict)> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidArgument(format!("mixing weight {lambda} outside [0, 1]")));
    }
    if p1.side != p2.side {
        return Err(Error::Precondition("pairs must share a domination side".into()));
    }
    let mx = p1.x.combine(lambda, &p2.x, 1.0 - lambda)?;
    let my = p1.y.combine(lambda, &p2.y, 1.0 - lambda)?;
    let lhs = side_mean(&mx, &my, p1.side, g)?;
    let rhs = p1.mean(g)?.combine(lambda, &p2.mean(g)?, 1.0 - lambda)?;
    let v = loewner_compare(&lhs, &rhs, tol)?;
    Ok((v.diff_min, v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connection::{geometric, square};
    use crate::spectral::LoewnerRelation;

    fn s2() -> TensorShape {
        TensorShape::new(vec![2]).unwrap()
    }

    fn diag(v: &[f64]) -> HermitianTensor {
        HermitianTensor::diagonal(&TensorShape::new(vec![v.len()]).unwrap(), v).unwrap()
    }

    fn sample() -> HermitianTensor {
        HermitianTensor::from_real_rows(&s2(), &[2.0, 0.5, 0.5, 1.0]).unwrap()
    }

    #[test]
    fn map_examples() {
        let h = sample();
        assert_eq!(apply_map(&PositiveLinearMap::Congruence(Tensor::identity(&s2())), &h).unwrap(), h);
        let p = PositiveLinearMap::pinching(vec![vec![0], vec![1]], 2).unwrap();
        assert_eq!(apply_map(&p, &h).unwrap(), diag(&[2.0, 1.0]));
        let k = Tensor::from_entries(
            &s2(),
            &[1.0, 2.0, 0.0, 3.0].map(|v| num_complex::Complex64::new(v, 0.0)),
        )
        .unwrap();
        let r = apply_map(&PositiveLinearMap::Congruence(k.clone()), &HermitianTensor::identity(&s2())).unwrap();
        assert_eq!(r.as_tensor(), &k.adjoint().einstein(&k).unwrap());
    }

    #[test]
    fn map_validation_and_parsing() {
        assert!(PositiveLinearMap::pinching(vec![vec![0]], 2).is_err());
        assert!(PositiveLinearMap::pinching(vec![vec![0, 1], vec![1]], 2).is_err());
        assert!(PositiveLinearMap::mix(vec![(0.4, PositiveLinearMap::Pinching(vec![vec![0, 1]]))]).is_err());
        let base = Path::new(".");
        let m = PositiveLinearMap::parse("pinching:1|2", &s2(), base).unwrap();
        assert_eq!(m, PositiveLinearMap::Pinching(vec![vec![0], vec![1]]));
        let m = PositiveLinearMap::parse("mix:0.5:identity:0.5:pinching:1|2", &s2(), base).unwrap();
        let out = apply_map(&m, &sample()).unwrap();
        assert_eq!(out, HermitianTensor::from_real_rows(&s2(), &[2.0, 0.25, 0.25, 1.0]).unwrap());
        assert!(PositiveLinearMap::parse("pinching:0|1", &s2(), base).is_err());
        assert!(PositiveLinearMap::parse("rotate:1", &s2(), base).is_err());
    }

    #[test]
    fn fusion_equality_case() {
        let i = HermitianTensor::identity(&s2());
        let p = DominationPair::new(i.clone(), i.clone(), DominationSide::LeftDominated).unwrap();
        let (gap, v) = fusion_gap(&p, &p, &square(), 1e-8).unwrap();
        assert!(gap.abs() < 1e-14);
        assert_eq!(v.relation, LoewnerRelation::Eq);
    }

    #[test]
    fn fusion_scalar_cauchy_schwarz() {
        let (x1, y1, x2, y2) = (0.7, 1.9, 2.3, 0.4);
        let pair = |x: f64, y: f64| {
            DominationPair::new(diag(&[x]), diag(&[y]), DominationSide::LeftDominated).unwrap()
        };
        let (gap, _) = fusion_gap(&pair(x1, y1), &pair(x2, y2), &square(), 1e-8).unwrap();
        let expect = x1 * x1 / y1 + x2 * x2 / y2 - (x1 + x2) * (x1 + x2) / (y1 + y2);
        assert!((gap - expect).abs() < 1e-12);
    }

    #[test]
    fn fusion_rejects_nonconvex() {
        let i = HermitianTensor::identity(&s2());
        let p = DominationPair::new(i.clone(), i, DominationSide::LeftDominated).unwrap();
        assert!(matches!(fusion_gap(&p, &p, &geometric(), 1e-8), Err(Error::UnsupportedFunction(_))));
    }

    #[test]
    fn transform_trivial_cases() {
        let p = DominationPair::new(diag(&[1.0, 2.0]), diag(&[3.0, 0.5]), DominationSide::LeftDominated).unwrap();
        let pin = PositiveLinearMap::Pinching(vec![vec![0], vec![1]]);
        let (gap, _) = transform_gap(&pin, &p, &square(), 1e-8).unwrap();
        assert!(gap.abs() < 1e-14);
        let id = PositiveLinearMap::Congruence(Tensor::identity(&s2()));
        let (gap, v) = transform_gap(&id, &p, &square(), 1e-8).unwrap();
        assert!(gap.abs() < 1e-14);
        assert!(v.geq());
    }

    #[test]
    fn domination_constant() {
        let p = DominationPair::new(diag(&[1.0, 0.0]), diag(&[0.5, 1.0]), DominationSide::LeftDominated).unwrap();
        assert!((p.constant - 2.0).abs() < 1e-14);
        assert!(DominationPair::new(diag(&[1.0, 1.0]), diag(&[1.0, 0.0]), DominationSide::LeftDominated).is_err());
        let p = DominationPair::new(diag(&[1.0, 1.0]), diag(&[1.0, 0.0]), DominationSide::RightDominated).unwrap();
        assert!((p.constant - 1.0).abs() < 1e-14);
    }
}
