//! Scalar connection functions on `(0, inf)` and the operations the means and
//! bounds need from them: lifts, transposes, inversion and derivatives at 1.
//!
//! Functions are addressable by a colon-separated constructor chain such as
//! `"power:0.5"`, `"psi:1.0"`, `"liftn:2:power:0.5"` or `"transpose:square"`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

type Eval = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Class tags: operator monotone increasing / decreasing, operator convex,
/// and normalization `g(1) = 1`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassTags {
    pub tmi: bool,
    pub tmd: bool,
    pub tc: bool,
    pub normalized: bool,
}

impl ClassTags {
    pub const NONE: ClassTags = ClassTags {
        tmi: false,
        tmd: false,
        tc: false,
        normalized: false,
    };

    fn normalized(mut self) -> Self {
        self.normalized = true;
        self
    }
}

impl fmt::Display for ClassTags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        let sup = if self.normalized { "1" } else { "" };
        if self.tmi {
            parts.push(format!("TMI{sup}"));
        }
        if self.tmd {
            parts.push(format!("TMD{sup}"));
        }
        if self.tc {
            parts.push(format!("TC{sup}"));
        }
        if parts.is_empty() {
            parts.push("untagged".into());
        }
        f.write_str(&parts.join(","))
    }
}

/// A positive scalar function with classification metadata.
#[derive(Clone)]
pub struct ConnectionFunction {
    id: String,
    eval: Eval,
    tags: ClassTags,
    positive: bool,
    analytic_derivative: Option<f64>,
    value_at_1: f64,
    value_at_0plus: f64,
    power: Option<f64>,
}

impl fmt::Debug for ConnectionFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConnectionFunction")
            .field("id", &self.id)
            .field("tags", &self.tags)
            .field("value_at_1", &self.value_at_1)
            .field("value_at_0plus", &self.value_at_0plus)
            .finish()
    }
}

const PROBE_POINTS: usize = 64;
const ZERO_PROBE: f64 = 1e-12;
const ZERO_INFINITE_ABOVE: f64 = 1e10;

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// The 64-point probe grid used to validate tags.
pub fn probe_grid() -> Vec<f64> {
    log_grid(1e-3, 1e3, PROBE_POINTS)
}

impl ConnectionFunction {
    /// Build a function and validate it on the probe grid: positivity
    /// (unless `positive` is false), normalization, and the asserted tags.
    pub fn new(
        id: impl Into<String>,
        eval: impl Fn(f64) -> f64 + Send + Sync + 'static,
        tags: ClassTags,
        analytic_derivative: Option<f64>,
    ) -> Result<Self> {
        Self::build(id.into(), Arc::new(eval), tags, true, analytic_derivative, None)
    }

    fn build(
        id: String,
        eval: Eval,
        tags: ClassTags,
        positive: bool,
        analytic_derivative: Option<f64>,
        power: Option<f64>,
    ) -> Result<Self> {
        let value_at_1 = eval(1.0);
        let z = eval(ZERO_PROBE);
        let value_at_0plus = if !z.is_finite() || z > ZERO_INFINITE_ABOVE {
            f64::INFINITY
        } else if z.abs() < 1e-300 {
            0.0
        } else {
            z
        };
        let f = Self {
            id,
            eval,
            tags,
            positive,
            analytic_derivative,
            value_at_1,
            value_at_0plus,
            power,
        };
        f.validate()?;
        Ok(f)
    }

    fn validate(&self) -> Result<()> {
        let grid = probe_grid();
        let vals: Vec<f64> = grid.iter().map(|&x| self.eval(x)).collect();
        if let Some((x, v)) = grid.iter().zip(&vals).find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidFunction(format!("{}({x}) = {v}", self.id)));
        }
        if self.positive {
            if let Some((x, v)) = grid.iter().zip(&vals).find(|(_, v)| **v <= 0.0) {
                return Err(Error::InvalidFunction(format!(
                    "{} is not positive: value {v} at {x}",
                    self.id
                )));
            }
        }
        if self.tags.normalized && (self.value_at_1 - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidFunction(format!(
                "{} tagged normalized but g(1) = {}",
                self.id, self.value_at_1
            )));
        }
        let slack = |a: f64, b: f64| 1e-10 * a.abs().max(b.abs()).max(1.0);
        for w in vals.windows(2) {
            if self.tags.tmi && w[1] < w[0] - slack(w[0], w[1]) {
                return Err(Error::InvalidFunction(format!("{} tagged TMI but decreases", self.id)));
            }
            if self.tags.tmd && w[1] > w[0] + slack(w[0], w[1]) {
                return Err(Error::InvalidFunction(format!("{} tagged TMD but increases", self.id)));
            }
        }
        if self.tags.tc {
            for i in 0..grid.len() - 2 {
                let (a, b) = (grid[i], grid[i + 2]);
                let mid = self.eval(0.5 * (a + b));
                let chord = 0.5 * (vals[i] + vals[i + 2]);
                if mid > chord + slack(mid, chord) {
                    return Err(Error::InvalidFunction(format!(
                        "{} tagged TC but fails midpoint convexity near {a}",
                        self.id
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.eval)(x)
    }

    /// Canonical string id, parseable by [`ConnectionFunction::parse`].
    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn label(&self) -> String {
        format!("{} [{}]", self.id, self.tags)
    }

    pub fn tags(&self) -> ClassTags {
        self.tags
    }

    pub fn is_positive(&self) -> bool {
        self.positive
    }

    pub fn value_at_1(&self) -> f64 {
        self.value_at_1
    }

    /// Limit probe at `x = 1e-12`; infinite when it exceeds `1e10`.
    pub fn value_at_0plus(&self) -> f64 {
        self.value_at_0plus
    }

    /// Exponent when the function is known to be `x^alpha`.
    pub fn as_power(&self) -> Option<f64> {
        self.power
    }

    pub fn analytic_derivative(&self) -> Option<f64> {
        self.analytic_derivative
    }

    /// Replace the probed `g(0+)` with a known limit.
    fn with_zero_limit(mut self, v: f64) -> Self {
        self.value_at_0plus = v;
        self
    }

    /// Evaluate at `x >= 0`, using the recorded `g(0+)` at the boundary.
    pub fn eval_closed(&self, x: f64) -> f64 {
        if x <= 0.0 {
            self.value_at_0plus
        } else {
            self.eval(x)
        }
    }
}

fn tagged(tmi: bool, tmd: bool, tc: bool) -> ClassTags {
    ClassTags {
        tmi,
        tmd,
        tc,
        normalized: false,
    }
}

/// `x^alpha`. Tags follow the operator monotone/convex ranges of the power.
pub fn power(alpha: f64) -> ConnectionFunction {
    let tags = tagged(
        (0.0..=1.0).contains(&alpha),
        (-1.0..=0.0).contains(&alpha),
        (1.0..=2.0).contains(&alpha) || (-1.0..=0.0).contains(&alpha),
    )
    .normalized();
    let eval: Eval = if alpha == 0.5 {
        Arc::new(f64::sqrt)
    } else if alpha == 1.0 {
        Arc::new(|x| x)
    } else if alpha == 2.0 {
        Arc::new(|x| x * x)
    } else {
        Arc::new(move |x: f64| x.powf(alpha))
    };
    let zero = if alpha > 0.0 {
        0.0
    } else if alpha == 0.0 {
        1.0
    } else {
        f64::INFINITY
    };
    ConnectionFunction::build(format!("power:{alpha}"), eval, tags, true, Some(alpha), Some(alpha))
        .expect("power functions pass their own probes")
        .with_zero_limit(zero)
}

pub fn identity() -> ConnectionFunction {
    rename(power(1.0), "identity")
}

pub fn square() -> ConnectionFunction {
    rename(power(2.0), "square")
}

pub fn geometric() -> ConnectionFunction {
    rename(power(0.5), "geometric")
}

fn rename(mut f: ConnectionFunction, id: &str) -> ConnectionFunction {
    f.id = id.to_string();
    f
}

/// `2x / (1 + x)`.
pub fn harmonic_like() -> ConnectionFunction {
    ConnectionFunction::build(
        "harmonic_like".into(),
        Arc::new(|x: f64| 2.0 * x / (1.0 + x)),
        tagged(true, false, false).normalized(),
        true,
        Some(0.5),
        None,
    )
    .expect("valid builtin")
    .with_zero_limit(0.0)
}

/// `2 / (1 + x)`, the decreasing counterpart of [`harmonic_like`].
pub fn harmonic_dual() -> ConnectionFunction {
    ConnectionFunction::build(
        "harmonic_dual".into(),
        Arc::new(|x: f64| 2.0 / (1.0 + x)),
        tagged(false, true, true).normalized(),
        true,
        Some(-0.5),
        None,
    )
    .expect("valid builtin")
    .with_zero_limit(2.0)
}

/// `psi_s(x) = x/(1+s) - x/(x+s)`. Operator convex but sign-indefinite
/// (`psi_s(1) = 0`), so the positivity probe is waived.
pub fn psi(s: f64) -> Result<ConnectionFunction> {
    if !(s > 0.0) {
        return Err(Error::InvalidArgument(format!("psi needs s > 0, got {s}")));
    }
    let d = 1.0 / (1.0 + s) - s / ((1.0 + s) * (1.0 + s));
    ConnectionFunction::build(
        format!("psi:{s}"),
        Arc::new(move |x: f64| x / (1.0 + s) - x / (x + s)),
        tagged(false, false, true),
        false,
        Some(d),
        None,
    )
    .map(|f| f.with_zero_limit(0.0))
}

/// `a0 + a1 x + a2 x^2`, operator convex when `a2 >= 0`.
pub fn quadratic(a0: f64, a1: f64, a2: f64) -> Result<ConnectionFunction> {
    let mut tags = tagged(a1 >= 0.0 && a2 == 0.0, false, a2 >= 0.0);
    tags.normalized = (a0 + a1 + a2 - 1.0).abs() <= 1e-12;
    ConnectionFunction::build(
        format!("quadratic:{a0}:{a1}:{a2}"),
        Arc::new(move |x: f64| a0 + x * (a1 + a2 * x)),
        tags,
        true,
        Some(a1 + 2.0 * a2),
        None,
    )
    .map(|f| f.with_zero_limit(a0))
}

/// `F_n(x) = x^n f(x)`.
pub fn power_lift(f: &ConnectionFunction, n: u32) -> ConnectionFunction {
    if n == 0 {
        return f.clone();
    }
    let inner = f.eval.clone();
    let ni = n as i32;
    let eval: Eval = Arc::new(move |x: f64| x.powi(ni) * inner(x));
    let tags = ClassTags {
        normalized: f.tags.normalized,
        ..ClassTags::NONE
    };
    let d = f.analytic_derivative.map(|d| n as f64 * f.value_at_1 + d);
    let lifted = ConnectionFunction::build(
        format!("liftn:{n}:{}", f.id),
        eval,
        tags,
        f.positive,
        d,
        f.power.map(|a| a + n as f64),
    )
    .expect("lift of a valid function is finite on the probe grid");
    if f.value_at_0plus.is_finite() {
        lifted.with_zero_limit(0.0)
    } else {
        lifted
    }
}

/// `h(x) = x g(1/x)`. Operator monotonicity and convexity survive; decrease
/// does not in general.
pub fn transpose_fn(g: &ConnectionFunction) -> ConnectionFunction {
    let inner = g.eval.clone();
    let eval: Eval = Arc::new(move |x: f64| x * inner(1.0 / x));
    let tags = ClassTags {
        tmi: g.tags.tmi,
        tmd: false,
        tc: g.tags.tc,
        normalized: g.tags.normalized,
    };
    let d = g.analytic_derivative.map(|d| g.value_at_1 - d);
    ConnectionFunction::build(
        format!("transpose:{}", g.id),
        eval,
        tags,
        g.positive,
        d,
        g.power.map(|a| 1.0 - a),
    )
    .expect("transpose of a valid function is finite on the probe grid")
}

const BRACKET_LIMIT: i32 = 64;
const BISECTION_STEPS: usize = 200;

/// Solve `g(x) = y` for strictly monotone `g`, by exponential bracketing out
/// to `2^{+-64}` followed by bisection.
pub fn invert_fn(g: &ConnectionFunction, y: f64) -> Result<f64> {
    invert_raw(&*g.eval, &g.id, y)
}

fn invert_raw(g: &dyn Fn(f64) -> f64, name: &str, y: f64) -> Result<f64> {
    let range_err = || Error::Range {
        function: name.to_string(),
        target: y,
    };
    if !y.is_finite() {
        return Err(range_err());
    }
    let increasing = g(2.0) > g(0.5);
    // phi(x) < 0 below the root, > 0 above.
    let phi = |x: f64| if increasing { g(x) - y } else { y - g(x) };
    let f1 = phi(1.0);
    if f1 == 0.0 {
        return Ok(1.0);
    }
    let (mut lo, mut hi) = (1.0f64, 1.0f64);
    if f1 < 0.0 {
        let mut found = false;
        for _ in 0..BRACKET_LIMIT {
            lo = hi;
            hi *= 2.0;
            if phi(hi) >= 0.0 {
                found = true;
                break;
            }
        }
        if !found {
            return Err(range_err());
        }
    } else {
        let mut found = false;
        for _ in 0..BRACKET_LIMIT {
            hi = lo;
            lo *= 0.5;
            if phi(lo) <= 0.0 {
                found = true;
                break;
            }
        }
        if !found {
            return Err(range_err());
        }
    }
    for _ in 0..BISECTION_STEPS {
        let mid = if hi / lo > 4.0 { (lo * hi).sqrt() } else { 0.5 * (lo + hi) };
        if mid <= lo || mid >= hi {
            break;
        }
        let v = phi(mid);
        if v == 0.0 {
            return Ok(mid);
        }
        if v < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Ties go to the lower end of the final bracket.
    Ok(if phi(hi).abs() < phi(lo).abs() { hi } else { lo })
}

/// `g(x) = 1 / F^{-1}(1/x)` with `F(x) = x^{m-1} f(x)`.
pub fn ando_hiai_g(f: &ConnectionFunction, m: u32) -> Result<ConnectionFunction> {
    if m < 2 {
        return Err(Error::InvalidArgument(format!("m must be >= 2, got {m}")));
    }
    if !f.positive {
        return Err(Error::InvalidFunction(format!("{} is not positive", f.id)));
    }
    let big_f = power_lift(f, m - 1);
    let id = format!("andohiai:{m}:{}", f.id);
    let fe = big_f.eval.clone();
    let name = big_f.id.clone();
    let eval: Eval = Arc::new(move |x: f64| match invert_raw(&*fe, &name, 1.0 / x) {
        Ok(r) => 1.0 / r,
        Err(_) => f64::NAN,
    });
    let tags = ClassTags {
        normalized: f.tags.normalized,
        ..ClassTags::NONE
    };
    let d = match (f.tags.normalized, big_f.analytic_derivative) {
        (true, Some(df)) => Some(1.0 / df),
        _ => None,
    };
    // For x^alpha the lifted inverse is again a power.
    let power = big_f.power.map(|a| 1.0 / a);
    ConnectionFunction::build(id, eval, tags, true, d, power)
}

const DERIV_STEP: f64 = 1e-5;

/// `g'(1)`: analytic when registered, else a five-point central difference
/// at `h = 1e-5` refined by one Richardson step.
pub fn derivative_at_one(g: &ConnectionFunction) -> Result<f64> {
    if let Some(d) = g.analytic_derivative {
        return Ok(d);
    }
    let five_point = |h: f64| -> Result<f64> {
        let pts = [1.0 + 2.0 * h, 1.0 + h, 1.0 - h, 1.0 - 2.0 * h];
        let v: Vec<f64> = pts.iter().map(|&x| g.eval(x)).collect();
        if let Some((x, y)) = pts.iter().zip(&v).find(|(_, y)| !y.is_finite()) {
            return Err(Error::Domain {
                function: g.id.clone(),
                at: *x,
                value: *y,
            });
        }
        Ok((-v[0] + 8.0 * v[1] - 8.0 * v[2] + v[3]) / (12.0 * h))
    };
    let d1 = five_point(DERIV_STEP)?;
    let d2 = five_point(2.0 * DERIV_STEP)?;
    Ok((16.0 * d1 - d2) / 15.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PowerProperty {
    Pmi,
    Pmd,
}

/// Scalar probe of `f(x^q) <= M1 f(x)^q` (pmi) or `M2 f(x^q) >= f(x)^q` (pmd)
/// under the working definition of these properties.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PmiCertificate {
    pub property: PowerProperty,
    pub holds: bool,
    /// Least constant over the probe grid, clamped below at 1.
    pub constant: f64,
    pub grid: String,
}

fn power_property(
    f: &ConnectionFunction,
    q_grid: &[f64],
    x_grid: &[f64],
    property: PowerProperty,
) -> PmiCertificate {
    let mut worst = 1.0f64;
    let mut finite = !q_grid.is_empty() && !x_grid.is_empty();
    // (x^q)^a = (x^a)^q: powers are the equality case, exactly.
    let grid_q: &[f64] = if f.power.is_some() { &[] } else { q_grid };
    for &q in grid_q {
        for &x in x_grid {
            let lhs = f.eval(x.powf(q));
            let rhs = f.eval(x).powf(q);
            let ratio = match property {
                PowerProperty::Pmi => lhs / rhs,
                PowerProperty::Pmd => rhs / lhs,
            };
            if ratio.is_finite() {
                worst = worst.max(ratio);
            } else {
                finite = false;
            }
        }
    }
    PmiCertificate {
        property,
        holds: finite,
        constant: if finite { worst } else { f64::INFINITY },
        grid: format!(
            "{} q values x {} x values (working definition)",
            q_grid.len(),
            x_grid.len()
        ),
    }
}

pub fn check_pmi(f: &ConnectionFunction, q_grid: &[f64], x_grid: &[f64]) -> PmiCertificate {
    power_property(f, q_grid, x_grid, PowerProperty::Pmi)
}

pub fn check_pmd(f: &ConnectionFunction, q_grid: &[f64], x_grid: &[f64]) -> PmiCertificate {
    power_property(f, q_grid, x_grid, PowerProperty::Pmd)
}

fn parse_f64(tok: Option<&str>, what: &str) -> Result<f64> {
    let tok = tok.ok_or_else(|| Error::Parse(format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| Error::Parse(format!("bad {what}: {tok:?}")))
}

impl ConnectionFunction {
    /// Parse a constructor chain such as `"liftn:2:power:0.5"`.
    pub fn parse(spec: &str) -> Result<Self> {
        let (head, rest) = match spec.split_once(':') {
            Some((h, r)) => (h, Some(r)),
            None => (spec, None),
        };
        let no_args = |f: ConnectionFunction| match rest {
            None => Ok(f),
            Some(_) => Err(Error::Parse(format!("{head} takes no arguments"))),
        };
        match head {
            "identity" => no_args(identity()),
            "square" => no_args(square()),
            "geometric" => no_args(geometric()),
            "harmonic_like" => no_args(harmonic_like()),
            "harmonic_dual" => no_args(harmonic_dual()),
            "power" => {
                let a = parse_f64(rest, "exponent")?;
                if !a.is_finite() {
                    return Err(Error::Parse(format!("bad exponent {a}")));
                }
                Ok(power(a))
            }
            "psi" => psi(parse_f64(rest, "psi parameter")?),
            "quadratic" => {
                let mut it = rest.unwrap_or("").split(':');
                let a0 = parse_f64(it.next(), "a0")?;
                let a1 = parse_f64(it.next(), "a1")?;
                let a2 = parse_f64(it.next(), "a2")?;
                if it.next().is_some() {
                    return Err(Error::Parse("quadratic takes three coefficients".into()));
                }
                quadratic(a0, a1, a2)
            }
            "liftn" | "andohiai" => {
                let rest = rest.ok_or_else(|| Error::Parse(format!("{head} needs arguments")))?;
                let (n, inner) = rest
                    .split_once(':')
                    .ok_or_else(|| Error::Parse(format!("{head} needs an inner function")))?;
                let n: u32 = n
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad integer {n:?}")))?;
                let inner = Self::parse(inner)?;
                if head == "liftn" {
                    Ok(power_lift(&inner, n))
                } else {
                    ando_hiai_g(&inner, n)
                }
            }
            "transpose" => {
                let inner = rest.ok_or_else(|| Error::Parse("transpose needs a function".into()))?;
                Ok(transpose_fn(&Self::parse(inner)?))
            }
            other => Err(Error::UnsupportedFunction(other.to_string())),
        }
    }
}

impl std::str::FromStr for ConnectionFunction {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}
