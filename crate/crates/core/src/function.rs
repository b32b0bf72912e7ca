//! Bounded test functions on a closed interval and the default corpus.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::RealFn;

const SAMPLE_POINTS: usize = 4097;

/// A bounded function `f: [a, b] → ℝ` with the metadata the operators and
/// integrators need.
#[derive(Clone)]
pub struct TestFunction {
    name: String,
    evaluator: RealFn,
    domain: (f64, f64),
    breakpoints: Vec<f64>,
    antiderivative: Option<RealFn>,
    /// `inf f` over the domain (sampled unless supplied).
    lower_bound: f64,
    nonneg: bool,
    /// Set when `f` is constant between consecutive breakpoints.
    piecewise_constant: bool,
    /// `‖f′‖∞` when `f` is continuously differentiable.
    derivative_sup: Option<f64>,
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestFunction")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("breakpoints", &self.breakpoints)
            .field("lower_bound", &self.lower_bound)
            .field("nonneg", &self.nonneg)
            .finish()
    }
}

impl TestFunction {
    /// Wraps `evaluator` on `[a, b]`; the lower bound and sign are sampled.
    pub fn new(name: impl Into<String>, a: f64, b: f64, evaluator: RealFn) -> Result<Self> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidInterval { lower: a, upper: b });
        }
        let mut f = Self {
            name: name.into(),
            evaluator,
            domain: (a, b),
            breakpoints: Vec::new(),
            antiderivative: None,
            lower_bound: 0.0,
            nonneg: true,
            piecewise_constant: false,
            derivative_sup: None,
        };
        f.resample()?;
        Ok(f)
    }

    pub fn constant(c: f64, a: f64, b: f64) -> Result<Self> {
        Ok(Self::new(format!("const({c})"), a, b, Arc::new(move |_| c))?
            .with_antiderivative(Arc::new(move |u| c * u))
            .with_derivative_sup(0.0)
            .piecewise_constant())
    }

    fn resample(&mut self) -> Result<()> {
        let (a, b) = self.domain;
        let mut min = f64::INFINITY;
        let xs = (0..SAMPLE_POINTS)
            .map(|i| a + (b - a) * i as f64 / (SAMPLE_POINTS - 1) as f64)
            .chain(self.breakpoints.iter().copied());
        for x in xs {
            let y = self.eval(x);
            if !y.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "function `{}` is not finite at {x}",
                    self.name
                )));
            }
            min = min.min(y);
        }
        self.lower_bound = min;
        self.nonneg = min >= 0.0;
        Ok(())
    }

    pub fn with_breakpoints(mut self, points: impl IntoIterator<Item = f64>) -> Self {
        let (a, b) = self.domain;
        let mut bp: Vec<f64> = points.into_iter().filter(|&p| p > a && p < b).collect();
        bp.sort_by(f64::total_cmp);
        bp.dedup();
        self.breakpoints = bp;
        let _ = self.resample();
        self
    }

    pub fn with_antiderivative(mut self, antiderivative: RealFn) -> Self {
        self.antiderivative = Some(antiderivative);
        self
    }

    /// Supplies `inf f`; the sampled minimum is kept when it is lower.
    pub fn with_lower_bound(mut self, c: f64) -> Self {
        self.lower_bound = self.lower_bound.min(c);
        self
    }

    pub fn with_derivative_sup(mut self, sup: f64) -> Self {
        self.derivative_sup = Some(sup);
        self
    }

    pub fn piecewise_constant(mut self) -> Self {
        self.piecewise_constant = true;
        self
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        (self.evaluator)(x)
    }

    pub fn evaluator(&self) -> &RealFn {
        &self.evaluator
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn antiderivative(&self) -> Option<&RealFn> {
        self.antiderivative.as_ref()
    }

    pub fn lower_bound(&self) -> f64 {
        self.lower_bound
    }

    pub fn is_nonneg(&self) -> bool {
        self.nonneg
    }

    pub fn is_piecewise_constant(&self) -> bool {
        self.piecewise_constant
    }

    pub fn derivative_sup(&self) -> Option<f64> {
        self.derivative_sup
    }

    /// Whether `f` is continuous, judged by one-sided limits at its
    /// breakpoints.
    pub fn is_continuous(&self) -> bool {
        self.breakpoints.iter().all(|&p| {
            let h = 1e-9 * (self.domain.1 - self.domain.0);
            (self.eval(p - h) - self.eval(p + h)).abs() < 1e-6
        })
    }

    /// Largest sampled `|f|`.
    pub fn sup_abs(&self) -> f64 {
        let (a, b) = self.domain;
        (0..SAMPLE_POINTS)
            .map(|i| a + (b - a) * i as f64 / (SAMPLE_POINTS - 1) as f64)
            .chain(self.breakpoints.iter().copied())
            .map(|x| self.eval(x).abs())
            .fold(0.0, f64::max)
    }

    pub fn check_same_domain(&self, other: &TestFunction) -> Result<()> {
        if self.domain != other.domain {
            return Err(Error::InvalidParameter(format!(
                "domains differ: {:?} vs {:?}",
                self.domain, other.domain
            )));
        }
        Ok(())
    }

    fn merged_breakpoints(&self, other: &TestFunction) -> Vec<f64> {
        let mut bp = self.breakpoints.clone();
        bp.extend_from_slice(&other.breakpoints);
        bp
    }

    /// `λ f`.
    pub fn scaled(&self, lambda: f64) -> TestFunction {
        let f = Arc::clone(&self.evaluator);
        let mut out = TestFunction {
            name: format!("{lambda}*{}", self.name),
            evaluator: Arc::new(move |x| lambda * f(x)),
            antiderivative: self.antiderivative.as_ref().map(|g| {
                let g = Arc::clone(g);
                Arc::new(move |x: f64| lambda * g(x)) as RealFn
            }),
            derivative_sup: self.derivative_sup.map(|d| d * lambda.abs()),
            ..self.clone()
        };
        let _ = out.resample();
        out
    }

    /// `f − c`.
    pub fn shifted(&self, c: f64) -> TestFunction {
        let f = Arc::clone(&self.evaluator);
        let mut out = TestFunction {
            name: format!("{}-({c})", self.name),
            evaluator: Arc::new(move |x| f(x) - c),
            antiderivative: self.antiderivative.as_ref().map(|g| {
                let g = Arc::clone(g);
                Arc::new(move |x: f64| g(x) - c * x) as RealFn
            }),
            ..self.clone()
        };
        let _ = out.resample();
        out
    }

    /// `f + g`.
    pub fn plus(&self, other: &TestFunction) -> Result<TestFunction> {
        self.check_same_domain(other)?;
        let (f, g) = (Arc::clone(&self.evaluator), Arc::clone(&other.evaluator));
        let antiderivative = match (&self.antiderivative, &other.antiderivative) {
            (Some(p), Some(q)) => {
                let (p, q) = (Arc::clone(p), Arc::clone(q));
                Some(Arc::new(move |x: f64| p(x) + q(x)) as RealFn)
            }
            _ => None,
        };
        let mut out = TestFunction::new(
            format!("{}+{}", self.name, other.name),
            self.domain.0,
            self.domain.1,
            Arc::new(move |x| f(x) + g(x)),
        )?
        .with_breakpoints(self.merged_breakpoints(other));
        out.antiderivative = antiderivative;
        out.piecewise_constant = self.piecewise_constant && other.piecewise_constant;
        out.derivative_sup = match (self.derivative_sup, other.derivative_sup) {
            (Some(p), Some(q)) => Some(p + q),
            _ => None,
        };
        Ok(out)
    }

    /// `|f − g|`. Crossing points are not known in closed form, so no
    /// antiderivative is attached.
    pub fn abs_diff(&self, other: &TestFunction) -> Result<TestFunction> {
        self.check_same_domain(other)?;
        let (f, g) = (Arc::clone(&self.evaluator), Arc::clone(&other.evaluator));
        let mut out = TestFunction::new(
            format!("|{}-{}|", self.name, other.name),
            self.domain.0,
            self.domain.1,
            Arc::new(move |x| (f(x) - g(x)).abs()),
        )?
        .with_breakpoints(self.merged_breakpoints(other));
        out.piecewise_constant = self.piecewise_constant && other.piecewise_constant;
        Ok(out)
    }

    /// Pointwise `max(f, g)`.
    pub fn max_with(&self, other: &TestFunction) -> Result<TestFunction> {
        self.check_same_domain(other)?;
        let (f, g) = (Arc::clone(&self.evaluator), Arc::clone(&other.evaluator));
        let mut out = TestFunction::new(
            format!("max({},{})", self.name, other.name),
            self.domain.0,
            self.domain.1,
            Arc::new(move |x| f(x).max(g(x))),
        )?
        .with_breakpoints(self.merged_breakpoints(other));
        out.piecewise_constant = self.piecewise_constant && other.piecewise_constant;
        Ok(out)
    }
}

/// The default corpus on `[0, 1]`:
///
/// | name       | f(u)             | class                         |
/// |------------|------------------|-------------------------------|
/// | `identity` | `u`              | C¹, Lipschitz                 |
/// | `parabola` | `u(1−u) + 1/4`   | C¹, Lipschitz, bounded away from 0 |
/// | `kink`     | `|u − 1/2|`      | continuous, not differentiable |
/// | `jump`     | `1[1/2, 1]`      | piecewise constant with a jump |
/// | `signed`   | `u − 1/2`        | sign-changing                 |
pub mod corpus {
    use super::*;

    pub const NAMES: [&str; 5] = ["identity", "parabola", "kink", "jump", "signed"];

    pub fn identity() -> TestFunction {
        TestFunction::new("identity", 0.0, 1.0, Arc::new(|u| u))
            .expect("valid domain")
            .with_antiderivative(Arc::new(|u| 0.5 * u * u))
            .with_derivative_sup(1.0)
    }

    pub fn parabola() -> TestFunction {
        TestFunction::new("parabola", 0.0, 1.0, Arc::new(|u| u * (1.0 - u) + 0.25))
            .expect("valid domain")
            .with_antiderivative(Arc::new(|u| 0.5 * u * u - u * u * u / 3.0 + 0.25 * u))
            .with_derivative_sup(1.0)
    }

    pub fn kink() -> TestFunction {
        TestFunction::new("kink", 0.0, 1.0, Arc::new(|u| (u - 0.5).abs()))
            .expect("valid domain")
            .with_breakpoints([0.5])
            .with_antiderivative(Arc::new(|u| {
                if u < 0.5 {
                    0.5 * u - 0.5 * u * u
                } else {
                    0.125 + 0.5 * (u - 0.5) * (u - 0.5)
                }
            }))
    }

    pub fn jump() -> TestFunction {
        TestFunction::new("jump", 0.0, 1.0, Arc::new(|u| if u >= 0.5 { 1.0 } else { 0.0 }))
            .expect("valid domain")
            .with_breakpoints([0.5])
            .with_antiderivative(Arc::new(|u| (u - 0.5).max(0.0)))
            .piecewise_constant()
    }

    pub fn signed() -> TestFunction {
        TestFunction::new("signed", 0.0, 1.0, Arc::new(|u| u - 0.5))
            .expect("valid domain")
            .with_antiderivative(Arc::new(|u| 0.5 * u * u - 0.5 * u))
            .with_derivative_sup(1.0)
            .with_lower_bound(-0.5)
    }

    pub fn all() -> Vec<TestFunction> {
        vec![identity(), parabola(), kink(), jump(), signed()]
    }

    /// Non-negative members.
    pub fn nonneg() -> Vec<TestFunction> {
        all().into_iter().filter(|f| f.is_nonneg()).collect()
    }

    /// Lookup by corpus name, `f1`…`f5`, or `one` / `zero` / `const:<c>`.
    pub fn by_name(name: &str) -> Result<TestFunction> {
        let f = match name {
            "identity" | "f1" => identity(),
            "parabola" | "f2" => parabola(),
            "kink" | "f3" => kink(),
            "jump" | "f4" => jump(),
            "signed" | "f5" => signed(),
            "one" => TestFunction::constant(1.0, 0.0, 1.0)?.renamed("one"),
            "zero" => TestFunction::constant(0.0, 0.0, 1.0)?.renamed("zero"),
            other => {
                let c = other
                    .strip_prefix("const:")
                    .and_then(|c| c.parse::<f64>().ok())
                    .ok_or_else(|| Error::UnknownName {
                        kind: "function",
                        name: other.to_string(),
                    })?;
                TestFunction::constant(c, 0.0, 1.0)?
            }
        };
        Ok(f)
    }
}
