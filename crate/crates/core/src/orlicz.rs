//! φ-functions, the modular `I^φ[f] = ∫ φ(|f|)` and related diagnostics.

use std::cell::Cell;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::function::TestFunction;
use crate::quadrature::{integrate, IntegrationRequest, SampledFunction, MODULAR_TOLERANCE};
use crate::RealFn;

/// Relative accuracy for large modulars, where `MODULAR_TOLERANCE` alone
/// would be below rounding.
pub const MODULAR_REL_TOLERANCE: f64 = 1e-10;

/// Integrand values above this are treated as overflow.
pub const SATURATION: f64 = 1e300;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum PhiKind {
    Power { p: f64 },
    Zygmund { alpha: f64, beta: f64 },
    Exponential { gamma: f64 },
    Custom,
}

/// Δ₂ status: `φ(2u) ≤ M φ(u)` for all `u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum Delta2 {
    Holds { m: f64 },
    Fails { witness: f64 },
    Unknown,
}

impl Delta2 {
    pub fn holds(&self) -> bool {
        matches!(self, Delta2::Holds { .. })
    }
}

/// A convex φ-function.
#[derive(Clone)]
pub struct PhiFunction {
    name: String,
    kind: PhiKind,
    evaluator: RealFn,
    convex: bool,
    delta2: Delta2,
}

impl fmt::Debug for PhiFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PhiFunction")
            .field("name", &self.name)
            .field("kind", &self.kind)
            .field("convex", &self.convex)
            .field("delta2", &self.delta2)
            .finish()
    }
}

/// `φ(u) = u^p`, `p ≥ 1`. Δ₂ holds with `M = 2^p`.
pub fn make_power_phi(p: f64) -> Result<PhiFunction> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!("power φ needs p ≥ 1, got {p}")));
    }
    Ok(PhiFunction {
        name: format!("power(p={p})"),
        kind: PhiKind::Power { p },
        evaluator: Arc::new(move |u: f64| u.powf(p)),
        convex: true,
        delta2: Delta2::Holds { m: 2f64.powf(p) },
    })
}

/// `φ(u) = u^α log^β(u + e)`, `α ≥ 1`, `β > 0`.
pub fn make_zygmund(alpha: f64, beta: f64) -> Result<PhiFunction> {
    if !(alpha >= 1.0 && alpha.is_finite() && beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "Zygmund φ needs alpha ≥ 1 and beta > 0, got alpha = {alpha}, beta = {beta}"
        )));
    }
    let mut phi = PhiFunction {
        name: format!("zygmund(alpha={alpha},beta={beta})"),
        kind: PhiKind::Zygmund { alpha, beta },
        evaluator: Arc::new(move |u: f64| u.powf(alpha) * (u + std::f64::consts::E).ln().powf(beta)),
        convex: true,
        delta2: Delta2::Unknown,
    };
    phi.delta2 = delta2_check(&phi, &GeometricGrid::default()).status;
    Ok(phi)
}

/// `φ(u) = e^(u^γ) − 1`, `γ > 0`. Δ₂ fails.
///
/// Convex only for `γ ≥ 1`.
pub fn make_exponential(gamma: f64) -> Result<PhiFunction> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidParameter(format!("exponential φ needs gamma > 0, got {gamma}")));
    }
    let mut phi = PhiFunction {
        name: format!("exponential(gamma={gamma})"),
        kind: PhiKind::Exponential { gamma },
        evaluator: Arc::new(move |u: f64| u.powf(gamma).exp_m1()),
        convex: gamma >= 1.0,
        delta2: Delta2::Unknown,
    };
    phi.delta2 = match delta2_check(&phi, &GeometricGrid::default()).status {
        Delta2::Fails { witness } => Delta2::Fails { witness },
        _ => Delta2::Fails { witness: f64::INFINITY },
    };
    Ok(phi)
}

impl PhiFunction {
    pub fn custom(name: impl Into<String>, evaluator: RealFn, convex: bool) -> Self {
        let mut phi = PhiFunction {
            name: name.into(),
            kind: PhiKind::Custom,
            evaluator,
            convex,
            delta2: Delta2::Unknown,
        };
        phi.delta2 = delta2_check(&phi, &GeometricGrid::default()).status;
        phi
    }

    /// Parses `power(p=2)`, `power:p=2`, `zygmund(alpha=1,beta=1)`,
    /// `exponential:gamma=1`, or a bare family name with default parameters.
    pub fn parse(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        let (family, params) = match spec.find(['(', ':']) {
            Some(i) => {
                let rest = spec[i + 1..].trim_end_matches(')');
                (&spec[..i], rest)
            }
            None => (spec, ""),
        };
        let mut values: Vec<(String, f64)> = Vec::new();
        for part in params.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("φ parameter `{part}` must be key=value")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("φ parameter `{part}` is not a number")))?;
            values.push((k.trim().to_string(), v));
        }
        let get = |key: &str, default: f64| -> Result<f64> {
            for (k, v) in &values {
                if k == key {
                    return Ok(*v);
                }
            }
            if let Some((k, _)) = values.iter().find(|(k, _)| !["p", "alpha", "beta", "gamma"].contains(&k.as_str())) {
                return Err(Error::Config(format!("unknown φ parameter `{k}`")));
            }
            Ok(default)
        };
        match family.trim() {
            "power" => make_power_phi(get("p", 2.0)?),
            "zygmund" => make_zygmund(get("alpha", 1.0)?, get("beta", 1.0)?),
            "exponential" | "exp" => make_exponential(get("gamma", 1.0)?),
            other => Err(Error::UnknownName {
                kind: "phi",
                name: other.to_string(),
            }),
        }
    }

    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        (self.evaluator)(u)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> PhiKind {
        self.kind
    }

    pub fn is_convex(&self) -> bool {
        self.convex
    }

    pub fn delta2(&self) -> Delta2 {
        self.delta2
    }
}

/// `I^φ[λ f]` with its integration error and saturation state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModularValue {
    /// `f64::INFINITY` when saturated.
    pub value: f64,
    pub lambda: f64,
    pub error: f64,
    pub saturated: bool,
}

impl ModularValue {
    fn saturated(lambda: f64) -> Self {
        ModularValue {
            value: f64::INFINITY,
            lambda,
            error: 0.0,
            saturated: true,
        }
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("lambda must be positive, got {lambda}")))
    }
}

/// `I^φ[λ f] = ∫_a^b φ(λ |f(x)|) dx`.
///
/// Piecewise-constant functions are summed exactly panel by panel. Values
/// of φ above [`SATURATION`] mark the result as saturated (infinite).
pub fn modular(phi: &PhiFunction, f: &TestFunction, lambda: f64) -> Result<ModularValue> {
    check_lambda(lambda)?;
    let (a, b) = f.domain();
    if f.is_piecewise_constant() {
        let mut edges = vec![a];
        edges.extend_from_slice(f.breakpoints());
        edges.push(b);
        let mut value = 0.0;
        for w in edges.windows(2) {
            let v = phi.eval(lambda * f.eval(0.5 * (w[0] + w[1])).abs());
            if !(v <= SATURATION) {
                return Ok(ModularValue::saturated(lambda));
            }
            value += v * (w[1] - w[0]);
        }
        return Ok(ModularValue {
            value,
            lambda,
            error: 0.0,
            saturated: false,
        });
    }
    modular_integral(phi, &|x| f.eval(x), a, b, f.breakpoints(), lambda)
}

/// `∫_a^b φ(λ |h(x)|) dx` by adaptive quadrature, with `h`'s
/// non-smooth points passed as breakpoints.
pub fn modular_integral(
    phi: &PhiFunction,
    h: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    lambda: f64,
) -> Result<ModularValue> {
    check_lambda(lambda)?;
    let saturated = Cell::new(false);
    let integrand = |x: f64| {
        let v = phi.eval(lambda * h(x).abs());
        if v <= SATURATION {
            v
        } else {
            saturated.set(true);
            SATURATION
        }
    };
    let req = IntegrationRequest::new(&integrand, a, b)
        .breakpoints(breakpoints.iter().copied())
        .tolerance(MODULAR_TOLERANCE)
        .relative_tolerance(MODULAR_REL_TOLERANCE);
    let r = integrate(&req)?;
    if saturated.get() {
        return Ok(ModularValue::saturated(lambda));
    }
    let r = r.require_converged(a, b)?;
    Ok(ModularValue {
        value: r.value,
        lambda,
        error: r.error,
        saturated: false,
    })
}

/// `Σ w_i φ(λ |s_i|)` over the nodes of a composite grid.
pub fn modular_sampled(phi: &PhiFunction, samples: &SampledFunction, lambda: f64) -> Result<ModularValue> {
    check_lambda(lambda)?;
    let mut value = 0.0;
    for (&w, &s) in samples.grid.weights.iter().zip(&samples.values) {
        let v = phi.eval(lambda * s.abs());
        if !(v <= SATURATION) {
            return Ok(ModularValue::saturated(lambda));
        }
        value += w * v;
    }
    Ok(ModularValue {
        value,
        lambda,
        error: 0.0,
        saturated: false,
    })
}

/// `I^φ[λ (f − g)]` for `g` sampled on a composite grid over `f`'s domain.
/// The fixed rule carries no error estimate (`error = 0`).
pub fn modular_distance(phi: &PhiFunction, f: &TestFunction, g: &SampledFunction, lambda: f64) -> Result<ModularValue> {
    let (a, b) = f.domain();
    if g.grid.a != a || g.grid.b != b {
        return Err(Error::InvalidParameter(format!(
            "sample grid covers [{}, {}] but f lives on [{a}, {b}]",
            g.grid.a, g.grid.b
        )));
    }
    let diff = SampledFunction {
        grid: Arc::clone(&g.grid),
        values: g
            .nodes()
            .iter()
            .zip(&g.values)
            .map(|(&x, &gv)| f.eval(x) - gv)
            .collect(),
    };
    modular_sampled(phi, &diff, lambda)
}

/// Geometric sample of `u` values for the Δ₂ check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometricGrid {
    pub start: f64,
    pub end: f64,
    pub per_decade: usize,
}

impl Default for GeometricGrid {
    fn default() -> Self {
        Self {
            start: 1e-6,
            end: 1e6,
            per_decade: 10,
        }
    }
}

impl GeometricGrid {
    pub fn points(&self) -> Vec<f64> {
        let decades = (self.end / self.start).log10();
        let count = (decades * self.per_decade as f64).round() as usize;
        (0..=count)
            .map(|i| self.start * 10f64.powf(i as f64 / self.per_decade as f64))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Delta2Report {
    pub status: Delta2,
    pub sup_ratio: f64,
    /// Largest `φ(2u)/φ(u)` within each decade of the grid.
    pub decade_maxima: Vec<f64>,
}

/// Estimates `sup φ(2u)/φ(u)` over the grid.
///
/// Holds with `M = 1.05 × sup` when the decade maxima grow by less than 1%
/// over the last decade; fails when the ratio overflows or the last three
/// decade maxima each grow by at least 1%; otherwise unknown.
pub fn delta2_check(phi: &PhiFunction, grid: &GeometricGrid) -> Delta2Report {
    let points = grid.points();
    let per = grid.per_decade.max(1);
    let mut decade_maxima: Vec<f64> = Vec::new();
    let mut sup = 0.0f64;
    let mut sup_at = f64::NAN;
    for (i, &u) in points.iter().enumerate() {
        let base = phi.eval(u);
        let doubled = phi.eval(2.0 * u);
        let ratio = doubled / base;
        if !(base > 0.0) {
            continue;
        }
        if !(doubled <= SATURATION) || !ratio.is_finite() {
            return Delta2Report {
                status: Delta2::Fails { witness: u },
                sup_ratio: f64::INFINITY,
                decade_maxima,
            };
        }
        if ratio > sup {
            sup = ratio;
            sup_at = u;
        }
        let d = i / per;
        if d >= decade_maxima.len() {
            decade_maxima.push(ratio);
        } else {
            decade_maxima[d] = decade_maxima[d].max(ratio);
        }
    }
    let len = decade_maxima.len();
    let status = if len < 2 {
        Delta2::Unknown
    } else {
        let growth = |j: usize| (decade_maxima[j] - decade_maxima[j - 1]) / decade_maxima[j - 1];
        if growth(len - 1) < 0.01 {
            Delta2::Holds { m: 1.05 * sup }
        } else if len >= 4 && (len - 3..len).all(|j| growth(j) >= 0.01) {
            Delta2::Fails { witness: sup_at }
        } else {
            Delta2::Unknown
        }
    };
    Delta2Report {
        status,
        sup_ratio: sup,
        decade_maxima,
    }
}

/// Luxemburg norm `inf{λ > 0 : I^φ[f/λ] ≤ 1}` by bisection. Diagnostic
/// only; nothing in the convergence checks depends on it.
pub fn luxemburg_norm(phi: &PhiFunction, f: &TestFunction, rel_tol: f64) -> Result<f64> {
    let level = |lam: f64| -> Result<f64> { Ok(modular(phi, f, 1.0 / lam)?.value) };
    if f.sup_abs() == 0.0 {
        return Ok(0.0);
    }
    let mut hi = 1.0;
    while level(hi)? > 1.0 {
        hi *= 2.0;
        if hi > 1e150 {
            return Err(Error::InvalidParameter("Luxemburg norm search diverged".into()));
        }
    }
    let mut lo = hi / 2.0;
    while level(lo)? <= 1.0 {
        lo /= 2.0;
        if lo < 1e-150 {
            return Ok(0.0);
        }
    }
    while (hi - lo) > rel_tol * hi {
        let mid = 0.5 * (lo + hi);
        if level(mid)? <= 1.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Sampled check of the φ-function axioms and, when flagged, convexity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhiAxiomReport {
    pub zero_at_zero: bool,
    pub positive: bool,
    pub nondecreasing: bool,
    pub unbounded: bool,
    /// `None` when φ is not flagged convex.
    pub midpoint_convex: Option<bool>,
}

impl PhiAxiomReport {
    pub fn all_hold(&self) -> bool {
        self.zero_at_zero && self.positive && self.nondecreasing && self.unbounded && self.midpoint_convex != Some(false)
    }
}

pub fn check_phi_axioms(phi: &PhiFunction, seed: u64) -> PhiAxiomReport {
    let grid: Vec<f64> = (0..=2000).map(|i| i as f64 * 0.01).collect();
    let vals: Vec<f64> = grid.iter().map(|&u| phi.eval(u)).collect();
    let nondecreasing = vals.windows(2).all(|w| w[1] >= w[0]);
    let positive = vals[1..].iter().all(|&v| v > 0.0);
    let big: Vec<f64> = [1e2, 1e4, 1e6].iter().map(|&u| phi.eval(u)).collect();
    let unbounded = big.windows(2).all(|w| w[1] > w[0] || w[1] == f64::INFINITY) && big[2] > 1e3 * big[0].min(1.0);
    let midpoint_convex = phi.convex.then(|| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..2000).all(|_| {
            let u: f64 = rng.gen_range(0.0..20.0);
            let v: f64 = rng.gen_range(0.0..20.0);
            let mid = phi.eval(0.5 * (u + v));
            let avg = 0.5 * (phi.eval(u) + phi.eval(v));
            mid <= avg * (1.0 + 1e-12) + 1e-300
        })
    });
    PhiAxiomReport {
        zero_at_zero: phi.eval(0.0) == 0.0,
        positive,
        nondecreasing,
        unbounded,
        midpoint_convex,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function::corpus;
    use crate::quadrature::CompositeGrid;
    use approx::assert_abs_diff_eq;

    fn unit_const(c: f64) -> TestFunction {
        TestFunction::constant(c, 0.0, 1.0).unwrap()
    }

    #[test]
    fn power_examples() {
        let p1 = make_power_phi(1.0).unwrap();
        assert_eq!(p1.eval(3.0), 3.0);
        let p2 = make_power_phi(2.0).unwrap();
        assert_abs_diff_eq!(modular(&p2, &unit_const(1.0), 1.0).unwrap().value, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(modular(&p2, &unit_const(1.0), 2.0).unwrap().value, 4.0, epsilon = 1e-12);
        assert_eq!(p2.delta2(), Delta2::Holds { m: 4.0 });
        assert!(make_power_phi(0.5).is_err());
        let half = modular(&p1, &corpus::jump(), 1.0).unwrap();
        assert_eq!(half.value, 0.5);
    }

    #[test]
    fn zygmund_examples() {
        let z = make_zygmund(1.0, 1.0).unwrap();
        assert_eq!(z.eval(0.0), 0.0);
        assert_abs_diff_eq!(z.eval(1.0), 1.313_261_7, epsilon = 1e-7);
        assert_eq!(modular(&z, &unit_const(0.0), 3.0).unwrap().value, 0.0);
        assert!(z.delta2().holds());
        assert!(make_zygmund(0.5, 1.0).is_err());
        assert!(make_zygmund(1.0, 0.0).is_err());
    }

    #[test]
    fn exponential_examples() {
        let e = make_exponential(1.0).unwrap();
        assert_eq!(e.eval(0.0), 0.0);
        let c: f64 = 0.7;
        let on_two = TestFunction::constant(c, 0.0, 2.0).unwrap();
        assert_abs_diff_eq!(modular(&e, &on_two, 1.0).unwrap().value, c.exp_m1() * 2.0, epsilon = 1e-10);
        let r = delta2_check(&e, &GeometricGrid::default());
        assert!(matches!(r.status, Delta2::Fails { .. }));
        assert!(matches!(e.delta2(), Delta2::Fails { .. }));
    }

    #[test]
    fn delta2_statuses() {
        let p = delta2_check(&make_power_phi(2.0).unwrap(), &GeometricGrid::default());
        assert_eq!(p.status, Delta2::Holds { m: 4.2 });
        let z = delta2_check(&make_zygmund(1.0, 1.0).unwrap(), &GeometricGrid::default());
        assert!(z.status.holds());
        assert!(z.sup_ratio > 2.0 && z.sup_ratio < 3.0);
        // u·e^u grows its ratio like 2e^u but overflows only late.
        let fast = PhiFunction::custom("u*exp(sqrt u)", Arc::new(|u: f64| u * u.sqrt().exp()), true);
        assert!(matches!(fast.delta2(), Delta2::Fails { .. }));
    }

    #[test]
    fn saturation_is_flagged() {
        let e = make_exponential(1.0).unwrap();
        let m = modular(&e, &corpus::identity(), 2000.0).unwrap();
        assert!(m.saturated);
        assert_eq!(m.value, f64::INFINITY);
        let m = modular(&e, &corpus::jump(), 2000.0).unwrap();
        assert!(m.saturated);
        assert!(modular(&e, &corpus::identity(), 0.0).is_err());
    }

    #[test]
    fn power_modular_is_p_norm() {
        // ∫ u^3 = 1/4, ∫ |u−1/2|^3 = 1/32, ∫ (u(1−u)+1/4)^2 = 1/30 − ... computed below
        let p3 = make_power_phi(3.0).unwrap();
        assert_abs_diff_eq!(modular(&p3, &corpus::identity(), 1.0).unwrap().value, 0.25, epsilon = 1e-8);
        assert_abs_diff_eq!(modular(&p3, &corpus::kink(), 1.0).unwrap().value, 1.0 / 32.0, epsilon = 1e-8);
        // (u − u² + 1/4)² integrates to 1/3 − 1/2 + 1/5 + 1/4 − 1/6 + 1/16.
        let p2 = make_power_phi(2.0).unwrap();
        let exact = 1.0 / 3.0 - 0.5 + 0.2 + 0.25 - 1.0 / 6.0 + 1.0 / 16.0;
        assert_abs_diff_eq!(modular(&p2, &corpus::parabola(), 1.0).unwrap().value, exact, epsilon = 1e-8);
    }

    #[test]
    fn distance_examples() {
        let grid = Arc::new(CompositeGrid::new(0.0, 1.0, 64, &[0.5], 5).unwrap());
        let p1 = make_power_phi(1.0).unwrap();
        let f = corpus::parabola();
        let same = grid.sample(|x| f.eval(x));
        assert_eq!(modular_distance(&p1, &f, &same, 1.0).unwrap().value, 0.0);
        let zero = grid.sample(|_| 0.0);
        assert_abs_diff_eq!(modular_distance(&p1, &unit_const(1.0), &zero, 1.0).unwrap().value, 1.0, epsilon = 1e-14);
        let g = corpus::kink();
        let gs = grid.sample(|x| g.eval(x));
        let fs = grid.sample(|x| f.eval(x));
        let z = make_zygmund(1.0, 1.0).unwrap();
        let d1 = modular_distance(&z, &f, &gs, 1.3).unwrap().value;
        let d2 = modular_distance(&z, &g, &fs, 1.3).unwrap().value;
        assert_abs_diff_eq!(d1, d2, epsilon = 1e-15);
        let other = Arc::new(CompositeGrid::new(0.0, 2.0, 8, &[], 5).unwrap());
        assert!(modular_distance(&p1, &f, &other.sample(|_| 0.0), 1.0).is_err());
    }

    #[test]
    fn luxemburg_matches_lp_norm() {
        let p2 = make_power_phi(2.0).unwrap();
        let n = luxemburg_norm(&p2, &corpus::identity(), 1e-10).unwrap();
        assert_abs_diff_eq!(n, (1.0f64 / 3.0).sqrt(), epsilon = 1e-8);
        assert_eq!(luxemburg_norm(&p2, &unit_const(0.0), 1e-10).unwrap(), 0.0);
    }

    #[test]
    fn axioms() {
        for phi in [
            make_power_phi(1.0).unwrap(),
            make_power_phi(2.5).unwrap(),
            make_zygmund(1.0, 1.0).unwrap(),
            make_exponential(1.0).unwrap(),
        ] {
            let r = check_phi_axioms(&phi, 7);
            assert!(r.all_hold(), "{}: {r:?}", phi.name());
        }
        let concave = PhiFunction::custom("sqrt", Arc::new(|u: f64| u.sqrt()), true);
        assert_eq!(check_phi_axioms(&concave, 7).midpoint_convex, Some(false));
    }

    #[test]
    fn parse_specs() {
        assert_eq!(PhiFunction::parse("power(p=2)").unwrap().kind(), PhiKind::Power { p: 2.0 });
        assert_eq!(PhiFunction::parse("power:p=3").unwrap().kind(), PhiKind::Power { p: 3.0 });
        assert_eq!(
            PhiFunction::parse("zygmund(alpha=1,beta=1)").unwrap().kind(),
            PhiKind::Zygmund { alpha: 1.0, beta: 1.0 }
        );
        assert_eq!(
            PhiFunction::parse("exponential").unwrap().kind(),
            PhiKind::Exponential { gamma: 1.0 }
        );
        assert!(PhiFunction::parse("orlicz").is_err());
        assert!(PhiFunction::parse("power(q=2)").is_err());
        assert!(PhiFunction::parse("power(p=x)").is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn phis() -> Vec<PhiFunction> {
            vec![
                make_power_phi(2.0).unwrap(),
                make_zygmund(1.0, 1.0).unwrap(),
                make_exponential(1.0).unwrap(),
            ]
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]

            #[test]
            fn modular_is_monotone_in_lambda(l1 in 0.01f64..4.0, dl in 0.0f64..4.0, which in 0usize..3, fi in 0usize..5) {
                let phi = &phis()[which];
                let f = &corpus::all()[fi];
                let a = modular(phi, f, l1).unwrap().value;
                let b = modular(phi, f, l1 + dl).unwrap().value;
                prop_assert!(a <= b + 2.0 * MODULAR_TOLERANCE);
            }

            #[test]
            fn modular_below_length_times_sup(lam in 0.01f64..4.0, which in 0usize..3, fi in 0usize..5) {
                let phi = &phis()[which];
                let f = &corpus::all()[fi];
                let m = modular(phi, f, lam).unwrap().value;
                let (a, b) = f.domain();
                prop_assert!(m <= (b - a) * phi.eval(lam * f.sup_abs()) + 2.0 * MODULAR_TOLERANCE);
            }

            #[test]
            fn phi_commutes_with_max(values in proptest::collection::vec(0.0f64..30.0, 1..12), which in 0usize..3) {
                let phi = &phis()[which];
                let m = values.iter().copied().fold(0.0, f64::max);
                let lhs = phi.eval(m);
                let rhs = values.iter().map(|&v| phi.eval(v)).fold(0.0, f64::max);
                prop_assert_eq!(lhs, rhs);
            }
        }
    }
}
