//! Upper estimates of the Orlicz K-functional
//! `K(f, λ, δ)_φ = inf_g I^φ[λ(f − g)] + δ φ(‖g′‖∞)` over nonnegative C¹
//! functions `g`, and the quantitative rate bound built on it.
//!
//! The infimum over all of C¹₊ cannot be computed. Every value produced here
//! is the minimum over a finite smoother family and therefore an upper
//! estimate of the true K-functional.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::function::TestFunction;
use crate::operator::{Admission, ShiftedOperator};
use crate::orlicz::{modular_distance, modular_integral, modular_sampled, PhiFunction};
use crate::quadrature::{integrate, CompositeGrid, IntegrationRequest, SampledFunction, MEAN_TOLERANCE};
use crate::sigmoid::DensityKernel;

/// Slack used by every inequality check: absolute plus relative.
pub const INEQUALITY_ABS_TOLERANCE: f64 = 1e-6;
pub const INEQUALITY_REL_TOLERANCE: f64 = 1e-6;

/// Number of smoothing scales in the default family.
pub const DEFAULT_FAMILY_SIZE: usize = 24;

/// Panels and Gauss order of the grid used for modular errors of `K_n f`.
pub const ERROR_GRID_PANELS: usize = 4096;
pub const ERROR_GRID_ORDER: usize = 5;

pub fn within_tolerance(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs + INEQUALITY_ABS_TOLERANCE + INEQUALITY_REL_TOLERANCE * rhs.abs()
}

#[derive(Debug, Clone)]
enum Shape {
    /// Piecewise cubic Hermite data on ascending knots.
    Hermite {
        knots: Vec<f64>,
        values: Vec<f64>,
        slopes: Vec<f64>,
    },
    /// The function itself, admitted when it is nonnegative and C¹.
    Exact(TestFunction),
}

/// A nonnegative C¹ function on `[a, b]` together with `‖g′‖∞`.
#[derive(Debug, Clone)]
pub struct SmootherCandidate {
    shape: Shape,
    h: Option<f64>,
    deriv_sup: f64,
    domain: (f64, f64),
}

impl SmootherCandidate {
    /// `f` itself as a candidate. Requires `f ≥ 0`, continuity and a known
    /// derivative bound.
    pub fn exact(f: &TestFunction) -> Result<Self> {
        let sup = f.derivative_sup().ok_or_else(|| {
            Error::InvalidParameter(format!("{} has no known derivative bound", f.name()))
        })?;
        if !f.is_nonneg() || !f.is_continuous() {
            return Err(Error::InvalidParameter(format!(
                "{} is not a nonnegative continuous function",
                f.name()
            )));
        }
        Ok(Self {
            shape: Shape::Exact(f.clone()),
            h: None,
            deriv_sup: sup,
            domain: f.domain(),
        })
    }

    pub fn eval(&self, x: f64) -> f64 {
        match &self.shape {
            Shape::Exact(f) => f.eval(x),
            Shape::Hermite { knots, values, slopes } => {
                let i = panel_index(knots, x);
                let (x0, x1) = (knots[i], knots[i + 1]);
                let dx = x1 - x0;
                let t = (x - x0) / dx;
                let t2 = t * t;
                let t3 = t2 * t;
                (2.0 * t3 - 3.0 * t2 + 1.0) * values[i]
                    + (t3 - 2.0 * t2 + t) * dx * slopes[i]
                    + (-2.0 * t3 + 3.0 * t2) * values[i + 1]
                    + (t3 - t2) * dx * slopes[i + 1]
            }
        }
    }

    pub fn deriv_sup(&self) -> f64 {
        self.deriv_sup
    }

    /// Smoothing scale, `None` for the exact candidate.
    pub fn h(&self) -> Option<f64> {
        self.h
    }

    pub fn knots(&self) -> &[f64] {
        match &self.shape {
            Shape::Hermite { knots, .. } => knots,
            Shape::Exact(f) => f.breakpoints(),
        }
    }

    pub fn description(&self) -> String {
        match (&self.shape, self.h) {
            (Shape::Exact(f), _) => format!("exact({})", f.name()),
            (_, Some(h)) => format!("pchip(h={h:.6e})"),
            (_, None) => "pchip".to_string(),
        }
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }
}

fn panel_index(knots: &[f64], x: f64) -> usize {
    let last = knots.len() - 2;
    match knots.binary_search_by(|k| k.total_cmp(&x)) {
        Ok(i) => i.min(last),
        Err(0) => 0,
        Err(i) => (i - 1).min(last),
    }
}

/// Max of `|p′|` for the cubic Hermite piece with the given end data.
fn hermite_deriv_sup(y0: f64, y1: f64, d0: f64, d1: f64, dx: f64) -> f64 {
    // p′(t) = A t² + B t + d0 on t ∈ [0, 1]
    let s = (y1 - y0) / dx;
    let a = -6.0 * s + 3.0 * d0 + 3.0 * d1;
    let b = 6.0 * s - 4.0 * d0 - 2.0 * d1;
    let mut m = d0.abs().max(d1.abs());
    if a != 0.0 {
        let t = -b / (2.0 * a);
        if t > 0.0 && t < 1.0 {
            m = m.max((a * t * t + b * t + d0).abs());
        }
    }
    m
}

/// Monotonicity-preserving slopes (weighted harmonic mean in the interior,
/// shape-limited three-point formula at the ends).
fn pchip_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let dx: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let s: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / dx[i]).collect();
    if n == 2 {
        return vec![s[0], s[0]];
    }
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        if s[i - 1] * s[i] > 0.0 {
            let w1 = 2.0 * dx[i] + dx[i - 1];
            let w2 = dx[i] + 2.0 * dx[i - 1];
            d[i] = (w1 + w2) / (w1 / s[i - 1] + w2 / s[i]);
        }
    }
    let end = |h0: f64, h1: f64, s0: f64, s1: f64| {
        let d = ((2.0 * h0 + h1) * s0 - h0 * s1) / (h0 + h1);
        if d.signum() != s0.signum() || s0 == 0.0 {
            0.0
        } else if s0.signum() != s1.signum() && d.abs() > 3.0 * s0.abs() {
            3.0 * s0
        } else {
            d
        }
    };
    d[0] = end(dx[0], dx[1], s[0], s[1]);
    d[n - 1] = end(dx[n - 2], dx[n - 3], s[n - 2], s[n - 3]);
    d
}

/// Average of the odd reflection of `f` about the endpoints over
/// `[x − h/2, x + h/2]`. The reflection `2f(a) − f(2a − t)` keeps affine
/// functions affine, so the smoother reproduces them exactly.
fn window_average(f: &TestFunction, x: f64, h: f64) -> Result<f64> {
    let (a, b) = f.domain();
    let (fa, fb) = (f.eval(a), f.eval(b));
    let ext = |t: f64| {
        if t < a {
            2.0 * fa - f.eval(2.0 * a - t)
        } else if t > b {
            2.0 * fb - f.eval(2.0 * b - t)
        } else {
            f.eval(t)
        }
    };
    let mut bps = vec![a, b];
    for &p in f.breakpoints() {
        bps.extend([p, 2.0 * a - p, 2.0 * b - p]);
    }
    let (lo, hi) = (x - 0.5 * h, x + 0.5 * h);
    let req = IntegrationRequest::new(&ext, lo, hi)
        .breakpoints(bps)
        .tolerance(MEAN_TOLERANCE * h);
    Ok(integrate(&req)?.require_converged(lo, hi)?.value / (hi - lo))
}

fn smoother(f: &TestFunction, h: f64) -> Result<SmootherCandidate> {
    let (a, b) = f.domain();
    if !(h > 0.0 && h <= (b - a) * (1.0 + 1e-12)) {
        return Err(Error::InvalidParameter(format!(
            "smoothing scale {h} outside (0, {}]",
            b - a
        )));
    }
    let m = (((b - a) / h) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let knots: Vec<f64> = (0..=m)
        .map(|i| if i == m { b } else { a + (b - a) * i as f64 / m as f64 })
        .collect();
    let first = knots
        .iter()
        .map(|&x| window_average(f, x, h))
        .collect::<Result<Vec<_>>>()?;
    // (1, 2, 1)/4 with linear extrapolation past the ends, which leaves the
    // end values unchanged.
    let last = first.len() - 1;
    let values: Vec<f64> = (0..=last)
        .map(|i| {
            let v = if i == 0 || i == last {
                first[i]
            } else {
                0.25 * (first[i - 1] + 2.0 * first[i] + first[i + 1])
            };
            v.max(0.0)
        })
        .collect();
    let slopes = pchip_slopes(&knots, &values);
    let deriv_sup = (0..last)
        .map(|i| hermite_deriv_sup(values[i], values[i + 1], slopes[i], slopes[i + 1], knots[i + 1] - knots[i]))
        .fold(0.0, f64::max);
    Ok(SmootherCandidate {
        shape: Shape::Hermite { knots, values, slopes },
        h: Some(h),
        deriv_sup,
        domain: (a, b),
    })
}

/// `count` log-spaced scales from `(b − a)/2¹²` to `(b − a)/2`.
pub fn default_h_grid(a: f64, b: f64, count: usize) -> Vec<f64> {
    let len = b - a;
    let (lo, hi) = ((len / 4096.0).ln(), (len / 2.0).ln());
    if count == 1 {
        return vec![len / 2.0];
    }
    (0..count)
        .map(|i| (lo + (hi - lo) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

/// One candidate per scale `h`: window averages of width `h` at uniform
/// knots no farther apart than `h`, a (1, 2, 1)/4 pass, clamping to `≥ 0`,
/// then a monotone cubic interpolant. When `f` is itself nonnegative and C¹
/// with a known derivative bound it is appended as an exact candidate.
pub fn build_smoother_family(f: &TestFunction, h_grid: &[f64]) -> Result<Vec<SmootherCandidate>> {
    let mut family = h_grid
        .par_iter()
        .map(|&h| smoother(f, h))
        .collect::<Result<Vec<_>>>()?;
    if let Ok(exact) = SmootherCandidate::exact(f) {
        family.push(exact);
    }
    Ok(family)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KFunctionalEstimate {
    /// Upper estimate of the K-functional (minimum over the family).
    pub value: f64,
    pub lambda: f64,
    pub delta: f64,
    /// Description of the minimizing candidate, `none` if every candidate
    /// saturated.
    pub argmin: String,
    pub fidelity: f64,
    pub smoothness: f64,
    pub skipped: usize,
}

#[derive(Debug, Clone)]
struct CandidateTerms {
    description: String,
    fidelity: Option<f64>,
    phi_of_deriv: f64,
}

/// Fidelity terms `I^φ[λ(f − g)]` for a fixed family, reusable across `δ`.
#[derive(Debug, Clone)]
pub struct KFunctionalTable {
    lambda: f64,
    terms: Vec<CandidateTerms>,
}

impl KFunctionalTable {
    pub fn new(f: &TestFunction, phi: &PhiFunction, lambda: f64, family: &[SmootherCandidate]) -> Result<Self> {
        if family.is_empty() {
            return Err(Error::InvalidParameter("smoother family is empty".into()));
        }
        let (a, b) = f.domain();
        let terms = family
            .par_iter()
            .map(|g| {
                if g.domain() != (a, b) {
                    return Err(Error::InvalidParameter(format!(
                        "candidate {} is not defined on [{a}, {b}]",
                        g.description()
                    )));
                }
                let mut bps: Vec<f64> = g.knots().to_vec();
                bps.extend_from_slice(f.breakpoints());
                bps.sort_by(f64::total_cmp);
                let diff = |x: f64| f.eval(x) - g.eval(x);
                let m = modular_integral(phi, &diff, a, b, &bps, lambda)?;
                Ok(CandidateTerms {
                    description: g.description(),
                    fidelity: (!m.saturated).then_some(m.value),
                    phi_of_deriv: phi.eval(g.deriv_sup()),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { lambda, terms })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Objective of every candidate at `δ`, `None` when saturated.
    pub fn objectives(&self, delta: f64) -> Vec<Option<f64>> {
        self.terms
            .iter()
            .map(|t| t.fidelity.map(|fid| fid + delta * t.phi_of_deriv))
            .collect()
    }

    pub fn estimate(&self, delta: f64) -> Result<KFunctionalEstimate> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidParameter(format!("delta must be positive, got {delta}")));
        }
        let mut best = KFunctionalEstimate {
            value: f64::INFINITY,
            lambda: self.lambda,
            delta,
            argmin: "none".into(),
            fidelity: f64::INFINITY,
            smoothness: f64::INFINITY,
            skipped: 0,
        };
        for t in &self.terms {
            let Some(fid) = t.fidelity else {
                best.skipped += 1;
                continue;
            };
            let smooth = delta * t.phi_of_deriv;
            let objective = fid + smooth;
            if objective < best.value {
                best.value = objective;
                best.argmin = t.description.clone();
                best.fidelity = fid;
                best.smoothness = smooth;
            }
        }
        Ok(best)
    }
}

/// Minimum of `I^φ[λ(f − g)] + δ φ(‖g′‖∞)` over `family`; an upper
/// estimate of the K-functional. Saturated candidates are skipped.
pub fn estimate_k_functional(
    f: &TestFunction,
    phi: &PhiFunction,
    lambda: f64,
    delta: f64,
    family: &[SmootherCandidate],
) -> Result<KFunctionalEstimate> {
    KFunctionalTable::new(f, phi, lambda, family)?.estimate(delta)
}

/// `(A1, A2)` with `A1 = ‖φ_σ‖₁ + 1` and
/// `A2 = 3 λ₀ (b − a) / (4 φ_σ(2) (‖φ_σ‖₁ + 1))`.
pub fn rate_bound_constants(kernel: &DensityKernel, a: f64, b: f64, lambda0: f64) -> Result<(f64, f64)> {
    if !kernel.is_admissible() {
        return Err(Error::InadmissibleKernel {
            name: kernel.name().to_string(),
            value_at_two: kernel.value_at_two,
        });
    }
    if !(b > a) {
        return Err(Error::InvalidInterval { lower: a, upper: b });
    }
    if !(lambda0 > 0.0 && lambda0.is_finite()) {
        return Err(Error::InvalidParameter(format!("lambda0 must be positive, got {lambda0}")));
    }
    let a1 = kernel.l1_norm + 1.0;
    let a2 = 3.0 * lambda0 * (b - a) / (4.0 * kernel.value_at_two * a1);
    Ok((a1, a2))
}

/// Largest `λ₁` with `max{3λ₁, 3λ₁/φ_σ(2)} ≤ λ₀`.
pub fn lambda1_rule(kernel: &DensityKernel, lambda0: f64) -> f64 {
    lambda0 * kernel.value_at_two.min(1.0) / 3.0
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateBoundReport {
    pub kernel: String,
    pub phi: String,
    pub function: String,
    pub n: u32,
    pub lambda0: f64,
    pub lambda1: f64,
    #[serde(rename = "A1")]
    pub a1: f64,
    #[serde(rename = "A2")]
    pub a2: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub k_upper_estimate: f64,
    pub argmin: String,
    pub pass: bool,
}

/// `K_n f − f` sampled on the default error grid. Signed functions go
/// through the shifted operator.
pub fn operator_error_samples(kernel: &DensityKernel, f: &TestFunction, n: u32, admission: Admission) -> Result<SampledFunction> {
    let (a, b) = f.domain();
    let grid = Arc::new(CompositeGrid::new(a, b, ERROR_GRID_PANELS, f.breakpoints(), ERROR_GRID_ORDER)?);
    let op = ShiftedOperator::new(kernel, f, n, admission)?;
    let values = grid
        .nodes
        .iter()
        .map(|&x| Ok(op.evaluate_fast(x)? - f.eval(x)))
        .collect::<Result<Vec<_>>>()?;
    SampledFunction::from_values(grid, values)
}

/// Assembles the report from a precomputed error sample and K-table. The
/// table must have been built at `λ₀` for the same function.
#[allow(clippy::too_many_arguments)]
pub fn rate_bound_report(
    kernel: &DensityKernel,
    f: &TestFunction,
    phi: &PhiFunction,
    n: u32,
    lambda0: f64,
    lambda1: f64,
    error: &SampledFunction,
    table: &KFunctionalTable,
) -> Result<RateBoundReport> {
    if table.lambda() != lambda0 {
        return Err(Error::InvalidParameter(format!(
            "K-table built at lambda {} but lambda0 is {lambda0}",
            table.lambda()
        )));
    }
    if 3.0 * lambda1 > lambda0 * (1.0 + 1e-12) || 3.0 * lambda1 / kernel.value_at_two > lambda0 * (1.0 + 1e-12) {
        return Err(Error::InvalidParameter(format!(
            "lambda1 = {lambda1} violates max(3λ₁, 3λ₁/φ(2)) ≤ λ₀ = {lambda0}"
        )));
    }
    let (a, b) = f.domain();
    let (a1, a2) = rate_bound_constants(kernel, a, b, lambda0)?;
    let lhs = modular_sampled(phi, error, lambda1)?.value;
    let k = table.estimate(a2 / n as f64)?;
    let rhs = a1 * k.value;
    Ok(RateBoundReport {
        kernel: kernel.name().to_string(),
        phi: phi.name().to_string(),
        function: f.name().to_string(),
        n,
        lambda0,
        lambda1,
        a1,
        a2,
        lhs,
        rhs,
        k_upper_estimate: k.value,
        argmin: k.argmin,
        pass: within_tolerance(lhs, rhs),
    })
}

/// Checks `I^φ[λ₁(K_n f − f)] ≤ A1 · K(f, λ₀, A2/n)` with the K-functional
/// replaced by its family upper estimate. `f` must be nonnegative.
#[allow(clippy::too_many_arguments)]
pub fn verify_rate_bound(
    f: &TestFunction,
    phi: &PhiFunction,
    kernel: &DensityKernel,
    n: u32,
    lambda0: f64,
    lambda1: f64,
    family: &[SmootherCandidate],
    admission: Admission,
) -> Result<RateBoundReport> {
    if !f.is_nonneg() {
        return Err(Error::InvalidParameter(format!(
            "{} takes negative values; shift it first",
            f.name()
        )));
    }
    let error = operator_error_samples(kernel, f, n, admission)?;
    let table = KFunctionalTable::new(f, phi, lambda0, family)?;
    rate_bound_report(kernel, f, phi, n, lambda0, lambda1, &error, &table)
}

/// `I^φ[λ (K_n f − f)]` computed on the default error grid.
pub fn operator_modular_error(phi: &PhiFunction, f: &TestFunction, k_n_f: &SampledFunction, lambda: f64) -> Result<f64> {
    Ok(modular_distance(phi, f, k_n_f, lambda)?.value)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SmoothRateReport {
    pub n: u32,
    pub sup_error: f64,
    pub bound: f64,
    pub pass: bool,
}

/// `sup |K_n g − g|` over `grid` uniform points against
/// `3‖g′‖∞ / (4 φ_σ(2) n)`.
pub fn smooth_rate_check(g: &TestFunction, kernel: &DensityKernel, n: u32, grid: usize, admission: Admission) -> Result<SmoothRateReport> {
    let deriv = g.derivative_sup().ok_or_else(|| {
        Error::InvalidParameter(format!("{} has no known derivative bound", g.name()))
    })?;
    if !kernel.is_admissible() {
        return Err(Error::InadmissibleKernel {
            name: kernel.name().to_string(),
            value_at_two: kernel.value_at_two,
        });
    }
    let (a, b) = g.domain();
    let op = ShiftedOperator::new(kernel, g, n, admission)?;
    let count = grid.max(2);
    let mut sup_error: f64 = 0.0;
    for i in 0..count {
        let x = if i == count - 1 { b } else { a + (b - a) * i as f64 / (count - 1) as f64 };
        sup_error = sup_error.max((op.evaluate_fast(x)? - g.eval(x)).abs());
    }
    let bound = 3.0 * deriv / (4.0 * kernel.value_at_two * n as f64);
    Ok(SmoothRateReport {
        n,
        sup_error,
        bound,
        pass: sup_error <= bound + INEQUALITY_ABS_TOLERANCE,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function::corpus;
    use crate::orlicz::{make_exponential, make_power_phi, make_zygmund};
    use approx::assert_abs_diff_eq;

    fn ramp() -> DensityKernel {
        DensityKernel::by_name("ramp").unwrap()
    }

    #[test]
    fn constants_follow_closed_forms() {
        let (a1, a2) = rate_bound_constants(&ramp(), 0.0, 1.0, 1.0).unwrap();
        assert_abs_diff_eq!(a1, 2.0, epsilon = 1e-6);
        assert_abs_diff_eq!(a2, 4.5, epsilon = 1e-5);
        let (_, a2x2) = rate_bound_constants(&ramp(), 0.0, 1.0, 2.0).unwrap();
        assert_abs_diff_eq!(a2x2, 2.0 * a2, epsilon = 1e-12);
        let logistic = DensityKernel::by_name("logistic").unwrap();
        let (a1, a2) = rate_bound_constants(&logistic, 0.0, 1.0, 1.0).unwrap();
        assert_abs_diff_eq!(a1, 2.0, epsilon = 1e-6);
        assert_abs_diff_eq!(a2, 3.0 / (8.0 * 0.110_757_774_096_214_23), epsilon = 1e-5);
        assert_abs_diff_eq!(a2, 3.3860, epsilon = 5e-4);
        assert!(rate_bound_constants(&ramp(), 0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn lambda1_satisfies_constraint() {
        for name in ["logistic", "tanh", "ramp"] {
            let k = DensityKernel::by_name(name).unwrap();
            let l1 = lambda1_rule(&k, 1.0);
            assert!(3.0 * l1 <= 1.0 && 3.0 * l1 / k.value_at_two <= 1.0 + 1e-15);
        }
    }

    #[test]
    fn constant_family_is_flat() {
        let c = TestFunction::constant(0.3, 0.0, 1.0).unwrap();
        let fam = build_smoother_family(&c, &default_h_grid(0.0, 1.0, 6)).unwrap();
        for g in &fam {
            assert_abs_diff_eq!(g.deriv_sup(), 0.0, epsilon = 1e-12);
            for i in 0..=20 {
                assert_abs_diff_eq!(g.eval(i as f64 / 20.0), 0.3, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn identity_slope_approaches_one() {
        let f = corpus::identity();
        let small = smoother(&f, 1.0 / 4096.0).unwrap();
        assert!((small.deriv_sup() - 1.0).abs() < 1e-2, "{}", small.deriv_sup());
        // Finite-difference check of the interpolant in the interior.
        let fd = (small.eval(0.6) - small.eval(0.4)) / 0.2;
        assert_abs_diff_eq!(fd, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn jump_slope_grows_like_inverse_h() {
        let f = corpus::jump();
        let hs = [1.0 / 16.0, 1.0 / 64.0, 1.0 / 256.0];
        let sups: Vec<f64> = hs.iter().map(|&h| smoother(&f, h).unwrap().deriv_sup()).collect();
        for (h, s) in hs.iter().zip(&sups) {
            let scaled = s * h;
            assert!(scaled > 0.3 && scaled < 3.0, "h = {h}, sup = {s}");
        }
        assert!(sups[0] < sups[1] && sups[1] < sups[2]);
    }

    #[test]
    fn candidates_are_nonnegative_and_c1() {
        for f in corpus::nonneg() {
            for g in build_smoother_family(&f, &default_h_grid(0.0, 1.0, 8)).unwrap() {
                let knots = g.knots().to_vec();
                for i in 0..=2000 {
                    assert!(g.eval(i as f64 / 2000.0) >= 0.0);
                }
                // Derivative continuity: one-sided difference quotients agree at knots.
                if g.h().is_some() {
                    for &k in knots.iter().skip(1).take(knots.len().saturating_sub(2)).step_by(7) {
                        let e = 1e-7;
                        let left = (g.eval(k) - g.eval(k - e)) / e;
                        let right = (g.eval(k + e) - g.eval(k)) / e;
                        assert!((left - right).abs() < 1e-3 * (1.0 + g.deriv_sup()));
                    }
                }
            }
        }
    }

    #[test]
    fn deriv_sup_dominates_sampled_slopes() {
        let f = corpus::kink();
        for g in build_smoother_family(&f, &default_h_grid(0.0, 1.0, 5)).unwrap() {
            let e = 1e-6;
            let mut sampled: f64 = 0.0;
            for i in 1..5000 {
                let x = i as f64 / 5000.0;
                sampled = sampled.max(((g.eval(x + e) - g.eval(x - e)) / (2.0 * e)).abs());
            }
            assert!(sampled <= g.deriv_sup() * (1.0 + 1e-6) + 1e-6);
        }
    }

    #[test]
    fn exact_candidate_bounds_estimate() {
        let f = corpus::parabola();
        let fam = build_smoother_family(&f, &default_h_grid(0.0, 1.0, 4)).unwrap();
        assert!(fam.iter().any(|g| g.h().is_none()));
        let phi = make_power_phi(2.0).unwrap();
        for delta in [1e-3, 0.1, 1.0] {
            let est = estimate_k_functional(&f, &phi, 1.0, delta, &fam).unwrap();
            assert!(est.value <= delta * phi.eval(1.0) + 1e-12);
        }
        let zero = TestFunction::constant(0.0, 0.0, 1.0).unwrap().with_derivative_sup(0.0);
        let fam = build_smoother_family(&zero, &[0.5]).unwrap();
        assert_eq!(estimate_k_functional(&zero, &phi, 1.0, 0.3, &fam).unwrap().value, 0.0);
    }

    #[test]
    fn estimate_is_minimum_over_objectives() {
        let f = corpus::jump();
        let fam = build_smoother_family(&f, &default_h_grid(0.0, 1.0, 24)).unwrap();
        let phi = make_zygmund(1.0, 1.0).unwrap();
        let table = KFunctionalTable::new(&f, &phi, 1.0, &fam).unwrap();
        let delta = 1e-3;
        let est = table.estimate(delta).unwrap();
        let objectives: Vec<f64> = table.objectives(delta).into_iter().flatten().collect();
        assert!(objectives.iter().all(|&o| est.value <= o));
        assert!(objectives.contains(&est.value));
    }

    #[test]
    fn step_minimizer_is_interior() {
        // Brute-force oracle: L¹ error of each candidate plus δ·‖g′‖∞.
        let f = corpus::jump();
        let hs = default_h_grid(0.0, 1.0, 24);
        let fam = build_smoother_family(&f, &hs).unwrap();
        let phi = make_power_phi(1.0).unwrap();
        let delta = 1e-3;
        let est = estimate_k_functional(&f, &phi, 1.0, delta, &fam).unwrap();
        let mut brute = Vec::new();
        for g in &fam {
            let n = 200_000;
            let l1: f64 = (0..n)
                .map(|i| {
                    let x = (i as f64 + 0.5) / n as f64;
                    (f.eval(x) - g.eval(x)).abs()
                })
                .sum::<f64>()
                / n as f64;
            brute.push(l1 + delta * g.deriv_sup());
        }
        let (imin, &bmin) = brute
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        assert!(imin > 0 && imin < hs.len() - 1, "argmin at index {imin}");
        assert_abs_diff_eq!(est.value, bmin, epsilon = 1e-5);
        assert_eq!(est.argmin, fam[imin].description());
    }

    #[test]
    fn rate_bound_on_constant_is_trivial() {
        let c = TestFunction::constant(0.4, 0.0, 1.0).unwrap().with_derivative_sup(0.0);
        let k = ramp();
        let fam = build_smoother_family(&c, &default_h_grid(0.0, 1.0, 4)).unwrap();
        let phi = make_power_phi(1.0).unwrap();
        let r = verify_rate_bound(&c, &phi, &k, 8, 1.0, lambda1_rule(&k, 1.0), &fam, Admission::Strict).unwrap();
        assert!(r.lhs.abs() < 1e-14 && r.rhs >= 0.0 && r.pass);
    }

    #[test]
    fn rate_bound_on_identity() {
        let f = corpus::identity();
        let k = ramp();
        let fam = build_smoother_family(&f, &default_h_grid(0.0, 1.0, 24)).unwrap();
        let phi = make_power_phi(1.0).unwrap();
        for n in [8, 64, 256] {
            let r = verify_rate_bound(&f, &phi, &k, n, 1.0, lambda1_rule(&k, 1.0), &fam, Admission::Strict).unwrap();
            assert!(r.pass, "{r:?}");
            assert_abs_diff_eq!(r.a2, 4.5, epsilon = 1e-5);
        }
        let signed = corpus::signed();
        assert!(verify_rate_bound(&signed, &phi, &k, 8, 1.0, 0.01, &fam, Admission::Strict).is_err());
        // λ₁ above the admissible bound is refused.
        assert!(verify_rate_bound(&f, &phi, &k, 8, 1.0, 0.2, &fam, Admission::Strict).is_err());
    }

    #[test]
    fn saturated_candidates_are_skipped() {
        let f = corpus::jump();
        let fam = build_smoother_family(&f, &[0.5]).unwrap();
        let phi = make_exponential(1.0).unwrap();
        let est = estimate_k_functional(&f, &phi, 5000.0, 1.0, &fam).unwrap();
        assert_eq!(est.skipped, 1);
        assert_eq!(est.value, f64::INFINITY);
        assert_eq!(est.argmin, "none");
    }

    #[test]
    fn smooth_rate_examples() {
        let k = ramp();
        let c = TestFunction::constant(1.0, 0.0, 1.0).unwrap().with_derivative_sup(0.0);
        let r = smooth_rate_check(&c, &k, 16, 257, Admission::Strict).unwrap();
        assert_eq!(r.bound, 0.0);
        assert!(r.sup_error < 1e-14 && r.pass);
        for n in [8u32, 32, 128] {
            let r = smooth_rate_check(&corpus::identity(), &k, n, 1025, Admission::Strict).unwrap();
            assert_abs_diff_eq!(r.bound, 9.0 / n as f64, epsilon = 1e-6);
            assert!(r.pass, "{r:?}");
        }
        let half = corpus::identity().scaled(0.5).with_derivative_sup(0.5);
        let r1 = smooth_rate_check(&corpus::identity(), &k, 8, 65, Admission::Strict).unwrap();
        let r2 = smooth_rate_check(&half, &k, 8, 65, Admission::Strict).unwrap();
        assert_abs_diff_eq!(r2.bound, 0.5 * r1.bound, epsilon = 1e-15);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(16))]

            #[test]
            fn estimate_monotone_in_delta_and_lambda(d1 in 1e-4f64..1.0, dd in 0.0f64..1.0, l1 in 0.1f64..2.0, dl in 0.0f64..2.0, fi in 0usize..4) {
                let f = &corpus::nonneg()[fi];
                let fam = build_smoother_family(f, &default_h_grid(0.0, 1.0, 6)).unwrap();
                let phi = make_power_phi(2.0).unwrap();
                let t1 = KFunctionalTable::new(f, &phi, l1, &fam).unwrap();
                let t2 = KFunctionalTable::new(f, &phi, l1 + dl, &fam).unwrap();
                let e11 = t1.estimate(d1).unwrap().value;
                let e12 = t1.estimate(d1 + dd).unwrap().value;
                let e21 = t2.estimate(d1).unwrap().value;
                prop_assert!(e11 <= e12 + 1e-15);
                prop_assert!(e11 <= e21 + 1e-8);
            }
        }
    }
}
