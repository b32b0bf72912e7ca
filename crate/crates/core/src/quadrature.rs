//! Numerical integration shared by the Kantorovich means, the modular
//! integrals and the kernel L¹ norm.
//!
//! [`integrate`] is a globally adaptive composite 15-point Gauss–Legendre
//! rule: the interval is first cut at every declared breakpoint, then the
//! panel with the largest error estimate is bisected until the summed
//! estimate drops below the requested absolute tolerance. The estimate of a
//! panel is the difference between the one-panel rule and the sum over its
//! two halves.
//!
//! [`CompositeGrid`] is the fixed-rule counterpart used when the same nodes
//! must be reused for many integrands (operator error sweeps).

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};

/// Bisection depth cap for a single panel.
pub const MAX_DEPTH: u32 = 40;
/// Hard cap on the number of live panels.
const MAX_PANELS: usize = 200_000;
/// Default tolerance for Kantorovich means.
pub const MEAN_TOLERANCE: f64 = 1e-10;
/// Default tolerance for modular integrals.
pub const MODULAR_TOLERANCE: f64 = 1e-8;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
///
/// Computed by Newton iteration on the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn gl15() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(15))
}

fn gl15_panel(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let (nodes, weights) = gl15();
    let c = 0.5 * (lo + hi);
    let h = 0.5 * (hi - lo);
    let mut s = 0.0;
    for (x, w) in nodes.iter().zip(weights) {
        s += w * f(c + h * x);
    }
    s * h
}

/// One definite integral over `[lower, upper]`.
pub struct IntegrationRequest<'a> {
    integrand: &'a dyn Fn(f64) -> f64,
    pub lower: f64,
    pub upper: f64,
    breakpoints: Vec<f64>,
    pub abs_tolerance: f64,
    /// Relative to the magnitude of the running estimate; 0 disables it.
    pub rel_tolerance: f64,
}

impl<'a> IntegrationRequest<'a> {
    pub fn new(integrand: &'a dyn Fn(f64) -> f64, lower: f64, upper: f64) -> Self {
        Self {
            integrand,
            lower,
            upper,
            breakpoints: Vec::new(),
            abs_tolerance: MEAN_TOLERANCE,
            rel_tolerance: 0.0,
        }
    }

    /// Declares points where the integrand is non-smooth. Points outside the
    /// open interval are dropped, the rest sorted and deduplicated.
    pub fn breakpoints<I: IntoIterator<Item = f64>>(mut self, points: I) -> Self {
        let (lo, hi) = (self.lower, self.upper);
        let mut bp: Vec<f64> = points
            .into_iter()
            .filter(|&p| p > lo && p < hi && p.is_finite())
            .collect();
        bp.sort_by(f64::total_cmp);
        bp.dedup();
        self.breakpoints = bp;
        self
    }

    pub fn tolerance(mut self, abs_tolerance: f64) -> Self {
        self.abs_tolerance = abs_tolerance;
        self
    }

    pub fn relative_tolerance(mut self, rel_tolerance: f64) -> Self {
        self.rel_tolerance = rel_tolerance;
        self
    }

    fn target(&self, value: f64) -> f64 {
        self.abs_tolerance.max(self.rel_tolerance * value.abs())
    }

    pub fn interior_breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub converged: bool,
    pub panels: usize,
}

impl Integral {
    /// Turns a nonconvergent result into an error carrying the best value.
    pub fn require_converged(self, lower: f64, upper: f64) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::QuadratureNonconvergence {
                lower,
                upper,
                value: self.value,
                error: self.error,
            })
        }
    }
}

struct Panel {
    lo: f64,
    hi: f64,
    fine: f64,
    left: f64,
    right: f64,
    error: f64,
    depth: u32,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn make_panel(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, coarse: f64, depth: u32) -> Panel {
    let mid = 0.5 * (lo + hi);
    let left = gl15_panel(f, lo, mid);
    let right = gl15_panel(f, mid, hi);
    let fine = left + right;
    let floor = 50.0 * f64::EPSILON * fine.abs();
    let mut error = (fine - coarse).abs();
    if error < floor {
        error = 0.0;
    }
    Panel {
        lo,
        hi,
        fine,
        left,
        right,
        error,
        depth,
    }
}

/// Adaptive composite Gauss–Legendre integration.
///
/// Returns the best value even when the depth cap is reached; in that case
/// `converged` is false.
pub fn integrate(request: &IntegrationRequest<'_>) -> Result<Integral> {
    let (lower, upper) = (request.lower, request.upper);
    if !(lower.is_finite() && upper.is_finite()) || lower > upper {
        return Err(Error::InvalidInterval { lower, upper });
    }
    if !(request.abs_tolerance > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "abs_tolerance must be positive, got {}",
            request.abs_tolerance
        )));
    }
    if lower == upper {
        return Ok(Integral {
            value: 0.0,
            error: 0.0,
            converged: true,
            panels: 0,
        });
    }
    let f = request.integrand;
    let mut edges = Vec::with_capacity(request.breakpoints.len() + 2);
    edges.push(lower);
    edges.extend_from_slice(&request.breakpoints);
    edges.push(upper);

    let mut heap = BinaryHeap::new();
    let mut done_value = 0.0;
    let mut done_error = 0.0;
    let mut total_error = 0.0;
    let mut live_value = 0.0;
    for w in edges.windows(2) {
        let coarse = gl15_panel(f, w[0], w[1]);
        let p = make_panel(f, w[0], w[1], coarse, 0);
        total_error += p.error;
        live_value += p.fine;
        heap.push(p);
    }

    let mut converged = true;
    while total_error + done_error > request.target(done_value + live_value) {
        let Some(worst) = heap.pop() else { break };
        if worst.error == 0.0 {
            heap.push(worst);
            break;
        }
        if worst.depth >= MAX_DEPTH || heap.len() + 2 > MAX_PANELS {
            // Freeze this panel; it can no longer improve.
            converged = false;
            total_error -= worst.error;
            live_value -= worst.fine;
            done_value += worst.fine;
            done_error += worst.error;
            if done_error > request.target(done_value + live_value) {
                break;
            }
            continue;
        }
        total_error -= worst.error;
        live_value -= worst.fine;
        let mid = 0.5 * (worst.lo + worst.hi);
        let a = make_panel(f, worst.lo, mid, worst.left, worst.depth + 1);
        let b = make_panel(f, mid, worst.hi, worst.right, worst.depth + 1);
        total_error += a.error + b.error;
        live_value += a.fine + b.fine;
        heap.push(a);
        heap.push(b);
    }

    let panels = heap.len();
    let mut value = done_value;
    let mut error = done_error;
    let mut live: Vec<Panel> = heap.into_vec();
    live.sort_by(|p, q| p.lo.total_cmp(&q.lo));
    for p in &live {
        value += p.fine;
        error += p.error;
    }
    if error > request.target(value) {
        converged = false;
    }
    Ok(Integral {
        value,
        error,
        converged,
        panels,
    })
}

/// Integrates over the whole real line an integrand with polynomial decay
/// `|f(x)| ≤ C |x|^(−decay_exponent)`.
///
/// The constant `C` is measured on a geometric grid of `|x| ∈ [1, 10⁸]`. The
/// integral is taken over `[−T, T]` where the analytic tail majorant
/// `2C T^(1−p)/(p−1)` is at most half of `abs_tolerance`; the majorant is
/// added to the returned error estimate.
pub fn integrate_decaying(
    integrand: &dyn Fn(f64) -> f64,
    breakpoints: &[f64],
    decay_exponent: f64,
    abs_tolerance: f64,
) -> Result<Integral> {
    let p = decay_exponent;
    if !(p > 1.0) {
        return Err(Error::SlowDecay(p));
    }
    if !(abs_tolerance > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "abs_tolerance must be positive, got {abs_tolerance}"
        )));
    }
    let c = decay_constant(integrand, p);
    let tail_budget = 0.5 * abs_tolerance;
    let t = if c == 0.0 {
        1.0
    } else {
        (2.0 * c / ((p - 1.0) * tail_budget)).powf(1.0 / (p - 1.0)).max(1.0)
    };
    if !t.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "tail cutoff overflows for decay exponent {p} and constant {c}"
        )));
    }
    let tail = if c == 0.0 {
        0.0
    } else {
        2.0 * c * t.powf(1.0 - p) / (p - 1.0)
    };
    // Geometric panels keep a localized bump visible to the first-level rule.
    let mut cuts: Vec<f64> = breakpoints.to_vec();
    cuts.push(0.0);
    let mut s = 1.0;
    while s < t {
        cuts.push(s);
        cuts.push(-s);
        s *= 2.0;
    }
    let req = IntegrationRequest::new(integrand, -t, t)
        .breakpoints(cuts)
        .tolerance(abs_tolerance - tail_budget);
    let mut out = integrate(&req)?;
    out.error += tail;
    Ok(out)
}

/// `sup |f(x)| |x|^p` over a geometric grid of `|x| ∈ [1, 10⁸]`.
pub fn decay_constant(f: &dyn Fn(f64) -> f64, p: f64) -> f64 {
    let mut c: f64 = 0.0;
    let per_decade = 40;
    for i in 0..=(8 * per_decade) {
        let x = 10f64.powf(i as f64 / per_decade as f64);
        let v = f(x).abs().max(f(-x).abs()) * x.powf(p);
        if v.is_finite() {
            c = c.max(v);
        }
    }
    c
}

/// Fixed composite Gauss–Legendre nodes over a panel partition.
///
/// Panels are `panels` equal cells of `[a, b]`, further cut at each interior
/// breakpoint.
#[derive(Debug, Clone)]
pub struct CompositeGrid {
    pub a: f64,
    pub b: f64,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub edges: Vec<f64>,
}

impl CompositeGrid {
    pub fn new(a: f64, b: f64, panels: usize, breakpoints: &[f64], order: usize) -> Result<Self> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidInterval { lower: a, upper: b });
        }
        if panels == 0 || order == 0 {
            return Err(Error::InvalidParameter(
                "composite grid needs at least one panel and one node".into(),
            ));
        }
        let mut edges: Vec<f64> = (0..=panels)
            .map(|i| a + (b - a) * i as f64 / panels as f64)
            .collect();
        edges.extend(breakpoints.iter().copied().filter(|&p| p > a && p < b));
        edges.sort_by(f64::total_cmp);
        edges.dedup_by(|x, y| (*x - *y).abs() <= 1e-15 * (b - a));
        let (gx, gw) = gauss_legendre(order);
        let mut nodes = Vec::with_capacity(edges.len() * order);
        let mut weights = Vec::with_capacity(edges.len() * order);
        for w in edges.windows(2) {
            let c = 0.5 * (w[0] + w[1]);
            let h = 0.5 * (w[1] - w[0]);
            for (x, wt) in gx.iter().zip(&gw) {
                nodes.push(c + h * x);
                weights.push(h * wt);
            }
        }
        Ok(Self {
            a,
            b,
            nodes,
            weights,
            edges,
        })
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    pub fn sample(self: &Arc<Self>, f: impl Fn(f64) -> f64) -> SampledFunction {
        SampledFunction {
            values: self.nodes.iter().map(|&x| f(x)).collect(),
            grid: Arc::clone(self),
        }
    }
}

/// Values of a function at the nodes of a [`CompositeGrid`].
#[derive(Debug, Clone)]
pub struct SampledFunction {
    pub grid: Arc<CompositeGrid>,
    pub values: Vec<f64>,
}

impl SampledFunction {
    pub fn from_values(grid: Arc<CompositeGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.nodes.len() {
            return Err(Error::InvalidParameter(format!(
                "expected {} samples, got {}",
                grid.nodes.len(),
                values.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.grid.nodes
    }
}
