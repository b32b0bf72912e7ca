//! Sigmoidal activations and the density kernels they induce.
//!
//! A sigmoidal function `σ` rises from 0 at `−∞` to 1 at `+∞`. Its density
//! kernel is `φ_σ(x) = ½[σ(x+1) − σ(x−1)]`. The operator theory relies on
//! three structural assumptions which are checked numerically here, never
//! assumed:
//!
//! - symmetry: `σ(x) − ½` is odd;
//! - unimodality: `φ_σ` is non-decreasing on `x < 0` and non-increasing on `x ≥ 0`;
//! - polynomial decay: `σ(x) = O(|x|^(−α))` as `x → −∞`.

use std::fmt;
use std::io::Read;
use std::path::Path;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::integrate_decaying;
use crate::RealFn;

/// Working decay exponent for catalog sigmoids, which decay faster than any
/// power. Only used to size truncation windows and tail bounds.
pub const DEFAULT_ALPHA: f64 = 2.0;

const SYMMETRY_TOL: f64 = 1e-12;
const MONOTONE_TOL: f64 = 1e-12;
const L1_TOLERANCE: f64 = 1e-10;
const KERNEL_VALIDATION_RESOLUTION: f64 = 1e-3;

/// A non-decreasing sigmoidal activation with its decay exponent.
#[derive(Clone)]
pub struct SigmoidalFunction {
    name: String,
    evaluator: RealFn,
    alpha: f64,
    breakpoints: Vec<f64>,
}

impl fmt::Debug for SigmoidalFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SigmoidalFunction")
            .field("name", &self.name)
            .field("alpha", &self.alpha)
            .field("breakpoints", &self.breakpoints)
            .finish()
    }
}

/// Logistic sigmoid `(1 + e^(−x))^(−1)`.
pub fn make_logistic() -> SigmoidalFunction {
    SigmoidalFunction {
        name: "logistic".into(),
        evaluator: Arc::new(|x: f64| 1.0 / (1.0 + (-x).exp())),
        alpha: DEFAULT_ALPHA,
        breakpoints: Vec::new(),
    }
}

/// `(tanh x + 1)/2`.
pub fn make_tanh() -> SigmoidalFunction {
    SigmoidalFunction {
        name: "tanh".into(),
        evaluator: Arc::new(|x: f64| 0.5 * (x.tanh() + 1.0)),
        alpha: DEFAULT_ALPHA,
        breakpoints: Vec::new(),
    }
}

/// Ramp: 0 below −3/2, `x/3 + 1/2` on `[−3/2, 3/2]`, 1 above.
pub fn make_ramp() -> SigmoidalFunction {
    SigmoidalFunction {
        name: "ramp".into(),
        evaluator: Arc::new(|x: f64| {
            if x < -1.5 {
                0.0
            } else if x <= 1.5 {
                x / 3.0 + 0.5
            } else {
                1.0
            }
        }),
        alpha: DEFAULT_ALPHA,
        breakpoints: vec![-1.5, 1.5],
    }
}

/// Discontinuous step: 0 below −2, 1/2 on `[−2, 2]`, 1 above.
pub fn make_step() -> SigmoidalFunction {
    SigmoidalFunction {
        name: "step".into(),
        evaluator: Arc::new(|x: f64| {
            if x < -2.0 {
                0.0
            } else if x <= 2.0 {
                0.5
            } else {
                1.0
            }
        }),
        alpha: DEFAULT_ALPHA,
        breakpoints: vec![-2.0, 2.0],
    }
}

/// Names accepted by [`SigmoidalFunction::by_name`].
pub const CATALOG: [&str; 4] = ["logistic", "tanh", "ramp", "step"];

impl SigmoidalFunction {
    /// Catalog lookup. `csv:PATH` loads a tabulated sigmoid.
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "logistic" => Ok(make_logistic()),
            "tanh" => Ok(make_tanh()),
            "ramp" => Ok(make_ramp()),
            "step" => Ok(make_step()),
            other => match other.strip_prefix("csv:") {
                Some(path) => Self::from_csv_path(path, DEFAULT_ALPHA),
                None => Err(Error::UnknownName {
                    kind: "kernel",
                    name: other.to_string(),
                }),
            },
        }
    }

    pub fn custom(
        name: impl Into<String>,
        evaluator: RealFn,
        alpha: f64,
        mut breakpoints: Vec<f64>,
    ) -> Result<Self> {
        check_alpha(alpha)?;
        breakpoints.sort_by(f64::total_cmp);
        breakpoints.dedup();
        Ok(Self {
            name: name.into(),
            evaluator,
            alpha,
            breakpoints,
        })
    }

    /// Tabulated sigmoid with linear interpolation between samples and
    /// constant extension beyond the table.
    pub fn from_table(name: impl Into<String>, xs: Vec<f64>, ys: Vec<f64>, alpha: f64) -> Result<Self> {
        let name = name.into();
        if xs.len() < 2 || xs.len() != ys.len() {
            return Err(Error::NotSigmoidal {
                name,
                reason: "table needs at least two (x, σ) rows".into(),
            });
        }
        if xs.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::NotSigmoidal {
                name,
                reason: "table abscissae must be strictly ascending".into(),
            });
        }
        if let Some(i) = (1..ys.len()).find(|&i| ys[i] < ys[i - 1]) {
            return Err(Error::NotMonotone {
                name,
                x0: xs[i - 1],
                y0: ys[i - 1],
                x1: xs[i],
                y1: ys[i],
            });
        }
        let breakpoints = xs.clone();
        let evaluator: RealFn = Arc::new(move |x: f64| {
            let n = xs.len();
            if x <= xs[0] {
                return ys[0];
            }
            if x >= xs[n - 1] {
                return ys[n - 1];
            }
            let i = xs.partition_point(|&v| v <= x);
            let (x0, x1, y0, y1) = (xs[i - 1], xs[i], ys[i - 1], ys[i]);
            y0 + (y1 - y0) * (x - x0) / (x1 - x0)
        });
        Self::custom(name, evaluator, alpha, breakpoints)
    }

    /// Reads `x,σ(x)` rows; a non-numeric first row is treated as a header.
    pub fn from_csv_reader<R: Read>(name: impl Into<String>, reader: R, alpha: f64) -> Result<Self> {
        let name = name.into();
        let mut rows = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(reader);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (i, record) in rows.records().enumerate() {
            let record = record.map_err(|e| Error::NotSigmoidal {
                name: name.clone(),
                reason: e.to_string(),
            })?;
            let parsed = match (record.get(0), record.get(1)) {
                (Some(a), Some(b)) => a.parse::<f64>().ok().zip(b.parse::<f64>().ok()),
                _ => None,
            };
            match parsed {
                Some((x, y)) => {
                    xs.push(x);
                    ys.push(y);
                }
                None if i == 0 => continue,
                None => {
                    return Err(Error::NotSigmoidal {
                        name,
                        reason: format!("malformed row {}: `{}`", i + 1, record.iter().collect::<Vec<_>>().join(",")),
                    })
                }
            }
        }
        Self::from_table(name, xs, ys, alpha)
    }

    pub fn from_csv_path(path: impl AsRef<Path>, alpha: f64) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path)
            .map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
        Self::from_csv_reader(format!("csv:{}", path.display()), file, alpha)
    }

    pub fn with_alpha(mut self, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        self.alpha = alpha;
        Ok(self)
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        (self.evaluator)(x)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    fn validation_extent(&self) -> f64 {
        let far = self.breakpoints.iter().fold(0.0f64, |m, b| m.max(b.abs()));
        (2.0 * far + 4.0).max(10.0)
    }

    /// Checks monotonicity on a sampled grid and the limits at `±T` for
    /// `T ∈ {10, 100, 1000}`.
    pub fn check_shape(&self) -> Result<()> {
        let extent = self.validation_extent();
        let mut xs: Vec<f64> = geometric_points(extent, 1e4, 20)
            .map(|x| -x)
            .collect();
        xs.reverse();
        let steps = (2.0 * extent / KERNEL_VALIDATION_RESOLUTION).round() as usize;
        xs.extend((0..=steps).map(|i| -extent + 2.0 * extent * i as f64 / steps as f64));
        xs.extend(geometric_points(extent, 1e4, 20));
        for &b in &self.breakpoints {
            xs.extend([b - 1e-9, b, b + 1e-9]);
        }
        xs.sort_by(f64::total_cmp);
        let mut prev: Option<(f64, f64)> = None;
        for &x in &xs {
            let y = self.eval(x);
            if !y.is_finite() {
                return Err(Error::NotSigmoidal {
                    name: self.name.clone(),
                    reason: format!("σ({x}) is not finite"),
                });
            }
            if let Some((x0, y0)) = prev {
                if y < y0 - MONOTONE_TOL {
                    return Err(Error::NotMonotone {
                        name: self.name.clone(),
                        x0,
                        y0,
                        x1: x,
                        y1: y,
                    });
                }
            }
            prev = Some((x, y));
        }
        let scale = 10f64.powf(self.alpha) * self.eval(-10.0).max(1.0 - self.eval(10.0));
        for t in [10.0f64, 100.0, 1000.0] {
            let tol = scale.max(1.0) * t.powf(-self.alpha);
            let low = self.eval(-t);
            let high = 1.0 - self.eval(t);
            if low > tol || high > tol {
                return Err(Error::NotSigmoidal {
                    name: self.name.clone(),
                    reason: format!(
                        "limits not reached at T = {t}: σ(−T) = {low}, 1 − σ(T) = {high}, tolerance {tol}"
                    ),
                });
            }
        }
        Ok(())
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "decay exponent must be positive and finite, got {alpha}"
        )))
    }
}

fn geometric_points(start: f64, end: f64, per_decade: usize) -> impl Iterator<Item = f64> {
    let decades = (end / start).log10();
    let count = (decades * per_decade as f64).ceil() as usize;
    (0..=count).map(move |i| start * 10f64.powf(i as f64 / per_decade as f64))
}

/// Outcome of one structural check. The witness layout depends on the check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AssumptionCheck {
    pub holds: bool,
    /// Symmetry: `[x, residual]`; unimodality: `[x_near, x_far]` with
    /// `φ(x_far) > φ(x_near)`; decay: `[x, σ(−x)·x^α]`.
    pub witness: Option<[f64; 2]>,
    /// Largest violation observed (0 when the check holds).
    pub worst: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AssumptionReport {
    pub symmetry: AssumptionCheck,
    pub unimodal_kernel: AssumptionCheck,
    pub polynomial_decay: AssumptionCheck,
    /// Measured `sup_{x≥1} x^α · max(σ(−x), 1 − σ(x))` on the geometric grid.
    pub decay_constant: f64,
    pub grid_resolution: f64,
}

impl AssumptionReport {
    pub fn all_hold(&self) -> bool {
        self.symmetry.holds && self.unimodal_kernel.holds && self.polynomial_decay.holds
    }
}

/// Numerically checks symmetry, kernel unimodality and polynomial decay.
/// Failures are reported with witness points, never raised.
pub fn validate_assumptions(sigma: &SigmoidalFunction, grid_resolution: f64) -> Result<AssumptionReport> {
    if !(grid_resolution > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "grid_resolution must be positive, got {grid_resolution}"
        )));
    }
    let extent = sigma.validation_extent();
    let steps = (extent / grid_resolution).ceil() as usize;
    let grid: Vec<f64> = (0..=steps).map(|i| extent * i as f64 / steps as f64).collect();

    let mut symmetry = AssumptionCheck {
        holds: true,
        witness: None,
        worst: 0.0,
    };
    for &x in &grid {
        let r = (sigma.eval(x) - 0.5 + sigma.eval(-x) - 0.5).abs();
        if r > SYMMETRY_TOL && r > symmetry.worst {
            symmetry = AssumptionCheck {
                holds: false,
                witness: Some([x, r]),
                worst: r,
            };
        }
    }

    let raw_kernel = |x: f64| 0.5 * (sigma.eval(x + 1.0) - sigma.eval(x - 1.0));
    let mut unimodal = AssumptionCheck {
        holds: true,
        witness: None,
        worst: 0.0,
    };
    for sign in [1.0, -1.0] {
        // Moving outward from 0 the kernel must never rise above its running minimum.
        let mut run_min = f64::INFINITY;
        let mut run_at = 0.0;
        for &x in &grid {
            let x = sign * x;
            let v = raw_kernel(x);
            if v < run_min {
                run_min = v;
                run_at = x;
            }
            let rise = v - run_min;
            if rise > MONOTONE_TOL && rise > unimodal.worst {
                unimodal = AssumptionCheck {
                    holds: false,
                    witness: Some([run_at, x]),
                    worst: rise,
                };
            }
        }
    }

    let alpha = sigma.alpha();
    let mut head_max: f64 = 0.0;
    let mut tail_max: f64 = 0.0;
    let mut tail_arg = 0.0;
    let mut decay_constant: f64 = 0.0;
    for x in geometric_points(1.0, 1e6, 20) {
        let weight = x.powf(alpha);
        let q = sigma.eval(-x) * weight;
        let both = q.max((1.0 - sigma.eval(x)) * weight);
        decay_constant = decay_constant.max(both);
        if x < 1e5 {
            head_max = head_max.max(q);
        } else if q > tail_max {
            tail_max = q;
            tail_arg = x;
        }
    }
    let decay_holds = tail_max <= head_max * (1.0 + 1e-6) && tail_max.is_finite();
    let polynomial_decay = AssumptionCheck {
        holds: decay_holds,
        witness: (!decay_holds).then_some([tail_arg, tail_max]),
        worst: if decay_holds { 0.0 } else { tail_max - head_max },
    };

    Ok(AssumptionReport {
        symmetry,
        unimodal_kernel: unimodal,
        polynomial_decay,
        decay_constant,
        grid_resolution,
    })
}

/// The density kernel `φ_σ(x) = ½[σ(x+1) − σ(x−1)]` with cached values.
#[derive(Clone)]
pub struct DensityKernel {
    source: SigmoidalFunction,
    symmetric: bool,
    pub value_at_zero: f64,
    pub value_at_two: f64,
    pub l1_norm: f64,
    pub l1_error: f64,
    breakpoints: Vec<f64>,
    assumptions: AssumptionReport,
}

impl fmt::Debug for DensityKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DensityKernel")
            .field("source", &self.source.name)
            .field("value_at_zero", &self.value_at_zero)
            .field("value_at_two", &self.value_at_two)
            .field("l1_norm", &self.l1_norm)
            .finish()
    }
}

/// Builds the kernel of `sigma`, validating it and caching `φ(0)`, `φ(2)`
/// and `‖φ‖₁`.
///
/// Fails when `sigma` is not monotone on the sampled grid or when its decay
/// exponent is too small for a certified L¹ norm (`α ≤ 1`).
pub fn make_density_kernel(sigma: SigmoidalFunction) -> Result<DensityKernel> {
    sigma.check_shape()?;
    let assumptions = validate_assumptions(&sigma, KERNEL_VALIDATION_RESOLUTION)?;
    let mut breakpoints: Vec<f64> = sigma
        .breakpoints
        .iter()
        .flat_map(|&b| [b - 1.0, b + 1.0])
        .collect();
    breakpoints.sort_by(f64::total_cmp);
    breakpoints.dedup();
    let mut kernel = DensityKernel {
        symmetric: assumptions.symmetry.holds,
        source: sigma,
        value_at_zero: 0.0,
        value_at_two: 0.0,
        l1_norm: 0.0,
        l1_error: 0.0,
        breakpoints,
        assumptions,
    };
    kernel.value_at_zero = kernel.eval(0.0);
    kernel.value_at_two = kernel.eval(2.0);
    let mass = integrate_decaying(
        &|x| kernel.eval(x),
        &kernel.breakpoints,
        kernel.source.alpha,
        L1_TOLERANCE,
    )?;
    kernel.l1_norm = mass.value;
    kernel.l1_error = mass.error;
    if kernel.assumptions.all_hold() {
        log::debug!("kernel `{}` satisfies all assumptions", kernel.name());
    } else {
        log::warn!(
            "kernel `{}` violates structural assumptions: {:?}",
            kernel.name(),
            kernel.assumptions
        );
    }
    Ok(kernel)
}

impl DensityKernel {
    pub fn by_name(name: &str) -> Result<Self> {
        make_density_kernel(SigmoidalFunction::by_name(name)?)
    }

    /// `φ_σ(x)`. For symmetric sigmoids the value is taken at `−|x|`, which
    /// avoids cancellation between two values close to 1 and makes the
    /// kernel exactly even.
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        let t = if self.symmetric { -x.abs() } else { x };
        0.5 * (self.source.eval(t + 1.0) - self.source.eval(t - 1.0))
    }

    pub fn name(&self) -> &str {
        self.source.name()
    }

    pub fn source(&self) -> &SigmoidalFunction {
        &self.source
    }

    pub fn alpha(&self) -> f64 {
        self.source.alpha
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn assumptions(&self) -> &AssumptionReport {
        &self.assumptions
    }

    /// `φ_σ(2) > 0`, needed for the operator denominator bound.
    pub fn is_admissible(&self) -> bool {
        self.value_at_two > 0.0
    }

    pub fn satisfies_assumptions(&self) -> bool {
        self.assumptions.all_hold()
    }

    pub fn is_unimodal(&self) -> bool {
        self.assumptions.unimodal_kernel.holds
    }

    /// Upper bound on `sup_{|t| ≥ k} φ(t)|t|^β` for `k ≥ 2`, from
    /// `φ(t) ≤ ½ C (|t| − 1)^(−α)` and `|t| − 1 ≥ |t|/2`.
    pub fn tail_majorant(&self, k: f64, beta: f64) -> f64 {
        let alpha = self.alpha();
        0.5 * self.assumptions.decay_constant * 2f64.powf(alpha) * k.powf(beta - alpha)
    }
}

/// Generalized absolute moment `m_β(φ_σ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentReport {
    pub beta: f64,
    pub value: f64,
    pub sup_grid_resolution: f64,
    /// Point of `[0, 1]` where the supremum is attained.
    pub argmax: f64,
    /// Terms with `|x − k| > k_cut` were skipped.
    pub k_cut: i64,
    /// Bound on every skipped term.
    pub truncation_bound: f64,
}

const MAX_K_CUT: i64 = 4096;

fn moment_profile(kernel: &DensityKernel, beta: f64, x: f64, k_cut: i64) -> f64 {
    let mut best: f64 = 0.0;
    for k in -k_cut..=k_cut + 1 {
        let t = x - k as f64;
        let v = kernel.eval(t) * t.abs().powf(beta);
        best = best.max(v);
    }
    best
}

/// `m_β(φ_σ) = sup_x max_k φ_σ(x − k)|x − k|^β`.
///
/// The supremum is searched over `x ∈ [0, 1]` (the expression is 1-periodic
/// in `x`) on a grid of the given resolution, then refined by golden-section
/// search around the best grid point. The `k` range is cut at the smallest
/// `K ≥ 2` whose tail majorant is below the value already attained, so the
/// truncation cannot change the result.
pub fn moment(kernel: &DensityKernel, beta: f64, grid_resolution: f64) -> Result<MomentReport> {
    if !(beta >= 0.0) {
        return Err(Error::InvalidParameter(format!("beta must be non-negative, got {beta}")));
    }
    if !(grid_resolution > 0.0 && grid_resolution <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "grid_resolution must lie in (0, 1], got {grid_resolution}"
        )));
    }
    let alpha = kernel.alpha();
    if beta > alpha {
        return Err(Error::UnboundedMoment { beta, alpha });
    }
    let steps = (1.0 / grid_resolution).round() as usize;
    let grid: Vec<f64> = (0..=steps).map(|i| i as f64 / steps as f64).collect();

    let floor = grid
        .iter()
        .step_by((steps / 64).max(1))
        .map(|&x| moment_profile(kernel, beta, x, 2))
        .fold(0.0f64, f64::max);
    let mut k_cut = 2;
    while k_cut < MAX_K_CUT && kernel.tail_majorant(k_cut as f64, beta) >= floor {
        k_cut *= 2;
    }
    if k_cut > 2 {
        // Shrink back to the smallest passing window.
        let (mut lo, mut hi) = (k_cut / 2, k_cut);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if kernel.tail_majorant(mid as f64, beta) < floor {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        k_cut = hi;
    }

    let (mut argmax, mut value) = (0.0, f64::NEG_INFINITY);
    for &x in &grid {
        let v = moment_profile(kernel, beta, x, k_cut);
        if v > value {
            value = v;
            argmax = x;
        }
    }
    let (x, v) = golden_max(
        |x| moment_profile(kernel, beta, x, k_cut),
        argmax - grid_resolution,
        argmax + grid_resolution,
    );
    if v > value {
        value = v;
        argmax = x.rem_euclid(1.0);
    }
    Ok(MomentReport {
        beta,
        value,
        sup_grid_resolution: grid_resolution,
        argmax,
        k_cut,
        truncation_bound: kernel.tail_majorant(k_cut as f64, beta),
    })
}

fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    if fc > fd {
        (c, fc)
    } else {
        (d, fd)
    }
}
