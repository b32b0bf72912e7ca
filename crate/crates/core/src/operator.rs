//! The max-product Kantorovich operator
//!
//! ```text
//!            max_{k ∈ J_n} [ n ∫_{k/n}^{(k+1)/n} f(u) du ] φ_σ(nx − k)
//! K_n(f, x) = ─────────────────────────────────────────────────────
//!                       max_{k ∈ J_n} φ_σ(nx − k)
//! ```
//!
//! with `J_n = {k : ⌈na⌉ ≤ k ≤ ⌊nb⌋ − 1}`.

use std::ops::RangeInclusive;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::function::TestFunction;
use crate::quadrature::{integrate, IntegrationRequest, MEAN_TOLERANCE};
use crate::sigmoid::DensityKernel;

/// Denominators at or below this value are treated as degenerate.
pub const DENOMINATOR_FLOOR: f64 = 1e-30;

/// Inclusive integer range `J_n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct IndexRange {
    pub first: i64,
    pub last: i64,
}

impl IndexRange {
    pub fn len(&self) -> usize {
        (self.last - self.first + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.last < self.first
    }

    pub fn iter(&self) -> RangeInclusive<i64> {
        self.first..=self.last
    }

    pub fn contains(&self, k: i64) -> bool {
        self.first <= k && k <= self.last
    }
}

fn snapped(v: f64) -> f64 {
    let r = v.round();
    if (v - r).abs() <= 1e-12 * v.abs().max(1.0) {
        r
    } else {
        v
    }
}

/// `J_n = {k : ⌈na⌉ ≤ k ≤ ⌊nb⌋ − 1}`. Products within 1e-12 (relative) of an
/// integer are snapped first, so `n·0.3` counts as 3 for `n = 10`.
pub fn index_set(n: u32, a: f64, b: f64) -> Result<IndexRange> {
    if n == 0 || !(a < b) {
        return Err(Error::EmptyIndexSet { n, a, b });
    }
    let nf = f64::from(n);
    let first = snapped(nf * a).ceil() as i64;
    let last = snapped(nf * b).floor() as i64 - 1;
    if first > last {
        return Err(Error::EmptyIndexSet { n, a, b });
    }
    Ok(IndexRange { first, last })
}

/// The cell averages `n ∫_{k/n}^{(k+1)/n} f` for `k ∈ J_n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KantorovichMeans {
    pub n: u32,
    pub k_range: IndexRange,
    pub values: Vec<f64>,
}

impl KantorovichMeans {
    pub fn get(&self, k: i64) -> Option<f64> {
        self.k_range
            .contains(k)
            .then(|| self.values[(k - self.k_range.first) as usize])
    }
}

/// One cell average, from the antiderivative when available.
pub fn cell_mean(f: &TestFunction, n: u32, k: i64) -> Result<f64> {
    let nf = f64::from(n);
    let lo = k as f64 / nf;
    let hi = (k + 1) as f64 / nf;
    if let Some(big_f) = f.antiderivative() {
        return Ok(nf * (big_f(hi) - big_f(lo)));
    }
    let g = |u: f64| f.eval(u);
    let req = IntegrationRequest::new(&g, lo, hi)
        .breakpoints(f.breakpoints().iter().copied())
        .tolerance(MEAN_TOLERANCE / nf);
    let r = integrate(&req)
        .and_then(|r| r.require_converged(lo, hi))
        .map_err(|e| Error::CellQuadrature {
            k,
            source: Box::new(e),
        })?;
    Ok(nf * r.value)
}

pub fn kantorovich_means(f: &TestFunction, n: u32) -> Result<KantorovichMeans> {
    let (a, b) = f.domain();
    let k_range = index_set(n, a, b)?;
    let values = k_range
        .iter()
        .map(|k| cell_mean(f, n, k))
        .collect::<Result<Vec<_>>>()?;
    Ok(KantorovichMeans { n, k_range, values })
}

/// How strictly a kernel is screened before operator use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Admission {
    /// Requires `φ(2) > 0` and all structural assumptions.
    #[default]
    Strict,
    /// Requires only `φ(2) > 0`; assumption violations are logged.
    AllowAssumptionViolations,
}

/// Details of a single evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Evaluation {
    pub value: f64,
    pub numerator: f64,
    pub denominator: f64,
    /// Smallest `k` attaining the numerator maximum.
    pub argmax: i64,
}

/// `K_n` bound to a kernel, a function and `n`. Immutable; evaluation is
/// pure and may run concurrently.
#[derive(Debug, Clone)]
pub struct OperatorInstance {
    kernel: DensityKernel,
    f: TestFunction,
    n: u32,
    means: KantorovichMeans,
    means_nonneg: bool,
    means_max: f64,
}

impl OperatorInstance {
    pub fn new(kernel: &DensityKernel, f: &TestFunction, n: u32, admission: Admission) -> Result<Self> {
        if !kernel.is_admissible() {
            return Err(Error::InadmissibleKernel {
                name: kernel.name().to_string(),
                value_at_two: kernel.value_at_two,
            });
        }
        if !kernel.satisfies_assumptions() {
            match admission {
                Admission::Strict => return Err(Error::AssumptionsViolated(kernel.name().to_string())),
                Admission::AllowAssumptionViolations => log::warn!(
                    "using kernel `{}` although it violates the structural assumptions",
                    kernel.name()
                ),
            }
        }
        let means = kantorovich_means(f, n)?;
        let means_nonneg = means.values.iter().all(|&v| v >= 0.0);
        let means_max = means.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(Self {
            kernel: kernel.clone(),
            f: f.clone(),
            n,
            means,
            means_nonneg,
            means_max,
        })
    }

    pub fn kernel(&self) -> &DensityKernel {
        &self.kernel
    }

    pub fn function(&self) -> &TestFunction {
        &self.f
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn means(&self) -> &KantorovichMeans {
        &self.means
    }

    fn check_domain(&self, x: f64) -> Result<()> {
        let (a, b) = self.f.domain();
        let slack = 1e-12 * (b - a);
        if x < a - slack || x > b + slack || x.is_nan() {
            return Err(Error::OutOfDomain { x, a, b });
        }
        Ok(())
    }

    /// Reference evaluation: full scan over `J_n`.
    pub fn evaluate(&self, x: f64) -> Result<f64> {
        self.evaluate_detailed(x).map(|e| e.value)
    }

    pub fn evaluate_detailed(&self, x: f64) -> Result<Evaluation> {
        self.check_domain(x)?;
        let nx = f64::from(self.n) * x;
        let mut num = f64::NEG_INFINITY;
        let mut den: f64 = 0.0;
        let mut argmax = self.means.k_range.first;
        for (k, &m) in self.means.k_range.iter().zip(&self.means.values) {
            let w = self.kernel.eval(nx - k as f64);
            let v = m * w;
            if v > num {
                num = v;
                argmax = k;
            }
            den = den.max(w);
        }
        finish(x, num, den, argmax)
    }

    /// Fast path: scans outward from `k ≈ nx` and stops once the remaining
    /// terms cannot raise either maximum. Used only when the kernel is
    /// verified unimodal and every mean is non-negative; otherwise falls back
    /// to [`evaluate`](Self::evaluate).
    pub fn evaluate_fast(&self, x: f64) -> Result<f64> {
        if !(self.kernel.is_unimodal() && self.means_nonneg) {
            return self.evaluate(x);
        }
        self.check_domain(x)?;
        let range = self.means.k_range;
        let nx = f64::from(self.n) * x;
        let center = (nx.round() as i64).clamp(range.first, range.last);
        let top = self.means_max;
        let mut num = f64::NEG_INFINITY;
        let mut den: f64 = 0.0;
        let mut visit = |k: i64| {
            let w = self.kernel.eval(nx - k as f64);
            let m = self.means.values[(k - range.first) as usize];
            num = num.max(m * w);
            den = den.max(w);
            top * w <= num && w <= den
        };
        visit(center);
        for k in (range.first..center).rev() {
            if visit(k) {
                break;
            }
        }
        for k in center + 1..=range.last {
            if visit(k) {
                break;
            }
        }
        finish(x, num, den, center).map(|e| e.value)
    }
}

fn finish(x: f64, num: f64, den: f64, argmax: i64) -> Result<Evaluation> {
    if !(den > DENOMINATOR_FLOOR) {
        return Err(Error::DegenerateDenominator { x, value: den });
    }
    Ok(Evaluation {
        value: num / den,
        numerator: num,
        denominator: den,
        argmax,
    })
}

/// `K_n(f − c, ·) + c` for functions bounded below by `c`. Non-negative
/// functions use `c = 0`.
#[derive(Debug, Clone)]
pub struct ShiftedOperator {
    inner: OperatorInstance,
    shift: f64,
}

impl ShiftedOperator {
    pub fn new(kernel: &DensityKernel, f: &TestFunction, n: u32, admission: Admission) -> Result<Self> {
        let shift = if f.is_nonneg() { 0.0 } else { f.lower_bound() };
        let inner = if shift == 0.0 {
            OperatorInstance::new(kernel, f, n, admission)?
        } else {
            OperatorInstance::new(kernel, &f.shifted(shift), n, admission)?
        };
        Ok(Self { inner, shift })
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn inner(&self) -> &OperatorInstance {
        &self.inner
    }

    pub fn evaluate(&self, x: f64) -> Result<f64> {
        Ok(self.inner.evaluate(x)? + self.shift)
    }

    pub fn evaluate_fast(&self, x: f64) -> Result<f64> {
        Ok(self.inner.evaluate_fast(x)? + self.shift)
    }
}

/// One-shot `K_n(f − c, x) + c`.
pub fn evaluate_shifted(kernel: &DensityKernel, f: &TestFunction, n: u32, x: f64) -> Result<f64> {
    ShiftedOperator::new(kernel, f, n, Admission::AllowAssumptionViolations)?.evaluate(x)
}

/// Minimum over a grid of the denominator `max_k φ_σ(nx − k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DenominatorProfile {
    pub n: u32,
    pub minimum: f64,
    pub argmin: f64,
}

/// Scans `grid` equally spaced points of `[a, b]` (endpoints included).
pub fn denominator_profile(kernel: &DensityKernel, n: u32, a: f64, b: f64, grid: usize) -> Result<DenominatorProfile> {
    let range = index_set(n, a, b)?;
    let grid = grid.max(2);
    let nf = f64::from(n);
    let mut out = DenominatorProfile {
        n,
        minimum: f64::INFINITY,
        argmin: a,
    };
    for i in 0..grid {
        let x = a + (b - a) * i as f64 / (grid - 1) as f64;
        let d = range
            .iter()
            .map(|k| kernel.eval(nf * x - k as f64))
            .fold(0.0, f64::max);
        if d < out.minimum {
            out.minimum = d;
            out.argmin = x;
        }
    }
    Ok(out)
}

/// A row of a grid evaluation export.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridRow {
    pub x: f64,
    pub k_n_f_x: f64,
    pub f_x: f64,
    pub abs_error: f64,
}

/// Evaluates `K_n f` (sign-shifted when `f` is negative somewhere) at
/// `points` equally spaced points of the domain.
pub fn grid_evaluation(op: &ShiftedOperator, points: usize) -> Result<Vec<GridRow>> {
    let f = op.inner().function();
    let (a, b) = f.domain();
    let points = points.max(2);
    (0..points)
        .map(|i| {
            let x = a + (b - a) * i as f64 / (points - 1) as f64;
            let k = op.evaluate(x)?;
            let fx = f.eval(x) + op.shift();
            Ok(GridRow {
                x,
                k_n_f_x: k,
                f_x: fx,
                abs_error: (k - fx).abs(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function::corpus;
    use crate::sigmoid::{make_density_kernel, make_logistic, make_ramp, make_step, make_tanh};
    use approx::assert_abs_diff_eq;
    use std::sync::Arc;

    fn ramp() -> DensityKernel {
        make_density_kernel(make_ramp()).unwrap()
    }

    #[test]
    fn index_sets() {
        assert_eq!(index_set(4, 0.0, 1.0).unwrap(), IndexRange { first: 0, last: 3 });
        assert_eq!(index_set(10, 0.15, 0.95).unwrap(), IndexRange { first: 2, last: 8 });
        let r = index_set(1, 0.0, 1.5).unwrap();
        assert_eq!(r, IndexRange { first: 0, last: 0 });
        assert!(0.0 <= r.first as f64 && (r.last + 1) as f64 <= 1.5);
        assert_eq!(index_set(10, 0.3, 0.7).unwrap(), IndexRange { first: 3, last: 6 });
        assert!(matches!(index_set(1, 0.2, 0.9), Err(Error::EmptyIndexSet { .. })));
        assert!(index_set(0, 0.0, 1.0).is_err());
    }

    #[test]
    fn cells_stay_inside_domain() {
        for n in 1..60u32 {
            for (a, b) in [(0.0, 1.0), (-0.37, 0.81), (0.15, 0.95), (2.0, 5.5)] {
                if let Ok(r) = index_set(n, a, b) {
                    let nf = f64::from(n);
                    assert!(a <= r.first as f64 / nf + 1e-12);
                    assert!((r.last + 1) as f64 / nf <= b + 1e-12);
                }
            }
        }
    }

    #[test]
    fn means_examples() {
        let m = kantorovich_means(&corpus::identity(), 2).unwrap();
        assert_eq!(m.values, vec![0.25, 0.75]);
        let one = TestFunction::constant(1.0, 0.0, 1.0).unwrap();
        let m = kantorovich_means(&one, 7).unwrap();
        assert!(m.values.iter().all(|&v| (v - 1.0).abs() < 1e-14));
        let m = kantorovich_means(&corpus::jump(), 2).unwrap();
        assert_eq!(m.values, vec![0.0, 1.0]);
    }

    #[test]
    fn means_by_quadrature_match_antiderivative() {
        let raw = TestFunction::new("u2", 0.0, 1.0, Arc::new(|u| u * u)).unwrap();
        let exact = raw.clone().with_antiderivative(Arc::new(|u| u * u * u / 3.0));
        let q = kantorovich_means(&raw, 16).unwrap();
        let e = kantorovich_means(&exact, 16).unwrap();
        for (a, b) in q.values.iter().zip(&e.values) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-10);
        }
        for (k, v) in q.k_range.iter().zip(&q.values) {
            let (lo, hi) = (k as f64 / 16.0, (k + 1) as f64 / 16.0);
            assert!(*v >= lo * lo - 1e-12 && *v <= hi * hi + 1e-12);
        }
    }

    #[test]
    fn hand_value_ramp_identity() {
        let op = OperatorInstance::new(&ramp(), &corpus::identity(), 2, Admission::Strict).unwrap();
        assert_abs_diff_eq!(op.evaluate(0.5).unwrap(), 0.75, epsilon = 1e-12);
        let d = op.evaluate_detailed(0.5).unwrap();
        assert_eq!(d.argmax, 1);
        assert_abs_diff_eq!(d.denominator, 1.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn constants_are_reproduced() {
        let one = TestFunction::constant(1.0, 0.0, 1.0).unwrap();
        for kernel in [ramp(), make_density_kernel(make_logistic()).unwrap()] {
            let op = OperatorInstance::new(&kernel, &one, 13, Admission::Strict).unwrap();
            for i in 0..=50 {
                assert_abs_diff_eq!(op.evaluate(i as f64 / 50.0).unwrap(), 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn scaling_is_homogeneous() {
        let k = make_density_kernel(make_tanh()).unwrap();
        let f = corpus::parabola();
        let op = OperatorInstance::new(&k, &f, 9, Admission::Strict).unwrap();
        let op3 = OperatorInstance::new(&k, &f.scaled(3.0), 9, Admission::Strict).unwrap();
        for i in 0..=40 {
            let x = i as f64 / 40.0;
            let (v, v3) = (op.evaluate(x).unwrap(), op3.evaluate(x).unwrap());
            assert!((v3 - 3.0 * v).abs() <= 1e-12 * v3.abs());
        }
    }

    #[test]
    fn shifted_examples() {
        let k = ramp();
        let minus_one = TestFunction::constant(-1.0, 0.0, 1.0).unwrap();
        for x in [0.0, 0.3, 1.0] {
            assert_abs_diff_eq!(evaluate_shifted(&k, &minus_one, 4, x).unwrap(), -1.0, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(evaluate_shifted(&k, &corpus::signed(), 2, 0.5).unwrap(), 0.25, epsilon = 1e-12);
        let f = corpus::parabola();
        let op = OperatorInstance::new(&k, &f, 8, Admission::Strict).unwrap();
        for i in 0..=20 {
            let x = i as f64 / 20.0;
            assert_eq!(evaluate_shifted(&k, &f, 8, x).unwrap(), op.evaluate(x).unwrap());
        }
    }

    #[test]
    fn out_of_domain_and_admission() {
        let k = ramp();
        let op = OperatorInstance::new(&k, &corpus::identity(), 4, Admission::Strict).unwrap();
        assert!(matches!(op.evaluate(1.2), Err(Error::OutOfDomain { .. })));
        assert!(op.evaluate(1.0).is_ok());
        let step = make_density_kernel(make_step()).unwrap();
        assert!(matches!(
            OperatorInstance::new(&step, &corpus::identity(), 4, Admission::Strict),
            Err(Error::AssumptionsViolated(_))
        ));
        assert!(OperatorInstance::new(&step, &corpus::identity(), 4, Admission::AllowAssumptionViolations).is_ok());
    }

    #[test]
    fn degenerate_denominator_is_reported() {
        // Flat on [-2.5, 2.5]: φ(2) > 0 but φ vanishes on |t| ≤ 3/2, so with a
        // single cell the denominator is zero at x = 1/2.
        let flat = crate::sigmoid::SigmoidalFunction::from_table(
            "flat",
            vec![-4.5, -2.5, 2.5, 4.5],
            vec![0.0, 0.5, 0.5, 1.0],
            2.0,
        )
        .unwrap();
        let k = make_density_kernel(flat).unwrap();
        let f = TestFunction::constant(1.0, 0.0, 1.0).unwrap();
        let op = OperatorInstance::new(&k, &f, 1, Admission::AllowAssumptionViolations).unwrap();
        assert!(matches!(op.evaluate(0.5), Err(Error::DegenerateDenominator { .. })));
    }

    #[test]
    fn fast_path_matches_reference() {
        for name in ["logistic", "tanh", "ramp"] {
            let k = DensityKernel::by_name(name).unwrap();
            for f in corpus::nonneg() {
                for n in [3u32, 8, 33, 100] {
                    let op = OperatorInstance::new(&k, &f, n, Admission::Strict).unwrap();
                    for i in 0..=257 {
                        let x = i as f64 / 257.0;
                        let (r, q) = (op.evaluate(x).unwrap(), op.evaluate_fast(x).unwrap());
                        assert!((r - q).abs() <= 1e-14 * r.abs().max(1.0), "{name} {} n={n} x={x}: {r} vs {q}", f.name());
                    }
                }
            }
        }
    }

    #[test]
    fn denominator_examples() {
        let p = denominator_profile(&ramp(), 16, 0.0, 1.0, 10_000).unwrap();
        assert!(p.minimum >= 1.0 / 12.0);
        let logistic = make_density_kernel(make_logistic()).unwrap();
        let p = denominator_profile(&logistic, 16, 0.0, 1.0, 10_000).unwrap();
        assert!(p.minimum >= logistic.value_at_two);
        let step = make_density_kernel(make_step()).unwrap();
        let p = denominator_profile(&step, 16, 0.0, 1.0, 10_000).unwrap();
        assert!(p.minimum >= 0.25 - 1e-12);
    }

    #[test]
    fn grid_rows() {
        let op = ShiftedOperator::new(&ramp(), &corpus::identity(), 2, Admission::Strict).unwrap();
        let rows = grid_evaluation(&op, 3).unwrap();
        assert_eq!(rows.len(), 3);
        assert_abs_diff_eq!(rows[1].k_n_f_x, 0.75, epsilon = 1e-12);
        assert_abs_diff_eq!(rows[1].abs_error, 0.25, epsilon = 1e-12);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(32))]

            #[test]
            fn output_lies_between_extreme_means(n in 2u32..40, x in 0.0f64..=1.0, which in 0usize..4) {
                let f = corpus::nonneg()[which].clone();
                let op = OperatorInstance::new(&ramp(), &f, n, Admission::Strict).unwrap();
                let lo = op.means().values.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = op.means().values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let v = op.evaluate(x).unwrap();
                prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
            }
        }
    }
}
