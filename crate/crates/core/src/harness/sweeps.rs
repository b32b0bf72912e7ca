use std::sync::Arc;

use log::info;
use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::{Check, ReportKind, SweepRecord, SweepReport};
use crate::error::Result;
use crate::function::TestFunction;
use crate::kfunctional::{
    build_smoother_family, default_h_grid, lambda1_rule, rate_bound_report, KFunctionalTable, DEFAULT_FAMILY_SIZE,
    ERROR_GRID_ORDER,
};
use crate::operator::{denominator_profile, Admission, DenominatorProfile, ShiftedOperator};
use crate::orlicz::{check_phi_axioms, modular_integral, modular_sampled, PhiFunction};
use crate::quadrature::{CompositeGrid, SampledFunction};
use crate::sigmoid::DensityKernel;

struct Prepared {
    kernels: Vec<DensityKernel>,
    admissions: Vec<Admission>,
    functions: Vec<TestFunction>,
    phis: Vec<PhiFunction>,
    lambdas: Vec<f64>,
    grid: Arc<CompositeGrid>,
    uniform_points: Vec<f64>,
    /// `[kernel][n]`
    denominators: Vec<Vec<DenominatorProfile>>,
    warnings: Vec<String>,
}

impl Prepared {
    fn new(cfg: &ExperimentConfig, extra: &[TestFunction]) -> Result<Self> {
        cfg.validate()?;
        let [a, b] = cfg.interval;
        let kernels = cfg.kernels()?;
        let mut warnings = Vec::new();
        let admissions = kernels
            .iter()
            .map(|k| {
                if k.satisfies_assumptions() {
                    Admission::Strict
                } else {
                    let r = k.assumptions();
                    let mut failing = Vec::new();
                    if !r.symmetry.holds {
                        failing.push("symmetry");
                    }
                    if !r.unimodal_kernel.holds {
                        failing.push("unimodality");
                    }
                    if !r.polynomial_decay.holds {
                        failing.push("polynomial decay");
                    }
                    warnings.push(format!(
                        "kernel {} fails {}; its results are empirical only",
                        k.name(),
                        failing.join(", ")
                    ));
                    Admission::AllowAssumptionViolations
                }
            })
            .collect();
        let phis = cfg.phis()?;
        for phi in &phis {
            let ax = check_phi_axioms(phi, cfg.seed);
            if !ax.all_hold() {
                warnings.push(format!("phi {} fails the axiom spot checks: {ax:?}", phi.name()));
            }
        }
        let functions = cfg.functions()?;
        let mut bps: Vec<f64> = functions
            .iter()
            .chain(extra)
            .flat_map(|f| f.breakpoints().iter().copied())
            .collect();
        bps.sort_by(f64::total_cmp);
        bps.dedup();
        let grid = Arc::new(CompositeGrid::new(a, b, cfg.grid, &bps, ERROR_GRID_ORDER)?);
        let uniform_points = (0..=cfg.grid)
            .map(|i| if i == cfg.grid { b } else { a + (b - a) * i as f64 / cfg.grid as f64 })
            .collect();
        let denominators = kernels
            .par_iter()
            .map(|k| {
                cfg.n_list
                    .iter()
                    .map(|&n| denominator_profile(k, n, a, b, cfg.grid + 1))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            kernels,
            admissions,
            functions,
            phis,
            lambdas: cfg.lambda.values(),
            grid,
            uniform_points,
            denominators,
            warnings,
        })
    }

    /// Whether the denominator lower bound `≥ φ_σ(2)` holds at this `n`.
    fn certified(&self, cfg: &ExperimentConfig, ki: usize, ni: usize) -> bool {
        self.denominators[ki][ni].minimum >= self.kernels[ki].value_at_two - cfg.tolerances.denominator
    }
}

#[derive(Clone, Copy)]
enum Sampling {
    Uniform,
    Composite,
}

/// `K_n f` samples indexed `[kernel][function][n]`.
fn sample_operators(
    prep: &Prepared,
    cfg: &ExperimentConfig,
    functions: &[TestFunction],
    mode: Sampling,
) -> Result<Vec<Vec<Vec<Vec<f64>>>>> {
    let nk = prep.kernels.len();
    let nf = functions.len();
    let nn = cfg.n_list.len();
    let cells: Vec<(usize, usize, usize)> = (0..nk)
        .flat_map(|k| (0..nf).flat_map(move |f| (0..nn).map(move |n| (k, f, n))))
        .collect();
    let points: &[f64] = match mode {
        Sampling::Uniform => &prep.uniform_points,
        Sampling::Composite => &prep.grid.nodes,
    };
    let flat = cells
        .par_iter()
        .map(|&(k, f, n)| {
            let op = ShiftedOperator::new(&prep.kernels[k], &functions[f], cfg.n_list[n], prep.admissions[k])?;
            points.iter().map(|&x| op.evaluate_fast(x)).collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut it = flat.into_iter();
    Ok((0..nk)
        .map(|_| (0..nf).map(|_| (0..nn).map(|_| it.next().expect("cell")).collect()).collect())
        .collect())
}

fn diff_samples(grid: &Arc<CompositeGrid>, values: &[f64], f: &TestFunction) -> SampledFunction {
    SampledFunction {
        grid: Arc::clone(grid),
        values: grid.nodes.iter().zip(values).map(|(&x, &v)| v - f.eval(x)).collect(),
    }
}

/// Sup-norm error of `K_n f` per `n`, with the smooth-function bound
/// `3‖f′‖∞ / (4 φ_σ(2) n)` where `f′` is known. Discontinuous functions are
/// skipped with a warning.
pub fn run_uniform_convergence(cfg: &ExperimentConfig) -> Result<SweepReport> {
    let mut prep = Prepared::new(cfg, &[])?;
    let mut report = SweepReport::new(ReportKind::Uniform, cfg);
    let (kept, skipped): (Vec<TestFunction>, Vec<TestFunction>) =
        prep.functions.iter().cloned().partition(|f| f.is_continuous());
    for f in &skipped {
        prep.warnings.push(format!(
            "{} skipped in the uniform sweep: it is not continuous",
            f.name()
        ));
    }
    info!("uniform sweep: {} kernels x {} functions x {} n", prep.kernels.len(), kept.len(), cfg.n_list.len());
    let samples = sample_operators(&prep, cfg, &kept, Sampling::Uniform)?;
    for (ki, kernel) in prep.kernels.iter().enumerate() {
        for (fi, f) in kept.iter().enumerate() {
            let mut errors = Vec::new();
            let mut bound_ok = true;
            for (ni, &n) in cfg.n_list.iter().enumerate() {
                let sup = prep
                    .uniform_points
                    .iter()
                    .zip(&samples[ki][fi][ni])
                    .map(|(&x, &v)| (v - f.eval(x)).abs())
                    .fold(0.0, f64::max);
                errors.push(sup);
                let certified = prep.certified(cfg, ki, ni);
                let bound = f
                    .derivative_sup()
                    .map(|d| 3.0 * d / (4.0 * kernel.value_at_two * f64::from(n)));
                let pass = bound.map(|rhs| sup <= rhs + cfg.tolerances.inequality_abs);
                if let Some(p) = pass {
                    bound_ok &= p && certified;
                }
                report.records.push(SweepRecord {
                    kernel: kernel.name().to_string(),
                    phi: None,
                    function: f.name().to_string(),
                    n,
                    lambda: None,
                    sup_error: Some(sup),
                    modular_error: None,
                    denom_min: prep.denominators[ki][ni].minimum,
                    bound_lhs: bound.map(|_| sup),
                    bound_rhs: bound,
                    pass: if certified { pass } else { None },
                });
            }
            let first = errors[0];
            let last = *errors.last().expect("n_list nonempty");
            let check = |name: &str, pass: bool, detail: String| Check {
                name: name.to_string(),
                kernel: kernel.name().to_string(),
                phi: None,
                function: f.name().to_string(),
                lambda: None,
                pass,
                detail,
            };
            let exact = errors.iter().all(|&e| e <= 1e-12);
            report.checks.push(check(
                "uniform_trend",
                exact || (last < first && last <= cfg.tolerances.uniform_final),
                format!("first {first:.6e}, last {last:.6e}, threshold {:.3e}", cfg.tolerances.uniform_final),
            ));
            let monotone = exact || errors.windows(2).all(|w| w[1] < w[0]);
            report.checks.push(check(
                "uniform_monotone",
                monotone,
                format!("errors {}", join(&errors)),
            ));
            if f.derivative_sup().is_some() {
                report.checks.push(check(
                    "smooth_rate_bound",
                    bound_ok,
                    "sup error within 3|f'|/(4 phi(2) n) at every n".to_string(),
                ));
            }
        }
    }
    report.warnings = prep.warnings;
    Ok(report.finish())
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v:.6e}")).collect::<Vec<_>>().join(" ")
}

/// Modular error `I^φ[λ(K_n f − f)]` per `(φ, λ, n)`. Continuous functions
/// must converge under every λ; for discontinuous ones it is enough that
/// some λ reaches the target at the last `n`, and the largest such λ is
/// recorded.
pub fn run_modular_convergence(cfg: &ExperimentConfig) -> Result<SweepReport> {
    let prep = Prepared::new(cfg, &[])?;
    let mut report = SweepReport::new(ReportKind::Modular, cfg);
    info!(
        "modular sweep: {} kernels x {} functions x {} phis x {} lambdas x {} n",
        prep.kernels.len(),
        prep.functions.len(),
        prep.phis.len(),
        prep.lambdas.len(),
        cfg.n_list.len()
    );
    let samples = sample_operators(&prep, cfg, &prep.functions, Sampling::Composite)?;
    let target = cfg.tolerances.modular_target;
    let last_n = cfg.n_list.len() - 1;
    for (ki, kernel) in prep.kernels.iter().enumerate() {
        for (fi, f) in prep.functions.iter().enumerate() {
            let diffs: Vec<SampledFunction> = (0..cfg.n_list.len())
                .map(|ni| diff_samples(&prep.grid, &samples[ki][fi][ni], f))
                .collect();
            let sups: Vec<f64> = diffs
                .iter()
                .map(|d| d.values.iter().fold(0.0, |m: f64, v| m.max(v.abs())))
                .collect();
            for phi in &prep.phis {
                let mut found: Option<f64> = None;
                for &lambda in &prep.lambdas {
                    let errors = diffs
                        .par_iter()
                        .map(|d| Ok(modular_sampled(phi, d, lambda)?.value))
                        .collect::<Result<Vec<f64>>>()?;
                    for (ni, &n) in cfg.n_list.iter().enumerate() {
                        report.records.push(SweepRecord {
                            kernel: kernel.name().to_string(),
                            phi: Some(phi.name().to_string()),
                            function: f.name().to_string(),
                            n,
                            lambda: Some(lambda),
                            sup_error: Some(sups[ni]),
                            modular_error: Some(errors[ni]),
                            denom_min: prep.denominators[ki][ni].minimum,
                            bound_lhs: None,
                            bound_rhs: None,
                            pass: None,
                        });
                    }
                    let last = errors[last_n];
                    if last < target {
                        found = Some(found.map_or(lambda, |l: f64| l.max(lambda)));
                    }
                    if f.is_continuous() {
                        report.checks.push(Check {
                            name: "modular_convergence".into(),
                            kernel: kernel.name().to_string(),
                            phi: Some(phi.name().to_string()),
                            function: f.name().to_string(),
                            lambda: Some(lambda),
                            pass: last < target,
                            detail: format!("error at n = {}: {last:.6e}, target {target:.1e}", cfg.n_list[last_n]),
                        });
                    }
                }
                if !f.is_continuous() {
                    report.checks.push(Check {
                        name: "modular_existential".into(),
                        kernel: kernel.name().to_string(),
                        phi: Some(phi.name().to_string()),
                        function: f.name().to_string(),
                        lambda: found,
                        pass: found.is_some(),
                        detail: match found {
                            Some(l) => format!("largest lambda reaching {target:.1e} at n = {}: {l}", cfg.n_list[last_n]),
                            None => format!("no scanned lambda reaches {target:.1e}"),
                        },
                    });
                }
            }
        }
    }
    report.warnings = prep.warnings;
    Ok(report.finish())
}

/// `I^φ[λ(K_n f − K_n g)] ≤ ‖φ_σ‖₁ I^φ[λ (f − g)/φ_σ(2)]` for each pair.
/// A verdict is only recorded at `n` where the denominator bound holds.
pub fn run_modular_inequality(cfg: &ExperimentConfig, pairs: &[(TestFunction, TestFunction)]) -> Result<SweepReport> {
    let mut uniq: Vec<TestFunction> = Vec::new();
    let index = |f: &TestFunction, uniq: &mut Vec<TestFunction>| match uniq.iter().position(|u| u.name() == f.name()) {
        Some(i) => i,
        None => {
            uniq.push(f.clone());
            uniq.len() - 1
        }
    };
    let idx: Vec<(usize, usize)> = pairs
        .iter()
        .map(|(f, g)| {
            let i = index(f, &mut uniq);
            (i, index(g, &mut uniq))
        })
        .collect();
    let prep = Prepared::new(cfg, &uniq)?;
    let mut report = SweepReport::new(ReportKind::Inequality, cfg);
    info!("inequality sweep: {} pairs", pairs.len());
    let samples = sample_operators(&prep, cfg, &uniq, Sampling::Composite)?;
    let [a, b] = cfg.interval;
    for (ki, kernel) in prep.kernels.iter().enumerate() {
        for phi in &prep.phis {
            for &lambda in &prep.lambdas {
                let rows = pairs
                    .par_iter()
                    .zip(&idx)
                    .map(|((f, g), &(fi, gi))| {
                        let mut bps: Vec<f64> = f.breakpoints().to_vec();
                        bps.extend_from_slice(g.breakpoints());
                        bps.sort_by(f64::total_cmp);
                        let diff = |x: f64| f.eval(x) - g.eval(x);
                        let inner = modular_integral(phi, &diff, a, b, &bps, lambda / kernel.value_at_two)?;
                        let rhs = kernel.l1_norm * inner.value;
                        let lhs = (0..cfg.n_list.len())
                            .map(|ni| {
                                let d = SampledFunction {
                                    grid: Arc::clone(&prep.grid),
                                    values: samples[ki][fi][ni]
                                        .iter()
                                        .zip(&samples[ki][gi][ni])
                                        .map(|(p, q)| p - q)
                                        .collect(),
                                };
                                Ok(modular_sampled(phi, &d, lambda)?.value)
                            })
                            .collect::<Result<Vec<f64>>>()?;
                        Ok((rhs, lhs))
                    })
                    .collect::<Result<Vec<_>>>()?;
                for ((f, g), (rhs, lhs)) in pairs.iter().zip(rows) {
                    let label = format!("{}|{}", f.name(), g.name());
                    let mut all = true;
                    let mut uncertified = 0;
                    for (ni, &n) in cfg.n_list.iter().enumerate() {
                        let certified = prep.certified(cfg, ki, ni);
                        let pass = cfg.tolerances.within(lhs[ni], rhs);
                        if certified {
                            all &= pass;
                        } else {
                            uncertified += 1;
                        }
                        report.records.push(SweepRecord {
                            kernel: kernel.name().to_string(),
                            phi: Some(phi.name().to_string()),
                            function: label.clone(),
                            n,
                            lambda: Some(lambda),
                            sup_error: None,
                            modular_error: Some(lhs[ni]),
                            denom_min: prep.denominators[ki][ni].minimum,
                            bound_lhs: Some(lhs[ni]),
                            bound_rhs: Some(rhs),
                            pass: certified.then_some(pass),
                        });
                    }
                    report.checks.push(Check {
                        name: "modular_inequality".into(),
                        kernel: kernel.name().to_string(),
                        phi: Some(phi.name().to_string()),
                        function: label,
                        lambda: Some(lambda),
                        pass: all && uncertified < cfg.n_list.len(),
                        detail: format!(
                            "max lhs {:.6e}, rhs {rhs:.6e}, uncertified n: {uncertified}",
                            lhs.iter().fold(0.0, |m: f64, &v| m.max(v))
                        ),
                    });
                }
            }
        }
    }
    report.warnings = prep.warnings;
    Ok(report.finish())
}

/// `I^φ[λ₁(K_n f − f)] ≤ A1 · K(f, λ₀, A2/n)` over kernels × φ × functions
/// × n, with the K-functional replaced by its smoother-family upper
/// estimate. Sign-changing functions are checked after shifting them to be
/// nonnegative, which is how the shifted operator treats them.
pub fn run_rate_suite(cfg: &ExperimentConfig) -> Result<SweepReport> {
    let mut prep = Prepared::new(cfg, &[])?;
    let mut report = SweepReport::new(ReportKind::Rate, cfg);
    let functions: Vec<TestFunction> = prep
        .functions
        .iter()
        .map(|f| {
            if f.is_nonneg() {
                f.clone()
            } else {
                prep.warnings.push(format!(
                    "{} takes negative values; the rate bound is checked for {} - ({})",
                    f.name(),
                    f.name(),
                    f.lower_bound()
                ));
                f.shifted(f.lower_bound())
            }
        })
        .collect();
    let [a, b] = cfg.interval;
    let lambda0 = cfg.lambda0;
    info!("rate suite: building smoother families");
    let hs = default_h_grid(a, b, DEFAULT_FAMILY_SIZE);
    let families = functions
        .par_iter()
        .map(|f| build_smoother_family(f, &hs))
        .collect::<Result<Vec<_>>>()?;
    let table_cells: Vec<(usize, usize)> = (0..functions.len())
        .flat_map(|f| (0..prep.phis.len()).map(move |p| (f, p)))
        .collect();
    info!("rate suite: {} K-functional tables", table_cells.len());
    let tables = table_cells
        .par_iter()
        .map(|&(fi, pi)| KFunctionalTable::new(&functions[fi], &prep.phis[pi], lambda0, &families[fi]))
        .collect::<Result<Vec<_>>>()?;
    let samples = sample_operators(&prep, cfg, &functions, Sampling::Composite)?;
    for (ki, kernel) in prep.kernels.iter().enumerate() {
        let lambda1 = lambda1_rule(kernel, lambda0);
        for (pi, phi) in prep.phis.iter().enumerate() {
            for (fi, f) in functions.iter().enumerate() {
                let table = &tables[fi * prep.phis.len() + pi];
                let mut all = true;
                for (ni, &n) in cfg.n_list.iter().enumerate() {
                    let error = diff_samples(&prep.grid, &samples[ki][fi][ni], f);
                    let mut row = rate_bound_report(kernel, f, phi, n, lambda0, lambda1, &error, table)?;
                    row.pass = cfg.tolerances.within(row.lhs, row.rhs) && prep.certified(cfg, ki, ni);
                    all &= row.pass;
                    report.rate_records.push(row);
                }
                report.checks.push(Check {
                    name: "rate_bound".into(),
                    kernel: kernel.name().to_string(),
                    phi: Some(phi.name().to_string()),
                    function: f.name().to_string(),
                    lambda: Some(lambda1),
                    pass: all,
                    detail: format!("lambda0 = {lambda0}, lambda1 = {lambda1:.6e}"),
                });
            }
        }
    }
    report.warnings = prep.warnings;
    Ok(report.finish())
}

/// Uniform, modular, inequality and rate reports for one configuration.
pub fn run_full_suite(cfg: &ExperimentConfig) -> Result<Vec<SweepReport>> {
    let pairs = cfg.pair_functions()?;
    Ok(vec![
        run_uniform_convergence(cfg)?,
        run_modular_convergence(cfg)?,
        run_modular_inequality(cfg, &pairs)?,
        run_rate_suite(cfg)?,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function::corpus;
    use crate::harness::LambdaPolicy;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            kernels: vec!["ramp".into()],
            phis: vec!["power(p=1)".into()],
            functions: vec!["parabola".into()],
            n_list: vec![8, 16, 32],
            lambda: LambdaPolicy::Fixed(vec![1.0]),
            grid: 256,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn uniform_records_and_checks() {
        let mut cfg = small();
        cfg.tolerances.uniform_final = 0.05;
        let r = run_uniform_convergence(&cfg).unwrap();
        assert_eq!(r.records.len(), 3);
        assert!(r.all_passed(), "{:?}", r.checks);
        let mut cfg = small();
        cfg.functions = vec!["one".into(), "jump".into()];
        let r = run_uniform_convergence(&cfg).unwrap();
        assert_eq!(r.records.len(), 3);
        assert!(r.records.iter().all(|rec| rec.sup_error.unwrap() < 1e-14));
        assert_eq!(r.warnings.len(), 1);
    }

    #[test]
    fn hand_value_at_n_two() {
        // K_2(u, 1/2) = 3/4 with the ramp kernel.
        let cfg = ExperimentConfig {
            functions: vec!["identity".into()],
            n_list: vec![2],
            grid: 64,
            ..small()
        };
        let prep = Prepared::new(&cfg, &[]).unwrap();
        let s = sample_operators(&prep, &cfg, &prep.functions, Sampling::Uniform).unwrap();
        let mid = prep.uniform_points.iter().position(|&x| x == 0.5).unwrap();
        assert!((s[0][0][0][mid] - 0.5 - 0.25).abs() < 1e-12);
    }

    #[test]
    fn modular_zero_function() {
        let mut cfg = small();
        cfg.functions = vec!["zero".into()];
        cfg.lambda = LambdaPolicy::scan();
        let r = run_modular_convergence(&cfg).unwrap();
        assert_eq!(r.records.len(), 13 * 3);
        assert!(r.records.iter().all(|rec| rec.modular_error == Some(0.0)));
    }

    #[test]
    fn inequality_diagonal_is_zero() {
        let cfg = small();
        let f = corpus::parabola();
        let r = run_modular_inequality(&cfg, &[(f.clone(), f)]).unwrap();
        assert!(r.records.iter().all(|rec| rec.bound_lhs == Some(0.0) && rec.bound_rhs == Some(0.0)));
        assert!(r.all_passed());
    }

    #[test]
    fn rate_suite_small() {
        let r = run_rate_suite(&small()).unwrap();
        assert_eq!(r.rate_records.len(), 3);
        assert!(r.all_passed(), "{:?}", r.rate_records);
        let mut cfg = small();
        cfg.n_list.clear();
        assert!(run_rate_suite(&cfg).is_err());
    }
}
