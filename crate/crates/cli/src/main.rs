use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::{info, warn};

use maxprod_core::harness::{
    emit_report, format_float, parse_list, run_full_suite, run_modular_convergence, run_modular_inequality,
    run_rate_suite, run_uniform_convergence, ExperimentConfig, Format, LambdaPolicy, SweepReport,
};
use maxprod_core::operator::{denominator_profile, grid_evaluation, Admission, ShiftedOperator};
use maxprod_core::sigmoid::moment;
use maxprod_core::DensityKernel;

#[derive(Parser, Debug)]
#[command(name = "maxprod", version, about = "Max-product Kantorovich operators and Orlicz-space error checks")]
struct Cli {
    #[command(flatten)]
    opts: Overrides,

    /// -v info, -vv debug
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

/// Flags override the JSON config field by field.
#[derive(Args, Debug, Default)]
struct Overrides {
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Catalog name or `csv:PATH`; repeatable.
    #[arg(long = "kernel", global = true, value_name = "NAME")]
    kernels: Vec<String>,
    /// e.g. `power:p=2`, `zygmund:alpha=1,beta=1`, `exponential`; repeatable.
    #[arg(long = "phi", global = true, value_name = "NAME[:params]")]
    phis: Vec<String>,
    #[arg(long = "function", global = true, value_name = "NAME")]
    functions: Vec<String>,
    /// Comma-separated, strictly ascending.
    #[arg(long, global = true, value_name = "LIST")]
    n: Option<String>,
    /// Comma-separated list or `scan`.
    #[arg(long, global = true, value_name = "LIST|scan")]
    lambda: Option<String>,
    #[arg(long, global = true, value_name = "N")]
    grid: Option<usize>,
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_name = "csv|json|svg")]
    format: Option<Format>,
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print φ(0), φ(2), ‖φ‖₁, assumption checks and moments per kernel.
    ValidateKernel,
    /// Evaluate K_n f on a grid (or at --x points) as CSV.
    Eval {
        /// Comma-separated evaluation points; defaults to `--grid` + 1 equally spaced points.
        #[arg(long, value_name = "LIST")]
        x: Option<String>,
    },
    /// Sup-norm error against n.
    SweepUniform,
    /// Modular error against n for every φ and λ.
    SweepModular,
    /// I^φ[λ(K_n f − K_n g)] ≤ ‖φ‖₁ I^φ[λ/φ(2) (f − g)] over function pairs.
    CheckInequality {
        /// `F,G`; repeatable. Defaults to all pairs of nonnegative functions.
        #[arg(long = "pair", value_name = "F,G")]
        pairs: Vec<String>,
    },
    /// Modular error against the K-functional bound.
    CheckRate,
    /// All four suites in every format.
    Report,
}

fn build_config(o: &Overrides) -> Result<ExperimentConfig> {
    let mut cfg = match &o.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if !o.kernels.is_empty() {
        cfg.kernels = o.kernels.clone();
    }
    if !o.phis.is_empty() {
        cfg.phis = o.phis.clone();
    }
    if !o.functions.is_empty() {
        cfg.functions = o.functions.clone();
    }
    if let Some(n) = &o.n {
        cfg.n_list = parse_list(n, "n")?;
    }
    if let Some(l) = &o.lambda {
        cfg.lambda = LambdaPolicy::parse(l)?;
    }
    if let Some(g) = o.grid {
        cfg.grid = g;
    }
    if let Some(out) = &o.out {
        cfg.out = Some(out.clone());
    }
    if let Some(f) = o.format {
        cfg.format = f;
    }
    if let Some(s) = o.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_dir(cfg: &ExperimentConfig) -> PathBuf {
    cfg.out.clone().unwrap_or_else(|| PathBuf::from("reports"))
}

fn finish(report: &SweepReport, formats: &[Format], dir: &Path) -> Result<bool> {
    for w in &report.warnings {
        warn!("{w}");
    }
    for f in formats {
        let path = emit_report(report, *f, dir)?;
        println!("wrote {}", path.display());
    }
    for c in report.checks.iter().filter(|c| !c.pass) {
        println!(
            "FAIL {} kernel={} phi={} f={} lambda={}: {}",
            c.name,
            c.kernel,
            c.phi.as_deref().unwrap_or("-"),
            c.function,
            c.lambda.map_or("-".to_string(), |l| l.to_string()),
            c.detail
        );
    }
    let s = report.summary;
    println!(
        "{} [{}]: {} checks, {} passed, {} failed",
        report.kind.stem(),
        report.config_hash,
        s.checks,
        s.passed,
        s.failed
    );
    Ok(report.all_passed())
}

fn validate_kernels(cfg: &ExperimentConfig) -> Result<bool> {
    let mut ok = true;
    for name in &cfg.kernels {
        let k = DensityKernel::by_name(name)?;
        let r = k.assumptions();
        println!("kernel {}", k.name());
        println!("  phi(0)      {}", format_float(k.value_at_zero));
        println!("  phi(2)      {}", format_float(k.value_at_two));
        println!("  l1_norm     {} (+/- {:.1e})", format_float(k.l1_norm), k.l1_error);
        println!("  alpha       {}", k.alpha());
        for (label, c) in [
            ("symmetry", r.symmetry),
            ("unimodality", r.unimodal_kernel),
            ("decay", r.polynomial_decay),
        ] {
            match c.witness {
                Some([u, v]) if !c.holds => println!("  {label:<11} FAIL witness ({u}, {v})"),
                _ => println!("  {label:<11} ok"),
            }
        }
        for beta in [0.0, 1.0] {
            if beta > k.alpha() {
                continue;
            }
            let m = moment(&k, beta, 1e-3)?;
            println!("  m_{beta}         {} at x={:.6}", format_float(m.value), m.argmax);
        }
        let [a, b] = cfg.interval;
        for &n in &cfg.n_list {
            let d = denominator_profile(&k, n, a, b, cfg.grid + 1)?;
            let certified = d.minimum >= k.value_at_two - cfg.tolerances.denominator;
            println!(
                "  n={n:<5} min denominator {} at x={:.6}{}",
                format_float(d.minimum),
                d.argmin,
                if certified { "" } else { "  (below phi(2))" }
            );
        }
        ok &= r.all_hold();
    }
    Ok(ok)
}

fn eval(cfg: &ExperimentConfig, xs: Option<&str>) -> Result<()> {
    let kernel = DensityKernel::by_name(&cfg.kernels[0])?;
    let f = cfg.functions()?.remove(0);
    let xs: Option<Vec<f64>> = xs.map(|s| parse_list(s, "x")).transpose()?;
    let admission = if kernel.satisfies_assumptions() {
        Admission::Strict
    } else {
        warn!("kernel {} fails the structural assumptions", kernel.name());
        Admission::AllowAssumptionViolations
    };
    println!("kernel,function,n,x,k_n_f,f,abs_error");
    for &n in &cfg.n_list {
        let op = ShiftedOperator::new(&kernel, &f, n, admission)?;
        let rows = match &xs {
            None => grid_evaluation(&op, cfg.grid + 1)?,
            Some(points) => {
                let (a, b) = f.domain();
                let mut rows = Vec::with_capacity(points.len());
                for &x in points {
                    if !(a..=b).contains(&x) {
                        bail!("x = {x} lies outside [{a}, {b}]");
                    }
                    let k = op.evaluate(x)?;
                    let fx = f.eval(x) + op.shift();
                    rows.push(maxprod_core::operator::GridRow {
                        x,
                        k_n_f_x: k,
                        f_x: fx,
                        abs_error: (k - fx).abs(),
                    });
                }
                rows
            }
        };
        for r in rows {
            println!(
                "{},{},{n},{},{},{},{}",
                kernel.name(),
                f.name(),
                format_float(r.x),
                format_float(r.k_n_f_x),
                format_float(r.f_x),
                format_float(r.abs_error)
            );
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    let mut cfg = build_config(&cli.opts)?;
    info!("config hash {}", cfg.hash());
    let dir = out_dir(&cfg);
    let fmt = [cfg.format];
    match cli.command {
        Command::ValidateKernel => validate_kernels(&cfg),
        Command::Eval { x } => eval(&cfg, x.as_deref()).map(|()| true),
        Command::SweepUniform => finish(&run_uniform_convergence(&cfg)?, &fmt, &dir),
        Command::SweepModular => finish(&run_modular_convergence(&cfg)?, &fmt, &dir),
        Command::CheckInequality { pairs } => {
            if !pairs.is_empty() {
                let parsed = pairs
                    .iter()
                    .map(|p| match p.split_once(',') {
                        Some((f, g)) => Ok((f.trim().to_string(), g.trim().to_string())),
                        None => bail!("--pair expects F,G, got `{p}`"),
                    })
                    .collect::<Result<Vec<_>>>()?;
                cfg.pairs = Some(parsed);
            }
            let pairs = cfg.pair_functions()?;
            finish(&run_modular_inequality(&cfg, &pairs)?, &fmt, &dir)
        }
        Command::CheckRate => finish(&run_rate_suite(&cfg)?, &fmt, &dir),
        Command::Report => {
            let mut ok = true;
            for r in run_full_suite(&cfg)? {
                ok &= finish(&r, &[Format::Csv, Format::Json, Format::Svg], &dir)?;
            }
            Ok(ok)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli).context("maxprod") {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
