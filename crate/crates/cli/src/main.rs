//! Command-line front end: kernel evaluation, Hankel transforms, operator
//! application, the estimate-verification suite and report summaries.
//!
//! Exit codes: 0 success, 2 usage error, 3 numerical non-convergence,
//! 4 verification failure.

mod config;

use anyhow::{bail, Context, Result};
use bessel_kernels::geometry::{HalfSpacePoint, TypeIndex};
use bessel_kernels::hankel::{hankel_transform, RadialGrid, RadialGridFunction};
use bessel_kernels::heat_kernel::{
    kernel_derivative_fd, kernel_product, ExtendedKernel, SchlafliKernel,
};
use bessel_kernels::operators::{
    self, g_apply, heat_apply, poisson_kernel, riesz_kernel_closed, riesz_kernel_time,
    LaplaceSymbol,
};
use bessel_kernels::quadrature::time_grid;
use bessel_kernels::verifier::{self, EstimateReport, KernelId, VerifyConfig};
use clap::{Args, Parser, Subcommand, ValueEnum};
use config::FileConfig;
use std::io::Write;
use std::path::PathBuf;

const EXIT_USAGE: i32 = 2;
const EXIT_NUMERICAL: i32 = 3;
const EXIT_VERIFICATION: i32 = 4;

#[derive(Parser)]
#[command(name = "bessel-kernels", version, about = "Bessel heat-kernel toolbox")]
struct Cli {
    /// Configuration file (key=value); defaults to $BESSEL_KERNELS_CONFIG.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Cap the worker thread count.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate kernels and kernel derivatives at points.
    Eval(EvalArgs),
    /// Hankel transform of a built-in test function at points.
    Transform(TransformArgs),
    /// Apply semigroup-based operators to a test function.
    Apply(ApplyArgs),
    /// Run estimate checks and emit reports.
    Verify(VerifyArgs),
    /// Summarize a JSON-lines report file as CSV.
    Report(ReportArgs),
}

#[derive(Args)]
struct EvalArgs {
    /// Kernel: heat, poisson or riesz.
    #[arg(long, default_value = "heat")]
    kernel: String,
    /// Type index, comma separated (e.g. "0.5,-0.25").
    #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
    lambda: Vec<f64>,
    /// Times, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    t: Vec<f64>,
    #[arg(long, value_delimiter = ',', required = true)]
    x: Vec<f64>,
    #[arg(long, value_delimiter = ',', required = true)]
    y: Vec<f64>,
    /// Representation: extended, product, schlafli, fd (finite-difference
    /// oracle) or, for riesz, time/closed.
    #[arg(long, value_enum, default_value_t = Rep::Extended)]
    rep: Rep,
    /// x-derivative orders per coordinate (heat kernel only).
    #[arg(long, value_delimiter = ',')]
    m: Option<Vec<u8>>,
    /// y-derivative orders per coordinate.
    #[arg(long, value_delimiter = ',')]
    r: Option<Vec<u8>>,
    /// t-derivative order.
    #[arg(long)]
    k: Option<u8>,
    /// Quadrature order per coordinate.
    #[arg(long)]
    order: Option<usize>,
}

#[derive(Copy, Clone, PartialEq, ValueEnum)]
enum Rep {
    Extended,
    Product,
    Schlafli,
    Fd,
    Time,
    Closed,
}

#[derive(Args)]
struct TransformArgs {
    #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
    lambda: Vec<f64>,
    /// Test function: "gauss" or "gauss:SIGMA" or a mixture
    /// "gauss:S1+gauss:S2".
    #[arg(long, default_value = "gauss")]
    f: String,
    /// Evaluation points, one per --x occurrence (comma-separated coords).
    #[arg(long, value_parser = parse_vec, required = true)]
    x: Vec<Vec<f64>>,
    /// Apply the transform twice (involution check).
    #[arg(long)]
    twice: bool,
    /// Truncation radius of the integration grid.
    #[arg(long, default_value_t = 14.0)]
    y_max: f64,
}

#[derive(Args)]
struct ApplyArgs {
    /// Operator: heat, g, poisson or resolvent (Laplace-type multiplier
    /// with psi(t) = e^{-a t}).
    #[arg(long)]
    op: String,
    #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
    lambda: Vec<f64>,
    #[arg(long)]
    t: Option<f64>,
    /// Test function (see `transform --f`), or "const".
    #[arg(long, default_value = "gauss")]
    f: String,
    #[arg(long, value_parser = parse_vec, required = true)]
    x: Vec<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    m: Option<Vec<u8>>,
    #[arg(long)]
    k: Option<u8>,
    /// Resolvent parameter a in psi(t) = e^{-a t}.
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    /// For --op g: also print ||g f||_2 / ||f||_2 over the grid.
    #[arg(long)]
    norm_ratio: bool,
    #[arg(long, default_value_t = 14.0)]
    y_max: f64,
}

#[derive(Args)]
struct VerifyArgs {
    /// Check id: growth, smoothness-x, smoothness-y, gradient, theta,
    /// bridge, upsilon, est33, measure, ball, or all.
    #[arg(long, default_value = "all")]
    check: String,
    /// Kernel for the standard-estimate checks: heat, g, laplace,
    /// stieltjes, riesz.
    #[arg(long)]
    kernel: Option<String>,
    /// Multi-index pattern for g/riesz kernels.
    #[arg(long, value_delimiter = ',')]
    m: Option<Vec<u8>>,
    #[arg(long)]
    k: Option<u8>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    order: Option<usize>,
    #[arg(long)]
    t_nodes: Option<usize>,
    /// Reduced budgets.
    #[arg(long)]
    quick: bool,
    /// Skip the doubled-order refinement pass.
    #[arg(long)]
    no_refine: bool,
    /// Output format: json (one record per line) or csv.
    #[arg(long, default_value = "json")]
    format: String,
    /// Output path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// JSON-lines report file produced by `verify`.
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_vec(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| e.to_string()))
        .collect()
}

fn main() {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    let code = match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            match err.downcast_ref::<bessel_kernels::Error>() {
                Some(bessel_kernels::Error::NonConvergence { .. })
                | Some(bessel_kernels::Error::BudgetExhausted(_)) => EXIT_NUMERICAL,
                // bad arguments, bad domains, unreadable inputs
                _ => EXIT_USAGE,
            }
        }
    };
    std::process::exit(code);
}

fn run(cli: Cli) -> Result<i32> {
    let file = FileConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Eval(args) => cmd_eval(args, &file),
        Command::Transform(args) => cmd_transform(args),
        Command::Apply(args) => cmd_apply(args),
        Command::Verify(args) => cmd_verify(args, &file),
        Command::Report(args) => cmd_report(args),
    }
}

fn type_index(lambda: &[f64]) -> Result<TypeIndex> {
    Ok(TypeIndex::new(lambda.to_vec())?)
}

fn point(coords: &[f64]) -> Result<HalfSpacePoint> {
    Ok(HalfSpacePoint::new(coords.to_vec())?)
}

fn cmd_eval(args: EvalArgs, file: &FileConfig) -> Result<i32> {
    let order = file.resolve(args.order, "order", 64usize)?;
    let lam = type_index(&args.lambda)?;
    let x = point(&args.x)?;
    let y = point(&args.y)?;
    if args.t.is_empty() {
        bail!("--t requires at least one time");
    }
    let m = args.m.unwrap_or_else(|| vec![0; lam.dim()]);
    let r = args.r.unwrap_or_else(|| vec![0; lam.dim()]);
    let k = args.k.unwrap_or(0);
    if m.len() != lam.dim() || r.len() != lam.dim() {
        bail!("derivative patterns must have one entry per coordinate");
    }
    let has_deriv = m.iter().chain(r.iter()).any(|v| *v > 0) || k > 0;
    println!("t,x,y,value,representation,est_error");
    let mut worst_flag = 0;
    for &t in &args.t {
        let (value, rep_name, est): (f64, &str, f64) = match (&args.kernel[..], args.rep) {
            ("heat", Rep::Product) if !has_deriv => {
                let v = kernel_product(&lam, t, &x, &y)?;
                (v, "product", v * 1e-12)
            }
            ("heat", Rep::Schlafli) if !has_deriv => {
                let kern = SchlafliKernel::new(lam.clone(), order)?;
                let v = kern.eval(t, x.coords(), y.coords());
                let v2 = SchlafliKernel::new(lam.clone(), 2 * order)?.eval(t, x.coords(), y.coords());
                (v, "schlafli", (v - v2).abs())
            }
            ("heat", Rep::Fd) => {
                let v = kernel_derivative_fd(&lam, &m, &r, k, t, &x, &y, 1.0)?;
                (v.value, "fd", v.error_estimate)
            }
            ("heat", _) => {
                let kern = ExtendedKernel::new(lam.clone(), order)?;
                let v = kern.derivative(&m, &r, k).eval(t, x.coords(), y.coords());
                let v2 = ExtendedKernel::new(lam.clone(), 2 * order)?
                    .derivative(&m, &r, k)
                    .eval(t, x.coords(), y.coords());
                (v, "extended", (v - v2).abs())
            }
            ("riesz", Rep::Time) => {
                let kern = ExtendedKernel::new(lam.clone(), order)?;
                let v = riesz_kernel_time(&kern, &m, &x, &y)?;
                if !v.converged {
                    worst_flag = EXIT_NUMERICAL;
                }
                (v.value, "time", v.quad_error)
            }
            ("riesz", _) => {
                let kern = ExtendedKernel::new(lam.clone(), order)?;
                let v = riesz_kernel_closed(&kern, &m, &x, &y)?;
                let t_route = riesz_kernel_time(&kern, &m, &x, &y)?;
                (v, "closed", (v - t_route.value).abs())
            }
            ("poisson", _) => {
                let kern = ExtendedKernel::new(lam.clone(), order)?;
                let v = poisson_kernel(&kern, t, &x, &y)?;
                if !v.converged {
                    worst_flag = EXIT_NUMERICAL;
                }
                (v.value, "subordination", v.quad_error + v.tail_bound)
            }
            (other, _) => bail!("unknown kernel {other:?} (try: heat, poisson)"),
        };
        println!(
            "{},{},{},{},{},{}",
            t,
            join(&args.x),
            join(&args.y),
            fmt(value),
            rep_name,
            fmt(est)
        );
    }
    Ok(worst_flag)
}

fn join(v: &[f64]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

/// 17 significant digits: enough to reproduce the f64 bit pattern.
fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

/// Parse a test-function spec into a closure over the radial coordinates.
fn test_function(spec: &str) -> Result<Box<dyn Fn(&[f64]) -> f64 + Sync>> {
    if spec == "const" {
        return Ok(Box::new(|_| 1.0));
    }
    let mut parts = Vec::new();
    for term in spec.split('+') {
        let sigma = match term.trim().split_once(':') {
            None if term.trim() == "gauss" => 1.0,
            Some(("gauss", s)) => s.parse::<f64>().context("gauss sigma")?,
            _ => bail!("unknown test function {term:?} (try: const, gauss, gauss:SIGMA)"),
        };
        if !(sigma > 0.0) {
            bail!("sigma must be positive");
        }
        parts.push(sigma);
    }
    Ok(Box::new(move |y: &[f64]| {
        let r2: f64 = y.iter().map(|v| v * v).sum();
        parts.iter().map(|s| (-0.5 * r2 / (s * s)).exp()).sum()
    }))
}

fn build_grid_fn(
    lam: &TypeIndex,
    spec: &str,
    y_max: f64,
    x_extent: f64,
) -> Result<RadialGridFunction> {
    let f = test_function(spec)?;
    let grids = lam
        .entries()
        .iter()
        .map(|l| RadialGrid::for_frequency(*l, y_max, x_extent))
        .collect::<bessel_kernels::Result<Vec<_>>>()?;
    Ok(RadialGridFunction::from_fn(grids, |y| f(y))?)
}

fn cmd_transform(args: TransformArgs) -> Result<i32> {
    let lam = type_index(&args.lambda)?;
    let x_extent = args
        .x
        .iter()
        .flat_map(|p| p.iter())
        .fold(1.0_f64, |a, b| a.max(*b));
    let f = build_grid_fn(&lam, &args.f, args.y_max, x_extent)?;
    println!("x,value,tail_estimate");
    let mut flag = 0;
    for coords in &args.x {
        let xp = point(coords)?;
        let result = if args.twice {
            let zgrids = lam
                .entries()
                .iter()
                .map(|l| RadialGrid::for_frequency(*l, args.y_max, x_extent))
                .collect::<bessel_kernels::Result<Vec<_>>>()?;
            let fhat = RadialGridFunction::from_fn(zgrids, |z| {
                let zp = HalfSpacePoint::new(z.to_vec()).expect("grid nodes positive");
                hankel_transform(&lam, &f, &zp).map(|v| v.value).unwrap_or(f64::NAN)
            })?;
            hankel_transform(&lam, &fhat, &xp)?
        } else {
            hankel_transform(&lam, &f, &xp)?
        };
        if !result.value.is_finite() {
            flag = EXIT_NUMERICAL;
        }
        println!(
            "{},{},{}",
            join(coords),
            fmt(result.value),
            fmt(result.tail_estimate)
        );
    }
    Ok(flag)
}

fn cmd_apply(args: ApplyArgs) -> Result<i32> {
    let lam = type_index(&args.lambda)?;
    let x_extent = args
        .x
        .iter()
        .flat_map(|p| p.iter())
        .fold(1.0_f64, |a, b| a.max(*b));
    let kern = ExtendedKernel::new(lam.clone(), 64)?;
    let f = build_grid_fn(&lam, &args.f, args.y_max, x_extent)?;
    let mut flag = 0;
    match &args.op[..] {
        "heat" => {
            let t = args.t.context("--op heat requires --t")?;
            println!("x,value,tail_estimate");
            for coords in &args.x {
                let v = heat_apply(&kern, t, &f, &point(coords)?)?;
                println!("{},{},{}", join(coords), fmt(v.value), fmt(v.tail_estimate));
            }
        }
        "g" => {
            let m = args.m.clone().unwrap_or_else(|| vec![0; lam.dim()]);
            let k = args.k.unwrap_or(1);
            let grid = time_grid(1e-5, 1e4, 160)?;
            println!("x,value");
            for coords in &args.x {
                let v = g_apply(&kern, &m, k, &f, &point(coords)?, &grid)?;
                println!("{},{}", join(coords), fmt(v));
            }
            if args.norm_ratio {
                let ratio = g_norm_ratio(&lam, &kern, &f, &m, k, &grid)?;
                println!("norm_ratio,{}", fmt(ratio));
            }
        }
        "poisson" => {
            let t = args.t.context("--op poisson requires --t")?;
            println!("x,value,error");
            for coords in &args.x {
                // P_t f via the x-section of the subordinated kernel
                let xp = point(coords)?;
                let v = f.integrate_against(|y| {
                    let yp = HalfSpacePoint::new(y.to_vec()).expect("grid positive");
                    poisson_kernel(&kern, t, &xp, &yp).map(|r| r.value).unwrap_or(f64::NAN)
                });
                if !v.is_finite() {
                    flag = EXIT_NUMERICAL;
                }
                println!("{},{},{}", join(coords), fmt(v), fmt(f.edge_mass()));
            }
        }
        "resolvent" => {
            // Laplace-type multiplier with psi(t) = e^{-a t}
            let a = args.a;
            let psi = LaplaceSymbol::new(move |t: f64| (-a * t).exp(), 1.0)?;
            println!("x,value,tail_bound");
            for coords in &args.x {
                let xp = point(coords)?;
                let v = f.integrate_against(|y| {
                    let yp = HalfSpacePoint::new(y.to_vec()).expect("grid positive");
                    operators::laplace_mult_kernel(&kern, &psi, &xp, &yp)
                        .map(|r| r.value)
                        .unwrap_or(f64::NAN)
                });
                if !v.is_finite() {
                    flag = EXIT_NUMERICAL;
                }
                println!("{},{},{}", join(coords), fmt(v), fmt(f.edge_mass()));
            }
        }
        other => bail!("unknown op {other:?} (try: heat, g, poisson, resolvent)"),
    }
    Ok(flag)
}

/// `||g_{m,k} f||_{L^2(dmu)} / ||f||_{L^2(dmu)}` over the function's grid.
fn g_norm_ratio(
    lam: &TypeIndex,
    kern: &ExtendedKernel,
    f: &RadialGridFunction,
    m: &[u8],
    k: u8,
    grid: &bessel_kernels::quadrature::LogTimeGrid,
) -> Result<f64> {
    let _ = lam;
    let xs: Vec<Vec<f64>> = {
        // reuse the function's own grid nodes as the outer integration grid
        let g0 = &f.grids()[0];
        g0.nodes.iter().map(|v| vec![*v]).collect()
    };
    if f.dim() != 1 {
        bail!("--norm-ratio currently supports one dimension");
    }
    let g0 = &f.grids()[0];
    let mut num = 0.0;
    let mut den = 0.0;
    for (coords, w) in xs.iter().zip(&g0.weights) {
        let xp = point(coords)?;
        let gv = g_apply(kern, m, k, f, &xp, grid)?;
        num += w * gv * gv;
        let fv = f.values()[xs.iter().position(|c| c == coords).unwrap()];
        den += w * fv * fv;
    }
    Ok((num / den).sqrt())
}

fn verify_config(args: &VerifyArgs, file: &FileConfig) -> Result<VerifyConfig> {
    let mut cfg = if args.quick {
        VerifyConfig::quick()
    } else {
        VerifyConfig::default()
    };
    cfg.seed = file.resolve(args.seed, "seed", cfg.seed)?;
    cfg.samples = file.resolve(args.samples, "samples", cfg.samples)?;
    cfg.order = file.resolve(args.order, "order", cfg.order)?;
    cfg.t_nodes = file.resolve(args.t_nodes, "t_nodes", cfg.t_nodes)?;
    if args.no_refine {
        cfg.refine = false;
    }
    Ok(cfg)
}

fn kernel_id(args: &VerifyArgs) -> Result<KernelId> {
    let name = args.kernel.as_deref().unwrap_or("heat");
    Ok(match name {
        "heat" => KernelId::Heat,
        "g" => KernelId::SquareFunction {
            m: args.m.clone().unwrap_or_else(|| vec![1]),
            k: args.k.unwrap_or(0),
        },
        "laplace" => KernelId::LaplaceMultiplier,
        "stieltjes" => KernelId::StieltjesMultiplier,
        "riesz" => KernelId::Riesz {
            m: args.m.clone().unwrap_or_else(|| vec![1]),
        },
        other => bail!("unknown kernel {other:?}"),
    })
}

fn cmd_verify(args: VerifyArgs, file: &FileConfig) -> Result<i32> {
    let cfg = verify_config(&args, file)?;
    let grid = verifier::default_lambda_grid();
    let total = if cfg.refine { 4 * cfg.samples } else { cfg.samples };
    let samples = verifier::sample_configs(&grid, total, cfg.seed)?;
    let reports: Vec<EstimateReport> = match &args.check[..] {
        "all" => verifier::run_all(&cfg)?,
        "growth" => vec![verifier::check_growth(&kernel_id(&args)?, &samples, &cfg)?],
        "smoothness-x" => vec![verifier::check_smoothness_x(
            &kernel_id(&args)?,
            &samples,
            &cfg,
        )?],
        "smoothness-y" => vec![verifier::check_smoothness_y(
            &kernel_id(&args)?,
            &samples,
            &cfg,
        )?],
        "gradient" => vec![verifier::check_gradient(&kernel_id(&args)?, &samples, &cfg)?],
        "family" => verifier::check_kernel_family(&kernel_id(&args)?, &samples, &cfg)?,
        "theta" => vec![verifier::check_theta_lemma(&samples, &cfg)?],
        "bridge" => vec![verifier::check_bridge(&[0.0], &[0.5], &samples, &cfg)?],
        "upsilon" => verifier::suite_upsilon_params()
            .iter()
            .map(|p| verifier::check_upsilon(p, &samples, &cfg))
            .collect::<bessel_kernels::Result<Vec<_>>>()?,
        "est33" => vec![verifier::check_est33(&[0], &[1], &[0], 0, &samples, &cfg)?],
        "measure" => vec![verifier::check_measure_equiv(&samples, &cfg)?],
        "ball" => vec![verifier::check_ball_comparability(
            &grid,
            (cfg.samples / 10).max(40),
            cfg.seed,
            1 << 14,
        )?],
        other => bail!("unknown check {other:?}"),
    };
    let mut out: Box<dyn Write> = match &args.out {
        Some(path) => Box::new(std::fs::File::create(path)?),
        None => Box::new(std::io::stdout()),
    };
    let header = format!(
        "seed={} samples={} order={} t_nodes={} refine={}",
        cfg.seed, cfg.samples, cfg.order, cfg.t_nodes, cfg.refine
    );
    match &args.format[..] {
        "json" => {
            writeln!(out, "{{\"config\":\"{header}\"}}")?;
            for r in &reports {
                writeln!(out, "{}", r.to_json())?;
            }
        }
        "csv" => {
            writeln!(out, "# {header}")?;
            writeln!(out, "{}", EstimateReport::CSV_HEADER)?;
            for r in &reports {
                writeln!(out, "{}", r.to_csv_row())?;
            }
        }
        other => bail!("unknown format {other:?} (json or csv)"),
    }
    let all_pass = reports.iter().all(|r| r.passes());
    Ok(if all_pass { 0 } else { EXIT_VERIFICATION })
}

fn cmd_report(args: ReportArgs) -> Result<i32> {
    let text = std::fs::read_to_string(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let mut out: Box<dyn Write> = match &args.out {
        Some(path) => Box::new(std::fs::File::create(path)?),
        None => Box::new(std::io::stdout()),
    };
    writeln!(out, "{}", EstimateReport::CSV_HEADER)?;
    let mut any_fail = false;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with("{\"config\"") {
            continue;
        }
        let report: EstimateReport =
            serde_json::from_str(line).context("parsing report record")?;
        any_fail |= !report.passes();
        writeln!(out, "{}", report.to_csv_row())?;
    }
    Ok(if any_fail { EXIT_VERIFICATION } else { 0 })
}
