use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};

use ultraslow_fde::error::{Error, Result};
use ultraslow_fde::linalg::CgOptions;
use ultraslow_fde::problems::{example1_problem, example2_problem};
use ultraslow_fde::selftest::{all_passed, run_selftest, SelftestConfig};
use ultraslow_fde::solver1d::{final_error_1d, solve_1d, Problem1D, SolveOptions};
use ultraslow_fde::solver2d::{solve_2d, Problem2D, DEFAULT_H_REF};
use ultraslow_fde::spatial::{default_oversample, fcd_coeffs_2d, riesz_stencil};
use ultraslow_fde::study::{emit_report, parse_key_values, run_convergence, ReportFormat, StudySpec};
use ultraslow_fde::temporal::{l12_row, l2sigma_row, Scheme, TemporalGrid};

/// Finite-difference solvers for Caputo-Hadamard ultra-slow diffusion with
/// fractional Laplacian in space.
#[derive(Parser)]
#[command(name = "ultraslow-fde", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the 1D problem and write the trajectory as CSV (n,j,x,t,U).
    Solve1d(Solve1dArgs),
    /// Solve the 2D problem and write the trajectory as CSV or binary.
    Solve2d(Solve2dArgs),
    /// Run a convergence study described by a key = value file.
    Converge(ConvergeArgs),
    /// Dump temporal or spatial stencil coefficients as CSV.
    Kernels(KernelArgs),
    /// Run the randomized property suite; exits nonzero on any violation.
    Selftest(SelftestArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    L2sigma,
    L12,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::L2sigma => Scheme::L2Sigma,
            SchemeArg::L12 => Scheme::L12,
        }
    }
}

#[derive(Args)]
struct Common {
    #[arg(long, value_enum, default_value = "l2sigma")]
    scheme: SchemeArg,
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    beta: f64,
    /// Initial time ã (the examples require 1).
    #[arg(long = "atilde", default_value_t = 1.0)]
    a_tilde: f64,
    /// Final time.
    #[arg(long = "T", default_value_t = 2.0)]
    t_end: f64,
    /// Number of time steps.
    #[arg(long = "N")]
    n: usize,
    /// Number of spatial intervals.
    #[arg(long = "M")]
    m: usize,
    /// Relative CG tolerance.
    #[arg(long, default_value_t = CgOptions::default().tol)]
    tol: f64,
    /// Write every k-th time level only.
    #[arg(long, default_value_t = 1)]
    stride: usize,
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn options(&self) -> SolveOptions {
        SolveOptions {
            cg: CgOptions {
                tol: self.tol,
                ..CgOptions::default()
            },
            ..SolveOptions::default()
        }
    }

    fn check_example(&self) -> Result<()> {
        if self.a_tilde != 1.0 {
            return Err(Error::Argument("the built-in examples start at ã = 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Problem1Arg {
    Example1,
    /// Zero source, u0 = sin(π(x-a)/(b-a)).
    Custom,
}

#[derive(Args)]
struct Solve1dArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value = "example1")]
    problem: Problem1Arg,
    /// Left end of the interval (custom problem).
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    a: f64,
    /// Right end of the interval (custom problem).
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    b: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Problem2Arg {
    Example2,
    /// Zero source, u0 = (1-x²/L²)²(1-y²/L²)².
    Custom,
}

#[derive(Clone, Copy, ValueEnum)]
enum FieldFormat {
    Csv,
    Binary,
}

#[derive(Args)]
struct Solve2dArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value = "example2")]
    problem: Problem2Arg,
    /// Half-width of the square domain (custom problem).
    #[arg(long = "L", default_value_t = 1.0)]
    l: f64,
    /// Reference mesh for the example source.
    #[arg(long = "h-ref", default_value_t = DEFAULT_H_REF)]
    h_ref: f64,
    #[arg(long, value_enum, default_value = "csv")]
    format: FieldFormat,
}

#[derive(Args)]
struct ConvergeArgs {
    /// Study file; flags below override its entries.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    dimension: Option<String>,
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    problem: Option<String>,
    /// Comma-separated list.
    #[arg(long)]
    alpha: Option<String>,
    /// Comma-separated list.
    #[arg(long)]
    beta: Option<String>,
    /// space or time.
    #[arg(long)]
    vary: Option<String>,
    /// Step of the mesh held fixed.
    #[arg(long)]
    fixed: Option<String>,
    /// Comma-separated step sizes, each half the previous.
    #[arg(long)]
    ladder: Option<String>,
    #[arg(long = "h-ref")]
    h_ref: Option<String>,
    #[arg(long)]
    tol: Option<String>,
    #[arg(long, default_value = "csv")]
    format: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelKind {
    L2sigma,
    L12,
    Riesz,
    Fcd,
}

#[derive(Args)]
struct KernelArgs {
    #[arg(long, value_enum)]
    scheme: KernelKind,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long = "atilde", default_value_t = 1.0)]
    a_tilde: f64,
    #[arg(long = "T", default_value_t = 2.0)]
    t_end: f64,
    #[arg(long = "N")]
    n: Option<usize>,
    /// Row index.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long = "M")]
    m: Option<usize>,
    /// DFT size for the 2D coefficients (default max(512, 4M) rounded up to a power of two).
    #[arg(long)]
    oversample: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SelftestArgs {
    #[arg(long, default_value_t = SelftestConfig::default().seed)]
    seed: u64,
    #[arg(long, default_value_t = SelftestConfig::default().samples)]
    samples: usize,
    #[arg(long, default_value_t = SelftestConfig::default().fields)]
    fields: usize,
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn need<T>(v: Option<T>, flag: &str) -> Result<T> {
    v.ok_or_else(|| Error::Argument(format!("--{flag} is required for this kernel")))
}

fn report_warnings(warnings: &[String]) {
    for w in warnings {
        warn!("{w}");
    }
}

fn solve1d(args: Solve1dArgs) -> Result<()> {
    let c = &args.common;
    let problem = match args.problem {
        Problem1Arg::Example1 => {
            c.check_example()?;
            Problem1D {
                t_end: c.t_end,
                ..example1_problem(c.alpha, c.beta)?
            }
        }
        Problem1Arg::Custom => {
            let (a, b) = (args.a, args.b);
            Problem1D {
                u0: Arc::new(move |x| (std::f64::consts::PI * (x - a) / (b - a)).sin()),
                ..Problem1D::homogeneous(c.alpha, c.beta, c.a_tilde, c.t_end, a, b)
            }
        }
    };
    let traj = solve_1d(c.scheme.into(), &problem, c.m, c.n, &c.options())?;
    report_warnings(&traj.warnings);
    info!("max CG iterations per step: {}", traj.max_iterations());
    if problem.exact.is_some() {
        info!("final-time error: {:.6e}", final_error_1d(&problem, &traj)?);
    }
    let mut w = output(&c.out)?;
    writeln!(w, "n,j,x,t,U")?;
    for (n, level) in traj.levels.iter().enumerate().step_by(c.stride.max(1)) {
        let t = traj.time.t(n);
        for (j, u) in level.iter().enumerate() {
            writeln!(w, "{n},{j},{:e},{t:e},{u:e}", traj.space.x(j))?;
        }
    }
    w.flush()?;
    Ok(())
}

fn solve2d(args: Solve2dArgs) -> Result<()> {
    let c = &args.common;
    let problem = match args.problem {
        Problem2Arg::Example2 => {
            c.check_example()?;
            Problem2D {
                t_end: c.t_end,
                ..example2_problem(c.alpha, c.beta, args.h_ref)?
            }
        }
        Problem2Arg::Custom => {
            let l = args.l;
            Problem2D {
                u0: Arc::new(move |x, y| {
                    let p = |s: f64| (1.0 - s * s / (l * l)).max(0.0).powi(2);
                    p(x) * p(y)
                }),
                ..Problem2D::homogeneous(c.alpha, c.beta, c.a_tilde, c.t_end, l)
            }
        }
    };
    let traj = solve_2d(c.scheme.into(), &problem, c.m, c.n, &c.options())?;
    report_warnings(&traj.warnings);
    info!("max CG iterations per step: {}", traj.max_iterations());
    let stride = c.stride.max(1);
    let levels: Vec<usize> = (0..traj.levels.len()).step_by(stride).collect();
    let mut w = output(&c.out)?;
    let m = traj.space.m();
    match args.format {
        FieldFormat::Csv => {
            writeln!(w, "n,j,k,x,y,t,U")?;
            for &n in &levels {
                let t = traj.time.t(n);
                for j in 0..=m {
                    for k in 0..=m {
                        let (x, y) = (traj.space.x(j), traj.space.x(k));
                        writeln!(w, "{n},{j},{k},{x:e},{y:e},{t:e},{:e}", traj.value(n, j, k))?;
                    }
                }
            }
        }
        FieldFormat::Binary => {
            // one text line, then (M+1)² little-endian f64 per written level, j-major
            writeln!(
                w,
                "ultraslow-fde-2d levels={} nodes={} stride={stride} M={m} L={} alpha={} beta={} atilde={} T={} scheme={}",
                levels.len(),
                m + 1,
                traj.space.l(),
                problem.alpha,
                problem.beta,
                problem.a_tilde,
                problem.t_end,
                traj.scheme
            )?;
            for &n in &levels {
                for j in 0..=m {
                    for k in 0..=m {
                        w.write_all(&traj.value(n, j, k).to_le_bytes())?;
                    }
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn converge(args: ConvergeArgs) -> Result<()> {
    let mut map = match &args.spec {
        Some(path) => parse_key_values(&std::fs::read_to_string(path)?)?,
        None => BTreeMap::new(),
    };
    let overrides = [
        ("dimension", args.dimension),
        ("scheme", args.scheme),
        ("problem", args.problem),
        ("alpha", args.alpha),
        ("beta", args.beta),
        ("vary", args.vary),
        ("fixed", args.fixed),
        ("ladder", args.ladder),
        ("h_ref", args.h_ref),
        ("tol", args.tol),
    ];
    for (k, v) in overrides {
        if let Some(v) = v {
            map.insert(k.to_string(), v);
        }
    }
    let spec = StudySpec::from_map(&map)?;
    let format: ReportFormat = args.format.parse()?;
    let report = run_convergence(&spec)?;
    for b in &report.blocks {
        info!(
            "{} α={} β={}: {:.1}s, max CG iterations {}, max residual {:.1e}",
            b.scheme, b.alpha, b.beta, b.seconds, b.max_cg_iterations, b.max_cg_residual
        );
    }
    let text = emit_report(&report, format)?;
    let mut w = output(&args.out)?;
    w.write_all(text.as_bytes())?;
    w.flush()?;
    Ok(())
}

fn kernels(args: KernelArgs) -> Result<()> {
    let mut w = output(&args.out)?;
    match args.scheme {
        KernelKind::L2sigma | KernelKind::L12 => {
            let alpha = need(args.alpha, "alpha")?;
            let n = need(args.n, "N")?;
            let k = need(args.k, "k")?;
            let grid = TemporalGrid::new(args.a_tilde, args.t_end, n, alpha)?;
            let row = if matches!(args.scheme, KernelKind::L2sigma) {
                l2sigma_row(&grid, k)?
            } else {
                l12_row(&grid, k)?
            };
            writeln!(w, "i,c_i")?;
            for (i, c) in row.coeffs().iter().enumerate() {
                writeln!(w, "{},{c:e}", i + 1)?;
            }
        }
        KernelKind::Riesz => {
            let s = riesz_stencil(need(args.beta, "beta")?, need(args.m, "M")?)?;
            writeln!(w, "k,r_k")?;
            for (k, r) in s.r().iter().enumerate() {
                writeln!(w, "{k},{r:e}")?;
            }
        }
        KernelKind::Fcd => {
            let m = need(args.m, "M")?;
            let k = args.oversample.unwrap_or_else(|| default_oversample(m));
            let s = fcd_coeffs_2d(need(args.beta, "beta")?, m, k)?;
            writeln!(w, "j,k,a_jk")?;
            for j in 0..m.saturating_sub(1) as i64 {
                for l in 0..m.saturating_sub(1) as i64 {
                    writeln!(w, "{j},{l},{:e}", s.a(j, l))?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn selftest(args: SelftestArgs) -> Result<bool> {
    let cfg = SelftestConfig {
        seed: args.seed,
        samples: args.samples,
        fields: args.fields,
        ..SelftestConfig::default()
    };
    let results = run_selftest(&cfg);
    for r in &results {
        println!("{r}");
    }
    Ok(all_passed(&results))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Solve1d(a) => solve1d(a).map(|_| true),
        Command::Solve2d(a) => solve2d(a).map(|_| true),
        Command::Converge(a) => converge(a).map(|_| true),
        Command::Kernels(a) => kernels(a).map(|_| true),
        Command::Selftest(a) => selftest(a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("selftest: at least one property failed");
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
