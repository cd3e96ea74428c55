//! `superconv`: superconvergence point tables and convergence rate studies.

mod config;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use superconv::fem2d_tri::{tri_rate_study, write_tri_csv, ElementKind, MeshParams};
use superconv::harness1d::{m_grid, rate_sweep, write_rates_csv, SweepConfig, DEFAULT_INTERIOR};
use superconv::polyalg::superconv_points;
use superconv::problems::ProblemId;
use superconv::spline1d::{Partition1D, SplineSpace1D};
use superconv::tensor2d::{tensor_rate_study, write_tensor_csv, Probe2D, TensorSpace2D};
use superconv::Error;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("computation failed: {0}")]
    Solver(String),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            Self::Invalid(_) => 2,
            Self::Solver(_) => 3,
            Self::Io(_) => 1,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::SolveFailed(_) | Error::MeshGeneration(_) | Error::RootRefinement { .. } => {
                Self::Solver(e.to_string())
            }
            _ => Self::Invalid(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "superconv", version, about = "Superconvergence points and rate studies for spline and triangular FEM")]
struct Cli {
    /// File of `key = value` lines supplying flag defaults.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Superconvergence points of the s-th derivative error for degree k.
    Points(PointsArgs),
    /// Full table of superconvergence points as CSV.
    Table1(Table1Args),
    /// Pointwise convergence rates of 1D spline Galerkin solutions.
    Rates1d(Rates1dArgs),
    /// Rate study for tensor-product splines on the unit square.
    Tensor2d(Tensor2dArgs),
    /// Rate study on triangulations with a symmetric patch.
    Tri2d(Tri2dArgs),
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
struct PointsArgs {
    #[arg(long, required_unless_present = "all")]
    k: Option<usize>,
    #[arg(long, required_unless_present = "all")]
    s: Option<usize>,
    /// Allow s = 0 for odd k by assuming the mean error term cancels.
    #[arg(long)]
    assume_mean_cancellation: bool,
    /// Print every (k, s) with k up to --max-k as a CSV table.
    #[arg(long)]
    all: bool,
    #[arg(long, default_value_t = 11)]
    max_k: usize,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Csv,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
struct Table1Args {
    #[arg(long, default_value_t = 11)]
    max_k: usize,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
struct Rates1dArgs {
    #[arg(long)]
    k: usize,
    /// Smoothness at the breakpoints; defaults to k - 1.
    #[arg(long)]
    mu: Option<usize>,
    /// Derivative orders, comma separated; defaults to 0..=k.
    #[arg(long, value_delimiter = ',')]
    s: Vec<usize>,
    /// Coarsest number of elements.
    #[arg(long = "N", value_name = "N")]
    n: usize,
    /// Number of doublings of N.
    #[arg(long, default_value_t = 1)]
    refinements: usize,
    /// Step of the reference-coordinate grid on [-1, 1].
    #[arg(long, default_value_t = 0.01)]
    m_grid: f64,
    #[arg(long, default_value = "sin1d")]
    problem: String,
    /// Interior subinterval over which element errors are maximized.
    #[arg(long, value_parser = pair::<f64>)]
    interior: Option<(f64, f64)>,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
struct Tensor2dArgs {
    #[arg(long)]
    k: usize,
    #[arg(long)]
    mu: Option<usize>,
    /// Elements per direction on each level, comma separated.
    #[arg(long = "N", value_name = "LIST", value_delimiter = ',', default_value = "16,32,64")]
    n: Vec<usize>,
    /// Derivative orders (a1, a2).
    #[arg(long, value_parser = pair::<usize>, default_value = "0,0")]
    alpha: (usize, usize),
    /// `vertices` or a point `x,y`; repeatable.
    #[arg(long = "probe", default_value = "vertices")]
    probes: Vec<String>,
    #[arg(long, default_value = "sin2d")]
    problem: String,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KindArg {
    P2,
    Hermite,
}

#[derive(Debug, Args)]
#[command(args_override_self = true)]
struct Tri2dArgs {
    #[arg(long, value_enum)]
    kind: KindArg,
    /// Base lattice sizes, increasing; defaults depend on the element.
    #[arg(long, value_delimiter = ',')]
    ladder: Vec<usize>,
    #[arg(long, default_value_t = 0.25)]
    rho: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 4)]
    rings: usize,
    #[arg(long, value_parser = pair::<f64>, default_value = "0.3,0.4")]
    x0: (f64, f64),
    #[arg(long, value_parser = pair::<f64>, default_value = "0.7,0.6")]
    x0prime: (f64, f64),
    #[arg(long, default_value = "sin2d")]
    problem: String,
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Directory receiving one mesh file per level.
    #[arg(long)]
    mesh_dir: Option<PathBuf>,
}

/// Result of a subcommand: the main text plus extra files.
struct Output {
    text: String,
    target: Option<PathBuf>,
    files: Vec<(PathBuf, String)>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(std::env::args_os().collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("superconv: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(argv: Vec<OsString>) -> Result<(), CliError> {
    let cli = parse(argv)?;
    configure_threads()?;
    let out = match cli.command {
        Command::Points(a) => cmd_points(a)?,
        Command::Table1(a) => Output { text: table1_csv(a.max_k)?, target: a.output, files: Vec::new() },
        Command::Rates1d(a) => cmd_rates1d(a)?,
        Command::Tensor2d(a) => cmd_tensor2d(a)?,
        Command::Tri2d(a) => cmd_tri2d(a)?,
    };
    for (path, text) in &out.files {
        fs::write(path, text)?;
    }
    match out.target {
        Some(path) => fs::write(path, out.text)?,
        None => io::stdout().lock().write_all(out.text.as_bytes())?,
    }
    Ok(())
}

fn parse(argv: Vec<OsString>) -> Result<Cli, CliError> {
    let merged = config::apply_config(&argv)?;
    match Cli::try_parse_from(merged) {
        Ok(cli) => Ok(cli),
        Err(e) => e.exit(),
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("SUPERCONV_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Invalid(format!("SUPERCONV_THREADS = {v:?} is not a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Invalid(format!("thread pool: {e}")))
}

fn cmd_points(a: PointsArgs) -> Result<Output, CliError> {
    if a.all {
        return Ok(Output { text: table1_csv(a.max_k)?, target: a.output, files: Vec::new() });
    }
    let (k, s) = (a.k.unwrap_or_default(), a.s.unwrap_or_default());
    let set = superconv_points(k, s, a.assume_mean_cancellation).map_err(|e| match e {
        Error::MeanCancellationRequired { .. } => {
            CliError::Invalid(format!("{e}; pass --assume-mean-cancellation to proceed"))
        }
        other => other.into(),
    })?;
    let text = match a.format {
        Format::Text => format!("{}\n", set.format_table()),
        Format::Csv => {
            let mut t = String::from("k,s,point\n");
            for p in &set.points {
                let _ = writeln!(t, "{k},{s},{p:.16e}");
            }
            t
        }
    };
    Ok(Output { text, target: a.output, files: Vec::new() })
}

/// Rows `k = 2..=max_k`, columns `s = 0..=max_k`. Odd `k` with `s = 0`
/// assumes mean cancellation.
fn table1_csv(max_k: usize) -> Result<String, CliError> {
    if max_k < 2 {
        return Err(CliError::Invalid(format!("--max-k {max_k} must be at least 2")));
    }
    let mut t = String::from("k");
    for s in 0..=max_k {
        let _ = write!(t, ",s={s}");
    }
    t.push('\n');
    for k in 2..=max_k {
        let _ = write!(t, "{k}");
        for s in 0..=max_k {
            if s > k {
                t.push(',');
                continue;
            }
            let cell = superconv_points(k, s, true)?.format_table();
            if cell.contains(',') {
                let _ = write!(t, ",\"{cell}\"");
            } else {
                let _ = write!(t, ",{cell}");
            }
        }
        t.push('\n');
    }
    Ok(t)
}

fn cmd_rates1d(a: Rates1dArgs) -> Result<Output, CliError> {
    let problem = a.problem.parse::<ProblemId>()?.problem_1d()?;
    let mu = a.mu.unwrap_or(a.k.saturating_sub(1));
    let (lo, hi) = problem.domain;
    // Cheap construction of the coarse space validates k, mu and N.
    SplineSpace1D::new(Partition1D::uniform(lo, hi, a.n)?, a.k, mu)?;
    if a.refinements == 0 {
        return Err(CliError::Invalid("--refinements must be at least 1".into()));
    }
    let s_list = if a.s.is_empty() { (0..=a.k).collect() } else { a.s.clone() };
    if let Some(&s) = s_list.iter().find(|&&s| s > a.k) {
        return Err(Error::InvalidDerivativeOrder { k: a.k, s }.into());
    }
    let interior = match a.interior {
        None => DEFAULT_INTERIOR,
        Some((l, r)) if l < r => (l, r),
        Some(_) => return Err(CliError::Invalid("--interior needs two increasing numbers".into())),
    };
    let n_list: Vec<usize> = (0..=a.refinements).map(|i| a.n << i).collect();
    let cfg = SweepConfig { k: a.k, mu, s_list, n_list, m_grid: m_grid(a.m_grid)?, interior };
    info!("rates1d: {cfg:?}");
    let report = rate_sweep(&problem, &cfg)?;
    if let Some((n, e)) = report.failures.first() {
        return Err(CliError::Solver(format!("N = {n}: {e}")));
    }
    let mut buf = Vec::new();
    write_rates_csv(&mut buf, &report.records)?;
    Ok(Output { text: String::from_utf8_lossy(&buf).into_owned(), target: a.output, files: Vec::new() })
}

/// Parses `a,b`.
fn pair<T: FromStr>(s: &str) -> Result<(T, T), String> {
    let parse = |v: &str| v.trim().parse::<T>().map_err(|_| format!("{v:?} is not a valid number"));
    match s.split_once(',') {
        Some((a, b)) => Ok((parse(a)?, parse(b)?)),
        None => Err(format!("expected two comma-separated values, got {s:?}")),
    }
}

fn parse_probe(s: &str) -> Result<Probe2D, CliError> {
    if s == "vertices" {
        return Ok(Probe2D::InteriorVertices);
    }
    let coords: Vec<f64> = s.split(',').map(|c| c.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| {
        CliError::Invalid(format!("probe {s:?} is neither `vertices` nor `x,y`"))
    })?;
    match coords[..] {
        [x, y] if (0.0..=1.0).contains(&x) && (0.0..=1.0).contains(&y) => Ok(Probe2D::Point(x, y)),
        _ => Err(CliError::Invalid(format!("probe {s:?} must be a point of the unit square"))),
    }
}

fn cmd_tensor2d(a: Tensor2dArgs) -> Result<Output, CliError> {
    let problem = a.problem.parse::<ProblemId>()?.problem_2d()?;
    let mu = a.mu.unwrap_or(a.k.saturating_sub(1));
    let alpha = a.alpha;
    if alpha.0.max(alpha.1) > a.k {
        return Err(Error::InvalidDerivativeOrder { k: a.k, s: alpha.0.max(alpha.1) }.into());
    }
    if a.n.len() < 2 || a.n.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CliError::Invalid("--N needs at least two increasing levels".into()));
    }
    TensorSpace2D::uniform(problem.domain, a.n[0], a.k, mu)?;
    let probes: Vec<Probe2D> = a.probes.iter().map(|p| parse_probe(p)).collect::<Result<_, _>>()?;
    let rows = tensor_rate_study(&problem, a.k, mu, &a.n, alpha, &probes)?;
    let mut buf = Vec::new();
    write_tensor_csv(&mut buf, &rows)?;
    Ok(Output { text: String::from_utf8_lossy(&buf).into_owned(), target: a.output, files: Vec::new() })
}

fn cmd_tri2d(a: Tri2dArgs) -> Result<Output, CliError> {
    let problem = a.problem.parse::<ProblemId>()?.problem_2d()?;
    let kind = match a.kind {
        KindArg::P2 => ElementKind::LagrangeP2,
        KindArg::Hermite => ElementKind::HermiteCubic,
    };
    let ladder = if a.ladder.is_empty() {
        match kind {
            ElementKind::LagrangeP2 => vec![30, 50, 100, 180],
            ElementKind::HermiteCubic => vec![30, 50, 80, 120],
        }
    } else {
        a.ladder.clone()
    };
    if ladder.len() < 2 || ladder.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CliError::Invalid("--ladder needs at least two increasing levels".into()));
    }
    let params = MeshParams {
        n: ladder[0],
        x0: [a.x0.0, a.x0.1],
        x0prime: [a.x0prime.0, a.x0prime.1],
        rings: a.rings,
        rho: a.rho,
        seed: a.seed,
    };
    for &n in &ladder {
        MeshParams { n, ..params.clone() }.validate()?;
    }
    if let Some(dir) = &a.mesh_dir {
        if !dir.is_dir() {
            return Err(CliError::Invalid(format!("mesh directory {} does not exist", dir.display())));
        }
    }
    let study = tri_rate_study(&problem, kind, &ladder, &params)?;
    let mut buf = Vec::new();
    write_tri_csv(&mut buf, &study.rows)?;
    let files = match &a.mesh_dir {
        Some(dir) => study
            .levels
            .iter()
            .map(|l| (dir.join(format!("mesh_{kind}_n{}.txt", l.n)), l.mesh.to_text()))
            .collect(),
        None => Vec::new(),
    };
    Ok(Output { text: String::from_utf8_lossy(&buf).into_owned(), target: a.output, files })
}
