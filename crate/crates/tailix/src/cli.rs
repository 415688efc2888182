//! Command-line surface.
//!
//! Subcommands: `estimate` (point estimates from a data file), `theory`
//! (closed-form constants), `simulate` (seeded Monte Carlo experiments),
//! `regions` (domination-region grids as CSV and optional PGM raster), and
//! `bias-curve` (quadrature bias table).
//!
//! Exit codes are fixed for scripting:
//! 0 success, 1 I/O or internal numeric failure, 2 input parse error,
//! 3 estimator degeneracy, 4 bad flags or parameters, 5 quadrature failure.

use crate::bias_oracle::{bias_curve, QuadratureSpec};
use crate::distributions::HallDistribution;
use crate::error::Error;
use crate::estimators::{self, Kernel, Provenance, Sample};
use crate::montecarlo::{run_experiment, ExperimentConfig, MethodSpec, TuningRule};
use crate::theory::{
    classical_asymptotics, dpr_asymptotics, dpr_chi, rmmse, ClassicalId, Rmmse, SecondOrderParams,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use std::io::Write;
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "tailix", version, about = "Tail index estimation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the tail index from a newline-delimited data file.
    Estimate(EstimateArgs),
    /// Print the asymptotic constants for a parameter point.
    Theory(TheoryArgs),
    /// Run a seeded Monte Carlo experiment and write a JSON report.
    Simulate(SimulateArgs),
    /// Map estimator domination regions over a parameter grid.
    Regions(RegionsArgs),
    /// Tabulate the exact finite-block bias via quadrature.
    BiasCurve(BiasCurveArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Hill,
    Pickands,
    Moment,
    Devries,
    Dpr,
    Gdpr,
    Qi,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KernelArg {
    Power,
    Log,
    Negpower,
}

#[derive(Args)]
struct EstimateArgs {
    /// Input file: one positive decimal per line, '#' starts a comment.
    input: PathBuf,
    #[arg(long, value_enum)]
    method: MethodArg,
    /// Number of upper order statistics (hill, pickands, moment, devries).
    #[arg(long)]
    k: Option<usize>,
    /// Block size (dpr, gdpr, qi).
    #[arg(long)]
    m: Option<usize>,
    /// Top values per block (qi).
    #[arg(long)]
    s: Option<usize>,
    /// Kernel exponent (gdpr power/negpower).
    #[arg(long)]
    r: Option<f64>,
    #[arg(long, value_enum)]
    kernel: Option<KernelArg>,
}

#[derive(Args)]
struct TheoryArgs {
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    beta: f64,
    #[arg(long, default_value_t = 1.0)]
    c1: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    c2: f64,
    /// Sample size the tunings are evaluated at.
    #[arg(long)]
    n: u64,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    alpha: f64,
    /// Second-order exponent; omit for a pure Pareto tail.
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    c1: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    c2: f64,
    #[arg(long)]
    n_obs: usize,
    #[arg(long, value_enum)]
    method: MethodArg,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    s: Option<usize>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long, value_enum)]
    kernel: Option<KernelArg>,
    /// Resolve the tuning from the asymptotic theory.
    #[arg(long, default_value_t = false)]
    optimal: bool,
    #[arg(long)]
    replicates: usize,
    /// Base seed; replicate r uses a SplitMix64-derived stream. Required:
    /// simulations never draw entropy from the clock.
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PlaneArg {
    /// Cells are (alpha, beta) points.
    AlphaBeta,
    /// Cells are (gamma, rho) points, converted before evaluation.
    GammaRho,
}

#[derive(Args)]
struct RegionsArgs {
    #[arg(long, value_enum, default_value_t = PlaneArg::AlphaBeta)]
    plane: PlaneArg,
    #[arg(long, allow_negative_numbers = true)]
    x_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    x_max: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    y_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    y_max: Option<f64>,
    #[arg(long, default_value_t = 400)]
    x_steps: usize,
    #[arg(long, default_value_t = 400)]
    y_steps: usize,
    #[arg(long)]
    out: PathBuf,
    /// Optional binary PGM (P5) raster of the labels.
    #[arg(long)]
    pgm: Option<PathBuf>,
}

#[derive(Args)]
struct BiasCurveArgs {
    #[arg(long)]
    alpha: f64,
    /// Second-order exponent; omit for a pure Pareto tail.
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    c1: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    c2: f64,
    /// Comma-separated block sizes, e.g. 10,100,1000.
    #[arg(long)]
    m_list: String,
    #[arg(long, default_value_t = 1e-10)]
    rel_tol: f64,
    #[arg(long, default_value_t = 1e-14)]
    abs_tol: f64,
    #[arg(long, default_value_t = 100_000)]
    max_subdivisions: usize,
    #[arg(long)]
    out: PathBuf,
}

/// A command failure carrying its exit code.
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::InvalidParameters(_)
            | Error::InfeasibleTail(_)
            | Error::Domain(_)
            | Error::Tuning(_)
            | Error::InsufficientData(_)
            | Error::InvalidConfig(_) => 4,
            Error::Degenerate(_)
            | Error::Inversion(_)
            | Error::Kernel(_)
            | Error::Positivity(_)
            | Error::AllDegenerate => 3,
            Error::QuadratureFailure(_) => 5,
            Error::Numeric(_) => 1,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::new(1, e.to_string())
    }
}

/// Parse argv and dispatch; returns the process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    0
                }
                _ => {
                    eprint!("{e}");
                    4
                }
            };
        }
    };

    let result = match cli.command {
        Command::Estimate(args) => cmd_estimate(&args),
        Command::Theory(args) => cmd_theory(&args),
        Command::Simulate(args) => cmd_simulate(&args),
        Command::Regions(args) => cmd_regions(&args),
        Command::BiasCurve(args) => cmd_bias_curve(&args),
    };
    match result {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("tailix: {}", f.message);
            f.code
        }
    }
}

/// One positive decimal per line; '#' comments and blank lines allowed.
fn read_sample_file(path: &PathBuf) -> Result<Vec<f64>, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::new(1, format!("{}: {e}", path.display())))?;
    let mut values = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: f64 = line.parse().map_err(|_| {
            Failure::new(
                2,
                format!(
                    "{}:{}: not a decimal number: {line:?}",
                    path.display(),
                    idx + 1
                ),
            )
        })?;
        if !(v > 0.0) || !v.is_finite() {
            return Err(Failure::new(
                2,
                format!(
                    "{}:{}: values must be positive, got {line}",
                    path.display(),
                    idx + 1
                ),
            ));
        }
        values.push(v);
    }
    Ok(values)
}

fn render_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn build_kernel(args_kernel: Option<KernelArg>, args_r: Option<f64>) -> Result<Kernel, Failure> {
    match args_kernel {
        None => Err(Failure::new(4, "gdpr requires --kernel")),
        Some(KernelArg::Log) => {
            if args_r.is_some() {
                return Err(Failure::new(4, "--r is meaningless for the log kernel"));
            }
            Ok(Kernel::Log)
        }
        Some(KernelArg::Power) => {
            let r = args_r.ok_or_else(|| Failure::new(4, "power kernel requires --r"))?;
            Ok(Kernel::Power(r))
        }
        Some(KernelArg::Negpower) => {
            let r = args_r.ok_or_else(|| Failure::new(4, "negpower kernel requires --r"))?;
            Ok(Kernel::NegPower(r))
        }
    }
}

fn cmd_estimate(args: &EstimateArgs) -> Result<(), Failure> {
    let values = read_sample_file(&args.input)?;
    let sample =
        Sample::with_provenance(values, Provenance::File(args.input.display().to_string()))
            .map_err(|e| {
                // Positivity is enforced at parse time, so what remains here is
                // an undersized sample.
                Failure::new(2, e.to_string())
            })?;

    let need_k = || {
        args.k
            .ok_or_else(|| Failure::new(4, "this method requires --k"))
    };
    let need_m = || {
        args.m
            .ok_or_else(|| Failure::new(4, "this method requires --m"))
    };

    let result = match args.method {
        MethodArg::Hill => estimators::hill(&sample, need_k()?)?,
        MethodArg::Pickands => estimators::pickands(&sample, need_k()?)?,
        MethodArg::Moment => estimators::moment(&sample, need_k()?)?,
        MethodArg::Devries => estimators::devries(&sample, need_k()?)?,
        MethodArg::Dpr => estimators::dpr(&sample, need_m()?)?,
        MethodArg::Gdpr => {
            let kernel = build_kernel(args.kernel, args.r)?;
            estimators::gdpr(&sample, need_m()?, kernel)?
        }
        MethodArg::Qi => {
            let s = args.s.ok_or_else(|| Failure::new(4, "qi requires --s"))?;
            estimators::qi(&sample, need_m()?, s)?
        }
    };

    let mut out = String::new();
    out.push_str("method,tuning,native,alpha_hat,gamma_hat,p_hat\n");
    out.push_str(&format!(
        "{},{},{},{},{},{}\n",
        result.method,
        result.tuning,
        result.native,
        render_opt(result.alpha_hat),
        render_opt(result.gamma_hat),
        render_opt(result.p_hat),
    ));
    print!("{out}");
    Ok(())
}

fn theory_line(key: &str, value: Option<f64>) -> String {
    match value {
        Some(v) => format!("{key} {v}\n"),
        None => format!("{key} degenerate\n"),
    }
}

fn cmd_theory(args: &TheoryArgs) -> Result<(), Failure> {
    let params = SecondOrderParams::new(args.alpha, args.beta, args.c1, args.c2)?;
    let views = params.views();
    let dpr = dpr_asymptotics(&params, args.n)?;

    let mut out = String::new();
    out.push_str(&format!("alpha {}\n", args.alpha));
    out.push_str(&format!("beta {}\n", args.beta));
    out.push_str(&format!("c1 {}\n", args.c1));
    out.push_str(&format!("c2 {}\n", args.c2));
    out.push_str(&format!("n {}\n", args.n));
    out.push_str(&format!("gamma {}\n", views.gamma));
    out.push_str(&format!("rho {}\n", views.rho));
    out.push_str(&format!("zeta {}\n", views.zeta));
    out.push_str(&format!("p {}\n", views.p));
    out.push_str(&format!("sigma2 {}\n", dpr.sigma2));
    out.push_str(&format!("chi {}\n", dpr.chi));
    out.push_str(&format!("mu {}\n", dpr.mu));
    out.push_str(&theory_line("m_opt_real", dpr.m_opt_real));
    out.push_str(&match dpr.m_opt_int {
        Some(m) => format!("m_opt {m}\n"),
        None => "m_opt degenerate\n".to_string(),
    });
    out.push_str(&theory_line("amse", dpr.amse));

    for id in ClassicalId::ALL {
        let j = id.index();
        let cl = classical_asymptotics(id, &params, args.n)?;
        out.push_str(&format!("d_{j} {}\n", cl.d_coeff));
        out.push_str(&format!("sigma2_{j} {}\n", cl.sigma2));
        out.push_str(&theory_line(&format!("k_opt_{j}"), cl.k_opt));
        out.push_str(&theory_line(&format!("amse_p_{j}"), cl.amse_p));
        let r = rmmse(id, args.alpha, args.beta)?;
        out.push_str(&theory_line(&format!("rmmse_{j}"), r.value()));
    }
    print!("{out}");
    Ok(())
}

fn build_dist(
    c1: f64,
    c2: f64,
    alpha: f64,
    beta: Option<f64>,
) -> Result<HallDistribution, Failure> {
    match beta {
        Some(b) => Ok(HallDistribution::new(c1, c2, alpha, b)?),
        None => {
            if c2 != 0.0 {
                return Err(Failure::new(
                    4,
                    "omit --beta only for a pure Pareto tail (c2 = 0)",
                ));
            }
            Ok(HallDistribution::pareto(c1, alpha)?)
        }
    }
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), Failure> {
    let dist = build_dist(args.c1, args.c2, args.alpha, args.beta)?;

    let rule = if args.optimal {
        let conflict = args.k.is_some() || args.m.is_some();
        if conflict {
            return Err(Failure::new(
                4,
                "--optimal conflicts with an explicit --k/--m",
            ));
        }
        TuningRule::OptimalFromTheory
    } else {
        let v = match args.method {
            MethodArg::Hill | MethodArg::Pickands | MethodArg::Moment | MethodArg::Devries => args
                .k
                .ok_or_else(|| Failure::new(4, "this method requires --k (or --optimal)"))?,
            _ => args
                .m
                .ok_or_else(|| Failure::new(4, "this method requires --m (or --optimal)"))?,
        };
        TuningRule::Explicit(v)
    };

    let method = match args.method {
        MethodArg::Hill => MethodSpec::Hill(rule),
        MethodArg::Pickands => MethodSpec::Pickands(rule),
        MethodArg::Moment => MethodSpec::Moment(rule),
        MethodArg::Devries => MethodSpec::DeVries(rule),
        MethodArg::Dpr => MethodSpec::Dpr(rule),
        MethodArg::Gdpr => MethodSpec::Gdpr(rule, build_kernel(args.kernel, args.r)?),
        MethodArg::Qi => {
            let s = args.s.ok_or_else(|| Failure::new(4, "qi requires --s"))?;
            MethodSpec::Qi(rule, s)
        }
    };

    let cfg = ExperimentConfig {
        dist,
        n_obs: args.n_obs,
        method,
        replicates: args.replicates,
        base_seed: args.seed,
    };
    let report = run_experiment(&cfg)?;
    std::fs::write(&args.out, report.to_json_string())?;
    println!(
        "mean={} mse={} ks_p={}",
        report.mean,
        report.mse,
        report
            .ks_p_value
            .map(|p| p.to_string())
            .unwrap_or_else(|| "none".to_string()),
    );
    Ok(())
}

/// Domination label of one grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellLabel {
    /// Outside the admissible region (beta <= alpha / rho >= 0).
    Invalid,
    DprDominates,
    PickandsDominates,
    MomentDominates,
    /// Degenerate locus or exact tie.
    Undefined,
}

impl CellLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            CellLabel::Invalid => "invalid",
            CellLabel::DprDominates => "dpr-dominates",
            CellLabel::PickandsDominates => "pickands-dominates",
            CellLabel::MomentDominates => "moment-dominates",
            CellLabel::Undefined => "undefined",
        }
    }

    /// Gray level in the PGM raster.
    pub fn pgm_byte(&self) -> u8 {
        match self {
            CellLabel::Invalid => 255,
            CellLabel::DprDominates => 96,
            CellLabel::PickandsDominates => 0,
            CellLabel::MomentDominates => 192,
            CellLabel::Undefined => 160,
        }
    }
}

/// Evaluated grid cell.
#[derive(Debug, Clone, Copy)]
pub struct RegionCell {
    pub x: f64,
    pub y: f64,
    /// `None` outside the valid region; infinite on a degenerate locus.
    pub rmmse_2: Option<f64>,
    pub rmmse_3: Option<f64>,
    pub label: CellLabel,
}

/// Classify one `(alpha, beta)` point by three-way minimal-MSE comparison.
pub fn classify(alpha: f64, beta: f64) -> (Option<f64>, Option<f64>, CellLabel) {
    if !(alpha > 0.0 && beta > alpha) {
        return (None, None, CellLabel::Invalid);
    }
    let r2 = rmmse(ClassicalId::Pickands, alpha, beta).expect("validated domain");
    let r3 = rmmse(ClassicalId::Moment, alpha, beta).expect("validated domain");
    let (v2, v3) = (
        match r2 {
            Rmmse::Value(v) => v,
            Rmmse::Degenerate => f64::INFINITY,
        },
        match r3 {
            Rmmse::Value(v) => v,
            Rmmse::Degenerate => f64::INFINITY,
        },
    );
    let label = if r2 == Rmmse::Degenerate || r3 == Rmmse::Degenerate {
        CellLabel::Undefined
    } else if v2 < 1.0 && v3 < 1.0 {
        CellLabel::DprDominates
    } else if v2 > 1.0 && v2 > v3 {
        CellLabel::PickandsDominates
    } else if v3 > 1.0 && v3 > v2 {
        CellLabel::MomentDominates
    } else {
        CellLabel::Undefined
    };
    (Some(v2), Some(v3), label)
}

/// Evaluate the full grid. Rows run from `y_max` (top) down to `y_min`,
/// columns from `x_min` to `x_max`; cell order is row-major, which is also
/// the PGM pixel order.
pub fn evaluate_grid(
    plane_gamma_rho: bool,
    x_range: (f64, f64),
    y_range: (f64, f64),
    x_steps: usize,
    y_steps: usize,
) -> Vec<RegionCell> {
    let coord = |min: f64, max: f64, steps: usize, i: usize| {
        min + (max - min) * i as f64 / (steps - 1) as f64
    };
    let rows: Vec<usize> = (0..y_steps).collect();
    rows.par_iter()
        .flat_map_iter(|&row| {
            let y = coord(y_range.0, y_range.1, y_steps, y_steps - 1 - row);
            (0..x_steps).map(move |col| {
                let x = coord(x_range.0, x_range.1, x_steps, col);
                let (ab, valid) = if plane_gamma_rho {
                    // (gamma, rho) -> (alpha, beta) = (1/gamma, 1/gamma - rho).
                    if x > 0.0 && y < 0.0 {
                        ((1.0 / x, 1.0 / x - y), true)
                    } else {
                        ((f64::NAN, f64::NAN), false)
                    }
                } else {
                    ((x, y), x > 0.0 && y > x)
                };
                if !valid {
                    return RegionCell {
                        x,
                        y,
                        rmmse_2: None,
                        rmmse_3: None,
                        label: CellLabel::Invalid,
                    };
                }
                let (r2, r3, label) = classify(ab.0, ab.1);
                RegionCell {
                    x,
                    y,
                    rmmse_2: r2,
                    rmmse_3: r3,
                    label,
                }
            })
        })
        .collect()
}

fn cmd_regions(args: &RegionsArgs) -> Result<(), Failure> {
    let gamma_rho = args.plane == PlaneArg::GammaRho;
    // Default windows: qualitative extent of the comparison maps; they are
    // artifact defaults, not canonical values.
    let (x_min, x_max, y_min, y_max) = if gamma_rho {
        (
            args.x_min.unwrap_or(0.05),
            args.x_max.unwrap_or(2.0),
            args.y_min.unwrap_or(-4.0),
            args.y_max.unwrap_or(-0.05),
        )
    } else {
        (
            args.x_min.unwrap_or(0.05),
            args.x_max.unwrap_or(5.0),
            args.y_min.unwrap_or(0.05),
            args.y_max.unwrap_or(20.0),
        )
    };
    if !(x_min < x_max) || !(y_min < y_max) {
        return Err(Failure::new(4, "axis ranges must have positive width"));
    }
    if args.x_steps < 2 || args.y_steps < 2 {
        return Err(Failure::new(4, "need at least 2 steps per axis"));
    }

    let cells = evaluate_grid(
        gamma_rho,
        (x_min, x_max),
        (y_min, y_max),
        args.x_steps,
        args.y_steps,
    );

    let (cx, cy) = if gamma_rho {
        ("gamma", "rho")
    } else {
        ("alpha", "beta")
    };
    let mut csv = String::with_capacity(cells.len() * 48);
    csv.push_str(&format!("{cx},{cy},rmmse_2,rmmse_3,label\n"));
    for c in &cells {
        let f = |v: Option<f64>| match v {
            Some(x) if x.is_finite() => x.to_string(),
            Some(_) => "inf".to_string(),
            None => String::new(),
        };
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            c.x,
            c.y,
            f(c.rmmse_2),
            f(c.rmmse_3),
            c.label.as_str()
        ));
    }
    std::fs::write(&args.out, csv)?;

    if let Some(pgm_path) = &args.pgm {
        let mut pgm = Vec::with_capacity(cells.len() + 32);
        pgm.extend_from_slice(format!("P5\n{} {}\n255\n", args.x_steps, args.y_steps).as_bytes());
        pgm.extend(cells.iter().map(|c| c.label.pgm_byte()));
        let mut file = std::fs::File::create(pgm_path)?;
        file.write_all(&pgm)?;
    }
    Ok(())
}

fn cmd_bias_curve(args: &BiasCurveArgs) -> Result<(), Failure> {
    let dist = build_dist(args.c1, args.c2, args.alpha, args.beta)?;
    let mut m_list = Vec::new();
    for part in args.m_list.split(',') {
        let m: usize = part
            .trim()
            .parse()
            .map_err(|_| Failure::new(4, format!("malformed m-list entry {part:?}")))?;
        m_list.push(m);
    }
    if m_list.is_empty() {
        return Err(Failure::new(4, "empty m-list"));
    }
    let spec = QuadratureSpec {
        rel_tol: args.rel_tol,
        abs_tol: args.abs_tol,
        max_subdivisions: args.max_subdivisions,
    };

    let chi = if dist.is_pure_pareto() {
        0.0
    } else {
        dpr_chi(&SecondOrderParams::from_distribution(&dist)?)
    };
    let points = bias_curve(&dist, &m_list, &spec)?;

    let mut csv = String::new();
    csv.push_str(&format!("# chi {chi}\n"));
    csv.push_str("m,gamma_m,normalized\n");
    for pt in points {
        csv.push_str(&format!("{},{},{}\n", pt.m, pt.gamma_m, pt.normalized));
    }
    std::fs::write(&args.out, csv)?;
    Ok(())
}
