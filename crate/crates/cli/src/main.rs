mod grid;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};

use clap::{Args, Parser, Subcommand, ValueEnum};
use dexfdr_core::montecarlo::run_with;
use dexfdr_core::{
    crossing_report, asymptotics::{eer_fdr_normal_with, eer_fdr_t_with}, limit_constants, Error, ExtremeConfig, ModelSpec,
    Procedure, SimulationPlan, SolverConfig,
};
use rayon::prelude::*;
use serde::Serialize;

use grid::Grid;

const EXIT_USAGE: u8 = 1;
const EXIT_NUMERIC: u8 = 2;
const WORKERS_VAR: &str = "DEXFDR_WORKERS";

#[derive(Parser)]
#[command(name = "dexfdr", version, about = "Step-up FDR under exchangeable test statistics: limits, crossing points, simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Limiting EER and FDR over a dependence grid, one row per (zeta, grid point).
    Curve(CurveArgs),
    /// Monte Carlo run of the step-up (or step-down) procedure.
    Simulate(SimulateArgs),
    /// Crossing-point structure of the limiting ecdf with the Simes line.
    Crossing(CrossingArgs),
    /// Closed-form limit constants for a level alpha.
    Limits(LimitsArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Family {
    Normal,
    T,
    Exponential,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProcedureArg {
    Lsu,
    Lsd,
}

#[derive(Args)]
struct Tolerances {
    /// Final bracket width of the root finders.
    #[arg(long)]
    root_tol: Option<f64>,
    /// Absolute tolerance of each quadrature.
    #[arg(long)]
    quad_tol: Option<f64>,
    /// Cells per tangency scan window.
    #[arg(long)]
    scan_cells: Option<usize>,
}

impl Tolerances {
    fn config(&self) -> Result<SolverConfig, String> {
        let mut cfg = SolverConfig::default();
        if let Some(x) = self.root_tol {
            positive("--root-tol", x)?;
            cfg.root_xtol = x;
        }
        if let Some(x) = self.quad_tol {
            positive("--quad-tol", x)?;
            cfg.quad_tol = x;
        }
        if let Some(k) = self.scan_cells {
            if k < 10 {
                return Err(format!("--scan-cells must be at least 10, got {k}"));
            }
            cfg.scan_cells = k;
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct CurveArgs {
    #[arg(long, value_enum)]
    model: Family,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Proportion of true nulls; repeat for several curves.
    #[arg(long, required = true)]
    zeta: Vec<f64>,
    /// Correlation grid for the normal model, start:stop:count[:log].
    #[arg(long, conflicts_with = "nu_grid")]
    rho_grid: Option<Grid>,
    /// Degrees-of-freedom grid for the t model, start:stop:count[:log].
    #[arg(long)]
    nu_grid: Option<Grid>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    tol: Tolerances,
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long, value_enum)]
    model: Family,
    /// Equicorrelation of the normal model.
    #[arg(long)]
    rho: Option<f64>,
    /// Degrees of freedom of the t model.
    #[arg(long)]
    nu: Option<f64>,
    /// Location of the false-null statistics in the exponential model
    /// (default: p-values exactly 0).
    #[arg(long)]
    shift: Option<f64>,
}

impl ModelArgs {
    fn spec(&self) -> Result<ModelSpec, String> {
        let need = |v: Option<f64>, flag: &str| v.ok_or_else(|| format!("this model needs {flag}"));
        let spec = match self.model {
            Family::Normal => ModelSpec::normal(need(self.rho, "--rho")?),
            Family::T => ModelSpec::student_t(need(self.nu, "--nu")?),
            Family::Exponential => match self.shift {
                Some(s) => ModelSpec::exponential_shifted(s),
                None => Ok(ModelSpec::exponential()),
            },
        };
        spec.map_err(|e| e.to_string())
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    zeta: f64,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, default_value_t = 10_000)]
    reps: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Fix the disturbance value instead of drawing it.
    #[arg(long, allow_negative_numbers = true)]
    conditional_z: Option<f64>,
    #[arg(long, value_enum, default_value = "lsu")]
    procedure: ProcedureArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CrossingArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long)]
    zeta: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    tol: Tolerances,
}

#[derive(Args)]
struct LimitsArgs {
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// A failure with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_USAGE, message: message.into() }
}

fn from_core(e: Error) -> Failure {
    match e {
        Error::Domain(_) | Error::ResourceLimit(_) => usage(e.to_string()),
        other => Failure { code: EXIT_NUMERIC, message: other.to_string() },
    }
}

fn positive(flag: &str, x: f64) -> Result<(), String> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(format!("{flag} must be positive, got {x}"))
    }
}

fn write_output(out: &Option<PathBuf>, bytes: &[u8]) -> Result<(), Failure> {
    let res = match out {
        Some(path) => std::fs::write(path, bytes),
        None => std::io::stdout().lock().write_all(bytes),
    };
    res.map_err(|e| usage(format!("cannot write output: {e}")))
}

fn json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_vec_pretty(value).expect("serializable");
    s.push(b'\n');
    s
}

#[derive(Serialize)]
struct CurveRow {
    model: &'static str,
    alpha: f64,
    zeta: f64,
    rho_or_nu: f64,
    eer_inf: Option<f64>,
    fdr_inf: Option<f64>,
    t1: Option<f64>,
    t2: Option<f64>,
    quad_err: Option<f64>,
    status: String,
}

fn cmd_curve(args: &CurveArgs) -> Result<u8, Failure> {
    let cfg = args.tol.config().map_err(usage)?;
    let (grid, name) = match (args.model, &args.rho_grid, &args.nu_grid) {
        (Family::Normal, Some(g), None) => (g, "normal"),
        (Family::T, None, Some(g)) => (g, "t"),
        (Family::Normal, _, _) => return Err(usage("the normal model needs --rho-grid")),
        (Family::T, _, _) => return Err(usage("the t model needs --nu-grid")),
        (Family::Exponential, _, _) => return Err(usage("curve supports the normal and t models")),
    };
    if let Some(z) = args.zeta.iter().find(|&&z| !(z > 0.0 && z <= 1.0)) {
        return Err(usage(format!("--zeta must lie in (0, 1], got {z}")));
    }
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return Err(usage(format!("--alpha must lie in (0, 1), got {}", args.alpha)));
    }
    let values = grid.values();
    for &v in &values {
        let ok = match args.model {
            Family::Normal => v > 0.0 && v < 1.0,
            _ => v > 0.0,
        };
        if !ok {
            return Err(usage(format!("grid value {v} outside the model's parameter range")));
        }
    }
    let points: Vec<(f64, f64)> = args.zeta.iter().flat_map(|&z| values.iter().map(move |&v| (z, v))).collect();
    let done = AtomicUsize::new(0);
    let total = points.len();
    let rows: Vec<CurveRow> = points
        .par_iter()
        .map(|&(zeta, p)| {
            let res = match args.model {
                Family::Normal => eer_fdr_normal_with(args.alpha, zeta, p, &cfg),
                _ => eer_fdr_t_with(args.alpha, zeta, p, &cfg),
            };
            let k = done.fetch_add(1, Ordering::Relaxed) + 1;
            if k % 10 == 0 || k == total {
                eprint!("\rcurve: {k}/{total}");
                if k == total {
                    eprintln!();
                }
            }
            let mut row = CurveRow {
                model: name,
                alpha: args.alpha,
                zeta,
                rho_or_nu: p,
                eer_inf: None,
                fdr_inf: None,
                t1: None,
                t2: None,
                quad_err: None,
                status: "ok".into(),
            };
            match res {
                Ok(r) => {
                    row.eer_inf = Some(r.eer);
                    row.fdr_inf = Some(r.fdr);
                    row.t1 = Some(r.t1);
                    row.t2 = Some(r.t2);
                    row.quad_err = Some(r.quadrature_error);
                }
                Err(e) => row.status = format!("error: {e}"),
            }
            row
        })
        .collect();
    let failed = rows.iter().filter(|r| r.status != "ok").count();
    let bytes = match args.format {
        Format::Json => json(&rows),
        Format::Csv => {
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
            w.write_record(["model", "alpha", "zeta", "rho_or_nu", "eer_inf", "fdr_inf", "t1", "t2", "quad_err", "status"])
                .map_err(|e| usage(e.to_string()))?;
            for r in &rows {
                // Debug formatting round-trips and switches to exponent form
                // for tiny values
                let g = |v: f64| format!("{v:?}");
                let f = |x: Option<f64>| x.map_or(String::new(), g);
                w.write_record([
                    r.model.to_string(),
                    g(r.alpha),
                    g(r.zeta),
                    g(r.rho_or_nu),
                    f(r.eer_inf),
                    f(r.fdr_inf),
                    f(r.t1),
                    f(r.t2),
                    f(r.quad_err),
                    r.status.clone(),
                ])
                .map_err(|e| usage(e.to_string()))?;
            }
            w.into_inner().map_err(|e| usage(e.to_string()))?
        }
    };
    write_output(&args.out, &bytes)?;
    if failed > 0 {
        eprintln!("curve: {failed} of {total} rows failed");
        return Ok(EXIT_NUMERIC);
    }
    Ok(0)
}

#[derive(Serialize)]
struct SimulationOutput {
    model: ModelSpec,
    n: usize,
    zeta: f64,
    zeta_n: f64,
    alpha: f64,
    procedure: Procedure,
    conditional_z: Option<f64>,
    summary: dexfdr_core::SimulationSummary,
}

fn cmd_simulate(args: &SimulateArgs) -> Result<u8, Failure> {
    let model = args.model.spec().map_err(usage)?;
    if args.n == 0 {
        return Err(usage("--n must be at least 1"));
    }
    let config = ExtremeConfig::new(args.n, args.zeta, args.seed).map_err(from_core)?;
    let mut plan = SimulationPlan::new(model, config, args.alpha, args.reps);
    plan.procedure = match args.procedure {
        ProcedureArg::Lsu => Procedure::Lsu,
        ProcedureArg::Lsd => Procedure::Lsd,
    };
    if let Some(z) = args.conditional_z {
        plan = plan.conditional(z);
    }
    let progress = |done: u64, total: u64| eprint!("\rsimulate: {done}/{total}{}", if done == total { "\n" } else { "" });
    let summary = run_with(&plan, &Default::default(), &progress).map_err(from_core)?;
    let out = SimulationOutput {
        model,
        n: args.n,
        zeta: args.zeta,
        zeta_n: config.zeta_n(),
        alpha: args.alpha,
        procedure: plan.procedure,
        conditional_z: args.conditional_z,
        summary,
    };
    write_output(&args.out, &json(&out))?;
    Ok(0)
}

fn cmd_crossing(args: &CrossingArgs) -> Result<u8, Failure> {
    let cfg = args.tol.config().map_err(usage)?;
    let model = args.model.spec().map_err(usage)?;
    let report = crossing_report(model, args.alpha, args.zeta, &cfg).map_err(from_core)?;
    write_output(&args.out, &json(&report))?;
    Ok(0)
}

#[derive(Serialize)]
struct LimitsOutput {
    alpha: f64,
    fdr_discontinuity: Option<f64>,
    /// False when alpha lies outside (0, 1/2], where the discontinuity
    /// constant is not defined.
    fdr_discontinuity_defined: bool,
    ene_lsu: f64,
    ene_lsd: f64,
    eer_sup_indep: f64,
    zeta_worst: f64,
}

fn cmd_limits(args: &LimitsArgs) -> Result<u8, Failure> {
    let c = limit_constants(args.alpha).map_err(from_core)?;
    let out = LimitsOutput {
        alpha: args.alpha,
        fdr_discontinuity: c.fdr_discontinuity,
        fdr_discontinuity_defined: c.fdr_discontinuity.is_some(),
        ene_lsu: c.ene_lsu,
        ene_lsd: c.ene_lsd,
        eer_sup_indep: c.eer_sup_indep,
        zeta_worst: c.zeta_worst,
    };
    write_output(&args.out, &json(&out))?;
    if c.fdr_discontinuity.is_none() {
        eprintln!("limits: fdr_discontinuity needs alpha in (0, 1/2], got {}", args.alpha);
        return Ok(EXIT_USAGE);
    }
    Ok(0)
}

fn init_workers() -> Result<(), Failure> {
    if let Ok(v) = std::env::var(WORKERS_VAR) {
        let k: usize = v
            .parse()
            .ok()
            .filter(|&k| k > 0)
            .ok_or_else(|| usage(format!("{WORKERS_VAR} must be a positive integer, got {v:?}")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| usage(format!("cannot start {k} workers: {e}")))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = init_workers().and_then(|()| match &cli.command {
        Command::Curve(a) => cmd_curve(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Crossing(a) => cmd_crossing(a),
        Command::Limits(a) => cmd_limits(a),
    });
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("dexfdr: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
