//! Figure-grade datasets and validation runs for the plane-sphere Casimir
//! free energy beyond the proximity-force approximation.
//!
//! Exit codes: 0 success, 1 validation or reference-comparison failure,
//! 2 configuration error, 3 numeric non-convergence (including flagged
//! grid points). Output is CSV (default) or JSON; floats render in
//! shortest round-trip form so written values parse back bit-exactly.

mod output;
mod svg;

use std::fs;
use std::process::ExitCode;

use casimir_core::zerofreq::{self, AsymptoticOrder, NystromConfig};
use casimir_core::{report, spa, thermo, Error as CoreError, Geometry};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use output::{Cell, Dataset};

#[derive(Parser)]
#[command(name = "casimir", version, about = "Plane-sphere Casimir free energy beyond the proximity-force approximation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Zero-frequency TE free energy: exact solver vs asymptotic form over an x-grid
    Fig2(Fig2Args),
    /// Thermal beyond-PFA correction over a tau-grid at fixed x
    Fig3(Fig3Args),
    /// Single-point thermal correction with its assembly ingredients
    Delta(DeltaArgs),
    /// NTLO entropy over a tau-grid, or at a single tau
    Entropy(EntropyArgs),
    /// Zero-frequency solver detail at one aspect ratio
    Zerofreq(ZerofreqArgs),
    /// Saddle-point expansion reference families
    SpaDemo(SpaDemoArgs),
    /// Run the cross-validation suite
    Validate(ValidateArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct OutputArgs {
    /// Output path, or "-" for stdout
    #[arg(long, default_value = "-")]
    out: String,
    /// Output format
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Also write a static SVG line plot to this path
    #[arg(long)]
    svg: Option<String>,
    /// Worker threads for grid sweeps; 0 picks the machine default
    #[arg(long, default_value_t = 0)]
    workers: usize,
}

#[derive(Args)]
struct ReferenceArgs {
    /// Reference CSV with a matching grid to diff against
    #[arg(long)]
    reference: Option<String>,
    /// Largest tolerated per-column relative deviation in the diff
    #[arg(long, default_value_t = 1e-9)]
    rtol_compare: f64,
}

#[derive(Args)]
struct Fig2Args {
    #[arg(long, default_value_t = 5e-3)]
    x_min: f64,
    #[arg(long, default_value_t = 0.2)]
    x_max: f64,
    #[arg(long, default_value_t = 10)]
    points: usize,
    /// Radial quadrature nodes of the zero-frequency solver
    #[arg(long, default_value_t = 64)]
    nystrom_nodes: usize,
    /// Azimuthal sector cap (default: automatic)
    #[arg(long)]
    m_max: Option<usize>,
    /// Relative tolerance for the sector-sum truncation
    #[arg(long, default_value_t = 1e-10)]
    rtol: f64,
    #[command(flatten)]
    output: OutputArgs,
    #[command(flatten)]
    reference: ReferenceArgs,
}

#[derive(Args)]
struct Fig3Args {
    #[arg(long, default_value_t = 1e-3)]
    x: f64,
    #[arg(long, default_value_t = 1e-2)]
    tau_min: f64,
    #[arg(long, default_value_t = 0.3)]
    tau_max: f64,
    #[arg(long, default_value_t = 25)]
    points: usize,
    #[command(flatten)]
    output: OutputArgs,
    #[command(flatten)]
    reference: ReferenceArgs,
}

#[derive(Args)]
struct DeltaArgs {
    #[arg(long, default_value_t = 1e-3)]
    x: f64,
    #[arg(long, default_value_t = 3e-2)]
    tau: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct EntropyArgs {
    #[arg(long, default_value_t = 1e-3)]
    x: f64,
    /// Evaluate at a single tau instead of a grid
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long, default_value_t = 1e-2)]
    tau_min: f64,
    #[arg(long, default_value_t = 0.3)]
    tau_max: f64,
    #[arg(long, default_value_t = 25)]
    points: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct ZerofreqArgs {
    #[arg(long, default_value_t = 0.1)]
    x: f64,
    #[arg(long, default_value_t = 64)]
    nystrom_nodes: usize,
    #[arg(long)]
    m_max: Option<usize>,
    #[arg(long, default_value_t = 1e-10)]
    rtol: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SpaDemoArgs {
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    output: OutputArgs,
}

/// Echo of the effective run parameters, written into every output header.
/// Execution details that cannot change the data (worker count, paths) are
/// deliberately excluded so reruns stay byte-identical.
#[derive(Serialize)]
struct RunSpec {
    command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    x: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tau: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    x_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    x_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tau_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tau_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    nystrom_nodes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    m_max: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rtol: Option<f64>,
    format: Format,
}

impl RunSpec {
    fn new(command: &'static str, format: Format) -> Self {
        RunSpec {
            command,
            x: None,
            tau: None,
            x_min: None,
            x_max: None,
            tau_min: None,
            tau_max: None,
            points: None,
            nystrom_nodes: None,
            m_max: None,
            rtol: None,
            format,
        }
    }
}

enum CliError {
    Core(CoreError),
    Usage(String),
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(CoreError::Numeric(_)) => 3,
            CliError::Core(_) | CliError::Usage(_) => 2,
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Core(e) => e.to_string(),
            CliError::Usage(m) => m.clone(),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

const CONVENTIONS: &str = "conventions: zero-frequency free energies are reported UNHALVED (the 1/2 \
weight of the n = 0 Matsubara term is applied only when full free energies are assembled); \
energies are per k_BT unless the column name says otherwise";

fn standard_comments(d: &mut Dataset, spec: &RunSpec) {
    d.comment(format!("casimir v{}", env!("CARGO_PKG_VERSION")));
    d.comment(format!(
        "spec: {}",
        serde_json::to_string(spec).expect("RunSpec serializes")
    ));
    d.comment(CONVENTIONS);
}

fn log_grid(min: f64, max: f64, points: usize, what: &str) -> CliResult<Vec<f64>> {
    if !(min.is_finite() && max.is_finite() && min > 0.0 && min < max) {
        return Err(CliError::usage(format!(
            "{what} grid needs 0 < min < max, got [{min}, {max}]"
        )));
    }
    if points < 2 {
        return Err(CliError::usage(format!(
            "{what} grid needs at least 2 points, got {points}"
        )));
    }
    let ratio = max / min;
    let span = (points - 1) as f64;
    Ok((0..points)
        .map(|i| min * ratio.powf(i as f64 / span))
        .collect())
}

fn check_rtol(rtol: f64) -> CliResult<()> {
    if !(1e-14..=1e-6).contains(&rtol) {
        return Err(CliError::usage(format!(
            "rtol must lie in [1e-14, 1e-6], got {rtol:e}"
        )));
    }
    Ok(())
}

fn worker_pool(workers: usize) -> CliResult<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if workers > 0 {
        builder = builder.num_threads(workers);
    }
    builder
        .build()
        .map_err(|e| CliError::usage(format!("cannot build worker pool: {e}")))
}

/// Evaluate `f` over the grid in parallel, preserving grid order.
fn sweep<F>(pool: &rayon::ThreadPool, grid: &[f64], f: F) -> Vec<Result<Vec<f64>, String>>
where
    F: Fn(f64) -> Result<Vec<f64>, String> + Sync,
{
    pool.install(|| grid.par_iter().map(|&g| f(g)).collect())
}

/// Push sweep results as rows; failed points are flagged in the header and
/// hold NaN cells. Returns whether any point failed.
fn assemble_rows(
    d: &mut Dataset,
    grid: &[f64],
    results: Vec<Result<Vec<f64>, String>>,
) -> bool {
    let ncols = d.columns.len();
    let mut any_failed = false;
    for (g, res) in grid.iter().zip(results) {
        match res {
            Ok(row) => d.push_row(row.into_iter().map(Cell::from).collect()),
            Err(msg) => {
                any_failed = true;
                d.comment(format!("failed point: {msg}"));
                let mut row = vec![Cell::from(*g)];
                row.extend(std::iter::repeat_with(|| Cell::from(f64::NAN)).take(ncols - 1));
                d.push_row(row);
            }
        }
    }
    any_failed
}

fn write_dataset(d: &Dataset, spec: &RunSpec, out: &OutputArgs) -> CliResult<()> {
    let text = match out.format {
        Format::Csv => d.to_csv(),
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&d.to_json(spec))
                .expect("dataset serializes");
            s.push('\n');
            s
        }
    };
    output::write_text(&out.out, &text)
        .map_err(|e| CliError::usage(format!("cannot write {}: {e}", out.out)))?;
    if let Some(path) = &out.svg {
        match svg::render(d, spec.command) {
            Some(svg_text) => output::write_text(path, &svg_text)
                .map_err(|e| CliError::usage(format!("cannot write {path}: {e}")))?,
            None => log::warn!("no plottable data; SVG {path} not written"),
        }
    }
    Ok(())
}

/// Diff the dataset against a reference CSV. Returns exit code 1 when any
/// column deviates beyond the tolerance.
fn compare_reference(d: &Dataset, args: &ReferenceArgs) -> CliResult<u8> {
    let Some(path) = &args.reference else {
        return Ok(0);
    };
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read reference {path}: {e}")))?;
    let rows = output::parse_reference_csv(&text).map_err(CliError::Usage)?;
    let devs = output::compare_to_reference(d, &rows).map_err(CliError::Usage)?;
    let mut code = 0;
    // Diagnostics go to stderr so `--out -` keeps stdout pure data.
    for (name, dev) in &devs {
        let verdict = if *dev <= args.rtol_compare { "ok" } else { "FAIL" };
        eprintln!("column {name}: max relative deviation {dev:e} ({verdict})");
        if *dev > args.rtol_compare {
            code = 1;
        }
    }
    Ok(code)
}

fn geom_at(x: f64) -> Geometry {
    Geometry { l: x, r: 1.0, x }
}

fn run_fig2(args: Fig2Args) -> CliResult<u8> {
    check_rtol(args.rtol)?;
    if args.x_max > 0.5 {
        return Err(CliError::usage(format!(
            "the zero-frequency solver is specified for x <= 0.5, got x-max {}",
            args.x_max
        )));
    }
    let grid = log_grid(args.x_min, args.x_max, args.points, "x")?;
    let mut spec = RunSpec::new("fig2", args.output.format);
    spec.x_min = Some(args.x_min);
    spec.x_max = Some(args.x_max);
    spec.points = Some(args.points);
    spec.nystrom_nodes = Some(args.nystrom_nodes);
    spec.m_max = args.m_max;
    spec.rtol = Some(args.rtol);

    let cfg = NystromConfig {
        n_nodes: args.nystrom_nodes,
        m_max: args.m_max,
        det_tol: args.rtol,
        ..Default::default()
    };
    cfg.validate()?;

    let pool = worker_pool(args.output.workers)?;
    let results = sweep(&pool, &grid, |x| {
        let compute = || -> casimir_core::Result<Vec<f64>> {
            let exact = zerofreq::f0_te_exact(&geom_at(x), &cfg)?.value;
            let asympt = zerofreq::f0_te_asympt(x, AsymptoticOrder::Full)?;
            Ok(vec![x, exact, asympt, exact - asympt])
        };
        compute().map_err(|e| format!("x = {x}: {e}"))
    });

    let mut d = Dataset::new(vec![
        "x",
        "f0_te_exact_per_kBT",
        "f0_te_asympt_per_kBT",
        "difference",
    ]);
    standard_comments(&mut d, &spec);
    d.comment(
        "f0_te_exact is the Nystrom log-determinant sum over azimuthal sectors; \
         f0_te_asympt is its full asymptotic form; difference = exact - asymptotic",
    );
    let any_failed = assemble_rows(&mut d, &grid, results);
    write_dataset(&d, &spec, &args.output)?;
    let cmp = compare_reference(&d, &args.reference)?;
    Ok(if any_failed { 3 } else { cmp })
}

fn run_fig3(args: Fig3Args) -> CliResult<u8> {
    let grid = log_grid(args.tau_min, args.tau_max, args.points, "tau")?;
    let mut spec = RunSpec::new("fig3", args.output.format);
    spec.x = Some(args.x);
    spec.tau_min = Some(args.tau_min);
    spec.tau_max = Some(args.tau_max);
    spec.points = Some(args.points);

    let x = args.x;
    let pool = worker_pool(args.output.workers)?;
    let results = sweep(&pool, &grid, |tau| {
        thermo::delta(x, tau)
            .map(|d| vec![tau, d.delta_formula, d.delta_assembled, d.delta_n_positive])
            .map_err(|e| format!("tau = {tau}: {e}"))
    });

    let mut d = Dataset::new(vec![
        "tau",
        "delta_formula",
        "delta_assembled",
        "delta_n_positive",
    ]);
    standard_comments(&mut d, &spec);
    d.comment(format!("fixed aspect ratio x = {x}"));
    d.comment(
        "analytic curves only: delta_formula is the closed small-tau law, \
         delta_assembled combines the computed zero-frequency and positive-mode \
         pieces; the numerically exact finite-frequency solver is out of scope \
         for this artifact",
    );
    let any_failed = assemble_rows(&mut d, &grid, results);
    write_dataset(&d, &spec, &args.output)?;
    let cmp = compare_reference(&d, &args.reference)?;
    Ok(if any_failed { 3 } else { cmp })
}

fn run_delta(args: DeltaArgs) -> CliResult<u8> {
    let mut spec = RunSpec::new("delta", args.output.format);
    spec.x = Some(args.x);
    spec.tau = Some(args.tau);

    let r = thermo::delta(args.x, args.tau)?;
    let mut d = Dataset::new(vec![
        "x",
        "tau",
        "delta_formula",
        "delta_assembled",
        "delta_n_positive",
        "pfa_thermal_per_hbar_c_over_L",
        "d_te_thermal_per_hbar_c_over_L",
        "d_tm_thermal_per_hbar_c_over_L",
        "go_thermal_per_hbar_c_over_L",
        "zero_freq_thermal_per_hbar_c_over_L",
    ]);
    standard_comments(&mut d, &spec);
    d.comment(
        "parts columns are the assembly ingredients: the proximity free energy \
         at tau, the thermal shifts of the three positive-mode NTLO components, \
         and the thermal zero-frequency beyond-PFA term",
    );
    d.push_row(
        vec![
            r.x,
            r.tau,
            r.delta_formula,
            r.delta_assembled,
            r.delta_n_positive,
            r.parts.pfa,
            r.parts.d_te,
            r.parts.d_tm,
            r.parts.go,
            r.parts.zero_freq,
        ]
        .into_iter()
        .map(Cell::from)
        .collect(),
    );
    write_dataset(&d, &spec, &args.output)?;
    Ok(0)
}

fn run_entropy(args: EntropyArgs) -> CliResult<u8> {
    let grid = match args.tau {
        Some(tau) => vec![tau],
        None => log_grid(args.tau_min, args.tau_max, args.points, "tau")?,
    };
    let mut spec = RunSpec::new("entropy", args.output.format);
    spec.x = Some(args.x);
    match args.tau {
        Some(tau) => spec.tau = Some(tau),
        None => {
            spec.tau_min = Some(args.tau_min);
            spec.tau_max = Some(args.tau_max);
            spec.points = Some(args.points);
        }
    }

    let mut d = Dataset::new(vec!["tau", "entropy_per_kB"]);
    standard_comments(&mut d, &spec);
    d.comment(format!(
        "NTLO beyond-PFA entropy at x = {}; positive at very small tau, the sign change is the TE zero-mode entropy anomaly",
        args.x
    ));
    for &tau in &grid {
        let s = thermo::entropy_ntlo(args.x, tau)?;
        d.push_row(vec![tau.into(), s.into()]);
    }
    write_dataset(&d, &spec, &args.output)?;
    Ok(0)
}

fn run_zerofreq(args: ZerofreqArgs) -> CliResult<u8> {
    check_rtol(args.rtol)?;
    let mut spec = RunSpec::new("zerofreq", args.output.format);
    spec.x = Some(args.x);
    spec.nystrom_nodes = Some(args.nystrom_nodes);
    spec.m_max = args.m_max;
    spec.rtol = Some(args.rtol);

    let cfg = NystromConfig {
        n_nodes: args.nystrom_nodes,
        m_max: args.m_max,
        det_tol: args.rtol,
        ..Default::default()
    };
    cfg.validate()?;
    let exact = zerofreq::f0_te_exact(&geom_at(args.x), &cfg)?;

    let mut d = Dataset::new(vec![
        "x",
        "f0_te_exact_per_kBT",
        "m_used",
        "spectral_radius_sector0",
        "convergence_estimate",
        "f0_te_asympt_lo",
        "f0_te_asympt_ntlo",
        "f0_te_asympt_full",
        "f0_tm_asympt",
        "f0_total_asympt",
    ]);
    standard_comments(&mut d, &spec);
    d.comment(
        "convergence_estimate is the shift under rerunning with half the radial \
         nodes; asymptotic columns are the small-x closed forms",
    );
    d.push_row(vec![
        args.x.into(),
        exact.value.into(),
        (exact.m_used as f64).into(),
        exact.spectral_radius_sector0.into(),
        exact.convergence_estimate.into(),
        zerofreq::f0_te_asympt(args.x, AsymptoticOrder::Lo)?.into(),
        zerofreq::f0_te_asympt(args.x, AsymptoticOrder::Ntlo)?.into(),
        zerofreq::f0_te_asympt(args.x, AsymptoticOrder::Full)?.into(),
        zerofreq::f0_tm_asympt(args.x)?.into(),
        zerofreq::f0_total_asympt(args.x)?.into(),
    ]);
    write_dataset(&d, &spec, &args.output)?;
    Ok(0)
}

fn run_spa_demo(args: SpaDemoArgs) -> CliResult<u8> {
    let spec = RunSpec::new("spa-demo", args.output.format);
    let mut d = Dataset::new(vec![
        "family",
        "large_param",
        "lo",
        "ntlo_over_lo",
        "reference_ratio",
    ]);
    standard_comments(&mut d, &spec);
    d.comment(
        "reference_ratio is the analytic NTLO/LO value each family must \
         reproduce: 0 for a pure Gaussian, 1/12 for the gamma family, \
         -3 alpha (alpha = 0.01) for the quartic perturbation",
    );

    let g = |_: &[f64]| 1.0;
    let families: [(&'static str, &dyn Fn(&[f64]) -> f64, f64, f64, f64); 3] = [
        ("gaussian", &|x: &[f64]| 0.5 * x[0] * x[0], 0.0, 20.0, 0.0),
        ("gamma", &|x: &[f64]| x[0] - x[0].ln(), 1.0, 10.0, 1.0 / 12.0),
        (
            "quartic",
            &|x: &[f64]| 0.5 * x[0] * x[0] + 0.01 * x[0].powi(4),
            0.0,
            50.0,
            -0.03,
        ),
    ];
    for (name, f, sp, big_r, reference) in families {
        let p = spa::SaddleProblem::new(1, f, &g, vec![sp], big_r)?;
        let t = spa::derivative_tensors(&p, 0.01)?;
        let lo = spa::lo_spa(&p, &t)?;
        let ratio = spa::ntlo_spa(&p, &t)? / lo;
        d.push_row(vec![
            Cell::Text(name),
            big_r.into(),
            lo.into(),
            ratio.into(),
            reference.into(),
        ]);
    }
    write_dataset(&d, &spec, &args.output)?;
    Ok(0)
}

fn run_validate(args: ValidateArgs) -> CliResult<u8> {
    let results = report::validation_suite();
    let text = match args.output.format {
        Format::Json => {
            let mut s =
                serde_json::to_string_pretty(&results).expect("check results serialize");
            s.push('\n');
            s
        }
        Format::Csv => {
            let mut s = String::new();
            for r in &results {
                let verdict = if r.passed { "PASS" } else { "FAIL" };
                s.push_str(&format!(
                    "{verdict} {} (achieved {:e}, required {:e}): {}\n",
                    r.name, r.achieved, r.required, r.detail
                ));
            }
            let n_pass = results.iter().filter(|r| r.passed).count();
            s.push_str(&format!("summary: {n_pass}/{} passed\n", results.len()));
            s
        }
    };
    output::write_text(&args.output.out, &text)
        .map_err(|e| CliError::usage(format!("cannot write {}: {e}", args.output.out)))?;
    Ok(if report::all_passed(&results) { 0 } else { 1 })
}

struct StderrLog;

impl log::Log for StderrLog {
    fn enabled(&self, metadata: &log::Metadata) -> bool {
        metadata.level() <= log::Level::Warn
    }

    fn log(&self, record: &log::Record) {
        if self.enabled(record.metadata()) {
            eprintln!("{}: {}", record.level().as_str().to_lowercase(), record.args());
        }
    }

    fn flush(&self) {}
}

static LOGGER: StderrLog = StderrLog;

fn main() -> ExitCode {
    if log::set_logger(&LOGGER).is_ok() {
        log::set_max_level(log::LevelFilter::Warn);
    }
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Fig2(a) => run_fig2(a),
        Command::Fig3(a) => run_fig3(a),
        Command::Delta(a) => run_delta(a),
        Command::Entropy(a) => run_entropy(a),
        Command::Zerofreq(a) => run_zerofreq(a),
        Command::SpaDemo(a) => run_spa_demo(a),
        Command::Validate(a) => run_validate(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
