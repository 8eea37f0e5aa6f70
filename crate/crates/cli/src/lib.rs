//! Command-line front end for `qkd-ratelab`.
//!
//! [`run`] parses arguments, executes one subcommand and returns the process
//! exit code: 0 on success, 2 for invalid input, 3 when a model is evaluated
//! outside its domain, 4 for I/O failures.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use qkd_ratelab::{
    cv_key_rate, dv_key_rate, find_cutoff, optimize_intensities, run_sweep, tgw_bound,
    BracketFailure, ChannelPair, Intensities, Model, ModelParams, RateSeries, Scenario, SweepSpec,
};

pub mod config;
pub mod figures;
pub mod output;

pub use config::RunConfig;

pub const THREADS_ENV: &str = "QKD_RATELAB_THREADS";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Model(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Model(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl From<qkd_ratelab::Error> for CliError {
    fn from(e: qkd_ratelab::Error) -> Self {
        if e.is_validation() {
            CliError::Validation(e.to_string())
        } else {
            CliError::Model(e.to_string())
        }
    }
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

#[derive(Debug, Parser)]
#[command(name = "qkd-ratelab", version, about = "Secret-key rates for DV and CV MDI-QKD")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate one model at one channel.
    Point(PointArgs),
    /// Evaluate a model over a loss or distance axis and write CSV.
    Sweep(SweepArgs),
    /// Locate the loss at which the rate reaches zero.
    Cutoff(CutoffArgs),
    /// Write the CSV and SVG bundles for the standard figures.
    Reproduce(ReproduceArgs),
}

/// Device, fiber and optimizer overrides shared by all subcommands.
#[derive(Debug, Args)]
struct ParamArgs {
    /// Flat `key = value` config file; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dv_eta_d: Option<String>,
    #[arg(long)]
    dv_e_d: Option<String>,
    #[arg(long)]
    dv_y0: Option<String>,
    #[arg(long)]
    dv_f_e: Option<String>,
    #[arg(long)]
    cv_eta_d: Option<String>,
    #[arg(long)]
    cv_epsilon: Option<String>,
    #[arg(long)]
    cv_phi: Option<String>,
    #[arg(long)]
    cv_xi: Option<String>,
    /// Fiber attenuation in dB/km.
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    mu_min: Option<String>,
    #[arg(long)]
    mu_max: Option<String>,
    #[arg(long)]
    grid_points: Option<String>,
    #[arg(long)]
    refine_iterations: Option<String>,
    #[arg(long)]
    refine_tolerance: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    restarts: Option<String>,
}

impl ParamArgs {
    fn into_config(self, extra: Vec<(&'static str, Option<String>)>) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        cfg.overlay([
            ("dv.eta_d", self.dv_eta_d),
            ("dv.e_d", self.dv_e_d),
            ("dv.y0", self.dv_y0),
            ("dv.f_e", self.dv_f_e),
            ("cv.eta_d", self.cv_eta_d),
            ("cv.epsilon", self.cv_epsilon),
            ("cv.phi", self.cv_phi),
            ("cv.xi", self.cv_xi),
            ("fiber.alpha", self.alpha),
            ("optimizer.mu_min", self.mu_min),
            ("optimizer.mu_max", self.mu_max),
            ("optimizer.grid_points", self.grid_points),
            ("optimizer.refine_iterations", self.refine_iterations),
            ("optimizer.refine_tolerance", self.refine_tolerance),
            ("optimizer.seed", self.seed),
            ("optimizer.restarts", self.restarts),
        ])?;
        cfg.overlay(extra)?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
struct PointArgs {
    /// dv, cv or tgw.
    #[arg(long)]
    model: Option<String>,
    /// asymmetric (relay at Alice) or symmetric.
    #[arg(long)]
    scenario: Option<String>,
    /// Total loss between the users in dB.
    #[arg(long)]
    loss_db: Option<String>,
    /// Total distance between the users in km.
    #[arg(long)]
    distance_km: Option<String>,
    /// Alice-relay distance in km (with --l-b).
    #[arg(long)]
    l_a: Option<String>,
    /// Bob-relay distance in km (with --l-a).
    #[arg(long)]
    l_b: Option<String>,
    /// Fixed DV intensities instead of optimizing.
    #[arg(long)]
    mu_a: Option<String>,
    #[arg(long)]
    mu_b: Option<String>,
    /// Optimize DV intensities (the default when none are given).
    #[arg(long)]
    optimize: bool,
    /// Also write the breakdown as a one-row CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[command(flatten)]
    params: ParamArgs,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    scenario: Option<String>,
    /// loss (total dB) or distance (total km).
    #[arg(long)]
    axis: Option<String>,
    #[arg(long)]
    start: Option<String>,
    #[arg(long)]
    stop: Option<String>,
    #[arg(long)]
    points: Option<String>,
    /// CSV destination; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
    #[command(flatten)]
    params: ParamArgs,
}

#[derive(Debug, Args)]
struct CutoffArgs {
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    scenario: Option<String>,
    /// Lower end of the loss bracket in dB.
    #[arg(long)]
    lo: Option<String>,
    /// Upper end of the loss bracket in dB.
    #[arg(long)]
    hi: Option<String>,
    #[command(flatten)]
    params: ParamArgs,
}

#[derive(Debug, Args)]
struct ReproduceArgs {
    /// Comma-separated figure ids (1a,1b,1c,1d,2a,2b) or `all`.
    #[arg(long)]
    figure: Option<String>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Comma-separated detector efficiencies for figures 2a and 2b.
    #[arg(long)]
    eta_d_values: Option<String>,
    #[command(flatten)]
    params: ParamArgs,
}

fn path_string(p: Option<PathBuf>) -> Option<String> {
    p.map(|p| p.to_string_lossy().into_owned())
}

/// Runs the CLI and returns the exit code. Normal output goes to `out`,
/// diagnostics to standard error.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            if code == 0 {
                let _ = write!(out, "{e}");
            } else {
                eprint!("{e}");
            }
            return code;
        }
    };
    // Commands write into a buffer so the closure can move to a pool thread.
    let mut buf = Vec::new();
    let result = with_thread_pool(|| dispatch(cli.command, &mut buf));
    if let Err(e) = out.write_all(&buf).and_then(|()| out.flush()) {
        eprintln!("error: stdout: {e}");
        return 4;
    }
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn with_thread_pool<T: Send>(f: impl FnOnce() -> Result<T, CliError> + Send) -> Result<T, CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return f();
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Validation(format!("{THREADS_ENV} must be a positive integer, got `{raw}`")))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Io(format!("cannot start worker pool: {e}")))?;
    pool.install(f)
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Point(a) => cmd_point(a, out),
        Command::Sweep(a) => cmd_sweep(a, out),
        Command::Cutoff(a) => cmd_cutoff(a, out),
        Command::Reproduce(a) => cmd_reproduce(a, out),
    }
}

fn print_line(out: &mut dyn Write, line: impl std::fmt::Display) -> Result<(), CliError> {
    writeln!(out, "{line}").map_err(|e| CliError::Io(format!("stdout: {e}")))
}

fn resolve_channel(cfg: &RunConfig, scenario: Scenario) -> Result<ChannelPair, CliError> {
    let fiber = cfg.fiber()?;
    let given: Vec<&str> = ["loss_db", "distance_km", "l_a", "l_b"]
        .into_iter()
        .filter(|k| cfg.has(k))
        .collect();
    match given.as_slice() {
        ["loss_db"] => Ok(ChannelPair::from_total_loss(cfg.f64_or("loss_db", 0.0)?, scenario)
            .map_err(|e| CliError::Validation(format!("`loss_db`: {e}")))?),
        ["distance_km"] => {
            let km = cfg.f64_or("distance_km", 0.0)?;
            let loss = fiber
                .loss_db(km)
                .map_err(|e| CliError::Validation(format!("`distance_km`: {e}")))?;
            Ok(ChannelPair::from_total_loss(loss, scenario)?)
        }
        ["l_a", "l_b"] => Ok(ChannelPair::from_distances(
            cfg.f64_or("l_a", 0.0)?,
            cfg.f64_or("l_b", 0.0)?,
            fiber,
        )
        .map_err(|e| CliError::Validation(format!("`l_a`/`l_b`: {e}")))?),
        [] => Err(CliError::Validation(
            "missing channel: give `loss_db`, `distance_km`, or both `l_a` and `l_b`".into(),
        )),
        other => Err(CliError::Validation(format!(
            "conflicting channel keys: {}",
            other.join(", ")
        ))),
    }
}

fn cmd_point(a: PointArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = a.params.into_config(vec![
        ("model", a.model),
        ("scenario", a.scenario),
        ("loss_db", a.loss_db),
        ("distance_km", a.distance_km),
        ("l_a", a.l_a),
        ("l_b", a.l_b),
        ("mu_a", a.mu_a),
        ("mu_b", a.mu_b),
        ("optimize", a.optimize.then(|| "true".to_string())),
        ("csv", path_string(a.csv)),
    ])?;
    let model = cfg.model()?;
    let scenario = cfg.scenario()?;
    let params = cfg.model_params()?;
    let channel = resolve_channel(&cfg, scenario)?;

    let mut fields: Vec<(&str, String)> = vec![
        ("model", model.as_str().into()),
        ("scenario", scenario.as_str().into()),
        ("eta_a", output::fmt_num(channel.eta_a())),
        ("eta_b", output::fmt_num(channel.eta_b())),
    ];
    match model {
        Model::Dv => point_dv(&cfg, &channel, &params, &mut fields)?,
        Model::Cv => {
            let b = cv_key_rate(&channel, &params.cv)?;
            fields.extend([
                ("branch", b.branch.as_str().into()),
                ("chi", output::fmt_num(b.chi)),
                ("i_ab", output::fmt_num(b.i_ab)),
                ("i_e", output::fmt_num(b.i_e)),
                ("rate", output::fmt_num(b.rate)),
                ("secure_rate", output::fmt_num(b.secure_rate())),
            ]);
        }
        Model::Tgw => fields.push(("rate", output::fmt_num(tgw_bound(&channel)))),
    }

    let width = fields.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    for (k, v) in &fields {
        print_line(out, format_args!("{k:<width$}  {v}"))?;
    }
    if let Some(path) = cfg.raw("csv") {
        let path = Path::new(path);
        let file = File::create(path).map_err(|e| io_error(path, e))?;
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(file);
        w.write_record(fields.iter().map(|(k, _)| *k)).map_err(|e| io_error(path, e))?;
        w.write_record(fields.iter().map(|(_, v)| v.as_str())).map_err(|e| io_error(path, e))?;
        w.flush().map_err(|e| io_error(path, e))?;
    }
    Ok(())
}

fn point_dv(
    cfg: &RunConfig,
    channel: &ChannelPair,
    params: &ModelParams,
    fields: &mut Vec<(&'static str, String)>,
) -> Result<(), CliError> {
    let fixed = match (cfg.f64("mu_a")?, cfg.f64("mu_b")?) {
        (None, None) => None,
        (Some(a), Some(b)) => {
            if cfg.bool_or("optimize", false)? {
                return Err(CliError::Validation(
                    "`optimize` conflicts with fixed `mu_a`/`mu_b`".into(),
                ));
            }
            Some(Intensities::new(a, b).map_err(|e| CliError::Validation(format!("`mu_a`/`mu_b`: {e}")))?)
        }
        _ => {
            return Err(CliError::Validation("`mu_a` and `mu_b` must be given together".into()));
        }
    };
    let (mu, b) = match fixed {
        Some(mu) => (mu, dv_key_rate(channel, &params.dv, &mu)?),
        None => {
            let opt = optimize_intensities(channel, &params.dv, &params.optimizer)?;
            (opt.mu, opt.breakdown)
        }
    };
    fields.extend([
        ("mu_a", output::fmt_num(mu.mu_a())),
        ("mu_b", output::fmt_num(mu.mu_b())),
        ("p11", output::fmt_num(b.p11)),
        ("y11", output::fmt_num(b.y11)),
        ("e11x", output::fmt_num(b.e11x)),
        ("gain_z", output::fmt_num(b.gain_z)),
        ("qber_z", output::fmt_num(b.qber_z)),
        ("rate", output::fmt_num(b.rate)),
        ("secure_rate", output::fmt_num(b.secure_rate())),
    ]);
    Ok(())
}

fn sweep_spec(cfg: &RunConfig) -> Result<SweepSpec, CliError> {
    let number = |key: &str| -> Result<f64, CliError> {
        cfg.f64(key)?
            .ok_or_else(|| CliError::Validation(format!("missing required key `{key}`")))
    };
    let points = cfg.usize_or("points", 0)?;
    if !cfg.has("points") {
        return Err(CliError::Validation("missing required key `points`".into()));
    }
    let spec = SweepSpec {
        model: cfg.model()?,
        scenario: cfg.scenario()?,
        axis: cfg.axis()?,
        start: number("start")?,
        stop: number("stop")?,
        points,
        fiber: cfg.fiber()?,
        params: cfg.model_params()?,
    };
    spec.validate()?;
    Ok(spec)
}

fn write_file(path: &Path, write: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| io_error(path, e))?;
    let mut w = BufWriter::new(file);
    write(&mut w).and_then(|()| w.flush()).map_err(|e| io_error(path, e))
}

pub(crate) fn write_series_csv(path: &Path, series: &RateSeries) -> Result<(), CliError> {
    write_file(path, |w| output::write_csv(series, w).map_err(std::io::Error::other))
}

pub(crate) fn write_svg(path: &Path, svg: &str) -> Result<(), CliError> {
    write_file(path, |w| w.write_all(svg.as_bytes()))
}

fn cmd_sweep(a: SweepArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = a.params.into_config(vec![
        ("model", a.model),
        ("scenario", a.scenario),
        ("axis", a.axis),
        ("start", a.start),
        ("stop", a.stop),
        ("points", a.points),
        ("out", path_string(a.out)),
        ("svg", path_string(a.svg)),
    ])?;
    let spec = sweep_spec(&cfg)?;
    let series = run_sweep(&spec)?;
    match cfg.raw("out") {
        Some(path) => write_series_csv(Path::new(path), &series)?,
        None => output::write_csv(&series, &mut *out).map_err(|e| CliError::Io(format!("stdout: {e}")))?,
    }
    if let Some(path) = cfg.raw("svg") {
        let title = format!("{} ({})", spec.model.as_str().to_uppercase(), spec.scenario);
        let curve = output::Curve { label: spec.model.as_str().to_uppercase(), series: &series };
        write_svg(Path::new(path), &output::render_svg(&title, figures::axis_label(spec.axis), &[curve]))?;
    }
    let invalid = series.rows.iter().filter(|r| r.rate_signed.is_none()).count();
    if invalid > 0 {
        eprintln!("warning: {invalid} of {} points outside the model domain", series.rows.len());
    }
    Ok(())
}

/// Upper end of the default cutoff bracket, in dB.
pub const DEFAULT_CUTOFF_HI_DB: f64 = 40.0;

fn cmd_cutoff(a: CutoffArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = a.params.into_config(vec![
        ("model", a.model),
        ("scenario", a.scenario),
        ("lo", a.lo),
        ("hi", a.hi),
    ])?;
    let model = cfg.model()?;
    let scenario = cfg.scenario()?;
    let params = cfg.model_params()?;
    let fiber = cfg.fiber()?;
    let lo = cfg.f64_or("lo", 0.0)?;
    let hi = cfg.f64_or("hi", DEFAULT_CUTOFF_HI_DB)?;
    match find_cutoff(model, scenario, &params, lo, hi) {
        Ok(db) => print_line(
            out,
            format_args!(
                "{db:.4} dB ({:.4} km @{} dB/km)",
                fiber.length_km(db),
                output::fmt_num(fiber.alpha())
            ),
        ),
        Err(qkd_ratelab::Error::Bracket(BracketFailure::NonPositiveAtOrigin { loss_db, rate })) => print_line(
            out,
            format_args!(
                "non-positive rate at origin (no bracket): rate {} at {} dB",
                output::fmt_num(rate),
                output::fmt_num(loss_db)
            ),
        ),
        Err(qkd_ratelab::Error::Bracket(BracketFailure::BeyondBracket { loss_db, rate })) => print_line(
            out,
            format_args!(
                "beyond bracket: rate still {} at {} dB",
                output::fmt_num(rate),
                output::fmt_num(loss_db)
            ),
        ),
        Err(e) => Err(e.into()),
    }
}

fn cmd_reproduce(a: ReproduceArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = a.params.into_config(vec![
        ("figure", a.figure),
        ("out_dir", path_string(a.out_dir)),
        ("fig2.eta_d_values", a.eta_d_values),
    ])?;
    let figures = figures::parse_figure_list(cfg.required("figure")?)?;
    let out_dir = PathBuf::from(cfg.required("out_dir")?);
    let params = cfg.model_params()?;
    let eta_values = match cfg.raw("fig2.eta_d_values") {
        Some(list) => figures::parse_eta_list(list)?,
        None => figures::DEFAULT_FIG2_ETA_D.to_vec(),
    };
    std::fs::create_dir_all(&out_dir).map_err(|e| io_error(&out_dir, e))?;
    for fig in figures {
        for path in figures::reproduce(fig, &params, &eta_values, &out_dir)? {
            print_line(out, path.display())?;
        }
    }
    Ok(())
}
