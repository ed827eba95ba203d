//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage error or infeasible request, 2 result
//! written but the λ-ratio stop never fired, 3 I/O or input parse failure.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::embedding::{
    costs_to_probs, probs_to_costs, simulate_embedding, smooth_costs, CostMap,
    DEFAULT_SMOOTHING_KERNEL,
};
use crate::error::{Error, Result};
use crate::estimation::{estimate_from_image, EstimationConfig, DEFAULT_BLOCK, DEFAULT_DEGREE};
use crate::fim::fim_clique;
use crate::image_io::{read_pgm, write_float_map, write_pgm, ImageGrid, DEFAULT_WIENER_WINDOW};
use crate::lattice::{tessellate, Sublattice, DEFAULT_BETA_T};
use crate::optimizer::{alternate_optimize, ChangeProbMap, Optimization, OptimizerConfig, PayloadTolerance, TraceRecord};
use crate::oracle::{perturbed_i12_kernel, verify, FimKernel};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "gmrf-stego", version, about = "GMRF-based adaptive image steganography")]
pub struct Cli {
    /// Cap on worker threads.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the variance and correlation maps of a cover.
    Model(ModelArgs),
    /// Compute change probabilities for a payload.
    Probs(ProbsArgs),
    /// Simulate embedding at the payload-distortion bound.
    Embed(ProbsArgs),
    /// Run the oracle battery.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Args)]
pub struct EstimationArgs {
    /// Block size of the local polynomial fit.
    #[arg(long, default_value_t = DEFAULT_BLOCK)]
    pub block: usize,
    /// Total degree of the local polynomial fit.
    #[arg(long, default_value_t = DEFAULT_DEGREE)]
    pub degree: usize,
    /// Wiener filter window.
    #[arg(long, default_value_t = DEFAULT_WIENER_WINDOW)]
    pub wiener: usize,
}

impl EstimationArgs {
    fn config(&self) -> EstimationConfig {
        EstimationConfig {
            wiener_window: self.wiener,
            block: self.block,
            degree: self.degree,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// 8-bit binary PGM cover.
    pub input: PathBuf,
    #[command(flatten)]
    pub estimation: EstimationArgs,
    /// Also write the raw covariance maps.
    #[arg(long)]
    pub covariance: bool,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ProbsArgs {
    /// 8-bit binary PGM cover.
    pub input: PathBuf,
    /// Payload in bits per pixel, in (0, log2 3).
    #[arg(long)]
    pub payload: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub estimation: EstimationArgs,
    /// Clique activation threshold.
    #[arg(long, default_value_t = DEFAULT_BETA_T)]
    pub beta_t: f64,
    /// Smooth costs and re-derive probabilities.
    #[arg(long, overrides_with = "no_smooth")]
    pub smooth: bool,
    #[arg(long, overrides_with = "smooth")]
    pub no_smooth: bool,
    /// Cost smoothing kernel size.
    #[arg(long, default_value_t = DEFAULT_SMOOTHING_KERNEL)]
    pub kernel: usize,
    /// Also write the per-pixel active clique counts.
    #[arg(long)]
    pub dump_theta: bool,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// Swap in a closed form with i12 inflated by 5%.
    #[arg(long, hide = true)]
    pub inject_fault: bool,
}

/// Resolved settings of a `probs` / `embed` run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input: PathBuf,
    pub out_dir: PathBuf,
    pub payload_rate: f64,
    pub seed: u64,
    pub estimation: EstimationConfig,
    pub beta_t: f64,
    pub smooth: bool,
    pub kernel: usize,
    pub tolerance: PayloadTolerance,
    pub dump_theta: bool,
}

impl RunConfig {
    fn from_args(a: &ProbsArgs, smooth_default: bool) -> Result<Self> {
        let max_rate = 3f64.log2();
        if !(a.payload > 0.0 && a.payload < max_rate) {
            return Err(Error::InvalidParameter(format!(
                "payload rate {} outside (0, log2 3)",
                a.payload
            )));
        }
        let smooth = if a.smooth {
            true
        } else if a.no_smooth {
            false
        } else {
            smooth_default
        };
        Ok(Self {
            input: a.input.clone(),
            out_dir: a.out_dir.clone(),
            payload_rate: a.payload,
            seed: a.seed,
            estimation: a.estimation.config(),
            beta_t: a.beta_t,
            smooth,
            kernel: a.kernel,
            tolerance: PayloadTolerance::default(),
            dump_theta: a.dump_theta,
        })
    }
}

#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Io(_) | Error::Pgm(_) | Error::Gmap(_) => EXIT_IO,
            _ => EXIT_USAGE,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure {
        code: EXIT_IO,
        message: format!("{}: {e}", path.display()),
    }
}

fn read_cover(path: &Path) -> std::result::Result<ImageGrid, Failure> {
    let bytes = fs::read(path).map_err(|e| io_failure(path, e))?;
    Ok(read_pgm(&bytes)?)
}

fn write_file(path: &Path, bytes: &[u8]) -> std::result::Result<(), Failure> {
    fs::write(path, bytes).map_err(|e| io_failure(path, e))
}

fn prepare_outputs(
    out_dir: &Path,
    input: &Path,
    names: &[&str],
) -> std::result::Result<Vec<PathBuf>, Failure> {
    fs::create_dir_all(out_dir).map_err(|e| io_failure(out_dir, e))?;
    let paths: Vec<PathBuf> = names.iter().map(|n| out_dir.join(n)).collect();
    let canon = |p: &Path| fs::canonicalize(p).ok();
    if let Some(inp) = canon(input) {
        if paths.iter().any(|p| canon(p).as_ref() == Some(&inp)) {
            return Err(Failure {
                code: EXIT_USAGE,
                message: "an output would overwrite the input".into(),
            });
        }
    }
    Ok(paths)
}

#[derive(Serialize)]
struct ModelSummary {
    command: &'static str,
    width: usize,
    height: usize,
    variance_min: f64,
    variance_max: f64,
    variance_mean: f64,
    rho_h_min: f64,
    rho_h_max: f64,
    rho_h_mean: f64,
    rho_v_min: f64,
    rho_v_max: f64,
    rho_v_mean: f64,
}

fn cmd_model(a: &ModelArgs, out: &mut dyn Write) -> std::result::Result<i32, Failure> {
    let image = read_cover(&a.input)?;
    let model = estimate_from_image(&image, &a.estimation.config())?;
    let mut names = vec!["variance.gmap", "rho_h.gmap", "rho_v.gmap"];
    if a.covariance {
        names.extend(["cov_h.gmap", "cov_v.gmap"]);
    }
    let paths = prepare_outputs(&a.out_dir, &a.input, &names)?;
    let mut maps = vec![&model.variance, &model.rho_h, &model.rho_v];
    if a.covariance {
        maps.extend([&model.cov_h, &model.cov_v]);
    }
    for (p, m) in paths.iter().zip(maps) {
        write_file(p, &write_float_map(m))?;
    }
    let s = ModelSummary {
        command: "model",
        width: model.width(),
        height: model.height(),
        variance_min: model.variance.min(),
        variance_max: model.variance.max(),
        variance_mean: model.variance.mean(),
        rho_h_min: model.rho_h.min(),
        rho_h_max: model.rho_h.max(),
        rho_h_mean: model.rho_h.mean(),
        rho_v_min: model.rho_v.min(),
        rho_v_max: model.rho_v.max(),
        rho_v_mean: model.rho_v.mean(),
    };
    emit(out, &s)?;
    Ok(EXIT_OK)
}

struct Probabilities {
    optimization: Optimization,
    beta: ChangeProbMap,
    costs: CostMap,
    payload_target: f64,
}

fn compute_probabilities(cfg: &RunConfig, image: &ImageGrid) -> Result<Probabilities> {
    let model = estimate_from_image(image, &cfg.estimation)?;
    let partition = tessellate(image.width(), image.height())?;
    let n = image.len() as f64;
    let mut ocfg = OptimizerConfig::new(cfg.payload_rate * n).with_seed(cfg.seed);
    ocfg.beta_t = cfg.beta_t;
    ocfg.tolerance = cfg.tolerance;
    let optimization = alternate_optimize(&model, &partition, &ocfg)?;
    let raw_costs = probs_to_costs(&optimization.beta);
    let (beta, costs) = if cfg.smooth {
        let smoothed = smooth_costs(&raw_costs, cfg.kernel)?;
        let (beta, _) = costs_to_probs(&smoothed, ocfg.payload_bits, &cfg.tolerance)?;
        (beta, smoothed)
    } else {
        (optimization.beta.clone(), raw_costs)
    };
    Ok(Probabilities {
        optimization,
        beta,
        costs,
        payload_target: ocfg.payload_bits,
    })
}

fn trace_csv(trace: &[TraceRecord]) -> String {
    let mut s = String::from(TraceRecord::CSV_HEADER);
    s.push('\n');
    for r in trace {
        s.push_str(&r.csv_row());
        s.push('\n');
    }
    s
}

#[derive(Serialize)]
struct ProbsSummary {
    command: &'static str,
    width: usize,
    height: usize,
    payload_target: f64,
    payload_bits: f64,
    payload_a: f64,
    payload_b: f64,
    converged: bool,
    iterations: usize,
    lambda_a: f64,
    lambda_b: f64,
    smoothed: bool,
    beta_mean: f64,
    beta_max: f64,
}

fn probs_summary(command: &'static str, p: &Probabilities, smoothed: bool) -> ProbsSummary {
    let last = |which: Sublattice| {
        p.optimization
            .trace
            .iter()
            .rev()
            .find(|r| r.lattice == which)
            .map_or(f64::NAN, |r| r.lambda)
    };
    let w = p.beta.width();
    let mut halves = [0.0; 2];
    for (i, &b) in p.beta.values().iter().enumerate() {
        halves[((i / w) + (i % w)) % 2] += crate::optimizer::entropy_ternary(b);
    }
    ProbsSummary {
        command,
        width: w,
        height: p.beta.height(),
        payload_target: p.payload_target,
        payload_bits: p.beta.payload_bits(),
        payload_a: halves[0],
        payload_b: halves[1],
        converged: p.optimization.converged,
        iterations: p.optimization.iterations,
        lambda_a: last(Sublattice::A),
        lambda_b: last(Sublattice::B),
        smoothed,
        beta_mean: p.beta.grid().mean(),
        beta_max: p.beta.grid().max(),
    }
}

fn cmd_probs(a: &ProbsArgs, out: &mut dyn Write) -> std::result::Result<i32, Failure> {
    let cfg = RunConfig::from_args(a, false)?;
    let image = read_cover(&cfg.input)?;
    let mut names = vec!["beta.gmap", "trace.csv"];
    if cfg.dump_theta {
        names.push("theta.gmap");
    }
    let paths = prepare_outputs(&cfg.out_dir, &cfg.input, &names)?;
    let p = compute_probabilities(&cfg, &image)?;
    write_file(&paths[0], &write_float_map(p.beta.grid()))?;
    write_file(&paths[1], trace_csv(&p.optimization.trace).as_bytes())?;
    if cfg.dump_theta {
        write_file(&paths[2], &write_float_map(&p.optimization.active_clique_map()))?;
    }
    emit(out, &probs_summary("probs", &p, cfg.smooth))?;
    Ok(exit_for(&p.optimization))
}

#[derive(Serialize)]
struct EmbedSummary {
    #[serde(flatten)]
    probs: ProbsSummary,
    seed: u64,
    changed_pixels: usize,
    expected_changes: f64,
    change_rate_a: f64,
    change_rate_b: f64,
}

fn cmd_embed(a: &ProbsArgs, out: &mut dyn Write) -> std::result::Result<i32, Failure> {
    let cfg = RunConfig::from_args(a, true)?;
    let image = read_cover(&cfg.input)?;
    let mut names = vec!["stego.pgm", "changes.gmap", "costs.gmap", "beta.gmap", "trace.csv"];
    if cfg.dump_theta {
        names.push("theta.gmap");
    }
    let paths = prepare_outputs(&cfg.out_dir, &cfg.input, &names)?;
    let p = compute_probabilities(&cfg, &image)?;
    let stego = simulate_embedding(&image, &p.beta, cfg.seed)?;
    write_file(&paths[0], &write_pgm(&stego.stego))?;
    write_file(&paths[1], &write_float_map(&stego.change_grid()))?;
    write_file(&paths[2], &write_float_map(p.costs.grid()))?;
    write_file(&paths[3], &write_float_map(p.beta.grid()))?;
    write_file(&paths[4], trace_csv(&p.optimization.trace).as_bytes())?;
    if cfg.dump_theta {
        write_file(&paths[5], &write_float_map(&p.optimization.active_clique_map()))?;
    }
    let s = EmbedSummary {
        probs: probs_summary("embed", &p, cfg.smooth),
        seed: cfg.seed,
        changed_pixels: stego.changed_pixels(),
        expected_changes: p.beta.values().iter().map(|b| 2.0 * b).sum(),
        change_rate_a: stego.realized_change_rate[0],
        change_rate_b: stego.realized_change_rate[1],
    };
    emit(out, &s)?;
    Ok(exit_for(&p.optimization))
}

#[derive(Serialize)]
struct CheckLine<'a> {
    check: &'a str,
    cases: usize,
    failures: usize,
    max_error: f64,
    tolerance: f64,
    gating: bool,
    passed: bool,
}

fn cmd_verify(a: &VerifyArgs, out: &mut dyn Write) -> std::result::Result<i32, Failure> {
    let kernel: FimKernel = if a.inject_fault {
        perturbed_i12_kernel
    } else {
        fim_clique
    };
    let report = verify(kernel);
    write!(out, "{}", report.table()).map_err(|e| io_failure(Path::new("<stdout>"), e))?;
    for c in &report.checks {
        emit(
            out,
            &CheckLine {
                check: c.name,
                cases: c.cases,
                failures: c.failures,
                max_error: c.max_error,
                tolerance: c.tolerance,
                gating: c.gating,
                passed: c.passed(),
            },
        )?;
    }
    Ok(if report.passed() { EXIT_OK } else { EXIT_USAGE })
}

fn exit_for(o: &Optimization) -> i32 {
    if o.converged {
        EXIT_OK
    } else {
        EXIT_NOT_CONVERGED
    }
}

fn emit<T: Serialize>(out: &mut dyn Write, value: &T) -> std::result::Result<(), Failure> {
    let line = serde_json::to_string(value).map_err(|e| Failure {
        code: EXIT_USAGE,
        message: e.to_string(),
    })?;
    writeln!(out, "{line}").map_err(|e| io_failure(Path::new("<stdout>"), e))
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> std::result::Result<i32, Failure> {
    match &cli.command {
        Command::Model(a) => cmd_model(a, out),
        Command::Probs(a) => cmd_probs(a, out),
        Command::Embed(a) => cmd_embed(a, out),
        Command::Verify(a) => cmd_verify(a, out),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Summaries go to `out`, diagnostics to stderr.
pub fn run_with_output<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let mut buffer = Vec::new();
    let result = match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(&cli, &mut buffer)),
            Err(e) => Err(Failure {
                code: EXIT_USAGE,
                message: e.to_string(),
            }),
        },
        None => dispatch(&cli, &mut buffer),
    };
    if out.write_all(&buffer).and_then(|_| out.flush()).is_err() {
        return EXIT_IO;
    }
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    run_with_output(args, &mut lock)
}
