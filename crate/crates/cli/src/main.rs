//! `bmk`: fingerprint classifiers and check suspects from the shell.
//!
//! The pipeline is gen-data -> train -> suite -> extract -> verify, with
//! `eval` scoring a saved fingerprint against a saved suite and `experiment`
//! running the whole sweep from one JSON config. Every stochastic subcommand
//! takes an explicit --seed and prints a `config:` echo line; config + seed
//! fully determine the outputs (timings aside).
//!
//! Exit codes: 0 success, 2 usage error, 3 input/format error, 4 numeric
//! failure. A verification decision is never encoded as a failing exit; it
//! lives in the printed verdict JSON.

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use bmk_core::data::{self, CsvOptions, Dataset, Kind, SyntheticSpec};
use bmk_core::eval::{
    grid_result_for, load_experiment_config, load_report, run_experiment, write_curve_csv,
    write_report, Arch, EvalReport, REPORT_VERSION,
};
use bmk_core::fingerprint::{
    extract, load_fingerprint, save_fingerprint, CwParams, ExtractConfig, InitStrategy,
    LabelStrategy, Method,
};
use bmk_core::nn::{accuracy, load_model, save_model, train, Model, Network, Optimizer, TrainConfig};
use bmk_core::rng::derive_seed;
use bmk_core::suspects::{build_suspect_suite, save_suite, SuiteConfig, Tag};
use bmk_core::verify::{verify, PipeOracle, PipeOracleConfig};
use bmk_core::Error;

#[derive(Parser)]
#[command(name = "bmk", version, about = "Fingerprint classifiers and verify suspect models")]
struct Cli {
    /// Worker threads (default: all cores; env BMK_THREADS as fallback).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic dataset as CSV plus a manifest.
    GenData(GenDataArgs),
    /// Train a classifier on CSV data and save it.
    Train(TrainArgs),
    /// Build the canonical suspect suite around a trained target.
    Suite(SuiteArgs),
    /// Extract a fingerprint from a target network.
    Extract(ExtractArgs),
    /// Check one suspect against a fingerprint; prints the verdict JSON.
    Verify(VerifyArgs),
    /// Score a saved fingerprint against a saved suite.
    Eval(EvalArgs),
    /// Run a full grid experiment from a JSON config.
    Experiment(ExperimentArgs),
}

// Errors from flag values clap already parsed land here; everything else is
// either a usage mistake (2) or a core error mapped by its root cause.
#[derive(Debug)]
enum CliError {
    Usage(String),
    Core(Error),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) => match e.root() {
                Error::Numeric(_) => 4,
                _ => 3,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "usage: {msg}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> CliError {
        CliError::Core(e)
    }
}

fn main() -> ExitCode {
    // Die quietly when a downstream pipe closes (bmk verify ... | head).
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version arrive here too; only real errors exit 2.
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(e) = configure_threads(cli.threads) {
        eprintln!("error: {e}");
        return ExitCode::from(e.code());
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}

fn run(cmd: Cmd) -> Result<(), CliError> {
    match cmd {
        Cmd::GenData(a) => cmd_gen_data(a),
        Cmd::Train(a) => cmd_train(a),
        Cmd::Suite(a) => cmd_suite(a),
        Cmd::Extract(a) => cmd_extract(a),
        Cmd::Verify(a) => cmd_verify(a),
        Cmd::Eval(a) => cmd_eval(a),
        Cmd::Experiment(a) => cmd_experiment(a),
    }
}

fn configure_threads(flag: Option<usize>) -> Result<(), CliError> {
    let requested = match flag {
        Some(n) => Some(n),
        None => match std::env::var("BMK_THREADS") {
            Ok(s) => Some(s.parse::<usize>().map_err(|_| {
                CliError::Usage(format!("BMK_THREADS must be a positive integer, got '{s}'"))
            })?),
            Err(_) => None,
        },
    };
    if let Some(n) = requested {
        if n == 0 {
            return Err(CliError::Usage("thread count must be >= 1".into()));
        }
        // A pool may already exist (tests call us in-process); that's fine.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

fn echo(v: serde_json::Value) {
    println!("config: {v}");
}

fn io_err(e: std::io::Error) -> CliError {
    CliError::Core(e.into())
}

fn json_err(e: serde_json::Error) -> CliError {
    CliError::Core(e.into())
}

fn require_network(model: Model, what: &str) -> Result<Network, CliError> {
    match model {
        Model::Network(n) => Ok(n),
        Model::Forest(_) => Err(CliError::Core(Error::Input(format!(
            "{what} must be a network, got a forest"
        )))),
    }
}

// ===== flag value parsers (bad values are usage errors, exit 2) =====

fn parse_kind(s: &str) -> Result<Kind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_arch(s: &str) -> Result<Arch, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_init(s: &str) -> Result<InitStrategy, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_label(s: &str) -> Result<LabelStrategy, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_optimizer(s: &str) -> Result<Optimizer, String> {
    match s {
        "sgd" => Ok(Optimizer::Sgd),
        "adam" => Ok(Optimizer::Adam),
        other => Err(format!("unknown optimizer '{other}' (expected sgd or adam)")),
    }
}

fn arch_name(arch: Arch) -> &'static str {
    match arch {
        Arch::SmallMlp => "small-mlp",
        Arch::TinyMlp => "tiny-mlp",
    }
}

/// CSV loading knobs shared by every subcommand that reads data.
#[derive(Args, Debug, Clone, Copy)]
struct CsvArgs {
    /// The CSV has no header row.
    #[arg(long)]
    no_header: bool,
    /// Do not min-max rescale features into [0,1] (file must already be).
    #[arg(long)]
    no_rescale: bool,
    /// Expected class count (default: inferred, or taken from the model).
    #[arg(long)]
    classes: Option<usize>,
}

impl CsvArgs {
    fn options(&self, default_classes: Option<usize>) -> CsvOptions {
        CsvOptions {
            has_header: !self.no_header,
            rescale: !self.no_rescale,
            classes: self.classes.or(default_classes),
        }
    }
}

fn load_dataset(path: &Path, csv: &CsvArgs, default_classes: Option<usize>) -> Result<Dataset, CliError> {
    Ok(data::load_csv(path, &csv.options(default_classes))?.dataset)
}

// ===== gen-data =====

#[derive(Args, Debug)]
struct GenDataArgs {
    /// Generator: blobs | moons | spirals.
    #[arg(long, default_value = "blobs", value_parser = parse_kind)]
    kind: Kind,
    #[arg(long, default_value_t = 3)]
    classes: usize,
    #[arg(long, default_value_t = 8)]
    dim: usize,
    /// Points per class.
    #[arg(long, default_value_t = 100)]
    n_per_class: usize,
    /// Generator noise level.
    #[arg(long, default_value_t = 0.05)]
    noise: f64,
    #[arg(long)]
    seed: u64,
    /// Also split off a held-out test set with this fraction.
    #[arg(long)]
    test_fraction: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

fn cmd_gen_data(a: GenDataArgs) -> Result<(), CliError> {
    let spec = SyntheticSpec {
        kind: a.kind,
        n_per_class: a.n_per_class,
        classes: a.classes,
        dim: a.dim,
        noise_sigma: a.noise,
        seed: a.seed,
    };
    echo(json!({
        "cmd": "gen-data",
        "spec": spec,
        "test_fraction": a.test_fraction,
        "out": a.out.display().to_string(),
    }));
    let generated = data::generate_full(&spec)?;
    std::fs::create_dir_all(&a.out).map_err(io_err)?;
    let manifest = data::DatasetManifest {
        version: data::MANIFEST_VERSION,
        spec,
        rescale: generated.rescale.clone(),
    };
    data::write_manifest(&manifest, &a.out.join("manifest.json"))?;
    match a.test_fraction {
        Some(f) => {
            let (train_data, test_data) =
                data::split(&generated.dataset, 1.0 - f, derive_seed(a.seed, "split", 0))?;
            data::emit_csv(&train_data, &a.out.join("train.csv"), true)?;
            data::emit_csv(&test_data, &a.out.join("test.csv"), true)?;
            println!(
                "wrote {} train + {} test points ({} classes, dim {}) to {}",
                train_data.len(),
                test_data.len(),
                generated.dataset.c,
                generated.dataset.d,
                a.out.display()
            );
        }
        None => {
            data::emit_csv(&generated.dataset, &a.out.join("data.csv"), true)?;
            println!(
                "wrote {} points ({} classes, dim {}) to {}",
                generated.dataset.len(),
                generated.dataset.c,
                generated.dataset.d,
                a.out.display()
            );
        }
    }
    Ok(())
}

// ===== train =====

#[derive(Args, Debug)]
struct TrainArgs {
    /// Training data CSV (feature columns then an integer label column).
    #[arg(long)]
    data: PathBuf,
    /// Held-out CSV to report test accuracy on.
    #[arg(long)]
    test: Option<PathBuf>,
    /// Architecture: small-mlp | tiny-mlp.
    #[arg(long, default_value = "small-mlp", value_parser = parse_arch)]
    arch: Arch,
    #[arg(long, default_value_t = 40)]
    epochs: usize,
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
    #[arg(long, default_value_t = 0.01)]
    lr: f64,
    /// adam | sgd.
    #[arg(long, default_value = "adam", value_parser = parse_optimizer)]
    optimizer: Optimizer,
    /// L2 penalty on weight matrices.
    #[arg(long, default_value_t = 0.0)]
    l2: f64,
    #[arg(long)]
    seed: u64,
    #[command(flatten)]
    csv: CsvArgs,
    /// Output model path.
    #[arg(long)]
    out: PathBuf,
}

fn cmd_train(a: TrainArgs) -> Result<(), CliError> {
    let train_data = load_dataset(&a.data, &a.csv, None)?;
    let cfg = TrainConfig {
        optimizer: a.optimizer,
        learning_rate: a.lr,
        epochs: a.epochs,
        batch_size: a.batch_size,
        l2_penalty: a.l2,
        seed: derive_seed(a.seed, "train", 0),
    };
    echo(json!({
        "cmd": "train",
        "data": a.data.display().to_string(),
        "arch": a.arch,
        "train": cfg,
        "seed": a.seed,
        "out": a.out.display().to_string(),
    }));
    let fresh = a.arch.build(train_data.d, train_data.c, derive_seed(a.seed, "init", 0))?;
    let net = train(&fresh, &train_data, &cfg)?;
    let train_acc = accuracy(&net, &train_data)?;
    let test_acc = match &a.test {
        Some(path) => Some(accuracy(&net, &load_dataset(path, &a.csv, Some(train_data.c))?)?),
        None => None,
    };
    let digest = net.digest();
    save_model(&Model::Network(net), &a.out)?;
    let test_note = test_acc.map(|t| format!(", test acc {t:.4}")).unwrap_or_default();
    println!(
        "trained {arch} (train acc {train_acc:.4}{test_note}, digest {digest_short}); wrote {out}",
        arch = arch_name(a.arch),
        digest_short = &digest[..12],
        out = a.out.display()
    );
    Ok(())
}

// ===== suite =====

#[derive(Args, Debug)]
struct SuiteArgs {
    /// Target model; must be a network.
    #[arg(long)]
    target: PathBuf,
    /// Training CSV (the regime suite members train under).
    #[arg(long)]
    train: PathBuf,
    /// Held-out CSV for the accuracy-loss rule.
    #[arg(long)]
    test: PathBuf,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 40)]
    epochs: usize,
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
    #[arg(long, default_value_t = 0.01)]
    lr: f64,
    /// adam | sgd.
    #[arg(long, default_value = "adam", value_parser = parse_optimizer)]
    optimizer: Optimizer,
    #[arg(long, default_value_t = 0.0)]
    l2: f64,
    /// Fine-tune epochs (default: a fifth of --epochs).
    #[arg(long)]
    finetune_epochs: Option<usize>,
    #[arg(long, default_value_t = 0.1)]
    wp_step: f64,
    /// Filter-prune step (default: picked from the architecture).
    #[arg(long)]
    fp_step: Option<f64>,
    #[arg(long, default_value_t = 0.03)]
    max_acc_loss: f64,
    #[arg(long, default_value_t = 10)]
    same_arch: usize,
    #[arg(long, default_value_t = 5)]
    diff_arch: usize,
    #[arg(long, default_value_t = 5)]
    forests: usize,
    #[command(flatten)]
    csv: CsvArgs,
    /// Output directory for suite members plus manifest.json.
    #[arg(long)]
    out: PathBuf,
}

fn cmd_suite(a: SuiteArgs) -> Result<(), CliError> {
    let target = require_network(load_model(&a.target)?, "suite target")?;
    let train_data = load_dataset(&a.train, &a.csv, Some(target.num_classes()))?;
    let test_data = load_dataset(&a.test, &a.csv, Some(target.num_classes()))?;
    let cfg = SuiteConfig {
        train: TrainConfig {
            optimizer: a.optimizer,
            learning_rate: a.lr,
            epochs: a.epochs,
            batch_size: a.batch_size,
            l2_penalty: a.l2,
            seed: a.seed,
        },
        finetune_epochs: a.finetune_epochs,
        wp_step: a.wp_step,
        fp_step: a.fp_step,
        max_acc_loss: a.max_acc_loss,
        n_same_arch: a.same_arch,
        n_diff_arch: a.diff_arch,
        n_forests: a.forests,
        seed: a.seed,
    };
    echo(json!({
        "cmd": "suite",
        "target": a.target.display().to_string(),
        "suite": cfg,
        "out": a.out.display().to_string(),
    }));
    let set = build_suspect_suite(&target, &train_data, &test_data, &cfg)?;
    std::fs::create_dir_all(&a.out).map_err(io_err)?;
    let manifest = save_suite(&set, &a.out)?;
    for (i, e) in set.entries.iter().enumerate() {
        let sign = if e.kind.tag() == Tag::Positive { '+' } else { '-' };
        println!("  {i:>3} {sign} {:<12} acc {:.4}", e.kind.to_string(), e.test_accuracy);
    }
    println!(
        "wrote {} suspects ({} positive, {} negative); manifest {}",
        set.entries.len(),
        set.positives().count(),
        set.negatives().count(),
        manifest.display()
    );
    Ok(())
}

// ===== extract =====

#[derive(Args, Debug)]
struct ExtractArgs {
    /// Target model; must be a network.
    #[arg(long)]
    model: PathBuf,
    /// ipguard | random | fgsm | igsm | cw.
    #[arg(long, default_value = "ipguard", value_parser = parse_method)]
    method: Method,
    /// Training CSV; required by the T init strategy and the attack baselines.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Number of fingerprinting points.
    #[arg(long, default_value_t = 100)]
    n: usize,
    /// Boundary margin (ipguard) / confidence (cw).
    #[arg(long, default_value_t = 0.0)]
    k: f64,
    /// Perturbation budget (fgsm, igsm).
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    /// Per-iteration step size (igsm).
    #[arg(long, default_value_t = 1.0 / 255.0)]
    alpha: f64,
    /// Adam learning rate (ipguard, cw).
    #[arg(long, default_value_t = 0.01)]
    lr: f64,
    #[arg(long, default_value_t = 1000)]
    max_iters: usize,
    /// Initial point: T (training data) | R (random).
    #[arg(long, default_value = "T", value_parser = parse_init)]
    init: InitStrategy,
    /// Target label: R (random) | L (least-likely).
    #[arg(long, default_value = "R", value_parser = parse_label)]
    label: LabelStrategy,
    #[arg(long, default_value_t = 6)]
    cw_steps: usize,
    #[arg(long, default_value_t = 500)]
    cw_inner: usize,
    #[arg(long, default_value_t = 1.0)]
    cw_c_init: f64,
    #[arg(long)]
    seed: u64,
    #[command(flatten)]
    csv: CsvArgs,
    /// Output fingerprint path (JSON).
    #[arg(long)]
    out: PathBuf,
}

fn cmd_extract(a: ExtractArgs) -> Result<(), CliError> {
    let target = require_network(load_model(&a.model)?, "extraction target")?;
    let dataset = match &a.data {
        Some(path) => Some(load_dataset(path, &a.csv, Some(target.num_classes()))?),
        None => None,
    };
    let cfg = ExtractConfig {
        n: a.n,
        k: a.k,
        epsilon: a.epsilon,
        alpha: a.alpha,
        lr: a.lr,
        max_iters: a.max_iters,
        init: a.init,
        label: a.label,
        seed: a.seed,
        cw: CwParams {
            binary_search_steps: a.cw_steps,
            c_init: a.cw_c_init,
            inner_iters: a.cw_inner,
        },
    };
    echo(json!({
        "cmd": "extract",
        "model": a.model.display().to_string(),
        "method": a.method,
        "extract": cfg,
        "out": a.out.display().to_string(),
    }));
    let started = Instant::now();
    let fp = extract(&target, dataset.as_ref(), a.method, &cfg)?;
    let seconds = started.elapsed().as_secs_f64();
    save_fingerprint(&fp, &a.out)?;
    let converged = fp.converged.iter().filter(|c| **c).count();
    let mean_iters = fp.iters.iter().sum::<usize>() as f64 / fp.n as f64;
    println!(
        "extracted {} {} points in {seconds:.2}s ({converged} converged, mean iters {mean_iters:.1}); wrote {}",
        fp.n,
        a.method,
        a.out.display()
    );
    Ok(())
}

// ===== verify =====

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long)]
    fingerprint: PathBuf,
    /// Local suspect model file.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Remote label-only oracle: a shell command speaking line-delimited
    /// JSON ({"point": [...]} in, {"label": n} out).
    #[arg(long)]
    remote_cmd: Option<String>,
    /// Input dimension the remote oracle expects.
    #[arg(long)]
    remote_dim: Option<usize>,
    /// Class count of the remote oracle.
    #[arg(long)]
    remote_classes: Option<usize>,
    /// The remote oracle accepts any input dimension.
    #[arg(long)]
    remote_adapts_dim: bool,
    /// Per-query timeout in milliseconds.
    #[arg(long, default_value_t = 10_000)]
    timeout_ms: u64,
    /// Retries after a timed-out query.
    #[arg(long, default_value_t = 2)]
    retries: usize,
    /// Decision threshold in [0,1].
    #[arg(long)]
    tau: Option<f64>,
    /// Report to calibrate tau from (the grid tau maximizing min(R,U)).
    #[arg(long)]
    calibration: Option<PathBuf>,
}

fn cmd_verify(a: VerifyArgs) -> Result<(), CliError> {
    if a.model.is_some() && a.remote_cmd.is_some() {
        return Err(CliError::Usage("--model and --remote-cmd are mutually exclusive".into()));
    }
    if a.model.is_none() && a.remote_cmd.is_none() {
        return Err(CliError::Usage("provide a suspect via --model or --remote-cmd".into()));
    }
    if a.tau.is_none() && a.calibration.is_none() {
        return Err(CliError::Usage("provide --tau or --calibration <report.json>".into()));
    }
    let fp = load_fingerprint(&a.fingerprint)?;
    let tau = match a.tau {
        Some(t) => t,
        None => load_report(a.calibration.as_ref().unwrap())?.calibrated_tau()?,
    };
    echo(json!({
        "cmd": "verify",
        "fingerprint": a.fingerprint.display().to_string(),
        "model": a.model.as_ref().map(|p| p.display().to_string()),
        "remote_cmd": a.remote_cmd,
        "tau": tau,
    }));
    let verdict = match (&a.model, &a.remote_cmd) {
        (Some(path), None) => {
            let model = load_model(path)?;
            verify(&fp, &model, tau)?
        }
        (None, Some(cmd)) => {
            let mut cfg = PipeOracleConfig::new(
                a.remote_dim.ok_or_else(|| {
                    CliError::Usage("--remote-cmd needs --remote-dim".into())
                })?,
                a.remote_classes.ok_or_else(|| {
                    CliError::Usage("--remote-cmd needs --remote-classes".into())
                })?,
            );
            cfg.timeout = Duration::from_millis(a.timeout_ms);
            cfg.retries = a.retries;
            cfg.adapts_input_dim = a.remote_adapts_dim;
            let oracle = PipeOracle::spawn(cmd, cfg)?;
            verify(&fp, &oracle, tau)?
        }
        _ => unreachable!("checked above"),
    };
    println!("{}", serde_json::to_string_pretty(&verdict).map_err(json_err)?);
    Ok(())
}

// ===== eval =====

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long)]
    fingerprint: PathBuf,
    /// Suite manifest.json (or the directory containing it).
    #[arg(long)]
    suite: PathBuf,
    /// Threshold grid resolution.
    #[arg(long, default_value_t = 100)]
    r: usize,
    /// Write the full report JSON here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the threshold curve CSV here.
    #[arg(long)]
    csv: Option<PathBuf>,
}

fn cmd_eval(a: EvalArgs) -> Result<(), CliError> {
    let fp = load_fingerprint(&a.fingerprint)?;
    let manifest = if a.suite.is_dir() { a.suite.join("manifest.json") } else { a.suite.clone() };
    let suite = bmk_core::suspects::load_suite(&manifest)?;
    let (param_name, param) = match fp.method {
        Method::IpGuard | Method::Cw => ("k", fp.params.k),
        Method::Fgsm | Method::Igsm => ("epsilon", fp.params.epsilon),
        Method::Random => ("none", 0.0),
    };
    echo(json!({
        "cmd": "eval",
        "fingerprint": a.fingerprint.display().to_string(),
        "suite": manifest.display().to_string(),
        "r": a.r,
    }));
    let result = grid_result_for(&fp, &suite, param, a.r, 0.0)?;
    let (aruc, auc, gap) = (result.aruc, result.auc, result.gap);
    let report = EvalReport {
        version: REPORT_VERSION,
        method: fp.method,
        param_name: param_name.to_string(),
        seed: fp.seed,
        grid: vec![result],
        best_index: 0,
        best_param: param,
        best_aruc: aruc,
        config: json!({
            "fingerprint": a.fingerprint.display().to_string(),
            "suite": manifest.display().to_string(),
            "r": a.r,
        }),
    };
    let tau = report.calibrated_tau()?;
    println!(
        "aruc {aruc:.4}  auc {auc:.4}  gap {gap:+.4}  calibrated tau {tau}  ({} suspects)",
        suite.entries.len()
    );
    if let Some(out) = &a.out {
        write_report(&report, out)?;
        println!("wrote {}", out.display());
    }
    if let Some(csv) = &a.csv {
        write_curve_csv(&report, csv)?;
        println!("wrote {}", csv.display());
    }
    Ok(())
}

// ===== experiment =====

#[derive(Args, Debug)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    /// Report JSON output path.
    #[arg(long)]
    out: PathBuf,
    /// Also write the best grid entry's curve as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

fn cmd_experiment(a: ExperimentArgs) -> Result<(), CliError> {
    let cfg = load_experiment_config(&a.config)?;
    echo(serde_json::to_value(&cfg).map_err(json_err)?);
    let report = run_experiment(&cfg)?;
    write_report(&report, &a.out)?;
    if let Some(csv) = &a.csv {
        write_curve_csv(&report, csv)?;
    }
    println!(
        "best {}={} aruc {:.4} over a grid of {}; wrote {}",
        report.param_name,
        report.best_param,
        report.best_aruc,
        report.grid.len(),
        a.out.display()
    );
    Ok(())
}
