//! The end-to-end experiment: data, target, suspect suite, a parameter
//! sweep of extractions, and the separation metrics for each grid value.
//!
//! Everything except wall-clock timings is a pure function of the config,
//! including its single master seed.

use super::metrics;
use super::report::{EvalReport, GridResult, SuspectRate, REPORT_VERSION};
use crate::data::{generate, load_csv, split, CsvOptions, Dataset, Kind, SyntheticSpec};
use crate::error::{Error, Result};
use crate::fingerprint::{extract, CwParams, ExtractConfig, InitStrategy, LabelStrategy, Method};
use crate::nn::{accuracy, train, Network, Optimizer, TrainConfig};
use crate::rng::derive_seed;
use crate::suspects::{build_suspect_suite, SuiteConfig, SuspectSet};
use crate::verify::matching_rate;
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::time::Instant;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Arch {
    #[default]
    SmallMlp,
    TinyMlp,
}

impl Arch {
    pub fn build(self, d: usize, c: usize, seed: u64) -> Result<Network> {
        match self {
            Arch::SmallMlp => Network::small_mlp(d, c, seed),
            Arch::TinyMlp => Network::tiny_mlp(d, c, seed),
        }
    }
}

impl std::str::FromStr for Arch {
    type Err = Error;
    fn from_str(s: &str) -> Result<Arch> {
        match s {
            "small-mlp" => Ok(Arch::SmallMlp),
            "tiny-mlp" => Ok(Arch::TinyMlp),
            other => Err(Error::Input(format!("unknown architecture '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase")]
pub enum DataSource {
    Synthetic {
        kind: Kind,
        n_per_class: usize,
        classes: usize,
        dim: usize,
        noise_sigma: f64,
    },
    Csv {
        path: String,
        #[serde(default = "yes")]
        has_header: bool,
        #[serde(default = "yes")]
        rescale: bool,
        #[serde(default)]
        classes: Option<usize>,
    },
}

fn yes() -> bool {
    true
}

/// Training regime; the experiment derives the actual seeds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainRecipe {
    pub optimizer: Optimizer,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub l2_penalty: f64,
}

impl Default for TrainRecipe {
    fn default() -> TrainRecipe {
        TrainRecipe {
            optimizer: Optimizer::Adam,
            learning_rate: 0.01,
            epochs: 40,
            batch_size: 32,
            l2_penalty: 0.0,
        }
    }
}

impl TrainRecipe {
    pub fn with_seed(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            optimizer: self.optimizer,
            learning_rate: self.learning_rate,
            epochs: self.epochs,
            batch_size: self.batch_size,
            l2_penalty: self.l2_penalty,
            seed,
        }
    }
}

/// Extraction knobs minus the swept parameter and the derived seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExtractRecipe {
    pub n: usize,
    pub k: f64,
    pub epsilon: f64,
    pub alpha: f64,
    pub lr: f64,
    pub max_iters: usize,
    pub init: InitStrategy,
    pub label: LabelStrategy,
    pub cw: CwParams,
}

impl Default for ExtractRecipe {
    fn default() -> ExtractRecipe {
        let base = ExtractConfig::new(0);
        ExtractRecipe {
            n: base.n,
            k: base.k,
            epsilon: base.epsilon,
            alpha: base.alpha,
            lr: base.lr,
            max_iters: base.max_iters,
            init: base.init,
            label: base.label,
            cw: base.cw,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SuiteRecipe {
    pub n_same_arch: usize,
    pub n_diff_arch: usize,
    pub n_forests: usize,
    pub finetune_epochs: Option<usize>,
    pub wp_step: f64,
    pub fp_step: Option<f64>,
    pub max_acc_loss: f64,
}

impl Default for SuiteRecipe {
    fn default() -> SuiteRecipe {
        SuiteRecipe {
            n_same_arch: 10,
            n_diff_arch: 5,
            n_forests: 5,
            finetune_epochs: None,
            wp_step: 0.1,
            fp_step: None,
            max_acc_loss: 0.03,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default = "config_version")]
    pub version: u32,
    pub seed: u64,
    pub data: DataSource,
    /// Share of the data held out for accuracy measurements.
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    #[serde(default)]
    pub arch: Arch,
    #[serde(default)]
    pub train: TrainRecipe,
    pub method: Method,
    /// Values of the swept parameter (k or epsilon). Empty uses a default
    /// grid for the method.
    #[serde(default)]
    pub grid: Vec<f64>,
    #[serde(default)]
    pub extract: ExtractRecipe,
    #[serde(default)]
    pub suite: SuiteRecipe,
    /// Threshold-grid resolution for the curves.
    #[serde(default = "default_grid_res")]
    pub r: usize,
}

fn config_version() -> u32 {
    CONFIG_VERSION
}

fn default_test_fraction() -> f64 {
    0.25
}

fn default_grid_res() -> usize {
    metrics::DEFAULT_GRID
}

impl ExperimentConfig {
    /// The grid actually swept, and what the parameter is called.
    pub fn effective_grid(&self) -> (Vec<f64>, &'static str) {
        match self.method {
            Method::IpGuard | Method::Cw => (
                if self.grid.is_empty() {
                    vec![0.0, 0.25, 0.5, 1.0, 2.0]
                } else {
                    self.grid.clone()
                },
                "k",
            ),
            Method::Fgsm | Method::Igsm => (
                if self.grid.is_empty() {
                    vec![0.05, 0.1, 0.2]
                } else {
                    self.grid.clone()
                },
                "epsilon",
            ),
            // The random baseline has nothing to sweep.
            Method::Random => (vec![0.0], "none"),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(Error::Format(format!(
                "unsupported experiment config version {}",
                self.version
            )));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::Input(format!(
                "test_fraction must lie in (0, 1), got {}",
                self.test_fraction
            )));
        }
        if self.r == 0 {
            return Err(Error::Input("threshold grid resolution r must be >= 1".into()));
        }
        if self.grid.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("grid values must be finite".into()));
        }
        Ok(())
    }
}

pub fn load_experiment_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    let cfg: ExperimentConfig = serde_json::from_str(&text)
        .map_err(|e| Error::Format(format!("bad experiment config: {e}")))?;
    cfg.validate()?;
    Ok(cfg)
}

fn load_data(cfg: &ExperimentConfig) -> Result<Dataset> {
    match &cfg.data {
        DataSource::Synthetic { kind, n_per_class, classes, dim, noise_sigma } => {
            generate(&SyntheticSpec {
                kind: *kind,
                n_per_class: *n_per_class,
                classes: *classes,
                dim: *dim,
                noise_sigma: *noise_sigma,
                seed: derive_seed(cfg.seed, "data", 0),
            })
        }
        DataSource::Csv { path, has_header, rescale, classes } => {
            let opts = CsvOptions {
                has_header: *has_header,
                rescale: *rescale,
                classes: *classes,
            };
            Ok(load_csv(Path::new(path), &opts)?.dataset)
        }
    }
}

/// Everything the sweep shares: the target model and its suspect suite.
pub struct ExperimentSetup {
    pub train_data: Dataset,
    pub test_data: Dataset,
    pub target: Network,
    pub target_accuracy: f64,
    pub suite: SuspectSet,
}

pub fn prepare(cfg: &ExperimentConfig) -> Result<ExperimentSetup> {
    cfg.validate()?;
    let data = load_data(cfg).map_err(|e| e.in_stage("data"))?;
    let (train_data, test_data) = split(&data, 1.0 - cfg.test_fraction, derive_seed(cfg.seed, "split", 0))
        .map_err(|e| e.in_stage("split"))?;

    let target = (|| -> Result<Network> {
        let fresh = cfg.arch.build(data.d, data.c, derive_seed(cfg.seed, "target-init", 0))?;
        train(&fresh, &train_data, &cfg.train.with_seed(derive_seed(cfg.seed, "target-train", 0)))
    })()
    .map_err(|e| e.in_stage("train-target"))?;
    let target_accuracy = accuracy(&target, &test_data).map_err(|e| e.in_stage("train-target"))?;

    let suite_cfg = SuiteConfig {
        train: cfg.train.with_seed(cfg.seed),
        finetune_epochs: cfg.suite.finetune_epochs,
        wp_step: cfg.suite.wp_step,
        fp_step: cfg.suite.fp_step,
        max_acc_loss: cfg.suite.max_acc_loss,
        n_same_arch: cfg.suite.n_same_arch,
        n_diff_arch: cfg.suite.n_diff_arch,
        n_forests: cfg.suite.n_forests,
        seed: derive_seed(cfg.seed, "suite", 0),
    };
    let suite = build_suspect_suite(&target, &train_data, &test_data, &suite_cfg)
        .map_err(|e| e.in_stage("suite"))?;

    Ok(ExperimentSetup { train_data, test_data, target, target_accuracy, suite })
}

/// Rate every suite member against a fingerprint and compute the curve
/// metrics. Split out so callers can evaluate pre-built fingerprints.
pub fn grid_result_for(
    fp: &crate::fingerprint::Fingerprint,
    suite: &SuspectSet,
    param: f64,
    r: usize,
    extraction_seconds: f64,
) -> Result<GridResult> {
    let mut rates = Vec::with_capacity(suite.entries.len());
    for entry in &suite.entries {
        let rate = matching_rate(fp, &entry.model).map_err(|e| e.in_stage("verify"))?;
        rates.push(SuspectRate {
            kind: entry.kind,
            tag: entry.kind.tag(),
            matches: rate.matches,
            total: rate.total,
            matching_rate: rate.value(),
            test_accuracy: entry.test_accuracy,
        });
    }
    let pos: Vec<f64> = rates
        .iter()
        .filter(|s| s.tag == crate::suspects::Tag::Positive)
        .map(|s| s.matching_rate)
        .collect();
    let neg: Vec<f64> = rates
        .iter()
        .filter(|s| s.tag == crate::suspects::Tag::Negative)
        .map(|s| s.matching_rate)
        .collect();
    let curve = metrics::curve(&pos, &neg, r).map_err(|e| e.in_stage("eval"))?;
    let aruc = metrics::aruc(&pos, &neg, r).map_err(|e| e.in_stage("eval"))?;
    let auc = metrics::auc(&pos, &neg).map_err(|e| e.in_stage("eval"))?;
    let gap = metrics::rate_gap(&pos, &neg).map_err(|e| e.in_stage("eval"))?;
    Ok(GridResult { param, extraction_seconds, rates, curve, aruc, auc, gap })
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<EvalReport> {
    let setup = prepare(cfg)?;
    let (grid_values, param_name) = cfg.effective_grid();

    let mut grid = Vec::with_capacity(grid_values.len());
    for &param in &grid_values {
        let mut ex = ExtractConfig {
            n: cfg.extract.n,
            k: cfg.extract.k,
            epsilon: cfg.extract.epsilon,
            alpha: cfg.extract.alpha,
            lr: cfg.extract.lr,
            max_iters: cfg.extract.max_iters,
            init: cfg.extract.init,
            label: cfg.extract.label,
            seed: derive_seed(cfg.seed, "extract", 0),
            cw: cfg.extract.cw,
        };
        match param_name {
            "k" => ex.k = param,
            "epsilon" => ex.epsilon = param,
            _ => {}
        }
        let started = Instant::now();
        let fp = extract(&setup.target, Some(&setup.train_data), cfg.method, &ex)
            .map_err(|e| e.in_stage("extract"))?;
        let extraction_seconds = started.elapsed().as_secs_f64();
        grid.push(grid_result_for(&fp, &setup.suite, param, cfg.r, extraction_seconds)?);
    }

    let mut best_index = 0;
    for (i, g) in grid.iter().enumerate() {
        if g.aruc > grid[best_index].aruc {
            best_index = i;
        }
    }
    let best_aruc = grid[best_index].aruc;
    Ok(EvalReport {
        version: REPORT_VERSION,
        method: cfg.method,
        param_name: param_name.to_string(),
        seed: cfg.seed,
        grid,
        best_index,
        best_param: grid_values[best_index],
        best_aruc,
        config: serde_json::to_value(cfg)?,
    })
}
