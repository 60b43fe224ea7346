//! Suspect population generation. Positives are derived from the target
//! (fine-tuning, pruning) and should still match its fingerprint; negatives
//! are independently trained models that must not.

mod finetune;
mod prune;

pub use finetune::{
    fine_tune_all_layers, fine_tune_last_layer, retrain_all_layers, retrain_last_layer,
};
pub use prune::{
    default_filter_step, filter_prune, pruning_ladder, weight_prune, LadderRung, PruneMode,
};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::forest::{train_forest, DEFAULT_N_TREES};
use crate::nn::{Layer, Model, Network, TrainConfig};
use crate::rng::{derive_seed, rng_from_seed};
use crate::verify::oracle_accuracy;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tag {
    Positive,
    Negative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum SuspectKind {
    Ftll,
    Ftal,
    Rtll,
    Rtal,
    WeightPrune { fraction: f64 },
    FilterPrune { fraction: f64 },
    SameArch { index: usize },
    DiffArch { index: usize },
    Forest { index: usize },
}

impl SuspectKind {
    pub fn tag(&self) -> Tag {
        match self {
            SuspectKind::Ftll
            | SuspectKind::Ftal
            | SuspectKind::Rtll
            | SuspectKind::Rtal
            | SuspectKind::WeightPrune { .. }
            | SuspectKind::FilterPrune { .. } => Tag::Positive,
            SuspectKind::SameArch { .. }
            | SuspectKind::DiffArch { .. }
            | SuspectKind::Forest { .. } => Tag::Negative,
        }
    }

    /// Filesystem-safe short name.
    pub fn slug(&self) -> String {
        match self {
            SuspectKind::Ftll => "ftll".into(),
            SuspectKind::Ftal => "ftal".into(),
            SuspectKind::Rtll => "rtll".into(),
            SuspectKind::Rtal => "rtal".into(),
            SuspectKind::WeightPrune { fraction } => format!("wp-{fraction}"),
            SuspectKind::FilterPrune { fraction } => format!("fp-{fraction}"),
            SuspectKind::SameArch { index } => format!("same-arch-{index}"),
            SuspectKind::DiffArch { index } => format!("diff-arch-{index}"),
            SuspectKind::Forest { index } => format!("forest-{index}"),
        }
    }
}

impl fmt::Display for SuspectKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SuspectKind::Ftll => write!(f, "FTLL"),
            SuspectKind::Ftal => write!(f, "FTAL"),
            SuspectKind::Rtll => write!(f, "RTLL"),
            SuspectKind::Rtal => write!(f, "RTAL"),
            SuspectKind::WeightPrune { fraction } => write!(f, "WP({fraction})"),
            SuspectKind::FilterPrune { fraction } => write!(f, "FP({fraction})"),
            SuspectKind::SameArch { index } => write!(f, "same-arch[{index}]"),
            SuspectKind::DiffArch { index } => write!(f, "diff-arch[{index}]"),
            SuspectKind::Forest { index } => write!(f, "forest[{index}]"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SuspectEntry {
    pub kind: SuspectKind,
    pub model: Model,
    /// The seed this member was derived or trained with.
    pub seed: u64,
    pub test_accuracy: f64,
}

#[derive(Debug, Clone)]
pub struct SuspectSet {
    pub seed: u64,
    pub entries: Vec<SuspectEntry>,
}

impl SuspectSet {
    pub fn positives(&self) -> impl Iterator<Item = &SuspectEntry> {
        self.entries.iter().filter(|e| e.kind.tag() == Tag::Positive)
    }

    pub fn negatives(&self) -> impl Iterator<Item = &SuspectEntry> {
        self.entries.iter().filter(|e| e.kind.tag() == Tag::Negative)
    }
}

/// Suite recipe. `train` is the regime negatives are trained under (and the
/// base for fine-tuning). Defaults: fine-tune for a fifth of the original
/// epochs, weight-prune in steps of 0.1, tolerate a 0.03 accuracy loss,
/// 10 same-arch + 5 different-arch + 5 forest negatives.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub train: TrainConfig,
    pub finetune_epochs: Option<usize>,
    pub wp_step: f64,
    /// None picks a step from the architecture (see `default_filter_step`).
    pub fp_step: Option<f64>,
    pub max_acc_loss: f64,
    pub n_same_arch: usize,
    pub n_diff_arch: usize,
    pub n_forests: usize,
    pub seed: u64,
}

impl SuiteConfig {
    pub fn new(train: TrainConfig, seed: u64) -> SuiteConfig {
        SuiteConfig {
            train,
            finetune_epochs: None,
            wp_step: 0.1,
            fp_step: None,
            max_acc_loss: 0.03,
            n_same_arch: 10,
            n_diff_arch: 5,
            n_forests: 5,
            seed,
        }
    }

    fn finetune_config(&self, tag: &str) -> TrainConfig {
        let epochs = self.finetune_epochs.unwrap_or_else(|| (self.train.epochs / 5).max(1));
        TrainConfig {
            epochs,
            seed: derive_seed(self.seed, tag, 0),
            ..self.train
        }
    }
}

/// Fresh Glorot initialization with the same layer shapes as `like`.
fn reinit_like(like: &Network, seed: u64) -> Result<Network> {
    let mut rng = rng_from_seed(seed);
    let layers: Vec<Layer> = like
        .layers()
        .iter()
        .map(|l| Layer::glorot(l.in_dim, l.out_dim, l.activation, &mut rng))
        .collect();
    Network::from_layers(layers, like.arch_id(), &format!("init(seed={seed})"))
}

/// Build the full suspect population around `target`, in a canonical order:
/// FTLL, FTAL, RTLL, RTAL, the WP ladder, the FP ladder, then same-arch,
/// different-arch, and forest negatives.
pub fn build_suspect_suite(
    target: &Network,
    train_data: &Dataset,
    test_data: &Dataset,
    cfg: &SuiteConfig,
) -> Result<SuspectSet> {
    let mut entries: Vec<SuspectEntry> = Vec::new();

    let ftll_cfg = cfg.finetune_config("ftll");
    let ftal_cfg = cfg.finetune_config("ftal");
    let rtll_cfg = cfg.finetune_config("rtll");
    let rtal_cfg = cfg.finetune_config("rtal");
    let ((ftll, ftal), (rtll, rtal)) = rayon::join(
        || {
            rayon::join(
                || fine_tune_last_layer(target, train_data, &ftll_cfg),
                || fine_tune_all_layers(target, train_data, &ftal_cfg),
            )
        },
        || {
            rayon::join(
                || retrain_last_layer(target, train_data, &rtll_cfg),
                || retrain_all_layers(target, train_data, &rtal_cfg),
            )
        },
    );
    for (kind, net, cfg_used) in [
        (SuspectKind::Ftll, ftll?, &ftll_cfg),
        (SuspectKind::Ftal, ftal?, &ftal_cfg),
        (SuspectKind::Rtll, rtll?, &rtll_cfg),
        (SuspectKind::Rtal, rtal?, &rtal_cfg),
    ] {
        let test_accuracy = crate::nn::accuracy(&net, test_data)?;
        entries.push(SuspectEntry {
            kind,
            model: Model::Network(net),
            seed: cfg_used.seed,
            test_accuracy,
        });
    }

    let wp_cfg = cfg.finetune_config("wp");
    let fp_cfg = cfg.finetune_config("fp");
    let fp_step = cfg.fp_step.unwrap_or_else(|| default_filter_step(target));
    let (wp_ladder, fp_ladder) = rayon::join(
        || {
            pruning_ladder(
                target,
                PruneMode::Weight,
                cfg.wp_step,
                cfg.max_acc_loss,
                train_data,
                test_data,
                &wp_cfg,
            )
        },
        || {
            pruning_ladder(
                target,
                PruneMode::Filter,
                fp_step,
                cfg.max_acc_loss,
                train_data,
                test_data,
                &fp_cfg,
            )
        },
    );
    for rung in wp_ladder? {
        entries.push(SuspectEntry {
            kind: SuspectKind::WeightPrune { fraction: rung.fraction },
            model: Model::Network(rung.model),
            seed: wp_cfg.seed,
            test_accuracy: rung.test_accuracy,
        });
    }
    for rung in fp_ladder? {
        entries.push(SuspectEntry {
            kind: SuspectKind::FilterPrune { fraction: rung.fraction },
            model: Model::Network(rung.model),
            seed: fp_cfg.seed,
            test_accuracy: rung.test_accuracy,
        });
    }

    // Negatives: independent retrains under the same regime, a different
    // architecture, and random forests.
    use rayon::prelude::*;
    let same: Vec<SuspectEntry> = (0..cfg.n_same_arch)
        .into_par_iter()
        .map(|i| {
            let init_seed = derive_seed(cfg.seed, "same-arch-init", i as u64);
            let mut tc = cfg.train;
            tc.seed = derive_seed(cfg.seed, "same-arch-train", i as u64);
            let fresh = reinit_like(target, init_seed)?;
            let net = crate::nn::train(&fresh, train_data, &tc)?;
            let test_accuracy = crate::nn::accuracy(&net, test_data)?;
            Ok(SuspectEntry {
                kind: SuspectKind::SameArch { index: i },
                model: Model::Network(net),
                seed: tc.seed,
                test_accuracy,
            })
        })
        .collect::<Result<_>>()?;
    entries.extend(same);

    let diff: Vec<SuspectEntry> = (0..cfg.n_diff_arch)
        .into_par_iter()
        .map(|i| {
            let init_seed = derive_seed(cfg.seed, "diff-arch-init", i as u64);
            let mut tc = cfg.train;
            tc.seed = derive_seed(cfg.seed, "diff-arch-train", i as u64);
            let d = target.input_dim();
            let c = target.num_classes();
            // Pick whichever builtin differs from the target's architecture.
            let fresh = if target.arch_id() == "tiny-mlp" {
                Network::small_mlp(d, c, init_seed)?
            } else {
                Network::tiny_mlp(d, c, init_seed)?
            };
            let net = crate::nn::train(&fresh, train_data, &tc)?;
            let test_accuracy = crate::nn::accuracy(&net, test_data)?;
            Ok(SuspectEntry {
                kind: SuspectKind::DiffArch { index: i },
                model: Model::Network(net),
                seed: tc.seed,
                test_accuracy,
            })
        })
        .collect::<Result<_>>()?;
    entries.extend(diff);

    let forests: Vec<SuspectEntry> = (0..cfg.n_forests)
        .into_par_iter()
        .map(|i| {
            let seed = derive_seed(cfg.seed, "forest", i as u64);
            let forest = train_forest(train_data, DEFAULT_N_TREES, seed)?;
            let model = Model::Forest(forest);
            let test_accuracy = oracle_accuracy(&model, test_data)?;
            Ok(SuspectEntry { kind: SuspectKind::Forest { index: i }, model, seed, test_accuracy })
        })
        .collect::<Result<_>>()?;
    entries.extend(forests);

    Ok(SuspectSet { seed: cfg.seed, entries })
}

// ===== persistence =====

pub const SUITE_MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MemberMeta {
    pub kind: SuspectKind,
    pub tag: Tag,
    pub seed: u64,
    pub test_accuracy: f64,
    /// Model file, relative to the manifest.
    pub path: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuiteManifest {
    pub version: u32,
    pub seed: u64,
    pub members: Vec<MemberMeta>,
}

/// Write every member model plus a manifest into `dir`; returns the
/// manifest path.
pub fn save_suite(set: &SuspectSet, dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let mut members = Vec::with_capacity(set.entries.len());
    for (i, entry) in set.entries.iter().enumerate() {
        let file = format!("m{i:03}-{}.bmk", entry.kind.slug());
        crate::nn::save_model(&entry.model, &dir.join(&file))?;
        members.push(MemberMeta {
            kind: entry.kind,
            tag: entry.kind.tag(),
            seed: entry.seed,
            test_accuracy: entry.test_accuracy,
            path: file,
        });
    }
    let manifest = SuiteManifest { version: SUITE_MANIFEST_VERSION, seed: set.seed, members };
    let path = dir.join("manifest.json");
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    std::fs::write(&path, text)?;
    Ok(path)
}

pub fn load_suite(manifest_path: &Path) -> Result<SuspectSet> {
    let text = std::fs::read_to_string(manifest_path)?;
    let manifest: SuiteManifest = serde_json::from_str(&text)
        .map_err(|e| Error::Format(format!("bad suite manifest: {e}")))?;
    if manifest.version != SUITE_MANIFEST_VERSION {
        return Err(Error::Format(format!(
            "unsupported suite manifest version {}",
            manifest.version
        )));
    }
    let dir = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let mut entries = Vec::with_capacity(manifest.members.len());
    for member in manifest.members {
        if member.kind.tag() != member.tag {
            return Err(Error::Format(format!(
                "member {} is tagged {:?} but its kind implies {:?}",
                member.kind,
                member.tag,
                member.kind.tag()
            )));
        }
        let model = crate::nn::load_model(&dir.join(&member.path))?;
        entries.push(SuspectEntry {
            kind: member.kind,
            model,
            seed: member.seed,
            test_accuracy: member.test_accuracy,
        });
    }
    Ok(SuspectSet { seed: manifest.seed, entries })
}
