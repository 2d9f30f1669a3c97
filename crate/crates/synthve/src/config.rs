//! Run configuration: command-line flags over an optional JSON file over
//! built-in defaults.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use synthve_core::mlp::Activation;
use synthve_core::retrieval::{MissingChildren, SamplingConfig};
use synthve_core::train::TrainConfig;
use synthve_core::transfer::NeutralHandling;
use synthve_core::Split;

use crate::dataset::PremiseRole;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum CurveMode {
    #[default]
    Full,
    Sampled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NeutralArg {
    CountAsError,
    ExcludeAndReport,
}

impl From<NeutralArg> for NeutralHandling {
    fn from(a: NeutralArg) -> Self {
        match a {
            NeutralArg::CountAsError => NeutralHandling::CountAsError,
            NeutralArg::ExcludeAndReport => NeutralHandling::ExcludeAndReport,
        }
    }
}

/// Everything a subcommand may read. The JSON config file has the same
/// shape; absent fields take their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub store: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
    pub pairs: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub transfer_store: Option<PathBuf>,
    pub transfer_manifest: Option<PathBuf>,
    pub transfer_pairs: Option<PathBuf>,
    pub out: PathBuf,
    /// Split to analyse; each subcommand has its own fallback.
    pub split: Option<Split>,
    /// Rank and compare against generated images of every split rather
    /// than only the queried one.
    pub corpus_all_splits: bool,
    pub mode: CurveMode,
    pub k_max: usize,
    pub sample_size: usize,
    pub n_samples: usize,
    pub seed: u64,
    pub bins: usize,
    pub skip_childless: bool,
    pub premise_role: PremiseRole,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_epsilon: f64,
    pub hidden: usize,
    pub activation: Activation,
    pub neutral_handling: NeutralHandling,
    pub threads: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let t = TrainConfig::default();
        let s = SamplingConfig::default();
        Self {
            store: None,
            manifest: None,
            pairs: None,
            model: None,
            transfer_store: None,
            transfer_manifest: None,
            transfer_pairs: None,
            out: PathBuf::from("out"),
            split: None,
            corpus_all_splits: false,
            mode: CurveMode::Full,
            k_max: s.k_max,
            sample_size: s.sample_size,
            n_samples: s.n_samples,
            seed: 0,
            bins: 40,
            skip_childless: false,
            premise_role: PremiseRole::Original,
            epochs: t.epochs,
            batch_size: t.batch_size,
            learning_rate: t.learning_rate,
            beta1: t.beta1,
            beta2: t.beta2,
            adam_epsilon: t.adam_epsilon,
            hidden: t.hidden,
            activation: t.activation,
            neutral_handling: NeutralHandling::CountAsError,
            threads: None,
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Read { path: path.into(), source })?;
        serde_json::from_str(&text).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            adam_epsilon: self.adam_epsilon,
            seed: self.seed,
            hidden: self.hidden,
            activation: self.activation,
        }
    }

    pub fn sampling_config(&self) -> SamplingConfig {
        SamplingConfig { sample_size: self.sample_size, n_samples: self.n_samples, seed: self.seed, k_max: self.k_max }
    }

    pub fn missing_children(&self) -> MissingChildren {
        if self.skip_childless {
            MissingChildren::Skip
        } else {
            MissingChildren::Fail
        }
    }

    /// Generated-image split matching queries drawn from `split`.
    pub fn corpus_split(&self, split: Option<Split>) -> Option<Split> {
        if self.corpus_all_splits {
            None
        } else {
            split
        }
    }

    pub fn require<'a>(&self, path: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
        path.as_deref().ok_or_else(|| Error::Input(format!("missing required --{flag}")))
    }
}

/// Flags shared by the pipeline subcommands. Each one overrides the
/// corresponding config-file field when given.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// JSON file with RunConfig fields
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Binary embedding store
    #[arg(long)]
    pub store: Option<PathBuf>,
    /// JSONL manifest
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// JSONL labelled pairs
    #[arg(long)]
    pub pairs: Option<PathBuf>,
    /// Classifier checkpoint
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub transfer_store: Option<PathBuf>,
    #[arg(long)]
    pub transfer_manifest: Option<PathBuf>,
    #[arg(long)]
    pub transfer_pairs: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// train, dev or test
    #[arg(long)]
    pub split: Option<Split>,
    #[arg(long)]
    pub corpus_all_splits: bool,
    #[arg(long, value_enum)]
    pub mode: Option<CurveMode>,
    #[arg(long)]
    pub k_max: Option<usize>,
    #[arg(long)]
    pub sample_size: Option<usize>,
    #[arg(long)]
    pub n_samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Histogram bins over [-1, 1]
    #[arg(long)]
    pub bins: Option<usize>,
    /// Drop queries without children in the corpus instead of failing
    #[arg(long)]
    pub skip_childless: bool,
    #[arg(long, value_enum)]
    pub premise_role: Option<PremiseRole>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long, value_enum)]
    pub neutral_handling: Option<NeutralArg>,
    /// Worker threads (default: available cores)
    #[arg(long)]
    pub threads: Option<usize>,
}

impl Flags {
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($($field:ident => $target:ident),* $(,)?) => {
                $(if let Some(v) = &self.$field { c.$target = v.clone().into(); })*
            };
        }
        set!(
            store => store, manifest => manifest, pairs => pairs, model => model,
            transfer_store => transfer_store, transfer_manifest => transfer_manifest,
            transfer_pairs => transfer_pairs, split => split, threads => threads,
        );
        set!(
            out => out, mode => mode, k_max => k_max, sample_size => sample_size,
            n_samples => n_samples, seed => seed, bins => bins, premise_role => premise_role,
            epochs => epochs, batch_size => batch_size, lr => learning_rate, hidden => hidden,
            neutral_handling => neutral_handling,
        );
        c.corpus_all_splits |= self.corpus_all_splits;
        c.skip_childless |= self.skip_childless;
        Ok(c)
    }
}
