//! Subcommands. Each writes machine-readable results under `--out` and
//! echoes its effective configuration there.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use synthve_core::metrics::{evaluate, EvalReport};
use synthve_core::mlp::Mlp;
use synthve_core::retrieval::{sampled_curves, split_curve, MetricCurve, SampledCurves};
use synthve_core::similarity::{pairwise_stats, SimilarityStats};
use synthve_core::train::{predict_all, train, ExampleSource, FusedPairs, TrainHistory};
use synthve_core::transfer::{evaluate_transfer, TransferPolicy, TransferReport};
use synthve_core::{Label, ResolvedPair, Role, Split};

use crate::checkpoint::{load_model, save_model};
use crate::config::{CurveMode, Flags, RunConfig};
use crate::dataset::{select_pairs, Dataset, PremiseRole};
use crate::error::{Error, Result};
use crate::jsonl::{write_manifest, write_pairs, PairSet};
use crate::output::{self, TableCell};
use crate::par::{init_threads, Rayon};
use crate::store_io::write_store;
use crate::synthetic::{generate, SyntheticSpec};

#[derive(Debug, Parser)]
#[command(name = "synthve", version, about = "Embedding-space validation and entailment classification for visual-entailment datasets")]
pub struct Cli {
    /// More log output (-v info, -vv debug)
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a store, manifest and optional pairs file and report counts
    Validate(Flags),
    /// Cosine distribution of originals against generated images
    Stats(Flags),
    /// Recall/precision@k of originals retrieving their generated children
    Curves(Flags),
    /// Train the fused-feature classifier on the train split
    Train(Flags),
    /// Evaluate a checkpoint on one split of a pairs file
    Eval(Flags),
    /// Evaluate a checkpoint on a dataset with a different label set
    Transfer(Flags),
    /// Full pipeline with results tables
    RunAll(Flags),
    /// Write a seeded synthetic dataset
    Synthetic(SyntheticArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SyntheticArgs {
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long)]
    pub dim: Option<usize>,
    /// Original images in the train split
    #[arg(long)]
    pub train: Option<usize>,
    #[arg(long)]
    pub dev: Option<usize>,
    #[arg(long)]
    pub test: Option<usize>,
    /// Generated children per original
    #[arg(long)]
    pub children: Option<usize>,
    #[arg(long)]
    pub child_noise: Option<f32>,
    /// Replace children by unrelated random vectors
    #[arg(long)]
    pub random_children: bool,
    #[arg(long)]
    pub separation: Option<f32>,
    #[arg(long)]
    pub hypothesis_noise: Option<f32>,
    /// Comma-separated hypothesis labels per caption (default: all three)
    #[arg(long, value_delimiter = ',')]
    pub labels: Vec<Label>,
    #[arg(long)]
    pub seed: Option<u64>,
}

impl SyntheticArgs {
    pub fn spec(&self) -> SyntheticSpec {
        let d = SyntheticSpec::default();
        SyntheticSpec {
            dim: self.dim.unwrap_or(d.dim),
            originals: [
                self.train.unwrap_or(d.originals[0]),
                self.dev.unwrap_or(d.originals[1]),
                self.test.unwrap_or(d.originals[2]),
            ],
            children: self.children.unwrap_or(d.children),
            child_noise: self.child_noise.unwrap_or(d.child_noise),
            random_children: self.random_children,
            separation: self.separation.unwrap_or(d.separation),
            hypothesis_noise: self.hypothesis_noise.unwrap_or(d.hypothesis_noise),
            seed: self.seed.unwrap_or(d.seed),
            labels: if self.labels.is_empty() { d.labels.clone() } else { self.labels.clone() },
            ..d
        }
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let flags = match &cli.command {
        Command::Synthetic(args) => return cmd_synthetic(args),
        Command::Validate(f)
        | Command::Stats(f)
        | Command::Curves(f)
        | Command::Train(f)
        | Command::Eval(f)
        | Command::Transfer(f)
        | Command::RunAll(f) => f,
    };
    let cfg = flags.resolve()?;
    init_threads(cfg.threads);
    match &cli.command {
        Command::Validate(_) => cmd_validate(&cfg),
        Command::Stats(_) => cmd_stats(&cfg),
        Command::Curves(_) => cmd_curves(&cfg),
        Command::Train(_) => cmd_train(&cfg),
        Command::Eval(_) => cmd_eval(&cfg),
        Command::Transfer(_) => cmd_transfer(&cfg),
        Command::RunAll(_) => cmd_run_all(&cfg),
        Command::Synthetic(_) => unreachable!(),
    }
}

fn load(cfg: &RunConfig) -> Result<Dataset> {
    Dataset::load(cfg.require(&cfg.store, "store")?, cfg.require(&cfg.manifest, "manifest")?)
}

fn load_pairs(cfg: &RunConfig, ds: &Dataset) -> Result<PairSet> {
    ds.pairs(cfg.require(&cfg.pairs, "pairs")?)
}

fn prepare_out(cfg: &RunConfig) -> Result<&Path> {
    output::ensure_dir(&cfg.out)?;
    output::write_json(&cfg.out.join("effective_config.json"), cfg)?;
    Ok(&cfg.out)
}

fn subdir(parent: &Path, name: &str) -> Result<PathBuf> {
    let dir = parent.join(name);
    output::ensure_dir(&dir)?;
    Ok(dir)
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Internal(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn split_name(split: Option<Split>) -> &'static str {
    split.map_or("all", Split::as_str)
}

// ---------------------------------------------------------------- validate

#[derive(Debug, Serialize)]
pub struct ValidationReport {
    pub vectors: usize,
    pub dim: usize,
    /// role -> split -> count
    pub entries: BTreeMap<&'static str, BTreeMap<&'static str, usize>>,
    pub totals: BTreeMap<&'static str, usize>,
    /// split -> label -> count
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pairs: Option<BTreeMap<&'static str, BTreeMap<&'static str, usize>>>,
    pub zero_norm: Vec<String>,
}

fn validation_report(ds: &Dataset, pairs: Option<&PairSet>) -> ValidationReport {
    let mut entries: BTreeMap<_, BTreeMap<_, _>> = BTreeMap::new();
    let mut totals = BTreeMap::new();
    for ((role, split), n) in ds.manifest.counts() {
        entries.entry(role.as_str()).or_default().insert(split.as_str(), n);
        *totals.entry(role.as_str()).or_default() += n;
    }
    let pairs = pairs.map(|p| {
        let mut m: BTreeMap<_, BTreeMap<_, usize>> = BTreeMap::new();
        for r in &p.resolved {
            *m.entry(r.split.as_str()).or_default().entry(r.label.as_str()).or_default() += 1;
        }
        m
    });
    let zero_norm = ds
        .manifest
        .entries()
        .iter()
        .enumerate()
        .filter(|&(i, _)| ds.store.norm(ds.manifest.store_row(i)) == 0.0)
        .map(|(_, e)| e.id.clone())
        .collect();
    ValidationReport { vectors: ds.store.len(), dim: ds.store.dim(), entries, totals, pairs, zero_norm }
}

fn check_report(report: &ValidationReport) -> Result<()> {
    match report.zero_norm.first() {
        Some(first) => Err(Error::Input(format!(
            "{} manifest entries have zero-norm vectors (first: `{first}`)",
            report.zero_norm.len()
        ))),
        None => Ok(()),
    }
}

fn cmd_validate(cfg: &RunConfig) -> Result<()> {
    let ds = load(cfg)?;
    let pairs = cfg.pairs.as_ref().map(|p| ds.pairs(p)).transpose()?;
    let report = validation_report(&ds, pairs.as_ref());
    print_json(&report)?;
    check_report(&report)
}

// ------------------------------------------------------------------- stats

#[derive(Debug, Serialize)]
pub struct StatsOutput {
    pub split: &'static str,
    pub corpus_split: &'static str,
    pub n_queries: usize,
    pub n_corpus: usize,
    pub stats: SimilarityStats,
}

fn rows_of(ds: &Dataset, role: Role, split: Option<Split>) -> Vec<usize> {
    ds.manifest.select(role, split).into_iter().map(|i| ds.manifest.store_row(i)).collect()
}

fn stats_into(ds: &Dataset, cfg: &RunConfig, split: Option<Split>, out: &Path) -> Result<StatsOutput> {
    let corpus_split = cfg.corpus_split(split);
    let queries = rows_of(ds, Role::OriginalImage, split);
    let corpus = rows_of(ds, Role::GeneratedImage, corpus_split);
    let stats = pairwise_stats(&ds.store, &queries, &corpus, cfg.bins, &Rayon)?;
    log::info!("{} scores: mean {:.4}, std {:.4}", stats.n, stats.mean, stats.std);
    let result = StatsOutput {
        split: split_name(split),
        corpus_split: split_name(corpus_split),
        n_queries: queries.len(),
        n_corpus: corpus.len(),
        stats,
    };
    output::write_json(&out.join("stats.json"), &result)?;
    output::write_histogram_csv(&out.join("histogram.csv"), &result.stats)?;
    Ok(result)
}

fn cmd_stats(cfg: &RunConfig) -> Result<()> {
    let ds = load(cfg)?;
    let out = prepare_out(cfg)?;
    stats_into(&ds, cfg, cfg.split, out).map(drop)
}

// ------------------------------------------------------------------ curves

#[derive(Debug, Serialize)]
struct CurveOutput<'a> {
    mode: CurveMode,
    split: &'static str,
    corpus_split: &'static str,
    curve: &'a MetricCurve,
}

fn full_curve_into(ds: &Dataset, cfg: &RunConfig, split: Option<Split>, out: &Path) -> Result<MetricCurve> {
    let corpus_split = cfg.corpus_split(split);
    let curve = split_curve(&ds.store, &ds.manifest, split, corpus_split, cfg.k_max, cfg.missing_children(), &Rayon)?;
    output::write_curve_csv(&out.join("curve.csv"), &curve)?;
    let meta = CurveOutput {
        mode: CurveMode::Full,
        split: split_name(split),
        corpus_split: split_name(corpus_split),
        curve: &curve,
    };
    output::write_json(&out.join("curve.json"), &meta)?;
    Ok(curve)
}

fn sampled_curves_into(ds: &Dataset, cfg: &RunConfig, split: Split, out: &Path) -> Result<SampledCurves> {
    let curves = sampled_curves(&ds.store, &ds.manifest, split, &cfg.sampling_config(), &Rayon)?;
    log::info!("{} samples of {} originals", curves.samples.len(), cfg.sample_size);
    output::write_curve_csv(&out.join("curve.csv"), &curves.aggregate)?;
    output::write_samples_csv(&out.join("samples.csv"), &curves.samples)?;
    let meta = CurveOutput {
        mode: CurveMode::Sampled,
        split: split.as_str(),
        corpus_split: "sample",
        curve: &curves.aggregate,
    };
    output::write_json(&out.join("curve.json"), &meta)?;
    output::write_json(&out.join("curves.json"), &curves)?;
    Ok(curves)
}

fn cmd_curves(cfg: &RunConfig) -> Result<()> {
    let ds = load(cfg)?;
    let out = prepare_out(cfg)?;
    match cfg.mode {
        CurveMode::Full => full_curve_into(&ds, cfg, cfg.split, out).map(drop),
        CurveMode::Sampled => sampled_curves_into(&ds, cfg, cfg.split.unwrap_or(Split::Train), out).map(drop),
    }
}

// ------------------------------------------------------------------- train

fn subset(pairs: &[ResolvedPair], split: Option<Split>, role: PremiseRole) -> Result<Vec<ResolvedPair>> {
    let chosen = select_pairs(pairs, split, role);
    if chosen.is_empty() {
        return Err(Error::Input(format!(
            "no pairs in split `{}` with premise role `{}`",
            split_name(split),
            role.as_str()
        )));
    }
    Ok(chosen)
}

fn train_into(ds: &Dataset, pairs: &PairSet, cfg: &RunConfig, role: PremiseRole, out: &Path) -> Result<(Mlp<f32>, TrainHistory)> {
    let train_pairs = subset(&pairs.resolved, Some(Split::Train), role)?;
    let dev_pairs = subset(&pairs.resolved, Some(Split::Dev), role)?;
    log::info!("training on {} pairs, selecting on {}", train_pairs.len(), dev_pairs.len());
    let (model, history) = train(
        &FusedPairs::new(&ds.store, &train_pairs),
        &FusedPairs::new(&ds.store, &dev_pairs),
        &cfg.train_config(),
        &Rayon,
    )?;
    log::info!("best epoch {}", history.best_epoch);
    save_model(&model, out.join("model.bin"))?;
    output::write_history_csv(&out.join("history.csv"), &history)?;
    output::write_json(&out.join("history.json"), &history)?;
    Ok((model, history))
}

fn cmd_train(cfg: &RunConfig) -> Result<()> {
    let ds = load(cfg)?;
    let pairs = load_pairs(cfg, &ds)?;
    let out = prepare_out(cfg)?;
    train_into(&ds, &pairs, cfg, cfg.premise_role, out).map(drop)
}

// -------------------------------------------------------------------- eval

#[derive(Debug, Serialize)]
struct EvalOutput<'a> {
    split: &'static str,
    premise_role: PremiseRole,
    report: &'a EvalReport,
}

fn check_input_dim(model: &Mlp<f32>, source: &impl ExampleSource) -> Result<()> {
    if model.d_in() != source.input_dim() {
        return Err(Error::Input(format!(
            "checkpoint expects {} inputs but the store fuses to {}",
            model.d_in(),
            source.input_dim()
        )));
    }
    Ok(())
}

fn eval_into(
    ds: &Dataset,
    pairs: &PairSet,
    model: &Mlp<f32>,
    split: Split,
    role: PremiseRole,
    out: &Path,
) -> Result<EvalReport> {
    let test = subset(&pairs.resolved, Some(split), role)?;
    let source = FusedPairs::new(&ds.store, &test);
    check_input_dim(model, &source)?;
    let gold: Vec<Label> = test.iter().map(|p| p.label).collect();
    if let Some(l) = gold.iter().find(|l| !model.labels().contains(l)) {
        return Err(Error::Input(format!(
            "gold label `{l}` is not among the checkpoint's labels {:?}",
            model.labels().iter().map(|l| l.as_str()).collect::<Vec<_>>()
        )));
    }
    let predicted = predict_all(model, &source, &Rayon)?;
    let report = evaluate(&gold, &predicted, model.labels())?;
    log::info!("accuracy {:.4}, macro F1 {:.4}", report.accuracy, report.macro_f1);
    output::write_json(&out.join("eval_report.json"), &EvalOutput { split: split.as_str(), premise_role: role, report: &report })?;
    output::write_confusion_csv(&out.join("confusion.csv"), &report)?;
    Ok(report)
}

fn cmd_eval(cfg: &RunConfig) -> Result<()> {
    let model = load_model(cfg.require(&cfg.model, "model")?)?;
    let ds = load(cfg)?;
    let pairs = load_pairs(cfg, &ds)?;
    let out = prepare_out(cfg)?;
    eval_into(&ds, &pairs, &model, cfg.split.unwrap_or(Split::Test), cfg.premise_role, out).map(drop)
}

// ---------------------------------------------------------------- transfer

#[derive(Debug, Serialize)]
struct TransferOutput<'a> {
    split: &'static str,
    premise_role: PremiseRole,
    target_labels: Vec<Label>,
    policy: &'a TransferPolicy,
    #[serde(flatten)]
    result: &'a TransferReport,
}

fn load_target(cfg: &RunConfig) -> Result<(Dataset, PairSet)> {
    let store = cfg.transfer_store.as_ref().or(cfg.store.as_ref());
    let manifest = cfg.transfer_manifest.as_ref().or(cfg.manifest.as_ref());
    let pairs = cfg.transfer_pairs.as_ref().or(cfg.pairs.as_ref());
    let ds = Dataset::load(
        store.ok_or_else(|| Error::Input("missing required --transfer-store".into()))?,
        manifest.ok_or_else(|| Error::Input("missing required --transfer-manifest".into()))?,
    )?;
    let pairs = ds.pairs(pairs.ok_or_else(|| Error::Input("missing required --transfer-pairs".into()))?)?;
    Ok((ds, pairs))
}

fn transfer_into(
    ds: &Dataset,
    pairs: &PairSet,
    model: &Mlp<f32>,
    cfg: &RunConfig,
    role: PremiseRole,
    out: &Path,
) -> Result<TransferReport> {
    let target = subset(&pairs.resolved, cfg.split, role)?;
    let source = FusedPairs::new(&ds.store, &target);
    check_input_dim(model, &source)?;
    let target_labels: Vec<Label> = Label::ALL.into_iter().filter(|l| target.iter().any(|p| p.label == *l)).collect();
    if let Some(l) = target_labels.iter().find(|l| !model.labels().contains(l)) {
        return Err(Error::Input(format!("target label `{l}` is not among the checkpoint's labels")));
    }
    let policy = TransferPolicy::for_target(model.labels(), &target_labels, cfg.neutral_handling);
    let result = evaluate_transfer(model, &source, &policy, &Rayon)?;
    log::info!(
        "accuracy {:.4}, macro F1 {:.4}, {} unprojectable predictions",
        result.report.accuracy,
        result.report.macro_f1,
        result.neutral_predictions
    );
    let meta = TransferOutput { split: split_name(cfg.split), premise_role: role, target_labels, policy: &policy, result: &result };
    output::write_json(&out.join("transfer_report.json"), &meta)?;
    output::write_confusion_csv(&out.join("confusion.csv"), &result.report)?;
    Ok(result)
}

fn cmd_transfer(cfg: &RunConfig) -> Result<()> {
    let model = load_model(cfg.require(&cfg.model, "model")?)?;
    let (ds, pairs) = load_target(cfg)?;
    let out = prepare_out(cfg)?;
    transfer_into(&ds, &pairs, &model, cfg, cfg.premise_role, out).map(drop)
}

// ----------------------------------------------------------------- run-all

#[derive(Debug, Serialize)]
struct Summary {
    stats: StatsOutput,
    full_curve_recall_at_k_max: f64,
    sampled_recall_at_k_max: f64,
    best_epochs: BTreeMap<&'static str, usize>,
    table1: Vec<TableCell>,
    #[serde(skip_serializing_if = "Option::is_none")]
    table2: Option<Vec<TableCell>>,
}

const TABLE_ROLES: [PremiseRole; 2] = [PremiseRole::Original, PremiseRole::Generated];

fn cell(train: PremiseRole, test: PremiseRole, r: &EvalReport) -> TableCell {
    TableCell {
        train_set: train.as_str().into(),
        test_set: test.as_str().into(),
        n: r.n as usize,
        accuracy: r.accuracy,
        macro_f1: r.macro_f1,
    }
}

fn cmd_run_all(cfg: &RunConfig) -> Result<()> {
    let ds = load(cfg)?;
    let pairs = load_pairs(cfg, &ds)?;
    let target = match (&cfg.transfer_store, &cfg.transfer_manifest, &cfg.transfer_pairs) {
        (None, None, None) => None,
        (Some(_), Some(_), Some(_)) => Some(load_target(cfg)?),
        _ => return Err(Error::Input("--transfer-store, --transfer-manifest and --transfer-pairs go together".into())),
    };
    let report = validation_report(&ds, Some(&pairs));
    check_report(&report)?;
    let out = prepare_out(cfg)?;
    output::write_json(&out.join("validation.json"), &report)?;

    let analysis_split = cfg.split.unwrap_or(Split::Dev);
    let stats = stats_into(&ds, cfg, Some(analysis_split), &subdir(out, "stats")?)?;
    let curves = subdir(out, "curves")?;
    let full = full_curve_into(&ds, cfg, Some(analysis_split), &subdir(&curves, "full")?)?;
    let sampled = sampled_curves_into(&ds, cfg, Split::Train, &subdir(&curves, "sampled")?)?;

    let mut models = Vec::new();
    let mut best_epochs = BTreeMap::new();
    for role in TABLE_ROLES {
        let (model, history) = train_into(&ds, &pairs, cfg, role, &subdir(out, &format!("models/{}", role.as_str()))?)?;
        best_epochs.insert(role.as_str(), history.best_epoch);
        models.push((role, model));
    }

    let mut table1 = Vec::new();
    for (train_role, model) in &models {
        for test_role in TABLE_ROLES {
            let dir = subdir(out, &format!("eval/{}_on_{}", train_role.as_str(), test_role.as_str()))?;
            let r = eval_into(&ds, &pairs, model, Split::Test, test_role, &dir)?;
            table1.push(cell(*train_role, test_role, &r));
        }
    }
    output::write_table_csv(&out.join("table1.csv"), &table1)?;

    let table2 = match &target {
        None => None,
        Some((tds, tpairs)) => {
            let mut cells = Vec::new();
            for (train_role, model) in &models {
                for test_role in TABLE_ROLES {
                    let dir = subdir(out, &format!("transfer/{}_on_{}", train_role.as_str(), test_role.as_str()))?;
                    let r = transfer_into(tds, tpairs, model, cfg, test_role, &dir)?;
                    cells.push(cell(*train_role, test_role, &r.report));
                }
            }
            output::write_table_csv(&out.join("table2.csv"), &cells)?;
            Some(cells)
        }
    };

    let last = |c: &MetricCurve| c.recall.last().copied().unwrap_or(0.0);
    let summary = Summary {
        full_curve_recall_at_k_max: last(&full),
        sampled_recall_at_k_max: last(&sampled.aggregate),
        stats,
        best_epochs,
        table1,
        table2,
    };
    output::write_json(&out.join("summary.json"), &summary)
}

// --------------------------------------------------------------- synthetic

fn cmd_synthetic(args: &SyntheticArgs) -> Result<()> {
    let spec = args.spec();
    let ds = generate(&spec)?;
    output::ensure_dir(&args.out)?;
    write_store(&ds.store, args.out.join("store.veem"))?;
    write_manifest(args.out.join("manifest.jsonl"), &ds.entries)?;
    write_pairs(args.out.join("pairs.jsonl"), &ds.pairs)?;
    output::write_json(&args.out.join("synthetic_spec.json"), &spec)?;
    log::info!("wrote {} vectors, {} pairs to {}", ds.store.len(), ds.pairs.len(), args.out.display());
    Ok(())
}
