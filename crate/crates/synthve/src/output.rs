//! CSV and JSON writers for analysis results.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use synthve_core::metrics::EvalReport;
use synthve_core::retrieval::MetricCurve;
use synthve_core::similarity::SimilarityStats;
use synthve_core::train::TrainHistory;

use crate::error::{Error, Result};

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::Write { path: dir.into(), source })
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Internal(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|source| Error::Write { path: path.into(), source })
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    let file = File::create(path).map_err(|source| Error::Write { path: path.into(), source })?;
    Ok(csv::Writer::from_writer(BufWriter::new(file)))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::Write { path: path.into(), source },
        other => Error::Internal(format!("{other:?}")),
    }
}

fn finish(path: &Path, w: csv::Writer<BufWriter<File>>) -> Result<()> {
    let mut inner = w.into_inner().map_err(|e| Error::Write { path: path.into(), source: e.into_error() })?;
    inner.flush().map_err(|source| Error::Write { path: path.into(), source })
}

/// Columns: k, recall_mean, recall_std, precision_mean, precision_std,
/// hits_mean.
pub fn write_curve_csv(path: &Path, curve: &MetricCurve) -> Result<()> {
    let err = csv_err(path);
    let mut w = csv_writer(path)?;
    w.write_record(["k", "recall_mean", "recall_std", "precision_mean", "precision_std", "hits_mean"])
        .map_err(&err)?;
    let std = |s: &Option<Vec<f64>>, i: usize| s.as_ref().map_or(0.0, |v| v[i]);
    for (i, k) in curve.ks.iter().enumerate() {
        w.serialize((
            k,
            curve.recall[i],
            std(&curve.std_recall, i),
            curve.precision[i],
            std(&curve.std_precision, i),
            curve.mean_hits[i],
        ))
        .map_err(&err)?;
    }
    finish(path, w)
}

/// One row per (sample, k); the std columns are across the sample's
/// queries.
pub fn write_samples_csv(path: &Path, samples: &[MetricCurve]) -> Result<()> {
    let err = csv_err(path);
    let mut w = csv_writer(path)?;
    w.write_record(["sample", "k", "recall_mean", "recall_std", "precision_mean", "precision_std"])
        .map_err(&err)?;
    for (s, curve) in samples.iter().enumerate() {
        let std = |v: &Option<Vec<f64>>, i: usize| v.as_ref().map_or(0.0, |v| v[i]);
        for (i, k) in curve.ks.iter().enumerate() {
            w.serialize((s, k, curve.recall[i], std(&curve.std_recall, i), curve.precision[i], std(&curve.std_precision, i)))
                .map_err(&err)?;
        }
    }
    finish(path, w)
}

/// Columns: epoch, train_loss, train_acc, dev_acc, dev_f1.
pub fn write_history_csv(path: &Path, history: &TrainHistory) -> Result<()> {
    let err = csv_err(path);
    let mut w = csv_writer(path)?;
    w.write_record(["epoch", "train_loss", "train_acc", "dev_acc", "dev_f1"]).map_err(&err)?;
    for e in &history.epochs {
        w.serialize((e.epoch, e.train_loss, e.train_accuracy, e.dev_accuracy, e.dev_macro_f1)).map_err(&err)?;
    }
    finish(path, w)
}

/// Header row `gold\predicted, <labels..>`, then one row per gold label.
pub fn write_confusion_csv(path: &Path, report: &EvalReport) -> Result<()> {
    let err = csv_err(path);
    let mut w = csv_writer(path)?;
    let mut header = vec!["gold\\predicted".to_string()];
    header.extend(report.labels.iter().map(|l| l.to_string()));
    w.write_record(&header).map_err(&err)?;
    for (label, row) in report.labels.iter().zip(&report.confusion) {
        let mut rec = vec![label.to_string()];
        rec.extend(row.iter().map(u64::to_string));
        w.write_record(&rec).map_err(&err)?;
    }
    finish(path, w)
}

/// Columns: bin_lower, bin_upper, count.
pub fn write_histogram_csv(path: &Path, stats: &SimilarityStats) -> Result<()> {
    let err = csv_err(path);
    let mut w = csv_writer(path)?;
    w.write_record(["bin_lower", "bin_upper", "count"]).map_err(&err)?;
    for (i, b) in stats.histogram.iter().enumerate() {
        let upper = stats.histogram.get(i + 1).map_or(1.0, |next| next.lower);
        w.serialize((b.lower, upper, b.count)).map_err(&err)?;
    }
    finish(path, w)
}

/// One cell of a train-set by test-set results matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableCell {
    pub train_set: String,
    pub test_set: String,
    pub n: usize,
    pub accuracy: f64,
    pub macro_f1: f64,
}

/// Columns: train_set, test_set, n, accuracy, macro_f1.
pub fn write_table_csv(path: &Path, cells: &[TableCell]) -> Result<()> {
    let err = csv_err(path);
    let mut w = csv_writer(path)?;
    for c in cells {
        w.serialize(c).map_err(&err)?;
    }
    finish(path, w)
}
