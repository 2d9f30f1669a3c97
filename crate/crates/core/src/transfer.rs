//! Scoring a trained model on a dataset with a smaller label set.
//!
//! Predictions are always made in the model's full label space. Labels the
//! target set cannot express (neutral, for a two-label dataset) either
//! count as errors or are dropped from scoring; their count is reported
//! in both cases.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::label::Label;
use crate::metrics::{evaluate, EvalReport};
use crate::mlp::Mlp;
use crate::train::{predict_all, ExampleSource};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum NeutralHandling {
    #[default]
    CountAsError,
    ExcludeAndReport,
}

/// Maps each model label onto a target label, or onto nothing when the
/// target set has no counterpart.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TransferPolicy {
    pub projection: Vec<(Label, Option<Label>)>,
    pub neutral_handling: NeutralHandling,
}

impl TransferPolicy {
    /// Identity projection for model labels that appear in `target_labels`;
    /// every other model label is unprojectable.
    pub fn for_target(model_labels: &[Label], target_labels: &[Label], neutral_handling: NeutralHandling) -> Self {
        Self {
            projection: model_labels
                .iter()
                .map(|&l| (l, target_labels.contains(&l).then_some(l)))
                .collect(),
            neutral_handling,
        }
    }

    fn project(&self, label: Label) -> Result<Option<Label>> {
        self.projection
            .iter()
            .find(|(from, _)| *from == label)
            .map(|(_, to)| *to)
            .ok_or_else(|| Error::LabelNotInOrder(label.as_str().into()))
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TransferReport {
    pub report: EvalReport,
    /// Predictions with no counterpart in the target label set.
    pub neutral_predictions: usize,
    /// Examples dropped from scoring (non-zero only under
    /// `ExcludeAndReport`).
    pub excluded: usize,
    pub neutral_handling: NeutralHandling,
}

/// Scores model-space predictions against target gold labels.
///
/// The report is computed over `model_labels`, so an unprojectable
/// prediction kept under `CountAsError` shows up as its own column of the
/// confusion matrix.
pub fn score_transfer(
    gold: &[Label],
    predicted: &[Label],
    model_labels: &[Label],
    policy: &TransferPolicy,
) -> Result<TransferReport> {
    if gold.len() != predicted.len() {
        return Err(Error::LengthMismatch { left: gold.len(), right: predicted.len() });
    }
    if gold.is_empty() {
        return Err(Error::Empty("target set"));
    }
    let mut kept_gold = Vec::with_capacity(gold.len());
    let mut kept_pred = Vec::with_capacity(gold.len());
    let mut unprojected = 0;
    for (&g, &p) in gold.iter().zip(predicted) {
        match policy.project(p)? {
            Some(mapped) => {
                kept_gold.push(g);
                kept_pred.push(mapped);
            }
            None => {
                unprojected += 1;
                if policy.neutral_handling == NeutralHandling::CountAsError {
                    kept_gold.push(g);
                    kept_pred.push(p);
                }
            }
        }
    }
    if kept_gold.is_empty() {
        return Err(Error::Empty("scored examples (all predictions excluded)"));
    }
    let excluded = gold.len() - kept_gold.len();
    Ok(TransferReport {
        report: evaluate(&kept_gold, &kept_pred, model_labels)?,
        neutral_predictions: unprojected,
        excluded,
        neutral_handling: policy.neutral_handling,
    })
}

/// Predicts every target example with `model` and scores it under
/// `policy`.
pub fn evaluate_transfer<S: ExampleSource, E: Executor>(
    model: &Mlp<f32>,
    target: &S,
    policy: &TransferPolicy,
    exec: &E,
) -> Result<TransferReport> {
    if target.is_empty() {
        return Err(Error::Empty("target set"));
    }
    let gold: Vec<Label> = (0..target.len()).map(|i| target.label(i)).collect();
    let predicted = predict_all(model, target, exec)?;
    score_transfer(&gold, &predicted, model.labels(), policy)
}
