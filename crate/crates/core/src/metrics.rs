//! Classification metrics: accuracy, per-class and macro F1, confusion
//! matrix, majority-class baseline.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::label::{position, Label};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClassScore {
    pub label: Label,
    /// Gold count.
    pub support: u64,
    /// Predicted count.
    pub predicted: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvalReport {
    pub labels: Vec<Label>,
    pub n: u64,
    pub accuracy: f64,
    /// One entry per label in `labels`.
    pub per_class: Vec<ClassScore>,
    /// Unweighted mean F1 over the classes present in gold.
    pub macro_f1: f64,
    /// Rows are gold labels, columns predicted labels, both in `labels`
    /// order.
    pub confusion: Vec<Vec<u64>>,
    pub majority_baseline_accuracy: f64,
}

impl EvalReport {
    pub fn f1(&self, label: Label) -> Option<f64> {
        self.per_class.iter().find(|c| c.label == label).map(|c| c.f1)
    }
}

pub fn evaluate(gold: &[Label], pred: &[Label], label_order: &[Label]) -> Result<EvalReport> {
    if gold.len() != pred.len() {
        return Err(Error::LengthMismatch { left: gold.len(), right: pred.len() });
    }
    if gold.is_empty() {
        return Err(Error::Empty("gold labels"));
    }
    let c = label_order.len();
    let mut confusion = alloc::vec![alloc::vec![0u64; c]; c];
    for (&g, &p) in gold.iter().zip(pred) {
        confusion[position(label_order, g)?][position(label_order, p)?] += 1;
    }
    Ok(report_from_confusion(label_order, confusion))
}

/// Builds a report from a confusion matrix (rows gold, columns predicted).
pub fn report_from_confusion(labels: &[Label], confusion: Vec<Vec<u64>>) -> EvalReport {
    let c = labels.len();
    let n: u64 = confusion.iter().flatten().sum();
    let trace: u64 = (0..c).map(|i| confusion[i][i]).sum();
    let mut per_class = Vec::with_capacity(c);
    let (mut f1_sum, mut present) = (0.0, 0usize);
    for (i, &label) in labels.iter().enumerate() {
        let tp = confusion[i][i];
        let support: u64 = confusion[i].iter().sum();
        let predicted: u64 = confusion.iter().map(|row| row[i]).sum();
        let precision = ratio(tp, predicted);
        let recall = ratio(tp, support);
        let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
        if support > 0 {
            f1_sum += f1;
            present += 1;
        }
        per_class.push(ClassScore { label, support, predicted, precision, recall, f1 });
    }
    let max_support = per_class.iter().map(|s| s.support).max().unwrap_or(0);
    EvalReport {
        labels: labels.to_vec(),
        n,
        accuracy: ratio(trace, n),
        per_class,
        macro_f1: if present == 0 { 0.0 } else { f1_sum / present as f64 },
        confusion,
        majority_baseline_accuracy: ratio(max_support, n),
    }
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Accuracy of always predicting the most frequent gold label.
pub fn majority_baseline(gold: &[Label]) -> Result<f64> {
    if gold.is_empty() {
        return Err(Error::Empty("gold labels"));
    }
    let mut counts = [0u64; 3];
    for &g in gold {
        counts[g.tag() as usize] += 1;
    }
    Ok(ratio(*counts.iter().max().unwrap(), gold.len() as u64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use Label::{Contradiction as C, Entailment as E, Neutral as N};

    #[test]
    fn perfect_predictions() {
        let gold = [E, N, C, C, E];
        let r = evaluate(&gold, &gold, &Label::ALL).unwrap();
        assert_eq!(r.accuracy, 1.0);
        assert_eq!(r.macro_f1, 1.0);
    }

    #[test]
    fn hand_computed_two_class() {
        let r = evaluate(&[E, E, C, C], &[E, C, C, C], &Label::ALL).unwrap();
        assert_eq!(r.accuracy, 0.75);
        assert!((r.f1(E).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert!((r.f1(C).unwrap() - 0.8).abs() < 1e-12);
        // Neutral absent from gold and predictions: excluded from the mean.
        assert!((r.macro_f1 - (2.0 / 3.0 + 0.8) / 2.0).abs() < 1e-12);
        assert_eq!(r.confusion, vec![vec![1, 0, 1], vec![0, 0, 0], vec![0, 0, 2]]);
    }

    #[test]
    fn never_predicted_class_scores_zero() {
        let gold = [E, N, C, E, N, C];
        let pred = [E, E, C, E, E, C];
        let r = evaluate(&gold, &pred, &Label::ALL).unwrap();
        assert_eq!(r.f1(N).unwrap(), 0.0);
        assert!(r.macro_f1 < r.accuracy);
    }

    #[test]
    fn predicted_but_absent_class_not_averaged() {
        // Gold has no neutral; a neutral prediction still costs accuracy and
        // the entailment recall, but neutral itself is not averaged.
        let r = evaluate(&[E, E, C], &[E, N, C], &Label::ALL).unwrap();
        assert_eq!(r.f1(N).unwrap(), 0.0);
        let f1_e = 2.0 * 1.0 * 0.5 / 1.5;
        assert!((r.macro_f1 - (f1_e + 1.0) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        assert_eq!(evaluate(&[E], &[E, C], &Label::ALL).unwrap_err(), Error::LengthMismatch { left: 1, right: 2 });
        assert_eq!(evaluate(&[], &[], &Label::ALL).unwrap_err(), Error::Empty("gold labels"));
        assert!(matches!(evaluate(&[N], &[E], &[E, C]), Err(Error::LabelNotInOrder(_))));
        assert_eq!(majority_baseline(&[]).unwrap_err(), Error::Empty("gold labels"));
    }

    #[test]
    fn majority_baselines() {
        let mut gold = vec![E; 1930];
        gold.extend(vec![C; 969]);
        let b = majority_baseline(&gold).unwrap();
        assert_eq!((b * 10_000.0).round() / 10_000.0, 0.6657);
        assert_eq!(majority_baseline(&[C, C]).unwrap(), 1.0);
        assert_eq!(majority_baseline(&[E, N, C]).unwrap(), 1.0 / 3.0);
    }
}
