//! Single-label classification reports and example-based multi-label metrics.
//!
//! Multi-label terms use the usual empty-set conventions: when both the true
//! and predicted sets are empty the term is 1; when only one is empty,
//! precision, recall, F1 and accuracy terms are 0. Reports count how often
//! each convention fired.

use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::autolabel::{AutoLabeledDataset, MultiLabelSet};

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("{truth} true labels but {pred} predictions")]
    LengthMismatch { truth: usize, pred: usize },
    #[error("nothing to evaluate")]
    Empty,
    #[error("label {0:?} is not a known class")]
    UnknownLabel(String),
    #[error("label sets of width {0} and {1}")]
    WidthMismatch(usize, usize),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassMetrics {
    pub class: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
    pub predicted: u64,
    /// No instance was predicted as this class, so precision is reported as 0.
    pub no_predictions: bool,
    /// No true instance of this class, so recall is reported as 0.
    pub no_support: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingleLabelReport {
    pub accuracy: f64,
    pub n: u64,
    pub per_class: Vec<ClassMetrics>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    /// Rows are true classes, columns predicted classes.
    pub confusion: Vec<Vec<u64>>,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Per-class precision/recall/F1 with macro averages over `class_names`.
pub fn single_label_report<S: AsRef<str>, T: AsRef<str>>(
    y_true: &[S],
    y_pred: &[T],
    class_names: &[String],
) -> Result<SingleLabelReport, EvalError> {
    if y_true.len() != y_pred.len() {
        return Err(EvalError::LengthMismatch { truth: y_true.len(), pred: y_pred.len() });
    }
    if y_true.is_empty() {
        return Err(EvalError::Empty);
    }
    let index = |l: &str| class_names.iter().position(|c| c == l).ok_or_else(|| EvalError::UnknownLabel(l.to_string()));
    let l = class_names.len();
    let mut confusion = vec![vec![0u64; l]; l];
    for (t, p) in y_true.iter().zip(y_pred) {
        confusion[index(t.as_ref())?][index(p.as_ref())?] += 1;
    }
    let n = y_true.len() as u64;
    let trace: u64 = (0..l).map(|c| confusion[c][c]).sum();
    let per_class: Vec<ClassMetrics> = (0..l)
        .map(|c| {
            let tp = confusion[c][c];
            let support: u64 = confusion[c].iter().sum();
            let predicted: u64 = confusion.iter().map(|row| row[c]).sum();
            let precision = ratio(tp, predicted);
            let recall = ratio(tp, support);
            ClassMetrics {
                class: class_names[c].clone(),
                precision,
                recall,
                f1: harmonic(precision, recall),
                support,
                predicted,
                no_predictions: predicted == 0,
                no_support: support == 0,
            }
        })
        .collect();
    let mean = |f: fn(&ClassMetrics) -> f64| per_class.iter().map(f).sum::<f64>() / l.max(1) as f64;
    Ok(SingleLabelReport {
        accuracy: ratio(trace, n),
        n,
        macro_precision: mean(|m| m.precision),
        macro_recall: mean(|m| m.recall),
        macro_f1: mean(|m| m.f1),
        per_class,
        confusion,
    })
}

impl SingleLabelReport {
    /// Fixed-width table of per-class metrics followed by the macro average.
    pub fn to_table(&self) -> String {
        let width = self.per_class.iter().map(|m| m.class.chars().count()).max().unwrap_or(5).max(13);
        let mut out = String::new();
        let _ = writeln!(out, "{:<width$} {:>9} {:>9} {:>9} {:>8}", "class", "precision", "recall", "f1", "support");
        for m in &self.per_class {
            let flag = match (m.no_predictions, m.no_support) {
                (true, true) => " (no predictions, no support)",
                (true, false) => " (no predictions)",
                (false, true) => " (no support)",
                _ => "",
            };
            let _ = writeln!(out, "{:<width$} {:>9.4} {:>9.4} {:>9.4} {:>8}{flag}", m.class, m.precision, m.recall, m.f1, m.support);
        }
        let _ = writeln!(out, "{:<width$} {:>9.4} {:>9.4} {:>9.4} {:>8}", "macro average", self.macro_precision, self.macro_recall, self.macro_f1, self.n);
        let _ = writeln!(out, "accuracy {:.4} over {} documents", self.accuracy, self.n);
        out
    }
}

fn check_pairs(ys: &[MultiLabelSet], zs: &[MultiLabelSet]) -> Result<(), EvalError> {
    if ys.len() != zs.len() {
        return Err(EvalError::LengthMismatch { truth: ys.len(), pred: zs.len() });
    }
    if ys.is_empty() {
        return Err(EvalError::Empty);
    }
    for (y, z) in ys.iter().zip(zs) {
        if y.len() != z.len() {
            return Err(EvalError::WidthMismatch(y.len(), z.len()));
        }
    }
    Ok(())
}

/// `(|Y ∩ Z|, |Y|, |Z|)` for one instance.
fn overlap(y: &MultiLabelSet, z: &MultiLabelSet) -> (usize, usize, usize) {
    let inter = y.bits().iter().zip(z.bits()).filter(|(a, b)| **a == 1 && **b == 1).count();
    (inter, y.cardinality(), z.cardinality())
}

fn mean_term(ys: &[MultiLabelSet], zs: &[MultiLabelSet], term: impl Fn(usize, usize, usize) -> f64) -> Result<f64, EvalError> {
    check_pairs(ys, zs)?;
    Ok(ys.iter().zip(zs).map(|(y, z)| {
        let (i, ny, nz) = overlap(y, z);
        if ny == 0 && nz == 0 {
            1.0
        } else {
            term(i, ny, nz)
        }
    }).sum::<f64>() / ys.len() as f64)
}

fn frac(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Mean Jaccard index `|Y ∩ Z| / |Y ∪ Z|`.
pub fn multilabel_accuracy(ys: &[MultiLabelSet], zs: &[MultiLabelSet]) -> Result<f64, EvalError> {
    mean_term(ys, zs, |i, ny, nz| frac(i, ny + nz - i))
}

/// Mean `|Y ∩ Z| / |Z|`.
pub fn multilabel_precision(ys: &[MultiLabelSet], zs: &[MultiLabelSet]) -> Result<f64, EvalError> {
    mean_term(ys, zs, |i, _, nz| frac(i, nz))
}

/// Mean `|Y ∩ Z| / |Y|`.
pub fn multilabel_recall(ys: &[MultiLabelSet], zs: &[MultiLabelSet]) -> Result<f64, EvalError> {
    mean_term(ys, zs, |i, ny, _| frac(i, ny))
}

/// Mean Dice coefficient `2|Y ∩ Z| / (|Y| + |Z|)`.
pub fn multilabel_f1(ys: &[MultiLabelSet], zs: &[MultiLabelSet]) -> Result<f64, EvalError> {
    mean_term(ys, zs, |i, ny, nz| frac(2 * i, ny + nz))
}

/// Mean bitwise disagreement over all instances and labels.
pub fn hamming_loss(ys: &[MultiLabelSet], zs: &[MultiLabelSet]) -> Result<f64, EvalError> {
    check_pairs(ys, zs)?;
    let labels = ys[0].len();
    let wrong: usize = ys.iter().zip(zs).map(|(y, z)| y.bits().iter().zip(z.bits()).filter(|(a, b)| a != b).count()).sum();
    Ok(frac(wrong, labels * ys.len()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiLabelReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub hamming_loss: f64,
    pub n: usize,
    /// Instances where both sets were empty (every term counted as 1).
    pub both_empty: usize,
    /// Instances with an empty prediction but a non-empty truth.
    pub empty_prediction: usize,
    /// Instances with an empty truth but a non-empty prediction.
    pub empty_truth: usize,
}

pub fn multilabel_report(ys: &[MultiLabelSet], zs: &[MultiLabelSet]) -> Result<MultiLabelReport, EvalError> {
    let count = |f: fn(usize, usize) -> bool| {
        ys.iter().zip(zs).filter(|(y, z)| f(y.cardinality(), z.cardinality())).count()
    };
    Ok(MultiLabelReport {
        accuracy: multilabel_accuracy(ys, zs)?,
        precision: multilabel_precision(ys, zs)?,
        recall: multilabel_recall(ys, zs)?,
        f1: multilabel_f1(ys, zs)?,
        hamming_loss: hamming_loss(ys, zs)?,
        n: ys.len(),
        both_empty: count(|y, z| y == 0 && z == 0),
        empty_prediction: count(|y, z| y > 0 && z == 0),
        empty_truth: count(|y, z| y == 0 && z > 0),
    })
}

impl MultiLabelReport {
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        for (name, v) in [
            ("accuracy", self.accuracy),
            ("precision", self.precision),
            ("recall", self.recall),
            ("f1", self.f1),
            ("hamming_loss", self.hamming_loss),
        ] {
            let _ = writeln!(out, "{name:<13} {v:.4}");
        }
        let _ = writeln!(
            out,
            "n = {}; empty-set conventions applied: both empty {}, empty prediction {}, empty truth {}",
            self.n, self.both_empty, self.empty_prediction, self.empty_truth
        );
        out
    }
}

/// Dominant automatic class scored against the original label. Records
/// without an original label are skipped.
pub fn cluster_vs_original(dataset: &AutoLabeledDataset) -> Result<SingleLabelReport, EvalError> {
    let mut truth = Vec::new();
    let mut pred = Vec::new();
    for r in &dataset.records {
        match &r.original {
            Some(o) => {
                truth.push(o.as_str());
                pred.push(dataset.dominant_class(r));
            }
            None => log::warn!("cluster_vs_original: record {} has no original label, skipped", r.id),
        }
    }
    single_label_report(&truth, &pred, &dataset.class_names)
}
