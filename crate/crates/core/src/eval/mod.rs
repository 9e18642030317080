//! Imbalanced binary classification metrics, curves and calibration.

mod calibrate;
mod curves;
mod report;

pub use calibrate::{brier, fit_isotonic, Calibrator};
pub use curves::{
    auc_value, best_threshold, pr_auc, precision_at_k, roc_auc, threshold_gap, Curve, CurvePoint, Objective,
};
pub use report::{
    render_stratified_text, render_threshold_text, stratified_report, threshold_table, write_stratified_csv,
    write_threshold_csv, ScoredMember, StratumRow, ThresholdRow, DEFAULT_EMERGENT_THRESHOLD,
    DEFAULT_RECURRENT_THRESHOLD, TABLE_THRESHOLDS,
};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub fn n(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn positives(&self) -> u64 {
        self.tp + self.fn_
    }

    pub fn negatives(&self) -> u64 {
        self.fp + self.tn
    }
}

/// Derived rates; `None` where the denominator is zero.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MetricSet {
    pub recall: Option<f64>,
    pub tnr: Option<f64>,
    pub fpr: Option<f64>,
    pub precision: Option<f64>,
    pub npv: Option<f64>,
    pub f1: Option<f64>,
    pub mcc: Option<f64>,
}

pub(crate) fn check_lengths(scores: &[f64], labels: &[bool]) -> Result<()> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: scores.len(),
            right: labels.len(),
        });
    }
    Ok(())
}

/// A row is predicted positive when its score is at least `threshold`.
pub fn confusion_at(scores: &[f64], labels: &[bool], threshold: f64) -> Result<ConfusionCounts> {
    check_lengths(scores, labels)?;
    let mut c = ConfusionCounts::default();
    for (&s, &y) in scores.iter().zip(labels) {
        match (s >= threshold, y) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn derive_metrics(c: &ConfusionCounts) -> MetricSet {
    let tnr = ratio(c.tn, c.tn + c.fp);
    let (tp, fp, fn_, tn) = (c.tp as f64, c.fp as f64, c.fn_ as f64, c.tn as f64);
    let den = ((tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_)).sqrt();
    MetricSet {
        recall: ratio(c.tp, c.tp + c.fn_),
        tnr,
        fpr: tnr.map(|t| 1.0 - t),
        precision: ratio(c.tp, c.tp + c.fp),
        npv: ratio(c.tn, c.tn + c.fn_),
        f1: ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn_),
        mcc: (den > 0.0).then(|| (tp * tn - fp * fn_) / den),
    }
}

/// Percentage with two decimals, or `N.A.` when undefined.
pub fn fmt_pct(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{:.2}%", x * 100.0),
        None => "N.A.".to_string(),
    }
}
