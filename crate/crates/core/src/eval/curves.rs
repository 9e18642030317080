use super::{check_lengths, derive_metrics, ConfusionCounts};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurvePoint {
    /// Rows scoring at or above this value are predicted positive.
    pub threshold: f64,
    pub x: f64,
    pub y: f64,
}

/// ROC points are (FPR, TPR); PR points are (recall, precision).
#[derive(Clone, Debug, PartialEq)]
pub struct Curve {
    pub points: Vec<CurvePoint>,
    pub auc: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Objective {
    F1,
    Mcc,
}

/// Distinct scores in descending order with their positive and negative counts.
fn tie_groups(scores: &[f64], labels: &[bool]) -> Vec<(f64, u64, u64)> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut out: Vec<(f64, u64, u64)> = Vec::new();
    for i in idx {
        let (s, y) = (scores[i], labels[i]);
        match out.last_mut() {
            Some(g) if g.0 == s => {
                if y {
                    g.1 += 1
                } else {
                    g.2 += 1
                }
            }
            _ => out.push((s, u64::from(y), u64::from(!y))),
        }
    }
    out
}

fn class_totals(scores: &[f64], labels: &[bool]) -> Result<(u64, u64)> {
    check_lengths(scores, labels)?;
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Invalid("scores contain NaN".into()));
    }
    let p = labels.iter().filter(|&&y| y).count() as u64;
    Ok((p, labels.len() as u64 - p))
}

/// Exact trapezoidal area, equal to P(score+ > score-) + P(tie) / 2.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<Curve> {
    let (p, n) = class_totals(scores, labels)?;
    if p == 0 || n == 0 {
        return Err(Error::SingleClass {
            base_rate: p as f64 / (p + n).max(1) as f64,
        });
    }
    let mut points = vec![CurvePoint {
        threshold: f64::INFINITY,
        x: 0.0,
        y: 0.0,
    }];
    let (mut tp, mut fp) = (0u64, 0u64);
    let mut twice_area: u128 = 0;
    for (s, dp, dn) in tie_groups(scores, labels) {
        twice_area += u128::from(dn) * u128::from(2 * tp + dp);
        tp += dp;
        fp += dn;
        points.push(CurvePoint {
            threshold: s,
            x: fp as f64 / n as f64,
            y: tp as f64 / p as f64,
        });
    }
    let auc = twice_area as f64 / (2.0 * p as f64 * n as f64);
    Ok(Curve { points, auc })
}

pub fn auc_value(scores: &[f64], labels: &[bool]) -> Result<f64> {
    roc_auc(scores, labels).map(|c| c.auc)
}

/// Average precision: precision at each distinct threshold weighted by the
/// recall it adds, without interpolation.
pub fn pr_auc(scores: &[f64], labels: &[bool]) -> Result<Curve> {
    let (p, _) = class_totals(scores, labels)?;
    if p == 0 {
        return Err(Error::Invalid("precision-recall needs at least one positive".into()));
    }
    let mut points = Vec::new();
    let (mut tp, mut fp) = (0u64, 0u64);
    let mut auc = 0.0;
    for (s, dp, dn) in tie_groups(scores, labels) {
        tp += dp;
        fp += dn;
        let precision = tp as f64 / (tp + fp) as f64;
        auc += dp as f64 / p as f64 * precision;
        points.push(CurvePoint {
            threshold: s,
            x: tp as f64 / p as f64,
            y: precision,
        });
    }
    Ok(Curve { points, auc })
}

/// Threshold maximizing the objective over every distinct score plus 0 and
/// 1; ties go to the higher threshold.
pub fn best_threshold(scores: &[f64], labels: &[bool], objective: Objective) -> Result<(f64, f64)> {
    let (p, n) = class_totals(scores, labels)?;
    if p == 0 || n == 0 {
        return Err(Error::SingleClass {
            base_rate: p as f64 / (p + n).max(1) as f64,
        });
    }
    let groups = tie_groups(scores, labels);
    let mut candidates: Vec<f64> = groups.iter().map(|g| g.0).collect();
    candidates.extend([0.0, 1.0]);
    candidates.sort_by(|a, b| b.total_cmp(a));
    candidates.dedup();

    let mut best: Option<(f64, f64)> = None;
    let (mut tp, mut fp) = (0u64, 0u64);
    let mut g = 0;
    for t in candidates {
        while g < groups.len() && groups[g].0 >= t {
            tp += groups[g].1;
            fp += groups[g].2;
            g += 1;
        }
        let m = derive_metrics(&ConfusionCounts {
            tp,
            fp,
            fn_: p - tp,
            tn: n - fp,
        });
        let v = match objective {
            Objective::F1 => m.f1,
            Objective::Mcc => m.mcc,
        };
        if let Some(v) = v {
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((t, v));
            }
        }
    }
    best.ok_or_else(|| Error::Invalid("objective undefined at every threshold".into()))
}

/// Relative distance between two thresholds, |a - b| / a.
pub fn threshold_gap(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs()
    }
}

/// Share of positives among the `k` highest scores; ties at the cut are
/// resolved by input order.
pub fn precision_at_k(scores: &[f64], labels: &[bool], k: usize) -> Result<f64> {
    check_lengths(scores, labels)?;
    if k == 0 {
        return Err(Error::Invalid("k must be positive".into()));
    }
    if k > scores.len() {
        return Err(Error::Invalid(format!("k = {k} exceeds {} rows", scores.len())));
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let hits = idx[..k].iter().filter(|&&i| labels[i]).count();
    Ok(hits as f64 / k as f64)
}
