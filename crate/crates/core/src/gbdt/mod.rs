//! Histogram-based, leaf-wise gradient boosted trees for binary log-loss.

mod baseline;
mod binning;
mod importance;
mod model;
mod sample;
mod select;
mod tree;

use serde::{Deserialize, Serialize};

use crate::features::FeatureMatrix;
use crate::{Error, Result};

pub use baseline::LogisticBaseline;
pub use binning::BinMapper;
pub use importance::{permutation_importance, split_importance};
pub use model::{fit, fit_with_history, BoostedModel, MODEL_MAGIC};
pub use sample::downsample;
pub use select::{staged_select, RoundScores, Selection, DEFAULT_FRACTIONS};
pub use tree::Tree;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyperparams {
    pub n_trees: usize,
    pub max_leaves: usize,
    pub learning_rate: f64,
    pub l2_reg: f64,
    pub min_samples_leaf: usize,
    /// Smallest hessian sum a child may carry.
    pub min_hessian: f64,
    pub n_bins: usize,
    /// Drives the row sample used for bin boundaries on large inputs.
    pub seed: u64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            n_trees: 410,
            max_leaves: 16,
            learning_rate: 0.05,
            l2_reg: 0.0,
            min_samples_leaf: 20,
            min_hessian: 1e-3,
            n_bins: 255,
            seed: 0,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Invalid(format!("hyperparams: {m}")));
        if self.n_trees == 0 {
            return bad("n_trees must be at least 1");
        }
        if self.max_leaves < 2 {
            return bad("max_leaves must be at least 2");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return bad("learning_rate must be in (0, 1]");
        }
        if !(self.l2_reg >= 0.0) {
            return bad("l2_reg must be nonnegative");
        }
        if !(self.min_hessian >= 0.0) {
            return bad("min_hessian must be nonnegative");
        }
        if self.min_samples_leaf == 0 {
            return bad("min_samples_leaf must be at least 1");
        }
        if !(2..=256).contains(&self.n_bins) {
            return bad("n_bins must be in 2..=256");
        }
        Ok(())
    }
}

/// Per-feature medians from the training matrix; replaces nulls.
#[derive(Clone, Debug, PartialEq)]
pub struct Imputer {
    pub medians: Vec<f64>,
}

fn median(col: &[f64]) -> f64 {
    let mut v: Vec<f64> = col.iter().copied().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        v[m - 1] + (v[m] - v[m - 1]) / 2.0
    }
}

impl Imputer {
    /// All-null columns impute to 0.
    pub fn fit(matrix: &FeatureMatrix) -> Self {
        Imputer {
            medians: matrix.columns().iter().map(|c| median(c)).collect(),
        }
    }

    #[inline]
    pub fn apply_row(&self, row: &mut [f64]) {
        for (v, m) in row.iter_mut().zip(&self.medians) {
            if v.is_nan() {
                *v = *m;
            }
        }
    }

    pub fn apply_columns(&self, matrix: &FeatureMatrix) -> Vec<Vec<f64>> {
        matrix
            .columns()
            .iter()
            .zip(&self.medians)
            .map(|(c, &m)| c.iter().map(|&v| if v.is_nan() { m } else { v }).collect())
            .collect()
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Mean binary log-loss with probabilities clipped away from 0 and 1.
pub fn log_loss(probs: &[f64], labels: &[bool]) -> f64 {
    const EPS: f64 = 1e-15;
    let s: f64 = probs
        .iter()
        .zip(labels)
        .map(|(&p, &y)| {
            let p = p.clamp(EPS, 1.0 - EPS);
            if y {
                -p.ln()
            } else {
                -(1.0 - p).ln()
            }
        })
        .sum();
    s / probs.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_final_model_shape() {
        let hp = Hyperparams::default();
        assert_eq!(
            (hp.n_trees, hp.max_leaves, hp.learning_rate, hp.l2_reg),
            (410, 16, 0.05, 0.0)
        );
        hp.validate().unwrap();
    }

    #[test]
    fn validation_rejects_out_of_range() {
        for hp in [
            Hyperparams {
                n_trees: 0,
                ..Default::default()
            },
            Hyperparams {
                max_leaves: 1,
                ..Default::default()
            },
            Hyperparams {
                learning_rate: 0.0,
                ..Default::default()
            },
            Hyperparams {
                learning_rate: 1.5,
                ..Default::default()
            },
            Hyperparams {
                l2_reg: -1.0,
                ..Default::default()
            },
        ] {
            assert!(hp.validate().is_err(), "{hp:?}");
        }
    }

    #[test]
    fn imputer_fills_medians_and_is_idempotent() {
        let m = FeatureMatrix::from_columns(
            "t",
            vec!["a".into(), "b".into()],
            vec!["1".into(), "2".into(), "3".into(), "4".into()],
            vec![vec![1.0, f64::NAN, 3.0, 10.0], vec![f64::NAN; 4]],
        );
        let imp = Imputer::fit(&m);
        assert_eq!(imp.medians, vec![3.0, 0.0]);
        let once = imp.apply_columns(&m);
        assert_eq!(once[0], vec![1.0, 3.0, 3.0, 10.0]);
        let m2 = FeatureMatrix::from_columns("t", m.names.clone(), m.member_ids.clone(), once.clone());
        assert_eq!(imp.apply_columns(&m2), once);
    }
}
