use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::BoostedModel;
use crate::eval::auc_value;
use crate::features::FeatureMatrix;
use crate::Result;

/// Mean drop in AUC-ROC when each column is shuffled, per feature.
///
/// Only trees that split on the shuffled feature are re-walked, and rows whose
/// value did not change keep their baseline score, so a constant column has
/// importance exactly 0.
pub fn permutation_importance(
    model: &BoostedModel,
    matrix: &FeatureMatrix,
    labels: &[bool],
    repeats: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let matrix = model.align(matrix)?;
    let nf = model.n_features();
    let n = matrix.n_rows();
    let mut rows = vec![0.0; n * nf];
    let mut buf = Vec::with_capacity(nf);
    for i in 0..n {
        matrix.row_into(i, &mut buf);
        model.imputer.apply_row(&mut buf);
        rows[i * nf..(i + 1) * nf].copy_from_slice(&buf);
    }
    let base_raw: Vec<f64> = (0..n).map(|i| model.raw_imputed(&rows[i * nf..(i + 1) * nf])).collect();
    let base_auc = auc_value(&base_raw, labels)?;

    (0..nf)
        .into_par_iter()
        .map(|j| {
            let trees: Vec<_> = model.trees.iter().filter(|t| t.uses_feature(j)).collect();
            if trees.is_empty() || repeats == 0 {
                return Ok(0.0);
            }
            let mut drop = 0.0;
            let mut row = vec![0.0; nf];
            for r in 0..repeats {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(((j as u64) << 32) | r as u64);
                let mut perm: Vec<usize> = (0..n).collect();
                perm.shuffle(&mut rng);
                let mut raw = base_raw.clone();
                for i in 0..n {
                    let orig = &rows[i * nf..(i + 1) * nf];
                    let v = rows[perm[i] * nf + j];
                    if v == orig[j] {
                        continue;
                    }
                    row.copy_from_slice(orig);
                    row[j] = v;
                    for t in &trees {
                        let (a, b) = (t.leaf_index(orig), t.leaf_index(&row));
                        if a != b {
                            raw[i] += t.leaf_value[b] - t.leaf_value[a];
                        }
                    }
                }
                drop += base_auc - auc_value(&raw, labels)?;
            }
            Ok(drop / repeats as f64)
        })
        .collect()
}

/// Gain-weighted split counts per feature, scaled so the top feature is 1.
pub fn split_importance(model: &BoostedModel) -> Vec<f64> {
    let mut acc = vec![0.0; model.n_features()];
    for t in &model.trees {
        for (&f, &g) in t.split_feature.iter().zip(&t.gain) {
            acc[f as usize] += g;
        }
    }
    let max = acc.iter().copied().fold(0.0, f64::max);
    if max > 0.0 {
        acc.iter_mut().for_each(|a| *a /= max);
    }
    acc
}
