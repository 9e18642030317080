use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{fit, BoostedModel, Hyperparams};
use crate::eval::auc_value;
use crate::features::FeatureMatrix;
use crate::{Error, Result};

pub const DEFAULT_FRACTIONS: [f64; 3] = [0.16, 0.32, 0.64];

/// Share of the training rows held out to compare candidates.
const SELECTION_SHARE: f64 = 0.2;

#[derive(Clone, Debug, PartialEq)]
pub struct RoundScores {
    pub fraction: f64,
    /// (candidate index, selection AUC-ROC), best first.
    pub scores: Vec<(usize, f64)>,
}

#[derive(Clone, Debug)]
pub struct Selection {
    pub best_index: usize,
    pub hyperparams: Hyperparams,
    /// Winner retrained on every row.
    pub model: BoostedModel,
    pub rounds: Vec<RoundScores>,
}

/// Successive halving: each round trains the surviving candidates on a growing
/// share of the pool, scores them on a fixed selection split and keeps the
/// better half.
pub fn staged_select(
    candidates: &[Hyperparams],
    matrix: &FeatureMatrix,
    labels: &[bool],
    fractions: &[f64],
    seed: u64,
) -> Result<Selection> {
    if candidates.is_empty() {
        return Err(Error::Empty("candidate hyperparameters"));
    }
    if fractions.iter().any(|f| !(*f > 0.0 && *f <= 1.0)) {
        return Err(Error::Invalid("selection fractions must be in (0, 1]".into()));
    }
    candidates.iter().try_for_each(Hyperparams::validate)?;

    let mut alive: Vec<usize> = (0..candidates.len()).collect();
    let mut rounds = Vec::new();
    if candidates.len() > 1 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pos: Vec<usize> = (0..labels.len()).filter(|&i| labels[i]).collect();
        let mut neg: Vec<usize> = (0..labels.len()).filter(|&i| !labels[i]).collect();
        pos.shuffle(&mut rng);
        neg.shuffle(&mut rng);
        let cut = |v: &[usize]| (v.len() as f64 * SELECTION_SHARE).round() as usize;
        let (sel_pos, pool_pos) = pos.split_at(cut(&pos));
        let (sel_neg, pool_neg) = neg.split_at(cut(&neg));
        let mut sel: Vec<usize> = sel_pos.iter().chain(sel_neg).copied().collect();
        sel.sort_unstable();
        let sel_matrix = matrix.take_rows(&sel);
        let sel_labels: Vec<bool> = sel.iter().map(|&i| labels[i]).collect();

        for &frac in fractions {
            let take = |v: &[usize]| ((v.len() as f64 * frac).ceil() as usize).min(v.len());
            let mut idx: Vec<usize> = pool_pos[..take(pool_pos)]
                .iter()
                .chain(&pool_neg[..take(pool_neg)])
                .copied()
                .collect();
            idx.sort_unstable();
            let sub = matrix.take_rows(&idx);
            let sub_labels: Vec<bool> = idx.iter().map(|&i| labels[i]).collect();
            let mut scores = alive
                .iter()
                .map(|&c| {
                    let m = fit(&sub, &sub_labels, &candidates[c])?;
                    Ok((c, auc_value(&m.predict_matrix(&sel_matrix)?, &sel_labels)?))
                })
                .collect::<Result<Vec<_>>>()?;
            scores.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            log::info!("selection round at {:.0}%: {:?}", frac * 100.0, scores);
            let keep = alive.len().div_ceil(2).max(1);
            alive = scores.iter().take(keep).map(|&(c, _)| c).collect();
            rounds.push(RoundScores { fraction: frac, scores });
        }
    }
    let best_index = alive[0];
    let hyperparams = candidates[best_index].clone();
    let model = fit(matrix, labels, &hyperparams)?;
    Ok(Selection {
        best_index,
        hyperparams,
        model,
        rounds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn problem(n: usize, seed: u64) -> (FeatureMatrix, Vec<bool>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cols: Vec<Vec<f64>> = (0..6).map(|_| (0..n).map(|_| rng.random::<f64>()).collect()).collect();
        let y = (0..n)
            .map(|i| rng.random::<f64>() < 0.05 + 0.3 * cols[0][i] * cols[1][i])
            .collect();
        let names = (0..6).map(|j| format!("x{j}")).collect();
        (
            FeatureMatrix::from_columns("t", names, (0..n).map(|i| i.to_string()).collect(), cols),
            y,
        )
    }

    #[test]
    fn single_candidate_is_returned_unchanged() {
        let (m, y) = problem(400, 0);
        let hp = Hyperparams {
            n_trees: 5,
            ..Default::default()
        };
        let s = staged_select(std::slice::from_ref(&hp), &m, &y, &DEFAULT_FRACTIONS, 0).unwrap();
        assert_eq!(s.hyperparams, hp);
        assert!(s.rounds.is_empty());
    }

    #[test]
    fn overfitting_learning_rate_is_eliminated() {
        let (m, y) = problem(4_000, 1);
        let good = Hyperparams {
            n_trees: 60,
            learning_rate: 0.05,
            ..Default::default()
        };
        let bad = Hyperparams {
            n_trees: 60,
            learning_rate: 0.9,
            ..Default::default()
        };
        let s = staged_select(&[bad, good.clone()], &m, &y, &DEFAULT_FRACTIONS, 5).unwrap();
        assert_eq!(s.best_index, 1);
        assert_eq!(s.hyperparams, good);
        assert_eq!(s.rounds.len(), 3);
        assert_eq!(s.rounds[1].scores.len(), 1);
    }
}
