use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{FeatureCatalog, FeatureMatrix};
use crate::gbdt::{permutation_importance, BoostedModel};
use crate::{Error, Result};

/// Share of rows held out to measure importance.
const VALIDATION_SHARE: f64 = 0.3;

#[derive(Clone, Debug, PartialEq)]
pub struct PruneReport {
    /// (feature, mean AUC drop), most important first.
    pub ranked: Vec<(String, f64)>,
    pub kept: Vec<String>,
}

impl PruneReport {
    pub fn to_csv(&self) -> String {
        let kept: HashSet<&str> = self.kept.iter().map(String::as_str).collect();
        let mut s = String::from("rank,feature,importance,kept\n");
        for (i, (name, imp)) in self.ranked.iter().enumerate() {
            s.push_str(&format!(
                "{},{},{},{}\n",
                i + 1,
                name,
                imp,
                u8::from(kept.contains(name.as_str()))
            ));
        }
        s
    }
}

/// Ranks the catalog's features by permutation importance on a held-out
/// split and keeps the `keep_k` best. `train` fits a model on the other rows.
pub fn prune_features<F>(
    catalog: &FeatureCatalog,
    matrix: &FeatureMatrix,
    labels: &[bool],
    train: F,
    keep_k: usize,
    repeats: usize,
    seed: u64,
) -> Result<(FeatureCatalog, PruneReport)>
where
    F: Fn(&FeatureMatrix, &[bool]) -> Result<BoostedModel>,
{
    if matrix.names != catalog.names() {
        return Err(Error::SchemaMismatch {
            expected: catalog.schema_version().to_string(),
            found: matrix.schema_version.clone(),
        });
    }
    let keep_k = if keep_k > catalog.len() {
        log::warn!("keep_k {keep_k} exceeds {} features; keeping all", catalog.len());
        catalog.len()
    } else {
        keep_k
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut pos, mut neg): (Vec<usize>, Vec<usize>) = (0..labels.len()).partition(|&i| labels[i]);
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let cut = |v: &[usize]| (v.len() as f64 * VALIDATION_SHARE).round() as usize;
    let mut valid: Vec<usize> = pos[..cut(&pos)].iter().chain(&neg[..cut(&neg)]).copied().collect();
    let mut fit_rows: Vec<usize> = pos[cut(&pos)..].iter().chain(&neg[cut(&neg)..]).copied().collect();
    valid.sort_unstable();
    fit_rows.sort_unstable();
    let pick = |idx: &[usize]| -> (FeatureMatrix, Vec<bool>) {
        (matrix.take_rows(idx), idx.iter().map(|&i| labels[i]).collect())
    };
    let (train_m, train_y) = pick(&fit_rows);
    let (valid_m, valid_y) = pick(&valid);

    let model = train(&train_m, &train_y)?;
    let imp = permutation_importance(&model, &valid_m, &valid_y, repeats, seed)?;
    let mut ranked: Vec<(String, f64)> = matrix.names.iter().cloned().zip(imp).collect();
    // stable sort keeps catalog order among equal importances
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
    let kept: Vec<String> = ranked.iter().take(keep_k).map(|(n, _)| n.clone()).collect();
    let keep: HashSet<&str> = kept.iter().map(String::as_str).collect();
    let reduced = catalog.retain(&keep)?;
    Ok((reduced, PruneReport { ranked, kept }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::auc_value;
    use crate::features::{CodeLists, FeatureDef, FeatureKind};
    use crate::gbdt::{fit, Hyperparams};
    use rand::Rng;

    fn catalog(n: usize) -> FeatureCatalog {
        let defs = (0..n)
            .map(|i| FeatureDef {
                name: format!("SDOH_x{i}"),
                kind: FeatureKind::Sdoh(i),
            })
            .collect();
        FeatureCatalog::new("t", defs, CodeLists::default()).unwrap()
    }

    /// Ten columns: x0 strong, x1 an exact copy of x0, x2..x4 weaker, x5..x9 noise.
    fn data(n: usize, seed: u64) -> (FeatureCatalog, FeatureMatrix, Vec<bool>) {
        let cat = catalog(10);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cols: Vec<Vec<f64>> = (0..10).map(|_| (0..n).map(|_| rng.random::<f64>()).collect()).collect();
        cols[1] = cols[0].clone();
        let y = (0..n)
            .map(|i| {
                let z = 3.0 * cols[0][i] + 0.6 * (cols[2][i] + cols[3][i] + cols[4][i]);
                rng.random::<f64>() < 1.0 / (1.0 + (-(4.0 * z - 9.0)).exp())
            })
            .collect();
        let m = FeatureMatrix::from_columns("t", cat.names(), (0..n).map(|i| i.to_string()).collect(), cols);
        (cat, m, y)
    }

    fn trainer(m: &FeatureMatrix, y: &[bool]) -> Result<BoostedModel> {
        fit(
            m,
            y,
            &Hyperparams {
                n_trees: 40,
                learning_rate: 0.1,
                ..Default::default()
            },
        )
    }

    #[test]
    fn noise_ranks_low_and_keep_all_is_identity() {
        let (cat, mut m, y) = data(4_000, 3);
        // append a label-independent column in place of x9
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        m.set_column(9, (0..m.n_rows()).map(|_| rng.random::<f64>()).collect());
        let (reduced, report) = prune_features(&cat, &m, &y, trainer, 10, 10, 1).unwrap();
        assert_eq!(reduced.names(), cat.names());
        let (name, imp) = report.ranked.iter().find(|(n, _)| n == "SDOH_x9").unwrap();
        let rank = report.ranked.iter().position(|(n, _)| n == name).unwrap();
        assert!(rank >= 5, "noise ranked {rank}");
        assert!(imp.abs() < 0.005, "{imp}");
    }

    #[test]
    fn over_large_keep_keeps_everything() {
        let (cat, m, y) = data(1_000, 4);
        let (reduced, _) = prune_features(&cat, &m, &y, trainer, 50, 1, 0).unwrap();
        assert_eq!(reduced.len(), 10);
    }

    #[test]
    fn duplicated_signal_keeps_a_copy_and_removing_both_hurts_more() {
        let (cat, m, y) = data(6_000, 5);
        let (reduced, _) = prune_features(&cat, &m, &y, trainer, 5, 5, 2).unwrap();
        let names = reduced.names();
        assert!(names.iter().any(|n| n == "SDOH_x0" || n == "SDOH_x1"), "{names:?}");

        let (test_cat, test_m, test_y) = data(6_000, 6);
        let auc_without = |drop: &[&str]| {
            let keep: Vec<String> = test_cat
                .names()
                .into_iter()
                .filter(|n| !drop.contains(&n.as_str()))
                .collect();
            let tm = m.project(&keep).unwrap();
            let model = trainer(&tm, &y).unwrap();
            auc_value(&model.predict_matrix(&test_m.project(&keep).unwrap()).unwrap(), &test_y).unwrap()
        };
        let drop_one = auc_without(&["SDOH_x1"]);
        let drop_both = auc_without(&["SDOH_x0", "SDOH_x1"]);
        assert!(drop_both < drop_one - 0.02, "{drop_both} vs {drop_one}");
    }
}
