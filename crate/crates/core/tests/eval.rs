use hicc_core::eval::{
    auc_value, best_threshold, confusion_at, derive_metrics, fit_isotonic, pr_auc, precision_at_k, Objective,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn scored_rows(max_n: usize) -> impl Strategy<Value = (Vec<f64>, Vec<bool>)> {
    prop::collection::vec((0u8..=40, any::<bool>()), 2..max_n).prop_map(|rows| {
        let mut scores: Vec<f64> = rows.iter().map(|r| f64::from(r.0) / 40.0).collect();
        let mut labels: Vec<bool> = rows.iter().map(|r| r.1).collect();
        // both classes present at two distinct scores
        labels[0] = true;
        labels[1] = false;
        scores[0] = scores[0].max(0.025);
        scores[1] = 0.0;
        (scores, labels)
    })
}

/// Exhaustive threshold scan with its own F1 and MCC formulas.
fn scan_oracle(scores: &[f64], labels: &[bool], mcc: bool) -> (f64, f64) {
    let mut cuts: Vec<f64> = scores.to_vec();
    cuts.extend([0.0, 1.0]);
    cuts.sort_by(|a, b| b.total_cmp(a));
    cuts.dedup();
    let mut best: Option<(f64, f64)> = None;
    for t in cuts {
        let (mut tp, mut fp, mut fn_, mut tn) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for (&s, &y) in scores.iter().zip(labels) {
            match (s >= t, y) {
                (true, true) => tp += 1.0,
                (true, false) => fp += 1.0,
                (false, true) => fn_ += 1.0,
                (false, false) => tn += 1.0,
            }
        }
        let v = if mcc {
            let den = ((tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_)).sqrt();
            if den == 0.0 {
                continue;
            }
            (tp * tn - fp * fn_) / den
        } else {
            2.0 * tp / (2.0 * tp + fp + fn_)
        };
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((t, v));
        }
    }
    best.unwrap()
}

#[test]
fn hundred_row_fixture_matches_exhaustive_scan() {
    let mut r = ChaCha8Rng::seed_from_u64(100);
    let scores: Vec<f64> = (0..100).map(|_| (r.random::<f64>() * 30.0).round() / 30.0).collect();
    let labels: Vec<bool> = scores.iter().map(|&s| r.random_bool(0.1 + 0.7 * s)).collect();
    for (objective, mcc) in [(Objective::F1, false), (Objective::Mcc, true)] {
        let (t, v) = best_threshold(&scores, &labels, objective).unwrap();
        let (ot, ov) = scan_oracle(&scores, &labels, mcc);
        assert_eq!(t, ot);
        assert!((v - ov).abs() < 1e-12);
    }
}

#[test]
fn single_top_positive_gives_f1_one_at_the_top_cut() {
    let scores = [0.9, 0.5, 0.4, 0.1];
    let labels = [true, false, false, false];
    assert_eq!(best_threshold(&scores, &labels, Objective::F1).unwrap(), (0.9, 1.0));
}

#[test]
fn constant_scores_leave_mcc_undefined() {
    let scores = [0.4; 4];
    let labels = [true, false, true, false];
    assert!(best_threshold(&scores, &labels, Objective::Mcc).is_err());
    assert_eq!(best_threshold(&scores, &labels, Objective::F1).unwrap().1, 2.0 / 3.0);
}

#[test]
fn random_scores_give_average_precision_near_prevalence() {
    let (n, prevalence) = (200_000, 0.05);
    let mut values = Vec::new();
    for seed in 0..20 {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let scores: Vec<f64> = (0..n).map(|_| r.random()).collect();
        let labels: Vec<bool> = (0..n).map(|_| r.random_bool(prevalence)).collect();
        values.push(pr_auc(&scores, &labels).unwrap().auc);
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 19.0).sqrt();
    // the mean of 20 runs lies within 4 standard errors of the prevalence, allowing
    // for the small upward bias of average precision at 10,000 positives
    assert!(
        (mean - prevalence).abs() < 4.0 * sd / 20f64.sqrt() + 0.002,
        "{mean} sd {sd}"
    );
}

#[test]
fn perfect_ranking_has_unit_areas() {
    let scores = [0.9, 0.8, 0.3, 0.2, 0.1];
    let labels = [true, true, false, false, false];
    assert_eq!(pr_auc(&scores, &labels).unwrap().auc, 1.0);
    assert_eq!(auc_value(&scores, &labels).unwrap(), 1.0);
}

proptest! {
    #[test]
    fn counts_partition_rows_and_rates_fall_with_threshold((scores, labels) in scored_rows(120)) {
        let mut prev: Option<(f64, f64)> = None;
        for k in 0..=40 {
            let c = confusion_at(&scores, &labels, f64::from(k) / 40.0).unwrap();
            prop_assert_eq!(c.n() as usize, scores.len());
            let m = derive_metrics(&c);
            let (recall, fpr) = (m.recall.unwrap(), m.fpr.unwrap());
            if let Some((r0, f0)) = prev {
                prop_assert!(recall <= r0 && fpr <= f0);
            }
            prev = Some((recall, fpr));
        }
    }

    #[test]
    fn best_threshold_matches_scan((scores, labels) in scored_rows(80)) {
        for (objective, mcc) in [(Objective::F1, false), (Objective::Mcc, true)] {
            let (t, v) = best_threshold(&scores, &labels, objective).unwrap();
            let (ot, ov) = scan_oracle(&scores, &labels, mcc);
            prop_assert_eq!(t, ot);
            prop_assert!((v - ov).abs() < 1e-12);
        }
    }

    #[test]
    fn precision_at_k_matches_stable_sort((scores, labels) in scored_rows(80), k_frac in 0.0f64..1.0) {
        let k = 1 + (k_frac * (scores.len() - 1) as f64) as usize;
        let mut rows: Vec<(f64, bool)> = scores.iter().copied().zip(labels.iter().copied()).collect();
        // stable: equal scores keep input order
        rows.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        let hits = rows[..k].iter().filter(|r| r.1).count();
        prop_assert_eq!(precision_at_k(&scores, &labels, k).unwrap(), hits as f64 / k as f64);
    }

    #[test]
    fn calibration_is_monotone_and_keeps_auc((scores, labels) in scored_rows(120), probe in prop::collection::vec(0.0f64..1.0, 2..50)) {
        let cal = fit_isotonic(&scores, &labels).unwrap();
        let mut sorted = probe.clone();
        sorted.sort_by(f64::total_cmp);
        let out = cal.apply_all(&sorted);
        prop_assert!(out.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(out.iter().all(|v| (0.0..=1.0).contains(v)));
        let before = auc_value(&scores, &labels).unwrap();
        let after = auc_value(&cal.apply_all(&scores), &labels).unwrap();
        prop_assert!((before - after).abs() <= 1e-12);
    }
}
