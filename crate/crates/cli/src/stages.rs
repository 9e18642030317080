use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs::{self, File};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use hicc_core::claims::{
    assemble_cohort, band_counts, ingest_dataset, read_sdoh, DatasetPaths, SdohSchema, HICC_THRESHOLD,
};
use hicc_core::economics::{
    break_even_precision, capacity_sweep, render_scenarios, render_sweep_text, run_scenario, write_scenarios_csv,
    write_sweep_csv,
};
use hicc_core::eval::{
    auc_value, best_threshold, brier, fit_isotonic, pr_auc, precision_at_k, render_stratified_text,
    render_threshold_text, stratified_report, threshold_gap, threshold_table, write_stratified_csv,
    write_threshold_csv, Calibrator, Objective, ScoredMember,
};
use hicc_core::fairness::{audit_report, permutation_null_band, render_audit_text, write_scatter_csv, AuditMember};
use hicc_core::features::{build_matrix, prune_features, FeatureCatalog, FeatureContext, FeatureMatrix, LifeTable};
use hicc_core::gbdt::{downsample, fit, split_importance, staged_select, BoostedModel, Hyperparams, LogisticBaseline};
use hicc_core::synthgen::{validate_generated, write_dataset, Manifest, MANIFEST_FILE};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::artifacts::{self as art, CohortRow, Split};
use crate::config::{substream, PipelineConfig};

/// Feature used by the cost-only comparison model.
const BASELINE_FEATURE: &str = "ALLWD_AMT_CURRENT_YEAR";

fn out_dir(cfg: &PipelineConfig) -> Result<&Path> {
    let d = cfg.paths.out_dir.as_path();
    fs::create_dir_all(d).with_context(|| format!("creating {}", d.display()))?;
    Ok(d)
}

fn read_file(p: &Path) -> Result<String> {
    fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))
}

fn sdoh_schema(cfg: &PipelineConfig) -> Result<SdohSchema> {
    Ok(match &cfg.features.sdoh_schema {
        Some(p) => SdohSchema::parse(&read_file(p)?),
        None => SdohSchema::bundled(),
    })
}

fn catalog(cfg: &PipelineConfig, schema: &SdohSchema) -> Result<FeatureCatalog> {
    Ok(match &cfg.features.catalog {
        Some(p) => FeatureCatalog::from_toml(&read_file(p)?, schema)?,
        None => FeatureCatalog::bundled(),
    })
}

fn life_table(cfg: &PipelineConfig) -> Result<LifeTable> {
    match (&cfg.features.life_table, &cfg.features.condition_weights) {
        (None, None) => Ok(LifeTable::bundled()),
        (Some(l), Some(w)) => {
            let open = |p: &PathBuf| File::open(p).with_context(|| format!("opening {}", p.display()));
            Ok(LifeTable::from_csv(open(l)?, open(w)?)?)
        }
        _ => bail!("features.life_table and features.condition_weights must be given together"),
    }
}

pub fn generate(cfg: &PipelineConfig) -> Result<()> {
    let seed = cfg.seed()?;
    let mut params = cfg.generate.clone();
    params.seed = substream(seed, "generate");
    params.report_start = cfg.periods()?.report_start;
    let t = Instant::now();
    let summary = write_dataset(&cfg.paths.data_dir, &params, &sdoh_schema(cfg)?)?;
    log::info!(
        "generated {} members, {} claims, {} planted high-cost in {:.1?}",
        summary.members,
        summary.claims,
        summary.planted_hicc,
        t.elapsed()
    );
    Ok(())
}

pub fn featurize(cfg: &PipelineConfig) -> Result<()> {
    let periods = cfg.periods()?;
    let schema = sdoh_schema(cfg)?;
    let out = out_dir(cfg)?;
    let t = Instant::now();
    let (store, sdoh, report) = ingest_dataset(&DatasetPaths::in_dir(&cfg.paths.data_dir), &schema)?;
    log::info!(
        "ingested {} members, {} claim rows in {:.1?}",
        report.members,
        report.claim_rows,
        t.elapsed()
    );
    if cfg.paths.data_dir.join(MANIFEST_FILE).exists() {
        let manifest = Manifest::read(&cfg.paths.data_dir)?;
        let v = validate_generated(&store, &manifest.params);
        for flag in &v.flags {
            log::warn!("generated data: {flag}");
        }
        art::write_text(&out.join("generate_report.txt"), &v.to_string())?;
    }

    let cohort: Vec<_> = assemble_cohort(&store, &periods, HICC_THRESHOLD)
        .into_iter()
        .filter(|(_, t)| t.eligible)
        .collect();
    if cohort.is_empty() {
        bail!("no eligible members in {}", cfg.paths.data_dir.display());
    }
    let catalog = catalog(cfg, &schema)?;
    let life = life_table(cfg)?;
    let ctx = FeatureContext {
        catalog: &catalog,
        life_table: &life,
        sdoh: &sdoh,
        periods,
    };
    let members: Vec<_> = cohort.iter().map(|(m, _)| *m).collect();
    let t = Instant::now();
    let matrix = build_matrix(&members, &ctx);
    log::info!(
        "featurized {} members x {} features in {:.1?}",
        matrix.n_rows(),
        matrix.n_features(),
        t.elapsed()
    );
    matrix.write_csv(&out.join(art::FEATURES))?;

    let rows: Vec<CohortRow> = cohort
        .iter()
        .map(|(m, t)| CohortRow {
            member_id: m.member_id.clone(),
            tags: *t,
            gender: m.gender,
            zip: m.zip.clone(),
        })
        .collect();
    art::write_cohort(&out.join(art::COHORT), &rows)?;

    let n = rows.len();
    let hicc = rows.iter().filter(|r| r.tags.label_hicc).count();
    let recurrent = rows.iter().filter(|r| r.tags.label_hicc && r.tags.recurrent).count();
    let mut s = String::new();
    let _ = writeln!(s, "members in data     {}", store.len());
    let _ = writeln!(s, "eligible            {n}");
    let _ = writeln!(s, "high-cost           {hicc} ({:.4}%)", 100.0 * hicc as f64 / n as f64);
    let _ = writeln!(s, "  emergent          {}", hicc - recurrent);
    let _ = writeln!(s, "  recurrent         {recurrent}");
    for (band, count) in band_counts(cohort.iter().map(|(_, t)| t)) {
        let _ = writeln!(s, "age {:<15} {count}", band.as_str());
    }
    art::write_text(&out.join("cohort_report.txt"), &s)?;
    Ok(())
}

struct Labeled {
    matrix: FeatureMatrix,
    labels: Vec<bool>,
}

fn load_labeled(out: &Path) -> Result<Labeled> {
    let matrix = FeatureMatrix::read_csv(&out.join(art::FEATURES))?;
    let cohort = art::read_cohort(&out.join(art::COHORT))?;
    if cohort.len() != matrix.n_rows() || cohort.iter().zip(&matrix.member_ids).any(|(c, id)| &c.member_id != id) {
        bail!(
            "{} and {} list different members; rerun featurize",
            art::FEATURES,
            art::COHORT
        );
    }
    let labels = cohort.iter().map(|c| c.tags.label_hicc).collect();
    Ok(Labeled { matrix, labels })
}

/// Label-stratified random assignment to train, calibration and holdout.
fn assign_split(labels: &[bool], shares: [f64; 3], seed: u64) -> Vec<Split> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![Split::Train; labels.len()];
    for class in [true, false] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut rng);
        let n = idx.len() as f64;
        let a = (n * shares[0]).round() as usize;
        let b = ((n * (shares[0] + shares[1])).round() as usize).max(a);
        for (k, &i) in idx.iter().enumerate() {
            out[i] = if k < a {
                Split::Train
            } else if k < b {
                Split::Calibrate
            } else {
                Split::Holdout
            };
        }
    }
    out
}

fn rows_in(split: &[Split], which: Split) -> Vec<usize> {
    (0..split.len()).filter(|&i| split[i] == which).collect()
}

pub fn train(cfg: &PipelineConfig) -> Result<()> {
    cfg.validate()?;
    let seed = cfg.seed()?;
    let out = out_dir(cfg)?;
    let data = load_labeled(out)?;
    let split = assign_split(&data.labels, cfg.train.split, substream(seed, "split"));
    art::write_split(&out.join(art::SPLIT), &data.matrix.member_ids, &split)?;

    let mut train_rows = rows_in(&split, Split::Train);
    if let Some(target) = cfg.train.downsample_target {
        let y: Vec<bool> = train_rows.iter().map(|&i| data.labels[i]).collect();
        if target < y.len() {
            let keep = downsample(&y, target, substream(seed, "downsample"))?;
            train_rows = keep.iter().map(|&k| train_rows[k]).collect();
        }
    }
    let mut matrix = data.matrix.take_rows(&train_rows);
    let labels: Vec<bool> = train_rows.iter().map(|&i| data.labels[i]).collect();
    let positives = labels.iter().filter(|&&y| y).count();
    log::info!("training on {} rows ({positives} positive)", labels.len());

    let hp = Hyperparams {
        seed: substream(seed, "train"),
        ..cfg.model.clone()
    };
    let mut report = String::new();
    if let Some(k) = cfg.train.prune_keep {
        let schema = sdoh_schema(cfg)?;
        let cat = catalog(cfg, &schema)?;
        let (reduced, pr) = prune_features(
            &cat,
            &matrix,
            &labels,
            |m, y| fit(m, y, &hp),
            k,
            cfg.train.prune_repeats,
            substream(seed, "permutation"),
        )?;
        art::write_text(&out.join("prune.csv"), &pr.to_csv())?;
        art::write_text(&out.join("catalog_pruned.toml"), &reduced.to_toml())?;
        matrix = matrix.project(&reduced.names())?;
        let _ = writeln!(report, "pruned to {} features", reduced.len());
    }

    let t = Instant::now();
    let model = if cfg.train.candidates.len() >= 2 {
        let candidates: Vec<Hyperparams> = cfg
            .train
            .candidates
            .iter()
            .map(|c| Hyperparams {
                seed: hp.seed,
                ..c.clone()
            })
            .collect();
        let sel = staged_select(
            &candidates,
            &matrix,
            &labels,
            &cfg.train.fractions,
            substream(seed, "select"),
        )?;
        for r in &sel.rounds {
            let scores: Vec<String> = r.scores.iter().map(|(i, a)| format!("#{i} {a:.4}")).collect();
            let _ = writeln!(report, "selection at {:.0}%: {}", 100.0 * r.fraction, scores.join(", "));
        }
        let _ = writeln!(report, "selected candidate #{}", sel.best_index);
        sel.model
    } else {
        fit(&matrix, &labels, &hp)?
    };
    log::info!("trained {} trees in {:.1?}", model.trees.len(), t.elapsed());
    model.save(&out.join(art::MODEL))?;

    let imp = split_importance(&model);
    let mut ranked: Vec<(&String, f64)> = model.feature_names.iter().zip(imp).collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
    let mut w = art::csv_writer(&out.join("importance.csv"))?;
    w.write_record(["feature", "split_importance"])?;
    for (name, v) in ranked {
        w.write_record([name.as_str(), &v.to_string()])?;
    }
    w.flush()?;

    let _ = writeln!(report, "training rows {} ({positives} positive)", labels.len());
    let _ = writeln!(report, "features {}", model.n_features());
    let _ = writeln!(report, "trees {}", model.trees.len());
    let _ = writeln!(
        report,
        "leaves {}",
        model.trees.iter().map(|t| t.n_leaves()).sum::<usize>()
    );
    art::write_text(&out.join("train_report.txt"), &report)?;
    Ok(())
}

fn load_split(out: &Path) -> Result<Vec<Split>> {
    let map = art::read_split(&out.join(art::SPLIT))?;
    let ids = FeatureMatrix::read_csv(&out.join(art::FEATURES))?.member_ids;
    ids.iter()
        .map(|id| {
            map.get(id)
                .copied()
                .ok_or_else(|| anyhow!("member {id} missing from {}", art::SPLIT))
        })
        .collect()
}

pub fn calibrate(cfg: &PipelineConfig) -> Result<()> {
    let out = out_dir(cfg)?;
    let data = load_labeled(out)?;
    let split = load_split(out)?;
    let rows = rows_in(&split, Split::Calibrate);
    if rows.is_empty() {
        bail!("calibration split is empty; set train.split with a nonzero second share");
    }
    let model = BoostedModel::load(&out.join(art::MODEL))?;
    let scores = model.predict_matrix(&data.matrix.take_rows(&rows))?;
    let labels: Vec<bool> = rows.iter().map(|&i| data.labels[i]).collect();
    let cal = fit_isotonic(&scores, &labels)?;
    art::write_text(&out.join(art::CALIBRATOR), &cal.to_csv())?;
    log::info!(
        "calibrator fit on {} rows with {} steps",
        rows.len(),
        cal.breakpoints.len()
    );
    Ok(())
}

pub fn score(cfg: &PipelineConfig, features: Option<&Path>, output: Option<&Path>) -> Result<()> {
    let out = out_dir(cfg)?;
    let features = features
        .map(Path::to_path_buf)
        .unwrap_or_else(|| out.join(art::FEATURES));
    let output = output.map(Path::to_path_buf).unwrap_or_else(|| out.join(art::SCORES));
    let model = BoostedModel::load(&out.join(art::MODEL))?;
    let matrix = FeatureMatrix::read_csv(&features)?;
    let t = Instant::now();
    let mut scores = model.predict_matrix(&matrix)?;
    if cfg.score.calibrated {
        let cal = Calibrator::from_csv(&read_file(&out.join(art::CALIBRATOR))?)?;
        scores = cal.apply_all(&scores);
    }
    let secs = t.elapsed().as_secs_f64().max(1e-9);
    log::info!(
        "scored {} rows in {:.3}s ({:.0} rows/min)",
        scores.len(),
        secs,
        scores.len() as f64 * 60.0 / secs
    );
    art::write_scores(&output, &matrix.member_ids, &scores)
}

/// Scored members restricted to the evaluation population.
fn evaluation_rows(cfg: &PipelineConfig, scores_path: &Path) -> Result<Vec<(CohortRow, f64)>> {
    let out = &cfg.paths.out_dir;
    let scores = art::read_scores(scores_path)?;
    let cohort: HashMap<String, CohortRow> = art::read_cohort(&out.join(art::COHORT))?
        .into_iter()
        .map(|c| (c.member_id.clone(), c))
        .collect();
    let split_path = out.join(art::SPLIT);
    let split = if cfg.evaluate.holdout_only && split_path.exists() {
        Some(art::read_split(&split_path)?)
    } else {
        None
    };
    let mut rows = Vec::with_capacity(scores.len());
    for (id, s) in scores {
        if let Some(sp) = &split {
            if sp.get(&id) != Some(&Split::Holdout) {
                continue;
            }
        }
        let c = cohort
            .get(&id)
            .ok_or_else(|| anyhow!("scored member {id} is not in {}", art::COHORT))?;
        rows.push((c.clone(), s));
    }
    if rows.is_empty() {
        bail!("no scored members to evaluate");
    }
    Ok(rows)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_else(|| "N.A.".into())
}

/// AUC of the cost-only logistic model, fit on the training split.
fn baseline_auc(out: &Path, eval_ids: &[&str], eval_labels: &[bool]) -> Result<Option<f64>> {
    if !out.join(art::SPLIT).exists() {
        return Ok(None);
    }
    let data = load_labeled(out)?;
    let Some(j) = data.matrix.index_of(BASELINE_FEATURE) else {
        return Ok(None);
    };
    let split = load_split(out)?;
    let col = data.matrix.column(j);
    let train = rows_in(&split, Split::Train);
    let x: Vec<f64> = train.iter().map(|&i| col[i]).collect();
    let y: Vec<bool> = train.iter().map(|&i| data.labels[i]).collect();
    let base = LogisticBaseline::fit(&x, &y)?;
    let pos: HashMap<&str, usize> = data
        .matrix
        .member_ids
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    let s: Vec<f64> = eval_ids
        .iter()
        .map(|id| {
            pos.get(id)
                .map(|&i| base.predict(col[i]))
                .ok_or_else(|| anyhow!("member {id} has no features"))
        })
        .collect::<Result<_>>()?;
    Ok(auc_value(&s, eval_labels).ok())
}

pub fn evaluate(cfg: &PipelineConfig, scores_path: Option<&Path>) -> Result<()> {
    let out = out_dir(cfg)?;
    let scores_path = scores_path
        .map(Path::to_path_buf)
        .unwrap_or_else(|| out.join(art::SCORES));
    let rows = evaluation_rows(cfg, &scores_path)?;
    let s: Vec<f64> = rows.iter().map(|(_, s)| *s).collect();
    let y: Vec<bool> = rows.iter().map(|(c, _)| c.tags.label_hicc).collect();

    let table = threshold_table(&s, &y, &cfg.evaluate.thresholds)?;
    write_threshold_csv(&table, File::create(out.join("threshold_table.csv"))?)?;
    art::write_text(&out.join("threshold_table.txt"), &render_threshold_text(&table))?;

    let members: Vec<ScoredMember> = rows.iter().map(|(c, s)| c.scored(*s)).collect();
    let strata = stratified_report(
        &members,
        cfg.evaluate.emergent_threshold,
        cfg.evaluate.recurrent_threshold,
    )?;
    write_stratified_csv(&strata, File::create(out.join("stratified.csv"))?)?;
    art::write_text(&out.join("stratified.txt"), &render_stratified_text(&strata))?;

    let mut m = BTreeMap::new();
    let positives = y.iter().filter(|&&v| v).count();
    m.insert("rows".to_string(), s.len().to_string());
    m.insert("positives".to_string(), positives.to_string());
    m.insert("roc_auc".to_string(), fmt_opt(auc_value(&s, &y).ok()));
    m.insert("pr_auc".to_string(), fmt_opt(pr_auc(&s, &y).ok().map(|c| c.auc)));
    let f1 = best_threshold(&s, &y, Objective::F1).ok();
    let mcc = best_threshold(&s, &y, Objective::Mcc).ok();
    m.insert("best_f1_threshold".to_string(), fmt_opt(f1.map(|v| v.0)));
    m.insert("best_f1".to_string(), fmt_opt(f1.map(|v| v.1)));
    m.insert("best_mcc_threshold".to_string(), fmt_opt(mcc.map(|v| v.0)));
    m.insert("best_mcc".to_string(), fmt_opt(mcc.map(|v| v.1)));
    if let (Some(a), Some(b)) = (f1, mcc) {
        m.insert(
            "f1_mcc_threshold_gap".to_string(),
            format!("{:.6}", threshold_gap(a.0, b.0)),
        );
    }
    for &k in &cfg.evaluate.precision_k {
        if k <= s.len() {
            m.insert(format!("precision_at_{k}"), fmt_opt(precision_at_k(&s, &y, k).ok()));
        }
    }
    let ids: Vec<&str> = rows.iter().map(|(c, _)| c.member_id.as_str()).collect();
    if out.join(art::FEATURES).exists() {
        m.insert("baseline_roc_auc".to_string(), fmt_opt(baseline_auc(out, &ids, &y)?));
    }
    let cal_path = out.join(art::CALIBRATOR);
    if cal_path.exists() && !cfg.score.calibrated {
        let cal = Calibrator::from_csv(&read_file(&cal_path)?)?;
        let p = cal.apply_all(&s);
        m.insert("brier_raw".to_string(), format!("{:.8}", brier(&s, &y)?));
        m.insert("brier_calibrated".to_string(), format!("{:.8}", brier(&p, &y)?));
        m.insert("roc_auc_calibrated".to_string(), fmt_opt(auc_value(&p, &y).ok()));
    }
    let text: String = m.iter().map(|(k, v)| format!("{k} {v}\n")).collect();
    art::write_text(&out.join("metrics.txt"), &text)?;
    print!("{text}");
    Ok(())
}

pub fn economics(cfg: &PipelineConfig) -> Result<()> {
    let out = out_dir(cfg)?;
    let ec = &cfg.economics;
    let rule = run_scenario(&ec.scenario.with_precision(ec.rule_based_precision), None)?;
    let mut columns = vec![("Rule-based system".to_string(), rule)];
    if let Some(p) = ec.scenario.precision {
        columns.push((
            "Configured precision".to_string(),
            run_scenario(&ec.scenario.with_precision(p), None)?,
        ));
    }
    let scores_path = out.join(art::SCORES);
    let mut sweep_text = None;
    if scores_path.exists() {
        let rows = evaluation_rows(cfg, &scores_path)?;
        let s: Vec<f64> = rows.iter().map(|(_, s)| *s).collect();
        let y: Vec<bool> = rows.iter().map(|(c, _)| c.tags.label_hicc).collect();
        let params = hicc_core::economics::ScenarioParams {
            precision: None,
            ..ec.scenario.clone()
        };
        if params.capacity as usize <= s.len() {
            columns.push(("ML algorithm".to_string(), run_scenario(&params, Some((&s, &y)))?));
        } else {
            log::warn!(
                "capacity {} exceeds the {} scored members; model column skipped",
                params.capacity,
                s.len()
            );
        }
        let members: Vec<ScoredMember> = rows.iter().map(|(c, s)| c.scored(*s)).collect();
        let sweep = capacity_sweep(&members, &ec.capacities)?;
        write_sweep_csv(&sweep, File::create(out.join("capacity_sweep.csv"))?)?;
        let t = render_sweep_text(&sweep);
        art::write_text(&out.join("capacity_sweep.txt"), &t)?;
        sweep_text = Some(t);
    }
    let refs: Vec<(&str, &_)> = columns.iter().map(|(n, r)| (n.as_str(), r)).collect();
    write_scenarios_csv(&refs, File::create(out.join("economics.csv"))?)?;
    let mut text = render_scenarios(&refs);
    match break_even_precision(&ec.scenario) {
        Ok(p) => {
            let _ = writeln!(text, "\nbreak-even precision {:.4}", p);
        }
        Err(e) => log::warn!("{e}"),
    }
    if let Some(t) = sweep_text {
        text.push('\n');
        text.push_str(&t);
    }
    art::write_text(&out.join("economics.txt"), &text)?;
    print!("{text}");
    Ok(())
}

pub fn audit(cfg: &PipelineConfig) -> Result<()> {
    let seed = cfg.seed()?;
    let out = out_dir(cfg)?;
    let scores = art::read_scores(&out.join(art::SCORES))?;
    let cohort: HashMap<String, CohortRow> = art::read_cohort(&out.join(art::COHORT))?
        .into_iter()
        .map(|c| (c.member_id.clone(), c))
        .collect();
    let members: Vec<AuditMember> = scores
        .iter()
        .map(|(id, s)| {
            let c = cohort
                .get(id)
                .ok_or_else(|| anyhow!("scored member {id} is not in {}", art::COHORT))?;
            Ok(AuditMember {
                zip: c.zip.clone(),
                score: *s,
                annual_cost: c.tags.predict_total,
            })
        })
        .collect::<Result<_>>()?;
    let sdoh_path = DatasetPaths::in_dir(&cfg.paths.data_dir).sdoh;
    let sdoh = read_sdoh(
        File::open(&sdoh_path).with_context(|| format!("opening {}", sdoh_path.display()))?,
        &sdoh_path.display().to_string(),
        sdoh_schema(cfg)?,
    )?;
    let (agg, report) = audit_report(&members, &sdoh, cfg.audit.weighted)?;
    write_scatter_csv(&agg, File::create(out.join("zip_scatter.csv"))?)?;
    let mut text = render_audit_text(&report);
    let band = permutation_null_band(&agg, cfg.audit.null_rounds, substream(seed, "audit"))?;
    let _ = writeln!(
        text,
        "chance band for score R^2 (mean + 4 sd over {} permutations): {:.4}; observed {}",
        cfg.audit.null_rounds,
        band,
        if report.score_fit.r_squared <= band {
            "inside"
        } else {
            "outside"
        }
    );
    art::write_text(&out.join("audit.txt"), &text)?;
    print!("{text}");
    Ok(())
}

pub fn pipeline(cfg: &PipelineConfig) -> Result<()> {
    cfg.validate()?;
    cfg.seed()?;
    generate(cfg)?;
    featurize(cfg)?;
    train(cfg)?;
    if cfg.train.split[1] > 0.0 {
        calibrate(cfg)?;
    }
    score(cfg, None, None)?;
    evaluate(cfg, None)?;
    economics(cfg)?;
    audit(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_is_stratified_and_seeded() {
        let labels: Vec<bool> = (0..1_000).map(|i| i % 50 == 0).collect();
        let a = assign_split(&labels, [0.6, 0.2, 0.2], 3);
        assert_eq!(a, assign_split(&labels, [0.6, 0.2, 0.2], 3));
        let count = |w: Split, pos: bool| (0..1_000).filter(|&i| a[i] == w && labels[i] == pos).count();
        assert_eq!(
            (
                count(Split::Train, true),
                count(Split::Calibrate, true),
                count(Split::Holdout, true)
            ),
            (12, 4, 4)
        );
        assert_eq!(count(Split::Train, false), 588);
    }
}
