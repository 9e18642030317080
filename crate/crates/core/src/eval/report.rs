use std::fmt::Write as _;
use std::io::Write;

use super::{auc_value, confusion_at, derive_metrics, fmt_pct, ConfusionCounts, MetricSet};
use crate::claims::{AgeBand, CohortTags, Gender};
use crate::Result;

pub const TABLE_THRESHOLDS: [f64; 7] = [0.5, 0.6, 0.7, 0.76, 0.8, 0.9, 1.0];
pub const DEFAULT_EMERGENT_THRESHOLD: f64 = 0.76;
pub const DEFAULT_RECURRENT_THRESHOLD: f64 = 0.92;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThresholdRow {
    pub threshold: f64,
    pub counts: ConfusionCounts,
    pub metrics: MetricSet,
}

pub fn threshold_table(scores: &[f64], labels: &[bool], thresholds: &[f64]) -> Result<Vec<ThresholdRow>> {
    thresholds
        .iter()
        .map(|&t| {
            let counts = confusion_at(scores, labels, t)?;
            Ok(ThresholdRow {
                threshold: t,
                counts,
                metrics: derive_metrics(&counts),
            })
        })
        .collect()
}

const THRESHOLD_HEADER: [&str; 9] = ["Threshold", "TP", "FP", "FN", "TN", "Recall", "TNR", "Precision", "NPV"];

fn threshold_cells(r: &ThresholdRow) -> [String; 9] {
    let c = &r.counts;
    let m = &r.metrics;
    [
        format!("{}", r.threshold),
        c.tp.to_string(),
        c.fp.to_string(),
        c.fn_.to_string(),
        c.tn.to_string(),
        fmt_pct(m.recall),
        fmt_pct(m.tnr),
        fmt_pct(m.precision),
        fmt_pct(m.npv),
    ]
}

pub fn write_threshold_csv<W: Write>(rows: &[ThresholdRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(THRESHOLD_HEADER)?;
    for r in rows {
        w.write_record(threshold_cells(r))?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

fn render(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for r in rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.len());
        }
    }
    let mut s = String::new();
    let line = |s: &mut String, cells: &mut dyn Iterator<Item = &str>| {
        let parts: Vec<String> = cells.zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
        let _ = writeln!(s, "{}", parts.join("  ").trim_end());
    };
    line(&mut s, &mut header.iter().copied());
    for r in rows {
        line(&mut s, &mut r.iter().map(String::as_str));
    }
    s
}

pub fn render_threshold_text(rows: &[ThresholdRow]) -> String {
    let body: Vec<Vec<String>> = rows.iter().map(|r| threshold_cells(r).to_vec()).collect();
    render(&THRESHOLD_HEADER, &body)
}

/// One scored member with the strata used for breakdowns.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScoredMember {
    pub score: f64,
    pub label: bool,
    pub recurrent: bool,
    pub gender: Option<Gender>,
    pub age_band: AgeBand,
    pub has_pharmacy_benefit: bool,
    pub full_year_enrolled: bool,
}

impl ScoredMember {
    pub fn new(score: f64, tags: &CohortTags, gender: Option<Gender>) -> Self {
        ScoredMember {
            score,
            label: tags.label_hicc,
            recurrent: tags.recurrent,
            gender,
            age_band: tags.age_band,
            has_pharmacy_benefit: tags.has_pharmacy_benefit,
            full_year_enrolled: tags.full_year_enrolled,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StratumRow {
    /// `emergent` or `recurrent`.
    pub population: &'static str,
    pub stratum: String,
    pub threshold: f64,
    pub n: usize,
    /// Undefined when the stratum holds a single class.
    pub auc: Option<f64>,
    pub recall: Option<f64>,
    pub fpr: Option<f64>,
    pub precision: Option<f64>,
    pub npv: Option<f64>,
}

type Filter = (String, Box<dyn Fn(&ScoredMember) -> bool>);

fn strata() -> Vec<Filter> {
    let mut v: Vec<Filter> = vec![
        ("overall".into(), Box::new(|_| true)),
        ("male".into(), Box::new(|m| m.gender == Some(Gender::M))),
        ("female".into(), Box::new(|m| m.gender == Some(Gender::F))),
    ];
    for band in [AgeBand::Age0To17, AgeBand::Age18To64, AgeBand::Age65Plus] {
        v.push((format!("age {band}"), Box::new(move |m| m.age_band == band)));
    }
    v.push(("pharmacy benefit".into(), Box::new(|m| m.has_pharmacy_benefit)));
    v.push(("no pharmacy benefit".into(), Box::new(|m| !m.has_pharmacy_benefit)));
    v.push(("full eligibility".into(), Box::new(|m| m.full_year_enrolled)));
    v.push(("lack full eligibility".into(), Box::new(|m| !m.full_year_enrolled)));
    v
}

fn stratum_row(
    population: &'static str,
    stratum: String,
    threshold: f64,
    members: &[&ScoredMember],
) -> Result<StratumRow> {
    let scores: Vec<f64> = members.iter().map(|m| m.score).collect();
    let labels: Vec<bool> = members.iter().map(|m| m.label).collect();
    let m = derive_metrics(&confusion_at(&scores, &labels, threshold)?);
    let pos = labels.iter().filter(|&&y| y).count();
    let auc = if pos == 0 || pos == labels.len() {
        None
    } else {
        Some(auc_value(&scores, &labels)?)
    };
    Ok(StratumRow {
        population,
        stratum,
        threshold,
        n: members.len(),
        auc,
        recall: m.recall,
        fpr: m.fpr,
        precision: m.precision,
        npv: m.npv,
    })
}

/// Per-stratum performance for members without (emergent) and with
/// (recurrent) a prior high-cost year, each at its own threshold.
pub fn stratified_report(
    members: &[ScoredMember],
    emergent_threshold: f64,
    recurrent_threshold: f64,
) -> Result<Vec<StratumRow>> {
    let mut rows = Vec::new();
    for (population, recurrent, t) in [
        ("emergent", false, emergent_threshold),
        ("recurrent", true, recurrent_threshold),
    ] {
        let pop: Vec<&ScoredMember> = members.iter().filter(|m| m.recurrent == recurrent).collect();
        for (name, keep) in strata() {
            let sub: Vec<&ScoredMember> = pop.iter().copied().filter(|m| keep(m)).collect();
            rows.push(stratum_row(population, name, t, &sub)?);
        }
    }
    Ok(rows)
}

const STRATUM_HEADER: [&str; 9] = [
    "Population",
    "Stratum",
    "Threshold",
    "AUC",
    "N",
    "Recall",
    "FPR",
    "Precision",
    "NPV",
];

fn stratum_cells(r: &StratumRow) -> Vec<String> {
    vec![
        r.population.to_string(),
        r.stratum.clone(),
        format!("{}", r.threshold),
        fmt_pct(r.auc),
        r.n.to_string(),
        fmt_pct(r.recall),
        fmt_pct(r.fpr),
        fmt_pct(r.precision),
        fmt_pct(r.npv),
    ]
}

pub fn write_stratified_csv<W: Write>(rows: &[StratumRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(STRATUM_HEADER)?;
    for r in rows {
        w.write_record(stratum_cells(r))?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn render_stratified_text(rows: &[StratumRow]) -> String {
    let body: Vec<Vec<String>> = rows.iter().map(stratum_cells).collect();
    render(&STRATUM_HEADER, &body)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn member(score: f64, label: bool, recurrent: bool, male: bool, pharmacy: bool) -> ScoredMember {
        ScoredMember {
            score,
            label,
            recurrent,
            gender: Some(if male { Gender::M } else { Gender::F }),
            age_band: AgeBand::Age18To64,
            has_pharmacy_benefit: pharmacy,
            full_year_enrolled: true,
        }
    }

    #[test]
    fn disjoint_strata_sum_to_overall_and_match_subset_metrics() {
        let ms: Vec<ScoredMember> = (0..200)
            .map(|i| member((i % 17) as f64 / 17.0, i % 5 == 0, i % 11 == 0, i % 2 == 0, i % 3 != 0))
            .collect();
        let rows = stratified_report(&ms, 0.5, 0.6).unwrap();
        let get = |p: &str, s: &str| rows.iter().find(|r| r.population == p && r.stratum == s).unwrap();
        for p in ["emergent", "recurrent"] {
            assert_eq!(get(p, "male").n + get(p, "female").n, get(p, "overall").n);
            assert_eq!(
                get(p, "pharmacy benefit").n + get(p, "no pharmacy benefit").n,
                get(p, "overall").n
            );
        }
        let sub: Vec<&ScoredMember> = ms
            .iter()
            .filter(|m| !m.recurrent && m.gender == Some(Gender::M))
            .collect();
        let s: Vec<f64> = sub.iter().map(|m| m.score).collect();
        let y: Vec<bool> = sub.iter().map(|m| m.label).collect();
        assert_eq!(get("emergent", "male").auc, Some(auc_value(&s, &y).unwrap()));
        assert_eq!(get("emergent", "age 65+").n, 0);
        assert_eq!(get("emergent", "age 65+").auc, None);
        assert_eq!(get("recurrent", "overall").threshold, 0.6);
    }

    #[test]
    fn threshold_table_renders_na() {
        let rows = threshold_table(&[0.2, 0.7], &[false, true], &TABLE_THRESHOLDS).unwrap();
        let text = render_threshold_text(&rows);
        assert!(text.lines().last().unwrap().contains("N.A."));
        let mut buf = Vec::new();
        write_threshold_csv(&rows, &mut buf).unwrap();
        let csv = String::from_utf8(buf).unwrap();
        assert!(csv.starts_with("Threshold,TP,FP,FN,TN,Recall,TNR,Precision,NPV\n0.5,1,0,0,1,"));
    }
}
