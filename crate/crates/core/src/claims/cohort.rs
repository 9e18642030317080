//! Eligibility, high-cost labeling, and cohort strata.

use std::collections::BTreeMap;
use std::fmt;

use super::{MemberRecord, MemberStore, PeriodPair};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AgeBand {
    Age0To17,
    Age18To64,
    Age65Plus,
    /// No birth date; excluded from banded reports.
    Unknown,
}

impl AgeBand {
    pub fn from_age(age: Option<u32>) -> Self {
        match age {
            None => AgeBand::Unknown,
            Some(a) if a < 18 => AgeBand::Age0To17,
            Some(a) if a < 65 => AgeBand::Age18To64,
            Some(_) => AgeBand::Age65Plus,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AgeBand::Age0To17 => "0-17",
            AgeBand::Age18To64 => "18-64",
            AgeBand::Age65Plus => "65+",
            AgeBand::Unknown => "unknown",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            AgeBand::Age0To17,
            AgeBand::Age18To64,
            AgeBand::Age65Plus,
            AgeBand::Unknown,
        ]
        .into_iter()
        .find(|b| b.as_str() == s)
    }
}

impl fmt::Display for AgeBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CohortTags {
    pub eligible: bool,
    pub label_hicc: bool,
    /// Prediction-period allowed total, floored at zero.
    pub predict_total: f64,
    pub recurrent: bool,
    pub age_band: AgeBand,
    pub has_pharmacy_benefit: bool,
    pub full_year_enrolled: bool,
}

impl Default for CohortTags {
    fn default() -> Self {
        CohortTags {
            eligible: false,
            label_hicc: false,
            predict_total: 0.0,
            recurrent: false,
            age_band: AgeBand::Unknown,
            has_pharmacy_benefit: false,
            full_year_enrolled: false,
        }
    }
}

/// Eligibility, label and history tags for one member. Strata come from [`tag_strata`].
pub fn cohort_tags(member: &MemberRecord, periods: &PeriodPair, threshold: f64) -> CohortTags {
    assert!(threshold > 0.0, "threshold must be positive");
    let eligible = member.enrolled_on(periods.report_anchor()) && member.enrolled_on(periods.predict_anchor());
    let predict_total = member
        .total_allowed(periods.predict_start, periods.predict_end)
        .max(0.0);
    let label_hicc = predict_total > threshold;

    let mut recurrent = member.total_allowed(periods.report_start, periods.report_end).max(0.0) > threshold;
    if let Some(first) = member.claims.first().map(|c| c.service_date) {
        let mut k = 1;
        while !recurrent {
            let (a, b) = periods.prior_window(k);
            if b < first {
                break;
            }
            recurrent = member.total_allowed(a, b).max(0.0) > threshold;
            k += 1;
        }
    }

    let tags = CohortTags {
        eligible,
        label_hicc,
        predict_total,
        recurrent,
        ..CohortTags::default()
    };
    tag_strata(member, tags, periods)
}

/// Fills the stratum fields: age band at `report_end`, pharmacy benefit, full-year enrollment.
pub fn tag_strata(member: &MemberRecord, tags: CohortTags, periods: &PeriodPair) -> CohortTags {
    let (a, b) = (periods.report_start, periods.report_end);
    CohortTags {
        age_band: AgeBand::from_age(member.age_at(b)),
        has_pharmacy_benefit: member.spans.iter().any(|s| s.has_pharmacy && s.overlap_days(a, b) > 0),
        full_year_enrolled: member.covered_days(a, b) == periods.report_days(),
        ..tags
    }
}

/// Tags every member in the store; ineligible members are kept with `eligible = false`.
pub fn assemble_cohort<'a>(
    store: &'a MemberStore,
    periods: &PeriodPair,
    threshold: f64,
) -> Vec<(&'a MemberRecord, CohortTags)> {
    store.iter().map(|m| (m, cohort_tags(m, periods, threshold))).collect()
}

/// Eligible member counts per age band (unknown band included).
pub fn band_counts<'a>(cohort: impl IntoIterator<Item = &'a CohortTags>) -> BTreeMap<AgeBand, usize> {
    let mut counts = BTreeMap::new();
    for t in cohort.into_iter().filter(|t| t.eligible) {
        *counts.entry(t.age_band).or_insert(0) += 1;
    }
    counts
}
