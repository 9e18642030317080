//! Feature families. Every function reads only claims dated on or before
//! `report_end` and enrollment days inside windows that end by `report_end`.

use std::collections::BTreeSet;

use crate::claims::{ClaimClass, ClaimLine, Date, Gender, MemberRecord, PeriodPair, SdohTable};

use super::catalog::{CategoryTarget, CodeLists};
use super::life_table::LifeTable;

/// Below this many covered days an annualized amount is null.
pub const MIN_ANNUALIZATION_DAYS: i64 = 30;

pub fn annualize(sum: f64, covered_days: i64) -> Option<f64> {
    if covered_days < MIN_ANNUALIZATION_DAYS {
        None
    } else {
        Some(sum * 365.0 / covered_days as f64)
    }
}

fn sum(claims: &[ClaimLine]) -> f64 {
    claims.iter().map(|c| c.allowed_amount).sum()
}

#[derive(Clone, Debug, PartialEq)]
pub struct CostWindows {
    pub annual_current: Option<f64>,
    pub current: f64,
    pub prior_year: f64,
    pub annual_prior_year: Option<f64>,
    pub two_years_prior: f64,
    pub annual_two_years_prior: Option<f64>,
    pub total_3_year: f64,
    pub inpatient_days: f64,
    pub days_since_last_claim: Option<f64>,
    /// Report-period quarters, oldest first.
    pub quarters: [f64; 4],
    pub pharmacy_current: f64,
}

pub fn cost_windows(member: &MemberRecord, periods: &PeriodPair) -> CostWindows {
    let (rs, re) = (periods.report_start, periods.report_end);
    let (p1a, p1b) = periods.prior_window(1);
    let (p2a, p2b) = periods.prior_window(2);
    let current = member.claims_in(rs, re);
    let cur = sum(current);
    let prior = member.total_allowed(p1a, p1b);
    let two = member.total_allowed(p2a, p2b);
    let quarters = [1, 2, 3, 4].map(|q| {
        let (a, b) = periods.report_quarter(q);
        member.total_allowed(a, b)
    });
    let last = member
        .claims_in(Date::MIN, re)
        .last()
        .map(|c| (re - c.service_date).num_days() as f64);
    CostWindows {
        annual_current: annualize(cur, member.covered_days(rs, re)),
        current: cur,
        prior_year: prior,
        annual_prior_year: annualize(prior, member.covered_days(p1a, p1b)),
        two_years_prior: two,
        annual_two_years_prior: annualize(two, member.covered_days(p2a, p2b)),
        total_3_year: member.total_allowed(p2a, re),
        inpatient_days: current
            .iter()
            .filter(|c| c.claim_class == ClaimClass::Inpatient)
            .map(|c| c.inpatient_days.unwrap_or(0) as f64)
            .sum(),
        days_since_last_claim: last,
        quarters,
        pharmacy_current: current
            .iter()
            .filter(|c| c.claim_class == ClaimClass::Pharmacy)
            .map(|c| c.allowed_amount)
            .sum(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Coverage {
    pub medical_days: f64,
    pub pharmacy_days: f64,
}

pub fn coverage(member: &MemberRecord, periods: &PeriodPair) -> Coverage {
    let (a, b) = (periods.report_start, periods.report_end);
    Coverage {
        medical_days: member.covered_days_where(a, b, |s| s.has_medical) as f64,
        pharmacy_days: member.covered_days_where(a, b, |s| s.has_pharmacy) as f64,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WaveletSums {
    pub rising: f64,
    pub falling: f64,
    pub total: f64,
}

/// Linear ramp weights over the inclusive window `[a, b]`: a claim on day `t`
/// gets `w = (t - a) / (b - a)` toward the rising sum and `1 - w` toward the
/// falling sum. A single-day window uses `w = 1`.
pub fn wavelet_window(member: &MemberRecord, a: Date, b: Date) -> WaveletSums {
    let span = (b - a).num_days();
    let mut out = WaveletSums {
        rising: 0.0,
        falling: 0.0,
        total: 0.0,
    };
    for c in member.claims_in(a, b) {
        let w = if span == 0 {
            1.0
        } else {
            (c.service_date - a).num_days() as f64 / span as f64
        };
        out.rising += w * c.allowed_amount;
        out.falling += (1.0 - w) * c.allowed_amount;
        out.total += c.allowed_amount;
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WaveletTrends {
    pub rising_12mo: f64,
    pub falling_12mo: f64,
    pub second_6mo_rising: f64,
    pub fourth_3mo_rising: f64,
    pub fourth_3mo_total: f64,
}

pub fn wavelet_trends(member: &MemberRecord, periods: &PeriodPair) -> WaveletTrends {
    let year = wavelet_window(member, periods.report_start, periods.report_end);
    let (h_a, h_b) = periods.report_second_half();
    let half = wavelet_window(member, h_a, h_b);
    let (q_a, q_b) = periods.report_quarter(4);
    let quarter = wavelet_window(member, q_a, q_b);
    WaveletTrends {
        rising_12mo: year.rising,
        falling_12mo: year.falling,
        second_6mo_rising: half.rising,
        fourth_3mo_rising: quarter.rising,
        fourth_3mo_total: quarter.total,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClinicalEvents {
    pub emergency: u32,
    pub ambulatory: u32,
    pub inpatient: u32,
    pub trigger_total: f64,
    pub days_since_malignancy: Option<f64>,
}

pub fn clinical_events(member: &MemberRecord, periods: &PeriodPair, lists: &CodeLists) -> ClinicalEvents {
    let re = periods.report_end;
    let current = member.claims_in(periods.report_start, re);
    let count = |class| current.iter().filter(|c| c.claim_class == class).count() as u32;
    let in_list =
        |c: &ClaimLine, list: &BTreeSet<String>| c.condition_code.as_ref().is_some_and(|code| list.contains(code));
    ClinicalEvents {
        emergency: count(ClaimClass::Emergency),
        ambulatory: count(ClaimClass::Ambulatory),
        inpatient: count(ClaimClass::Inpatient),
        trigger_total: current
            .iter()
            .filter(|c| in_list(c, &lists.trigger_conditions))
            .map(|c| c.allowed_amount)
            .sum(),
        days_since_malignancy: member
            .claims_in(Date::MIN, re)
            .iter()
            .rev()
            .find(|c| in_list(c, &lists.cancer_trigger))
            .map(|c| (re - c.service_date).num_days() as f64),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Actuarial {
    pub age: Option<f64>,
    pub optimal_life_expectancy: Option<f64>,
    pub yll_current_year: Option<f64>,
    pub mortality_risk: Option<f64>,
}

pub fn actuarial(member: &MemberRecord, table: &LifeTable, periods: &PeriodPair) -> Actuarial {
    let Some(age) = member.age_at(periods.report_end) else {
        return Actuarial {
            age: None,
            optimal_life_expectancy: None,
            yll_current_year: None,
            mortality_risk: None,
        };
    };
    let ole = table.expectancy(age, member.gender);
    let codes: BTreeSet<&str> = member
        .claims_in(periods.report_start, periods.report_end)
        .iter()
        .filter_map(|c| c.condition_code.as_deref())
        .collect();
    let lost: f64 = codes.iter().filter_map(|c| table.years_lost(c)).sum();
    let yll = lost.min(ole);
    Actuarial {
        age: Some(age as f64),
        optimal_life_expectancy: Some(ole),
        yll_current_year: Some(yll),
        mortality_risk: Some(yll / ole),
    }
}

pub fn category_cost(member: &MemberRecord, periods: &PeriodPair, target: &CategoryTarget) -> f64 {
    let matches = |c: &ClaimLine| match target {
        CategoryTarget::DrugPrefix(p) => c.drug_class.as_ref().is_some_and(|d| d.starts_with(p.as_str())),
        CategoryTarget::Condition(code) => c.condition_code.as_ref() == Some(code),
        CategoryTarget::Procedure(code) => c.procedure_code.as_ref() == Some(code),
    };
    member
        .claims_in(periods.report_start, periods.report_end)
        .iter()
        .filter(|c| matches(c))
        .map(|c| c.allowed_amount)
        .sum()
}

pub fn category_costs(member: &MemberRecord, periods: &PeriodPair, targets: &[CategoryTarget]) -> Vec<f64> {
    targets.iter().map(|t| category_cost(member, periods, t)).collect()
}

/// Least-squares line through `(q, total_q)` for quarters 1..=4, summed over
/// the next four quarters and clamped at zero.
pub fn predict_12mo_submodel(quarters: [Option<f64>; 4]) -> f64 {
    let y = quarters.map(|q| q.unwrap_or(0.0));
    let mean = y.iter().sum::<f64>() / 4.0;
    // x centered at 2.5; sum of squared deviations is 5
    let slope = y
        .iter()
        .enumerate()
        .map(|(i, v)| (i as f64 - 1.5) * (v - mean))
        .sum::<f64>()
        / 5.0;
    // sum over q = 5..=8 of (q - 2.5) = 16
    (4.0 * mean + 16.0 * slope).max(0.0)
}

/// Indicator values for the member's ZIP; `None` when the ZIP is missing or unknown.
pub fn sdoh_join<'a>(member: &MemberRecord, table: &'a SdohTable) -> Option<&'a [Option<f64>]> {
    member.zip.as_deref().and_then(|z| table.get(z))
}

pub fn gender_male(member: &MemberRecord) -> Option<f64> {
    member.gender.map(|g| if g == Gender::M { 1.0 } else { 0.0 })
}
