//! Per-member feature vectors computed over the reporting period.

mod catalog;
pub mod families;
mod life_table;
mod matrix;
mod prune;

use std::sync::Arc;

use rayon::prelude::*;

use crate::claims::{MemberRecord, PeriodPair, SdohTable};

pub use catalog::{
    schema_version, Builtin, CategoryTarget, CodeLists, FeatureCatalog, FeatureDef, FeatureKind, SDOH_PREFIX, TOP20,
};
pub use families::{
    actuarial, annualize, category_costs, clinical_events, cost_windows, coverage, predict_12mo_submodel, sdoh_join,
    wavelet_trends, wavelet_window, WaveletSums,
};
pub use life_table::LifeTable;
pub use matrix::FeatureMatrix;
pub use prune::{prune_features, PruneReport};

/// Immutable tables shared by every featurization call.
#[derive(Clone, Debug)]
pub struct FeatureContext<'a> {
    pub catalog: &'a FeatureCatalog,
    pub life_table: &'a LifeTable,
    pub sdoh: &'a SdohTable,
    pub periods: PeriodPair,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector {
    pub member_id: String,
    pub names: Arc<[String]>,
    /// Aligned with `names`; never NaN or infinite.
    pub values: Vec<Option<f64>>,
    pub schema_version: Arc<str>,
}

impl FeatureVector {
    pub fn get(&self, name: &str) -> Option<Option<f64>> {
        self.names.iter().position(|n| n == name).map(|i| self.values[i])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Computes every catalog feature for one member, in catalog order.
pub fn featurize(member: &MemberRecord, ctx: &FeatureContext<'_>) -> Vec<Option<f64>> {
    let p = &ctx.periods;
    let cost = cost_windows(member, p);
    let cov = coverage(member, p);
    let wv = wavelet_trends(member, p);
    let ev = clinical_events(member, p, &ctx.catalog.code_lists);
    let act = actuarial(member, ctx.life_table, p);
    let sdoh = sdoh_join(member, ctx.sdoh);

    ctx.catalog
        .defs()
        .iter()
        .map(|def| {
            let v = match &def.kind {
                FeatureKind::Builtin(b) => match b {
                    Builtin::Age => act.age,
                    Builtin::GenderMale => families::gender_male(member),
                    Builtin::MedicalCoverageDays => Some(cov.medical_days),
                    Builtin::PharmacyCoverageDays => Some(cov.pharmacy_days),
                    Builtin::OptimalLifeExpectancy => act.optimal_life_expectancy,
                    Builtin::YllCurrentYear => act.yll_current_year,
                    Builtin::MortalityRisk => act.mortality_risk,
                    Builtin::AnnualAllowedCurrentYear => cost.annual_current,
                    Builtin::AllowedCurrentYear => Some(cost.current),
                    Builtin::AllowedPriorYear => Some(cost.prior_year),
                    Builtin::AnnualAllowedPriorYear => cost.annual_prior_year,
                    Builtin::AllowedTwoYearsPrior => Some(cost.two_years_prior),
                    Builtin::AnnualAllowedTwoYearsPrior => cost.annual_two_years_prior,
                    Builtin::Total3YearAllowed => Some(cost.total_3_year),
                    Builtin::InpatientDays12Mo => Some(cost.inpatient_days),
                    Builtin::DaysSinceLastClaim => cost.days_since_last_claim,
                    Builtin::AllowedFirst3Mo => Some(cost.quarters[0]),
                    Builtin::AllowedSecond3Mo => Some(cost.quarters[1]),
                    Builtin::AllowedThird3Mo => Some(cost.quarters[2]),
                    Builtin::PharmacyAllowed12Mo => Some(cost.pharmacy_current),
                    Builtin::Predicted12MoAllowed => Some(predict_12mo_submodel(cost.quarters.map(Some))),
                    Builtin::AllowedRisingWv => Some(wv.rising_12mo),
                    Builtin::AllowedFallingWv => Some(wv.falling_12mo),
                    Builtin::AllowedSecond6MoRisingWv => Some(wv.second_6mo_rising),
                    Builtin::AllowedFourth3MoRisingWv => Some(wv.fourth_3mo_rising),
                    Builtin::AllowedFourth3MoWv => Some(wv.fourth_3mo_total),
                    Builtin::EmergencyEvents12Mo => Some(ev.emergency as f64),
                    Builtin::AmbulatoryEvents12Mo => Some(ev.ambulatory as f64),
                    Builtin::InpatientEvents12Mo => Some(ev.inpatient as f64),
                    Builtin::TriggerTotalAllowed => Some(ev.trigger_total),
                    Builtin::TriggerDaysMalignancy => ev.days_since_malignancy,
                },
                FeatureKind::Category(t) => Some(families::category_cost(member, p, t)),
                FeatureKind::Sdoh(i) => sdoh.and_then(|row| row[*i]),
            };
            v.filter(|x| x.is_finite())
        })
        .collect()
}

/// [`featurize`] wrapped with the member id and schema.
pub fn feature_vector(member: &MemberRecord, ctx: &FeatureContext<'_>) -> FeatureVector {
    FeatureVector {
        member_id: member.member_id.clone(),
        names: ctx.catalog.names().into(),
        values: featurize(member, ctx),
        schema_version: ctx.catalog.schema_version().into(),
    }
}

/// Featurizes members in parallel; row order follows the input order.
pub fn build_matrix(members: &[&MemberRecord], ctx: &FeatureContext<'_>) -> FeatureMatrix {
    let rows: Vec<Vec<Option<f64>>> = members.par_iter().map(|m| featurize(m, ctx)).collect();
    let ids = members.iter().map(|m| m.member_id.clone()).collect();
    FeatureMatrix::from_rows(ctx.catalog, ids, &rows)
}
