//! Claims data model: claim lines, enrollment spans, member records, the
//! ZIP-level SDOH table, and the reporting/prediction period pair.

mod cohort;
mod ingest;
mod period;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;

pub use cohort::{assemble_cohort, band_counts, cohort_tags, tag_strata, AgeBand, CohortTags};
pub use ingest::{
    ingest_dataset, read_claims, read_enrollment, read_members, read_sdoh, DatasetPaths, IngestReport, MemberStore,
    CLAIMS_HEADER, ENROLLMENT_HEADER, MEMBERS_HEADER,
};
pub use period::{add_months, PeriodPair};

pub type Date = NaiveDate;

/// Default high-cost threshold in dollars of allowed amount per year.
pub const HICC_THRESHOLD: f64 = 250_000.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClaimClass {
    Inpatient,
    Outpatient,
    Professional,
    Emergency,
    Ambulatory,
    Pharmacy,
}

impl ClaimClass {
    pub const ALL: [ClaimClass; 6] = [
        ClaimClass::Inpatient,
        ClaimClass::Outpatient,
        ClaimClass::Professional,
        ClaimClass::Emergency,
        ClaimClass::Ambulatory,
        ClaimClass::Pharmacy,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ClaimClass::Inpatient => "inpatient",
            ClaimClass::Outpatient => "outpatient",
            ClaimClass::Professional => "professional",
            ClaimClass::Emergency => "emergency",
            ClaimClass::Ambulatory => "ambulatory",
            ClaimClass::Pharmacy => "pharmacy",
        }
    }
}

impl FromStr for ClaimClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ClaimClass::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown claim_class {s:?}"))
    }
}

impl fmt::Display for ClaimClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One adjudicated claim line. The owning [`MemberRecord`] carries the member id.
#[derive(Clone, Debug, PartialEq)]
pub struct ClaimLine {
    pub service_date: Date,
    pub claim_class: ClaimClass,
    /// Allowed amount in USD; negative for adjustments.
    pub allowed_amount: f64,
    pub condition_code: Option<String>,
    pub procedure_code: Option<String>,
    /// GPI-style hierarchical drug class code.
    pub drug_class: Option<String>,
    pub inpatient_days: Option<u32>,
}

impl ClaimLine {
    pub fn new(service_date: Date, claim_class: ClaimClass, allowed_amount: f64) -> Self {
        ClaimLine {
            service_date,
            claim_class,
            allowed_amount,
            condition_code: None,
            procedure_code: None,
            drug_class: None,
            inpatient_days: None,
        }
    }

    pub fn with_condition(mut self, code: &str) -> Self {
        self.condition_code = Some(code.to_string());
        self
    }

    pub fn with_procedure(mut self, code: &str) -> Self {
        self.procedure_code = Some(code.to_string());
        self
    }

    pub fn with_drug_class(mut self, code: &str) -> Self {
        self.drug_class = Some(code.to_string());
        self
    }

    pub fn with_inpatient_days(mut self, days: u32) -> Self {
        self.inpatient_days = Some(days);
        self
    }

    pub fn validate(&self) -> Result<(), String> {
        if !self.allowed_amount.is_finite() {
            return Err("allowed_amount is not finite".into());
        }
        if self.inpatient_days.is_some() && self.claim_class != ClaimClass::Inpatient {
            return Err("inpatient_days present on a non-inpatient claim".into());
        }
        if self.drug_class.is_some() && self.claim_class != ClaimClass::Pharmacy {
            return Err("drug_class present on a non-pharmacy claim".into());
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EnrollmentSpan {
    /// Inclusive.
    pub start_date: Date,
    /// Inclusive.
    pub end_date: Date,
    pub has_medical: bool,
    pub has_pharmacy: bool,
}

impl EnrollmentSpan {
    pub fn covers(&self, d: Date) -> bool {
        self.start_date <= d && d <= self.end_date
    }

    /// Number of days of this span inside the inclusive window `[a, b]`.
    pub fn overlap_days(&self, a: Date, b: Date) -> i64 {
        let lo = self.start_date.max(a);
        let hi = self.end_date.min(b);
        if lo > hi {
            0
        } else {
            (hi - lo).num_days() + 1
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Gender {
    F,
    M,
}

impl FromStr for Gender {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "F" => Ok(Gender::F),
            "M" => Ok(Gender::M),
            _ => Err(format!("unknown gender {s:?}")),
        }
    }
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Gender::F => "F",
            Gender::M => "M",
        })
    }
}

/// One member's assembled history.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MemberRecord {
    pub member_id: String,
    pub birth_date: Option<Date>,
    pub gender: Option<Gender>,
    pub zip: Option<String>,
    pub industry: Option<String>,
    /// Sorted by service date.
    pub claims: Vec<ClaimLine>,
    pub spans: Vec<EnrollmentSpan>,
}

impl MemberRecord {
    pub fn new(member_id: impl Into<String>) -> Self {
        MemberRecord {
            member_id: member_id.into(),
            ..Default::default()
        }
    }

    /// Stable sort so same-day claims keep their input order.
    pub fn sort_claims(&mut self) {
        self.claims.sort_by_key(|c| c.service_date);
    }

    pub fn validate_spans(&mut self) -> crate::Result<()> {
        self.spans.sort_by_key(|s| (s.start_date, s.end_date));
        for pair in self.spans.windows(2) {
            if pair[1].start_date <= pair[0].end_date {
                return Err(crate::Error::OverlappingSpans {
                    member_id: self.member_id.clone(),
                });
            }
        }
        Ok(())
    }

    /// Whole years of age on `on`; `None` without a birth date or when born after `on`.
    pub fn age_at(&self, on: Date) -> Option<u32> {
        self.birth_date.and_then(|b| on.years_since(b))
    }

    /// Claims with service date in the inclusive window `[a, b]`.
    pub fn claims_in(&self, a: Date, b: Date) -> &[ClaimLine] {
        let lo = self.claims.partition_point(|c| c.service_date < a);
        let hi = self.claims.partition_point(|c| c.service_date <= b);
        if lo >= hi {
            &[]
        } else {
            &self.claims[lo..hi]
        }
    }

    pub fn total_allowed(&self, a: Date, b: Date) -> f64 {
        self.claims_in(a, b).iter().map(|c| c.allowed_amount).sum()
    }

    /// Enrolled days (any coverage type) inside `[a, b]`.
    pub fn covered_days(&self, a: Date, b: Date) -> i64 {
        self.spans.iter().map(|s| s.overlap_days(a, b)).sum()
    }

    pub fn covered_days_where(&self, a: Date, b: Date, pred: impl Fn(&EnrollmentSpan) -> bool) -> i64 {
        self.spans
            .iter()
            .filter(|s| pred(s))
            .map(|s| s.overlap_days(a, b))
            .sum()
    }

    pub fn enrolled_on(&self, d: Date) -> bool {
        self.spans.iter().any(|s| s.covers(d))
    }
}

/// Names of the SDOH indicators, in column order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SdohSchema {
    pub indicators: Vec<String>,
}

pub const MINORITY_FRACTION: &str = "minority_fraction";

const BUNDLED_SDOH_SCHEMA: &str = include_str!("../../data/sdoh_schema.txt");

impl SdohSchema {
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_SDOH_SCHEMA)
    }

    /// One indicator name per line; `#` starts a comment.
    pub fn parse(text: &str) -> Self {
        let indicators = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty())
            .map(str::to_string)
            .collect();
        SdohSchema { indicators }
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.indicators.iter().position(|n| n == name)
    }
}

/// ZIP-keyed table of SDOH indicator values aligned with its schema.
#[derive(Clone, Debug, PartialEq)]
pub struct SdohTable {
    pub schema: SdohSchema,
    minority_idx: usize,
    rows: BTreeMap<String, Vec<Option<f64>>>,
}

impl SdohTable {
    pub fn new(schema: SdohSchema) -> crate::Result<Self> {
        let minority_idx = schema
            .index_of(MINORITY_FRACTION)
            .ok_or_else(|| crate::Error::Invalid("SDOH schema lacks minority_fraction".into()))?;
        Ok(SdohTable {
            schema,
            minority_idx,
            rows: BTreeMap::new(),
        })
    }

    pub fn insert(&mut self, zip: String, values: Vec<Option<f64>>) -> Result<(), String> {
        if values.len() != self.schema.indicators.len() {
            return Err(format!(
                "expected {} indicators, got {}",
                self.schema.indicators.len(),
                values.len()
            ));
        }
        match values[self.minority_idx] {
            Some(m) if (0.0..=1.0).contains(&m) => {}
            Some(m) => return Err(format!("minority_fraction {m} outside [0, 1]")),
            None => return Err("minority_fraction is required".into()),
        }
        if self.rows.contains_key(&zip) {
            return Err(format!("duplicate zip {zip}"));
        }
        self.rows.insert(zip, values);
        Ok(())
    }

    pub fn get(&self, zip: &str) -> Option<&[Option<f64>]> {
        self.rows.get(zip).map(Vec::as_slice)
    }

    pub fn minority_fraction(&self, zip: &str) -> Option<f64> {
        self.rows.get(zip).and_then(|r| r[self.minority_idx])
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[Option<f64>])> {
        self.rows.iter().map(|(z, v)| (z.as_str(), v.as_slice()))
    }
}
