//! Seeded synthetic claims population with a planted high-cost signal.

mod tail;
mod validate;
mod write;

use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::claims::{
    add_months, ClaimClass, ClaimLine, Date, EnrollmentSpan, Gender, MemberRecord, MemberStore, PeriodPair, SdohSchema,
    SdohTable, HICC_THRESHOLD,
};
use crate::{Error, Result};

pub use tail::TruncatedLogNormal;
pub use validate::{validate_generated, ValidationReport};
pub use write::{write_dataset, GenSummary, Manifest, MANIFEST_FILE};

/// Trigger conditions ranked by how often they are the costliest condition
/// of a high-cost member, with relative weights.
pub const DEFAULT_CONDITION_MIX: [(&str, f64); 20] = [
    ("C80.1", 3762.0),
    ("I25.10", 2109.0),
    ("J18.9", 1552.0),
    ("N17.9", 1408.0),
    ("I50.9", 1397.0),
    ("N18.6", 1313.0),
    ("C50.919", 1033.0),
    ("A41.9", 751.0),
    ("J96.00", 705.0),
    ("C34.90", 704.0),
    ("G62.9", 534.0),
    ("E34.9", 521.0),
    ("C90.00", 483.0),
    ("C18.9", 464.0),
    ("K50.90", 365.0),
    ("D68.0", 285.0),
    ("C71.9", 208.0),
    ("D59.9", 133.0),
    ("C91.00", 111.0),
    ("C92.00", 103.0),
];

const LOOP_DIURETIC: &str = "37200030";
const ANTINEOPLASTIC: &str = "21300010";
const INSULIN: &str = "27100010";
const BIOLOGIC: &str = "66100010";
const ROUTINE_DRUGS: [&str; 6] = ["58100020", "36100010", "44200010", "39400010", "49270060", "65100020"];
const ROUTINE_CONDITIONS: [&str; 8] = ["Z00.00", "M54.5", "J06.9", "R51", "I10", "J45.909", "F32.9", "K21.9"];
const INDUSTRIES: [&str; 8] = [
    "manufacturing",
    "retail",
    "healthcare",
    "education",
    "finance",
    "construction",
    "public_sector",
    "technology",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenParams {
    pub n_members: usize,
    pub hicc_prevalence: f64,
    pub mean_hicc_cost: f64,
    /// (condition code, weight) for the trigger condition a high-cost member carries.
    pub condition_mix: Vec<(String, f64)>,
    pub frac_full_year: f64,
    pub frac_pharmacy: f64,
    /// Scales every planted difference between future high-cost members and
    /// the rest; 0 leaves only the shared cost persistence.
    pub signal_strength: f64,
    /// Tilts high-cost members toward high-minority ZIPs; 0 keeps ZIP
    /// assignment independent of everything else.
    pub minority_link: f64,
    pub n_zips: usize,
    pub report_start: Date,
    pub seed: u64,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            n_members: 100_000,
            hicc_prevalence: 0.0016,
            mean_hicc_cost: 413_975.0,
            condition_mix: DEFAULT_CONDITION_MIX.iter().map(|&(c, w)| (c.to_string(), w)).collect(),
            frac_full_year: 0.78,
            frac_pharmacy: 0.63,
            signal_strength: 1.0,
            minority_link: 0.0,
            n_zips: 200,
            report_start: PeriodPair::study_default().report_start,
            seed: 0,
        }
    }
}

impl GenParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Invalid(format!("generator: {m}")));
        for (name, v) in [
            ("hicc_prevalence", self.hicc_prevalence),
            ("frac_full_year", self.frac_full_year),
            ("frac_pharmacy", self.frac_pharmacy),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} must be in [0, 1], got {v}"));
            }
        }
        if self.n_members == 0 {
            return bad("n_members must be positive".into());
        }
        if !(self.mean_hicc_cost > HICC_THRESHOLD) {
            return bad(format!("mean_hicc_cost must exceed {HICC_THRESHOLD}"));
        }
        if self.condition_mix.is_empty() || self.condition_mix.iter().any(|(_, w)| !(*w >= 0.0)) {
            return bad("condition_mix weights must be nonnegative".into());
        }
        if self.condition_mix.iter().map(|(_, w)| w).sum::<f64>() <= 0.0 {
            return bad("condition_mix weights must not all be zero".into());
        }
        if !(self.signal_strength >= 0.0) {
            return bad("signal_strength must be nonnegative".into());
        }
        if !self.minority_link.is_finite() {
            return bad("minority_link must be finite".into());
        }
        if !(1..=89_999).contains(&self.n_zips) {
            return bad("n_zips must be in 1..=89999".into());
        }
        Ok(())
    }

    pub fn periods(&self) -> PeriodPair {
        PeriodPair::from_report_start(self.report_start)
    }

    pub fn expected_positives(&self) -> f64 {
        self.n_members as f64 * self.hicc_prevalence
    }
}

pub fn member_id(i: usize) -> String {
    format!("M{i:08}")
}

/// ZIP codes with their indicator rows; shared by every member.
#[derive(Clone, Debug)]
pub struct ZipTable {
    pub zips: Vec<String>,
    pub minority: Vec<f64>,
    pub sdoh: SdohTable,
}

fn indicator_value(name: &str, minority: f64, rng: &mut ChaCha8Rng) -> f64 {
    let noise: f64 = rng.sample(rand_distr::StandardNormal);
    let tilt = minority - 0.4;
    let frac = |base: f64, slope: f64, sd: f64| (base + slope * tilt + sd * noise).clamp(0.0, 1.0);
    match name {
        "median_household_income" => (65_000.0 - 30_000.0 * tilt + 12_000.0 * noise).max(15_000.0),
        "per_capita_income" => (34_000.0 - 15_000.0 * tilt + 6_000.0 * noise).max(8_000.0),
        "median_home_value" => (240_000.0 - 80_000.0 * tilt + 70_000.0 * noise).max(40_000.0),
        "median_gross_rent" => (1_100.0 + 100.0 * tilt + 250.0 * noise).max(300.0),
        "population_density" => (3_000.0 * (1.0 + 2.0 * minority) * (0.8 * noise).exp()).max(5.0),
        "median_age" => (39.0 - 6.0 * tilt + 4.0 * noise).clamp(20.0, 70.0),
        "poverty_rate" => frac(0.13, 0.2, 0.04),
        "unemployment_rate" => frac(0.05, 0.06, 0.015),
        "social_vulnerability_index" => frac(0.5, 0.6, 0.15),
        "uninsured_rate" => frac(0.09, 0.1, 0.03),
        _ => frac(0.2, 0.1, 0.06),
    }
}

impl ZipTable {
    pub fn generate(params: &GenParams, schema: &SdohSchema) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let mut sdoh = SdohTable::new(schema.clone())?;
        let (mut zips, mut minority) = (Vec::new(), Vec::new());
        for k in 0..params.n_zips {
            let zip = format!("{:05}", 10_001 + k);
            let m = (0.02 + 0.95 * rng.random::<f64>().powf(1.5)).min(1.0);
            let row: Vec<Option<f64>> = schema
                .indicators
                .iter()
                .map(|name| {
                    if name == crate::claims::MINORITY_FRACTION {
                        Some(m)
                    } else {
                        let v = indicator_value(name, m, &mut rng);
                        (rng.random::<f64>() >= 0.01).then_some(v)
                    }
                })
                .collect();
            sdoh.insert(zip.clone(), row).map_err(Error::Invalid)?;
            zips.push(zip);
            minority.push(m);
        }
        Ok(ZipTable { zips, minority, sdoh })
    }
}

/// Shared state for drawing members.
pub struct Generator {
    pub params: GenParams,
    pub periods: PeriodPair,
    pub zips: ZipTable,
    tail: TruncatedLogNormal,
    conditions: WeightedIndex<f64>,
    hicc_zip: Option<WeightedIndex<f64>>,
}

/// One generated member plus the planted outcome used to build it.
#[derive(Clone, Debug)]
pub struct SyntheticMember {
    pub record: MemberRecord,
    pub planted_hicc: bool,
}

/// Whole dollars and cents to a dollar amount.
fn dollars(cents: u64) -> f64 {
    cents as f64 / 100.0
}

fn day_offset(d: Date, days: i64) -> Date {
    d + chrono::Duration::days(days)
}

fn uniform_date(rng: &mut ChaCha8Rng, a: Date, b: Date) -> Date {
    let span = (b - a).num_days();
    day_offset(a, rng.random_range(0..=span))
}

struct Profile {
    hicc: bool,
    age: u32,
    pharmacy: bool,
    trigger: Option<String>,
    diuretic: bool,
    diabetic: bool,
    /// log annual cost level before yearly noise
    level: f64,
}

impl Generator {
    pub fn new(params: GenParams, schema: &SdohSchema) -> Result<Self> {
        params.validate()?;
        if params.expected_positives() < 10.0 {
            log::warn!(
                "only {:.1} high-cost members expected; too few to train on",
                params.expected_positives()
            );
        }
        let zips = ZipTable::generate(&params, schema)?;
        let tail = TruncatedLogNormal::with_mean(params.mean_hicc_cost, 1.0, HICC_THRESHOLD + 1.0)?;
        let conditions = WeightedIndex::new(params.condition_mix.iter().map(|(_, w)| *w))
            .map_err(|e| Error::Invalid(format!("condition_mix: {e}")))?;
        let hicc_zip = (params.minority_link != 0.0).then(|| {
            WeightedIndex::new(zips.minority.iter().map(|m| (params.minority_link * m).exp()))
                .expect("positive weights")
        });
        Ok(Generator {
            periods: params.periods(),
            params,
            zips,
            tail,
            conditions,
            hicc_zip,
        })
    }

    fn rng_for(&self, i: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.params.seed);
        rng.set_stream(i as u64 + 1);
        rng
    }

    pub fn member(&self, i: usize) -> SyntheticMember {
        let p = &self.params;
        let s = p.signal_strength;
        let per = &self.periods;
        let mut rng = self.rng_for(i);
        let hicc = rng.random::<f64>() < p.hicc_prevalence;

        // age bands 0-17, 18-64, 65+; high-cost members lean older
        let shares = [0.213, 0.763, 0.024];
        let rel = [0.3125, 1.0625, 4.0625];
        let w: Vec<f64> = shares
            .iter()
            .zip(rel)
            .map(|(sh, r): (&f64, f64)| if hicc { sh * r.powf(s) } else { *sh })
            .collect();
        let band = WeightedIndex::new(&w).expect("positive").sample(&mut rng);
        let age: u32 = match band {
            0 => rng.random_range(0..=17),
            1 => rng.random_range(18..=64),
            _ => rng.random_range(65..=90),
        };
        let mut record = MemberRecord::new(member_id(i));
        if rng.random::<f64>() >= 0.003 {
            let back = add_months(per.report_end, -12 * age as i32);
            record.birth_date = Some(day_offset(back, -rng.random_range(0..365)));
        }
        let male_p = if hicc { 0.496 + 0.035 * s.min(1.0) } else { 0.496 };
        if rng.random::<f64>() >= 0.002 {
            record.gender = Some(if rng.random::<f64>() < male_p {
                Gender::M
            } else {
                Gender::F
            });
        }
        let zi = match (&self.hicc_zip, hicc) {
            (Some(wz), true) => wz.sample(&mut rng),
            _ => rng.random_range(0..self.zips.zips.len()),
        };
        record.zip = Some(self.zips.zips[zi].clone());
        record.industry = Some(INDUSTRIES[rng.random_range(0..INDUSTRIES.len())].to_string());

        let full_year = rng.random::<f64>() < p.frac_full_year;
        let pharmacy = rng.random::<f64>() < p.frac_pharmacy;
        record.spans = self.enrollment(&mut rng, full_year, pharmacy);

        let normal = Normal::new(0.0, 1.0).expect("valid");
        let mut level = (1_500f64).ln() + 1.5 * normal.sample(&mut rng) + 0.015 * (age as f64 - 40.0);
        if hicc {
            level += s * (2.2 + 0.6 * normal.sample(&mut rng));
        }
        let sick = 1.0 / (1.0 + (-(level - 20_000f64.ln())).exp());
        let trigger_p = if hicc { (0.55 * s).min(1.0) } else { 0.015 + 0.05 * sick };
        let trigger =
            (rng.random::<f64>() < trigger_p).then(|| p.condition_mix[self.conditions.sample(&mut rng)].0.clone());
        let diuretic = pharmacy && rng.random::<f64>() < if hicc { (0.3 * s).min(1.0) } else { 0.03 };
        let diabetic = rng.random::<f64>() < 0.08;
        let prof = Profile {
            hicc,
            age,
            pharmacy,
            trigger,
            diuretic,
            diabetic,
            level,
        };

        let mut claims = Vec::new();
        // two prior years, then the report year
        for k in [2, 1] {
            let (a, b) = per.prior_window(k);
            let lvl = prof.level
                - if hicc {
                    0.5 * s * 2.2 + (k as f64 - 1.0) * 0.3 * s
                } else {
                    0.0
                };
            let annual = (lvl + 0.9 * normal.sample(&mut rng)).exp();
            self.year_claims(&mut rng, &prof, &record.spans, a, b, annual, 1.0, false, &mut claims);
        }
        let annual = (prof.level + 0.9 * normal.sample(&mut rng)).exp();
        let skew = if hicc { 1.0 + 1.5 * s } else { 1.0 };
        self.year_claims(
            &mut rng,
            &prof,
            &record.spans,
            per.report_start,
            per.report_end,
            annual,
            skew,
            true,
            &mut claims,
        );

        let total = if hicc {
            self.tail.sample(&mut rng)
        } else if rng.random::<f64>() < 0.1 {
            0.0
        } else {
            (prof.level + 0.9 * normal.sample(&mut rng)).exp().min(240_000.0)
        };
        let cents = if hicc {
            ((total * 100.0).ceil() as u64).max(((HICC_THRESHOLD + 1.0) * 100.0) as u64)
        } else {
            (total * 100.0).round() as u64
        };
        self.split_claims(
            &mut rng,
            &prof,
            per.predict_start,
            per.predict_end,
            cents,
            1.0,
            &record.spans,
            &mut claims,
        );

        record.claims = claims;
        record.sort_claims();
        SyntheticMember {
            record,
            planted_hicc: hicc,
        }
    }

    fn enrollment(&self, rng: &mut ChaCha8Rng, full_year: bool, pharmacy: bool) -> Vec<EnrollmentSpan> {
        let per = &self.periods;
        let history_start = per.prior_window(2).0;
        let span = |a: Date, b: Date| EnrollmentSpan {
            start_date: a,
            end_date: b,
            has_medical: true,
            has_pharmacy: pharmacy,
        };
        let early_start = |rng: &mut ChaCha8Rng| {
            if rng.random::<f64>() < 0.6 {
                history_start
            } else {
                uniform_date(rng, history_start, day_offset(per.report_start, -1))
            }
        };
        let anchor = per.report_anchor();
        if full_year {
            return vec![span(early_start(rng), per.predict_end)];
        }
        if rng.random::<bool>() {
            let start = uniform_date(rng, day_offset(per.report_start, 1), anchor);
            vec![span(start, per.predict_end)]
        } else {
            let gap_start = uniform_date(rng, per.report_start, day_offset(anchor, -30));
            let len = rng.random_range(15..=120).min((anchor - gap_start).num_days() - 1);
            let gap_end = day_offset(gap_start, len - 1);
            vec![
                span(early_start(rng), day_offset(gap_start, -1)),
                span(day_offset(gap_end, 1), per.predict_end),
            ]
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn year_claims(
        &self,
        rng: &mut ChaCha8Rng,
        prof: &Profile,
        spans: &[EnrollmentSpan],
        a: Date,
        b: Date,
        annual: f64,
        skew: f64,
        report_year: bool,
        out: &mut Vec<ClaimLine>,
    ) {
        let covered: i64 = spans.iter().map(|s| s.overlap_days(a, b)).sum();
        if covered == 0 || (!prof.hicc && rng.random::<f64>() < 0.1) {
            return;
        }
        let days = (b - a).num_days() + 1;
        let cents = (annual * covered as f64 / days as f64 * 100.0).round() as u64;
        self.split_claims(rng, prof, a, b, cents, skew, spans, out);
        if report_year {
            if let Some(code) = &prof.trigger {
                // the trigger condition anchors a costly stay plus follow-up care
                let amt = rng.random_range(800_000..6_000_000u64);
                let d = self.claim_date(rng, a, b, skew, spans);
                out.push(
                    ClaimLine::new(d, ClaimClass::Inpatient, dollars(amt))
                        .with_condition(code)
                        .with_inpatient_days(rng.random_range(2..=12)),
                );
                let px = match code.as_str() {
                    "N18.6" | "N17.9" => Some("90935"),
                    c if c.starts_with('C') => Some("96413"),
                    _ => None,
                };
                for _ in 0..rng.random_range(1..=4) {
                    let d = self.claim_date(rng, a, b, skew, spans);
                    let mut c =
                        ClaimLine::new(d, ClaimClass::Outpatient, dollars(rng.random_range(50_000..600_000u64)))
                            .with_condition(code);
                    if let Some(px) = px {
                        c = c.with_procedure(px);
                    }
                    out.push(c);
                }
            }
        }
    }

    fn claim_date(&self, rng: &mut ChaCha8Rng, a: Date, b: Date, skew: f64, spans: &[EnrollmentSpan]) -> Date {
        let days = (b - a).num_days() + 1;
        for _ in 0..8 {
            let u: f64 = rng.random::<f64>().powf(1.0 / skew);
            let d = day_offset(a, ((u * days as f64) as i64).min(days - 1));
            if spans.iter().any(|s| s.covers(d)) {
                return d;
            }
        }
        // fall back to the first covered day of the window
        spans
            .iter()
            .find(|s| s.overlap_days(a, b) > 0)
            .map(|s| s.start_date.max(a))
            .unwrap_or(a)
    }

    #[allow(clippy::too_many_arguments)]
    fn split_claims(
        &self,
        rng: &mut ChaCha8Rng,
        prof: &Profile,
        a: Date,
        b: Date,
        cents: u64,
        skew: f64,
        spans: &[EnrollmentSpan],
        out: &mut Vec<ClaimLine>,
    ) {
        if cents == 0 {
            return;
        }
        let lambda = (1.2 * (dollars(cents) / 50.0).max(1.0).ln()).clamp(0.1, 40.0);
        let k = (1 + Poisson::new(lambda).expect("positive").sample(rng) as u64).min(cents);
        let classes: Vec<ClaimClass> = (0..k).map(|_| self.claim_class(rng, prof, cents)).collect();
        let weights: Vec<f64> = classes
            .iter()
            .map(|c| {
                let e = -(1.0 - rng.random::<f64>()).ln();
                if *c == ClaimClass::Inpatient {
                    8.0 * e
                } else {
                    e
                }
            })
            .collect();
        let wsum: f64 = weights.iter().sum();
        let mut amounts: Vec<u64> = weights
            .iter()
            .map(|w| ((cents as f64 * w / wsum) as u64).max(1))
            .collect();
        let assigned: u64 = amounts.iter().sum();
        if assigned <= cents {
            amounts[0] += cents - assigned;
        } else {
            let mut excess = assigned - cents;
            for x in amounts.iter_mut() {
                let take = excess.min(*x - 1);
                *x -= take;
                excess -= take;
            }
        }
        for (class, amt) in classes.into_iter().zip(amounts) {
            let d = self.claim_date(rng, a, b, skew, spans);
            out.push(self.decorate(rng, prof, ClaimLine::new(d, class, dollars(amt))));
        }
    }

    fn claim_class(&self, rng: &mut ChaCha8Rng, prof: &Profile, cents: u64) -> ClaimClass {
        if prof.pharmacy && rng.random::<f64>() < 0.25 {
            return ClaimClass::Pharmacy;
        }
        let heavy = cents > 5_000_000;
        let inpatient = if heavy { 0.15 } else { 0.04 };
        let u: f64 = rng.random();
        if u < inpatient {
            ClaimClass::Inpatient
        } else if u < inpatient + 0.08 {
            ClaimClass::Emergency
        } else if u < inpatient + 0.18 {
            ClaimClass::Ambulatory
        } else if u < inpatient + 0.43 {
            ClaimClass::Outpatient
        } else {
            ClaimClass::Professional
        }
    }

    fn decorate(&self, rng: &mut ChaCha8Rng, prof: &Profile, c: ClaimLine) -> ClaimLine {
        match c.claim_class {
            ClaimClass::Pharmacy => {
                let cancer = prof.trigger.as_deref().is_some_and(|t| t.starts_with('C'));
                let drug = if prof.diuretic && rng.random::<f64>() < 0.5 {
                    LOOP_DIURETIC
                } else if cancer && rng.random::<f64>() < 0.4 {
                    ANTINEOPLASTIC
                } else if prof.diabetic && rng.random::<f64>() < 0.5 {
                    INSULIN
                } else if rng.random::<f64>() < 0.01 {
                    BIOLOGIC
                } else {
                    ROUTINE_DRUGS[rng.random_range(0..ROUTINE_DRUGS.len())]
                };
                c.with_drug_class(drug)
            }
            class => {
                let code = if prof.diabetic && rng.random::<f64>() < 0.3 {
                    "E11.9"
                } else if prof.age >= 65 && rng.random::<f64>() < 0.1 {
                    "I50.9"
                } else {
                    ROUTINE_CONDITIONS[rng.random_range(0..ROUTINE_CONDITIONS.len())]
                };
                let c = c.with_condition(code);
                match class {
                    ClaimClass::Inpatient => c.with_inpatient_days(rng.random_range(1..=10)),
                    ClaimClass::Emergency => c.with_procedure("99285"),
                    ClaimClass::Professional => c.with_procedure("99213"),
                    _ => c,
                }
            }
        }
    }

    /// Members `range` in index order, generated in parallel.
    pub fn members(&self, range: std::ops::Range<usize>) -> Vec<SyntheticMember> {
        range.into_par_iter().map(|i| self.member(i)).collect()
    }

    /// Every member as a finished in-memory store.
    pub fn store(&self) -> Result<MemberStore> {
        let mut store = MemberStore::default();
        const CHUNK: usize = 16_384;
        let n = self.params.n_members;
        for start in (0..n).step_by(CHUNK) {
            for m in self.members(start..(start + CHUNK).min(n)) {
                store.insert(m.record);
            }
        }
        store.finish()?;
        Ok(store)
    }
}

/// Generates the population in memory: member store plus the ZIP table.
pub fn generate_population(params: &GenParams, schema: &SdohSchema) -> Result<(MemberStore, SdohTable)> {
    let g = Generator::new(params.clone(), schema)?;
    let store = g.store()?;
    Ok((store, g.zips.sdoh))
}
