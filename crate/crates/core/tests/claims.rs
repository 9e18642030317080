use chrono::{Duration, NaiveDate};
use hicc_core::claims::{
    band_counts, cohort_tags, read_claims, ClaimClass, ClaimLine, EnrollmentSpan, MemberRecord, MemberStore,
    PeriodPair, SdohSchema, HICC_THRESHOLD,
};
use hicc_core::synthgen::{GenParams, Generator};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn day(d: NaiveDate, k: i64) -> NaiveDate {
    d + Duration::days(k)
}

#[test]
fn ten_thousand_rows_sum_to_an_independent_line_total() {
    let mut r = ChaCha8Rng::seed_from_u64(1);
    let start = NaiveDate::from_ymd_opt(2016, 4, 1).unwrap();
    let mut text = String::from(
        "member_id,service_date,claim_class,allowed_amount,condition_code,procedure_code,drug_class,inpatient_days\n",
    );
    for _ in 0..10_000 {
        let cents: i64 = r.random_range(-5_000..2_000_000);
        text.push_str(&format!(
            "M{:04},{},professional,{}.{:02},,,,\n",
            r.random_range(0..700),
            day(start, r.random_range(0..1000)),
            cents / 100,
            (cents % 100).abs()
        ));
    }
    // independent pass: split each line by hand
    let expected: f64 = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(3).unwrap().parse::<f64>().unwrap())
        .sum();
    let mut store = MemberStore::default();
    let (rows, total) = read_claims(text.as_bytes(), "claims.csv", &mut store).unwrap();
    store.finish().unwrap();
    assert_eq!(rows, 10_000);
    assert!(
        (total - expected).abs() <= 1e-6 * expected.abs(),
        "{total} vs {expected}"
    );
    let per_member: f64 = store.iter().flat_map(|m| &m.claims).map(|c| c.allowed_amount).sum();
    assert!((per_member - expected).abs() <= 1e-6 * expected.abs());
    assert!(store
        .iter()
        .all(|m| m.claims.windows(2).all(|w| w[0].service_date <= w[1].service_date)));
}

#[test]
fn generated_cohort_partitions_and_band_counts_add_up() {
    let params = GenParams {
        n_members: 5_000,
        hicc_prevalence: 0.02,
        seed: 4,
        ..GenParams::default()
    };
    let g = Generator::new(params, &SdohSchema::bundled()).unwrap();
    let tags: Vec<_> = g
        .members(0..5_000)
        .iter()
        .map(|m| cohort_tags(&m.record, &g.periods, HICC_THRESHOLD))
        .filter(|t| t.eligible)
        .collect();
    let recurrent = tags.iter().filter(|t| t.recurrent).count();
    let emergent = tags.iter().filter(|t| !t.recurrent).count();
    assert!(recurrent > 0 && emergent > 0);
    assert_eq!(recurrent + emergent, tags.len());
    assert_eq!(band_counts(&tags).values().sum::<usize>(), tags.len());
}

fn periods() -> PeriodPair {
    PeriodPair::study_default()
}

fn claims_strategy() -> impl Strategy<Value = Vec<(i64, f64)>> {
    // offsets from two years before the report start through the prediction period
    prop::collection::vec((0i64..1460, -2_000.0f64..150_000.0), 0..40)
}

fn member_with(claims: &[(i64, f64)], spans: &[(i64, i64)]) -> MemberRecord {
    let origin = day(periods().report_start, -730);
    let mut m = MemberRecord::new("M1");
    m.birth_date = NaiveDate::from_ymd_opt(1970, 6, 1);
    m.claims = claims
        .iter()
        .map(|&(d, a)| ClaimLine::new(day(origin, d), ClaimClass::Outpatient, a))
        .collect();
    m.spans = spans
        .iter()
        .map(|&(a, len)| EnrollmentSpan {
            start_date: day(origin, a),
            end_date: day(origin, a + len),
            has_medical: true,
            has_pharmacy: a % 2 == 0,
        })
        .collect();
    m.sort_claims();
    m
}

proptest! {
    #[test]
    fn label_ignores_claim_row_order(claims in claims_strategy(), seed in any::<u64>()) {
        let a = member_with(&claims, &[(0, 1460)]);
        let mut shuffled = claims.clone();
        rand::seq::SliceRandom::shuffle(&mut shuffled[..], &mut ChaCha8Rng::seed_from_u64(seed));
        let b = member_with(&shuffled, &[(0, 1460)]);
        let (ta, tb) = (cohort_tags(&a, &periods(), HICC_THRESHOLD), cohort_tags(&b, &periods(), HICC_THRESHOLD));
        prop_assert_eq!(ta.label_hicc, tb.label_hicc);
        prop_assert_eq!(ta.recurrent, tb.recurrent);
    }

    #[test]
    fn eligibility_ignores_spans_away_from_anchor_dates(
        spans in prop::collection::vec((0i64..1460, 0i64..400), 0..6),
        extra in prop::collection::vec((0i64..1460, 0i64..400), 1..4),
    ) {
        let p = periods();
        let origin = day(p.report_start, -730);
        let touches = |&(a, len): &(i64, i64)| {
            let (s, e) = (day(origin, a), day(origin, a + len));
            [p.report_anchor(), p.predict_anchor()].iter().any(|&d| s <= d && d <= e)
        };
        let base = member_with(&[], &spans);
        let away: Vec<(i64, i64)> = extra.into_iter().filter(|s| !touches(s)).collect();
        let mut added = spans.clone();
        added.extend(&away);
        let kept: Vec<(i64, i64)> = spans.iter().copied().filter(touches).collect();
        let e0 = cohort_tags(&base, &p, HICC_THRESHOLD).eligible;
        for variant in [added, kept] {
            let m = member_with(&[], &variant);
            prop_assert_eq!(cohort_tags(&m, &p, HICC_THRESHOLD).eligible, e0);
        }
    }

    #[test]
    fn report_period_over_threshold_is_recurrent(claims in claims_strategy()) {
        let t = cohort_tags(&member_with(&claims, &[(0, 1460)]), &periods(), HICC_THRESHOLD);
        prop_assert!(t.eligible);
        let report = member_with(&claims, &[(0, 1460)]).total_allowed(periods().report_start, periods().report_end);
        if report > HICC_THRESHOLD {
            prop_assert!(t.recurrent);
        }
    }
}
