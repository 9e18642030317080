use chrono::Duration;
use hicc_core::claims::{EnrollmentSpan, SdohSchema};
use hicc_core::features::{featurize, FeatureCatalog, FeatureContext, LifeTable};
use hicc_core::synthgen::{GenParams, Generator};
use proptest::prelude::*;

const ANNUALIZED: [&str; 3] = [
    "ANNUAL_ALLWD_AMT_CURRENT_YEAR",
    "ANNUAL_ALLWD_AMT_PRIOR_YEAR",
    "ANNUAL_ALLWD_AMT_2_YEARS_PRIOR",
];

fn generator(seed: u64) -> Generator {
    let params = GenParams {
        n_members: 500,
        hicc_prevalence: 0.05,
        seed,
        ..GenParams::default()
    };
    Generator::new(params, &SdohSchema::bundled()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn features_are_pure_and_bounded(seed in 0u64..1_000, index in 0usize..500, start in 0i64..365, len in 0i64..80) {
        let g = generator(seed);
        let catalog = FeatureCatalog::bundled();
        let life = LifeTable::bundled();
        let ctx = FeatureContext { catalog: &catalog, life_table: &life, sdoh: &g.zips.sdoh, periods: g.periods };
        let mut member = g.member(index).record;

        let a = featurize(&member, &ctx);
        let b = featurize(&member, &ctx);
        prop_assert_eq!(a.iter().map(|v| v.map(f64::to_bits)).collect::<Vec<_>>(), b.iter().map(|v| v.map(f64::to_bits)).collect::<Vec<_>>());
        let risk = catalog.index_of("MORTALITY_RISK").unwrap();
        if let Some(r) = a[risk] {
            prop_assert!((0.0..=1.0).contains(&r));
        }

        // a single short span inside the report period
        let s = g.periods.report_start + Duration::days(start);
        member.spans = vec![EnrollmentSpan { start_date: s, end_date: s + Duration::days(len), has_medical: true, has_pharmacy: false }];
        let v = featurize(&member, &ctx);
        let col = |name: &str| v[catalog.index_of(name).unwrap()];
        if member.covered_days(g.periods.report_start, g.periods.report_end) < 30 {
            prop_assert_eq!(col(ANNUALIZED[0]), None);
        }
        // no coverage at all before the report period
        prop_assert_eq!(col(ANNUALIZED[1]), None);
        prop_assert_eq!(col(ANNUALIZED[2]), None);
    }
}
