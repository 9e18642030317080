//! ZIP-level audit of scores and costs against minority-population share.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::claims::SdohTable;
use crate::{Error, Result};

/// Published reference points, printed beside the audit for context.
const REFERENCE_SCORE_R2: f64 = 0.47;
const REFERENCE_COST_PER_POINT: f64 = -1.6;

#[derive(Clone, Debug, PartialEq)]
pub struct AuditMember {
    pub zip: Option<String>,
    pub score: f64,
    pub annual_cost: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ZipAggregate {
    pub zip: String,
    pub n_members: usize,
    pub mean_score: f64,
    pub mean_annual_cost: f64,
    pub minority_fraction: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Aggregation {
    /// Sorted by ZIP.
    pub zips: Vec<ZipAggregate>,
    /// Members with no ZIP or a ZIP missing from the SDOH table.
    pub excluded: usize,
}

/// Sum of values in sorted order, so the result does not depend on input order.
fn ordered_mean(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn zip_aggregate(members: &[AuditMember], sdoh: &SdohTable) -> Aggregation {
    let mut groups: BTreeMap<&str, (f64, Vec<usize>)> = BTreeMap::new();
    let mut excluded = 0;
    for (i, m) in members.iter().enumerate() {
        match m.zip.as_deref().and_then(|z| sdoh.minority_fraction(z).map(|f| (z, f))) {
            Some((z, f)) => groups.entry(z).or_insert_with(|| (f, Vec::new())).1.push(i),
            None => excluded += 1,
        }
    }
    let groups: Vec<(&str, (f64, Vec<usize>))> = groups.into_iter().collect();
    let zips = groups
        .par_iter()
        .map(|(zip, (minority, idx))| ZipAggregate {
            zip: zip.to_string(),
            n_members: idx.len(),
            mean_score: ordered_mean(idx.iter().map(|&i| members[i].score).collect()),
            mean_annual_cost: ordered_mean(idx.iter().map(|&i| members[i].annual_cost).collect()),
            minority_fraction: *minority,
        })
        .collect();
    Aggregation { zips, excluded }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OlsFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n: usize,
}

/// Least-squares line through (x, y).
pub fn ols_simple(x: &[f64], y: &[f64]) -> Result<OlsFit> {
    ols_weighted(x, y, None)
}

/// Least squares with optional nonnegative per-point weights.
pub fn ols_weighted(x: &[f64], y: &[f64], weights: Option<&[f64]>) -> Result<OlsFit> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::Invalid("regression needs at least two points".into()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Invalid("regression inputs must be finite".into()));
    }
    let w = |i: usize| weights.map_or(1.0, |w| w[i]);
    if let Some(ws) = weights {
        if ws.len() != x.len() || ws.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
            return Err(Error::Invalid(
                "weights must be finite, nonnegative and one per point".into(),
            ));
        }
    }
    let constant = |v: &[f64]| {
        (0..v.len())
            .filter(|&i| w(i) > 0.0)
            .map(|i| v[i])
            .collect::<Vec<_>>()
            .windows(2)
            .all(|p| p[0] == p[1])
    };
    if constant(x) {
        return Err(Error::Invalid("x is constant; slope undefined".into()));
    }
    let sw: f64 = (0..x.len()).map(w).sum();
    let xm = (0..x.len()).map(|i| w(i) * x[i]).sum::<f64>() / sw;
    let ym = (0..x.len()).map(|i| w(i) * y[i]).sum::<f64>() / sw;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for i in 0..x.len() {
        let (dx, dy) = (x[i] - xm, y[i] - ym);
        sxx += w(i) * dx * dx;
        sxy += w(i) * dx * dy;
        syy += w(i) * dy * dy;
    }
    if constant(y) {
        return Ok(OlsFit {
            slope: 0.0,
            intercept: ym,
            r_squared: 0.0,
            n: x.len(),
        });
    }
    let slope = sxy / sxx;
    Ok(OlsFit {
        slope,
        intercept: ym - slope * xm,
        r_squared: (sxy * sxy / (sxx * syy)).min(1.0),
        n: x.len(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditReport {
    pub n_zips: usize,
    pub n_members: usize,
    pub excluded: usize,
    pub weighted: bool,
    pub score_fit: OlsFit,
    pub cost_fit: OlsFit,
}

/// Regresses mean score and mean annual cost on minority share, one point per
/// ZIP, optionally weighted by member count.
pub fn audit_aggregates(agg: &Aggregation, weighted: bool) -> Result<AuditReport> {
    if agg.zips.len() < 2 {
        return Err(Error::Invalid(format!(
            "audit needs at least two ZIPs, found {}",
            agg.zips.len()
        )));
    }
    let x: Vec<f64> = agg.zips.iter().map(|z| z.minority_fraction).collect();
    let score: Vec<f64> = agg.zips.iter().map(|z| z.mean_score).collect();
    let cost: Vec<f64> = agg.zips.iter().map(|z| z.mean_annual_cost).collect();
    let n: Vec<f64> = agg.zips.iter().map(|z| z.n_members as f64).collect();
    let w = weighted.then_some(n.as_slice());
    Ok(AuditReport {
        n_zips: agg.zips.len(),
        n_members: agg.zips.iter().map(|z| z.n_members).sum(),
        excluded: agg.excluded,
        weighted,
        score_fit: ols_weighted(&x, &score, w)?,
        cost_fit: ols_weighted(&x, &cost, w)?,
    })
}

pub fn audit_report(members: &[AuditMember], sdoh: &SdohTable, weighted: bool) -> Result<(Aggregation, AuditReport)> {
    let agg = zip_aggregate(members, sdoh);
    let report = audit_aggregates(&agg, weighted)?;
    Ok((agg, report))
}

/// Upper edge of the score R² expected by chance: mean + 4 sd of R² over
/// `rounds` random reassignments of minority share to ZIPs.
pub fn permutation_null_band(agg: &Aggregation, rounds: usize, seed: u64) -> Result<f64> {
    if rounds < 2 {
        return Err(Error::Invalid("null band needs at least two rounds".into()));
    }
    let score: Vec<f64> = agg.zips.iter().map(|z| z.mean_score).collect();
    let r2 = (0..rounds)
        .map(|r| {
            let mut x: Vec<f64> = agg.zips.iter().map(|z| z.minority_fraction).collect();
            x.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ ((r as u64) << 32)));
            ols_simple(&x, &score).map(|f| f.r_squared)
        })
        .collect::<Result<Vec<f64>>>()?;
    let k = r2.len() as f64;
    let mean = r2.iter().sum::<f64>() / k;
    let sd = (r2.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt();
    Ok(mean + 4.0 * sd)
}

fn signed_dollars(v: f64, decimals: usize) -> String {
    let sign = if v < 0.0 { "-" } else { "" };
    format!("{sign}${:.*}", decimals, v.abs())
}

pub fn render_audit_text(r: &AuditReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "ZIPs {}  members {}  excluded {}  {}",
        r.n_zips,
        r.n_members,
        r.excluded,
        if r.weighted { "member-weighted" } else { "unweighted" }
    );
    let _ = writeln!(
        s,
        "mean score ~ minority share: slope {:.6}  intercept {:.6}  R^2 {:.4}",
        r.score_fit.slope, r.score_fit.intercept, r.score_fit.r_squared
    );
    let _ = writeln!(
        s,
        "mean annual cost ~ minority share: slope {:.2}  ({} per percentage point)  intercept {:.2}  R^2 {:.4}",
        r.cost_fit.slope,
        signed_dollars(r.cost_fit.slope / 100.0, 2),
        r.cost_fit.intercept,
        r.cost_fit.r_squared
    );
    let _ = writeln!(
        s,
        "reference from the published audit: score R^2 {:.0}%, cost {} per percentage point",
        100.0 * REFERENCE_SCORE_R2,
        signed_dollars(REFERENCE_COST_PER_POINT, 1)
    );
    s
}

pub fn write_scatter_csv<W: Write>(agg: &Aggregation, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["zip", "n", "mean_score", "mean_cost", "minority_fraction"])?;
    for z in &agg.zips {
        w.write_record([
            z.zip.clone(),
            z.n_members.to_string(),
            z.mean_score.to_string(),
            z.mean_annual_cost.to_string(),
            z.minority_fraction.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("zip_scatter.csv", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::claims::SdohSchema;
    use proptest::prelude::*;
    use rand::Rng;

    fn table(zips: &[(&str, f64)]) -> SdohTable {
        let schema = SdohSchema::bundled();
        let mi = schema.index_of(crate::claims::MINORITY_FRACTION).unwrap();
        let mut t = SdohTable::new(schema.clone()).unwrap();
        for (z, f) in zips {
            let mut row = vec![Some(0.0); schema.indicators.len()];
            row[mi] = Some(*f);
            t.insert(z.to_string(), row).unwrap();
        }
        t
    }

    fn am(zip: Option<&str>, score: f64, cost: f64) -> AuditMember {
        AuditMember {
            zip: zip.map(String::from),
            score,
            annual_cost: cost,
        }
    }

    #[test]
    fn two_members_one_zip_and_an_unknown() {
        let t = table(&[("10001", 0.3)]);
        let agg = zip_aggregate(
            &[
                am(Some("10001"), 0.2, 10.0),
                am(Some("10001"), 0.4, 30.0),
                am(None, 0.9, 0.0),
                am(Some("99999"), 0.1, 0.0),
            ],
            &t,
        );
        assert_eq!(agg.zips.len(), 1);
        assert!((agg.zips[0].mean_score - 0.3).abs() < 1e-15);
        assert_eq!(agg.zips[0].mean_annual_cost, 20.0);
        assert_eq!(agg.excluded, 2);
        assert!(audit_aggregates(&agg, false).is_err());
    }

    #[test]
    fn group_by_oracle_on_a_thousand_members() {
        let zips: Vec<(String, f64)> = (0..30)
            .map(|k| (format!("{:05}", 20000 + k), k as f64 / 30.0))
            .collect();
        let refs: Vec<(&str, f64)> = zips.iter().map(|(z, f)| (z.as_str(), *f)).collect();
        let t = table(&refs);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let members: Vec<AuditMember> = (0..1_000)
            .map(|_| {
                am(
                    Some(&zips[rng.random_range(0..30)].0),
                    rng.random(),
                    rng.random_range(0.0..1e5),
                )
            })
            .collect();
        let agg = zip_aggregate(&members, &t);
        for z in &agg.zips {
            let own: Vec<&AuditMember> = members.iter().filter(|m| m.zip.as_deref() == Some(&z.zip)).collect();
            let ms = own.iter().map(|m| m.score).sum::<f64>() / own.len() as f64;
            let mc = own.iter().map(|m| m.annual_cost).sum::<f64>() / own.len() as f64;
            assert_eq!(z.n_members, own.len());
            assert!((z.mean_score - ms).abs() < 1e-12 && (z.mean_annual_cost - mc).abs() < 1e-9 * mc);
        }
        let mut shuffled = members.clone();
        shuffled.shuffle(&mut rng);
        assert_eq!(zip_aggregate(&shuffled, &t), agg);

        let (agg2, report) = audit_report(&members, &t, false).unwrap();
        assert_eq!(agg2, agg);
        let x: Vec<f64> = agg.zips.iter().map(|z| z.minority_fraction).collect();
        let y: Vec<f64> = agg.zips.iter().map(|z| z.mean_score).collect();
        assert_eq!(report.score_fit, ols_simple(&x, &y).unwrap());
        let mut buf = Vec::new();
        write_scatter_csv(&agg, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 31);
    }

    #[test]
    fn exact_line_and_constant_cases() {
        let x = [0.0, 1.0, 2.0, 3.5];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let f = ols_simple(&x, &y).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12 && (f.intercept - 1.0).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        let c = ols_simple(&x, &[4.0; 4]).unwrap();
        assert_eq!((c.slope, c.r_squared), (0.0, 0.0));
        assert!(ols_simple(&[1.0; 4], &y).is_err());
        assert!(ols_simple(&[1.0], &[1.0]).is_err());
    }

    #[test]
    fn weights_reproduce_replicated_points() {
        let x = [0.1, 0.4, 0.5, 0.9];
        let y = [1.0, 3.0, 2.0, 7.0];
        let wf = ols_weighted(&x, &y, Some(&[1.0, 3.0, 1.0, 2.0])).unwrap();
        let rx = [0.1, 0.4, 0.4, 0.4, 0.5, 0.9, 0.9];
        let ry = [1.0, 3.0, 3.0, 3.0, 2.0, 7.0, 7.0];
        let rf = ols_simple(&rx, &ry).unwrap();
        assert!((wf.slope - rf.slope).abs() < 1e-12 && (wf.r_squared - rf.r_squared).abs() < 1e-12);
    }

    #[test]
    fn twenty_random_points_match_raw_sum_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x: Vec<f64> = (0..20).map(|_| rng.random()).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v + rng.random::<f64>()).collect();
        let n = 20.0;
        let (sx, sy) = (x.iter().sum::<f64>(), y.iter().sum::<f64>());
        let sxx: f64 = x.iter().map(|v| v * v).sum();
        let syy: f64 = y.iter().map(|v| v * v).sum();
        let sxy: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        let r = (n * sxy - sx * sy) / ((n * sxx - sx * sx) * (n * syy - sy * sy)).sqrt();
        let f = ols_simple(&x, &y).unwrap();
        assert!((f.slope - slope).abs() < 1e-12 * slope.abs());
        assert!((f.intercept - (sy - slope * sx) / n).abs() < 1e-12);
        assert!((f.r_squared - r * r).abs() < 1e-12);
    }

    #[test]
    fn null_band_bounds_independent_scores() {
        let zips: Vec<(String, f64)> = (0..200)
            .map(|k| (format!("{:05}", 10001 + k), (k as f64 * 0.37) % 1.0))
            .collect();
        let refs: Vec<(&str, f64)> = zips.iter().map(|(z, f)| (z.as_str(), *f)).collect();
        let t = table(&refs);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let members: Vec<AuditMember> = (0..40_000)
            .map(|_| am(Some(&zips[rng.random_range(0..200)].0), rng.random(), 0.0))
            .collect();
        let (agg, report) = audit_report(&members, &t, false).unwrap();
        let band = permutation_null_band(&agg, 20, 1).unwrap();
        assert!(band > 0.0 && band < 0.1, "{band}");
        assert!(
            report.score_fit.r_squared <= band,
            "{} > {band}",
            report.score_fit.r_squared
        );
        assert!(render_audit_text(&report).contains("cost -$1.6 per percentage point"));
    }

    proptest! {
        #[test]
        fn r_squared_in_unit_interval_and_affine_invariant(
            pts in prop::collection::vec((-100.0..100.0f64, -100.0..100.0f64), 3..40),
            a in 0.1..10.0f64, b in -50.0..50.0f64, c in -10.0..-0.1f64, d in -50.0..50.0f64,
        ) {
            let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
            prop_assume!(x.iter().any(|&v| v != x[0]) && y.iter().any(|&v| v != y[0]));
            let f = ols_simple(&x, &y).unwrap();
            prop_assert!((0.0..=1.0).contains(&f.r_squared));
            let x2: Vec<f64> = x.iter().map(|v| a * v + b).collect();
            let y2: Vec<f64> = y.iter().map(|v| c * v + d).collect();
            let g = ols_simple(&x2, &y2).unwrap();
            prop_assert!((f.r_squared - g.r_squared).abs() < 1e-9);
        }
    }
}
