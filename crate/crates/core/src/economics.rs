//! Care-management scenarios: program cost, savings and capacity sweeps.

use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::eval::{check_lengths, precision_at_k, ScoredMember};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioParams {
    pub population: u64,
    pub hicc_rate: f64,
    pub mean_hicc_cost: f64,
    /// Cost of enrolling one member, in dollars.
    pub intervention_cost: f64,
    /// Fraction of a high-cost member's annual cost averted by the program.
    pub reduction: f64,
    pub capacity: u64,
    /// Share of enrollees who are true high-cost members. When absent the
    /// precision comes from a scored cohort.
    pub precision: Option<f64>,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        ScenarioParams {
            population: 1_000_000,
            hicc_rate: 0.0016,
            mean_hicc_cost: 413_975.0,
            intervention_cost: 10_000.0,
            reduction: 0.15,
            capacity: 500,
            precision: None,
        }
    }
}

fn check_fraction(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::Invalid(format!("{name} must lie in [0, 1], got {v}")))
    }
}

impl ScenarioParams {
    pub fn validate(&self) -> Result<()> {
        check_fraction("hicc_rate", self.hicc_rate)?;
        check_fraction("reduction", self.reduction)?;
        if let Some(p) = self.precision {
            check_fraction("precision", p)?;
        }
        if self.capacity > self.population {
            return Err(Error::Invalid(format!(
                "capacity {} exceeds population {}",
                self.capacity, self.population
            )));
        }
        if !(self.mean_hicc_cost >= 0.0 && self.mean_hicc_cost.is_finite()) {
            return Err(Error::Invalid("mean_hicc_cost must be a nonnegative amount".into()));
        }
        if !(self.intervention_cost >= 0.0 && self.intervention_cost.is_finite()) {
            return Err(Error::Invalid("intervention_cost must be a nonnegative amount".into()));
        }
        Ok(())
    }

    pub fn with_precision(&self, precision: f64) -> Self {
        ScenarioParams {
            precision: Some(precision),
            ..self.clone()
        }
    }
}

/// Dollar amounts are whole dollars, rounded half away from zero.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScenarioResult {
    pub enrollees: u64,
    pub precision: f64,
    pub program_cost: i64,
    pub true_hiccs: u64,
    /// `None` when no enrollee is a high-cost member.
    pub cost_per_hicc: Option<i64>,
    pub total_savings: i64,
    pub net_savings: i64,
}

fn dollars(x: f64) -> i64 {
    x.round() as i64
}

/// First-year value of a program. With `cohort = Some((scores, labels))`
/// and no fixed precision, the precision is that of the `capacity` highest
/// scores.
pub fn run_scenario(params: &ScenarioParams, cohort: Option<(&[f64], &[bool])>) -> Result<ScenarioResult> {
    params.validate()?;
    let precision = match (params.precision, cohort) {
        (Some(p), _) => p,
        (None, Some((scores, labels))) => {
            if params.capacity == 0 {
                0.0
            } else {
                precision_at_k(scores, labels, params.capacity as usize)?
            }
        }
        (None, None) => return Err(Error::Invalid("scenario needs a precision or a scored cohort".into())),
    };
    let enrollees = params.capacity;
    let program_cost = enrollees as f64 * params.intervention_cost;
    let true_hiccs = (enrollees as f64 * precision).round() as u64;
    let savings = true_hiccs as f64 * params.mean_hicc_cost * params.reduction;
    Ok(ScenarioResult {
        enrollees,
        precision,
        program_cost: dollars(program_cost),
        true_hiccs,
        cost_per_hicc: (true_hiccs > 0).then(|| dollars(program_cost / true_hiccs as f64)),
        total_savings: dollars(savings),
        net_savings: dollars(savings - program_cost),
    })
}

/// Precision at which a program exactly pays for itself.
pub fn break_even_precision(params: &ScenarioParams) -> Result<f64> {
    let value_per_hicc = params.reduction * params.mean_hicc_cost;
    if !(value_per_hicc > 0.0) {
        return Err(Error::Invalid(
            "break-even needs positive reduction and mean cost".into(),
        ));
    }
    Ok(params.intervention_cost / value_per_hicc)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CapacityPoint {
    pub capacity: usize,
    pub precision: f64,
    pub true_hiccs: usize,
}

/// Precision and hit count at each capacity for one ranking. Ties are broken
/// by input order, as in [`precision_at_k`]. Capacities beyond the cohort
/// size are skipped.
pub fn precision_curve(scores: &[f64], labels: &[bool], capacities: &[usize]) -> Result<Vec<CapacityPoint>> {
    check_lengths(scores, labels)?;
    check_capacities(capacities)?;
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut out = Vec::with_capacity(capacities.len());
    let (mut hits, mut seen) = (0usize, 0usize);
    for &k in capacities.iter().take_while(|&&k| k <= idx.len()) {
        hits += idx[seen..k].iter().filter(|&&i| labels[i]).count();
        seen = k;
        out.push(CapacityPoint {
            capacity: k,
            precision: hits as f64 / k as f64,
            true_hiccs: hits,
        });
    }
    Ok(out)
}

fn check_capacities(capacities: &[usize]) -> Result<()> {
    if capacities.first() == Some(&0) {
        return Err(Error::Invalid("capacities must be positive".into()));
    }
    if capacities.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Invalid("capacities must be strictly ascending".into()));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRow {
    pub capacity: usize,
    /// `None` when the cohort has fewer members than the capacity.
    pub emergent: Option<CapacityPoint>,
    pub recurrent: Option<CapacityPoint>,
}

/// Separate emergent and recurrent programs, each filling its capacity from
/// the top of its own cohort's ranking.
pub fn capacity_sweep(members: &[ScoredMember], capacities: &[usize]) -> Result<Vec<SweepRow>> {
    check_capacities(capacities)?;
    let curve = |recurrent: bool| {
        let (s, y): (Vec<f64>, Vec<bool>) = members
            .iter()
            .filter(|m| m.recurrent == recurrent)
            .map(|m| (m.score, m.label))
            .unzip();
        precision_curve(&s, &y, capacities)
    };
    let (emergent, recurrent) = (curve(false)?, curve(true)?);
    Ok(capacities
        .iter()
        .enumerate()
        .map(|(i, &capacity)| SweepRow {
            capacity,
            emergent: emergent.get(i).copied(),
            recurrent: recurrent.get(i).copied(),
        })
        .collect())
}

/// Whole dollars with thousands separators, e.g. `-$4,379,038`.
pub fn fmt_dollars(v: i64) -> String {
    let digits = v.unsigned_abs().to_string();
    let mut s = String::with_capacity(digits.len() + 4);
    if v < 0 {
        s.push('-');
    }
    s.push('$');
    for (i, c) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i).is_multiple_of(3) {
            s.push(',');
        }
        s.push(c);
    }
    s
}

fn fmt_share(p: f64) -> String {
    let s = format!("{:.1}", 100.0 * p);
    format!("{}%", s.strip_suffix(".0").unwrap_or(&s))
}

const SCENARIO_ROWS: [&str; 7] = [
    "Members receiving case management",
    "Care management program cost",
    "Precision",
    "HiCCs benefiting from interventions",
    "Program cost per HiCC",
    "Total savings through care management",
    "Net savings",
];

fn scenario_cells(r: &ScenarioResult) -> [String; 7] {
    [
        r.enrollees.to_string(),
        fmt_dollars(r.program_cost),
        fmt_share(r.precision),
        r.true_hiccs.to_string(),
        r.cost_per_hicc.map(fmt_dollars).unwrap_or_else(|| "N.A.".into()),
        fmt_dollars(r.total_savings),
        fmt_dollars(r.net_savings),
    ]
}

/// Side-by-side comparison of named scenarios.
pub fn render_scenarios(columns: &[(&str, &ScenarioResult)]) -> String {
    let cells: Vec<[String; 7]> = columns.iter().map(|(_, r)| scenario_cells(r)).collect();
    let label_w = SCENARIO_ROWS.iter().map(|r| r.len()).max().unwrap_or(0);
    let widths: Vec<usize> = columns
        .iter()
        .zip(&cells)
        .map(|((name, _), c)| c.iter().map(String::len).chain([name.len()]).max().unwrap_or(0))
        .collect();
    let mut out = format!("{:label_w$}", "");
    for ((name, _), w) in columns.iter().zip(&widths) {
        let _ = write!(out, "  {name:>w$}");
    }
    out.push('\n');
    for (row, label) in SCENARIO_ROWS.iter().enumerate() {
        let _ = write!(out, "{label:label_w$}");
        for (c, w) in cells.iter().zip(&widths) {
            let _ = write!(out, "  {:>w$}", c[row]);
        }
        out.push('\n');
    }
    out
}

pub fn write_scenarios_csv<W: Write>(columns: &[(&str, &ScenarioResult)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["Row"];
    header.extend(columns.iter().map(|(n, _)| *n));
    w.write_record(&header)?;
    let cells: Vec<[String; 7]> = columns.iter().map(|(_, r)| scenario_cells(r)).collect();
    for (row, label) in SCENARIO_ROWS.iter().enumerate() {
        let mut rec = vec![label.to_string()];
        rec.extend(cells.iter().map(|c| c[row].clone()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("scenario report", e))?;
    Ok(())
}

fn point_cells(p: &Option<CapacityPoint>) -> (String, String) {
    match p {
        Some(p) => (fmt_share(p.precision), p.true_hiccs.to_string()),
        None => ("N.A.".into(), "N.A.".into()),
    }
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "capacity",
        "emergent_precision",
        "emergent_true_hiccs",
        "recurrent_precision",
        "recurrent_true_hiccs",
    ])?;
    let field = |p: &Option<CapacityPoint>| match p {
        Some(p) => (format!("{:.6}", p.precision), p.true_hiccs.to_string()),
        None => (String::new(), String::new()),
    };
    for r in rows {
        let (ep, eh) = field(&r.emergent);
        let (rp, rh) = field(&r.recurrent);
        w.write_record([r.capacity.to_string(), ep, eh, rp, rh])?;
    }
    w.flush().map_err(|e| Error::io("capacity sweep", e))?;
    Ok(())
}

pub fn render_sweep_text(rows: &[SweepRow]) -> String {
    let mut out = String::from("Capacity   Emergent precision  True HiCCs   Recurrent precision  True HiCCs\n");
    for r in rows {
        let (ep, eh) = point_cells(&r.emergent);
        let (rp, rh) = point_cells(&r.recurrent);
        let _ = writeln!(out, "{:>8}   {ep:>18}  {eh:>10}   {rp:>19}  {rh:>10}", r.capacity);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::claims::AgeBand;
    use proptest::prelude::*;
    use rand::seq::index::sample;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fixed(precision: f64) -> ScenarioParams {
        ScenarioParams::default().with_precision(precision)
    }

    #[test]
    fn rule_based_column() {
        let r = run_scenario(&fixed(0.02), None).unwrap();
        assert_eq!(r.true_hiccs, 10);
        assert_eq!(r.program_cost, 5_000_000);
        assert_eq!(r.cost_per_hicc, Some(500_000));
        assert_eq!(r.total_savings, 620_963);
        assert_eq!(r.net_savings, -4_379_038);
    }

    #[test]
    fn model_column_within_documented_gap() {
        let r = run_scenario(&fixed(0.398), None).unwrap();
        assert_eq!(r.true_hiccs, 199);
        assert_eq!(r.total_savings, 12_357_154);
        let printed = 12_354_536.0;
        assert!((r.total_savings as f64 / printed - 1.0).abs() < 5e-4);
        assert!((r.net_savings as f64 / 7_354_536.0 - 1.0).abs() < 5e-4);
        assert!((r.cost_per_hicc.unwrap() as f64 / 25_125.0 - 1.0).abs() < 5e-4);
    }

    #[test]
    fn zero_precision_costs_the_whole_program() {
        let r = run_scenario(&fixed(0.0), None).unwrap();
        assert_eq!((r.true_hiccs, r.total_savings, r.cost_per_hicc), (0, 0, None));
        assert_eq!(r.net_savings, -r.program_cost);
    }

    #[test]
    fn missing_precision_and_cohort_is_an_error() {
        assert!(run_scenario(&ScenarioParams::default(), None).is_err());
        let bad = ScenarioParams {
            capacity: 2_000_000,
            ..fixed(0.1)
        };
        assert!(run_scenario(&bad, None).is_err());
    }

    #[test]
    fn cohort_precision_uses_top_scores() {
        let scores = [0.9, 0.8, 0.7, 0.1];
        let labels = [true, false, true, true];
        let p = ScenarioParams {
            capacity: 2,
            ..Default::default()
        };
        let r = run_scenario(&p, Some((&scores, &labels))).unwrap();
        assert_eq!((r.precision, r.true_hiccs), (0.5, 1));
    }

    #[test]
    fn break_even() {
        let p = ScenarioParams::default();
        let b = break_even_precision(&p).unwrap();
        assert!((b - 10_000.0 / (0.15 * 413_975.0)).abs() < 1e-15);
        assert!((b - 0.1610).abs() < 5e-5);
        let free = ScenarioParams {
            intervention_cost: 0.0,
            ..p.clone()
        };
        assert_eq!(break_even_precision(&free).unwrap(), 0.0);
        // the only slack left is the rounding of the enrollee count to whole members
        let r = run_scenario(&p.with_precision(b), None).unwrap();
        assert!(
            (r.net_savings as f64).abs() <= 0.5 * p.mean_hicc_cost * p.reduction + 1.0,
            "{r:?}"
        );
        let none = ScenarioParams { reduction: 0.0, ..p };
        assert!(break_even_precision(&none).is_err());
    }

    #[test]
    fn random_enrollment_matches_prevalence_precision() {
        let p = ScenarioParams {
            population: 200_000,
            hicc_rate: 0.01,
            capacity: 20_000,
            ..Default::default()
        };
        let positives = (p.population as f64 * p.hicc_rate) as usize;
        let expected = run_scenario(&p.with_precision(p.hicc_rate), None).unwrap();
        let value = p.mean_hicc_cost * p.reduction;
        let draws: Vec<f64> = (0..20u64)
            .map(|seed| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                // members 0..positives are the high-cost ones
                let hits = sample(&mut rng, p.population as usize, p.capacity as usize)
                    .iter()
                    .filter(|&i| i < positives)
                    .count();
                hits as f64 * value
            })
            .collect();
        let mean = draws.iter().sum::<f64>() / 20.0;
        let sd = (draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / 19.0).sqrt();
        assert!(
            (mean - expected.total_savings as f64).abs() < 4.0 * sd / 20f64.sqrt() + value,
            "{mean} vs {expected:?}"
        );
    }

    fn member(score: f64, label: bool, recurrent: bool) -> ScoredMember {
        ScoredMember {
            score,
            label,
            recurrent,
            gender: None,
            age_band: AgeBand::Unknown,
            has_pharmacy_benefit: true,
            full_year_enrolled: true,
        }
    }

    #[test]
    fn sweep_counts_match_direct_top_k() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let members: Vec<ScoredMember> = (0..5_000)
            .map(|_| {
                let s: f64 = rng.random();
                member(s, rng.random::<f64>() < s * s * 0.2, rng.random::<f64>() < 0.3)
            })
            .collect();
        let caps = [300, 500, 1000];
        let rows = capacity_sweep(&members, &caps).unwrap();
        assert_eq!(rows.len(), 3);
        for (cohort, pick) in [(false, 0), (true, 1)] {
            let mut sub: Vec<&ScoredMember> = members.iter().filter(|m| m.recurrent == cohort).collect();
            sub.sort_by(|a, b| b.score.total_cmp(&a.score));
            let mut last = f64::INFINITY;
            for r in &rows {
                let pt = if pick == 0 { r.emergent } else { r.recurrent }.unwrap();
                let direct = sub[..r.capacity].iter().filter(|m| m.label).count();
                assert_eq!(pt.true_hiccs, direct);
                assert_eq!(pt.true_hiccs, (pt.precision * r.capacity as f64).round() as usize);
                assert!(pt.precision <= last + 0.05);
                last = pt.precision;
            }
        }
        let text = render_sweep_text(&rows);
        assert_eq!(text.lines().count(), 4);
    }

    #[test]
    fn full_capacity_gives_prevalence() {
        let scores = [0.3, 0.9, 0.1, 0.5, 0.7];
        let labels = [false, true, false, true, false];
        let c = precision_curve(&scores, &labels, &[5]).unwrap();
        assert_eq!(c[0].precision, 0.4);
        assert!(precision_curve(&scores, &labels, &[3, 2]).is_err());
        assert!(precision_curve(&scores, &labels, &[0]).is_err());
        assert_eq!(precision_curve(&scores, &labels, &[2, 9]).unwrap().len(), 1);
    }

    #[test]
    fn report_layout() {
        let rule = run_scenario(&fixed(0.02), None).unwrap();
        let ml = run_scenario(&fixed(0.398), None).unwrap();
        let text = render_scenarios(&[("Rule-based system", &rule), ("ML algorithm", &ml)]);
        assert!(text.contains("-$4,379,038"), "{text}");
        assert!(text.contains("39.8%") && text.contains(" 2%"));
        let mut buf = Vec::new();
        write_scenarios_csv(&[("Rule-based system", &rule)], &mut buf).unwrap();
        let csv = String::from_utf8(buf).unwrap();
        assert!(
            csv.contains("Total savings through care management,\"$620,963\""),
            "{csv}"
        );
        assert_eq!(fmt_dollars(0), "$0");
        assert_eq!(fmt_dollars(999), "$999");
        assert_eq!(fmt_dollars(1_000), "$1,000");
    }

    proptest! {
        #[test]
        fn net_savings_increases_with_precision_and_reduction(
            p1 in 0.0..1.0f64, dp in 0.004..0.5f64, r1 in 0.0..1.0f64, dr in 0.01..0.5f64,
        ) {
            // steps large enough to move the rounded enrollee count
            let base = ScenarioParams { reduction: r1, ..fixed(p1) };
            let a = run_scenario(&base, None).unwrap();
            if p1 + dp <= 1.0 {
                let b = run_scenario(&base.with_precision(p1 + dp), None).unwrap();
                prop_assert!(b.net_savings > a.net_savings);
            }
            if r1 + dr <= 1.0 && a.true_hiccs > 0 {
                let c = run_scenario(&ScenarioParams { reduction: r1 + dr, ..base.clone() }, None).unwrap();
                prop_assert!(c.net_savings > a.net_savings);
            }
        }

        #[test]
        fn accounting_identities(p in 0.0..1.0f64, cap in 0u64..5_000) {
            let r = run_scenario(&ScenarioParams { capacity: cap, ..fixed(p) }, None).unwrap();
            prop_assert_eq!(r.program_cost, cap as i64 * 10_000);
            prop_assert!((r.net_savings - (r.total_savings - r.program_cost)).abs() <= 1);
            if let Some(c) = r.cost_per_hicc {
                prop_assert!((c as f64 - r.program_cost as f64 / r.true_hiccs as f64).abs() <= 0.5);
            }
        }
    }
}
