use std::fmt;

use super::GenParams;
use crate::claims::{cohort_tags, MemberStore, HICC_THRESHOLD};

/// Realized statistics of a generated population against its targets.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub members: usize,
    pub eligible: usize,
    pub hicc: usize,
    pub prevalence: f64,
    /// `None` when there are no high-cost members.
    pub mean_hicc_cost: Option<f64>,
    pub full_year_fraction: f64,
    pub pharmacy_fraction: f64,
    /// Statistics outside four standard errors of their target.
    pub flags: Vec<String>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.flags.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "members            {}", self.members)?;
        writeln!(f, "eligible           {}", self.eligible)?;
        writeln!(f, "high-cost          {} ({:.4}%)", self.hicc, 100.0 * self.prevalence)?;
        match self.mean_hicc_cost {
            Some(m) => writeln!(f, "mean high-cost     {m:.0}")?,
            None => writeln!(f, "mean high-cost     n/a")?,
        }
        writeln!(f, "full-year share    {:.4}", self.full_year_fraction)?;
        writeln!(f, "pharmacy share     {:.4}", self.pharmacy_fraction)?;
        for flag in &self.flags {
            writeln!(f, "FLAG {flag}")?;
        }
        Ok(())
    }
}

fn check_share(flags: &mut Vec<String>, name: &str, hits: usize, n: usize, target: f64) {
    let realized = hits as f64 / n as f64;
    let sd = (target * (1.0 - target) / n as f64).sqrt();
    if (realized - target).abs() > 4.0 * sd + 1e-12 {
        flags.push(format!("{name} {realized:.5} outside 4 sd of {target}"));
    }
}

pub fn validate_generated(store: &MemberStore, params: &GenParams) -> ValidationReport {
    let periods = params.periods();
    let mut r = ValidationReport {
        members: store.len(),
        ..Default::default()
    };
    let mut costs = Vec::new();
    let (mut full, mut pharmacy) = (0usize, 0usize);
    for m in store.iter() {
        let t = cohort_tags(m, &periods, HICC_THRESHOLD);
        if !t.eligible {
            continue;
        }
        r.eligible += 1;
        full += usize::from(t.full_year_enrolled);
        pharmacy += usize::from(t.has_pharmacy_benefit);
        if t.label_hicc {
            costs.push(t.predict_total);
        }
    }
    r.hicc = costs.len();
    if r.eligible == 0 {
        r.flags.push("no eligible members".into());
        return r;
    }
    let n = r.eligible;
    r.prevalence = r.hicc as f64 / n as f64;
    r.full_year_fraction = full as f64 / n as f64;
    r.pharmacy_fraction = pharmacy as f64 / n as f64;
    check_share(&mut r.flags, "prevalence", r.hicc, n, params.hicc_prevalence);
    check_share(&mut r.flags, "full-year share", full, n, params.frac_full_year);
    check_share(&mut r.flags, "pharmacy share", pharmacy, n, params.frac_pharmacy);

    if costs.is_empty() {
        r.flags.push("degenerate: no high-cost members".into());
    } else {
        let k = costs.len() as f64;
        let mean = costs.iter().sum::<f64>() / k;
        r.mean_hicc_cost = Some(mean);
        if costs.len() > 1 {
            let var = costs.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (k - 1.0);
            let se = (var / k).sqrt();
            if (mean - params.mean_hicc_cost).abs() > 4.0 * se {
                r.flags.push(format!(
                    "mean high-cost {mean:.0} outside 4 se of {}",
                    params.mean_hicc_cost
                ));
            }
        }
    }
    r
}
