//! Small CSV artifacts passed between subcommands.

use std::collections::HashMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use hicc_core::claims::{AgeBand, CohortTags, Gender};
use hicc_core::eval::ScoredMember;

pub const FEATURES: &str = "features.csv";
pub const COHORT: &str = "cohort.csv";
pub const SPLIT: &str = "split.csv";
pub const MODEL: &str = "model.bin";
pub const CALIBRATOR: &str = "calibrator.csv";
pub const SCORES: &str = "scores.csv";

pub fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(csv::Writer::from_writer(BufWriter::new(f)))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

/// One eligible member's label and strata.
#[derive(Clone, Debug, PartialEq)]
pub struct CohortRow {
    pub member_id: String,
    pub tags: CohortTags,
    pub gender: Option<Gender>,
    pub zip: Option<String>,
}

impl CohortRow {
    pub fn scored(&self, score: f64) -> ScoredMember {
        ScoredMember::new(score, &self.tags, self.gender)
    }
}

const COHORT_HEADER: [&str; 9] = [
    "member_id",
    "label",
    "recurrent",
    "predict_total",
    "age_band",
    "gender",
    "pharmacy_benefit",
    "full_year",
    "zip",
];

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

pub fn write_cohort(path: &Path, rows: &[CohortRow]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(COHORT_HEADER)?;
    for r in rows {
        let t = &r.tags;
        w.write_record([
            r.member_id.as_str(),
            flag(t.label_hicc),
            flag(t.recurrent),
            &format!("{:.2}", t.predict_total),
            t.age_band.as_str(),
            &r.gender.map(|g| g.to_string()).unwrap_or_default(),
            flag(t.has_pharmacy_benefit),
            flag(t.full_year_enrolled),
            r.zip.as_deref().unwrap_or(""),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_cohort(path: &Path) -> Result<Vec<CohortRow>> {
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    if rdr.headers()?.iter().ne(COHORT_HEADER) {
        bail!("{}: unexpected header", path.display());
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let at = || format!("{}:{}", path.display(), i + 2);
        let bit = |k: usize| match &rec[k] {
            "0" => Ok(false),
            "1" => Ok(true),
            v => Err(anyhow!("{}: bad flag {v:?}", at())),
        };
        let tags = CohortTags {
            eligible: true,
            label_hicc: bit(1)?,
            recurrent: bit(2)?,
            predict_total: rec[3].parse().with_context(at)?,
            age_band: AgeBand::parse(&rec[4]).ok_or_else(|| anyhow!("{}: bad age band", at()))?,
            has_pharmacy_benefit: bit(6)?,
            full_year_enrolled: bit(7)?,
        };
        let gender = match &rec[5] {
            "" => None,
            g => Some(g.parse().map_err(|e: String| anyhow!("{}: {e}", at()))?),
        };
        rows.push(CohortRow {
            member_id: rec[0].to_string(),
            tags,
            gender,
            zip: (!rec[8].is_empty()).then(|| rec[8].to_string()),
        });
    }
    Ok(rows)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Split {
    Train,
    Calibrate,
    Holdout,
}

impl Split {
    fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Calibrate => "calibrate",
            Split::Holdout => "holdout",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "train" => Some(Split::Train),
            "calibrate" => Some(Split::Calibrate),
            "holdout" => Some(Split::Holdout),
            _ => None,
        }
    }
}

pub fn write_split(path: &Path, ids: &[String], split: &[Split]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["member_id", "split"])?;
    for (id, s) in ids.iter().zip(split) {
        w.write_record([id.as_str(), s.as_str()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_split(path: &Path) -> Result<HashMap<String, Split>> {
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = HashMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let s = Split::parse(&rec[1]).ok_or_else(|| anyhow!("{}: bad split {:?}", path.display(), &rec[1]))?;
        out.insert(rec[0].to_string(), s);
    }
    Ok(out)
}

pub fn write_scores(path: &Path, ids: &[String], scores: &[f64]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["member_id", "score"])?;
    for (id, s) in ids.iter().zip(scores) {
        w.write_record([id.as_str(), &s.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_scores(path: &Path) -> Result<Vec<(String, f64)>> {
    let mut rdr = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let s: f64 = rec[1]
            .parse()
            .with_context(|| format!("{}:{}: bad score", path.display(), i + 2))?;
        if !(0.0..=1.0).contains(&s) {
            bail!("{}:{}: score {s} outside [0, 1]", path.display(), i + 2);
        }
        out.push((rec[0].to_string(), s));
    }
    Ok(out)
}
