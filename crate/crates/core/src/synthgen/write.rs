use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{GenParams, Generator};
use crate::claims::{DatasetPaths, SdohSchema, CLAIMS_HEADER, ENROLLMENT_HEADER, MEMBERS_HEADER};
use crate::{Error, Result};

pub const MANIFEST_FILE: &str = "gen_manifest.txt";

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GenSummary {
    pub members: usize,
    pub claims: usize,
    pub enrollment_spans: usize,
    pub planted_hicc: usize,
    pub zips: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub params: GenParams,
    pub summary: GenSummary,
}

impl Manifest {
    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Ok(toml::from_str(&text)?)
    }
}

fn writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(BufWriter::with_capacity(1 << 20, f)))
}

fn opt(v: &Option<String>) -> &str {
    v.as_deref().unwrap_or("")
}

/// Writes the four input files plus a manifest into `dir`, streaming members
/// in chunks so memory stays bounded at any population size.
pub fn write_dataset(dir: &Path, params: &GenParams, schema: &SdohSchema) -> Result<GenSummary> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let g = Generator::new(params.clone(), schema)?;
    let paths = DatasetPaths::in_dir(dir);
    let mut claims = writer(&paths.claims)?;
    let mut enroll = writer(&paths.enrollment)?;
    let mut members = writer(&paths.members)?;
    claims.write_record(CLAIMS_HEADER)?;
    enroll.write_record(ENROLLMENT_HEADER)?;
    members.write_record(MEMBERS_HEADER)?;

    let mut summary = GenSummary {
        zips: g.zips.zips.len(),
        ..Default::default()
    };
    const CHUNK: usize = 16_384;
    let n = params.n_members;
    for start in (0..n).step_by(CHUNK) {
        for m in g.members(start..(start + CHUNK).min(n)) {
            let r = &m.record;
            summary.members += 1;
            summary.planted_hicc += usize::from(m.planted_hicc);
            members.write_record([
                r.member_id.as_str(),
                &r.birth_date.map(|d| d.to_string()).unwrap_or_default(),
                &r.gender.map(|g| g.to_string()).unwrap_or_default(),
                opt(&r.zip),
                opt(&r.industry),
            ])?;
            for s in &r.spans {
                enroll.write_record([
                    r.member_id.as_str(),
                    &s.start_date.to_string(),
                    &s.end_date.to_string(),
                    if s.has_medical { "1" } else { "0" },
                    if s.has_pharmacy { "1" } else { "0" },
                ])?;
                summary.enrollment_spans += 1;
            }
            for c in &r.claims {
                claims.write_record([
                    r.member_id.as_str(),
                    &c.service_date.to_string(),
                    c.claim_class.as_str(),
                    &format!("{:.2}", c.allowed_amount),
                    opt(&c.condition_code),
                    opt(&c.procedure_code),
                    opt(&c.drug_class),
                    &c.inpatient_days.map(|d| d.to_string()).unwrap_or_default(),
                ])?;
                summary.claims += 1;
            }
        }
    }
    for w in [&mut claims, &mut enroll, &mut members] {
        w.flush().map_err(|e| Error::io(dir, e))?;
    }

    let mut sdoh = writer(&paths.sdoh)?;
    let mut header = vec!["zip".to_string()];
    header.extend(schema.indicators.iter().cloned());
    sdoh.write_record(&header)?;
    for (zip, row) in g.zips.sdoh.iter() {
        let mut rec = vec![zip.to_string()];
        rec.extend(row.iter().map(|v| v.map(|x| format!("{x}")).unwrap_or_default()));
        sdoh.write_record(&rec)?;
    }
    sdoh.flush().map_err(|e| Error::io(&paths.sdoh, e))?;

    let manifest = Manifest {
        params: params.clone(),
        summary: summary.clone(),
    };
    let text = toml::to_string(&manifest).map_err(|e| Error::Invalid(format!("manifest: {e}")))?;
    let path = dir.join(MANIFEST_FILE);
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(summary)
}
