//! CSV ingestion of the claims, enrollment, member and SDOH files.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::{ClaimLine, Date, EnrollmentSpan, MemberRecord, SdohSchema, SdohTable};
use crate::{Error, Result};

pub const CLAIMS_HEADER: [&str; 8] = [
    "member_id",
    "service_date",
    "claim_class",
    "allowed_amount",
    "condition_code",
    "procedure_code",
    "drug_class",
    "inpatient_days",
];
pub const ENROLLMENT_HEADER: [&str; 5] = ["member_id", "start_date", "end_date", "has_medical", "has_pharmacy"];
pub const MEMBERS_HEADER: [&str; 5] = ["member_id", "birth_date", "gender", "zip", "industry"];

#[derive(Clone, Debug)]
pub struct DatasetPaths {
    pub claims: PathBuf,
    pub enrollment: PathBuf,
    pub members: PathBuf,
    pub sdoh: PathBuf,
}

impl DatasetPaths {
    /// The conventional file names inside one directory.
    pub fn in_dir(dir: &Path) -> Self {
        DatasetPaths {
            claims: dir.join("claims.csv"),
            enrollment: dir.join("enrollment.csv"),
            members: dir.join("members.csv"),
            sdoh: dir.join("sdoh.csv"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct IngestReport {
    pub claim_rows: usize,
    pub enrollment_rows: usize,
    pub member_rows: usize,
    pub sdoh_rows: usize,
    pub members: usize,
    pub total_allowed: f64,
}

/// All member records keyed (and iterated) by member id.
#[derive(Clone, Debug, Default)]
pub struct MemberStore {
    members: BTreeMap<String, MemberRecord>,
}

impl MemberStore {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn get(&self, member_id: &str) -> Option<&MemberRecord> {
        self.members.get(member_id)
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &MemberRecord> {
        self.members.values()
    }

    pub fn insert(&mut self, member: MemberRecord) {
        self.members.insert(member.member_id.clone(), member);
    }

    fn entry(&mut self, member_id: &str) -> &mut MemberRecord {
        if !self.members.contains_key(member_id) {
            self.members.insert(member_id.to_string(), MemberRecord::new(member_id));
        }
        self.members.get_mut(member_id).unwrap()
    }

    /// Sort claims and validate enrollment spans for every member.
    pub fn finish(&mut self) -> Result<()> {
        for m in self.members.values_mut() {
            m.sort_claims();
            m.validate_spans()?;
        }
        Ok(())
    }
}

impl FromIterator<MemberRecord> for MemberStore {
    fn from_iter<I: IntoIterator<Item = MemberRecord>>(iter: I) -> Self {
        let mut store = MemberStore::default();
        for m in iter {
            store.insert(m);
        }
        store
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

pub fn ingest_dataset(paths: &DatasetPaths, schema: &SdohSchema) -> Result<(MemberStore, SdohTable, IngestReport)> {
    let mut store = MemberStore::default();
    let mut report = IngestReport::default();
    let name = |p: &Path| p.display().to_string();

    report.member_rows = read_members(open(&paths.members)?, &name(&paths.members), &mut store)?;
    let (rows, total) = read_claims(open(&paths.claims)?, &name(&paths.claims), &mut store)?;
    report.claim_rows = rows;
    report.total_allowed = total;
    report.enrollment_rows = read_enrollment(open(&paths.enrollment)?, &name(&paths.enrollment), &mut store)?;
    store.finish()?;
    let sdoh = read_sdoh(open(&paths.sdoh)?, &name(&paths.sdoh), schema.clone())?;
    report.sdoh_rows = sdoh.len();
    report.members = store.len();
    log::info!(
        "ingested {} members: {} claim rows, {} enrollment rows, {} member rows, {} zips",
        report.members,
        report.claim_rows,
        report.enrollment_rows,
        report.member_rows,
        report.sdoh_rows
    );
    Ok((store, sdoh, report))
}

struct Rows<R: Read> {
    reader: csv::Reader<R>,
    source: String,
}

impl<R: Read> Rows<R> {
    fn new(rdr: R, source: &str, expected: &[&str]) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(rdr);
        let header = reader.headers()?.clone();
        if !header.iter().eq(expected.iter().copied()) {
            return Err(Error::parse(
                source,
                1,
                format!(
                    "expected header {:?}, found {:?}",
                    expected.join(","),
                    header.iter().collect::<Vec<_>>().join(",")
                ),
            ));
        }
        Ok(Rows {
            reader,
            source: source.to_string(),
        })
    }

    fn for_each(mut self, mut f: impl FnMut(&csv::StringRecord) -> Result<(), String>) -> Result<usize> {
        let mut n = 0;
        let mut rec = csv::StringRecord::new();
        loop {
            let more = self.reader.read_record(&mut rec).map_err(|e| {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                Error::parse(&self.source, line, e.to_string())
            })?;
            if !more {
                break;
            }
            let line = rec.position().map(|p| p.line()).unwrap_or(0);
            f(&rec).map_err(|msg| Error::parse(&self.source, line, msg))?;
            n += 1;
        }
        Ok(n)
    }
}

fn opt(s: &str) -> Option<&str> {
    if s.is_empty() {
        None
    } else {
        Some(s)
    }
}

fn date(s: &str, field: &str) -> Result<Date, String> {
    Date::parse_from_str(s, "%Y-%m-%d").map_err(|e| format!("{field}: bad date {s:?} ({e})"))
}

fn number<T: FromStr>(s: &str, field: &str) -> Result<T, String> {
    s.parse().map_err(|_| format!("{field}: bad number {s:?}"))
}

fn flag(s: &str, field: &str) -> Result<bool, String> {
    match s {
        "0" => Ok(false),
        "1" => Ok(true),
        _ => Err(format!("{field}: expected 0 or 1, got {s:?}")),
    }
}

fn member_id(s: &str) -> Result<&str, String> {
    if s.is_empty() {
        Err("member_id is empty".into())
    } else {
        Ok(s)
    }
}

/// Returns the row count and the line-order sum of allowed amounts.
pub fn read_claims<R: Read>(rdr: R, source: &str, store: &mut MemberStore) -> Result<(usize, f64)> {
    let mut total = 0.0;
    let n = Rows::new(rdr, source, &CLAIMS_HEADER)?.for_each(|r| {
        let id = member_id(&r[0])?;
        let claim = ClaimLine {
            service_date: date(&r[1], "service_date")?,
            claim_class: r[2].parse()?,
            allowed_amount: number(&r[3], "allowed_amount")?,
            condition_code: opt(&r[4]).map(str::to_string),
            procedure_code: opt(&r[5]).map(str::to_string),
            drug_class: opt(&r[6]).map(str::to_string),
            inpatient_days: opt(&r[7]).map(|s| number(s, "inpatient_days")).transpose()?,
        };
        claim.validate()?;
        total += claim.allowed_amount;
        store.entry(id).claims.push(claim);
        Ok(())
    })?;
    Ok((n, total))
}

pub fn read_enrollment<R: Read>(rdr: R, source: &str, store: &mut MemberStore) -> Result<usize> {
    Rows::new(rdr, source, &ENROLLMENT_HEADER)?.for_each(|r| {
        let id = member_id(&r[0])?;
        let span = EnrollmentSpan {
            start_date: date(&r[1], "start_date")?,
            end_date: date(&r[2], "end_date")?,
            has_medical: flag(&r[3], "has_medical")?,
            has_pharmacy: flag(&r[4], "has_pharmacy")?,
        };
        if span.start_date > span.end_date {
            return Err(format!(
                "start_date {} after end_date {}",
                span.start_date, span.end_date
            ));
        }
        store.entry(id).spans.push(span);
        Ok(())
    })
}

pub fn read_members<R: Read>(rdr: R, source: &str, store: &mut MemberStore) -> Result<usize> {
    Rows::new(rdr, source, &MEMBERS_HEADER)?.for_each(|r| {
        let id = member_id(&r[0])?;
        if store.get(id).is_some() {
            return Err(format!("duplicate member {id}"));
        }
        let m = store.entry(id);
        m.birth_date = opt(&r[1]).map(|s| date(s, "birth_date")).transpose()?;
        m.gender = opt(&r[2]).map(str::parse).transpose()?;
        m.zip = opt(&r[3]).map(str::to_string);
        m.industry = opt(&r[4]).map(str::to_string);
        Ok(())
    })
}

pub fn read_sdoh<R: Read>(rdr: R, source: &str, schema: SdohSchema) -> Result<SdohTable> {
    let mut header = vec!["zip"];
    header.extend(schema.indicators.iter().map(String::as_str));
    let header: Vec<String> = header.into_iter().map(str::to_string).collect();
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut table = SdohTable::new(schema.clone())?;
    Rows::new(rdr, source, &header_refs)?.for_each(|r| {
        let zip = &r[0];
        if zip.len() != 5 {
            return Err(format!("zip {zip:?} is not 5 characters"));
        }
        let values = r
            .iter()
            .skip(1)
            .zip(&schema.indicators)
            .map(|(v, name)| opt(v).map(|v| number::<f64>(v, name)).transpose())
            .collect::<Result<Vec<_>, _>>()?;
        table.insert(zip.to_string(), values)
    })?;
    Ok(table)
}
