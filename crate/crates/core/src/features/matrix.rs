use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::catalog::{schema_version, FeatureCatalog};
use crate::{Error, Result};

/// Column-major feature matrix. Nulls are stored as NaN internally and
/// surfaced as `None` by the accessors.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    pub names: Vec<String>,
    pub schema_label: String,
    pub schema_version: String,
    pub member_ids: Vec<String>,
    columns: Vec<Vec<f64>>,
}

impl FeatureMatrix {
    pub fn from_rows(catalog: &FeatureCatalog, member_ids: Vec<String>, rows: &[Vec<Option<f64>>]) -> Self {
        let names = catalog.names();
        let mut columns = vec![Vec::with_capacity(rows.len()); names.len()];
        for row in rows {
            assert_eq!(row.len(), names.len(), "row width differs from catalog");
            for (col, v) in columns.iter_mut().zip(row) {
                col.push(v.unwrap_or(f64::NAN));
            }
        }
        FeatureMatrix {
            names,
            schema_label: catalog.schema_label.clone(),
            schema_version: catalog.schema_version().to_string(),
            member_ids,
            columns,
        }
    }

    /// Builds a matrix from raw columns where NaN marks null.
    pub fn from_columns(
        schema_label: &str,
        names: Vec<String>,
        member_ids: Vec<String>,
        columns: Vec<Vec<f64>>,
    ) -> Self {
        assert_eq!(names.len(), columns.len());
        assert!(columns.iter().all(|c| c.len() == member_ids.len()));
        FeatureMatrix {
            schema_version: schema_version(schema_label, &names),
            names,
            schema_label: schema_label.to_string(),
            member_ids,
            columns,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.member_ids.len()
    }

    pub fn n_features(&self) -> usize {
        self.names.len()
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn get(&self, row: usize, j: usize) -> Option<f64> {
        let v = self.columns[j][row];
        if v.is_nan() {
            None
        } else {
            Some(v)
        }
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Copies row `i` into `buf` (NaN = null).
    pub fn row_into(&self, i: usize, buf: &mut Vec<f64>) {
        buf.clear();
        buf.extend(self.columns.iter().map(|c| c[i]));
    }

    /// Rows at `idx`, in that order.
    pub fn take_rows(&self, idx: &[usize]) -> Self {
        FeatureMatrix {
            names: self.names.clone(),
            schema_label: self.schema_label.clone(),
            schema_version: self.schema_version.clone(),
            member_ids: idx.iter().map(|&i| self.member_ids[i].clone()).collect(),
            columns: self
                .columns
                .iter()
                .map(|c| idx.iter().map(|&i| c[i]).collect())
                .collect(),
        }
    }

    /// Reorders and restricts columns to `names`; the schema version is
    /// recomputed from the label and the new name list.
    pub fn project(&self, names: &[String]) -> Result<Self> {
        let columns = names
            .iter()
            .map(|n| {
                self.index_of(n)
                    .map(|j| self.columns[j].clone())
                    .ok_or_else(|| Error::Invalid(format!("feature {n} not in matrix")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_columns(
            &self.schema_label,
            names.to_vec(),
            self.member_ids.clone(),
            columns,
        ))
    }

    pub fn with_column(&self, name: &str, values: Vec<f64>) -> Self {
        let mut names = self.names.clone();
        names.push(name.to_string());
        let mut columns = self.columns.clone();
        columns.push(values);
        Self::from_columns(&self.schema_label, names, self.member_ids.clone(), columns)
    }

    pub fn set_column(&mut self, j: usize, values: Vec<f64>) {
        assert_eq!(values.len(), self.n_rows());
        self.columns[j] = values;
    }

    pub fn schema_path(path: &Path) -> PathBuf {
        let mut s = path.as_os_str().to_owned();
        s.push(".schema");
        PathBuf::from(s)
    }

    /// CSV with `member_id` then catalog columns (empty cell = null), plus a
    /// `<path>.schema` sidecar recording the schema label and version.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let f = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = csv::Writer::from_writer(BufWriter::new(f));
        let mut header = vec!["member_id".to_string()];
        header.extend(self.names.iter().cloned());
        w.write_record(&header)?;
        let mut rec: Vec<String> = Vec::with_capacity(header.len());
        for i in 0..self.n_rows() {
            rec.clear();
            rec.push(self.member_ids[i].clone());
            for c in &self.columns {
                let v = c[i];
                rec.push(if v.is_nan() { String::new() } else { format!("{v}") });
            }
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;

        let sidecar = Self::schema_path(path);
        let mut s = File::create(&sidecar).map_err(|e| Error::io(&sidecar, e))?;
        writeln!(
            s,
            "schema_label={}\nschema_version={}",
            self.schema_label, self.schema_version
        )
        .map_err(|e| Error::io(&sidecar, e))?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let sidecar = Self::schema_path(path);
        let meta = std::fs::read_to_string(&sidecar).map_err(|e| Error::io(&sidecar, e))?;
        let field = |key: &str| {
            meta.lines()
                .find_map(|l| l.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
                .map(str::to_string)
                .ok_or_else(|| Error::Invalid(format!("{}: missing {key}", sidecar.display())))
        };
        let label = field("schema_label")?;
        let version = field("schema_version")?;

        let source = path.display().to_string();
        let mut rdr = csv::Reader::from_path(path)?;
        let header = rdr.headers()?.clone();
        if header.get(0) != Some("member_id") {
            return Err(Error::parse(&source, 1, "first column must be member_id"));
        }
        let names: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        let mut ids = Vec::new();
        let mut columns = vec![Vec::new(); names.len()];
        for rec in rdr.records() {
            let rec = rec?;
            let line = rec.position().map(|p| p.line()).unwrap_or(0);
            ids.push(rec[0].to_string());
            for (col, cell) in columns.iter_mut().zip(rec.iter().skip(1)) {
                let v = if cell.is_empty() {
                    f64::NAN
                } else {
                    cell.parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| Error::parse(&source, line, format!("bad value {cell:?}")))?
                };
                col.push(v);
            }
        }
        let m = Self::from_columns(&label, names, ids, columns);
        if m.schema_version != version {
            return Err(Error::SchemaMismatch {
                expected: version,
                found: m.schema_version,
            });
        }
        Ok(m)
    }
}
