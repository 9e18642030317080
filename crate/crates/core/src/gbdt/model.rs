use std::fs;
use std::path::Path;

use rayon::prelude::*;

use super::binning::BinMapper;
use super::tree::{Grower, Tree};
use super::{log_loss, logit, sigmoid, Hyperparams, Imputer};
use crate::features::{FeatureMatrix, FeatureVector};
use crate::{Error, Result};

pub const MODEL_MAGIC: &[u8; 8] = b"HICCGBM1";
const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct BoostedModel {
    /// Log-odds of the training prevalence.
    pub base_score: f64,
    pub trees: Vec<Tree>,
    pub imputer: Imputer,
    pub feature_names: Vec<String>,
    pub schema_version: String,
    pub hyperparams: Hyperparams,
}

fn check_labels(labels: &[bool]) -> Result<f64> {
    if labels.is_empty() {
        return Err(Error::Empty("training matrix"));
    }
    let pos = labels.iter().filter(|&&y| y).count();
    let rate = pos as f64 / labels.len() as f64;
    if pos == 0 || pos == labels.len() {
        return Err(Error::SingleClass { base_rate: rate });
    }
    Ok(rate)
}

pub fn fit(matrix: &FeatureMatrix, labels: &[bool], hp: &Hyperparams) -> Result<BoostedModel> {
    fit_with_history(matrix, labels, hp).map(|(m, _)| m)
}

/// Trains and also returns the mean training log-loss before the first tree
/// and after each round.
pub fn fit_with_history(matrix: &FeatureMatrix, labels: &[bool], hp: &Hyperparams) -> Result<(BoostedModel, Vec<f64>)> {
    hp.validate()?;
    if matrix.n_rows() != labels.len() {
        return Err(Error::LengthMismatch {
            left: matrix.n_rows(),
            right: labels.len(),
        });
    }
    let rate = check_labels(labels)?;
    let n = labels.len();
    let imputer = Imputer::fit(matrix);
    let columns = imputer.apply_columns(matrix);
    let mapper = BinMapper::fit(&columns, hp.n_bins, hp.seed);
    let bins = mapper.transform(&columns);
    drop(columns);

    let base_score = logit(rate);
    let y: Vec<f64> = labels.iter().map(|&b| f64::from(u8::from(b))).collect();
    let mut raw = vec![base_score; n];
    let mut prob = vec![sigmoid(base_score); n];
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    let mut history = vec![log_loss(&prob, labels)];
    let grower = Grower {
        bins: &bins,
        mapper: &mapper,
        hp,
    };
    let mut trees = Vec::with_capacity(hp.n_trees);
    for round in 0..hp.n_trees {
        for i in 0..n {
            grad[i] = prob[i] - y[i];
            hess[i] = prob[i] * (1.0 - prob[i]);
        }
        let grown = grower.grow(&grad, &hess);
        for i in 0..n {
            raw[i] += grown.tree.leaf_value[grown.row_leaf[i] as usize];
            prob[i] = sigmoid(raw[i]);
        }
        history.push(log_loss(&prob, labels));
        log::debug!(
            "round {round}: leaves={} loss={:.6}",
            grown.tree.n_leaves(),
            history[round + 1]
        );
        trees.push(grown.tree);
    }
    let model = BoostedModel {
        base_score,
        trees,
        imputer,
        feature_names: matrix.names.clone(),
        schema_version: matrix.schema_version.clone(),
        hyperparams: hp.clone(),
    };
    Ok((model, history))
}

impl BoostedModel {
    /// Model without trees that predicts `base_rate` for every input.
    pub fn base_rate_only(base_rate: f64, feature_names: Vec<String>, schema_version: String) -> Self {
        BoostedModel {
            base_score: logit(base_rate),
            trees: Vec::new(),
            imputer: Imputer {
                medians: vec![0.0; feature_names.len()],
            },
            feature_names,
            schema_version,
            hyperparams: Hyperparams::default(),
        }
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// Log-odds for an already imputed row.
    #[inline]
    pub fn raw_imputed(&self, row: &[f64]) -> f64 {
        let mut s = self.base_score;
        for t in &self.trees {
            s += t.value(row);
        }
        s
    }

    /// Probability for a row in model feature order; NaN cells are imputed.
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut buf = row.to_vec();
        self.imputer.apply_row(&mut buf);
        sigmoid(self.raw_imputed(&buf))
    }

    pub fn predict(&self, v: &FeatureVector) -> Result<f64> {
        if *v.schema_version != *self.schema_version {
            return Err(Error::SchemaMismatch {
                expected: self.schema_version.clone(),
                found: v.schema_version.to_string(),
            });
        }
        let row: Vec<f64> = v.values.iter().map(|x| x.unwrap_or(f64::NAN)).collect();
        Ok(self.predict_row(&row))
    }

    /// Restricts a wider matrix to the model's columns, then checks the schema.
    pub fn align(&self, matrix: &FeatureMatrix) -> Result<FeatureMatrix> {
        let m = if matrix.names == self.feature_names {
            matrix.clone()
        } else {
            matrix.project(&self.feature_names).map_err(|_| Error::SchemaMismatch {
                expected: self.schema_version.clone(),
                found: matrix.schema_version.clone(),
            })?
        };
        if m.schema_version != self.schema_version {
            return Err(Error::SchemaMismatch {
                expected: self.schema_version.clone(),
                found: m.schema_version,
            });
        }
        Ok(m)
    }

    /// Log-odds for every row of a matrix that matches the model schema.
    pub fn raw_scores(&self, matrix: &FeatureMatrix) -> Result<Vec<f64>> {
        if matrix.schema_version != self.schema_version || matrix.names != self.feature_names {
            return Err(Error::SchemaMismatch {
                expected: self.schema_version.clone(),
                found: matrix.schema_version.clone(),
            });
        }
        const CHUNK: usize = 4096;
        let n = matrix.n_rows();
        let mut out = vec![0.0; n];
        out.par_chunks_mut(CHUNK).enumerate().for_each(|(c, dst)| {
            let mut row = Vec::with_capacity(self.n_features());
            for (k, d) in dst.iter_mut().enumerate() {
                matrix.row_into(c * CHUNK + k, &mut row);
                self.imputer.apply_row(&mut row);
                *d = self.raw_imputed(&row);
            }
        });
        Ok(out)
    }

    pub fn predict_matrix(&self, matrix: &FeatureMatrix) -> Result<Vec<f64>> {
        let mut s = self.raw_scores(matrix)?;
        s.iter_mut().for_each(|x| *x = sigmoid(*x));
        Ok(s)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = ByteWriter::default();
        w.0.extend_from_slice(MODEL_MAGIC);
        w.u32(FORMAT_VERSION);
        w.str(&self.schema_version);
        let hp = &self.hyperparams;
        w.u64(hp.n_trees as u64);
        w.u64(hp.max_leaves as u64);
        w.f64(hp.learning_rate);
        w.f64(hp.l2_reg);
        w.u64(hp.min_samples_leaf as u64);
        w.f64(hp.min_hessian);
        w.u64(hp.n_bins as u64);
        w.u64(hp.seed);
        w.u32(self.feature_names.len() as u32);
        for n in &self.feature_names {
            w.str(n);
        }
        for &m in &self.imputer.medians {
            w.f64(m);
        }
        w.f64(self.base_score);
        w.u32(self.trees.len() as u32);
        for t in &self.trees {
            w.u32(t.n_splits() as u32);
            t.split_feature.iter().for_each(|&x| w.u32(x));
            t.threshold.iter().for_each(|&x| w.f64(x));
            t.left.iter().for_each(|&x| w.i32(x));
            t.right.iter().for_each(|&x| w.i32(x));
            t.gain.iter().for_each(|&x| w.f64(x));
            w.u32(t.n_leaves() as u32);
            t.leaf_value.iter().for_each(|&x| w.f64(x));
            t.leaf_count.iter().for_each(|&x| w.u32(x));
        }
        w.0
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader { buf: bytes, pos: 0 };
        if r.take(8)? != MODEL_MAGIC {
            return Err(Error::ModelFormat("bad magic".into()));
        }
        let ver = r.u32()?;
        if ver != FORMAT_VERSION {
            return Err(Error::ModelFormat(format!("unsupported format version {ver}")));
        }
        let schema_version = r.str()?;
        let hyperparams = Hyperparams {
            n_trees: r.u64()? as usize,
            max_leaves: r.u64()? as usize,
            learning_rate: r.f64()?,
            l2_reg: r.f64()?,
            min_samples_leaf: r.u64()? as usize,
            min_hessian: r.f64()?,
            n_bins: r.u64()? as usize,
            seed: r.u64()?,
        };
        let nf = r.u32()? as usize;
        let feature_names = (0..nf).map(|_| r.str()).collect::<Result<Vec<_>>>()?;
        let medians = (0..nf).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        let base_score = r.f64()?;
        let nt = r.u32()? as usize;
        let mut trees = Vec::with_capacity(nt);
        for _ in 0..nt {
            let ns = r.u32()? as usize;
            let split_feature = (0..ns).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
            let threshold = (0..ns).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
            let left = (0..ns).map(|_| r.i32()).collect::<Result<Vec<_>>>()?;
            let right = (0..ns).map(|_| r.i32()).collect::<Result<Vec<_>>>()?;
            let gain = (0..ns).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
            let nl = r.u32()? as usize;
            let leaf_value = (0..nl).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
            let leaf_count = (0..nl).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
            let tree = Tree {
                split_feature,
                threshold,
                left,
                right,
                gain,
                leaf_value,
                leaf_count,
            };
            check_tree(&tree, nf)?;
            trees.push(tree);
        }
        if r.pos != bytes.len() {
            return Err(Error::ModelFormat("trailing bytes".into()));
        }
        Ok(BoostedModel {
            base_score,
            trees,
            imputer: Imputer { medians },
            feature_names,
            schema_version,
            hyperparams,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

fn check_tree(t: &Tree, n_features: usize) -> Result<()> {
    let bad = |m: &str| Err(Error::ModelFormat(m.into()));
    if t.n_leaves() != t.n_splits() + 1 {
        return bad("leaf count must be split count + 1");
    }
    if t.split_feature.iter().any(|&f| f as usize >= n_features) {
        return bad("split feature out of range");
    }
    for &c in t.left.iter().chain(&t.right) {
        let ok = if c < 0 {
            (!c as usize) < t.n_leaves()
        } else {
            c > 0 && (c as usize) < t.n_splits()
        };
        if !ok {
            return bad("child link out of range");
        }
    }
    Ok(())
}

#[derive(Default)]
struct ByteWriter(Vec<u8>);

impl ByteWriter {
    fn u32(&mut self, x: u32) {
        self.0.extend_from_slice(&x.to_le_bytes());
    }
    fn i32(&mut self, x: i32) {
        self.0.extend_from_slice(&x.to_le_bytes());
    }
    fn u64(&mut self, x: u64) {
        self.0.extend_from_slice(&x.to_le_bytes());
    }
    fn f64(&mut self, x: f64) {
        self.0.extend_from_slice(&x.to_le_bytes());
    }
    fn str(&mut self, s: &str) {
        self.u32(s.len() as u32);
        self.0.extend_from_slice(s.as_bytes());
    }
}

struct ByteReader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| Error::ModelFormat("truncated model file".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn arr<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }
    fn u32(&mut self) -> Result<u32> {
        self.arr().map(u32::from_le_bytes)
    }
    fn i32(&mut self) -> Result<i32> {
        self.arr().map(i32::from_le_bytes)
    }
    fn u64(&mut self) -> Result<u64> {
        self.arr().map(u64::from_le_bytes)
    }
    fn f64(&mut self) -> Result<f64> {
        self.arr().map(f64::from_le_bytes)
    }
    fn str(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| Error::ModelFormat("invalid utf-8".into()))
    }
}
