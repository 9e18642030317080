use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use hicc_core::claims::{Date, PeriodPair};
use hicc_core::economics::ScenarioParams;
use hicc_core::eval::{DEFAULT_EMERGENT_THRESHOLD, DEFAULT_RECURRENT_THRESHOLD, TABLE_THRESHOLDS};
use hicc_core::gbdt::{Hyperparams, DEFAULT_FRACTIONS};
use hicc_core::synthgen::GenParams;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Root of every random stream; required by generate and train.
    pub seed: Option<u64>,
    pub paths: Paths,
    pub periods: Periods,
    pub generate: GenParams,
    pub features: FeatureFiles,
    pub model: Hyperparams,
    pub train: TrainConfig,
    pub score: ScoreConfig,
    pub evaluate: EvalConfig,
    pub economics: EconConfig,
    pub audit: AuditConfig,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// Input claims files; `generate` writes here.
    pub data_dir: PathBuf,
    /// Every derived artifact and report.
    pub out_dir: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            data_dir: "data".into(),
            out_dir: "out".into(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Periods {
    pub report_start: Date,
    pub report_end: Date,
}

impl Default for Periods {
    fn default() -> Self {
        let p = PeriodPair::study_default();
        Periods {
            report_start: p.report_start,
            report_end: p.report_end,
        }
    }
}

/// Optional replacements for the bundled reference tables.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureFiles {
    pub catalog: Option<PathBuf>,
    pub sdoh_schema: Option<PathBuf>,
    pub life_table: Option<PathBuf>,
    pub condition_weights: Option<PathBuf>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Train, calibration and holdout shares.
    pub split: [f64; 3],
    /// Keep every positive and subsample negatives to this many training rows.
    pub downsample_target: Option<usize>,
    /// Keep only the k most important features before the final fit.
    pub prune_keep: Option<usize>,
    pub prune_repeats: usize,
    /// Two or more entries run staged selection instead of fitting `[model]`.
    pub candidates: Vec<Hyperparams>,
    pub fractions: Vec<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            split: [0.6, 0.2, 0.2],
            downsample_target: None,
            prune_keep: None,
            prune_repeats: 3,
            candidates: Vec::new(),
            fractions: DEFAULT_FRACTIONS.to_vec(),
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoreConfig {
    /// Apply the isotonic calibrator to written scores.
    pub calibrated: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub thresholds: Vec<f64>,
    pub emergent_threshold: f64,
    pub recurrent_threshold: f64,
    pub precision_k: Vec<usize>,
    /// Restrict evaluation to the holdout split when one exists.
    pub holdout_only: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            thresholds: TABLE_THRESHOLDS.to_vec(),
            emergent_threshold: DEFAULT_EMERGENT_THRESHOLD,
            recurrent_threshold: DEFAULT_RECURRENT_THRESHOLD,
            precision_k: vec![300, 500, 1000],
            holdout_only: true,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EconConfig {
    pub rule_based_precision: f64,
    pub capacities: Vec<usize>,
    pub scenario: ScenarioParams,
}

impl Default for EconConfig {
    fn default() -> Self {
        EconConfig {
            rule_based_precision: 0.02,
            capacities: vec![300, 500, 1000],
            scenario: ScenarioParams::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuditConfig {
    pub weighted: bool,
    pub null_rounds: usize,
}

impl Default for AuditConfig {
    fn default() -> Self {
        AuditConfig {
            weighted: false,
            null_rounds: 20,
        }
    }
}

/// Parses `value` as a TOML literal, falling back to a bare string.
fn literal(value: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {value}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.to_string()))
}

fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, value) = assignment
        .split_once('=')
        .ok_or_else(|| anyhow!("override {assignment:?} is not key=value"))?;
    let parts: Vec<&str> = key.trim().split('.').collect();
    let (last, sections) = parts.split_last().expect("split yields at least one part");
    let mut t = table;
    for s in sections {
        t = t
            .entry(s.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| anyhow!("config key {s:?} is not a section"))?;
    }
    t.insert(last.to_string(), literal(value.trim()));
    Ok(())
}

impl PipelineConfig {
    /// Reads the config file (if any), applies `section.key=value` overrides
    /// and resolves relative paths against the config file's directory.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
                toml::from_str::<toml::Table>(&text).with_context(|| format!("parsing config {}", p.display()))?
            }
            None => toml::Table::new(),
        };
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let mut cfg: PipelineConfig = table.try_into().context("invalid config")?;
        let base = path.and_then(Path::parent).unwrap_or(Path::new(""));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut cfg.paths.data_dir);
        resolve(&mut cfg.paths.out_dir);
        for p in [
            &mut cfg.features.catalog,
            &mut cfg.features.sdoh_schema,
            &mut cfg.features.life_table,
            &mut cfg.features.condition_weights,
        ]
        .into_iter()
        .flatten()
        {
            resolve(p);
        }
        Ok(cfg)
    }

    pub fn seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| anyhow!("missing config key `seed`"))
    }

    pub fn periods(&self) -> Result<PeriodPair> {
        Ok(PeriodPair::new(self.periods.report_start, self.periods.report_end)?)
    }

    pub fn validate(&self) -> Result<()> {
        let s = self.train.split;
        if s.iter().any(|v| !(*v >= 0.0)) || (s.iter().sum::<f64>() - 1.0).abs() > 1e-9 || s[0] == 0.0 {
            bail!("train.split must be three nonnegative shares summing to 1 with a nonzero training share");
        }
        Ok(())
    }
}

/// Independent seed for one named consumer of randomness.
pub fn substream(seed: u64, name: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(name.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}
