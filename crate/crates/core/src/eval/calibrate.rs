use super::check_lengths;
use crate::{Error, Result};

/// Weight of the raw score mixed into the isotonic step so that distinct raw
/// scores stay distinct after calibration.
const RANK_KEEP_WEIGHT: f64 = 1e-6;

/// Isotonic step function over the distinct training scores.
#[derive(Clone, Debug, PartialEq)]
pub struct Calibrator {
    /// Ascending distinct scores.
    pub breakpoints: Vec<f64>,
    /// Nondecreasing fitted probabilities, one per breakpoint.
    pub values: Vec<f64>,
}

/// Pool-adjacent-violators fit of label means against score.
pub fn fit_isotonic(scores: &[f64], labels: &[bool]) -> Result<Calibrator> {
    check_lengths(scores, labels)?;
    if scores.is_empty() {
        return Err(Error::Empty("calibration set"));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Invalid("scores contain NaN".into()));
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    let mut xs: Vec<f64> = Vec::new();
    // (label sum, weight) per distinct score
    let mut stats: Vec<(f64, f64)> = Vec::new();
    for i in idx {
        let y = f64::from(u8::from(labels[i]));
        if xs.last() == Some(&scores[i]) {
            let s = stats.last_mut().expect("parallel to xs");
            s.0 += y;
            s.1 += 1.0;
        } else {
            xs.push(scores[i]);
            stats.push((y, 1.0));
        }
    }

    // blocks: (sum, weight, first distinct index)
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(stats.len());
    for (k, &(s, w)) in stats.iter().enumerate() {
        blocks.push((s, w, k));
        while blocks.len() > 1 {
            let (s2, w2, _) = blocks[blocks.len() - 1];
            let (s1, w1, _) = blocks[blocks.len() - 2];
            if s1 / w1 <= s2 / w2 {
                break;
            }
            blocks.pop();
            let last = blocks.last_mut().expect("len > 1");
            last.0 += s2;
            last.1 += w2;
        }
    }
    let mut values = vec![0.0; xs.len()];
    for (b, &(s, w, start)) in blocks.iter().enumerate() {
        let end = blocks.get(b + 1).map_or(xs.len(), |n| n.2);
        values[start..end].fill(s / w);
    }
    Ok(Calibrator {
        breakpoints: xs,
        values,
    })
}

impl Calibrator {
    /// Fitted value of the last breakpoint at or below `score`; flat beyond
    /// either end.
    pub fn step(&self, score: f64) -> f64 {
        let i = self.breakpoints.partition_point(|&x| x <= score);
        self.values[i.saturating_sub(1)]
    }

    /// Calibrated probability. Strictly increasing in `score`, so the ranking
    /// of distinct scores is kept.
    pub fn apply(&self, score: f64) -> f64 {
        let s = score.clamp(0.0, 1.0);
        (1.0 - RANK_KEEP_WEIGHT) * self.step(score) + RANK_KEEP_WEIGHT * s
    }

    pub fn apply_all(&self, scores: &[f64]) -> Vec<f64> {
        scores.iter().map(|&s| self.apply(s)).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("score,calibrated\n");
        for (x, y) in self.breakpoints.iter().zip(&self.values) {
            out.push_str(&format!("{x},{y}\n"));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        let (mut breakpoints, mut values) = (Vec::new(), Vec::new());
        for rec in rdr.records() {
            let rec = rec?;
            let line = rec.position().map(|p| p.line()).unwrap_or(0);
            let num = |k: usize| {
                rec.get(k)
                    .and_then(|c| c.parse::<f64>().ok())
                    .ok_or_else(|| Error::parse("calibrator", line, "bad number"))
            };
            breakpoints.push(num(0)?);
            values.push(num(1)?);
        }
        if breakpoints.is_empty() {
            return Err(Error::Empty("calibrator"));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) || values.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Invalid(
                "calibrator must be increasing in score and nondecreasing in value".into(),
            ));
        }
        Ok(Calibrator { breakpoints, values })
    }
}

/// Mean squared difference between probability and outcome.
pub fn brier(probs: &[f64], labels: &[bool]) -> Result<f64> {
    check_lengths(probs, labels)?;
    if probs.is_empty() {
        return Err(Error::Empty("brier input"));
    }
    let s: f64 = probs
        .iter()
        .zip(labels)
        .map(|(&p, &y)| (p - f64::from(u8::from(y))).powi(2))
        .sum();
    Ok(s / probs.len() as f64)
}
