use super::sigmoid;
use crate::{Error, Result};

/// One-feature logistic regression on `ln(1 + max(x, 0))`, used as the
/// prior-year-cost reference model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogisticBaseline {
    pub intercept: f64,
    pub slope: f64,
}

fn transform(x: f64) -> f64 {
    if x.is_nan() {
        0.0
    } else {
        x.max(0.0).ln_1p()
    }
}

impl LogisticBaseline {
    /// Newton-Raphson on the log-likelihood; NaN inputs count as 0.
    pub fn fit(x: &[f64], labels: &[bool]) -> Result<Self> {
        if x.len() != labels.len() {
            return Err(Error::LengthMismatch {
                left: x.len(),
                right: labels.len(),
            });
        }
        let pos = labels.iter().filter(|&&y| y).count();
        if pos == 0 || pos == labels.len() {
            return Err(Error::SingleClass {
                base_rate: pos as f64 / labels.len().max(1) as f64,
            });
        }
        let t: Vec<f64> = x.iter().map(|&v| transform(v)).collect();
        let rate = pos as f64 / labels.len() as f64;
        let (mut a, mut b) = ((rate / (1.0 - rate)).ln(), 0.0);
        for _ in 0..100 {
            let (mut ga, mut gb, mut haa, mut hab, mut hbb) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for (&ti, &yi) in t.iter().zip(labels) {
                let p = sigmoid(a + b * ti);
                let r = f64::from(u8::from(yi)) - p;
                let w = p * (1.0 - p);
                ga += r;
                gb += r * ti;
                haa += w;
                hab += w * ti;
                hbb += w * ti * ti;
            }
            let det = haa * hbb - hab * hab;
            if det.abs() < 1e-300 {
                break;
            }
            let da = (hbb * ga - hab * gb) / det;
            let db = (haa * gb - hab * ga) / det;
            a += da;
            b += db;
            if da.abs().max(db.abs()) < 1e-10 {
                break;
            }
        }
        Ok(LogisticBaseline { intercept: a, slope: b })
    }

    pub fn predict(&self, x: f64) -> f64 {
        sigmoid(self.intercept + self.slope * transform(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_monotone_relation() {
        let x: Vec<f64> = (0..1000).map(|i| (i * 97 % 1000) as f64 * 100.0).collect();
        let y: Vec<bool> = x
            .iter()
            .enumerate()
            .map(|(i, &v)| v > 60_000.0 || i % 13 == 0)
            .collect();
        let m = LogisticBaseline::fit(&x, &y).unwrap();
        assert!(m.slope > 0.0);
        assert!(m.predict(90_000.0) > m.predict(1_000.0));
    }

    #[test]
    fn gradient_vanishes_at_optimum() {
        let x = [0.0, 10.0, 100.0, 1000.0, 5.0, 50.0, 500.0, 5000.0];
        let y = [false, false, true, true, false, true, false, true];
        let m = LogisticBaseline::fit(&x, &y).unwrap();
        let resid: f64 = x
            .iter()
            .zip(&y)
            .map(|(&v, &l)| f64::from(u8::from(l)) - m.predict(v))
            .sum();
        assert!(resid.abs() < 1e-9);
    }
}
