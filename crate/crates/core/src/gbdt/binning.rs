//! Quantile histogram binning.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Rows used to estimate bin boundaries when the matrix is larger.
const BINNING_SAMPLE: usize = 200_000;

/// Per-feature ascending split thresholds. A value `x` falls in the first bin
/// `i` with `x <= thresholds[i]`, or in the last bin if it exceeds them all,
/// so values equal to a boundary land in the lower bin.
#[derive(Clone, Debug, PartialEq)]
pub struct BinMapper {
    pub thresholds: Vec<Vec<f64>>,
}

fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    if m >= b {
        a
    } else {
        m
    }
}

fn feature_thresholds(values: &mut Vec<f64>, n_bins: usize) -> Vec<f64> {
    values.retain(|v| !v.is_nan());
    values.sort_by(f64::total_cmp);
    let mut distinct: Vec<(f64, usize)> = Vec::new();
    for &v in values.iter() {
        match distinct.last_mut() {
            Some((d, c)) if *d == v => *c += 1,
            _ => distinct.push((v, 1)),
        }
    }
    if distinct.len() <= 1 {
        return Vec::new();
    }
    if distinct.len() <= n_bins {
        return distinct.windows(2).map(|w| midpoint(w[0].0, w[1].0)).collect();
    }
    let n = values.len();
    let mut out: Vec<f64> = Vec::with_capacity(n_bins - 1);
    let mut cum = 0usize;
    let mut k = 1usize;
    for (i, &(v, c)) in distinct.iter().enumerate().take(distinct.len() - 1) {
        cum += c;
        // cut after this value once the cumulative count reaches the next quantile rank
        if cum * n_bins >= k * n {
            let t = midpoint(v, distinct[i + 1].0);
            if out.last() != Some(&t) {
                out.push(t);
            }
            while k * n <= cum * n_bins {
                k += 1;
            }
            if out.len() == n_bins - 1 {
                break;
            }
        }
    }
    out
}

impl BinMapper {
    pub fn fit(columns: &[Vec<f64>], n_bins: usize, seed: u64) -> Self {
        assert!((2..=256).contains(&n_bins), "n_bins must be in 2..=256");
        let n = columns.first().map_or(0, Vec::len);
        let sample: Option<Vec<usize>> = (n > BINNING_SAMPLE).then(|| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut idx = index::sample(&mut rng, n, BINNING_SAMPLE).into_vec();
            idx.sort_unstable();
            idx
        });
        let thresholds = columns
            .iter()
            .map(|col| {
                let mut vals = match &sample {
                    Some(idx) => idx.iter().map(|&i| col[i]).collect(),
                    None => col.clone(),
                };
                feature_thresholds(&mut vals, n_bins)
            })
            .collect();
        BinMapper { thresholds }
    }

    pub fn n_bins(&self, feature: usize) -> usize {
        self.thresholds[feature].len() + 1
    }

    #[inline]
    pub fn bin(&self, feature: usize, x: f64) -> u8 {
        self.thresholds[feature].partition_point(|&t| t < x) as u8
    }

    pub fn threshold(&self, feature: usize, bin: usize) -> f64 {
        self.thresholds[feature][bin]
    }

    /// Column-major bin codes.
    pub fn transform(&self, columns: &[Vec<f64>]) -> Vec<Vec<u8>> {
        columns
            .iter()
            .enumerate()
            .map(|(f, col)| col.iter().map(|&x| self.bin(f, x)).collect())
            .collect()
    }
}
