//! Lognormal truncated from below, parameterized by its conditional mean.

use rand::Rng;
use rand_distr::{Distribution, Exp, StandardNormal};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruncatedLogNormal {
    pub mu: f64,
    pub sigma: f64,
    pub floor: f64,
}

/// E[exp(mu + sigma z) | z > a] / exp(mu), by Simpson's rule on the normal tail.
fn tail_ratio(a: f64, sigma: f64) -> f64 {
    const STEPS: usize = 4000;
    let hi = a.max(0.0) + sigma + 12.0;
    let h = (hi - a) / STEPS as f64;
    let (mut num, mut den) = (0.0, 0.0);
    for k in 0..=STEPS {
        let z = a + k as f64 * h;
        let w = if k == 0 || k == STEPS {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        // density relative to its value at z = a, to stay finite deep in the tail
        let d = (-(z * z - a * a) / 2.0).exp();
        num += w * d * (sigma * (z - a)).exp();
        den += w * d;
    }
    (sigma * a).exp() * num / den
}

impl TruncatedLogNormal {
    /// Conditional mean of the distribution truncated at `floor`.
    pub fn mean_for(mu: f64, sigma: f64, floor: f64) -> f64 {
        let a = (floor.ln() - mu) / sigma;
        mu.exp() * tail_ratio(a, sigma)
    }

    /// Solves for the location that gives conditional mean `mean`.
    pub fn with_mean(mean: f64, sigma: f64, floor: f64) -> Result<Self> {
        if !(floor > 0.0 && sigma > 0.0) {
            return Err(Error::Invalid("tail floor and sigma must be positive".into()));
        }
        if !(mean > floor) {
            return Err(Error::Invalid(format!(
                "mean high-cost amount {mean} must exceed the threshold {floor}"
            )));
        }
        let (mut lo, mut hi) = (floor.ln() - 30.0 * sigma, mean.ln() + sigma);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if Self::mean_for(mid, sigma, floor) < mean {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(TruncatedLogNormal {
            mu: 0.5 * (lo + hi),
            sigma,
            floor,
        })
    }

    pub fn mean(&self) -> f64 {
        Self::mean_for(self.mu, self.sigma, self.floor)
    }

    /// Standard normal conditioned on exceeding `a`.
    fn tail_normal<R: Rng + ?Sized>(a: f64, rng: &mut R) -> f64 {
        if a < 0.5 {
            loop {
                let z: f64 = rng.sample(StandardNormal);
                if z > a {
                    return z;
                }
            }
        }
        let lambda = 0.5 * (a + (a * a + 4.0).sqrt());
        let exp = Exp::new(lambda).expect("positive rate");
        loop {
            let z = a + exp.sample(rng);
            if rng.random::<f64>() <= (-(z - lambda).powi(2) / 2.0).exp() {
                return z;
            }
        }
    }
}

impl Distribution<f64> for TruncatedLogNormal {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let a = (self.floor.ln() - self.mu) / self.sigma;
        (self.mu + self.sigma * Self::tail_normal(a, rng)).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn untruncated_limit_matches_lognormal_mean() {
        // floor far below the bulk: conditional mean tends to exp(mu + sigma^2 / 2)
        let m = TruncatedLogNormal::mean_for(10.0, 0.8, 1.0);
        assert!((m / (10.32f64).exp() - 1.0).abs() < 1e-9, "{m}");
    }

    #[test]
    fn solved_location_hits_target_and_samples_agree() {
        let t = TruncatedLogNormal::with_mean(413_975.0, 1.0, 250_000.0).unwrap();
        assert!((t.mean() - 413_975.0).abs() < 1e-6 * 413_975.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| t.sample(&mut rng)).collect();
        assert!(xs.iter().all(|&x| x > 250_000.0));
        let mean = xs.iter().sum::<f64>() / n as f64;
        assert!((mean / 413_975.0 - 1.0).abs() < 0.02, "{mean}");
    }

    #[test]
    fn mean_at_or_below_floor_is_rejected() {
        assert!(TruncatedLogNormal::with_mean(250_000.0, 1.0, 250_000.0).is_err());
    }
}
