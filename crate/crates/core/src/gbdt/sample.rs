use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Keeps every positive and a uniform sample of negatives so that
/// `target_n` rows remain. Returns ascending row indices.
pub fn downsample(labels: &[bool], target_n: usize, seed: u64) -> Result<Vec<usize>> {
    let (pos, neg): (Vec<usize>, Vec<usize>) = (0..labels.len()).partition(|&i| labels[i]);
    if target_n < pos.len() {
        return Err(Error::Invalid(format!(
            "downsample target {target_n} is below the positive count {}",
            pos.len()
        )));
    }
    let want = (target_n - pos.len()).min(neg.len());
    if target_n > labels.len() {
        log::warn!(
            "downsample target {target_n} exceeds {} rows; keeping all",
            labels.len()
        );
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = pos;
    out.extend(index::sample(&mut rng, neg.len(), want).into_iter().map(|k| neg[k]));
    out.sort_unstable();
    Ok(out)
}
