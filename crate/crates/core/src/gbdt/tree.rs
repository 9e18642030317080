//! Regression trees and the leaf-wise histogram grower.

use rayon::prelude::*;

use super::binning::BinMapper;
use super::Hyperparams;

/// Flattened binary tree. Child links are node indices when nonnegative and
/// `!leaf_index` when negative. A tree without split nodes is a single leaf.
#[derive(Clone, Debug, PartialEq)]
pub struct Tree {
    pub split_feature: Vec<u32>,
    pub threshold: Vec<f64>,
    pub left: Vec<i32>,
    pub right: Vec<i32>,
    /// Loss reduction achieved by each split.
    pub gain: Vec<f64>,
    /// Already scaled by the learning rate.
    pub leaf_value: Vec<f64>,
    /// Training rows that reached each leaf.
    pub leaf_count: Vec<u32>,
}

impl Tree {
    pub fn n_leaves(&self) -> usize {
        self.leaf_value.len()
    }

    pub fn n_splits(&self) -> usize {
        self.split_feature.len()
    }

    /// Leaf reached by `row`; goes left when `row[feature] <= threshold`.
    #[inline]
    pub fn leaf_index(&self, row: &[f64]) -> usize {
        if self.split_feature.is_empty() {
            return 0;
        }
        let mut node = 0usize;
        loop {
            let f = self.split_feature[node] as usize;
            let next = if row[f] <= self.threshold[node] {
                self.left[node]
            } else {
                self.right[node]
            };
            if next < 0 {
                return !next as usize;
            }
            node = next as usize;
        }
    }

    #[inline]
    pub fn value(&self, row: &[f64]) -> f64 {
        self.leaf_value[self.leaf_index(row)]
    }

    pub fn uses_feature(&self, f: usize) -> bool {
        self.split_feature.iter().any(|&s| s as usize == f)
    }
}

const STRIDE: usize = 256;

#[derive(Clone, Copy, Default, Debug)]
struct Bin {
    g: f64,
    h: f64,
    n: u32,
}

#[derive(Clone, Copy, Debug)]
struct Split {
    feature: usize,
    bin: usize,
    gain: f64,
}

#[derive(Clone, Copy, Debug)]
enum Slot {
    Root,
    Left(usize),
    Right(usize),
}

struct Leaf {
    start: usize,
    end: usize,
    hist: Vec<Bin>,
    g: f64,
    h: f64,
    best: Option<Split>,
    slot: Slot,
}

pub(crate) struct Grower<'a> {
    pub bins: &'a [Vec<u8>],
    pub mapper: &'a BinMapper,
    pub hp: &'a Hyperparams,
}

/// Result of growing one tree: the tree plus the leaf each training row fell in.
pub(crate) struct Grown {
    pub tree: Tree,
    pub row_leaf: Vec<u32>,
}

impl Grower<'_> {
    fn histogram(&self, rows: &[u32], grad: &[f64], hess: &[f64]) -> Vec<Bin> {
        let mut hist = vec![Bin::default(); self.bins.len() * STRIDE];
        hist.par_chunks_mut(STRIDE).enumerate().for_each(|(f, hf)| {
            let col = &self.bins[f];
            for &r in rows {
                let r = r as usize;
                let b = &mut hf[col[r] as usize];
                b.g += grad[r];
                b.h += hess[r];
                b.n += 1;
            }
        });
        hist
    }

    fn best_split(&self, hist: &[Bin], g: f64, h: f64, n: usize) -> Option<Split> {
        let lambda = self.hp.l2_reg;
        let min_n = self.hp.min_samples_leaf;
        let min_h = self.hp.min_hessian;
        let parent = g * g / (h + lambda);
        let mut best: Option<Split> = None;
        for f in 0..self.bins.len() {
            let nb = self.mapper.n_bins(f);
            let hf = &hist[f * STRIDE..f * STRIDE + nb];
            let (mut gl, mut hl, mut nl) = (0.0, 0.0, 0usize);
            for (b, bin) in hf.iter().enumerate().take(nb - 1) {
                gl += bin.g;
                hl += bin.h;
                nl += bin.n as usize;
                let nr = n - nl;
                if nl < min_n {
                    continue;
                }
                if nr < min_n {
                    break;
                }
                let (gr, hr) = (g - gl, h - hl);
                if hl < min_h || hr < min_h {
                    continue;
                }
                let gain = 0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - parent);
                if gain > 0.0 && best.is_none_or(|s| gain > s.gain) {
                    best = Some(Split {
                        feature: f,
                        bin: b,
                        gain,
                    });
                }
            }
        }
        best
    }

    #[allow(clippy::too_many_arguments)]
    fn make_leaf(
        &self,
        rows: &[u32],
        start: usize,
        end: usize,
        hist: Vec<Bin>,
        grad: &[f64],
        hess: &[f64],
        slot: Slot,
    ) -> Leaf {
        let seg = &rows[start..end];
        let g: f64 = seg.iter().map(|&r| grad[r as usize]).sum();
        let h: f64 = seg.iter().map(|&r| hess[r as usize]).sum();
        let best = self.best_split(&hist, g, h, seg.len());
        Leaf {
            start,
            end,
            hist,
            g,
            h,
            best,
            slot,
        }
    }

    pub fn grow(&self, grad: &[f64], hess: &[f64]) -> Grown {
        let n = grad.len();
        let mut rows: Vec<u32> = (0..n as u32).collect();
        let mut scratch: Vec<u32> = Vec::with_capacity(n);
        let root_hist = self.histogram(&rows, grad, hess);
        let mut leaves = vec![self.make_leaf(&rows, 0, n, root_hist, grad, hess, Slot::Root)];
        let mut tree = Tree {
            split_feature: Vec::new(),
            threshold: Vec::new(),
            left: Vec::new(),
            right: Vec::new(),
            gain: Vec::new(),
            leaf_value: Vec::new(),
            leaf_count: Vec::new(),
        };

        while leaves.len() < self.hp.max_leaves {
            let mut pick: Option<(usize, Split)> = None;
            for (i, leaf) in leaves.iter().enumerate() {
                if let Some(s) = leaf.best {
                    if pick.is_none_or(|(_, p)| s.gain > p.gain) {
                        pick = Some((i, s));
                    }
                }
            }
            let Some((li, split)) = pick else { break };

            let (start, end, slot) = (leaves[li].start, leaves[li].end, leaves[li].slot);
            let col = &self.bins[split.feature];
            let cut = split.bin as u8;
            scratch.clear();
            scratch.extend(rows[start..end].iter().copied().filter(|&r| col[r as usize] > cut));
            let mut w = start;
            for i in start..end {
                let r = rows[i];
                if col[r as usize] <= cut {
                    rows[w] = r;
                    w += 1;
                }
            }
            rows[w..end].copy_from_slice(&scratch);
            let mid = w;

            let node = tree.split_feature.len();
            tree.split_feature.push(split.feature as u32);
            tree.threshold.push(self.mapper.threshold(split.feature, split.bin));
            tree.gain.push(split.gain);
            tree.left.push(0);
            tree.right.push(0);
            match slot {
                Slot::Root => {}
                Slot::Left(p) => tree.left[p] = node as i32,
                Slot::Right(p) => tree.right[p] = node as i32,
            }

            let parent_hist = std::mem::take(&mut leaves[li].hist);
            let left_small = mid - start <= end - mid;
            let (small_range, _) = if left_small {
                ((start, mid), (mid, end))
            } else {
                ((mid, end), (start, mid))
            };
            let small = self.histogram(&rows[small_range.0..small_range.1], grad, hess);
            let mut large = parent_hist;
            for (l, s) in large.iter_mut().zip(&small) {
                l.g -= s.g;
                l.h -= s.h;
                l.n -= s.n;
            }
            let (lh, rh) = if left_small { (small, large) } else { (large, small) };
            leaves[li] = self.make_leaf(&rows, start, mid, lh, grad, hess, Slot::Left(node));
            let right = self.make_leaf(&rows, mid, end, rh, grad, hess, Slot::Right(node));
            leaves.push(right);
        }

        let lambda = self.hp.l2_reg;
        let mut row_leaf = vec![0u32; n];
        for (k, leaf) in leaves.iter().enumerate() {
            let v = if leaf.h + lambda > 0.0 {
                -leaf.g / (leaf.h + lambda)
            } else {
                0.0
            };
            tree.leaf_value.push(v * self.hp.learning_rate);
            tree.leaf_count.push((leaf.end - leaf.start) as u32);
            match leaf.slot {
                Slot::Root => {}
                Slot::Left(p) => tree.left[p] = !(k as i32),
                Slot::Right(p) => tree.right[p] = !(k as i32),
            }
            for &r in &rows[leaf.start..leaf.end] {
                row_leaf[r as usize] = k as u32;
            }
        }
        Grown { tree, row_leaf }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stump_hp() -> Hyperparams {
        Hyperparams {
            max_leaves: 2,
            min_samples_leaf: 1,
            learning_rate: 1.0,
            ..Hyperparams::default()
        }
    }

    #[test]
    fn single_leaf_tree_routes_everything_to_leaf_zero() {
        let t = Tree {
            split_feature: vec![],
            threshold: vec![],
            left: vec![],
            right: vec![],
            gain: vec![],
            leaf_value: vec![0.3],
            leaf_count: vec![5],
        };
        assert_eq!(t.value(&[1.0, 2.0]), 0.3);
    }

    #[test]
    fn stump_threshold_between_classes() {
        let x = vec![1.0, 2.0, 3.0, 4.0];
        let y = [0.0, 0.0, 1.0, 1.0];
        let mapper = BinMapper::fit(std::slice::from_ref(&x), 255, 0);
        let bins = mapper.transform(&[x]);
        let hp = stump_hp();
        let grad: Vec<f64> = y.iter().map(|y| 0.5 - y).collect();
        let hess = vec![0.25; 4];
        let g = Grower {
            bins: &bins,
            mapper: &mapper,
            hp: &hp,
        }
        .grow(&grad, &hess);
        assert_eq!(g.tree.n_leaves(), 2);
        assert!(g.tree.threshold[0] > 2.0 && g.tree.threshold[0] < 3.0);
        assert_eq!(g.row_leaf, vec![0, 0, 1, 1]);
        assert_eq!(g.tree.leaf_value, vec![-2.0, 2.0]);
    }

    #[test]
    fn min_samples_leaf_blocks_small_children() {
        let x: Vec<f64> = (0..10).map(f64::from).collect();
        let mapper = BinMapper::fit(std::slice::from_ref(&x), 255, 0);
        let bins = mapper.transform(&[x]);
        let hp = Hyperparams {
            min_samples_leaf: 6,
            ..stump_hp()
        };
        let grad: Vec<f64> = (0..10).map(|i| if i == 0 { -0.5 } else { 0.5 }).collect();
        let g = Grower {
            bins: &bins,
            mapper: &mapper,
            hp: &hp,
        }
        .grow(&grad, &[0.25; 10]);
        assert_eq!(g.tree.n_leaves(), 1);
    }
}
