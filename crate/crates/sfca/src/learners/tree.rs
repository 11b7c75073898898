//! CART: greedy binary trees with variance (regression) or Gini
//! (classification) impurity, sample weights, and per-split feature
//! subsampling.

use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        /// Mean target (regression) or class-1 probability (classification).
        value: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut idx = 0;
        loop {
            match &self.nodes[idx] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    idx = if row[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TreeParams {
    pub classification: bool,
    /// 0 = unlimited.
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Features sampled per split; 0 = all.
    pub mtry: usize,
    pub seed: u64,
}

/// Dense per-feature value ranks (ties share a rank), precomputed once per
/// training matrix so every tree of an ensemble can sort split candidates
/// as packed integer keys instead of comparing floats.
pub struct FeatureRanks {
    /// ranks[f][i] = dense rank of x[i][f] among column f's values.
    ranks: Vec<Vec<u32>>,
}

impl FeatureRanks {
    pub fn compute(x: &[Vec<f64>]) -> Self {
        let n = x.len();
        let m = if n == 0 { 0 } else { x[0].len() };
        let mut ranks = vec![vec![0u32; n]; m];
        let mut order: Vec<u32> = (0..n as u32).collect();
        for (f, col_ranks) in ranks.iter_mut().enumerate() {
            order.sort_unstable_by(|&a, &b| {
                x[a as usize][f].total_cmp(&x[b as usize][f])
            });
            let mut rank = 0u32;
            let mut prev = f64::NAN;
            for &i in &order {
                let v = x[i as usize][f];
                // Numeric equality (not bit equality) shares a rank, so that
                // -0.0 and +0.0 stay unsplittable, matching the value scan.
                if v != prev {
                    if !prev.is_nan() {
                        rank += 1;
                    }
                    prev = v;
                }
                col_ranks[i as usize] = rank;
            }
        }
        FeatureRanks { ranks }
    }
}

/// Bit layout of the packed fast-path sort key:
/// rank (high) | row index | label bit (low).
const KEY_LABEL_BITS: u32 = 1;
const KEY_ROW_BITS: u32 = 20;
const KEY_ROW_MASK: u64 = (1 << KEY_ROW_BITS) - 1;

/// Rows (and therefore ranks) must fit in the key's row field.
pub const MAX_RANKED_ROWS: usize = 1 << KEY_ROW_BITS;

struct Builder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [f64],
    w: &'a [f64],
    /// Precomputed w*y and w*y*y per row.
    wy: Vec<f64>,
    wyy: Vec<f64>,
    params: TreeParams,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
    /// Per-split sort buffer of (feature value, row index).
    scratch: Vec<(f64, u32)>,
    /// Fast path for 0/1-label, unit-weight classification: per-feature
    /// dense ranks, enabling packed-integer sort keys.
    ranks: Option<&'a [Vec<u32>]>,
    /// Sort buffer for packed keys.
    scratch_keys: Vec<u64>,
}

/// Weighted impurity times weight (so that split gain is additive):
/// variance * W for regression, Gini * W for classification.
fn impurity_cost(sum: f64, sum_sq: f64, w: f64, classification: bool) -> f64 {
    if w <= 0.0 {
        return 0.0;
    }
    if classification {
        // Targets are 0/1: Gini = 2 p (1-p).
        let p = sum / w;
        2.0 * p * (1.0 - p) * w
    } else {
        sum_sq - sum * sum / w
    }
}

impl<'a> Builder<'a> {
    fn build(&mut self, rows: Vec<usize>, depth: usize) -> usize {
        let w_sum: f64 = rows.iter().map(|&i| self.w[i]).sum();
        let y_sum: f64 = rows.iter().map(|&i| self.w[i] * self.y[i]).sum();
        let mean = y_sum / w_sum;

        let at_depth_limit = self.params.max_depth > 0 && depth >= self.params.max_depth;
        let too_small = rows.len() < 2 * self.params.min_leaf;
        let pure = rows
            .iter()
            .all(|&i| (self.y[i] - self.y[rows[0]]).abs() < 1e-12);
        if at_depth_limit || too_small || pure {
            self.nodes.push(Node::Leaf { value: mean });
            return self.nodes.len() - 1;
        }

        let m = self.x[0].len();
        let mut features: Vec<usize> = (0..m).collect();
        if self.params.mtry > 0 && self.params.mtry < m {
            features.shuffle(&mut self.rng);
            features.truncate(self.params.mtry);
            features.sort_unstable();
        }

        let y_sq_sum: f64 = rows
            .iter()
            .map(|&i| self.w[i] * self.y[i] * self.y[i])
            .sum();
        let parent_cost = impurity_cost(y_sum, y_sq_sum, w_sum, self.params.classification);

        let mut best: Option<(f64, usize, f64)> = None; // (cost, feature, threshold)
        // Zero-gain splits are allowed (the children may still be separable
        // deeper down, as with XOR-like targets).
        let consider = |best: &mut Option<(f64, usize, f64)>, cost: f64, f: usize, thr: f64| {
            let better = match *best {
                None => cost <= parent_cost + 1e-12,
                Some((bc, _, _)) => cost < bc - 1e-12,
            };
            if better {
                *best = Some((cost, f, thr));
            }
        };
        if let Some(ranks) = self.ranks {
            // Packed-key path: sort order and tie-breaking match the value
            // scan below exactly (dense rank stands in for the value, the
            // row index breaks ties, and the label rides in the low bit so
            // the scan needs no per-row gathers).
            let mut order = std::mem::take(&mut self.scratch_keys);
            for &f in &features {
                let col = &ranks[f];
                order.clear();
                order.extend(rows.iter().map(|&i| {
                    ((col[i] as u64) << (KEY_ROW_BITS + KEY_LABEL_BITS))
                        | ((i as u64) << KEY_LABEL_BITS)
                        | (self.y[i] as u64)
                }));
                order.sort_unstable();
                let mut left_ones = 0u64;
                for k in 0..order.len() - 1 {
                    let key = order[k];
                    left_ones += key & 1;
                    if order[k + 1] >> (KEY_ROW_BITS + KEY_LABEL_BITS)
                        == key >> (KEY_ROW_BITS + KEY_LABEL_BITS)
                    {
                        continue; // no boundary between equal values
                    }
                    let n_left = k + 1;
                    let n_right = order.len() - n_left;
                    if n_left < self.params.min_leaf || n_right < self.params.min_leaf {
                        continue;
                    }
                    let left_w = n_left as f64;
                    let left_sum = left_ones as f64;
                    let right_w = w_sum - left_w;
                    let right_sum = y_sum - left_sum;
                    let cost = impurity_cost(left_sum, 0.0, left_w, true)
                        + impurity_cost(right_sum, 0.0, right_w, true);
                    let xv = self.x[((key >> KEY_LABEL_BITS) & KEY_ROW_MASK) as usize][f];
                    let xn = self.x
                        [((order[k + 1] >> KEY_LABEL_BITS) & KEY_ROW_MASK) as usize][f];
                    consider(&mut best, cost, f, 0.5 * (xv + xn));
                }
            }
            self.scratch_keys = order;
        } else {
            let mut order = std::mem::take(&mut self.scratch);
            for &f in &features {
                order.clear();
                order.extend(rows.iter().map(|&i| (self.x[i][f], i as u32)));
                order.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                let mut left_w = 0.0;
                let mut left_sum = 0.0;
                let mut left_sq = 0.0;
                for k in 0..order.len() - 1 {
                    let (xv, i) = order[k];
                    let i = i as usize;
                    left_w += self.w[i];
                    left_sum += self.wy[i];
                    left_sq += self.wyy[i];
                    let xn = order[k + 1].0;
                    if xn <= xv {
                        continue; // no boundary between equal values
                    }
                    let n_left = k + 1;
                    let n_right = order.len() - n_left;
                    if n_left < self.params.min_leaf || n_right < self.params.min_leaf {
                        continue;
                    }
                    let right_w = w_sum - left_w;
                    let right_sum = y_sum - left_sum;
                    let right_sq = y_sq_sum - left_sq;
                    let cost =
                        impurity_cost(left_sum, left_sq, left_w, self.params.classification)
                            + impurity_cost(right_sum, right_sq, right_w, self.params.classification);
                    consider(&mut best, cost, f, 0.5 * (xv + xn));
                }
            }
            self.scratch = order;
        }

        match best {
            None => {
                self.nodes.push(Node::Leaf { value: mean });
                self.nodes.len() - 1
            }
            Some((_, feature, threshold)) => {
                let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
                    .into_iter()
                    .partition(|&i| self.x[i][feature] <= threshold);
                // Reserve the split slot before recursing so node indices
                // are stable.
                self.nodes.push(Node::Leaf { value: mean });
                let slot = self.nodes.len() - 1;
                let left = self.build(left_rows, depth + 1);
                let right = self.build(right_rows, depth + 1);
                self.nodes[slot] = Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                };
                slot
            }
        }
    }
}

/// Fit one CART tree on the given rows (indices into x/y/w).
pub fn fit_tree(
    x: &[Vec<f64>],
    y: &[f64],
    w: &[f64],
    rows: Vec<usize>,
    params: TreeParams,
) -> Tree {
    fit_tree_with_ranks(x, y, w, rows, params, None)
}

/// [`fit_tree`] with optional precomputed feature ranks. The ranked fast
/// path produces identical trees and is only taken for 0/1-target,
/// unit-weight classification fits small enough for the packed keys;
/// callers fitting many trees on one matrix share the ranks.
pub fn fit_tree_with_ranks(
    x: &[Vec<f64>],
    y: &[f64],
    w: &[f64],
    rows: Vec<usize>,
    params: TreeParams,
    ranks: Option<&FeatureRanks>,
) -> Tree {
    let rankable = params.classification
        && x.len() <= MAX_RANKED_ROWS
        && y.iter().all(|&v| v == 0.0 || v == 1.0)
        && w.iter().all(|&v| v == 1.0);
    let mut builder = Builder {
        x,
        y,
        w,
        wy: y.iter().zip(w).map(|(yi, wi)| wi * yi).collect(),
        wyy: y.iter().zip(w).map(|(yi, wi)| wi * yi * yi).collect(),
        params,
        rng: ChaCha8Rng::seed_from_u64(params.seed),
        nodes: Vec::new(),
        scratch: Vec::new(),
        ranks: if rankable {
            ranks.map(|r| r.ranks.as_slice())
        } else {
            None
        },
        scratch_keys: Vec::new(),
    };
    builder.build(rows, 0);
    Tree {
        nodes: builder.nodes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(classification: bool) -> TreeParams {
        TreeParams {
            classification,
            max_depth: 0,
            min_leaf: 1,
            mtry: 0,
            seed: 0,
        }
    }

    #[test]
    fn single_leaf_constant_prediction() {
        let x = vec![vec![0.0], vec![1.0], vec![2.0]];
        let y = vec![5.0, 5.0, 5.0];
        let w = vec![1.0; 3];
        let tree = fit_tree(&x, &y, &w, vec![0, 1, 2], params(false));
        assert_eq!(tree.nodes.len(), 1);
        for row in &x {
            assert_eq!(tree.predict(row), 5.0);
        }
    }

    #[test]
    fn depth_two_tree_solves_xor() {
        let x = vec![
            vec![0.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 0.0],
            vec![1.0, 1.0],
        ];
        let y = vec![0.0, 1.0, 1.0, 0.0];
        let w = vec![1.0; 4];
        let p = TreeParams {
            max_depth: 2,
            ..params(true)
        };
        let tree = fit_tree(&x, &y, &w, vec![0, 1, 2, 3], p);
        for (row, &t) in x.iter().zip(&y) {
            assert_eq!(tree.predict(row), t, "row {row:?}");
        }
    }

    #[test]
    fn regression_split_recovers_step() {
        let x: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = (0..20).map(|i| if i < 10 { 1.0 } else { 3.0 }).collect();
        let w = vec![1.0; 20];
        let tree = fit_tree(&x, &y, &w, (0..20).collect(), params(false));
        assert_eq!(tree.predict(&[4.0]), 1.0);
        assert_eq!(tree.predict(&[15.0]), 3.0);
    }

    #[test]
    fn min_leaf_respected() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let w = vec![1.0; 10];
        let p = TreeParams {
            min_leaf: 5,
            ..params(false)
        };
        let tree = fit_tree(&x, &y, &w, (0..10).collect(), p);
        // One split at most: 10 rows with min_leaf 5 allows only 5|5.
        let splits = tree
            .nodes
            .iter()
            .filter(|n| matches!(n, Node::Split { .. }))
            .count();
        assert_eq!(splits, 1);
    }

    #[test]
    fn weight_doubling_equals_duplication() {
        let x: Vec<Vec<f64>> = (0..12).map(|i| vec![(i % 6) as f64, (i / 6) as f64]).collect();
        let y: Vec<f64> = (0..12).map(|i| ((i * 5 + 2) % 7) as f64).collect();
        let mut w = vec![1.0; 12];
        w[3] = 2.0;
        let weighted = fit_tree(&x, &y, &w, (0..12).collect(), params(false));

        let mut x2 = x.clone();
        let mut y2 = y.clone();
        x2.push(x[3].clone());
        y2.push(y[3]);
        let w2 = vec![1.0; 13];
        let duplicated = fit_tree(&x2, &y2, &w2, (0..13).collect(), params(false));

        // Same split structure and predictions.
        for probe in &x {
            assert!((weighted.predict(probe) - duplicated.predict(probe)).abs() < 1e-12);
        }
    }

    #[test]
    fn ranked_path_matches_value_scan() {
        // Pseudo-random 0/1 classification data with heavy value ties.
        let n = 300;
        let x: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..6)
                    .map(|j| (((i * 31 + j * 17) % 13) as f64 - 6.0) * 0.25)
                    .collect()
            })
            .collect();
        let y: Vec<f64> = (0..n).map(|i| ((i * 7 + 3) % 5 < 2) as u64 as f64).collect();
        let w = vec![1.0; n];
        let ranks = FeatureRanks::compute(&x);
        for seed in [0u64, 9, 77] {
            let p = TreeParams {
                classification: true,
                max_depth: 0,
                min_leaf: 5,
                mtry: 3,
                seed,
            };
            // Bootstrap-style draws: repeated rows, some rows absent.
            let rows: Vec<usize> = (0..n).map(|i| (i * i * 37 + 5) % n).collect();
            let plain = fit_tree(&x, &y, &w, rows.clone(), p);
            let fast = fit_tree_with_ranks(&x, &y, &w, rows, p, Some(&ranks));
            assert_eq!(plain, fast, "seed {seed}");
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let x: Vec<Vec<f64>> = (0..50)
            .map(|i| (0..8).map(|j| ((i * 13 + j * 7) % 23) as f64).collect())
            .collect();
        let y: Vec<f64> = (0..50).map(|i| ((i * 11) % 5) as f64).collect();
        let w = vec![1.0; 50];
        let p = TreeParams {
            mtry: 3,
            seed: 42,
            ..params(false)
        };
        let t1 = fit_tree(&x, &y, &w, (0..50).collect(), p);
        let t2 = fit_tree(&x, &y, &w, (0..50).collect(), p);
        assert_eq!(t1, t2);
    }
}
