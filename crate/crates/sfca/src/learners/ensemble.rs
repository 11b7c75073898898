//! Bagged and gradient-boosted tree ensembles. Per-tree randomness derives
//! from (seed, tree index) so results do not depend on execution order or
//! available parallelism.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::tree::{fit_tree, fit_tree_with_ranks, FeatureRanks, Tree, TreeParams};
use super::{ModelParams, ModelSpec};
use crate::error::Result;

fn tree_seed(master: u64, index: usize) -> u64 {
    // splitmix-style mix of (master, index).
    let mut z = master
        .wrapping_add(0x9e3779b97f4a7c15u64.wrapping_mul(index as u64 + 1));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

fn mtry_for(spec: &ModelSpec, m: usize) -> usize {
    if spec.family.is_classifier() {
        (m as f64).sqrt().ceil() as usize
    } else {
        (m / 3).max(1)
    }
}

/// Bootstrap-resampled trees; also covers the single plain tree
/// (`r-tree`), which uses the full sample and all features.
pub fn fit_bagging(
    x: &[Vec<f64>],
    y: &[f64],
    weights: Option<&[f64]>,
    spec: &ModelSpec,
) -> Result<ModelParams> {
    let n = x.len();
    let m = x[0].len();
    let w: Vec<f64> = match weights {
        Some(w) => w.to_vec(),
        None => vec![1.0; n],
    };
    let classification = spec.family.is_classifier();
    let single = matches!(spec.family, super::Family::RTree);
    let tree_count = if single { 1 } else { spec.tree_count };
    // Shared dense value ranks let classification trees take the packed
    // integer split-scan path (identical trees, much cheaper sorts).
    let ranks = if classification {
        Some(FeatureRanks::compute(x))
    } else {
        None
    };
    let trees: Vec<Tree> = (0..tree_count)
        .into_par_iter()
        .map(|t| {
            let seed = tree_seed(spec.seed, t);
            let rows: Vec<usize> = if single {
                (0..n).collect()
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..n).map(|_| rng.gen_range(0..n)).collect()
            };
            let params = TreeParams {
                classification,
                max_depth: spec.max_depth,
                min_leaf: spec.min_leaf,
                mtry: if single { 0 } else { mtry_for(spec, m) },
                seed: seed ^ 0x5bd1e995,
            };
            fit_tree_with_ranks(x, y, &w, rows, params, ranks.as_ref())
        })
        .collect();
    if single {
        Ok(ModelParams::Tree(trees.into_iter().next().expect("one tree")))
    } else {
        Ok(ModelParams::Forest {
            trees,
            classification,
        })
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Replace each leaf value by the optimal step over the FULL training set
/// reaching that leaf (mean residual for squared loss, Newton step for
/// logistic loss). Keeps full-set training loss non-increasing.
fn refit_leaves(
    tree: &mut Tree,
    x: &[Vec<f64>],
    w: &[f64],
    grad: &[f64],
    hess: &[f64],
) {
    use super::tree::Node;
    let k = tree.nodes.len();
    let mut num = vec![0.0; k];
    let mut den = vec![0.0; k];
    for (i, row) in x.iter().enumerate() {
        let mut idx = 0;
        loop {
            match &tree.nodes[idx] {
                Node::Leaf { .. } => break,
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
        num[idx] += w[i] * grad[i];
        den[idx] += w[i] * hess[i];
    }
    for (idx, node) in tree.nodes.iter_mut().enumerate() {
        if let Node::Leaf { value } = node {
            *value = if den[idx] > 1e-12 { num[idx] / den[idx] } else { 0.0 };
        }
    }
}

/// Gradient boosting: squared loss for regression, logistic loss for
/// classification. Tree structure is grown on a per-round row subsample;
/// leaf steps are refit on the full training set.
pub fn fit_boosting(
    x: &[Vec<f64>],
    y: &[f64],
    weights: Option<&[f64]>,
    spec: &ModelSpec,
) -> Result<ModelParams> {
    let n = x.len();
    let w: Vec<f64> = match weights {
        Some(w) => w.to_vec(),
        None => vec![1.0; n],
    };
    let w_total: f64 = w.iter().sum();
    let classification = spec.family.is_classifier();

    let init = if classification {
        let p: f64 = ((0..n).map(|i| w[i] * y[i]).sum::<f64>() / w_total)
            .clamp(1e-6, 1.0 - 1e-6);
        (p / (1.0 - p)).ln()
    } else {
        (0..n).map(|i| w[i] * y[i]).sum::<f64>() / w_total
    };

    let loss = |f: &[f64]| -> f64 {
        if classification {
            (0..n)
                .map(|i| {
                    let p = sigmoid(f[i]).clamp(1e-12, 1.0 - 1e-12);
                    -w[i] * (y[i] * p.ln() + (1.0 - y[i]) * (1.0 - p).ln())
                })
                .sum::<f64>()
                / w_total
        } else {
            (0..n)
                .map(|i| w[i] * (y[i] - f[i]) * (y[i] - f[i]))
                .sum::<f64>()
                / w_total
        }
    };

    let mut f = vec![init; n];
    let mut trees = Vec::with_capacity(spec.tree_count);
    let mut train_loss = Vec::with_capacity(spec.tree_count);
    let subsample_count = ((n as f64 * spec.subsample).round() as usize).clamp(1, n);

    for round in 0..spec.tree_count {
        let seed = tree_seed(spec.seed ^ 0x00c0ffee, round);
        // Pseudo-residuals (negative gradient) and Hessian diagonals.
        let (grad, hess): (Vec<f64>, Vec<f64>) = if classification {
            (0..n)
                .map(|i| {
                    let p = sigmoid(f[i]);
                    (y[i] - p, (p * (1.0 - p)).max(1e-6))
                })
                .unzip()
        } else {
            ((0..n).map(|i| y[i] - f[i]).collect(), vec![1.0; n])
        };

        let rows: Vec<usize> = if subsample_count < n {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut all: Vec<usize> = (0..n).collect();
            for i in (1..n).rev() {
                let j = rng.gen_range(0..=i);
                all.swap(i, j);
            }
            let mut sub = all[..subsample_count].to_vec();
            sub.sort_unstable();
            sub
        } else {
            (0..n).collect()
        };

        let params = TreeParams {
            classification: false, // structure grows on residuals
            max_depth: if spec.max_depth == 0 { 4 } else { spec.max_depth },
            min_leaf: spec.min_leaf,
            mtry: 0,
            seed: seed ^ 0x9747b28c,
        };
        let mut tree = fit_tree(x, &grad, &w, rows, params);
        refit_leaves(&mut tree, x, &w, &grad, &hess);

        for (i, row) in x.iter().enumerate() {
            f[i] += spec.learning_rate * tree.predict(row);
        }
        trees.push(tree);
        train_loss.push(loss(&f));
    }

    Ok(ModelParams::Boosted {
        init,
        trees,
        learning_rate: spec.learning_rate,
        classification,
        train_loss,
    })
}
