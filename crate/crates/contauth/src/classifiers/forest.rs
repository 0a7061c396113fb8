//! Random forest: CART trees with Gini splits, bootstrap resampling and
//! per-split feature subsampling, each tree seeded from (seed, tree index).

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use super::TrainConfig;
use crate::features::{FeatureVector, FEATURE_COUNT};

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Leaf {
        /// Fraction of genuine training samples at this leaf.
        genuine_frac: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// One decision tree; node 0 is the root, `left` is taken when
/// `value <= threshold`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    /// Genuine fraction at the leaf reached by `v`.
    pub fn leaf_frac(&self, v: &FeatureVector) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { genuine_frac } => return *genuine_frac,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if v.0[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    /// Genuine vote: leaf fraction at or above one half.
    pub fn votes_genuine(&self, v: &FeatureVector) -> bool {
        self.leaf_frac(v) >= 0.5
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    pub trees: Vec<Tree>,
}

impl Forest {
    /// Fraction of trees voting genuine, in [0,1].
    pub fn score(&self, v: &FeatureVector) -> f64 {
        let votes = self.trees.iter().filter(|t| t.votes_genuine(v)).count();
        votes as f64 / self.trees.len() as f64
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Exhaustive Gini-minimizing split over the given candidate features.
///
/// Candidate thresholds are midpoints between consecutive distinct sorted
/// values; features are scanned in the given order and only strictly
/// better splits replace the incumbent, so ties resolve to the lowest
/// feature index and lowest threshold.
pub fn best_split(
    vectors: &[FeatureVector],
    labels: &[bool],
    indices: &[usize],
    features: &[usize],
) -> Option<(usize, f64)> {
    let total = indices.len();
    let total_genuine = indices.iter().filter(|&&i| labels[i]).count();
    let mut best: Option<(usize, f64)> = None;
    let mut best_impurity = f64::INFINITY;

    let mut order: Vec<usize> = Vec::with_capacity(total);
    for &feature in features {
        order.clear();
        order.extend_from_slice(indices);
        order.sort_by(|&a, &b| {
            vectors[a].0[feature]
                .partial_cmp(&vectors[b].0[feature])
                .unwrap()
                .then(a.cmp(&b))
        });

        let mut left_n = 0usize;
        let mut left_genuine = 0usize;
        for w in 0..total - 1 {
            left_n += 1;
            if labels[order[w]] {
                left_genuine += 1;
            }
            let a = vectors[order[w]].0[feature];
            let b = vectors[order[w + 1]].0[feature];
            if a == b {
                continue;
            }
            let threshold = a + (b - a) / 2.0;
            // midpoint can round onto b; keep the boundary on the left side
            let threshold = if threshold >= b { a } else { threshold };
            let right_n = total - left_n;
            let right_genuine = total_genuine - left_genuine;
            let gini = |g: usize, n: usize| {
                let p = g as f64 / n as f64;
                1.0 - p * p - (1.0 - p) * (1.0 - p)
            };
            let impurity = left_n as f64 / total as f64 * gini(left_genuine, left_n)
                + right_n as f64 / total as f64 * gini(right_genuine, right_n);
            if impurity < best_impurity {
                best_impurity = impurity;
                best = Some((feature, threshold));
            }
        }
    }
    best
}

fn build_node(
    nodes: &mut Vec<Node>,
    vectors: &[FeatureVector],
    labels: &[bool],
    indices: &[usize],
    depth: usize,
    cfg: &TrainConfig,
    rng: &mut ChaCha8Rng,
) -> usize {
    let n = indices.len();
    let genuine = indices.iter().filter(|&&i| labels[i]).count();
    let frac = genuine as f64 / n as f64;

    let depth_reached = cfg.rf_max_depth.is_some_and(|d| depth >= d);
    if genuine == 0 || genuine == n || depth_reached || n < 2 * cfg.rf_min_leaf || n < 2 {
        nodes.push(Node::Leaf { genuine_frac: frac });
        return nodes.len() - 1;
    }

    let features: Vec<usize> = if cfg.rf_features_per_split >= FEATURE_COUNT {
        (0..FEATURE_COUNT).collect()
    } else {
        let mut sampled =
            rand::seq::index::sample(rng, FEATURE_COUNT, cfg.rf_features_per_split).into_vec();
        sampled.sort_unstable();
        sampled
    };

    let Some((feature, threshold)) = best_split(vectors, labels, indices, &features) else {
        nodes.push(Node::Leaf { genuine_frac: frac });
        return nodes.len() - 1;
    };

    let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
        .iter()
        .partition(|&&i| vectors[i].0[feature] <= threshold);
    if left_idx.len() < cfg.rf_min_leaf || right_idx.len() < cfg.rf_min_leaf {
        nodes.push(Node::Leaf { genuine_frac: frac });
        return nodes.len() - 1;
    }

    let me = nodes.len();
    nodes.push(Node::Leaf { genuine_frac: frac }); // placeholder
    let left = build_node(nodes, vectors, labels, &left_idx, depth + 1, cfg, rng);
    let right = build_node(nodes, vectors, labels, &right_idx, depth + 1, cfg, rng);
    nodes[me] = Node::Split {
        feature,
        threshold,
        left,
        right,
    };
    me
}

fn build_tree(
    cfg: &TrainConfig,
    vectors: &[FeatureVector],
    labels: &[bool],
    tree_index: usize,
) -> Tree {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(cfg.seed ^ (tree_index as u64 + 1)));
    let n = vectors.len();
    let indices: Vec<usize> = if cfg.rf_bootstrap {
        (0..n).map(|_| rng.gen_range(0..n)).collect()
    } else {
        (0..n).collect()
    };
    let mut nodes = Vec::new();
    build_node(&mut nodes, vectors, labels, &indices, 0, cfg, &mut rng);
    Tree { nodes }
}

pub fn train_forest(cfg: &TrainConfig, vectors: &[FeatureVector], labels: &[bool]) -> Forest {
    #[cfg(feature = "parallel")]
    let trees: Vec<Tree> = (0..cfg.rf_trees)
        .into_par_iter()
        .map(|t| build_tree(cfg, vectors, labels, t))
        .collect();
    #[cfg(not(feature = "parallel"))]
    let trees: Vec<Tree> = (0..cfg.rf_trees)
        .map(|t| build_tree(cfg, vectors, labels, t))
        .collect();
    Forest { trees }
}
