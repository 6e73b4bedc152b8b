//! Multinomial gradient boosting over depth-limited regression trees.
//!
//! Per round, one squared-error regression tree is fit to the softmax
//! gradient of each class; leaf values use the standard multiclass
//! Newton step `((K-1)/K) * sum(g) / sum(|g| (1-|g|))`. Trees are grown
//! level-wise over feature-presorted sample lists, so a fit costs
//! `O(rounds * K * depth * n * d)` with small constants. The model is fully
//! deterministic: no subsampling, and split ties break on the lowest
//! feature index then the lowest threshold, as in the classification tree.

use nalgebra::DMatrix;

const LEAF: u32 = u32::MAX;

#[derive(Clone)]
struct RegNode {
    feature: u32,
    threshold: f64,
    /// Child ids, or `LEAF` markers.
    left: u32,
    right: u32,
    /// Leaf value (already scaled by the learning rate); 0 for splits.
    value: f64,
}

/// One fitted regression tree.
struct RegTree {
    nodes: Vec<RegNode>,
}

impl RegTree {
    fn leaf_value(&self, x: &DMatrix<f64>, row: usize) -> f64 {
        let mut id = 0usize;
        loop {
            let node = &self.nodes[id];
            if node.left == LEAF {
                return node.value;
            }
            id = if x[(row, node.feature as usize)] <= node.threshold {
                node.left as usize
            } else {
                node.right as usize
            };
        }
    }
}

/// A fitted gradient-boosting model.
pub struct GbModel {
    n_classes: usize,
    /// Log class priors; with zero rounds the model predicts the prior.
    base: Vec<f64>,
    /// `n_trees * n_classes` trees, round-major.
    trees: Vec<RegTree>,
}

impl GbModel {
    /// Fits `n_trees` boosting rounds on standardized features.
    pub fn fit(
        x: &DMatrix<f64>,
        y: &[usize],
        n_classes: usize,
        n_trees: usize,
        learning_rate: f64,
        max_depth: usize,
        min_leaf: usize,
    ) -> GbModel {
        let n = x.nrows();
        let min_leaf = min_leaf.max(1);
        let mut counts = vec![0usize; n_classes];
        for &c in y {
            counts[c] += 1;
        }
        let base: Vec<f64> = counts
            .iter()
            .map(|&c| ((c.max(1)) as f64 / n as f64).ln())
            .collect();

        // Feature-presorted sample ids, shared by every tree of this fit.
        let presorted = presort(x);

        // Additive scores per (sample, class).
        let mut f = vec![0.0; n * n_classes];
        for i in 0..n {
            for c in 0..n_classes {
                f[i * n_classes + c] = base[c];
            }
        }

        let mut trees = Vec::with_capacity(n_trees * n_classes);
        let mut grad = vec![0.0; n];
        let mut prob = vec![0.0; n_classes];
        let factor = (n_classes as f64 - 1.0) / n_classes as f64;

        for _round in 0..n_trees {
            // Softmax probabilities for the current scores.
            let mut probs = vec![0.0; n * n_classes];
            for i in 0..n {
                let row = &f[i * n_classes..(i + 1) * n_classes];
                let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let mut sum = 0.0;
                for c in 0..n_classes {
                    prob[c] = (row[c] - max).exp();
                    sum += prob[c];
                }
                for c in 0..n_classes {
                    probs[i * n_classes + c] = prob[c] / sum;
                }
            }

            for cls in 0..n_classes {
                for i in 0..n {
                    let target = if y[i] == cls { 1.0 } else { 0.0 };
                    grad[i] = target - probs[i * n_classes + cls];
                }
                let (tree, leaf_of) = fit_reg_tree(
                    x,
                    &presorted,
                    &grad,
                    max_depth,
                    min_leaf,
                    factor,
                    learning_rate,
                );
                for i in 0..n {
                    f[i * n_classes + cls] += tree.nodes[leaf_of[i] as usize].value;
                }
                trees.push(tree);
            }
        }

        GbModel {
            n_classes,
            base,
            trees,
        }
    }

    /// Class probabilities (softmax of the additive scores).
    pub fn score(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let n = x.nrows();
        let k = self.n_classes;
        let mut out = DMatrix::zeros(n, k);
        for i in 0..n {
            let mut scores: Vec<f64> = self.base.clone();
            for (t, tree) in self.trees.iter().enumerate() {
                scores[t % k] += tree.leaf_value(x, i);
            }
            let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut sum = 0.0;
            for s in scores.iter_mut() {
                *s = (*s - max).exp();
                sum += *s;
            }
            for c in 0..k {
                out[(i, c)] = scores[c] / sum;
            }
        }
        out
    }
}

/// Sample ids sorted by each feature's value (ties by id).
fn presort(x: &DMatrix<f64>) -> Vec<Vec<u32>> {
    let n = x.nrows();
    (0..x.ncols())
        .map(|j| {
            let mut ids: Vec<u32> = (0..n as u32).collect();
            ids.sort_unstable_by(|&a, &b| {
                x[(a as usize, j)]
                    .partial_cmp(&x[(b as usize, j)])
                    .unwrap()
                    .then(a.cmp(&b))
            });
            ids
        })
        .collect()
}

/// Per-node scan state for one feature pass.
#[derive(Clone, Copy)]
struct ScanState {
    cnt_left: u32,
    sum_left: f64,
    last_val: f64,
    started: bool,
}

#[derive(Clone, Copy)]
struct BuildNode {
    sum: f64,
    cnt: u32,
    /// Best split found so far: gain, feature, threshold.
    best_gain: f64,
    best_feature: u32,
    best_threshold: f64,
    active: bool,
}

/// Grows one level-wise regression tree on gradient targets `g` and returns
/// it along with each sample's leaf id.
fn fit_reg_tree(
    x: &DMatrix<f64>,
    presorted: &[Vec<u32>],
    g: &[f64],
    max_depth: usize,
    min_leaf: usize,
    newton_factor: f64,
    learning_rate: f64,
) -> (RegTree, Vec<u32>) {
    let n = x.nrows();
    let total: f64 = g.iter().sum();
    let mut nodes = vec![RegNode {
        feature: 0,
        threshold: 0.0,
        left: LEAF,
        right: LEAF,
        value: 0.0,
    }];
    let mut build = vec![BuildNode {
        sum: total,
        cnt: n as u32,
        best_gain: 0.0,
        best_feature: 0,
        best_threshold: 0.0,
        active: true,
    }];
    let mut node_of: Vec<u32> = vec![0; n];

    for _depth in 0..max_depth {
        let any_active = build.iter().any(|b| b.active && b.cnt >= 2 * min_leaf as u32);
        if !any_active {
            break;
        }
        // Reset candidate state for this level.
        for b in build.iter_mut() {
            b.best_gain = 0.0;
        }
        let mut state = vec![
            ScanState {
                cnt_left: 0,
                sum_left: 0.0,
                last_val: 0.0,
                started: false,
            };
            build.len()
        ];
        for (feature, order) in presorted.iter().enumerate() {
            for st in state.iter_mut() {
                *st = ScanState {
                    cnt_left: 0,
                    sum_left: 0.0,
                    last_val: 0.0,
                    started: false,
                };
            }
            for &id in order {
                let i = id as usize;
                let nd = node_of[i] as usize;
                let b = &build[nd];
                if !b.active {
                    continue;
                }
                let v = x[(i, feature)];
                let st = &mut state[nd];
                if st.started
                    && v > st.last_val
                    && st.cnt_left >= min_leaf as u32
                    && b.cnt - st.cnt_left >= min_leaf as u32
                {
                    let nl = st.cnt_left as f64;
                    let nr = (b.cnt - st.cnt_left) as f64;
                    let sl = st.sum_left;
                    let sr = b.sum - sl;
                    let gain = sl * sl / nl + sr * sr / nr - b.sum * b.sum / b.cnt as f64;
                    // Strictly greater: ties keep the earlier (lower feature,
                    // lower threshold) candidate.
                    if gain > build[nd].best_gain + 1e-12 {
                        let threshold = st.last_val + (v - st.last_val) / 2.0;
                        let b = &mut build[nd];
                        b.best_gain = gain;
                        b.best_feature = feature as u32;
                        b.best_threshold = threshold;
                    }
                }
                let st = &mut state[nd];
                st.cnt_left += 1;
                st.sum_left += g[i];
                st.last_val = v;
                st.started = true;
            }
        }

        // Apply the level's splits.
        let level_len = build.len();
        let mut split_children: Vec<Option<(u32, u32)>> = vec![None; level_len];
        for nd in 0..level_len {
            if !build[nd].active || build[nd].best_gain <= 0.0 {
                continue;
            }
            let left = nodes.len() as u32;
            let right = left + 1;
            nodes[nd].feature = build[nd].best_feature;
            nodes[nd].threshold = build[nd].best_threshold;
            nodes[nd].left = left;
            nodes[nd].right = right;
            build[nd].active = false;
            for _ in 0..2 {
                nodes.push(RegNode {
                    feature: 0,
                    threshold: 0.0,
                    left: LEAF,
                    right: LEAF,
                    value: 0.0,
                });
                build.push(BuildNode {
                    sum: 0.0,
                    cnt: 0,
                    best_gain: 0.0,
                    best_feature: 0,
                    best_threshold: 0.0,
                    active: true,
                });
            }
            split_children[nd] = Some((left, right));
        }
        // Non-split active nodes at this level become leaves.
        for nd in 0..level_len {
            if build[nd].active && split_children[nd].is_none() {
                build[nd].active = false;
            }
        }
        // Route samples into the new children and accumulate child stats.
        for i in 0..n {
            let nd = node_of[i] as usize;
            if nd < level_len {
                if let Some((left, right)) = split_children[nd] {
                    let node = &nodes[nd];
                    let child =
                        if x[(i, node.feature as usize)] <= node.threshold {
                            left
                        } else {
                            right
                        };
                    node_of[i] = child;
                    let cb = &mut build[child as usize];
                    cb.sum += g[i];
                    cb.cnt += 1;
                }
            }
        }
        if split_children.iter().all(Option::is_none) {
            break;
        }
    }

    // Newton leaf values: sum(g) / sum(|g| (1 - |g|)), scaled.
    let n_nodes = nodes.len();
    let mut num = vec![0.0; n_nodes];
    let mut den = vec![0.0; n_nodes];
    for i in 0..n {
        let nd = node_of[i] as usize;
        num[nd] += g[i];
        den[nd] += g[i].abs() * (1.0 - g[i].abs());
    }
    for nd in 0..n_nodes {
        if nodes[nd].left == LEAF {
            nodes[nd].value = if den[nd] > 1e-12 {
                learning_rate * newton_factor * num[nd] / den[nd]
            } else {
                0.0
            };
        }
    }

    (RegTree { nodes }, node_of)
}
