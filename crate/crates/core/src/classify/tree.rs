//! Gini-impurity decision tree for classification.
//!
//! Split candidates are midpoints between consecutive distinct values of a
//! feature. The best split is chosen by strict improvement while scanning
//! features in ascending index order and thresholds in ascending value
//! order, so ties always resolve to the lowest feature index and then the
//! lowest threshold. This makes fits bit-reproducible.

use nalgebra::DMatrix;

enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        probs: Vec<f64>,
    },
}

/// A fitted classification tree.
pub struct DecisionTree {
    nodes: Vec<Node>,
    n_classes: usize,
}

impl DecisionTree {
    /// Grows a tree of at most `max_depth` levels with at least `min_leaf`
    /// samples per leaf.
    pub fn fit(
        x: &DMatrix<f64>,
        y: &[usize],
        n_classes: usize,
        max_depth: usize,
        min_leaf: usize,
    ) -> DecisionTree {
        let mut tree = DecisionTree {
            nodes: Vec::new(),
            n_classes,
        };
        let rows: Vec<usize> = (0..x.nrows()).collect();
        tree.grow(x, y, &rows, max_depth, min_leaf.max(1));
        tree
    }

    fn grow(
        &mut self,
        x: &DMatrix<f64>,
        y: &[usize],
        rows: &[usize],
        depth_left: usize,
        min_leaf: usize,
    ) -> usize {
        let counts = class_counts(y, rows, self.n_classes);
        let node_gini = gini(&counts, rows.len());
        let splittable = depth_left > 0 && rows.len() >= 2 * min_leaf && node_gini > 0.0;

        let best = if splittable {
            best_split(x, y, rows, &counts, self.n_classes, min_leaf)
        } else {
            None
        };

        match best {
            Some((feature, threshold)) => {
                let (lhs, rhs): (Vec<usize>, Vec<usize>) =
                    rows.iter().partition(|&&i| x[(i, feature)] <= threshold);
                let id = self.nodes.len();
                self.nodes.push(Node::Leaf { probs: Vec::new() }); // placeholder
                let left = self.grow(x, y, &lhs, depth_left - 1, min_leaf);
                let right = self.grow(x, y, &rhs, depth_left - 1, min_leaf);
                self.nodes[id] = Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                };
                id
            }
            None => {
                let total = rows.len().max(1) as f64;
                let probs = counts.iter().map(|&c| c as f64 / total).collect();
                let id = self.nodes.len();
                self.nodes.push(Node::Leaf { probs });
                id
            }
        }
    }

    /// Leaf class distributions for each query row.
    pub fn score(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(x.nrows(), self.n_classes);
        for i in 0..x.nrows() {
            let mut node = 0usize;
            loop {
                match &self.nodes[node] {
                    Node::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    } => {
                        node = if x[(i, *feature)] <= *threshold {
                            *left
                        } else {
                            *right
                        };
                    }
                    Node::Leaf { probs } => {
                        for (c, &p) in probs.iter().enumerate() {
                            out[(i, c)] = p;
                        }
                        break;
                    }
                }
            }
        }
        out
    }
}

fn class_counts(y: &[usize], rows: &[usize], n_classes: usize) -> Vec<usize> {
    let mut counts = vec![0usize; n_classes];
    for &i in rows {
        counts[y[i]] += 1;
    }
    counts
}

fn gini(counts: &[usize], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    1.0 - counts
        .iter()
        .map(|&c| {
            let p = c as f64 / t;
            p * p
        })
        .sum::<f64>()
}

/// Finds the impurity-minimizing `(feature, threshold)` with deterministic
/// tie-breaking, or `None` when no split strictly reduces impurity while
/// respecting `min_leaf`.
fn best_split(
    x: &DMatrix<f64>,
    y: &[usize],
    rows: &[usize],
    counts: &[usize],
    n_classes: usize,
    min_leaf: usize,
) -> Option<(usize, f64)> {
    let n = rows.len();
    let parent = gini(counts, n) * n as f64;
    let mut best: Option<(f64, usize, f64)> = None; // (weighted impurity, feature, threshold)

    let mut sorted: Vec<(f64, usize)> = Vec::with_capacity(n);
    for feature in 0..x.ncols() {
        sorted.clear();
        sorted.extend(rows.iter().map(|&i| (x[(i, feature)], y[i])));
        sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

        let mut left = vec![0usize; n_classes];
        let mut right = counts.to_vec();
        for split_at in 1..n {
            let (v_prev, c_prev) = sorted[split_at - 1];
            left[c_prev] += 1;
            right[c_prev] -= 1;
            let v_next = sorted[split_at].0;
            if v_next <= v_prev {
                continue; // not a boundary between distinct values
            }
            if split_at < min_leaf || n - split_at < min_leaf {
                continue;
            }
            let weighted = gini(&left, split_at) * split_at as f64
                + gini(&right, n - split_at) * (n - split_at) as f64;
            if weighted + 1e-12 < parent {
                let threshold = v_prev + (v_next - v_prev) / 2.0;
                let better = match best {
                    None => true,
                    Some((b, _, _)) => weighted < b, // strict: ties keep the earlier candidate
                };
                if better {
                    best = Some((weighted, feature, threshold));
                }
            }
        }
    }
    best.map(|(_, f, t)| (f, t))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_node_becomes_leaf() {
        let x = DMatrix::from_row_slice(3, 1, &[0.0, 1.0, 2.0]);
        let tree = DecisionTree::fit(&x, &[0, 0, 0], 1, 5, 1);
        assert_eq!(tree.nodes.len(), 1);
    }

    #[test]
    fn tie_break_prefers_lowest_feature() {
        // Two identical features; both split perfectly. The tree must use
        // feature 0.
        let x = DMatrix::from_row_slice(4, 2, &[0.0, 0.0, 1.0, 1.0, 10.0, 10.0, 11.0, 11.0]);
        let tree = DecisionTree::fit(&x, &[0, 0, 1, 1], 2, 3, 1);
        match &tree.nodes[0] {
            Node::Split { feature, .. } => assert_eq!(*feature, 0),
            Node::Leaf { .. } => panic!("expected a split at the root"),
        }
    }

    #[test]
    fn min_leaf_is_respected() {
        let x = DMatrix::from_row_slice(4, 1, &[0.0, 1.0, 2.0, 3.0]);
        // min_leaf = 2 forbids the 1-vs-3 splits; only the middle remains.
        let tree = DecisionTree::fit(&x, &[0, 0, 1, 1], 2, 5, 2);
        match &tree.nodes[0] {
            Node::Split { threshold, .. } => assert!((*threshold - 1.5).abs() < 1e-12),
            Node::Leaf { .. } => panic!("expected a split"),
        }
    }

    #[test]
    fn depth_zero_returns_prior_leaf() {
        let x = DMatrix::from_row_slice(4, 1, &[0.0, 1.0, 2.0, 3.0]);
        let tree = DecisionTree::fit(&x, &[0, 0, 0, 1], 2, 0, 1);
        let s = tree.score(&x);
        for i in 0..4 {
            assert!((s[(i, 0)] - 0.75).abs() < 1e-12);
            assert!((s[(i, 1)] - 0.25).abs() < 1e-12);
        }
    }
}
