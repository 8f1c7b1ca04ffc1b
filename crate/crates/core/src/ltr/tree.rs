//! Regression trees grown best-first by variance reduction, with Newton-step
//! leaf values.

use serde::{Deserialize, Serialize};

use super::features::FEATURE_COUNT;

/// Added to every hessian in the leaf-value denominator.
pub const HESSIAN_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeConfig {
    pub max_leaves: usize,
    pub min_instances_per_leaf: usize,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            max_leaves: 8,
            min_instances_per_leaf: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "lowercase")]
pub enum Node {
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        value: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    nodes: Vec<Node>,
}

impl RegressionTree {
    pub fn leaf(value: f64) -> Self {
        RegressionTree {
            nodes: vec![Node::Leaf { value }],
        }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn root(&self) -> &Node {
        &self.nodes[0]
    }

    pub fn predict(&self, x: &[f64; FEATURE_COUNT]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    /// Index of the leaf node `x` falls into.
    pub fn leaf_index(&self, x: &[f64; FEATURE_COUNT]) -> usize {
        let mut at = 0;
        while let Node::Split {
            feature,
            threshold,
            left,
            right,
        } = self.nodes[at]
        {
            at = if x[feature] <= threshold { left } else { right };
        }
        at
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }

    /// Number of splits on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    /// Structural validity: indices in range and every split feature valid.
    pub fn is_well_formed(&self) -> bool {
        self.nodes.iter().all(|n| match *n {
            Node::Leaf { value } => value.is_finite(),
            Node::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                feature < FEATURE_COUNT
                    && threshold.is_finite()
                    && left < self.nodes.len()
                    && right < self.nodes.len()
            }
        })
    }
}

#[derive(Debug, Clone, Copy)]
struct SplitCandidate {
    gain: f64,
    feature: usize,
    threshold: f64,
}

struct Grower<'a> {
    rows: &'a [[f64; FEATURE_COUNT]],
    targets: &'a [f64],
    /// Row indices per feature, ascending by feature value then row index.
    presorted: Vec<Vec<usize>>,
    /// Node each row currently sits in.
    node_of: Vec<usize>,
    min_leaf: usize,
}

impl Grower<'_> {
    fn best_split(&self, node: usize) -> Option<SplitCandidate> {
        let (mut count, mut sum, mut sumsq) = (0usize, 0.0f64, 0.0f64);
        for (i, &t) in self.targets.iter().enumerate() {
            if self.node_of[i] == node {
                count += 1;
                sum += t;
                sumsq += t * t;
            }
        }
        if count < 2 * self.min_leaf {
            return None;
        }
        let parent = sum * sum / count as f64;
        let min_gain = 1e-12 * sumsq;

        let mut best: Option<SplitCandidate> = None;
        let mut members = Vec::with_capacity(count);
        for feature in 0..FEATURE_COUNT {
            members.clear();
            members.extend(
                self.presorted[feature]
                    .iter()
                    .copied()
                    .filter(|&i| self.node_of[i] == node),
            );
            let mut left_sum = 0.0;
            for (k, pair) in members.windows(2).enumerate() {
                left_sum += self.targets[pair[0]];
                let left_n = k + 1;
                let right_n = count - left_n;
                let (a, b) = (self.rows[pair[0]][feature], self.rows[pair[1]][feature]);
                if a >= b || left_n < self.min_leaf || right_n < self.min_leaf {
                    continue;
                }
                let right_sum = sum - left_sum;
                let gain = left_sum * left_sum / left_n as f64
                    + right_sum * right_sum / right_n as f64
                    - parent;
                if gain > min_gain && best.is_none_or(|b| gain > b.gain) {
                    let mid = a + (b - a) / 2.0;
                    let threshold = if mid < b { mid } else { a };
                    best = Some(SplitCandidate {
                        gain,
                        feature,
                        threshold,
                    });
                }
            }
        }
        best
    }
}

/// Fits a tree to `targets`, splitting best-first on variance reduction until
/// `max_leaves` leaves exist or no split improves. Leaf value is
/// Σ target / Σ (hessian + ε) over the leaf's rows. Ties prefer the lowest
/// feature index, then the lowest threshold, then the earliest leaf.
pub fn fit_regression_tree(
    rows: &[[f64; FEATURE_COUNT]],
    targets: &[f64],
    hessians: &[f64],
    config: &TreeConfig,
) -> RegressionTree {
    assert_eq!(rows.len(), targets.len());
    assert_eq!(rows.len(), hessians.len());

    let presorted = (0..FEATURE_COUNT)
        .map(|f| {
            let mut idx: Vec<usize> = (0..rows.len()).collect();
            idx.sort_by(|&a, &b| rows[a][f].total_cmp(&rows[b][f]).then(a.cmp(&b)));
            idx
        })
        .collect();
    let mut grower = Grower {
        rows,
        targets,
        presorted,
        node_of: vec![0; rows.len()],
        min_leaf: config.min_instances_per_leaf.max(1),
    };

    let mut nodes = vec![Node::Leaf { value: 0.0 }];
    let mut open: Vec<(usize, Option<SplitCandidate>)> = vec![(0, grower.best_split(0))];
    let mut leaves = 1;
    while leaves < config.max_leaves {
        let mut pick: Option<(usize, SplitCandidate)> = None;
        for (slot, (_, cand)) in open.iter().enumerate() {
            if let Some(c) = cand {
                if pick.is_none_or(|(_, p)| c.gain > p.gain) {
                    pick = Some((slot, *c));
                }
            }
        }
        let Some((slot, split)) = pick else { break };
        let (node, _) = open.remove(slot);

        let left = nodes.len();
        let right = left + 1;
        nodes.push(Node::Leaf { value: 0.0 });
        nodes.push(Node::Leaf { value: 0.0 });
        nodes[node] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        for (i, row) in rows.iter().enumerate() {
            if grower.node_of[i] == node {
                grower.node_of[i] = if row[split.feature] <= split.threshold {
                    left
                } else {
                    right
                };
            }
        }
        leaves += 1;
        let left_best = grower.best_split(left);
        let right_best = grower.best_split(right);
        open.push((left, left_best));
        open.push((right, right_best));
    }

    let mut num = vec![0.0; nodes.len()];
    let mut den = vec![0.0; nodes.len()];
    for (i, &node) in grower.node_of.iter().enumerate() {
        num[node] += targets[i];
        den[node] += hessians[i] + HESSIAN_EPSILON;
    }
    for (id, node) in nodes.iter_mut().enumerate() {
        if let Node::Leaf { value } = node {
            *value = if den[id] > 0.0 {
                num[id] / den[id]
            } else {
                0.0
            };
        }
    }
    RegressionTree { nodes }
}
