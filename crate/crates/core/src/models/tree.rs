use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use super::{check_xy, ModelError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    Leaf {
        value: f64,
    },
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Least-squares regression tree; `nodes[0]` is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTreeRegressor {
    pub max_depth: usize,
    pub max_leaf_nodes: usize,
    pub nodes: Vec<TreeNode>,
}

impl DecisionTreeRegressor {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                TreeNode::Leaf { value } => return value,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if row[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn predict(&self, x: ArrayView2<f64>) -> Vec<f64> {
        x.outer_iter()
            .map(|r| self.predict_row(r.as_slice().expect("contiguous")))
            .collect()
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, TreeNode::Leaf { .. }))
            .count()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], i: usize) -> usize {
            match nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

/// Per-feature row orderings (by value, then row index), shared across the
/// trees of a boosting run.
#[derive(Debug, Clone)]
pub(crate) struct Presorted {
    order: Vec<Vec<usize>>,
}

impl Presorted {
    pub(crate) fn new(x: ArrayView2<f64>) -> Self {
        let order = (0..x.ncols())
            .map(|f| {
                let mut idx: Vec<usize> = (0..x.nrows()).collect();
                idx.sort_by(|&a, &b| x[[a, f]].total_cmp(&x[[b, f]]).then(a.cmp(&b)));
                idx
            })
            .collect();
        Self { order }
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    feature: usize,
    threshold: f64,
    gain: f64,
    left_count: usize,
}

struct OpenLeaf {
    node: usize,
    depth: usize,
    members: Vec<Vec<usize>>,
    split: Option<Candidate>,
}

fn midpoint(lo: f64, hi: f64) -> f64 {
    let m = lo + (hi - lo) / 2.0;
    if m < hi {
        m
    } else {
        lo
    }
}

/// Best squared-error split of a node. Candidates are scanned by feature,
/// then threshold, ascending; only a strictly larger gain replaces the
/// incumbent.
fn best_split(x: ArrayView2<f64>, y: &[f64], members: &[Vec<usize>]) -> Option<Candidate> {
    let n = members[0].len();
    if n < 2 {
        return None;
    }
    let first = y[members[0][0]];
    if members[0].iter().all(|&i| y[i] == first) {
        return None;
    }
    let mean = members[0].iter().map(|&i| y[i]).sum::<f64>() / n as f64;
    let sse: f64 = members[0].iter().map(|&i| (y[i] - mean) * (y[i] - mean)).sum();
    let total: f64 = members[0].iter().map(|&i| y[i] - mean).sum();
    let parent = total * total / n as f64;

    let mut best: Option<Candidate> = None;
    for (f, idx) in members.iter().enumerate() {
        let mut left_sum = 0.0;
        for pos in 0..n - 1 {
            left_sum += y[idx[pos]] - mean;
            let (lo, hi) = (x[[idx[pos], f]], x[[idx[pos + 1], f]]);
            if lo == hi {
                continue;
            }
            let nl = (pos + 1) as f64;
            let nr = (n - pos - 1) as f64;
            let right_sum = total - left_sum;
            let gain = left_sum * left_sum / nl + right_sum * right_sum / nr - parent;
            if best.is_none_or(|b| gain > b.gain) {
                best = Some(Candidate {
                    feature: f,
                    threshold: midpoint(lo, hi),
                    gain,
                    left_count: pos + 1,
                });
            }
        }
    }
    best.filter(|b| b.gain > 1e-12 * sse)
}

pub(crate) fn fit_tree_presorted(
    x: ArrayView2<f64>,
    presorted: &Presorted,
    y: &[f64],
    max_depth: usize,
    max_leaf_nodes: usize,
) -> DecisionTreeRegressor {
    let leaf_value = |members: &[Vec<usize>]| {
        let idx = &members[0];
        if idx.iter().all(|&i| y[i] == y[idx[0]]) {
            return y[idx[0]];
        }
        idx.iter().map(|&i| y[i]).sum::<f64>() / idx.len() as f64
    };
    let root_members = presorted.order.clone();
    let mut nodes = vec![TreeNode::Leaf {
        value: leaf_value(&root_members),
    }];
    let splittable = |depth: usize| depth < max_depth;
    let root_split = if splittable(0) {
        best_split(x, y, &root_members)
    } else {
        None
    };
    let mut open = vec![OpenLeaf {
        node: 0,
        depth: 0,
        members: root_members,
        split: root_split,
    }];
    let mut goes_left = vec![false; x.nrows()];
    let mut leaves = 1;

    while leaves < max_leaf_nodes {
        // Highest gain first; ties to the earliest-created leaf.
        let Some(pos) = open
            .iter()
            .enumerate()
            .filter_map(|(p, l)| l.split.map(|s| (p, s.gain, l.node)))
            .fold(None, |best: Option<(usize, f64, usize)>, cur| match best {
                Some(b) if b.1 > cur.1 || (b.1 == cur.1 && b.2 < cur.2) => Some(b),
                _ => Some(cur),
            })
            .map(|(p, _, _)| p)
        else {
            break;
        };
        let leaf = open.swap_remove(pos);
        let split = leaf.split.expect("filtered");

        let split_order = &leaf.members[split.feature];
        for &i in &split_order[..split.left_count] {
            goes_left[i] = true;
        }
        let (left_members, right_members): (Vec<Vec<usize>>, Vec<Vec<usize>>) = leaf
            .members
            .iter()
            .map(|idx| idx.iter().partition(|&&i| goes_left[i]))
            .unzip();
        for &i in &split_order[..split.left_count] {
            goes_left[i] = false;
        }

        let left = nodes.len();
        let right = left + 1;
        nodes.push(TreeNode::Leaf {
            value: leaf_value(&left_members),
        });
        nodes.push(TreeNode::Leaf {
            value: leaf_value(&right_members),
        });
        nodes[leaf.node] = TreeNode::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        leaves += 1;
        let depth = leaf.depth + 1;
        for (node, members) in [(left, left_members), (right, right_members)] {
            let split = if splittable(depth) {
                best_split(x, y, &members)
            } else {
                None
            };
            open.push(OpenLeaf {
                node,
                depth,
                members,
                split,
            });
        }
    }

    DecisionTreeRegressor {
        max_depth,
        max_leaf_nodes,
        nodes,
    }
}

/// Fits a regression tree by best-first growth: the leaf whose best split
/// removes the most squared error is split next, until `max_leaf_nodes`
/// leaves exist or no split strictly reduces the error. Nodes at depth
/// `max_depth` are not split.
pub fn fit_tree(
    x: ArrayView2<f64>,
    y: &[f64],
    max_depth: usize,
    max_leaf_nodes: usize,
) -> Result<DecisionTreeRegressor> {
    check_xy(&x, y)?;
    if max_depth == 0 || max_leaf_nodes == 0 {
        return Err(ModelError::InvalidParameter(
            "max_depth and max_leaf_nodes must be at least 1".into(),
        ));
    }
    let x = x.as_standard_layout();
    let presorted = Presorted::new(x.view());
    Ok(fit_tree_presorted(x.view(), &presorted, y, max_depth, max_leaf_nodes))
}
