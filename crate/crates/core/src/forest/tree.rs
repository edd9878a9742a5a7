use std::collections::HashMap;

use rand::Rng;

use super::{Dataset, ForestParams};
use crate::error::{Error, Result};
use crate::features::Features;

/// Gini impurity `1 - Σ (c_i / n)^2` of a class-count vector.
pub fn gini(counts: &[u64]) -> Result<f64> {
    let n: u64 = counts.iter().sum();
    if n == 0 {
        return Err(Error::Contract("gini of an empty node".into()));
    }
    let n = n as f64;
    Ok(1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>())
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    /// Samples with `value <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    /// Class counts of the (bootstrap-weighted) training samples reaching
    /// this leaf.
    Leaf { counts: Vec<u32> },
}

/// Axis-aligned binary classification tree. Node 0 is the root and nodes
/// are stored in preorder.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    nodes: Vec<Node>,
    n_classes: usize,
}

impl DecisionTree {
    pub(crate) fn from_nodes(nodes: Vec<Node>, n_classes: usize) -> Result<Self> {
        let tree = DecisionTree { nodes, n_classes };
        tree.check()?;
        Ok(tree)
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    /// The leaf reached by `x`.
    pub fn leaf<F: Features + ?Sized>(&self, x: &F) -> &[u32] {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { counts } => return counts,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x.value(*feature) <= *threshold { *left } else { *right },
            }
        }
    }

    /// Class frequencies at the leaf reached by `x`.
    pub fn predict_proba<F: Features + ?Sized>(&self, x: &F) -> Vec<f64> {
        let counts = self.leaf(x);
        let total: u64 = counts.iter().map(|&c| c as u64).sum();
        counts.iter().map(|&c| c as f64 / total as f64).collect()
    }

    /// Structural validity: children in range and visited once, finite
    /// thresholds, leaves with positive totals.
    fn check(&self) -> Result<()> {
        let corrupt = |m: &str| Err(Error::Validation(format!("invalid tree: {m}")));
        if self.nodes.is_empty() {
            return corrupt("no nodes");
        }
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![0usize];
        while let Some(at) = stack.pop() {
            if std::mem::replace(&mut seen[at], true) {
                return corrupt("node reached twice");
            }
            match &self.nodes[at] {
                Node::Leaf { counts } => {
                    if counts.len() != self.n_classes || counts.iter().all(|&c| c == 0) {
                        return corrupt("bad leaf counts");
                    }
                }
                Node::Split {
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    if !threshold.is_finite() || *left >= self.nodes.len() || *right >= self.nodes.len() {
                        return corrupt("bad split node");
                    }
                    stack.push(*right);
                    stack.push(*left);
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return corrupt("unreachable node");
        }
        Ok(())
    }
}

/// Split quality, compared exactly. Minimizing the weighted child Gini is
/// equivalent to maximizing `A/nL + B/nR` where `A`, `B` are the sums of
/// squared class counts of each child. Stored as a fraction.
#[derive(Debug, Clone, Copy)]
struct Score {
    num: u128,
    den: u128,
}

impl Score {
    fn new(left: &[u64], right: &[u64]) -> Self {
        let sq = |v: &[u64]| v.iter().map(|&c| (c as u128) * (c as u128)).sum::<u128>();
        let nl: u128 = left.iter().map(|&c| c as u128).sum();
        let nr: u128 = right.iter().map(|&c| c as u128).sum();
        Score {
            num: sq(left) * nr + sq(right) * nl,
            den: nl * nr,
        }
    }

    fn better_than(&self, other: &Score) -> bool {
        self.num * other.den > other.num * self.den
    }
}

struct Candidate {
    score: Score,
    feature: usize,
    threshold: f64,
}

/// One sample's value for the feature under evaluation.
struct Entry {
    value: f64,
    class: usize,
    weight: u64,
}

struct Builder<'a> {
    data: &'a Dataset,
    y: &'a [usize],
    weights: &'a [u32],
    n_classes: usize,
    params: &'a ForestParams,
    n_try: usize,
    /// `mark[row] == stamp` flags membership in the node being split.
    mark: Vec<u32>,
    stamp: u32,
}

impl Builder<'_> {
    fn class_counts(&self, rows: &[u32]) -> Vec<u64> {
        let mut counts = vec![0u64; self.n_classes];
        for &r in rows {
            counts[self.y[r as usize]] += self.weights[r as usize] as u64;
        }
        counts
    }

    /// Values of `feature` for the node's rows, with absent entries
    /// folded into one zero group. Returns the nonzero entries and the
    /// zero group's class counts.
    fn gather(&self, feature: usize, rows: &[u32], totals: &[u64]) -> (Vec<Entry>, Vec<u64>) {
        let column = self.data.column(feature);
        let mut entries = Vec::new();
        if rows.len() * 8 < column.len() {
            for &r in rows {
                let v = self.data.get(r as usize, feature);
                if v != 0.0 {
                    entries.push(Entry {
                        value: v,
                        class: self.y[r as usize],
                        weight: self.weights[r as usize] as u64,
                    });
                }
            }
        } else {
            for &(r, v) in column {
                if self.mark[r as usize] == self.stamp {
                    entries.push(Entry {
                        value: v,
                        class: self.y[r as usize],
                        weight: self.weights[r as usize] as u64,
                    });
                }
            }
        }
        let mut zeros = totals.to_vec();
        for e in &entries {
            zeros[e.class] -= e.weight;
        }
        entries.sort_by(|a, b| a.value.total_cmp(&b.value));
        (entries, zeros)
    }

    /// Best threshold for one feature, or `None` if the feature is constant
    /// at this node. The inner option is `None` when no threshold
    /// satisfies the leaf-size limit.
    fn best_threshold(&self, feature: usize, rows: &[u32], totals: &[u64]) -> Option<Option<Candidate>> {
        let (entries, zeros) = self.gather(feature, rows, totals);
        let zero_weight: u64 = zeros.iter().sum();

        // distinct-value groups in ascending order
        let mut groups: Vec<(f64, Vec<u64>)> = Vec::new();
        let push = |value: f64, class: usize, weight: u64, groups: &mut Vec<(f64, Vec<u64>)>| {
            match groups.last_mut() {
                Some((v, counts)) if *v == value => counts[class] += weight,
                _ => {
                    let mut counts = vec![0u64; self.n_classes];
                    counts[class] += weight;
                    groups.push((value, counts));
                }
            }
        };
        let mut zero_done = zero_weight == 0;
        for e in &entries {
            if !zero_done && e.value > 0.0 {
                groups.push((0.0, zeros.clone()));
                zero_done = true;
            }
            push(e.value, e.class, e.weight, &mut groups);
        }
        if !zero_done {
            groups.push((0.0, zeros.clone()));
        }
        if groups.len() < 2 {
            return None;
        }

        let min_leaf = self.params.min_samples_leaf as u64;
        let total: u64 = totals.iter().sum();
        let mut left = vec![0u64; self.n_classes];
        let mut right = totals.to_vec();
        let mut n_left = 0u64;
        let mut best: Option<Candidate> = None;
        for pair in groups.windows(2) {
            let (value, counts) = &pair[0];
            for (c, &k) in counts.iter().enumerate() {
                left[c] += k;
                right[c] -= k;
                n_left += k;
            }
            if n_left < min_leaf || total - n_left < min_leaf {
                continue;
            }
            let next = pair[1].0;
            let mut threshold = (value + next) / 2.0;
            if !threshold.is_finite() {
                threshold = value / 2.0 + next / 2.0;
            }
            if threshold >= next || threshold < *value {
                threshold = *value;
            }
            let score = Score::new(&left, &right);
            if best.as_ref().is_none_or(|b| score.better_than(&b.score)) {
                best = Some(Candidate {
                    score,
                    feature,
                    threshold,
                });
            }
        }
        Some(best)
    }

    fn find_split<R: Rng>(&mut self, rows: &[u32], totals: &[u64], rng: &mut R) -> Option<Candidate> {
        self.stamp += 1;
        for &r in rows {
            self.mark[r as usize] = self.stamp;
        }
        let d = self.data.n_features();
        let mut best: Option<Candidate> = None;
        let consider = |cand: Option<Candidate>, best: &mut Option<Candidate>| {
            if let Some(c) = cand {
                if best.as_ref().is_none_or(|b| c.score.better_than(&b.score)) {
                    *best = Some(c);
                }
            }
        };

        if self.n_try >= d {
            for f in 0..d {
                if let Some(cand) = self.best_threshold(f, rows, totals) {
                    consider(cand, &mut best);
                }
            }
            return best;
        }

        // Draw features without replacement until n_try non-constant ones
        // have been evaluated or all are exhausted (lazy Fisher-Yates).
        let mut swapped: HashMap<usize, usize> = HashMap::new();
        let mut visited = 0usize;
        for i in 0..d {
            if visited >= self.n_try {
                break;
            }
            let j = rng.gen_range(i..d);
            let fj = *swapped.get(&j).unwrap_or(&j);
            let fi = *swapped.get(&i).unwrap_or(&i);
            swapped.insert(j, fi);
            if let Some(cand) = self.best_threshold(fj, rows, totals) {
                visited += 1;
                consider(cand, &mut best);
            }
        }
        best
    }
}

struct Pending {
    rows: Vec<u32>,
    depth: usize,
    /// (parent index, is_left)
    parent: Option<(usize, bool)>,
}

/// Greedy CART-style tree on the rows with positive `weights`.
pub(crate) fn grow_tree<R: Rng>(
    data: &Dataset,
    y: &[usize],
    weights: &[u32],
    n_classes: usize,
    params: &ForestParams,
    rng: &mut R,
) -> Result<DecisionTree> {
    let n_try = params.max_features.resolve(data.n_features());
    let mut builder = Builder {
        data,
        y,
        weights,
        n_classes,
        params,
        n_try,
        mark: vec![0; data.n_rows()],
        stamp: 0,
    };
    let root: Vec<u32> = (0..data.n_rows() as u32).filter(|&r| weights[r as usize] > 0).collect();
    if root.is_empty() {
        return Err(Error::Contract("cannot grow a tree on zero samples".into()));
    }

    let min_leaf = params.min_samples_leaf as u64;
    let mut nodes: Vec<Node> = Vec::new();
    let mut stack = vec![Pending {
        rows: root,
        depth: 0,
        parent: None,
    }];
    while let Some(item) = stack.pop() {
        let id = nodes.len();
        if let Some((parent, is_left)) = item.parent {
            if let Node::Split { left, right, .. } = &mut nodes[parent] {
                if is_left {
                    *left = id;
                } else {
                    *right = id;
                }
            }
        }
        let totals = builder.class_counts(&item.rows);
        let n: u64 = totals.iter().sum();
        let pure = totals.iter().filter(|&&c| c > 0).count() <= 1;
        let depth_ok = params.max_depth.is_none_or(|m| item.depth < m);
        let split = if !pure && depth_ok && n >= 2 * min_leaf {
            builder.find_split(&item.rows, &totals, rng)
        } else {
            None
        };
        match split {
            None => nodes.push(Node::Leaf {
                counts: totals.iter().map(|&c| c as u32).collect(),
            }),
            Some(c) => {
                let (mut left, mut right) = (Vec::new(), Vec::new());
                for &r in &item.rows {
                    if data.get(r as usize, c.feature) <= c.threshold {
                        left.push(r);
                    } else {
                        right.push(r);
                    }
                }
                nodes.push(Node::Split {
                    feature: c.feature,
                    threshold: c.threshold,
                    left: 0,
                    right: 0,
                });
                stack.push(Pending {
                    rows: right,
                    depth: item.depth + 1,
                    parent: Some((id, false)),
                });
                stack.push(Pending {
                    rows: left,
                    depth: item.depth + 1,
                    parent: Some((id, true)),
                });
            }
        }
    }
    DecisionTree::from_nodes(nodes, n_classes)
}
