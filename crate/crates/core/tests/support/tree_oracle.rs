//! Exhaustive-split oracle for single decision trees.
//!
//! The oracle enumerates every (feature, threshold) pair at every node and
//! scores it with exact rational Gini impurity, so it shares no code with
//! the incremental split search in the library.

use num_rational::Ratio;
use offense_core::forest::{train_tree, Dataset, ForestParams, MaxFeatures, Node};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Q = Ratio<i64>;

#[allow(dead_code)]
#[derive(Debug, Clone, PartialEq)]
pub enum OracleStep {
    Split(usize, f64),
    Leaf,
}

fn gini(labels: &[usize], n_classes: usize) -> Q {
    let n = labels.len() as i64;
    let mut sum = Q::from_integer(0);
    for c in 0..n_classes {
        let k = labels.iter().filter(|&&l| l == c).count() as i64;
        let p = Q::new(k, n);
        sum += p * p;
    }
    Q::from_integer(1) - sum
}

struct Limits {
    max_depth: Option<usize>,
    min_leaf: usize,
}

#[allow(clippy::needless_range_loop)]
fn oracle(
    x: &[Vec<f64>],
    y: &[usize],
    rows: &[usize],
    depth: usize,
    n_classes: usize,
    limits: &Limits,
    out: &mut Vec<OracleStep>,
) {
    let labels: Vec<usize> = rows.iter().map(|&r| y[r]).collect();
    let pure = labels.iter().all(|&l| l == labels[0]);
    let depth_ok = limits.max_depth.is_none_or(|d| depth < d);
    if pure || !depth_ok || rows.len() < 2 * limits.min_leaf {
        out.push(OracleStep::Leaf);
        return;
    }
    let n = rows.len() as i64;
    let mut best: Option<(Q, usize, f64)> = None;
    for f in 0..x[0].len() {
        let mut values: Vec<f64> = rows.iter().map(|&r| x[r][f]).collect();
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        values.dedup();
        for w in values.windows(2) {
            let t = (w[0] + w[1]) / 2.0;
            let left: Vec<usize> = rows.iter().filter(|&&r| x[r][f] <= t).map(|&r| y[r]).collect();
            let right: Vec<usize> = rows.iter().filter(|&&r| x[r][f] > t).map(|&r| y[r]).collect();
            if left.len() < limits.min_leaf || right.len() < limits.min_leaf {
                continue;
            }
            let imp = Q::new(left.len() as i64, n) * gini(&left, n_classes)
                + Q::new(right.len() as i64, n) * gini(&right, n_classes);
            if best.as_ref().is_none_or(|(b, _, _)| imp < *b) {
                best = Some((imp, f, t));
            }
        }
    }
    match best {
        None => out.push(OracleStep::Leaf),
        Some((_, f, t)) => {
            out.push(OracleStep::Split(f, t));
            let left: Vec<usize> = rows.iter().copied().filter(|&r| x[r][f] <= t).collect();
            let right: Vec<usize> = rows.iter().copied().filter(|&r| x[r][f] > t).collect();
            oracle(x, y, &left, depth + 1, n_classes, limits, out);
            oracle(x, y, &right, depth + 1, n_classes, limits, out);
        }
    }
}

/// Preorder split sequence chosen by exhaustive search.
pub fn oracle_tree(
    x: &[Vec<f64>],
    y: &[usize],
    n_classes: usize,
    max_depth: Option<usize>,
    min_leaf: usize,
) -> Vec<OracleStep> {
    let rows: Vec<usize> = (0..x.len()).collect();
    let mut out = Vec::new();
    let limits = Limits { max_depth, min_leaf };
    oracle(x, y, &rows, 0, n_classes, &limits, &mut out);
    out
}

fn tree_steps(nodes: &[Node], at: usize, out: &mut Vec<OracleStep>) {
    match &nodes[at] {
        Node::Leaf { .. } => out.push(OracleStep::Leaf),
        Node::Split {
            feature,
            threshold,
            left,
            right,
        } => {
            out.push(OracleStep::Split(*feature, *threshold));
            tree_steps(nodes, *left, out);
            tree_steps(nodes, *right, out);
        }
    }
}

fn random_case(rng: &mut ChaCha8Rng) -> (Vec<Vec<f64>>, Vec<usize>, usize, Option<usize>, usize) {
    let n = rng.gen_range(1..=16);
    let d = rng.gen_range(1..=3);
    let n_classes = rng.gen_range(2..=3);
    let levels = rng.gen_range(2..=6);
    let x: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|_| rng.gen_range(0..levels) as f64 * 0.5 - 1.0).collect())
        .collect();
    let y: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n_classes)).collect();
    let max_depth = match rng.gen_range(0..4) {
        0 => None,
        k => Some(k),
    };
    let min_leaf = rng.gen_range(1..=3);
    (x, y, n_classes, max_depth, min_leaf)
}

pub fn check(x: &[Vec<f64>], y: &[usize], n_classes: usize, max_depth: Option<usize>, min_leaf: usize) -> bool {
    let params = ForestParams {
        max_depth,
        min_samples_leaf: min_leaf,
        max_features: MaxFeatures::All,
        ..ForestParams::default()
    };
    let data = Dataset::from_rows(x).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let tree = train_tree(&data, y, n_classes, &params, &mut rng).unwrap();
    let mut got = Vec::new();
    tree_steps(tree.nodes(), 0, &mut got);
    let want = oracle_tree(x, y, n_classes, max_depth, min_leaf);
    if got != want {
        eprintln!("mismatch\n x={x:?}\n y={y:?}\n depth={max_depth:?} leaf={min_leaf}\n got={got:?}\n want={want:?}");
    }
    got == want
}

/// Trains a tree on each of `count` random small datasets drawn from
/// `seed` and returns how many disagree with the oracle.
pub fn random_sweep(seed: u64, count: usize) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mismatches = 0;
    for _ in 0..count {
        let (x, y, k, depth, leaf) = random_case(&mut rng);
        if !check(&x, &y, k, depth, leaf) {
            mismatches += 1;
        }
    }
    mismatches
}
