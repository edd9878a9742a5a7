//! Decision trees and random forests with bootstrap bagging, plus
//! stratified k-fold cross-validation and grid search.
//!
//! Every source of randomness is keyed by the forest seed: tree `i` draws
//! from ChaCha8 stream `i` of that seed, so a forest is bit-identical no
//! matter how many threads train it.

mod cv;
mod io;
mod tree;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub use cv::{cross_validate, grid_search, kfold, CvResult, Fold, GridSearch};
pub use io::{load_model, save_model, MODEL_MAGIC, MODEL_VERSION};
pub use tree::{gini, DecisionTree, Node};

use crate::error::{Error, Result};
use crate::features::Features;

/// Number of features examined per split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MaxFeatures {
    Sqrt,
    All,
    /// Fraction of all features, in (0, 1].
    Fraction(f64),
}

impl MaxFeatures {
    pub fn resolve(self, n_features: usize) -> usize {
        let k = match self {
            MaxFeatures::Sqrt => (n_features as f64).sqrt() as usize,
            MaxFeatures::All => n_features,
            MaxFeatures::Fraction(f) => (f * n_features as f64) as usize,
        };
        k.clamp(1, n_features.max(1))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub max_features: MaxFeatures,
    pub seed: u64,
    /// Train each tree on a bootstrap sample. Disabling it makes every tree
    /// see the full training set.
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            max_depth: None,
            min_samples_leaf: 1,
            max_features: MaxFeatures::Sqrt,
            seed: 0,
            bootstrap: true,
        }
    }
}

impl ForestParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::Contract("n_trees must be at least 1".into()));
        }
        if self.min_samples_leaf == 0 {
            return Err(Error::Contract("min_samples_leaf must be at least 1".into()));
        }
        if self.max_depth == Some(0) {
            return Err(Error::Contract("max_depth must be at least 1".into()));
        }
        if let MaxFeatures::Fraction(f) = self.max_features {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::Contract(format!("max_features fraction {f} outside (0, 1]")));
            }
        }
        Ok(())
    }
}

/// Training matrix stored both row-wise and column-wise. Only nonzero
/// values are kept; absent entries read as 0.0.
#[derive(Debug, Clone)]
pub struct Dataset {
    n_features: usize,
    rows: Vec<Vec<(u32, f64)>>,
    columns: Vec<Vec<(u32, f64)>>,
}

impl Dataset {
    pub fn from_rows<F: Features>(rows: &[F]) -> Result<Self> {
        let n_features = rows.first().map_or(0, |r| r.dim());
        let mut stored = Vec::with_capacity(rows.len());
        let mut columns = vec![Vec::new(); n_features];
        for (r, row) in rows.iter().enumerate() {
            if row.dim() != n_features {
                return Err(Error::Contract(format!(
                    "row {r} has {} features, expected {n_features}",
                    row.dim()
                )));
            }
            let mut entries = Vec::new();
            for (f, v) in row.nonzeros() {
                if !v.is_finite() {
                    return Err(Error::Contract(format!("non-finite value at row {r}, feature {f}")));
                }
                if v != 0.0 {
                    entries.push((f as u32, v));
                    columns[f].push((r as u32, v));
                }
            }
            stored.push(entries);
        }
        Ok(Dataset {
            n_features,
            rows: stored,
            columns,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn get(&self, row: usize, feature: usize) -> f64 {
        let r = &self.rows[row];
        match r.binary_search_by_key(&(feature as u32), |&(f, _)| f) {
            Ok(i) => r[i].1,
            Err(_) => 0.0,
        }
    }

    pub(crate) fn column(&self, feature: usize) -> &[(u32, f64)] {
        &self.columns[feature]
    }

    /// Subset of rows, in the given order.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        let rows: Vec<Vec<(u32, f64)>> = indices.iter().map(|&i| self.rows[i].clone()).collect();
        let mut columns = vec![Vec::new(); self.n_features];
        for (r, row) in rows.iter().enumerate() {
            for &(f, v) in row {
                columns[f as usize].push((r as u32, v));
            }
        }
        Dataset {
            n_features: self.n_features,
            rows,
            columns,
        }
    }

    /// Row `i` as a dense vector.
    pub fn dense_row(&self, i: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.n_features];
        for &(f, v) in &self.rows[i] {
            out[f as usize] = v;
        }
        out
    }
}

impl Features for (&Dataset, usize) {
    fn dim(&self) -> usize {
        self.0.n_features
    }

    fn value(&self, index: usize) -> f64 {
        self.0.get(self.1, index)
    }

    fn nonzeros(&self) -> Vec<(usize, f64)> {
        self.0.rows[self.1].iter().map(|&(f, v)| (f as usize, v)).collect()
    }
}

fn check_inputs(data: &Dataset, y: &[usize], n_classes: usize) -> Result<()> {
    if data.n_rows() == 0 {
        return Err(Error::Contract("empty training set".into()));
    }
    if data.n_rows() != y.len() {
        return Err(Error::Contract(format!(
            "{} rows but {} labels",
            data.n_rows(),
            y.len()
        )));
    }
    if n_classes == 0 || y.iter().any(|&c| c >= n_classes) {
        return Err(Error::Contract("label index out of range".into()));
    }
    Ok(())
}

/// Grows one tree on all rows of `data`. `y` holds class indices below
/// `n_classes`. Feature subsets are drawn from `rng`.
pub fn train_tree<R: Rng>(
    data: &Dataset,
    y: &[usize],
    n_classes: usize,
    params: &ForestParams,
    rng: &mut R,
) -> Result<DecisionTree> {
    params.validate()?;
    check_inputs(data, y, n_classes)?;
    let weights = vec![1u32; data.n_rows()];
    tree::grow_tree(data, y, &weights, n_classes, params, rng)
}

/// Rng for tree `index` of a forest seeded with `seed`.
pub fn tree_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// SplitMix64 finalizer; derives independent seeds from (seed, index).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomForest {
    trees: Vec<DecisionTree>,
    params: ForestParams,
    classes: Vec<String>,
    n_features: usize,
}

/// Trains `params.n_trees` trees in parallel on the current rayon pool.
pub fn train_forest(
    data: &Dataset,
    y: &[usize],
    classes: &[String],
    params: &ForestParams,
) -> Result<RandomForest> {
    params.validate()?;
    check_inputs(data, y, classes.len())?;
    let n = data.n_rows();
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = tree_rng(params.seed, t as u64);
            let weights = if params.bootstrap {
                bootstrap_weights(n, &mut rng)
            } else {
                vec![1u32; n]
            };
            tree::grow_tree(data, y, &weights, classes.len(), params, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RandomForest {
        trees,
        params: params.clone(),
        classes: classes.to_vec(),
        n_features: data.n_features(),
    })
}

/// Multiplicity of each row in a size-`n` sample drawn with replacement.
pub fn bootstrap_weights<R: Rng>(n: usize, rng: &mut R) -> Vec<u32> {
    let mut w = vec![0u32; n];
    for _ in 0..n {
        w[rng.gen_range(0..n)] += 1;
    }
    w
}

impl RandomForest {
    pub(crate) fn from_parts(
        trees: Vec<DecisionTree>,
        params: ForestParams,
        classes: Vec<String>,
        n_features: usize,
    ) -> Result<Self> {
        if trees.len() != params.n_trees || trees.iter().any(|t| t.n_classes() != classes.len()) {
            return Err(Error::Validation("forest trees disagree with params or classes".into()));
        }
        Ok(RandomForest {
            trees,
            params,
            classes,
            n_features,
        })
    }

    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }

    pub fn params(&self) -> &ForestParams {
        &self.params
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// Mean of the per-tree leaf class frequencies.
    pub fn predict_proba<F: Features + ?Sized>(&self, x: &F) -> Result<Vec<f64>> {
        if x.dim() != self.n_features {
            return Err(Error::Contract(format!(
                "input has {} features, model expects {}",
                x.dim(),
                self.n_features
            )));
        }
        let mut proba = vec![0.0; self.classes.len()];
        for tree in &self.trees {
            for (p, q) in proba.iter_mut().zip(tree.predict_proba(x)) {
                *p += q;
            }
        }
        let n = self.trees.len() as f64;
        proba.iter_mut().for_each(|p| *p /= n);
        Ok(proba)
    }

    /// Index into [`classes`](Self::classes) of the most probable class;
    /// ties go to the lowest index.
    pub fn predict_index<F: Features + ?Sized>(&self, x: &F) -> Result<usize> {
        Ok(argmax(&self.predict_proba(x)?))
    }

    pub fn predict<F: Features + ?Sized>(&self, x: &F) -> Result<&str> {
        let i = self.predict_index(x)?;
        Ok(&self.classes[i])
    }

    /// Predicted class index for every row of `data`.
    pub fn predict_dataset(&self, data: &Dataset) -> Result<Vec<usize>> {
        (0..data.n_rows())
            .into_par_iter()
            .map(|i| self.predict_index(&(data, i)))
            .collect()
    }
}

/// First index of the maximum.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}
