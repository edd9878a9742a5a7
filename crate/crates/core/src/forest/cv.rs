use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{derive_seed, train_forest, Dataset, ForestParams};
use crate::error::{Error, Result};
use crate::metrics::ConfusionMatrix;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Splits `0..n` into `k` folds whose test sets partition the indices and
/// differ in size by at most one.
///
/// With `stratified`, each class's members are spread so per-class counts
/// across test folds also differ by at most one. `y` is required then.
/// Index lists are sorted ascending.
pub fn kfold(n: usize, k: usize, y: Option<&[usize]>, seed: u64, stratified: bool) -> Result<Vec<Fold>> {
    if k < 2 {
        return Err(Error::Contract(format!("k = {k}, need at least 2 folds")));
    }
    if k > n {
        return Err(Error::Contract(format!("k = {k} exceeds the {n} available samples")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let order: Vec<usize> = if stratified {
        let y = y.ok_or_else(|| Error::Contract("stratified folds need labels".into()))?;
        if y.len() != n {
            return Err(Error::Contract(format!("{} labels for {n} samples", y.len())));
        }
        let n_classes = y.iter().max().map_or(0, |m| m + 1);
        let mut order = Vec::with_capacity(n);
        for c in 0..n_classes {
            let mut members: Vec<usize> = (0..n).filter(|&i| y[i] == c).collect();
            members.shuffle(&mut rng);
            order.extend(members);
        }
        order
    } else {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        order
    };

    // Position j goes to fold j % k: contiguous class runs then spread
    // evenly, and fold sizes differ by at most one.
    let mut tests = vec![Vec::new(); k];
    for (j, &i) in order.iter().enumerate() {
        tests[j % k].push(i);
    }
    Ok(tests
        .into_iter()
        .map(|mut test| {
            test.sort_unstable();
            let mut in_test = vec![false; n];
            test.iter().for_each(|&i| in_test[i] = true);
            let train = (0..n).filter(|&i| !in_test[i]).collect();
            Fold { train, test }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    /// Macro-F1 of each fold, in fold order.
    pub folds: Vec<f64>,
    pub mean: f64,
    /// Population standard deviation of the fold scores.
    pub std: f64,
}

impl CvResult {
    pub fn from_folds(folds: Vec<f64>) -> Self {
        let n = folds.len() as f64;
        let mean = folds.iter().sum::<f64>() / n;
        let var = folds.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / n;
        CvResult {
            folds,
            mean,
            std: var.sqrt(),
        }
    }
}

/// Stratified k-fold cross-validation of a forest. Fold assignment is keyed
/// by `seed`; the forest for fold `i` uses a seed derived from
/// `(params.seed, i)`.
pub fn cross_validate(
    data: &Dataset,
    y: &[usize],
    classes: &[String],
    params: &ForestParams,
    k: usize,
    seed: u64,
) -> Result<CvResult> {
    params.validate()?;
    if data.n_rows() != y.len() {
        return Err(Error::Contract(format!("{} rows but {} labels", data.n_rows(), y.len())));
    }
    let folds = kfold(y.len(), k, Some(y), seed, true)?;
    let scores = folds
        .par_iter()
        .enumerate()
        .map(|(i, fold)| {
            let train = data.select(&fold.train);
            let y_train: Vec<usize> = fold.train.iter().map(|&j| y[j]).collect();
            let fold_params = ForestParams {
                seed: derive_seed(params.seed, i as u64),
                ..params.clone()
            };
            let model = train_forest(&train, &y_train, classes, &fold_params)?;
            let test = data.select(&fold.test);
            let pred = model.predict_dataset(&test)?;
            let truth: Vec<usize> = fold.test.iter().map(|&j| y[j]).collect();
            Ok(ConfusionMatrix::from_indices(classes, &truth, &pred)?.scores().macro_f1)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(CvResult::from_folds(scores))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSearch {
    pub best: usize,
    pub results: Vec<CvResult>,
}

impl GridSearch {
    /// Grid indices ordered by mean macro-F1, best first; ties keep grid
    /// order.
    pub fn ranking(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.results.len()).collect();
        idx.sort_by(|&a, &b| self.results[b].mean.total_cmp(&self.results[a].mean));
        idx
    }
}

/// Cross-validates every grid point on the same folds. The best point has
/// the highest mean macro-F1; the earliest wins ties.
pub fn grid_search(
    grid: &[ForestParams],
    data: &Dataset,
    y: &[usize],
    classes: &[String],
    k: usize,
    seed: u64,
) -> Result<GridSearch> {
    if grid.is_empty() {
        return Err(Error::Contract("empty parameter grid".into()));
    }
    let mut results: Vec<CvResult> = Vec::with_capacity(grid.len());
    let mut best = 0;
    for (i, params) in grid.iter().enumerate() {
        let r = cross_validate(data, y, classes, params, k, seed)?;
        if i > 0 && r.mean > results[best].mean {
            best = i;
        }
        results.push(r);
    }
    Ok(GridSearch { best, results })
}
