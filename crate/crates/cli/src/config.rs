//! Flat `key = value` experiment configs with dotted keys.
//!
//! Relative paths resolve against the config file's directory. Keys under
//! `manifest.` and `result.` are skipped, so a run manifest can be fed back
//! in as a config.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use offense_core::balance::BalancePlan;
use offense_core::corpus::Level;
use offense_core::forest::{ForestParams, MaxFeatures};
use offense_core::textprep::{EmojiAggregate, EmojiMode, PrepConfig};

use crate::{read_file, CliError, Result};

const PATH_KEYS: [&str; 6] = ["corpus", "pool", "weak_labels", "stoplist", "abusive_lexicon", "emoji_lexicon"];

/// Parses `key = value` lines. `#` starts a comment line.
pub fn parse_kv(text: &str) -> Result<Vec<(String, String)>> {
    let mut out: Vec<(String, String)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Invalid(format!("config line {}: expected key = value", i + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(CliError::Invalid(format!("config line {}: empty key", i + 1)));
        }
        if out.iter().any(|(seen, _)| seen == k) {
            return Err(CliError::Invalid(format!("config line {}: duplicate key `{k}`", i + 1)));
        }
        out.push((k.to_string(), v.to_string()));
    }
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Paths {
    pub corpus: Option<PathBuf>,
    pub pool: Option<PathBuf>,
    pub weak_labels: Option<PathBuf>,
    pub stoplist: Option<PathBuf>,
    pub abusive_lexicon: Option<PathBuf>,
    pub emoji_lexicon: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub paths: Paths,
    /// Stemmer language; `none` disables stemming even when `prep.stem` is on.
    pub language: String,
    pub prep: PrepConfig,
    pub min_df: usize,
    pub ngram: usize,
    pub forest: ForestParams,
    pub grid: Vec<ForestParams>,
    pub cv_k: usize,
    pub level: Level,
    pub out: PathBuf,
    pub balance: Option<BalancePlan>,
    /// `external.*` entries: hyperparameters of models trained elsewhere,
    /// copied verbatim into manifests.
    pub external: Vec<(String, String)>,
    snapshot: BTreeMap<String, String>,
}

fn invalid(key: &str, value: &str, want: &str) -> CliError {
    CliError::Invalid(format!("`{key}`: expected {want}, got `{value}`"))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(invalid(key, v, "true or false")),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| invalid(key, v, "a non-negative integer"))
}

fn parse_depth(key: &str, v: &str) -> Result<Option<usize>> {
    if v == "none" {
        Ok(None)
    } else {
        parse_num(key, v).map(Some)
    }
}

fn parse_max_features(key: &str, v: &str) -> Result<MaxFeatures> {
    match v {
        "sqrt" => Ok(MaxFeatures::Sqrt),
        "all" => Ok(MaxFeatures::All),
        _ => v
            .parse::<f64>()
            .map(MaxFeatures::Fraction)
            .map_err(|_| invalid(key, v, "sqrt, all or a fraction")),
    }
}

pub fn max_features_str(m: MaxFeatures) -> String {
    match m {
        MaxFeatures::Sqrt => "sqrt".into(),
        MaxFeatures::All => "all".into(),
        MaxFeatures::Fraction(f) => f.to_string(),
    }
}

pub fn depth_str(d: Option<usize>) -> String {
    d.map_or("none".into(), |d| d.to_string())
}

fn list<T>(key: &str, v: &str, item: impl Fn(&str, &str) -> Result<T>) -> Result<Vec<T>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| item(key, s))
        .collect()
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = read_file(path)?;
        let text = String::from_utf8(bytes)
            .map_err(|_| CliError::Invalid(format!("{}: config is not UTF-8", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let entries = parse_kv(text)?;
        let resolve = |v: &str| -> Result<PathBuf> {
            std::path::absolute(base_dir.join(v))
                .map_err(|e| CliError::Env(format!("cannot resolve path `{v}`: {e}")))
        };

        let mut seed = None;
        let mut paths = Paths::default();
        let mut language = "none".to_string();
        let mut prep = PrepConfig::default();
        let mut min_df = 2;
        let mut ngram = 1;
        let mut forest = ForestParams::default();
        let mut grid_trees = vec![100, 300];
        let mut grid_depth = vec![None, Some(16)];
        let mut grid_leaf = vec![1, 3];
        let mut grid_features: Option<Vec<MaxFeatures>> = None;
        let mut cv_k = 10;
        let mut level = Level::A;
        let mut out = resolve("out")?;
        let mut balance_pairs = Vec::new();
        let mut external = Vec::new();
        let mut snapshot = BTreeMap::new();

        for (k, v) in &entries {
            let key = k.as_str();
            if key.starts_with("manifest.") || key.starts_with("result.") {
                continue;
            }
            let mut recorded = v.clone();
            match key {
                "seed" => seed = Some(parse_num::<u64>(key, v)?),
                "language" => language = v.clone(),
                "level" => level = v.parse().map_err(|_| invalid(key, v, "A, B or C"))?,
                "out" => {
                    out = resolve(v)?;
                    recorded = out.display().to_string();
                }
                _ if PATH_KEYS.contains(&key) => {
                    let p = resolve(v)?;
                    recorded = p.display().to_string();
                    let slot = match key {
                        "corpus" => &mut paths.corpus,
                        "pool" => &mut paths.pool,
                        "weak_labels" => &mut paths.weak_labels,
                        "stoplist" => &mut paths.stoplist,
                        "abusive_lexicon" => &mut paths.abusive_lexicon,
                        _ => &mut paths.emoji_lexicon,
                    };
                    *slot = Some(p);
                }
                "prep.lowercase" => prep.lowercase = parse_bool(key, v)?,
                "prep.strip_punct" => prep.strip_punct = parse_bool(key, v)?,
                "prep.reduce_elongation" => prep.reduce_elongation = parse_bool(key, v)?,
                "prep.split_hashtags" => prep.split_hashtags = parse_bool(key, v)?,
                "prep.remove_stopwords" => prep.remove_stopwords = parse_bool(key, v)?,
                "prep.stem" => prep.stem = parse_bool(key, v)?,
                "prep.emoji" => {
                    prep.emoji_mode = match v.as_str() {
                        "score" => EmojiMode::RemoveAndScore,
                        "keep" => EmojiMode::Keep,
                        _ => return Err(invalid(key, v, "score or keep")),
                    }
                }
                "prep.emoji_aggregate" => {
                    prep.emoji_aggregate = match v.as_str() {
                        "mean" => EmojiAggregate::Mean,
                        "sum" => EmojiAggregate::Sum,
                        _ => return Err(invalid(key, v, "mean or sum")),
                    }
                }
                "features.min_df" => min_df = parse_num(key, v)?,
                "features.ngram" => ngram = parse_num(key, v)?,
                "forest.n_trees" => forest.n_trees = parse_num(key, v)?,
                "forest.max_depth" => forest.max_depth = parse_depth(key, v)?,
                "forest.min_samples_leaf" => forest.min_samples_leaf = parse_num(key, v)?,
                "forest.max_features" => forest.max_features = parse_max_features(key, v)?,
                "forest.bootstrap" => forest.bootstrap = parse_bool(key, v)?,
                "grid.n_trees" => grid_trees = list(key, v, parse_num)?,
                "grid.max_depth" => grid_depth = list(key, v, parse_depth)?,
                "grid.min_samples_leaf" => grid_leaf = list(key, v, parse_num)?,
                "grid.max_features" => grid_features = Some(list(key, v, parse_max_features)?),
                "cv.k" => cv_k = parse_num(key, v)?,
                _ if key == "target_per_class" || key.starts_with("add.") || key.starts_with("target.") => {
                    balance_pairs.push((k.clone(), v.clone()));
                }
                _ if key.starts_with("external.") => external.push((k.clone(), v.clone())),
                _ => return Err(CliError::Invalid(format!("unknown config key `{key}`"))),
            }
            snapshot.insert(k.clone(), recorded);
        }

        let seed = seed.ok_or_else(|| CliError::Invalid("config must set `seed`".into()))?;
        forest.seed = seed;
        forest.validate()?;
        let grid_features = grid_features.unwrap_or_else(|| vec![forest.max_features]);
        let mut grid = Vec::new();
        for &n_trees in &grid_trees {
            for &max_depth in &grid_depth {
                for &min_samples_leaf in &grid_leaf {
                    for &max_features in &grid_features {
                        let p = ForestParams {
                            n_trees,
                            max_depth,
                            min_samples_leaf,
                            max_features,
                            ..forest.clone()
                        };
                        p.validate()?;
                        grid.push(p);
                    }
                }
            }
        }

        let balance = if balance_pairs.is_empty() {
            None
        } else {
            balance_pairs.push(("seed".into(), seed.to_string()));
            Some(BalancePlan::from_pairs(&balance_pairs)?.0)
        };

        let config = ExperimentConfig {
            seed,
            paths,
            language,
            prep,
            min_df,
            ngram,
            forest,
            grid,
            cv_k,
            level,
            out,
            balance,
            external,
            snapshot,
        };
        config.check_paths()?;
        Ok(config)
    }

    /// Every referenced input file must exist before the run starts.
    fn check_paths(&self) -> Result<()> {
        let p = &self.paths;
        for (key, path) in [
            ("corpus", &p.corpus),
            ("pool", &p.pool),
            ("weak_labels", &p.weak_labels),
            ("stoplist", &p.stoplist),
            ("abusive_lexicon", &p.abusive_lexicon),
            ("emoji_lexicon", &p.emoji_lexicon),
        ] {
            if let Some(path) = path {
                if !path.is_file() {
                    return Err(CliError::Env(format!("`{key}` file not found: {}", path.display())));
                }
            }
        }
        Ok(())
    }

    pub fn set_out(&mut self, dir: &Path) -> Result<()> {
        self.out = std::path::absolute(dir).map_err(|e| CliError::Env(e.to_string()))?;
        self.snapshot.insert("out".into(), self.out.display().to_string());
        Ok(())
    }

    pub fn set_cv_k(&mut self, k: usize) {
        self.cv_k = k;
        self.snapshot.insert("cv.k".into(), k.to_string());
    }

    /// Effective config entries, paths made absolute, sorted by key.
    pub fn snapshot(&self) -> Vec<(String, String)> {
        let mut s = self.snapshot.clone();
        s.insert("seed".into(), self.seed.to_string());
        s.into_iter().collect()
    }

    pub fn require(&self, key: &str, path: &Option<PathBuf>) -> Result<PathBuf> {
        path.clone()
            .ok_or_else(|| CliError::Invalid(format!("config must set `{key}` for this command")))
    }
}

/// Config lines for one parameter point, usable as a config fragment.
pub fn forest_params_kv(p: &ForestParams) -> Vec<(String, String)> {
    vec![
        ("forest.n_trees".into(), p.n_trees.to_string()),
        ("forest.max_depth".into(), depth_str(p.max_depth)),
        ("forest.min_samples_leaf".into(), p.min_samples_leaf.to_string()),
        ("forest.max_features".into(), max_features_str(p.max_features)),
        ("forest.bootstrap".into(), p.bootstrap.to_string()),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ExperimentConfig> {
        ExperimentConfig::parse(text, Path::new("/tmp"))
    }

    #[test]
    fn defaults_and_grid() {
        let c = parse("seed = 7\n").unwrap();
        assert_eq!(c.forest.seed, 7);
        assert_eq!(c.min_df, 2);
        assert_eq!(c.cv_k, 10);
        assert_eq!(c.grid.len(), 8);
        assert_eq!(c.grid[0].n_trees, 100);
        assert_eq!(c.grid[1].max_depth, None);
        assert_eq!(c.grid[2].max_depth, Some(16));
        assert_eq!(c.grid[7].min_samples_leaf, 3);
        assert!(c.balance.is_none());
    }

    #[test]
    fn seed_is_mandatory() {
        assert!(matches!(parse("forest.n_trees = 3\n"), Err(CliError::Invalid(_))));
    }

    #[test]
    fn rejects_unknown_and_duplicate_keys() {
        assert!(parse("seed=1\nforest.ntrees=3\n").is_err());
        assert!(parse("seed=1\nseed=2\n").is_err());
        assert!(parse("seed=1\nforest.max_depth=deep\n").is_err());
    }

    #[test]
    fn manifest_keys_are_ignored() {
        let c = parse("seed=1\nmanifest.command=train\nresult.train_macro_f1=1.0\n").unwrap();
        assert!(c.snapshot().iter().all(|(k, _)| !k.starts_with("manifest.")));
    }

    #[test]
    fn missing_file_is_environment_error() {
        let e = parse("seed=1\ncorpus=definitely/not/here.tsv\n").unwrap_err();
        assert_eq!(e.exit_code(), 1);
    }

    #[test]
    fn balance_keys() {
        let c = parse("seed=5\ntarget_per_class=10\nadd.GRP=3\n").unwrap();
        let plan = c.balance.unwrap();
        assert_eq!(plan.target_per_class, 10);
        assert_eq!(plan.seed, 5);
    }

    #[test]
    fn empty_grid_list() {
        let c = parse("seed=1\ngrid.n_trees=\n").unwrap();
        assert!(c.grid.is_empty());
    }
}
