//! Dataset balancing: add the most confident weak-labeled pool instances
//! of chosen classes, then oversample every class below its target with
//! replacement. Classes at or above target are never downsampled.

use std::collections::{BTreeMap, HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Corpus, Distribution, Label, Level, Tweet, WeakLabel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BalancePlan {
    /// Pool instances to add per class.
    pub additions: BTreeMap<Label, usize>,
    pub target_per_class: usize,
    /// Per-class targets overriding `target_per_class`, for ratios other
    /// than 1:1:1.
    pub class_targets: BTreeMap<Label, usize>,
    pub seed: u64,
}

impl BalancePlan {
    pub fn new(target_per_class: usize, seed: u64) -> Self {
        BalancePlan {
            additions: BTreeMap::new(),
            target_per_class,
            class_targets: BTreeMap::new(),
            seed,
        }
    }

    pub fn add(mut self, label: Label, n: usize) -> Self {
        self.additions.insert(label, n);
        self
    }

    pub fn target(&self, label: Label) -> usize {
        self.class_targets.get(&label).copied().unwrap_or(self.target_per_class)
    }

    pub fn validate(&self) -> Result<()> {
        if self.target_per_class == 0 {
            return Err(Error::Contract("target_per_class must be at least 1".into()));
        }
        Ok(())
    }

    /// Reads `key=value` lines: `target_per_class`, `seed`, `add.<LABEL>`
    /// and `target.<LABEL>`. Blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(i + 1, format!("expected key=value, got `{line}`")))?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        let (plan, unused) = Self::from_pairs(&pairs)?;
        if let Some(k) = unused.first() {
            return Err(Error::Contract(format!("unknown balance plan key `{k}`")));
        }
        Ok(plan)
    }

    /// Builds a plan from key-value pairs, returning the keys it did not
    /// recognize.
    pub fn from_pairs(pairs: &[(String, String)]) -> Result<(Self, Vec<String>)> {
        let mut plan = BalancePlan::new(0, 0);
        let mut seen_target = false;
        let mut unused = Vec::new();
        let num = |k: &str, v: &str| -> Result<u64> {
            v.parse()
                .map_err(|_| Error::Contract(format!("`{k}` expects a non-negative integer, got `{v}`")))
        };
        for (k, v) in pairs {
            if k == "target_per_class" {
                plan.target_per_class = num(k, v)? as usize;
                seen_target = true;
            } else if k == "seed" {
                plan.seed = num(k, v)?;
            } else if let Some(label) = k.strip_prefix("add.") {
                plan.additions.insert(label.parse()?, num(k, v)? as usize);
            } else if let Some(label) = k.strip_prefix("target.") {
                plan.class_targets.insert(label.parse()?, num(k, v)? as usize);
            } else {
                unused.push(k.clone());
            }
        }
        if !seen_target {
            return Err(Error::Contract("balance plan needs target_per_class".into()));
        }
        plan.validate()?;
        Ok((plan, unused))
    }
}

/// A pool tweet chosen for addition, with its weak label.
#[derive(Debug, Clone, PartialEq)]
pub struct Selected {
    pub tweet: Tweet,
    pub weak: WeakLabel,
}

/// The `n` pool tweets labeled `label` with the highest confidence. Ties
/// go to the lower std, then the lexicographically smaller id. Asking for
/// more than the pool holds is an error, never a silent truncation.
pub fn select_top_confident(
    pool: &Corpus,
    weak: &HashMap<String, WeakLabel>,
    label: Label,
    n: usize,
) -> Result<Vec<Selected>> {
    let level = label.level();
    let mut candidates = Vec::new();
    let mut missing = Vec::new();
    for t in pool.tweets.iter().filter(|t| t.label(level) == Some(label)) {
        match weak.get(&t.id) {
            Some(w) => candidates.push((t, *w)),
            None => missing.push(t.id.clone()),
        }
    }
    if !missing.is_empty() {
        return Err(Error::Contract(format!(
            "pool tweets without weak labels: {}",
            missing.join(", ")
        )));
    }
    if n > candidates.len() {
        return Err(Error::Shortfall {
            label: label.to_string(),
            requested: n,
            available: candidates.len(),
        });
    }
    candidates.sort_by(|(ta, wa), (tb, wb)| {
        wb.confidence
            .total_cmp(&wa.confidence)
            .then(wa.std.total_cmp(&wb.std))
            .then_with(|| ta.id.cmp(&tb.id))
    });
    Ok(candidates
        .into_iter()
        .take(n)
        .map(|(t, w)| {
            let mut tweet = t.clone();
            tweet.set_label(label);
            Selected { tweet, weak: w }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Oversampled {
    pub corpus: Corpus,
    /// (duplicate id, original id) for every added copy, in output order.
    pub duplicates: Vec<(String, String)>,
}

/// Duplicates random originals of each class below its target until the
/// class reaches the target. Output holds all originals in their input
/// order, then the copies grouped by class in level order. Copies get
/// fresh ids of the form `<original>~dup<k>`.
pub fn oversample(
    corpus: &Corpus,
    target: impl Fn(Label) -> usize,
    level: Level,
    seed: u64,
) -> Result<Oversampled> {
    let unlabeled: Vec<&str> = corpus
        .tweets
        .iter()
        .filter(|t| t.label(level).is_none())
        .map(|t| t.id.as_str())
        .collect();
    if !unlabeled.is_empty() {
        return Err(Error::Contract(format!(
            "tweets without a level-{level} label: {}",
            unlabeled.join(", ")
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ids: HashSet<String> = corpus.tweets.iter().map(|t| t.id.clone()).collect();
    let mut copies_made: HashMap<String, usize> = HashMap::new();
    let mut tweets = corpus.tweets.clone();
    let mut duplicates = Vec::new();
    for &class in level.classes() {
        let members: Vec<&Tweet> = corpus.tweets.iter().filter(|t| t.label(level) == Some(class)).collect();
        let want = target(class);
        if members.is_empty() {
            if want > 0 {
                return Err(Error::Contract(format!(
                    "class {class} has no instances to oversample to {want}"
                )));
            }
            continue;
        }
        for _ in members.len()..want {
            let original = members[rng.gen_range(0..members.len())];
            let k = copies_made.entry(original.id.clone()).or_insert(0);
            let new_id = loop {
                *k += 1;
                let candidate = format!("{}~dup{}", original.id, k);
                if ids.insert(candidate.clone()) {
                    break candidate;
                }
            };
            let mut copy = original.clone();
            copy.id = new_id.clone();
            tweets.push(copy);
            duplicates.push((new_id, original.id.clone()));
        }
    }
    let out = Corpus {
        tweets,
        language: corpus.language.clone(),
        split: corpus.split,
        schema: corpus.schema,
    };
    Ok(Oversampled {
        corpus: out,
        duplicates,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BalanceReport {
    pub before: Distribution,
    pub after: Distribution,
    pub additions: Vec<Selected>,
    pub duplicates: Vec<(String, String)>,
}

/// Base corpus plus the plan's pool additions, oversampled to target.
pub fn apply_plan(
    base: &Corpus,
    pool: &Corpus,
    weak: &HashMap<String, WeakLabel>,
    plan: &BalancePlan,
    level: Level,
) -> Result<(Corpus, BalanceReport)> {
    plan.validate()?;
    let mut additions = Vec::new();
    for (&label, &n) in &plan.additions {
        if label.level() != level {
            return Err(Error::Contract(format!("cannot add {label} instances when balancing level {level}")));
        }
        additions.extend(select_top_confident(pool, weak, label, n)?);
    }
    let mut tweets = base.tweets.clone();
    tweets.extend(additions.iter().map(|s| s.tweet.clone()));
    let merged = Corpus {
        tweets,
        language: base.language.clone(),
        split: base.split,
        schema: base.schema,
    };
    merged.validate()?;
    let out = oversample(&merged, |l| plan.target(l), level, plan.seed)?;
    let report = BalanceReport {
        before: base.class_distribution(level),
        after: out.corpus.class_distribution(level),
        additions,
        duplicates: out.duplicates,
    };
    Ok((out.corpus, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Schema;

    fn corpus(entries: &[(&str, Label)]) -> Corpus {
        let tweets = entries.iter().map(|(id, l)| Tweet::with_label(*id, "text", *l)).collect();
        Corpus::new(tweets, Schema::OlidLabeled).unwrap()
    }

    fn weak(entries: &[(&str, f64, f64)]) -> HashMap<String, WeakLabel> {
        entries
            .iter()
            .map(|(id, c, s)| (id.to_string(), WeakLabel { confidence: *c, std: *s }))
            .collect()
    }

    #[test]
    fn top_confident_sort_and_take() {
        let pool = corpus(&[("a", Label::Oth), ("b", Label::Oth), ("c", Label::Oth), ("d", Label::Oth), ("e", Label::Oth)]);
        let w = weak(&[("a", 0.7, 0.1), ("b", 0.9, 0.1), ("c", 0.5, 0.1), ("d", 0.8, 0.1), ("e", 0.6, 0.1)]);
        let got = select_top_confident(&pool, &w, Label::Oth, 2).unwrap();
        let ids: Vec<&str> = got.iter().map(|s| s.tweet.id.as_str()).collect();
        assert_eq!(ids, ["b", "d"]);
        assert!(select_top_confident(&pool, &w, Label::Oth, 0).unwrap().is_empty());
    }

    #[test]
    fn confidence_tie_uses_std_then_id() {
        let pool = corpus(&[("x", Label::Grp), ("y", Label::Grp), ("z", Label::Grp)]);
        let w = weak(&[("x", 0.8, 0.1), ("y", 0.8, 0.05), ("z", 0.8, 0.05)]);
        let got = select_top_confident(&pool, &w, Label::Grp, 1).unwrap();
        assert_eq!(got[0].tweet.id, "y");
    }

    #[test]
    fn shortfall_is_reported() {
        let pool = corpus(&[("a", Label::Oth), ("b", Label::Grp)]);
        let w = weak(&[("a", 0.7, 0.1), ("b", 0.9, 0.1)]);
        match select_top_confident(&pool, &w, Label::Oth, 2) {
            Err(Error::Shortfall { requested: 2, available: 1, .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn single_original_duplicated() {
        let c = corpus(&[("a1", Label::Not), ("a2", Label::Not), ("a3", Label::Not), ("b1", Label::Off)]);
        let out = oversample(&c, |_| 3, Level::A, 1).unwrap();
        let d = out.corpus.class_distribution(Level::A);
        assert_eq!(d.get(Label::Not), 3);
        assert_eq!(d.get(Label::Off), 3);
        assert_eq!(out.duplicates, vec![("b1~dup1".into(), "b1".into()), ("b1~dup2".into(), "b1".into())]);
        assert_eq!(&out.corpus.tweets[..4], &c.tweets[..]);
        out.corpus.validate().unwrap();
    }

    #[test]
    fn balanced_input_is_identity() {
        let c = corpus(&[("a", Label::Not), ("b", Label::Off)]);
        let out = oversample(&c, |_| 1, Level::A, 9).unwrap();
        assert_eq!(out.corpus, c);
        assert!(out.duplicates.is_empty());
    }

    #[test]
    fn empty_class_with_target_fails() {
        let c = corpus(&[("a", Label::Not)]);
        assert!(oversample(&c, |_| 2, Level::A, 0).is_err());
    }

    #[test]
    fn zero_target_plan_rejected() {
        let c = corpus(&[("a", Label::Not)]);
        let plan = BalancePlan::new(0, 0);
        assert!(apply_plan(&c, &c, &HashMap::new(), &plan, Level::A).is_err());
    }

    #[test]
    fn plan_parsing() {
        let plan = BalancePlan::parse("# plan\ntarget_per_class=3876\nadd.OTH=300\nadd.GRP=237\nseed=7\ntarget.IND=4000\n").unwrap();
        assert_eq!(plan.target_per_class, 3876);
        assert_eq!(plan.additions[&Label::Oth], 300);
        assert_eq!(plan.additions[&Label::Grp], 237);
        assert_eq!(plan.seed, 7);
        assert_eq!(plan.target(Label::Ind), 4000);
        assert_eq!(plan.target(Label::Grp), 3876);
        assert!(BalancePlan::parse("add.OTH=3\n").is_err());
        assert!(BalancePlan::parse("target_per_class=3\nbogus=1\n").is_err());
        assert!(BalancePlan::parse("target_per_class=3\nadd.XYZ=1\n").is_err());
    }

    #[test]
    fn pure_oversampling_when_no_additions() {
        let c = corpus(&[("a", Label::Ind), ("b", Label::Ind), ("c", Label::Grp), ("d", Label::Oth)]);
        let plan = BalancePlan::new(2, 3);
        let (out, report) = apply_plan(&c, &c, &HashMap::new(), &plan, Level::C).unwrap();
        assert_eq!(out.len(), 6);
        assert_eq!(report.before.get(Label::Grp), 1);
        assert_eq!(report.after.get(Label::Grp), 2);
        assert_eq!(report.duplicates.len(), 2);
    }
}
