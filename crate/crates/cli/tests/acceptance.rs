//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails. Each criterion has a value tolerance and a
//! wall-clock bound.

#[path = "support/fixtures.rs"]
mod fixtures;
#[path = "../../core/tests/support/tfidf_oracle.rs"]
mod tfidf_oracle;
#[path = "../../core/tests/support/tree_oracle.rs"]
mod tree_oracle;

use std::collections::HashMap;
use std::path::Path;
use std::time::{Duration, Instant};

use fixtures::{run, separable_corpus, stderr, write, HEADER};
use offense_core::balance::{apply_plan, BalancePlan};
use offense_core::corpus::{Corpus, Label, Level, Schema, Tweet, WeakLabel};
use offense_core::emolex::{emotion_counts, load_emotion_lexicon, Basis, Emotion};
use offense_core::forest::{grid_search, kfold, Dataset, ForestParams, MaxFeatures};
use offense_core::metrics::{majority_baseline, ConfusionMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;

struct Outcome {
    ok: bool,
    detail: String,
}

fn pass(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome { ok, detail: detail.into() }
}

fn manifest_value(path: &Path, key: &str) -> Option<String> {
    let text = std::fs::read_to_string(path).ok()?;
    text.lines().find_map(|l| l.strip_prefix(&format!("{key} = ")).map(String::from))
}

fn metrics_fixture() -> Outcome {
    let dir = TempDir::new().unwrap();
    let mut gold = format!("{HEADER}\n");
    let mut preds = String::from("id\tlabel\n");
    let cells = [("NOT", "NOT", 278), ("NOT", "OFF", 16), ("OFF", "NOT", 9), ("OFF", "OFF", 25)];
    let mut i = 0;
    for (t, p, n) in cells {
        for _ in 0..n {
            let rest = if t == "OFF" { "TIN\tIND" } else { "NULL\tNULL" };
            gold.push_str(&format!("d{i}\tpost {i}\t{t}\t{rest}\n"));
            preds.push_str(&format!("d{i}\t{p}\n"));
            i += 1;
        }
    }
    let g = write(dir.path(), "gold.tsv", &gold);
    let p = write(dir.path(), "pred.tsv", &preds);
    let report = dir.path().join("report.txt");
    let o = run(&["evaluate", g.to_str().unwrap(), p.to_str().unwrap(), "--out", report.to_str().unwrap()]);
    if o.status.code() != Some(0) {
        return pass(false, format!("evaluate failed: {}", stderr(&o)));
    }
    let m = dir.path().join("report.txt.manifest");
    let acc: f64 = manifest_value(&m, "result.accuracy").and_then(|v| v.parse().ok()).unwrap_or(f64::NAN);
    let f1: f64 = manifest_value(&m, "result.macro_f1").and_then(|v| v.parse().ok()).unwrap_or(f64::NAN);
    pass(
        (acc - 0.9238).abs() <= 1e-4 && (f1 - 0.8118).abs() <= 1e-4,
        format!("accuracy {acc:.6} (0.9238 ± 1e-4), macro-F1 {f1:.6} (0.8118 ± 1e-4)"),
    )
}

fn baseline_fixture() -> Outcome {
    let mut y = vec![0usize; 869];
    y.extend(vec![1usize; 131]);
    let pred = majority_baseline(&y, y.len()).unwrap();
    let classes = vec!["NOT".to_string(), "OFF".to_string()];
    let f1 = ConfusionMatrix::from_indices(&classes, &y, &pred).unwrap().scores().macro_f1;
    pass((f1 - 0.465).abs() <= 1e-3, format!("macro-F1 {f1:.4} (0.465 ± 0.001)"))
}

fn synthetic(prefix: &str, counts: &[(Label, usize)]) -> Corpus {
    let mut tweets = Vec::new();
    for &(label, n) in counts {
        for i in 0..n {
            tweets.push(Tweet::with_label(format!("{prefix}-{label}-{i}"), "post", label));
        }
    }
    Corpus::new(tweets, Schema::OlidLabeled).unwrap()
}

fn balancing_fixture() -> Outcome {
    let base = synthetic("base", &[(Label::Ind, 2407), (Label::Grp, 1074), (Label::Oth, 395)]);
    let pool = synthetic("pool", &[(Label::Grp, 1000), (Label::Oth, 1000)]);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let weak: HashMap<String, WeakLabel> = pool
        .tweets
        .iter()
        .map(|t| (t.id.clone(), WeakLabel { confidence: rng.gen_range(0.0..1.0), std: rng.gen_range(0.0..0.3) }))
        .collect();
    let plan = BalancePlan::new(3876, 7).add(Label::Grp, 237).add(Label::Oth, 300);
    match apply_plan(&base, &pool, &weak, &plan, Level::C) {
        Ok((out, _)) => {
            let d = out.class_distribution(Level::C);
            let per: Vec<usize> = Level::C.classes().iter().map(|&l| d.get(l)).collect();
            pass(per.iter().all(|&n| n == 3876) && out.len() == 11628, format!("per class {per:?}, total {}", out.len()))
        }
        Err(e) => pass(false, e.to_string()),
    }
}

fn tree_oracle_sweep() -> Outcome {
    let mismatches = tree_oracle::random_sweep(20200512, 200);
    pass(mismatches == 0, format!("{mismatches} mismatches over 200 datasets"))
}

fn tfidf_sweep() -> Outcome {
    let hand = tfidf_oracle::hand_fixture_error();
    let (norm, weights) = tfidf_oracle::random_docs_error(11, 1000);
    pass(
        hand < 1e-9 && norm < 1e-9 && weights < 1e-9,
        format!("fixture err {hand:.1e}, max |norm-1| {norm:.1e}, max weight err {weights:.1e}"),
    )
}

fn train_determinism() -> Outcome {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    write(d, "c.tsv", &separable_corpus(3000, 2960));
    let cfg = fixtures::config(d, "det", "c.tsv", "");
    let mut models = Vec::new();
    for threads in ["1", "8"] {
        let out = d.join(format!("t{threads}"));
        let o = run(&["--threads", threads, "train", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        if o.status.code() != Some(0) {
            return pass(false, format!("train failed: {}", stderr(&o)));
        }
        models.push(std::fs::read(out.join("model.bin")).unwrap());
    }
    pass(
        models[0] == models[1],
        format!("{} bytes with 1 thread, {} with 8, identical: {}", models[0].len(), models[1].len(), models[0] == models[1]),
    )
}

fn cv_grid_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let mut bad = Vec::new();
    for case in 0..300 {
        let n = rng.gen_range(2..200);
        let k = rng.gen_range(2..=n.min(12));
        let y: Vec<usize> = (0..n).map(|_| rng.gen_range(0..3)).collect();
        for stratified in [false, true] {
            let folds = kfold(n, k, Some(&y), rng.gen(), stratified).unwrap();
            let mut all: Vec<usize> = folds.iter().flat_map(|f| f.test.iter().copied()).collect();
            all.sort_unstable();
            let sizes: Vec<usize> = folds.iter().map(|f| f.test.len()).collect();
            let spread = |v: &[usize]| v.iter().max().unwrap() - v.iter().min().unwrap();
            let mut ok = all == (0..n).collect::<Vec<_>>() && spread(&sizes) <= 1;
            if stratified {
                for c in 0..3 {
                    let per: Vec<usize> = folds.iter().map(|f| f.test.iter().filter(|&&i| y[i] == c).count()).collect();
                    ok &= spread(&per) <= 1;
                }
            }
            if !ok {
                bad.push(case);
            }
        }
    }

    // XOR of two features: a depth-1 model cannot beat chance
    let mut x = Vec::new();
    let mut y = Vec::new();
    for _ in 0..400 {
        let a: f64 = rng.gen_range(-1.0..1.0);
        let b: f64 = rng.gen_range(-1.0..1.0);
        x.push(vec![a, b]);
        y.push(((a > 0.0) ^ (b > 0.0)) as usize);
    }
    let data = Dataset::from_rows(&x).unwrap();
    let stump = ForestParams { n_trees: 10, max_depth: Some(1), max_features: MaxFeatures::All, seed: 4, ..Default::default() };
    let deep = ForestParams { max_depth: None, ..stump.clone() };
    let classes = vec!["NOT".to_string(), "OFF".to_string()];
    let g = grid_search(&[stump, deep], &data, &y, &classes, 5, 8).unwrap();
    pass(
        bad.is_empty() && g.best == 1,
        format!("{} bad fold cases; rigged grid winner {} (expected 1)", bad.len(), g.best),
    )
}

fn emotion_invariance() -> Outcome {
    let lex = load_emotion_lexicon("hate\tnegative\t1\nhate\tanger\t1\nbad\tnegative\t1\nlove\tjoy\t1\n".as_bytes()).unwrap();
    let split = |s: &str| s.split_whitespace().map(str::to_lowercase).collect::<Vec<_>>();
    let posts = [
        ("1", "hate you", Label::Off),
        ("2", "bad bad day", Label::Off),
        ("3", "love this", Label::Not),
        ("4", "bad weather", Label::Not),
        ("5", "hate hate love", Label::Not),
    ];
    let corpus = |copies: usize| {
        let mut tweets = Vec::new();
        for c in 0..copies {
            for (id, text, l) in posts {
                tweets.push(Tweet::with_label(format!("{id}-{c}"), text, l));
            }
        }
        Corpus::new(tweets, Schema::OlidLabeled).unwrap()
    };
    let once = emotion_counts(&corpus(1), &lex, Basis::PerThousandPosts, split);
    let twice = emotion_counts(&corpus(2), &lex, Basis::PerThousandPosts, split);
    let thrice = emotion_counts(&corpus(3), &lex, Basis::PerThousandPosts, split);
    let invariant = once.iter().zip(&twice).zip(&thrice).all(|((a, b), c)| a.values == b.values && a.values == c.values);

    let hand = Corpus::new(
        vec![
            Tweet::with_label("h1", "hate it", Label::Off),
            Tweet::with_label("h2", "bad and bad", Label::Off),
        ],
        Schema::OlidLabeled,
    )
    .unwrap();
    let neg = emotion_counts(&hand, &lex, Basis::PerThousandPosts, split)[1].get(Emotion::Negative);
    pass(invariant && neg == 1500.0, format!("duplication invariant: {invariant}; hand neg {neg} (1500 exact)"))
}

fn end_to_end_cv() -> Outcome {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    write(d, "c.tsv", &separable_corpus(3000, 77));
    let cfg = fixtures::config(d, "cv", "c.tsv", "");
    let o = run(&["cv", cfg.to_str().unwrap(), "--k", "10", "--grid"]);
    if o.status.code() != Some(0) {
        return pass(false, format!("cv failed: {}", stderr(&o)));
    }
    let m = d.join("out-cv/cv.manifest");
    let mean: f64 = manifest_value(&m, "result.mean_macro_f1").and_then(|v| v.parse().ok()).unwrap_or(f64::NAN);
    let folds = (1..=10).filter(|i| manifest_value(&m, &format!("result.fold.{i}")).is_some()).count();
    pass(mean >= 0.95 && folds == 10, format!("mean macro-F1 {mean:.4} over {folds} folds (>= 0.95)"))
}

fn main() {
    type Check = fn() -> Outcome;
    let criteria: [(&str, &str, Check, Duration); 9] = [
        ("AC1", "evaluate on the Danish confusion reconstruction", metrics_fixture, Duration::from_secs(1)),
        ("AC2", "majority baseline at NOT prevalence 0.869", baseline_fixture, Duration::from_secs(1)),
        ("AC3", "balancing plan reaches 3876 per class", balancing_fixture, Duration::from_secs(5)),
        ("AC4", "tree split search matches the exhaustive oracle", tree_oracle_sweep, Duration::from_secs(30)),
        ("AC5", "TF-IDF matches hand values and has unit norm", tfidf_sweep, Duration::from_secs(5)),
        ("AC6", "train is byte-identical across thread counts", train_determinism, Duration::from_secs(120)),
        ("AC7", "fold partition, stratification and rigged grid", cv_grid_properties, Duration::from_secs(60)),
        ("AC8", "emotion counts invariant under duplication", emotion_invariance, Duration::from_secs(1)),
        ("AC9", "default-grid cv on a separable 3000-row corpus", end_to_end_cv, Duration::MAX),
    ];
    let mut failed = 0;
    for (id, name, check, bound) in criteria {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let in_time = elapsed <= bound;
        let ok = outcome.ok && in_time;
        if !ok {
            failed += 1;
        }
        let limit = if bound == Duration::MAX { String::from("no bound") } else { format!("< {:.0?}", bound) };
        println!(
            "[{}] {id} {name}: {} ({:.2?}, {limit})",
            if ok { "PASS" } else { "FAIL" },
            outcome.detail,
            elapsed
        );
    }
    println!("acceptance: {} passed, {failed} failed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
