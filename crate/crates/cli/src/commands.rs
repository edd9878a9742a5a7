use std::collections::{HashMap, HashSet};
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use offense_core::balance::apply_plan;
use offense_core::corpus::{load_weak_labels, Corpus, Level, Schema};
use offense_core::emolex::{emotion_counts, emotion_report, load_emotion_lexicon, Basis};
use offense_core::forest::{cross_validate, grid_search, train_forest, CvResult, Dataset};
use offense_core::metrics::{report, ConfusionMatrix};
use offense_core::textprep::{load_word_list, EmojiSentimentLexicon, PrepConfig, Preprocessor};
use rayon::prelude::*;

use crate::config::{depth_str, forest_params_kv, max_features_str, ExperimentConfig};
use crate::manifest::Manifest;
use crate::pipeline::{class_names, labeled, Pipeline, Transform};
use crate::{read_file, sha256_hex, write_file, CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "offense", version, about = "Offensive-language classification experiments")]
pub struct Cli {
    /// Worker threads for training and feature extraction.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a corpus file's format and label hierarchy.
    Validate { corpus: PathBuf },
    /// Class distribution at one level.
    Stats {
        corpus: PathBuf,
        #[arg(long, default_value = "A")]
        level: Level,
    },
    /// Add confident pool instances and oversample to the plan's targets.
    Balance {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit the feature transform and forest; writes model.bin.
    Train {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Stratified k-fold cross-validation.
    Cv {
        config: PathBuf,
        #[arg(long)]
        k: Option<usize>,
        /// Cross-validate every grid point and report the best.
        #[arg(long)]
        grid: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rank the parameter grid by cross-validated macro-F1.
    Gridsearch {
        config: PathBuf,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Label a corpus with a trained model; prints `id<TAB>label` rows.
    Predict {
        model: PathBuf,
        corpus: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score a predictions file against a gold corpus.
    Evaluate {
        gold: PathBuf,
        predictions: PathBuf,
        #[arg(long, default_value = "A")]
        level: Level,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emotion-lexicon word counts per level-A class.
    Emostats {
        corpus: PathBuf,
        lexicon: PathBuf,
        #[arg(long, default_value = "per_1000_posts")]
        basis: Basis,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

struct Ctx<'a> {
    out: &'a mut dyn Write,
    color: bool,
}

impl Ctx<'_> {
    fn print(&mut self, text: &str) -> Result<()> {
        self.out.write_all(text.as_bytes()).map_err(|source| CliError::Io {
            path: PathBuf::from("<stdout>"),
            source,
        })
    }
}

pub fn run(cli: Cli, out: &mut dyn Write, color: bool) -> Result<()> {
    let mut ctx = Ctx { out, color };
    match cli.command {
        Command::Validate { corpus } => validate(&mut ctx, &corpus),
        Command::Stats { corpus, level } => stats(&mut ctx, &corpus, level),
        Command::Balance { config, out } => balance(&mut ctx, &load_config(&config, out)?),
        Command::Train { config, out } => train(&mut ctx, &load_config(&config, out)?),
        Command::Cv { config, k, grid, out } => {
            let mut c = load_config(&config, out)?;
            if let Some(k) = k {
                c.set_cv_k(k);
            }
            cv(&mut ctx, &c, grid)
        }
        Command::Gridsearch { config, k, out } => {
            let mut c = load_config(&config, out)?;
            if let Some(k) = k {
                c.set_cv_k(k);
            }
            gridsearch(&mut ctx, &c)
        }
        Command::Predict { model, corpus, out } => predict(&mut ctx, &model, &corpus, out.as_deref()),
        Command::Evaluate {
            gold,
            predictions,
            level,
            out,
        } => evaluate(&mut ctx, &gold, &predictions, level, out.as_deref()),
        Command::Emostats {
            corpus,
            lexicon,
            basis,
            out,
        } => emostats(&mut ctx, &corpus, &lexicon, basis, out.as_deref()),
    }
}

fn load_config(path: &Path, out: Option<PathBuf>) -> Result<ExperimentConfig> {
    let mut c = ExperimentConfig::load(path)?;
    if let Some(dir) = out {
        c.set_out(&dir)?;
    }
    Ok(c)
}

/// Reads a corpus, picking the schema from its header row.
pub fn load_corpus(path: &Path) -> Result<Corpus> {
    let bytes = read_file(path)?;
    let header = bytes.split(|&b| b == b'\n').next().unwrap_or(&[]);
    let header = String::from_utf8_lossy(header);
    let schema = Schema::detect(header.trim_end_matches('\r'))
        .ok_or_else(|| CliError::Invalid(format!("{}: unrecognized header row", path.display())))?;
    Corpus::load(bytes.as_slice(), schema).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
}

fn validate(ctx: &mut Ctx, path: &Path) -> Result<()> {
    let corpus = load_corpus(path)?;
    let schema = match corpus.schema {
        Schema::OlidLabeled => "labeled",
        Schema::TextOnly => "text-only",
    };
    ctx.print(&format!("{}: ok, {} tweets, {schema}\n", path.display(), corpus.len()))
}

fn stats(ctx: &mut Ctx, path: &Path, level: Level) -> Result<()> {
    let corpus = load_corpus(path)?;
    let d = corpus.class_distribution(level);
    let mut s = format!("level {level}\n");
    for (label, n) in &d.counts {
        s.push_str(&format!("{:<10} {n:>8}\n", label.to_string()));
    }
    s.push_str(&format!("unlabeled: {}\n", d.unlabeled));
    s.push_str(&format!("{:<10} {:>8}\n", "total", corpus.len()));
    ctx.print(&s)
}

fn balance(ctx: &mut Ctx, config: &ExperimentConfig) -> Result<()> {
    let plan = config
        .balance
        .as_ref()
        .ok_or_else(|| CliError::Invalid("config has no balance plan (set target_per_class)".into()))?;
    let corpus_path = config.require("corpus", &config.paths.corpus)?;
    let base = load_corpus(&corpus_path)?;
    let mut manifest = Manifest::new("balance").with_config(config);
    manifest.input("corpus", &corpus_path)?;

    let (pool, weak) = if plan.additions.values().any(|&n| n > 0) {
        let pool_path = config.require("pool", &config.paths.pool)?;
        let weak_path = config.require("weak_labels", &config.paths.weak_labels)?;
        manifest.input("pool", &pool_path)?;
        manifest.input("weak_labels", &weak_path)?;
        let weak = load_weak_labels(read_file(&weak_path)?.as_slice())
            .map_err(|e| CliError::Invalid(format!("{}: {e}", weak_path.display())))?;
        (load_corpus(&pool_path)?, weak)
    } else {
        (Corpus::new(Vec::new(), base.schema)?, HashMap::new())
    };

    let (balanced, rep) = apply_plan(&base, &pool, &weak, plan, config.level)?;
    let tsv = balanced.to_tsv_string();
    let out_path = config.out.join("balanced.tsv");
    write_file(&out_path, tsv.as_bytes())?;

    let mut s = format!("{:<8} {:>8} {:>8}\n", "class", "before", "after");
    for ((label, before), (_, after)) in rep.before.counts.iter().zip(&rep.after.counts) {
        s.push_str(&format!("{:<8} {before:>8} {after:>8}\n", label.to_string()));
        manifest.result(&format!("before.{label}"), before);
        manifest.result(&format!("after.{label}"), after);
    }
    s.push_str(&format!("{:<8} {:>8} {:>8}\n", "total", base.len(), balanced.len()));
    manifest.result("total", balanced.len());
    manifest.result("output_sha256", sha256_hex(tsv.as_bytes()));
    for a in &rep.additions {
        let label = a.tweet.label(config.level).map(|l| l.to_string()).unwrap_or_default();
        manifest.result(
            &format!("addition.{}", a.tweet.id),
            format!("{label} {} {}", a.weak.confidence, a.weak.std),
        );
    }
    for (dup, orig) in &rep.duplicates {
        manifest.result(&format!("duplicate.{dup}"), orig);
    }
    manifest.write(&config.out.join("balance.manifest"))?;
    s.push_str(&format!("wrote {}\n", out_path.display()));
    ctx.print(&s)
}

struct Prepared {
    transform: Transform,
    data: Dataset,
    y: Vec<usize>,
    classes: Vec<String>,
    manifest: Manifest,
}

fn prepare(config: &ExperimentConfig, command: &str) -> Result<Prepared> {
    let corpus_path = config.require("corpus", &config.paths.corpus)?;
    let mut manifest = Manifest::new(command).with_config(config);
    if config.prep.remove_stopwords && config.paths.stoplist.is_none() {
        return Err(CliError::Env(
            "prep.remove_stopwords is on but no stoplist is configured".into(),
        ));
    }
    let word_list = |key: &str, path: &Option<PathBuf>, manifest: &mut Manifest| -> Result<HashSet<String>> {
        match path {
            Some(p) => {
                manifest.input(key, p)?;
                load_word_list(read_file(p)?.as_slice()).map_err(|e| CliError::Invalid(format!("{}: {e}", p.display())))
            }
            None => Ok(HashSet::new()),
        }
    };
    let stoplist = if config.prep.remove_stopwords {
        word_list("stoplist", &config.paths.stoplist, &mut manifest)?
    } else {
        HashSet::new()
    };
    let abusive = word_list("abusive_lexicon", &config.paths.abusive_lexicon, &mut manifest)?;
    let emoji = match &config.paths.emoji_lexicon {
        Some(p) => {
            manifest.input("emoji_lexicon", p)?;
            EmojiSentimentLexicon::load(read_file(p)?.as_slice())
                .map_err(|e| CliError::Invalid(format!("{}: {e}", p.display())))?
        }
        None => EmojiSentimentLexicon::new(),
    };
    manifest.input("corpus", &corpus_path)?;

    let corpus = load_corpus(&corpus_path)?;
    let (texts, y, skipped) = labeled(&corpus, config.level);
    if skipped > 0 {
        log::info!("skipping {skipped} tweets without a level-{} label", config.level);
    }
    if texts.is_empty() {
        return Err(CliError::Invalid(format!("corpus has no level-{} labels", config.level)));
    }
    let transform = Transform::fit(
        &texts,
        config.prep,
        &config.language,
        &stoplist,
        &abusive,
        &emoji,
        config.min_df,
        config.ngram,
    )?;
    let data = transform.dataset(&texts)?;
    manifest.result("rows", texts.len());
    manifest.result("skipped_unlabeled", skipped);
    manifest.result("vocabulary_size", transform.vocab.len());
    Ok(Prepared {
        transform,
        data,
        y,
        classes: class_names(config.level),
        manifest,
    })
}

fn train(ctx: &mut Ctx, config: &ExperimentConfig) -> Result<()> {
    let Prepared {
        transform,
        data,
        y,
        classes,
        mut manifest,
    } = prepare(config, "train")?;
    let forest = train_forest(&data, &y, &classes, &config.forest)?;
    let pred = forest.predict_dataset(&data)?;
    let scores = ConfusionMatrix::from_indices(&classes, &y, &pred)?.scores();
    let pipeline = Pipeline {
        level: config.level,
        transform,
        forest,
    };
    let bytes = pipeline.to_bytes();
    let model_path = config.out.join("model.bin");
    write_file(&model_path, &bytes)?;
    manifest.result("feature_dim", pipeline.transform.dim());
    manifest.result("train_accuracy", format!("{:.6}", scores.accuracy));
    manifest.result("train_macro_f1", format!("{:.6}", scores.macro_f1));
    manifest.result("model_sha256", sha256_hex(&bytes));
    manifest.write(&config.out.join("train.manifest"))?;
    ctx.print(&format!(
        "rows {}\nvocabulary {}\ntrain macro_f1 {:.4}\nwrote {}\n",
        y.len(),
        pipeline.transform.vocab.len(),
        scores.macro_f1,
        model_path.display()
    ))
}

fn cv_table(r: &CvResult) -> String {
    let mut s = format!("{:<6} {:>9}\n", "fold", "macro_f1");
    for (i, f) in r.folds.iter().enumerate() {
        s.push_str(&format!("{:<6} {f:>9.4}\n", i + 1));
    }
    s.push_str(&format!("{:<6} {:>9.4}\n{:<6} {:>9.4}\n", "mean", r.mean, "std", r.std));
    s
}

fn cv(ctx: &mut Ctx, config: &ExperimentConfig, use_grid: bool) -> Result<()> {
    let Prepared {
        data,
        y,
        classes,
        mut manifest,
        ..
    } = prepare(config, "cv")?;
    let (params, result) = if use_grid {
        let g = grid_search(&config.grid, &data, &y, &classes, config.cv_k, config.seed)?;
        (config.grid[g.best].clone(), g.results[g.best].clone())
    } else {
        let r = cross_validate(&data, &y, &classes, &config.forest, config.cv_k, config.seed)?;
        (config.forest.clone(), r)
    };
    let mut s = String::new();
    if use_grid {
        s.push_str("best grid point:");
        for (k, v) in forest_params_kv(&params) {
            s.push_str(&format!(" {k}={v}"));
            manifest.result(&format!("best.{k}"), v);
        }
        s.push('\n');
    }
    s.push_str(&cv_table(&result));
    for (i, f) in result.folds.iter().enumerate() {
        manifest.result(&format!("fold.{}", i + 1), format!("{f:.6}"));
    }
    manifest.result("mean_macro_f1", format!("{:.6}", result.mean));
    manifest.result("std_macro_f1", format!("{:.6}", result.std));
    manifest.write(&config.out.join("cv.manifest"))?;
    ctx.print(&s)
}

fn gridsearch(ctx: &mut Ctx, config: &ExperimentConfig) -> Result<()> {
    let Prepared {
        data,
        y,
        classes,
        mut manifest,
        ..
    } = prepare(config, "gridsearch")?;
    let g = grid_search(&config.grid, &data, &y, &classes, config.cv_k, config.seed)?;
    let mut s = format!(
        "{:<5} {:>7} {:>9} {:>8} {:>12} {:>9} {:>9}\n",
        "rank", "n_trees", "max_depth", "min_leaf", "max_features", "mean", "std"
    );
    for (rank, &i) in g.ranking().iter().enumerate() {
        let p = &config.grid[i];
        let r = &g.results[i];
        s.push_str(&format!(
            "{:<5} {:>7} {:>9} {:>8} {:>12} {:>9.4} {:>9.4}\n",
            rank + 1,
            p.n_trees,
            depth_str(p.max_depth),
            p.min_samples_leaf,
            max_features_str(p.max_features),
            r.mean,
            r.std
        ));
        manifest.result(
            &format!("grid.{}", i + 1),
            format!(
                "n_trees={} max_depth={} min_samples_leaf={} max_features={} mean={:.6} std={:.6}",
                p.n_trees,
                depth_str(p.max_depth),
                p.min_samples_leaf,
                max_features_str(p.max_features),
                r.mean,
                r.std
            ),
        );
    }
    let best: String = forest_params_kv(&config.grid[g.best])
        .into_iter()
        .map(|(k, v)| format!("{k} = {v}\n"))
        .collect();
    let best_path = config.out.join("best_params.conf");
    write_file(&best_path, best.as_bytes())?;
    manifest.result("best", g.best + 1);
    manifest.write(&config.out.join("gridsearch.manifest"))?;
    s.push_str(&format!("wrote {}\n", best_path.display()));
    ctx.print(&s)
}

fn predict(ctx: &mut Ctx, model: &Path, corpus: &Path, out: Option<&Path>) -> Result<()> {
    let bytes = read_file(model)?;
    let pipeline = Pipeline::from_bytes(&bytes)?;
    let corpus = load_corpus(corpus)?;
    let labels = corpus
        .tweets
        .par_iter()
        .map(|t| {
            let x = pipeline.transform.features(&t.text)?;
            Ok(pipeline.forest.predict(&x)?.to_string())
        })
        .collect::<Result<Vec<String>>>()?;
    let mut s = String::from("id\tlabel\n");
    for (t, l) in corpus.tweets.iter().zip(&labels) {
        s.push_str(&format!("{}\t{l}\n", t.id));
    }
    match out {
        Some(path) => {
            write_file(path, s.as_bytes())?;
            let mut m = Manifest::new("predict");
            m.input("model", model)?;
            m.result("rows", labels.len());
            m.result("output_sha256", sha256_hex(s.as_bytes()));
            m.write(&manifest_beside(path))
        }
        None => ctx.print(&s),
    }
}

fn manifest_beside(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest");
    path.with_file_name(name)
}

/// `id<TAB>label` rows; an `id<TAB>label` header is optional.
pub fn load_predictions(path: &Path) -> Result<Vec<(String, String)>> {
    let bytes = read_file(path)?;
    let text = String::from_utf8(bytes).map_err(|_| CliError::Invalid(format!("{}: not UTF-8", path.display())))?;
    let mut rows = Vec::new();
    let mut seen = HashSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.is_empty() || (i == 0 && line == "id\tlabel") {
            continue;
        }
        let (id, label) = line
            .split_once('\t')
            .filter(|(_, l)| !l.contains('\t'))
            .ok_or_else(|| CliError::Invalid(format!("{}: line {}: expected id<TAB>label", path.display(), i + 1)))?;
        if !seen.insert(id.to_string()) {
            return Err(CliError::Invalid(format!("{}: duplicate prediction for `{id}`", path.display())));
        }
        rows.push((id.to_string(), label.to_string()));
    }
    Ok(rows)
}

fn evaluate(ctx: &mut Ctx, gold: &Path, predictions: &Path, level: Level, out: Option<&Path>) -> Result<()> {
    let corpus = load_corpus(gold)?;
    let preds = load_predictions(predictions)?;
    let by_id: HashMap<&str, &str> = preds.iter().map(|(i, l)| (i.as_str(), l.as_str())).collect();
    let gold_ids: HashSet<&str> = corpus.tweets.iter().map(|t| t.id.as_str()).collect();

    let mut truth = Vec::new();
    let mut guess = Vec::new();
    let mut missing = Vec::new();
    for t in &corpus.tweets {
        if let Some(label) = t.label(level) {
            match by_id.get(t.id.as_str()) {
                Some(p) => {
                    truth.push(label.to_string());
                    guess.push(p.to_string());
                }
                None => missing.push(t.id.as_str()),
            }
        }
    }
    let extra: Vec<&str> = preds.iter().map(|(i, _)| i.as_str()).filter(|i| !gold_ids.contains(i)).collect();
    if !missing.is_empty() || !extra.is_empty() {
        let mut msg = String::from("unmatched ids");
        if !missing.is_empty() {
            msg.push_str(&format!("; no prediction for: {}", missing.join(", ")));
        }
        if !extra.is_empty() {
            msg.push_str(&format!("; not in gold: {}", extra.join(", ")));
        }
        return Err(CliError::Invalid(msg));
    }
    let m = ConfusionMatrix::new(&truth, &guess, &class_names(level))?;
    ctx.print(&report(&m, ctx.color))?;
    if let Some(path) = out {
        let text = report(&m, false);
        write_file(path, text.as_bytes())?;
        let s = m.scores();
        let mut man = Manifest::new("evaluate");
        man.input("gold", gold)?;
        man.input("predictions", predictions)?;
        man.result("level", level);
        man.result("accuracy", format!("{:.6}", s.accuracy));
        man.result("macro_f1", format!("{:.6}", s.macro_f1));
        man.write(&manifest_beside(path))?;
    }
    Ok(())
}

fn emostats(ctx: &mut Ctx, corpus: &Path, lexicon: &Path, basis: Basis, out: Option<&Path>) -> Result<()> {
    let c = load_corpus(corpus)?;
    let lex = load_emotion_lexicon(read_file(lexicon)?.as_slice())
        .map_err(|e| CliError::Invalid(format!("{}: {e}", lexicon.display())))?;
    let pre = Preprocessor::plain(PrepConfig {
        remove_stopwords: false,
        stem: false,
        ..PrepConfig::default()
    });
    let profiles = emotion_counts(&c, &lex, basis, |t| pre.preprocess(t).tokens);
    let text = emotion_report(&profiles);
    ctx.print(&text)?;
    if let Some(path) = out {
        write_file(path, text.as_bytes())?;
        let mut m = Manifest::new("emostats");
        m.input("corpus", corpus)?;
        m.input("lexicon", lexicon)?;
        m.result("basis", basis);
        m.write(&manifest_beside(path))?;
    }
    Ok(())
}
