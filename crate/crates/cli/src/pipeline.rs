//! The fitted feature transform and forest, stored together so a model file
//! always carries the vocabulary its feature indices refer to.
//!
//! Layout (little-endian): magic `OFFPIPLN`, version u16, level u8, eight
//! prep bytes, stemmer language, n-gram order u32, document count u64,
//! terms with document frequencies, stoplist, abusive lexicon, emoji
//! lexicon, then the length-prefixed forest bytes. Strings are u32 length
//! plus UTF-8.

use std::collections::HashSet;

use offense_core::corpus::{Corpus, Level};
use offense_core::features::{assemble, surface, tfidf, FeatureVector, Vocabulary};
use offense_core::forest::{load_model, save_model, Dataset, RandomForest, MODEL_MAGIC};
use offense_core::textprep::{
    stemmer_for, tokenize, EmojiAggregate, EmojiMode, EmojiSentimentLexicon, PrepConfig, Preprocessor,
};
use rayon::prelude::*;

use crate::{CliError, Result};

pub const PIPELINE_MAGIC: &[u8; 8] = b"OFFPIPLN";
pub const PIPELINE_VERSION: u16 = 1;

/// Everything needed to turn raw text into feature vectors.
pub struct Transform {
    pub prep: PrepConfig,
    pub language: String,
    pub vocab: Vocabulary,
    pub stoplist: Vec<String>,
    pub abusive: Vec<String>,
    pub emoji: Vec<(String, f64)>,
    preprocessor: Preprocessor,
    abusive_set: HashSet<String>,
}

fn sorted(set: &HashSet<String>) -> Vec<String> {
    let mut v: Vec<String> = set.iter().cloned().collect();
    v.sort();
    v
}

impl Transform {
    fn build(
        prep: PrepConfig,
        language: String,
        vocab: Vocabulary,
        stoplist: Vec<String>,
        abusive: Vec<String>,
        emoji: Vec<(String, f64)>,
    ) -> Result<Self> {
        let mut lex = EmojiSentimentLexicon::new();
        for (e, s) in &emoji {
            lex.insert(e.clone(), *s)?;
        }
        let stemmer = stemmer_for(if prep.stem { &language } else { "none" })?;
        let preprocessor = Preprocessor::new(prep, stoplist.iter().cloned().collect(), lex, stemmer);
        let abusive_set = abusive.iter().cloned().collect();
        Ok(Transform {
            prep,
            language,
            vocab,
            stoplist,
            abusive,
            emoji,
            preprocessor,
            abusive_set,
        })
    }

    /// Fits the vocabulary on `texts`.
    #[allow(clippy::too_many_arguments)]
    pub fn fit(
        texts: &[&str],
        prep: PrepConfig,
        language: &str,
        stoplist: &HashSet<String>,
        abusive: &HashSet<String>,
        emoji: &EmojiSentimentLexicon,
        min_df: usize,
        ngram: usize,
    ) -> Result<Self> {
        let emoji: Vec<(String, f64)> = emoji.entries().into_iter().map(|(e, s)| (e.to_string(), s)).collect();
        let placeholder = Vocabulary::from_parts(Vec::new(), Vec::new(), 0, ngram)?;
        let mut t = Self::build(prep, language.to_string(), placeholder, sorted(stoplist), sorted(abusive), emoji)?;
        let docs: Vec<Vec<String>> = texts.par_iter().map(|s| t.preprocessor.preprocess(s).tokens).collect();
        t.vocab = Vocabulary::fit(&docs, min_df, ngram)?;
        Ok(t)
    }

    pub fn dim(&self) -> usize {
        self.vocab.len() + offense_core::features::SURFACE_DIM
    }

    pub fn features(&self, text: &str) -> Result<FeatureVector> {
        let prepped = self.preprocessor.preprocess(text);
        let sparse = tfidf(&prepped.tokens, &self.vocab);
        let raw_tokens = tokenize(text);
        let dense = surface(text, &raw_tokens, &self.abusive_set, prepped.emoji_score).to_array();
        Ok(assemble(self.vocab.len(), sparse, &dense)?)
    }

    pub fn dataset(&self, texts: &[&str]) -> Result<Dataset> {
        let rows = texts
            .par_iter()
            .map(|t| self.features(t))
            .collect::<Result<Vec<_>>>()?;
        if rows.is_empty() {
            return Err(CliError::Invalid("no documents to featurize".into()));
        }
        Ok(Dataset::from_rows(&rows)?)
    }
}

/// Class-index labels for the tweets labeled at `level`; returns the
/// texts, labels and count of skipped unlabeled tweets.
pub fn labeled(corpus: &Corpus, level: Level) -> (Vec<&str>, Vec<usize>, usize) {
    let classes = level.classes();
    let mut texts = Vec::new();
    let mut y = Vec::new();
    let mut skipped = 0;
    for t in &corpus.tweets {
        match t.label(level) {
            Some(l) => {
                texts.push(t.text.as_str());
                y.push(classes.iter().position(|&c| c == l).expect("label belongs to its level"));
            }
            None => skipped += 1,
        }
    }
    (texts, y, skipped)
}

pub fn class_names(level: Level) -> Vec<String> {
    level.classes().iter().map(|c| c.to_string()).collect()
}

pub struct Pipeline {
    pub level: Level,
    pub transform: Transform,
    pub forest: RandomForest,
}

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: usize) {
        self.0.extend_from_slice(&(v as u32).to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn str(&mut self, s: &str) {
        self.u32(s.len());
        self.0.extend_from_slice(s.as_bytes());
    }
    fn strs(&mut self, v: &[String]) {
        self.u32(v.len());
        v.iter().for_each(|s| self.str(s));
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

fn truncated() -> CliError {
    CliError::Invalid("pipeline file truncated".into())
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(truncated)?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }
    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn bool(&mut self) -> Result<bool> {
        match self.u8()? {
            0 => Ok(false),
            1 => Ok(true),
            b => Err(CliError::Invalid(format!("pipeline file corrupt: flag byte {b}"))),
        }
    }
    fn str(&mut self) -> Result<String> {
        let n = self.u32()?;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| CliError::Invalid("pipeline file corrupt: bad UTF-8".into()))
    }
    fn strs(&mut self) -> Result<Vec<String>> {
        let n = self.u32()?;
        (0..n).map(|_| self.str()).collect()
    }
}

impl Pipeline {
    pub fn to_bytes(&self) -> Vec<u8> {
        let t = &self.transform;
        let mut w = Writer(PIPELINE_MAGIC.to_vec());
        w.0.extend_from_slice(&PIPELINE_VERSION.to_le_bytes());
        w.u8(match self.level {
            Level::A => 0,
            Level::B => 1,
            Level::C => 2,
        });
        let p = &t.prep;
        for b in [p.lowercase, p.strip_punct, p.reduce_elongation, p.split_hashtags, p.remove_stopwords, p.stem] {
            w.u8(b as u8);
        }
        w.u8(matches!(p.emoji_mode, EmojiMode::Keep) as u8);
        w.u8(matches!(p.emoji_aggregate, EmojiAggregate::Sum) as u8);
        w.str(&t.language);
        w.u32(t.vocab.ngram());
        w.u64(t.vocab.n_docs() as u64);
        w.u32(t.vocab.len());
        for (term, &df) in t.vocab.terms().iter().zip(t.vocab.dfs()) {
            w.str(term);
            w.u64(df as u64);
        }
        w.strs(&t.stoplist);
        w.strs(&t.abusive);
        w.u32(t.emoji.len());
        for (e, s) in &t.emoji {
            w.str(e);
            w.f64(*s);
        }
        let forest = save_model(&self.forest);
        w.u64(forest.len() as u64);
        w.0.extend_from_slice(&forest);
        w.0
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.starts_with(MODEL_MAGIC) {
            return Err(CliError::Invalid(
                "this is a bare forest without its feature transform; use a model written by `train`".into(),
            ));
        }
        if !bytes.starts_with(PIPELINE_MAGIC) {
            return Err(CliError::Invalid("not a model file written by `train`".into()));
        }
        let mut r = Reader { bytes, pos: PIPELINE_MAGIC.len() };
        let version = r.u16()?;
        if version != PIPELINE_VERSION {
            return Err(CliError::Invalid(format!(
                "unsupported pipeline version {version} (expected {PIPELINE_VERSION})"
            )));
        }
        let level = match r.u8()? {
            0 => Level::A,
            1 => Level::B,
            2 => Level::C,
            b => return Err(CliError::Invalid(format!("pipeline file corrupt: level byte {b}"))),
        };
        let prep = PrepConfig {
            lowercase: r.bool()?,
            strip_punct: r.bool()?,
            reduce_elongation: r.bool()?,
            split_hashtags: r.bool()?,
            remove_stopwords: r.bool()?,
            stem: r.bool()?,
            emoji_mode: if r.bool()? { EmojiMode::Keep } else { EmojiMode::RemoveAndScore },
            emoji_aggregate: if r.bool()? { EmojiAggregate::Sum } else { EmojiAggregate::Mean },
        };
        let language = r.str()?;
        let ngram = r.u32()?;
        let n_docs = r.u64()? as usize;
        let n_terms = r.u32()?;
        let mut terms = Vec::with_capacity(n_terms.min(1 << 20));
        let mut dfs = Vec::with_capacity(n_terms.min(1 << 20));
        for _ in 0..n_terms {
            terms.push(r.str()?);
            dfs.push(r.u64()? as usize);
        }
        let vocab = Vocabulary::from_parts(terms, dfs, n_docs, ngram)?;
        let stoplist = r.strs()?;
        let abusive = r.strs()?;
        let n_emoji = r.u32()?;
        let emoji = (0..n_emoji)
            .map(|_| Ok((r.str()?, r.f64()?)))
            .collect::<Result<Vec<_>>>()?;
        let forest_len = r.u64()? as usize;
        let forest = load_model(r.take(forest_len)?)?;
        if r.pos != bytes.len() {
            return Err(CliError::Invalid("pipeline file corrupt: trailing bytes".into()));
        }
        let transform = Transform::build(prep, language, vocab, stoplist, abusive, emoji)?;
        if forest.n_features() != transform.dim() {
            return Err(CliError::Invalid(format!(
                "model expects {} features but its transform produces {}",
                forest.n_features(),
                transform.dim()
            )));
        }
        if forest.classes() != class_names(level).as_slice() {
            return Err(CliError::Invalid("model classes do not match its level".into()));
        }
        Ok(Pipeline { level, transform, forest })
    }
}
