//! TF-IDF vectorization, surface features and their assembly into one
//! feature vector.

use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};
use crate::textprep::{is_placeholder, is_punct, tokenize};

/// Term index with document frequencies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, usize>,
    df: Vec<usize>,
    n_docs: usize,
    ngram: usize,
}

/// All n-grams of order 1..=max_n, joined with single spaces.
pub fn ngrams(tokens: &[String], max_n: usize) -> Vec<String> {
    if max_n <= 1 {
        return tokens.to_vec();
    }
    let mut out = Vec::with_capacity(tokens.len() * max_n);
    for n in 1..=max_n {
        for window in tokens.windows(n) {
            out.push(window.join(" "));
        }
    }
    out
}

/// Unigram vocabulary of terms occurring in at least `min_df` documents.
pub fn fit_vocabulary(docs: &[Vec<String>], min_df: usize) -> Result<Vocabulary> {
    Vocabulary::fit(docs, min_df, 1)
}

impl Vocabulary {
    /// Indices follow first occurrence across `docs`, so fitting is
    /// deterministic for a given document order.
    pub fn fit(docs: &[Vec<String>], min_df: usize, ngram: usize) -> Result<Self> {
        if docs.is_empty() {
            return Err(Error::Contract("cannot fit a vocabulary on zero documents".into()));
        }
        if min_df == 0 {
            return Err(Error::Contract("min_df must be at least 1".into()));
        }
        if ngram == 0 {
            return Err(Error::Contract("n-gram order must be at least 1".into()));
        }
        let mut order: Vec<String> = Vec::new();
        let mut counts: HashMap<String, usize> = HashMap::new();
        for doc in docs {
            let mut seen = HashSet::new();
            for term in ngrams(doc, ngram) {
                if !seen.insert(term.clone()) {
                    continue;
                }
                let c = counts.entry(term.clone()).or_insert(0);
                if *c == 0 {
                    order.push(term);
                }
                *c += 1;
            }
        }
        let mut terms = Vec::new();
        let mut df = Vec::new();
        for term in order {
            let d = counts[&term];
            if d >= min_df {
                terms.push(term);
                df.push(d);
            }
        }
        Self::from_parts(terms, df, docs.len(), ngram)
    }

    /// Rebuilds a vocabulary from stored parts, checking its invariants.
    pub fn from_parts(terms: Vec<String>, df: Vec<usize>, n_docs: usize, ngram: usize) -> Result<Self> {
        if terms.len() != df.len() {
            return Err(Error::Validation("term and df lengths differ".into()));
        }
        if df.iter().any(|&d| d == 0 || d > n_docs) {
            return Err(Error::Validation("document frequency out of range".into()));
        }
        let mut index = HashMap::with_capacity(terms.len());
        for (i, t) in terms.iter().enumerate() {
            if index.insert(t.clone(), i).is_some() {
                return Err(Error::Validation(format!("duplicate vocabulary term `{t}`")));
            }
        }
        Ok(Vocabulary {
            terms,
            index,
            df,
            n_docs,
            ngram: ngram.max(1),
        })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn ngram(&self) -> usize {
        self.ngram
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn dfs(&self) -> &[usize] {
        &self.df
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn df(&self, term: &str) -> Option<usize> {
        self.index_of(term).map(|i| self.df[i])
    }

    /// Smoothed inverse document frequency `ln((1 + N) / (1 + df)) + 1`.
    pub fn idf(&self, index: usize) -> f64 {
        ((1.0 + self.n_docs as f64) / (1.0 + self.df[index] as f64)).ln() + 1.0
    }
}

/// Sparse (index, value) pairs, strictly increasing by index.
pub type SparseBlock = Vec<(u32, f64)>;

/// Raw term frequency times smoothed idf, L2-normalized. Out-of-vocabulary
/// tokens are ignored.
pub fn tfidf(doc: &[String], vocab: &Vocabulary) -> SparseBlock {
    let mut tf: HashMap<usize, f64> = HashMap::new();
    for term in ngrams(doc, vocab.ngram) {
        if let Some(i) = vocab.index_of(&term) {
            *tf.entry(i).or_insert(0.0) += 1.0;
        }
    }
    let mut block: Vec<(u32, f64)> = tf
        .into_iter()
        .map(|(i, f)| (i as u32, f * vocab.idf(i)))
        .collect();
    block.sort_unstable_by_key(|&(i, _)| i);
    let norm = block.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
    if norm > 0.0 {
        for (_, w) in &mut block {
            *w /= norm;
        }
    }
    block
}

pub const SURFACE_DIM: usize = 9;

pub const SURFACE_NAMES: [&str; SURFACE_DIM] = [
    "url_count",
    "mention_count",
    "char_count",
    "punct_count",
    "word_count",
    "avg_word_len",
    "capital_pct",
    "abusive_count",
    "emoji_score",
];

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SurfaceFeatures {
    pub url_count: usize,
    pub mention_count: usize,
    pub char_count: usize,
    pub punct_count: usize,
    pub word_count: usize,
    pub avg_word_len: f64,
    pub capital_pct: f64,
    pub abusive_count: usize,
    pub emoji_score: f64,
}

impl SurfaceFeatures {
    /// Values in [`SURFACE_NAMES`] order.
    pub fn to_array(&self) -> [f64; SURFACE_DIM] {
        [
            self.url_count as f64,
            self.mention_count as f64,
            self.char_count as f64,
            self.punct_count as f64,
            self.word_count as f64,
            self.avg_word_len,
            self.capital_pct,
            self.abusive_count as f64,
            self.emoji_score,
        ]
    }
}

/// Shallow descriptors of a post.
///
/// Counts over `raw_text` (placeholders, characters, punctuation, capitals)
/// skip the `@USER`/`URL` placeholders themselves, except `char_count`.
/// `tokens` are the pre-filter tokens: word statistics and abusive-term
/// matches come from them.
pub fn surface(
    raw_text: &str,
    tokens: &[String],
    abusive_lex: &HashSet<String>,
    emoji_score: f64,
) -> SurfaceFeatures {
    let mut f = SurfaceFeatures {
        char_count: raw_text.chars().count(),
        emoji_score,
        ..Default::default()
    };
    let mut letters = 0usize;
    let mut upper = 0usize;
    for tok in tokenize(raw_text) {
        match tok.as_str() {
            "URL" => f.url_count += 1,
            "@USER" => f.mention_count += 1,
            _ => {
                for c in tok.chars() {
                    if is_punct(c) {
                        f.punct_count += 1;
                    }
                    if c.is_alphabetic() {
                        letters += 1;
                        if c.is_uppercase() {
                            upper += 1;
                        }
                    }
                }
            }
        }
    }
    f.capital_pct = if letters == 0 { 0.0 } else { upper as f64 / letters as f64 };

    let mut word_chars = 0usize;
    for tok in tokens {
        if !is_placeholder(tok) && tok.chars().all(char::is_alphabetic) && !tok.is_empty() {
            f.word_count += 1;
            word_chars += tok.chars().count();
        }
        if abusive_lex.contains(&tok.to_lowercase()) {
            f.abusive_count += 1;
        }
    }
    if f.word_count > 0 {
        f.avg_word_len = word_chars as f64 / f.word_count as f64;
    }
    f
}

/// Read access to a feature row; absent sparse entries read as 0.0.
pub trait Features {
    fn dim(&self) -> usize;
    fn value(&self, index: usize) -> f64;
    /// Nonzero entries in increasing index order.
    fn nonzeros(&self) -> Vec<(usize, f64)>;
}

impl Features for [f64] {
    fn dim(&self) -> usize {
        self.len()
    }

    fn value(&self, index: usize) -> f64 {
        self[index]
    }

    fn nonzeros(&self) -> Vec<(usize, f64)> {
        self.iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, v)| (i, *v))
            .collect()
    }
}

impl Features for Vec<f64> {
    fn dim(&self) -> usize {
        self.as_slice().dim()
    }

    fn value(&self, index: usize) -> f64 {
        self[index]
    }

    fn nonzeros(&self) -> Vec<(usize, f64)> {
        self.as_slice().nonzeros()
    }
}

/// TF-IDF block followed by the nine surface features at indices
/// `V..V+8`, where `V` is the vocabulary size. No scaling is applied.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    sparse_dim: usize,
    sparse: SparseBlock,
    dense: [f64; SURFACE_DIM],
}

pub fn assemble(sparse_dim: usize, sparse: SparseBlock, dense: &[f64]) -> Result<FeatureVector> {
    let dense: [f64; SURFACE_DIM] = dense.try_into().map_err(|_| {
        Error::Contract(format!("dense block has {} values, expected {SURFACE_DIM}", dense.len()))
    })?;
    let increasing = sparse.windows(2).all(|w| w[0].0 < w[1].0);
    let in_range = sparse.last().is_none_or(|&(i, _)| (i as usize) < sparse_dim);
    if !increasing || !in_range {
        return Err(Error::Contract("sparse indices must be strictly increasing and in range".into()));
    }
    if sparse.iter().any(|(_, v)| !v.is_finite()) || dense.iter().any(|v| !v.is_finite()) {
        return Err(Error::Contract("feature values must be finite".into()));
    }
    Ok(FeatureVector {
        sparse_dim,
        sparse,
        dense,
    })
}

impl FeatureVector {
    pub fn sparse(&self) -> &[(u32, f64)] {
        &self.sparse
    }

    pub fn dense(&self) -> &[f64; SURFACE_DIM] {
        &self.dense
    }

    pub fn sparse_dim(&self) -> usize {
        self.sparse_dim
    }

    /// Little-endian binary encoding.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + self.sparse.len() * 12 + SURFACE_DIM * 8);
        out.extend_from_slice(&(self.sparse_dim as u32).to_le_bytes());
        out.extend_from_slice(&(self.sparse.len() as u32).to_le_bytes());
        for &(i, v) in &self.sparse {
            out.extend_from_slice(&i.to_le_bytes());
            out.extend_from_slice(&v.to_le_bytes());
        }
        for v in self.dense {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut pos = 0usize;
        let mut take = |n: usize| -> Result<&[u8]> {
            let s = bytes
                .get(pos..pos + n)
                .ok_or_else(|| Error::Contract("feature vector bytes truncated".into()))?;
            pos += n;
            Ok(s)
        };
        let u32_at = |s: &[u8]| u32::from_le_bytes(s.try_into().unwrap());
        let f64_at = |s: &[u8]| f64::from_le_bytes(s.try_into().unwrap());
        let sparse_dim = u32_at(take(4)?) as usize;
        let nnz = u32_at(take(4)?) as usize;
        let mut sparse = Vec::with_capacity(nnz.min(bytes.len() / 12));
        for _ in 0..nnz {
            let i = u32_at(take(4)?);
            let v = f64_at(take(8)?);
            sparse.push((i, v));
        }
        let mut dense = [0.0; SURFACE_DIM];
        for d in &mut dense {
            *d = f64_at(take(8)?);
        }
        assemble(sparse_dim, sparse, &dense)
    }
}

impl Features for FeatureVector {
    fn dim(&self) -> usize {
        self.sparse_dim + SURFACE_DIM
    }

    fn value(&self, index: usize) -> f64 {
        if index >= self.sparse_dim {
            return self.dense[index - self.sparse_dim];
        }
        match self.sparse.binary_search_by_key(&(index as u32), |&(i, _)| i) {
            Ok(pos) => self.sparse[pos].1,
            Err(_) => 0.0,
        }
    }

    fn nonzeros(&self) -> Vec<(usize, f64)> {
        let mut out: Vec<(usize, f64)> = self
            .sparse
            .iter()
            .filter(|(_, v)| *v != 0.0)
            .map(|&(i, v)| (i as usize, v))
            .collect();
        for (k, &v) in self.dense.iter().enumerate() {
            if v != 0.0 {
                out.push((self.sparse_dim + k, v));
            }
        }
        out
    }
}
