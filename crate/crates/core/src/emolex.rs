//! Emotion-word counts per class, from an NRC-style word/emotion lexicon.
//! Analysis only: the counts never feed the classifier.

use std::collections::HashMap;
use std::fmt;
use std::fmt::Write as _;
use std::io::Read;
use std::str::FromStr;

use crate::corpus::{Corpus, Label, Level};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Emotion {
    Positive,
    Negative,
    Anger,
    Anticipation,
    Disgust,
    Fear,
    Joy,
    Sadness,
    Surprise,
    Trust,
}

impl Emotion {
    /// Report column order.
    pub const ALL: [Emotion; 10] = [
        Emotion::Positive,
        Emotion::Negative,
        Emotion::Anger,
        Emotion::Anticipation,
        Emotion::Disgust,
        Emotion::Fear,
        Emotion::Joy,
        Emotion::Sadness,
        Emotion::Surprise,
        Emotion::Trust,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Emotion::Positive => "positive",
            Emotion::Negative => "negative",
            Emotion::Anger => "anger",
            Emotion::Anticipation => "anticipation",
            Emotion::Disgust => "disgust",
            Emotion::Fear => "fear",
            Emotion::Joy => "joy",
            Emotion::Sadness => "sadness",
            Emotion::Surprise => "surprise",
            Emotion::Trust => "trust",
        }
    }

    pub fn short(self) -> &'static str {
        &self.name()[..3]
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl FromStr for Emotion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Emotion::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::Contract(format!("unknown emotion category `{s}`")))
    }
}

impl fmt::Display for Emotion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Word to category bitmask, bit `i` for `Emotion::ALL[i]`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EmotionLexicon {
    words: HashMap<String, u16>,
}

impl EmotionLexicon {
    pub fn insert(&mut self, word: &str, emotion: Emotion) {
        *self.words.entry(word.to_lowercase()).or_insert(0) |= 1 << emotion.index();
    }

    pub fn contains(&self, word: &str, emotion: Emotion) -> bool {
        self.words.get(word).is_some_and(|m| m & (1 << emotion.index()) != 0)
    }

    pub fn categories(&self, word: &str) -> Vec<Emotion> {
        let mask = self.words.get(word).copied().unwrap_or(0);
        Emotion::ALL.into_iter().filter(|e| mask & (1 << e.index()) != 0).collect()
    }

    /// Words carrying at least one category.
    pub fn len(&self) -> usize {
        self.words.values().filter(|&&m| m != 0).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Reads `word<TAB>category<TAB>flag` rows. Flag-0 rows are kept only to
/// check consistency; entries containing whitespace are skipped.
pub fn load_emotion_lexicon<R: Read>(mut source: R) -> Result<EmotionLexicon> {
    let mut text = String::new();
    source.read_to_string(&mut text)?;
    let mut seen: HashMap<(String, Emotion), bool> = HashMap::new();
    let mut lex = EmotionLexicon::default();
    let mut skipped = 0usize;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::parse(line_no, format!("expected 3 tab-separated fields, got {}", fields.len())));
        }
        let word = fields[0].trim().to_lowercase();
        let emotion: Emotion = fields[1]
            .trim()
            .parse()
            .map_err(|_| Error::parse(line_no, format!("unknown category `{}`", fields[1])))?;
        let flag = match fields[2].trim() {
            "0" => false,
            "1" => true,
            other => return Err(Error::parse(line_no, format!("flag must be 0 or 1, got `{other}`"))),
        };
        if word.is_empty() {
            return Err(Error::parse(line_no, "empty word"));
        }
        if word.split_whitespace().nth(1).is_some() {
            skipped += 1;
            continue;
        }
        match seen.insert((word.clone(), emotion), flag) {
            Some(prev) if prev != flag => {
                return Err(Error::parse(line_no, format!("conflicting flags for `{word}` / {emotion}")));
            }
            _ => {}
        }
        if flag {
            lex.insert(&word, emotion);
        }
    }
    if skipped > 0 {
        log::info!("skipped {skipped} multi-word lexicon entries");
    }
    Ok(lex)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Basis {
    #[default]
    PerThousandPosts,
    PerPost,
    PerThousandTokens,
}

impl Basis {
    pub fn name(self) -> &'static str {
        match self {
            Basis::PerThousandPosts => "per_1000_posts",
            Basis::PerPost => "per_post",
            Basis::PerThousandTokens => "per_1000_tokens",
        }
    }
}

impl FromStr for Basis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Basis::PerThousandPosts, Basis::PerPost, Basis::PerThousandTokens]
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| Error::Contract(format!("unknown basis `{s}`")))
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmotionProfile {
    pub label: Label,
    /// Normalized counts in `Emotion::ALL` order.
    pub values: [f64; 10],
    pub basis: Basis,
    pub posts: usize,
    pub tokens: usize,
}

impl EmotionProfile {
    pub fn get(&self, e: Emotion) -> f64 {
        self.values[e.index()]
    }
}

/// One profile per level-A class. A token adds one to every category it
/// carries; matching is on the lowercased token. Unlabeled tweets are
/// ignored and a class with no posts gets an all-zero profile.
pub fn emotion_counts<F>(corpus: &Corpus, lex: &EmotionLexicon, basis: Basis, tokenize: F) -> Vec<EmotionProfile>
where
    F: Fn(&str) -> Vec<String>,
{
    Level::A
        .classes()
        .iter()
        .map(|&label| {
            let mut raw = [0u64; 10];
            let mut posts = 0usize;
            let mut tokens = 0usize;
            for t in corpus.tweets.iter().filter(|t| t.label(Level::A) == Some(label)) {
                posts += 1;
                for tok in tokenize(&t.text) {
                    tokens += 1;
                    for e in lex.categories(&tok.to_lowercase()) {
                        raw[e.index()] += 1;
                    }
                }
            }
            // scale before dividing: one rounding, so duplicated posts give
            // bit-identical values
            let (scale, denom) = match basis {
                Basis::PerThousandPosts => (1000.0, posts),
                Basis::PerPost => (1.0, posts),
                Basis::PerThousandTokens => (1000.0, tokens),
            };
            let values = raw.map(|c| if denom == 0 { 0.0 } else { c as f64 * scale / denom as f64 });
            EmotionProfile {
                label,
                values,
                basis,
                posts,
                tokens,
            }
        })
        .collect()
}

/// Rows are classes, columns the ten categories, three decimals.
pub fn emotion_report(profiles: &[EmotionProfile]) -> String {
    let mut out = String::new();
    if let Some(p) = profiles.first() {
        let _ = writeln!(out, "basis: {}", p.basis);
    }
    let _ = write!(out, "{:<6} {:>6}", "class", "posts");
    for e in Emotion::ALL {
        let _ = write!(out, " {:>9}", e.short());
    }
    out.push('\n');
    for p in profiles {
        let _ = write!(out, "{:<6} {:>6}", p.label, p.posts);
        for v in p.values {
            let _ = write!(out, " {v:>9.3}");
        }
        out.push('\n');
    }
    out
}
