//! Tweet normalization and tokenization.
//!
//! [`Preprocessor::preprocess`] runs the enabled steps in a fixed order:
//! hashtag splitting, elongation reduction, emoji extraction, tokenization,
//! lowercasing, punctuation removal, stopword removal and stemming.
//! Hashtag splitting must precede lowercasing since it breaks on capitals.

mod emoji;
mod normalize;
mod stem;
mod tokenize;

use std::collections::HashSet;
use std::io::Read;

pub use emoji::{
    extract_emoji_sentiment, extract_emoji_sentiment_with, is_emoji, EmojiAggregate,
    EmojiSentimentLexicon,
};
pub use normalize::{reduce_elongation, split_hashtag, split_hashtags_in_text};
pub use stem::{stem, stemmer_for, IdentityStemmer, SnowballStemmer, Stemmer};
pub use tokenize::{is_placeholder, is_punct, tokenize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmojiMode {
    /// Strip emoji from the text and keep their aggregate sentiment.
    RemoveAndScore,
    /// Leave emoji in place as tokens.
    Keep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrepConfig {
    pub lowercase: bool,
    pub strip_punct: bool,
    pub reduce_elongation: bool,
    pub split_hashtags: bool,
    pub remove_stopwords: bool,
    pub stem: bool,
    pub emoji_mode: EmojiMode,
    pub emoji_aggregate: EmojiAggregate,
}

impl Default for PrepConfig {
    fn default() -> Self {
        PrepConfig {
            lowercase: true,
            strip_punct: true,
            reduce_elongation: true,
            split_hashtags: true,
            remove_stopwords: true,
            stem: true,
            emoji_mode: EmojiMode::RemoveAndScore,
            emoji_aggregate: EmojiAggregate::Mean,
        }
    }
}

impl PrepConfig {
    /// Every step disabled; emoji kept.
    pub fn identity() -> Self {
        PrepConfig {
            lowercase: false,
            strip_punct: false,
            reduce_elongation: false,
            split_hashtags: false,
            remove_stopwords: false,
            stem: false,
            emoji_mode: EmojiMode::Keep,
            emoji_aggregate: EmojiAggregate::Mean,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TokenizedTweet {
    pub tokens: Vec<String>,
    pub emoji_score: f64,
    /// The untouched input, kept for surface features.
    pub raw_text: String,
}

/// Drops tokens found in `stoplist` (which must be lowercase), comparing
/// case-insensitively.
pub fn remove_stopwords(tokens: Vec<String>, stoplist: &HashSet<String>) -> Vec<String> {
    if stoplist.is_empty() {
        return tokens;
    }
    tokens
        .into_iter()
        .filter(|t| !stoplist.contains(&t.to_lowercase()))
        .collect()
}

/// Removes punctuation characters from each token except the placeholders,
/// dropping tokens left empty.
pub fn strip_punctuation(tokens: Vec<String>) -> Vec<String> {
    tokens
        .into_iter()
        .filter_map(|t| {
            if is_placeholder(&t) {
                return Some(t);
            }
            let kept: String = t.chars().filter(|&c| !is_punct(c)).collect();
            (!kept.is_empty()).then_some(kept)
        })
        .collect()
}

/// Reads a one-word-per-line list, lowercasing entries and skipping blanks.
pub fn load_word_list<R: Read>(mut source: R) -> Result<HashSet<String>> {
    let mut text = String::new();
    source
        .read_to_string(&mut text)
        .map_err(|e| Error::parse(0, format!("unreadable word list: {e}")))?;
    Ok(text
        .lines()
        .map(|l| l.trim())
        .filter(|l| !l.is_empty())
        .map(str::to_lowercase)
        .collect())
}

/// A configured preprocessing pipeline. Immutable, so one instance can be
/// shared across threads.
pub struct Preprocessor {
    pub config: PrepConfig,
    pub stoplist: HashSet<String>,
    pub emoji_lexicon: EmojiSentimentLexicon,
    stemmer: Box<dyn Stemmer>,
}

impl Preprocessor {
    pub fn new(
        config: PrepConfig,
        stoplist: HashSet<String>,
        emoji_lexicon: EmojiSentimentLexicon,
        stemmer: Box<dyn Stemmer>,
    ) -> Self {
        Preprocessor {
            config,
            stoplist,
            emoji_lexicon,
            stemmer,
        }
    }

    /// Pipeline with empty resources and the identity stemmer.
    pub fn plain(config: PrepConfig) -> Self {
        Self::new(
            config,
            HashSet::new(),
            EmojiSentimentLexicon::new(),
            Box::new(IdentityStemmer),
        )
    }

    pub fn stemmer_language(&self) -> &str {
        self.stemmer.language()
    }

    pub fn preprocess(&self, text: &str) -> TokenizedTweet {
        let cfg = &self.config;
        let mut work = if cfg.split_hashtags {
            split_hashtags_in_text(text)
        } else {
            text.to_string()
        };
        if cfg.reduce_elongation {
            work = reduce_elongation(&work);
        }
        let mut emoji_score = 0.0;
        if cfg.emoji_mode == EmojiMode::RemoveAndScore {
            let (stripped, score) =
                extract_emoji_sentiment_with(&work, &self.emoji_lexicon, cfg.emoji_aggregate);
            work = stripped;
            emoji_score = score;
        }
        let mut tokens = tokenize(&work);
        if cfg.lowercase {
            tokens = tokens.into_iter().map(|t| t.to_lowercase()).collect();
        }
        if cfg.strip_punct {
            tokens = strip_punctuation(tokens);
        }
        if cfg.remove_stopwords {
            tokens = remove_stopwords(tokens, &self.stoplist);
        }
        if cfg.stem {
            tokens = tokens
                .into_iter()
                .map(|t| if is_placeholder(&t) { t } else { self.stemmer.stem(&t) })
                .collect();
        }
        TokenizedTweet {
            tokens,
            emoji_score,
            raw_text: text.to_string(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(words: &[&str]) -> HashSet<String> {
        words.iter().map(|w| w.to_string()).collect()
    }

    #[test]
    fn full_default_pipeline() {
        let p = Preprocessor::plain(PrepConfig::default());
        let out = p.preprocess("@USER Sooo #GoHome!!!");
        assert_eq!(out.tokens, ["@user", "soo", "go", "home"]);
        assert_eq!(out.emoji_score, 0.0);
        assert_eq!(out.raw_text, "@USER Sooo #GoHome!!!");
    }

    #[test]
    fn identity_config_is_whitespace_split() {
        let p = Preprocessor::plain(PrepConfig::identity());
        let text = "@USER Sooo  Go home URL 😀";
        let ws: Vec<&str> = text.split_whitespace().collect();
        assert_eq!(p.preprocess(text).tokens, ws);
    }

    #[test]
    fn empty_input() {
        let out = Preprocessor::plain(PrepConfig::default()).preprocess("");
        assert!(out.tokens.is_empty());
        assert_eq!(out.emoji_score, 0.0);
        assert_eq!(out.raw_text, "");
    }

    #[test]
    fn stopwords_case_insensitive() {
        assert_eq!(remove_stopwords(vec!["og".into(), "hund".into()], &set(&["og"])), ["hund"]);
        assert!(remove_stopwords(vec![], &set(&["og"])).is_empty());
        assert!(remove_stopwords(vec!["Og".into(), "og".into()], &set(&["og"])).is_empty());
    }

    #[test]
    fn emoji_removed_and_scored() {
        let mut lex = EmojiSentimentLexicon::new();
        lex.insert("😀", 0.4).unwrap();
        lex.insert("😠", -0.2).unwrap();
        let p = Preprocessor::new(PrepConfig::default(), HashSet::new(), lex, Box::new(IdentityStemmer));
        let out = p.preprocess("nice😀 day 😠");
        assert_eq!(out.tokens, ["nice", "day"]);
        assert!((out.emoji_score - 0.1).abs() < 1e-12);
    }

    #[test]
    fn danish_stemming_and_stopwords() {
        let p = Preprocessor::new(
            PrepConfig::default(),
            set(&["og"]),
            EmojiSentimentLexicon::new(),
            stemmer_for("danish").unwrap(),
        );
        assert_eq!(p.preprocess("Hundene og URL").tokens, ["hund", "url"]);
    }

    #[test]
    fn word_list_loading() {
        let s = load_word_list("Og\n\n i \nat\n".as_bytes()).unwrap();
        assert_eq!(s, set(&["og", "i", "at"]));
    }
}
