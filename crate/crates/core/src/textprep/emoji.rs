use std::collections::HashMap;
use std::io::Read;

use crate::error::{Error, Result};

const ZWJ: char = '\u{200D}';
const VS15: char = '\u{FE0E}';
const VS16: char = '\u{FE0F}';
const KEYCAP: char = '\u{20E3}';

fn is_pictographic(c: char) -> bool {
    matches!(c,
        '\u{1F000}'..='\u{1FAFF}'
        | '\u{2600}'..='\u{27BF}'
        | '\u{231A}' | '\u{231B}' | '\u{2328}' | '\u{23CF}'
        | '\u{23E9}'..='\u{23F3}' | '\u{23F8}'..='\u{23FA}'
        | '\u{2194}'..='\u{2199}' | '\u{21A9}' | '\u{21AA}'
        | '\u{25AA}' | '\u{25AB}' | '\u{25B6}' | '\u{25C0}' | '\u{25FB}'..='\u{25FE}'
        | '\u{2934}' | '\u{2935}'
        | '\u{2B05}'..='\u{2B07}' | '\u{2B1B}' | '\u{2B1C}' | '\u{2B50}' | '\u{2B55}'
        | '\u{3030}' | '\u{303D}' | '\u{3297}' | '\u{3299}')
}

fn is_skin_tone(c: char) -> bool {
    ('\u{1F3FB}'..='\u{1F3FF}').contains(&c)
}

fn is_regional_indicator(c: char) -> bool {
    ('\u{1F1E6}'..='\u{1F1FF}').contains(&c)
}

fn is_tag(c: char) -> bool {
    ('\u{E0020}'..='\u{E007F}').contains(&c)
}

/// Length in chars of the emoji sequence starting at `chars[i]`, if any.
/// Covers modifier, variation-selector, ZWJ, keycap, flag and tag
/// sequences.
pub(crate) fn emoji_len(chars: &[char], i: usize) -> Option<usize> {
    let c = *chars.get(i)?;
    let n = chars.len();
    if matches!(c, '0'..='9' | '#' | '*') {
        // keycap: base [FE0F] 20E3
        let mut j = i + 1;
        if chars.get(j) == Some(&VS16) {
            j += 1;
        }
        return (chars.get(j) == Some(&KEYCAP)).then_some(j + 1 - i);
    }
    if is_regional_indicator(c) {
        let pair = i + 1 < n && is_regional_indicator(chars[i + 1]);
        return Some(if pair { 2 } else { 1 });
    }
    if !is_pictographic(c) {
        return None;
    }
    let mut j = i + 1;
    loop {
        while j < n && (chars[j] == VS16 || chars[j] == VS15 || is_skin_tone(chars[j]) || is_tag(chars[j])) {
            j += 1;
        }
        if j + 1 < n && chars[j] == ZWJ && is_pictographic(chars[j + 1]) {
            j += 2;
            continue;
        }
        break;
    }
    Some(j - i)
}

/// True when `s` consists of exactly one emoji sequence.
pub fn is_emoji(s: &str) -> bool {
    let chars: Vec<char> = s.chars().collect();
    !chars.is_empty() && emoji_len(&chars, 0) == Some(chars.len())
}

/// Sentiment scores in [-1, 1] keyed by emoji character sequence.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EmojiSentimentLexicon {
    scores: HashMap<String, f64>,
}

impl EmojiSentimentLexicon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, emoji: impl Into<String>, score: f64) -> Result<()> {
        if !(-1.0..=1.0).contains(&score) {
            return Err(Error::Validation(format!("emoji score {score} outside [-1, 1]")));
        }
        self.scores.insert(emoji.into(), score);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// Entries sorted by key.
    pub fn entries(&self) -> Vec<(&str, f64)> {
        let mut v: Vec<_> = self.scores.iter().map(|(k, v)| (k.as_str(), *v)).collect();
        v.sort_by(|a, b| a.0.cmp(b.0));
        v
    }

    /// Score for an emoji sequence; falls back to the sequence with
    /// variation selectors stripped.
    pub fn score(&self, emoji: &str) -> Option<f64> {
        self.scores.get(emoji).copied().or_else(|| {
            let bare: String = emoji.chars().filter(|&c| c != VS16 && c != VS15).collect();
            self.scores.get(&bare).copied()
        })
    }

    /// Parses `emoji,score` CSV. An optional `emoji,score` header is skipped.
    pub fn load<R: Read>(mut source: R) -> Result<Self> {
        let mut text = String::new();
        source
            .read_to_string(&mut text)
            .map_err(|e| Error::parse(0, format!("unreadable emoji lexicon: {e}")))?;
        let mut lex = Self::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || (idx == 0 && line.starts_with("emoji,")) {
                continue;
            }
            let (emoji, score) = line
                .rsplit_once(',')
                .ok_or_else(|| Error::parse(idx + 1, "expected `emoji,score`"))?;
            let score: f64 = score
                .trim()
                .parse()
                .map_err(|_| Error::parse(idx + 1, format!("bad score `{score}`")))?;
            if emoji.is_empty() {
                return Err(Error::parse(idx + 1, "empty emoji field"));
            }
            lex.insert(emoji, score)
                .map_err(|e| Error::parse(idx + 1, e.to_string()))?;
        }
        Ok(lex)
    }
}

/// How per-emoji scores combine into one post-level score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EmojiAggregate {
    #[default]
    Mean,
    Sum,
}

/// Removes every emoji from `text` and returns the mean score of the
/// emoji found. Unknown emoji count toward the mean with score 0.
pub fn extract_emoji_sentiment(text: &str, lex: &EmojiSentimentLexicon) -> (String, f64) {
    extract_emoji_sentiment_with(text, lex, EmojiAggregate::Mean)
}

pub fn extract_emoji_sentiment_with(
    text: &str,
    lex: &EmojiSentimentLexicon,
    aggregate: EmojiAggregate,
) -> (String, f64) {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len());
    let mut total = 0.0;
    let mut found = 0usize;
    let mut i = 0;
    while i < chars.len() {
        match emoji_len(&chars, i) {
            Some(len) => {
                let seq: String = chars[i..i + len].iter().collect();
                total += lex.score(&seq).unwrap_or(0.0);
                found += 1;
                // keep neighbours from fusing into one token
                let before = out.chars().next_back().is_some_and(|c| !c.is_whitespace());
                let after = chars
                    .get(i + len)
                    .is_some_and(|&c| !c.is_whitespace() && emoji_len(&chars, i + len).is_none());
                if before && after {
                    out.push(' ');
                }
                i += len;
            }
            None => {
                out.push(chars[i]);
                i += 1;
            }
        }
    }
    let score = match (aggregate, found) {
        (_, 0) => 0.0,
        (EmojiAggregate::Mean, n) => total / n as f64,
        (EmojiAggregate::Sum, _) => total,
    };
    (out, score)
}
