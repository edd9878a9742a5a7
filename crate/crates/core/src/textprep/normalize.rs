use crate::error::{Error, Result};

/// Shortens every run of more than two identical characters to two.
pub fn reduce_elongation(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut prev: Option<char> = None;
    let mut run = 0usize;
    for c in text.chars() {
        if Some(c) == prev {
            run += 1;
        } else {
            prev = Some(c);
            run = 1;
        }
        if run <= 2 {
            out.push(c);
        }
    }
    out
}

pub(crate) fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Splits a hashtag into segments, starting a new segment at every
/// uppercase letter. The leading `#` is dropped.
pub fn split_hashtag(token: &str) -> Result<Vec<String>> {
    let body = token
        .strip_prefix('#')
        .ok_or_else(|| Error::Contract(format!("`{token}` is not a hashtag")))?;
    let mut segments = Vec::new();
    let mut current = String::new();
    for c in body.chars() {
        if c.is_uppercase() && !current.is_empty() {
            segments.push(std::mem::take(&mut current));
        }
        current.push(c);
    }
    if !current.is_empty() {
        segments.push(current);
    }
    Ok(segments)
}

/// Replaces every hashtag in `text` with its space-separated segments.
/// A hashtag is `#` followed by word characters, not preceded by a word
/// character.
pub fn split_hashtags_in_text(text: &str) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len() + 8);
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let starts_tag = c == '#'
            && chars.get(i + 1).is_some_and(|&n| is_word_char(n))
            && (i == 0 || !is_word_char(chars[i - 1]));
        if starts_tag {
            let mut j = i + 1;
            while j < chars.len() && is_word_char(chars[j]) {
                j += 1;
            }
            let tag: String = chars[i..j].iter().collect();
            let segments = split_hashtag(&tag).expect("tag starts with #");
            out.push_str(&segments.join(" "));
            i = j;
        } else {
            out.push(c);
            i += 1;
        }
    }
    out
}
