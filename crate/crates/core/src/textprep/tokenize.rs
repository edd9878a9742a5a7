use super::emoji::emoji_len;
use super::normalize::is_word_char;

/// Punctuation: ASCII punctuation plus the common Latin-1, general and CJK
/// punctuation marks.
pub fn is_punct(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(c,
            '\u{A1}' | '\u{A7}' | '\u{AB}' | '\u{B6}' | '\u{B7}' | '\u{BB}' | '\u{BF}'
            | '\u{2010}'..='\u{2027}'
            | '\u{2030}'..='\u{205E}'
            | '\u{3001}'..='\u{3003}'
            | '\u{3008}'..='\u{3011}')
}

/// True for the `@USER` and `URL` desensitization placeholders, in any case.
pub fn is_placeholder(token: &str) -> bool {
    token.eq_ignore_ascii_case("@USER") || token.eq_ignore_ascii_case("URL")
}

/// Tweet-aware tokenizer.
///
/// Splits on whitespace, then within each chunk keeps mentions (`@name`),
/// hashtags and emoji sequences whole and detaches leading and trailing
/// punctuation runs as separate tokens. Punctuation inside a word stays.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    for chunk in text.split_whitespace() {
        tokenize_chunk(chunk, &mut tokens);
    }
    tokens
}

fn tokenize_chunk(chunk: &str, out: &mut Vec<String>) {
    let chars: Vec<char> = chunk.chars().collect();
    let n = chars.len();
    let tagged = |i: usize| {
        (chars[i] == '@' || chars[i] == '#') && i + 1 < n && is_word_char(chars[i + 1])
    };
    let mut i = 0;
    while i < n {
        if let Some(len) = emoji_len(&chars, i) {
            out.push(chars[i..i + len].iter().collect());
            i += len;
            continue;
        }
        let start = i;
        if tagged(i) {
            i += 1;
            while i < n && is_word_char(chars[i]) {
                i += 1;
            }
        } else if is_punct(chars[i]) {
            while i < n && is_punct(chars[i]) && !tagged(i) && emoji_len(&chars, i).is_none() {
                i += 1;
            }
        } else {
            while i < n && emoji_len(&chars, i).is_none() {
                i += 1;
            }
            // give trailing punctuation back to the next token
            while i > start + 1 && is_punct(chars[i - 1]) {
                i -= 1;
            }
        }
        out.push(chars[start..i].iter().collect());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        tokenize(s)
    }

    #[test]
    fn stated_rules() {
        assert_eq!(toks("@USER go away!"), ["@USER", "go", "away", "!"]);
        assert!(toks("").is_empty());
        assert_eq!(toks("se URL #GoHome nu"), ["se", "URL", "#GoHome", "nu"]);
    }

    #[test]
    fn punctuation_runs_and_emoji() {
        assert_eq!(toks("(hello)..."), ["(", "hello", ")..."]);
        assert_eq!(toks("wow!!😀😀"), ["wow", "!!", "😀", "😀"]);
        assert_eq!(toks("don't"), ["don't"]);
        assert_eq!(toks("!!!#GoHome,"), ["!!!", "#GoHome", ","]);
        assert_eq!(toks("@USER,@USER"), ["@USER", ",", "@USER"]);
        assert_eq!(toks("👍🏽ok"), ["👍🏽", "ok"]);
    }

    #[test]
    fn placeholders() {
        assert!(is_placeholder("@user"));
        assert!(is_placeholder("URL"));
        assert!(!is_placeholder("@bob"));
    }
}
