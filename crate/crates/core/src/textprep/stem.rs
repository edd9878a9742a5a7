use rust_stemmers::{Algorithm, Stemmer as Snowball};

use crate::error::{Error, Result};

/// Suffix-stripping stemmer. Implementations must be idempotent.
pub trait Stemmer: Send + Sync {
    fn stem(&self, token: &str) -> String;

    /// Language tag the stemmer was built for.
    fn language(&self) -> &str;
}

/// Leaves every token unchanged.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityStemmer;

impl Stemmer for IdentityStemmer {
    fn stem(&self, token: &str) -> String {
        token.to_string()
    }

    fn language(&self) -> &str {
        "none"
    }
}

/// Snowball stemmer, iterated to a fixed point so that repeated
/// application never changes the result.
pub struct SnowballStemmer {
    inner: Snowball,
    language: &'static str,
}

const MAX_PASSES: usize = 8;

impl SnowballStemmer {
    pub fn new(language: &str) -> Result<Self> {
        let (algorithm, tag) = match language.to_ascii_lowercase().as_str() {
            "da" | "dan" | "danish" => (Algorithm::Danish, "danish"),
            "en" | "eng" | "english" => (Algorithm::English, "english"),
            "de" | "deu" | "german" => (Algorithm::German, "german"),
            "el" | "ell" | "greek" => (Algorithm::Greek, "greek"),
            "tr" | "tur" | "turkish" => (Algorithm::Turkish, "turkish"),
            "ar" | "ara" | "arabic" => (Algorithm::Arabic, "arabic"),
            other => return Err(Error::Contract(format!("unsupported stemmer language `{other}`"))),
        };
        Ok(SnowballStemmer {
            inner: Snowball::create(algorithm),
            language: tag,
        })
    }
}

impl Stemmer for SnowballStemmer {
    fn stem(&self, token: &str) -> String {
        let mut current = token.to_string();
        for _ in 0..MAX_PASSES {
            let next = self.inner.stem(&current).into_owned();
            if next == current {
                break;
            }
            current = next;
        }
        current
    }

    fn language(&self) -> &str {
        self.language
    }
}

/// Builds the stemmer for a language tag; `none` selects the identity stemmer.
pub fn stemmer_for(language: &str) -> Result<Box<dyn Stemmer>> {
    match language {
        "none" | "identity" => Ok(Box::new(IdentityStemmer)),
        other => Ok(Box::new(SnowballStemmer::new(other)?)),
    }
}

pub fn stem(token: &str, language: &str) -> Result<String> {
    Ok(stemmer_for(language)?.stem(token))
}
