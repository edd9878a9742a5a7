//! Dense TF-IDF recomputed from counts, independent of the library's
//! sparse path.

use std::collections::BTreeMap;

use offense_core::features::{tfidf, Vocabulary};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn words(s: &str) -> Vec<String> {
    s.split_whitespace().map(String::from).collect()
}

/// Weights keyed by term, from a corpus and a query document.
pub fn oracle_weights(corpus: &[Vec<String>], doc: &[String]) -> BTreeMap<String, f64> {
    let n = corpus.len() as f64;
    let mut raw = BTreeMap::new();
    for term in doc {
        if raw.contains_key(term) {
            continue;
        }
        let df = corpus.iter().filter(|d| d.contains(term)).count();
        if df == 0 {
            continue;
        }
        let tf = doc.iter().filter(|t| *t == term).count() as f64;
        let idf = ((1.0 + n) / (1.0 + df as f64)).ln() + 1.0;
        raw.insert(term.clone(), tf * idf);
    }
    let norm: f64 = raw.values().map(|w| w * w).sum::<f64>().sqrt();
    raw.into_iter().map(|(t, w)| (t, w / norm)).collect()
}

fn library_weights(vocab: &Vocabulary, doc: &[String]) -> BTreeMap<String, f64> {
    tfidf(doc, vocab)
        .into_iter()
        .map(|(i, w)| (vocab.terms()[i as usize].clone(), w))
        .collect()
}

/// Largest deviation on the two-document fixture, against both the
/// closed form and the four-decimal hand values.
pub fn hand_fixture_error() -> f64 {
    let corpus = vec![words("a b"), words("b c")];
    let vocab = Vocabulary::fit(&corpus, 1, 1).unwrap();
    let got = library_weights(&vocab, &words("a b"));
    let wa = 1.5f64.ln() + 1.0;
    let norm = (wa * wa + 1.0).sqrt();
    let closed = [wa / norm, 1.0 / norm];
    let hand = [0.8148, 0.5797];
    let mut err: f64 = 0.0;
    for (k, term) in ["a", "b"].iter().enumerate() {
        let g = got.get(*term).copied().unwrap_or(f64::NAN);
        err = err.max((g - closed[k]).abs());
        // hand values are rounded to four places
        if (g - hand[k]).abs() > 5e-5 {
            return f64::INFINITY;
        }
    }
    if got.len() != 2 {
        return f64::INFINITY;
    }
    err
}

/// Fits on random documents, then returns the largest deviation of any
/// vector norm from 1 and of any weight from the dense oracle.
pub fn random_docs_error(seed: u64, count: usize) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let alphabet: Vec<String> = (0..40).map(|i| format!("w{i}")).collect();
    let docs: Vec<Vec<String>> = (0..count)
        .map(|_| {
            let len = rng.gen_range(1..=20);
            (0..len).map(|_| alphabet[rng.gen_range(0..alphabet.len())].clone()).collect()
        })
        .collect();
    let vocab = Vocabulary::fit(&docs, 1, 1).unwrap();
    let mut norm_err: f64 = 0.0;
    let mut weight_err: f64 = 0.0;
    for doc in &docs {
        let got = library_weights(&vocab, doc);
        let norm: f64 = got.values().map(|w| w * w).sum::<f64>().sqrt();
        norm_err = norm_err.max((norm - 1.0).abs());
        let want = oracle_weights(&docs, doc);
        if got.keys().ne(want.keys()) {
            return (norm_err, f64::INFINITY);
        }
        for (t, w) in &want {
            weight_err = weight_err.max((got[t] - w).abs());
        }
    }
    (norm_err, weight_err)
}
