//! Synthetic corpora and config files for the command tests.
#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const HEADER: &str = "id\ttweet\tsubtask_a\tsubtask_b\tsubtask_c";

const NEUTRAL: [&str; 24] = [
    "weather", "coffee", "morning", "train", "music", "garden", "friday", "match", "dinner", "movie", "summer",
    "office", "holiday", "market", "river", "bread", "bicycle", "football", "news", "window", "library", "concert",
    "street", "evening",
];

const INSULTS: [&str; 8] = ["idiot", "moron", "loser", "clown", "scum", "pathetic", "stupid", "trash"];

pub fn offense() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_offense"))
}

pub fn run(args: &[&str]) -> Output {
    Command::new(offense()).args(args).env("NO_COLOR", "1").output().expect("binary runs")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// `n` posts, about 13% offensive. Offensive posts always carry an insult,
/// which no inoffensive post contains.
pub fn separable_corpus(n: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = format!("{HEADER}\n");
    for i in 0..n {
        let off = rng.gen_bool(0.13);
        let len = rng.gen_range(4..10);
        let mut words: Vec<String> = (0..len).map(|_| NEUTRAL.choose(&mut rng).unwrap().to_string()).collect();
        if rng.gen_bool(0.3) {
            words.insert(0, "@USER".into());
        }
        if rng.gen_bool(0.2) {
            words.push("URL".into());
        }
        if off {
            let at = rng.gen_range(0..=words.len());
            words.insert(at, INSULTS.choose(&mut rng).unwrap().to_string());
        }
        let text = words.join(" ");
        if off {
            s.push_str(&format!("t{i}\t{text}!\tOFF\tTIN\tIND\n"));
        } else {
            s.push_str(&format!("t{i}\t{text}\tNOT\tNULL\tNULL\n"));
        }
    }
    s
}

/// Label is OFF exactly when one of "alpha" and "betas" is present; each
/// post has the same length so no surface feature helps.
pub fn xor_corpus(n: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = format!("{HEADER}\n");
    for i in 0..n {
        let a = rng.gen_bool(0.5);
        let b = rng.gen_bool(0.5);
        let w1 = if a { "alpha" } else { "gamma" };
        let w2 = if b { "betas" } else { "delta" };
        let filler = NEUTRAL.choose(&mut rng).unwrap();
        let label = if a ^ b { "OFF\tUNT\tNULL" } else { "NOT\tNULL\tNULL" };
        s.push_str(&format!("x{i}\t{w1} {filler} {w2}\t{label}\n"));
    }
    s
}

pub fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

/// A config with stopword removal and stemming off and the given extra lines.
pub fn config(dir: &Path, name: &str, corpus: &str, extra: &str) -> PathBuf {
    let text = format!(
        "seed = 20200512\ncorpus = {corpus}\nprep.remove_stopwords = false\nprep.stem = false\nout = out-{name}\n{extra}"
    );
    write(dir, &format!("{name}.conf"), &text)
}
