//! Offensive-language classification toolkit: corpus handling, tweet
//! preprocessing, TF-IDF and surface features, a random forest with
//! cross-validation, weak-label balancing, metrics and emotion-lexicon
//! analysis.

pub mod balance;
pub mod corpus;
pub mod emolex;
pub mod error;
pub mod features;
pub mod forest;
pub mod metrics;
pub mod textprep;

pub use error::{Error, ModelError, Result};
