//! Relapse prediction from social-media comment histories.
//!
//! Pipeline: a comment corpus is scored against a word-emotion lexicon,
//! each user's observation window is folded into a 2-channel 10x10
//! sentiment image, and a semi-supervised GAN (K+1 classifier head)
//! predicts the relapse probability. Baseline classifiers and
//! co-occurrence text analytics round out the toolkit.

pub mod baselines;
pub mod corpus;
pub mod emotion;
pub mod gan;
pub mod imaging;
pub mod seeds;
pub mod textstats;
pub mod tensornet;

pub use corpus::{Comment, Corpus, Label, Post, UserRecord, WindowSpec};
pub use emotion::{EmotionCategory, EmotionVector, Lexicon};
pub use imaging::SentimentImage;
