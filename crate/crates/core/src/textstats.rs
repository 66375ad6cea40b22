//! Tokenization, post-level word co-occurrence, and the phi coefficient.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use thiserror::Error;

use crate::corpus::Corpus;

#[derive(Debug, Error)]
pub enum TextStatsError {
    #[error("contingency requires two distinct words, got `{0}` twice")]
    SameWord(String),
    #[error("min_count must be >= 1")]
    BadMinCount,
}

/// Lowercase, split on runs of characters outside `[a-z0-9']`, strip
/// leading/trailing apostrophes, drop empties. Interior apostrophes are
/// kept so contractions survive.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !(c.is_ascii_lowercase() || c.is_ascii_digit() || c == '\''))
        .map(|t| t.trim_matches('\''))
        .filter(|t| !t.is_empty())
        .map(|t| t.to_string())
        .collect()
}

/// Document counts for the four presence combinations of a word pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ContingencyTable {
    pub n11: u64,
    pub n10: u64,
    pub n01: u64,
    pub n00: u64,
}

impl ContingencyTable {
    pub fn total(&self) -> u64 {
        self.n11 + self.n10 + self.n01 + self.n00
    }

    /// Swap the roles of the two words (n10 <-> n01).
    pub fn swapped(&self) -> ContingencyTable {
        ContingencyTable { n11: self.n11, n10: self.n01, n01: self.n10, n00: self.n00 }
    }
}

/// Count document-level co-presence of `x` and `y` over token sets.
pub fn contingency(
    documents: &[BTreeSet<String>],
    x: &str,
    y: &str,
) -> Result<ContingencyTable, TextStatsError> {
    if x == y {
        return Err(TextStatsError::SameWord(x.to_string()));
    }
    let mut t = ContingencyTable { n11: 0, n10: 0, n01: 0, n00: 0 };
    for doc in documents {
        match (doc.contains(x), doc.contains(y)) {
            (true, true) => t.n11 += 1,
            (true, false) => t.n10 += 1,
            (false, true) => t.n01 += 1,
            (false, false) => t.n00 += 1,
        }
    }
    Ok(t)
}

/// Phi coefficient: (n11*n00 - n10*n01) / sqrt(n1. * n0. * n.0 * n.1).
/// Degenerate tables (any zero marginal) score 0.
pub fn phi(t: &ContingencyTable) -> f64 {
    let n1_ = (t.n11 + t.n10) as f64;
    let n0_ = (t.n01 + t.n00) as f64;
    let n_1 = (t.n11 + t.n01) as f64;
    let n_0 = (t.n10 + t.n00) as f64;
    let denom_sq = n1_ * n0_ * n_0 * n_1;
    if denom_sq == 0.0 {
        return 0.0;
    }
    let numerator = t.n11 as f64 * t.n00 as f64 - t.n10 as f64 * t.n01 as f64;
    numerator / denom_sq.sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct WordPairScore {
    pub word_x: String,
    pub word_y: String,
    pub phi: f64,
    pub n11: u64,
}

/// One token set per post (all comments under the post pooled).
pub fn post_documents(
    corpus: &Corpus,
    stoplist: Option<&HashSet<String>>,
) -> Vec<BTreeSet<String>> {
    corpus
        .posts
        .values()
        .map(|post| {
            let mut doc = BTreeSet::new();
            for cid in &post.comment_ids {
                if let Some(comment) = corpus.comments.get(cid) {
                    for token in tokenize(&comment.body) {
                        if stoplist.map_or(true, |s| !s.contains(&token)) {
                            doc.insert(token);
                        }
                    }
                }
            }
            doc
        })
        .collect()
}

/// Score all word pairs with `n11 >= min_count` and `phi >= min_phi`,
/// sorted by descending phi, ties by canonical (word_x < word_y) order.
pub fn cooccurrence_graph(
    corpus: &Corpus,
    min_phi: f64,
    min_count: u64,
    stoplist: Option<&HashSet<String>>,
) -> Result<Vec<WordPairScore>, TextStatsError> {
    if min_count < 1 {
        return Err(TextStatsError::BadMinCount);
    }
    let documents = post_documents(corpus, stoplist);
    let n_docs = documents.len() as u64;
    let mut doc_freq: BTreeMap<&str, u64> = BTreeMap::new();
    let mut pair_counts: BTreeMap<(&str, &str), u64> = BTreeMap::new();
    for doc in &documents {
        let words: Vec<&str> = doc.iter().map(|s| s.as_str()).collect();
        for (i, &w) in words.iter().enumerate() {
            *doc_freq.entry(w).or_default() += 1;
            for &v in &words[i + 1..] {
                *pair_counts.entry((w, v)).or_default() += 1;
            }
        }
    }
    let mut scores = Vec::new();
    for (&(x, y), &n11) in &pair_counts {
        if n11 < min_count {
            continue;
        }
        let n10 = doc_freq[x] - n11;
        let n01 = doc_freq[y] - n11;
        let n00 = n_docs - n11 - n10 - n01;
        let table = ContingencyTable { n11, n10, n01, n00 };
        let score = phi(&table);
        if score >= min_phi {
            scores.push(WordPairScore {
                word_x: x.to_string(),
                word_y: y.to_string(),
                phi: score,
                n11,
            });
        }
    }
    scores.sort_by(|a, b| {
        b.phi
            .partial_cmp(&a.phi)
            .unwrap()
            .then_with(|| (&a.word_x, &a.word_y).cmp(&(&b.word_x, &b.word_y)))
    });
    Ok(scores)
}

/// CSV rendering: header `word_x,word_y,phi,n11`, phi with 6 decimals.
pub fn graph_to_csv(scores: &[WordPairScore]) -> String {
    let mut out = String::from("word_x,word_y,phi,n11\n");
    for s in scores {
        out.push_str(&format!("{},{},{:.6},{}\n", s.word_x, s.word_y, s.phi, s.n11));
    }
    out
}
