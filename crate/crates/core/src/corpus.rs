//! Corpus data model, line-delimited ingestion, windowing, stratified
//! splitting, and synthetic corpus generation.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seeds::stage_rng;

pub const SECONDS_PER_DAY: i64 = 86_400;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Comment {
    pub id: String,
    pub author: String,
    pub post_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent_id: Option<String>,
    pub timestamp: i64,
    pub body: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subreddit: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Post {
    pub id: String,
    pub subreddit: String,
    pub author: String,
    /// Comment ids under this post, ordered by ascending timestamp.
    pub comment_ids: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Relapsed,
    Abstinent,
    Unlabeled,
}

impl Label {
    pub fn parse(s: &str) -> Option<Label> {
        match s {
            "relapsed" => Some(Label::Relapsed),
            "abstinent" => Some(Label::Abstinent),
            "unlabeled" => Some(Label::Unlabeled),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Label::Relapsed => "relapsed",
            Label::Abstinent => "abstinent",
            Label::Unlabeled => "unlabeled",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserRecord {
    pub user_id: String,
    /// Comments authored by this user, ascending by timestamp.
    pub comments: Vec<Comment>,
    pub label: Label,
}

/// Observation/label window lengths in days.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowSpec {
    pub observation_days: u32,
    pub label_days: u32,
}

impl Default for WindowSpec {
    fn default() -> Self {
        WindowSpec { observation_days: 30, label_days: 7 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    pub posts: BTreeMap<String, Post>,
    pub comments: BTreeMap<String, Comment>,
    pub users: BTreeMap<String, UserRecord>,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    MalformedLine { line: usize, message: String },
    #[error("line {line}: duplicate comment id `{id}`")]
    DuplicateId { line: usize, id: String },
    #[error("comment `{id}`: dangling parent_id `{parent}`")]
    DanglingParent { id: String, parent: String },
    #[error("comment `{id}`: negative timestamp")]
    NegativeTimestamp { id: String },
    #[error("train fraction {0} outside (0,1)")]
    BadFraction(f64),
    #[error("label class `{0}` has no members")]
    EmptyClass(&'static str),
    #[error("user `{0}` is unlabeled; split requires labeled users")]
    UnlabeledUser(String),
    #[error("degenerate synthesis parameters: {0}")]
    BadSynthParams(String),
}

impl Corpus {
    pub fn is_empty(&self) -> bool {
        self.posts.is_empty() && self.comments.is_empty() && self.users.is_empty()
    }

    /// Direct replies to a comment, ordered by (timestamp, id).
    pub fn replies_of(&self, comment_id: &str) -> Vec<&Comment> {
        let mut replies: Vec<&Comment> = self
            .comments
            .values()
            .filter(|c| c.parent_id.as_deref() == Some(comment_id))
            .collect();
        replies.sort_by(|a, b| (a.timestamp, &a.id).cmp(&(b.timestamp, &b.id)));
        replies
    }

    /// Checks referential integrity between posts, comments and users.
    pub fn check_integrity(&self) -> Result<(), CorpusError> {
        for comment in self.comments.values() {
            if comment.timestamp < 0 {
                return Err(CorpusError::NegativeTimestamp { id: comment.id.clone() });
            }
            if let Some(parent) = &comment.parent_id {
                let known =
                    self.comments.contains_key(parent) || self.posts.contains_key(parent);
                if !known {
                    return Err(CorpusError::DanglingParent {
                        id: comment.id.clone(),
                        parent: parent.clone(),
                    });
                }
            }
            debug_assert!(self.posts.contains_key(&comment.post_id));
        }
        Ok(())
    }
}

fn rebuild_indexes(comments: Vec<Comment>) -> Corpus {
    let mut corpus = Corpus::default();
    let mut by_post: BTreeMap<String, Vec<Comment>> = BTreeMap::new();
    for comment in &comments {
        by_post.entry(comment.post_id.clone()).or_default().push(comment.clone());
    }
    for (post_id, mut post_comments) in by_post {
        post_comments.sort_by(|a, b| (a.timestamp, &a.id).cmp(&(b.timestamp, &b.id)));
        let subreddit = post_comments
            .iter()
            .find_map(|c| c.subreddit.clone())
            .unwrap_or_else(|| "unknown".to_string());
        // Post records are not part of the line format; the earliest
        // commenter stands in as the post author.
        let author = post_comments[0].author.clone();
        corpus.posts.insert(
            post_id.clone(),
            Post {
                id: post_id,
                subreddit,
                author,
                comment_ids: post_comments.iter().map(|c| c.id.clone()).collect(),
            },
        );
    }
    let mut by_user: BTreeMap<String, Vec<Comment>> = BTreeMap::new();
    for comment in comments {
        by_user.entry(comment.author.clone()).or_default().push(comment.clone());
        corpus.comments.insert(comment.id.clone(), comment);
    }
    for (user_id, mut user_comments) in by_user {
        user_comments.sort_by(|a, b| (a.timestamp, &a.id).cmp(&(b.timestamp, &b.id)));
        corpus.users.insert(
            user_id.clone(),
            UserRecord { user_id, comments: user_comments, label: Label::Unlabeled },
        );
    }
    corpus
}

/// Load a corpus from a line-delimited comment file (one JSON object per
/// line: id, author, post_id, body, timestamp, optional parent_id).
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus, CorpusError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let reader = BufReader::new(file);
    let mut comments: Vec<Comment> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let comment: Comment =
            serde_json::from_str(&line).map_err(|e| CorpusError::MalformedLine {
                line: line_no,
                message: e.to_string(),
            })?;
        if comment.id.is_empty() {
            return Err(CorpusError::MalformedLine {
                line: line_no,
                message: "empty comment id".to_string(),
            });
        }
        if comment.timestamp < 0 {
            return Err(CorpusError::MalformedLine {
                line: line_no,
                message: "negative timestamp".to_string(),
            });
        }
        if !seen.insert(comment.id.clone()) {
            return Err(CorpusError::DuplicateId { line: line_no, id: comment.id });
        }
        comments.push(comment);
    }
    let corpus = rebuild_indexes(comments);
    corpus.check_integrity()?;
    Ok(corpus)
}

/// Apply a `user_id<TAB>label` file to a corpus. Unknown users are
/// ignored; unknown labels are an error.
pub fn load_labels(
    corpus: &mut Corpus,
    path: impl AsRef<Path>,
) -> Result<usize, CorpusError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut applied = 0;
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.splitn(2, '\t');
        let user_id = parts.next().unwrap_or("");
        let label = parts
            .next()
            .and_then(Label::parse)
            .ok_or_else(|| CorpusError::MalformedLine {
                line: idx + 1,
                message: format!("bad label line `{line}`"),
            })?;
        if let Some(user) = corpus.users.get_mut(user_id) {
            user.label = label;
            applied += 1;
        }
    }
    Ok(applied)
}

/// Comments in the half-open window `[reference_time - observation_days,
/// reference_time)`, time-ordered.
pub fn observation_slice(
    user: &UserRecord,
    reference_time: i64,
    spec: &WindowSpec,
) -> Vec<Comment> {
    let start = reference_time - spec.observation_days as i64 * SECONDS_PER_DAY;
    user.comments
        .iter()
        .filter(|c| c.timestamp >= start && c.timestamp < reference_time)
        .cloned()
        .collect()
}

/// Stratified train/test split. Per class, `round(fraction * n)` users go
/// to the train side; deterministic given the seed.
pub fn split<'a>(
    users: &[&'a UserRecord],
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<&'a UserRecord>, Vec<&'a UserRecord>), CorpusError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(CorpusError::BadFraction(train_fraction));
    }
    let mut relapsed: Vec<&UserRecord> = Vec::new();
    let mut abstinent: Vec<&UserRecord> = Vec::new();
    for user in users {
        match user.label {
            Label::Relapsed => relapsed.push(user),
            Label::Abstinent => abstinent.push(user),
            Label::Unlabeled => {
                return Err(CorpusError::UnlabeledUser(user.user_id.clone()))
            }
        }
    }
    if relapsed.is_empty() {
        return Err(CorpusError::EmptyClass("relapsed"));
    }
    if abstinent.is_empty() {
        return Err(CorpusError::EmptyClass("abstinent"));
    }
    let mut rng = stage_rng(seed, "split");
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in [&mut relapsed, &mut abstinent] {
        class.sort_by(|a, b| a.user_id.cmp(&b.user_id));
        class.shuffle(&mut rng);
        let n_train = (train_fraction * class.len() as f64).round() as usize;
        let n_train = n_train.min(class.len());
        train.extend_from_slice(&class[..n_train]);
        test.extend_from_slice(&class[n_train..]);
    }
    Ok((train, test))
}

/// Knobs for the synthetic corpus generator. The emotional signal
/// separating the two classes is controlled by `margin`: relapsed users
/// over-sample joy- and negative-lexicon words by a factor of
/// `1 + 9 * margin` relative to the flat abstinent distribution.
#[derive(Debug, Clone)]
pub struct SynthProfile {
    pub days: u32,
    pub comments_per_user_min: u32,
    pub comments_per_user_extra: u32,
    pub words_per_comment: u32,
    pub reply_probability: f64,
    /// Signal strength in [0,1]; 0 means the classes are indistinguishable.
    pub margin: f64,
    /// Epoch second of the first synthetic day.
    pub start_time: i64,
}

impl Default for SynthProfile {
    fn default() -> Self {
        SynthProfile {
            days: 30,
            comments_per_user_min: 30,
            comments_per_user_extra: 6,
            words_per_comment: 8,
            reply_probability: 0.3,
            margin: 0.8,
            start_time: 1_600_000_000,
        }
    }
}

/// Word pools for the synthetic vocabulary; the per-category words match
/// the lexicon produced by [`crate::emotion::synth_lexicon`].
pub const SYNTH_CATEGORY_WORDS: [[&str; 3]; 10] = [
    ["furious", "enraged", "irritated"],          // anger
    ["eager", "expectant", "hopeful"],            // anticipation
    ["disgusted", "revolted", "nauseated"],       // disgust
    ["afraid", "terrified", "panicked"],          // fear
    ["joyful", "delighted", "cheerful"],          // joy
    ["sorrowful", "mournful", "weeping"],         // sadness
    ["astonished", "startled", "amazed"],         // surprise
    ["trusting", "reliable", "faithful"],         // trust
    ["awful", "hopeless", "worthless"],           // negative
    ["wonderful", "uplifting", "encouraging"],    // positive
];

pub const SYNTH_NEUTRAL_WORDS: [&str; 8] =
    ["today", "doctor", "week", "about", "group", "meeting", "clinic", "called"];

/// Generate a labeled synthetic corpus. Deterministic given the seed.
pub fn synth_corpus(
    seed: u64,
    n_users: usize,
    relapse_fraction: f64,
    profile: &SynthProfile,
) -> Result<Corpus, CorpusError> {
    if n_users < 2 {
        return Err(CorpusError::BadSynthParams("n_users must be >= 2".to_string()));
    }
    if !(relapse_fraction > 0.0 && relapse_fraction < 1.0) {
        return Err(CorpusError::BadSynthParams(format!(
            "relapse_fraction {relapse_fraction} outside (0,1)"
        )));
    }
    if !(0.0..=1.0).contains(&profile.margin) {
        return Err(CorpusError::BadSynthParams(format!(
            "margin {} outside [0,1]",
            profile.margin
        )));
    }
    let mut rng = stage_rng(seed, "synth");
    let n_relapsed = (relapse_fraction * n_users as f64).round() as usize;
    let day_span = profile.days as i64 * SECONDS_PER_DAY;

    // One shared post per synthetic day so replies can cross users.
    let mut comments: Vec<Comment> = Vec::new();
    let mut per_post_last: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut labels: BTreeMap<String, Label> = BTreeMap::new();

    // Shuffle the class assignment so the label is independent of the
    // generation order (reply volume correlates with that order, and an
    // index-aligned assignment would leak the class through the
    // influence channel even at margin 0).
    let mut relapse_flags: Vec<bool> = (0..n_users).map(|u| u < n_relapsed).collect();
    relapse_flags.shuffle(&mut rng);

    for u in 0..n_users {
        let user_id = format!("user{u:05}");
        let relapsed = relapse_flags[u];
        labels.insert(
            user_id.clone(),
            if relapsed { Label::Relapsed } else { Label::Abstinent },
        );
        let n_comments = profile.comments_per_user_min
            + if profile.comments_per_user_extra > 0 {
                rng.gen_range(0..=profile.comments_per_user_extra)
            } else {
                0
            };
        for c in 0..n_comments {
            // Spread comments evenly over the day span with jitter.
            let base = c as i64 * day_span / n_comments as i64;
            let jitter = rng.gen_range(0..(day_span / n_comments as i64).max(1));
            let timestamp = profile.start_time + (base + jitter).min(day_span - 1);
            let day = ((timestamp - profile.start_time) / SECONDS_PER_DAY)
                .clamp(0, profile.days as i64 - 1);
            let post_id = format!("post_day{day:03}");
            let body = synth_body(&mut rng, relapsed, profile);
            let parent_id = {
                let prior = per_post_last.entry(post_id.clone()).or_default();
                if !prior.is_empty() && rng.gen::<f64>() < profile.reply_probability {
                    Some(prior[rng.gen_range(0..prior.len())].clone())
                } else {
                    None
                }
            };
            let id = format!("c_{user_id}_{c:04}");
            per_post_last.get_mut(&post_id).unwrap().push(id.clone());
            comments.push(Comment {
                id,
                author: user_id.clone(),
                post_id,
                parent_id,
                timestamp,
                body,
                subreddit: Some("synthetic".to_string()),
            });
        }
    }

    let mut corpus = rebuild_indexes(comments);
    for (user_id, label) in labels {
        if let Some(user) = corpus.users.get_mut(&user_id) {
            user.label = label;
        }
    }
    corpus.check_integrity()?;
    Ok(corpus)
}

fn synth_body(rng: &mut impl Rng, relapsed: bool, profile: &SynthProfile) -> String {
    // Category weights: flat for abstinent users; relapsed users
    // over-sample joy (4) and negative (8).
    let mut weights = [1.0f64; 11]; // 10 categories + neutral pool
    weights[10] = 2.0;
    if relapsed {
        let boost = 1.0 + 9.0 * profile.margin;
        weights[4] = boost;
        weights[8] = boost;
    }
    let total: f64 = weights.iter().sum();
    let mut words = Vec::with_capacity(profile.words_per_comment as usize);
    for _ in 0..profile.words_per_comment {
        let mut pick = rng.gen::<f64>() * total;
        let mut slot = 0;
        for (i, w) in weights.iter().enumerate() {
            if pick < *w {
                slot = i;
                break;
            }
            pick -= w;
        }
        let word = if slot < 10 {
            SYNTH_CATEGORY_WORDS[slot][rng.gen_range(0..3)]
        } else {
            SYNTH_NEUTRAL_WORDS[rng.gen_range(0..SYNTH_NEUTRAL_WORDS.len())]
        };
        words.push(word);
    }
    words.join(" ")
}

/// Serialize a corpus back to the line-delimited comment format.
/// Comments are emitted in id order, so identical corpora produce
/// byte-identical files.
pub fn store_corpus(corpus: &Corpus, path: impl AsRef<Path>) -> Result<(), CorpusError> {
    let mut out = String::new();
    for comment in corpus.comments.values() {
        out.push_str(&serde_json::to_string(comment).expect("comment serializes"));
        out.push('\n');
    }
    std::fs::write(path.as_ref(), out).map_err(|source| CorpusError::Io {
        path: path.as_ref().display().to_string(),
        source,
    })
}

/// Write the `user_id<TAB>label` file for a corpus.
pub fn store_labels(corpus: &Corpus, path: impl AsRef<Path>) -> Result<(), CorpusError> {
    let mut out = String::new();
    for user in corpus.users.values() {
        out.push_str(&user.user_id);
        out.push('\t');
        out.push_str(user.label.as_str());
        out.push('\n');
    }
    std::fs::write(path.as_ref(), out).map_err(|source| CorpusError::Io {
        path: path.as_ref().display().to_string(),
        source,
    })
}
