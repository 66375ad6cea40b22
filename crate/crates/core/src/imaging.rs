//! 2-channel 10x10 sentiment images built from a user's observation
//! window: an emotion channel (rows = mean emotion vector of three
//! consecutive comments) and an influence channel aggregating the
//! emotion of direct replies.

use std::collections::HashMap;
use std::path::Path;

use thiserror::Error;

use crate::corpus::{Comment, Corpus, Label, UserRecord};
use crate::emotion::{score_text, EmotionVector, Lexicon, NUM_CATEGORIES};

pub const IMAGE_ROWS: usize = 10;
pub const COMMENTS_PER_ROW: usize = 3;
pub const COMMENTS_PER_IMAGE: usize = IMAGE_ROWS * COMMENTS_PER_ROW;

pub type Channel = [[f64; NUM_CATEGORIES]; IMAGE_ROWS];

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct InfluenceVector {
    pub values: [f64; NUM_CATEGORIES],
}

#[derive(Debug, Clone, PartialEq)]
pub struct SentimentImage {
    pub user_id: String,
    pub label: Label,
    pub channel_emotion: Channel,
    pub channel_influence: Channel,
}

#[derive(Debug, Error)]
pub enum ImagingError {
    #[error("comment `{0}` not found in corpus")]
    DanglingComment(String),
    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed image file {path}: {message}")]
    MalformedFile { path: String, message: String },
}

/// Precomputed parent -> direct replies map; avoids rescanning the
/// corpus per comment when imaging many users.
pub struct ReplyIndex {
    children: HashMap<String, Vec<String>>,
}

impl ReplyIndex {
    pub fn build(corpus: &Corpus) -> ReplyIndex {
        let mut children: HashMap<String, Vec<String>> = HashMap::new();
        for comment in corpus.comments.values() {
            if let Some(parent) = &comment.parent_id {
                children.entry(parent.clone()).or_default().push(comment.id.clone());
            }
        }
        ReplyIndex { children }
    }

    pub fn replies_of(&self, comment_id: &str) -> &[String] {
        self.children.get(comment_id).map(Vec::as_slice).unwrap_or(&[])
    }
}

fn influence_from_replies(
    reply_ids: &[String],
    corpus: &Corpus,
    lexicon: &Lexicon,
) -> InfluenceVector {
    if reply_ids.is_empty() {
        return InfluenceVector::default();
    }
    let mut sum = [0.0; NUM_CATEGORIES];
    for id in reply_ids {
        let reply = &corpus.comments[id];
        let v = score_text(&reply.body, lexicon);
        for (s, x) in sum.iter_mut().zip(v.values) {
            *s += x;
        }
    }
    let n = reply_ids.len() as f64;
    for s in &mut sum {
        *s /= n;
    }
    InfluenceVector { values: sum }
}

/// Mean emotion vector of a comment's direct replies; the zero vector
/// when nothing replied.
pub fn comment_influence(
    comment: &Comment,
    corpus: &Corpus,
    lexicon: &Lexicon,
) -> Result<InfluenceVector, ImagingError> {
    if !corpus.comments.contains_key(&comment.id) {
        return Err(ImagingError::DanglingComment(comment.id.clone()));
    }
    let reply_ids: Vec<String> =
        corpus.replies_of(&comment.id).iter().map(|c| c.id.clone()).collect();
    Ok(influence_from_replies(&reply_ids, corpus, lexicon))
}

/// Build one user's image from time-ordered window comments. The most
/// recent 30 comments are kept; shortfalls are padded with zero
/// emotion/influence rows at the old end.
pub fn build_image(
    user: &UserRecord,
    window_comments: &[Comment],
    corpus: &Corpus,
    lexicon: &Lexicon,
) -> SentimentImage {
    let index = ReplyIndex::build(corpus);
    build_image_with_index(user, window_comments, corpus, lexicon, &index)
}

pub fn build_image_with_index(
    user: &UserRecord,
    window_comments: &[Comment],
    corpus: &Corpus,
    lexicon: &Lexicon,
    index: &ReplyIndex,
) -> SentimentImage {
    let recent = if window_comments.len() > COMMENTS_PER_IMAGE {
        &window_comments[window_comments.len() - COMMENTS_PER_IMAGE..]
    } else {
        window_comments
    };
    let pad = COMMENTS_PER_IMAGE - recent.len();

    let mut emotions = vec![EmotionVector::zero(); pad];
    let mut influences = vec![InfluenceVector::default(); pad];
    for comment in recent {
        emotions.push(score_text(&comment.body, lexicon));
        influences.push(influence_from_replies(index.replies_of(&comment.id), corpus, lexicon));
    }

    let mut channel_emotion = [[0.0; NUM_CATEGORIES]; IMAGE_ROWS];
    let mut channel_influence = [[0.0; NUM_CATEGORIES]; IMAGE_ROWS];
    for row in 0..IMAGE_ROWS {
        for k in 0..COMMENTS_PER_ROW {
            let i = row * COMMENTS_PER_ROW + k;
            for c in 0..NUM_CATEGORIES {
                channel_emotion[row][c] += emotions[i].values[c];
                channel_influence[row][c] += influences[i].values[c];
            }
        }
        for c in 0..NUM_CATEGORIES {
            channel_emotion[row][c] /= COMMENTS_PER_ROW as f64;
            channel_influence[row][c] /= COMMENTS_PER_ROW as f64;
        }
    }
    SentimentImage {
        user_id: user.user_id.clone(),
        label: user.label,
        channel_emotion,
        channel_influence,
    }
}

/// Flatten channel-major (emotion first, then influence) into 200 reals,
/// the layout shared by the GAN and all baseline classifiers.
pub fn flatten_image(image: &SentimentImage) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * IMAGE_ROWS * NUM_CATEGORIES);
    for channel in [&image.channel_emotion, &image.channel_influence] {
        for row in channel.iter() {
            out.extend_from_slice(row);
        }
    }
    out
}

fn channel_to_pgm(channel: &Channel) -> String {
    let mut out = String::from("P2\n10 10\n255\n");
    for row in channel.iter() {
        let pixels: Vec<String> = row
            .iter()
            .map(|&v| format!("{}", (v * 255.0 + 0.5).floor() as u32))
            .collect();
        out.push_str(&pixels.join(" "));
        out.push('\n');
    }
    out
}

fn channel_to_csv(channel: &Channel, out: &mut String) {
    for row in channel.iter() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
}

/// Write `<stem>.emotion.pgm`, `<stem>.influence.pgm` and `<stem>.csv`.
/// The CSV keeps full-precision values so the image round-trips exactly.
pub fn export_image(image: &SentimentImage, stem: impl AsRef<Path>) -> Result<(), ImagingError> {
    let stem = stem.as_ref();
    let write = |suffix: &str, contents: String| -> Result<(), ImagingError> {
        let path = stem.with_extension(suffix);
        std::fs::write(&path, contents).map_err(|source| ImagingError::Io {
            path: path.display().to_string(),
            source,
        })
    };
    write("emotion.pgm", channel_to_pgm(&image.channel_emotion))?;
    write("influence.pgm", channel_to_pgm(&image.channel_influence))?;
    let mut csv = format!("{},{}\n", image.user_id, image.label);
    channel_to_csv(&image.channel_emotion, &mut csv);
    channel_to_csv(&image.channel_influence, &mut csv);
    write("csv", csv)
}

/// Reload an image written by [`export_image`].
pub fn import_image_csv(path: impl AsRef<Path>) -> Result<SentimentImage, ImagingError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ImagingError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let malformed = |message: &str| ImagingError::MalformedFile {
        path: path.display().to_string(),
        message: message.to_string(),
    };
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| malformed("empty file"))?;
    let (user_id, label) = header.rsplit_once(',').ok_or_else(|| malformed("bad header"))?;
    let label = Label::parse(label).ok_or_else(|| malformed("bad label"))?;
    let mut channels = [[[0.0; NUM_CATEGORIES]; IMAGE_ROWS]; 2];
    for channel in channels.iter_mut() {
        for row in channel.iter_mut() {
            let line = lines.next().ok_or_else(|| malformed("truncated"))?;
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != NUM_CATEGORIES {
                return Err(malformed("wrong column count"));
            }
            for (slot, cell) in row.iter_mut().zip(cells) {
                *slot = cell.parse().map_err(|_| malformed("bad number"))?;
            }
        }
    }
    Ok(SentimentImage {
        user_id: user_id.to_string(),
        label,
        channel_emotion: channels[0],
        channel_influence: channels[1],
    })
}

/// Build images for every user in the corpus with a shared reply index;
/// users with no in-window comments get all-zero images.
pub fn build_all_images(
    corpus: &Corpus,
    lexicon: &Lexicon,
    window: &crate::corpus::WindowSpec,
    reference_time: i64,
) -> Vec<SentimentImage> {
    let index = ReplyIndex::build(corpus);
    corpus
        .users
        .values()
        .map(|user| {
            let slice = crate::corpus::observation_slice(user, reference_time, window);
            build_image_with_index(user, &slice, corpus, lexicon, &index)
        })
        .collect()
}

/// Default imaging reference time: one second past the newest comment,
/// so the whole corpus span is observable.
pub fn default_reference_time(corpus: &Corpus) -> i64 {
    corpus.comments.values().map(|c| c.timestamp).max().unwrap_or(0) + 1
}
