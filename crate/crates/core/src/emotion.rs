//! Word-emotion lexicon loading and per-comment emotion quantification.

use std::collections::HashMap;
use std::path::Path;

use thiserror::Error;

pub const NUM_CATEGORIES: usize = 10;

/// The ten categories in normative order; this order fixes image rows,
/// channel layout and report columns everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EmotionCategory {
    Anger,
    Anticipation,
    Disgust,
    Fear,
    Joy,
    Sadness,
    Surprise,
    Trust,
    Negative,
    Positive,
}

impl EmotionCategory {
    pub const ALL: [EmotionCategory; NUM_CATEGORIES] = [
        EmotionCategory::Anger,
        EmotionCategory::Anticipation,
        EmotionCategory::Disgust,
        EmotionCategory::Fear,
        EmotionCategory::Joy,
        EmotionCategory::Sadness,
        EmotionCategory::Surprise,
        EmotionCategory::Trust,
        EmotionCategory::Negative,
        EmotionCategory::Positive,
    ];

    pub fn index(&self) -> usize {
        *self as usize
    }

    pub fn name(&self) -> &'static str {
        match self {
            EmotionCategory::Anger => "anger",
            EmotionCategory::Anticipation => "anticipation",
            EmotionCategory::Disgust => "disgust",
            EmotionCategory::Fear => "fear",
            EmotionCategory::Joy => "joy",
            EmotionCategory::Sadness => "sadness",
            EmotionCategory::Surprise => "surprise",
            EmotionCategory::Trust => "trust",
            EmotionCategory::Negative => "negative",
            EmotionCategory::Positive => "positive",
        }
    }

    pub fn from_name(name: &str) -> Option<EmotionCategory> {
        EmotionCategory::ALL.iter().copied().find(|c| c.name() == name)
    }
}

/// Word -> emotion category associations, one bit per category.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Lexicon {
    entries: HashMap<String, u16>,
}

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed row `{row}`")]
    MalformedRow { line: usize, row: String },
    #[error("line {line}: unknown category `{category}`")]
    UnknownCategory { line: usize, category: String },
}

impl Lexicon {
    pub fn new() -> Lexicon {
        Lexicon::default()
    }

    pub fn insert(&mut self, word: &str, category: EmotionCategory) {
        *self.entries.entry(word.to_lowercase()).or_default() |= 1 << category.index();
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn categories(&self, word: &str) -> impl Iterator<Item = EmotionCategory> + '_ {
        let mask = self.entries.get(word).copied().unwrap_or(0);
        EmotionCategory::ALL
            .iter()
            .copied()
            .filter(move |c| mask & (1 << c.index()) != 0)
    }

    pub fn mask(&self, word: &str) -> u16 {
        self.entries.get(word).copied().unwrap_or(0)
    }
}

/// Load a tab-separated `word<TAB>category<TAB>flag` lexicon file.
/// Rows with flag 0 are ignored; unknown categories are rejected.
pub fn load_lexicon(path: impl AsRef<Path>) -> Result<Lexicon, LexiconError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| LexiconError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut lexicon = Lexicon::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let [word, category, flag] = fields.as_slice() else {
            return Err(LexiconError::MalformedRow { line: line_no, row: line.to_string() });
        };
        let category = EmotionCategory::from_name(category).ok_or_else(|| {
            LexiconError::UnknownCategory {
                line: line_no,
                category: category.to_string(),
            }
        })?;
        match *flag {
            "0" => {}
            "1" => lexicon.insert(word, category),
            _ => {
                return Err(LexiconError::MalformedRow {
                    line: line_no,
                    row: line.to_string(),
                })
            }
        }
    }
    Ok(lexicon)
}

/// Ten normalized emotion intensities in the fixed category order.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EmotionVector {
    pub values: [f64; NUM_CATEGORIES],
}

impl EmotionVector {
    pub fn zero() -> EmotionVector {
        EmotionVector::default()
    }
}

/// Per-category token counts; a token contributes to every category it
/// maps to, with multiplicity.
pub fn emotion_counts(tokens: &[String], lexicon: &Lexicon) -> [u64; NUM_CATEGORIES] {
    let mut counts = [0u64; NUM_CATEGORIES];
    for token in tokens {
        let mask = lexicon.mask(token);
        if mask == 0 {
            continue;
        }
        for c in EmotionCategory::ALL {
            if mask & (1 << c.index()) != 0 {
                counts[c.index()] += 1;
            }
        }
    }
    counts
}

/// Divide each count by the maximum count; all-zero counts map to the
/// zero vector.
pub fn normalize_counts(counts: &[u64; NUM_CATEGORIES]) -> EmotionVector {
    let max = *counts.iter().max().unwrap();
    if max == 0 {
        return EmotionVector::zero();
    }
    let mut values = [0.0; NUM_CATEGORIES];
    for (v, &c) in values.iter_mut().zip(counts.iter()) {
        *v = c as f64 / max as f64;
    }
    EmotionVector { values }
}

/// Score a raw comment body: tokenize, count, normalize.
pub fn score_text(text: &str, lexicon: &Lexicon) -> EmotionVector {
    normalize_counts(&emotion_counts(&crate::textstats::tokenize(text), lexicon))
}

/// Lexicon covering the synthetic generator's vocabulary
/// ([`crate::corpus::SYNTH_CATEGORY_WORDS`]).
pub fn synth_lexicon() -> Lexicon {
    let mut lexicon = Lexicon::new();
    for (i, words) in crate::corpus::SYNTH_CATEGORY_WORDS.iter().enumerate() {
        for word in words {
            lexicon.insert(word, EmotionCategory::ALL[i]);
        }
    }
    lexicon
}

/// Render a lexicon in the tab-separated file format.
pub fn lexicon_to_tsv(lexicon: &Lexicon) -> String {
    let mut rows: Vec<(String, &'static str)> = Vec::new();
    let mut words: Vec<&String> = lexicon.entries.keys().collect();
    words.sort();
    for word in words {
        for category in lexicon.categories(word) {
            rows.push((word.clone(), category.name()));
        }
    }
    let mut out = String::new();
    for (word, category) in rows {
        out.push_str(&format!("{word}\t{category}\t1\n"));
    }
    out
}
