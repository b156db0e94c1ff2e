//! Aggregated bag-of-words author representation.
//!
//! Each author is the sum of the word-count vectors of every paper they
//! appear on (a multi-author paper contributes its full counts to each of its
//! authors), normalized to a probability vector over the vocabulary.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Corpus;

#[derive(Debug, Error)]
pub enum BowError {
    #[error("author index {0} out of range ({1} authors)")]
    AuthorOutOfRange(usize, usize),

    #[error("author {0} appears on no documents")]
    AuthorWithoutDocuments(String),

    #[error("author {0} has an all-zero count vector")]
    ZeroCounts(String),

    #[error("profile file {path} is invalid: {message}")]
    InvalidProfileFile { path: String, message: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Which feature space a profile's probabilities live in. Kernels refuse to
/// compare profiles from different spaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ProfileSpace {
    /// Probabilities over the vocabulary.
    Words,
    /// Probabilities over a topic layer; layer is 1-based (LDA and A-T
    /// profiles are layer 1, HAT marginals carry their own layer).
    Topics { layer: usize },
}

impl std::fmt::Display for ProfileSpace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ProfileSpace::Words => write!(f, "words"),
            ProfileSpace::Topics { layer } => write!(f, "topics:{layer}"),
        }
    }
}

impl std::str::FromStr for ProfileSpace {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "words" {
            return Ok(ProfileSpace::Words);
        }
        if let Some(layer) = s.strip_prefix("topics:") {
            let layer: usize = layer
                .parse()
                .map_err(|_| format!("invalid topic layer in space tag {s:?}"))?;
            return Ok(ProfileSpace::Topics { layer });
        }
        Err(format!("unknown profile space {s:?}"))
    }
}

/// Aggregated word counts for one author; dense over the vocabulary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuthorCountVector {
    pub author_id: usize,
    pub counts: Vec<usize>,
}

/// A probability vector representing one author in some feature space.
#[derive(Debug, Clone, PartialEq)]
pub struct AuthorProfile {
    pub author_id: usize,
    pub probs: Vec<f64>,
    pub space: ProfileSpace,
}

impl AuthorProfile {
    /// Sum of entries; 1.0 within fp tolerance for valid profiles.
    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }
}

/// Sum word counts over every document listing the author.
pub fn aggregate_author_counts(
    corpus: &Corpus,
    author_id: usize,
) -> Result<AuthorCountVector, BowError> {
    if author_id >= corpus.num_authors() {
        return Err(BowError::AuthorOutOfRange(author_id, corpus.num_authors()));
    }
    let mut counts = vec![0usize; corpus.vocab_size()];
    let mut n_docs = 0usize;
    for doc in &corpus.documents {
        if doc.author_ids.contains(&author_id) {
            n_docs += 1;
            for (&w, &c) in &doc.counts {
                counts[w] += c;
            }
        }
    }
    if n_docs == 0 {
        return Err(BowError::AuthorWithoutDocuments(
            corpus.authors[author_id].clone(),
        ));
    }
    Ok(AuthorCountVector { author_id, counts })
}

/// Normalize a count vector to the probability simplex.
pub fn normalize_profile(counts: &AuthorCountVector) -> Result<AuthorProfile, BowError> {
    let total: usize = counts.counts.iter().sum();
    if total == 0 {
        return Err(BowError::ZeroCounts(format!("#{}", counts.author_id)));
    }
    let t = total as f64;
    Ok(AuthorProfile {
        author_id: counts.author_id,
        probs: counts.counts.iter().map(|&c| c as f64 / t).collect(),
        space: ProfileSpace::Words,
    })
}

/// Word-space profiles for every author, in author order.
pub fn word_profiles(corpus: &Corpus) -> Result<Vec<AuthorProfile>, BowError> {
    (0..corpus.num_authors())
        .map(|a| {
            let counts = aggregate_author_counts(corpus, a)?;
            normalize_profile(&counts).map_err(|e| match e {
                BowError::ZeroCounts(_) => BowError::ZeroCounts(corpus.authors[a].clone()),
                other => other,
            })
        })
        .collect()
}

// --- Profile export ---------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct ProfileExport {
    author: String,
    space: String,
    probs: Vec<f64>,
}

/// Write profiles as a JSON list of `{"author", "space", "probs"}` objects.
/// `labels[i]` names `profiles[i]`'s author.
pub fn save_profiles(
    profiles: &[AuthorProfile],
    labels: &[String],
    path: &Path,
) -> Result<(), BowError> {
    assert_eq!(profiles.len(), labels.len(), "one label per profile");
    let out: Vec<ProfileExport> = profiles
        .iter()
        .zip(labels)
        .map(|(p, label)| ProfileExport {
            author: label.clone(),
            space: p.space.to_string(),
            probs: p.probs.clone(),
        })
        .collect();
    let json = serde_json::to_string_pretty(&out).expect("profile serialization cannot fail");
    std::fs::write(path, json + "\n").map_err(|e| BowError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

/// Read profiles persisted by [`save_profiles`]: `(author name, profile)`
/// pairs in file order. The `author_id` of each profile is its position.
pub fn load_profiles(path: &Path) -> Result<Vec<(String, AuthorProfile)>, BowError> {
    let invalid = |message: String| BowError::InvalidProfileFile {
        path: path.display().to_string(),
        message,
    };
    let data = std::fs::read_to_string(path).map_err(|e| BowError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let raw: Vec<ProfileExport> =
        serde_json::from_str(&data).map_err(|e| invalid(e.to_string()))?;
    raw.into_iter()
        .enumerate()
        .map(|(i, p)| {
            let space: ProfileSpace = p.space.parse().map_err(invalid)?;
            Ok((
                p.author,
                AuthorProfile {
                    author_id: i,
                    probs: p.probs,
                    space,
                },
            ))
        })
        .collect()
}
