//! Corpus ingestion: tokenization, vocabulary construction and the
//! count-matrix representation every model consumes.
//!
//! Determinism contract: the vocabulary and the author list are sorted
//! lexicographically, document order follows input order, and per-document
//! counts are stored in word-index order. Identical input therefore yields a
//! bit-identical [`Corpus`], and saving then loading a corpus is lossless.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("duplicate document id: {0}")]
    DuplicateDocId(String),

    #[error("document {0} has an empty author set")]
    EmptyAuthorSet(String),

    #[error("document {doc}: token {token:?} has non-positive count {count}")]
    NonPositiveCount {
        doc: String,
        token: String,
        count: i64,
    },

    #[error("line {line}: {message}")]
    Jsonl { line: usize, message: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("corpus file {path} is invalid: {message}")]
    InvalidCorpusFile { path: String, message: String },
}

/// Tokenization rules: lowercase, keep alphabetic runs, drop short tokens and
/// stopwords.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TokenizeConfig {
    /// Tokens shorter than this (in chars) are dropped.
    pub min_len: usize,
    /// Lowercased tokens dropped after length filtering.
    pub stopwords: BTreeSet<String>,
}

impl Default for TokenizeConfig {
    fn default() -> Self {
        Self {
            min_len: 2,
            stopwords: BTreeSet::new(),
        }
    }
}

/// Ordered distinct token strings plus the inverse index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Build from already-sorted, deduplicated terms.
    fn from_sorted(terms: Vec<String>) -> Self {
        let index = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Self { terms, index }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn term(&self, idx: usize) -> &str {
        &self.terms[idx]
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }
}

/// One document: stable id, author indices into [`Corpus::authors`], and
/// sparse word counts keyed by vocabulary index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    /// Sorted, deduplicated author indices. Never empty.
    pub author_ids: Vec<usize>,
    /// Word index -> count, all counts >= 1.
    pub counts: BTreeMap<usize, usize>,
}

impl Document {
    /// Total token count of the document.
    pub fn total_tokens(&self) -> usize {
        self.counts.values().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    pub vocabulary: Vocabulary,
    pub documents: Vec<Document>,
    /// Sorted unique author names; `Document::author_ids` index into this.
    pub authors: Vec<String>,
}

impl Corpus {
    pub fn num_authors(&self) -> usize {
        self.authors.len()
    }

    pub fn vocab_size(&self) -> usize {
        self.vocabulary.len()
    }

    /// Total token count across all documents.
    pub fn total_tokens(&self) -> usize {
        self.documents.iter().map(Document::total_tokens).sum()
    }

    /// Document indices listing the given author.
    pub fn documents_of_author(&self, author_id: usize) -> Vec<usize> {
        self.documents
            .iter()
            .enumerate()
            .filter(|(_, d)| d.author_ids.contains(&author_id))
            .map(|(i, _)| i)
            .collect()
    }
}

/// Raw document content: either text to be tokenized or precomputed counts
/// taken verbatim.
#[derive(Debug, Clone)]
pub enum RawContent {
    Text(String),
    Counts(BTreeMap<String, usize>),
}

/// An input document before vocabulary construction.
#[derive(Debug, Clone)]
pub struct RawDocument {
    pub id: String,
    pub authors: Vec<String>,
    pub content: RawContent,
}

impl RawDocument {
    pub fn from_text(id: impl Into<String>, authors: &[&str], text: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            authors: authors.iter().map(|s| s.to_string()).collect(),
            content: RawContent::Text(text.into()),
        }
    }
}

/// Split into lowercase alphabetic runs, then drop short tokens and stopwords.
/// Empty input yields an empty list.
pub fn tokenize(text: &str, config: &TokenizeConfig) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphabetic())
        .filter(|t| !t.is_empty())
        .filter(|t| t.chars().count() >= config.min_len)
        .filter(|t| !config.stopwords.contains(*t))
        .map(str::to_owned)
        .collect()
}

/// Build the corpus: vocabulary is the sorted union of all tokens, author
/// names are sorted, counts are exact token frequencies.
pub fn build_corpus(
    raw_docs: &[RawDocument],
    config: &TokenizeConfig,
) -> Result<Corpus, CorpusError> {
    let mut seen_ids = HashSet::new();
    for doc in raw_docs {
        if !seen_ids.insert(doc.id.as_str()) {
            return Err(CorpusError::DuplicateDocId(doc.id.clone()));
        }
        if doc.authors.is_empty() {
            return Err(CorpusError::EmptyAuthorSet(doc.id.clone()));
        }
    }

    // First pass: token counts per document in token space.
    let mut token_counts: Vec<BTreeMap<String, usize>> = Vec::with_capacity(raw_docs.len());
    for doc in raw_docs {
        let counts = match &doc.content {
            RawContent::Text(text) => {
                let mut m = BTreeMap::new();
                for tok in tokenize(text, config) {
                    *m.entry(tok).or_insert(0) += 1;
                }
                m
            }
            RawContent::Counts(given) => {
                for (tok, &c) in given {
                    if c == 0 {
                        return Err(CorpusError::NonPositiveCount {
                            doc: doc.id.clone(),
                            token: tok.clone(),
                            count: c as i64,
                        });
                    }
                }
                given.clone()
            }
        };
        token_counts.push(counts);
    }

    let vocab_terms: BTreeSet<&str> = token_counts
        .iter()
        .flat_map(|m| m.keys().map(String::as_str))
        .collect();
    let vocabulary =
        Vocabulary::from_sorted(vocab_terms.into_iter().map(str::to_owned).collect());

    let author_names: BTreeSet<&str> = raw_docs
        .iter()
        .flat_map(|d| d.authors.iter().map(String::as_str))
        .collect();
    let authors: Vec<String> = author_names.into_iter().map(str::to_owned).collect();
    let author_index: HashMap<&str, usize> = authors
        .iter()
        .enumerate()
        .map(|(i, a)| (a.as_str(), i))
        .collect();

    let documents = raw_docs
        .iter()
        .zip(token_counts)
        .map(|(raw, counts)| {
            let mut ids: Vec<usize> = raw
                .authors
                .iter()
                .map(|a| author_index[a.as_str()])
                .collect();
            ids.sort_unstable();
            ids.dedup();
            Document {
                id: raw.id.clone(),
                author_ids: ids,
                counts: counts
                    .into_iter()
                    .map(|(tok, c)| (vocabulary.index_of(&tok).expect("token in vocab"), c))
                    .collect(),
            }
        })
        .collect();

    Ok(Corpus {
        vocabulary,
        documents,
        authors,
    })
}

// --- JSONL ingestion -------------------------------------------------------

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonlRecord {
    id: String,
    authors: Vec<String>,
    #[serde(default)]
    text: Option<String>,
    #[serde(default)]
    counts: Option<BTreeMap<String, usize>>,
}

/// Read raw documents from a JSONL file, one object per line:
/// `{"id", "authors", "text"}` or `{"id", "authors", "counts"}`.
/// Blank lines are skipped; malformed lines are reported with their
/// 1-based line number.
pub fn load_raw_jsonl(path: &Path) -> Result<Vec<RawDocument>, CorpusError> {
    let file = fs::File::open(path).map_err(|e| CorpusError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let reader = BufReader::new(file);
    let mut docs = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| CorpusError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: JsonlRecord = serde_json::from_str(&line).map_err(|e| CorpusError::Jsonl {
            line: line_no,
            message: e.to_string(),
        })?;
        let content = match (rec.text, rec.counts) {
            (Some(text), None) => RawContent::Text(text),
            (None, Some(counts)) => RawContent::Counts(counts),
            (Some(_), Some(_)) => {
                return Err(CorpusError::Jsonl {
                    line: line_no,
                    message: "document has both \"text\" and \"counts\"".into(),
                })
            }
            (None, None) => {
                return Err(CorpusError::Jsonl {
                    line: line_no,
                    message: "document has neither \"text\" nor \"counts\"".into(),
                })
            }
        };
        docs.push(RawDocument {
            id: rec.id,
            authors: rec.authors,
            content,
        });
    }
    Ok(docs)
}

// --- Binary-exact persisted corpus -----------------------------------------

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CorpusFile {
    vocab: Vec<String>,
    authors: Vec<String>,
    docs: Vec<DocFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DocFile {
    id: String,
    authors: Vec<usize>,
    counts: Vec<(usize, usize)>,
}

/// Persist as a single JSON file. `load_corpus(save_corpus(c)) == c` exactly.
pub fn save_corpus(corpus: &Corpus, path: &Path) -> Result<(), CorpusError> {
    let file = CorpusFile {
        vocab: corpus.vocabulary.terms.clone(),
        authors: corpus.authors.clone(),
        docs: corpus
            .documents
            .iter()
            .map(|d| DocFile {
                id: d.id.clone(),
                authors: d.author_ids.clone(),
                counts: d.counts.iter().map(|(&w, &c)| (w, c)).collect(),
            })
            .collect(),
    };
    let json = serde_json::to_string(&file).expect("corpus serialization cannot fail");
    let mut out = fs::File::create(path).map_err(|e| CorpusError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    out.write_all(json.as_bytes())
        .and_then(|_| out.write_all(b"\n"))
        .map_err(|e| CorpusError::Io {
            path: path.display().to_string(),
            source: e,
        })
}

pub fn load_corpus(path: &Path) -> Result<Corpus, CorpusError> {
    let data = fs::read_to_string(path).map_err(|e| CorpusError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let file: CorpusFile =
        serde_json::from_str(&data).map_err(|e| CorpusError::InvalidCorpusFile {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
    let invalid = |message: String| CorpusError::InvalidCorpusFile {
        path: path.display().to_string(),
        message,
    };

    let vocab_size = file.vocab.len();
    let n_authors = file.authors.len();
    let mut documents = Vec::with_capacity(file.docs.len());
    let mut seen_ids = HashSet::new();
    for d in file.docs {
        if !seen_ids.insert(d.id.clone()) {
            return Err(invalid(format!("duplicate document id {:?}", d.id)));
        }
        if d.authors.is_empty() {
            return Err(invalid(format!("document {:?} has no authors", d.id)));
        }
        if let Some(&a) = d.authors.iter().find(|&&a| a >= n_authors) {
            return Err(invalid(format!(
                "document {:?} references author index {a} out of range",
                d.id
            )));
        }
        let mut counts = BTreeMap::new();
        for (w, c) in d.counts {
            if w >= vocab_size {
                return Err(invalid(format!(
                    "document {:?} references word index {w} out of range",
                    d.id
                )));
            }
            if c == 0 {
                return Err(invalid(format!(
                    "document {:?} has zero count for word {w}",
                    d.id
                )));
            }
            if counts.insert(w, c).is_some() {
                return Err(invalid(format!(
                    "document {:?} repeats word index {w}",
                    d.id
                )));
            }
        }
        documents.push(Document {
            id: d.id,
            author_ids: d.authors,
            counts,
        });
    }

    Ok(Corpus {
        vocabulary: Vocabulary::from_sorted(file.vocab),
        documents,
        authors: file.authors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg_with_stopwords(words: &[&str]) -> TokenizeConfig {
        TokenizeConfig {
            min_len: 2,
            stopwords: words.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn tokenize_applies_rules() {
        let toks = tokenize("The MVE Algorithm, twice. The!", &cfg_with_stopwords(&["the"]));
        assert_eq!(toks, vec!["mve", "algorithm", "twice"]);
    }

    #[test]
    fn tokenize_empty_input() {
        assert!(tokenize("", &TokenizeConfig::default()).is_empty());
    }

    #[test]
    fn tokenize_drops_digits_and_short_tokens() {
        let toks = tokenize("a1 b2 cc", &TokenizeConfig::default());
        assert_eq!(toks, vec!["cc"]);
    }

    #[test]
    fn build_corpus_counts_and_vocab() {
        let docs = vec![
            RawDocument::from_text("d1", &["ann"], "x x y"),
            RawDocument::from_text("d2", &["bob"], "y z"),
        ];
        let cfg = TokenizeConfig {
            min_len: 1,
            ..Default::default()
        };
        let corpus = build_corpus(&docs, &cfg).unwrap();
        assert_eq!(corpus.vocabulary.terms(), &["x", "y", "z"]);
        assert_eq!(
            corpus.documents[0].counts,
            BTreeMap::from([(0, 2), (1, 1)])
        );
        assert_eq!(
            corpus.documents[1].counts,
            BTreeMap::from([(1, 1), (2, 1)])
        );
    }

    #[test]
    fn build_corpus_shared_author_gets_one_index() {
        let docs = vec![
            RawDocument::from_text("d1", &["ann", "bob"], "alpha beta"),
            RawDocument::from_text("d2", &["ann"], "gamma"),
        ];
        let corpus = build_corpus(&docs, &TokenizeConfig::default()).unwrap();
        let ann = corpus.authors.iter().position(|a| a == "ann").unwrap();
        assert!(corpus.documents[0].author_ids.contains(&ann));
        assert_eq!(corpus.documents[1].author_ids, vec![ann]);
    }

    #[test]
    fn build_corpus_rejects_duplicate_ids() {
        let docs = vec![
            RawDocument::from_text("d1", &["ann"], "alpha"),
            RawDocument::from_text("d1", &["bob"], "beta"),
        ];
        assert!(matches!(
            build_corpus(&docs, &TokenizeConfig::default()),
            Err(CorpusError::DuplicateDocId(_))
        ));
    }

    #[test]
    fn build_corpus_rejects_empty_author_set() {
        let docs = vec![RawDocument::from_text("d1", &[], "alpha")];
        assert!(matches!(
            build_corpus(&docs, &TokenizeConfig::default()),
            Err(CorpusError::EmptyAuthorSet(_))
        ));
    }

    #[test]
    fn token_totals_match_global_counts() {
        let docs = vec![
            RawDocument::from_text("d1", &["ann"], "alpha beta alpha"),
            RawDocument::from_text("d2", &["bob"], "beta gamma"),
            RawDocument::from_text("d3", &["cat"], ""),
        ];
        let corpus = build_corpus(&docs, &TokenizeConfig::default()).unwrap();
        let per_doc: usize = corpus.documents.iter().map(Document::total_tokens).sum();
        let mut global = vec![0usize; corpus.vocab_size()];
        for d in &corpus.documents {
            for (&w, &c) in &d.counts {
                global[w] += c;
            }
        }
        assert_eq!(per_doc, global.iter().sum::<usize>());
        assert_eq!(per_doc, 5);
    }

    #[test]
    fn empty_doc_after_filtering_is_kept() {
        let docs = vec![RawDocument::from_text("d1", &["ann"], "a 1 2")];
        let corpus = build_corpus(&docs, &TokenizeConfig::default()).unwrap();
        assert_eq!(corpus.documents.len(), 1);
        assert_eq!(corpus.documents[0].total_tokens(), 0);
        assert_eq!(corpus.authors, vec!["ann"]);
    }

    #[test]
    fn precomputed_counts_reject_zero() {
        let docs = vec![RawDocument {
            id: "d1".into(),
            authors: vec!["ann".into()],
            content: RawContent::Counts(BTreeMap::from([("ok".into(), 0usize)])),
        }];
        assert!(matches!(
            build_corpus(&docs, &TokenizeConfig::default()),
            Err(CorpusError::NonPositiveCount { .. })
        ));
    }

    #[test]
    fn save_load_round_trip() {
        let docs = vec![
            RawDocument::from_text("d1", &["ann", "bob"], "alpha beta alpha"),
            RawDocument::from_text("d2", &["cécile"], "gamma beta"),
        ];
        let corpus = build_corpus(&docs, &TokenizeConfig::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.json");
        save_corpus(&corpus, &path).unwrap();
        let loaded = load_corpus(&path).unwrap();
        assert_eq!(corpus, loaded);

        // Saving the loaded corpus reproduces identical bytes.
        let path2 = dir.path().join("corpus2.json");
        save_corpus(&loaded, &path2).unwrap();
        assert_eq!(fs::read(&path).unwrap(), fs::read(&path2).unwrap());
    }

    #[test]
    fn jsonl_reports_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("docs.jsonl");
        fs::write(
            &path,
            "{\"id\":\"d1\",\"authors\":[\"a\"],\"text\":\"hi there\"}\n{\"authors\":[\"b\"],\"text\":\"x\"}\n",
        )
        .unwrap();
        let err = load_raw_jsonl(&path).unwrap_err();
        match err {
            CorpusError::Jsonl { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn jsonl_rejects_unknown_fields() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("docs.jsonl");
        fs::write(
            &path,
            "{\"id\":\"d1\",\"authors\":[\"a\"],\"text\":\"hi\",\"year\":2010}\n",
        )
        .unwrap();
        assert!(matches!(
            load_raw_jsonl(&path),
            Err(CorpusError::Jsonl { line: 1, .. })
        ));
    }

    #[test]
    fn jsonl_accepts_precomputed_counts() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("docs.jsonl");
        fs::write(
            &path,
            "{\"id\":\"d1\",\"authors\":[\"a\"],\"counts\":{\"alpha\":3,\"beta\":1}}\n",
        )
        .unwrap();
        let docs = load_raw_jsonl(&path).unwrap();
        let corpus = build_corpus(&docs, &TokenizeConfig::default()).unwrap();
        assert_eq!(corpus.documents[0].total_tokens(), 4);
    }

    #[test]
    fn empty_file_loads_empty_corpus() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("docs.jsonl");
        fs::write(&path, "").unwrap();
        let docs = load_raw_jsonl(&path).unwrap();
        let corpus = build_corpus(&docs, &TokenizeConfig::default()).unwrap();
        assert!(corpus.documents.is_empty());
        assert_eq!(corpus.vocab_size(), 0);
    }

    #[test]
    fn build_corpus_is_deterministic() {
        let docs = vec![
            RawDocument::from_text("d1", &["zoe", "ann"], "delta alpha"),
            RawDocument::from_text("d2", &["mia"], "beta alpha"),
        ];
        let a = build_corpus(&docs, &TokenizeConfig::default()).unwrap();
        let b = build_corpus(&docs, &TokenizeConfig::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.authors, vec!["ann", "mia", "zoe"]);
    }
}
