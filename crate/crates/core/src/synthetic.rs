//! Seeded synthetic corpora: sampled from known generative models so that
//! inference quality and pipeline behavior can be checked against ground
//! truth. Everything is a pure function of its config (ChaCha8 streams), so
//! the same config is the same corpus on every platform.

use std::collections::BTreeMap;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{build_corpus, Corpus, RawContent, RawDocument, TokenizeConfig};

/// Ground-truth Author-Topic generator with disjoint per-topic vocabulary
/// blocks.
#[derive(Debug, Clone)]
pub struct AtGenConfig {
    pub n_authors: usize,
    pub docs_per_author: usize,
    pub tokens_per_doc: usize,
    pub n_topics: usize,
    /// Vocabulary block size per topic; topic t emits uniformly over its block.
    pub words_per_topic: usize,
    pub seed: u64,
}

impl Default for AtGenConfig {
    fn default() -> Self {
        Self {
            n_authors: 20,
            docs_per_author: 8,
            tokens_per_doc: 50,
            n_topics: 4,
            words_per_topic: 12,
            seed: 1,
        }
    }
}

fn word_name(topic: usize, word: usize) -> String {
    format!("t{topic:02}w{word:03}")
}

fn author_name(a: usize) -> String {
    format!("author{a:02}")
}

/// Author topic distribution: one dominant topic with jittered spread over
/// the rest. Dominant mass stays moderate so smoothed estimates can match it.
fn author_theta(rng: &mut ChaCha8Rng, dominant: usize, n_topics: usize, mass: f64) -> Vec<f64> {
    let dom = mass + 0.1 * rng.random::<f64>();
    let mut rest: Vec<f64> = (0..n_topics - 1)
        .map(|_| 0.5 + rng.random::<f64>())
        .collect();
    let rest_total: f64 = rest.iter().sum();
    for r in &mut rest {
        *r *= (1.0 - dom) / rest_total;
    }
    let mut theta = Vec::with_capacity(n_topics);
    let mut it = rest.into_iter();
    for t in 0..n_topics {
        if t == dominant {
            theta.push(dom);
        } else {
            theta.push(it.next().expect("rest entries cover non-dominant topics"));
        }
    }
    theta
}

fn sample_categorical(rng: &mut ChaCha8Rng, probs: &[f64]) -> usize {
    let mut u = rng.random::<f64>();
    for (i, &p) in probs.iter().enumerate() {
        u -= p;
        if u <= 0.0 {
            return i;
        }
    }
    probs.len() - 1
}

/// Sample a corpus from a known A-T model: each author owns
/// `docs_per_author` solo documents; every token draws a topic from the
/// author's distribution and a word uniformly from that topic's block.
/// Returns the corpus and the true author-topic matrix (rows follow the
/// corpus author order).
pub fn at_corpus(cfg: &AtGenConfig) -> (Corpus, Array2<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut theta = Array2::<f64>::zeros((cfg.n_authors, cfg.n_topics));
    for a in 0..cfg.n_authors {
        let row = author_theta(&mut rng, a % cfg.n_topics, cfg.n_topics, 0.55);
        for (t, &p) in row.iter().enumerate() {
            theta[[a, t]] = p;
        }
    }

    let mut docs = Vec::new();
    for a in 0..cfg.n_authors {
        let theta_row: Vec<f64> = theta.row(a).to_vec();
        for d in 0..cfg.docs_per_author {
            let mut counts: BTreeMap<String, usize> = BTreeMap::new();
            for _ in 0..cfg.tokens_per_doc {
                let t = sample_categorical(&mut rng, &theta_row);
                let w = rng.random_range(0..cfg.words_per_topic);
                *counts.entry(word_name(t, w)).or_insert(0) += 1;
            }
            docs.push(RawDocument {
                id: format!("a{a:02}d{d:02}"),
                authors: vec![author_name(a)],
                content: RawContent::Counts(counts),
            });
        }
    }
    let corpus = build_corpus(&docs, &TokenizeConfig::default())
        .expect("generated corpus is always well-formed");
    // Zero-padded author names sort in generation order.
    (corpus, theta)
}

/// Clustered-corpus generator: authors fall into well-separated topic
/// clusters, and a fraction of documents are co-authored across clusters
/// (which is exactly where authorship-blind models blur).
#[derive(Debug, Clone)]
pub struct ClusteredConfig {
    pub n_authors: usize,
    pub n_clusters: usize,
    pub docs_per_author: usize,
    pub tokens_per_doc: usize,
    pub words_per_cluster: usize,
    /// Probability that a document gains a co-author from another cluster.
    pub cross_doc_fraction: f64,
    /// Mass each author puts on the home cluster's topic (before jitter).
    pub dominant_mass: f64,
    pub seed: u64,
}

impl Default for ClusteredConfig {
    fn default() -> Self {
        Self {
            n_authors: 30,
            n_clusters: 3,
            docs_per_author: 4,
            tokens_per_doc: 60,
            words_per_cluster: 25,
            cross_doc_fraction: 0.25,
            dominant_mass: 0.82,
            seed: 7,
        }
    }
}

/// Sample a clustered corpus A-T style: per token, pick one of the document's
/// authors uniformly, then a topic from that author's distribution, then a
/// word from the topic's block.
pub fn clustered_corpus(cfg: &ClusteredConfig) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let cluster_of = |a: usize| a % cfg.n_clusters;
    let thetas: Vec<Vec<f64>> = (0..cfg.n_authors)
        .map(|a| author_theta(&mut rng, cluster_of(a), cfg.n_clusters, cfg.dominant_mass))
        .collect();

    let mut docs = Vec::new();
    for a in 0..cfg.n_authors {
        for d in 0..cfg.docs_per_author {
            let mut authors = vec![a];
            if rng.random::<f64>() < cfg.cross_doc_fraction && cfg.n_clusters > 1 {
                // Co-author from a different cluster.
                loop {
                    let other = rng.random_range(0..cfg.n_authors);
                    if cluster_of(other) != cluster_of(a) {
                        authors.push(other);
                        break;
                    }
                }
            }
            let mut counts: BTreeMap<String, usize> = BTreeMap::new();
            for _ in 0..cfg.tokens_per_doc {
                let owner = authors[rng.random_range(0..authors.len())];
                let t = sample_categorical(&mut rng, &thetas[owner]);
                let w = rng.random_range(0..cfg.words_per_cluster);
                *counts.entry(word_name(t, w)).or_insert(0) += 1;
            }
            docs.push(RawDocument {
                id: format!("a{a:02}d{d:02}"),
                authors: authors.iter().map(|&x| author_name(x)).collect(),
                content: RawContent::Counts(counts),
            });
        }
    }
    build_corpus(&docs, &TokenizeConfig::default())
        .expect("generated corpus is always well-formed")
}

/// The fixed 30-author, 3-cluster corpus used by the end-to-end checks.
pub fn bundled_clustered_corpus() -> Corpus {
    clustered_corpus(&ClusteredConfig::default())
}

/// Uniformly random corpus with an exact total token count of
/// `n_docs * tokens_per_doc`; useful for conservation and conditional tests.
pub fn random_corpus(
    n_authors: usize,
    n_docs: usize,
    vocab_size: usize,
    tokens_per_doc: usize,
    max_authors_per_doc: usize,
    seed: u64,
) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut docs = Vec::with_capacity(n_docs);
    for d in 0..n_docs {
        let n_doc_authors = rng.random_range(1..=max_authors_per_doc.min(n_authors));
        let mut authors = Vec::new();
        while authors.len() < n_doc_authors {
            let a = author_name(rng.random_range(0..n_authors));
            if !authors.contains(&a) {
                authors.push(a);
            }
        }
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for _ in 0..tokens_per_doc {
            let w = format!("w{:03}", rng.random_range(0..vocab_size));
            *counts.entry(w).or_insert(0) += 1;
        }
        docs.push(RawDocument {
            id: format!("d{d:03}"),
            authors,
            content: RawContent::Counts(counts),
        });
    }
    build_corpus(&docs, &TokenizeConfig::default())
        .expect("generated corpus is always well-formed")
}
