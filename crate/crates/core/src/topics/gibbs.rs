//! Collapsed Gibbs sampling core shared by LDA, the Author-Topic model and
//! the Hierarchical Author-Topic model.
//!
//! All three samplers walk the same token stream and maintain the same count
//! structure; they differ only in which unit owns a token (the document for
//! LDA, an author from the document's author set otherwise) and in the number
//! of chained topic layers. A token's state is `(unit, path)` where `path`
//! indexes the lexicographic enumeration of per-layer topic tuples
//! `(z_1, .., z_d)`; only the leaf `z_d` emits the word.
//!
//! RNG stream discipline: a single ChaCha8 stream seeded from the config.
//! Initialization draws one value per token (uniform assignment), and each
//! sweep draws one value per token (inverse-CDF sample of the joint
//! conditional), in token-stream order. Identical seeds therefore reproduce
//! identical chains on every platform.

use ndarray::{Array2, Array3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::Corpus;

use super::{TopicConfig, TopicError};

/// Who owns a token during sampling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Attribution {
    /// Each token belongs to its document (plain LDA).
    Documents,
    /// Each token is assigned one of its document's authors (A-T, HAT).
    Authors,
}

/// One token occurrence in the flattened stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TokenSite {
    pub doc: usize,
    pub word: usize,
}

/// A token's current sampling state: owning unit and topic-path index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Assignment {
    pub unit: usize,
    pub path: usize,
}

/// Per-level counts for layers 2..=d: `counts[unit][parent][child]` and the
/// matching row sums `totals[unit][parent]`.
#[derive(Debug, Clone)]
struct LevelCounts {
    counts: Array3<usize>,
    totals: Array2<usize>,
}

/// Token-level assignments plus the sufficient-statistic count matrices.
#[derive(Debug, Clone)]
pub struct GibbsState {
    layer_sizes: Vec<usize>,
    path_count: usize,
    /// Lexicographic path index -> per-layer topics.
    path_topics: Vec<Vec<usize>>,
    vocab_size: usize,
    n_units: usize,
    tokens: Vec<TokenSite>,
    /// Units eligible to own tokens of each document, sorted.
    doc_units: Vec<Vec<usize>>,
    assign: Vec<Option<Assignment>>,
    /// `root[unit][t1]`.
    root: Array2<usize>,
    /// Tokens currently assigned to each unit.
    unit_totals: Vec<usize>,
    levels: Vec<LevelCounts>,
    /// `leaf_word[t_d][w]`.
    leaf_word: Array2<usize>,
    /// Tokens currently assigned to each leaf topic.
    leaf_totals: Vec<usize>,
}

impl GibbsState {
    /// Empty state (no token assigned) for a corpus and layer structure.
    pub fn new(
        corpus: &Corpus,
        layer_sizes: &[usize],
        attribution: Attribution,
    ) -> Result<Self, TopicError> {
        if layer_sizes.is_empty() || layer_sizes.contains(&0) {
            return Err(TopicError::InvalidConfig(
                "layer_sizes must be non-empty with every size >= 1".into(),
            ));
        }
        let n_units = match attribution {
            Attribution::Documents => corpus.documents.len(),
            Attribution::Authors => corpus.num_authors(),
        };
        let mut tokens = Vec::with_capacity(corpus.total_tokens());
        let mut doc_units = Vec::with_capacity(corpus.documents.len());
        for (d, doc) in corpus.documents.iter().enumerate() {
            for (&w, &c) in &doc.counts {
                for _ in 0..c {
                    tokens.push(TokenSite { doc: d, word: w });
                }
            }
            doc_units.push(match attribution {
                Attribution::Documents => vec![d],
                Attribution::Authors => doc.author_ids.clone(),
            });
        }

        let path_count = layer_sizes.iter().product();
        let path_topics = (0..path_count)
            .map(|p| decompose_path(p, layer_sizes))
            .collect();

        let depth = layer_sizes.len();
        let levels = (1..depth)
            .map(|i| LevelCounts {
                counts: Array3::zeros((n_units, layer_sizes[i - 1], layer_sizes[i])),
                totals: Array2::zeros((n_units, layer_sizes[i - 1])),
            })
            .collect();

        let n_tokens = tokens.len();
        Ok(Self {
            path_count,
            path_topics,
            vocab_size: corpus.vocab_size(),
            n_units,
            tokens,
            doc_units,
            assign: vec![None; n_tokens],
            root: Array2::zeros((n_units, layer_sizes[0])),
            unit_totals: vec![0; n_units],
            levels,
            leaf_word: Array2::zeros((layer_sizes[depth - 1], corpus.vocab_size())),
            leaf_totals: vec![0; layer_sizes[depth - 1]],
            layer_sizes: layer_sizes.to_vec(),
        })
    }

    pub fn n_tokens(&self) -> usize {
        self.tokens.len()
    }

    pub fn n_units(&self) -> usize {
        self.n_units
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn path_count(&self) -> usize {
        self.path_count
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn token(&self, t: usize) -> TokenSite {
        self.tokens[t]
    }

    pub fn doc_units(&self, doc: usize) -> &[usize] {
        &self.doc_units[doc]
    }

    pub fn assignment(&self, t: usize) -> Option<Assignment> {
        self.assign[t]
    }

    /// Topics per layer for a path index.
    pub fn path_topics(&self, path: usize) -> &[usize] {
        &self.path_topics[path]
    }

    pub fn root_counts(&self) -> &Array2<usize> {
        &self.root
    }

    pub fn unit_totals(&self) -> &[usize] {
        &self.unit_totals
    }

    /// `(counts, totals)` for a chained level `i` in `2..=depth`.
    pub fn level_counts(&self, level: usize) -> (&Array3<usize>, &Array2<usize>) {
        assert!(
            (2..=self.layer_sizes.len()).contains(&level),
            "level {level} out of range"
        );
        let lc = &self.levels[level - 2];
        (&lc.counts, &lc.totals)
    }

    pub fn leaf_word_counts(&self) -> &Array2<usize> {
        &self.leaf_word
    }

    pub fn leaf_totals(&self) -> &[usize] {
        &self.leaf_totals
    }

    /// Record a token's assignment, updating every count matrix.
    pub fn assign(&mut self, token: usize, unit: usize, path: usize) {
        assert!(self.assign[token].is_none(), "token {token} already assigned");
        assert!(
            self.doc_units[self.tokens[token].doc].contains(&unit),
            "unit {unit} not eligible for token {token}"
        );
        assert!(path < self.path_count, "path {path} out of range");
        let word = self.tokens[token].word;
        let topics = &self.path_topics[path];
        self.root[[unit, topics[0]]] += 1;
        self.unit_totals[unit] += 1;
        for (i, lc) in self.levels.iter_mut().enumerate() {
            lc.counts[[unit, topics[i], topics[i + 1]]] += 1;
            lc.totals[[unit, topics[i]]] += 1;
        }
        let leaf = topics[topics.len() - 1];
        self.leaf_word[[leaf, word]] += 1;
        self.leaf_totals[leaf] += 1;
        self.assign[token] = Some(Assignment { unit, path });
    }

    /// Remove a token's assignment, decrementing every count matrix.
    pub fn remove(&mut self, token: usize) -> Assignment {
        let a = self.assign[token]
            .take()
            .unwrap_or_else(|| panic!("token {token} is not assigned"));
        let word = self.tokens[token].word;
        let topics = &self.path_topics[a.path];
        self.root[[a.unit, topics[0]]] -= 1;
        self.unit_totals[a.unit] -= 1;
        for (i, lc) in self.levels.iter_mut().enumerate() {
            lc.counts[[a.unit, topics[i], topics[i + 1]]] -= 1;
            lc.totals[[a.unit, topics[i]]] -= 1;
        }
        let leaf = topics[topics.len() - 1];
        self.leaf_word[[leaf, word]] -= 1;
        self.leaf_totals[leaf] -= 1;
        a
    }

    /// Unnormalized joint conditional weight of assigning `token` (currently
    /// unassigned) to `(unit, path)`:
    ///
    /// ```text
    /// (C1[u][z1] + a1) / (N[u] + L1*a1)
    ///   * prod_{i=2..d} (Ci[u][z_{i-1}][z_i] + ai) / (Ni[u][z_{i-1}] + Li*ai)
    ///   * (Cw[z_d][w] + b) / (N[z_d] + |V|*b)
    /// ```
    fn weight(&self, word: usize, unit: usize, path: usize, config: &TopicConfig) -> f64 {
        let topics = &self.path_topics[path];
        let l1 = self.layer_sizes[0] as f64;
        let mut w = (self.root[[unit, topics[0]]] as f64 + config.alpha[0])
            / (self.unit_totals[unit] as f64 + l1 * config.alpha[0]);
        for (i, lc) in self.levels.iter().enumerate() {
            let li = self.layer_sizes[i + 1] as f64;
            let a = config.alpha[i + 1];
            w *= (lc.counts[[unit, topics[i], topics[i + 1]]] as f64 + a)
                / (lc.totals[[unit, topics[i]]] as f64 + li * a);
        }
        let leaf = topics[topics.len() - 1];
        w * (self.leaf_word[[leaf, word]] as f64 + config.beta)
            / (self.leaf_totals[leaf] as f64 + self.vocab_size as f64 * config.beta)
    }

    /// Fill `weights` with the unnormalized conditional over
    /// `eligible units x paths` (row-major) for an unassigned token.
    fn conditional_weights(&self, token: usize, config: &TopicConfig, weights: &mut Vec<f64>) {
        debug_assert!(self.assign[token].is_none());
        let site = self.tokens[token];
        weights.clear();
        for &unit in &self.doc_units[site.doc] {
            for path in 0..self.path_count {
                weights.push(self.weight(site.word, unit, path, config));
            }
        }
    }
}

fn decompose_path(mut path: usize, layer_sizes: &[usize]) -> Vec<usize> {
    let mut topics = vec![0; layer_sizes.len()];
    for (i, &l) in layer_sizes.iter().enumerate().rev() {
        topics[i] = path % l;
        path /= l;
    }
    topics
}

/// Normalized joint conditional for one token: rows are the document's
/// eligible units (authors), columns the topic paths in lexicographic order.
#[derive(Debug, Clone)]
pub struct ConditionalTable {
    pub author_ids: Vec<usize>,
    pub layer_sizes: Vec<usize>,
    /// `probs[[author_pos, path]]`, summing to 1 over the whole table.
    pub probs: Array2<f64>,
}

impl ConditionalTable {
    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }
}

/// Exact normalized conditional used by the A-T sampler. The token's current
/// assignment must already have been removed (`GibbsState::remove`).
/// Panics if the state or config is not single-layer or the token is still
/// assigned.
pub fn at_token_conditional(
    state: &GibbsState,
    token: usize,
    config: &TopicConfig,
) -> ConditionalTable {
    assert_eq!(
        state.layer_sizes().len(),
        1,
        "at_token_conditional requires a single topic layer"
    );
    token_conditional(state, token, config)
}

/// Exact normalized conditional used by the HAT sampler, over full
/// `(author, z_1..z_d)` paths. Same preconditions as
/// [`at_token_conditional`] except any layer depth is accepted.
pub fn hat_token_conditional(
    state: &GibbsState,
    token: usize,
    config: &TopicConfig,
) -> ConditionalTable {
    token_conditional(state, token, config)
}

fn token_conditional(state: &GibbsState, token: usize, config: &TopicConfig) -> ConditionalTable {
    assert!(
        state.assignment(token).is_none(),
        "token {token} must be removed before computing its conditional"
    );
    assert_eq!(
        config.layer_sizes,
        state.layer_sizes(),
        "config and state layer sizes differ"
    );
    let mut weights = Vec::new();
    state.conditional_weights(token, config, &mut weights);
    let units = state.doc_units(state.token(token).doc).to_vec();
    let total: f64 = weights.iter().sum();
    let probs = Array2::from_shape_vec(
        (units.len(), state.path_count()),
        weights.iter().map(|w| w / total).collect(),
    )
    .expect("weights fill the table");
    ConditionalTable {
        author_ids: units,
        layer_sizes: state.layer_sizes().to_vec(),
        probs,
    }
}

/// A single sampling chain: state plus its seeded RNG.
#[derive(Debug)]
pub struct GibbsSampler {
    state: GibbsState,
    config: TopicConfig,
    rng: ChaCha8Rng,
    weights: Vec<f64>,
}

impl GibbsSampler {
    /// Validate, build the state and draw the initial uniform assignments.
    pub fn new(
        corpus: &Corpus,
        config: TopicConfig,
        attribution: Attribution,
    ) -> Result<Self, TopicError> {
        config.validate()?;
        let mut state = GibbsState::new(corpus, &config.layer_sizes, attribution)?;
        if state.n_tokens() == 0 {
            return Err(TopicError::EmptyCorpus);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        for t in 0..state.n_tokens() {
            let units = state.doc_units(state.token(t).doc);
            let idx = rng.random_range(0..units.len() * state.path_count());
            let unit = units[idx / state.path_count()];
            state.assign(t, unit, idx % state.path_count());
        }
        Ok(Self {
            state,
            config,
            rng,
            weights: Vec::new(),
        })
    }

    pub fn state(&self) -> &GibbsState {
        &self.state
    }

    pub fn config(&self) -> &TopicConfig {
        &self.config
    }

    /// One full Gibbs sweep: resample every token from its joint conditional.
    pub fn sweep(&mut self) {
        for t in 0..self.state.n_tokens() {
            self.state.remove(t);
            self.state
                .conditional_weights(t, &self.config, &mut self.weights);
            let total: f64 = self.weights.iter().sum();
            let mut u = self.rng.random::<f64>() * total;
            let mut chosen = self.weights.len() - 1;
            for (i, &w) in self.weights.iter().enumerate() {
                u -= w;
                if u <= 0.0 {
                    chosen = i;
                    break;
                }
            }
            let units = self.state.doc_units(self.state.token(t).doc);
            let unit = units[chosen / self.state.path_count()];
            let path = chosen % self.state.path_count();
            self.state.assign(t, unit, path);
        }
    }
}
