//! Topic-model inference: LDA, the Author-Topic (A-T) model and the
//! Hierarchical Author-Topic (HAT) model, all via collapsed Gibbs sampling.
//!
//! LDA infers per-document topic mixtures (authorship ignored); the A-T model
//! assigns every token jointly to an author of its document and a topic, so
//! authors get topic distributions directly; HAT chains several topic layers
//! `z_1 -> .. -> z_d` per token, with only the leaf layer emitting words, and
//! conditions every layer's distribution on the author. Setting the root
//! layer size to 1 makes HAT coincide with A-T exactly, which is tested.
//!
//! Point estimates are the Dirichlet-smoothed count ratios averaged over
//! post-burn-in samples taken every `sample_lag` sweeps.

mod gibbs;

pub use gibbs::{
    at_token_conditional, hat_token_conditional, Assignment, Attribution, ConditionalTable,
    GibbsSampler, GibbsState, TokenSite,
};

use std::path::Path;

use ndarray::{Array2, Array3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bow::{AuthorProfile, ProfileSpace};
use crate::corpus::Corpus;

#[derive(Debug, Error)]
pub enum TopicError {
    #[error("invalid topic config: {0}")]
    InvalidConfig(String),

    #[error("corpus has no tokens")]
    EmptyCorpus,

    #[error("author {0} has no tokens to aggregate")]
    AuthorWithoutTokens(String),

    #[error("layer {layer} out of range for a {depth}-layer model")]
    LayerOutOfRange { layer: usize, depth: usize },

    #[error("model file {path} is invalid: {message}")]
    InvalidModelFile { path: String, message: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Sampler configuration. LDA and A-T use a single layer `[T]`; HAT uses
/// `[L_1, .., L_d]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicConfig {
    pub layer_sizes: Vec<usize>,
    /// Dirichlet prior per layer.
    pub alpha: Vec<f64>,
    /// Dirichlet prior on leaf word distributions.
    pub beta: f64,
    /// Total Gibbs sweeps.
    pub iterations: usize,
    /// Sweeps discarded before estimates accumulate.
    pub burn_in: usize,
    /// Sweeps between retained samples.
    pub sample_lag: usize,
    pub seed: u64,
}

impl TopicConfig {
    /// Single-layer config (LDA / A-T) with standard defaults:
    /// `alpha = 50/T`, `beta = 0.01`, 500 sweeps, 200 burn-in, lag 10.
    pub fn single_layer(topics: usize, seed: u64) -> Self {
        Self::hierarchical(vec![topics], seed)
    }

    /// Multi-layer config with the same defaults per layer.
    pub fn hierarchical(layer_sizes: Vec<usize>, seed: u64) -> Self {
        let alpha = layer_sizes
            .iter()
            .map(|&l| 50.0 / l.max(1) as f64)
            .collect();
        Self {
            layer_sizes,
            alpha,
            beta: 0.01,
            iterations: 500,
            burn_in: 200,
            sample_lag: 10,
            seed,
        }
    }

    pub fn with_schedule(mut self, iterations: usize, burn_in: usize, sample_lag: usize) -> Self {
        self.iterations = iterations;
        self.burn_in = burn_in;
        self.sample_lag = sample_lag;
        self
    }

    pub fn with_priors(mut self, alpha: Vec<f64>, beta: f64) -> Self {
        self.alpha = alpha;
        self.beta = beta;
        self
    }

    pub fn depth(&self) -> usize {
        self.layer_sizes.len()
    }

    pub fn validate(&self) -> Result<(), TopicError> {
        if self.layer_sizes.is_empty() {
            return Err(TopicError::InvalidConfig("layer_sizes is empty".into()));
        }
        if self.layer_sizes.contains(&0) {
            return Err(TopicError::InvalidConfig(
                "every layer size must be >= 1".into(),
            ));
        }
        if self.alpha.len() != self.layer_sizes.len() {
            return Err(TopicError::InvalidConfig(format!(
                "{} alpha values for {} layers",
                self.alpha.len(),
                self.layer_sizes.len()
            )));
        }
        if self.alpha.iter().any(|&a| a <= 0.0 || a.is_nan()) {
            return Err(TopicError::InvalidConfig("alpha must be positive".into()));
        }
        if self.beta <= 0.0 || self.beta.is_nan() {
            return Err(TopicError::InvalidConfig("beta must be positive".into()));
        }
        if self.iterations <= self.burn_in {
            return Err(TopicError::InvalidConfig(format!(
                "iterations ({}) must exceed burn_in ({})",
                self.iterations, self.burn_in
            )));
        }
        if self.sample_lag == 0 {
            return Err(TopicError::InvalidConfig("sample_lag must be >= 1".into()));
        }
        Ok(())
    }
}

/// LDA estimates: rows of both matrices are probability distributions.
#[derive(Debug, Clone, PartialEq)]
pub struct LdaModel {
    /// docs x T
    pub doc_topic: Array2<f64>,
    /// T x |V|
    pub topic_word: Array2<f64>,
}

/// Author-Topic estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct AtModel {
    /// authors x T
    pub author_topic: Array2<f64>,
    /// T x |V|
    pub topic_word: Array2<f64>,
}

/// Hierarchical Author-Topic estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct HatModel {
    pub layer_sizes: Vec<usize>,
    /// authors x L_1
    pub root_dist: Array2<f64>,
    /// For each level i >= 2: authors x L_{i-1} x L_i, rows (fixed author and
    /// parent topic) are distributions over the level's topics.
    pub cond_dist: Vec<Array3<f64>>,
    /// L_d x |V|
    pub leaf_word: Array2<f64>,
}

impl AtModel {
    /// Per-author topic distributions as kernel-ready profiles.
    pub fn author_profiles(&self) -> Vec<AuthorProfile> {
        self.author_topic
            .rows()
            .into_iter()
            .enumerate()
            .map(|(a, row)| AuthorProfile {
                author_id: a,
                probs: row.to_vec(),
                space: ProfileSpace::Topics { layer: 1 },
            })
            .collect()
    }
}

// Accumulates smoothed count-ratio estimates over retained samples.
struct EstimateAccumulator {
    root: Array2<f64>,
    levels: Vec<Array3<f64>>,
    leaf: Array2<f64>,
    samples: usize,
}

impl EstimateAccumulator {
    fn new(state: &GibbsState) -> Self {
        let sizes = state.layer_sizes();
        Self {
            root: Array2::zeros((state.n_units(), sizes[0])),
            levels: (1..sizes.len())
                .map(|i| Array3::zeros((state.n_units(), sizes[i - 1], sizes[i])))
                .collect(),
            leaf: Array2::zeros((sizes[sizes.len() - 1], state.vocab_size())),
            samples: 0,
        }
    }

    fn add(&mut self, state: &GibbsState, config: &TopicConfig) {
        let sizes = state.layer_sizes();
        let l1 = sizes[0] as f64;
        for u in 0..state.n_units() {
            let n = state.unit_totals()[u] as f64;
            for t in 0..sizes[0] {
                self.root[[u, t]] += (state.root_counts()[[u, t]] as f64 + config.alpha[0])
                    / (n + l1 * config.alpha[0]);
            }
        }
        for (i, acc) in self.levels.iter_mut().enumerate() {
            let level = i + 2;
            let (counts, totals) = state.level_counts(level);
            let li = sizes[i + 1] as f64;
            let a = config.alpha[i + 1];
            for u in 0..state.n_units() {
                for p in 0..sizes[i] {
                    let n = totals[[u, p]] as f64;
                    for t in 0..sizes[i + 1] {
                        acc[[u, p, t]] += (counts[[u, p, t]] as f64 + a) / (n + li * a);
                    }
                }
            }
        }
        let v = state.vocab_size() as f64;
        let leaf_size = sizes[sizes.len() - 1];
        for t in 0..leaf_size {
            let n = state.leaf_totals()[t] as f64;
            for w in 0..state.vocab_size() {
                self.leaf[[t, w]] += (state.leaf_word_counts()[[t, w]] as f64 + config.beta)
                    / (n + v * config.beta);
            }
        }
        self.samples += 1;
    }

    fn finalize(mut self) -> (Array2<f64>, Vec<Array3<f64>>, Array2<f64>) {
        let s = self.samples as f64;
        self.root.mapv_inplace(|x| x / s);
        for l in &mut self.levels {
            l.mapv_inplace(|x| x / s);
        }
        self.leaf.mapv_inplace(|x| x / s);
        (self.root, self.levels, self.leaf)
    }
}

/// Averaged (root, per-level conditional, leaf-word) estimate matrices.
type ChainEstimates = (Array2<f64>, Vec<Array3<f64>>, Array2<f64>);

fn run_chain(
    corpus: &Corpus,
    config: &TopicConfig,
    attribution: Attribution,
) -> Result<ChainEstimates, TopicError> {
    let mut sampler = GibbsSampler::new(corpus, config.clone(), attribution)?;
    let mut acc = EstimateAccumulator::new(sampler.state());
    for sweep in 0..config.iterations {
        sampler.sweep();
        if sweep >= config.burn_in && (sweep - config.burn_in).is_multiple_of(config.sample_lag) {
            acc.add(sampler.state(), config);
        }
    }
    Ok(acc.finalize())
}

/// Fit LDA by collapsed Gibbs sampling. `config.layer_sizes` must be `[T]`.
pub fn lda_fit(corpus: &Corpus, config: &TopicConfig) -> Result<LdaModel, TopicError> {
    require_single_layer(config, "lda_fit")?;
    let (doc_topic, _, topic_word) = run_chain(corpus, config, Attribution::Documents)?;
    Ok(LdaModel {
        doc_topic,
        topic_word,
    })
}

/// Fit the Author-Topic model. `config.layer_sizes` must be `[T]`.
pub fn at_fit(corpus: &Corpus, config: &TopicConfig) -> Result<AtModel, TopicError> {
    require_single_layer(config, "at_fit")?;
    let (author_topic, _, topic_word) = run_chain(corpus, config, Attribution::Authors)?;
    Ok(AtModel {
        author_topic,
        topic_word,
    })
}

/// Fit the Hierarchical Author-Topic model. Depth 1 is allowed and samples
/// exactly like [`at_fit`].
pub fn hat_fit(corpus: &Corpus, config: &TopicConfig) -> Result<HatModel, TopicError> {
    let (root_dist, cond_dist, leaf_word) = run_chain(corpus, config, Attribution::Authors)?;
    Ok(HatModel {
        layer_sizes: config.layer_sizes.clone(),
        root_dist,
        cond_dist,
        leaf_word,
    })
}

fn require_single_layer(config: &TopicConfig, op: &str) -> Result<(), TopicError> {
    if config.layer_sizes.len() != 1 {
        return Err(TopicError::InvalidConfig(format!(
            "{op} requires a single topic layer, got {}",
            config.layer_sizes.len()
        )));
    }
    Ok(())
}

/// Per-author pseudo-topic profiles from an LDA fit: the token-count-weighted
/// mean of the author's documents' topic rows, renormalized.
pub fn lda_author_aggregate(
    model: &LdaModel,
    corpus: &Corpus,
) -> Result<Vec<AuthorProfile>, TopicError> {
    let topics = model.doc_topic.ncols();
    let mut profiles = Vec::with_capacity(corpus.num_authors());
    for a in 0..corpus.num_authors() {
        let mut acc = vec![0.0f64; topics];
        let mut weight_total = 0usize;
        for (d, doc) in corpus.documents.iter().enumerate() {
            if !doc.author_ids.contains(&a) {
                continue;
            }
            let w = doc.total_tokens();
            if w == 0 {
                continue;
            }
            weight_total += w;
            for (t, acc_t) in acc.iter_mut().enumerate() {
                *acc_t += w as f64 * model.doc_topic[[d, t]];
            }
        }
        if weight_total == 0 {
            return Err(TopicError::AuthorWithoutTokens(corpus.authors[a].clone()));
        }
        let total: f64 = acc.iter().sum();
        profiles.push(AuthorProfile {
            author_id: a,
            probs: acc.into_iter().map(|x| x / total).collect(),
            space: ProfileSpace::Topics { layer: 1 },
        });
    }
    Ok(profiles)
}

/// Marginal topic distribution of each author at one layer (1-based) of a
/// HAT model, chaining conditionals over all ancestor paths.
pub fn hat_author_marginals(
    model: &HatModel,
    layer: usize,
) -> Result<Vec<AuthorProfile>, TopicError> {
    let depth = model.layer_sizes.len();
    if layer == 0 || layer > depth {
        return Err(TopicError::LayerOutOfRange { layer, depth });
    }
    let n_authors = model.root_dist.nrows();
    let mut profiles = Vec::with_capacity(n_authors);
    for a in 0..n_authors {
        let mut marginal: Vec<f64> = model.root_dist.row(a).to_vec();
        for level in 2..=layer {
            let cond = &model.cond_dist[level - 2];
            let child_size = model.layer_sizes[level - 1];
            let mut next = vec![0.0f64; child_size];
            for (p, &mass) in marginal.iter().enumerate() {
                for (t, next_t) in next.iter_mut().enumerate() {
                    *next_t += mass * cond[[a, p, t]];
                }
            }
            marginal = next;
        }
        profiles.push(AuthorProfile {
            author_id: a,
            probs: marginal,
            space: ProfileSpace::Topics { layer },
        });
    }
    Ok(profiles)
}

/// Index of the largest entry; ties break toward the lower index.
pub fn dominant_topic(profile: &AuthorProfile) -> usize {
    let mut best = 0;
    let mut best_val = f64::NEG_INFINITY;
    for (i, &p) in profile.probs.iter().enumerate() {
        if p > best_val {
            best_val = p;
            best = i;
        }
    }
    best
}

// --- Persistence --------------------------------------------------------------

/// A fitted model of any kind, for persistence and pipeline plumbing.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Lda(LdaModel),
    At(AtModel),
    Hat(HatModel),
}

impl Model {
    pub fn kind(&self) -> &'static str {
        match self {
            Model::Lda(_) => "lda",
            Model::At(_) => "at",
            Model::Hat(_) => "hat",
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    kind: String,
    config: TopicConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    doc_topic: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    author_topic: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    topic_word: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    root_dist: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cond_dist: Option<Vec<Vec<Vec<Vec<f64>>>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    leaf_word: Option<Vec<Vec<f64>>>,
}

fn mat_rows(m: &Array2<f64>) -> Vec<Vec<f64>> {
    m.rows().into_iter().map(|r| r.to_vec()).collect()
}

fn rows_mat(rows: &[Vec<f64>], what: &str) -> Result<Array2<f64>, String> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(format!("{what} rows have inconsistent lengths"));
    }
    Array2::from_shape_vec((nrows, ncols), rows.iter().flatten().copied().collect())
        .map_err(|e| format!("{what}: {e}"))
}

fn cube_rows(c: &Array3<f64>) -> Vec<Vec<Vec<f64>>> {
    let (a, p, t) = c.dim();
    (0..a)
        .map(|i| {
            (0..p)
                .map(|j| (0..t).map(|k| c[[i, j, k]]).collect())
                .collect()
        })
        .collect()
}

fn rows_cube(rows: &[Vec<Vec<f64>>], what: &str) -> Result<Array3<f64>, String> {
    let a = rows.len();
    let p = rows.first().map_or(0, Vec::len);
    let t = rows
        .first()
        .and_then(|r| r.first())
        .map_or(0, Vec::len);
    let mut cube = Array3::zeros((a, p, t));
    for (i, plane) in rows.iter().enumerate() {
        if plane.len() != p {
            return Err(format!("{what} planes have inconsistent lengths"));
        }
        for (j, row) in plane.iter().enumerate() {
            if row.len() != t {
                return Err(format!("{what} rows have inconsistent lengths"));
            }
            for (k, &x) in row.iter().enumerate() {
                cube[[i, j, k]] = x;
            }
        }
    }
    Ok(cube)
}

/// Write a model plus its config as JSON with matrices as nested arrays.
pub fn save_model(model: &Model, config: &TopicConfig, path: &Path) -> Result<(), TopicError> {
    let mut file = ModelFile {
        kind: model.kind().to_string(),
        config: config.clone(),
        doc_topic: None,
        author_topic: None,
        topic_word: None,
        root_dist: None,
        cond_dist: None,
        leaf_word: None,
    };
    match model {
        Model::Lda(m) => {
            file.doc_topic = Some(mat_rows(&m.doc_topic));
            file.topic_word = Some(mat_rows(&m.topic_word));
        }
        Model::At(m) => {
            file.author_topic = Some(mat_rows(&m.author_topic));
            file.topic_word = Some(mat_rows(&m.topic_word));
        }
        Model::Hat(m) => {
            file.root_dist = Some(mat_rows(&m.root_dist));
            file.cond_dist = Some(m.cond_dist.iter().map(cube_rows).collect());
            file.leaf_word = Some(mat_rows(&m.leaf_word));
        }
    }
    let json = serde_json::to_string(&file).expect("model serialization cannot fail");
    std::fs::write(path, json + "\n").map_err(|e| TopicError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

pub fn load_model(path: &Path) -> Result<(Model, TopicConfig), TopicError> {
    let invalid = |message: String| TopicError::InvalidModelFile {
        path: path.display().to_string(),
        message,
    };
    let data = std::fs::read_to_string(path).map_err(|e| TopicError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let file: ModelFile = serde_json::from_str(&data).map_err(|e| invalid(e.to_string()))?;
    let model = match file.kind.as_str() {
        "lda" => Model::Lda(LdaModel {
            doc_topic: rows_mat(
                file.doc_topic
                    .as_ref()
                    .ok_or_else(|| invalid("lda model missing doc_topic".into()))?,
                "doc_topic",
            )
            .map_err(&invalid)?,
            topic_word: rows_mat(
                file.topic_word
                    .as_ref()
                    .ok_or_else(|| invalid("lda model missing topic_word".into()))?,
                "topic_word",
            )
            .map_err(&invalid)?,
        }),
        "at" => Model::At(AtModel {
            author_topic: rows_mat(
                file.author_topic
                    .as_ref()
                    .ok_or_else(|| invalid("at model missing author_topic".into()))?,
                "author_topic",
            )
            .map_err(&invalid)?,
            topic_word: rows_mat(
                file.topic_word
                    .as_ref()
                    .ok_or_else(|| invalid("at model missing topic_word".into()))?,
                "topic_word",
            )
            .map_err(&invalid)?,
        }),
        "hat" => {
            let cond = file
                .cond_dist
                .as_ref()
                .ok_or_else(|| invalid("hat model missing cond_dist".into()))?;
            let model = HatModel {
                layer_sizes: file.config.layer_sizes.clone(),
                root_dist: rows_mat(
                    file.root_dist
                        .as_ref()
                        .ok_or_else(|| invalid("hat model missing root_dist".into()))?,
                    "root_dist",
                )
                .map_err(&invalid)?,
                cond_dist: cond
                    .iter()
                    .map(|c| rows_cube(c, "cond_dist").map_err(&invalid))
                    .collect::<Result<_, _>>()?,
                leaf_word: rows_mat(
                    file.leaf_word
                        .as_ref()
                        .ok_or_else(|| invalid("hat model missing leaf_word".into()))?,
                    "leaf_word",
                )
                .map_err(&invalid)?,
            };
            // Matrix shapes must agree with the config's layer sizes, or
            // marginalization would index out of bounds.
            let sizes = &model.layer_sizes;
            let n_authors = model.root_dist.nrows();
            if sizes.is_empty() || model.root_dist.ncols() != sizes[0] {
                return Err(invalid("root_dist width disagrees with layer_sizes".into()));
            }
            if model.cond_dist.len() + 1 != sizes.len() {
                return Err(invalid("cond_dist level count disagrees with layer_sizes".into()));
            }
            for (i, c) in model.cond_dist.iter().enumerate() {
                if c.dim() != (n_authors, sizes[i], sizes[i + 1]) {
                    return Err(invalid(format!(
                        "cond_dist level {} has shape {:?}, expected {:?}",
                        i + 2,
                        c.dim(),
                        (n_authors, sizes[i], sizes[i + 1])
                    )));
                }
            }
            if model.leaf_word.nrows() != sizes[sizes.len() - 1] {
                return Err(invalid("leaf_word height disagrees with layer_sizes".into()));
            }
            Model::Hat(model)
        }
        other => return Err(invalid(format!("unknown model kind {other:?}"))),
    };
    Ok((model, file.config))
}
