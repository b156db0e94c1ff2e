//! Pipeline stages shared by the standalone subcommands and `pipeline`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use authormap::bow::{word_profiles, AuthorProfile};
use authormap::corpus::{load_corpus, Corpus};
use authormap::embedding::{
    knn_graph, mve, save_embedding_json, Embedding, MveOptions, NeighborGraph,
};
use authormap::kernels::{combine, gram, save_kernel_csv, save_kernel_json, KernelMatrix};
use authormap::render::{assign_colors, default_palette, emit_dot, emit_json, VizSpec};
use authormap::topics::{
    at_fit, hat_author_marginals, hat_fit, lda_author_aggregate, lda_fit, Model, TopicConfig,
};

use crate::config::{ModelKind, PipelineConfig};
use crate::error::CliError;

/// Fit the configured representation. `Bow` needs no training.
pub fn train_model(
    corpus: &Corpus,
    kind: ModelKind,
    config: &TopicConfig,
) -> Result<Option<Model>, CliError> {
    let model = match kind {
        ModelKind::Bow => None,
        ModelKind::LdaAgg => Some(Model::Lda(lda_fit(corpus, config)?)),
        ModelKind::At => Some(Model::At(at_fit(corpus, config)?)),
        ModelKind::Hat => Some(Model::Hat(hat_fit(corpus, config)?)),
    };
    Ok(model)
}

/// Author profiles that feed the kernel stage, one set per kernel, plus the
/// set used for node colors (the most specific layer).
pub fn profile_sets(
    corpus: &Corpus,
    model: Option<&Model>,
    kernel_layers: Option<&[usize]>,
) -> Result<(Vec<Vec<AuthorProfile>>, Vec<AuthorProfile>), CliError> {
    match model {
        None => {
            let profiles = word_profiles(corpus)?;
            Ok((vec![profiles.clone()], profiles))
        }
        Some(Model::Lda(m)) => {
            let profiles = lda_author_aggregate(m, corpus)?;
            Ok((vec![profiles.clone()], profiles))
        }
        Some(Model::At(m)) => {
            let profiles = m.author_profiles();
            Ok((vec![profiles.clone()], profiles))
        }
        Some(Model::Hat(m)) => {
            let depth = m.layer_sizes.len();
            let layers: Vec<usize> = match kernel_layers {
                Some(layers) => layers.to_vec(),
                None => (1..=depth).collect(),
            };
            let mut sets = Vec::with_capacity(layers.len());
            for &layer in &layers {
                sets.push(hat_author_marginals(m, layer)?);
            }
            let color_layer = layers.iter().copied().max().expect("layers non-empty");
            let colors = hat_author_marginals(m, color_layer)?;
            Ok((sets, colors))
        }
    }
}

/// Gram each profile set and combine when there is more than one.
pub fn build_kernel(
    profile_sets: &[Vec<AuthorProfile>],
    labels: &[String],
    section: &crate::config::KernelSection,
) -> Result<KernelMatrix, CliError> {
    let kernels: Vec<KernelMatrix> = profile_sets
        .iter()
        .map(|set| gram(set, labels))
        .collect::<Result<_, _>>()?;
    if kernels.len() == 1 {
        return Ok(kernels.into_iter().next().expect("one kernel"));
    }
    let mode = section.combine_mode(kernels.len())?;
    Ok(combine(&kernels, &mode)?)
}

pub fn embed_kernel(
    kernel: &KernelMatrix,
    k: usize,
    dim: usize,
    opts: &MveOptions,
    psd_project: bool,
) -> Result<(NeighborGraph, Embedding), CliError> {
    let repaired;
    let kernel = if psd_project {
        repaired = kernel.psd_project();
        &repaired
    } else {
        kernel
    };
    let graph = knn_graph(kernel, k)?;
    let embedding = mve(kernel, &graph, dim, opts)?;
    Ok((graph, embedding))
}

#[derive(Serialize)]
struct Manifest<'a> {
    config: &'a PipelineConfig,
    fidelity: f64,
    objective_trace: &'a [f64],
    max_edge_residual: Option<f64>,
    wall_time_ms: u128,
    artifacts: BTreeMap<&'static str, String>,
}

/// Run the whole pipeline and write every artifact plus the manifest into
/// `config.out_dir`. Returns the embedding fidelity.
pub fn run_pipeline(config: &PipelineConfig) -> Result<f64, CliError> {
    let started = Instant::now();
    std::fs::create_dir_all(&config.out_dir).map_err(|e| {
        CliError::data(format!(
            "cannot create output directory {}: {e}",
            config.out_dir.display()
        ))
    })?;
    let artifact = |name: &str| -> PathBuf { config.out_dir.join(name) };
    let mut artifacts: BTreeMap<&'static str, String> = BTreeMap::new();
    let mut record = |key: &'static str, path: &Path| {
        artifacts.insert(key, path.display().to_string());
    };

    let corpus = load_corpus(&config.corpus).map_err(|e| CliError::from(e).in_stage("corpus"))?;
    println!(
        "corpus: {} docs, {} authors, |V| = {}",
        corpus.documents.len(),
        corpus.num_authors(),
        corpus.vocab_size()
    );

    let topic_config = config.topics.to_topic_config();
    let model = train_model(&corpus, config.model, &topic_config)
        .map_err(|e| e.in_stage("train"))?;
    if let Some(model) = &model {
        let path = artifact("model.json");
        authormap::topics::save_model(model, &topic_config, &path)
            .map_err(|e| CliError::from(e).in_stage("train"))?;
        record("model", &path);
        println!("trained {} model", model.kind());
    }

    let (sets, color_profiles) =
        profile_sets(&corpus, model.as_ref(), config.kernel.layers.as_deref())
            .map_err(|e| e.in_stage("profiles"))?;
    let profiles_path = artifact("profiles.json");
    authormap::bow::save_profiles(&color_profiles, &corpus.authors, &profiles_path)
        .map_err(|e| CliError::from(e).in_stage("profiles"))?;
    record("profiles", &profiles_path);

    let kernel = build_kernel(&sets, &corpus.authors, &config.kernel)
        .map_err(|e| e.in_stage("kernel"))?;
    let kernel_json = artifact("kernel.json");
    let kernel_csv = artifact("kernel.csv");
    save_kernel_json(&kernel, &kernel_json).map_err(|e| CliError::from(e).in_stage("kernel"))?;
    save_kernel_csv(&kernel, &kernel_csv).map_err(|e| CliError::from(e).in_stage("kernel"))?;
    record("kernel_json", &kernel_json);
    record("kernel_csv", &kernel_csv);
    println!("kernel: {0} x {0} ({1} profile set(s))", kernel.n(), sets.len());

    let (graph, embedding) = embed_kernel(
        &kernel,
        config.embedding.k,
        config.embedding.dim,
        &config.embedding.mve_options(),
        config.embedding.psd_project,
    )
    .map_err(|e| e.in_stage("embed"))?;
    let embedding_path = artifact("embedding.json");
    save_embedding_json(&embedding, &graph, &embedding_path)
        .map_err(|e| CliError::from(e).in_stage("embed"))?;
    record("embedding", &embedding_path);
    println!(
        "embedding: fidelity {:.4}, {} edges, {} accepted steps",
        embedding.fidelity,
        graph.num_edges(),
        embedding.objective_trace.len().saturating_sub(1)
    );

    let palette = match config.render.palette_size {
        Some(size) => {
            let base = default_palette();
            (0..size).map(|i| base[i % base.len()].clone()).collect()
        }
        None => default_palette(),
    };
    let colors = assign_colors(&color_profiles, palette.len());
    let fidelity = embedding.fidelity;
    let objective_trace = embedding.objective_trace.clone();
    let max_edge_residual = embedding.max_edge_residual;
    let spec = VizSpec::from_graph(embedding, &graph, colors, palette, config.render.label_scale);
    let dot_path = artifact("viz.dot");
    let viz_json_path = artifact("viz.json");
    emit_dot(&spec, &dot_path).map_err(|e| CliError::from(e).in_stage("render"))?;
    emit_json(&spec, &viz_json_path).map_err(|e| CliError::from(e).in_stage("render"))?;
    record("viz_dot", &dot_path);
    record("viz_json", &viz_json_path);

    let manifest = Manifest {
        config,
        fidelity,
        objective_trace: &objective_trace,
        max_edge_residual,
        wall_time_ms: started.elapsed().as_millis(),
        artifacts,
    };
    let manifest_path = artifact("manifest.json");
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serialization");
    std::fs::write(&manifest_path, json + "\n")
        .map_err(|e| CliError::data(format!("cannot write manifest: {e}")))?;
    println!("wrote artifacts to {}", config.out_dir.display());
    Ok(fidelity)
}
