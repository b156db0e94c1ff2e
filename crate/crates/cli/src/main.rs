//! `authormap`: author-similarity layouts from document corpora.
//!
//! Subcommands mirror the pipeline stages (ingest, train, kernel, embed,
//! viz) so each intermediate artifact can be produced and inspected on its
//! own; `pipeline` runs everything from one JSON config.
//!
//! Exit codes: 0 success, 1 usage or config error, 2 data error,
//! 3 numerical failure.

mod config;
mod error;
mod pipeline;

use std::collections::BTreeSet;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use authormap::bow::load_profiles;
use authormap::corpus::{build_corpus, load_corpus, load_raw_jsonl, save_corpus, TokenizeConfig};
use authormap::embedding::load_embedding_json;
use authormap::render::{assign_colors, default_palette, emit_dot, emit_json, VizSpec};
use authormap::topics::{load_model, save_model, TopicConfig};

use crate::config::{load_pipeline_config, KernelSection, ModelKind};
use crate::error::CliError;

#[derive(Parser)]
#[command(
    name = "authormap",
    version,
    about = "Author-similarity visual layouts from document corpora"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum TrainableModel {
    Lda,
    At,
    Hat,
}

#[derive(Subcommand)]
enum Command {
    /// Build a persisted corpus from JSONL documents.
    Ingest {
        /// Input JSONL: {"id", "authors", "text"} or {"id", "authors", "counts"}.
        #[arg(long = "in")]
        input: PathBuf,
        /// Output corpus JSON.
        #[arg(long)]
        out: PathBuf,
        /// Minimum token length kept by the tokenizer.
        #[arg(long, default_value_t = 2)]
        min_len: usize,
        /// Optional stopword file, one lowercase word per line.
        #[arg(long)]
        stopwords: Option<PathBuf>,
    },
    /// Fit a topic model on a persisted corpus.
    Train {
        /// Input corpus JSON.
        #[arg(long = "in")]
        input: PathBuf,
        /// Output model JSON.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum)]
        model: TrainableModel,
        /// Topic count for single-layer models (lda, at).
        #[arg(long, conflicts_with = "layers")]
        topics: Option<usize>,
        /// Comma-separated layer sizes for hat, e.g. "2,20".
        #[arg(long)]
        layers: Option<String>,
        /// Comma-separated Dirichlet priors, one per layer (default 50/L_i).
        #[arg(long)]
        alpha: Option<String>,
        #[arg(long, default_value_t = 0.01)]
        beta: f64,
        #[arg(long, default_value_t = 500)]
        iters: usize,
        #[arg(long, default_value_t = 200)]
        burnin: usize,
        #[arg(long, default_value_t = 10)]
        lag: usize,
        #[arg(long)]
        seed: u64,
    },
    /// Build a Bhattacharyya kernel from a corpus (bag-of-words) or a model.
    Kernel {
        /// Input corpus JSON.
        #[arg(long = "in")]
        input: PathBuf,
        /// Trained model JSON; omit for the aggregated bag-of-words kernel.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Output kernel JSON.
        #[arg(long)]
        out: PathBuf,
        /// Also write the kernel as CSV with label headers.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Also write the author profiles feeding the kernel (used by viz).
        #[arg(long)]
        profiles_out: Option<PathBuf>,
        /// HAT layers (1-based, comma-separated) to turn into kernels;
        /// default: all layers.
        #[arg(long)]
        layers: Option<String>,
        /// Combination for multi-layer kernels: weighted-sum or product.
        #[arg(long, default_value = "weighted-sum")]
        kernel_mode: String,
        /// Comma-separated weights for weighted-sum (default uniform).
        #[arg(long)]
        kernel_weights: Option<String>,
    },
    /// Embed a kernel into low-dimensional coordinates with MVE.
    Embed {
        /// Input kernel JSON.
        #[arg(long = "in")]
        input: PathBuf,
        /// Output embedding JSON.
        #[arg(long)]
        out: PathBuf,
        /// Neighbors per node in the distance-preserving graph.
        #[arg(long, default_value_t = 4)]
        k: usize,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 0.1)]
        step: f64,
        #[arg(long, default_value_t = 200)]
        max_iters: usize,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, default_value_t = 10)]
        passes: usize,
        /// Repair a slightly non-PSD kernel by clipping negative eigenvalues.
        #[arg(long, default_value_t = false)]
        psd_project: bool,
    },
    /// Render an embedding as pinned-position DOT and merged JSON.
    Viz {
        /// Input embedding JSON.
        #[arg(long = "in")]
        input: PathBuf,
        /// Author profiles JSON for dominant-topic colors.
        #[arg(long)]
        profiles: PathBuf,
        /// Output stem; writes <stem>.dot and <stem>.json.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        palette_size: Option<usize>,
        #[arg(long, default_value_t = 1.0)]
        label_scale: f64,
    },
    /// Run the full pipeline from a JSON config file.
    Pipeline {
        #[arg(long)]
        config: PathBuf,
    },
}

fn parse_usize_list(s: &str, what: &str) -> Result<Vec<usize>, CliError> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .map_err(|_| CliError::usage(format!("invalid {what} entry {p:?}")))
        })
        .collect()
}

fn parse_f64_list(s: &str, what: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| CliError::usage(format!("invalid {what} entry {p:?}")))
        })
        .collect()
}

fn cmd_ingest(
    input: PathBuf,
    out: PathBuf,
    min_len: usize,
    stopwords: Option<PathBuf>,
) -> Result<(), CliError> {
    let mut config = TokenizeConfig {
        min_len,
        ..Default::default()
    };
    if let Some(path) = stopwords {
        let data = std::fs::read_to_string(&path).map_err(|e| {
            CliError::data(format!("cannot read stopwords {}: {e}", path.display()))
        })?;
        config.stopwords = data
            .lines()
            .map(|l| l.trim().to_lowercase())
            .filter(|l| !l.is_empty())
            .collect::<BTreeSet<_>>();
    }
    let raw = load_raw_jsonl(&input)?;
    let corpus = build_corpus(&raw, &config)?;
    save_corpus(&corpus, &out)?;
    println!(
        "|V| = {}, docs = {}, authors = {}",
        corpus.vocab_size(),
        corpus.documents.len(),
        corpus.num_authors()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_train(
    input: PathBuf,
    out: PathBuf,
    model: TrainableModel,
    topics: Option<usize>,
    layers: Option<String>,
    alpha: Option<String>,
    beta: f64,
    iters: usize,
    burnin: usize,
    lag: usize,
    seed: u64,
) -> Result<(), CliError> {
    let layer_sizes = match (topics, layers) {
        (Some(t), None) => vec![t],
        (None, Some(s)) => parse_usize_list(&s, "--layers")?,
        (None, None) => match model {
            TrainableModel::Hat => vec![2, 20],
            _ => vec![20],
        },
        (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
    };
    let mut config = TopicConfig::hierarchical(layer_sizes, seed).with_schedule(iters, burnin, lag);
    config.beta = beta;
    if let Some(s) = alpha {
        config.alpha = parse_f64_list(&s, "--alpha")?;
    }

    let corpus = load_corpus(&input)?;
    let kind = match model {
        TrainableModel::Lda => ModelKind::LdaAgg,
        TrainableModel::At => ModelKind::At,
        TrainableModel::Hat => ModelKind::Hat,
    };
    let fitted = pipeline::train_model(&corpus, kind, &config)?
        .expect("trainable models always produce a model");
    save_model(&fitted, &config, &out)?;
    println!("trained {} model -> {}", fitted.kind(), out.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_kernel(
    input: PathBuf,
    model: Option<PathBuf>,
    out: PathBuf,
    csv: Option<PathBuf>,
    profiles_out: Option<PathBuf>,
    layers: Option<String>,
    kernel_mode: String,
    kernel_weights: Option<String>,
) -> Result<(), CliError> {
    let corpus = load_corpus(&input)?;
    let fitted = match model {
        Some(path) => Some(load_model(&path)?.0),
        None => None,
    };
    let selected_layers = layers
        .map(|s| parse_usize_list(&s, "--layers"))
        .transpose()?;
    let section = KernelSection {
        layers: selected_layers.clone(),
        mode: kernel_mode,
        weights: kernel_weights
            .map(|s| parse_f64_list(&s, "--kernel-weights"))
            .transpose()?,
    };
    let (sets, color_profiles) =
        pipeline::profile_sets(&corpus, fitted.as_ref(), selected_layers.as_deref())?;
    let kernel = pipeline::build_kernel(&sets, &corpus.authors, &section)?;
    authormap::kernels::save_kernel_json(&kernel, &out)?;
    if let Some(path) = csv {
        authormap::kernels::save_kernel_csv(&kernel, &path)?;
    }
    if let Some(path) = profiles_out {
        authormap::bow::save_profiles(&color_profiles, &corpus.authors, &path)?;
    }
    println!("kernel: {0} x {0} -> {1}", kernel.n(), out.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_embed(
    input: PathBuf,
    out: PathBuf,
    k: usize,
    dim: usize,
    step: f64,
    max_iters: usize,
    tol: f64,
    passes: usize,
    psd_project: bool,
) -> Result<(), CliError> {
    let kernel = authormap::kernels::load_kernel_json(&input)?;
    let opts = authormap::embedding::MveOptions {
        step,
        max_iters,
        tol,
        projection_passes: passes,
    };
    let (graph, embedding) = pipeline::embed_kernel(&kernel, k, dim, &opts, psd_project)?;
    authormap::embedding::save_embedding_json(&embedding, &graph, &out)?;
    println!(
        "embedding: fidelity {:.4}, {} edges -> {}",
        embedding.fidelity,
        graph.num_edges(),
        out.display()
    );
    Ok(())
}

fn cmd_viz(
    input: PathBuf,
    profiles: PathBuf,
    out: PathBuf,
    palette_size: Option<usize>,
    label_scale: f64,
) -> Result<(), CliError> {
    let export = load_embedding_json(&input)?;
    let named_profiles = load_profiles(&profiles)?;
    let (embedding, edges) = export.into_embedding();

    // Colors in embedding-label order.
    let ordered: Vec<_> = embedding
        .labels
        .iter()
        .map(|label| {
            named_profiles
                .iter()
                .find(|(name, _)| name == label)
                .map(|(_, p)| p.clone())
                .ok_or_else(|| CliError::data(format!("no profile for author {label:?}")))
        })
        .collect::<Result<_, _>>()?;
    let palette = match palette_size {
        Some(size) => {
            let base = default_palette();
            (0..size).map(|i| base[i % base.len()].clone()).collect()
        }
        None => default_palette(),
    };
    let colors = assign_colors(&ordered, palette.len());
    let spec = VizSpec::new(embedding, edges, colors, palette, label_scale);

    let dot_path = out.with_extension("dot");
    let json_path = out.with_extension("json");
    emit_dot(&spec, &dot_path)?;
    emit_json(&spec, &json_path)?;
    println!("wrote {} and {}", dot_path.display(), json_path.display());
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Ingest {
            input,
            out,
            min_len,
            stopwords,
        } => cmd_ingest(input, out, min_len, stopwords),
        Command::Train {
            input,
            out,
            model,
            topics,
            layers,
            alpha,
            beta,
            iters,
            burnin,
            lag,
            seed,
        } => cmd_train(
            input, out, model, topics, layers, alpha, beta, iters, burnin, lag, seed,
        ),
        Command::Kernel {
            input,
            model,
            out,
            csv,
            profiles_out,
            layers,
            kernel_mode,
            kernel_weights,
        } => cmd_kernel(
            input,
            model,
            out,
            csv,
            profiles_out,
            layers,
            kernel_mode,
            kernel_weights,
        ),
        Command::Embed {
            input,
            out,
            k,
            dim,
            step,
            max_iters,
            tol,
            passes,
            psd_project,
        } => cmd_embed(input, out, k, dim, step, max_iters, tol, passes, psd_project),
        Command::Viz {
            input,
            profiles,
            out,
            palette_size,
            label_scale,
        } => cmd_viz(input, profiles, out, palette_size, label_scale),
        Command::Pipeline { config } => {
            let config = load_pipeline_config(&config)?;
            let fidelity = pipeline::run_pipeline(&config)?;
            println!("pipeline complete, fidelity {fidelity:.4}");
            Ok(())
        }
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match run(cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.class.code());
        }
    }
}
