//! Visualization artifacts: pinned-position DOT graphs and a merged JSON
//! export, with node colors taken from each author's dominant topic.
//!
//! Everything here is plain serialization; byte-determinism for identical
//! inputs is part of the contract.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bow::AuthorProfile;
use crate::embedding::{Embedding, NeighborGraph};
use crate::topics::dominant_topic;

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("viz file {path} is invalid: {message}")]
    InvalidFile { path: String, message: String },
}

/// Twenty visually distinct hex colors (topic counts beyond the palette wrap
/// around by modulo).
pub fn default_palette() -> Vec<String> {
    [
        "#1f77b4", "#aec7e8", "#ff7f0e", "#ffbb78", "#2ca02c", "#98df8a", "#d62728", "#ff9896",
        "#9467bd", "#c5b0d5", "#8c564b", "#c49c94", "#e377c2", "#f7b6d2", "#7f7f7f", "#c7c7c7",
        "#bcbd22", "#dbdb8d", "#17becf", "#9edae5",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

/// Color index per profile: the dominant topic modulo the palette size.
pub fn assign_colors(profiles: &[AuthorProfile], palette_size: usize) -> Vec<usize> {
    assert!(palette_size >= 1, "palette must have at least one color");
    profiles
        .iter()
        .map(|p| dominant_topic(p) % palette_size)
        .collect()
}

/// Everything needed to draw the author network.
#[derive(Debug, Clone)]
pub struct VizSpec {
    pub embedding: Embedding,
    pub edges: Vec<(usize, usize)>,
    /// Color index per embedding label, each `< palette.len()`.
    pub colors: Vec<usize>,
    pub palette: Vec<String>,
    pub label_scale: f64,
}

impl VizSpec {
    pub fn new(
        embedding: Embedding,
        edges: Vec<(usize, usize)>,
        colors: Vec<usize>,
        palette: Vec<String>,
        label_scale: f64,
    ) -> Self {
        assert_eq!(
            colors.len(),
            embedding.labels.len(),
            "one color per author"
        );
        assert!(!palette.is_empty(), "palette must not be empty");
        let colors = colors.into_iter().map(|c| c % palette.len()).collect();
        Self {
            embedding,
            edges,
            colors,
            palette,
            label_scale,
        }
    }

    pub fn from_graph(
        embedding: Embedding,
        graph: &NeighborGraph,
        colors: Vec<usize>,
        palette: Vec<String>,
        label_scale: f64,
    ) -> Self {
        Self::new(embedding, graph.edge_list(), colors, palette, label_scale)
    }
}

/// Scale coordinate columns into `[0, 100]` for stable DOT layouts; a
/// degenerate axis maps to 50.
fn scaled_positions(embedding: &Embedding) -> Vec<(f64, f64)> {
    let n = embedding.coords.nrows();
    let get = |i: usize, c: usize| -> f64 {
        if c < embedding.coords.ncols() {
            embedding.coords[[i, c]]
        } else {
            0.0
        }
    };
    let mut positions = Vec::with_capacity(n);
    let scaled_axis = |c: usize| -> Vec<f64> {
        let lo = (0..n).map(|i| get(i, c)).fold(f64::INFINITY, f64::min);
        let hi = (0..n).map(|i| get(i, c)).fold(f64::NEG_INFINITY, f64::max);
        (0..n)
            .map(|i| {
                if hi > lo {
                    100.0 * (get(i, c) - lo) / (hi - lo)
                } else {
                    50.0
                }
            })
            .collect()
    };
    let xs = scaled_axis(0);
    let ys = scaled_axis(1);
    for i in 0..n {
        positions.push((xs[i], ys[i]));
    }
    positions
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Render the spec as a DOT graph with pinned node positions.
pub fn dot_string(spec: &VizSpec) -> String {
    let mut out = String::new();
    out.push_str("graph authors {\n");
    out.push_str("  layout=neato;\n");
    out.push_str("  node [shape=circle style=filled fontcolor=black];\n");
    let positions = scaled_positions(&spec.embedding);
    let fontsize = 10.0 * spec.label_scale;
    for (i, label) in spec.embedding.labels.iter().enumerate() {
        let (x, y) = positions[i];
        let color = &spec.palette[spec.colors[i]];
        writeln!(
            out,
            "  \"{}\" [pos=\"{:.4},{:.4}!\" fillcolor=\"{}\" fontsize={:.2} label=\"{}\"];",
            dot_escape(label),
            x,
            y,
            color,
            fontsize,
            dot_escape(label)
        )
        .expect("writing to string cannot fail");
    }
    for &(i, j) in &spec.edges {
        writeln!(
            out,
            "  \"{}\" -- \"{}\";",
            dot_escape(&spec.embedding.labels[i]),
            dot_escape(&spec.embedding.labels[j])
        )
        .expect("writing to string cannot fail");
    }
    out.push_str("}\n");
    out
}

/// Write the DOT artifact; bytes are deterministic for identical input.
pub fn emit_dot(spec: &VizSpec, path: &Path) -> Result<(), RenderError> {
    std::fs::write(path, dot_string(spec)).map_err(|e| RenderError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

/// JSON form of the viz: embedding export merged with colors, palette and
/// label scale. Round-trips losslessly (f64 exact).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VizExport {
    pub labels: Vec<String>,
    pub coords: Vec<Vec<f64>>,
    pub spectrum: Vec<f64>,
    pub fidelity: f64,
    pub edges: Vec<(usize, usize)>,
    pub colors: BTreeMap<String, usize>,
    pub palette: Vec<String>,
    pub label_scale: f64,
}

impl VizExport {
    pub fn new(spec: &VizSpec) -> Self {
        Self {
            labels: spec.embedding.labels.clone(),
            coords: spec
                .embedding
                .coords
                .rows()
                .into_iter()
                .map(|r| r.to_vec())
                .collect(),
            spectrum: spec.embedding.spectrum.clone(),
            fidelity: spec.embedding.fidelity,
            edges: spec.edges.clone(),
            colors: spec
                .embedding
                .labels
                .iter()
                .cloned()
                .zip(spec.colors.iter().copied())
                .collect(),
            palette: spec.palette.clone(),
            label_scale: spec.label_scale,
        }
    }
}

pub fn emit_json(spec: &VizSpec, path: &Path) -> Result<(), RenderError> {
    let export = VizExport::new(spec);
    let json = serde_json::to_string(&export).expect("viz serialization cannot fail");
    std::fs::write(path, json + "\n").map_err(|e| RenderError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

pub fn load_viz_json(path: &Path) -> Result<VizExport, RenderError> {
    let data = std::fs::read_to_string(path).map_err(|e| RenderError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    serde_json::from_str(&data).map_err(|e| RenderError::InvalidFile {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}
