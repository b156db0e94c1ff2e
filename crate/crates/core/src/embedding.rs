//! Low-dimensional author coordinates from a kernel: k-NN graph extraction,
//! kernel PCA as the baseline factorization, and Minimum Volume Embedding.
//!
//! MVE maximizes the eigengap objective `sum_{i<=d} l_i - sum_{i>d} l_i` over
//! kernels that stay centered, PSD and faithful to the neighbor graph's
//! squared distances. A full SDP solver is overkill at this scale; the loop
//! here ascends along the analytic gradient of the objective (a projector
//! difference built from the current eigenbasis) with backtracking halving,
//! then restores the constraint set by alternating PSD clipping, edge-distance
//! corrections and re-centering. Each accepted step must not decrease either
//! the objective or the spectrum fidelity, so both traces are monotone by
//! construction and the final embedding is never worse than its kernel-PCA
//! start.

use std::collections::BTreeMap;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kernels::{self, KernelMatrix};
use crate::linalg::{self, SymEigen};

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("neighbor count k={k} out of range for n={n} (need 1 <= k < n)")]
    InvalidNeighborCount { k: usize, n: usize },

    #[error("embedding dimension d={d} out of range for n={n}")]
    InvalidDim { d: usize, n: usize },

    #[error("neighbor graph has {graph_n} nodes but kernel has {kernel_n}")]
    GraphMismatch { graph_n: usize, kernel_n: usize },

    #[error("kernel is not PSD: min eigenvalue {min_eig:e} < -{tol:e}")]
    NotPsd { min_eig: f64, tol: f64 },

    #[error("spectrum is all zero; nothing to embed")]
    ZeroSpectrum,

    #[error("objective became non-finite at iteration {iteration}")]
    Diverged { iteration: usize },

    #[error("embedding file {path} is invalid: {message}")]
    InvalidFile { path: String, message: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Symmetrized k-nearest-neighbor graph with the squared distances each edge
/// must preserve, as induced by the source kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborGraph {
    pub n: usize,
    pub k: usize,
    /// `(i, j)` with `i < j` -> target squared distance.
    edges: BTreeMap<(usize, usize), f64>,
}

impl NeighborGraph {
    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (&(usize, usize), &f64)> {
        self.edges.iter()
    }

    pub fn edge_list(&self) -> Vec<(usize, usize)> {
        self.edges.keys().copied().collect()
    }

    pub fn target_sq_dist(&self, i: usize, j: usize) -> Option<f64> {
        self.edges.get(&ordered(i, j)).copied()
    }

    pub fn degree(&self, node: usize) -> usize {
        self.edges
            .keys()
            .filter(|(i, j)| *i == node || *j == node)
            .count()
    }
}

fn ordered(i: usize, j: usize) -> (usize, usize) {
    if i < j {
        (i, j)
    } else {
        (j, i)
    }
}

/// Squared feature-space distance induced by a kernel:
/// `K_ii + K_jj - 2 K_ij`, clipped at zero.
pub fn induced_sq_dist(values: &Array2<f64>, i: usize, j: usize) -> f64 {
    (values[[i, i]] + values[[j, j]] - 2.0 * values[[i, j]]).max(0.0)
}

/// Connect every node to its `k` nearest neighbors by induced distance
/// (ties break toward the lower index), then symmetrize by union.
pub fn knn_graph(kernel: &KernelMatrix, k: usize) -> Result<NeighborGraph, EmbedError> {
    let n = kernel.n();
    if k == 0 || k >= n {
        return Err(EmbedError::InvalidNeighborCount { k, n });
    }
    let mut edges = BTreeMap::new();
    for i in 0..n {
        let mut candidates: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| (induced_sq_dist(&kernel.values, i, j), j))
            .collect();
        candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for &(d, j) in candidates.iter().take(k) {
            edges.insert(ordered(i, j), d);
        }
    }
    Ok(NeighborGraph { n, k, edges })
}

/// Low-dimensional coordinates plus the eigenspectrum that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub labels: Vec<String>,
    /// n x d.
    pub coords: Array2<f64>,
    /// Eigenvalues of the final kernel, descending.
    pub spectrum: Vec<f64>,
    /// Top-d share of total absolute eigenvalue mass, in `[0, 1]`.
    pub fidelity: f64,
    /// Eigengap objective after each accepted step (empty for kernel PCA).
    pub objective_trace: Vec<f64>,
    /// Largest violation of an edge's target squared distance, when a graph
    /// constrained the embedding.
    pub max_edge_residual: Option<f64>,
}

/// Share of eigenvalue mass captured by the top `d` eigenvalues:
/// `sum_{i<=d} max(l_i, 0) / sum_i |l_i|`. The spectrum must be sorted
/// descending; an all-zero spectrum is an error.
pub fn fidelity(spectrum: &[f64], d: usize) -> Result<f64, EmbedError> {
    assert!(
        spectrum.windows(2).all(|w| w[0] >= w[1]),
        "spectrum must be sorted descending"
    );
    let denom: f64 = spectrum.iter().map(|l| l.abs()).sum();
    if denom == 0.0 {
        return Err(EmbedError::ZeroSpectrum);
    }
    let num: f64 = spectrum.iter().take(d).map(|l| l.max(0.0)).sum();
    Ok(num / denom)
}

/// Coordinates from the top-`d` eigenpairs of the centered kernel, scaled by
/// the square root of each (non-negative) eigenvalue.
pub fn kernel_pca(kernel: &KernelMatrix, d: usize) -> Result<Embedding, EmbedError> {
    let n = kernel.n();
    if d == 0 || d > n {
        return Err(EmbedError::InvalidDim { d, n });
    }
    let centered = kernels::center(kernel);
    let eig = linalg::sym_eigen(&centered.values);
    let fid = fidelity(&eig.values, d)?;
    Ok(Embedding {
        labels: kernel.labels.clone(),
        coords: coords_from_eigen(&eig, d),
        spectrum: eig.values,
        fidelity: fid,
        objective_trace: Vec::new(),
        max_edge_residual: None,
    })
}

fn coords_from_eigen(eig: &SymEigen, d: usize) -> Array2<f64> {
    let n = eig.vectors.nrows();
    let mut coords = Array2::<f64>::zeros((n, d));
    for c in 0..d.min(eig.values.len()) {
        let scale = eig.values[c].max(0.0).sqrt();
        for i in 0..n {
            coords[[i, c]] = eig.vectors[[i, c]] * scale;
        }
    }
    coords
}

/// Minimum Volume Embedding search parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MveOptions {
    /// Initial ascent step size; halved on rejection.
    pub step: f64,
    pub max_iters: usize,
    /// Termination threshold on objective improvement, and the edge-residual
    /// budget the constraint projection must meet.
    pub tol: f64,
    /// Alternating projection passes (PSD clip, edge corrections, center)
    /// applied to each candidate kernel.
    pub projection_passes: usize,
}

impl Default for MveOptions {
    fn default() -> Self {
        Self {
            step: 0.1,
            max_iters: 200,
            tol: 1e-6,
            projection_passes: 10,
        }
    }
}

/// Minimum Volume Embedding: ascend the eigengap objective over kernels that
/// stay centered, PSD and true to the graph's squared edge distances, then
/// factor the winner into `d` coordinates.
pub fn mve(
    kernel: &KernelMatrix,
    graph: &NeighborGraph,
    d: usize,
    opts: &MveOptions,
) -> Result<Embedding, EmbedError> {
    let n = kernel.n();
    if d == 0 || d > n {
        return Err(EmbedError::InvalidDim { d, n });
    }
    if graph.n != n {
        return Err(EmbedError::GraphMismatch {
            graph_n: graph.n,
            kernel_n: n,
        });
    }

    // Start from the centered kernel (centering preserves induced distances).
    let mut k_mat = kernels::center(kernel).values;
    let mut eig = linalg::sym_eigen(&k_mat);
    let max_abs = eig.values.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
    let min_eig = eig.values.last().copied().unwrap_or(0.0);
    let psd_tol = kernels::PSD_TOLERANCE * max_abs.max(1e-300);
    if min_eig < -psd_tol {
        return Err(EmbedError::NotPsd {
            min_eig,
            tol: psd_tol,
        });
    }
    if eig.values.iter().any(|l| *l < 0.0) {
        clip_negative(&mut eig);
        k_mat = eig.reconstruct();
        center_in_place(&mut k_mat);
        eig = linalg::sym_eigen(&k_mat);
    }

    let mut objective = eigengap(&eig.values, d);
    let mut fid = fidelity(&eig.values, d)?;
    let mut trace = vec![objective];
    // Carried across iterations so backtracking work is not repeated once the
    // admissible step scale is known; grown again after clean acceptances.
    let mut step = opts.step;

    for iter in 0..opts.max_iters {
        if !objective.is_finite() {
            return Err(EmbedError::Diverged { iteration: iter });
        }
        // Ascent direction 2 P_d - I from the current eigenbasis.
        let top = eig.vectors.slice(ndarray::s![.., 0..d]).to_owned();
        let mut direction = top.dot(&top.t()) * 2.0;
        for i in 0..n {
            direction[[i, i]] -= 1.0;
        }

        let mut accepted = None;
        let mut halvings = 0;
        while step > 1e-12 {
            let mut cand = &k_mat + &(&direction * step);
            let cand_eig = project_constraints(&mut cand, graph, opts);
            let cand_obj = eigengap(&cand_eig.values, d);
            let cand_fid = fidelity(&cand_eig.values, d).unwrap_or(0.0);
            if !cand_obj.is_finite() {
                return Err(EmbedError::Diverged { iteration: iter });
            }
            if cand_obj >= objective - 1e-12 && cand_fid >= fid - 1e-12 {
                accepted = Some((cand, cand_eig, cand_obj, cand_fid));
                break;
            }
            step *= 0.5;
            halvings += 1;
        }

        let Some((cand, cand_eig, cand_obj, cand_fid)) = accepted else {
            break; // no admissible step left: converged
        };
        if halvings == 0 {
            step = (step * 2.0).min(opts.step);
        }
        let improvement = cand_obj - objective;
        k_mat = cand;
        eig = cand_eig;
        objective = cand_obj;
        fid = cand_fid;
        trace.push(objective);
        if improvement < opts.tol {
            break;
        }
    }

    let residual = max_edge_residual(&k_mat, graph);
    Ok(Embedding {
        labels: kernel.labels.clone(),
        coords: coords_from_eigen(&eig, d),
        fidelity: fidelity(&eig.values, d)?,
        spectrum: eig.values,
        objective_trace: trace,
        max_edge_residual: Some(residual),
    })
}

fn eigengap(spectrum: &[f64], d: usize) -> f64 {
    let top: f64 = spectrum.iter().take(d).sum();
    let rest: f64 = spectrum.iter().skip(d).sum();
    top - rest
}

fn clip_negative(eig: &mut SymEigen) {
    for l in &mut eig.values {
        *l = l.max(0.0);
    }
}

fn center_in_place(k: &mut Array2<f64>) {
    let (row_means, col_means, grand) = linalg::row_col_grand_means(k);
    let n = k.nrows();
    for i in 0..n {
        for j in 0..n {
            k[[i, j]] += grand - row_means[i] - col_means[j];
        }
    }
    linalg::symmetrize(k);
}

/// Orthogonal projection onto one edge constraint `<K, E_ij> = target` with
/// `E_ij = (e_i - e_j)(e_i - e_j)^T` (Frobenius norm squared 4).
fn correct_edge(k: &mut Array2<f64>, i: usize, j: usize, target: f64) {
    let current = k[[i, i]] + k[[j, j]] - 2.0 * k[[i, j]];
    let r = (current - target) / 4.0;
    k[[i, i]] -= r;
    k[[j, j]] -= r;
    k[[i, j]] += r;
    k[[j, i]] += r;
}

fn max_edge_residual(k: &Array2<f64>, graph: &NeighborGraph) -> f64 {
    graph
        .edges()
        .map(|(&(i, j), &target)| (k[[i, i]] + k[[j, j]] - 2.0 * k[[i, j]] - target).abs())
        .fold(0.0f64, f64::max)
}

/// Alternate PSD clipping, cyclic edge corrections and re-centering, then
/// polish edges (distance-preserving ops only) until the residual meets
/// `opts.tol`. Returns the eigendecomposition of the projected kernel.
fn project_constraints(
    k: &mut Array2<f64>,
    graph: &NeighborGraph,
    opts: &MveOptions,
) -> SymEigen {
    for _ in 0..opts.projection_passes.max(1) {
        let mut eig = linalg::sym_eigen(k);
        if eig.values.iter().any(|l| *l < 0.0) {
            clip_negative(&mut eig);
            *k = eig.reconstruct();
        }
        for (&(i, j), &target) in graph.edges() {
            correct_edge(k, i, j, target);
        }
        center_in_place(k);
    }
    // Edge corrections and centering commute with each other's constraint,
    // so a cheap polish loop drives the residual below tol without touching
    // the spectrum much.
    for _ in 0..50 {
        if max_edge_residual(k, graph) <= opts.tol {
            break;
        }
        for (&(i, j), &target) in graph.edges() {
            correct_edge(k, i, j, target);
        }
        center_in_place(k);
    }
    linalg::sym_eigen(k)
}

// --- Persistence ---------------------------------------------------------------

/// On-disk embedding artifact:
/// `{"labels", "coords", "spectrum", "fidelity", "edges"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingExport {
    pub labels: Vec<String>,
    pub coords: Vec<Vec<f64>>,
    pub spectrum: Vec<f64>,
    pub fidelity: f64,
    pub edges: Vec<(usize, usize)>,
}

impl EmbeddingExport {
    pub fn new(embedding: &Embedding, graph: &NeighborGraph) -> Self {
        Self {
            labels: embedding.labels.clone(),
            coords: embedding
                .coords
                .rows()
                .into_iter()
                .map(|r| r.to_vec())
                .collect(),
            spectrum: embedding.spectrum.clone(),
            fidelity: embedding.fidelity,
            edges: graph.edge_list(),
        }
    }

    /// Rebuild an [`Embedding`] (plus its edge list) from the persisted form.
    /// The objective trace and residual are not part of the export.
    pub fn into_embedding(self) -> (Embedding, Vec<(usize, usize)>) {
        let n = self.coords.len();
        let d = self.coords.first().map_or(0, Vec::len);
        let mut coords = Array2::<f64>::zeros((n, d));
        for (i, row) in self.coords.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                coords[[i, j]] = x;
            }
        }
        (
            Embedding {
                labels: self.labels,
                coords,
                spectrum: self.spectrum,
                fidelity: self.fidelity,
                objective_trace: Vec::new(),
                max_edge_residual: None,
            },
            self.edges,
        )
    }
}

pub fn save_embedding_json(
    embedding: &Embedding,
    graph: &NeighborGraph,
    path: &Path,
) -> Result<(), EmbedError> {
    let export = EmbeddingExport::new(embedding, graph);
    let json = serde_json::to_string(&export).expect("embedding serialization cannot fail");
    std::fs::write(path, json + "\n").map_err(|e| EmbedError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

pub fn load_embedding_json(path: &Path) -> Result<EmbeddingExport, EmbedError> {
    let data = std::fs::read_to_string(path).map_err(|e| EmbedError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let export: EmbeddingExport =
        serde_json::from_str(&data).map_err(|e| EmbedError::InvalidFile {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
    let n = export.labels.len();
    if export.coords.len() != n {
        return Err(EmbedError::InvalidFile {
            path: path.display().to_string(),
            message: format!("{} labels but {} coordinate rows", n, export.coords.len()),
        });
    }
    if let Some(&(i, j)) = export.edges.iter().find(|&&(i, j)| i >= n || j >= n) {
        return Err(EmbedError::InvalidFile {
            path: path.display().to_string(),
            message: format!("edge ({i}, {j}) out of range for {n} nodes"),
        });
    }
    Ok(export)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kernel_from(values: Array2<f64>) -> KernelMatrix {
        let n = values.nrows();
        KernelMatrix {
            labels: (0..n).map(|i| format!("a{i}")).collect(),
            values,
        }
    }

    /// Gram matrix of explicit points (rows), optionally centered first.
    fn gram_of_points(points: &Array2<f64>, center_points: bool) -> KernelMatrix {
        let mut pts = points.clone();
        if center_points {
            let means = pts.mean_axis(ndarray::Axis(0)).unwrap();
            for mut row in pts.rows_mut() {
                row -= &means;
            }
        }
        kernel_from(pts.dot(&pts.t()))
    }

    /// Deterministic simplex profiles for stress tests.
    fn pseudo_random_kernel(n: usize, dim: usize, salt: usize) -> KernelMatrix {
        use crate::bow::{AuthorProfile, ProfileSpace};
        let profiles: Vec<AuthorProfile> = (0..n)
            .map(|i| {
                let mut v: Vec<f64> = (0..dim)
                    .map(|j| (((i * 131 + j * 37 + salt * 17 + 11) % 101) + 1) as f64)
                    .collect();
                let t: f64 = v.iter().sum();
                v.iter_mut().for_each(|x| *x /= t);
                AuthorProfile {
                    author_id: i,
                    probs: v,
                    space: ProfileSpace::Words,
                }
            })
            .collect();
        let labels: Vec<String> = (0..n).map(|i| format!("a{i}")).collect();
        crate::kernels::gram(&profiles, &labels).unwrap()
    }

    #[test]
    fn knn_identity_kernel_ties_break_low() {
        let k = kernel_from(Array2::eye(4));
        let g = knn_graph(&k, 1).unwrap();
        // All pairs equidistant: node 0 -> 1, others -> 0.
        assert!(g.target_sq_dist(0, 1).is_some());
        assert!(g.target_sq_dist(0, 2).is_some());
        assert!(g.target_sq_dist(0, 3).is_some());
        assert_eq!(g.num_edges(), 3);
    }

    #[test]
    fn knn_collinear_points() {
        // Points at positions 0, 1, 3 on a line; linear kernel K = x x^T.
        let x = ndarray::array![[0.0], [1.0], [3.0]];
        let k = gram_of_points(&x, false);
        let g = knn_graph(&k, 1).unwrap();
        // Middle point's nearest neighbor is the point at 0 (distance 1 vs 4).
        assert!(g.target_sq_dist(1, 0).is_some());
        let d = g.target_sq_dist(0, 1).unwrap();
        assert!((d - 1.0).abs() < 1e-12);
    }

    #[test]
    fn knn_degree_at_least_k() {
        let k = pseudo_random_kernel(9, 6, 1);
        for kk in 1..4 {
            let g = knn_graph(&k, kk).unwrap();
            for i in 0..9 {
                assert!(g.degree(i) >= kk, "node {i} degree {} < {kk}", g.degree(i));
            }
        }
    }

    #[test]
    fn knn_rejects_bad_k() {
        let k = kernel_from(Array2::eye(3));
        assert!(matches!(
            knn_graph(&k, 0),
            Err(EmbedError::InvalidNeighborCount { .. })
        ));
        assert!(matches!(
            knn_graph(&k, 3),
            Err(EmbedError::InvalidNeighborCount { .. })
        ));
    }

    #[test]
    fn fidelity_direct_values() {
        assert!((fidelity(&[5.0, 3.0, 1.0, 1.0], 2).unwrap() - 0.8).abs() < 1e-15);
        assert_eq!(fidelity(&[5.0, 3.0, 0.0, 0.0], 2).unwrap(), 1.0);
        assert_eq!(fidelity(&[2.0, 1.0, 0.5], 3).unwrap(), 1.0);
    }

    #[test]
    fn fidelity_rejects_zero_spectrum() {
        assert!(matches!(
            fidelity(&[0.0, 0.0], 1),
            Err(EmbedError::ZeroSpectrum)
        ));
    }

    #[test]
    fn fidelity_is_scale_invariant() {
        let spec = [4.0, 2.0, 1.0, -0.5];
        let scaled: Vec<f64> = spec.iter().map(|x| x * 3.75).collect();
        let a = fidelity(&spec, 2).unwrap();
        let b = fidelity(&scaled, 2).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn kernel_pca_reconstructs_rank_2_kernel() {
        // 6 centered points in the plane -> rank-2 centered kernel.
        let pts = ndarray::array![
            [0.0, 0.0],
            [1.0, 0.5],
            [2.0, -1.0],
            [-1.0, 1.5],
            [0.5, -0.5],
            [-2.5, -0.5]
        ];
        let k = gram_of_points(&pts, true);
        let e = kernel_pca(&k, 2).unwrap();
        let centered = crate::kernels::center(&k);
        let recon = e.coords.dot(&e.coords.t());
        for (a, b) in recon.iter().zip(centered.values.iter()) {
            assert!((a - b).abs() < 1e-9, "reconstruction off by {}", (a - b).abs());
        }
        assert!((e.fidelity - 1.0).abs() < 1e-9);
    }

    #[test]
    fn kernel_pca_full_dim_reconstructs_psd_part() {
        let k = pseudo_random_kernel(7, 5, 2);
        let n = k.n();
        let e = kernel_pca(&k, n).unwrap();
        let centered = crate::kernels::center(&k);
        let recon = e.coords.dot(&e.coords.t());
        // PSD part only: tiny negative eigenvalues are excluded.
        for (a, b) in recon.iter().zip(centered.values.iter()) {
            assert!((a - b).abs() < 1e-7);
        }
    }

    #[test]
    fn kernel_pca_separates_clusters() {
        use crate::bow::{AuthorProfile, ProfileSpace};
        // Two tight clusters of profiles.
        let mut profiles = Vec::new();
        for i in 0..6 {
            let (a, b) = if i < 3 { (0.9, 0.1) } else { (0.1, 0.9) };
            let eps = i as f64 * 0.004;
            profiles.push(AuthorProfile {
                author_id: i,
                probs: vec![a - eps, b + eps],
                space: ProfileSpace::Words,
            });
        }
        let labels: Vec<String> = (0..6).map(|i| format!("a{i}")).collect();
        let k = crate::kernels::gram(&profiles, &labels).unwrap();
        let e = kernel_pca(&k, 2).unwrap();
        let dist = |i: usize, j: usize| -> f64 {
            (0..2)
                .map(|c| (e.coords[[i, c]] - e.coords[[j, c]]).powi(2))
                .sum::<f64>()
                .sqrt()
        };
        let within = (dist(0, 1) + dist(1, 2) + dist(3, 4) + dist(4, 5)) / 4.0;
        let between = (dist(0, 3) + dist(1, 4) + dist(2, 5)) / 3.0;
        assert!(
            between > within * 3.0,
            "between {between} should dominate within {within}"
        );
    }

    #[test]
    fn kernel_pca_rejects_bad_dim() {
        let k = kernel_from(Array2::eye(3));
        assert!(matches!(
            kernel_pca(&k, 0),
            Err(EmbedError::InvalidDim { .. })
        ));
        assert!(matches!(
            kernel_pca(&k, 4),
            Err(EmbedError::InvalidDim { .. })
        ));
    }

    #[test]
    fn mve_planar_kernel_is_fixed_point() {
        // 20 points exactly on a 2-plane (deterministic layout).
        let mut pts = Array2::<f64>::zeros((20, 2));
        for i in 0..20 {
            pts[[i, 0]] = ((i * 37 + 11) % 19) as f64 / 3.0;
            pts[[i, 1]] = ((i * 53 + 7) % 23) as f64 / 4.0;
        }
        let k = gram_of_points(&pts, true);
        let g = knn_graph(&k, 4).unwrap();
        let e = mve(&k, &g, 2, &MveOptions::default()).unwrap();
        assert!(e.fidelity >= 1.0 - 1e-6, "fidelity {}", e.fidelity);
        assert!(
            e.max_edge_residual.unwrap() <= 1e-6,
            "residual {}",
            e.max_edge_residual.unwrap()
        );
    }

    #[test]
    fn mve_improves_on_kernel_pca() {
        let k = pseudo_random_kernel(10, 4, 3);
        let g = knn_graph(&k, 3).unwrap();
        let baseline = kernel_pca(&k, 2).unwrap();
        let e = mve(&k, &g, 2, &MveOptions::default()).unwrap();
        assert!(
            e.fidelity >= baseline.fidelity - 1e-9,
            "mve fidelity {} < baseline {}",
            e.fidelity,
            baseline.fidelity
        );
    }

    #[test]
    fn mve_objective_trace_is_monotone() {
        let k = pseudo_random_kernel(8, 5, 4);
        let g = knn_graph(&k, 2).unwrap();
        let e = mve(&k, &g, 2, &MveOptions::default()).unwrap();
        assert!(!e.objective_trace.is_empty());
        for w in e.objective_trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-9, "trace decreased: {} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn mve_coordinate_gram_matches_rank_d_truncation() {
        let k = pseudo_random_kernel(9, 4, 5);
        let g = knn_graph(&k, 3).unwrap();
        let e = mve(&k, &g, 2, &MveOptions::default()).unwrap();
        // Rebuild rank-d truncation from the reported spectrum via coords.
        let gram = e.coords.dot(&e.coords.t());
        let frob_gram: f64 = gram.iter().map(|x| x * x).sum::<f64>().sqrt();
        let top_mass: f64 = e
            .spectrum
            .iter()
            .take(2)
            .map(|l| l.max(0.0) * l.max(0.0))
            .sum::<f64>()
            .sqrt();
        assert!(
            (frob_gram - top_mass).abs() <= 1e-6 * top_mass.max(1.0),
            "coordinate Gram mass {frob_gram} vs top eigenvalue mass {top_mass}"
        );
    }

    #[test]
    fn mve_rejects_non_psd_kernel() {
        let mut values = Array2::eye(4);
        values[[0, 1]] = 2.0;
        values[[1, 0]] = 2.0;
        let k = kernel_from(values);
        let g = knn_graph(&k, 1).unwrap();
        assert!(matches!(
            mve(&k, &g, 2, &MveOptions::default()),
            Err(EmbedError::NotPsd { .. })
        ));
    }

    #[test]
    fn mve_rejects_mismatched_graph() {
        let k = pseudo_random_kernel(5, 3, 6);
        let g = knn_graph(&k, 2).unwrap();
        let smaller = pseudo_random_kernel(4, 3, 6);
        assert!(matches!(
            mve(&smaller, &g, 2, &MveOptions::default()),
            Err(EmbedError::GraphMismatch { .. })
        ));
    }

    #[test]
    fn embedding_export_round_trips() {
        let k = pseudo_random_kernel(6, 4, 7);
        let g = knn_graph(&k, 2).unwrap();
        let e = mve(&k, &g, 2, &MveOptions::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("embedding.json");
        save_embedding_json(&e, &g, &path).unwrap();
        let loaded = load_embedding_json(&path).unwrap();
        assert_eq!(loaded, EmbeddingExport::new(&e, &g));
        // f64 coordinates survive the round trip exactly.
        for (row, orig) in loaded.coords.iter().zip(e.coords.rows()) {
            for (a, b) in row.iter().zip(orig.iter()) {
                assert_eq!(a, b);
            }
        }
    }
}
