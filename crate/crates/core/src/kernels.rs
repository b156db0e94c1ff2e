//! Bhattacharyya similarity between author profiles and Gram-matrix
//! machinery: assembly, multi-layer combination, double centering and an
//! opt-in PSD repair.

use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bow::AuthorProfile;
use crate::linalg;

/// Gram matrices may dip this far below zero (relative to the largest
/// eigenvalue) before being treated as non-PSD.
pub const PSD_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum KernelError {
    #[error("profiles live in different spaces: {0} vs {1}")]
    SpaceMismatch(String, String),

    #[error("profile lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("cannot build a kernel from an empty profile list")]
    EmptyProfileList,

    #[error("label lists differ between kernels")]
    LabelMismatch,

    #[error("weights invalid: {0}")]
    BadWeights(String),

    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("matrix is not PSD: min eigenvalue {min_eig:e} < -{tol:e}")]
    NotPsd { min_eig: f64, tol: f64 },

    #[error("kernel file {path} is invalid: {message}")]
    InvalidKernelFile { path: String, message: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Symmetric author-by-author similarity matrix with row/column labels.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    pub labels: Vec<String>,
    pub values: Array2<f64>,
}

impl KernelMatrix {
    /// Validating constructor: square, labels match, symmetric within 1e-12.
    pub fn new(labels: Vec<String>, values: Array2<f64>) -> Result<Self, KernelError> {
        let n = labels.len();
        if values.nrows() != n || values.ncols() != n {
            return Err(KernelError::InvalidKernelFile {
                path: String::new(),
                message: format!(
                    "{} labels but {}x{} matrix",
                    n,
                    values.nrows(),
                    values.ncols()
                ),
            });
        }
        let mut max_asym = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                max_asym = max_asym.max((values[[i, j]] - values[[j, i]]).abs());
            }
        }
        if max_asym > 1e-12 {
            return Err(KernelError::NotSymmetric(max_asym));
        }
        Ok(Self { labels, values })
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    /// Eigenvalues in descending order.
    pub fn spectrum(&self) -> Vec<f64> {
        linalg::sym_eigen(&self.values).values
    }

    /// Error unless `min eig >= -PSD_TOLERANCE * max |eig|`.
    pub fn check_psd(&self) -> Result<(), KernelError> {
        let spectrum = self.spectrum();
        let max_abs = spectrum.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
        let min_eig = spectrum.last().copied().unwrap_or(0.0);
        let tol = PSD_TOLERANCE * max_abs.max(1e-300);
        if min_eig < -tol {
            return Err(KernelError::NotPsd { min_eig, tol });
        }
        Ok(())
    }

    /// Opt-in PSD repair: clip negative eigenvalues to zero and rebuild.
    pub fn psd_project(&self) -> KernelMatrix {
        let mut eig = linalg::sym_eigen(&self.values);
        for v in &mut eig.values {
            *v = v.max(0.0);
        }
        let mut values = eig.reconstruct();
        linalg::symmetrize(&mut values);
        KernelMatrix {
            labels: self.labels.clone(),
            values,
        }
    }
}

/// Bhattacharyya coefficient between two probability vectors:
/// `sum_k sqrt(p_k * q_k)`, in `[0, 1]`, 1 iff the vectors are equal.
pub fn bhattacharyya(p: &AuthorProfile, q: &AuthorProfile) -> Result<f64, KernelError> {
    if p.space != q.space {
        return Err(KernelError::SpaceMismatch(
            p.space.to_string(),
            q.space.to_string(),
        ));
    }
    if p.probs.len() != q.probs.len() {
        return Err(KernelError::LengthMismatch(p.probs.len(), q.probs.len()));
    }
    let sum: f64 = p
        .probs
        .iter()
        .zip(&q.probs)
        .map(|(&a, &b)| (a * b).sqrt())
        .sum();
    // Exact value is <= 1 by Cauchy-Schwarz; clip fp overshoot.
    Ok(sum.min(1.0))
}

/// Bhattacharyya Gram matrix over a set of same-space profiles.
/// The diagonal is pinned at 1 and the matrix is exactly symmetric.
pub fn gram(profiles: &[AuthorProfile], labels: &[String]) -> Result<KernelMatrix, KernelError> {
    if profiles.is_empty() {
        return Err(KernelError::EmptyProfileList);
    }
    assert_eq!(profiles.len(), labels.len(), "one label per profile");
    let n = profiles.len();
    let mut values = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        values[[i, i]] = 1.0;
        for j in (i + 1)..n {
            let k = bhattacharyya(&profiles[i], &profiles[j])?;
            values[[i, j]] = k;
            values[[j, i]] = k;
        }
    }
    Ok(KernelMatrix {
        labels: labels.to_vec(),
        values,
    })
}

/// How to merge per-layer kernels into one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum CombineMode {
    /// Convex combination: weights must be non-negative and sum to 1.
    WeightedSum { weights: Vec<f64> },
    /// Elementwise (Schur) product; PSD-preserving.
    Product,
}

/// Combine kernels over identical label lists.
pub fn combine(kernels: &[KernelMatrix], mode: &CombineMode) -> Result<KernelMatrix, KernelError> {
    let first = kernels.first().ok_or(KernelError::EmptyProfileList)?;
    for k in &kernels[1..] {
        if k.labels != first.labels {
            return Err(KernelError::LabelMismatch);
        }
    }
    let values = match mode {
        CombineMode::WeightedSum { weights } => {
            if weights.len() != kernels.len() {
                return Err(KernelError::BadWeights(format!(
                    "{} weights for {} kernels",
                    weights.len(),
                    kernels.len()
                )));
            }
            if weights.iter().any(|&w| w < 0.0) {
                return Err(KernelError::BadWeights("negative weight".into()));
            }
            let total: f64 = weights.iter().sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(KernelError::BadWeights(format!(
                    "weights sum to {total}, expected 1"
                )));
            }
            let mut acc = Array2::<f64>::zeros(first.values.raw_dim());
            for (k, &w) in kernels.iter().zip(weights) {
                acc.scaled_add(w, &k.values);
            }
            acc
        }
        CombineMode::Product => {
            let mut acc = first.values.clone();
            for k in &kernels[1..] {
                acc = &acc * &k.values;
            }
            acc
        }
    };
    Ok(KernelMatrix {
        labels: first.labels.clone(),
        values,
    })
}

/// Double centering `K' = H K H` with `H = I - (1/n) 1 1^T`. Row and column
/// sums of the result vanish; symmetry and induced pairwise distances are
/// preserved.
pub fn center(kernel: &KernelMatrix) -> KernelMatrix {
    let (row_means, col_means, grand) = linalg::row_col_grand_means(&kernel.values);
    let n = kernel.n();
    let mut values = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            values[[i, j]] = kernel.values[[i, j]] - row_means[i] - col_means[j] + grand;
        }
    }
    linalg::symmetrize(&mut values);
    KernelMatrix {
        labels: kernel.labels.clone(),
        values,
    }
}

// --- Persistence -------------------------------------------------------------

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct KernelFile {
    labels: Vec<String>,
    values: Vec<Vec<f64>>,
}

/// Write as JSON `{"labels": [...], "values": [[...], ...]}`.
pub fn save_kernel_json(kernel: &KernelMatrix, path: &Path) -> Result<(), KernelError> {
    let file = KernelFile {
        labels: kernel.labels.clone(),
        values: kernel
            .values
            .rows()
            .into_iter()
            .map(|r| r.to_vec())
            .collect(),
    };
    let json = serde_json::to_string(&file).expect("kernel serialization cannot fail");
    std::fs::write(path, json + "\n").map_err(|e| KernelError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

pub fn load_kernel_json(path: &Path) -> Result<KernelMatrix, KernelError> {
    let data = std::fs::read_to_string(path).map_err(|e| KernelError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let file: KernelFile =
        serde_json::from_str(&data).map_err(|e| KernelError::InvalidKernelFile {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
    let n = file.labels.len();
    if file.values.len() != n || file.values.iter().any(|r| r.len() != n) {
        return Err(KernelError::InvalidKernelFile {
            path: path.display().to_string(),
            message: "values matrix is not n x n".into(),
        });
    }
    let mut values = Array2::<f64>::zeros((n, n));
    for (i, row) in file.values.iter().enumerate() {
        for (j, &x) in row.iter().enumerate() {
            values[[i, j]] = x;
        }
    }
    KernelMatrix::new(file.labels, values).map_err(|e| match e {
        KernelError::NotSymmetric(a) => KernelError::InvalidKernelFile {
            path: path.display().to_string(),
            message: format!("matrix is not symmetric (max asymmetry {a:e})"),
        },
        other => other,
    })
}

/// Write as CSV with a label header row and a label column.
pub fn save_kernel_csv(kernel: &KernelMatrix, path: &Path) -> Result<(), KernelError> {
    let mut out = String::new();
    for label in &kernel.labels {
        out.push(',');
        out.push_str(&csv_escape(label));
    }
    out.push('\n');
    for (i, label) in kernel.labels.iter().enumerate() {
        out.push_str(&csv_escape(label));
        for j in 0..kernel.n() {
            out.push(',');
            out.push_str(&format!("{}", kernel.values[[i, j]]));
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| KernelError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

fn csv_escape(field: &str) -> String {
    if field.contains([',', '"', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bow::ProfileSpace;

    fn profile(probs: Vec<f64>) -> AuthorProfile {
        AuthorProfile {
            author_id: 0,
            probs,
            space: ProfileSpace::Words,
        }
    }

    fn labels(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("a{i}")).collect()
    }

    #[test]
    fn identical_profiles_have_similarity_one() {
        let p = profile(vec![0.2, 0.3, 0.5]);
        let k = bhattacharyya(&p, &p).unwrap();
        assert!((k - 1.0).abs() < 1e-9);
    }

    #[test]
    fn disjoint_supports_have_similarity_zero() {
        let p = profile(vec![1.0, 0.0]);
        let q = profile(vec![0.0, 1.0]);
        assert_eq!(bhattacharyya(&p, &q).unwrap(), 0.0);
    }

    #[test]
    #[allow(clippy::approx_constant)] // frozen expected value sqrt(1/2)
    fn half_half_vs_point_mass() {
        let p = profile(vec![0.5, 0.5]);
        let q = profile(vec![1.0, 0.0]);
        let k = bhattacharyya(&p, &q).unwrap();
        assert!((k - 0.7071067811865476).abs() < 1e-15);
    }

    #[test]
    fn mismatched_lengths_error() {
        let p = profile(vec![1.0]);
        let q = profile(vec![0.5, 0.5]);
        assert!(matches!(
            bhattacharyya(&p, &q),
            Err(KernelError::LengthMismatch(1, 2))
        ));
    }

    #[test]
    fn mismatched_spaces_error() {
        let p = profile(vec![1.0]);
        let mut q = profile(vec![1.0]);
        q.space = ProfileSpace::Topics { layer: 1 };
        assert!(matches!(
            bhattacharyya(&p, &q),
            Err(KernelError::SpaceMismatch(..))
        ));
    }

    #[test]
    fn gram_of_identical_profiles_is_all_ones() {
        let ps = vec![profile(vec![0.25, 0.75]); 3];
        let k = gram(&ps, &labels(3)).unwrap();
        for x in k.values.iter() {
            assert!((x - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn gram_of_disjoint_supports_is_identity() {
        let ps = vec![
            profile(vec![1.0, 0.0, 0.0]),
            profile(vec![0.0, 1.0, 0.0]),
            profile(vec![0.0, 0.0, 1.0]),
        ];
        let k = gram(&ps, &labels(3)).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_eq!(k.values[[i, j]], want);
            }
        }
    }

    #[test]
    fn gram_rejects_empty_list() {
        assert!(matches!(
            gram(&[], &[]),
            Err(KernelError::EmptyProfileList)
        ));
    }

    #[test]
    fn combine_single_kernel_is_identity() {
        let k = gram(&[profile(vec![0.5, 0.5]), profile(vec![0.9, 0.1])], &labels(2)).unwrap();
        let c = combine(
            std::slice::from_ref(&k),
            &CombineMode::WeightedSum {
                weights: vec![1.0],
            },
        )
        .unwrap();
        assert_eq!(c, k);
    }

    #[test]
    fn combine_equal_halves_is_identity() {
        let k = gram(&[profile(vec![0.5, 0.5]), profile(vec![0.9, 0.1])], &labels(2)).unwrap();
        let c = combine(
            &[k.clone(), k.clone()],
            &CombineMode::WeightedSum {
                weights: vec![0.5, 0.5],
            },
        )
        .unwrap();
        for (a, b) in c.values.iter().zip(k.values.iter()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn product_with_all_ones_is_identity() {
        let k = gram(&[profile(vec![0.5, 0.5]), profile(vec![0.9, 0.1])], &labels(2)).unwrap();
        let ones = KernelMatrix {
            labels: labels(2),
            values: Array2::ones((2, 2)),
        };
        let c = combine(&[k.clone(), ones], &CombineMode::Product).unwrap();
        assert_eq!(c.values, k.values);
    }

    #[test]
    fn combine_rejects_bad_weights() {
        let k = gram(&[profile(vec![1.0])], &labels(1)).unwrap();
        let out = combine(
            &[k.clone(), k],
            &CombineMode::WeightedSum {
                weights: vec![0.9, 0.3],
            },
        );
        assert!(matches!(out, Err(KernelError::BadWeights(_))));
    }

    #[test]
    fn combine_rejects_label_mismatch() {
        let a = gram(&[profile(vec![1.0])], &["x".to_string()]).unwrap();
        let b = gram(&[profile(vec![1.0])], &["y".to_string()]).unwrap();
        assert!(matches!(
            combine(&[a, b], &CombineMode::Product),
            Err(KernelError::LabelMismatch)
        ));
    }

    #[test]
    fn center_zeroes_row_sums() {
        let ps = vec![
            profile(vec![0.7, 0.2, 0.1]),
            profile(vec![0.1, 0.8, 0.1]),
            profile(vec![0.3, 0.3, 0.4]),
            profile(vec![0.25, 0.5, 0.25]),
        ];
        let k = center(&gram(&ps, &labels(4)).unwrap());
        for i in 0..4 {
            let row: f64 = k.values.row(i).sum();
            let col: f64 = k.values.column(i).sum();
            assert!(row.abs() < 1e-9, "row {i} sums to {row}");
            assert!(col.abs() < 1e-9, "col {i} sums to {col}");
        }
    }

    #[test]
    fn center_is_idempotent() {
        let ps = vec![
            profile(vec![0.7, 0.2, 0.1]),
            profile(vec![0.1, 0.8, 0.1]),
            profile(vec![0.3, 0.3, 0.4]),
        ];
        let once = center(&gram(&ps, &labels(3)).unwrap());
        let twice = center(&once);
        for (a, b) in once.values.iter().zip(twice.values.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn center_of_all_ones_is_zero() {
        let k = KernelMatrix {
            labels: labels(3),
            values: Array2::ones((3, 3)),
        };
        let c = center(&k);
        assert!(c.values.iter().all(|&x| x.abs() < 1e-15));
    }

    #[test]
    fn gram_is_psd() {
        // Deterministic pseudo-random simplex profiles.
        let mut ps = Vec::new();
        for i in 0..8 {
            let mut v: Vec<f64> = (0..5)
                .map(|j| (((i * 13 + j * 7 + 3) % 17) + 1) as f64)
                .collect();
            let t: f64 = v.iter().sum();
            v.iter_mut().for_each(|x| *x /= t);
            ps.push(profile(v));
        }
        let k = gram(&ps, &labels(8)).unwrap();
        k.check_psd().unwrap();
    }

    #[test]
    fn psd_project_clips_negative_eigenvalues() {
        // Symmetric matrix with a negative eigenvalue.
        let values = ndarray::array![[0.0, 1.0], [1.0, 0.0]];
        let k = KernelMatrix {
            labels: labels(2),
            values,
        };
        assert!(k.check_psd().is_err());
        let fixed = k.psd_project();
        fixed.check_psd().unwrap();
        let spec = fixed.spectrum();
        assert!((spec[0] - 1.0).abs() < 1e-10);
        assert!(spec[1].abs() < 1e-10);
    }

    #[test]
    fn kernel_json_round_trip() {
        let ps = vec![profile(vec![0.5, 0.5]), profile(vec![0.9, 0.1])];
        let k = gram(&ps, &labels(2)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("kernel.json");
        save_kernel_json(&k, &path).unwrap();
        let loaded = load_kernel_json(&path).unwrap();
        assert_eq!(k, loaded);
    }

    #[test]
    fn kernel_csv_has_label_headers() {
        let ps = vec![profile(vec![0.5, 0.5]), profile(vec![0.9, 0.1])];
        let k = gram(&ps, &["ann".to_string(), "bob".to_string()]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("kernel.csv");
        save_kernel_csv(&k, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), ",ann,bob");
        assert!(lines.next().unwrap().starts_with("ann,1,"));
    }
}
