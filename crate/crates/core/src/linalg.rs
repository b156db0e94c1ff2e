//! Dense symmetric eigendecomposition and small matrix helpers.
//!
//! Author maps live at desk scale (tens to a few hundred authors), so a
//! deterministic cyclic Jacobi solver is used instead of a LAPACK binding.
//! Jacobi is O(n^3) per sweep but converges in a handful of sweeps and has
//! no platform-dependent behavior, which keeps embeddings reproducible.

use ndarray::{Array1, Array2};

/// Eigendecomposition of a symmetric matrix: eigenvalues in descending order
/// with matching eigenvectors.
#[derive(Debug, Clone)]
pub struct SymEigen {
    /// Eigenvalues, largest first.
    pub values: Vec<f64>,
    /// Eigenvectors as columns, ordered like `values`.
    pub vectors: Array2<f64>,
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// The input is not checked for symmetry; only the upper triangle drives the
/// rotations, and the result is exact for symmetric input. Deterministic for
/// identical input bytes.
pub fn sym_eigen(matrix: &Array2<f64>) -> SymEigen {
    let n = matrix.nrows();
    assert_eq!(n, matrix.ncols(), "sym_eigen requires a square matrix");
    let mut a = matrix.clone();
    let mut v = Array2::<f64>::eye(n);

    if n > 1 {
        let off_diag_norm = |a: &Array2<f64>| -> f64 {
            let mut s = 0.0;
            for i in 0..n {
                for j in (i + 1)..n {
                    s += a[[i, j]] * a[[i, j]];
                }
            }
            s.sqrt()
        };
        let scale: f64 = matrix
            .iter()
            .fold(0.0_f64, |m, &x| m.max(x.abs()))
            .max(f64::MIN_POSITIVE);
        let tol = 1e-14 * scale * n as f64;

        for _sweep in 0..100 {
            if off_diag_norm(&a) <= tol {
                break;
            }
            for p in 0..n - 1 {
                for q in (p + 1)..n {
                    let apq = a[[p, q]];
                    if apq.abs() <= tol / (n * n) as f64 {
                        continue;
                    }
                    let app = a[[p, p]];
                    let aqq = a[[q, q]];
                    let theta = (aqq - app) / (2.0 * apq);
                    let t = if theta >= 0.0 {
                        1.0 / (theta + (1.0 + theta * theta).sqrt())
                    } else {
                        -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                    };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;

                    for i in 0..n {
                        if i != p && i != q {
                            let aip = a[[i, p]];
                            let aiq = a[[i, q]];
                            a[[i, p]] = c * aip - s * aiq;
                            a[[p, i]] = a[[i, p]];
                            a[[i, q]] = s * aip + c * aiq;
                            a[[q, i]] = a[[i, q]];
                        }
                    }
                    a[[p, p]] = c * c * app - 2.0 * s * c * apq + s * s * aqq;
                    a[[q, q]] = s * s * app + 2.0 * s * c * apq + c * c * aqq;
                    a[[p, q]] = 0.0;
                    a[[q, p]] = 0.0;

                    for i in 0..n {
                        let vip = v[[i, p]];
                        let viq = v[[i, q]];
                        v[[i, p]] = c * vip - s * viq;
                        v[[i, q]] = s * vip + c * viq;
                    }
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[[j, j]].total_cmp(&a[[i, i]]).then(i.cmp(&j)));

    let values: Vec<f64> = order.iter().map(|&i| a[[i, i]]).collect();
    let mut vectors = Array2::<f64>::zeros((n, n));
    for (col, &idx) in order.iter().enumerate() {
        vectors.column_mut(col).assign(&v.column(idx));
    }
    SymEigen { values, vectors }
}

impl SymEigen {
    /// Rebuild `V diag(values) V^T`.
    pub fn reconstruct(&self) -> Array2<f64> {
        let mut scaled = self.vectors.clone();
        for (c, &lambda) in self.values.iter().enumerate() {
            scaled.column_mut(c).mapv_inplace(|x| x * lambda);
        }
        scaled.dot(&self.vectors.t())
    }
}

/// Symmetrize in place: `a = (a + a^T) / 2`. Cheap guard against fp drift in
/// iterated updates.
pub fn symmetrize(a: &mut Array2<f64>) {
    let n = a.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let m = 0.5 * (a[[i, j]] + a[[j, i]]);
            a[[i, j]] = m;
            a[[j, i]] = m;
        }
    }
}

/// Row vector of means, column vector of means and grand mean of a square matrix.
pub fn row_col_grand_means(a: &Array2<f64>) -> (Array1<f64>, Array1<f64>, f64) {
    let n = a.nrows() as f64;
    let row_means = a.sum_axis(ndarray::Axis(1)) / a.ncols() as f64;
    let col_means = a.sum_axis(ndarray::Axis(0)) / n;
    let grand = a.sum() / (n * a.ncols() as f64);
    (row_means, col_means, grand)
}
