//! Small dense helpers on row-major slices.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative threshold under which a negative eigenvalue is treated as
/// rounding noise and clamped to zero.
pub const PSD_CLAMP: f64 = 1e-10;

/// Principal square root of a symmetric positive semi-definite `n×n`
/// matrix given row-major. The input is symmetrized first. Eigenvalues in
/// `[-PSD_CLAMP·trace, 0)` are clamped to zero; anything more negative is
/// an error.
pub fn psd_sqrt(matrix: &[f64], n: usize) -> Result<Vec<f64>> {
    debug_assert_eq!(matrix.len(), n * n);
    let sym = DMatrix::from_fn(n, n, |i, j| 0.5 * (matrix[i * n + j] + matrix[j * n + i]));
    let trace: f64 = (0..n).map(|i| sym[(i, i)]).sum();
    if trace == 0.0 && sym.iter().all(|&v| v == 0.0) {
        return Ok(vec![0.0; n * n]);
    }
    let eig = SymmetricEigen::new(sym);
    let tol = PSD_CLAMP * trace.abs();
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -tol {
        return Err(Error::NotPsd {
            min_eigenvalue: min,
            trace,
        });
    }
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    let v = &eig.eigenvectors;
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            out[i * n + j] = (0..n).map(|k| v[(i, k)] * roots[k] * v[(j, k)]).sum();
        }
    }
    Ok(out)
}

/// `out = a · b` for row-major `a` (`rows×inner`) and `b` (`inner×cols`).
pub fn matmul(a: &[f64], b: &[f64], rows: usize, inner: usize, cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; rows * cols];
    for i in 0..rows {
        for k in 0..inner {
            let aik = a[i * inner + k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..cols {
                out[i * cols + j] += aik * b[k * cols + j];
            }
        }
    }
    out
}

/// `out = a · v` for row-major `a` (`rows×cols`).
pub fn matvec(a: &[f64], v: &[f64], out: &mut [f64]) {
    let cols = v.len();
    for (i, o) in out.iter_mut().enumerate() {
        *o = a[i * cols..(i + 1) * cols]
            .iter()
            .zip(v)
            .map(|(x, y)| x * y)
            .sum();
    }
}

/// `a · aᵗ` for row-major `a` (`rows×cols`).
pub fn gram(a: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; rows * rows];
    for i in 0..rows {
        for j in 0..rows {
            out[i * rows + j] = (0..cols).map(|k| a[i * cols + k] * a[j * cols + k]).sum();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sqrt_of_diagonal() {
        let r = psd_sqrt(&[4.0, 0.0, 0.0, 9.0], 2).unwrap();
        assert!((r[0] - 2.0).abs() < 1e-14 && (r[3] - 3.0).abs() < 1e-14);
        assert!(r[1].abs() < 1e-14);
    }

    #[test]
    fn rank_one_matrix() {
        let b = [2.0, 2.0, 2.0, 2.0];
        let a = psd_sqrt(&b, 2).unwrap();
        let back = gram(&a, 2, 2);
        for (x, y) in back.iter().zip(&b) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_indefinite() {
        assert!(matches!(
            psd_sqrt(&[1.0, 0.0, 0.0, -1.0], 2),
            Err(Error::NotPsd { .. })
        ));
    }

    proptest! {
        #[test]
        fn sqrt_squares_back(entries in proptest::collection::vec(-3.0f64..3.0, 9)) {
            // Any G·Gᵗ is PSD.
            let b = gram(&entries, 3, 3);
            let a = psd_sqrt(&b, 3).unwrap();
            let back = matmul(&a, &a, 3, 3, 3);
            let scale = 1.0 + b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for (x, y) in back.iter().zip(&b) {
                prop_assert!((x - y).abs() <= 1e-10 * scale);
            }
            for i in 0..3 {
                for j in 0..3 {
                    prop_assert!((a[i * 3 + j] - a[j * 3 + i]).abs() < 1e-12 * scale);
                }
            }
        }
    }
}
