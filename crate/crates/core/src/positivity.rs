//! Moment-problem positivity checks via smallest eigenvalues.

use nalgebra::{DMatrix, SymmetricEigen};

fn min_eigenvalue(m: DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Smallest eigenvalue of the Toeplitz matrix `(c_{|i-j|})` built from a real
/// symmetric sequence `c_0..c_k` (moments of a measure on the circle that is
/// invariant under conjugation).
pub fn toeplitz_min_eigenvalue(c: &[f64]) -> f64 {
    let k = c.len();
    min_eigenvalue(DMatrix::from_fn(k, k, |i, j| c[i.abs_diff(j)]))
}

/// Smallest eigenvalue of the Hankel matrix `(m_{i+j})_{i,j ≤ size-1}`.
pub fn hankel_min_eigenvalue(m: &[f64], size: usize) -> f64 {
    assert!(m.len() >= 2 * size - 1, "not enough moments for Hankel size {size}");
    min_eigenvalue(DMatrix::from_fn(size, size, |i, j| m[i + j]))
}

/// Smallest eigenvalue over the Hausdorff checks of order `size`: the Hankel
/// matrices of `m_{i+j}` and of `m_{i+j+1} - m_{i+j+2}`.
pub fn hausdorff_min_eigenvalue(m: &[f64], size: usize) -> f64 {
    let shifted: Vec<f64> = (0..2 * size - 1).map(|k| m[k + 1] - m[k + 2]).collect();
    hankel_min_eigenvalue(m, size).min(hankel_min_eigenvalue(&shifted, size))
}

/// Largest order (at most `max_size`) for which `m` holds enough entries.
pub fn hausdorff_check(m: &[f64], max_size: usize) -> f64 {
    let mut worst = f64::INFINITY;
    for size in 1..=max_size {
        if 2 * size + 1 > m.len() {
            break;
        }
        worst = worst.min(hausdorff_min_eigenvalue(m, size));
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_measure_is_positive() {
        let m: Vec<f64> = (0..12).map(|k| 1.0 / (k as f64 + 1.0)).collect();
        assert!(hausdorff_check(&m, 5) > -1e-12);
    }

    #[test]
    fn non_moment_sequence_fails() {
        let m = [1.0, 0.9, 0.1, 0.05, 0.01, 0.0, 0.0];
        assert!(hausdorff_check(&m, 3) < -1e-3);
    }

    #[test]
    fn toeplitz_of_dirac_on_circle() {
        assert!(toeplitz_min_eigenvalue(&[1.0, 1.0, 1.0, 1.0]) > -1e-12);
        assert!(toeplitz_min_eigenvalue(&[1.0, 1.5]) < 0.0);
    }
}
