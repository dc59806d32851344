//! Dense complex matrix helpers for the random-matrix checks.

use ndarray::{Array2, Axis};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type CMatrix = Array2<Complex64>;

/// Entries `(g₁ + i g₂)/√2` with independent standard normals.
pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Array2::from_shape_simple_fn((rows, cols), || {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re * s, im * s)
    })
}

/// Orthonormalises the columns in place by classical Gram-Schmidt with one
/// re-orthogonalisation pass (CGS2).
pub fn orthonormalize_columns(m: &mut CMatrix) {
    let cols = m.ncols();
    for j in 0..cols {
        for _ in 0..2 {
            if j == 0 {
                break;
            }
            let (done, mut rest) = m.view_mut().split_at(Axis(1), j);
            let mut col = rest.column_mut(0);
            let coeffs: Vec<Complex64> = (0..j)
                .map(|k| done.column(k).iter().zip(col.iter()).map(|(q, v)| q.conj() * v).sum())
                .collect();
            for (k, c) in coeffs.iter().enumerate() {
                col.zip_mut_with(&done.column(k), |v, q| *v -= c * q);
            }
        }
        let mut col = m.column_mut(j);
        let norm = col.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        col.mapv_inplace(|v| v / norm);
    }
}

/// Haar-distributed unitary: Gram-Schmidt of a Ginibre matrix, which is the QR
/// factor with positive diagonal in `R`.
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let mut g = gaussian_matrix(n, n, rng);
    orthonormalize_columns(&mut g);
    g
}

pub fn adjoint(m: &CMatrix) -> CMatrix {
    m.t().mapv(|v| v.conj())
}

/// `V V†` for a matrix with orthonormal columns.
pub fn range_projector(v: &CMatrix) -> CMatrix {
    v.dot(&adjoint(v))
}

/// Orthogonal projection onto a uniformly random `rank`-dimensional subspace.
pub fn random_projection<R: Rng + ?Sized>(n: usize, rank: usize, rng: &mut R) -> CMatrix {
    let mut v = gaussian_matrix(n, rank, rng);
    orthonormalize_columns(&mut v);
    range_projector(&v)
}

/// Projection onto the first `rank` coordinates.
pub fn corner_projection(n: usize, rank: usize) -> CMatrix {
    Array2::from_shape_fn((n, n), |(i, j)| {
        if i == j && i < rank {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

pub fn identity(n: usize) -> CMatrix {
    Array2::from_shape_fn((n, n), |(i, j)| Complex64::new(if i == j { 1.0 } else { 0.0 }, 0.0))
}

/// `U A U†`.
pub fn conjugate(u: &CMatrix, a: &CMatrix) -> CMatrix {
    u.dot(a).dot(&adjoint(u))
}

/// `tr(M)/N`.
pub fn normalized_trace(m: &CMatrix) -> Complex64 {
    m.diag().sum() / m.nrows() as f64
}

/// `τ(M^k)` for `k = 0..=k_max`.
pub fn power_traces(m: &CMatrix, k_max: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(1.0, 0.0)];
    if k_max == 0 {
        return out;
    }
    let mut p = m.clone();
    out.push(normalized_trace(&p));
    for _ in 2..=k_max {
        p = p.dot(m);
        out.push(normalized_trace(&p));
    }
    out
}

/// `max |(U†U - I)_{ij}|`.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let g = adjoint(u).dot(u);
    g.indexed_iter()
        .map(|((i, j), v)| (v - Complex64::new(if i == j { 1.0 } else { 0.0 }, 0.0)).norm())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn haar_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = haar_unitary(40, &mut rng);
        assert!(unitarity_defect(&u) < 1e-12);
    }

    #[test]
    fn projections_are_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = random_projection(30, 12, &mut rng);
        let d = (&p.dot(&p) - &p).iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!(d < 1e-12);
        assert!((normalized_trace(&p).re - 0.4).abs() < 1e-12);
        let h = (&p - &adjoint(&p)).iter().map(|v| v.norm()).fold(0.0, f64::max);
        assert!(h < 1e-14);
    }

    #[test]
    fn power_traces_of_projection() {
        let p = corner_projection(10, 3);
        let t = power_traces(&p, 4);
        assert_eq!(t[0].re, 1.0);
        assert!(t[1..].iter().all(|v| (v.re - 0.3).abs() < 1e-15));
    }
}
