//! Small dense helpers shared by the operator modules.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// 17 significant digits, enough to round-trip any f64.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Kronecker product `a ⊗ b` (row-major flat index `i·dim(b) + j`).
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = CMatrix::zeros(ar * br, ac * bc);
    for j in 0..ac {
        for i in 0..ar {
            let s = a[(i, j)];
            if s == Complex64::new(0.0, 0.0) {
                continue;
            }
            for q in 0..bc {
                for p in 0..br {
                    out[(i * br + p, j * bc + q)] = s * b[(p, q)];
                }
            }
        }
    }
    out
}

pub fn diag(values: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_iterator(values.len(), values.iter().map(|&x| c(x))))
}

/// `max |m - m^H|`.
pub fn hermitian_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for j in 0..n {
        for i in 0..=j {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest eigenvalue of a positive semidefinite operator given by its action,
/// via Lanczos with full reorthogonalization. `start` seeds the Krylov space.
pub fn lanczos_top(
    dim: usize,
    mut apply: impl FnMut(&[Complex64]) -> Vec<Complex64>,
    start: &[Complex64],
    max_steps: usize,
    tol: f64,
) -> Result<f64> {
    if start.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, found: start.len() });
    }
    let s = norm(start);
    if dim == 0 || s == 0.0 {
        return Ok(0.0);
    }
    let mut basis: Vec<Vec<Complex64>> = vec![start.iter().map(|z| z / s).collect()];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut previous = f64::NAN;
    let steps = max_steps.min(dim);
    for k in 0..steps {
        let mut w = apply(&basis[k]);
        let a = dot(&basis[k], &w).re;
        alphas.push(a);
        // Full reorthogonalization, twice for stability.
        for _ in 0..2 {
            for q in &basis {
                let h = dot(q, &w);
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= h * qi;
                }
            }
        }
        let b = norm(&w);
        let top = *crate::eigen::tridiagonal_eigenvalues(&alphas, &betas)?.last().unwrap();
        if (top - previous).abs() <= tol * top.abs().max(f64::MIN_POSITIVE) || b <= 1e-14 * top.abs() {
            return Ok(top);
        }
        previous = top;
        if k + 1 == steps {
            return Ok(top);
        }
        betas.push(b);
        basis.push(w.iter().map(|z| z / b).collect());
    }
    Ok(previous)
}

/// Deterministic pseudo-random start vector.
pub fn random_unit_vector(dim: usize, seed: u64) -> Vec<Complex64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let v: Vec<Complex64> =
        (0..dim).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    let s = norm(&v);
    v.into_iter().map(|z| z / s).collect()
}

/// Largest singular value of a dense matrix.
pub fn spectral_norm(m: &CMatrix) -> Result<f64> {
    let (r, cols) = m.shape();
    if r == 0 || cols == 0 {
        return Ok(0.0);
    }
    let mh = m.adjoint();
    let start = random_unit_vector(cols, 0x5eed);
    let top = lanczos_top(
        cols,
        |x| {
            let v = CVector::from_column_slice(x);
            let y = &mh * (m * v);
            y.as_slice().to_vec()
        },
        &start,
        300,
        1e-14,
    )?;
    Ok(top.max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kron_layout() {
        let a = CMatrix::from_row_slice(2, 2, &[c(1.0), c(2.0), c(3.0), c(4.0)]);
        let b = CMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]);
        let k = kron(&a, &b);
        assert_eq!(k[(0, 1)], c(1.0));
        assert_eq!(k[(1, 2)], c(2.0));
        assert_eq!(k[(2, 1)], c(3.0));
        assert_eq!(k[(3, 3)], c(0.0));
        assert_eq!(k[(3, 2)], c(4.0));
    }

    #[test]
    fn spectral_norm_of_known_matrices() {
        let d = diag(&[1.0, -3.0, 2.0]);
        assert!((spectral_norm(&d).unwrap() - 3.0).abs() < 1e-12);
        let r = CMatrix::from_row_slice(2, 3, &[c(1.0), c(0.0), c(0.0), c(0.0), c(2.0), c(0.0)]);
        assert!((spectral_norm(&r).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(spectral_norm(&CMatrix::zeros(3, 3)).unwrap(), 0.0);
    }
}
