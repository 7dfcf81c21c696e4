//! Dense Hermitian eigensolver: Householder reduction to a real symmetric
//! tridiagonal, implicit QL with Wilkinson-type shifts, back-transformation.

use nalgebra::{ComplexField, DMatrix};
use num_complex::Complex64;

use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 30;

/// Eigenvalues ascending with matching orthonormal eigenvector columns.
pub(crate) fn hermitian_eigen(a: &DMatrix<Complex64>) -> Result<(Vec<f64>, DMatrix<Complex64>)> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::DimensionMismatch { expected: n, found: a.ncols() });
    }
    if n == 0 {
        return Ok((Vec::new(), DMatrix::zeros(0, 0)));
    }
    if a.iter().all(|z| z.im == 0.0) {
        let r = a.map(|z| z.re);
        let (vals, vecs) = symmetric_eigen(&r)?;
        return Ok((vals, vecs.map(|x| Complex64::new(x, 0.0))));
    }
    let mut work = a.clone();
    let (d, e, reflectors) = tridiagonalize(&mut work);
    let mut z = DMatrix::<f64>::identity(n, n);
    let mut d = d;
    let mut e = e;
    tql2(&mut d, &mut e, &mut z)?;
    let mut v = z.map(|x| Complex64::new(x, 0.0));
    back_transform(&reflectors, &mut v);
    Ok(sorted(d, v))
}

/// Real symmetric input; skips the reduction when already tridiagonal.
pub(crate) fn symmetric_eigen(a: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = a.nrows();
    let mut z = DMatrix::<f64>::identity(n, n);
    let tridiagonal = (0..n).all(|j| (0..n).all(|i| i.abs_diff(j) <= 1 || a[(i, j)] == 0.0));
    if tridiagonal {
        let mut d: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
        let mut e: Vec<f64> = (0..n).map(|i| if i + 1 < n { a[(i + 1, i)] } else { 0.0 }).collect();
        tql2(&mut d, &mut e, &mut z)?;
        return Ok(sorted(d, z));
    }
    let mut work = a.clone();
    let (mut d, mut e, reflectors) = tridiagonalize(&mut work);
    tql2(&mut d, &mut e, &mut z)?;
    back_transform(&reflectors, &mut z);
    Ok(sorted(d, z))
}

/// Eigenvalues only, from a real symmetric tridiagonal (diagonal `d`, off-diagonal `e`).
pub(crate) fn tridiagonal_eigenvalues(d: &[f64], e: &[f64]) -> Result<Vec<f64>> {
    let n = d.len();
    let mut d = d.to_vec();
    let mut ee = vec![0.0; n];
    ee[..n.saturating_sub(1)].copy_from_slice(&e[..n.saturating_sub(1)]);
    let mut z = DMatrix::<f64>::zeros(n, 0);
    tql2(&mut d, &mut ee, &mut z)?;
    d.sort_by(f64::total_cmp);
    Ok(d)
}

struct Reflector<T> {
    v: Vec<T>,
    tau: T,
}

/// Reduce Hermitian `a` in place; returns diagonal, off-diagonal (with a
/// trailing zero) and the reflectors `H_k = I - τ v v^H` acting on rows `k+1..`.
fn tridiagonalize<T>(a: &mut DMatrix<T>) -> (Vec<f64>, Vec<f64>, Vec<Reflector<T>>)
where
    T: ComplexField<RealField = f64> + Copy,
{
    let n = a.nrows();
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    let mut reflectors = Vec::with_capacity(n.saturating_sub(1));
    let zero = T::zero();
    for k in 0..n.saturating_sub(1) {
        let m = n - k - 1;
        let alpha = a[(k + 1, k)];
        let xnorm = (k + 2..n).map(|i| a[(i, k)].modulus_squared()).sum::<f64>().sqrt();
        d[k] = a[(k, k)].real();
        if xnorm == 0.0 && alpha.imaginary() == 0.0 {
            e[k] = alpha.real();
            reflectors.push(Reflector { v: vec![zero; m], tau: zero });
            continue;
        }
        let norm = (alpha.modulus_squared() + xnorm * xnorm).sqrt();
        let beta = if alpha.real() >= 0.0 { -norm } else { norm };
        let tau = (T::from_real(beta) - alpha) / T::from_real(beta);
        let scale = T::one() / (alpha - T::from_real(beta));
        let mut v = Vec::with_capacity(m);
        v.push(T::one());
        for i in k + 2..n {
            v.push(a[(i, k)] * scale);
        }
        e[k] = beta;

        // Trailing block B = a[k+1.., k+1..] <- H^H B H = B - v w^H - w v^H,
        // with y = B v and w = τ y - ½|τ|² (v^H y) v.
        let mut y = vec![zero; m];
        for j in 0..m {
            let vj = v[j];
            if vj == zero {
                continue;
            }
            let col = a.column(k + 1 + j);
            let col = &col.as_slice()[k + 1..];
            for (yi, &bij) in y.iter_mut().zip(col) {
                *yi += bij * vj;
            }
        }
        let vhy: T = v.iter().zip(&y).map(|(&vi, &yi)| vi.conjugate() * yi).fold(zero, |s, t| s + t);
        let half = T::from_real(0.5 * tau.modulus_squared()) * vhy;
        let w: Vec<T> = y.iter().zip(&v).map(|(&yi, &vi)| tau * yi - half * vi).collect();
        for j in 0..m {
            let cw = w[j].conjugate();
            let cv = v[j].conjugate();
            let mut col = a.column_mut(k + 1 + j);
            let col = &mut col.as_mut_slice()[k + 1..];
            for ((bij, &vi), &wi) in col.iter_mut().zip(&v).zip(&w) {
                *bij -= vi * cw + wi * cv;
            }
        }
        reflectors.push(Reflector { v, tau });
    }
    d[n - 1] = a[(n - 1, n - 1)].real();
    (d, e, reflectors)
}

/// `V <- H_0 H_1 ... H_{n-2} V`.
fn back_transform<T>(reflectors: &[Reflector<T>], v: &mut DMatrix<T>)
where
    T: ComplexField<RealField = f64> + Copy,
{
    let n = v.nrows();
    let zero = T::zero();
    for (k, r) in reflectors.iter().enumerate().rev() {
        if r.tau == zero {
            continue;
        }
        for c in 0..v.ncols() {
            let mut col = v.column_mut(c);
            let sub = &mut col.as_mut_slice()[k + 1..n];
            let s = r.v.iter().zip(sub.iter()).map(|(&vi, &x)| vi.conjugate() * x).fold(zero, |a, b| a + b);
            let s = r.tau * s;
            if s == zero {
                continue;
            }
            for (x, &vi) in sub.iter_mut().zip(&r.v) {
                *x -= s * vi;
            }
        }
    }
}

/// Implicit QL on a symmetric tridiagonal. `e[i]` couples `i` and `i+1`,
/// `e[n-1] = 0`. Rotations are accumulated into the columns of `z` (skipped
/// when `z` has no columns).
fn tql2(d: &mut [f64], e: &mut [f64], z: &mut DMatrix<f64>) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    e[n - 1] = 0.0;
    let vectors = z.ncols() == n;
    let rows = z.nrows();
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n {
            if e[m].abs() <= eps * tst1 {
                break;
            }
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > MAX_SWEEPS {
                    return Err(Error::NoConvergence { index: l });
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if vectors {
                        rotate_columns(z, rows, i, c, s);
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

#[inline]
fn rotate_columns(z: &mut DMatrix<f64>, rows: usize, i: usize, c: f64, s: f64) {
    let data = z.as_mut_slice();
    let (left, right) = data.split_at_mut((i + 1) * rows);
    let a = &mut left[i * rows..];
    let b = &mut right[..rows];
    for (x, y) in a.iter_mut().zip(b.iter_mut()) {
        let h = *y;
        *y = s * *x + c * h;
        *x = c * *x - s * h;
    }
}

fn sorted<T: nalgebra::Scalar + Copy>(d: Vec<f64>, v: DMatrix<T>) -> (Vec<f64>, DMatrix<T>) {
    let n = d.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].total_cmp(&d[j]));
    let vals = order.iter().map(|&i| d[i]).collect();
    let vecs = DMatrix::from_fn(v.nrows(), n, |r, c| v[(r, order[c])]);
    (vals, vecs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(n: usize, rng: &mut ChaCha8Rng, real: bool) -> DMatrix<Complex64> {
        let mut a = DMatrix::zeros(n, n);
        for j in 0..n {
            for i in 0..=j {
                let re = rng.random_range(-1.0..1.0);
                let im = if real || i == j { 0.0 } else { rng.random_range(-1.0..1.0) };
                a[(i, j)] = Complex64::new(re, im);
                a[(j, i)] = Complex64::new(re, -im);
            }
        }
        a
    }

    fn check(a: &DMatrix<Complex64>) {
        let (vals, v) = hermitian_eigen(a).unwrap();
        let n = a.nrows();
        let norm = a.iter().map(|z| z.norm()).fold(0.0, f64::max) * n as f64;
        let lam =
            DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(n, vals.iter().map(|&x| Complex64::new(x, 0.0))));
        let back = (a * &v - &v * lam).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(back <= 1e-12 * norm.max(1.0), "backward error {back} at n = {n}");
        let orth = (v.adjoint() * &v - DMatrix::identity(n, n)).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(orth <= 1e-12, "orthogonality {orth} at n = {n}");
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn small_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..25 {
            check(&random_hermitian(n, &mut rng, false));
            check(&random_hermitian(n, &mut rng, true));
        }
    }

    #[test]
    fn known_two_by_two() {
        let a = DMatrix::from_row_slice(
            2,
            2,
            &[Complex64::new(2.0, 0.0), Complex64::new(0.0, 1.0), Complex64::new(0.0, -1.0), Complex64::new(2.0, 0.0)],
        );
        let (vals, _) = hermitian_eigen(&a).unwrap();
        assert!((vals[0] - 1.0).abs() < 1e-14 && (vals[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn diagonal_and_tridiagonal_inputs() {
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, -1.0, 2.0]));
        let (vals, _) = symmetric_eigen(&a).unwrap();
        assert_eq!(vals, vec![-1.0, 2.0, 3.0]);
        // Path Laplacian eigenvalues 2 - 2cos(kπ/n).
        let n = 40;
        let p = DMatrix::from_fn(n, n, |i, j| match i.abs_diff(j) {
            0 => {
                if i == 0 || i == n - 1 {
                    1.0
                } else {
                    2.0
                }
            }
            1 => -1.0,
            _ => 0.0,
        });
        let (vals, _) = symmetric_eigen(&p).unwrap();
        for (k, v) in vals.iter().enumerate() {
            let exact = 2.0 - 2.0 * (k as f64 * std::f64::consts::PI / n as f64).cos();
            assert!((v - exact).abs() < 1e-13);
        }
        let d: Vec<f64> = (0..n).map(|i| p[(i, i)]).collect();
        let e = vec![-1.0; n - 1];
        let only = tridiagonal_eigenvalues(&d, &e).unwrap();
        assert!(only.iter().zip(&vals).all(|(a, b)| (a - b).abs() < 1e-13));
    }

    #[test]
    fn degenerate_spectrum() {
        let n = 12;
        let a = DMatrix::<Complex64>::identity(n, n) * Complex64::new(5.0, 0.0);
        check(&a);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let b = random_hermitian(6, &mut rng, false);
        let mut blk = DMatrix::zeros(12, 12);
        blk.view_mut((0, 0), (6, 6)).copy_from(&b);
        blk.view_mut((6, 6), (6, 6)).copy_from(&b);
        check(&blk);
    }
}
