//! Magnetic Laplacian, its quadratic form, and the weight/gauge unitaries.

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::graph::{degree_vector, GraphBuilder, WeightedMagneticGraph};
use crate::linalg::{c, fmt17, hermitian_defect, max_abs, spectral_norm, CMatrix};

/// Hermitian matrix in unit-weight coordinates plus the weights it came from.
///
/// Weights are kept as logarithms so that funnel truncations far beyond the
/// range of `eⁿ` can still carry them.
#[derive(Debug, Clone, PartialEq)]
pub struct FlattenedHermitian {
    pub matrix: CMatrix,
    pub log_weights: Vec<f64>,
}

impl FlattenedHermitian {
    pub fn new(matrix: CMatrix, log_weights: Vec<f64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() != log_weights.len() {
            return Err(Error::DimensionMismatch { expected: log_weights.len(), found: matrix.nrows() });
        }
        let scale = max_abs(&matrix).max(f64::MIN_POSITIVE);
        let deviation = hermitian_defect(&matrix);
        if deviation > 1e-13 * scale {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(Self { matrix, log_weights })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `m(x)`; overflows to infinity past `x ≈ 709` on funnel truncations.
    pub fn weights(&self) -> Vec<f64> {
        self.log_weights.iter().map(|l| l.exp()).collect()
    }

    pub fn to_triplets(&self) -> String {
        to_triplets(&self.matrix)
    }
}

/// Real multiplication operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalPotential {
    pub values: Vec<f64>,
}

/// `(1 + deg)^{±1/2}`, the weights of the form domain and its dual.
#[derive(Debug, Clone, PartialEq)]
pub struct FormWeight {
    pub plus: Vec<f64>,
    pub minus: Vec<f64>,
}

/// Plain-text `(row, col, re, im)` list of the nonzero entries.
pub fn to_triplets(m: &CMatrix) -> String {
    let mut out = String::new();
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let z = m[(i, j)];
            if z.re != 0.0 || z.im != 0.0 {
                let _ = writeln!(out, "{i} {j} {} {}", fmt17(z.re), fmt17(z.im));
            }
        }
    }
    out
}

/// `(Δf)(x) = (1/m(x)) Σ_y E(x,y)(f(x) − e^{iθ(x,y)} f(y))`.
pub fn apply_laplacian(g: &WeightedMagneticGraph, f: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = g.vertex_count();
    if f.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: f.len() });
    }
    Ok((0..n)
        .map(|x| {
            let s: Complex64 = g
                .neighbors(x)
                .iter()
                .map(|&y| g.edge_weight(x, y) * (f[x] - Complex64::from_polar(1.0, g.theta(x, y)) * f[y]))
                .sum();
            s / g.weight(x)
        })
        .collect())
}

/// Matrix of Δ acting on `ℓ²(V, m)` in its own coordinates (not Hermitian
/// unless `m` is constant).
pub fn laplacian_kernel(g: &WeightedMagneticGraph) -> CMatrix {
    let n = g.vertex_count();
    let deg = degree_vector(g);
    let mut k = CMatrix::zeros(n, n);
    for x in 0..n {
        k[(x, x)] = c(deg[x]);
        for &y in g.neighbors(x) {
            k[(x, y)] = -Complex64::from_polar(g.edge_weight(x, y) / g.weight(x), g.theta(x, y));
        }
    }
    k
}

/// Unit-weight representation: `deg(x)` on the diagonal and
/// `−E e^{iθ}/√(m(x)m(y))` off it.
pub fn assemble_laplacian(g: &WeightedMagneticGraph) -> FlattenedHermitian {
    let n = g.vertex_count();
    let deg = degree_vector(g);
    let mut k = CMatrix::zeros(n, n);
    for x in 0..n {
        k[(x, x)] = c(deg[x]);
    }
    for (x, y, e) in g.edges() {
        let z = Complex64::from_polar(e.weight / (g.weight(x).sqrt() * g.weight(y).sqrt()), e.theta);
        k[(x, y)] = -z;
        k[(y, x)] = -z.conj();
    }
    FlattenedHermitian { matrix: k, log_weights: g.weights().iter().map(|m| m.ln()).collect() }
}

/// `½ Σ_{x,y} E(x,y)|f(x) − e^{iθ}f(y)|²`, each unordered edge once.
pub fn quadratic_form(g: &WeightedMagneticGraph, f: &[Complex64]) -> Result<f64> {
    if f.len() != g.vertex_count() {
        return Err(Error::DimensionMismatch { expected: g.vertex_count(), found: f.len() });
    }
    Ok(g.edges().map(|(x, y, e)| e.weight * (f[x] - Complex64::from_polar(1.0, e.theta) * f[y]).norm_sqr()).sum())
}

/// New graph with weights `m'` and rescaled edges, plus the potential `W`
/// with `Δ' = T(Δ − W)T⁻¹`, `T f = √(m/m') f`.
pub fn weight_transform(
    g: &WeightedMagneticGraph,
    m_new: &[f64],
) -> Result<(WeightedMagneticGraph, DiagonalPotential)> {
    let n = g.vertex_count();
    if m_new.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: m_new.len() });
    }
    if let Some(bad) = m_new.iter().find(|&&w| !(w > 0.0 && w.is_finite())) {
        return Err(Error::InvalidParameter(format!("new weight {bad} is not positive")));
    }
    let m = g.weights();
    let mut b = GraphBuilder::new(m_new.to_vec());
    if let Some(s) = g.shape() {
        b = b.shape(s);
    }
    for (x, y, e) in g.edges() {
        let w = e.weight * ((m_new[x] / m[x]).sqrt() * (m_new[y] / m[y]).sqrt());
        b = b.edge(x, y, w, e.theta);
    }
    let values = (0..n)
        .map(|x| {
            g.neighbors(x)
                .iter()
                .map(|&y| g.edge_weight(x, y) * (1.0 - ((m_new[y] / m[y]) / (m_new[x] / m[x])).sqrt()))
                .sum::<f64>()
                / m[x]
        })
        .collect();
    Ok((b.build()?, DiagonalPotential { values }))
}

/// Diagonal of `T₀`: `e^{i Σ_{k<n} θ₁(k,k+1)}`, phase 0 at the origin.
pub fn magnetic_gauge(theta1: &[f64]) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(theta1.len() + 1);
    let mut phase = 0.0;
    out.push(c(1.0));
    for &t in theta1 {
        phase += t;
        out.push(Complex64::from_polar(1.0, phase));
    }
    out
}

/// `T₀ ⊗ id` on a product with `n2` transverse vertices.
pub fn product_gauge(theta1: &[f64], n2: usize) -> Vec<Complex64> {
    magnetic_gauge(theta1).into_iter().flat_map(|z| std::iter::repeat_n(z, n2)).collect()
}

/// `D M D⁻¹` for a diagonal `D`.
pub fn conjugate_by_diagonal(m: &CMatrix, d: &[Complex64]) -> CMatrix {
    CMatrix::from_fn(m.nrows(), m.ncols(), |i, j| d[i] * m[(i, j)] / d[j])
}

pub fn form_weight(g: &WeightedMagneticGraph) -> FormWeight {
    let deg = degree_vector(g);
    FormWeight {
        plus: deg.iter().map(|d| (1.0 + d).sqrt()).collect(),
        minus: deg.iter().map(|d| 1.0 / (1.0 + d).sqrt()).collect(),
    }
}

/// `‖(1+deg)^{-1/2} M (1+deg)^{-1/2}‖`, the 𝒢 → 𝒢* norm proxy.
pub fn gstar_norm(g: &WeightedMagneticGraph, m: &CMatrix) -> Result<f64> {
    let w = form_weight(g).minus;
    if m.nrows() != w.len() || m.ncols() != w.len() {
        return Err(Error::DimensionMismatch { expected: w.len(), found: m.nrows() });
    }
    let scaled = CMatrix::from_fn(w.len(), w.len(), |i, j| m[(i, j)] * (w[i] * w[j]));
    spectral_norm(&scaled)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_half_line, twisted_product, unit_path, FunnelFactorSpec, SecondFactorSpec};
    use crate::spectral::eigh;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_vec(n: usize, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
        (0..n).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect()
    }

    #[test]
    fn laplacian_on_unit_path() {
        let g = unit_path(2).unwrap();
        let out = apply_laplacian(&g, &[c(1.0), c(0.0)]).unwrap();
        assert_eq!(out, vec![c(1.0), c(-1.0)]);
        let g = unit_path(6).unwrap();
        let mut d0 = vec![c(0.0); 6];
        d0[0] = c(1.0);
        let out = apply_laplacian(&g, &d0).unwrap();
        assert_eq!(&out[..3], &[c(1.0), c(-1.0), c(0.0)]);
        assert!(apply_laplacian(&g, &d0[..3]).is_err());
    }

    #[test]
    fn constants_are_harmonic_without_field() {
        let g1 = build_half_line(&FunnelFactorSpec::new(6)).unwrap();
        let g2 = SecondFactorSpec { m2: vec![1.0, 2.0, 0.5], edges: vec![(0, 1, 1.0, 0.0), (1, 2, 3.0, 0.0)] }
            .build()
            .unwrap();
        let g = twisted_product(&g1, &g2).unwrap();
        let ones = vec![c(1.0); g.vertex_count()];
        let out = apply_laplacian(&g, &ones).unwrap();
        assert!(out.iter().all(|z| z.norm() < 1e-12));
        assert!(quadratic_form(&g, &ones).unwrap().abs() < 1e-20);

        let flat = assemble_laplacian(&g);
        let sd = eigh(&flat.matrix).unwrap();
        assert!(sd.values[0].abs() < 1e-12);
        let root: Vec<f64> = g.weights().iter().map(|m| m.sqrt()).collect();
        let s = root.iter().map(|r| r * r).sum::<f64>().sqrt();
        let overlap: Complex64 = (0..root.len()).map(|i| sd.vectors[(i, 0)] * (root[i] / s)).sum();
        assert!((overlap.norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn two_site_half_line_matrix() {
        let g = build_half_line(&FunnelFactorSpec::new(2)).unwrap();
        let m = assemble_laplacian(&g).matrix;
        assert!((m[(0, 0)].re - 0.5f64.exp()).abs() < 1e-15);
        assert!((m[(1, 1)].re - (-0.5f64).exp()).abs() < 1e-15);
        assert!((m[(0, 1)] - c(-1.0)).norm() < 1e-15);
        let sd = eigh(&m).unwrap();
        assert!(sd.values[0].abs() < 1e-15);
        assert!((sd.values[1] - 2.255252).abs() < 1e-6);
    }

    #[test]
    fn form_matches_matrix_and_is_bounded_by_degree() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g1 = build_half_line(&FunnelFactorSpec::with_theta(5, vec![0.3, -1.0, 2.0, 0.1])).unwrap();
        let g2 = SecondFactorSpec { m2: vec![1.0, 0.7], edges: vec![(0, 1, 0.9, 0.6)] }.build().unwrap();
        let g = twisted_product(&g1, &g2).unwrap();
        let flat = assemble_laplacian(&g);
        let deg = degree_vector(&g);
        let m = g.weights();
        for _ in 0..200 {
            let f = random_vec(g.vertex_count(), &mut rng);
            let fv = crate::linalg::CVector::from_column_slice(&f);
            let lhs = fv.dotc(&(&flat.matrix * &fv)).re;
            let g_f: Vec<Complex64> = f.iter().zip(m).map(|(z, w)| z / w.sqrt()).collect();
            let q = quadratic_form(&g, &g_f).unwrap();
            assert!((lhs - q).abs() <= 1e-12 * q.max(1.0));
            let bound: f64 = (0..f.len()).map(|x| 2.0 * deg[x] * m[x] * g_f[x].norm_sqr()).sum();
            assert!(q <= bound * (1.0 + 1e-12));
        }
    }

    #[test]
    fn delta_on_unit_pair_has_form_one() {
        let g = unit_path(2).unwrap();
        assert_eq!(quadratic_form(&g, &[c(1.0), c(0.0)]).unwrap(), 1.0);
    }

    #[test]
    fn weight_transform_trivial_cases() {
        let g = build_half_line(&FunnelFactorSpec::new(4)).unwrap();
        let (same, w) = weight_transform(&g, g.weights()).unwrap();
        assert!(w.values.iter().all(|v| v.abs() < 1e-15));
        for (x, y, e) in g.edges() {
            assert!((same.edge_weight(x, y) - e.weight).abs() < 1e-13 * e.weight);
        }
        let scaled: Vec<f64> = g.weights().iter().map(|m| 3.0 * m).collect();
        let (g3, w) = weight_transform(&g, &scaled).unwrap();
        assert!(w.values.iter().all(|v| v.abs() < 1e-15));
        for (x, y, e) in g.edges() {
            assert!((g3.edge_weight(x, y) - 3.0 * e.weight).abs() < 1e-12 * e.weight);
        }
        assert!(weight_transform(&g, &[1.0, 0.0, 1.0, 1.0]).is_err());
    }

    /// Oracle: `T Δ T⁻¹` by explicit matrix products from the weighted kernel.
    fn conjugated(g: &WeightedMagneticGraph, m_new: &[f64]) -> CMatrix {
        let k = laplacian_kernel(g);
        let t: Vec<Complex64> = g.weights().iter().zip(m_new).map(|(m, mn)| c((m / mn).sqrt())).collect();
        conjugate_by_diagonal(&k, &t)
    }

    #[test]
    fn weight_transform_identity() {
        let g1 = build_half_line(&FunnelFactorSpec::with_theta(5, vec![0.2, 0.4, -0.1, 1.0])).unwrap();
        let g2 = SecondFactorSpec { m2: vec![2.0, 0.5], edges: vec![(0, 1, 1.3, -0.7)] }.build().unwrap();
        let g = twisted_product(&g1, &g2).unwrap();
        let m_new: Vec<f64> = (0..g.vertex_count()).map(|i| 0.5 + (i as f64 * 0.37).sin().abs()).collect();
        let (gp, w) = weight_transform(&g, &m_new).unwrap();
        let lhs = laplacian_kernel(&gp);
        let mut rhs = laplacian_kernel(&g);
        for x in 0..g.vertex_count() {
            rhs[(x, x)] -= c(w.values[x]);
        }
        let t: Vec<Complex64> = g.weights().iter().zip(&m_new).map(|(m, mn)| c((m / mn).sqrt())).collect();
        let rhs = conjugate_by_diagonal(&rhs, &t);
        let scale = max_abs(&lhs);
        assert!(max_abs(&(lhs - rhs)) <= 1e-12 * scale);

        // Round trip m -> m' -> m.
        let (back, _) = weight_transform(&gp, g.weights()).unwrap();
        let a = assemble_laplacian(&g).matrix;
        let b = assemble_laplacian(&back).matrix;
        assert!(max_abs(&(a - b)) <= 1e-12);
    }

    #[test]
    fn flattening_half_line_gives_shifted_neumann() {
        let g = build_half_line(&FunnelFactorSpec::new(4)).unwrap();
        let flat = conjugated(&g, &[1.0; 4]);
        let alpha = crate::alpha();
        let neumann = assemble_laplacian(&unit_path(4).unwrap()).matrix;
        for i in 0..3 {
            for j in 0..4 {
                let mut expect = neumann[(i, j)];
                if i == j {
                    expect += c(alpha);
                    if i == 0 {
                        expect += c(1.0 - (-0.5f64).exp());
                    }
                }
                assert!((flat[(i, j)] - expect).norm() < 1e-12, "{i} {j}");
            }
        }
        assert!(((1.0 - (-0.5f64).exp()) - 0.393469).abs() < 1e-6);
        // Both displayed forms of the constant agree.
        assert!(((-0.5f64).exp() * (0.5f64.exp() - 1.0) - (1.0 - (-0.5f64).exp())).abs() < 1e-16);
    }

    #[test]
    fn gauge_examples() {
        assert_eq!(magnetic_gauge(&[0.0, 0.0]), vec![c(1.0); 3]);
        let g = magnetic_gauge(&[std::f64::consts::FRAC_PI_2]);
        assert!((g[1] - Complex64::new(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn gauge_removes_half_line_phases() {
        let theta = vec![0.5, -1.2, 2.5, 0.3];
        let g1 = build_half_line(&FunnelFactorSpec::with_theta(5, theta.clone())).unwrap();
        let g1bar = build_half_line(&FunnelFactorSpec::new(5)).unwrap();
        let g2 = SecondFactorSpec { m2: vec![1.0, 1.5], edges: vec![(0, 1, 0.8, 0.9)] }.build().unwrap();
        let g = twisted_product(&g1, &g2).unwrap();
        let gbar = twisted_product(&g1bar, &g2).unwrap();
        let t = product_gauge(&theta, 2);
        let lhs = conjugate_by_diagonal(&assemble_laplacian(&g).matrix, &t);
        let rhs = assemble_laplacian(&gbar).matrix;
        assert!(max_abs(&(lhs - rhs)) <= 1e-12);
    }

    #[test]
    fn gstar_norm_examples() {
        let g = build_half_line(&FunnelFactorSpec::new(6)).unwrap();
        let n = g.vertex_count();
        let id = CMatrix::identity(n, n);
        let expect = degree_vector(&g).iter().map(|d| 1.0 / (1.0 + d)).fold(0.0, f64::max);
        assert!((gstar_norm(&g, &id).unwrap() - expect).abs() < 1e-12);
        assert!(gstar_norm(&g, &assemble_laplacian(&g).matrix).unwrap() <= 2.0);
        assert_eq!(gstar_norm(&g, &CMatrix::zeros(n, n)).unwrap(), 0.0);
        assert!(gstar_norm(&g, &CMatrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn triplets_round_trip() {
        let g = build_half_line(&FunnelFactorSpec::with_theta(3, vec![0.4, 0.0])).unwrap();
        let flat = assemble_laplacian(&g);
        let text = flat.to_triplets();
        let mut back = CMatrix::zeros(3, 3);
        for line in text.lines() {
            let p: Vec<&str> = line.split_whitespace().collect();
            let (i, j): (usize, usize) = (p[0].parse().unwrap(), p[1].parse().unwrap());
            back[(i, j)] = Complex64::new(p[2].parse().unwrap(), p[3].parse().unwrap());
        }
        assert_eq!(back, flat.matrix);
    }
}
