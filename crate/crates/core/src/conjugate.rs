//! Conjugate operators and the commutator engine.
//!
//! `A_ℕ` acts on the unweighted half-line by
//! `(A_ℕ f)(n) = (i/2)[(n − ½) f(n−1) − (n + ½) f(n+1)]`, so in matrix form
//! `A[n, n−1] = (i/2)(n − ½)` and `A[n−1, n] = −(i/2)(n − ½)`. It is the
//! generator whose commutator with the path Laplacian reproduces
//! `½Δ(4 − Δ)` away from the origin.
//!
//! `A_{m₁}` is the same operator moved to `ℓ²(ℕ, m₁)`; after flattening it
//! coincides with `A_ℕ`. `A_𝒢` adds the magnetic gauge and acts as the
//! identity in the transverse direction.
//!
//! All three are stored sparse. Commutators with a dense Hermitian `H` are
//! formed as `X = H A` by column updates and `i[H, A] = i(X − X^H)`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::graph::{unit_path, wrap_angle, WeightedMagneticGraph};
use crate::linalg::{c, kron, max_abs, spectral_norm, CMatrix};
use crate::operators::{assemble_laplacian, FlattenedHermitian};
use crate::spectral::eigh;
use crate::{alpha, beta};

/// Absolute threshold separating exact zeros from defect entries.
pub const DEFECT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConjugateKind {
    AN,
    Am1,
    AG,
}

/// Half-line sites `lo..=hi` on which the interior identity is checked. Rows
/// below `lo` hold the origin defect, rows above `hi` the truncation boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct InteriorWindow {
    pub lo: usize,
    pub hi: usize,
    pub defect_support: Vec<usize>,
}

impl InteriorWindow {
    pub fn new(lo: usize, hi: usize, n_max: usize) -> Result<Self> {
        if lo < 3 || lo > hi || hi + 4 > n_max {
            return Err(Error::WindowTooSmall { lo, hi, n_max });
        }
        Ok(Self { lo, hi, defect_support: Vec::new() })
    }

    /// `lo = 5`, `hi = n_max − 6`, defect expected on `{0, 1, 2}`.
    pub fn default_for(n_max: usize) -> Result<Self> {
        let mut w = Self::new(5, n_max.saturating_sub(6), n_max)?;
        w.defect_support = vec![0, 1, 2];
        Ok(w)
    }

    pub fn contains(&self, n: usize) -> bool {
        (self.lo..=self.hi).contains(&n)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConjugateOperator {
    pub kind: ConjugateKind,
    pub n1: usize,
    pub n2: usize,
    pub window: InteriorWindow,
    entries: Vec<(usize, usize, Complex64)>,
}

impl ConjugateOperator {
    pub(crate) fn from_entries(
        kind: ConjugateKind,
        n1: usize,
        n2: usize,
        window: InteriorWindow,
        entries: Vec<(usize, usize, Complex64)>,
    ) -> Self {
        Self { kind, n1, n2, window, entries }
    }

    pub fn dim(&self) -> usize {
        self.n1 * self.n2
    }

    /// Nonzero flattened entries `(row, col, value)`.
    pub fn entries(&self) -> &[(usize, usize, Complex64)] {
        &self.entries
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim(), self.dim());
        for &(i, j, a) in &self.entries {
            m[(i, j)] += a;
        }
        m
    }

    pub fn apply(&self, f: &[Complex64]) -> Result<Vec<Complex64>> {
        if f.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: f.len() });
        }
        let mut out = vec![c(0.0); f.len()];
        for &(i, j, a) in &self.entries {
            out[i] += a * f[j];
        }
        Ok(out)
    }

    /// Entry of the operator on `ℓ²(m)` rather than the flattened one:
    /// `F[i, j]·√(m_j/m_i)`, with `m₂` cancelling since the operator is
    /// diagonal in the transverse direction.
    pub fn weighted_entry(&self, i: usize, j: usize) -> Complex64 {
        let f: Complex64 = self.entries.iter().filter(|e| e.0 == i && e.1 == j).map(|e| e.2).sum();
        match self.kind {
            ConjugateKind::AN => f,
            _ => {
                let (ni, nj) = (i / self.n2, j / self.n2);
                f * ((nj as f64 - ni as f64) / 2.0).exp()
            }
        }
    }
}

fn half_line_entries(n_max: usize) -> Vec<(usize, usize, f64)> {
    (1..n_max).flat_map(|n| [(n, n - 1, 0.5 * (n as f64 - 0.5)), (n - 1, n, -0.5 * (n as f64 - 0.5))]).collect()
}

/// Flattened `(T₀⁻¹ A_ℕ T₀) ⊗ id`.
pub(crate) fn a_g_entries(n1: usize, n2: usize, theta1: &[f64]) -> Vec<(usize, usize, Complex64)> {
    let mut out = Vec::with_capacity(2 * n1.saturating_sub(1) * n2);
    for (i, j, a) in half_line_entries(n1) {
        // T₀⁻¹ A T₀ multiplies [n, n−1] by e^{-iθ₁(n−1, n)} and [n−1, n] by the conjugate.
        let t = theta1[i.min(j)];
        let phase = if i > j { Complex64::from_polar(1.0, -t) } else { Complex64::from_polar(1.0, t) };
        let z = Complex64::new(0.0, a) * phase;
        for k in 0..n2 {
            out.push((i * n2 + k, j * n2 + k, z));
        }
    }
    out
}

fn check_len(n_max: usize) -> Result<()> {
    if n_max < 3 {
        return Err(Error::InvalidParameter(format!("conjugate operator needs n_max >= 3, got {n_max}")));
    }
    Ok(())
}

/// Window used when the default one does not fit: degenerate but valid for
/// building the operator itself.
pub(crate) fn window_or_trivial(n_max: usize) -> InteriorWindow {
    InteriorWindow::default_for(n_max).unwrap_or(InteriorWindow { lo: 0, hi: 0, defect_support: Vec::new() })
}

pub fn build_a_n(n_max: usize) -> Result<ConjugateOperator> {
    check_len(n_max)?;
    let entries = a_g_entries(n_max, 1, &vec![0.0; n_max - 1]);
    Ok(ConjugateOperator::from_entries(ConjugateKind::AN, n_max, 1, window_or_trivial(n_max), entries))
}

pub fn build_a_m1(n_max: usize) -> Result<ConjugateOperator> {
    check_len(n_max)?;
    let entries = a_g_entries(n_max, 1, &vec![0.0; n_max - 1]);
    Ok(ConjugateOperator::from_entries(ConjugateKind::Am1, n_max, 1, window_or_trivial(n_max), entries))
}

/// `A_𝒢` for a product graph whose half-line phases are `theta1`.
pub fn build_a_g(g: &WeightedMagneticGraph, theta1: &[f64]) -> Result<ConjugateOperator> {
    let shape = g.shape().ok_or_else(|| Error::InvalidParameter("conjugate operator needs a product graph".into()))?;
    check_len(shape.n1)?;
    if theta1.len() != shape.n1 - 1 {
        return Err(Error::DimensionMismatch { expected: shape.n1 - 1, found: theta1.len() });
    }
    for (n, &t) in theta1.iter().enumerate() {
        let (x, y) = (shape.flat(n, 0).0, shape.flat(n + 1, 0).0);
        let d = wrap_angle(g.theta(x, y) - t);
        if d.abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "theta1 at edge ({n}, {}) is {t} but the graph carries {}",
                n + 1,
                g.theta(x, y)
            )));
        }
    }
    let entries = a_g_entries(shape.n1, shape.n2, theta1);
    Ok(ConjugateOperator::from_entries(ConjugateKind::AG, shape.n1, shape.n2, window_or_trivial(shape.n1), entries))
}

/// `i[H, A]` for dense Hermitian `H` and sparse Hermitian `A`.
pub fn commutator(h: &CMatrix, a: &ConjugateOperator) -> Result<CMatrix> {
    let n = a.dim();
    if h.nrows() != n || h.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, found: h.nrows() });
    }
    let mut x = CMatrix::zeros(n, n);
    for &(i, j, v) in a.entries() {
        let src = h.column(i);
        let mut dst = x.column_mut(j);
        dst.axpy(v, &src, c(1.0));
    }
    let xh = x.adjoint();
    x -= xh;
    x *= Complex64::i();
    Ok(x)
}

/// `i[H, A]` for two dense matrices.
pub fn commutator_dense(h: &CMatrix, a: &CMatrix) -> Result<CMatrix> {
    if h.shape() != a.shape() || h.nrows() != h.ncols() {
        return Err(Error::DimensionMismatch { expected: h.nrows(), found: a.nrows() });
    }
    Ok((h * a - a * h) * Complex64::i())
}

pub fn commutator_flat(h: &FlattenedHermitian, a: &ConjugateOperator) -> Result<FlattenedHermitian> {
    FlattenedHermitian::new(commutator(&h.matrix, a)?, h.log_weights.clone())
}

/// `w(M) = ½(M − α)(β − M)` for a Hermitian matrix, with `M` shifted by `shift`
/// before evaluation.
pub fn w_matrix(m: &CMatrix, shift: f64) -> CMatrix {
    let n = m.nrows();
    let id = CMatrix::identity(n, n);
    let x = m - &id * c(shift);
    let left = &x - &id * c(alpha());
    let right = &id * c(beta()) - &x;
    left * right * c(0.5)
}

fn block(m: &CMatrix, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> CMatrix {
    m.view((rows.start, cols.start), (rows.len(), cols.len())).into_owned()
}

fn numerical_rank(m: &CMatrix) -> Result<usize> {
    if m.nrows() == 0 {
        return Ok(0);
    }
    Ok(eigh(m)?.values.iter().filter(|v| v.abs() > DEFECT_TOL).count())
}

/// Residual of `i[Δ_ℕ, A_ℕ] = ½Δ_ℕ(4 − Δ_ℕ) + K₁` split by region.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentityReport {
    pub n_max: usize,
    pub window: InteriorWindow,
    /// `max |R|` over rows and columns in the window.
    pub interior_residual: f64,
    /// Half-line sites below the window on which `R` is nonzero.
    pub defect_support: Vec<usize>,
    pub defect_rank: usize,
    /// `K₁` restricted to the sites below the window.
    pub defect_block: CMatrix,
    /// `max |R|` over rows above the window.
    pub boundary_residual: f64,
    pub boundary_support: Vec<usize>,
}

impl IdentityReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.interior_residual <= tol
    }
}

fn support_rows(r: &CMatrix, rows: impl Iterator<Item = usize>, n2: usize) -> Vec<usize> {
    let mut out: Vec<usize> =
        rows.filter(|&i| r.row(i).iter().any(|z| z.norm() > DEFECT_TOL)).map(|i| i / n2).collect();
    out.dedup();
    out
}

/// Verifies the half-line identity on the unweighted path of `n_max` sites.
pub fn verify_commutator_identity_n(n_max: usize, window: Option<InteriorWindow>) -> Result<IdentityReport> {
    if n_max < 20 {
        return Err(Error::InvalidParameter(format!("identity check needs n_max >= 20, got {n_max}")));
    }
    let mut window = match window {
        Some(w) => InteriorWindow::new(w.lo, w.hi, n_max)?,
        None => InteriorWindow::default_for(n_max)?,
    };
    let delta = assemble_laplacian(&unit_path(n_max)?).matrix;
    let a = build_a_n(n_max)?;
    let r = commutator(&delta, &a)? - w_matrix(&delta, -alpha());
    let (lo, hi) = (window.lo, window.hi);
    let interior = max_abs(&block(&r, lo..hi + 1, lo..hi + 1));
    let defect_support = support_rows(&r, 0..lo, 1);
    let defect_block = block(&r, 0..lo, 0..lo);
    let defect_rank = numerical_rank(&defect_block)?;
    let tail = block(&r, hi + 1..n_max, 0..n_max);
    let boundary_support = support_rows(&r, hi + 1..n_max, 1);
    window.defect_support = defect_support.clone();
    Ok(IdentityReport {
        n_max,
        window,
        interior_residual: interior,
        defect_support,
        defect_rank,
        defect_block,
        boundary_residual: max_abs(&tail),
        boundary_support,
    })
}

/// `Y_𝒢`: flattened `i[diag(e^{-n}), A_𝒢]` on the half-line, with entries
/// `½(e − 1)e^{-n}(n − ½)` carrying the same gauge phases as `A_𝒢`.
pub fn transverse_commutator_kernel(n1: usize, theta1: &[f64]) -> CMatrix {
    let mut y = CMatrix::zeros(n1, n1);
    let e = std::f64::consts::E;
    for n in 1..n1 {
        let v = 0.5 * (e - 1.0) * (-(n as f64)).exp() * (n as f64 - 0.5);
        let z = Complex64::from_polar(v, -theta1[n - 1]);
        y[(n, n - 1)] = z;
        y[(n - 1, n)] = z.conj();
    }
    y
}

/// Decomposition of `i[Δ_𝒢, A_𝒢]` on a funnel.
#[derive(Debug, Clone, PartialEq)]
pub struct FullCommutatorReport {
    pub window: InteriorWindow,
    /// `max |K_num − Y_𝒢 ⊗ Δ_𝒢₂|` on the window, where
    /// `K_num = C − w(Δ_𝒢₁) ⊗ m₂⁻¹`.
    pub interior_residual: f64,
    /// `(r, ‖K_num‖)` restricted to half-line sites `r..=hi`.
    pub tail_norms: Vec<(usize, f64)>,
    /// `‖K_num‖` on sites `0..=hi`, i.e. without the truncation boundary.
    pub k_norm: f64,
    /// Half-line sites below the window where `K_num` departs from the closed form.
    pub defect_support: Vec<usize>,
}

impl FullCommutatorReport {
    /// Tail norms never increase with `r`.
    pub fn tails_decrease(&self) -> bool {
        self.tail_norms.windows(2).all(|w| w[1].1 <= w[0].1 * (1.0 + 1e-12) + 1e-15)
    }
}

/// Checks the funnel commutator against its closed form.
pub fn verify_full_commutator(
    model: &crate::funnel::FunnelModel,
    window: Option<InteriorWindow>,
    radii: &[usize],
) -> Result<FullCommutatorReport> {
    let n1 = model.n_max();
    let mut window = match window {
        Some(w) => InteriorWindow::new(w.lo, w.hi, n1)?,
        None => InteriorWindow::default_for(n1)?,
    };
    let n2 = model.n2();
    let a = model.conjugate_operator()?;
    let cm = commutator(&model.laplacian().matrix, &a)?;
    let inv_m2: Vec<f64> = model.m2().iter().map(|w| 1.0 / w).collect();
    let k_num = cm - kron(&w_matrix(&model.half_line_matrix(), 0.0), &crate::linalg::diag(&inv_m2));
    let closed = kron(&transverse_commutator_kernel(n1, model.theta1()), &model.second_factor_matrix());
    let r = &k_num - closed;
    let (lo, hi) = (window.lo * n2, (window.hi + 1) * n2);
    let interior = max_abs(&block(&r, lo..hi, lo..hi));
    let defect_support = support_rows(&r, 0..lo, n2);
    window.defect_support = defect_support.clone();
    let mut tail_norms = Vec::with_capacity(radii.len());
    for &rad in radii {
        let start = rad * n2;
        let norm = if start >= hi { 0.0 } else { spectral_norm(&block(&k_num, start..hi, start..hi))? };
        tail_norms.push((rad, norm));
    }
    Ok(FullCommutatorReport {
        window,
        interior_residual: interior,
        tail_norms,
        k_norm: spectral_norm(&block(&k_num, 0..hi, 0..hi))?,
        defect_support,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funnel::FunnelModel;
    use crate::graph::{build_half_line, twisted_product, FunnelFactorSpec, SecondFactorSpec};
    use crate::operators::{conjugate_by_diagonal, magnetic_gauge, product_gauge};

    #[test]
    fn a_n_entries() {
        let a = build_a_n(10).unwrap().to_dense();
        assert_eq!(a[(1, 0)], Complex64::new(0.0, 0.25));
        assert_eq!(a[(0, 1)], Complex64::new(0.0, -0.25));
        assert_eq!(a[(5, 4)], Complex64::new(0.0, 2.25));
        assert!(crate::linalg::hermitian_defect(&a) == 0.0);
        assert!(build_a_n(2).is_err());
    }

    #[test]
    fn a_m1_weighted_entries() {
        let a = build_a_m1(10).unwrap();
        let h = (-0.5f64).exp();
        let z = a.weighted_entry(1, 0);
        assert!((z - Complex64::new(0.0, 0.25 * h)).norm() < 1e-15);
        let z = a.weighted_entry(0, 1);
        assert!((z - Complex64::new(0.0, -0.25 / h)).norm() < 1e-15);
        assert_eq!(a.to_dense(), build_a_n(10).unwrap().to_dense());
    }

    #[test]
    fn a_g_is_gauge_conjugate() {
        let theta: Vec<f64> = (0..11).map(|k| 0.3 * k as f64 - 1.0).collect();
        let g1 = build_half_line(&FunnelFactorSpec::with_theta(12, theta.clone())).unwrap();
        let g2 = SecondFactorSpec { m2: vec![1.0, 2.0], edges: vec![(0, 1, 1.0, 0.5)] }.build().unwrap();
        let g = twisted_product(&g1, &g2).unwrap();
        let a = build_a_g(&g, &theta).unwrap().to_dense();
        let t0 = magnetic_gauge(&theta);
        let inv: Vec<Complex64> = t0.iter().map(|z| z.conj()).collect();
        let base = conjugate_by_diagonal(&build_a_n(12).unwrap().to_dense(), &inv);
        let expect = kron(&base, &CMatrix::identity(2, 2));
        assert!(max_abs(&(a - expect)) < 1e-14);
        assert!(build_a_g(&g, &[0.0; 11]).is_err());
        let _ = product_gauge(&theta, 2);
    }

    #[test]
    fn sparse_commutator_matches_dense() {
        let model = FunnelModel::new(
            &FunnelFactorSpec::with_theta(15, (0..14).map(|k| (k as f64).sin()).collect()),
            &SecondFactorSpec { m2: vec![1.0, 0.7], edges: vec![(0, 1, 1.3, 0.2)] },
        )
        .unwrap();
        let h = model.laplacian().matrix;
        let a = model.conjugate_operator().unwrap();
        let fast = commutator(&h, &a).unwrap();
        let slow = commutator_dense(&h, &a.to_dense()).unwrap();
        assert!(max_abs(&(&fast - &slow)) < 1e-13);
        assert!(crate::linalg::hermitian_defect(&fast) < 1e-13);
    }

    #[test]
    fn half_line_identity() {
        let r = verify_commutator_identity_n(40, None).unwrap();
        assert!(r.interior_residual < 1e-12, "{}", r.interior_residual);
        assert_eq!(r.defect_support, vec![0, 1]);
        assert_eq!(r.defect_rank, 2);
        assert!((r.defect_block[(0, 0)].re + 0.5).abs() < 1e-13);
        assert!((r.defect_block[(0, 1)].re - 0.25).abs() < 1e-13);
        assert!(r.boundary_residual > 1.0);
        assert!(verify_commutator_identity_n(10, None).is_err());
        assert!(matches!(
            verify_commutator_identity_n(40, Some(InteriorWindow { lo: 2, hi: 30, defect_support: vec![] })),
            Err(Error::WindowTooSmall { .. })
        ));
    }

    #[test]
    fn funnel_commutator_closed_form() {
        let model = FunnelModel::new(
            &FunnelFactorSpec::with_theta(30, (0..29).map(|k| 0.4 * (k as f64).cos()).collect()),
            &SecondFactorSpec { m2: vec![1.0, 2.0, 0.5], edges: vec![(0, 1, 1.0, 0.3), (1, 2, 2.0, 0.0)] },
        )
        .unwrap();
        let r = verify_full_commutator(&model, None, &[5, 10, 15]).unwrap();
        assert!(r.interior_residual < 1e-12, "{}", r.interior_residual);
        assert_eq!(r.defect_support, vec![0, 1]);
        assert!(r.tails_decrease());
        assert!(r.tail_norms[2].1 < 1e-4);
    }

    #[test]
    fn edgeless_second_factor_has_no_interior_kernel() {
        let model =
            FunnelModel::new(&FunnelFactorSpec::new(60), &SecondFactorSpec { m2: vec![1.0, 2.0], edges: vec![] })
                .unwrap();
        let r = verify_full_commutator(&model, None, &[3, 10]).unwrap();
        assert!(r.tail_norms[0].1 < 1e-12 && r.tail_norms[1].1 < 1e-12);
        assert!(r.k_norm > 0.1);
    }

    #[test]
    fn window_rules() {
        assert!(InteriorWindow::new(3, 16, 20).is_ok());
        assert!(InteriorWindow::new(3, 17, 20).is_err());
        assert!(InteriorWindow::default_for(10).is_err());
        assert_eq!(InteriorWindow::default_for(20).unwrap().hi, 14);
    }
}
