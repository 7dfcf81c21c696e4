//! Weighted resolvent ladder and time evolution.
//!
//! Both probes reuse one eigendecomposition `H = V diag(λ) V^H`. The weighted
//! resolvent `D (H − λ − iρ)⁻¹ D` becomes `B diag(g) B^H` with `B = D V` and
//! `g_i = 1/(λ_i − λ − iρ)`; its norm is the top singular value, found by
//! Lanczos on the normal operator. Propagation uses `V e^{-itλ} V^H f`
//! restricted to the spectral band of interest.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::graph::{ProductShape, VertexId};
use crate::japanese_bracket;
use crate::linalg::{c, fmt17, lanczos_top, random_unit_vector, CMatrix, CVector};
use crate::mourre::max_group_velocity;
use crate::spectral::{in_closed, SpectralData};

/// Growth factor across the ρ ladder above which λ is flagged.
pub const DIVERGENCE_TAU: f64 = 5.0;
/// Growth factor below which an interior λ counts as bounded.
pub const INTERIOR_CAP: f64 = 2.0;

const LANCZOS_STEPS: usize = 400;
const LANCZOS_TOL: f64 = 1e-10;

/// Columns of a dense matrix, stored real when possible.
#[derive(Debug, Clone)]
enum Basis {
    Real(DMatrix<f64>),
    Complex(CMatrix),
}

fn split(x: &[Complex64]) -> (DVector<f64>, DVector<f64>) {
    (DVector::from_iterator(x.len(), x.iter().map(|z| z.re)), DVector::from_iterator(x.len(), x.iter().map(|z| z.im)))
}

fn join(re: DVector<f64>, im: DVector<f64>) -> Vec<Complex64> {
    re.iter().zip(im.iter()).map(|(&a, &b)| Complex64::new(a, b)).collect()
}

impl Basis {
    /// Columns `cols` of `V`, rows scaled by `row_scale`.
    fn new(v: &CMatrix, cols: &[usize], row_scale: &[f64]) -> Self {
        let real = cols.iter().all(|&k| v.column(k).iter().all(|z| z.im == 0.0));
        if real {
            Basis::Real(DMatrix::from_fn(v.nrows(), cols.len(), |i, j| row_scale[i] * v[(i, cols[j])].re))
        } else {
            Basis::Complex(CMatrix::from_fn(v.nrows(), cols.len(), |i, j| v[(i, cols[j])] * row_scale[i]))
        }
    }

    fn rows(&self) -> usize {
        match self {
            Basis::Real(m) => m.nrows(),
            Basis::Complex(m) => m.nrows(),
        }
    }

    /// `B y`.
    fn apply(&self, y: &[Complex64]) -> Vec<Complex64> {
        match self {
            Basis::Real(m) => {
                let (re, im) = split(y);
                join(m * re, m * im)
            }
            Basis::Complex(m) => (m * CVector::from_column_slice(y)).as_slice().to_vec(),
        }
    }

    /// `B^H x`.
    fn apply_adjoint(&self, x: &[Complex64]) -> Vec<Complex64> {
        match self {
            Basis::Real(m) => {
                let (re, im) = split(x);
                join(m.tr_mul(&re), m.tr_mul(&im))
            }
            Basis::Complex(m) => m.ad_mul(&CVector::from_column_slice(x)).as_slice().to_vec(),
        }
    }
}

/// `⟨x₁⟩^{-s}` per flat vertex.
pub fn lambda_weights(shape: ProductShape, s: f64) -> Vec<f64> {
    (0..shape.len()).map(|x| japanese_bracket(shape.split(VertexId(x)).0 as f64).powf(-s)).collect()
}

/// `⟨x₁⟩^{-s}(1 + deg)^{1/2}`: the diagonal surrogate for weighting between
/// the form domain and its dual.
pub fn form_weights(shape: ProductShape, s: f64, degree: &[f64]) -> Result<Vec<f64>> {
    if degree.len() != shape.len() {
        return Err(Error::DimensionMismatch { expected: shape.len(), found: degree.len() });
    }
    Ok(lambda_weights(shape, s).into_iter().zip(degree).map(|(w, d)| w * (1.0 + d).sqrt()).collect())
}

/// Precomputed `B = D V` for repeated resolvent norms.
#[derive(Debug, Clone)]
pub struct ResolventProbe {
    values: Vec<f64>,
    basis: Basis,
}

impl ResolventProbe {
    pub fn new(sd: &SpectralData, weights: &[f64]) -> Result<Self> {
        if weights.len() != sd.dim() {
            return Err(Error::DimensionMismatch { expected: sd.dim(), found: weights.len() });
        }
        let cols: Vec<usize> = (0..sd.dim()).collect();
        Ok(Self { values: sd.values.clone(), basis: Basis::new(&sd.vectors, &cols, weights) })
    }

    /// `‖D (H − λ − iρ)⁻¹ D‖`.
    pub fn norm(&self, lambda: f64, rho: f64) -> Result<f64> {
        if !(rho > 0.0) {
            return Err(Error::InvalidParameter(format!("rho = {rho} must be positive")));
        }
        let n = self.basis.rows();
        if n == 0 {
            return Ok(0.0);
        }
        let g: Vec<Complex64> = self.values.iter().map(|&l| c(1.0) / Complex64::new(l - lambda, -rho)).collect();
        let forward = |x: &[Complex64], conj: bool| -> Vec<Complex64> {
            let mut y = self.basis.apply_adjoint(x);
            for (yi, gi) in y.iter_mut().zip(&g) {
                *yi *= if conj { gi.conj() } else { *gi };
            }
            self.basis.apply(&y)
        };
        let start = random_unit_vector(n, 0x1a9);
        let top = lanczos_top(n, |x| forward(&forward(x, false), true), &start, LANCZOS_STEPS, LANCZOS_TOL)?;
        Ok(top.max(0.0).sqrt())
    }
}

/// `‖D (H − λ − iρ)⁻¹ D‖` with `D = ⟨x₁⟩^{-s}`, or the form-weighted
/// surrogate when `degree` is given.
pub fn weighted_resolvent_norm(
    sd: &SpectralData,
    shape: ProductShape,
    lambda: f64,
    rho: f64,
    s: f64,
    degree: Option<&[f64]>,
) -> Result<f64> {
    let w = match degree {
        Some(d) => form_weights(shape, s, d)?,
        None => lambda_weights(shape, s),
    };
    ResolventProbe::new(sd, &w)?.norm(lambda, rho)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LapProbeResult {
    pub s: f64,
    pub form_weighted: bool,
    pub lambda_grid: Vec<f64>,
    pub rho_ladder: Vec<f64>,
    /// `norms[i][j]` at `lambda_grid[i]`, `rho_ladder[j]`.
    pub norms: Vec<Vec<f64>>,
    /// Last over first norm along the ladder.
    pub growth: Vec<f64>,
    pub flagged: Vec<bool>,
}

impl LapProbeResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("lambda,rho,norm,growth,flagged\n");
        for (i, &l) in self.lambda_grid.iter().enumerate() {
            for (j, &r) in self.rho_ladder.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    fmt17(l),
                    fmt17(r),
                    fmt17(self.norms[i][j]),
                    fmt17(self.growth[i]),
                    self.flagged[i]
                );
            }
        }
        out
    }
}

pub fn lap_probe(
    probe: &ResolventProbe,
    s: f64,
    form_weighted: bool,
    lambda_grid: &[f64],
    rho_ladder: &[f64],
    tau: f64,
) -> Result<LapProbeResult> {
    if rho_ladder.is_empty() || rho_ladder.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidParameter("rho ladder must be non-empty and strictly decreasing".into()));
    }
    if lambda_grid.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::InvalidParameter("lambda grid must be sorted".into()));
    }
    let mut norms = Vec::with_capacity(lambda_grid.len());
    for &l in lambda_grid {
        norms.push(rho_ladder.iter().map(|&r| probe.norm(l, r)).collect::<Result<Vec<f64>>>()?);
    }
    let growth: Vec<f64> = norms.iter().map(|row| row[row.len() - 1] / row[0]).collect();
    let flagged = growth.iter().map(|&g| g > tau).collect();
    Ok(LapProbeResult {
        s,
        form_weighted,
        lambda_grid: lambda_grid.to_vec(),
        rho_ladder: rho_ladder.to_vec(),
        norms,
        growth,
        flagged,
    })
}

/// `e^{-itH} f` for each `t` in the grid.
pub fn evolve(sd: &SpectralData, f: &[Complex64], t_grid: &[f64]) -> Result<Vec<Vec<Complex64>>> {
    let all: Vec<usize> = (0..sd.dim()).collect();
    let ev = BandEvolution::new(sd, &all, f, &vec![1.0; sd.dim()])?;
    Ok(t_grid.iter().map(|&t| ev.state(t)).collect())
}

/// `f` expanded in the eigenvectors with indices `cols`.
struct BandEvolution {
    values: Vec<f64>,
    coeffs: Vec<Complex64>,
    basis: Basis,
}

impl BandEvolution {
    fn new(sd: &SpectralData, cols: &[usize], f: &[Complex64], row_scale: &[f64]) -> Result<Self> {
        if f.len() != sd.dim() {
            return Err(Error::DimensionMismatch { expected: sd.dim(), found: f.len() });
        }
        let plain = Basis::new(&sd.vectors, cols, &vec![1.0; sd.dim()]);
        let coeffs = plain.apply_adjoint(f);
        let basis = Basis::new(&sd.vectors, cols, row_scale);
        Ok(Self { values: cols.iter().map(|&k| sd.values[k]).collect(), coeffs, basis })
    }

    fn state(&self, t: f64) -> Vec<Complex64> {
        let y: Vec<Complex64> =
            self.values.iter().zip(&self.coeffs).map(|(&l, &a)| a * Complex64::from_polar(1.0, -t * l)).collect();
        self.basis.apply(&y)
    }
}

/// Longest time before a wave packet in `[a, b]` can return from the far
/// edge: `n_max / (2 v_max)`.
pub fn recurrence_time(n_max: usize, a: f64, b: f64) -> f64 {
    n_max as f64 / (2.0 * max_group_velocity(a, b))
}

fn time_grid(t_max: f64, steps: usize) -> Result<Vec<f64>> {
    if steps == 0 || !steps.is_multiple_of(2) || !(t_max > 0.0) {
        return Err(Error::InvalidParameter(format!("need t_max > 0 and an even step count, got {t_max}, {steps}")));
    }
    Ok((0..=steps).map(|k| t_max * k as f64 / steps as f64).collect())
}

fn guard(shape: ProductShape, band: (f64, f64), t_max: f64) -> Result<()> {
    let limit = recurrence_time(shape.n1, band.0, band.1);
    if t_max >= limit {
        return Err(Error::Envelope(format!("T = {t_max} reaches the recurrence time {limit:.3} of this truncation")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropagationResult {
    pub times: Vec<f64>,
    /// `‖D e^{-itH} E f‖²`.
    pub integrand: Vec<f64>,
    /// Trapezoidal `∫₀ᵗ`.
    pub cumulative: Vec<f64>,
    /// `‖E f‖²`.
    pub projected_mass: f64,
}

impl PropagationResult {
    /// `I(T)/I(T/2)`; `None` when `I(T/2)` vanishes.
    pub fn ratio(&self) -> Option<f64> {
        let half = self.cumulative[(self.cumulative.len() - 1) / 2];
        let full = *self.cumulative.last()?;
        (half > 0.0).then(|| full / half)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,integrand,cumulative\n");
        for ((t, i), c) in self.times.iter().zip(&self.integrand).zip(&self.cumulative) {
            let _ = writeln!(out, "{},{},{}", fmt17(*t), fmt17(*i), fmt17(*c));
        }
        out
    }
}

/// `∫₀ᵀ ‖⟨x₁⟩^{-s} e^{-itH} E_{[a,b]}(H) f‖² dt` on an even grid of `steps` intervals.
pub fn kato_smoothness_integral(
    sd: &SpectralData,
    shape: ProductShape,
    band: (f64, f64),
    f: &[Complex64],
    s: f64,
    t_max: f64,
    steps: usize,
) -> Result<PropagationResult> {
    guard(shape, band, t_max)?;
    let times = time_grid(t_max, steps)?;
    let cols = sd.indices_in(band.0, band.1);
    let ev = BandEvolution::new(sd, &cols, f, &lambda_weights(shape, s))?;
    let projected_mass = ev.coeffs.iter().map(|z| z.norm_sqr()).sum();
    let integrand: Vec<f64> = times.iter().map(|&t| ev.state(t).iter().map(|z| z.norm_sqr()).sum()).collect();
    let mut cumulative = Vec::with_capacity(times.len());
    let mut acc = 0.0;
    cumulative.push(0.0);
    for k in 1..times.len() {
        acc += 0.5 * (integrand[k] + integrand[k - 1]) * (times[k] - times[k - 1]);
        cumulative.push(acc);
    }
    Ok(PropagationResult { times, integrand, cumulative, projected_mass })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayTraces {
    pub times: Vec<f64>,
    pub probes: Vec<usize>,
    /// `traces[p][k] = |(e^{-it_k H} f)(probes[p])|`.
    pub traces: Vec<Vec<f64>>,
    /// Max over `[0, T/2]` per probe.
    pub early_max: Vec<f64>,
    /// Max over `[T/2, T]` per probe.
    pub late_max: Vec<f64>,
}

impl DecayTraces {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for p in &self.probes {
            let _ = write!(out, ",v{p}");
        }
        out.push('\n');
        for (k, t) in self.times.iter().enumerate() {
            out.push_str(&fmt17(*t));
            for tr in &self.traces {
                let _ = write!(out, ",{}", fmt17(tr[k]));
            }
            out.push('\n');
        }
        out
    }
}

/// Pointwise traces of `e^{-itH} E f`; `band = None` evolves without projection.
#[allow(clippy::too_many_arguments)]
pub fn pointwise_decay(
    sd: &SpectralData,
    shape: ProductShape,
    band: Option<(f64, f64)>,
    f: &[Complex64],
    probes: &[usize],
    t_max: f64,
    steps: usize,
) -> Result<DecayTraces> {
    if let Some(&p) = probes.iter().find(|&&p| p >= sd.dim()) {
        return Err(Error::InvalidParameter(format!("probe vertex {p} outside 0..{}", sd.dim())));
    }
    let cols = match band {
        Some(b) => {
            guard(shape, b, t_max)?;
            sd.indices_in(b.0, b.1)
        }
        None => (0..sd.dim()).collect(),
    };
    let times = time_grid(t_max, steps)?;
    let ev = BandEvolution::new(sd, &cols, f, &vec![1.0; sd.dim()])?;
    let mut traces = vec![Vec::with_capacity(times.len()); probes.len()];
    for &t in &times {
        let psi = ev.state(t);
        for (tr, &p) in traces.iter_mut().zip(probes) {
            tr.push(psi[p].norm());
        }
    }
    let mid = steps / 2;
    let max = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
    Ok(DecayTraces {
        early_max: traces.iter().map(|tr| max(&tr[..=mid])).collect(),
        late_max: traces.iter().map(|tr| max(&tr[mid..])).collect(),
        times,
        probes: probes.to_vec(),
        traces,
    })
}

/// `E_{[a,b]} f`, normalized; `None` if the projection vanishes.
pub fn band_projected(sd: &SpectralData, f: &[Complex64], a: f64, b: f64) -> Result<Option<Vec<Complex64>>> {
    if f.len() != sd.dim() {
        return Err(Error::DimensionMismatch { expected: sd.dim(), found: f.len() });
    }
    let cols: Vec<usize> = (0..sd.dim()).filter(|&k| in_closed(sd.values[k], a, b)).collect();
    let basis = Basis::new(&sd.vectors, &cols, &vec![1.0; sd.dim()]);
    let g = basis.apply(&basis.apply_adjoint(f));
    let norm = g.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    Ok((norm > 1e-300).then(|| g.into_iter().map(|z| z / norm).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funnel::FunnelModel;
    use crate::spectral::eigh;

    fn diag_sd(values: &[f64]) -> SpectralData {
        eigh(&crate::linalg::diag(values)).unwrap()
    }

    #[test]
    fn scalar_resolvent() {
        let sd = diag_sd(&[0.0]);
        let n = weighted_resolvent_norm(&sd, ProductShape::new(1, 1), 0.0, 1.0, 1.0, None).unwrap();
        assert!((n - 1.0).abs() < 1e-12);
        assert!(weighted_resolvent_norm(&sd, ProductShape::new(1, 1), 0.0, 0.0, 1.0, None).is_err());
    }

    #[test]
    fn two_by_two_hand_case() {
        let sd = diag_sd(&[0.0, 10.0]);
        let n = weighted_resolvent_norm(&sd, ProductShape::new(2, 1), 0.0, 0.1, 1.0, None).unwrap();
        assert!((n - 10.0).abs() < 1e-9, "{n}");
    }

    #[test]
    fn resolvent_bound_and_gap() {
        let model = FunnelModel::half_line(80).unwrap();
        let sd = eigh(&model.laplacian().matrix).unwrap();
        let probe = ResolventProbe::new(&sd, &lambda_weights(model.shape(), 0.7)).unwrap();
        for rho in [1.0, 0.1, 0.01] {
            assert!(probe.norm(2.0, rho).unwrap() <= 1.0 / rho * (1.0 + 1e-10));
        }
        let dist = sd.values[0] + 1.0;
        assert!(probe.norm(-1.0, 1e-3).unwrap() <= 1.0 / dist + 1e-9);
    }

    #[test]
    fn ladder_validation() {
        let sd = diag_sd(&[0.0, 1.0]);
        let probe = ResolventProbe::new(&sd, &[1.0, 1.0]).unwrap();
        assert!(lap_probe(&probe, 1.0, false, &[0.5], &[0.1, 0.2], DIVERGENCE_TAU).is_err());
        assert!(lap_probe(&probe, 1.0, false, &[0.5, 0.1], &[0.1], DIVERGENCE_TAU).is_err());
        let r = lap_probe(&probe, 1.0, false, &[-1.0, 0.0], &[0.1, 0.01, 0.001], DIVERGENCE_TAU).unwrap();
        assert_eq!(r.flagged, vec![false, true]);
        assert!(r.to_csv().lines().count() == 7);
    }

    #[test]
    fn evolution_is_unitary() {
        let model = FunnelModel::half_line(60).unwrap();
        let sd = eigh(&model.laplacian().matrix).unwrap();
        let f = random_unit_vector(60, 3);
        let times: Vec<f64> = (0..1000).map(|k| 0.37 * k as f64).collect();
        let states = evolve(&sd, &f, &times).unwrap();
        assert!((0..60).all(|i| (states[0][i] - f[i]).norm() < 1e-12));
        for s in &states {
            let n: f64 = s.iter().map(|z| z.norm_sqr()).sum();
            assert!((n - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn diagonal_evolution_is_phases() {
        let sd = diag_sd(&[0.5, -2.0]);
        let f = vec![c(0.6), c(0.8)];
        let s = evolve(&sd, &f, &[3.0]).unwrap();
        assert!((s[0][0] - 0.6 * Complex64::from_polar(1.0, -1.5)).norm() < 1e-14);
        assert!((s[0][1] - 0.8 * Complex64::from_polar(1.0, 6.0)).norm() < 1e-14);
    }

    #[test]
    fn kato_controls() {
        let model = FunnelModel::half_line(400).unwrap();
        let shape = model.shape();
        let sd = eigh(&model.laplacian().matrix).unwrap();
        let mut delta = vec![c(0.0); 400];
        delta[0] = c(1.0);
        let f = band_projected(&sd, &delta, 1.0, 1.5).unwrap().unwrap();
        let unweighted = kato_smoothness_integral(&sd, shape, (1.0, 1.5), &f, 0.0, 100.0, 400).unwrap();
        assert!((unweighted.ratio().unwrap() - 2.0).abs() < 1e-8);
        let weighted = kato_smoothness_integral(&sd, shape, (1.0, 1.5), &f, 1.0, 100.0, 400).unwrap();
        assert!(weighted.ratio().unwrap() < 1.2);
        assert!(weighted.cumulative.windows(2).all(|w| w[1] >= w[0]));
        // An eigenvector outside the band has no projection.
        let outside = sd.indices_in(2.0, 3.0)[0];
        let g: Vec<Complex64> = sd.vectors.column(outside).iter().copied().collect();
        let zero = kato_smoothness_integral(&sd, shape, (1.0, 1.5), &g, 1.0, 50.0, 100).unwrap();
        assert!(zero.cumulative.last().unwrap().abs() < 1e-20);
        assert!(kato_smoothness_integral(&sd, shape, (1.0, 1.5), &f, 1.0, 200.0, 100).is_err());
    }

    #[test]
    fn pointwise_controls() {
        let model = FunnelModel::half_line(300).unwrap();
        let sd = eigh(&model.laplacian().matrix).unwrap();
        let k = sd.indices_in(1.0, 1.5)[3];
        let g: Vec<Complex64> = sd.vectors.column(k).iter().copied().collect();
        let tr = pointwise_decay(&sd, model.shape(), None, &g, &[0, 7], 50.0, 100).unwrap();
        for trace in &tr.traces {
            assert!(trace.iter().all(|x| (x - trace[0]).abs() < 1e-12));
        }
        let zero = pointwise_decay(&sd, model.shape(), Some((1.0, 1.5)), &vec![c(0.0); 300], &[0], 50.0, 100).unwrap();
        assert!(zero.traces[0].iter().all(|&x| x == 0.0));
        let mut delta = vec![c(0.0); 300];
        delta[0] = c(1.0);
        let f = band_projected(&sd, &delta, 1.0, 1.5).unwrap().unwrap();
        let tr = pointwise_decay(&sd, model.shape(), Some((1.0, 1.5)), &f, &[0], 100.0, 400).unwrap();
        assert!(tr.late_max[0] < 0.5 * tr.early_max[0]);
    }
}
