//! Closed-form assembly of funnel operators in the flattened picture.
//!
//! The graph route stores `m₁(n) = eⁿ` and `E₁ = e^{(2n+1)/2}` literally and is
//! therefore limited to `n_max ≤ 600`. After flattening, however, every entry
//! of the twisted-product Laplacian is a ratio that stays of order one:
//!
//! * half-line edges: `E/√(m m') = 1/m₂`, `E/m = e^{±1/2}/m₂`;
//! * transverse edges: `E/√(m m') = e^{-n} E₂/√(m₂ m₂')`, `E/m = e^{-n} E₂/m₂`.
//!
//! Assembling from these ratios gives the same matrices for any truncation
//! length, which is what the large spectral experiments use.

use num_complex::Complex64;

use crate::conjugate::{a_g_entries, window_or_trivial, ConjugateKind, ConjugateOperator};
use crate::error::{Error, Result};
use crate::graph::{
    build_half_line, degree_vector, twisted_product, FunnelFactorSpec, GraphSpec, ProductShape, SecondFactorSpec,
    WeightedMagneticGraph,
};
use crate::linalg::{c, CMatrix};
use crate::operators::{assemble_laplacian, FlattenedHermitian};
use crate::perturbation::PerturbationSpec;

/// Largest flattened dimension handled by the dense pipeline.
pub const MAX_DIM: usize = 5000;

#[derive(Debug, Clone, PartialEq)]
pub struct FunnelModel {
    n_max: usize,
    theta1: Vec<f64>,
    factor2: WeightedMagneticGraph,
}

/// One edge in flattened form: both endpoints, the ratios `E/m` seen from
/// each side, the flattened magnitude `E/√(m m')` and the phase θ(x, y).
struct FlatEdge {
    x: usize,
    y: usize,
    from_x: f64,
    from_y: f64,
    magnitude: f64,
    theta: f64,
}

impl FunnelModel {
    pub fn new(half: &FunnelFactorSpec, factor2: &SecondFactorSpec) -> Result<Self> {
        let theta1 = half.phases()?;
        let factor2 = factor2.build()?;
        let dim = half.n_max * factor2.vertex_count();
        if dim > MAX_DIM {
            return Err(Error::Envelope(format!("flattened dimension {dim} exceeds {MAX_DIM}")));
        }
        Ok(Self { n_max: half.n_max, theta1, factor2 })
    }

    pub fn from_spec(spec: &GraphSpec) -> Result<Self> {
        Self::new(&spec.halfline, &spec.factor2)
    }

    /// Free funnel over a single transverse vertex of weight one.
    pub fn half_line(n_max: usize) -> Result<Self> {
        Self::new(&FunnelFactorSpec::new(n_max), &SecondFactorSpec::single(1.0))
    }

    /// Same model at another truncation length; phases are cut or zero-padded.
    pub fn with_n_max(&self, n_max: usize) -> Result<Self> {
        let mut theta1 = self.theta1.clone();
        theta1.resize(n_max.saturating_sub(1), 0.0);
        let dim = n_max * self.n2();
        if n_max < 2 {
            return Err(Error::InvalidParameter(format!("n_max = {n_max} < 2")));
        }
        if dim > MAX_DIM {
            return Err(Error::Envelope(format!("flattened dimension {dim} exceeds {MAX_DIM}")));
        }
        Ok(Self { n_max, theta1, factor2: self.factor2.clone() })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn n2(&self) -> usize {
        self.factor2.vertex_count()
    }

    pub fn shape(&self) -> ProductShape {
        ProductShape::new(self.n_max, self.n2())
    }

    pub fn dim(&self) -> usize {
        self.n_max * self.n2()
    }

    pub fn theta1(&self) -> &[f64] {
        &self.theta1
    }

    pub fn m2(&self) -> &[f64] {
        self.factor2.weights()
    }

    pub fn factor2(&self) -> &WeightedMagneticGraph {
        &self.factor2
    }

    /// `ln m(x₁, x₂) = x₁ + ln m₂(x₂)`.
    pub fn log_weights(&self) -> Vec<f64> {
        let m2 = self.m2();
        (0..self.n_max).flat_map(|n| m2.iter().map(move |w| n as f64 + w.ln())).collect()
    }

    /// Linear-weight graph of the same funnel (`n_max ≤ 600`).
    pub fn graph(&self) -> Result<WeightedMagneticGraph> {
        let g1 = build_half_line(&FunnelFactorSpec::with_theta(self.n_max, self.theta1.clone()))?;
        twisted_product(&g1, &self.factor2)
    }

    /// Flattened `Δ_{𝒢₁}`: diagonal `e^{1/2}, e^{1/2}+e^{-1/2}, …, e^{-1/2}`,
    /// off-diagonal `−e^{iθ₁}`.
    pub fn half_line_matrix(&self) -> CMatrix {
        let n = self.n_max;
        let (up, down) = (0.5f64.exp(), (-0.5f64).exp());
        let mut m = CMatrix::zeros(n, n);
        for k in 0..n {
            let mut d = 0.0;
            if k + 1 < n {
                d += up;
            }
            if k > 0 {
                d += down;
            }
            m[(k, k)] = c(d);
        }
        for (k, &t) in self.theta1.iter().enumerate() {
            let z = Complex64::from_polar(1.0, t);
            m[(k, k + 1)] = -z;
            m[(k + 1, k)] = -z.conj();
        }
        m
    }

    /// Flattened `Δ_{𝒢₂}`.
    pub fn second_factor_matrix(&self) -> CMatrix {
        assemble_laplacian(&self.factor2).matrix
    }

    fn flat_edges(&self) -> Vec<FlatEdge> {
        let shape = self.shape();
        let m2 = self.m2();
        let (up, down) = (0.5f64.exp(), (-0.5f64).exp());
        let mut out = Vec::new();
        for n in 0..self.n_max {
            let decay = (-(n as f64)).exp();
            for z in 0..self.n2() {
                let x = shape.flat(n, z).0;
                if n + 1 < self.n_max {
                    out.push(FlatEdge {
                        x,
                        y: shape.flat(n + 1, z).0,
                        from_x: up / m2[z],
                        from_y: down / m2[z],
                        magnitude: 1.0 / m2[z],
                        theta: self.theta1[n],
                    });
                }
            }
            for (a, b, e) in self.factor2.edges() {
                out.push(FlatEdge {
                    x: shape.flat(n, a).0,
                    y: shape.flat(n, b).0,
                    from_x: decay * e.weight / m2[a],
                    from_y: decay * e.weight / m2[b],
                    magnitude: decay * e.weight / (m2[a] * m2[b]).sqrt(),
                    theta: e.theta,
                });
            }
        }
        out
    }

    /// Canonical flat edge list `(x, y)` with `x < y`.
    pub fn edge_pairs(&self) -> Vec<(usize, usize)> {
        self.flat_edges().iter().map(|e| (e.x.min(e.y), e.x.max(e.y))).collect()
    }

    /// `deg(x₁, x₂) = deg₁(x₁)/m₂(x₂) + e^{-x₁} deg₂(x₂)`.
    pub fn degree_vector(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.dim()];
        for e in self.flat_edges() {
            d[e.x] += e.from_x;
            d[e.y] += e.from_y;
        }
        d
    }

    pub fn laplacian(&self) -> FlattenedHermitian {
        self.perturbed_laplacian(&PerturbationSpec::default()).expect("the zero perturbation is always admissible")
    }

    /// `Δ̃` in the base flattened picture.
    pub fn perturbed_laplacian(&self, spec: &PerturbationSpec) -> Result<FlattenedHermitian> {
        let shape = self.shape();
        let edges = self.flat_edges();
        spec.check(shape, edges.iter().map(|e| (e.x.min(e.y), e.x.max(e.y))))?;
        let n = self.dim();
        let p: Vec<f64> = (0..n).map(|x| 1.0 + spec.mu_at(shape, x)).collect();
        let mut k = CMatrix::zeros(n, n);
        let mut diag = vec![0.0; n];
        for e in &edges {
            let (x, y) = (e.x.min(e.y), e.x.max(e.y));
            let (theta, from_x, from_y) =
                if e.x < e.y { (e.theta, e.from_x, e.from_y) } else { (-e.theta, e.from_y, e.from_x) };
            let xi = spec.xi_at(shape, x, y);
            let z = Complex64::from_polar(
                e.magnitude * (1.0 + xi) / (p[x] * p[y]).sqrt(),
                theta + spec.gamma_at(shape, x, y),
            );
            k[(x, y)] = -z;
            k[(y, x)] = -z.conj();
            diag[x] += from_x * (1.0 + xi) / p[x];
            diag[y] += from_y * (1.0 + xi) / p[y];
        }
        for (x, d) in diag.into_iter().enumerate() {
            k[(x, x)] = c(d);
        }
        FlattenedHermitian::new(k, self.log_weights())
    }

    /// `H = Δ̃ + V`.
    pub fn hamiltonian(&self, spec: &PerturbationSpec) -> Result<FlattenedHermitian> {
        let mut h = self.perturbed_laplacian(spec)?;
        let shape = self.shape();
        for x in 0..self.dim() {
            h.matrix[(x, x)] += c(spec.v_at(shape, x));
        }
        Ok(h)
    }

    /// `A_𝒢`, flattened, with the default interior window when it fits.
    pub fn conjugate_operator(&self) -> Result<ConjugateOperator> {
        if self.n_max < 3 {
            return Err(Error::InvalidParameter(format!("conjugate operator needs n_max >= 3, got {}", self.n_max)));
        }
        let window = window_or_trivial(self.n_max);
        Ok(ConjugateOperator::from_entries(
            ConjugateKind::AG,
            self.n_max,
            self.n2(),
            window,
            a_g_entries(self.n_max, self.n2(), &self.theta1),
        ))
    }

    /// Degrees via the linear graph, for cross-checks (`n_max ≤ 600`).
    pub fn graph_degree_vector(&self) -> Result<Vec<f64>> {
        Ok(degree_vector(&self.graph()?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{diag, kron, max_abs};
    use crate::perturbation::{perturbed_hamiltonian, EdgeProfile, Profile};

    fn model(n: usize) -> FunnelModel {
        let theta: Vec<f64> = (0..n - 1).map(|k| 0.2 * (k as f64 * 0.7).cos()).collect();
        FunnelModel::new(
            &FunnelFactorSpec::with_theta(n, theta),
            &SecondFactorSpec { m2: vec![1.0, 0.5, 3.0], edges: vec![(0, 1, 2.0, 0.3), (0, 2, 0.4, -1.0)] },
        )
        .unwrap()
    }

    #[test]
    fn matches_graph_route() {
        for n in [2, 5, 40] {
            let f = model(n);
            let a = f.laplacian().matrix;
            let b = assemble_laplacian(&f.graph().unwrap()).matrix;
            assert!(max_abs(&(&a - &b)) <= 1e-13 * max_abs(&b), "n = {n}");
            let d = f.degree_vector();
            let dg = f.graph_degree_vector().unwrap();
            assert!(d.iter().zip(&dg).all(|(x, y)| (x - y).abs() <= 1e-13 * y.max(1.0)));
        }
    }

    #[test]
    fn tensor_form() {
        let f = model(30);
        let m2 = f.m2().to_vec();
        let inv_m2: Vec<f64> = m2.iter().map(|w| 1.0 / w).collect();
        let decay: Vec<f64> = (0..30).map(|n| (-(n as f64)).exp()).collect();
        let expect = kron(&f.half_line_matrix(), &diag(&inv_m2)) + kron(&diag(&decay), &f.second_factor_matrix());
        assert!(max_abs(&(f.laplacian().matrix - expect)) < 1e-13);
    }

    #[test]
    fn perturbed_matches_graph_route() {
        let f = model(25);
        let spec = PerturbationSpec {
            mu: Profile::Power { amplitude: 0.6, p: 1.0 },
            xi: EdgeProfile { along: Profile::Constant(0.3), across: Profile::Power { amplitude: -0.2, p: 1.0 } },
            gamma: EdgeProfile::both(Profile::Alternating { amplitude: 0.4, p: 1.0 }),
            v: Profile::Exponential { amplitude: 1.0, rate: 0.3 },
            epsilon: 0.5,
        };
        let a = f.hamiltonian(&spec).unwrap().matrix;
        let b = perturbed_hamiltonian(&f.graph().unwrap(), &spec).unwrap().matrix;
        assert!(max_abs(&(&a - &b)) <= 1e-13 * max_abs(&b));
    }

    #[test]
    fn long_truncations_stay_finite() {
        let f = FunnelModel::half_line(3000).unwrap();
        let m = f.laplacian().matrix;
        assert!(m.iter().all(|z| z.re.is_finite() && z.im.is_finite()));
        assert!((m[(2999, 2999)].re - (-0.5f64).exp()).abs() < 1e-15);
        assert!(f.graph().is_err());
        assert!(FunnelModel::half_line(6000).is_err());
    }
}
