//! Perturbed graphs `𝒢_{ξ,μ,γ}`, the conjugated Laplacian `Δ̃`, the
//! difference expansion, and the long-range hypothesis checks.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::graph::{degree_vector, wrap_angle, GraphBuilder, ProductShape, VertexId, WeightedMagneticGraph};
use crate::japanese_bracket;
use crate::linalg::{c, spectral_norm, CMatrix};
use crate::operators::{assemble_laplacian, DiagonalPotential, FlattenedHermitian};

/// A function of the half-line coordinate, or an explicit table.
#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(from = "ProfileRepr")]
pub enum Profile {
    #[default]
    Zero,
    Constant(f64),
    /// `a·⟨x₁⟩^{-p}`
    Power {
        amplitude: f64,
        p: f64,
    },
    /// `a·e^{-r x₁}`
    Exponential {
        amplitude: f64,
        rate: f64,
    },
    /// `a·(−1)^{x₁}⟨x₁⟩^{-p}`
    Alternating {
        amplitude: f64,
        p: f64,
    },
    /// `value` at half-line coordinate `at`, zero elsewhere.
    Bump {
        at: usize,
        value: f64,
    },
    /// One value per flat vertex index.
    VertexTable(Vec<f64>),
    /// Values on ordered flat pairs; the reverse orientation is derived.
    EdgeTable(BTreeMap<(usize, usize), f64>),
}

fn one() -> f64 {
    1.0
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ProfileRepr {
    Table { table: Vec<f64> },
    Edges { edges: Vec<(usize, usize, f64)> },
    Form(FormRepr),
}

#[derive(Deserialize)]
#[serde(tag = "form", rename_all = "lowercase", deny_unknown_fields)]
enum FormRepr {
    Zero,
    Constant {
        value: f64,
    },
    Power {
        p: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    Exponential {
        rate: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    Alternating {
        p: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    Bump {
        at: usize,
        value: f64,
    },
}

impl From<ProfileRepr> for Profile {
    fn from(r: ProfileRepr) -> Self {
        match r {
            ProfileRepr::Table { table } => Profile::VertexTable(table),
            ProfileRepr::Edges { edges } => {
                Profile::EdgeTable(edges.into_iter().map(|(i, j, v)| ((i, j), v)).collect())
            }
            ProfileRepr::Form(f) => match f {
                FormRepr::Zero => Profile::Zero,
                FormRepr::Constant { value } => Profile::Constant(value),
                FormRepr::Power { p, amplitude } => Profile::Power { amplitude, p },
                FormRepr::Exponential { rate, amplitude } => Profile::Exponential { amplitude, rate },
                FormRepr::Alternating { p, amplitude } => Profile::Alternating { amplitude, p },
                FormRepr::Bump { at, value } => Profile::Bump { at, value },
            },
        }
    }
}

impl Profile {
    fn radial(&self, x1: usize) -> f64 {
        let t = x1 as f64;
        match *self {
            Profile::Zero | Profile::VertexTable(_) | Profile::EdgeTable(_) => 0.0,
            Profile::Constant(v) => v,
            Profile::Power { amplitude, p } => amplitude * japanese_bracket(t).powf(-p),
            Profile::Exponential { amplitude, rate } => amplitude * (-rate * t).exp(),
            Profile::Alternating { amplitude, p } => {
                let s = if x1.is_multiple_of(2) { 1.0 } else { -1.0 };
                s * amplitude * japanese_bracket(t).powf(-p)
            }
            Profile::Bump { at, value } => {
                if x1 == at {
                    value
                } else {
                    0.0
                }
            }
        }
    }

    fn at_vertex(&self, x: usize, x1: usize) -> f64 {
        match self {
            Profile::VertexTable(t) => t.get(x).copied().unwrap_or(0.0),
            _ => self.radial(x1),
        }
    }

    /// Value for the ordered pair `(x, y)`; `odd` negates on reversed table lookups.
    fn at_edge(&self, x: usize, y: usize, x1: usize, odd: bool) -> f64 {
        match self {
            Profile::EdgeTable(t) => {
                if let Some(&v) = t.get(&(x, y)) {
                    v
                } else if let Some(&v) = t.get(&(y, x)) {
                    if odd {
                        -v
                    } else {
                        v
                    }
                } else {
                    0.0
                }
            }
            _ => self.radial(x1),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Profile::Zero => true,
            Profile::Constant(v) => *v == 0.0,
            Profile::Power { amplitude, .. }
            | Profile::Exponential { amplitude, .. }
            | Profile::Alternating { amplitude, .. } => *amplitude == 0.0,
            Profile::Bump { value, .. } => *value == 0.0,
            Profile::VertexTable(t) => t.iter().all(|v| *v == 0.0),
            Profile::EdgeTable(t) => t.values().all(|v| *v == 0.0),
        }
    }
}

/// Separate profiles for half-line edges and second-factor edges.
#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(from = "EdgeProfileRepr")]
pub struct EdgeProfile {
    pub along: Profile,
    pub across: Profile,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum EdgeProfileRepr {
    Split(SplitRepr),
    Same(Profile),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SplitRepr {
    #[serde(default)]
    along: Profile,
    #[serde(default)]
    across: Profile,
}

impl From<EdgeProfileRepr> for EdgeProfile {
    fn from(r: EdgeProfileRepr) -> Self {
        match r {
            EdgeProfileRepr::Split(SplitRepr { along, across }) => EdgeProfile { along, across },
            EdgeProfileRepr::Same(p) => EdgeProfile { along: p.clone(), across: p },
        }
    }
}

impl EdgeProfile {
    pub fn both(p: Profile) -> Self {
        Self { along: p.clone(), across: p }
    }

    pub fn is_zero(&self) -> bool {
        self.along.is_zero() && self.across.is_zero()
    }
}

/// `μ`, `ξ`, `γ`, `V` and the decay exponent `ε`.
///
/// Radial profiles are evaluated at the half-line coordinate of a vertex, or
/// at `min(x₁, y₁)` for an edge. `γ` is read in the orientation of increasing
/// flat index and negated for the reverse.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSpec {
    #[serde(default)]
    pub mu: Profile,
    #[serde(default)]
    pub xi: EdgeProfile,
    #[serde(default)]
    pub gamma: EdgeProfile,
    #[serde(default, rename = "V")]
    pub v: Profile,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

fn default_epsilon() -> f64 {
    0.5
}

impl Default for PerturbationSpec {
    fn default() -> Self {
        Self {
            mu: Profile::Zero,
            xi: EdgeProfile::default(),
            gamma: EdgeProfile::default(),
            v: Profile::Zero,
            epsilon: default_epsilon(),
        }
    }
}

impl PerturbationSpec {
    pub fn is_zero(&self) -> bool {
        self.mu.is_zero() && self.xi.is_zero() && self.gamma.is_zero() && self.v.is_zero()
    }

    pub fn mu_at(&self, shape: ProductShape, x: usize) -> f64 {
        self.mu.at_vertex(x, shape.split(VertexId(x)).0)
    }

    pub fn v_at(&self, shape: ProductShape, x: usize) -> f64 {
        self.v.at_vertex(x, shape.split(VertexId(x)).0)
    }

    fn edge_profile(p: &EdgeProfile, shape: ProductShape, x: usize, y: usize) -> (&Profile, usize) {
        let (x1, _) = shape.split(VertexId(x));
        let (y1, _) = shape.split(VertexId(y));
        if x1 == y1 {
            (&p.across, x1)
        } else {
            (&p.along, x1.min(y1))
        }
    }

    pub fn xi_at(&self, shape: ProductShape, x: usize, y: usize) -> f64 {
        let (p, r) = Self::edge_profile(&self.xi, shape, x, y);
        p.at_edge(x, y, r, false)
    }

    /// Antisymmetric: `γ(y, x) = −γ(x, y)`.
    pub fn gamma_at(&self, shape: ProductShape, x: usize, y: usize) -> f64 {
        let (p, r) = Self::edge_profile(&self.gamma, shape, x, y);
        let (lo, hi, sign) = if x < y { (x, y, 1.0) } else { (y, x, -1.0) };
        sign * p.at_edge(lo, hi, r, true)
    }

    /// Checks `inf μ > −1`, `inf ξ > −1` over the truncation, finiteness and ε.
    pub fn check(&self, shape: ProductShape, edges: impl Iterator<Item = (usize, usize)>) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::InvalidParameter(format!("epsilon = {} outside (0, 1)", self.epsilon)));
        }
        for table in [&self.mu, &self.v] {
            if let Profile::VertexTable(t) = table {
                if t.len() != shape.len() {
                    return Err(Error::DimensionMismatch { expected: shape.len(), found: t.len() });
                }
            }
            if let Profile::EdgeTable(_) = table {
                return Err(Error::InvalidParameter("edge table given for a vertex function".into()));
            }
        }
        for x in 0..shape.len() {
            let (mu, v) = (self.mu_at(shape, x), self.v_at(shape, x));
            if !(mu > -1.0) || !mu.is_finite() {
                return Err(Error::PerturbationRange { field: "mu", value: mu, location: x });
            }
            if !v.is_finite() {
                return Err(Error::PerturbationRange { field: "V", value: v, location: x });
            }
        }
        for (x, y) in edges {
            let xi = self.xi_at(shape, x, y);
            if !(xi > -1.0) || !xi.is_finite() {
                return Err(Error::PerturbationRange { field: "xi", value: xi, location: x });
            }
            let g = self.gamma_at(shape, x, y);
            if !g.is_finite() {
                return Err(Error::PerturbationRange { field: "gamma", value: g, location: x });
            }
        }
        Ok(())
    }
}

fn shape_of(g: &WeightedMagneticGraph) -> ProductShape {
    g.shape().unwrap_or(ProductShape::new(g.vertex_count(), 1))
}

/// `m_μ = (1+μ)m`, `E_ξ = (1+ξ)E`, `θ_γ = θ + γ`, plus the potential `V`.
pub fn perturb(
    g: &WeightedMagneticGraph,
    spec: &PerturbationSpec,
) -> Result<(WeightedMagneticGraph, DiagonalPotential)> {
    let shape = shape_of(g);
    spec.check(shape, g.edges().map(|(x, y, _)| (x, y)))?;
    let m: Vec<f64> = (0..g.vertex_count()).map(|x| (1.0 + spec.mu_at(shape, x)) * g.weight(x)).collect();
    let mut b = GraphBuilder::new(m).shape(shape);
    for (x, y, e) in g.edges() {
        let w = (1.0 + spec.xi_at(shape, x, y)) * e.weight;
        b = b.edge(x, y, w, wrap_angle(e.theta + spec.gamma_at(shape, x, y)));
    }
    let values = (0..g.vertex_count()).map(|x| spec.v_at(shape, x)).collect();
    Ok((b.build()?, DiagonalPotential { values }))
}

/// `Δ̃ = T_{m_μ→m} Δ_{𝒢_{ξ,μ,γ}} T⁻¹` flattened with the base weights:
/// off-diagonal `−E(1+ξ)e^{i(θ+γ)}/√(m(x)m(y)(1+μ(x))(1+μ(y)))`.
pub fn tilde_laplacian(g: &WeightedMagneticGraph, spec: &PerturbationSpec) -> Result<FlattenedHermitian> {
    let shape = shape_of(g);
    spec.check(shape, g.edges().map(|(x, y, _)| (x, y)))?;
    let n = g.vertex_count();
    let p: Vec<f64> = (0..n).map(|x| 1.0 + spec.mu_at(shape, x)).collect();
    let mut k = CMatrix::zeros(n, n);
    for (x, y, e) in g.edges() {
        let w = e.weight * (1.0 + spec.xi_at(shape, x, y));
        let z = Complex64::from_polar(
            w / (g.weight(x).sqrt() * g.weight(y).sqrt() * (p[x] * p[y]).sqrt()),
            e.theta + spec.gamma_at(shape, x, y),
        );
        k[(x, y)] = -z;
        k[(y, x)] = -z.conj();
    }
    // Same summation order as `degree_vector`, so a zero spec reproduces Δ bit for bit.
    for x in 0..n {
        let s: f64 = g.neighbors(x).iter().map(|&y| g.edge_weight(x, y) * (1.0 + spec.xi_at(shape, x, y))).sum();
        k[(x, x)] = c(s / (g.weight(x) * p[x]));
    }
    FlattenedHermitian::new(k, g.weights().iter().map(|m| m.ln()).collect())
}

/// `H = Δ̃ + V`.
pub fn perturbed_hamiltonian(g: &WeightedMagneticGraph, spec: &PerturbationSpec) -> Result<FlattenedHermitian> {
    let mut h = tilde_laplacian(g, spec)?;
    let shape = shape_of(g);
    for x in 0..g.vertex_count() {
        h.matrix[(x, x)] += c(spec.v_at(shape, x));
    }
    Ok(h)
}

/// The four-term expansion of `Δ̃ − Δ`, flattened, and the potential `W`.
#[derive(Debug, Clone)]
pub struct DifferenceKernel {
    pub matrix: CMatrix,
    pub w: DiagonalPotential,
}

pub fn difference_kernel(g: &WeightedMagneticGraph, spec: &PerturbationSpec) -> Result<DifferenceKernel> {
    let shape = shape_of(g);
    spec.check(shape, g.edges().map(|(x, y, _)| (x, y)))?;
    let n = g.vertex_count();
    let mu: Vec<f64> = (0..n).map(|x| spec.mu_at(shape, x)).collect();
    let m = g.weights();
    // Kernel acting on ℓ²(V, m); flattened at the end.
    let mut k = CMatrix::zeros(n, n);
    let mut w = vec![0.0; n];
    for x in 0..n {
        for &y in g.neighbors(x) {
            let e = g.edge_weight(x, y);
            let xi = spec.xi_at(shape, x, y);
            let theta = g.theta(x, y);
            let theta_g = theta + spec.gamma_at(shape, x, y);
            let (p, q) = (1.0 + mu[x], 1.0 + mu[y]);
            let root = (p * q).sqrt();
            let phase_g = Complex64::from_polar(1.0, theta_g);
            let s = e / m[x];
            // ξ term
            k[(x, x)] += c(s * xi / root);
            k[(x, y)] -= s * xi / root * phase_g;
            // μ term
            k[(x, x)] -= c(s * (mu[x] + mu[y] + mu[x] * mu[y]) / (root * (1.0 + root)));
            // phase term
            k[(x, y)] += s * (Complex64::from_polar(1.0, theta) - phase_g / root);
            // W
            w[x] += e * (1.0 + xi) * (1.0 - (p / q).sqrt()) / (p * m[x]);
        }
        k[(x, x)] += c(w[x]);
    }
    let root: Vec<f64> = m.iter().map(|v| v.sqrt()).collect();
    let matrix = CMatrix::from_fn(n, n, |i, j| k[(i, j)] * (root[i] / root[j]));
    Ok(DifferenceKernel { matrix, w: DiagonalPotential { values: w } })
}

/// Tail behavior of a shell profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trend {
    /// Tail slope below −0.05, or identically zero.
    Decaying,
    /// Tail slope within ±0.05.
    Bounded,
    /// Tail slope above 0.05.
    Growing,
}

impl Trend {
    pub fn is_bounded(self) -> bool {
        self != Trend::Growing
    }

    pub fn label(self) -> &'static str {
        match self {
            Trend::Decaying => "decaying",
            Trend::Bounded => "bounded",
            Trend::Growing => "growing",
        }
    }
}

/// Log-log slope threshold separating bounded from growing profiles.
pub const SLOPE_THRESHOLD: f64 = 0.05;

/// Least-squares slope of `log value` against `log r` over the last third of
/// the positive, defined shells (`None` marks undefined shells).
pub fn tail_slope(profile: &[Option<f64>]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = profile
        .iter()
        .enumerate()
        .filter_map(|(r, v)| match v {
            Some(v) if *v > 0.0 && r > 0 => Some(((r as f64).ln(), v.ln())),
            _ => None,
        })
        .collect();
    let defined = profile.iter().filter(|v| v.is_some()).count();
    if defined < 3 || pts.len() < 3 {
        return None;
    }
    let tail = &pts[pts.len() - (pts.len() / 3).max(3)..];
    let k = tail.len() as f64;
    let mx = tail.iter().map(|p| p.0).sum::<f64>() / k;
    let my = tail.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = tail.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = tail.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(sxy / sxx)
}

pub fn classify(profile: &[Option<f64>]) -> (Trend, Option<f64>) {
    let slope = tail_slope(profile);
    let trend = match slope {
        None => Trend::Decaying,
        Some(s) if s < -SLOPE_THRESHOLD => Trend::Decaying,
        Some(s) if s <= SLOPE_THRESHOLD => Trend::Bounded,
        Some(_) => Trend::Growing,
    };
    (trend, slope)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisReport {
    pub id: &'static str,
    pub sup: f64,
    /// Sup over each shell `x₁ = r`; `None` where the quantity is undefined
    /// on the truncation (missing neighbor).
    pub profile: Vec<Option<f64>>,
    pub slope: Option<f64>,
    pub trend: Trend,
    /// Extra per-`y₂` columns (the factors of the sine form of H5).
    pub factors: Vec<(String, Vec<f64>)>,
}

impl HypothesisReport {
    fn new(id: &'static str, profile: Vec<Option<f64>>) -> Self {
        let sup = profile.iter().flatten().copied().fold(0.0, f64::max);
        let (trend, slope) = classify(&profile);
        Self { id, sup, profile, slope, trend, factors: Vec::new() }
    }

    /// For the H0 family the quantity must tend to zero, not just stay bounded.
    pub fn satisfied(&self) -> bool {
        if self.id.starts_with("H0") {
            self.sup == 0.0 || self.trend == Trend::Decaying
        } else {
            self.trend.is_bounded()
        }
    }
}

/// H0a–H0d, H1–H4, H5 and its sine form. H6 and H7 have no definition to
/// check against and are not produced.
pub fn check_hypotheses(g: &WeightedMagneticGraph, spec: &PerturbationSpec) -> Result<Vec<HypothesisReport>> {
    let shape = shape_of(g);
    spec.check(shape, g.edges().map(|(x, y, _)| (x, y)))?;
    let (n1, n2) = (shape.n1, shape.n2);
    let deg = degree_vector(g);
    let eps = spec.epsilon;
    let at = |a: usize, b: usize| shape.flat(a, b).0;
    let bracket = |r: usize| japanese_bracket(r as f64).powf(eps + 1.0);

    let shells = |f: &dyn Fn(usize, usize) -> Option<f64>| -> Vec<Option<f64>> {
        (0..n1)
            .map(|r| {
                let vals: Vec<f64> = (0..n2).filter_map(|z| f(r, z)).collect();
                if vals.is_empty() {
                    None
                } else {
                    Some(vals.into_iter().fold(0.0, f64::max))
                }
            })
            .collect()
    };

    let mut out = Vec::new();
    out.push(HypothesisReport::new(
        "H0a",
        shells(&|r, z| Some(spec.mu_at(shape, at(r, z)).abs() / (1.0 + deg[at(r, z)]))),
    ));
    let edge_ratio = |r: usize, z: usize, f: &dyn Fn(usize, usize) -> f64| -> Option<f64> {
        let x = at(r, z);
        let ns = g.neighbors(x);
        if ns.is_empty() {
            return None;
        }
        Some(ns.iter().map(|&y| f(x, y).abs()).fold(0.0, f64::max) / (1.0 + deg[x]))
    };
    out.push(HypothesisReport::new("H0b", shells(&|r, z| edge_ratio(r, z, &|x, y| spec.xi_at(shape, x, y)))));
    out.push(HypothesisReport::new("H0c", shells(&|r, z| edge_ratio(r, z, &|x, y| spec.gamma_at(shape, x, y)))));
    out.push(HypothesisReport::new(
        "H0d",
        shells(&|r, z| Some(spec.v_at(shape, at(r, z)).abs() / (1.0 + deg[at(r, z)]))),
    ));
    out.push(HypothesisReport::new(
        "H1",
        shells(&|r, z| {
            (r >= 1 && r + 1 < n1).then(|| {
                let x = at(r, z);
                bracket(r) * (spec.gamma_at(shape, x, at(r + 1, z)) - spec.gamma_at(shape, x, at(r - 1, z))).abs()
                    / (1.0 + deg[x])
            })
        }),
    ));
    out.push(HypothesisReport::new(
        "H2",
        shells(&|r, z| {
            (r >= 1).then(|| {
                let x = at(r, z);
                bracket(r) * (spec.mu_at(shape, at(r - 1, z)) - spec.mu_at(shape, x)).abs() / (1.0 + deg[x])
            })
        }),
    ));
    out.push(HypothesisReport::new(
        "H3",
        shells(&|r, z| {
            (r >= 1 && r + 1 < n1).then(|| {
                let x = at(r, z);
                bracket(r) * (spec.xi_at(shape, x, at(r + 1, z)) - spec.xi_at(shape, at(r - 1, z), x)).abs()
                    / (1.0 + deg[x])
            })
        }),
    ));
    out.push(HypothesisReport::new(
        "H4",
        shells(&|r, z| {
            (r + 1 < n1).then(|| {
                let x = at(r, z);
                bracket(r) * (spec.v_at(shape, at(r + 1, z)) - spec.v_at(shape, x)).abs() / (1.0 + deg[x])
            })
        }),
    ));

    // Second-factor data, read off the x₁ = 0 slice (m₁(0) = 1 on funnels).
    let m2: Vec<f64> = (0..n2).map(|z| g.weight(at(0, z))).collect();
    let deg2: Vec<f64> = (0..n2)
        .map(|z| {
            let x = at(0, z);
            g.neighbors(x)
                .iter()
                .filter(|&&y| shape.split(VertexId(y)).0 == 0)
                .map(|&y| g.edge_weight(x, y))
                .sum::<f64>()
                / m2[z]
        })
        .collect();
    let across = |r: usize, z: usize, f: &dyn Fn(f64) -> f64| -> Option<f64> {
        let x = at(r, z);
        let vals: Vec<f64> = g
            .neighbors(x)
            .iter()
            .filter(|&&y| shape.split(VertexId(y)).0 == r)
            .map(|&y| {
                let y2 = shape.split(VertexId(y)).1;
                f(spec.gamma_at(shape, x, y)) * deg2[y2] * m2[y2].sqrt()
            })
            .collect();
        Some(vals.into_iter().fold(0.0, f64::max))
    };
    out.push(HypothesisReport::new("H5", shells(&|r, z| across(r, z, &|t| t.abs()))));
    let mut sine = HypothesisReport::new("H5sin", shells(&|r, z| across(r, z, &|t| (t / 2.0).sin().abs())));
    let ee = 1f64.exp() + (-1f64).exp();
    let inv_sum: f64 = m2.iter().map(|w| 1.0 / w).sum();
    sine.factors = vec![
        ("e_sum".into(), m2.iter().map(|w| ee * w.sqrt() * inv_sum).collect()),
        ("one".into(), vec![1.0; n2]),
        ("l2_sum".into(), m2.iter().map(|w| (w * w * inv_sum).sqrt()).collect()),
        ("m2".into(), m2.clone()),
    ];
    out.push(sine);
    Ok(out)
}

/// `‖D (Δ − H) D‖` restricted to `x₁ ≥ r`, with `D = (1+deg)^{-1/2}`.
pub fn relative_compactness_proxy(
    g: &WeightedMagneticGraph,
    spec: &PerturbationSpec,
    radii: &[usize],
) -> Result<Vec<f64>> {
    let shape = shape_of(g);
    let h = perturbed_hamiltonian(g, spec)?;
    let base = assemble_laplacian(g);
    let d: Vec<f64> = degree_vector(g).iter().map(|v| 1.0 / (1.0 + v).sqrt()).collect();
    let diff = &base.matrix - &h.matrix;
    radii
        .iter()
        .map(|&r| {
            let idx: Vec<usize> = (0..g.vertex_count()).filter(|&x| shape.split(VertexId(x)).0 >= r).collect();
            let sub = CMatrix::from_fn(idx.len(), idx.len(), |i, j| diff[(idx[i], idx[j])] * (d[idx[i]] * d[idx[j]]));
            spectral_norm(&sub)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelBoundReport {
    /// `sup (m(x)+m(y))|B(x,y)|/E(x,y)`; infinite when B lives off the edges.
    pub m: f64,
    pub off_edge: Vec<(usize, usize)>,
    /// `min_f M⟨f, deg f⟩ − |⟨f, Tf⟩|` over the sampled vectors.
    pub min_slack: f64,
    pub samples: usize,
}

impl KernelBoundReport {
    pub fn holds(&self) -> bool {
        self.off_edge.is_empty() && self.min_slack >= -1e-12 * self.m.max(1.0)
    }
}

/// Criterion for `T f(x) = Σ_y B(x,y) f(y)` to be bounded from the form
/// domain to its dual, with a sampled verification of the form bound.
pub fn kernel_bound(b: &CMatrix, g: &WeightedMagneticGraph, samples: usize, seed: u64) -> Result<KernelBoundReport> {
    let n = g.vertex_count();
    if b.nrows() != n || b.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, found: b.nrows() });
    }
    let m = g.weights();
    let mut sup: f64 = 0.0;
    let mut off_edge = Vec::new();
    for j in 0..n {
        for i in 0..n {
            let v = b[(i, j)].norm();
            if v == 0.0 {
                continue;
            }
            let e = g.edge_weight(i, j);
            if e == 0.0 || i == j {
                off_edge.push((i, j));
            } else {
                sup = sup.max((m[i] + m[j]) * v / e);
            }
        }
    }
    let big_m = if off_edge.is_empty() { sup } else { f64::INFINITY };
    let deg = degree_vector(g);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_slack = f64::INFINITY;
    for _ in 0..samples {
        let f: Vec<Complex64> =
            (0..n).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
        let mut lhs = Complex64::new(0.0, 0.0);
        let mut rhs = 0.0;
        for x in 0..n {
            let tf: Complex64 = (0..n).map(|y| b[(x, y)] * f[y]).sum();
            lhs += m[x] * f[x].conj() * tf;
            rhs += m[x] * deg[x] * f[x].norm_sqr();
        }
        min_slack = min_slack.min(big_m * rhs - lhs.norm());
    }
    Ok(KernelBoundReport { m: big_m, off_edge, min_slack, samples })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayTransferReport {
    /// `sup ω Λ^ε |P|`
    pub lhs: f64,
    /// `(4/ε) sup ω Λ^{ε+1} |difference|`
    pub rhs: f64,
    /// The function does not vanish at the far boundary; no conclusion.
    pub inconclusive: bool,
}

impl DecayTransferReport {
    pub fn holds(&self) -> bool {
        !self.inconclusive && self.lhs <= self.rhs * (1.0 + 1e-12)
    }
}

fn boundary_vanishes(values: &[f64], shape: ProductShape, last: usize) -> bool {
    let peak = values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    (0..shape.n2).all(|z| values[shape.flat(last, z).0].abs() <= 0.01 * peak)
}

/// Symmetric transfer: first differences along the half-line control the
/// function itself. `p` and `omega` are indexed by flat vertex.
pub fn decay_transfer_check(
    shape: ProductShape,
    p: &[f64],
    omega: &[f64],
    epsilon: f64,
) -> Result<DecayTransferReport> {
    if p.len() != shape.len() || omega.len() != shape.len() {
        return Err(Error::DimensionMismatch { expected: shape.len(), found: p.len() });
    }
    let lam = |r: usize, e: f64| japanese_bracket(r as f64).powf(e);
    let mut lhs: f64 = 0.0;
    let mut diff: f64 = 0.0;
    for r in 0..shape.n1 {
        for z in 0..shape.n2 {
            let x = shape.flat(r, z).0;
            lhs = lhs.max(omega[x] * lam(r, epsilon) * p[x].abs());
            if r >= 1 {
                let d = (p[shape.flat(r - 1, z).0] - p[x]).abs();
                diff = diff.max(omega[x] * lam(r, epsilon + 1.0) * d);
            }
        }
    }
    let inconclusive = !boundary_vanishes(p, shape, shape.n1 - 1);
    Ok(DecayTransferReport { lhs, rhs: 4.0 / epsilon * diff, inconclusive })
}

/// Antisymmetric transfer. `phi[x]` is `φ(x, x + ê₁)`, defined for `x₁ < n₁ − 1`.
pub fn decay_transfer_check_anti(
    shape: ProductShape,
    phi: &[f64],
    omega: &[f64],
    epsilon: f64,
) -> Result<DecayTransferReport> {
    if phi.len() != shape.len() || omega.len() != shape.len() {
        return Err(Error::DimensionMismatch { expected: shape.len(), found: phi.len() });
    }
    let lam = |r: usize, e: f64| japanese_bracket(r as f64).powf(e);
    let mut lhs: f64 = 0.0;
    let mut sum: f64 = 0.0;
    for r in 0..shape.n1 - 1 {
        for z in 0..shape.n2 {
            let x = shape.flat(r, z).0;
            lhs = lhs.max(omega[x] * lam(r, epsilon) * phi[x].abs());
            if r >= 1 {
                // φ(x, x+1) + φ(x−1, x)
                let s = (phi[x] + phi[shape.flat(r - 1, z).0]).abs();
                sum = sum.max(omega[x] * lam(r, epsilon + 1.0) * s);
            }
        }
    }
    let inconclusive = shape.n1 < 2 || !boundary_vanishes(phi, shape, shape.n1 - 2);
    Ok(DecayTransferReport { lhs, rhs: 4.0 / epsilon * sum, inconclusive })
}
