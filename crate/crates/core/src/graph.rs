//! Weighted magnetic graphs and the funnel factor graphs.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use serde::Deserialize;

use crate::error::{Error, Result};

/// Largest truncation length whose weights `eⁿ` stay comfortably finite.
pub const MAX_LINEAR_N: usize = 600;

/// Edge weights below this are rejected (denormal division in `1/√(m m')`).
pub const MIN_EDGE_WEIGHT: f64 = 1e-300;

/// Flat vertex index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexId(pub usize);

/// Row-major layout of a product vertex set `V₁ × V₂`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProductShape {
    pub n1: usize,
    pub n2: usize,
}

impl ProductShape {
    pub fn new(n1: usize, n2: usize) -> Self {
        Self { n1, n2 }
    }

    pub fn len(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn flat(&self, x1: usize, x2: usize) -> VertexId {
        debug_assert!(x1 < self.n1 && x2 < self.n2);
        VertexId(x1 * self.n2 + x2)
    }

    pub fn split(&self, v: VertexId) -> (usize, usize) {
        (v.0 / self.n2, v.0 % self.n2)
    }
}

/// Edge data stored for the canonical orientation `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coupling {
    pub weight: f64,
    /// θ(lo, hi); θ(hi, lo) is its negative.
    pub theta: f64,
}

/// A broken algebraic constraint, reported by [`validate`] and [`GraphBuilder`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NonPositiveWeight { vertex: usize, value: f64 },
    NegativeEdgeWeight { x: usize, y: usize, value: f64 },
    NonFinite { x: usize, y: usize },
    SelfLoop { vertex: usize },
    Asymmetric { x: usize, y: usize, forward: f64, backward: f64 },
    NotAntisymmetric { x: usize, y: usize, forward: f64, backward: f64 },
    ThetaOffSupport { x: usize, y: usize, theta: f64 },
    ThetaRange { x: usize, y: usize, theta: f64 },
    DenormalEdge { x: usize, y: usize, value: f64 },
    VertexOutOfRange { vertex: usize, count: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            NonPositiveWeight { vertex, value } => write!(f, "m({vertex}) = {value} is not positive"),
            NegativeEdgeWeight { x, y, value } => write!(f, "E({x},{y}) = {value} is negative"),
            NonFinite { x, y } => write!(f, "non-finite data on ({x},{y})"),
            SelfLoop { vertex } => write!(f, "self-loop at {vertex}"),
            Asymmetric { x, y, forward, backward } => {
                write!(f, "symmetry: E({x},{y}) = {forward} but E({y},{x}) = {backward}")
            }
            NotAntisymmetric { x, y, forward, backward } => {
                write!(f, "antisymmetry: theta({x},{y}) = {forward} but theta({y},{x}) = {backward}")
            }
            ThetaOffSupport { x, y, theta } => {
                write!(f, "support: theta({x},{y}) = {theta} on a non-edge")
            }
            ThetaRange { x, y, theta } => write!(f, "theta({x},{y}) = {theta} outside (-pi, pi]"),
            DenormalEdge { x, y, value } => write!(f, "E({x},{y}) = {value} below {MIN_EDGE_WEIGHT}"),
            VertexOutOfRange { vertex, count } => write!(f, "vertex {vertex} out of range (count {count})"),
        }
    }
}

/// Map an angle into `(-π, π]`.
pub fn wrap_angle(t: f64) -> f64 {
    if t > -PI && t <= PI {
        return t;
    }
    let mut r = t.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    r
}

/// Vertex weights, symmetric edge weights and an antisymmetric magnetic
/// potential on a finite vertex set. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedMagneticGraph {
    m: Vec<f64>,
    edges: BTreeMap<(usize, usize), Coupling>,
    adjacency: Vec<Vec<usize>>,
    shape: Option<ProductShape>,
}

impl WeightedMagneticGraph {
    pub fn vertex_count(&self) -> usize {
        self.m.len()
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> {
        (0..self.m.len()).map(VertexId)
    }

    pub fn weights(&self) -> &[f64] {
        &self.m
    }

    pub fn weight(&self, x: usize) -> f64 {
        self.m[x]
    }

    pub fn shape(&self) -> Option<ProductShape> {
        self.shape
    }

    /// `(x1, x2)` of a vertex; a graph without product structure is its own half-line.
    pub fn split(&self, x: usize) -> (usize, usize) {
        match self.shape {
            Some(s) => s.split(VertexId(x)),
            None => (x, 0),
        }
    }

    pub fn edge_weight(&self, x: usize, y: usize) -> f64 {
        let key = (x.min(y), x.max(y));
        self.edges.get(&key).map_or(0.0, |c| c.weight)
    }

    /// θ(x, y), negated on reversed lookup.
    pub fn theta(&self, x: usize, y: usize) -> f64 {
        if x < y {
            self.edges.get(&(x, y)).map_or(0.0, |c| c.theta)
        } else {
            self.edges.get(&(y, x)).map_or(0.0, |c| -c.theta)
        }
    }

    pub fn neighbors(&self, x: usize) -> &[usize] {
        &self.adjacency[x]
    }

    /// Canonical edges `(lo, hi, coupling)`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, Coupling)> + '_ {
        self.edges.iter().map(|(&(x, y), &c)| (x, y, c))
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_connected(&self) -> bool {
        let n = self.m.len();
        if n == 0 {
            return true;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(x) = stack.pop() {
            for &y in &self.adjacency[x] {
                if !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// Same graph with the product layout attached.
    pub fn with_shape(mut self, shape: ProductShape) -> Result<Self> {
        if shape.len() != self.m.len() {
            return Err(Error::DimensionMismatch { expected: self.m.len(), found: shape.len() });
        }
        self.shape = Some(shape);
        Ok(self)
    }

    fn from_parts(m: Vec<f64>, edges: BTreeMap<(usize, usize), Coupling>, shape: Option<ProductShape>) -> Result<Self> {
        let mut adjacency = vec![Vec::new(); m.len()];
        for &(x, y) in edges.keys() {
            if x >= m.len() || y >= m.len() {
                return Err(Error::InvalidGraph(vec![Violation::VertexOutOfRange {
                    vertex: x.max(y),
                    count: m.len(),
                }]));
            }
            adjacency[x].push(y);
            adjacency[y].push(x);
        }
        for a in &mut adjacency {
            a.sort_unstable();
        }
        let g = Self { m, edges, adjacency, shape };
        let v = validate(&g);
        if v.is_empty() {
            Ok(g)
        } else {
            Err(Error::InvalidGraph(v))
        }
    }
}

/// Collects directed entries, which may disagree with each other, and
/// canonicalizes them after validation.
#[derive(Debug, Clone, Default)]
pub struct GraphBuilder {
    m: Vec<f64>,
    entries: BTreeMap<(usize, usize), (f64, f64)>,
    shape: Option<ProductShape>,
}

impl GraphBuilder {
    pub fn new(m: Vec<f64>) -> Self {
        Self { m, ..Default::default() }
    }

    pub fn shape(mut self, shape: ProductShape) -> Self {
        self.shape = Some(shape);
        self
    }

    /// Symmetric edge with θ(x, y) = `theta`.
    pub fn edge(mut self, x: usize, y: usize, weight: f64, theta: f64) -> Self {
        self.entries.insert((x, y), (weight, theta));
        self.entries.insert((y, x), (weight, -theta));
        self
    }

    /// One orientation only; the reverse is derived unless also given.
    pub fn directed(mut self, x: usize, y: usize, weight: f64, theta: f64) -> Self {
        self.entries.insert((x, y), (weight, theta));
        self
    }

    pub fn validate(&self) -> Vec<Violation> {
        let n = self.m.len();
        let mut out = Vec::new();
        for (i, &w) in self.m.iter().enumerate() {
            if !(w > 0.0) || !w.is_finite() {
                out.push(Violation::NonPositiveWeight { vertex: i, value: w });
            }
        }
        for (&(x, y), &(w, t)) in &self.entries {
            if x >= n || y >= n {
                out.push(Violation::VertexOutOfRange { vertex: x.max(y), count: n });
                continue;
            }
            if x == y {
                out.push(Violation::SelfLoop { vertex: x });
                continue;
            }
            if !w.is_finite() || !t.is_finite() {
                out.push(Violation::NonFinite { x, y });
                continue;
            }
            if x < y {
                if let Some(&(wb, tb)) = self.entries.get(&(y, x)) {
                    if wb != w {
                        out.push(Violation::Asymmetric { x, y, forward: w, backward: wb });
                    }
                    if wrap_angle(t + tb).abs() > 1e-15 {
                        out.push(Violation::NotAntisymmetric { x, y, forward: t, backward: tb });
                    }
                }
            }
            if w < 0.0 {
                out.push(Violation::NegativeEdgeWeight { x, y, value: w });
            } else if w == 0.0 && t != 0.0 {
                out.push(Violation::ThetaOffSupport { x, y, theta: t });
            } else if w > 0.0 && w < MIN_EDGE_WEIGHT {
                out.push(Violation::DenormalEdge { x, y, value: w });
            }
        }
        out
    }

    pub fn build(self) -> Result<WeightedMagneticGraph> {
        let v = self.validate();
        if !v.is_empty() {
            return Err(Error::InvalidGraph(v));
        }
        let mut edges = BTreeMap::new();
        for (&(x, y), &(w, t)) in &self.entries {
            if w == 0.0 {
                continue;
            }
            let (lo, hi, t) = if x < y { (x, y, t) } else { (y, x, -t) };
            edges.entry((lo, hi)).or_insert(Coupling { weight: w, theta: wrap_angle(t) });
        }
        WeightedMagneticGraph::from_parts(self.m, edges, self.shape)
    }
}

/// Checks the constraints expressible on a built graph. Empty means valid.
pub fn validate(g: &WeightedMagneticGraph) -> Vec<Violation> {
    let mut out = Vec::new();
    for (i, &w) in g.m.iter().enumerate() {
        if !(w > 0.0) || !w.is_finite() {
            out.push(Violation::NonPositiveWeight { vertex: i, value: w });
        }
    }
    for (&(x, y), c) in &g.edges {
        if x == y {
            out.push(Violation::SelfLoop { vertex: x });
        }
        if !c.weight.is_finite() || !c.theta.is_finite() {
            out.push(Violation::NonFinite { x, y });
        } else if c.weight < 0.0 {
            out.push(Violation::NegativeEdgeWeight { x, y, value: c.weight });
        } else if c.weight == 0.0 && c.theta != 0.0 {
            out.push(Violation::ThetaOffSupport { x, y, theta: c.theta });
        } else if c.weight < MIN_EDGE_WEIGHT && c.weight > 0.0 {
            out.push(Violation::DenormalEdge { x, y, value: c.weight });
        }
        if !(c.theta > -PI && c.theta <= PI) {
            out.push(Violation::ThetaRange { x, y, theta: c.theta });
        }
    }
    out
}

/// The exponentially weighted half-line truncated to `n_max` sites.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct FunnelFactorSpec {
    pub n_max: usize,
    #[serde(default)]
    pub theta1: Vec<f64>,
}

impl FunnelFactorSpec {
    pub fn new(n_max: usize) -> Self {
        Self { n_max, theta1: Vec::new() }
    }

    pub fn with_theta(n_max: usize, theta1: Vec<f64>) -> Self {
        Self { n_max, theta1 }
    }

    /// θ₁(n, n+1) for every edge, zero-filled when unspecified.
    pub fn phases(&self) -> Result<Vec<f64>> {
        if self.n_max < 2 {
            return Err(Error::InvalidParameter(format!("n_max = {} < 2", self.n_max)));
        }
        if self.theta1.is_empty() {
            return Ok(vec![0.0; self.n_max - 1]);
        }
        if self.theta1.len() != self.n_max - 1 {
            return Err(Error::DimensionMismatch { expected: self.n_max - 1, found: self.theta1.len() });
        }
        if let Some(t) = self.theta1.iter().find(|t| !t.is_finite()) {
            return Err(Error::InvalidParameter(format!("theta1 entry {t} is not finite")));
        }
        Ok(self.theta1.clone())
    }
}

/// Finite second factor.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct SecondFactorSpec {
    pub m2: Vec<f64>,
    /// `[i, j, weight, theta]` with θ(i, j) = theta.
    #[serde(default)]
    pub edges: Vec<(usize, usize, f64, f64)>,
}

impl SecondFactorSpec {
    pub fn single(m2: f64) -> Self {
        Self { m2: vec![m2], edges: Vec::new() }
    }

    pub fn build(&self) -> Result<WeightedMagneticGraph> {
        let mut b = GraphBuilder::new(self.m2.clone());
        for &(i, j, w, t) in &self.edges {
            b = b.directed(i, j, w, t);
            if !self.edges.iter().any(|&(a, c, _, _)| a == j && c == i) {
                b = b.directed(j, i, w, -t);
            }
        }
        b.build()
    }
}

/// `m(n) = eⁿ`, `E(n, n+1) = e^{(2n+1)/2}`, θ = θ₁.
pub fn build_half_line(spec: &FunnelFactorSpec) -> Result<WeightedMagneticGraph> {
    let theta = spec.phases()?;
    if spec.n_max > MAX_LINEAR_N {
        return Err(Error::Envelope(format!(
            "n_max = {} exceeds {MAX_LINEAR_N}: e^n overflows in the linear-weight graph",
            spec.n_max
        )));
    }
    let m: Vec<f64> = (0..spec.n_max).map(|n| (n as f64).exp()).collect();
    let mut edges = BTreeMap::new();
    for (n, &t) in theta.iter().enumerate() {
        let w = ((2 * n + 1) as f64 / 2.0).exp();
        edges.insert((n, n + 1), Coupling { weight: w, theta: wrap_angle(t) });
    }
    WeightedMagneticGraph::from_parts(m, edges, None)
}

/// Path on `n` vertices with unit weights (the unweighted half-line).
pub fn unit_path(n: usize) -> Result<WeightedMagneticGraph> {
    let mut edges = BTreeMap::new();
    for k in 0..n.saturating_sub(1) {
        edges.insert((k, k + 1), Coupling { weight: 1.0, theta: 0.0 });
    }
    WeightedMagneticGraph::from_parts(vec![1.0; n], edges, None)
}

fn product_with(
    g1: &WeightedMagneticGraph,
    g2: &WeightedMagneticGraph,
    horizontal: impl Fn(f64, usize) -> f64,
    vertical: impl Fn(f64, usize) -> f64,
) -> Result<WeightedMagneticGraph> {
    let shape = ProductShape::new(g1.vertex_count(), g2.vertex_count());
    let mut m = Vec::with_capacity(shape.len());
    for &a in &g1.m {
        for &b in &g2.m {
            m.push(a * b);
        }
    }
    let mut edges = BTreeMap::new();
    for (&(x, y), c) in &g1.edges {
        for z in 0..shape.n2 {
            let (p, q) = (shape.flat(x, z).0, shape.flat(y, z).0);
            edges.insert((p, q), Coupling { weight: horizontal(c.weight, z), theta: c.theta });
        }
    }
    for (&(x, y), c) in &g2.edges {
        for a in 0..shape.n1 {
            let (p, q) = (shape.flat(a, x).0, shape.flat(a, y).0);
            edges.insert((p, q), Coupling { weight: vertical(c.weight, a), theta: c.theta });
        }
    }
    WeightedMagneticGraph::from_parts(m, edges, Some(shape))
}

/// Twisted product: `m = m₁m₂`, `E = E₁δ + δE₂`, `θ = θ₁δ + δθ₂`.
pub fn twisted_product(g1: &WeightedMagneticGraph, g2: &WeightedMagneticGraph) -> Result<WeightedMagneticGraph> {
    product_with(g1, g2, |w, _| w, |w, _| w)
}

/// Cartesian product: edge weights scaled by the other factor's vertex weight.
pub fn cartesian_product(g1: &WeightedMagneticGraph, g2: &WeightedMagneticGraph) -> Result<WeightedMagneticGraph> {
    product_with(g1, g2, |w, z| w * g2.m[z], |w, a| w * g1.m[a])
}

pub fn degree(g: &WeightedMagneticGraph, x: VertexId) -> f64 {
    let x = x.0;
    g.adjacency[x].iter().map(|&y| g.edge_weight(x, y)).sum::<f64>() / g.m[x]
}

pub fn degree_vector(g: &WeightedMagneticGraph) -> Vec<f64> {
    g.vertices().map(|x| degree(g, x)).collect()
}

/// JSON graph spec: half-line factor plus second factor.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub halfline: FunnelFactorSpec,
    #[serde(default = "default_factor2")]
    pub factor2: SecondFactorSpec,
}

fn default_factor2() -> SecondFactorSpec {
    SecondFactorSpec::single(1.0)
}

impl GraphSpec {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    /// Twisted product of the half-line with the second factor (n_max ≤ 600).
    pub fn build(&self) -> Result<WeightedMagneticGraph> {
        let g1 = build_half_line(&self.halfline)?;
        let g2 = self.factor2.build()?;
        twisted_product(&g1, &g2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e() -> f64 {
        1f64.exp()
    }

    #[test]
    fn half_line_two_sites() {
        let g = build_half_line(&FunnelFactorSpec::new(2)).unwrap();
        assert_eq!(g.weights(), &[1.0, e()]);
        assert!((g.edge_weight(0, 1) - 1.648721270700128).abs() < 1e-15);
        assert!(validate(&g).is_empty());
    }

    #[test]
    fn half_line_theta_antisymmetric() {
        let g = build_half_line(&FunnelFactorSpec::with_theta(3, vec![0.3, -0.3])).unwrap();
        assert_eq!(g.theta(1, 0), -0.3);
        assert_eq!(g.theta(0, 1), 0.3);
        assert_eq!(g.theta(2, 1), 0.3);
    }

    #[test]
    fn half_line_degrees() {
        let g = build_half_line(&FunnelFactorSpec::new(5)).unwrap();
        let d = degree_vector(&g);
        assert!((d[0] - 0.5f64.exp()).abs() < 1e-14);
        for v in &d[1..=3] {
            assert!((v - 2.255252).abs() < 1e-6, "{v}");
        }
        assert!((d[4] - (-0.5f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn half_line_rejects_short_and_long() {
        assert!(build_half_line(&FunnelFactorSpec::new(1)).is_err());
        assert!(matches!(build_half_line(&FunnelFactorSpec::new(700)), Err(Error::Envelope(_))));
        assert!(build_half_line(&FunnelFactorSpec::with_theta(4, vec![0.1])).is_err());
    }

    #[test]
    fn twisted_with_single_vertex() {
        let g1 = build_half_line(&FunnelFactorSpec::new(2)).unwrap();
        let g2 = SecondFactorSpec::single(2.0).build().unwrap();
        let g = twisted_product(&g1, &g2).unwrap();
        assert_eq!(g.weights(), &[2.0, 2.0 * e()]);
        assert_eq!(g.edge_weight(0, 1), 0.5f64.exp());
    }

    #[test]
    fn twisted_with_isolated_pair() {
        let g1 = build_half_line(&FunnelFactorSpec::new(2)).unwrap();
        let g2 = SecondFactorSpec { m2: vec![1.0, 1.0], edges: vec![] }.build().unwrap();
        let g = twisted_product(&g1, &g2).unwrap();
        assert_eq!(g.vertex_count(), 4);
        assert_eq!(g.edge_count(), 2);
        assert!(g.edge_weight(0, 2) > 0.0 && g.edge_weight(1, 3) > 0.0);
        assert_eq!(g.edge_weight(0, 1), 0.0);
    }

    #[test]
    fn cartesian_examples() {
        let g1 = build_half_line(&FunnelFactorSpec::new(2)).unwrap();
        let g2 = SecondFactorSpec::single(3.0).build().unwrap();
        let g = cartesian_product(&g1, &g2).unwrap();
        assert!((g.edge_weight(0, 1) - 3.0 * 0.5f64.exp()).abs() < 1e-15);

        let p = unit_path(1).unwrap();
        let g = cartesian_product(&p, &p).unwrap();
        assert_eq!(g.vertex_count(), 1);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn cartesian_equals_twisted_for_unit_weights() {
        let a = unit_path(3).unwrap();
        let b = SecondFactorSpec { m2: vec![1.0; 3], edges: vec![(0, 1, 2.0, 0.4), (1, 2, 0.5, 0.0)] }.build().unwrap();
        assert_eq!(cartesian_product(&a, &b).unwrap(), twisted_product(&a, &b).unwrap());
    }

    #[test]
    fn degree_of_isolated_vertex() {
        let g = SecondFactorSpec::single(1.0).build().unwrap();
        assert_eq!(degree(&g, VertexId(0)), 0.0);
    }

    #[test]
    fn builder_reports_antisymmetry_and_support() {
        let b = GraphBuilder::new(vec![1.0, 1.0, 1.0])
            .directed(0, 1, 1.0, 0.2)
            .directed(1, 0, 1.0, 0.2)
            .directed(1, 2, 0.0, 0.5);
        let v = b.validate();
        assert!(v.iter().any(|x| matches!(x, Violation::NotAntisymmetric { .. })));
        assert!(v.iter().any(|x| matches!(x, Violation::ThetaOffSupport { .. })));
        assert!(b.build().is_err());
    }

    #[test]
    fn builder_reports_symmetry_positivity_and_denormals() {
        let v = GraphBuilder::new(vec![1.0, -1.0, 1.0])
            .directed(0, 1, 1.0, 0.0)
            .directed(1, 0, 2.0, 0.0)
            .edge(1, 2, 1e-310, 0.0)
            .directed(2, 2, 1.0, 0.0)
            .validate();
        assert!(v.iter().any(|x| matches!(x, Violation::Asymmetric { .. })));
        assert!(v.iter().any(|x| matches!(x, Violation::NonPositiveWeight { vertex: 1, .. })));
        assert!(v.iter().any(|x| matches!(x, Violation::DenormalEdge { .. })));
        assert!(v.iter().any(|x| matches!(x, Violation::SelfLoop { vertex: 2 })));
    }

    #[test]
    fn theta_wraps_into_range() {
        let g = GraphBuilder::new(vec![1.0, 1.0]).edge(0, 1, 1.0, 3.0 * PI / 2.0).build().unwrap();
        assert!((g.theta(0, 1) + PI / 2.0).abs() < 1e-15);
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), PI);
    }

    #[test]
    fn product_indexing_round_trip() {
        let s = ProductShape::new(7, 3);
        for v in 0..s.len() {
            let (a, b) = s.split(VertexId(v));
            assert_eq!(s.flat(a, b), VertexId(v));
        }
    }

    #[test]
    fn spec_file_parse_and_errors() {
        let ok = r#"{"halfline": {"n_max": 4, "theta1": [0.1, 0.2, 0.3]},
                     "factor2": {"m2": [1.0, 2.0], "edges": [[0, 1, 1.5, 0.25]]}}"#;
        let g = GraphSpec::parse(ok).unwrap().build().unwrap();
        assert_eq!(g.vertex_count(), 8);
        assert!((g.theta(1, 0) + 0.25).abs() < 1e-15);

        let bad = "{\"halfline\": {\"n_max\": 4,\n \"theta1\": [0.1,, 0.2]}}";
        match GraphSpec::parse(bad) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }
}
