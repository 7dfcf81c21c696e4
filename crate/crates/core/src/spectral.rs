//! Eigendecomposition, band prediction, thresholds and spectral projectors.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::linalg::{fmt17, hermitian_defect, max_abs, CMatrix};
use crate::{alpha, beta};

/// Slack for closed-interval membership.
pub const MEMBERSHIP_SLACK: f64 = 1e-12;

/// Default gap below which two thresholds are reported as clustering.
pub const DEFAULT_CLUSTER_GAP: f64 = 1e-6;

/// Ascending eigenvalues and orthonormal eigenvector columns.
#[derive(Debug, Clone)]
pub struct SpectralData {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl SpectralData {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// Indices of eigenvalues in the closed interval `[a, b]` (with slack).
    pub fn indices_in(&self, a: f64, b: f64) -> Vec<usize> {
        (0..self.values.len()).filter(|&i| in_closed(self.values[i], a, b)).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,value\n");
        for (i, v) in self.values.iter().enumerate() {
            let _ = writeln!(out, "{i},{}", fmt17(*v));
        }
        out
    }
}

pub(crate) fn in_closed(x: f64, a: f64, b: f64) -> bool {
    x >= a - MEMBERSHIP_SLACK && x <= b + MEMBERSHIP_SLACK
}

/// Full Hermitian eigendecomposition. The input is symmetrized after the
/// Hermiticity check so that round-off in the lower triangle cannot leak in.
pub fn eigh(m: &CMatrix) -> Result<SpectralData> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
    }
    let scale = max_abs(m).max(1.0);
    let deviation = hermitian_defect(m);
    if deviation > 1e-12 * scale {
        return Err(Error::NotHermitian { deviation });
    }
    let sym = (m + m.adjoint()) * crate::linalg::c(0.5);
    let (values, vectors) = crate::eigen::hermitian_eigen(&sym)?;
    Ok(SpectralData { values, vectors })
}

/// `[α/m₂(x), β/m₂(x)]` per transverse vertex and their merged union.
#[derive(Debug, Clone, PartialEq)]
pub struct BandPrediction {
    pub intervals: Vec<(f64, f64)>,
    pub union: Vec<(f64, f64)>,
}

impl BandPrediction {
    pub fn contains(&self, x: f64) -> bool {
        self.union.iter().any(|&(a, b)| in_closed(x, a, b))
    }
}

fn check_m2(m2: &[f64]) -> Result<()> {
    if m2.is_empty() {
        return Err(Error::InvalidParameter("empty m2".into()));
    }
    match m2.iter().find(|&&w| !(w > 0.0 && w.is_finite())) {
        Some(w) => Err(Error::InvalidParameter(format!("m2 value {w} is not positive"))),
        None => Ok(()),
    }
}

pub fn predict_bands(m2: &[f64]) -> Result<BandPrediction> {
    check_m2(m2)?;
    let (a, b) = (alpha(), beta());
    let intervals: Vec<(f64, f64)> = m2.iter().map(|w| (a / w, b / w)).collect();
    let mut sorted = intervals.clone();
    sorted.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut union: Vec<(f64, f64)> = Vec::new();
    for (lo, hi) in sorted {
        match union.last_mut() {
            Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
            _ => union.push((lo, hi)),
        }
    }
    Ok(BandPrediction { intervals, union })
}

/// `κ(H) = ∪ {α/m₂(x), β/m₂(x)}` with a local-finiteness diagnostic.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdSet {
    pub points: Vec<f64>,
    pub min_gap: Option<f64>,
    /// Adjacent pairs closer than the clustering gap.
    pub close_pairs: Vec<(f64, f64)>,
    /// Ends of long runs of geometrically shrinking gaps.
    pub accumulation_candidates: Vec<f64>,
}

pub fn thresholds(m2: &[f64]) -> Result<ThresholdSet> {
    thresholds_with_gap(m2, DEFAULT_CLUSTER_GAP)
}

pub fn thresholds_with_gap(m2: &[f64], delta: f64) -> Result<ThresholdSet> {
    check_m2(m2)?;
    let mut raw: Vec<f64> = m2.iter().flat_map(|w| [alpha() / w, beta() / w]).collect();
    raw.sort_by(f64::total_cmp);
    let mut points: Vec<f64> = Vec::with_capacity(raw.len());
    for p in raw {
        if points.last().is_none_or(|&q| p - q > 1e-12) {
            points.push(p);
        }
    }
    let gaps: Vec<f64> = points.windows(2).map(|w| w[1] - w[0]).collect();
    let min_gap = gaps.iter().copied().reduce(f64::min);
    let close_pairs = points.windows(2).filter(|w| w[1] - w[0] < delta).map(|w| (w[0], w[1])).collect();
    Ok(ThresholdSet {
        points: points.clone(),
        min_gap,
        close_pairs,
        accumulation_candidates: shrinking_runs(&points, &gaps),
    })
}

/// A run of at least `RUN` strictly monotone gaps that shrink by a factor of
/// ten or more points at an accumulation; report the end it shrinks toward.
fn shrinking_runs(points: &[f64], gaps: &[f64]) -> Vec<f64> {
    const RUN: usize = 6;
    let mut out = Vec::new();
    let mut start = 0;
    while start + 1 < gaps.len() {
        let increasing = gaps[start + 1] > gaps[start];
        let mut end = start + 1;
        while end + 1 < gaps.len() && (gaps[end + 1] > gaps[end]) == increasing && gaps[end + 1] != gaps[end] {
            end += 1;
        }
        if end - start + 1 >= RUN {
            let (small, large) = if increasing { (gaps[start], gaps[end]) } else { (gaps[end], gaps[start]) };
            if small < 0.1 * large {
                out.push(if increasing { points[start] } else { points[end + 1] });
            }
        }
        start = end;
    }
    out
}

/// `Σ_{λ_i ∈ [a,b]} v_i v_i^H`.
pub fn spectral_projector(sd: &SpectralData, a: f64, b: f64) -> CMatrix {
    let n = sd.dim();
    let idx = sd.indices_in(a, b);
    let mut p = CMatrix::zeros(n, n);
    for &k in &idx {
        let v = sd.vectors.column(k);
        p += v * v.adjoint();
    }
    p
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandFillReport {
    pub in_band: usize,
    pub outliers: usize,
    pub max_gap: f64,
    /// `(|min λ − a|, |max λ − b|)` per union interval (infinite if empty).
    pub endpoint_errors: Vec<(f64, f64)>,
}

impl BandFillReport {
    pub fn max_endpoint_error(&self) -> f64 {
        self.endpoint_errors.iter().map(|&(a, b)| a.max(b)).fold(0.0, f64::max)
    }
}

pub fn band_fill_report(sd: &SpectralData, band: &BandPrediction) -> BandFillReport {
    let mut in_band = 0;
    let mut max_gap: f64 = 0.0;
    let mut endpoint_errors = Vec::new();
    for &(a, b) in &band.union {
        let inside: Vec<f64> = sd.values.iter().copied().filter(|&x| in_closed(x, a, b)).collect();
        in_band += inside.len();
        for w in inside.windows(2) {
            max_gap = max_gap.max(w[1] - w[0]);
        }
        match (inside.first(), inside.last()) {
            (Some(&lo), Some(&hi)) => endpoint_errors.push(((lo - a).abs(), (hi - b).abs())),
            _ => endpoint_errors.push((f64::INFINITY, f64::INFINITY)),
        }
    }
    BandFillReport { in_band, outliers: sd.dim() - in_band, max_gap, endpoint_errors }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, diag};

    #[test]
    fn eigh_examples() {
        assert_eq!(eigh(&diag(&[3.0, 1.0, 2.0])).unwrap().values, vec![1.0, 2.0, 3.0]);
        let m = CMatrix::from_row_slice(2, 2, &[c(1.0), c(-1.0), c(-1.0), c(2.0)]);
        let v = eigh(&m).unwrap().values;
        assert!((v[0] - (3.0 - 5f64.sqrt()) / 2.0).abs() < 1e-15);
        assert!((v[1] - 2.618034).abs() < 1e-6);
    }

    #[test]
    fn eigh_rejects_non_hermitian() {
        let m = CMatrix::from_row_slice(2, 2, &[c(1.0), c(2.0), c(0.0), c(1.0)]);
        assert!(matches!(eigh(&m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn band_examples() {
        let b = predict_bands(&[1.0]).unwrap();
        assert!((b.union[0].0 - 0.255252).abs() < 1e-6 && (b.union[0].1 - 4.255252).abs() < 1e-6);
        let b = predict_bands(&[1.0, 2.0]).unwrap();
        assert_eq!(b.union.len(), 1);
        assert!((b.union[0].0 - 0.127626).abs() < 1e-6);
        let b = predict_bands(&[1.0, 100.0]).unwrap();
        assert_eq!(b.union.len(), 2);
        for &(lo, hi) in &predict_bands(&[0.3, 1.0, 7.0]).unwrap().intervals {
            assert!(hi > lo);
        }
        assert!(predict_bands(&[1.0, 0.0]).is_err());
    }

    #[test]
    fn threshold_examples() {
        assert_eq!(thresholds(&[1.0]).unwrap().points.len(), 2);
        let t = thresholds(&[1.0, 2.0]).unwrap();
        assert_eq!(t.points.len(), 4);
        assert!(t.accumulation_candidates.is_empty() && t.close_pairs.is_empty());
        let m2: Vec<f64> = (1..=50).map(|x| x as f64).collect();
        let t = thresholds(&m2).unwrap();
        assert!(!t.accumulation_candidates.is_empty());
        assert!(t.accumulation_candidates[0] < 0.01);
        assert!(thresholds(&[1.0, 1.0]).unwrap().points.len() == 2);
    }

    #[test]
    fn projector_examples() {
        let sd = eigh(&diag(&[1.0, 2.0, 3.0])).unwrap();
        assert_eq!(spectral_projector(&sd, 0.0, 10.0), CMatrix::identity(3, 3));
        assert_eq!(spectral_projector(&sd, 5.0, 6.0), CMatrix::zeros(3, 3));
        let p = spectral_projector(&sd, 1.5, 2.5);
        assert_eq!(p, diag(&[0.0, 1.0, 0.0]));
    }

    #[test]
    fn band_fill_negative_case() {
        let sd = eigh(&diag(&[0.3, 1.0, 2.0, 4.2, 9.0])).unwrap();
        let good = band_fill_report(&sd, &predict_bands(&[1.0]).unwrap());
        assert_eq!(good.outliers, 1);
        let wrong = BandPrediction { intervals: vec![(alpha() + 1.0, beta())], union: vec![(alpha() + 1.0, beta())] };
        assert!(band_fill_report(&sd, &wrong).max_endpoint_error() > 0.5);
    }
}
