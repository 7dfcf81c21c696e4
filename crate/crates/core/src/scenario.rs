//! Scenario files and experiment dispatch.
//!
//! A scenario is a JSON document naming one experiment:
//!
//! ```json
//! {
//!   "name": "identities",
//!   "graph": { "halfline": { "n_max": 300 }, "factor2": { "m2": [1.0] } },
//!   "perturbation": { "mu": { "form": "power", "p": 2.0, "amplitude": 0.3 } },
//!   "experiment": { "kind": "verify-identities" },
//!   "seed": 7
//! }
//! ```
//!
//! Running it yields CSV files, a `key,value` summary and a list of failed
//! assertions. Every number is written with 17 significant digits and the
//! output depends only on the file and the seed.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::alpha;
use crate::analysis::{
    band_projected, kato_smoothness_integral, lap_probe, pointwise_decay, DIVERGENCE_TAU, INTERIOR_CAP,
};
use crate::conjugate::{verify_commutator_identity_n, verify_full_commutator, InteriorWindow};
use crate::error::{Error, Result};
use crate::funnel::{FunnelModel, MAX_DIM};
use crate::graph::{build_half_line, unit_path, FunnelFactorSpec, GraphSpec, MAX_LINEAR_N};
use crate::linalg::{c, fmt17, max_abs};
use crate::mourre::{mourre_grid, reports_to_csv, MourreOptions, Verdict};
use crate::operators::{assemble_laplacian, conjugate_by_diagonal, laplacian_kernel, product_gauge, weight_transform};
use crate::perturbation::{
    check_hypotheses, difference_kernel, kernel_bound, relative_compactness_proxy, PerturbationSpec,
};
use crate::spectral::{band_fill_report, eigh, predict_bands, thresholds_with_gap, DEFAULT_CLUSTER_GAP};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: Option<String>,
    pub graph: GraphSpec,
    #[serde(default)]
    pub perturbation: Option<PerturbationSpec>,
    pub experiment: Experiment,
    #[serde(default)]
    pub seed: u64,
}

fn d_tol() -> f64 {
    1e-10
}
fn d_cluster() -> f64 {
    DEFAULT_CLUSTER_GAP
}
fn d_mask_sites() -> usize {
    10
}
fn d_mask_mass() -> f64 {
    0.25
}
fn d_margin() -> f64 {
    0.05
}
fn d_true() -> bool {
    true
}
fn d_s_lap() -> f64 {
    0.7
}
fn d_rhos() -> Vec<f64> {
    vec![1e-1, 1e-2, 1e-3]
}
fn d_tau() -> f64 {
    DIVERGENCE_TAU
}
fn d_cap() -> f64 {
    INTERIOR_CAP
}
fn d_s_prop() -> f64 {
    1.0
}
fn d_t_max() -> f64 {
    100.0
}
fn d_steps() -> usize {
    2000
}
fn d_probes() -> Vec<usize> {
    vec![0]
}
fn d_samples() -> usize {
    20
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Experiment {
    VerifyIdentities {
        #[serde(default = "d_tol")]
        tolerance: f64,
        #[serde(default)]
        lo: Option<usize>,
        #[serde(default)]
        hi: Option<usize>,
    },
    Spectra {
        #[serde(default)]
        band_tolerance: Option<f64>,
        #[serde(default)]
        max_gap: Option<f64>,
        #[serde(default = "d_cluster")]
        cluster_gap: f64,
    },
    Mourre {
        intervals: Vec<(f64, f64)>,
        #[serde(default = "d_mask_sites")]
        mask_sites: usize,
        #[serde(default = "d_mask_mass")]
        mask_mass: f64,
        #[serde(default = "d_mask_sites")]
        defect_sites: usize,
        #[serde(default = "d_margin")]
        margin: f64,
        #[serde(default = "d_true")]
        require_positive: bool,
    },
    Lap {
        lambdas: Vec<f64>,
        #[serde(default = "d_s_lap")]
        s: f64,
        #[serde(default = "d_rhos")]
        rhos: Vec<f64>,
        #[serde(default = "d_tau")]
        tau: f64,
        #[serde(default = "d_cap")]
        cap: f64,
        #[serde(default)]
        form_weighted: bool,
        #[serde(default)]
        bounded: Vec<f64>,
        #[serde(default)]
        divergent: Vec<f64>,
    },
    Propagate {
        band: (f64, f64),
        #[serde(default = "d_s_prop")]
        s: f64,
        #[serde(default = "d_t_max")]
        t_max: f64,
        #[serde(default = "d_steps")]
        steps: usize,
        #[serde(default)]
        start: usize,
        #[serde(default = "d_probes")]
        probes: Vec<usize>,
        #[serde(default)]
        max_ratio: Option<f64>,
        #[serde(default)]
        max_decay: Option<f64>,
    },
    CheckHypotheses {
        #[serde(default)]
        expect: BTreeMap<String, bool>,
        #[serde(default = "d_samples")]
        samples: usize,
        #[serde(default)]
        radii: Vec<usize>,
    },
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::VerifyIdentities { .. } => "verify-identities",
            Experiment::Spectra { .. } => "spectra",
            Experiment::Mourre { .. } => "mourre",
            Experiment::Lap { .. } => "lap",
            Experiment::Propagate { .. } => "propagate",
            Experiment::CheckHypotheses { .. } => "check-hypotheses",
        }
    }
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut s = Self::parse(&std::fs::read_to_string(path)?)?;
        if s.name.is_none() {
            s.name = path.file_stem().map(|x| x.to_string_lossy().into_owned());
        }
        Ok(s)
    }

    pub fn display_name(&self) -> &str {
        self.name.as_deref().unwrap_or(self.experiment.kind())
    }

    /// Envelope checks: `n_max ≤ 600` and flattened dimension `≤ 5000`.
    pub fn validate(&self) -> Result<()> {
        let n = self.graph.halfline.n_max;
        if n > MAX_LINEAR_N {
            return Err(Error::Envelope(format!("n_max = {n} exceeds {MAX_LINEAR_N}: e^n overflows the weights")));
        }
        let dim = n * self.graph.factor2.m2.len();
        if dim > MAX_DIM {
            return Err(Error::Envelope(format!("flattened dimension {dim} exceeds {MAX_DIM}")));
        }
        self.graph.build()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Failure {
    pub assertion: String,
    pub detail: String,
}

/// Files and summary of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub scenario: String,
    pub experiment: &'static str,
    pub seed: u64,
    /// `(file name, contents)`.
    pub files: Vec<(String, String)>,
    pub summary: Vec<(String, String)>,
    pub failures: Vec<Failure>,
}

impl Report {
    fn new(scenario: &Scenario, seed: u64) -> Self {
        Self {
            scenario: scenario.display_name().to_string(),
            experiment: scenario.experiment.kind(),
            seed,
            files: Vec::new(),
            summary: Vec::new(),
            failures: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    fn metric(&mut self, key: impl Into<String>, value: f64) {
        self.summary.push((key.into(), fmt17(value)));
    }

    fn note(&mut self, key: impl Into<String>, value: impl ToString) {
        self.summary.push((key.into(), value.to_string()));
    }

    fn check(&mut self, ok: bool, assertion: impl Into<String>, detail: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(Failure { assertion: assertion.into(), detail: detail() });
        }
    }

    pub fn summary_csv(&self) -> String {
        let mut out = String::from("key,value\n");
        let _ = writeln!(out, "scenario,{}", self.scenario);
        let _ = writeln!(out, "experiment,{}", self.experiment);
        let _ = writeln!(out, "seed,{}", self.seed);
        let _ = writeln!(out, "status,{}", if self.passed() { "pass" } else { "fail" });
        let _ = writeln!(out, "failures,{}", self.failures.len());
        for (k, v) in &self.summary {
            let _ = writeln!(out, "{k},{v}");
        }
        out
    }

    pub fn failures_csv(&self) -> String {
        let mut out = String::from("assertion,detail\n");
        for f in &self.failures {
            let _ = writeln!(out, "{},{}", f.assertion, f.detail.replace(',', ";"));
        }
        out
    }

    /// Writes every file plus `summary.csv` and `failures.csv` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, body) in &self.files {
            std::fs::write(dir.join(name), body)?;
        }
        std::fs::write(dir.join("summary.csv"), self.summary_csv())?;
        std::fs::write(dir.join("failures.csv"), self.failures_csv())?;
        Ok(())
    }
}

/// Process exit status for an error: 2 for unparsable or invalid input,
/// 3 for envelope violations, 1 for failures during the computation.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Envelope(_) => 3,
        Error::NoConvergence { .. } => 1,
        Error::Parse { .. }
        | Error::InvalidGraph(_)
        | Error::InvalidParameter(_)
        | Error::DimensionMismatch { .. }
        | Error::PerturbationRange { .. }
        | Error::WindowTooSmall { .. }
        | Error::NotHermitian { .. }
        | Error::Io(_) => 2,
    }
}

/// Runs a scenario; `seed` overrides the file's seed.
pub fn run(scenario: &Scenario, seed: Option<u64>) -> Result<Report> {
    scenario.validate()?;
    let seed = seed.unwrap_or(scenario.seed);
    let model = FunnelModel::from_spec(&scenario.graph)?;
    let spec = scenario.perturbation.clone().unwrap_or_default();
    let mut report = Report::new(scenario, seed);
    match &scenario.experiment {
        Experiment::VerifyIdentities { tolerance, lo, hi } => {
            let window = match (lo, hi) {
                (None, None) => None,
                _ => {
                    let n = model.n_max();
                    Some(InteriorWindow::new(lo.unwrap_or(5), hi.unwrap_or(n.saturating_sub(6)), n)?)
                }
            };
            identities(&model, window, *tolerance, seed, &mut report)?
        }
        Experiment::Spectra { band_tolerance, max_gap, cluster_gap } => {
            spectra(&model, &spec, *band_tolerance, *max_gap, *cluster_gap, &mut report)?
        }
        Experiment::Mourre { intervals, mask_sites, mask_mass, defect_sites, margin, require_positive } => {
            let opts = MourreOptions {
                mask_sites: *mask_sites,
                mask_mass: *mask_mass,
                defect_sites: *defect_sites,
                margin: *margin,
            };
            let h = model.hamiltonian(&spec)?;
            let reports = mourre_grid(&h, &model.conjugate_operator()?, model.shape(), intervals, model.m2(), &opts)?;
            for r in &reports {
                let key = format!("[{};{}]", fmt17(r.a), fmt17(r.b));
                report.metric(format!("c_numeric{key}"), r.c_numeric);
                report.metric(format!("c_compact{key}"), r.c_compact);
                if *require_positive {
                    report.check(r.verdict != Verdict::Violated, format!("mourre{key}"), || {
                        format!("c_numeric {} below c_theory {:?} minus margin", fmt17(r.c_numeric), r.c_theory)
                    });
                }
            }
            report.files.push(("mourre.csv".into(), reports_to_csv(&reports)));
        }
        Experiment::Lap { lambdas, s, rhos, tau, cap, form_weighted, bounded, divergent } => {
            let h = model.hamiltonian(&spec)?;
            let sd = eigh(&h.matrix)?;
            let weights = if *form_weighted {
                crate::analysis::form_weights(model.shape(), *s, &model.degree_vector())?
            } else {
                crate::analysis::lambda_weights(model.shape(), *s)
            };
            let probe = crate::analysis::ResolventProbe::new(&sd, &weights)?;
            let mut grid: Vec<f64> = lambdas.iter().chain(bounded).chain(divergent).copied().collect();
            grid.sort_by(f64::total_cmp);
            grid.dedup();
            let res = lap_probe(&probe, *s, *form_weighted, &grid, rhos, *tau)?;
            report.note("weighting", if *form_weighted { "form-surrogate" } else { "lambda" });
            for (i, &l) in grid.iter().enumerate() {
                report.metric(format!("growth[{}]", fmt17(l)), res.growth[i]);
                if bounded.contains(&l) {
                    report.check(res.growth[i] < *cap, format!("bounded[{}]", fmt17(l)), || {
                        format!("growth {} not below {}", fmt17(res.growth[i]), fmt17(*cap))
                    });
                }
                if divergent.contains(&l) {
                    report.check(res.flagged[i], format!("divergent[{}]", fmt17(l)), || {
                        format!("growth {} not above {}", fmt17(res.growth[i]), fmt17(*tau))
                    });
                }
            }
            report.files.push(("lap.csv".into(), res.to_csv()));
        }
        Experiment::Propagate { band, s, t_max, steps, start, probes, max_ratio, max_decay } => {
            let h = model.hamiltonian(&spec)?;
            let sd = eigh(&h.matrix)?;
            if *start >= model.dim() {
                return Err(Error::InvalidParameter(format!("start vertex {start} outside the graph")));
            }
            let mut delta = vec![c(0.0); model.dim()];
            delta[*start] = c(1.0);
            let f = band_projected(&sd, &delta, band.0, band.1)?
                .ok_or_else(|| Error::InvalidParameter("start vector has no component in the band".into()))?;
            let prop = kato_smoothness_integral(&sd, model.shape(), *band, &f, *s, *t_max, *steps)?;
            let traces = pointwise_decay(&sd, model.shape(), Some(*band), &f, probes, *t_max, *steps)?;
            let ratio = prop.ratio().unwrap_or(f64::NAN);
            report.metric("ratio", ratio);
            report.metric("integral", *prop.cumulative.last().unwrap_or(&0.0));
            for (k, &p) in probes.iter().enumerate() {
                let d = traces.late_max[k] / traces.early_max[k];
                report.metric(format!("decay[{p}]"), d);
                if let Some(limit) = max_decay {
                    report.check(d < *limit, format!("decay[{p}]"), || {
                        format!("late/early {} not below {}", fmt17(d), fmt17(*limit))
                    });
                }
            }
            if let Some(limit) = max_ratio {
                report.check(ratio <= *limit, "kato-ratio", || {
                    format!("I(T)/I(T/2) = {} exceeds {}", fmt17(ratio), fmt17(*limit))
                });
            }
            report.files.push(("propagation.csv".into(), prop.to_csv()));
            report.files.push(("traces.csv".into(), traces.to_csv()));
        }
        Experiment::CheckHypotheses { expect, samples, radii } => {
            hypotheses(scenario, &spec, expect, *samples, radii, seed, &mut report)?
        }
    }
    Ok(report)
}

fn identities(
    model: &FunnelModel,
    window: Option<InteriorWindow>,
    tol: f64,
    seed: u64,
    report: &mut Report,
) -> Result<()> {
    let n = model.n_max();
    let mut rows = String::from("identity,quantity,value\n");
    let mut row = |id: &str, q: &str, v: f64| {
        let _ = writeln!(rows, "{id},{q},{}", fmt17(v));
    };

    let id = verify_commutator_identity_n(n, window.clone())?;
    row("half-line-commutator", "interior_residual", id.interior_residual);
    row("half-line-commutator", "defect_rank", id.defect_rank as f64);
    row("half-line-commutator", "boundary_residual", id.boundary_residual);
    report.metric("commutator.interior_residual", id.interior_residual);
    report.note("commutator.defect_support", format!("{:?}", id.defect_support).replace(',', ";"));
    report.check(id.interior_residual <= tol, "commutator.interior", || {
        format!("residual {} above {}", fmt17(id.interior_residual), fmt17(tol))
    });
    report.check(id.defect_support.iter().all(|&k| k <= 2) && id.defect_rank <= 2, "commutator.defect", || {
        format!("support {:?} rank {}", id.defect_support, id.defect_rank)
    });

    let radii: Vec<usize> = [n / 8, n / 4, n / 2].into_iter().collect();
    let full = verify_full_commutator(model, window, &radii)?;
    row("funnel-commutator", "interior_residual", full.interior_residual);
    row("funnel-commutator", "k_norm", full.k_norm);
    for (r, v) in &full.tail_norms {
        row("funnel-commutator", &format!("tail_norm[{r}]"), *v);
    }
    report.metric("funnel.interior_residual", full.interior_residual);
    report.check(full.interior_residual <= tol, "funnel.interior", || {
        format!("residual {} above {}", fmt17(full.interior_residual), fmt17(tol))
    });
    report.check(full.tails_decrease(), "funnel.tails", || "tail norms increase with r".into());

    // Weight change m -> m u -> m with a seeded factor u in [1/2, 2].
    let g = model.graph()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m_new: Vec<f64> = g.weights().iter().map(|m| m * 2f64.powf(rng.random_range(-1.0..1.0))).collect();
    let (gp, w) = weight_transform(&g, &m_new)?;
    let mut rhs = laplacian_kernel(&g);
    for x in 0..g.vertex_count() {
        rhs[(x, x)] -= c(w.values[x]);
    }
    let t: Vec<Complex64> = g.weights().iter().zip(&m_new).map(|(m, mn)| c((m / mn).sqrt())).collect();
    let lhs = laplacian_kernel(&gp);
    let transform = max_abs(&(&lhs - conjugate_by_diagonal(&rhs, &t))) / max_abs(&lhs);
    let (back, _) = weight_transform(&gp, g.weights())?;
    let round_trip = max_abs(&(assemble_laplacian(&g).matrix - assemble_laplacian(&back).matrix));
    row("weight-transform", "relative_residual", transform);
    row("weight-transform", "round_trip", round_trip);
    report.metric("weight.round_trip", round_trip);
    report.check(transform <= 1e-12 && round_trip <= 1e-12, "weight.transform", || {
        format!("transform {} round trip {}", fmt17(transform), fmt17(round_trip))
    });

    // Gauge removal of the half-line phases.
    let bare = FunnelModel::new(
        &FunnelFactorSpec::new(n),
        &crate::graph::SecondFactorSpec {
            m2: model.m2().to_vec(),
            edges: model.factor2().edges().map(|(a, b, e)| (a, b, e.weight, e.theta)).collect(),
        },
    )?;
    let gauge = max_abs(
        &(conjugate_by_diagonal(&model.laplacian().matrix, &product_gauge(model.theta1(), model.n2()))
            - bare.laplacian().matrix),
    );
    row("gauge", "residual", gauge);
    report.check(gauge <= 1e-12, "gauge", || format!("residual {}", fmt17(gauge)));

    // Flattened half-line versus Δ_ℕ + (1 − e^{-1/2})1_{0} + α.
    let g1 = build_half_line(&FunnelFactorSpec::new(n))?;
    let root: Vec<Complex64> = g1.weights().iter().map(|v| c(v.sqrt())).collect();
    let flat = conjugate_by_diagonal(&laplacian_kernel(&g1), &root);
    let mut expect = assemble_laplacian(&unit_path(n)?).matrix;
    for k in 0..n {
        expect[(k, k)] += c(alpha());
    }
    expect[(0, 0)] += c(1.0 - (-0.5f64).exp());
    let shift = max_abs(&(flat - expect).view((0, 0), (n - 1, n - 1)).into_owned());
    row("flattened-half-line", "residual", shift);
    report.check(shift <= 1e-12, "flattened-half-line", || format!("residual {}", fmt17(shift)));

    report.files.push(("identities.csv".into(), rows));
    Ok(())
}

fn spectra(
    model: &FunnelModel,
    spec: &PerturbationSpec,
    band_tolerance: Option<f64>,
    max_gap: Option<f64>,
    cluster_gap: f64,
    report: &mut Report,
) -> Result<()> {
    let sd = eigh(&model.hamiltonian(spec)?.matrix)?;
    let band = predict_bands(model.m2())?;
    let fill = band_fill_report(&sd, &band);
    let th = thresholds_with_gap(model.m2(), cluster_gap)?;
    report.note("in_band", fill.in_band);
    report.note("outliers", fill.outliers);
    report.metric("max_gap", fill.max_gap);
    report.metric("max_endpoint_error", fill.max_endpoint_error());
    report.note("thresholds", th.points.iter().map(|p| fmt17(*p)).collect::<Vec<_>>().join(";"));
    if let Some(tol) = band_tolerance {
        let e = fill.max_endpoint_error();
        report.check(e <= tol, "band.endpoints", || format!("endpoint error {} above {}", fmt17(e), fmt17(tol)));
    }
    if let Some(limit) = max_gap {
        report
            .check(fill.max_gap <= limit, "band.gap", || format!("gap {} above {}", fmt17(fill.max_gap), fmt17(limit)));
    }
    let mut bands = String::from("lo,hi\n");
    for (a, b) in &band.union {
        let _ = writeln!(bands, "{},{}", fmt17(*a), fmt17(*b));
    }
    report.files.push(("eigenvalues.csv".into(), sd.to_csv()));
    report.files.push(("bands.csv".into(), bands));
    Ok(())
}

fn hypotheses(
    scenario: &Scenario,
    spec: &PerturbationSpec,
    expect: &BTreeMap<String, bool>,
    samples: usize,
    radii: &[usize],
    seed: u64,
    report: &mut Report,
) -> Result<()> {
    let g = scenario.graph.build()?;
    let reports = check_hypotheses(&g, spec)?;
    let mut csv = String::from("hypothesis,sup,slope,trend,satisfied\n");
    for h in &reports {
        let slope = h.slope.map(fmt17).unwrap_or_default();
        let _ = writeln!(csv, "{},{},{},{},{}", h.id, fmt17(h.sup), slope, h.trend.label(), h.satisfied());
        report.note(format!("{}.trend", h.id), h.trend.label());
    }
    for (id, &want) in expect {
        match reports.iter().find(|h| h.id == id) {
            Some(h) => report.check(h.satisfied() == want, format!("hypothesis.{id}"), || {
                format!("satisfied = {} (trend {})", h.satisfied(), h.trend.label())
            }),
            None => return Err(Error::InvalidParameter(format!("unknown hypothesis {id}"))),
        }
    }
    let kernel = difference_kernel(&g, spec)?;
    let mut offdiag = kernel.matrix.clone();
    for x in 0..g.vertex_count() {
        offdiag[(x, x)] = c(0.0);
    }
    // Back to ℓ²(V, m) for the kernel criterion.
    let root: Vec<f64> = g.weights().iter().map(|m| m.sqrt()).collect();
    let b =
        crate::linalg::CMatrix::from_fn(offdiag.nrows(), offdiag.ncols(), |i, j| offdiag[(i, j)] * (root[j] / root[i]));
    let kb = kernel_bound(&b, &g, samples, seed)?;
    report.metric("kernel.m", kb.m);
    report.metric("kernel.min_slack", kb.min_slack);
    if !radii.is_empty() {
        let proxy = relative_compactness_proxy(&g, spec, radii)?;
        for (r, v) in radii.iter().zip(proxy) {
            report.metric(format!("compactness[{r}]"), v);
        }
    }
    report.files.push(("hypotheses.csv".into(), csv));
    Ok(())
}

pub struct ExperimentInfo {
    pub name: &'static str,
    pub summary: &'static str,
    /// `(parameter, default, meaning)`.
    pub params: &'static [(&'static str, &'static str, &'static str)],
}

pub const EXPERIMENTS: &[ExperimentInfo] = &[
    ExperimentInfo {
        name: "verify-identities",
        summary: "commutator identities on the half-line and the funnel, weight and gauge unitaries",
        params: &[
            ("tolerance", "1e-10", "max interior residual"),
            ("lo", "5", "first half-line site of the interior window"),
            ("hi", "n_max - 6", "last half-line site of the interior window"),
        ],
    },
    ExperimentInfo {
        name: "spectra",
        summary: "eigenvalues of H against the predicted band union and thresholds",
        params: &[
            ("band_tolerance", "none", "max distance of in-band extremes from the band edges"),
            ("max_gap", "none", "max gap between consecutive in-band eigenvalues"),
            ("cluster_gap", "1e-6", "thresholds closer than this are reported as clustered"),
        ],
    },
    ExperimentInfo {
        name: "mourre",
        summary: "lowest eigenvalue of E_J i[H, A] E_J with boundary masking, against the channel prediction",
        params: &[
            ("intervals", "required", "list of [a, b] intervals"),
            ("mask_sites", "10", "half-line sites at the far edge used for masking"),
            ("mask_mass", "0.25", "mass on those sites above which a direction is masked"),
            ("defect_sites", "10", "sites next to the origin attributed to the compact remainder"),
            ("margin", "0.05", "allowed shortfall below c_theory"),
            ("require_positive", "true", "fail when a non-empty interval is violated"),
        ],
    },
    ExperimentInfo {
        name: "lap",
        summary: "weighted resolvent norms along a decreasing rho ladder",
        params: &[
            ("lambdas", "required", "energies to probe"),
            ("s", "0.7", "weight exponent"),
            ("rhos", "[0.1, 0.01, 0.001]", "strictly decreasing ladder"),
            ("tau", "5", "growth factor above which an energy is flagged"),
            ("cap", "2", "growth factor below which an energy counts as bounded"),
            ("form_weighted", "false", "compose the weights with (1 + deg)^(1/2)"),
            ("bounded", "[]", "energies asserted to stay below cap"),
            ("divergent", "[]", "energies asserted to be flagged"),
        ],
    },
    ExperimentInfo {
        name: "propagate",
        summary: "smoothness integral and pointwise traces of a band-projected delta",
        params: &[
            ("band", "required", "[a, b] spectral window"),
            ("s", "1", "weight exponent"),
            ("t_max", "100", "final time, below the recurrence time n_max / (2 v_max)"),
            ("steps", "2000", "even number of time steps"),
            ("start", "0", "flat index of the initial delta"),
            ("probes", "[0]", "flat indices for pointwise traces"),
            ("max_ratio", "none", "assert I(T)/I(T/2) at most this"),
            ("max_decay", "none", "assert late/early trace maximum below this"),
        ],
    },
    ExperimentInfo {
        name: "check-hypotheses",
        summary: "shell profiles and trends of the perturbation hypotheses, kernel bound",
        params: &[
            ("expect", "{}", "map from hypothesis id to expected satisfaction"),
            ("samples", "20", "seeded random vectors for the kernel form bound"),
            ("radii", "[]", "radii for the relative compactness proxy"),
        ],
    },
];

pub fn describe(name: &str) -> Result<String> {
    let info = EXPERIMENTS
        .iter()
        .find(|e| e.name == name)
        .ok_or_else(|| Error::InvalidParameter(format!("unknown experiment {name}")))?;
    let mut out = format!("{}: {}\n", info.name, info.summary);
    for (p, d, doc) in info.params {
        let _ = writeln!(out, "  {p:<18} default {d:<20} {doc}");
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const IDENTITIES: &str = r#"{
        "name": "ids",
        "graph": { "halfline": { "n_max": 60, "theta1": [] }, "factor2": { "m2": [1.0, 2.0], "edges": [[0, 1, 1.0, 0.2]] } },
        "experiment": { "kind": "verify-identities" },
        "seed": 3
    }"#;

    #[test]
    fn identities_pass() {
        let s = Scenario::parse(IDENTITIES).unwrap();
        let r = run(&s, None).unwrap();
        assert!(r.passed(), "{:?}", r.failures);
        assert_eq!(r.seed, 3);
        assert!(r.files[0].1.starts_with("identity,quantity,value\n"));
    }

    #[test]
    fn deterministic() {
        let s = Scenario::parse(IDENTITIES).unwrap();
        assert_eq!(run(&s, Some(9)).unwrap(), run(&s, Some(9)).unwrap());
    }

    #[test]
    fn parse_errors_carry_positions() {
        let e = Scenario::parse("{\n  \"graph\": [,\n}").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }), "{e:?}");
        assert_eq!(exit_code(&e), 2);
        let e = Scenario::parse(&IDENTITIES.replace("verify-identities", "nope")).unwrap_err();
        assert_eq!(exit_code(&e), 2);
    }

    #[test]
    fn envelope() {
        let s = Scenario::parse(&IDENTITIES.replace("\"n_max\": 60", "\"n_max\": 700")).unwrap();
        let e = run(&s, None).unwrap_err();
        assert_eq!(exit_code(&e), 3);
    }

    #[test]
    fn failing_assertion_is_reported() {
        let text = r#"{
            "graph": { "halfline": { "n_max": 80 } },
            "experiment": { "kind": "spectra", "band_tolerance": 1e-9 }
        }"#;
        let r = run(&Scenario::parse(text).unwrap(), None).unwrap();
        assert!(!r.passed());
        assert_eq!(r.failures[0].assertion, "band.endpoints");
        assert!(r.summary_csv().contains("status,fail"));
    }

    #[test]
    fn catalog() {
        assert_eq!(EXPERIMENTS.len(), 6);
        assert!(describe("mourre").unwrap().contains("mask_mass"));
        assert!(describe("lap").unwrap().contains("tau"));
        assert!(describe("nope").is_err());
    }
}
