//! End-to-end run: build, entangle, verify, optionally sample.
//!
//! Everything in [`Report`] is a deterministic function of the config, so
//! two runs of the same config serialize to identical bytes. Wall-clock
//! timings live only in [`RunSummary`].

use std::time::Instant;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::comb::QumodeId;
use crate::config::{PipelineConfig, SplitterSource};
use crate::error::Result;
use crate::gaussian::{
    apply_interferometer, cluster_graph, commutator_defect, conjugated_adjacency, covariance_from_graph,
    expm_graph_oracle, initial_graph, monte_carlo_zscores, nullifier_cov_analytic, nullifier_cov_numeric,
    nullifier_rows, sample_quadratures, sample_variances, symplectic_eigenvalues, two_tone_support, GraphState,
    QuadratureCovariance, SqueezingScalars, DENSE_COVARIANCE_LIMIT, DENSE_ORACLE_LIMIT,
};
use crate::hgraph::{build_hgraph, matching_projector_check, HGraph};
use crate::interferometer::{build_block_interferometer, BalancedSplitter, BlockInterferometer};
use crate::lattice::{coarse_grain, count_copies, verify_copies, verify_hypercubic, LatticeReport, MacronodeGraph};
use crate::sparse::CsrMatrix;

pub const ORACLE_TOLERANCE: f64 = 1e-12;
pub const NULLIFIER_TOLERANCE: f64 = 1e-10;
pub const PURITY_TOLERANCE: f64 = 1e-9;
pub const COMMUTATOR_TOLERANCE: f64 = 1e-12;
pub const Z_SCORE_LIMIT: f64 = 5.0;

/// Recorded in every report: the cluster-graph sign pattern depends on it.
pub const SLOT_ORDERING: &str =
    "slot = 2*(opo-1) + (0 for Z, 1 for Y); modes ordered by opo, then Z before Y, then n ascending";

const REPORT_FORMAT: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

impl Status {
    fn of(ok: bool) -> Self {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowInfo {
    pub n_min: i64,
    pub n_max: i64,
    pub symmetric: bool,
    pub contiguous_macronodes: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchingInfo {
    pub edges: usize,
    pub matched_modes: usize,
    pub boundary_modes: usize,
    pub projector_ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitterInfo {
    pub source: String,
    pub order: usize,
    pub orthogonality_error: f64,
}

/// Largest `|ν - 1/2|` over the symplectic spectrum of one stage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PurityEntry {
    pub stage: String,
    pub max_deviation: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NullifierEntry {
    pub theta: f64,
    /// `max |numeric - analytic|` over matched-mode pairs.
    pub max_deviation: Option<f64>,
    /// Same, over pairs touching a boundary vacuum mode.
    pub boundary_max_deviation: Option<f64>,
    /// Range of the analytic matched-mode variances.
    pub matched_variance_min: f64,
    pub matched_variance_max: f64,
    /// Matched variance in units of vacuum noise (`ε` at θ = π/4).
    pub matched_variance_ratio_max: f64,
    pub two_tone_rows: usize,
    pub one_tone_rows: usize,
    pub support_violations: usize,
    pub commutator_defect: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloEntry {
    pub theta: f64,
    pub max_abs_z: f64,
    pub mean_z: f64,
    pub beyond_limit: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloTable {
    pub samples: usize,
    pub seed: u64,
    pub z_limit: f64,
    pub entries: Vec<MonteCarloEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeSection {
    pub macronodes: usize,
    pub edges: usize,
    pub components: usize,
    /// Coarse-grained `R G R^T` and `G` have the same macronode edges.
    pub coarse_grain_invariant: bool,
    pub reports: Vec<LatticeReport>,
}

/// Deterministic verification report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub format: u32,
    pub config: PipelineConfig,
    pub slot_ordering: String,
    pub scalars: SqueezingScalars,
    pub modes: usize,
    pub window: WindowInfo,
    pub matching: MatchingInfo,
    pub splitter: SplitterInfo,
    pub closed_form_deviation: Option<f64>,
    pub purity: Vec<PurityEntry>,
    pub nullifiers: Vec<NullifierEntry>,
    pub lattice: LatticeSection,
    pub monte_carlo: Option<MonteCarloTable>,
    pub boundary_modes: Vec<QumodeId>,
    pub checks: Vec<Check>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StageTiming {
    pub stage: &'static str,
    pub seconds: f64,
}

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub report: Report,
    pub timings: Vec<StageTiming>,
}

impl RunSummary {
    pub fn pass(&self) -> bool {
        self.report.pass
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.report.checks.iter().filter(|c| c.status == Status::Fail)
    }
}

/// Per-θ matrices kept for export.
#[derive(Clone, Debug)]
pub struct ThetaState {
    pub theta: f64,
    pub analytic: CsrMatrix,
    pub numeric: Option<DMatrix<f64>>,
}

/// Everything the exporters need.
#[derive(Clone, Debug)]
pub struct RunState {
    pub hgraph: HGraph,
    pub splitter: BalancedSplitter,
    pub interferometer: BlockInterferometer,
    pub z: GraphState,
    pub cluster: GraphState,
    pub macronode_graph: MacronodeGraph,
    pub thetas: Vec<ThetaState>,
    pub summary: RunSummary,
}

struct Clock {
    last: Instant,
    timings: Vec<StageTiming>,
}

impl Clock {
    fn new() -> Self {
        Self {
            last: Instant::now(),
            timings: Vec::new(),
        }
    }

    fn lap(&mut self, stage: &'static str) {
        let now = Instant::now();
        self.timings.push(StageTiming {
            stage,
            seconds: (now - self.last).as_secs_f64(),
        });
        self.last = now;
    }
}

fn purity_of(state: &GraphState) -> Result<f64> {
    let cov = covariance_from_graph(state)?;
    Ok(symplectic_eigenvalues(&cov)?
        .iter()
        .fold(0.0, |m, &nu| m.max((nu - 0.5).abs())))
}

fn split_deviation(numeric: &DMatrix<f64>, analytic: &DMatrix<f64>, matched: &[bool]) -> (f64, Option<f64>) {
    let n = matched.len();
    let mut inner = 0.0f64;
    let mut boundary: Option<f64> = None;
    for j in 0..n {
        for i in 0..n {
            let d = (numeric[(i, j)] - analytic[(i, j)]).abs();
            if matched[i] && matched[j] {
                inner = inner.max(d);
            } else {
                boundary = Some(boundary.unwrap_or(0.0).max(d));
            }
        }
    }
    (inner, boundary)
}

/// Run every stage for `config`. Splitter files are read here.
pub fn run_pipeline(config: &PipelineConfig) -> Result<RunState> {
    config.validate()?;
    let mut clock = Clock::new();
    let mut checks = Vec::new();
    let mut check = |name: &str, status: Status, detail: String| {
        checks.push(Check {
            name: name.to_string(),
            status,
            detail,
        })
    };
    let alpha = config.alpha;
    let scalars = SqueezingScalars::new(alpha);

    // H-graph
    let hgraph = build_hgraph(&config.opos, config.window)?;
    let n = hgraph.num_modes();
    let matched = hgraph.matched_mask();
    let (incident, projector_ok) = matching_projector_check(&hgraph);
    check(
        "hgraph.matching",
        Status::of(projector_ok),
        format!("{} edges, {incident} matched modes, G^2 = P: {projector_ok}", hgraph.edges().len()),
    );
    clock.lap("build");

    // initial graph and its dense oracle
    let z0 = initial_graph(&hgraph, alpha)?;
    let closed_form_deviation = if n <= DENSE_ORACLE_LIMIT {
        let oracle = expm_graph_oracle(&hgraph, alpha)?;
        let dense = z0.to_dense();
        let dev = (dense - oracle).iter().fold(0.0f64, |m, z| m.max(z.norm()));
        check(
            "gaussian.closed_form",
            Status::of(dev < ORACLE_TOLERANCE),
            format!("max |Z0 - i expm(-2 alpha G)| = {dev:e}"),
        );
        Some(dev)
    } else {
        check("gaussian.closed_form", Status::Skipped, format!("{n} modes exceeds dense limit"));
        None
    };
    clock.lap("initial_graph");

    // interferometer
    let splitter = config.load_splitter()?;
    let interferometer = build_block_interferometer(&splitter, &hgraph)?;
    let z = apply_interferometer(&z0, &interferometer)?;
    let cluster = cluster_graph(&hgraph, &interferometer, alpha)?;
    clock.lap("entangle");

    // purity after every stage
    let mut purity = Vec::new();
    for (stage, state) in [("initial", &z0), ("interferometer", &z), ("cluster", &cluster)] {
        let max_deviation = if n <= DENSE_ORACLE_LIMIT {
            let dev = purity_of(state)?;
            check(
                &format!("gaussian.purity.{stage}"),
                Status::of(dev < PURITY_TOLERANCE),
                format!("max |nu - 1/2| = {dev:e}"),
            );
            Some(dev)
        } else {
            check(
                &format!("gaussian.purity.{stage}"),
                Status::Skipped,
                format!("{n} modes exceeds dense limit"),
            );
            None
        };
        purity.push(PurityEntry {
            stage: stage.to_string(),
            max_deviation,
        });
    }
    clock.lap("purity");

    // nullifiers
    let sigma: Option<QuadratureCovariance> = if n <= DENSE_COVARIANCE_LIMIT {
        Some(covariance_from_graph(&z)?)
    } else {
        None
    };
    let partners = hgraph.partners();
    let mut nullifiers = Vec::new();
    let mut thetas = Vec::new();
    let mut row_sets = Vec::new();
    for &theta in &config.thetas {
        let rows = nullifier_rows(theta, &interferometer, &hgraph, alpha)?;
        let analytic = nullifier_cov_analytic(theta, &hgraph, alpha);
        let diag = analytic.diagonal();
        let matched_diag = diag.iter().zip(&matched).filter(|(_, m)| **m).map(|(&d, _)| d);
        let (lo, hi) = matched_diag.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| (lo.min(d), hi.max(d)));
        let (lo, hi) = if lo.is_finite() { (lo, hi) } else { (0.0, 0.0) };

        let (max_deviation, boundary_max_deviation, numeric) = match &sigma {
            Some(sigma) => {
                let numeric = nullifier_cov_numeric(sigma, &rows)?;
                let (inner, boundary) = split_deviation(&numeric, &analytic.to_dense(), &matched);
                check(
                    "nullifier.covariance",
                    Status::of(inner < NULLIFIER_TOLERANCE),
                    format!("theta = {theta}: max |numeric - analytic| = {inner:e} on matched modes"),
                );
                (Some(inner), boundary, Some(numeric))
            }
            None => {
                check(
                    "nullifier.covariance",
                    Status::Skipped,
                    format!("theta = {theta}: {n} modes exceeds dense covariance limit"),
                );
                (None, None, None)
            }
        };

        let support = two_tone_support(&rows, &hgraph);
        let mut two = 0;
        let mut one = 0;
        let mut violations = 0;
        for (i, s) in support.iter().enumerate() {
            let expected = if partners[i].is_some() { 2 } else { 1 };
            match s.len() {
                2 => two += 1,
                1 => one += 1,
                _ => {}
            }
            if s.len() != expected {
                violations += 1;
            }
        }
        check(
            "nullifier.two_tone",
            Status::of(violations == 0),
            format!("theta = {theta}: {two} two-tone rows, {one} one-tone rows, {violations} violations"),
        );
        let commutator = commutator_defect(&rows);
        check(
            "nullifier.commutator",
            Status::of(commutator < COMMUTATOR_TOLERANCE),
            format!("theta = {theta}: max |[n_i, n_j]| = {commutator:e}"),
        );
        nullifiers.push(NullifierEntry {
            theta,
            max_deviation,
            boundary_max_deviation,
            matched_variance_min: lo,
            matched_variance_max: hi,
            matched_variance_ratio_max: hi / 0.5,
            two_tone_rows: two,
            one_tone_rows: one,
            support_violations: violations,
            commutator_defect: commutator,
        });
        thetas.push(ThetaState {
            theta,
            analytic,
            numeric,
        });
        row_sets.push(rows);
    }
    clock.lap("nullifiers");

    // lattice
    let partition = interferometer.partition();
    let k = conjugated_adjacency(&hgraph, &interferometer)?;
    let macronode_graph = coarse_grain(&k, partition, config.rel_threshold)?;
    let h_level = coarse_grain(&hgraph.adjacency_matrix(), partition, config.rel_threshold)?;
    let invariant = macronode_graph.edge_set() == h_level.edge_set();
    check(
        "lattice.coarse_grain",
        Status::of(invariant),
        format!(
            "{} macronode edges after R, {} before",
            macronode_graph.edges.len(),
            h_level.edges.len()
        ),
    );
    let mut offsets = config.offsets();
    offsets.sort_unstable();
    offsets.dedup();
    let reports = if config.copies() == 1 {
        vec![verify_hypercubic(&macronode_graph, &offsets, config.window)]
    } else {
        verify_copies(&macronode_graph, &offsets, config.window, config.copies())?
    };
    for r in &reports {
        let name = match r.copy {
            Some(c) => format!("lattice.hypercubic.copy{c}"),
            None => "lattice.hypercubic".to_string(),
        };
        let mut detail = format!(
            "offsets {:?}: {} interior, {} boundary nodes",
            r.offsets,
            r.interior_nodes.len(),
            r.boundary_nodes.len()
        );
        if let Some(d) = r.verdict.diagnostics.first() {
            detail.push_str(&format!("; {d}"));
        }
        check(&name, Status::of(r.verdict.pass), detail);
    }
    let lattice = LatticeSection {
        macronodes: macronode_graph.nodes.len(),
        edges: macronode_graph.edges.len(),
        components: count_copies(&macronode_graph),
        coarse_grain_invariant: invariant,
        reports,
    };
    clock.lap("lattice");

    // Monte Carlo
    let monte_carlo = match (&sigma, config.samples) {
        (Some(sigma), count) if count > 0 => {
            let draws = sample_quadratures(sigma, count, config.seed)?;
            let mut entries = Vec::new();
            for (rows, ts) in row_sets.iter().zip(&thetas) {
                let est = sample_variances(&draws, rows)?;
                let z = monte_carlo_zscores(&est, &ts.analytic.diagonal(), count);
                let max_abs_z = z.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                let beyond = z.iter().filter(|v| v.abs() >= Z_SCORE_LIMIT).count();
                check(
                    "monte_carlo",
                    Status::of(beyond == 0),
                    format!("theta = {}: max |z| = {max_abs_z:.3} over {} components", ts.theta, z.len()),
                );
                entries.push(MonteCarloEntry {
                    theta: ts.theta,
                    max_abs_z,
                    mean_z: z.iter().sum::<f64>() / z.len().max(1) as f64,
                    beyond_limit: beyond,
                });
            }
            Some(MonteCarloTable {
                samples: count,
                seed: config.seed,
                z_limit: Z_SCORE_LIMIT,
                entries,
            })
        }
        _ => None,
    };
    clock.lap("monte_carlo");

    let pass = checks.iter().all(|c| c.status != Status::Fail);
    let boundary_modes = hgraph.unmatched().iter().map(|&i| hgraph.modes()[i]).collect();
    let report = Report {
        format: REPORT_FORMAT,
        config: config.clone(),
        slot_ordering: SLOT_ORDERING.to_string(),
        scalars,
        modes: n,
        window: WindowInfo {
            n_min: config.window.n_min,
            n_max: config.window.n_max,
            symmetric: config.window.is_symmetric(),
            contiguous_macronodes: config.window.has_contiguous_macronodes(),
        },
        matching: MatchingInfo {
            edges: hgraph.edges().len(),
            matched_modes: incident,
            boundary_modes: hgraph.unmatched().len(),
            projector_ok,
        },
        splitter: SplitterInfo {
            source: match &config.splitter {
                SplitterSource::Sylvester => "sylvester".to_string(),
                SplitterSource::File(p) => p.display().to_string(),
            },
            order: splitter.order(),
            orthogonality_error: splitter.orthogonality_error(),
        },
        closed_form_deviation,
        purity,
        nullifiers,
        lattice,
        monte_carlo,
        boundary_modes,
        checks,
        pass,
    };
    Ok(RunState {
        hgraph,
        splitter,
        interferometer,
        z,
        cluster,
        macronode_graph,
        thetas,
        summary: RunSummary {
            report,
            timings: clock.timings,
        },
    })
}
