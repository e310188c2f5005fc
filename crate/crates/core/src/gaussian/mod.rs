//! Graphical calculus for Gaussian pure states.
//!
//! An `N`-mode zero-mean Gaussian pure state is described by a complex
//! symmetric graph matrix `Z = U + iV` with `V > 0`, through the
//! position-space wavefunction `psi(q) ∝ exp(i q^T Z q / 2)`. Passive linear
//! optics with orthogonal matrix `R` maps `Z` to `R Z R^T`.
//!
//! Units: `hbar = 1`, `q = (a + a†)/√2`, vacuum quadrature variance `1/2`.

mod covariance;
mod nullifier;
mod sampling;

use std::sync::Arc;

use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};

pub use covariance::{
    covariance_from_graph, symplectic_eigenvalues, QuadratureCovariance,
    DENSE_COVARIANCE_LIMIT,
};
pub use nullifier::{
    commutator_defect, nullifier_cov_analytic, nullifier_cov_numeric, nullifier_rows,
    two_tone_support, NullifierSet,
};
pub use sampling::{
    monte_carlo_zscores, sample_covariance, sample_quadratures, sample_variances,
    QuadratureSamples,
};

use crate::comb::QumodeId;
use crate::error::{Error, Result};
use crate::hgraph::{matching_projector_check, HGraph};
use crate::interferometer::BlockInterferometer;
use crate::sparse::CsrMatrix;

/// Largest mode count accepted by the dense matrix-exponential oracle.
pub const DENSE_ORACLE_LIMIT: usize = 512;

/// Hyperbolic functions of the squeezing parameter that appear everywhere.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SqueezingScalars {
    pub alpha: f64,
    /// `cosh 2α`
    pub c: f64,
    /// `sinh 2α`
    pub s: f64,
    /// `sech 2α`
    pub epsilon: f64,
    /// `tanh 2α`
    pub t: f64,
}

impl SqueezingScalars {
    pub fn new(alpha: f64) -> Self {
        let x = 2.0 * alpha;
        let c = x.cosh();
        Self {
            alpha,
            c,
            s: x.sinh(),
            epsilon: 1.0 / c,
            t: x.tanh(),
        }
    }
}

/// Complex symmetric graph `Z`, stored as sparse real and imaginary parts.
#[derive(Clone, Debug)]
pub struct GraphState {
    pub re: CsrMatrix,
    pub im: CsrMatrix,
    pub alpha: f64,
    modes: Arc<[QumodeId]>,
}

impl GraphState {
    pub fn new(re: CsrMatrix, im: CsrMatrix, alpha: f64, modes: Arc<[QumodeId]>) -> Result<Self> {
        let n = modes.len();
        for m in [&re, &im] {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: m.nrows().max(m.ncols()),
                });
            }
        }
        Ok(Self {
            re,
            im,
            alpha,
            modes,
        })
    }

    /// Vacuum: `Z = iI`.
    pub fn vacuum(modes: Arc<[QumodeId]>) -> Self {
        let n = modes.len();
        Self {
            re: CsrMatrix::zeros(n, n),
            im: CsrMatrix::identity(n),
            alpha: 0.0,
            modes,
        }
    }

    pub fn dim(&self) -> usize {
        self.modes.len()
    }

    pub fn modes(&self) -> &[QumodeId] {
        &self.modes
    }

    pub fn scalars(&self) -> SqueezingScalars {
        SqueezingScalars::new(self.alpha)
    }

    /// Largest asymmetry of either part.
    pub fn symmetry_defect(&self) -> f64 {
        self.re
            .max_abs_diff(&self.re.transpose())
            .max(self.im.max_abs_diff(&self.im.transpose()))
    }

    pub fn to_dense(&self) -> DMatrix<Complex<f64>> {
        let re = self.re.to_dense();
        let im = self.im.to_dense();
        re.zip_map(&im, Complex::new)
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &GraphState) -> f64 {
        let dr = self.re.lin_comb(1.0, &other.re, -1.0);
        let di = self.im.lin_comb(1.0, &other.im, -1.0);
        dr.triplets()
            .map(|(i, j, v)| v.hypot(di.get(i, j)))
            .chain(di.triplets().map(|(i, j, v)| v.hypot(dr.get(i, j))))
            .fold(0.0, f64::max)
    }
}

fn shared_modes(g: &HGraph) -> Arc<[QumodeId]> {
    Arc::from(g.modes())
}

/// `Z0 = i exp(-2αG)` evaluated in closed form as `i[(I - P) + cP - sG]`,
/// using `G^2 = P` for the matching projector `P`.
pub fn initial_graph(g: &HGraph, alpha: f64) -> Result<GraphState> {
    let (_, ok) = matching_projector_check(g);
    if !ok {
        return Err(Error::NotAMatching(
            "G^2 differs from the matched-mode projector".into(),
        ));
    }
    let sc = SqueezingScalars::new(alpha);
    let diag: Vec<f64> = g
        .matched_mask()
        .iter()
        .map(|&matched| if matched { sc.c } else { 1.0 })
        .collect();
    let im = CsrMatrix::from_diagonal(&diag).lin_comb(1.0, &g.adjacency_matrix(), -sc.s);
    let n = g.num_modes();
    GraphState::new(CsrMatrix::zeros(n, n), im, alpha, shared_modes(g))
}

/// Dense reference for `i exp(-2αG)` through the eigendecomposition of `G`.
pub fn expm_graph_oracle(g: &HGraph, alpha: f64) -> Result<DMatrix<Complex<f64>>> {
    let n = g.num_modes();
    if n > DENSE_ORACLE_LIMIT {
        return Err(Error::OracleSizeExceeded {
            n,
            limit: DENSE_ORACLE_LIMIT,
        });
    }
    let eig = g.adjacency_matrix().to_dense().symmetric_eigen();
    let weights = eig.eigenvalues.map(|lambda| (-2.0 * alpha * lambda).exp());
    let v = &eig.eigenvectors;
    let expm = v * DMatrix::from_diagonal(&weights) * v.transpose();
    Ok(expm.map(|x| Complex::new(0.0, x)))
}

fn check_dim(r: &BlockInterferometer, n: usize) -> Result<()> {
    if r.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: r.dim(),
        });
    }
    Ok(())
}

/// Passive evolution `Z -> R Z R^T`.
pub fn apply_interferometer(state: &GraphState, r: &BlockInterferometer) -> Result<GraphState> {
    check_dim(r, state.dim())?;
    let rm = r.matrix();
    Ok(GraphState {
        re: rm.congruence(&state.re),
        im: rm.congruence(&state.im),
        alpha: state.alpha,
        modes: state.modes.clone(),
    })
}

/// `R G R^T`, the qumode-level cluster adjacency.
pub fn conjugated_adjacency(g: &HGraph, r: &BlockInterferometer) -> Result<CsrMatrix> {
    check_dim(r, g.num_modes())?;
    Ok(r.matrix().congruence(&g.adjacency_matrix()))
}

/// Phase-shift-equivalent cluster form `Z_C = iεI + t R G R^T`.
pub fn cluster_graph(g: &HGraph, r: &BlockInterferometer, alpha: f64) -> Result<GraphState> {
    let k = conjugated_adjacency(g, r)?;
    let sc = SqueezingScalars::new(alpha);
    let n = g.num_modes();
    GraphState::new(
        k.scale(sc.t),
        CsrMatrix::from_diagonal(&vec![sc.epsilon; n]),
        alpha,
        shared_modes(g),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::comb::{CombWindow, OpoSpec, Polarization};
    use crate::hgraph::build_hgraph;
    use crate::interferometer::{build_block_interferometer, sylvester_splitter};
    use rand::{Rng, SeedableRng};

    fn pair() -> HGraph {
        HGraph::from_parts(
            vec![QumodeId::new(1, Polarization::Z, 0), QumodeId::new(1, Polarization::Z, -1)],
            vec![(0, 1)],
        )
    }

    fn wire(half: i64) -> (HGraph, BlockInterferometer) {
        let g = build_hgraph(&[OpoSpec::single(1).unwrap()], CombWindow::symmetric(half)).unwrap();
        let r = build_block_interferometer(&sylvester_splitter(2).unwrap(), &g).unwrap();
        (g, r)
    }

    fn dense_max_diff(a: &DMatrix<Complex<f64>>, b: &DMatrix<Complex<f64>>) -> f64 {
        a.zip_map(b, |x, y| (x - y).norm()).max()
    }

    #[test]
    fn vacuum_at_zero_squeezing() {
        let (g, _) = wire(4);
        let z = initial_graph(&g, 0.0).unwrap();
        assert_eq!(z.im, CsrMatrix::identity(g.num_modes()));
        assert_eq!(z.re.nnz(), 0);
        let oracle = expm_graph_oracle(&g, 0.0).unwrap();
        assert!(dense_max_diff(&oracle, &z.to_dense()) < 1e-15);
    }

    #[test]
    fn single_pair_closed_form() {
        let z = initial_graph(&pair(), 0.5).unwrap();
        let (c, s) = (1f64.cosh(), 1f64.sinh());
        assert!((z.im.get(0, 0) - c).abs() < 1e-15);
        assert!((z.im.get(0, 1) + s).abs() < 1e-15);
        assert!((z.im.get(0, 0) - 1.5431).abs() < 1e-4);
        assert!((z.im.get(1, 0) + 1.1752).abs() < 1e-4);

        let oracle = expm_graph_oracle(&pair(), 0.25).unwrap();
        let expected = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex::new(0.0, 0.5f64.cosh()),
                Complex::new(0.0, -0.5f64.sinh()),
                Complex::new(0.0, -0.5f64.sinh()),
                Complex::new(0.0, 0.5f64.cosh()),
            ],
        );
        assert!(dense_max_diff(&oracle, &expected) < 1e-14);
    }

    #[test]
    fn vacuum_modes_keep_unit_diagonal() {
        let (g, _) = wire(2);
        let z = initial_graph(&g, 0.7).unwrap();
        for &u in g.unmatched() {
            assert_eq!(z.im.get(u, u), 1.0);
        }
        let oracle = expm_graph_oracle(&g, 0.7).unwrap();
        for &u in g.unmatched() {
            assert!((oracle[(u, u)].im - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn closed_form_matches_oracle_on_random_configurations() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let d = rng.random_range(1..=3usize);
            let specs: Vec<_> = (0..d)
                .map(|_| OpoSpec::single(2 * rng.random_range(0..5i64) + 1).unwrap())
                .collect();
            let half = rng.random_range(1..=(100 / (4 * d as i64)));
            let g = build_hgraph(&specs, CombWindow::symmetric(half)).unwrap();
            assert!(g.num_modes() <= 200);
            let alpha = rng.random_range(0.0..1.2);
            let z = initial_graph(&g, alpha).unwrap();
            let oracle = expm_graph_oracle(&g, alpha).unwrap();
            assert!(dense_max_diff(&oracle, &z.to_dense()) < 1e-12);
        }
    }

    #[test]
    fn oracle_size_limit() {
        let g = build_hgraph(&[OpoSpec::single(1).unwrap()], CombWindow::symmetric(200)).unwrap();
        assert!(matches!(
            expm_graph_oracle(&g, 0.1),
            Err(Error::OracleSizeExceeded { .. })
        ));
    }

    #[test]
    fn not_a_matching_is_rejected() {
        let modes: Vec<_> = (0..3).map(|n| QumodeId::new(1, Polarization::Z, n)).collect();
        let bad = HGraph::from_parts(modes, vec![(0, 1), (1, 2)]);
        assert!(matches!(initial_graph(&bad, 0.3), Err(Error::NotAMatching(_))));
    }

    #[test]
    fn interferometer_evolution() {
        let (g, r) = wire(2);
        let alpha = 0.5;
        let vac = initial_graph(&g, 0.0).unwrap();
        let moved = apply_interferometer(&vac, &r).unwrap();
        assert!(moved.max_abs_diff(&vac) < 1e-15);

        let z0 = initial_graph(&g, alpha).unwrap();
        let z = apply_interferometer(&z0, &r).unwrap();
        assert!(z.symmetry_defect() < 1e-15);
        // direct dense route: R Z0 R^T with Z0 = i[(I - P) + cP - sG]
        let rd = r.matrix().to_dense();
        let expected = &rd * z0.im.to_dense() * rd.transpose();
        assert!((z.im.to_dense() - expected).amax() < 1e-13);
        // H1 is an involution, so a second pass returns Z0
        let back = apply_interferometer(&z, &r).unwrap();
        assert!(back.max_abs_diff(&z0) < 1e-13);
    }

    #[test]
    fn perfect_matching_gives_ic_minus_is_k() {
        // two TMS pairs filling two whole macronodes, so P = I
        let g = HGraph::from_parts(
            vec![
                QumodeId::new(1, Polarization::Z, 0),
                QumodeId::new(1, Polarization::Y, 0),
                QumodeId::new(1, Polarization::Z, -1),
                QumodeId::new(1, Polarization::Y, -1),
            ],
            vec![(0, 2), (1, 3)],
        );
        let r = build_block_interferometer(&sylvester_splitter(2).unwrap(), &g).unwrap();
        let alpha = 0.5;
        let sc = SqueezingScalars::new(alpha);
        let z = apply_interferometer(&initial_graph(&g, alpha).unwrap(), &r).unwrap();
        let k = conjugated_adjacency(&g, &r).unwrap();
        let expected = CsrMatrix::identity(4).lin_comb(sc.c, &k, -sc.s);
        assert!(z.im.max_abs_diff(&expected) < 1e-13);
        assert_eq!(z.re.nnz(), 0);
    }

    #[test]
    fn cluster_form() {
        let (g, r) = wire(3);
        let zc = cluster_graph(&g, &r, 0.0).unwrap();
        assert_eq!(zc.re.nnz(), 0);
        assert_eq!(zc.im, CsrMatrix::identity(g.num_modes()));

        let k = conjugated_adjacency(&g, &r).unwrap();
        let zc = cluster_graph(&g, &r, 5.0).unwrap();
        assert!(zc.re.max_abs_diff(&k) < 1e-4);
        let sc = SqueezingScalars::new(5.0);
        assert!(zc.im.diagonal().iter().all(|&d| d == sc.epsilon));
    }

    #[test]
    fn wire_cluster_couples_only_neighbouring_macronodes() {
        let (g, r) = wire(6);
        let zc = cluster_graph(&g, &r, 0.5).unwrap();
        let part = r.partition();
        for (i, j, v) in zc.re.triplets() {
            let (mi, mj) = (part.macronode_of_mode(i), part.macronode_of_mode(j));
            assert_eq!((mi - mj).abs(), 1, "entry {v} joins {mi} and {mj}");
            // every coupling between two adjacent macronodes has the same magnitude
            assert!((v.abs() - 0.5 * SqueezingScalars::new(0.5).t).abs() < 1e-15);
        }
    }
}
