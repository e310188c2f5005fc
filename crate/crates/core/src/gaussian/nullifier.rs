//! θ-indexed approximate nullifiers `n_θ = R^T q_θ - t G R^T q_{-θ}`, with
//! `q_θ = q cos θ + p sin θ`.
//!
//! Expanding the quadratures, `n_θ = cos θ (I - tG) R^T q + sin θ (I + tG) R^T p`,
//! and for the pipeline's states `cov(n_θ) = (ε/2)(I - tG cos 2θ)` on matched
//! modes while boundary vacuum modes keep variance `1/2`.

use std::collections::BTreeSet;

use nalgebra::DMatrix;

use super::{QuadratureCovariance, SqueezingScalars};
use crate::error::{Error, Result};
use crate::hgraph::HGraph;
use crate::interferometer::BlockInterferometer;
use crate::sparse::CsrMatrix;

/// Coefficients of the nullifier components over `(q, p)`: `N x 2N`.
#[derive(Clone, Debug)]
pub struct NullifierSet {
    pub theta: f64,
    pub rows: CsrMatrix,
}

impl NullifierSet {
    pub fn len(&self) -> usize {
        self.rows.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.nrows() == 0
    }

    /// `q` coefficient block.
    pub fn q_part(&self) -> CsrMatrix {
        let n = self.rows.nrows();
        self.rows.column_range(0, n)
    }

    /// `p` coefficient block.
    pub fn p_part(&self) -> CsrMatrix {
        let n = self.rows.nrows();
        self.rows.column_range(n, 2 * n)
    }
}

pub fn nullifier_rows(
    theta: f64,
    r: &BlockInterferometer,
    g: &HGraph,
    alpha: f64,
) -> Result<NullifierSet> {
    let n = g.num_modes();
    if r.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: r.dim(),
        });
    }
    let t = SqueezingScalars::new(alpha).t;
    let adj = g.adjacency_matrix();
    let eye = CsrMatrix::identity(n);
    let rt = r.matrix().transpose();
    let q_block = eye.lin_comb(1.0, &adj, -t).mul(&rt).scale(theta.cos());
    let p_block = eye.lin_comb(1.0, &adj, t).mul(&rt).scale(theta.sin());
    Ok(NullifierSet {
        theta,
        rows: q_block.hstack(&p_block),
    })
}

/// `(ε/2)(I - tG cos 2θ)` on matched modes, `1/2` on boundary vacuum modes.
pub fn nullifier_cov_analytic(theta: f64, g: &HGraph, alpha: f64) -> CsrMatrix {
    let sc = SqueezingScalars::new(alpha);
    let diag: Vec<f64> = g
        .matched_mask()
        .iter()
        .map(|&matched| if matched { 0.5 * sc.epsilon } else { 0.5 })
        .collect();
    let coupling = -0.5 * sc.epsilon * sc.t * (2.0 * theta).cos();
    CsrMatrix::from_diagonal(&diag).lin_comb(1.0, &g.adjacency_matrix(), coupling)
}

/// `rows · Σ · rows^T`.
pub fn nullifier_cov_numeric(
    sigma: &QuadratureCovariance,
    rows: &NullifierSet,
) -> Result<DMatrix<f64>> {
    if rows.rows.ncols() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            expected: sigma.dim(),
            found: rows.rows.ncols(),
        });
    }
    let weighted = rows.rows.mul_dense(&sigma.sigma);
    let cov = rows.rows.mul_dense(&weighted.transpose());
    Ok((&cov + cov.transpose()) * 0.5)
}

/// Distinct frequency indices touched by each row. Coefficients below
/// `1e-12` of the row's largest magnitude are treated as zero.
pub fn two_tone_support(rows: &NullifierSet, g: &HGraph) -> Vec<BTreeSet<i64>> {
    let n = g.num_modes();
    let modes = g.modes();
    (0..rows.rows.nrows())
        .map(|i| {
            let largest = rows.rows.row(i).fold(0.0f64, |m, (_, v)| m.max(v.abs()));
            rows.rows
                .row(i)
                .filter(|&(_, v)| v.abs() > 1e-12 * largest)
                .map(|(j, _)| modes[j % n].n)
                .collect()
        })
        .collect()
}

/// Largest `|[n_i, n_j]|` over all row pairs, from `A B^T - B A^T`.
pub fn commutator_defect(rows: &NullifierSet) -> f64 {
    let a = rows.q_part();
    let b = rows.p_part();
    let ab = a.mul(&b.transpose());
    ab.max_abs_diff(&ab.transpose())
}
