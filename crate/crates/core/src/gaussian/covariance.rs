use nalgebra::DMatrix;

use super::GraphState;
use crate::error::{Error, Result};

/// Largest mode count for which dense `2N x 2N` covariances are formed.
pub const DENSE_COVARIANCE_LIMIT: usize = 2048;

/// Quadrature covariance ordered `(q_1..q_N, p_1..p_N)`; vacuum is `I/2`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureCovariance {
    pub sigma: DMatrix<f64>,
}

impl QuadratureCovariance {
    /// Number of modes `N`.
    pub fn modes(&self) -> usize {
        self.sigma.nrows() / 2
    }

    pub fn dim(&self) -> usize {
        self.sigma.nrows()
    }

    /// Symplectic form `[[0, I], [-I, 0]]` of matching size.
    pub fn symplectic_form(n: usize) -> DMatrix<f64> {
        let mut omega = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            omega[(i, n + i)] = 1.0;
            omega[(n + i, i)] = -1.0;
        }
        omega
    }

    /// `(R ⊕ R) Σ (R ⊕ R)^T` for an orthogonal mode transformation `R`.
    pub fn transform(&self, r: &DMatrix<f64>) -> QuadratureCovariance {
        let n = self.modes();
        let mut big = DMatrix::zeros(2 * n, 2 * n);
        big.view_mut((0, 0), (n, n)).copy_from(r);
        big.view_mut((n, n), (n, n)).copy_from(r);
        QuadratureCovariance {
            sigma: &big * &self.sigma * big.transpose(),
        }
    }
}

/// Moments of `psi(q) ∝ exp(i q^T Z q / 2)` with `Z = U + iV`:
/// `Σ_qq = V⁻¹/2`, `Σ_qp = V⁻¹U/2`, `Σ_pp = (V + U V⁻¹ U)/2`.
pub fn covariance_from_graph(state: &GraphState) -> Result<QuadratureCovariance> {
    let n = state.dim();
    if n > DENSE_COVARIANCE_LIMIT {
        return Err(Error::CovarianceTooLarge {
            n,
            limit: DENSE_COVARIANCE_LIMIT,
        });
    }
    let u = state.re.to_dense();
    let v = state.im.to_dense();
    let chol = v
        .clone()
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite("Im Z has no Cholesky factor".into()))?;
    let v_inv = chol.inverse();
    let qq = v_inv * 0.5;
    let (qp, pp) = if state.re.nnz() == 0 {
        (DMatrix::zeros(n, n), &v * 0.5)
    } else {
        let v_inv_u = chol.solve(&u);
        (&v_inv_u * 0.5, (&v + &u * &v_inv_u) * 0.5)
    };

    let mut sigma = DMatrix::zeros(2 * n, 2 * n);
    sigma.view_mut((0, 0), (n, n)).copy_from(&qq);
    sigma.view_mut((0, n), (n, n)).copy_from(&qp);
    sigma.view_mut((n, 0), (n, n)).copy_from(&qp.transpose());
    sigma.view_mut((n, n), (n, n)).copy_from(&pp);
    let sigma = (&sigma + sigma.transpose()) * 0.5;
    Ok(QuadratureCovariance { sigma })
}

/// Symplectic eigenvalues of `Σ`, ascending, one per mode.
///
/// With `A = Σ^(1/2)`, the matrix `A Ω A` is real antisymmetric with
/// eigenvalues `±iν`, so `(AΩA)^T (AΩA)` has each `ν²` twice.
pub fn symplectic_eigenvalues(cov: &QuadratureCovariance) -> Result<Vec<f64>> {
    let n = cov.modes();
    let eig = cov.sigma.clone().symmetric_eigen();
    if eig.eigenvalues.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::NotPositiveDefinite(
            "covariance has a nonpositive eigenvalue".into(),
        ));
    }
    let vecs = &eig.eigenvectors;
    let root = vecs * DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt)) * vecs.transpose();
    let omega = QuadratureCovariance::symplectic_form(n);
    let b = &root * omega * &root;
    let gram = b.transpose() * &b;
    let mut squares: Vec<f64> = gram.symmetric_eigen().eigenvalues.iter().copied().collect();
    squares.sort_by(f64::total_cmp);
    Ok(squares
        .chunks(2)
        .map(|pair| (0.5 * (pair[0] + pair[1])).max(0.0).sqrt())
        .collect())
}
