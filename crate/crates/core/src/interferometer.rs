//! Balanced splitters and the macronode-local interferometer `R`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::hgraph::{HGraph, MacronodePartition};
use crate::sparse::CsrMatrix;

/// Orthogonality and balance tolerance for splitter matrices.
pub const SPLITTER_TOLERANCE: f64 = 1e-14;

/// Real orthogonal matrix whose entries all have magnitude `order^(-1/2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BalancedSplitter {
    matrix: DMatrix<f64>,
}

impl BalancedSplitter {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn order(&self) -> usize {
        self.matrix.nrows()
    }

    /// `max |H H^T - I|`.
    pub fn orthogonality_error(&self) -> f64 {
        orthogonality_error(&self.matrix)
    }
}

fn orthogonality_error(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    (m * m.transpose() - DMatrix::<f64>::identity(n, n)).amax()
}

/// Normalized Sylvester-Hadamard splitter `H1^(⊗k)` of order `two_d = 2^k`.
pub fn sylvester_splitter(two_d: usize) -> Result<BalancedSplitter> {
    if two_d < 2 || !two_d.is_power_of_two() {
        return Err(Error::UnsupportedOrder(two_d));
    }
    // Build the ±1 matrix first so the single normalization keeps every
    // entry at exactly the same magnitude.
    let base = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, -1.0]);
    let mut signs = base.clone();
    while signs.nrows() < two_d {
        signs = base.kronecker(&signs);
    }
    // 1/order is exact for powers of two, so the root is correctly rounded
    let scale = (two_d as f64).recip().sqrt();
    Ok(BalancedSplitter {
        matrix: signs * scale,
    })
}

/// Wrap a user-supplied normalized Hadamard matrix after validating it.
pub fn user_splitter(m: DMatrix<f64>) -> Result<BalancedSplitter> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NotOrthogonal {
            deviation: f64::INFINITY,
        });
    }
    let expected = (m.nrows() as f64).recip().sqrt();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let magnitude = m[(i, j)].abs();
            if (magnitude - expected).abs() > SPLITTER_TOLERANCE {
                return Err(Error::NotBalanced {
                    row: i,
                    col: j,
                    magnitude,
                    expected,
                });
            }
        }
    }
    let deviation = orthogonality_error(&m);
    if deviation > SPLITTER_TOLERANCE {
        return Err(Error::NotOrthogonal { deviation });
    }
    Ok(BalancedSplitter { matrix: m })
}

/// `R = ⊕_m H`, the same splitter applied inside every macronode.
#[derive(Clone, Debug)]
pub struct BlockInterferometer {
    block: BalancedSplitter,
    partition: MacronodePartition,
    matrix: CsrMatrix,
}

impl BlockInterferometer {
    pub fn block(&self) -> &BalancedSplitter {
        &self.block
    }

    pub fn partition(&self) -> &MacronodePartition {
        &self.partition
    }

    /// Sparse `R` in the canonical mode order.
    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Assemble `R` for the macronodes of `g`. Block row/column `a` of a
/// macronode is the mode in slot `a`, i.e. `2 (opo - 1) + (0 for Z, 1 for Y)`.
pub fn build_block_interferometer(h: &BalancedSplitter, g: &HGraph) -> Result<BlockInterferometer> {
    let macronode = 2 * g.num_opos();
    if h.order() != macronode {
        return Err(Error::OrderMismatch {
            splitter: h.order(),
            macronode,
        });
    }
    let partition = g.macronode_partition()?;
    let n = g.num_modes();
    let mut trips = Vec::with_capacity(partition.len() * macronode * macronode);
    for slots in &partition.members {
        for (a, &row) in slots.iter().enumerate() {
            for (b, &col) in slots.iter().enumerate() {
                trips.push((row, col, h.matrix[(a, b)]));
            }
        }
    }
    Ok(BlockInterferometer {
        block: h.clone(),
        partition,
        matrix: CsrMatrix::from_triplets(n, n, &trips),
    })
}
