//! Seeded homodyne-record emulation.
//!
//! Draw `i` uses its own ChaCha stream (`seed`, stream `i`), so the sample
//! matrix does not depend on how the draws are split across threads.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{NullifierSet, QuadratureCovariance};
use crate::error::{Error, Result};

/// Row-major `count x 2N` quadrature draws.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureSamples {
    pub count: usize,
    pub dim: usize,
    pub data: Vec<f64>,
}

impl QuadratureSamples {
    pub fn sample(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim.max(1))
    }
}

pub fn sample_quadratures(
    sigma: &QuadratureCovariance,
    count: usize,
    seed: u64,
) -> Result<QuadratureSamples> {
    if count == 0 {
        return Err(Error::Validation("sample count must be at least 1".into()));
    }
    let dim = sigma.dim();
    let lower = sigma
        .sigma
        .clone()
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite("covariance has no Cholesky factor".into()))?
        .unpack();
    // row-major copy of the factor for cache-friendly products
    let factor: Vec<f64> = (0..dim)
        .flat_map(|i| (0..dim).map(move |j| (i, j)))
        .map(|(i, j)| lower[(i, j)])
        .collect();
    let mut data = vec![0.0; count * dim];
    data.par_chunks_mut(dim.max(1))
        .enumerate()
        .for_each(|(i, out)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let normals: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
            for (a, slot) in out.iter_mut().enumerate() {
                let row = &factor[a * dim..a * dim + a + 1];
                *slot = row.iter().zip(&normals).map(|(l, z)| l * z).sum();
            }
        });
    Ok(QuadratureSamples { count, dim, data })
}

/// Zero-mean sample covariance `(1/count) Σ x x^T`.
pub fn sample_covariance(samples: &QuadratureSamples) -> DMatrix<f64> {
    let d = samples.dim;
    let mut acc = DMatrix::zeros(d, d);
    for x in samples.iter() {
        for a in 0..d {
            for b in 0..=a {
                acc[(a, b)] += x[a] * x[b];
            }
        }
    }
    for a in 0..d {
        for b in 0..a {
            acc[(b, a)] = acc[(a, b)];
        }
    }
    acc / samples.count as f64
}

/// Zero-mean variance estimate of every nullifier component.
pub fn sample_variances(samples: &QuadratureSamples, rows: &NullifierSet) -> Result<Vec<f64>> {
    if rows.rows.ncols() != samples.dim {
        return Err(Error::DimensionMismatch {
            expected: samples.dim,
            found: rows.rows.ncols(),
        });
    }
    let mut sums = vec![0.0; rows.rows.nrows()];
    for x in samples.iter() {
        for (i, acc) in sums.iter_mut().enumerate() {
            let v: f64 = rows.rows.row(i).map(|(j, c)| c * x[j]).sum();
            *acc += v * v;
        }
    }
    Ok(sums.into_iter().map(|s| s / samples.count as f64).collect())
}

/// `(estimate - expected) / SE` with `SE = expected √(2 / count)`, the
/// standard error of a zero-mean Gaussian variance estimate.
pub fn monte_carlo_zscores(estimates: &[f64], expected: &[f64], count: usize) -> Vec<f64> {
    let scale = (2.0 / count as f64).sqrt();
    estimates
        .iter()
        .zip(expected)
        .map(|(&est, &var)| (est - var) / (var * scale))
        .collect()
}
