//! Mean centering and LDA dimensionality reduction.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::plda::{mean_of, scatter, EmbeddingSet};
use crate::symmat::{simultaneous_diag, SymMatrix};

pub fn compute_mean(data: &EmbeddingSet) -> Result<DVector<f64>> {
    if data.is_empty() {
        return Err(Error::EmptySet);
    }
    Ok(mean_of(
        data.dim(),
        data.records().iter().map(|r| &r.vector),
    ))
}

pub fn center(data: &EmbeddingSet, mean: &DVector<f64>) -> Result<EmbeddingSet> {
    if mean.len() != data.dim() {
        return Err(Error::DimMismatch {
            expected: data.dim(),
            found: mean.len(),
        });
    }
    data.map_vectors(data.dim(), |v| v - mean)
}

/// Linear projection `basis * (v - mean)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LdaProjection {
    /// `out_dim x in_dim`.
    pub basis: DMatrix<f64>,
    pub mean: DVector<f64>,
}

impl LdaProjection {
    pub fn new(basis: DMatrix<f64>, mean: DVector<f64>) -> Result<Self> {
        if basis.ncols() != mean.len() {
            return Err(Error::DimMismatch {
                expected: basis.ncols(),
                found: mean.len(),
            });
        }
        if basis.nrows() == 0 || basis.nrows() > basis.ncols() {
            return Err(Error::OutDimTooLarge {
                requested: basis.nrows(),
                max: basis.ncols(),
            });
        }
        Ok(LdaProjection { basis, mean })
    }

    pub fn in_dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn project(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.basis * (v - &self.mean)
    }
}

/// Fisher LDA: the top `out_dim` generalized eigenvectors of the
/// count-weighted between-class scatter against the pooled within-class
/// scatter, scaled to unit within-class variance.
pub fn lda_fit(data: &EmbeddingSet, out_dim: usize) -> Result<LdaProjection> {
    let groups = data.by_speaker()?;
    if groups.len() < 2 {
        return Err(Error::TooFewClasses(groups.len()));
    }
    let max = (groups.len() - 1).min(data.dim());
    if out_dim == 0 || out_dim > max {
        return Err(Error::OutDimTooLarge {
            requested: out_dim,
            max,
        });
    }
    let dim = data.dim();
    let n = data.len() as f64;
    let mean = compute_mean(data)?;
    let mut within = DMatrix::zeros(dim, dim);
    let mut between = DMatrix::zeros(dim, dim);
    for vs in groups.values() {
        let m = mean_of(dim, vs.iter().copied());
        within += scatter(dim, &m, vs.iter().copied());
        let d = &m - &mean;
        between += &d * d.transpose() * vs.len() as f64;
    }
    let sw = SymMatrix::symmetrized(within / n);
    let sb = SymMatrix::symmetrized(between / n);
    let sd = simultaneous_diag(&sb, &sw)?;
    let basis = sd.basis.columns(0, out_dim).transpose();
    LdaProjection::new(basis, mean)
}

pub fn lda_apply(p: &LdaProjection, data: &EmbeddingSet) -> Result<EmbeddingSet> {
    if data.dim() != p.in_dim() {
        return Err(Error::DimMismatch {
            expected: p.in_dim(),
            found: data.dim(),
        });
    }
    data.map_vectors(p.out_dim(), |v| p.project(v))
}
