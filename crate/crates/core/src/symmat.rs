//! Dense symmetric matrices and the eigen-based kernels built on them:
//! PSD square roots, inverse square roots and simultaneous diagonalization
//! of a pair of symmetric matrices.
//!
//! Rank-deficient covariance estimates are common (few speakers, many
//! dimensions), so every spectral operation applies an eigenvalue floor
//! `eps = 1e-10 * max|lambda|`. Eigenvalues in `(-eps, eps]` are clamped to
//! `eps`; anything further below zero is reported as [`Error::NotPsd`].

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative eigenvalue floor.
pub const FLOOR_RATIO: f64 = 1e-10;

/// A dense, exactly symmetric real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    m: DMatrix<f64>,
}

impl SymMatrix {
    /// Builds a symmetric matrix from a square matrix by averaging it with its
    /// transpose. Fails on non-square, empty or non-finite input.
    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::InvalidMatrix(format!(
                "expected a square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.nrows() == 0 {
            return Err(Error::InvalidMatrix("dimension must be at least 1".into()));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidMatrix("non-finite entry".into()));
        }
        Ok(Self::symmetrized(m))
    }

    pub(crate) fn symmetrized(m: DMatrix<f64>) -> Self {
        let n = m.nrows();
        let mut out = m;
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (out[(i, j)] + out[(j, i)]);
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        SymMatrix { m: out }
    }

    pub fn identity(dim: usize) -> Self {
        assert!(dim >= 1, "dimension must be at least 1");
        SymMatrix {
            m: DMatrix::identity(dim, dim),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "dimension must be at least 1");
        SymMatrix {
            m: DMatrix::zeros(dim, dim),
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        assert!(!diag.is_empty(), "dimension must be at least 1");
        SymMatrix {
            m: DMatrix::from_diagonal(&DVector::from_column_slice(diag)),
        }
    }

    /// Row-major construction; the input is symmetrized.
    pub fn from_row_slice(dim: usize, values: &[f64]) -> Result<Self> {
        if values.len() != dim * dim {
            return Err(Error::DimMismatch {
                expected: dim * dim,
                found: values.len(),
            });
        }
        Self::from_matrix(DMatrix::from_row_slice(dim, dim, values))
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[(i, j)]
    }

    pub fn trace(&self) -> f64 {
        self.m.trace()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.m.norm()
    }

    pub fn ensure_dim(&self, dim: usize) -> Result<()> {
        if self.dim() != dim {
            return Err(Error::DimMismatch {
                expected: dim,
                found: self.dim(),
            });
        }
        Ok(())
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &SymMatrix, b: f64) -> Result<SymMatrix> {
        other.ensure_dim(self.dim())?;
        Ok(SymMatrix {
            m: &self.m * a + &other.m * b,
        })
    }

    pub fn add(&self, other: &SymMatrix) -> Result<SymMatrix> {
        other.ensure_dim(self.dim())?;
        Ok(SymMatrix {
            m: &self.m + &other.m,
        })
    }

    pub fn scale(&self, a: f64) -> SymMatrix {
        SymMatrix { m: &self.m * a }
    }

    /// `A * self * A^T` for a (possibly rectangular) `A` with `self.dim()` columns.
    pub fn congruence(&self, a: &DMatrix<f64>) -> Result<SymMatrix> {
        if a.ncols() != self.dim() {
            return Err(Error::DimMismatch {
                expected: self.dim(),
                found: a.ncols(),
            });
        }
        Ok(Self::symmetrized(a * &self.m * a.transpose()))
    }

    /// Eigendecomposition with eigenvalues in descending order and each
    /// eigenvector sign-fixed so its largest-magnitude entry is positive.
    pub fn eigen(&self) -> Eigen {
        let eig = SymmetricEigen::new(self.m.clone());
        let n = self.dim();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[b]
                .partial_cmp(&eig.eigenvalues[a])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
        let mut vectors = DMatrix::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            vectors.set_column(dst, &eig.eigenvectors.column(src));
        }
        fix_column_signs(&mut vectors);
        Eigen { values, vectors }
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let e = self.eigen();
        e.values[e.values.len() - 1]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigen().values[0]
    }

    /// Clamps every eigenvalue below the floor up to the floor. Returns the
    /// matrix unchanged when no clamping is needed. A zero matrix has a zero
    /// floor, so it is floored to `FLOOR_RATIO * fallback_scale` instead.
    pub fn floored(&self, fallback_scale: f64) -> Result<SymMatrix> {
        let e = self.eigen();
        let mut floor = floor_for(&e.values);
        if floor == 0.0 {
            floor = FLOOR_RATIO * fallback_scale.abs().max(f64::MIN_POSITIVE);
        }
        let min = e.values[e.values.len() - 1];
        if min >= floor {
            return Ok(self.clone());
        }
        if min < -floor {
            return Err(Error::NotPsd {
                eigenvalue: min,
                floor,
            });
        }
        Ok(e.reconstruct(|v| v.max(floor)))
    }
}

#[derive(Debug, Clone)]
pub struct Eigen {
    /// Descending.
    pub values: DVector<f64>,
    /// Columns are eigenvectors.
    pub vectors: DMatrix<f64>,
}

impl Eigen {
    /// `U * diag(f(values)) * U^T`.
    pub fn reconstruct(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let mut scaled = self.vectors.clone();
        for (j, &v) in self.values.iter().enumerate() {
            let s = f(v);
            scaled.column_mut(j).scale_mut(s);
        }
        SymMatrix::symmetrized(scaled * self.vectors.transpose())
    }
}

fn floor_for(values: &DVector<f64>) -> f64 {
    FLOOR_RATIO * values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

fn fix_column_signs(m: &mut DMatrix<f64>) {
    for j in 0..m.ncols() {
        let mut best = 0;
        for i in 0..m.nrows() {
            if m[(i, j)].abs() > m[(best, j)].abs() {
                best = i;
            }
        }
        if m[(best, j)] < 0.0 {
            m.column_mut(j).neg_mut();
        }
    }
}

/// Clamps `(-eps, eps]` to `eps`, rejects anything lower.
fn clamp_psd(values: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
    let eps = floor_for(values);
    let mut out = values.clone();
    for v in out.iter_mut() {
        if *v < -eps {
            return Err(Error::NotPsd {
                eigenvalue: *v,
                floor: eps,
            });
        }
        if *v <= eps {
            *v = eps;
        }
    }
    Ok((eps, out))
}

/// Symmetric PSD square root `R` with `R * R = M`.
pub fn psd_sqrt(m: &SymMatrix) -> Result<SymMatrix> {
    let mut e = m.eigen();
    let (_, clamped) = clamp_psd(&e.values)?;
    e.values = clamped;
    Ok(e.reconstruct(f64::sqrt))
}

/// Symmetric inverse square root `W` with `W * M * W = I`.
///
/// Eigenvalues within the floor are clamped before inversion, so a matrix
/// previously passed through [`SymMatrix::floored`] is accepted. Anything
/// below half the floor (including an all-zero matrix) is singular.
pub fn psd_inv_sqrt(m: &SymMatrix) -> Result<SymMatrix> {
    let e = m.eigen();
    let (w, _) = inv_sqrt_from_eigen(&e)?;
    Ok(w)
}

/// Returns `(M^{-1/2}, M^{1/2})` from one eigendecomposition.
fn inv_sqrt_from_eigen(e: &Eigen) -> Result<(SymMatrix, SymMatrix)> {
    let eps = floor_for(&e.values);
    let min = e.values[e.values.len() - 1];
    if eps == 0.0 || min < 0.5 * eps {
        return Err(Error::Singular {
            eigenvalue: min,
            floor: eps,
        });
    }
    let inv = e.reconstruct(|v| 1.0 / v.max(eps).sqrt());
    let fwd = e.reconstruct(|v| v.max(eps).sqrt());
    Ok((inv, fwd))
}

/// Result of [`simultaneous_diag`]: `basis^T Z basis = I` and
/// `basis^T Y basis = diag(eigvals)`.
#[derive(Debug, Clone)]
pub struct SimDiag {
    pub basis: DMatrix<f64>,
    /// Generalized eigenvalues of `(Y, Z)`, descending, nonnegative.
    pub eigvals: DVector<f64>,
    inverse: DMatrix<f64>,
}

impl SimDiag {
    /// `basis^{-1}`, computed as `U^T Z^{1/2}` rather than by general inversion.
    pub fn inverse_basis(&self) -> &DMatrix<f64> {
        &self.inverse
    }
}

/// Simultaneous diagonalization of a PSD `y` and an SPD `z` via
/// `W = z^{-1/2}`, `W y W = U diag(eigvals) U^T`, `basis = W U`.
pub fn simultaneous_diag(y: &SymMatrix, z: &SymMatrix) -> Result<SimDiag> {
    y.ensure_dim(z.dim())?;
    let (w, w_inv) = inv_sqrt_from_eigen(&z.eigen())?;
    let whitened = y.congruence(w.as_matrix())?;
    let inner = whitened.eigen();
    let eps = floor_for(&inner.values);
    let mut eigvals = inner.values.clone();
    for v in eigvals.iter_mut() {
        if *v < -eps {
            return Err(Error::NotPsd {
                eigenvalue: *v,
                floor: eps,
            });
        }
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let mut basis = w.as_matrix() * &inner.vectors;
    let mut u = inner.vectors;
    // Re-fix signs on the final basis and carry the flips into U.
    for j in 0..basis.ncols() {
        let mut best = 0;
        for i in 0..basis.nrows() {
            if basis[(i, j)].abs() > basis[(best, j)].abs() {
                best = i;
            }
        }
        if basis[(best, j)] < 0.0 {
            basis.column_mut(j).neg_mut();
            u.column_mut(j).neg_mut();
        }
    }
    let inverse = u.transpose() * w_inv.as_matrix();
    Ok(SimDiag {
        basis,
        eigvals,
        inverse,
    })
}

/// Relative Frobenius distance `|a - b|_F / max(|b|_F, tiny)`.
pub fn relative_frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let denom = b.norm().max(f64::MIN_POSITIVE);
    (a - b).norm() / denom
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
        DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
    }

    fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> SymMatrix {
        let a = random_matrix(rng, n, n);
        let m = a.transpose() * &a + DMatrix::identity(n, n) * 0.1;
        SymMatrix::from_matrix(m).unwrap()
    }

    #[test]
    fn construction_symmetrizes() {
        let m = SymMatrix::from_row_slice(2, &[1.0, 2.0, 4.0, 3.0]).unwrap();
        assert_eq!(m.get(0, 1), 3.0);
        assert_eq!(m.get(1, 0), 3.0);
        assert!(SymMatrix::from_matrix(DMatrix::zeros(2, 3)).is_err());
        assert!(SymMatrix::from_matrix(DMatrix::zeros(0, 0)).is_err());
        assert!(SymMatrix::from_row_slice(1, &[f64::NAN]).is_err());
    }

    #[test]
    fn sqrt_identity_and_diagonal() {
        let r = psd_sqrt(&SymMatrix::identity(4)).unwrap();
        assert!(relative_frobenius(r.as_matrix(), &DMatrix::identity(4, 4)) < 1e-14);
        let r = psd_sqrt(&SymMatrix::from_diagonal(&[4.0, 9.0])).unwrap();
        assert!((r.get(0, 0) - 2.0).abs() < 1e-14);
        assert!((r.get(1, 1) - 3.0).abs() < 1e-14);
        assert!(r.get(0, 1).abs() < 1e-14);
    }

    #[test]
    fn sqrt_random_psd_squares_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_matrix(&mut rng, 5, 5);
        let m = SymMatrix::from_matrix(a.transpose() * &a).unwrap();
        let r = psd_sqrt(&m).unwrap();
        let rr = r.as_matrix() * r.as_matrix();
        assert!(relative_frobenius(&rr, m.as_matrix()) < 1e-10);
        assert!(r.min_eigenvalue() >= 0.0);
    }

    #[test]
    fn sqrt_rejects_indefinite() {
        let m = SymMatrix::from_diagonal(&[1.0, -0.5]);
        assert!(matches!(psd_sqrt(&m), Err(Error::NotPsd { .. })));
        // Within the floor is clamped, not rejected.
        let m = SymMatrix::from_diagonal(&[1.0, -1e-12]);
        assert!(psd_sqrt(&m).is_ok());
        let z = psd_sqrt(&SymMatrix::zeros(3)).unwrap();
        assert_eq!(z.frobenius_norm(), 0.0);
    }

    #[test]
    fn inv_sqrt_cases() {
        let w = psd_inv_sqrt(&SymMatrix::identity(3)).unwrap();
        assert!(relative_frobenius(w.as_matrix(), &DMatrix::identity(3, 3)) < 1e-14);
        let w = psd_inv_sqrt(&SymMatrix::from_diagonal(&[4.0])).unwrap();
        assert!((w.get(0, 0) - 0.5).abs() < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = random_spd(&mut rng, 6);
        let w = psd_inv_sqrt(&m).unwrap();
        let wmw = w.as_matrix() * m.as_matrix() * w.as_matrix();
        assert!((wmw - DMatrix::identity(6, 6)).norm() < 1e-10);
    }

    #[test]
    fn inv_sqrt_rejects_singular() {
        let m = SymMatrix::from_diagonal(&[1.0, 0.0]);
        assert!(matches!(psd_inv_sqrt(&m), Err(Error::Singular { .. })));
        assert!(matches!(
            psd_inv_sqrt(&SymMatrix::zeros(2)),
            Err(Error::Singular { .. })
        ));
        // A floored matrix is invertible.
        let f = m.floored(1.0).unwrap();
        assert!(psd_inv_sqrt(&f).is_ok());
    }

    #[test]
    fn floored_keeps_healthy_matrices_untouched() {
        let m = SymMatrix::from_diagonal(&[3.0, 1.0]);
        assert_eq!(m.floored(1.0).unwrap(), m);
        let z = SymMatrix::zeros(2).floored(2.0).unwrap();
        assert!((z.get(0, 0) - 2e-10).abs() < 1e-20);
    }

    #[test]
    fn simdiag_identity_pair() {
        let sd = simultaneous_diag(&SymMatrix::identity(3), &SymMatrix::identity(3)).unwrap();
        for v in sd.eigvals.iter() {
            assert!((v - 1.0).abs() < 1e-14);
        }
        let vtv = sd.basis.transpose() * &sd.basis;
        assert!((vtv - DMatrix::identity(3, 3)).norm() < 1e-12);
    }

    #[test]
    fn simdiag_white_reference() {
        let y = SymMatrix::from_diagonal(&[0.5, 2.0]);
        let sd = simultaneous_diag(&y, &SymMatrix::identity(2)).unwrap();
        assert!((sd.eigvals[0] - 2.0).abs() < 1e-14);
        assert!((sd.eigvals[1] - 0.5).abs() < 1e-14);
        // Descending order swaps the axes; signs are fixed positive.
        assert!((sd.basis[(1, 0)] - 1.0).abs() < 1e-14);
        assert!((sd.basis[(0, 1)] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn simdiag_random_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let y = random_spd(&mut rng, 6);
        let z = random_spd(&mut rng, 6);
        let sd = simultaneous_diag(&y, &z).unwrap();
        let v = &sd.basis;
        let vzv = v.transpose() * z.as_matrix() * v;
        let vyv = v.transpose() * y.as_matrix() * v;
        assert!((vzv - DMatrix::identity(6, 6)).norm() < 1e-9);
        assert!((vyv - DMatrix::from_diagonal(&sd.eigvals)).norm() < 1e-9);
        let vinv = v * sd.inverse_basis();
        assert!((vinv - DMatrix::identity(6, 6)).norm() < 1e-9);
        for w in sd.eigvals.as_slice().windows(2) {
            assert!(w[0] >= w[1]);
        }
    }

    #[test]
    fn simdiag_errors() {
        let y = SymMatrix::identity(2);
        assert!(matches!(
            simultaneous_diag(&y, &SymMatrix::identity(3)),
            Err(Error::DimMismatch { .. })
        ));
        assert!(matches!(
            simultaneous_diag(&y, &SymMatrix::from_diagonal(&[1.0, 0.0])),
            Err(Error::Singular { .. })
        ));
    }

    #[test]
    fn deterministic_bitwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let y = random_spd(&mut rng, 7);
        let z = random_spd(&mut rng, 7);
        let a = simultaneous_diag(&y, &z).unwrap();
        let b = simultaneous_diag(&y, &z).unwrap();
        assert_eq!(a.basis, b.basis);
        assert_eq!(a.eigvals, b.eigvals);
        assert_eq!(psd_sqrt(&y).unwrap(), psd_sqrt(&y).unwrap());
    }
}
