//! Covariance-level PLDA domain adaptation.
//!
//! Every recipe is an instance of
//!
//! ```text
//! phi+ = alpha * phi0 + (1 - alpha) * gamma_max(phi1, phi2)
//! ```
//!
//! where `gamma_max(y, z)` simultaneously diagonalizes `y` against `z` and
//! keeps, per generalized eigendirection, the larger of the two variances.
//! The roles resolve against a [`CovarianceCatalog`] holding the
//! out-of-domain (OOD) PLDA, the optional in-domain (InD) PLDA, both domains'
//! total covariances and the CORAL-recolored pseudo-in-domain PLDA.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::plda::PldaModel;
use crate::symmat::{psd_inv_sqrt, psd_sqrt, simultaneous_diag, SymMatrix};

/// Which of the two PLDA covariances is being adapted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovKind {
    Between,
    Within,
}

/// A covariance slot of the adaptation formula.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CovRole {
    /// OOD PLDA covariance of the requested kind.
    Ood,
    /// InD PLDA covariance of the requested kind.
    Ind,
    /// CORAL pseudo-in-domain covariance of the requested kind.
    Pseudo,
    /// OOD total covariance, regardless of kind.
    TotalOod,
    /// InD total covariance, regardless of kind.
    TotalInd,
    /// `phi_b + phi_w` of the OOD PLDA, regardless of kind.
    OodTotalPlda,
    /// `gamma_max(a, b)` of two non-nested roles.
    Gamma(Box<CovRole>, Box<CovRole>),
}

impl CovRole {
    pub fn gamma(a: CovRole, b: CovRole) -> CovRole {
        CovRole::Gamma(Box::new(a), Box::new(b))
    }

    fn depth(&self) -> usize {
        match self {
            CovRole::Gamma(a, b) => 1 + a.depth().max(b.depth()),
            _ => 0,
        }
    }

    pub fn needs_ind(&self) -> bool {
        match self {
            CovRole::Ind => true,
            CovRole::Gamma(a, b) => a.needs_ind() || b.needs_ind(),
            _ => false,
        }
    }
}

impl fmt::Display for CovRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CovRole::Ood => f.write_str("OOD"),
            CovRole::Ind => f.write_str("IND"),
            CovRole::Pseudo => f.write_str("PSEUDO"),
            CovRole::TotalOod => f.write_str("TOTAL_OOD"),
            CovRole::TotalInd => f.write_str("TOTAL_IND"),
            CovRole::OodTotalPlda => f.write_str("OOD_TOTAL_PLDA"),
            CovRole::Gamma(a, b) => write!(f, "GAMMA({a},{b})"),
        }
    }
}

impl FromStr for CovRole {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let upper = t.to_ascii_uppercase();
        let role = match upper.as_str() {
            "OOD" => CovRole::Ood,
            "IND" => CovRole::Ind,
            "PSEUDO" => CovRole::Pseudo,
            "TOTAL_OOD" => CovRole::TotalOod,
            "TOTAL_IND" => CovRole::TotalInd,
            "OOD_TOTAL_PLDA" => CovRole::OodTotalPlda,
            _ => {
                let inner = upper
                    .strip_prefix("GAMMA(")
                    .and_then(|r| r.strip_suffix(')'))
                    .ok_or_else(|| Error::UnknownRole(t.to_string()))?;
                let (a, b) = split_top_level_comma(inner)
                    .ok_or_else(|| Error::UnknownRole(t.to_string()))?;
                CovRole::gamma(a.parse()?, b.parse()?)
            }
        };
        Ok(role)
    }
}

fn split_top_level_comma(s: &str) -> Option<(&str, &str)> {
    let mut depth = 0i32;
    for (i, c) in s.char_indices() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => return Some((&s[..i], &s[i + 1..])),
            _ => {}
        }
    }
    None
}

/// The three role selections plus the interpolation weight.
#[derive(Debug, Clone, PartialEq)]
pub struct AdaptRecipe {
    pub phi0: CovRole,
    pub phi1: CovRole,
    pub phi2: CovRole,
    pub alpha: f64,
}

impl AdaptRecipe {
    pub fn new(phi0: CovRole, phi1: CovRole, phi2: CovRole, alpha: f64) -> Result<Self> {
        let r = AdaptRecipe {
            phi0,
            phi1,
            phi2,
            alpha,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::AlphaOutOfRange(self.alpha));
        }
        for role in [&self.phi0, &self.phi1, &self.phi2] {
            if role.depth() > 1 {
                return Err(Error::InvalidRecipe(format!(
                    "role {role} nests GAMMA more than one level"
                )));
            }
        }
        Ok(())
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        AdaptRecipe::new(
            self.phi0.clone(),
            self.phi1.clone(),
            self.phi2.clone(),
            alpha,
        )
    }

    pub fn needs_ind(&self) -> bool {
        self.phi0.needs_ind() || self.phi1.needs_ind() || self.phi2.needs_ind()
    }
}

impl fmt::Display for AdaptRecipe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "phi0={} phi1={} phi2={} alpha={}",
            self.phi0, self.phi1, self.phi2, self.alpha
        )
    }
}

/// The named special cases of the general formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    CoralPlus,
    Kaldi,
    Lip,
    LipReg,
    Cip,
    CipReg,
    Case7,
    Case8,
}

impl Preset {
    pub const ALL: [Preset; 8] = [
        Preset::CoralPlus,
        Preset::Kaldi,
        Preset::Lip,
        Preset::LipReg,
        Preset::Cip,
        Preset::CipReg,
        Preset::Case7,
        Preset::Case8,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::CoralPlus => "coral_plus",
            Preset::Kaldi => "kaldi",
            Preset::Lip => "lip",
            Preset::LipReg => "lip_reg",
            Preset::Cip => "cip",
            Preset::CipReg => "cip_reg",
            Preset::Case7 => "case7",
            Preset::Case8 => "case8",
        }
    }

    /// `(phi0, phi1, phi2)`.
    pub fn roles(self) -> (CovRole, CovRole, CovRole) {
        use CovRole::*;
        match self {
            Preset::CoralPlus => (Ood, Pseudo, Ood),
            // The in-domain total plays the developer role; see README.
            Preset::Kaldi => (Ood, TotalInd, OodTotalPlda),
            Preset::Lip => (Ind, Ood, Ood),
            Preset::LipReg => (Ind, Ood, Ind),
            Preset::Cip => (Ind, Pseudo, Pseudo),
            Preset::CipReg => (Ind, Pseudo, Ind),
            Preset::Case7 => (Ind, Pseudo, Ood),
            Preset::Case8 => (Ind, CovRole::gamma(Pseudo, Ood), Ind),
        }
    }

    pub fn recipe(self, alpha: f64) -> Result<AdaptRecipe> {
        let (a, b, c) = self.roles();
        AdaptRecipe::new(a, b, c, alpha)
    }

    pub fn is_supervised(self) -> bool {
        !matches!(self, Preset::CoralPlus | Preset::Kaldi)
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::UnknownPreset(s.to_string()))
    }
}

pub fn preset(name: &str, alpha: f64) -> Result<AdaptRecipe> {
    name.parse::<Preset>()?.recipe(alpha)
}

/// Pseudo-in-domain covariance: `C_I^{1/2} C_O^{-1/2} phi_o C_O^{-1/2} C_I^{1/2}`.
pub fn coral_pseudo(phi_o: &SymMatrix, c_o: &SymMatrix, c_i: &SymMatrix) -> Result<SymMatrix> {
    c_o.ensure_dim(phi_o.dim())?;
    c_i.ensure_dim(phi_o.dim())?;
    let whiten = psd_inv_sqrt(c_o)?;
    let recolor = psd_sqrt(c_i)?;
    let map = recolor.as_matrix() * whiten.as_matrix();
    phi_o.congruence(&map)
}

/// Excess variance of `y` over `z` per generalized eigendirection:
/// returns `(max(lambda - 1, 0), basis, basis^{-1})`.
fn excess(y: &SymMatrix, z: &SymMatrix) -> Result<(DVector<f64>, DMatrix<f64>, DMatrix<f64>)> {
    let sd = simultaneous_diag(y, z)?;
    let ex = sd.eigvals.map(|l| (l - 1.0).max(0.0));
    let inv = sd.inverse_basis().clone();
    Ok((ex, sd.basis, inv))
}

/// `sum_k weight_k * r_k r_k^T` over the rows `r_k` of `rows`.
fn weighted_outer(rows: &DMatrix<f64>, weights: &DVector<f64>) -> DMatrix<f64> {
    let mut scaled = rows.transpose();
    for (k, &w) in weights.iter().enumerate() {
        scaled.column_mut(k).scale_mut(w);
    }
    scaled * rows
}

/// `basis^{-T} max(diag(lambda), I) basis^{-1}` for `(basis, lambda)` the
/// simultaneous diagonalization of `(y, z)`. Evaluated as `z` plus the
/// excess-variance correction, which is the same matrix.
pub fn gamma_max(y: &SymMatrix, z: &SymMatrix) -> Result<SymMatrix> {
    let (ex, _, inv) = excess(y, z)?;
    let g = z.as_matrix() + weighted_outer(&inv, &ex);
    Ok(SymMatrix::symmetrized(g))
}

/// `gamma_max(y, b + w)` with the excess variance in each generalized
/// eigendirection shared between the `b` and `w` parts in proportion to
/// their variance along that direction. The two returned parts sum to
/// `gamma_max(y, b + w)`.
pub fn gamma_max_split(
    y: &SymMatrix,
    b: &SymMatrix,
    w: &SymMatrix,
) -> Result<(SymMatrix, SymMatrix)> {
    let total = b.add(w)?;
    let (ex, basis, inv) = excess(y, &total)?;
    let n = ex.len();
    let mut ex_b = DVector::zeros(n);
    let mut ex_w = DVector::zeros(n);
    for k in 0..n {
        let v = basis.column(k);
        let vb = v.dot(&(b.as_matrix() * v));
        let vw = v.dot(&(w.as_matrix() * v));
        let share = if vb + vw > 0.0 { vb / (vb + vw) } else { 0.5 };
        ex_b[k] = ex[k] * share;
        ex_w[k] = ex[k] * (1.0 - share);
    }
    let gb = SymMatrix::symmetrized(b.as_matrix() + weighted_outer(&inv, &ex_b));
    let gw = SymMatrix::symmetrized(w.as_matrix() + weighted_outer(&inv, &ex_w));
    Ok((gb, gw))
}

/// Named covariance statistics of both domains.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceCatalog {
    phi_o_b: SymMatrix,
    phi_o_w: SymMatrix,
    phi_i: Option<(SymMatrix, SymMatrix)>,
    c_o: SymMatrix,
    c_i: SymMatrix,
    pseudo_b: SymMatrix,
    pseudo_w: SymMatrix,
}

impl CovarianceCatalog {
    /// Unsupervised catalog (no InD PLDA). Computes the pseudo-in-domain pair.
    pub fn new(
        phi_o_b: SymMatrix,
        phi_o_w: SymMatrix,
        c_o: SymMatrix,
        c_i: SymMatrix,
    ) -> Result<Self> {
        let dim = phi_o_b.dim();
        for m in [&phi_o_w, &c_o, &c_i] {
            m.ensure_dim(dim)?;
        }
        let pseudo_b = coral_pseudo(&phi_o_b, &c_o, &c_i)?;
        let pseudo_w = coral_pseudo(&phi_o_w, &c_o, &c_i)?;
        Ok(CovarianceCatalog {
            phi_o_b,
            phi_o_w,
            phi_i: None,
            c_o,
            c_i,
            pseudo_b,
            pseudo_w,
        })
    }

    pub fn from_models(
        ood: &PldaModel,
        ind: Option<&PldaModel>,
        c_o: SymMatrix,
        c_i: SymMatrix,
    ) -> Result<Self> {
        let cat = CovarianceCatalog::new(ood.phi_b.clone(), ood.phi_w.clone(), c_o, c_i)?;
        match ind {
            Some(m) => cat.with_ind(m.phi_b.clone(), m.phi_w.clone()),
            None => Ok(cat),
        }
    }

    pub fn with_ind(mut self, phi_i_b: SymMatrix, phi_i_w: SymMatrix) -> Result<Self> {
        phi_i_b.ensure_dim(self.dim())?;
        phi_i_w.ensure_dim(self.dim())?;
        self.phi_i = Some((phi_i_b, phi_i_w));
        Ok(self)
    }

    /// Replaces the total covariances and recomputes the pseudo pair.
    pub fn with_totals(self, c_o: SymMatrix, c_i: SymMatrix) -> Result<Self> {
        let ind = self.phi_i;
        let mut cat = CovarianceCatalog::new(self.phi_o_b, self.phi_o_w, c_o, c_i)?;
        cat.phi_i = ind;
        Ok(cat)
    }

    pub fn dim(&self) -> usize {
        self.phi_o_b.dim()
    }

    pub fn has_ind(&self) -> bool {
        self.phi_i.is_some()
    }

    pub fn ood(&self, kind: CovKind) -> &SymMatrix {
        match kind {
            CovKind::Between => &self.phi_o_b,
            CovKind::Within => &self.phi_o_w,
        }
    }

    pub fn ind(&self, kind: CovKind) -> Result<&SymMatrix> {
        let (b, w) = self.phi_i.as_ref().ok_or(Error::MissingInDomainModel)?;
        Ok(match kind {
            CovKind::Between => b,
            CovKind::Within => w,
        })
    }

    pub fn pseudo(&self, kind: CovKind) -> &SymMatrix {
        match kind {
            CovKind::Between => &self.pseudo_b,
            CovKind::Within => &self.pseudo_w,
        }
    }

    pub fn total_ood(&self) -> &SymMatrix {
        &self.c_o
    }

    pub fn total_ind(&self) -> &SymMatrix {
        &self.c_i
    }

    /// Resolves a role to a concrete matrix for one covariance kind.
    pub fn resolve(&self, role: &CovRole, kind: CovKind) -> Result<SymMatrix> {
        Ok(match role {
            CovRole::Ood => self.ood(kind).clone(),
            CovRole::Ind => self.ind(kind)?.clone(),
            CovRole::Pseudo => self.pseudo(kind).clone(),
            CovRole::TotalOod => self.c_o.clone(),
            CovRole::TotalInd => self.c_i.clone(),
            CovRole::OodTotalPlda => self.phi_o_b.add(&self.phi_o_w)?,
            CovRole::Gamma(a, b) => self.gamma_term(a, b, kind)?,
        })
    }

    /// The `gamma_max(phi1, phi2)` term. Identical arguments short-circuit;
    /// an `OOD_TOTAL_PLDA` reference splits the excess between the kinds.
    pub fn gamma_term(&self, phi1: &CovRole, phi2: &CovRole, kind: CovKind) -> Result<SymMatrix> {
        let y = self.resolve(phi1, kind)?;
        if *phi2 == CovRole::OodTotalPlda && *phi1 != CovRole::OodTotalPlda {
            let (gb, gw) = gamma_max_split(&y, &self.phi_o_b, &self.phi_o_w)?;
            return Ok(match kind {
                CovKind::Between => gb,
                CovKind::Within => gw,
            });
        }
        let z = self.resolve(phi2, kind)?;
        if y == z {
            return Ok(y);
        }
        gamma_max(&y, &z)
    }
}

/// `alpha * phi0 + (1 - alpha) * gamma_max(phi1, phi2)` for one kind.
pub fn adapt_covariance(
    recipe: &AdaptRecipe,
    catalog: &CovarianceCatalog,
    kind: CovKind,
) -> Result<SymMatrix> {
    recipe.validate()?;
    if recipe.needs_ind() && !catalog.has_ind() {
        return Err(Error::MissingInDomainModel);
    }
    let phi0 = catalog.resolve(&recipe.phi0, kind)?;
    if recipe.alpha == 1.0 {
        return Ok(phi0);
    }
    let term = catalog.gamma_term(&recipe.phi1, &recipe.phi2, kind)?;
    phi0.combine(recipe.alpha, &term, 1.0 - recipe.alpha)
}

/// Adapts both covariances with the recipe's weight; `mu` becomes the model mean.
pub fn adapt_model(
    recipe: &AdaptRecipe,
    catalog: &CovarianceCatalog,
    mu: DVector<f64>,
) -> Result<PldaModel> {
    adapt_model_with_alphas(recipe, recipe.alpha, recipe.alpha, catalog, mu)
}

/// Like [`adapt_model`] with separate weights for the between and within covariances.
pub fn adapt_model_with_alphas(
    recipe: &AdaptRecipe,
    alpha_between: f64,
    alpha_within: f64,
    catalog: &CovarianceCatalog,
    mu: DVector<f64>,
) -> Result<PldaModel> {
    if mu.len() != catalog.dim() {
        return Err(Error::DimMismatch {
            expected: catalog.dim(),
            found: mu.len(),
        });
    }
    let b = adapt_covariance(
        &recipe.with_alpha(alpha_between)?,
        catalog,
        CovKind::Between,
    )?;
    let w = adapt_covariance(&recipe.with_alpha(alpha_within)?, catalog, CovKind::Within)?;
    PldaModel::new(mu, b, w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symmat::relative_frobenius;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> SymMatrix {
        let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        SymMatrix::from_matrix(a.transpose() * &a / n as f64 + DMatrix::identity(n, n) * 0.1)
            .unwrap()
    }

    fn random_catalog(rng: &mut ChaCha8Rng, n: usize) -> CovarianceCatalog {
        let ob = random_spd(rng, n);
        let ow = random_spd(rng, n);
        let co = random_spd(rng, n);
        let ci = random_spd(rng, n);
        let ib = random_spd(rng, n);
        let iw = random_spd(rng, n);
        CovarianceCatalog::new(ob, ow, co, ci)
            .unwrap()
            .with_ind(ib, iw)
            .unwrap()
    }

    fn close(a: &SymMatrix, b: &SymMatrix, tol: f64) -> bool {
        relative_frobenius(a.as_matrix(), b.as_matrix()) < tol
    }

    #[test]
    fn role_text_round_trip() {
        for p in Preset::ALL {
            let (a, b, c) = p.roles();
            for r in [a, b, c] {
                assert_eq!(r.to_string().parse::<CovRole>().unwrap(), r);
            }
        }
        assert_eq!(
            "gamma(pseudo, ood)".parse::<CovRole>().unwrap(),
            CovRole::gamma(CovRole::Pseudo, CovRole::Ood)
        );
        assert!("IND2".parse::<CovRole>().is_err());
        assert!("GAMMA(IND)".parse::<CovRole>().is_err());
    }

    #[test]
    fn recipe_validation() {
        assert!(matches!(preset("lip", 1.5), Err(Error::AlphaOutOfRange(_))));
        assert!(matches!(preset("nope", 0.5), Err(Error::UnknownPreset(_))));
        let deep = CovRole::gamma(CovRole::gamma(CovRole::Ind, CovRole::Ood), CovRole::Ind);
        assert!(matches!(
            AdaptRecipe::new(CovRole::Ind, deep, CovRole::Ind, 0.5),
            Err(Error::InvalidRecipe(_))
        ));
        assert!(preset("case8", 0.3).is_ok());
    }

    #[test]
    fn coral_pseudo_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let phi = random_spd(&mut rng, 5);
        let c = random_spd(&mut rng, 5);
        let out = coral_pseudo(&phi, &c, &c).unwrap();
        assert!((out.as_matrix() - phi.as_matrix()).norm() < 1e-10 * phi.frobenius_norm());

        let out = coral_pseudo(
            &SymMatrix::from_diagonal(&[0.5]),
            &SymMatrix::from_diagonal(&[1.0]),
            &SymMatrix::from_diagonal(&[4.0]),
        )
        .unwrap();
        assert!((out.get(0, 0) - 2.0).abs() < 1e-14);

        assert!(matches!(
            coral_pseudo(&phi, &SymMatrix::identity(4), &c),
            Err(Error::DimMismatch { .. })
        ));
        assert!(matches!(
            coral_pseudo(&phi, &SymMatrix::zeros(5), &c),
            Err(Error::Singular { .. })
        ));
    }

    #[test]
    fn coral_pseudo_matches_explicit_factors() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let phi = random_spd(&mut rng, 6);
        let co = random_spd(&mut rng, 6);
        let ci = random_spd(&mut rng, 6);
        // Factors built from raw eigendecompositions, independent of psd_sqrt.
        let eig_o = nalgebra::SymmetricEigen::new(co.as_matrix().clone());
        let eig_i = nalgebra::SymmetricEigen::new(ci.as_matrix().clone());
        let co_is = &eig_o.eigenvectors
            * DMatrix::from_diagonal(&eig_o.eigenvalues.map(|v| 1.0 / v.sqrt()))
            * eig_o.eigenvectors.transpose();
        let ci_s = &eig_i.eigenvectors
            * DMatrix::from_diagonal(&eig_i.eigenvalues.map(f64::sqrt))
            * eig_i.eigenvectors.transpose();
        let expect = &ci_s * &co_is * phi.as_matrix() * &co_is * &ci_s;
        let got = coral_pseudo(&phi, &co, &ci).unwrap();
        assert!(relative_frobenius(got.as_matrix(), &expect) < 1e-10);
    }

    #[test]
    fn gamma_max_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let y = random_spd(&mut rng, 5);
        assert!(close(&gamma_max(&y, &y).unwrap(), &y, 1e-9));

        let g = gamma_max(
            &SymMatrix::from_diagonal(&[2.0, 0.5]),
            &SymMatrix::identity(2),
        )
        .unwrap();
        assert!(close(&g, &SymMatrix::from_diagonal(&[2.0, 1.0]), 1e-14));

        for n in [2, 5, 9] {
            let y = random_spd(&mut rng, n);
            let z = random_spd(&mut rng, n);
            let g = gamma_max(&y, &z).unwrap();
            assert!(g.combine(1.0, &y, -1.0).unwrap().min_eigenvalue() >= -1e-9);
            assert!(g.combine(1.0, &z, -1.0).unwrap().min_eigenvalue() >= -1e-9);
        }
    }

    #[test]
    fn gamma_max_matches_literal_inverse_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let y = random_spd(&mut rng, 6);
        let z = random_spd(&mut rng, 6);
        let sd = simultaneous_diag(&y, &z).unwrap();
        let vinv = sd.basis.clone().try_inverse().unwrap();
        let m = DMatrix::from_diagonal(&sd.eigvals.map(|l| l.max(1.0)));
        let literal = vinv.transpose() * m * &vinv;
        let g = gamma_max(&y, &z).unwrap();
        assert!(relative_frobenius(g.as_matrix(), &literal) < 1e-10);
    }

    #[test]
    fn split_parts_sum_to_gamma() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let y = random_spd(&mut rng, 5).scale(3.0);
        let b = random_spd(&mut rng, 5);
        let w = random_spd(&mut rng, 5);
        let (gb, gw) = gamma_max_split(&y, &b, &w).unwrap();
        let g = gamma_max(&y, &b.add(&w).unwrap()).unwrap();
        assert!(close(&gb.add(&gw).unwrap(), &g, 1e-10));
        assert!(gb.combine(1.0, &b, -1.0).unwrap().min_eigenvalue() >= -1e-9);
        assert!(gw.combine(1.0, &w, -1.0).unwrap().min_eigenvalue() >= -1e-9);
    }

    #[test]
    fn endpoints_and_lip() {
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        let cat = random_catalog(&mut rng, 5);
        for p in Preset::ALL {
            let r = p.recipe(1.0).unwrap();
            for kind in [CovKind::Between, CovKind::Within] {
                let got = adapt_covariance(&r, &cat, kind).unwrap();
                assert_eq!(got, cat.resolve(&r.phi0, kind).unwrap());
            }
        }
        let r = preset("lip", 0.5).unwrap();
        for kind in [CovKind::Between, CovKind::Within] {
            let got = adapt_covariance(&r, &cat, kind).unwrap();
            let direct = cat.ind(kind).unwrap().as_matrix() * 0.5 + cat.ood(kind).as_matrix() * 0.5;
            assert!(relative_frobenius(got.as_matrix(), &direct) < 1e-12);
        }
    }

    #[test]
    fn cip_reg_composes_sub_operations() {
        let mut rng = ChaCha8Rng::seed_from_u64(26);
        let cat = random_catalog(&mut rng, 6);
        let r = preset("cip_reg", 0.3).unwrap();
        for kind in [CovKind::Between, CovKind::Within] {
            let pseudo = coral_pseudo(cat.ood(kind), cat.total_ood(), cat.total_ind()).unwrap();
            let ind = cat.ind(kind).unwrap();
            let g = gamma_max(&pseudo, ind).unwrap();
            let expect = ind.as_matrix() * 0.3 + g.as_matrix() * 0.7;
            let got = adapt_covariance(&r, &cat, kind).unwrap();
            assert!(relative_frobenius(got.as_matrix(), &expect) < 1e-12);
        }
    }

    #[test]
    fn unsupervised_presets_need_no_ind() {
        let mut rng = ChaCha8Rng::seed_from_u64(27);
        let n = 4;
        let cat = CovarianceCatalog::new(
            random_spd(&mut rng, n),
            random_spd(&mut rng, n),
            random_spd(&mut rng, n),
            random_spd(&mut rng, n),
        )
        .unwrap();
        let mu = DVector::zeros(n);
        assert!(adapt_model(&preset("coral_plus", 0.5).unwrap(), &cat, mu.clone()).is_ok());
        assert!(adapt_model(&preset("kaldi", 0.5).unwrap(), &cat, mu.clone()).is_ok());
        assert_eq!(
            adapt_model(&preset("lip", 1.0).unwrap(), &cat, mu),
            Err(Error::MissingInDomainModel)
        );
    }

    #[test]
    fn adapt_model_endpoints_and_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(28);
        let cat = random_catalog(&mut rng, 4);
        let mu = DVector::from_column_slice(&[1.0, 2.0, 3.0, 4.0]);
        let m = adapt_model(&preset("lip", 0.0).unwrap(), &cat, mu.clone()).unwrap();
        assert_eq!(&m.phi_b, cat.ood(CovKind::Between));
        assert_eq!(&m.phi_w, cat.ood(CovKind::Within));
        assert_eq!(m.mu, mu);
        let split =
            adapt_model_with_alphas(&preset("lip", 0.5).unwrap(), 1.0, 0.0, &cat, mu).unwrap();
        assert_eq!(&split.phi_b, cat.ind(CovKind::Between).unwrap());
        assert_eq!(&split.phi_w, cat.ood(CovKind::Within));
    }

    #[test]
    fn with_totals_recomputes_pseudo() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let cat = random_catalog(&mut rng, 3);
        let c = random_spd(&mut rng, 3);
        let cat2 = cat.clone().with_totals(c.clone(), c).unwrap();
        assert!(cat2.has_ind());
        assert!(close(
            cat2.pseudo(CovKind::Between),
            cat.ood(CovKind::Between),
            1e-10
        ));
    }
}
