//! Two-covariance PLDA: embeddings, moment-based training and
//! log-likelihood-ratio scoring of verification trials.

use std::collections::{BTreeMap, HashMap};

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::metrics::TrialSet;
use crate::symmat::SymMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub utt: String,
    pub speaker: Option<String>,
    pub vector: DVector<f64>,
}

/// A set of fixed-dimension embeddings with unique utterance ids.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    dim: usize,
    records: Vec<Embedding>,
    index: HashMap<String, usize>,
}

impl EmbeddingSet {
    pub fn new(dim: usize) -> Self {
        assert!(dim >= 1, "embedding dimension must be at least 1");
        EmbeddingSet {
            dim,
            records: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn from_records(dim: usize, records: impl IntoIterator<Item = Embedding>) -> Result<Self> {
        let mut set = EmbeddingSet::new(dim);
        for r in records {
            set.push(r)?;
        }
        Ok(set)
    }

    pub fn push(&mut self, record: Embedding) -> Result<()> {
        if record.vector.len() != self.dim {
            return Err(Error::DimMismatch {
                expected: self.dim,
                found: record.vector.len(),
            });
        }
        if self.index.contains_key(&record.utt) {
            return Err(Error::DuplicateUtterance(record.utt));
        }
        self.index.insert(record.utt.clone(), self.records.len());
        self.records.push(record);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[Embedding] {
        &self.records
    }

    pub fn get(&self, utt: &str) -> Option<&Embedding> {
        self.index.get(utt).map(|&i| &self.records[i])
    }

    pub fn is_labeled(&self) -> bool {
        self.records.iter().all(|r| r.speaker.is_some())
    }

    /// Records grouped by speaker, in speaker-id order. Fails on unlabeled records.
    pub fn by_speaker(&self) -> Result<BTreeMap<&str, Vec<&DVector<f64>>>> {
        let mut groups: BTreeMap<&str, Vec<&DVector<f64>>> = BTreeMap::new();
        for r in &self.records {
            let spk = r
                .speaker
                .as_deref()
                .ok_or_else(|| Error::Unlabeled(r.utt.clone()))?;
            groups.entry(spk).or_default().push(&r.vector);
        }
        Ok(groups)
    }

    /// Same ids and labels, vectors mapped through `f` (which may change the dimension).
    pub fn map_vectors(
        &self,
        out_dim: usize,
        f: impl Fn(&DVector<f64>) -> DVector<f64>,
    ) -> Result<EmbeddingSet> {
        EmbeddingSet::from_records(
            out_dim,
            self.records.iter().map(|r| Embedding {
                utt: r.utt.clone(),
                speaker: r.speaker.clone(),
                vector: f(&r.vector),
            }),
        )
    }

    /// Copy with speaker labels removed.
    pub fn unlabeled(&self) -> EmbeddingSet {
        let mut out = self.clone();
        for r in &mut out.records {
            r.speaker = None;
        }
        out
    }

    /// Data matrix with one column per record.
    pub fn to_columns(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.records.len());
        for (j, r) in self.records.iter().enumerate() {
            m.set_column(j, &r.vector);
        }
        m
    }

    /// Resolves a trial-side id: an utterance id, or else a speaker id whose
    /// utterances are averaged into a single enrollment vector.
    pub fn resolve(&self, id: &str) -> Result<DVector<f64>> {
        if let Some(r) = self.get(id) {
            return Ok(r.vector.clone());
        }
        let mut sum = DVector::zeros(self.dim);
        let mut n = 0usize;
        for r in &self.records {
            if r.speaker.as_deref() == Some(id) {
                sum += &r.vector;
                n += 1;
            }
        }
        if n == 0 {
            return Err(Error::UnknownUtterance(id.to_string()));
        }
        Ok(sum / n as f64)
    }
}

pub(crate) fn mean_of<'a>(
    dim: usize,
    vs: impl IntoIterator<Item = &'a DVector<f64>>,
) -> DVector<f64> {
    let mut sum = DVector::zeros(dim);
    let mut n = 0usize;
    for v in vs {
        sum += v;
        n += 1;
    }
    sum / n as f64
}

/// Scatter `sum (v - center)(v - center)^T` over the given vectors.
pub(crate) fn scatter<'a>(
    dim: usize,
    center: &DVector<f64>,
    vs: impl IntoIterator<Item = &'a DVector<f64>>,
) -> DMatrix<f64> {
    let cols: Vec<DVector<f64>> = vs.into_iter().map(|v| v - center).collect();
    if cols.is_empty() {
        return DMatrix::zeros(dim, dim);
    }
    let x = DMatrix::from_columns(&cols);
    &x * x.transpose()
}

/// Maximum-likelihood (divide-by-N) covariance about the sample mean.
pub fn total_covariance(data: &EmbeddingSet) -> Result<SymMatrix> {
    if data.len() < 2 {
        return Err(Error::TooFewRecords {
            needed: 2,
            found: data.len(),
        });
    }
    let vs = data.records.iter().map(|r| &r.vector);
    let mean = mean_of(data.dim, vs.clone());
    let s = scatter(data.dim, &mean, vs);
    Ok(SymMatrix::symmetrized(s / data.len() as f64))
}

/// Mean vector plus between/within speaker covariances.
#[derive(Debug, Clone, PartialEq)]
pub struct PldaModel {
    pub mu: DVector<f64>,
    pub phi_b: SymMatrix,
    pub phi_w: SymMatrix,
}

impl PldaModel {
    pub fn new(mu: DVector<f64>, phi_b: SymMatrix, phi_w: SymMatrix) -> Result<Self> {
        phi_b.ensure_dim(mu.len())?;
        phi_w.ensure_dim(mu.len())?;
        Ok(PldaModel { mu, phi_b, phi_w })
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn total(&self) -> SymMatrix {
        self.phi_b.add(&self.phi_w).expect("model dims agree")
    }

    pub fn scorer(&self) -> Result<Scorer> {
        Scorer::new(self)
    }
}

/// Moment-based two-covariance training.
///
/// `phi_w` pools within-speaker scatter over all utterances (divide by the
/// utterance count); `phi_b` is the covariance of the speaker means about
/// their unweighted average (divide by the speaker count).
pub fn train_plda(data: &EmbeddingSet) -> Result<PldaModel> {
    let groups = data.by_speaker()?;
    if groups.len() < 2 {
        return Err(Error::TooFewSpeakers(groups.len()));
    }
    if groups.values().all(|g| g.len() < 2) {
        return Err(Error::NoWithinSpeakerVariation);
    }
    let dim = data.dim;
    let mu = mean_of(dim, data.records.iter().map(|r| &r.vector));

    let mut within = DMatrix::zeros(dim, dim);
    let mut means = Vec::with_capacity(groups.len());
    for vs in groups.values() {
        let m = mean_of(dim, vs.iter().copied());
        within += scatter(dim, &m, vs.iter().copied());
        means.push(m);
    }
    let within = SymMatrix::symmetrized(within / data.len() as f64);

    let center = mean_of(dim, means.iter());
    let between = SymMatrix::symmetrized(scatter(dim, &center, means.iter()) / means.len() as f64);

    let scale = (between.trace() / dim as f64).max(1.0);
    let phi_w = within.floored(scale)?;
    PldaModel::new(mu, between, phi_w)
}

/// Precomputed scoring quantities for one model.
///
/// With `T = phi_b + phi_w` and the same-speaker covariance
/// `S = [[T, phi_b], [phi_b, T]]`, write `S^{-1} = [[A, C], [C, A]]`. Then
/// the verification LLR is
/// `-(e'Qe + t'Qt)/2 - e'Ct + logdet(T) - logdet(S)/2` with `Q = A - T^{-1}`.
#[derive(Debug, Clone)]
pub struct Scorer {
    mu: DVector<f64>,
    quad: DMatrix<f64>,
    cross: DMatrix<f64>,
    offset: f64,
}

/// One side of a trial, prepared for repeated pairing.
#[derive(Debug, Clone)]
pub struct Side {
    vector: DVector<f64>,
    half_quad: f64,
    cross: DVector<f64>,
}

fn cholesky_floored(m: SymMatrix) -> Result<(DMatrix<f64>, f64)> {
    let chol = match Cholesky::<f64, Dyn>::new(m.as_matrix().clone()) {
        Some(c) => c,
        None => {
            let scale = m.trace() / m.dim() as f64;
            let f = m.floored(scale)?;
            Cholesky::<f64, Dyn>::new(f.as_matrix().clone()).ok_or(Error::Singular {
                eigenvalue: f.min_eigenvalue(),
                floor: 0.0,
            })?
        }
    };
    let l = chol.l_dirty();
    let logdet = 2.0 * (0..l.nrows()).map(|i| l[(i, i)].ln()).sum::<f64>();
    Ok((chol.inverse(), logdet))
}

impl Scorer {
    pub fn new(model: &PldaModel) -> Result<Self> {
        let d = model.dim();
        let t = model.total();
        let b = model.phi_b.as_matrix();
        let mut stacked = DMatrix::zeros(2 * d, 2 * d);
        stacked.view_mut((0, 0), (d, d)).copy_from(t.as_matrix());
        stacked.view_mut((d, d), (d, d)).copy_from(t.as_matrix());
        stacked.view_mut((0, d), (d, d)).copy_from(b);
        stacked.view_mut((d, 0), (d, d)).copy_from(b);
        let (s_inv, logdet_s) = cholesky_floored(SymMatrix::symmetrized(stacked))?;
        let (t_inv, logdet_t) = cholesky_floored(t)?;

        let a = (s_inv.view((0, 0), (d, d)) + s_inv.view((d, d), (d, d))) * 0.5;
        let c = s_inv.view((0, d), (d, d)).into_owned();
        let quad = SymMatrix::symmetrized(a - t_inv).into_matrix();
        let cross = SymMatrix::symmetrized(c).into_matrix();
        let offset = logdet_t - 0.5 * logdet_s;
        if !offset.is_finite() {
            return Err(Error::Singular {
                eigenvalue: 0.0,
                floor: 0.0,
            });
        }
        Ok(Scorer {
            mu: model.mu.clone(),
            quad,
            cross,
            offset,
        })
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn prepare(&self, v: &DVector<f64>) -> Result<Side> {
        if v.len() != self.dim() {
            return Err(Error::DimMismatch {
                expected: self.dim(),
                found: v.len(),
            });
        }
        let x = v - &self.mu;
        let half_quad = 0.5 * x.dot(&(&self.quad * &x));
        let cross = &self.cross * &x;
        Ok(Side {
            vector: x,
            half_quad,
            cross,
        })
    }

    pub fn pair(&self, enroll: &Side, test: &Side) -> f64 {
        self.offset - enroll.half_quad - test.half_quad - enroll.cross.dot(&test.vector)
    }

    pub fn score(&self, enroll: &DVector<f64>, test: &DVector<f64>) -> Result<f64> {
        Ok(self.pair(&self.prepare(enroll)?, &self.prepare(test)?))
    }
}

/// Same-speaker vs different-speaker log-likelihood ratio for one pair.
pub fn score_llr(model: &PldaModel, enroll: &DVector<f64>, test: &DVector<f64>) -> Result<f64> {
    model.scorer()?.score(enroll, test)
}

/// Prepares every distinct id of one trial side, in parallel when enabled.
pub(crate) fn prepare_sides(
    scorer: &Scorer,
    set: &EmbeddingSet,
    ids: Vec<&str>,
) -> Result<HashMap<String, Side>> {
    let work = |id: &&str| -> Result<(String, Side)> {
        let v = set.resolve(id)?;
        Ok((id.to_string(), scorer.prepare(&v)?))
    };
    #[cfg(feature = "parallel")]
    let out: Result<Vec<_>> = {
        use rayon::prelude::*;
        ids.par_iter().map(work).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let out: Result<Vec<_>> = ids.iter().map(work).collect();
    Ok(out?.into_iter().collect())
}

/// Scores every trial. Enrollment ids that name a speaker rather than an
/// utterance are scored with the average of that speaker's vectors.
pub fn score_trials(
    model: &PldaModel,
    enroll_set: &EmbeddingSet,
    test_set: &EmbeddingSet,
    trials: &TrialSet,
) -> Result<TrialSet> {
    let scorer = model.scorer()?;
    let mut enroll_ids: Vec<&str> = trials.trials.iter().map(|t| t.enroll.as_str()).collect();
    enroll_ids.sort_unstable();
    enroll_ids.dedup();
    let mut test_ids: Vec<&str> = trials.trials.iter().map(|t| t.test.as_str()).collect();
    test_ids.sort_unstable();
    test_ids.dedup();
    let enrolls = prepare_sides(&scorer, enroll_set, enroll_ids)?;
    let tests = prepare_sides(&scorer, test_set, test_ids)?;

    let mut out = trials.clone();
    for t in &mut out.trials {
        t.score = Some(scorer.pair(&enrolls[&t.enroll], &tests[&t.test]));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{Label, Trial};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn emb(utt: &str, spk: Option<&str>, v: &[f64]) -> Embedding {
        Embedding {
            utt: utt.into(),
            speaker: spk.map(Into::into),
            vector: DVector::from_column_slice(v),
        }
    }

    /// Gaussian log-density through an explicit inverse and determinant.
    fn log_normal(x: &DVector<f64>, cov: &DMatrix<f64>) -> f64 {
        let n = x.len() as f64;
        let inv = cov.clone().try_inverse().unwrap();
        let det = cov.determinant();
        -0.5 * (n * (2.0 * std::f64::consts::PI).ln() + det.ln() + x.dot(&(inv * x)))
    }

    fn llr_oracle(model: &PldaModel, e: &DVector<f64>, t: &DVector<f64>) -> f64 {
        let d = model.dim();
        let tot = model.total().into_matrix();
        let b = model.phi_b.as_matrix();
        let mut s = DMatrix::zeros(2 * d, 2 * d);
        s.view_mut((0, 0), (d, d)).copy_from(&tot);
        s.view_mut((d, d), (d, d)).copy_from(&tot);
        s.view_mut((0, d), (d, d)).copy_from(b);
        s.view_mut((d, 0), (d, d)).copy_from(b);
        let e = e - &model.mu;
        let t = t - &model.mu;
        let joint = DVector::from_iterator(2 * d, e.iter().chain(t.iter()).copied());
        log_normal(&joint, &s) - log_normal(&e, &tot) - log_normal(&t, &tot)
    }

    fn random_model(rng: &mut ChaCha8Rng, d: usize) -> PldaModel {
        let a = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
        let g = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
        let b = SymMatrix::from_matrix(&a * a.transpose()).unwrap();
        let w = SymMatrix::from_matrix(&g * g.transpose() + DMatrix::identity(d, d) * 0.2).unwrap();
        let mu = DVector::from_fn(d, |_, _| rng.random_range(-0.5..0.5));
        PldaModel::new(mu, b, w).unwrap()
    }

    #[test]
    fn embedding_set_invariants() {
        let mut s = EmbeddingSet::new(2);
        s.push(emb("a", Some("x"), &[1.0, 2.0])).unwrap();
        assert!(matches!(
            s.push(emb("a", Some("x"), &[1.0, 2.0])),
            Err(Error::DuplicateUtterance(_))
        ));
        assert!(matches!(
            s.push(emb("b", Some("x"), &[1.0])),
            Err(Error::DimMismatch { .. })
        ));
        assert!(s.is_labeled());
        s.push(emb("c", None, &[0.0, 0.0])).unwrap();
        assert!(!s.is_labeled());
    }

    #[test]
    fn resolve_averages_speaker_enrollment() {
        let s = EmbeddingSet::from_records(
            1,
            vec![
                emb("u1", Some("spk"), &[1.0]),
                emb("u2", Some("spk"), &[3.0]),
            ],
        )
        .unwrap();
        assert_eq!(s.resolve("u1").unwrap()[0], 1.0);
        assert_eq!(s.resolve("spk").unwrap()[0], 2.0);
        assert!(matches!(
            s.resolve("nobody"),
            Err(Error::UnknownUtterance(_))
        ));
    }

    #[test]
    fn total_covariance_two_points() {
        let s = EmbeddingSet::from_records(
            2,
            vec![emb("a", None, &[0.0, 0.0]), emb("b", None, &[2.0, 0.0])],
        )
        .unwrap();
        let c = total_covariance(&s).unwrap();
        assert_eq!(c, SymMatrix::from_diagonal(&[1.0, 0.0]));
    }

    #[test]
    fn total_covariance_degenerate() {
        let s = EmbeddingSet::from_records(
            2,
            vec![emb("a", None, &[1.5, -2.0]), emb("b", None, &[1.5, -2.0])],
        )
        .unwrap();
        assert_eq!(total_covariance(&s).unwrap(), SymMatrix::zeros(2));
        let one = EmbeddingSet::from_records(1, vec![emb("a", None, &[1.0])]).unwrap();
        assert!(matches!(
            total_covariance(&one),
            Err(Error::TooFewRecords { .. })
        ));
    }

    #[test]
    fn total_covariance_matches_double_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let recs: Vec<Embedding> = (0..100)
            .map(|i| {
                let v: Vec<f64> = (0..4).map(|_| rng.random_range(-3.0..3.0)).collect();
                emb(&format!("u{i}"), None, &v)
            })
            .collect();
        let s = EmbeddingSet::from_records(4, recs.clone()).unwrap();
        let c = total_covariance(&s).unwrap();
        let n = recs.len() as f64;
        let mut mean = [0.0; 4];
        for r in &recs {
            for i in 0..4 {
                mean[i] += r.vector[i] / n;
            }
        }
        for i in 0..4 {
            for j in 0..4 {
                let mut acc = 0.0;
                for r in &recs {
                    acc += (r.vector[i] - mean[i]) * (r.vector[j] - mean[j]);
                }
                assert!((c.get(i, j) - acc / n).abs() < 1e-12);
            }
        }
        let mut rev = recs;
        rev.reverse();
        let c2 = total_covariance(&EmbeddingSet::from_records(4, rev).unwrap()).unwrap();
        assert!((c.as_matrix() - c2.as_matrix()).norm() < 1e-12);
    }

    #[test]
    fn train_hand_computable() {
        let s = EmbeddingSet::from_records(
            1,
            vec![
                emb("a1", Some("a"), &[-1.5]),
                emb("a2", Some("a"), &[-0.5]),
                emb("b1", Some("b"), &[0.5]),
                emb("b2", Some("b"), &[1.5]),
            ],
        )
        .unwrap();
        let m = train_plda(&s).unwrap();
        assert!(m.mu[0].abs() < 1e-15);
        assert!((m.phi_w.get(0, 0) - 0.25).abs() < 1e-15);
        assert!((m.phi_b.get(0, 0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn train_degenerate_within_is_floored() {
        let s = EmbeddingSet::from_records(
            2,
            vec![
                emb("a1", Some("a"), &[1.0, 0.0]),
                emb("a2", Some("a"), &[1.0, 0.0]),
                emb("b1", Some("b"), &[-1.0, 2.0]),
                emb("b2", Some("b"), &[-1.0, 2.0]),
            ],
        )
        .unwrap();
        let m = train_plda(&s).unwrap();
        let w = m.phi_w.eigen().values;
        assert!(w.iter().all(|&v| v > 0.0 && v < 1e-8));
        assert!(m.scorer().is_ok());
    }

    #[test]
    fn train_errors() {
        let one = EmbeddingSet::from_records(
            1,
            vec![emb("a1", Some("a"), &[1.0]), emb("a2", Some("a"), &[2.0])],
        )
        .unwrap();
        assert!(matches!(train_plda(&one), Err(Error::TooFewSpeakers(1))));
        let singles = EmbeddingSet::from_records(
            1,
            vec![emb("a1", Some("a"), &[1.0]), emb("b1", Some("b"), &[2.0])],
        )
        .unwrap();
        assert!(matches!(
            train_plda(&singles),
            Err(Error::NoWithinSpeakerVariation)
        ));
        let unl = EmbeddingSet::from_records(1, vec![emb("a1", None, &[1.0])]).unwrap();
        assert!(matches!(train_plda(&unl), Err(Error::Unlabeled(_))));
    }

    #[test]
    fn llr_zero_between_is_zero() {
        let model = PldaModel::new(
            DVector::zeros(3),
            SymMatrix::zeros(3),
            SymMatrix::from_diagonal(&[1.0, 2.0, 0.5]),
        )
        .unwrap();
        let e = DVector::from_column_slice(&[0.3, -1.0, 2.0]);
        let t = DVector::from_column_slice(&[1.3, 0.2, -0.7]);
        assert!(score_llr(&model, &e, &t).unwrap().abs() < 1e-12);
    }

    #[test]
    fn llr_one_dimensional_value() {
        let model = PldaModel::new(
            DVector::zeros(1),
            SymMatrix::identity(1),
            SymMatrix::identity(1),
        )
        .unwrap();
        let z = DVector::zeros(1);
        let s = score_llr(&model, &z, &z).unwrap();
        let oracle = llr_oracle(&model, &z, &z);
        let closed = -0.5 * 3.0_f64.ln() + 2.0_f64.ln();
        assert!((s - closed).abs() < 1e-12);
        assert!((oracle - closed).abs() < 1e-12);
        assert!((s - 0.1438410362258904).abs() < 1e-12);
    }

    #[test]
    fn llr_matches_density_oracle_and_is_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for d in [1, 3, 8] {
            let model = random_model(&mut rng, d);
            for _ in 0..5 {
                let e = DVector::from_fn(d, |_, _| rng.random_range(-2.0..2.0));
                let t = DVector::from_fn(d, |_, _| rng.random_range(-2.0..2.0));
                let s = score_llr(&model, &e, &t).unwrap();
                let o = llr_oracle(&model, &e, &t);
                assert!((s - o).abs() < 1e-8 * (1.0 + o.abs()), "{s} vs {o}");
                let r = score_llr(&model, &t, &e).unwrap();
                assert!((s - r).abs() < 1e-12 * (1.0 + s.abs()));
            }
        }
    }

    #[test]
    fn llr_increases_toward_enrollment() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for d in [1, 8] {
            let model = random_model(&mut rng, d);
            let sd = crate::symmat::simultaneous_diag(&model.phi_b, &model.phi_w).unwrap();
            let dir = sd.basis.column(0).into_owned();
            let e = &model.mu + &dir * 2.0;
            let mut prev = f64::NEG_INFINITY;
            for k in 0..=10 {
                // Test moves from -2*dir to the enrollment point.
                let t = &model.mu + &dir * (-2.0 + 0.4 * k as f64);
                let s = score_llr(&model, &e, &t).unwrap();
                assert!(s > prev, "d={d} step {k}: {s} <= {prev}");
                prev = s;
            }
        }
    }

    #[test]
    fn score_trials_matches_direct_and_is_order_free() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let d = 4;
        let model = random_model(&mut rng, d);
        let mk = |prefix: &str, rng: &mut ChaCha8Rng| {
            EmbeddingSet::from_records(
                d,
                (0..30).map(|i| Embedding {
                    utt: format!("{prefix}{i}"),
                    speaker: Some(format!("s{}", i % 5)),
                    vector: DVector::from_fn(d, |_, _| rng.random_range(-2.0..2.0)),
                }),
            )
            .unwrap()
        };
        let enroll = mk("e", &mut rng);
        let test = mk("t", &mut rng);

        let empty = score_trials(&model, &enroll, &test, &TrialSet::default()).unwrap();
        assert!(empty.trials.is_empty());

        let mut trials = TrialSet::default();
        for i in 0..1000 {
            trials.trials.push(Trial {
                enroll: format!("e{}", rng.random_range(0..30)),
                test: format!("t{}", i % 30),
                label: Some(Label::Nontarget),
                score: None,
            });
        }
        let scored = score_trials(&model, &enroll, &test, &trials).unwrap();
        let first = &scored.trials[0];
        let direct = score_llr(
            &model,
            &enroll.get(&first.enroll).unwrap().vector,
            &test.get(&first.test).unwrap().vector,
        )
        .unwrap();
        assert!((first.score.unwrap() - direct).abs() < 1e-12);

        let mut rev = trials.clone();
        rev.trials.reverse();
        let scored_rev = score_trials(&model, &enroll, &test, &rev).unwrap();
        for (a, b) in scored.trials.iter().zip(scored_rev.trials.iter().rev()) {
            assert_eq!(a.score.unwrap().to_bits(), b.score.unwrap().to_bits());
        }

        let mut bad = TrialSet::default();
        bad.trials.push(Trial {
            enroll: "nope".into(),
            test: "t0".into(),
            label: None,
            score: None,
        });
        assert!(matches!(
            score_trials(&model, &enroll, &test, &bad),
            Err(Error::UnknownUtterance(_))
        ));
    }
}
