//! Synthetic two-domain speaker-embedding corpora with known covariances.
//!
//! Out-of-domain speakers are drawn from the two-covariance model
//! (`mean ~ N(0, phi_b)`, `utterance = mean + N(0, phi_w)`); in-domain
//! speakers are drawn the same way and then mapped through `v -> A v + b`.
//! Every speaker gets its own counter-based random stream, so a corpus is a
//! pure function of its configuration.

use std::collections::{BTreeMap, HashSet};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::adapt::CovarianceCatalog;
use crate::error::{Error, Result};
use crate::metrics::{Label, Trial, TrialSet};
use crate::plda::{Embedding, EmbeddingSet};
use crate::symmat::{psd_sqrt, SymMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub dim: usize,
    pub n_speakers_ood: usize,
    pub utts_per_speaker_ood: usize,
    pub n_speakers_ind: usize,
    pub utts_per_speaker_ind: usize,
    /// Held-out in-domain speakers for the trial list.
    pub n_speakers_eval: usize,
    pub enroll_utts: usize,
    pub test_utts: usize,
    /// Unlabeled in-domain utterances (one per fresh speaker) for score normalization.
    pub n_cohort: usize,
    /// Nontarget trials per target trial.
    pub nontarget_ratio: usize,
    pub phi_b_true: SymMatrix,
    pub phi_w_true: SymMatrix,
    pub shift_a: DMatrix<f64>,
    pub shift_b: DVector<f64>,
    pub seed: u64,
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        let d = self.dim;
        if d == 0 {
            return bad("dim must be positive".into());
        }
        if self.phi_b_true.dim() != d || self.phi_w_true.dim() != d {
            return bad("true covariances do not match dim".into());
        }
        if self.shift_a.shape() != (d, d) || self.shift_b.len() != d {
            return bad("shift does not match dim".into());
        }
        let b_min = self.phi_b_true.min_eigenvalue();
        if b_min < -1e-10 * self.phi_b_true.max_eigenvalue().abs().max(1.0) {
            return bad(format!("phi_b_true is not PSD (eigenvalue {b_min:e})"));
        }
        if self.phi_w_true.min_eigenvalue() <= 0.0 {
            return bad("phi_w_true is not positive definite".into());
        }
        let sv = self.shift_a.clone().svd(false, false).singular_values;
        let (lo, hi) = sv.iter().fold((f64::INFINITY, 0.0_f64), |(lo, hi), &s| {
            (lo.min(s), hi.max(s))
        });
        if !(lo > 1e-12 * hi.max(f64::MIN_POSITIVE)) {
            return bad("shift matrix A is singular".into());
        }
        if self.n_speakers_ood < 2 || self.utts_per_speaker_ood < 1 {
            return bad("need at least 2 OOD speakers".into());
        }
        if self.n_speakers_ind > 0 && self.n_speakers_ind < 2 {
            return bad("need 0 or at least 2 InD speakers".into());
        }
        if self.n_speakers_ind > 0 && self.utts_per_speaker_ind < 1 {
            return bad("InD speakers need at least one utterance".into());
        }
        if self.n_speakers_eval > 0 {
            if self.n_speakers_eval < 2 {
                return bad("need 0 or at least 2 eval speakers".into());
            }
            if self.enroll_utts < 1 || self.test_utts < 1 {
                return bad("eval speakers need enroll and test utterances".into());
            }
        }
        Ok(())
    }

    /// Population covariances of both domains.
    pub fn truth(&self) -> Result<CovarianceCatalog> {
        let total = self.phi_b_true.add(&self.phi_w_true)?;
        let ib = self.phi_b_true.congruence(&self.shift_a)?;
        let iw = self.phi_w_true.congruence(&self.shift_a)?;
        let c_i = total.congruence(&self.shift_a)?;
        CovarianceCatalog::new(self.phi_b_true.clone(), self.phi_w_true.clone(), total, c_i)?
            .with_ind(ib, iw)
    }
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub ood: EmbeddingSet,
    /// Labeled in-domain training data.
    pub ind: EmbeddingSet,
    pub enroll: EmbeddingSet,
    pub test: EmbeddingSet,
    pub cohort: EmbeddingSet,
    pub trials: TrialSet,
    pub truth: CovarianceCatalog,
}

#[derive(Clone, Copy)]
enum Stream {
    Ood = 1,
    Ind = 2,
    Eval = 3,
    Cohort = 4,
    Trials = 5,
}

fn stream_rng(seed: u64, stream: Stream, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((stream as u64) << 40) | index);
    rng
}

fn normal_vec(rng: &mut ChaCha8Rng, d: usize) -> DVector<f64> {
    DVector::from_fn(d, |_, _| rng.sample(StandardNormal))
}

struct Sampler {
    d: usize,
    between: DMatrix<f64>,
    within: DMatrix<f64>,
    map: Option<(DMatrix<f64>, DVector<f64>)>,
}

impl Sampler {
    fn speaker(&self, rng: &mut ChaCha8Rng, n_utts: usize) -> Vec<DVector<f64>> {
        let mean = &self.between * normal_vec(rng, self.d);
        (0..n_utts)
            .map(|_| {
                let v = &mean + &self.within * normal_vec(rng, self.d);
                match &self.map {
                    Some((a, b)) => a * v + b,
                    None => v,
                }
            })
            .collect()
    }
}

fn width(n: usize) -> usize {
    n.max(1).to_string().len()
}

pub fn generate(config: &SynthConfig) -> Result<SynthCorpus> {
    config.validate()?;
    let d = config.dim;
    let between = psd_sqrt(&config.phi_b_true)?.into_matrix();
    let within = psd_sqrt(&config.phi_w_true)?.into_matrix();
    let ood_sampler = Sampler {
        d,
        between: between.clone(),
        within: within.clone(),
        map: None,
    };
    let ind_sampler = Sampler {
        d,
        between,
        within,
        map: Some((config.shift_a.clone(), config.shift_b.clone())),
    };

    let labeled = |prefix: &str,
                   sampler: &Sampler,
                   stream: Stream,
                   n_spk: usize,
                   n_utt: usize|
     -> Result<EmbeddingSet> {
        let (ws, wu) = (width(n_spk), width(n_utt));
        let mut set = EmbeddingSet::new(d);
        for s in 0..n_spk {
            let mut rng = stream_rng(config.seed, stream, s as u64);
            let spk = format!("{prefix}{s:0ws$}");
            for (u, v) in sampler.speaker(&mut rng, n_utt).into_iter().enumerate() {
                set.push(Embedding {
                    utt: format!("{spk}-{u:0wu$}"),
                    speaker: Some(spk.clone()),
                    vector: v,
                })?;
            }
        }
        Ok(set)
    };

    let ood = labeled(
        "ood",
        &ood_sampler,
        Stream::Ood,
        config.n_speakers_ood,
        config.utts_per_speaker_ood,
    )?;
    let ind = labeled(
        "ind",
        &ind_sampler,
        Stream::Ind,
        config.n_speakers_ind,
        config.utts_per_speaker_ind,
    )?;

    let mut enroll = EmbeddingSet::new(d);
    let mut test = EmbeddingSet::new(d);
    let ws = width(config.n_speakers_eval);
    let wu = width(config.enroll_utts.max(config.test_utts));
    for s in 0..config.n_speakers_eval {
        let mut rng = stream_rng(config.seed, Stream::Eval, s as u64);
        let spk = format!("eval{s:0ws$}");
        let utts = ind_sampler.speaker(&mut rng, config.enroll_utts + config.test_utts);
        for (u, v) in utts.into_iter().enumerate() {
            let (set, tag, idx) = if u < config.enroll_utts {
                (&mut enroll, 'e', u)
            } else {
                (&mut test, 't', u - config.enroll_utts)
            };
            set.push(Embedding {
                utt: format!("{spk}-{tag}{idx:0wu$}"),
                speaker: Some(spk.clone()),
                vector: v,
            })?;
        }
    }

    let mut cohort = EmbeddingSet::new(d);
    let wc = width(config.n_cohort);
    for c in 0..config.n_cohort {
        let mut rng = stream_rng(config.seed, Stream::Cohort, c as u64);
        let v = ind_sampler.speaker(&mut rng, 1).remove(0);
        cohort.push(Embedding {
            utt: format!("cohort{c:0wc$}"),
            speaker: None,
            vector: v,
        })?;
    }

    let trials = make_trials(&enroll, &test, config.nontarget_ratio, config.seed)?;
    Ok(SynthCorpus {
        ood,
        ind,
        enroll,
        test,
        cohort,
        trials,
        truth: config.truth()?,
    })
}

/// All same-speaker enroll/test pairs as targets plus `ratio` times as many
/// distinct random cross-speaker pairs, sorted by (enroll, test).
pub fn make_trials(
    enroll: &EmbeddingSet,
    test: &EmbeddingSet,
    ratio: usize,
    seed: u64,
) -> Result<TrialSet> {
    let group = |set: &EmbeddingSet| -> Result<BTreeMap<String, Vec<String>>> {
        let mut g: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for r in set.records() {
            let spk = r
                .speaker
                .clone()
                .ok_or_else(|| Error::Unlabeled(r.utt.clone()))?;
            g.entry(spk).or_default().push(r.utt.clone());
        }
        Ok(g)
    };
    let e = group(enroll)?;
    let t = group(test)?;
    let mut pairs: Vec<(String, String, Label)> = Vec::new();
    for (spk, eu) in &e {
        if let Some(tu) = t.get(spk) {
            for a in eu {
                for b in tu {
                    pairs.push((a.clone(), b.clone(), Label::Target));
                }
            }
        }
    }
    let n_targets = pairs.len();

    let e_all: Vec<(&str, &str)> = enroll
        .records()
        .iter()
        .map(|r| (r.utt.as_str(), r.speaker.as_deref().unwrap_or("")))
        .collect();
    let t_all: Vec<(&str, &str)> = test
        .records()
        .iter()
        .map(|r| (r.utt.as_str(), r.speaker.as_deref().unwrap_or("")))
        .collect();
    let same: usize = e
        .iter()
        .map(|(s, eu)| eu.len() * t.get(s).map_or(0, Vec::len))
        .sum();
    let available = e_all.len() * t_all.len() - same;
    let wanted = (n_targets * ratio).min(available);
    let mut rng = stream_rng(seed, Stream::Trials, 0);
    let mut seen: HashSet<(usize, usize)> = HashSet::with_capacity(wanted);
    while seen.len() < wanted {
        let i = rng.random_range(0..e_all.len());
        let j = rng.random_range(0..t_all.len());
        if e_all[i].1 != t_all[j].1 && seen.insert((i, j)) {
            pairs.push((
                e_all[i].0.to_string(),
                t_all[j].0.to_string(),
                Label::Nontarget,
            ));
        }
    }
    pairs.sort();
    Ok(TrialSet {
        trials: pairs
            .into_iter()
            .map(|(enroll, test, label)| Trial {
                enroll,
                test,
                label: Some(label),
                score: None,
            })
            .collect(),
    })
}

/// Shift geometry for generated configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShiftMode {
    /// `A = Q diag(s) Q^T`, symmetric positive definite.
    Symmetric,
    /// `A = Q1 diag(s) Q2^T`, a general invertible map.
    General,
}

/// Compact description of a synthetic corpus, expanded into a
/// [`SynthConfig`] by drawing random truth covariances and a random shift.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    pub dim: usize,
    pub n_speakers_ood: usize,
    pub utts_per_speaker_ood: usize,
    pub n_speakers_ind: usize,
    pub utts_per_speaker_ind: usize,
    pub n_speakers_eval: usize,
    pub enroll_utts: usize,
    pub test_utts: usize,
    pub n_cohort: usize,
    pub nontarget_ratio: usize,
    /// Eigenvalue range of the true between-speaker covariance (log-uniform).
    pub between_range: (f64, f64),
    /// Eigenvalue range of the true within-speaker covariance (log-uniform).
    pub within_range: (f64, f64),
    /// Singular-value range of the shift matrix (log-uniform).
    pub shift_range: (f64, f64),
    pub shift_mode: ShiftMode,
    /// Standard deviation of the entries of the shift offset `b`.
    pub shift_offset: f64,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            dim: 32,
            n_speakers_ood: 500,
            utts_per_speaker_ood: 10,
            n_speakers_ind: 60,
            utts_per_speaker_ind: 10,
            n_speakers_eval: 100,
            enroll_utts: 3,
            test_utts: 3,
            n_cohort: 200,
            nontarget_ratio: 20,
            between_range: (0.5, 5.0),
            within_range: (0.2, 2.0),
            shift_range: (0.5, 2.0),
            shift_mode: ShiftMode::Symmetric,
            shift_offset: 1.0,
            seed: 1,
        }
    }
}

fn log_uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        return lo;
    }
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

fn random_rotation(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let (mut q, r) = qr.unpack();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

fn random_cov(rng: &mut ChaCha8Rng, d: usize, range: (f64, f64)) -> Result<SymMatrix> {
    let q = random_rotation(rng, d);
    let eig: Vec<f64> = (0..d).map(|_| log_uniform(rng, range)).collect();
    SymMatrix::from_diagonal(&eig).congruence(&q)
}

impl SynthParams {
    pub fn config(&self) -> Result<SynthConfig> {
        let d = self.dim;
        if d == 0 {
            return Err(Error::InvalidConfig("dim must be positive".into()));
        }
        for (name, (lo, hi)) in [
            ("between_range", self.between_range),
            ("within_range", self.within_range),
            ("shift_range", self.shift_range),
        ] {
            if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must satisfy 0 < lo <= hi"
                )));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(0);
        let phi_b = random_cov(&mut rng, d, self.between_range)?;
        let phi_w = random_cov(&mut rng, d, self.within_range)?;
        let q1 = random_rotation(&mut rng, d);
        let s: Vec<f64> = (0..d)
            .map(|_| log_uniform(&mut rng, self.shift_range))
            .collect();
        let diag = DMatrix::from_diagonal(&DVector::from_vec(s));
        let shift_a = match self.shift_mode {
            ShiftMode::Symmetric => &q1 * diag * q1.transpose(),
            ShiftMode::General => {
                let q2 = random_rotation(&mut rng, d);
                &q1 * diag * q2.transpose()
            }
        };
        let shift_b = normal_vec(&mut rng, d) * self.shift_offset;
        let config = SynthConfig {
            dim: d,
            n_speakers_ood: self.n_speakers_ood,
            utts_per_speaker_ood: self.utts_per_speaker_ood,
            n_speakers_ind: self.n_speakers_ind,
            utts_per_speaker_ind: self.utts_per_speaker_ind,
            n_speakers_eval: self.n_speakers_eval,
            enroll_utts: self.enroll_utts,
            test_utts: self.test_utts,
            n_cohort: self.n_cohort,
            nontarget_ratio: self.nontarget_ratio,
            phi_b_true: phi_b,
            phi_w_true: phi_w,
            shift_a,
            shift_b,
            seed: self.seed,
        };
        config.validate()?;
        Ok(config)
    }

    /// Parses `key = value` lines (`#` comments allowed) over the defaults.
    pub fn from_key_values(text: &str) -> Result<Self> {
        let mut p = SynthParams::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |m: String| Error::InvalidConfig(format!("line {}: {m}", lineno + 1));
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected `key = value`, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            let int = || -> Result<usize> {
                value
                    .parse()
                    .map_err(|_| err(format!("`{key}` expects an integer, got `{value}`")))
            };
            let real = || -> Result<f64> {
                value
                    .parse()
                    .map_err(|_| err(format!("`{key}` expects a number, got `{value}`")))
            };
            let range = || -> Result<(f64, f64)> {
                let (a, b) = value
                    .split_once(',')
                    .ok_or_else(|| err(format!("`{key}` expects `lo,hi`")))?;
                let a = a
                    .trim()
                    .parse()
                    .map_err(|_| err(format!("bad number `{a}`")))?;
                let b = b
                    .trim()
                    .parse()
                    .map_err(|_| err(format!("bad number `{b}`")))?;
                Ok((a, b))
            };
            match key {
                "dim" => p.dim = int()?,
                "n_speakers_ood" => p.n_speakers_ood = int()?,
                "utts_per_speaker_ood" => p.utts_per_speaker_ood = int()?,
                "n_speakers_ind" => p.n_speakers_ind = int()?,
                "utts_per_speaker_ind" => p.utts_per_speaker_ind = int()?,
                "n_speakers_eval" => p.n_speakers_eval = int()?,
                "enroll_utts" => p.enroll_utts = int()?,
                "test_utts" => p.test_utts = int()?,
                "n_cohort" => p.n_cohort = int()?,
                "nontarget_ratio" => p.nontarget_ratio = int()?,
                "between_range" => p.between_range = range()?,
                "within_range" => p.within_range = range()?,
                "shift_range" => p.shift_range = range()?,
                "shift_mode" => {
                    p.shift_mode = match value {
                        "symmetric" => ShiftMode::Symmetric,
                        "general" => ShiftMode::General,
                        _ => return Err(err(format!("unknown shift_mode `{value}`"))),
                    }
                }
                "shift_offset" => p.shift_offset = real()?,
                "seed" => {
                    p.seed = value
                        .parse()
                        .map_err(|_| err("`seed` expects an unsigned integer".to_string()))?
                }
                _ => return Err(err(format!("unknown key `{key}`"))),
            }
        }
        Ok(p)
    }
}
