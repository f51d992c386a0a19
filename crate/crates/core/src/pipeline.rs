//! End-to-end backend: centering, LDA, PLDA training, adaptation, scoring
//! and evaluation, both in memory ([`Backend`]) and as file-level commands
//! (`cmd_*`) used by the CLI.
//!
//! Centering follows the usual two-domain convention: OOD data is centered
//! by the OOD mean; in-domain, enrollment, test and cohort data by the
//! in-domain mean. LDA is fitted on one of the centered training sets and
//! applied to everything.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DVector;

use crate::adapt::{adapt_model_with_alphas, AdaptRecipe, CovarianceCatalog};
use crate::error::{Error, Result};
use crate::io;
use crate::metrics::{error_curve, evaluate, CostParams, Report, TrialSet};
use crate::plda::{score_trials, total_covariance, train_plda, EmbeddingSet, PldaModel};
use crate::preprocess::{center, compute_mean, lda_apply, lda_fit, LdaProjection};
use crate::scorenorm::as_norm;
use crate::synthgen::{generate, SynthParams};

pub const DEFAULT_LDA_DIM: usize = 150;

/// Which centered training set the LDA is fitted on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LdaSource {
    Ood,
    Ind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOptions {
    /// Requested LDA output dimension; `None` disables LDA. Clamped to what
    /// the training data supports.
    pub lda_dim: Option<usize>,
    pub lda_source: LdaSource,
    /// Treat the in-domain set as unlabeled even if it carries speakers.
    pub ignore_ind_labels: bool,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            lda_dim: Some(DEFAULT_LDA_DIM),
            lda_source: LdaSource::Ood,
            ignore_ind_labels: false,
        }
    }
}

/// Maps raw evaluation embeddings into the backend space.
#[derive(Debug, Clone, PartialEq)]
pub struct Frontend {
    pub ind_mean: DVector<f64>,
    pub lda: Option<LdaProjection>,
}

impl Frontend {
    pub fn apply(&self, set: &EmbeddingSet) -> Result<EmbeddingSet> {
        let c = center(set, &self.ind_mean)?;
        match &self.lda {
            Some(p) => lda_apply(p, &c),
            None => Ok(c),
        }
    }
}

/// Everything `train` produces.
#[derive(Debug, Clone, PartialEq)]
pub struct Backend {
    pub ood_mean: DVector<f64>,
    pub frontend: Frontend,
    pub ood: PldaModel,
    pub ind: Option<PldaModel>,
    pub c_ood: crate::symmat::SymMatrix,
    pub c_ind: crate::symmat::SymMatrix,
    /// Mean of the projected in-domain training data.
    pub ind_proj_mean: DVector<f64>,
}

impl Backend {
    pub fn fit(ood: &EmbeddingSet, ind: &EmbeddingSet, opts: &TrainOptions) -> Result<Backend> {
        if ood.dim() != ind.dim() {
            return Err(Error::DimMismatch {
                expected: ood.dim(),
                found: ind.dim(),
            });
        }
        let ind = if opts.ignore_ind_labels {
            ind.unlabeled()
        } else {
            ind.clone()
        };
        let ood_mean = compute_mean(ood)?;
        let ind_mean = compute_mean(&ind)?;
        let ood_c = center(ood, &ood_mean)?;
        let ind_c = center(&ind, &ind_mean)?;

        let lda = match opts.lda_dim {
            None => None,
            Some(requested) => {
                let src = match opts.lda_source {
                    LdaSource::Ood => &ood_c,
                    LdaSource::Ind => &ind_c,
                };
                let classes = src.by_speaker()?.len();
                let max = classes.saturating_sub(1).min(src.dim());
                Some(lda_fit(src, requested.min(max).max(1))?)
            }
        };
        let (ood_p, ind_p) = match &lda {
            Some(p) => (lda_apply(p, &ood_c)?, lda_apply(p, &ind_c)?),
            None => (ood_c, ind_c),
        };

        let ood_model = train_plda(&ood_p)?;
        let ind_model = if ind_p.is_labeled() {
            Some(train_plda(&ind_p)?)
        } else {
            None
        };
        Ok(Backend {
            ood_mean,
            frontend: Frontend { ind_mean, lda },
            ood: ood_model,
            ind: ind_model,
            c_ood: total_covariance(&ood_p)?,
            c_ind: total_covariance(&ind_p)?,
            ind_proj_mean: compute_mean(&ind_p)?,
        })
    }

    pub fn catalog(&self) -> Result<CovarianceCatalog> {
        CovarianceCatalog::from_models(
            &self.ood,
            self.ind.as_ref(),
            self.c_ood.clone(),
            self.c_ind.clone(),
        )
    }

    /// The mean an adapted model takes: the in-domain PLDA mean when
    /// available, otherwise the projected unlabeled in-domain mean.
    pub fn adapted_mean(&self) -> DVector<f64> {
        match &self.ind {
            Some(m) => m.mu.clone(),
            None => self.ind_proj_mean.clone(),
        }
    }

    pub fn adapt(
        &self,
        catalog: &CovarianceCatalog,
        recipe: &AdaptRecipe,
        alpha_between: Option<f64>,
        alpha_within: Option<f64>,
    ) -> Result<PldaModel> {
        adapt_model_with_alphas(
            recipe,
            alpha_between.unwrap_or(recipe.alpha),
            alpha_within.unwrap_or(recipe.alpha),
            catalog,
            self.adapted_mean(),
        )
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        io::write_vector(&dir.join(files::OOD_MEAN), &self.ood_mean)?;
        io::write_vector(&dir.join(files::IND_MEAN), &self.frontend.ind_mean)?;
        io::write_vector(&dir.join(files::IND_PROJ_MEAN), &self.ind_proj_mean)?;
        let lda_path = dir.join(files::LDA);
        match &self.frontend.lda {
            Some(p) => io::write_lda(&lda_path, p)?,
            None => remove_if_exists(&lda_path)?,
        }
        io::write_plda(&dir.join(files::OOD_PLDA), &self.ood)?;
        let ind_path = dir.join(files::IND_PLDA);
        match &self.ind {
            Some(m) => io::write_plda(&ind_path, m)?,
            None => remove_if_exists(&ind_path)?,
        }
        io::write_symmat(&dir.join(files::C_OOD), &self.c_ood)?;
        io::write_symmat(&dir.join(files::C_IND), &self.c_ind)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Backend> {
        let lda_path = dir.join(files::LDA);
        let ind_path = dir.join(files::IND_PLDA);
        Ok(Backend {
            ood_mean: io::read_vector(&dir.join(files::OOD_MEAN))?,
            frontend: Frontend {
                ind_mean: io::read_vector(&dir.join(files::IND_MEAN))?,
                lda: if lda_path.exists() {
                    Some(io::read_lda(&lda_path)?)
                } else {
                    None
                },
            },
            ood: io::read_plda(&dir.join(files::OOD_PLDA))?,
            ind: if ind_path.exists() {
                Some(io::read_plda(&ind_path)?)
            } else {
                None
            },
            c_ood: io::read_symmat(&dir.join(files::C_OOD))?,
            c_ind: io::read_symmat(&dir.join(files::C_IND))?,
            ind_proj_mean: io::read_vector(&dir.join(files::IND_PROJ_MEAN))?,
        })
    }
}

fn remove_if_exists(path: &Path) -> Result<()> {
    match fs::remove_file(path) {
        Ok(()) => Ok(()),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(()),
        Err(e) => Err(Error::io(path, e)),
    }
}

/// File names inside a trained-model directory.
pub mod files {
    pub const OOD_MEAN: &str = "ood_mean.vec";
    pub const IND_MEAN: &str = "ind_mean.vec";
    pub const IND_PROJ_MEAN: &str = "ind_proj_mean.vec";
    pub const LDA: &str = "lda.txt";
    pub const OOD_PLDA: &str = "ood.plda";
    pub const IND_PLDA: &str = "ind.plda";
    pub const C_OOD: &str = "c_ood.mat";
    pub const C_IND: &str = "c_ind.mat";
}

/// Evaluation data already mapped through the [`Frontend`].
#[derive(Debug, Clone)]
pub struct EvalData {
    pub enroll: EmbeddingSet,
    pub test: EmbeddingSet,
    pub cohort: Option<EmbeddingSet>,
    pub trials: TrialSet,
}

impl EvalData {
    pub fn new(
        frontend: &Frontend,
        enroll: &EmbeddingSet,
        test: &EmbeddingSet,
        cohort: Option<&EmbeddingSet>,
        trials: TrialSet,
    ) -> Result<Self> {
        Ok(EvalData {
            enroll: frontend.apply(enroll)?,
            test: frontend.apply(test)?,
            cohort: cohort.map(|c| frontend.apply(c)).transpose()?,
            trials,
        })
    }

    /// Raw scores, AS-normalized when `snorm_k` is given (requires a cohort).
    pub fn score(&self, model: &PldaModel, snorm_k: Option<usize>) -> Result<TrialSet> {
        let raw = score_trials(model, &self.enroll, &self.test, &self.trials)?;
        match snorm_k {
            None => Ok(raw),
            Some(k) => {
                let cohort = self.cohort.as_ref().ok_or(Error::EmptySet)?;
                as_norm(model, &raw, &self.enroll, &self.test, cohort, k)
            }
        }
    }

    pub fn evaluate(
        &self,
        model: &PldaModel,
        snorm_k: Option<usize>,
        cost: &CostParams,
    ) -> Result<Report> {
        evaluate(&self.score(model, snorm_k)?, cost)
    }
}

/// Runs `f` on a pool of `threads` workers, or directly when `None`.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    #[cfg(feature = "parallel")]
    if let Some(n) = threads {
        if let Ok(pool) = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
        {
            return pool.install(f);
        }
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    f()
}

/// Parses `start:stop:step` (inclusive) or a comma-separated list.
pub fn parse_alpha_grid(grid: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidRecipe(format!("invalid alpha grid `{grid}`"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    let alphas: Vec<f64> = if grid.contains(':') {
        let parts: Vec<&str> = grid.split(':').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let (start, stop, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if !(step > 0.0) || stop < start {
            return Err(bad());
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        let mut v: Vec<f64> = (0..=n)
            .map(|i| {
                // Round to suppress accumulated binary noise (0.30000000000000004).
                let a = start + i as f64 * step;
                (a * 1e12).round() / 1e12
            })
            .collect();
        if let Some(last) = v.last_mut() {
            if (*last - stop).abs() < 1e-9 {
                *last = stop;
            }
        }
        v
    } else {
        grid.split(',').map(num).collect::<Result<_>>()?
    };
    if alphas.is_empty() {
        return Err(bad());
    }
    if let Some(a) = alphas.iter().find(|a| !(0.0..=1.0).contains(*a)) {
        return Err(Error::AlphaOutOfRange(*a));
    }
    Ok(alphas)
}

// ---- file-level commands ----

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub ood: PathBuf,
    pub ind: PathBuf,
    pub out_dir: PathBuf,
    pub options: TrainOptions,
}

pub fn cmd_train(cfg: &TrainConfig) -> Result<Backend> {
    let ood = io::read_embeddings(&cfg.ood)?;
    let ind = io::read_embeddings(&cfg.ind)?;
    let backend = Backend::fit(&ood, &ind, &cfg.options)?;
    backend.write(&cfg.out_dir)?;
    Ok(backend)
}

#[derive(Debug, Clone)]
pub struct AdaptConfig {
    pub model_dir: PathBuf,
    pub recipe: AdaptRecipe,
    pub alpha_between: Option<f64>,
    pub alpha_within: Option<f64>,
    pub out: PathBuf,
}

pub fn cmd_adapt(cfg: &AdaptConfig) -> Result<PldaModel> {
    let backend = Backend::load(&cfg.model_dir)?;
    let model = backend.adapt(
        &backend.catalog()?,
        &cfg.recipe,
        cfg.alpha_between,
        cfg.alpha_within,
    )?;
    io::write_plda(&cfg.out, &model)?;
    Ok(model)
}

#[derive(Debug, Clone)]
pub struct ScoreConfig {
    /// Directory written by `train`, for centering and LDA.
    pub model_dir: PathBuf,
    pub model: PathBuf,
    pub enroll: PathBuf,
    pub test: PathBuf,
    pub trials: PathBuf,
    pub cohort: Option<PathBuf>,
    /// AS-norm top-k; requires `cohort`.
    pub snorm_k: Option<usize>,
    pub threads: Option<usize>,
    pub out: PathBuf,
}

fn load_eval(
    backend: &Backend,
    enroll: &Path,
    test: &Path,
    trials: &Path,
    cohort: Option<&Path>,
) -> Result<EvalData> {
    let enroll = io::read_embeddings(enroll)?;
    let test = io::read_embeddings(test)?;
    let trials = io::read_trials(trials)?;
    let cohort = cohort.map(io::read_embeddings).transpose()?;
    EvalData::new(&backend.frontend, &enroll, &test, cohort.as_ref(), trials)
}

pub fn cmd_score(cfg: &ScoreConfig) -> Result<TrialSet> {
    if cfg.snorm_k.is_some() && cfg.cohort.is_none() {
        return Err(Error::InvalidConfig(
            "score normalization needs a cohort".into(),
        ));
    }
    let backend = Backend::load(&cfg.model_dir)?;
    let model = io::read_plda(&cfg.model)?;
    let data = load_eval(
        &backend,
        &cfg.enroll,
        &cfg.test,
        &cfg.trials,
        cfg.cohort.as_deref(),
    )?;
    let scored = with_threads(cfg.threads, || data.score(&model, cfg.snorm_k))?;
    io::write_trials(&cfg.out, &scored)?;
    Ok(scored)
}

#[derive(Debug, Clone)]
pub struct EvalConfig {
    pub scores: PathBuf,
    pub cost: CostParams,
    pub out: Option<PathBuf>,
    pub det_out: Option<PathBuf>,
}

/// Returns the key-value report text (also written to `out` when given).
pub fn cmd_eval(cfg: &EvalConfig) -> Result<String> {
    let trials = io::read_trials(&cfg.scores)?;
    let report = evaluate(&trials, &cfg.cost)?;
    let text = io::report_to_string(&report);
    if let Some(p) = &cfg.out {
        fs::write(p, &text).map_err(|e| Error::io(p, e))?;
    }
    if let Some(p) = &cfg.det_out {
        let det = io::det_to_string(&error_curve(&trials)?);
        fs::write(p, det).map_err(|e| Error::io(p, e))?;
    }
    Ok(text)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub alpha: f64,
    pub recipe: String,
    pub report: Report,
}

/// Evaluates every `(recipe, alpha)` combination; rows are recipe-major.
pub fn sweep(
    backend: &Backend,
    data: &EvalData,
    recipes: &[(String, AdaptRecipe)],
    alphas: &[f64],
    snorm_k: Option<usize>,
    cost: &CostParams,
) -> Result<Vec<SweepRow>> {
    let catalog = backend.catalog()?;
    let jobs: Vec<(&String, &AdaptRecipe, f64)> = recipes
        .iter()
        .flat_map(|(name, r)| alphas.iter().map(move |&a| (name, r, a)))
        .collect();
    let run = |(name, recipe, alpha): &(&String, &AdaptRecipe, f64)| -> Result<SweepRow> {
        let model = backend.adapt(&catalog, &recipe.with_alpha(*alpha)?, None, None)?;
        Ok(SweepRow {
            alpha: *alpha,
            recipe: (*name).clone(),
            report: data.evaluate(&model, snorm_k, cost)?,
        })
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        jobs.par_iter().map(run).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        jobs.iter().map(run).collect()
    }
}

pub fn sweep_to_string(rows: &[SweepRow]) -> String {
    let mut out = String::from(io::SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\n",
            io::fmt_f64(r.alpha),
            r.recipe,
            io::fmt_f64(r.report.eer),
            io::fmt_f64(r.report.min_cprimary)
        ));
    }
    out
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub model_dir: PathBuf,
    pub enroll: PathBuf,
    pub test: PathBuf,
    pub trials: PathBuf,
    pub cohort: Option<PathBuf>,
    pub snorm_k: Option<usize>,
    pub recipes: Vec<(String, AdaptRecipe)>,
    pub alphas: Vec<f64>,
    pub cost: CostParams,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
}

pub fn cmd_sweep(cfg: &SweepConfig) -> Result<String> {
    if cfg.snorm_k.is_some() && cfg.cohort.is_none() {
        return Err(Error::InvalidConfig(
            "score normalization needs a cohort".into(),
        ));
    }
    let backend = Backend::load(&cfg.model_dir)?;
    let data = load_eval(
        &backend,
        &cfg.enroll,
        &cfg.test,
        &cfg.trials,
        cfg.cohort.as_deref(),
    )?;
    let rows = with_threads(cfg.threads, || {
        sweep(
            &backend,
            &data,
            &cfg.recipes,
            &cfg.alphas,
            cfg.snorm_k,
            &cfg.cost,
        )
    })?;
    let text = sweep_to_string(&rows);
    if let Some(p) = &cfg.out {
        fs::write(p, &text).map_err(|e| Error::io(p, e))?;
    }
    Ok(text)
}

/// File names written by [`cmd_synth`].
pub mod synth_files {
    pub const OOD: &str = "ood.emb";
    pub const IND: &str = "ind.emb";
    pub const ENROLL: &str = "enroll.emb";
    pub const TEST: &str = "test.emb";
    pub const COHORT: &str = "cohort.emb";
    pub const TRIALS: &str = "trials.txt";
    pub const TRUTH_OOD_B: &str = "truth_ood_b.mat";
    pub const TRUTH_OOD_W: &str = "truth_ood_w.mat";
    pub const TRUTH_IND_B: &str = "truth_ind_b.mat";
    pub const TRUTH_IND_W: &str = "truth_ind_w.mat";
    pub const TRUTH_C_OOD: &str = "truth_c_ood.mat";
    pub const TRUTH_C_IND: &str = "truth_c_ind.mat";
}

pub fn cmd_synth(params: &SynthParams, out_dir: &Path) -> Result<()> {
    use crate::adapt::CovKind;
    use synth_files as f;
    let corpus = generate(&params.config()?)?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    io::write_embeddings(&out_dir.join(f::OOD), &corpus.ood)?;
    io::write_embeddings(&out_dir.join(f::IND), &corpus.ind)?;
    io::write_embeddings(&out_dir.join(f::ENROLL), &corpus.enroll)?;
    io::write_embeddings(&out_dir.join(f::TEST), &corpus.test)?;
    io::write_embeddings(&out_dir.join(f::COHORT), &corpus.cohort)?;
    io::write_trials(&out_dir.join(f::TRIALS), &corpus.trials)?;
    let t = &corpus.truth;
    io::write_symmat(&out_dir.join(f::TRUTH_OOD_B), t.ood(CovKind::Between))?;
    io::write_symmat(&out_dir.join(f::TRUTH_OOD_W), t.ood(CovKind::Within))?;
    io::write_symmat(&out_dir.join(f::TRUTH_IND_B), t.ind(CovKind::Between)?)?;
    io::write_symmat(&out_dir.join(f::TRUTH_IND_W), t.ind(CovKind::Within)?)?;
    io::write_symmat(&out_dir.join(f::TRUTH_C_OOD), t.total_ood())?;
    io::write_symmat(&out_dir.join(f::TRUTH_C_IND), t.total_ind())?;
    Ok(())
}
