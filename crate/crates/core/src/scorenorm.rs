//! Adaptive symmetric score normalization (AS-norm).
//!
//! Each trial side is scored against an unlabeled cohort; the top-k cohort
//! scores of that side give a mean and standard deviation, and the raw score
//! is normalized by both sides symmetrically:
//! `(s - mu_e) / sigma_e / 2 + (s - mu_t) / sigma_t / 2`.

use std::cmp::Ordering;
use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::metrics::TrialSet;
use crate::plda::{prepare_sides, EmbeddingSet, PldaModel, Scorer, Side};

pub const DEFAULT_K: usize = 200;

/// Smallest admissible cohort standard deviation.
pub const MIN_STD: f64 = 1e-12;

/// Top-k cohort statistics of one trial side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CohortStats {
    pub k: usize,
    pub mean: f64,
    pub std: f64,
}

impl CohortStats {
    /// Statistics of the `k` highest scores; ties broken by ascending cohort id.
    pub fn from_scores(id: &str, scores: &[(f64, &str)], k: usize) -> Result<Self> {
        if k == 0 || k > scores.len() {
            return Err(Error::KTooLarge {
                k,
                cohort: scores.len(),
            });
        }
        let mut sorted: Vec<(f64, &str)> = scores.to_vec();
        sorted.sort_by(|a, b| {
            b.0.partial_cmp(&a.0)
                .unwrap_or(Ordering::Equal)
                .then_with(|| a.1.cmp(b.1))
        });
        let top = &sorted[..k];
        let mean = top.iter().map(|s| s.0).sum::<f64>() / k as f64;
        let var = top.iter().map(|s| (s.0 - mean).powi(2)).sum::<f64>() / k as f64;
        let std = var.sqrt();
        if !(std >= MIN_STD) {
            return Err(Error::DegenerateCohort(id.to_string()));
        }
        Ok(CohortStats { k, mean, std })
    }

    pub fn normalize(&self, s: f64) -> f64 {
        (s - self.mean) / self.std
    }
}

pub fn symmetric_normalize(s: f64, enroll: &CohortStats, test: &CohortStats) -> f64 {
    0.5 * (enroll.normalize(s) + test.normalize(s))
}

struct Cohort<'a> {
    ids: Vec<&'a str>,
    sides: Vec<Side>,
}

fn side_stats(
    scorer: &Scorer,
    cohort: &Cohort<'_>,
    id: &str,
    side: &Side,
    k: usize,
) -> Result<CohortStats> {
    let scores: Vec<(f64, &str)> = cohort
        .sides
        .iter()
        .zip(&cohort.ids)
        .map(|(c, cid)| (scorer.pair(side, c), *cid))
        .collect();
    CohortStats::from_scores(id, &scores, k)
}

fn all_stats(
    scorer: &Scorer,
    cohort: &Cohort<'_>,
    sides: &HashMap<String, Side>,
    k: usize,
) -> Result<HashMap<String, CohortStats>> {
    let mut ids: Vec<&String> = sides.keys().collect();
    ids.sort();
    let work = |id: &&String| -> Result<(String, CohortStats)> {
        Ok((
            (*id).clone(),
            side_stats(scorer, cohort, id, &sides[*id], k)?,
        ))
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

/// AS-norm over already-scored trials.
pub fn as_norm(
    model: &PldaModel,
    trials: &TrialSet,
    enroll_set: &EmbeddingSet,
    test_set: &EmbeddingSet,
    cohort: &EmbeddingSet,
    k: usize,
) -> Result<TrialSet> {
    if cohort.is_empty() {
        return Err(Error::EmptySet);
    }
    if k == 0 || k > cohort.len() {
        return Err(Error::KTooLarge {
            k,
            cohort: cohort.len(),
        });
    }
    if let Some(i) = trials.trials.iter().position(|t| t.score.is_none()) {
        return Err(Error::UnscoredTrial(i));
    }
    let scorer = model.scorer()?;
    let mut ids: Vec<&str> = cohort.records().iter().map(|r| r.utt.as_str()).collect();
    ids.sort_unstable();
    let sides = ids
        .iter()
        .map(|id| scorer.prepare(&cohort.get(id).expect("id from set").vector))
        .collect::<Result<Vec<_>>>()?;
    let cohort = Cohort { ids, sides };

    let mut enroll_ids: Vec<&str> = trials.trials.iter().map(|t| t.enroll.as_str()).collect();
    enroll_ids.sort_unstable();
    enroll_ids.dedup();
    let mut test_ids: Vec<&str> = trials.trials.iter().map(|t| t.test.as_str()).collect();
    test_ids.sort_unstable();
    test_ids.dedup();
    let enroll_sides = prepare_sides(&scorer, enroll_set, enroll_ids)?;
    let test_sides = prepare_sides(&scorer, test_set, test_ids)?;
    let enroll_stats = all_stats(&scorer, &cohort, &enroll_sides, k)?;
    let test_stats = all_stats(&scorer, &cohort, &test_sides, k)?;

    let mut out = trials.clone();
    for t in &mut out.trials {
        let s = t.score.expect("checked above");
        t.score = Some(symmetric_normalize(
            s,
            &enroll_stats[&t.enroll],
            &test_stats[&t.test],
        ));
    }
    Ok(out)
}
