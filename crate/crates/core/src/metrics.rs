//! Verification trials and their evaluation: error-rate curve, EER and
//! minimum primary detection cost.
//!
//! A trial is accepted when `score >= threshold`, so ties count as accepts.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Label {
    Target,
    Nontarget,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub enroll: String,
    pub test: String,
    pub label: Option<Label>,
    pub score: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrialSet {
    pub trials: Vec<Trial>,
}

impl TrialSet {
    pub fn len(&self) -> usize {
        self.trials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trials.is_empty()
    }

    /// Builds a labeled, scored set from raw score lists.
    pub fn from_scores(targets: &[f64], nontargets: &[f64]) -> Self {
        let mk = |i: usize, s: f64, label| Trial {
            enroll: format!("e{i}"),
            test: format!("t{i}"),
            label: Some(label),
            score: Some(s),
        };
        let mut trials: Vec<Trial> = targets
            .iter()
            .enumerate()
            .map(|(i, &s)| mk(i, s, Label::Target))
            .collect();
        let off = trials.len();
        trials.extend(
            nontargets
                .iter()
                .enumerate()
                .map(|(i, &s)| mk(off + i, s, Label::Nontarget)),
        );
        TrialSet { trials }
    }

    /// Target and nontarget scores, each sorted ascending.
    pub fn split_scores(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut tar = Vec::new();
        let mut non = Vec::new();
        for (i, t) in self.trials.iter().enumerate() {
            match (t.label, t.score) {
                (Some(Label::Target), Some(s)) if s.is_finite() => tar.push(s),
                (Some(Label::Nontarget), Some(s)) if s.is_finite() => non.push(s),
                _ => return Err(Error::UnscoredTrial(i)),
            }
        }
        if tar.is_empty() {
            return Err(Error::NoTargets);
        }
        if non.is_empty() {
            return Err(Error::NoNontargets);
        }
        tar.sort_by(f64::total_cmp);
        non.sort_by(f64::total_cmp);
        Ok((tar, non))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostParams {
    pub p_targets: Vec<f64>,
    pub c_miss: f64,
    pub c_fa: f64,
}

impl Default for CostParams {
    fn default() -> Self {
        CostParams {
            p_targets: vec![0.01, 0.005],
            c_miss: 1.0,
            c_fa: 1.0,
        }
    }
}

impl CostParams {
    pub fn validate(&self) -> Result<()> {
        if self.p_targets.is_empty() {
            return Err(Error::InvalidCost("no target priors".into()));
        }
        if let Some(p) = self.p_targets.iter().find(|p| !(**p > 0.0 && **p < 1.0)) {
            return Err(Error::InvalidCost(format!(
                "target prior {p} outside (0, 1)"
            )));
        }
        if !(self.c_miss > 0.0 && self.c_miss.is_finite()) {
            return Err(Error::InvalidCost(format!("c_miss = {}", self.c_miss)));
        }
        if !(self.c_fa > 0.0 && self.c_fa.is_finite()) {
            return Err(Error::InvalidCost(format!("c_fa = {}", self.c_fa)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    pub threshold: f64,
    pub p_miss: f64,
    pub p_fa: f64,
}

/// Operating points at `-inf`, every distinct score (ascending) and `+inf`.
pub fn error_curve(t: &TrialSet) -> Result<Vec<OperatingPoint>> {
    let (tar, non) = t.split_scores()?;
    Ok(curve_from_sorted(&tar, &non))
}

fn curve_from_sorted(tar: &[f64], non: &[f64]) -> Vec<OperatingPoint> {
    let nt = tar.len() as f64;
    let nn = non.len() as f64;
    let mut thresholds: Vec<f64> = tar.iter().chain(non.iter()).copied().collect();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();

    let mut points = Vec::with_capacity(thresholds.len() + 2);
    points.push(OperatingPoint {
        threshold: f64::NEG_INFINITY,
        p_miss: 0.0,
        p_fa: 1.0,
    });
    // Targets strictly below and nontargets strictly below the threshold.
    let (mut it, mut in_) = (0usize, 0usize);
    for &th in &thresholds {
        while it < tar.len() && tar[it] < th {
            it += 1;
        }
        while in_ < non.len() && non[in_] < th {
            in_ += 1;
        }
        points.push(OperatingPoint {
            threshold: th,
            p_miss: it as f64 / nt,
            p_fa: (non.len() - in_) as f64 / nn,
        });
    }
    points.push(OperatingPoint {
        threshold: f64::INFINITY,
        p_miss: 1.0,
        p_fa: 0.0,
    });
    points
}

/// Equal error rate, linearly interpolated between the two operating points
/// that bracket the sign change of `p_miss - p_fa`.
pub fn eer(t: &TrialSet) -> Result<f64> {
    Ok(eer_from_curve(&error_curve(t)?))
}

pub fn eer_from_curve(points: &[OperatingPoint]) -> f64 {
    for (i, p) in points.iter().enumerate() {
        let d = p.p_miss - p.p_fa;
        if d == 0.0 {
            return p.p_miss;
        }
        if d > 0.0 {
            // The curve starts at d = -1, so i > 0 here.
            let q = &points[i - 1];
            let dm = p.p_miss - q.p_miss;
            let df = p.p_fa - q.p_fa;
            let s = (q.p_fa - q.p_miss) / (dm - df);
            return q.p_miss + s * dm;
        }
    }
    unreachable!("curve ends at p_miss = 1, p_fa = 0")
}

/// Minimum normalized detection cost, minimized per target prior and then
/// averaged over the priors.
pub fn min_cprimary(t: &TrialSet, params: &CostParams) -> Result<f64> {
    params.validate()?;
    Ok(min_cprimary_from_curve(&error_curve(t)?, params))
}

pub fn min_cprimary_from_curve(points: &[OperatingPoint], params: &CostParams) -> f64 {
    let total: f64 = params
        .p_targets
        .iter()
        .map(|&p| {
            let miss_w = params.c_miss * p;
            let fa_w = params.c_fa * (1.0 - p);
            let norm = miss_w.min(fa_w);
            points
                .iter()
                .map(|op| (miss_w * op.p_miss + fa_w * op.p_fa) / norm)
                .fold(f64::INFINITY, f64::min)
        })
        .sum();
    total / params.p_targets.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Report {
    pub eer: f64,
    pub min_cprimary: f64,
}

pub fn evaluate(t: &TrialSet, params: &CostParams) -> Result<Report> {
    params.validate()?;
    let curve = error_curve(t)?;
    Ok(Report {
        eer: eer_from_curve(&curve),
        min_cprimary: min_cprimary_from_curve(&curve, params),
    })
}
