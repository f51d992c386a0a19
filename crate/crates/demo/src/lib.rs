//! Browser demo: small interactive views of the adaptation operators,
//! exported through wasm-bindgen. Every export returns a JSON string; errors
//! come back as `{"error": "..."}`.

use pldadapt::adapt::{adapt_covariance, gamma_max, CovKind, CovarianceCatalog, Preset};
use pldadapt::metrics::CostParams;
use pldadapt::pipeline::{sweep, Backend, EvalData, TrainOptions};
use pldadapt::synthgen::{generate, SynthParams};
use pldadapt::{Error, Result, SymMatrix};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

const ELLIPSE_POINTS: usize = 96;

/// 2x2 covariance from `[xx, xy, yy]`.
fn cov2(v: &[f64]) -> Result<SymMatrix> {
    if v.len() != 3 {
        return Err(Error::InvalidMatrix(format!(
            "expected [xx, xy, yy], got {} values",
            v.len()
        )));
    }
    SymMatrix::from_row_slice(2, &[v[0], v[1], v[1], v[2]])
}

/// One-standard-deviation contour `{x: M^{1/2} u : |u| = 1}`.
fn ellipse(m: &SymMatrix) -> Value {
    let e = m.eigen();
    let pts: Vec<[f64; 2]> = (0..=ELLIPSE_POINTS)
        .map(|i| {
            let t = i as f64 / ELLIPSE_POINTS as f64 * std::f64::consts::TAU;
            let (c, s) = (t.cos(), t.sin());
            let a = e.values[0].max(0.0).sqrt() * c;
            let b = e.values[1].max(0.0).sqrt() * s;
            [
                e.vectors[(0, 0)] * a + e.vectors[(0, 1)] * b,
                e.vectors[(1, 0)] * a + e.vectors[(1, 1)] * b,
            ]
        })
        .collect();
    json!({
        "matrix": [m.get(0, 0), m.get(0, 1), m.get(1, 1)],
        "eigenvalues": [e.values[0], e.values[1]],
        "points": pts,
    })
}

fn respond(r: Result<Value>) -> String {
    match r {
        Ok(v) => v.to_string(),
        Err(e) => json!({ "error": e.to_string() }).to_string(),
    }
}

pub fn gamma_max_view(y: &[f64], z: &[f64]) -> Result<Value> {
    let (y, z) = (cov2(y)?, cov2(z)?);
    let g = gamma_max(&y, &z)?;
    Ok(json!({
        "y": ellipse(&y),
        "z": ellipse(&z),
        "gamma": ellipse(&g),
    }))
}

/// Contours of `y`, `z` and `gamma_max(y, z)` for 2x2 inputs `[xx, xy, yy]`.
#[wasm_bindgen]
pub fn gamma_max_2x2(y: &[f64], z: &[f64]) -> String {
    respond(gamma_max_view(y, z))
}

pub fn presets_view(
    ood: &[f64],
    ind: &[f64],
    c_ood: &[f64],
    c_ind: &[f64],
    alpha: f64,
) -> Result<Value> {
    let ood = cov2(ood)?;
    let ind = cov2(ind)?;
    // The same matrix stands in for both covariance kinds; only the between
    // result is shown.
    let catalog = CovarianceCatalog::new(ood.clone(), ood.clone(), cov2(c_ood)?, cov2(c_ind)?)?
        .with_ind(ind.clone(), ind.clone())?;
    let mut adapted = serde_json::Map::new();
    for p in Preset::ALL {
        if p == Preset::Kaldi {
            continue;
        }
        let m = adapt_covariance(&p.recipe(alpha)?, &catalog, CovKind::Between)?;
        adapted.insert(p.name().to_string(), ellipse(&m));
    }
    Ok(json!({
        "ood": ellipse(&ood),
        "ind": ellipse(&ind),
        "pseudo": ellipse(catalog.pseudo(CovKind::Between)),
        "adapted": adapted,
    }))
}

/// Contours of every preset's adapted covariance for one 2x2 catalog.
#[wasm_bindgen]
pub fn presets_2x2(ood: &[f64], ind: &[f64], c_ood: &[f64], c_ind: &[f64], alpha: f64) -> String {
    respond(presets_view(ood, ind, c_ood, c_ind, alpha))
}

pub fn sweep_view(seed: u64, shift_lo: f64, shift_hi: f64, steps: usize) -> Result<Value> {
    if steps == 0 {
        return Err(Error::InvalidConfig("need at least one step".into()));
    }
    let params = SynthParams {
        dim: 12,
        n_speakers_ood: 200,
        utts_per_speaker_ood: 8,
        n_speakers_ind: 30,
        utts_per_speaker_ind: 8,
        n_speakers_eval: 40,
        n_cohort: 40,
        nontarget_ratio: 10,
        shift_range: (shift_lo, shift_hi),
        seed,
        ..SynthParams::default()
    };
    let corpus = generate(&params.config()?)?;
    let backend = Backend::fit(&corpus.ood, &corpus.ind, &TrainOptions::default())?;
    let data = EvalData::new(
        &backend.frontend,
        &corpus.enroll,
        &corpus.test,
        None,
        corpus.trials.clone(),
    )?;
    let recipes = [Preset::Lip, Preset::LipReg, Preset::Cip, Preset::CipReg]
        .iter()
        .map(|p| Ok((p.name().to_string(), p.recipe(0.0)?)))
        .collect::<Result<Vec<_>>>()?;
    let alphas: Vec<f64> = (0..=steps).map(|i| i as f64 / steps as f64).collect();
    let rows = sweep(
        &backend,
        &data,
        &recipes,
        &alphas,
        None,
        &CostParams::default(),
    )?;
    let mut curves = serde_json::Map::new();
    for (name, _) in &recipes {
        let pts: Vec<Value> = rows
            .iter()
            .filter(|r| &r.recipe == name)
            .map(|r| json!({ "alpha": r.alpha, "eer": r.report.eer, "min_cprimary": r.report.min_cprimary }))
            .collect();
        curves.insert(name.clone(), Value::Array(pts));
    }
    Ok(json!({ "alphas": alphas, "curves": curves, "trials": corpus.trials.len() }))
}

/// minCprimary / EER against the interpolation weight on a small synthetic
/// corpus, for the plain and regularized interpolations.
#[wasm_bindgen]
pub fn alpha_sweep(seed: u32, shift_lo: f64, shift_hi: f64, steps: u32) -> String {
    respond(sweep_view(seed as u64, shift_lo, shift_hi, steps as usize))
}
