use pldadapt::adapt::{gamma_max, Preset};
use pldadapt::metrics::CostParams;
use pldadapt::pipeline::{sweep, with_threads, Backend, EvalData, TrainOptions};
use pldadapt::symmat::relative_frobenius;
use pldadapt::synthgen::{generate, SynthParams};
use pldadapt::{score_trials, total_covariance, train_plda, Embedding, EmbeddingSet, SymMatrix};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn small(seed: u64) -> SynthParams {
    SynthParams {
        dim: 8,
        n_speakers_ood: 100,
        n_speakers_ind: 30,
        n_speakers_eval: 40,
        n_cohort: 50,
        nontarget_ratio: 10,
        seed,
        ..SynthParams::default()
    }
}

#[test]
fn parallel_scoring_is_bit_identical_to_serial() {
    let corpus = generate(&small(3).config().unwrap()).unwrap();
    assert!(corpus.trials.len() >= 1000);
    let model = train_plda(&corpus.ood).unwrap();
    let serial = with_threads(Some(1), || {
        score_trials(&model, &corpus.enroll, &corpus.test, &corpus.trials).unwrap()
    });
    let parallel = with_threads(Some(4), || {
        score_trials(&model, &corpus.enroll, &corpus.test, &corpus.trials).unwrap()
    });
    let bits = |t: &pldadapt::TrialSet| -> Vec<u64> {
        t.trials
            .iter()
            .map(|x| x.score.unwrap().to_bits())
            .collect()
    };
    assert_eq!(bits(&serial), bits(&parallel));
}

#[test]
fn total_covariance_ignores_record_order() {
    let corpus = generate(&small(4).config().unwrap()).unwrap();
    let mut records: Vec<Embedding> = corpus.ind.records().to_vec();
    let a = total_covariance(&corpus.ind).unwrap();
    records.shuffle(&mut ChaCha8Rng::seed_from_u64(9));
    let shuffled = EmbeddingSet::from_records(corpus.ind.dim(), records).unwrap();
    let b = total_covariance(&shuffled).unwrap();
    assert!(relative_frobenius(a.as_matrix(), b.as_matrix()) < 1e-12);
}

/// Population value of the moment estimates for `n` utterances per speaker:
/// the pooled within covariance is scaled by `(n - 1) / n` and the covariance
/// of speaker means includes `phi_w / n`.
fn estimator_targets(b: &SymMatrix, w: &SymMatrix, n: usize) -> (SymMatrix, SymMatrix) {
    let n = n as f64;
    (b.combine(1.0, w, 1.0 / n).unwrap(), w.scale((n - 1.0) / n))
}

#[test]
fn training_recovers_generating_covariances() {
    // 500 speaker means give a between estimate whose sampling error alone is
    // close to 10%, so that bound is checked on the average over seeds.
    let mut between = Vec::new();
    for seed in 1..=10 {
        let params = SynthParams {
            dim: 3,
            n_speakers_ood: 500,
            utts_per_speaker_ood: 8,
            n_speakers_ind: 4,
            n_speakers_eval: 4,
            n_cohort: 4,
            nontarget_ratio: 1,
            seed,
            ..SynthParams::default()
        };
        let config = params.config().unwrap();
        let corpus = generate(&config).unwrap();
        let m = train_plda(&corpus.ood).unwrap();
        let (tb, tw) = estimator_targets(&config.phi_b_true, &config.phi_w_true, 8);
        between.push(relative_frobenius(m.phi_b.as_matrix(), tb.as_matrix()));
        let ew = relative_frobenius(m.phi_w.as_matrix(), tw.as_matrix());
        assert!(ew < 0.10, "seed {seed}: within error {ew}");
    }
    let mean = between.iter().sum::<f64>() / between.len() as f64;
    assert!(mean < 0.10, "mean between error {mean}");
}

#[test]
fn zero_between_speakers_vanishes_with_many_speakers() {
    let mut config = SynthParams {
        dim: 4,
        n_speakers_ood: 2000,
        utts_per_speaker_ood: 40,
        n_speakers_ind: 4,
        n_speakers_eval: 4,
        n_cohort: 4,
        nontarget_ratio: 1,
        ..SynthParams::default()
    }
    .config()
    .unwrap();
    config.phi_b_true = SymMatrix::zeros(4);
    config.phi_w_true = SymMatrix::identity(4);
    let corpus = generate(&config).unwrap();
    let m = train_plda(&corpus.ood).unwrap();
    assert!(m.phi_b.max_eigenvalue() < 0.05 * m.phi_w.trace() / 4.0);
}

#[test]
fn lip_and_lip_reg_agree_when_regularization_is_inactive() {
    // A strongly shrinking shift makes every in-domain variance smaller
    // than its OOD counterpart.
    let params = SynthParams {
        shift_range: (0.3, 0.5),
        ..small(5)
    };
    let corpus = generate(&params.config().unwrap()).unwrap();
    let opts = TrainOptions {
        lda_dim: None,
        ..TrainOptions::default()
    };
    let backend = Backend::fit(&corpus.ood, &corpus.ind, &opts).unwrap();
    let ind = backend.ind.as_ref().unwrap();
    for (o, i) in [
        (&backend.ood.phi_b, &ind.phi_b),
        (&backend.ood.phi_w, &ind.phi_w),
    ] {
        let g = gamma_max(o, i).unwrap();
        assert!(relative_frobenius(g.as_matrix(), o.as_matrix()) < 1e-12);
    }
    let data = EvalData::new(
        &backend.frontend,
        &corpus.enroll,
        &corpus.test,
        None,
        corpus.trials.clone(),
    )
    .unwrap();
    let recipes = vec![
        ("lip".to_string(), Preset::Lip.recipe(0.0).unwrap()),
        ("lip_reg".to_string(), Preset::LipReg.recipe(0.0).unwrap()),
    ];
    let alphas = [0.0, 0.3, 0.7, 1.0];
    let rows = sweep(
        &backend,
        &data,
        &recipes,
        &alphas,
        None,
        &CostParams::default(),
    )
    .unwrap();
    let (lip, reg) = rows.split_at(alphas.len());
    for (a, b) in lip.iter().zip(reg) {
        assert_eq!(a.alpha, b.alpha);
        assert!((a.report.eer - b.report.eer).abs() < 1e-12);
        assert!((a.report.min_cprimary - b.report.min_cprimary).abs() < 1e-12);
    }
}

#[test]
fn backend_round_trips_through_files() {
    let corpus = generate(&small(6).config().unwrap()).unwrap();
    let backend = Backend::fit(&corpus.ood, &corpus.ind, &TrainOptions::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    backend.write(dir.path()).unwrap();
    let loaded = Backend::load(dir.path()).unwrap();
    assert_eq!(backend, loaded);
    // LDA was clamped to the input dimension.
    assert_eq!(loaded.frontend.lda.as_ref().unwrap().out_dim(), 8);
}

#[test]
fn unlabeled_in_domain_uses_projected_mean() {
    let corpus = generate(&small(7).config().unwrap()).unwrap();
    let opts = TrainOptions {
        ignore_ind_labels: true,
        ..TrainOptions::default()
    };
    let backend = Backend::fit(&corpus.ood, &corpus.ind, &opts).unwrap();
    assert!(backend.ind.is_none());
    let cat = backend.catalog().unwrap();
    let m = backend
        .adapt(&cat, &Preset::CoralPlus.recipe(0.5).unwrap(), None, None)
        .unwrap();
    assert_eq!(m.mu, backend.ind_proj_mean);
    assert!(backend
        .adapt(&cat, &Preset::Lip.recipe(0.5).unwrap(), None, None)
        .is_err());
}
