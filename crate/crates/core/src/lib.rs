//! Covariance-level domain adaptation for two-covariance PLDA
//! speaker-verification backends.
//!
//! The crate covers the whole backend: symmetric-matrix kernels
//! ([`symmat`]), PLDA training and scoring ([`plda`]), the adaptation
//! recipes ([`adapt`]), LDA preprocessing ([`preprocess`]), AS-norm
//! ([`scorenorm`]), EER / minimum detection cost ([`metrics`]), a synthetic
//! domain-shift corpus generator ([`synthgen`]) and the file-level commands
//! used by the CLI ([`pipeline`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adapt;
pub mod error;
pub mod io;
pub mod metrics;
pub mod pipeline;
pub mod plda;
pub mod preprocess;
pub mod scorenorm;
pub mod symmat;
pub mod synthgen;

pub use adapt::{
    adapt_covariance, adapt_model, coral_pseudo, gamma_max, preset, AdaptRecipe, CovKind, CovRole,
    CovarianceCatalog, Preset,
};
pub use error::{Error, Result};
pub use metrics::{eer, error_curve, min_cprimary, CostParams, Label, Trial, TrialSet};
pub use plda::{
    score_llr, score_trials, total_covariance, train_plda, Embedding, EmbeddingSet, PldaModel,
};
pub use symmat::{psd_inv_sqrt, psd_sqrt, simultaneous_diag, SimDiag, SymMatrix};
