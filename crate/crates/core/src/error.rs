use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(
        "matrix is not positive semidefinite (eigenvalue {eigenvalue:e} below floor {floor:e})"
    )]
    NotPsd { eigenvalue: f64, floor: f64 },

    #[error("matrix is singular (smallest eigenvalue {eigenvalue:e}, floor {floor:e})")]
    Singular { eigenvalue: f64, floor: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("need at least {needed} records, found {found}")]
    TooFewRecords { needed: usize, found: usize },

    #[error("need at least 2 speakers, found {0}")]
    TooFewSpeakers(usize),

    #[error("no speaker has more than one utterance")]
    NoWithinSpeakerVariation,

    #[error("embedding set is not labeled (record `{0}` has no speaker)")]
    Unlabeled(String),

    #[error("duplicate utterance id `{0}`")]
    DuplicateUtterance(String),

    #[error("unknown utterance `{0}`")]
    UnknownUtterance(String),

    #[error("embedding set is empty")]
    EmptySet,

    #[error("need at least 2 classes, found {0}")]
    TooFewClasses(usize),

    #[error("requested {requested} output dimensions, at most {max} allowed")]
    OutDimTooLarge { requested: usize, max: usize },

    #[error("trial list has no target trials")]
    NoTargets,

    #[error("trial list has no nontarget trials")]
    NoNontargets,

    #[error("trial {0} is missing a label or score")]
    UnscoredTrial(usize),

    #[error("invalid cost parameters: {0}")]
    InvalidCost(String),

    #[error("k = {k} exceeds cohort size {cohort}")]
    KTooLarge { k: usize, cohort: usize },

    #[error("degenerate cohort for `{0}`: top-k scores have zero spread")]
    DegenerateCohort(String),

    #[error("recipe needs the in-domain PLDA, which the catalog lacks")]
    MissingInDomainModel,

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),

    #[error("unknown covariance role `{0}`")]
    UnknownRole(String),

    #[error("invalid recipe: {0}")]
    InvalidRecipe(String),

    #[error("alpha {0} outside [0, 1]")]
    AlphaOutOfRange(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("{path}: {msg}")]
    Io { path: String, msg: String },
}

impl Error {
    pub fn parse(path: &str, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.to_string(),
            line,
            msg: msg.into(),
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, err: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            msg: err.to_string(),
        }
    }

    /// Short machine-parsable tag, used by the CLI's one-line error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NotPsd { .. } => "not_psd",
            Error::Singular { .. } => "singular",
            Error::DimMismatch { .. } => "dim_mismatch",
            Error::InvalidMatrix(_) => "invalid_matrix",
            Error::TooFewRecords { .. } => "too_few_records",
            Error::TooFewSpeakers(_) => "too_few_speakers",
            Error::NoWithinSpeakerVariation => "no_within_speaker_variation",
            Error::Unlabeled(_) => "unlabeled",
            Error::DuplicateUtterance(_) => "duplicate_utterance",
            Error::UnknownUtterance(_) => "unknown_utterance",
            Error::EmptySet => "empty_set",
            Error::TooFewClasses(_) => "too_few_classes",
            Error::OutDimTooLarge { .. } => "out_dim_too_large",
            Error::NoTargets => "no_targets",
            Error::NoNontargets => "no_nontargets",
            Error::UnscoredTrial(_) => "unscored_trial",
            Error::InvalidCost(_) => "invalid_cost",
            Error::KTooLarge { .. } => "k_too_large",
            Error::DegenerateCohort(_) => "degenerate_cohort",
            Error::MissingInDomainModel => "missing_in_domain_model",
            Error::UnknownPreset(_) => "unknown_preset",
            Error::UnknownRole(_) => "unknown_role",
            Error::InvalidRecipe(_) => "invalid_recipe",
            Error::AlphaOutOfRange(_) => "alpha_out_of_range",
            Error::InvalidConfig(_) => "invalid_config",
            Error::Parse { .. } => "parse",
            Error::Io { .. } => "io",
        }
    }
}
