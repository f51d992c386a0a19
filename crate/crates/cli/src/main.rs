//! `pldadapt` command-line tool.
//!
//! Every subcommand accepts `--config FILE`, a `key = value` file whose keys
//! are long flag names (with `-` or `_`); flags given on the command line
//! override config values. On failure a single line
//! `error: <kind>: <message>` is printed to stderr and the exit code is 1.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pldadapt::adapt::{AdaptRecipe, CovRole, Preset};
use pldadapt::metrics::CostParams;
use pldadapt::pipeline::{self, LdaSource, TrainOptions};
use pldadapt::scorenorm::DEFAULT_K;
use pldadapt::synthgen::SynthParams;
use pldadapt::{Error, Result};

#[derive(Parser, Debug)]
#[command(
    name = "pldadapt",
    version,
    about = "PLDA domain adaptation toolkit",
    args_override_self = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit centering, LDA and the OOD / in-domain PLDA models.
    Train(TrainArgs),
    /// Build an adapted PLDA model from a trained model directory.
    Adapt(AdaptArgs),
    /// Score a trial list with a PLDA model.
    Score(ScoreArgs),
    /// Compute EER and minimum primary cost of a scored trial list.
    Eval(EvalArgs),
    /// Evaluate adaptation recipes over a grid of interpolation weights.
    Sweep(SweepArgs),
    /// Generate a synthetic domain-shift corpus.
    Synth(SynthArgs),
}

#[derive(Args, Debug)]
struct ConfigArg {
    /// Optional `key = value` file of default flag values.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum LdaFrom {
    Ood,
    Ind,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[command(flatten)]
    cfg: ConfigArg,
    #[arg(long)]
    ood: PathBuf,
    #[arg(long)]
    ind: PathBuf,
    /// Output model directory.
    #[arg(long)]
    out: PathBuf,
    /// LDA output dimension (clamped to what the data supports).
    #[arg(long, default_value_t = pipeline::DEFAULT_LDA_DIM)]
    lda_dim: usize,
    #[arg(long)]
    no_lda: bool,
    /// Training set the LDA is fitted on.
    #[arg(long, value_enum, default_value = "ood")]
    lda_source: LdaFrom,
    /// Ignore in-domain speaker labels (unsupervised adaptation).
    #[arg(long)]
    unsupervised: bool,
}

#[derive(Args, Debug)]
struct AdaptArgs {
    #[command(flatten)]
    cfg: ConfigArg,
    #[arg(long)]
    model_dir: PathBuf,
    /// Named preset (coral_plus, kaldi, lip, lip_reg, cip, cip_reg, case7, case8).
    #[arg(long, conflicts_with_all = ["phi0", "phi1", "phi2"])]
    recipe: Option<String>,
    /// Explicit roles, e.g. `IND`, `PSEUDO`, `GAMMA(PSEUDO,OOD)`.
    #[arg(long, requires_all = ["phi1", "phi2"])]
    phi0: Option<String>,
    #[arg(long, requires_all = ["phi0", "phi2"])]
    phi1: Option<String>,
    #[arg(long, requires_all = ["phi0", "phi1"])]
    phi2: Option<String>,
    #[arg(long)]
    alpha: f64,
    /// Separate weight for the within-speaker covariance.
    #[arg(long)]
    alpha_within: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct EvalSetArgs {
    /// Trained model directory (centering and LDA).
    #[arg(long)]
    model_dir: PathBuf,
    #[arg(long)]
    enroll: PathBuf,
    #[arg(long)]
    test: PathBuf,
    #[arg(long)]
    trials: PathBuf,
    /// Cohort embeddings; enables AS-norm.
    #[arg(long)]
    cohort: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_K)]
    snorm_k: usize,
    /// Worker threads (1 = serial).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args, Debug)]
struct ScoreArgs {
    #[command(flatten)]
    cfg: ConfigArg,
    #[command(flatten)]
    set: EvalSetArgs,
    /// PLDA model to score with.
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct CostArgs {
    /// Comma-separated target priors.
    #[arg(long, value_delimiter = ',', default_values_t = [0.01, 0.005])]
    p_target: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    c_miss: f64,
    #[arg(long, default_value_t = 1.0)]
    c_fa: f64,
}

impl CostArgs {
    fn params(&self) -> CostParams {
        CostParams {
            p_targets: self.p_target.clone(),
            c_miss: self.c_miss,
            c_fa: self.c_fa,
        }
    }
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[command(flatten)]
    cfg: ConfigArg,
    /// Scored trial list.
    #[arg(long)]
    scores: PathBuf,
    #[command(flatten)]
    cost: CostArgs,
    /// Also write the report here (it is always printed).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the detection error trade-off curve as TSV.
    #[arg(long)]
    det_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    cfg: ConfigArg,
    #[command(flatten)]
    set: EvalSetArgs,
    /// Comma-separated preset names; defaults to every preset the model
    /// directory supports.
    #[arg(long, value_delimiter = ',')]
    recipes: Vec<String>,
    /// `start:stop:step` or a comma-separated list.
    #[arg(long, default_value = "0:1:0.1")]
    alpha_grid: String,
    #[command(flatten)]
    cost: CostArgs,
    /// Also write the table here (it is always printed).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[command(flatten)]
    cfg: ConfigArg,
    /// Generator parameters (`key = value`); defaults apply otherwise.
    #[arg(long)]
    params: Option<PathBuf>,
    /// Overrides the seed from the parameter file.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Converts a `key = value` config file into flags.
fn config_flags(path: &Path) -> Result<Vec<String>> {
    let text = read_text(path)?;
    let mut flags = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::parse(&path.display().to_string(), i + 1, "expected `key = value`")
        })?;
        let flag = format!("--{}", key.trim().replace('_', "-"));
        match value.trim() {
            "true" => flags.push(flag),
            "false" => {}
            v => {
                flags.push(flag);
                flags.push(v.to_string());
            }
        }
    }
    Ok(flags)
}

/// Inserts config-file flags right after the subcommand so that explicit
/// flags, which come later, take precedence.
fn expand_config(args: Vec<String>) -> Result<Vec<String>> {
    let pos = args.iter().position(|a| a == "--config");
    let inline = args.iter().position(|a| a.starts_with("--config="));
    let (path, remove): (PathBuf, Vec<usize>) = match (pos, inline) {
        (Some(p), _) if p + 1 < args.len() => (PathBuf::from(&args[p + 1]), vec![p, p + 1]),
        (_, Some(p)) => (PathBuf::from(&args[p]["--config=".len()..]), vec![p]),
        _ => return Ok(args),
    };
    let extra = config_flags(&path)?;
    let rest: Vec<String> = args
        .into_iter()
        .enumerate()
        .filter(|(i, _)| !remove.contains(i))
        .map(|(_, a)| a)
        .collect();
    let mut out = Vec::with_capacity(rest.len() + extra.len());
    out.extend(rest.iter().take(2).cloned());
    out.extend(extra);
    out.extend(rest.into_iter().skip(2));
    Ok(out)
}

fn recipe_from(args: &AdaptArgs) -> Result<AdaptRecipe> {
    match (&args.recipe, &args.phi0, &args.phi1, &args.phi2) {
        (Some(name), ..) => pldadapt::preset(name, args.alpha),
        (None, Some(a), Some(b), Some(c)) => AdaptRecipe::new(
            a.parse::<CovRole>()?,
            b.parse::<CovRole>()?,
            c.parse::<CovRole>()?,
            args.alpha,
        ),
        _ => Err(Error::InvalidRecipe(
            "give --recipe or all of --phi0, --phi1, --phi2".into(),
        )),
    }
}

fn snorm(set: &EvalSetArgs) -> Option<usize> {
    set.cohort.as_ref().map(|_| set.snorm_k)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(a) => {
            let options = TrainOptions {
                lda_dim: (!a.no_lda).then_some(a.lda_dim),
                lda_source: match a.lda_source {
                    LdaFrom::Ood => LdaSource::Ood,
                    LdaFrom::Ind => LdaSource::Ind,
                },
                ignore_ind_labels: a.unsupervised,
            };
            pipeline::cmd_train(&pipeline::TrainConfig {
                ood: a.ood,
                ind: a.ind,
                out_dir: a.out,
                options,
            })?;
        }
        Command::Adapt(a) => {
            let recipe = recipe_from(&a)?;
            if let Some(w) = a.alpha_within {
                if !(0.0..=1.0).contains(&w) {
                    return Err(Error::AlphaOutOfRange(w));
                }
            }
            pipeline::cmd_adapt(&pipeline::AdaptConfig {
                model_dir: a.model_dir,
                recipe,
                alpha_between: None,
                alpha_within: a.alpha_within,
                out: a.out,
            })?;
        }
        Command::Score(a) => {
            let snorm_k = snorm(&a.set);
            pipeline::cmd_score(&pipeline::ScoreConfig {
                model_dir: a.set.model_dir,
                model: a.model,
                enroll: a.set.enroll,
                test: a.set.test,
                trials: a.set.trials,
                cohort: a.set.cohort,
                snorm_k,
                threads: a.set.threads,
                out: a.out,
            })?;
        }
        Command::Eval(a) => {
            let text = pipeline::cmd_eval(&pipeline::EvalConfig {
                scores: a.scores,
                cost: a.cost.params(),
                out: a.out,
                det_out: a.det_out,
            })?;
            print!("{text}");
        }
        Command::Sweep(a) => {
            let alphas = pipeline::parse_alpha_grid(&a.alpha_grid)?;
            let names: Vec<String> = if a.recipes.is_empty() {
                let supervised = a.set.model_dir.join(pipeline::files::IND_PLDA).exists();
                Preset::ALL
                    .iter()
                    .filter(|p| supervised || !p.is_supervised())
                    .map(|p| p.name().to_string())
                    .collect()
            } else {
                a.recipes.clone()
            };
            let recipes = names
                .into_iter()
                .map(|n| {
                    let r = pldadapt::preset(&n, 0.0)?;
                    Ok((n.trim().to_ascii_lowercase(), r))
                })
                .collect::<Result<Vec<_>>>()?;
            let snorm_k = snorm(&a.set);
            let text = pipeline::cmd_sweep(&pipeline::SweepConfig {
                model_dir: a.set.model_dir,
                enroll: a.set.enroll,
                test: a.set.test,
                trials: a.set.trials,
                cohort: a.set.cohort,
                snorm_k,
                recipes,
                alphas,
                cost: a.cost.params(),
                threads: a.set.threads,
                out: a.out,
            })?;
            print!("{text}");
        }
        Command::Synth(a) => {
            let mut params = match &a.params {
                Some(p) => SynthParams::from_key_values(&read_text(p)?)?,
                None => SynthParams::default(),
            };
            if let Some(s) = a.seed {
                params.seed = s;
            }
            pipeline::cmd_synth(&params, &a.out)?;
        }
    }
    Ok(())
}

fn fail(kind: &str, msg: &str) -> ExitCode {
    let msg = msg.split_whitespace().collect::<Vec<_>>().join(" ");
    eprintln!("error: {kind}: {msg}");
    ExitCode::FAILURE
}

fn main() -> ExitCode {
    let args = match expand_config(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => return fail(e.kind(), &e.to_string()),
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help / --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text
                .lines()
                .next()
                .unwrap_or("")
                .trim_start_matches("error: ");
            return fail("usage", first);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e.kind(), &e.to_string()),
    }
}
