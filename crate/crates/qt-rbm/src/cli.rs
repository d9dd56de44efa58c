//! The `qt-rbm` command-line tool.
//!
//! Every subcommand takes its options from flags, from a JSON config file
//! mirroring the flag names (`--config`), or both; flags override file
//! values. A run writes a `manifest.json` echoing the fully resolved
//! configuration, and re-running with that manifest as the config file
//! reproduces the outputs byte-for-byte, independent of `--threads`.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical
//! failure.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::Rng;
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::baselines::{pcd_train, PcdConfig};
use crate::data_io::{generate_synthetic, load_dataset, make_pl_failure_dataset, save_dataset, split_dataset, BinaryDataset};
use crate::error::{QtError, Result};
use crate::eval::{generate_query_set, nce, reports_to_csv, ExactBackend, InferenceBackend, PcdGibbsBackend, QtnnBackend};
use crate::grad::finite_diff_check;
use crate::model::{load_checkpoint, save_checkpoint, CheckpointParams, RbmParamsQt};
use crate::oracle::enumerate_joint;
use crate::qtnn::DEFAULT_CLAMP;
use crate::rng;
use crate::training::{select_learning_rate, train_qt, QueryDistribution, TrainConfig, DEFAULT_LR_GRID};

#[derive(Parser)]
#[command(name = "qt-rbm", version, about = "Query-trained inference networks for binary RBMs")]
struct Cli {
    /// Base seed for every randomized component (mandatory, here or in
    /// the config file).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (0 = all cores). Results never depend on this.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Train the inference network with query-randomized SGD.
    TrainQt(TrainQtArgs),
    /// Train a standard RBM with persistent contrastive divergence.
    PcdTrain(PcdTrainArgs),
    /// Evaluate a checkpoint on a dataset with a chosen backend.
    Eval(EvalArgs),
    /// Exact enumeration: partition function, marginals, optional NCE.
    Oracle(OracleArgs),
    /// Verify the reverse pass against central finite differences.
    Gradcheck(GradcheckArgs),
    /// Generate a synthetic dataset (with its ground-truth model).
    Synth(SynthArgs),
}

#[derive(Serialize, Deserialize)]
struct Manifest<T> {
    command: String,
    config: T,
}

pub fn run() -> i32 {
    run_from(std::env::args_os())
}

/// Testable entry point; returns the process exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };

    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build() {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("error: cannot build thread pool: {e}");
            return 1;
        }
    };
    pool.install(|| match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    })
}

fn execute(cli: Cli) -> Result<i32> {
    match cli.command {
        Cmd::TrainQt(args) => cmd_train_qt(cli.seed, args),
        Cmd::PcdTrain(args) => cmd_train_pcd(cli.seed, args),
        Cmd::Eval(args) => cmd_eval(cli.seed, args),
        Cmd::Oracle(args) => cmd_oracle(cli.seed, args),
        Cmd::Gradcheck(args) => cmd_gradcheck(cli.seed, args),
        Cmd::Synth(args) => cmd_synth(cli.seed, args),
    }
}

// ---------------------------------------------------------------------
// Config plumbing
// ---------------------------------------------------------------------

/// Read a JSON config file; a manifest written by a previous run is
/// accepted as-is (its `config` section is unwrapped after checking the
/// command name).
fn load_file_config<T: DeserializeOwned + Default>(path: Option<&Path>, command: &str) -> Result<T> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| QtError::io(path, e))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| QtError::Config(format!("config parse error in {}: {e}", path.display())))?;
    let value = match (value.get("command"), value.get("config")) {
        (Some(cmd), Some(cfg)) => {
            if cmd.as_str() != Some(command) {
                return Err(QtError::Config(format!(
                    "manifest {} was written by {:?}, not {command:?}",
                    path.display(),
                    cmd
                )));
            }
            cfg.clone()
        }
        _ => value,
    };
    serde_json::from_value(value)
        .map_err(|e| QtError::Config(format!("config error in {}: {e}", path.display())))
}

fn need<T>(flag: Option<T>, file: Option<T>, what: &str) -> Result<T> {
    flag.or(file).ok_or_else(|| QtError::Config(format!("{what} is required (flag or config file)")))
}

fn need_seed(cli_seed: Option<u64>, file_seed: Option<u64>) -> Result<u64> {
    need(cli_seed, file_seed, "--seed")
}

fn write_manifest<T: Serialize>(out: &Path, command: &str, config: &T) -> Result<()> {
    let manifest = Manifest { command: command.to_string(), config };
    let mut text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| QtError::Config(format!("manifest serialization: {e}")))?;
    text.push('\n');
    let path = out.join("manifest.json");
    std::fs::write(&path, text).map_err(|e| QtError::io(path, e))
}

fn ensure_out_dir(out: &str) -> Result<PathBuf> {
    let dir = PathBuf::from(out);
    std::fs::create_dir_all(&dir).map_err(|e| QtError::io(&dir, e))?;
    Ok(dir)
}

fn parse_fractions(s: &str) -> Result<[f64; 3]> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| QtError::Config(format!("bad split fractions {s:?}")))?;
    if parts.len() != 3 {
        return Err(QtError::Config(format!("split needs three fractions, got {s:?}")));
    }
    Ok([parts[0], parts[1], parts[2]])
}

/// Shared input resolution: either one dataset to split, or explicit
/// train/valid files.
fn load_train_valid(
    data: &Option<String>,
    train: &Option<String>,
    valid: &Option<String>,
    fractions: [f64; 3],
    seed: u64,
) -> Result<(BinaryDataset, BinaryDataset, Option<BinaryDataset>)> {
    match (data, train, valid) {
        (Some(data), None, None) => {
            let full = load_dataset(Path::new(data))?;
            let (tr, va, te) =
                split_dataset(&full, (fractions[0], fractions[1], fractions[2]), seed)?;
            Ok((tr, va, Some(te)))
        }
        (None, Some(train), Some(valid)) => {
            Ok((load_dataset(Path::new(train))?, load_dataset(Path::new(valid))?, None))
        }
        _ => Err(QtError::Config(
            "provide either --data (auto-split) or both --train and --valid".into(),
        )),
    }
}

// ---------------------------------------------------------------------
// train-qt
// ---------------------------------------------------------------------

#[derive(Args)]
struct TrainQtArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dataset to auto-split into train/valid/test.
    #[arg(long)]
    data: Option<String>,
    #[arg(long)]
    train: Option<String>,
    #[arg(long)]
    valid: Option<String>,
    /// Split fractions for --data, e.g. 0.8,0.1,0.1.
    #[arg(long)]
    split: Option<String>,
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    hidden_units: Option<usize>,
    #[arg(long)]
    layers: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// Omit to grid-search {3e-2, 1e-2, 3e-3, 1e-3} on validation NCE.
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    max_epochs: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
    /// Logit-space magnitude of hard evidence.
    #[arg(long)]
    clamp: Option<f64>,
    /// Query distribution: bernoulli:<p> or pl.
    #[arg(long)]
    queries: Option<String>,
    #[arg(long)]
    adam_beta1: Option<f64>,
    #[arg(long)]
    adam_beta2: Option<f64>,
    #[arg(long)]
    adam_eps: Option<f64>,
}

#[derive(Deserialize, Default)]
#[serde(default)]
struct TrainQtFile {
    seed: Option<u64>,
    data: Option<String>,
    train: Option<String>,
    valid: Option<String>,
    split: Option<[f64; 3]>,
    out: Option<String>,
    hidden_units: Option<usize>,
    layers: Option<usize>,
    batch_size: Option<usize>,
    learning_rate: Option<f64>,
    max_epochs: Option<usize>,
    patience: Option<usize>,
    clamp: Option<f64>,
    queries: Option<String>,
    adam_beta1: Option<f64>,
    adam_beta2: Option<f64>,
    adam_eps: Option<f64>,
}

#[derive(Serialize, Deserialize, Clone)]
struct TrainQtResolved {
    seed: u64,
    data: Option<String>,
    train: Option<String>,
    valid: Option<String>,
    split: [f64; 3],
    out: String,
    hidden_units: usize,
    layers: usize,
    batch_size: usize,
    learning_rate: Option<f64>,
    max_epochs: usize,
    patience: usize,
    clamp: f64,
    queries: String,
    adam_beta1: f64,
    adam_beta2: f64,
    adam_eps: f64,
}

fn cmd_train_qt(cli_seed: Option<u64>, args: TrainQtArgs) -> Result<i32> {
    let file: TrainQtFile = load_file_config(args.config.as_deref(), "train-qt")?;
    let flag_split = args.split.as_deref().map(parse_fractions).transpose()?;
    let defaults = TrainConfig::default();
    let mut resolved = TrainQtResolved {
        seed: need_seed(cli_seed, file.seed)?,
        data: args.data.or(file.data),
        train: args.train.or(file.train),
        valid: args.valid.or(file.valid),
        split: flag_split.or(file.split).unwrap_or([0.8, 0.1, 0.1]),
        out: need(args.out, file.out, "--out")?,
        hidden_units: args.hidden_units.or(file.hidden_units).unwrap_or(defaults.hidden_units),
        layers: args.layers.or(file.layers).unwrap_or(defaults.n_layers),
        batch_size: args.batch_size.or(file.batch_size).unwrap_or(defaults.batch_size),
        learning_rate: args.learning_rate.or(file.learning_rate),
        max_epochs: args.max_epochs.or(file.max_epochs).unwrap_or(defaults.max_epochs),
        patience: args.patience.or(file.patience).unwrap_or(defaults.patience),
        clamp: args.clamp.or(file.clamp).unwrap_or(defaults.clamp_l),
        queries: args.queries.or(file.queries).unwrap_or_else(|| "bernoulli:0.5".into()),
        adam_beta1: args.adam_beta1.or(file.adam_beta1).unwrap_or(defaults.adam_beta1),
        adam_beta2: args.adam_beta2.or(file.adam_beta2).unwrap_or(defaults.adam_beta2),
        adam_eps: args.adam_eps.or(file.adam_eps).unwrap_or(defaults.adam_eps),
    };

    let dist = QueryDistribution::parse(&resolved.queries)?;
    let (train, valid, test) = load_train_valid(
        &resolved.data,
        &resolved.train,
        &resolved.valid,
        resolved.split,
        resolved.seed,
    )?;
    let cfg = TrainConfig {
        hidden_units: resolved.hidden_units,
        n_layers: resolved.layers,
        batch_size: resolved.batch_size,
        learning_rate: resolved.learning_rate.unwrap_or(defaults.learning_rate),
        max_epochs: resolved.max_epochs,
        patience: resolved.patience,
        seed: resolved.seed,
        clamp_l: resolved.clamp,
        adam_beta1: resolved.adam_beta1,
        adam_beta2: resolved.adam_beta2,
        adam_eps: resolved.adam_eps,
    };

    let (chosen_lr, params, history) = match resolved.learning_rate {
        Some(lr) => {
            let (p, h) = train_qt(&train, &valid, &cfg, &dist)?;
            (lr, p, h)
        }
        None => select_learning_rate(&train, &valid, &cfg, &dist, &DEFAULT_LR_GRID)?,
    };
    resolved.learning_rate = Some(chosen_lr);

    let out = ensure_out_dir(&resolved.out)?;
    save_checkpoint(&CheckpointParams::Qt(params), &out.join("checkpoint.json"))?;
    let hist_path = out.join("history.csv");
    std::fs::write(&hist_path, history.to_csv()).map_err(|e| QtError::io(hist_path, e))?;
    if let Some(test) = test {
        save_dataset(&test, &out.join("test.csv"))?;
    }
    write_manifest(&out, "train-qt", &resolved)?;

    println!(
        "train-qt: {} epochs, lr {}, best validation NCE {:.6}, outputs in {}",
        history.epochs.len(),
        chosen_lr,
        history.best_valid_nce().unwrap_or(f64::NAN),
        out.display()
    );
    Ok(0)
}

// ---------------------------------------------------------------------
// pcd-train
// ---------------------------------------------------------------------

#[derive(Args)]
struct PcdTrainArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    data: Option<String>,
    #[arg(long)]
    train: Option<String>,
    #[arg(long)]
    valid: Option<String>,
    #[arg(long)]
    split: Option<String>,
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    hidden_units: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Omit to cross-validate the grid on validation NCE (Gibbs backend).
    #[arg(long)]
    learning_rate: Option<f64>,
    /// Comma-separated candidate rates for cross-validation.
    #[arg(long)]
    lr_grid: Option<String>,
    /// Persistent chains (0 = one per batch slot).
    #[arg(long)]
    chains: Option<usize>,
    #[arg(long)]
    gibbs_steps: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    cv_gibbs_samples: Option<usize>,
    #[arg(long)]
    cv_burn_in: Option<usize>,
}

#[derive(Deserialize, Default)]
#[serde(default)]
struct PcdTrainFile {
    seed: Option<u64>,
    data: Option<String>,
    train: Option<String>,
    valid: Option<String>,
    split: Option<[f64; 3]>,
    out: Option<String>,
    hidden_units: Option<usize>,
    epochs: Option<usize>,
    learning_rate: Option<f64>,
    lr_grid: Option<Vec<f64>>,
    chains: Option<usize>,
    gibbs_steps: Option<usize>,
    batch_size: Option<usize>,
    cv_gibbs_samples: Option<usize>,
    cv_burn_in: Option<usize>,
}

#[derive(Serialize, Deserialize, Clone)]
struct PcdTrainResolved {
    seed: u64,
    data: Option<String>,
    train: Option<String>,
    valid: Option<String>,
    split: [f64; 3],
    out: String,
    hidden_units: usize,
    epochs: usize,
    learning_rate: Option<f64>,
    lr_grid: Vec<f64>,
    chains: usize,
    gibbs_steps: usize,
    batch_size: usize,
    cv_gibbs_samples: usize,
    cv_burn_in: usize,
}

fn parse_lr_grid(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| QtError::Config(format!("bad learning-rate grid entry {p:?}")))
        })
        .collect()
}

fn cmd_train_pcd(cli_seed: Option<u64>, args: PcdTrainArgs) -> Result<i32> {
    let file: PcdTrainFile = load_file_config(args.config.as_deref(), "pcd-train")?;
    let flag_split = args.split.as_deref().map(parse_fractions).transpose()?;
    let flag_grid = args.lr_grid.as_deref().map(parse_lr_grid).transpose()?;
    let defaults = PcdConfig::default();
    let mut resolved = PcdTrainResolved {
        seed: need_seed(cli_seed, file.seed)?,
        data: args.data.or(file.data),
        train: args.train.or(file.train),
        valid: args.valid.or(file.valid),
        split: flag_split.or(file.split).unwrap_or([0.8, 0.1, 0.1]),
        out: need(args.out, file.out, "--out")?,
        hidden_units: args.hidden_units.or(file.hidden_units).unwrap_or(16),
        epochs: args.epochs.or(file.epochs).unwrap_or(defaults.epochs),
        learning_rate: args.learning_rate.or(file.learning_rate),
        lr_grid: flag_grid.or(file.lr_grid).unwrap_or(defaults.lr_grid),
        chains: args.chains.or(file.chains).unwrap_or(defaults.n_chains),
        gibbs_steps: args.gibbs_steps.or(file.gibbs_steps).unwrap_or(defaults.gibbs_steps_per_update),
        batch_size: args.batch_size.or(file.batch_size).unwrap_or(defaults.batch_size),
        cv_gibbs_samples: args
            .cv_gibbs_samples
            .or(file.cv_gibbs_samples)
            .unwrap_or(defaults.cv_gibbs_samples),
        cv_burn_in: args.cv_burn_in.or(file.cv_burn_in).unwrap_or(defaults.cv_burn_in),
    };

    let (train, valid, _test) = load_train_valid(
        &resolved.data,
        &resolved.train,
        &resolved.valid,
        resolved.split,
        resolved.seed,
    )?;
    let cfg = PcdConfig {
        epochs: resolved.epochs,
        learning_rate: resolved.learning_rate,
        lr_grid: resolved.lr_grid.clone(),
        n_chains: resolved.chains,
        gibbs_steps_per_update: resolved.gibbs_steps,
        batch_size: resolved.batch_size,
        seed: resolved.seed,
        cv_gibbs_samples: resolved.cv_gibbs_samples,
        cv_burn_in: resolved.cv_burn_in,
    };
    let (params, history) = pcd_train(&train, &valid, resolved.hidden_units, &cfg)?;
    resolved.learning_rate = Some(history.chosen_lr);

    let out = ensure_out_dir(&resolved.out)?;
    save_checkpoint(&CheckpointParams::Std(params), &out.join("checkpoint.json"))?;
    let hist_path = out.join("history.csv");
    std::fs::write(&hist_path, history.to_csv()).map_err(|e| QtError::io(hist_path, e))?;
    write_manifest(&out, "pcd-train", &resolved)?;

    println!(
        "pcd-train: {} epochs, lr {}, outputs in {}",
        resolved.epochs,
        history.chosen_lr,
        out.display()
    );
    Ok(0)
}

// ---------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    checkpoint: Option<String>,
    #[arg(long)]
    data: Option<String>,
    /// qtnn | pcd-bp | pcd-gibbs | oracle
    #[arg(long)]
    backend: Option<String>,
    #[arg(long)]
    queries: Option<String>,
    #[arg(long)]
    query_seed: Option<u64>,
    #[arg(long)]
    layers: Option<usize>,
    #[arg(long)]
    clamp: Option<f64>,
    #[arg(long)]
    gibbs_samples: Option<usize>,
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    sampler_seed: Option<u64>,
    /// Optional output directory for report.csv + manifest.json.
    #[arg(long)]
    out: Option<String>,
}

#[derive(Deserialize, Default)]
#[serde(default)]
struct EvalFile {
    seed: Option<u64>,
    checkpoint: Option<String>,
    data: Option<String>,
    backend: Option<String>,
    queries: Option<String>,
    query_seed: Option<u64>,
    layers: Option<usize>,
    clamp: Option<f64>,
    gibbs_samples: Option<usize>,
    burn_in: Option<usize>,
    sampler_seed: Option<u64>,
    out: Option<String>,
}

#[derive(Serialize, Deserialize, Clone)]
struct EvalResolved {
    seed: u64,
    checkpoint: String,
    data: String,
    backend: String,
    queries: String,
    query_seed: u64,
    layers: usize,
    clamp: f64,
    gibbs_samples: usize,
    burn_in: usize,
    sampler_seed: u64,
    out: Option<String>,
}

fn cmd_eval(cli_seed: Option<u64>, args: EvalArgs) -> Result<i32> {
    let file: EvalFile = load_file_config(args.config.as_deref(), "eval")?;
    let seed = need_seed(cli_seed, file.seed)?;
    let resolved = EvalResolved {
        seed,
        checkpoint: need(args.checkpoint, file.checkpoint, "--checkpoint")?,
        data: need(args.data, file.data, "--data")?,
        backend: args.backend.or(file.backend).unwrap_or_else(|| "qtnn".into()),
        queries: args.queries.or(file.queries).unwrap_or_else(|| "bernoulli:0.5".into()),
        query_seed: args.query_seed.or(file.query_seed).unwrap_or(seed),
        layers: args.layers.or(file.layers).unwrap_or(10),
        clamp: args.clamp.or(file.clamp).unwrap_or(DEFAULT_CLAMP),
        gibbs_samples: args.gibbs_samples.or(file.gibbs_samples).unwrap_or(2000),
        burn_in: args.burn_in.or(file.burn_in).unwrap_or(500),
        sampler_seed: args.sampler_seed.or(file.sampler_seed).unwrap_or(seed),
        out: args.out.or(file.out),
    };

    let data = load_dataset(Path::new(&resolved.data))?;
    let dist = QueryDistribution::parse(&resolved.queries)?;
    let queries = generate_query_set(data.n_rows(), data.n_cols, &dist, resolved.query_seed);
    let checkpoint = load_checkpoint(Path::new(&resolved.checkpoint))?;

    let backend: Box<dyn InferenceBackend> = match resolved.backend.as_str() {
        "qtnn" => match &checkpoint {
            CheckpointParams::Qt(p) => {
                Box::new(QtnnBackend::new(p.clone(), resolved.layers, resolved.clamp))
            }
            CheckpointParams::Std(_) => {
                return Err(QtError::Config(
                    "backend qtnn needs a qt checkpoint (use pcd-bp for std checkpoints)".into(),
                ))
            }
        },
        "pcd-bp" => match &checkpoint {
            CheckpointParams::Std(p) => Box::new(
                QtnnBackend::new(RbmParamsQt::from_standard(p), resolved.layers, resolved.clamp)
                    .with_name("pcd-bp"),
            ),
            CheckpointParams::Qt(_) => {
                return Err(QtError::Config("backend pcd-bp needs a std checkpoint".into()))
            }
        },
        "pcd-gibbs" => match &checkpoint {
            CheckpointParams::Std(p) => Box::new(PcdGibbsBackend::new(
                p.clone(),
                resolved.gibbs_samples,
                resolved.burn_in,
                resolved.sampler_seed,
            )),
            CheckpointParams::Qt(_) => {
                return Err(QtError::Config("backend pcd-gibbs needs a std checkpoint".into()))
            }
        },
        "oracle" => Box::new(ExactBackend::new(checkpoint.as_qt())),
        other => {
            return Err(QtError::Config(format!(
                "unknown backend {other:?} (expected qtnn, pcd-bp, pcd-gibbs or oracle)"
            )))
        }
    };

    let report = nce(backend.as_ref(), &data, &queries, resolved.query_seed)?;
    let csv = reports_to_csv(std::slice::from_ref(&report));
    print!("{csv}");

    if let Some(out) = &resolved.out {
        let dir = ensure_out_dir(out)?;
        let path = dir.join("report.csv");
        std::fs::write(&path, &csv).map_err(|e| QtError::io(path, e))?;
        write_manifest(&dir, "eval", &resolved)?;
    }
    Ok(0)
}

// ---------------------------------------------------------------------
// oracle
// ---------------------------------------------------------------------

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    checkpoint: Option<String>,
    /// Optional dataset: also report the exact-conditional NCE.
    #[arg(long)]
    data: Option<String>,
    #[arg(long)]
    queries: Option<String>,
    #[arg(long)]
    query_seed: Option<u64>,
    #[arg(long)]
    out: Option<String>,
}

#[derive(Deserialize, Default)]
#[serde(default)]
struct OracleFile {
    seed: Option<u64>,
    checkpoint: Option<String>,
    data: Option<String>,
    queries: Option<String>,
    query_seed: Option<u64>,
    out: Option<String>,
}

#[derive(Serialize, Deserialize, Clone)]
struct OracleResolved {
    seed: u64,
    checkpoint: String,
    data: Option<String>,
    queries: String,
    query_seed: u64,
    out: Option<String>,
}

fn cmd_oracle(cli_seed: Option<u64>, args: OracleArgs) -> Result<i32> {
    let file: OracleFile = load_file_config(args.config.as_deref(), "oracle")?;
    let seed = need_seed(cli_seed, file.seed)?;
    let resolved = OracleResolved {
        seed,
        checkpoint: need(args.checkpoint, file.checkpoint, "--checkpoint")?,
        data: args.data.or(file.data),
        queries: args.queries.or(file.queries).unwrap_or_else(|| "bernoulli:0.5".into()),
        query_seed: args.query_seed.or(file.query_seed).unwrap_or(seed),
        out: args.out.or(file.out),
    };

    let params = load_checkpoint(Path::new(&resolved.checkpoint))?.as_qt();
    let table = enumerate_joint(&params)?;
    println!("log_z {}", table.log_z());
    for (j, p) in table.visible_marginals().iter().enumerate() {
        println!("p(v{j}=1) {p:.6}");
    }

    let mut csv = None;
    if let Some(data) = &resolved.data {
        let data = load_dataset(Path::new(data))?;
        let dist = QueryDistribution::parse(&resolved.queries)?;
        let queries = generate_query_set(data.n_rows(), data.n_cols, &dist, resolved.query_seed);
        let backend = ExactBackend::new(params);
        let report = nce(&backend, &data, &queries, resolved.query_seed)?;
        let text = reports_to_csv(std::slice::from_ref(&report));
        print!("{text}");
        csv = Some(text);
    }

    if let Some(out) = &resolved.out {
        let dir = ensure_out_dir(out)?;
        if let Some(csv) = csv {
            let path = dir.join("report.csv");
            std::fs::write(&path, csv).map_err(|e| QtError::io(path, e))?;
        }
        write_manifest(&dir, "oracle", &resolved)?;
    }
    Ok(0)
}

// ---------------------------------------------------------------------
// gradcheck
// ---------------------------------------------------------------------

#[derive(Args)]
struct GradcheckArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    v_dim: Option<usize>,
    #[arg(long)]
    h_dim: Option<usize>,
    #[arg(long)]
    layers: Option<usize>,
    #[arg(long)]
    temperature: Option<f64>,
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    tolerance: Option<f64>,
}

#[derive(Deserialize, Default)]
#[serde(default)]
struct GradcheckFile {
    seed: Option<u64>,
    v_dim: Option<usize>,
    h_dim: Option<usize>,
    layers: Option<usize>,
    temperature: Option<f64>,
    step: Option<f64>,
    tolerance: Option<f64>,
}

fn cmd_gradcheck(cli_seed: Option<u64>, args: GradcheckArgs) -> Result<i32> {
    let file: GradcheckFile = load_file_config(args.config.as_deref(), "gradcheck")?;
    let seed = need_seed(cli_seed, file.seed)?;
    let v_dim = args.v_dim.or(file.v_dim).unwrap_or(6);
    let h_dim = args.h_dim.or(file.h_dim).unwrap_or(3);
    let layers = args.layers.or(file.layers).unwrap_or(3);
    let temperature = args.temperature.or(file.temperature).unwrap_or(1.0);
    let step = args.step.or(file.step).unwrap_or(1e-4);
    let tolerance = args.tolerance.or(file.tolerance).unwrap_or(1e-4);
    if !(temperature > 0.0) {
        return Err(QtError::Config(format!("temperature {temperature} must be positive")));
    }

    let mut r = rng::stream(seed, &[0x9cad]);
    let params = RbmParamsQt {
        w: ndarray::Array2::from_shape_fn((h_dim, v_dim), |_| r.random_range(-1.0..1.0)),
        c_v: ndarray::Array1::from_shape_fn(v_dim, |_| r.random_range(-1.0..1.0)),
        c_h: ndarray::Array1::from_shape_fn(h_dim, |_| r.random_range(-1.0..1.0)),
        log_t: temperature.ln(),
    };
    let v: Vec<u8> = (0..v_dim).map(|_| r.random_range(0..2)).collect();
    let q = crate::training::sample_query(
        v_dim,
        &QueryDistribution::Bernoulli { p: 0.5 },
        &mut r,
    );

    let report = finite_diff_check(&params, &v, &q, layers, DEFAULT_CLAMP, step, tolerance)?;
    println!(
        "gradcheck: max_rel_error={:.3e} mean_rel_error={:.3e} kink_proximal={} {}",
        report.max_rel_error,
        report.mean_rel_error,
        report.kink_proximal,
        if report.passed { "PASS" } else { "FAIL" }
    );
    Ok(if report.passed { 0 } else { 3 })
}

// ---------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// rbm | pl-failure
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    v_dim: Option<usize>,
    #[arg(long)]
    h_dim: Option<usize>,
    #[arg(long)]
    param_scale: Option<f64>,
    #[arg(long)]
    n_samples: Option<usize>,
    #[arg(long)]
    out: Option<String>,
}

#[derive(Deserialize, Default)]
#[serde(default)]
struct SynthFile {
    seed: Option<u64>,
    kind: Option<String>,
    v_dim: Option<usize>,
    h_dim: Option<usize>,
    param_scale: Option<f64>,
    n_samples: Option<usize>,
    out: Option<String>,
}

#[derive(Serialize, Deserialize, Clone)]
struct SynthResolved {
    seed: u64,
    kind: String,
    v_dim: usize,
    h_dim: usize,
    param_scale: f64,
    n_samples: usize,
    out: String,
}

fn cmd_synth(cli_seed: Option<u64>, args: SynthArgs) -> Result<i32> {
    let file: SynthFile = load_file_config(args.config.as_deref(), "synth")?;
    let resolved = SynthResolved {
        seed: need_seed(cli_seed, file.seed)?,
        kind: args.kind.or(file.kind).unwrap_or_else(|| "rbm".into()),
        v_dim: args.v_dim.or(file.v_dim).unwrap_or(16),
        h_dim: args.h_dim.or(file.h_dim).unwrap_or(8),
        param_scale: args.param_scale.or(file.param_scale).unwrap_or(1.5),
        n_samples: args.n_samples.or(file.n_samples).unwrap_or(10_000),
        out: need(args.out, file.out, "--out")?,
    };

    let out = ensure_out_dir(&resolved.out)?;
    match resolved.kind.as_str() {
        "rbm" => {
            let (data, truth) = generate_synthetic(
                resolved.v_dim,
                resolved.h_dim,
                resolved.param_scale,
                resolved.n_samples,
                resolved.seed,
            )?;
            save_dataset(&data, &out.join("data.csv"))?;
            save_checkpoint(&CheckpointParams::Std(truth), &out.join("truth.json"))?;
        }
        "pl-failure" => {
            let data = make_pl_failure_dataset(resolved.n_samples, resolved.seed);
            save_dataset(&data, &out.join("data.csv"))?;
        }
        other => {
            return Err(QtError::Config(format!(
                "unknown synth kind {other:?} (expected rbm or pl-failure)"
            )))
        }
    }
    write_manifest(&out, "synth", &resolved)?;
    println!(
        "synth: wrote {} samples of dimension {} to {}",
        resolved.n_samples,
        if resolved.kind == "pl-failure" { 5 } else { resolved.v_dim },
        out.display()
    );
    Ok(0)
}
