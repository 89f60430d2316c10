//! Flag definitions and the three-layer resolution: command-line flags
//! override a `key=value` config file, which overrides built-in defaults.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use purank::{
    ClassPrior64, EncoderConfig64, EncoderKind, Error, FileFormat, LossConfig64, LossKind,
    OptimizerKind, Result, SplitConfig, SplitMode, TrainConfig64,
};

#[derive(Parser)]
#[command(
    name = "purank",
    version,
    about = "Positive-unlabeled pairwise ranking: train, evaluate, verify, sweep"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Subcommand)]
pub enum Cmd {
    /// Train an encoder and write checkpoint, epoch report and run manifest
    Train(TrainCmd),
    /// Re-score a finished run directory against its held-out split
    Evaluate(EvaluateCmd),
    /// Run the estimator verification battery on synthetic worlds
    Verify(VerifyCmd),
    /// Train every cell of a loss-hyperparameter grid and emit one long TSV
    Sweep(SweepCmd),
}

#[derive(Args, Debug)]
pub struct DataArgs {
    /// Interaction file; a relative path that does not exist is retried
    /// under $PURANK_DATA_DIR
    #[arg(long)]
    pub data: Option<String>,
    /// Input format: tab | comma | double-colon | delim:<char> [default: tab]
    #[arg(long)]
    pub format: Option<String>,
    /// Held-out fraction in (0,1) [default: 0.2]
    #[arg(long)]
    pub test_fraction: Option<f64>,
    /// Split mode: global | per-user [default: global]
    #[arg(long)]
    pub split_mode: Option<String>,
}

#[derive(Args, Debug)]
pub struct ModelArgs {
    /// Encoder: mf | lightgcn [default: mf]
    #[arg(long)]
    pub model: Option<String>,
    /// Embedding dimension [default: 64]
    #[arg(long)]
    pub dim: Option<usize>,
    /// LightGCN propagation depth, ignored by MF [default: 2]
    #[arg(long)]
    pub layers: Option<usize>,
    /// Evaluation scoring: dot | cosine [default: dot]
    #[arg(long)]
    pub score: Option<String>,
    /// Gaussian initializer standard deviation [default: 0.1]
    #[arg(long)]
    pub init_scale: Option<f64>,
}

#[derive(Args, Debug)]
pub struct LossArgs {
    /// Loss: bpr | infonce | dcl | hcl | dpl [default: dpl]
    #[arg(long)]
    pub loss: Option<String>,
    /// Positive class prior tau+ in [0,1) [default: 0.1]
    #[arg(long)]
    pub tau: Option<f64>,
    /// Extra positives per entry (M) [default: 3]
    #[arg(long)]
    pub m: Option<usize>,
    /// Unlabeled samples per entry (N) [default: 3]
    #[arg(long)]
    pub n: Option<usize>,
    /// Hardness exponent, HCL only [default: 1]
    #[arg(long)]
    pub beta: Option<f64>,
    /// l2 coefficient on touched embeddings [default: 1e-4]
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Lower clamp for corrected probabilities [default: 1e-7]
    #[arg(long)]
    pub clamp_floor: Option<f64>,
}

#[derive(Args, Debug)]
pub struct BudgetArgs {
    /// Optimizer: sgd | adam [default: adam]
    #[arg(long)]
    pub opt: Option<String>,
    /// Learning rate [default: 0.001 for adam, 0.01 for sgd]
    #[arg(long)]
    pub lr: Option<f64>,
    /// Training epochs [default: 30]
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Entries per optimizer step [default: 1024]
    #[arg(long)]
    pub batch_size: Option<usize>,
}

#[derive(Args, Debug)]
pub struct CommonArgs {
    /// Master seed for split, init and sampling [default: 42]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Evaluation cutoffs, comma separated [default: 5,10,20]
    #[arg(long)]
    pub topk: Option<String>,
    /// key=value file supplying defaults for any flag of this command
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Everything `train` and `sweep` share.
#[derive(Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub loss: LossArgs,
    #[command(flatten)]
    pub budget: BudgetArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Args)]
pub struct TrainCmd {
    #[command(flatten)]
    pub fit: FitArgs,
    /// Output directory for artifacts [default: purank-run]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct EvaluateCmd {
    /// Run directory holding manifest.txt and checkpoint.bin
    #[arg(long)]
    pub run: PathBuf,
    /// Override the dataset path recorded in the manifest
    #[arg(long)]
    pub data: Option<String>,
    /// Evaluation cutoffs, comma separated [default: 5,10,20]
    #[arg(long)]
    pub topk: Option<String>,
    /// Directory to also write metrics.tsv into (stdout only if omitted)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct VerifyCmd {
    /// Monte Carlo trials per cell, at least 1000 [default: 2000]
    #[arg(long)]
    pub trials: Option<usize>,
    /// Seed for world construction and resampling [default: 42]
    #[arg(long)]
    pub seed: Option<u64>,
    /// Run a single suite: 1 unbiasedness, 2 consistency, 3 deviation bound
    #[arg(long)]
    pub lemma: Option<u8>,
    /// Ad-hoc bound cell (with --lemma 3): unlabeled draws per entry
    #[arg(long)]
    pub n: Option<usize>,
    /// Ad-hoc bound cell (with --lemma 3): extra positive draws per entry
    #[arg(long)]
    pub m: Option<usize>,
    /// Ad-hoc bound cell (with --lemma 3): class prior tau+
    #[arg(long)]
    pub tau: Option<f64>,
    /// Directory to write lemma.tsv evidence into
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// key=value file supplying defaults for any flag of this command
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args)]
pub struct SweepCmd {
    #[command(flatten)]
    pub fit: FitArgs,
    /// Grid axis KEY=SPEC with KEY in {loss, m, n, tau, beta}; SPEC is a
    /// comma list or start:stop:step. Repeatable, one axis per flag.
    /// Cells with m=0 force tau=0 (no extra positives, no correction).
    #[arg(long)]
    pub grid: Vec<String>,
    /// Output directory for sweep.tsv [default: purank-sweep]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

// ---------------------------------------------------------------------------
// config file overlay
// ---------------------------------------------------------------------------

/// Key=value file with take-out semantics: every key must be consumed by
/// some flag of the running command, leftovers are reported as typos.
pub struct Overlay {
    map: HashMap<String, String>,
    source: String,
}

impl Overlay {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(p) = path else {
            return Ok(Self {
                map: HashMap::new(),
                source: String::new(),
            });
        };
        let text = std::fs::read_to_string(p)
            .map_err(|e| Error::Config(format!("cannot read config '{}': {e}", p.display())))?;
        let mut map = HashMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::Config(format!(
                    "{}:{}: expected key=value, got '{line}'",
                    p.display(),
                    idx + 1
                )));
            };
            map.insert(normalize_key(k.trim()), v.trim().to_string());
        }
        Ok(Self {
            map,
            source: p.display().to_string(),
        })
    }

    /// Flag value if given, else the config value parsed as T, else default.
    pub fn resolve<T>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        Ok(self.resolve_opt(key, flag)?.unwrap_or(default))
    }

    /// Same precedence without a built-in default.
    pub fn resolve_opt<T>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        let file = self.map.remove(&normalize_key(key));
        if flag.is_some() {
            return Ok(flag);
        }
        match file {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|e| Error::Config(format!("{}: key '{key}': {e}", self.source))),
        }
    }

    /// Rejects keys no flag consumed.
    pub fn finish(self) -> Result<()> {
        if let Some(k) = self.map.keys().min() {
            return Err(Error::Config(format!(
                "{}: unknown config key '{k}'",
                self.source
            )));
        }
        Ok(())
    }
}

fn normalize_key(k: &str) -> String {
    k.replace('_', "-").to_ascii_lowercase()
}

/// Parses an enum-like string flag so its error names the flag.
pub fn parse_flag<T>(name: &str, value: &Option<String>) -> Result<Option<T>>
where
    T: FromStr,
    T::Err: std::fmt::Display,
{
    value
        .as_deref()
        .map(|s| {
            s.parse::<T>()
                .map_err(|e| Error::Config(format!("--{name}: {e}")))
        })
        .transpose()
}

pub fn parse_ks(spec: &str) -> Result<Vec<usize>> {
    let mut ks = Vec::new();
    for part in spec.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        ks.push(
            part.parse::<usize>()
                .map_err(|e| Error::Config(format!("bad cutoff '{part}': {e}")))?,
        );
    }
    if ks.is_empty() {
        return Err(Error::Config("topk needs at least one cutoff".into()));
    }
    Ok(ks)
}

/// Returns the dataset path as given, or retried under $PURANK_DATA_DIR for
/// relative paths that do not exist on their own.
pub fn resolve_data_path(given: &str) -> Result<PathBuf> {
    let p = PathBuf::from(given);
    if p.exists() {
        return Ok(p);
    }
    if p.is_relative() {
        if let Ok(dir) = std::env::var("PURANK_DATA_DIR") {
            let q = Path::new(&dir).join(&p);
            if q.exists() {
                return Ok(q);
            }
        }
    }
    Err(Error::Data(format!(
        "dataset '{given}' not found (also tried $PURANK_DATA_DIR)"
    )))
}

// ---------------------------------------------------------------------------
// resolved settings
// ---------------------------------------------------------------------------

pub struct DataSettings {
    pub path: PathBuf,
    pub format: FileFormat,
    pub split: SplitConfig,
}

pub struct TrainSettings {
    pub data: DataSettings,
    pub cfg: TrainConfig64,
    pub ks: Vec<usize>,
    pub out: PathBuf,
}

fn resolve_data_args(args: &DataArgs, seed: u64, ov: &mut Overlay) -> Result<DataSettings> {
    let given = ov.resolve_opt("data", args.data.clone())?.ok_or_else(|| {
        Error::Config("no dataset given: pass --data or set data= in a config".into())
    })?;
    let path = resolve_data_path(&given)?;
    let format: FileFormat =
        ov.resolve("format", parse_flag("format", &args.format)?, FileFormat::Tab)?;
    let mode: SplitMode = ov.resolve(
        "split-mode",
        parse_flag("split-mode", &args.split_mode)?,
        SplitMode::Global,
    )?;
    let split = SplitConfig {
        test_fraction: ov.resolve("test-fraction", args.test_fraction, 0.2)?,
        seed,
        mode,
    };
    split.validate()?;
    Ok(DataSettings {
        path,
        format,
        split,
    })
}

fn resolve_model_args(args: &ModelArgs, ov: &mut Overlay) -> Result<EncoderConfig64> {
    let kind: EncoderKind =
        ov.resolve("model", parse_flag("model", &args.model)?, EncoderKind::Mf)?;
    let mut cfg = EncoderConfig64::new(kind);
    cfg.dim = ov.resolve("dim", args.dim, cfg.dim)?;
    cfg.num_layers = ov.resolve("layers", args.layers, cfg.num_layers)?;
    cfg.score = ov.resolve("score", parse_flag("score", &args.score)?, cfg.score)?;
    cfg.init_scale = ov.resolve("init-scale", args.init_scale, cfg.init_scale)?;
    Ok(cfg)
}

fn resolve_loss_args(args: &LossArgs, ov: &mut Overlay) -> Result<LossConfig64> {
    let kind: LossKind = ov.resolve("loss", parse_flag("loss", &args.loss)?, LossKind::Dpl)?;
    let tau = ov.resolve("tau", args.tau, 0.1)?;
    let mut cfg = LossConfig64::new(kind, ClassPrior64::new(tau)?);
    cfg.m_extra_pos = ov.resolve("m", args.m, cfg.m_extra_pos)?;
    cfg.n_neg = ov.resolve("n", args.n, cfg.n_neg)?;
    cfg.beta = ov.resolve("beta", args.beta, cfg.beta)?;
    cfg.lambda = ov.resolve("lambda", args.lambda, cfg.lambda)?;
    cfg.clamp_floor = ov.resolve("clamp-floor", args.clamp_floor, cfg.clamp_floor)?;
    Ok(cfg)
}

fn resolve_fit(
    fit: &FitArgs,
    out: Option<PathBuf>,
    default_out: &str,
    ov: &mut Overlay,
) -> Result<TrainSettings> {
    let seed = ov.resolve("seed", fit.common.seed, 42)?;
    let data = resolve_data_args(&fit.data, seed, ov)?;
    let encoder = resolve_model_args(&fit.model, ov)?;
    let loss = resolve_loss_args(&fit.loss, ov)?;
    let opt: OptimizerKind = ov.resolve(
        "opt",
        parse_flag("opt", &fit.budget.opt)?,
        OptimizerKind::Adam,
    )?;
    let lr = ov.resolve_opt("lr", fit.budget.lr)?;
    let epochs = ov.resolve("epochs", fit.budget.epochs, 30)?;
    let batch_size = ov.resolve("batch-size", fit.budget.batch_size, 1024)?;
    let ks = parse_ks(&ov.resolve("topk", fit.common.topk.clone(), "5,10,20".to_string())?)?;
    let out: PathBuf = ov.resolve("out", out, PathBuf::from(default_out))?;

    let mut cfg = TrainConfig64::new(encoder, loss, opt);
    if let Some(lr) = lr {
        cfg.lr = lr;
    }
    cfg.epochs = epochs;
    cfg.batch_size = batch_size;
    cfg.seed = seed;
    cfg.validate()?;
    Ok(TrainSettings {
        data,
        cfg,
        ks,
        out,
    })
}

pub fn resolve_train(cmd: &TrainCmd) -> Result<TrainSettings> {
    let mut ov = Overlay::load(cmd.fit.common.config.as_deref())?;
    let settings = resolve_fit(&cmd.fit, cmd.out.clone(), "purank-run", &mut ov)?;
    ov.finish()?;
    Ok(settings)
}

pub struct SweepSettings {
    pub base: TrainSettings,
    /// Raw axis specs; the config file may supply them as `grid=a;b`.
    pub grid: Vec<String>,
}

pub fn resolve_sweep(cmd: &SweepCmd) -> Result<SweepSettings> {
    let mut ov = Overlay::load(cmd.fit.common.config.as_deref())?;
    let grid = if cmd.grid.is_empty() {
        match ov.resolve_opt::<String>("grid", None)? {
            Some(spec) => spec.split(';').map(|s| s.trim().to_string()).collect(),
            None => Vec::new(),
        }
    } else {
        ov.resolve_opt::<String>("grid", None)?;
        cmd.grid.clone()
    };
    let base = resolve_fit(&cmd.fit, cmd.out.clone(), "purank-sweep", &mut ov)?;
    ov.finish()?;
    Ok(SweepSettings { base, grid })
}
