//! The `train` and `evaluate` commands plus the run manifest they share.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use sha2::{Digest, Sha256};

use purank::data::parse_key_values;
use purank::{
    epochs_tsv, evaluate_split, load_checkpoint, metrics_tsv, parse_dataset, propagate,
    run_training, save_checkpoint, split_holdout, to_implicit, BipartiteGraph, Checkpoint64,
    EncoderKind, Error, FileFormat, ParsedData, Result, SplitConfig, SplitDataset, SplitManifest,
};

use crate::opts::{parse_ks, resolve_data_path, DataSettings, EvaluateCmd, TrainSettings};

pub const CHECKPOINT_FILE: &str = "checkpoint.bin";
pub const MANIFEST_FILE: &str = "manifest.txt";
pub const EPOCHS_FILE: &str = "epochs.tsv";
pub const METRICS_FILE: &str = "metrics.tsv";

/// Dataset identity: enough to notice the file changed under a manifest.
pub struct Fingerprint {
    pub lines: usize,
    pub sha256: String,
}

pub fn fingerprint(path: &Path) -> Result<Fingerprint> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Data(format!("cannot read dataset '{}': {e}", path.display())))?;
    let digest = Sha256::digest(text.as_bytes());
    let mut sha256 = String::with_capacity(64);
    for b in digest {
        let _ = write!(sha256, "{b:02x}");
    }
    Ok(Fingerprint {
        lines: text.lines().count(),
        sha256,
    })
}

/// Everything needed to reproduce a run: resolved configuration, dataset
/// fingerprint, split statistics, artifact names and the final loss.
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub data: String,
    pub format: String,
    pub data_lines: usize,
    pub data_sha256: String,
    pub split: SplitManifest,
    pub model: String,
    pub dim: usize,
    pub layers: usize,
    pub score: String,
    pub init_scale: f64,
    pub loss: String,
    pub tau: f64,
    pub m: usize,
    pub n: usize,
    pub beta: f64,
    pub lambda: f64,
    pub clamp_floor: f64,
    pub opt: String,
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub topk: String,
    pub final_loss: f64,
}

impl RunManifest {
    pub fn of(
        settings: &TrainSettings,
        fp: &Fingerprint,
        split: &SplitManifest,
        final_loss: f64,
    ) -> Self {
        let cfg = &settings.cfg;
        Self {
            command: "train".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            data: settings.data.path.display().to_string(),
            format: settings.data.format.name(),
            data_lines: fp.lines,
            data_sha256: fp.sha256.clone(),
            split: split.clone(),
            model: cfg.encoder.kind.name().into(),
            dim: cfg.encoder.dim,
            layers: cfg.encoder.num_layers,
            score: cfg.encoder.score.name().into(),
            init_scale: cfg.encoder.init_scale,
            loss: cfg.loss.kind.name().into(),
            tau: cfg.loss.prior.tau_plus(),
            m: cfg.loss.m_extra_pos,
            n: cfg.loss.n_neg,
            beta: cfg.loss.beta,
            lambda: cfg.loss.lambda,
            clamp_floor: cfg.loss.clamp_floor,
            opt: cfg.opt.name().into(),
            lr: cfg.lr,
            epochs: cfg.epochs,
            batch_size: cfg.batch_size,
            topk: settings
                .ks
                .iter()
                .map(|k| k.to_string())
                .collect::<Vec<_>>()
                .join(","),
            final_loss,
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "command={}", self.command);
        let _ = writeln!(s, "version={}", self.version);
        let _ = writeln!(s, "data={}", self.data);
        let _ = writeln!(s, "format={}", self.format);
        let _ = writeln!(s, "data_lines={}", self.data_lines);
        let _ = writeln!(s, "data_sha256={}", self.data_sha256);
        s.push_str(&self.split.to_key_values());
        let _ = writeln!(s, "model={}", self.model);
        let _ = writeln!(s, "dim={}", self.dim);
        let _ = writeln!(s, "layers={}", self.layers);
        let _ = writeln!(s, "score={}", self.score);
        let _ = writeln!(s, "init_scale={}", self.init_scale);
        let _ = writeln!(s, "loss={}", self.loss);
        let _ = writeln!(s, "tau={}", self.tau);
        let _ = writeln!(s, "m={}", self.m);
        let _ = writeln!(s, "n={}", self.n);
        let _ = writeln!(s, "beta={}", self.beta);
        let _ = writeln!(s, "lambda={}", self.lambda);
        let _ = writeln!(s, "clamp_floor={}", self.clamp_floor);
        let _ = writeln!(s, "opt={}", self.opt);
        let _ = writeln!(s, "lr={}", self.lr);
        let _ = writeln!(s, "epochs={}", self.epochs);
        let _ = writeln!(s, "batch_size={}", self.batch_size);
        let _ = writeln!(s, "topk={}", self.topk);
        let _ = writeln!(s, "final_loss={}", self.final_loss);
        let _ = writeln!(s, "checkpoint={CHECKPOINT_FILE}");
        let _ = writeln!(s, "epochs_tsv={EPOCHS_FILE}");
        let _ = writeln!(s, "metrics_tsv={METRICS_FILE}");
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let kv = parse_key_values(text)?;
        let split = SplitManifest::parse(text)?;
        let get = |key: &str| -> Result<String> {
            kv.get(key)
                .cloned()
                .ok_or_else(|| Error::Artifact(format!("manifest missing key '{key}'")))
        };
        fn num<T: std::str::FromStr>(key: &str, raw: String) -> Result<T>
        where
            T::Err: std::fmt::Display,
        {
            raw.parse::<T>()
                .map_err(|e| Error::Artifact(format!("manifest key '{key}': {e}")))
        }
        Ok(Self {
            command: get("command")?,
            version: get("version")?,
            data: get("data")?,
            format: get("format")?,
            data_lines: num("data_lines", get("data_lines")?)?,
            data_sha256: get("data_sha256")?,
            split,
            model: get("model")?,
            dim: num("dim", get("dim")?)?,
            layers: num("layers", get("layers")?)?,
            score: get("score")?,
            init_scale: num("init_scale", get("init_scale")?)?,
            loss: get("loss")?,
            tau: num("tau", get("tau")?)?,
            m: num("m", get("m")?)?,
            n: num("n", get("n")?)?,
            beta: num("beta", get("beta")?)?,
            lambda: num("lambda", get("lambda")?)?,
            clamp_floor: num("clamp_floor", get("clamp_floor")?)?,
            opt: get("opt")?,
            lr: num("lr", get("lr")?)?,
            epochs: num("epochs", get("epochs")?)?,
            batch_size: num("batch_size", get("batch_size")?)?,
            topk: get("topk")?,
            final_loss: num("final_loss", get("final_loss")?)?,
        })
    }
}

/// Parse, warn about bad lines, build the implicit split.
pub fn load_split(data: &DataSettings) -> Result<SplitDataset> {
    let parsed = parse_dataset(&data.path, data.format)?;
    warn_malformed(&parsed);
    let implicit = to_implicit(&parsed.interactions);
    split_holdout(&implicit, &data.split)
}

fn warn_malformed(parsed: &ParsedData) {
    if let Some((lineno, reason)) = parsed.malformed.first() {
        eprintln!(
            "warning: skipped {} malformed line(s), first at line {lineno}: {reason}",
            parsed.malformed.len()
        );
    }
}

pub fn cmd_train(settings: &TrainSettings) -> Result<()> {
    let fp = fingerprint(&settings.data.path)?;
    let split = load_split(&settings.data)?;
    eprintln!(
        "split: {} users x {} items, {} train / {} test positives",
        split.num_users(),
        split.num_items(),
        split.train_total(),
        split.test_total()
    );

    let t0 = Instant::now();
    let outcome = run_training(&split, &settings.cfg, &settings.ks)?;
    eprintln!(
        "trained {} epochs in {:.1}s, final loss {:.6}",
        settings.cfg.epochs,
        t0.elapsed().as_secs_f64(),
        outcome.report.final_loss().unwrap_or(f64::NAN)
    );

    std::fs::create_dir_all(&settings.out)?;
    let ckpt = Checkpoint64 {
        table: outcome.table,
        encoder: settings.cfg.encoder.kind,
        num_layers: settings.cfg.encoder.num_layers,
        score: settings.cfg.encoder.score,
        seed: settings.cfg.seed,
    };
    save_checkpoint(&settings.out.join(CHECKPOINT_FILE), &ckpt)?;

    let manifest = RunManifest::of(
        settings,
        &fp,
        &SplitManifest::of(&split),
        outcome.report.final_loss().unwrap_or(f64::NAN),
    );
    std::fs::write(settings.out.join(MANIFEST_FILE), manifest.to_text())?;

    let epochs = epochs_tsv(&outcome.report);
    std::fs::write(settings.out.join(EPOCHS_FILE), &epochs)?;
    let metrics = metrics_tsv(&outcome.eval);
    std::fs::write(settings.out.join(METRICS_FILE), &metrics)?;

    print!("{epochs}");
    println!();
    print!("{metrics}");
    eprintln!("artifacts written to {}", settings.out.display());
    Ok(())
}

pub fn cmd_evaluate(cmd: &EvaluateCmd) -> Result<()> {
    let manifest_path = cmd.run.join(MANIFEST_FILE);
    if !manifest_path.exists() {
        return Err(Error::Artifact(format!(
            "run directory '{}' has no {MANIFEST_FILE}",
            cmd.run.display()
        )));
    }
    let manifest = RunManifest::parse(&std::fs::read_to_string(&manifest_path)?)?;

    let data_path = resolve_data_path(cmd.data.as_deref().unwrap_or(&manifest.data))?;
    let format: FileFormat = manifest.format.parse()?;
    let split_cfg = SplitConfig {
        test_fraction: manifest.split.test_fraction,
        seed: manifest.split.seed,
        mode: manifest.split.mode.parse()?,
    };
    let data = DataSettings {
        path: data_path.clone(),
        format,
        split: split_cfg,
    };
    let split = load_split(&data)?;
    check_split_compat(&split, &manifest.split)?;
    let fp = fingerprint(&data_path)?;
    if fp.sha256 != manifest.data_sha256 {
        return Err(Error::Data(format!(
            "dataset checksum mismatch: manifest has {}, '{}' hashes to {}",
            manifest.data_sha256,
            data_path.display(),
            fp.sha256
        )));
    }

    let ckpt: Checkpoint64 = load_checkpoint(&cmd.run.join(CHECKPOINT_FILE))?;
    if ckpt.table.num_users() != split.num_users() || ckpt.table.num_items() != split.num_items() {
        return Err(Error::Artifact(format!(
            "checkpoint catalog {}x{} is incompatible with the dataset's {}x{}",
            ckpt.table.num_users(),
            ckpt.table.num_items(),
            split.num_users(),
            split.num_items()
        )));
    }

    let table = match ckpt.encoder {
        EncoderKind::Mf => ckpt.table,
        EncoderKind::LightGcn => {
            let graph = BipartiteGraph::from_train(split.train_lists(), split.num_items());
            propagate(&ckpt.table, &graph, ckpt.num_layers)?
        }
    };
    let ks = parse_ks(cmd.topk.as_deref().unwrap_or("5,10,20"))?;
    let report = evaluate_split(&table, ckpt.score, &split, &ks)?;
    let metrics = metrics_tsv(&report);
    print!("{metrics}");
    if let Some(dir) = &cmd.out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(METRICS_FILE), &metrics)?;
    }
    Ok(())
}

fn check_split_compat(split: &SplitDataset, manifest: &SplitManifest) -> Result<()> {
    let fresh = SplitManifest::of(split);
    let mut diffs = Vec::new();
    if fresh.num_users != manifest.num_users {
        diffs.push(format!(
            "users {} != {}",
            fresh.num_users, manifest.num_users
        ));
    }
    if fresh.num_items != manifest.num_items {
        diffs.push(format!(
            "items {} != {}",
            fresh.num_items, manifest.num_items
        ));
    }
    if fresh.train_positives != manifest.train_positives {
        diffs.push(format!(
            "train positives {} != {}",
            fresh.train_positives, manifest.train_positives
        ));
    }
    if fresh.test_positives != manifest.test_positives {
        diffs.push(format!(
            "test positives {} != {}",
            fresh.test_positives, manifest.test_positives
        ));
    }
    if diffs.is_empty() {
        Ok(())
    } else {
        Err(Error::Data(format!(
            "dataset incompatible with the split manifest: {}",
            diffs.join(", ")
        )))
    }
}
