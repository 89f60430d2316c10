//! Mini-batch training loop with sparse optimizers, plus the finite-difference
//! gradient audit the loss kernels are gated on.
//!
//! Batch semantics: gradients from every entry in a batch are accumulated
//! against the embeddings read at the start of the batch, then one optimizer
//! step is applied. Training always scores with the inner product; the
//! bounded cosine score is an evaluation-time view. For the propagation
//! encoder, the propagated table is recomputed once per epoch from the base
//! parameters and treated as constant within the epoch (scores and gradient
//! products read the propagated rows, updates land on the base rows).
//!
//! Epoch e draws everything (plan shuffle, then per-entry sampling in plan
//! order) from one stream, `EPOCH_BASE + e`, so a run is reproducible from
//! the seed alone, bit for bit under a fixed scalar type.

use crate::data::{epoch_plan, sample_entry_anchored, BatchEntry, SplitDataset};
use crate::encoder::{
    dot, init_embeddings, l2_penalty, propagate, BipartiteGraph, EmbeddingTable, EncoderConfig,
    EncoderKind,
};
use crate::error::{Error, Result};
use crate::eval::{evaluate_split, EvalReport};
use crate::loss::{batch_loss_grad, ClassPrior, EntryGrad, LossConfig, LossKind, ScoredEntry};
use crate::rng::{stream_rng, streams};
use crate::scalar::Real;

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

impl OptimizerKind {
    pub fn name(&self) -> &'static str {
        match self {
            OptimizerKind::Sgd => "sgd",
            OptimizerKind::Adam => "adam",
        }
    }

    /// Conventional starting point for each optimizer.
    pub fn default_lr(&self) -> f64 {
        match self {
            OptimizerKind::Sgd => 0.01,
            OptimizerKind::Adam => 0.001,
        }
    }
}

impl std::fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sgd" => Ok(OptimizerKind::Sgd),
            "adam" => Ok(OptimizerKind::Adam),
            other => Err(Error::Config(format!("unknown optimizer '{other}'"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainConfig<R> {
    pub encoder: EncoderConfig<R>,
    pub loss: LossConfig<R>,
    pub opt: OptimizerKind,
    pub lr: R,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl<R: Real> TrainConfig<R> {
    pub fn new(encoder: EncoderConfig<R>, loss: LossConfig<R>, opt: OptimizerKind) -> Self {
        Self {
            encoder,
            loss,
            opt,
            lr: R::of(opt.default_lr()),
            epochs: 30,
            batch_size: 1024,
            seed: 42,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.encoder.validate()?;
        self.loss.validate()?;
        if !self.lr.is_finite() || self.lr < R::zero() {
            return Err(Error::Config(format!(
                "learning rate must be finite and >= 0, got {}",
                self.lr
            )));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        Ok(())
    }
}

/// Per-epoch aggregates. `loss` is the entry-weighted mean of the per-batch
/// objective (kernel mean plus the l2 of rows the batch touched).
#[derive(Debug, Clone)]
pub struct EpochStats<R> {
    pub epoch: usize,
    pub loss: R,
    pub clamped_entries: usize,
    pub entries: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone)]
pub struct TrainReport<R> {
    pub epochs: Vec<EpochStats<R>>,
}

impl<R: Real> TrainReport<R> {
    pub fn final_loss(&self) -> Option<R> {
        self.epochs.last().map(|e| e.loss)
    }
}

/// Tab-separated epoch log.
pub fn epochs_tsv<R: Real>(report: &TrainReport<R>) -> String {
    use std::fmt::Write as _;
    let mut s = String::from("epoch\tloss\tclamped_entries\tentries\tskipped\n");
    for e in &report.epochs {
        let _ = writeln!(
            s,
            "{}\t{}\t{}\t{}\t{}",
            e.epoch, e.loss, e.clamped_entries, e.entries, e.skipped
        );
    }
    s
}

// ---------------------------------------------------------------------------
// batch plumbing shared by the trainer and the gradient audit
// ---------------------------------------------------------------------------

/// Inner-product scores for a batch. Divergence surfaces here: any non-finite
/// score aborts the run rather than poisoning the kernels.
fn score_batch<R: Real>(
    scoring: &EmbeddingTable<R>,
    batch: &[BatchEntry],
) -> Result<Vec<ScoredEntry<R>>> {
    let mut out = Vec::with_capacity(batch.len());
    for b in batch {
        let eu = scoring.user(b.user as usize);
        let anchor = dot(eu, scoring.item(b.anchor_item as usize));
        let extra: Vec<R> = b
            .extra_pos
            .iter()
            .map(|&i| dot(eu, scoring.item(i as usize)))
            .collect();
        let unl: Vec<R> = b
            .unlabeled
            .iter()
            .map(|&i| dot(eu, scoring.item(i as usize)))
            .collect();
        if !anchor.is_finite()
            || extra.iter().any(|s| !s.is_finite())
            || unl.iter().any(|s| !s.is_finite())
        {
            return Err(Error::NonFinite(format!(
                "scores diverged for user {}",
                b.user
            )));
        }
        out.push(ScoredEntry::new(anchor, extra, unl)?);
    }
    Ok(out)
}

fn axpy<R: Real>(dst: &mut [R], a: R, src: &[R]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += a * *s;
    }
}

/// Chain rule from score space into embedding space: for score = <e_u, e_i>,
/// the user row receives g * e_i and the item row g * e_u. Rows are read from
/// `scoring` and accumulated into `gbuf`; the touched id lists come back
/// unsorted and with repeats.
fn scatter<R: Real>(
    scoring: &EmbeddingTable<R>,
    batch: &[BatchEntry],
    grads: &[EntryGrad<R>],
    gbuf: &mut EmbeddingTable<R>,
    touched_users: &mut Vec<u32>,
    touched_items: &mut Vec<u32>,
) {
    for (b, g) in batch.iter().zip(grads) {
        let u = b.user as usize;
        let eu = scoring.user(u);
        touched_users.push(b.user);

        axpy(gbuf.item_mut(b.anchor_item as usize), g.anchor, eu);
        touched_items.push(b.anchor_item);
        for (&i, &gi) in b.extra_pos.iter().zip(&g.extra_pos) {
            axpy(gbuf.item_mut(i as usize), gi, eu);
            touched_items.push(i);
        }
        for (&i, &gi) in b.unlabeled.iter().zip(&g.unlabeled) {
            axpy(gbuf.item_mut(i as usize), gi, eu);
            touched_items.push(i);
        }

        let gu = gbuf.user_mut(u);
        axpy(gu, g.anchor, scoring.item(b.anchor_item as usize));
        for (&i, &gi) in b.extra_pos.iter().zip(&g.extra_pos) {
            axpy(gu, gi, scoring.item(i as usize));
        }
        for (&i, &gi) in b.unlabeled.iter().zip(&g.unlabeled) {
            axpy(gu, gi, scoring.item(i as usize));
        }
    }
}

fn sort_dedup(ids: &mut Vec<u32>) {
    ids.sort_unstable();
    ids.dedup();
}

enum OptState<R> {
    Sgd,
    Adam {
        m: EmbeddingTable<R>,
        v: EmbeddingTable<R>,
        t: u64,
    },
}

impl<R: Real> OptState<R> {
    fn new(opt: OptimizerKind, num_users: usize, num_items: usize, dim: usize) -> Self {
        match opt {
            OptimizerKind::Sgd => OptState::Sgd,
            OptimizerKind::Adam => OptState::Adam {
                m: EmbeddingTable::zeros(num_users, num_items, dim),
                v: EmbeddingTable::zeros(num_users, num_items, dim),
                t: 0,
            },
        }
    }

    /// One optimizer step over the touched rows. Adam keeps one global step
    /// count and updates moments lazily: rows outside the batch keep stale
    /// moments until they are touched again.
    fn step(
        &mut self,
        table: &mut EmbeddingTable<R>,
        gbuf: &EmbeddingTable<R>,
        touched_users: &[u32],
        touched_items: &[u32],
        lr: R,
    ) {
        match self {
            OptState::Sgd => {
                for &u in touched_users {
                    axpy(table.user_mut(u as usize), -lr, gbuf.user(u as usize));
                }
                for &i in touched_items {
                    axpy(table.item_mut(i as usize), -lr, gbuf.item(i as usize));
                }
            }
            OptState::Adam { m, v, t } => {
                *t += 1;
                let bc1 = R::of(1.0 - ADAM_BETA1.powf(*t as f64));
                let bc2 = R::of(1.0 - ADAM_BETA2.powf(*t as f64));
                let b1 = R::of(ADAM_BETA1);
                let b2 = R::of(ADAM_BETA2);
                let eps = R::of(ADAM_EPS);
                for &u in touched_users {
                    adam_row(
                        table.user_mut(u as usize),
                        gbuf.user(u as usize),
                        m.user_mut(u as usize),
                        v.user_mut(u as usize),
                        lr,
                        b1,
                        b2,
                        bc1,
                        bc2,
                        eps,
                    );
                }
                for &i in touched_items {
                    adam_row(
                        table.item_mut(i as usize),
                        gbuf.item(i as usize),
                        m.item_mut(i as usize),
                        v.item_mut(i as usize),
                        lr,
                        b1,
                        b2,
                        bc1,
                        bc2,
                        eps,
                    );
                }
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn adam_row<R: Real>(
    param: &mut [R],
    grad: &[R],
    m: &mut [R],
    v: &mut [R],
    lr: R,
    b1: R,
    b2: R,
    bc1: R,
    bc2: R,
    eps: R,
) {
    let one = R::one();
    for d in 0..param.len() {
        let g = grad[d];
        m[d] = b1 * m[d] + (one - b1) * g;
        v[d] = b2 * v[d] + (one - b2) * g * g;
        let m_hat = m[d] / bc1;
        let v_hat = v[d] / bc2;
        param[d] -= lr * m_hat / (v_hat.sqrt() + eps);
    }
}

// ---------------------------------------------------------------------------
// training
// ---------------------------------------------------------------------------

/// Trains an embedding table on the split's training positives and returns
/// the base parameters with the per-epoch log.
pub fn train<R: Real>(
    split: &SplitDataset,
    cfg: &TrainConfig<R>,
) -> Result<(EmbeddingTable<R>, TrainReport<R>)> {
    cfg.validate()?;
    let num_users = split.num_users();
    let num_items = split.num_items();
    let mut table = init_embeddings(num_users, num_items, &cfg.encoder, cfg.seed)?;
    let graph = match cfg.encoder.kind {
        EncoderKind::LightGcn => Some(BipartiteGraph::from_train(split.train_lists(), num_items)),
        EncoderKind::Mf => None,
    };
    let mut gbuf = EmbeddingTable::<R>::zeros(num_users, num_items, table.dim());
    let mut state = OptState::new(cfg.opt, num_users, num_items, table.dim());
    let m = cfg.loss.m_extra_pos;
    let n = cfg.loss.n_neg;
    let lambda = cfg.loss.lambda;
    let two_lambda = lambda + lambda;

    let mut epochs = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let mut rng = stream_rng(cfg.seed, streams::EPOCH_BASE + epoch as u64);
        let plan = epoch_plan(split, &mut rng);
        let propagated = match (&graph, cfg.encoder.num_layers) {
            (Some(g), layers) => Some(propagate(&table, g, layers)?),
            (None, _) => None,
        };

        let mut loss_sum = R::zero();
        let mut entries_sum = 0usize;
        let mut clamped = 0usize;
        let mut skipped = 0usize;
        let mut touched_users = Vec::new();
        let mut touched_items = Vec::new();

        for chunk in plan.chunks(cfg.batch_size) {
            let mut batch = Vec::with_capacity(chunk.len());
            for &(u, i) in chunk {
                match sample_entry_anchored(split, u, i, m, n, &mut rng) {
                    Some(e) => batch.push(e),
                    None => skipped += 1,
                }
            }
            if batch.is_empty() {
                continue;
            }

            let scoring = propagated.as_ref().unwrap_or(&table);
            let entries = score_batch(scoring, &batch)?;
            let (bl, grads) = batch_loss_grad(&entries, &cfg.loss)?;
            touched_users.clear();
            touched_items.clear();
            scatter(
                scoring,
                &batch,
                &grads,
                &mut gbuf,
                &mut touched_users,
                &mut touched_items,
            );
            sort_dedup(&mut touched_users);
            sort_dedup(&mut touched_items);

            // l2 acts on the base parameters, one term per touched row.
            let mut objective = bl.value;
            if lambda > R::zero() {
                objective += l2_penalty(&table, &touched_users, &touched_items, lambda);
                for &u in &touched_users {
                    axpy(gbuf.user_mut(u as usize), two_lambda, table.user(u as usize));
                }
                for &i in &touched_items {
                    axpy(gbuf.item_mut(i as usize), two_lambda, table.item(i as usize));
                }
            }
            if !objective.is_finite() {
                return Err(Error::NonFinite(format!(
                    "objective diverged in epoch {epoch}"
                )));
            }

            state.step(&mut table, &gbuf, &touched_users, &touched_items, cfg.lr);

            for &u in &touched_users {
                gbuf.user_mut(u as usize).fill(R::zero());
            }
            for &i in &touched_items {
                gbuf.item_mut(i as usize).fill(R::zero());
            }

            loss_sum += objective * R::from_count(bl.entries);
            entries_sum += bl.entries;
            clamped += bl.clamped_entries;
        }

        if entries_sum == 0 {
            return Err(Error::Data(format!(
                "epoch {epoch} produced no trainable entries"
            )));
        }
        for x in table.users_flat().iter().chain(table.items_flat()) {
            if !x.is_finite() {
                return Err(Error::NonFinite(format!(
                    "embeddings diverged after epoch {epoch}"
                )));
            }
        }
        epochs.push(EpochStats {
            epoch: epoch + 1,
            loss: loss_sum / R::from_count(entries_sum),
            clamped_entries: clamped,
            entries: entries_sum,
            skipped,
        });
    }
    Ok((table, TrainReport { epochs }))
}

/// Everything a scoring run produces: trained base parameters, the epoch log
/// and the ranking evaluation (on the propagated table where applicable).
#[derive(Debug, Clone)]
pub struct TrainOutcome<R> {
    pub table: EmbeddingTable<R>,
    pub report: TrainReport<R>,
    pub eval: EvalReport<R>,
}

/// Train, then evaluate with the encoder's score kind.
pub fn run_training<R: Real>(
    split: &SplitDataset,
    cfg: &TrainConfig<R>,
    ks: &[usize],
) -> Result<TrainOutcome<R>> {
    let (table, report) = train(split, cfg)?;
    let eval = match cfg.encoder.kind {
        EncoderKind::Mf => evaluate_split(&table, cfg.encoder.score, split, ks)?,
        EncoderKind::LightGcn => {
            let graph = BipartiteGraph::from_train(split.train_lists(), split.num_items());
            let prop = propagate(&table, &graph, cfg.encoder.num_layers)?;
            evaluate_split(&prop, cfg.encoder.score, split, ks)?
        }
    };
    Ok(TrainOutcome {
        table,
        report,
        eval,
    })
}

// ---------------------------------------------------------------------------
// gradient audit
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct GradCheckRow {
    pub kind: LossKind,
    pub params: usize,
    pub max_rel_err: f64,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub rows: Vec<GradCheckRow>,
    pub tolerance: f64,
    pub step: f64,
}

impl GradCheckReport {
    pub fn pass(&self) -> bool {
        !self.rows.is_empty() && self.rows.iter().all(|r| r.pass)
    }
}

const GRAD_CHECK_TOL: f64 = 1e-4;
const GRAD_CHECK_H: f64 = 1e-5;

/// Audits the analytic gradients of all five losses against central finite
/// differences, through the full pipeline the trainer uses: inner-product
/// scoring, batch kernels, the chain-rule scatter, and the l2 term. Relative
/// error is `|a - f| / max(|a|, |f|, 1e-6)`; every parameter of every touched
/// row must come in under the tolerance. Runs in f64; the mixed entry sizes
/// and the repeated extra-positive exercise accumulation.
pub fn gradient_check(seed: u64) -> Result<GradCheckReport> {
    let mut enc = EncoderConfig::<f64>::new(EncoderKind::Mf);
    enc.dim = 5;
    enc.init_scale = 0.5;
    let table = init_embeddings(4, 6, &enc, seed)?;

    let batch = vec![
        BatchEntry {
            user: 0,
            anchor_item: 0,
            extra_pos: vec![1, 1],
            unlabeled: vec![2, 3],
        },
        BatchEntry {
            user: 1,
            anchor_item: 1,
            extra_pos: vec![0],
            unlabeled: vec![2],
        },
        BatchEntry {
            user: 2,
            anchor_item: 4,
            extra_pos: vec![5],
            unlabeled: vec![0, 1, 3],
        },
    ];

    let mut rows = Vec::new();
    for kind in LossKind::ALL {
        let mut cfg = LossConfig::new(kind, ClassPrior::new(0.2)?);
        cfg.beta = 1.5;
        cfg.lambda = 1e-4;
        let err = audit_kind(&table, &batch, &cfg)?;
        rows.push(GradCheckRow {
            kind,
            params: err.1,
            max_rel_err: err.0,
            pass: err.0 < GRAD_CHECK_TOL,
        });
    }
    Ok(GradCheckReport {
        rows,
        tolerance: GRAD_CHECK_TOL,
        step: GRAD_CHECK_H,
    })
}

fn objective(
    table: &EmbeddingTable<f64>,
    batch: &[BatchEntry],
    cfg: &LossConfig<f64>,
    tu: &[u32],
    ti: &[u32],
) -> Result<f64> {
    let entries = score_batch(table, batch)?;
    let (bl, _) = batch_loss_grad(&entries, cfg)?;
    Ok(bl.value + l2_penalty(table, tu, ti, cfg.lambda))
}

fn audit_kind(
    table: &EmbeddingTable<f64>,
    batch: &[BatchEntry],
    cfg: &LossConfig<f64>,
) -> Result<(f64, usize)> {
    let entries = score_batch(table, batch)?;
    let (_, grads) = batch_loss_grad(&entries, cfg)?;
    let mut gbuf = EmbeddingTable::<f64>::zeros(table.num_users(), table.num_items(), table.dim());
    let mut tu = Vec::new();
    let mut ti = Vec::new();
    scatter(table, batch, &grads, &mut gbuf, &mut tu, &mut ti);
    sort_dedup(&mut tu);
    sort_dedup(&mut ti);
    for &u in &tu {
        axpy(gbuf.user_mut(u as usize), 2.0 * cfg.lambda, table.user(u as usize));
    }
    for &i in &ti {
        axpy(gbuf.item_mut(i as usize), 2.0 * cfg.lambda, table.item(i as usize));
    }

    let mut max_rel = 0.0f64;
    let mut params = 0usize;
    let dim = table.dim();
    let mut probe = table.clone();
    for &u in &tu {
        for d in 0..dim {
            let analytic = gbuf.user(u as usize)[d];
            let base = table.user(u as usize)[d];
            probe.user_mut(u as usize)[d] = base + GRAD_CHECK_H;
            let plus = objective(&probe, batch, cfg, &tu, &ti)?;
            probe.user_mut(u as usize)[d] = base - GRAD_CHECK_H;
            let minus = objective(&probe, batch, cfg, &tu, &ti)?;
            probe.user_mut(u as usize)[d] = base;
            max_rel = max_rel.max(rel_err(analytic, (plus - minus) / (2.0 * GRAD_CHECK_H)));
            params += 1;
        }
    }
    for &i in &ti {
        for d in 0..dim {
            let analytic = gbuf.item(i as usize)[d];
            let base = table.item(i as usize)[d];
            probe.item_mut(i as usize)[d] = base + GRAD_CHECK_H;
            let plus = objective(&probe, batch, cfg, &tu, &ti)?;
            probe.item_mut(i as usize)[d] = base - GRAD_CHECK_H;
            let minus = objective(&probe, batch, cfg, &tu, &ti)?;
            probe.item_mut(i as usize)[d] = base;
            max_rel = max_rel.max(rel_err(analytic, (plus - minus) / (2.0 * GRAD_CHECK_H)));
            params += 1;
        }
    }
    Ok((max_rel, params))
}

fn rel_err(a: f64, f: f64) -> f64 {
    (a - f).abs() / a.abs().max(f.abs()).max(1e-6)
}

/// One TSV row per loss kind.
pub fn grad_check_tsv(report: &GradCheckReport) -> String {
    use std::fmt::Write as _;
    let mut s = String::from("loss\tparams\tmax_rel_err\ttolerance\tpass\n");
    for r in &report.rows {
        let _ = writeln!(
            s,
            "{}\t{}\t{}\t{}\t{}",
            r.kind,
            r.params,
            r.max_rel_err,
            report.tolerance,
            if r.pass { "pass" } else { "FAIL" }
        );
    }
    s
}

// ---------------------------------------------------------------------------
// tests
// ---------------------------------------------------------------------------
