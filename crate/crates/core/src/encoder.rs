//! Embedding encoders: seeded initialization, matrix-factorization scoring,
//! LightGCN propagation, the l2 penalty, and checkpoint round-trips.
//!
//! The embedding table is the only trainable state. LightGCN is implemented
//! as a pure function of the table and the interaction graph: K rounds of
//! symmetric-normalized neighbor averaging whose layer outputs are averaged,
//! so `num_layers = 0` is the identity and matrix factorization is the
//! special case that never propagates.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::rng::{stream_rng, streams};
use crate::scalar::Real;

/// Which encoder produced (or should consume) an embedding table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EncoderKind {
    Mf,
    LightGcn,
}

impl EncoderKind {
    pub fn name(&self) -> &'static str {
        match self {
            EncoderKind::Mf => "mf",
            EncoderKind::LightGcn => "lightgcn",
        }
    }
}

impl std::fmt::Display for EncoderKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for EncoderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mf" => Ok(EncoderKind::Mf),
            "lightgcn" => Ok(EncoderKind::LightGcn),
            other => Err(Error::Config(format!("unknown encoder '{other}'"))),
        }
    }
}

/// Score function applied to a (user, item) embedding pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreKind {
    /// Plain inner product; the training score.
    Dot,
    /// Cosine similarity mapped to [0, 1] via (1 + cos)/2; the bounded-score
    /// regime used by the deviation-bound experiments.
    Cosine,
}

impl ScoreKind {
    pub fn name(&self) -> &'static str {
        match self {
            ScoreKind::Dot => "dot",
            ScoreKind::Cosine => "cosine",
        }
    }
}

impl std::fmt::Display for ScoreKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ScoreKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dot" => Ok(ScoreKind::Dot),
            "cosine" => Ok(ScoreKind::Cosine),
            other => Err(Error::Config(format!("unknown score function '{other}'"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EncoderConfig<R> {
    pub kind: EncoderKind,
    pub dim: usize,
    /// Propagation depth K; ignored by MF.
    pub num_layers: usize,
    pub score: ScoreKind,
    /// Standard deviation of the Gaussian initializer.
    pub init_scale: R,
}

impl<R: Real> EncoderConfig<R> {
    pub fn new(kind: EncoderKind) -> Self {
        Self {
            kind,
            dim: 64,
            num_layers: 2,
            score: ScoreKind::Dot,
            init_scale: R::of(0.1),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.dim > 4096 {
            return Err(Error::Config(format!(
                "dim must lie in 1..=4096, got {}",
                self.dim
            )));
        }
        if self.num_layers > 8 {
            return Err(Error::Config(format!(
                "num_layers must lie in 0..=8, got {}",
                self.num_layers
            )));
        }
        if !self.init_scale.is_finite() || self.init_scale <= R::zero() {
            return Err(Error::Config(format!(
                "init_scale must be finite and positive, got {}",
                self.init_scale
            )));
        }
        Ok(())
    }
}

/// Dense user and item embeddings, rows contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable<R> {
    num_users: usize,
    num_items: usize,
    dim: usize,
    users: Vec<R>,
    items: Vec<R>,
}

impl<R: Real> EmbeddingTable<R> {
    pub fn zeros(num_users: usize, num_items: usize, dim: usize) -> Self {
        Self {
            num_users,
            num_items,
            dim,
            users: vec![R::zero(); num_users * dim],
            items: vec![R::zero(); num_items * dim],
        }
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_items(&self) -> usize {
        self.num_items
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn user(&self, u: usize) -> &[R] {
        &self.users[u * self.dim..(u + 1) * self.dim]
    }

    pub fn item(&self, i: usize) -> &[R] {
        &self.items[i * self.dim..(i + 1) * self.dim]
    }

    pub fn user_mut(&mut self, u: usize) -> &mut [R] {
        &mut self.users[u * self.dim..(u + 1) * self.dim]
    }

    pub fn item_mut(&mut self, i: usize) -> &mut [R] {
        &mut self.items[i * self.dim..(i + 1) * self.dim]
    }

    /// Flat views, used by the optimizer and checkpoint writer.
    pub fn users_flat(&self) -> &[R] {
        &self.users
    }

    pub fn items_flat(&self) -> &[R] {
        &self.items
    }
}

/// Seeded Gaussian init, N(0, init_scale^2). Identical seeds give identical
/// tables; draws are made in f64 so f32 and f64 tables see the same stream.
pub fn init_embeddings<R: Real>(
    num_users: usize,
    num_items: usize,
    cfg: &EncoderConfig<R>,
    seed: u64,
) -> Result<EmbeddingTable<R>> {
    cfg.validate()?;
    if num_users == 0 || num_items == 0 {
        return Err(Error::Config(
            "embedding table needs at least one user and one item".into(),
        ));
    }
    let mut rng = stream_rng(seed, streams::INIT);
    let normal = Normal::new(0.0f64, cfg.init_scale.as_f64())
        .map_err(|e| Error::Config(format!("bad init_scale: {e}")))?;
    let mut table = EmbeddingTable::zeros(num_users, num_items, cfg.dim);
    for v in table.users.iter_mut().chain(table.items.iter_mut()) {
        *v = R::of(normal.sample(&mut rng));
    }
    Ok(table)
}

/// User-item interaction graph for propagation. Built from the training
/// positives only.
#[derive(Debug, Clone)]
pub struct BipartiteGraph {
    user_items: Vec<Vec<u32>>,
    item_users: Vec<Vec<u32>>,
}

impl BipartiteGraph {
    pub fn from_train(train_pos: &[Vec<u32>], num_items: usize) -> Self {
        let mut item_users = vec![Vec::new(); num_items];
        for (u, items) in train_pos.iter().enumerate() {
            for &i in items {
                item_users[i as usize].push(u as u32);
            }
        }
        Self {
            user_items: train_pos.to_vec(),
            item_users,
        }
    }

    pub fn num_users(&self) -> usize {
        self.user_items.len()
    }

    pub fn num_items(&self) -> usize {
        self.item_users.len()
    }

    pub fn user_degree(&self, u: usize) -> usize {
        self.user_items[u].len()
    }

    pub fn item_degree(&self, i: usize) -> usize {
        self.item_users[i].len()
    }
}

/// K rounds of symmetric-normalized propagation, output averaged over layers
/// 0..=K. Isolated nodes receive zero from every propagated layer, so they
/// keep their layer-0 embedding scaled by the layer average. `num_layers = 0`
/// returns the input unchanged.
pub fn propagate<R: Real>(
    table: &EmbeddingTable<R>,
    graph: &BipartiteGraph,
    num_layers: usize,
) -> Result<EmbeddingTable<R>> {
    if graph.num_users() != table.num_users() || graph.num_items() != table.num_items() {
        return Err(Error::Domain(format!(
            "graph shape ({}, {}) does not match table shape ({}, {})",
            graph.num_users(),
            graph.num_items(),
            table.num_users(),
            table.num_items()
        )));
    }
    if num_layers == 0 {
        return Ok(table.clone());
    }
    let dim = table.dim();
    let inv_sqrt_u: Vec<R> = (0..graph.num_users())
        .map(|u| inv_sqrt(R::from_count(graph.user_degree(u))))
        .collect();
    let inv_sqrt_i: Vec<R> = (0..graph.num_items())
        .map(|i| inv_sqrt(R::from_count(graph.item_degree(i))))
        .collect();

    let mut acc = table.clone();
    let mut cur = table.clone();
    for _ in 0..num_layers {
        let mut next = EmbeddingTable::zeros(table.num_users(), table.num_items(), dim);
        for u in 0..graph.num_users() {
            let wu = inv_sqrt_u[u];
            for &i in &graph.user_items[u] {
                let w = wu * inv_sqrt_i[i as usize];
                let src = cur.item(i as usize);
                let dst = next.user_mut(u);
                for d in 0..dim {
                    dst[d] += w * src[d];
                }
            }
        }
        for i in 0..graph.num_items() {
            let wi = inv_sqrt_i[i];
            for &u in &graph.item_users[i] {
                let w = wi * inv_sqrt_u[u as usize];
                let src = cur.user(u as usize);
                let dst = next.item_mut(i);
                for d in 0..dim {
                    dst[d] += w * src[d];
                }
            }
        }
        for (a, n) in acc.users.iter_mut().zip(&next.users) {
            *a += *n;
        }
        for (a, n) in acc.items.iter_mut().zip(&next.items) {
            *a += *n;
        }
        cur = next;
    }
    let scale = R::from_count(num_layers + 1).recip();
    for v in acc.users.iter_mut().chain(acc.items.iter_mut()) {
        *v = *v * scale;
    }
    Ok(acc)
}

fn inv_sqrt<R: Real>(deg: R) -> R {
    if deg > R::zero() {
        deg.sqrt().recip()
    } else {
        R::zero()
    }
}

/// Scores one (user, item) pair.
pub fn mf_score<R: Real>(
    table: &EmbeddingTable<R>,
    user: usize,
    item: usize,
    score: ScoreKind,
) -> Result<R> {
    if user >= table.num_users() || item >= table.num_items() {
        return Err(Error::Domain(format!(
            "pair ({user}, {item}) outside table ({}, {})",
            table.num_users(),
            table.num_items()
        )));
    }
    let eu = table.user(user);
    let ei = table.item(item);
    match score {
        ScoreKind::Dot => Ok(dot(eu, ei)),
        ScoreKind::Cosine => cosine01(eu, ei),
    }
}

pub(crate) fn dot<R: Real>(a: &[R], b: &[R]) -> R {
    let mut s = R::zero();
    for (x, y) in a.iter().zip(b) {
        s += *x * *y;
    }
    s
}

/// (1 + cos)/2, in [0, 1]. Zero-norm vectors have no direction.
pub(crate) fn cosine01<R: Real>(a: &[R], b: &[R]) -> Result<R> {
    let na = dot(a, a).sqrt();
    let nb = dot(b, b).sqrt();
    if na == R::zero() || nb == R::zero() {
        return Err(Error::Domain("cosine of a zero-norm embedding".into()));
    }
    let cos = dot(a, b) / (na * nb);
    // Rounding can push |cos| a hair past 1; pin it back before mapping.
    let cos = cos.min(R::one()).max(-R::one());
    Ok((R::one() + cos) / (R::one() + R::one()))
}

/// l2 penalty over the touched embedding set: lambda * sum ||e||^2, each
/// touched row counted once no matter how often it appears.
pub fn l2_penalty<R: Real>(
    table: &EmbeddingTable<R>,
    users: &[u32],
    items: &[u32],
    lambda: R,
) -> R {
    let mut sum = R::zero();
    for u in dedup(users) {
        sum += dot(table.user(u as usize), table.user(u as usize));
    }
    for i in dedup(items) {
        sum += dot(table.item(i as usize), table.item(i as usize));
    }
    lambda * sum
}

fn dedup(ids: &[u32]) -> Vec<u32> {
    let mut v = ids.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

// ---------------------------------------------------------------------------
// checkpoints
// ---------------------------------------------------------------------------

const CHECKPOINT_MAGIC: &[u8; 8] = b"PURANKCP";
const CHECKPOINT_VERSION: u32 = 1;

/// A trained table plus the metadata needed to score with it again.
#[derive(Debug, Clone)]
pub struct Checkpoint<R> {
    pub table: EmbeddingTable<R>,
    pub encoder: EncoderKind,
    pub num_layers: usize,
    pub score: ScoreKind,
    pub seed: u64,
}

/// Binary dump: fixed header, then user rows, then item rows, all values as
/// little-endian f64 bits. Round-trips bit-exactly for f64 tables (and for
/// f32 tables, whose values embed exactly in f64).
pub fn save_checkpoint<R: Real>(path: &Path, ckpt: &Checkpoint<R>) -> Result<()> {
    let t = &ckpt.table;
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    w.write_all(&[match ckpt.encoder {
        EncoderKind::Mf => 0u8,
        EncoderKind::LightGcn => 1u8,
    }])?;
    w.write_all(&[match ckpt.score {
        ScoreKind::Dot => 0u8,
        ScoreKind::Cosine => 1u8,
    }])?;
    w.write_all(&[0u8; 2])?;
    w.write_all(&(ckpt.num_layers as u32).to_le_bytes())?;
    w.write_all(&(t.num_users() as u32).to_le_bytes())?;
    w.write_all(&(t.num_items() as u32).to_le_bytes())?;
    w.write_all(&(t.dim() as u32).to_le_bytes())?;
    w.write_all(&ckpt.seed.to_le_bytes())?;
    for v in t.users_flat().iter().chain(t.items_flat()) {
        w.write_all(&v.as_f64().to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_checkpoint<R: Real>(path: &Path) -> Result<Checkpoint<R>> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)
        .map_err(|_| Error::Artifact("checkpoint too short for header".into()))?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(Error::Artifact("not a checkpoint file (bad magic)".into()));
    }
    let version = read_u32(&mut r)?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Artifact(format!(
            "unsupported checkpoint version {version}"
        )));
    }
    let mut bytes = [0u8; 4];
    r.read_exact(&mut bytes)
        .map_err(|_| Error::Artifact("truncated checkpoint header".into()))?;
    let encoder = match bytes[0] {
        0 => EncoderKind::Mf,
        1 => EncoderKind::LightGcn,
        k => return Err(Error::Artifact(format!("unknown encoder tag {k}"))),
    };
    let score = match bytes[1] {
        0 => ScoreKind::Dot,
        1 => ScoreKind::Cosine,
        k => return Err(Error::Artifact(format!("unknown score tag {k}"))),
    };
    let num_layers = read_u32(&mut r)? as usize;
    let num_users = read_u32(&mut r)? as usize;
    let num_items = read_u32(&mut r)? as usize;
    let dim = read_u32(&mut r)? as usize;
    let mut seed_bytes = [0u8; 8];
    r.read_exact(&mut seed_bytes)
        .map_err(|_| Error::Artifact("truncated checkpoint header".into()))?;
    let seed = u64::from_le_bytes(seed_bytes);
    if num_users == 0 || num_items == 0 || dim == 0 {
        return Err(Error::Artifact("checkpoint header has empty shape".into()));
    }

    let mut table = EmbeddingTable::zeros(num_users, num_items, dim);
    let mut buf = [0u8; 8];
    for v in table.users.iter_mut().chain(table.items.iter_mut()) {
        r.read_exact(&mut buf)
            .map_err(|_| Error::Artifact("checkpoint data truncated".into()))?;
        *v = R::of(f64::from_le_bytes(buf));
    }
    if r.read(&mut buf)? != 0 {
        return Err(Error::Artifact("checkpoint has trailing bytes".into()));
    }
    Ok(Checkpoint {
        table,
        encoder,
        num_layers,
        score,
        seed,
    })
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)
        .map_err(|_| Error::Artifact("truncated checkpoint header".into()))?;
    Ok(u32::from_le_bytes(b))
}

// ---------------------------------------------------------------------------
// tests
// ---------------------------------------------------------------------------
