//! Pairwise probability estimators and ranking losses.
//!
//! All losses operate on precomputed scores: each [`ScoredEntry`] holds one
//! anchor positive score, M extra positive scores, and N unlabeled scores.
//!
//! The debiased pairwise loss (DPL) estimates the probability that the anchor
//! beats a true negative by averaging sigmoid pair probabilities against
//! unlabeled and extra-positive samples and applying a class-prior
//! correction, then takes `-ln` of the clamped estimate. The baselines are
//! BPR (sigmoid pairs, unlabeled treated as negative), InfoNCE (softmax over
//! exponentiated scores), DCL (InfoNCE with a prior-corrected denominator),
//! and HCL (DCL with hardness weights on the unlabeled terms).
//!
//! Softmax-style sums are evaluated under a max shift so large scores cannot
//! overflow; sigmoids are evaluated branch-wise so they never divide by an
//! overflowed exponential.

use crate::error::{Error, Result};
use crate::scalar::Real;

// ---------------------------------------------------------------------------
// types
// ---------------------------------------------------------------------------

/// Positive-class prior `tau_plus` with its complement `tau_minus` cached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassPrior<R> {
    tau_plus: R,
    tau_minus: R,
}

impl<R: Real> ClassPrior<R> {
    /// Requires `0 <= tau_plus < 1`. `tau_plus = 1` would zero the corrected
    /// denominator, so it is rejected here once instead of in every kernel.
    pub fn new(tau_plus: R) -> Result<Self> {
        if !tau_plus.is_finite() || tau_plus < R::zero() || tau_plus >= R::one() {
            return Err(Error::Config(format!(
                "tau_plus must lie in [0, 1), got {tau_plus}"
            )));
        }
        Ok(Self {
            tau_plus,
            tau_minus: R::one() - tau_plus,
        })
    }

    pub fn tau_plus(&self) -> R {
        self.tau_plus
    }

    pub fn tau_minus(&self) -> R {
        self.tau_minus
    }
}

/// One batch row of precomputed scores: the anchor positive, M extra
/// positives, N unlabeled.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredEntry<R> {
    anchor: R,
    extra_pos: Vec<R>,
    unlabeled: Vec<R>,
}

impl<R: Real> ScoredEntry<R> {
    /// All scores must be finite. Empty lists are allowed here; each loss
    /// checks the counts it needs.
    pub fn new(anchor: R, extra_pos: Vec<R>, unlabeled: Vec<R>) -> Result<Self> {
        let finite =
            anchor.is_finite() && extra_pos.iter().chain(&unlabeled).all(|s| s.is_finite());
        if !finite {
            return Err(Error::Domain("scores must be finite".into()));
        }
        Ok(Self {
            anchor,
            extra_pos,
            unlabeled,
        })
    }

    pub fn anchor(&self) -> R {
        self.anchor
    }

    pub fn extra_pos(&self) -> &[R] {
        &self.extra_pos
    }

    pub fn unlabeled(&self) -> &[R] {
        &self.unlabeled
    }

    /// Number of extra positive scores (M).
    pub fn m(&self) -> usize {
        self.extra_pos.len()
    }

    /// Number of unlabeled scores (N).
    pub fn n(&self) -> usize {
        self.unlabeled.len()
    }
}

/// Which loss a batch is scored with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    Bpr,
    InfoNce,
    Dcl,
    Hcl,
    Dpl,
}

impl LossKind {
    pub const ALL: [LossKind; 5] = [
        LossKind::Bpr,
        LossKind::InfoNce,
        LossKind::Dcl,
        LossKind::Hcl,
        LossKind::Dpl,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            LossKind::Bpr => "bpr",
            LossKind::InfoNce => "infonce",
            LossKind::Dcl => "dcl",
            LossKind::Hcl => "hcl",
            LossKind::Dpl => "dpl",
        }
    }
}

impl std::fmt::Display for LossKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bpr" => Ok(LossKind::Bpr),
            "infonce" | "info-nce" => Ok(LossKind::InfoNce),
            "dcl" => Ok(LossKind::Dcl),
            "hcl" => Ok(LossKind::Hcl),
            "dpl" => Ok(LossKind::Dpl),
            other => Err(Error::Config(format!("unknown loss kind '{other}'"))),
        }
    }
}

/// Loss hyperparameters. `m_extra_pos` and `n_neg` direct the sampler; the
/// kernels read each entry's actual list lengths.
#[derive(Debug, Clone)]
pub struct LossConfig<R> {
    pub kind: LossKind,
    pub prior: ClassPrior<R>,
    pub m_extra_pos: usize,
    pub n_neg: usize,
    /// Hardness exponent, HCL only.
    pub beta: R,
    /// l2 coefficient applied by the trainer, not by the loss kernels.
    pub lambda: R,
    /// Lower clamp for corrected probabilities and denominators.
    pub clamp_floor: R,
}

impl<R: Real> LossConfig<R> {
    pub fn new(kind: LossKind, prior: ClassPrior<R>) -> Self {
        Self {
            kind,
            prior,
            m_extra_pos: 3,
            n_neg: 3,
            beta: R::one(),
            lambda: R::of(1e-4),
            clamp_floor: R::of(1e-7),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_neg == 0 {
            return Err(Error::Config("n_neg must be at least 1".into()));
        }
        if matches!(self.kind, LossKind::Dpl | LossKind::Dcl | LossKind::Hcl)
            && self.prior.tau_plus() > R::zero()
            && self.m_extra_pos == 0
        {
            return Err(Error::Config(format!(
                "{} with tau_plus > 0 requires m_extra_pos >= 1",
                self.kind
            )));
        }
        if !self.beta.is_finite() || self.beta < R::zero() {
            return Err(Error::Config(format!(
                "beta must be finite and >= 0, got {}",
                self.beta
            )));
        }
        if !self.lambda.is_finite() || self.lambda < R::zero() {
            return Err(Error::Config(format!(
                "lambda must be finite and >= 0, got {}",
                self.lambda
            )));
        }
        let max_floor = R::of(0.1);
        if !(self.clamp_floor > R::zero() && self.clamp_floor <= max_floor) {
            return Err(Error::Config(format!(
                "clamp_floor must lie in (0, 0.1], got {}",
                self.clamp_floor
            )));
        }
        Ok(())
    }
}

/// Loss value for one batch plus clamp diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct BatchLoss<R> {
    pub value: R,
    /// Entries whose corrected probability or denominator hit the clamp.
    pub clamped_entries: usize,
    pub entries: usize,
}

/// Gradient of the batch loss with respect to one entry's scores.
#[derive(Debug, Clone)]
pub struct EntryGrad<R> {
    pub anchor: R,
    pub extra_pos: Vec<R>,
    pub unlabeled: Vec<R>,
}

// ---------------------------------------------------------------------------
// estimators
// ---------------------------------------------------------------------------

/// Numerically safe sigmoid. Never overflows; strictly positive down to the
/// exp underflow limit, but rounds to exactly 1 once z exceeds the scalar
/// type's epsilon threshold (about 37 in f64, 17 in f32).
fn sigmoid<R: Real>(z: R) -> R {
    if z >= R::zero() {
        R::one() / (R::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (R::one() + e)
    }
}

/// d sigmoid(z) / dz = sigmoid(z) (1 - sigmoid(z)).
fn d_sigmoid<R: Real>(z: R) -> R {
    let s = sigmoid(z);
    s * (R::one() - s)
}

/// -ln sigmoid(z), evaluated as softplus(-z) to stay stable for large |z|.
fn neg_ln_sigmoid<R: Real>(z: R) -> R {
    if z >= R::zero() {
        (-z).exp().ln_1p()
    } else {
        -z + z.exp().ln_1p()
    }
}

/// Probability that score `a` beats score `b` under the sigmoid model.
pub fn pair_prob<R: Real>(a: R, b: R) -> Result<R> {
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::Domain(format!(
            "pair_prob requires finite scores, got ({a}, {b})"
        )));
    }
    Ok(sigmoid(a - b))
}

/// Mean pair probability of the anchor against unlabeled scores.
pub fn pu_prob<R: Real>(anchor: R, unlabeled: &[R]) -> Result<R> {
    if unlabeled.is_empty() {
        return Err(Error::Domain("pu_prob needs at least one unlabeled score".into()));
    }
    let mut s = R::zero();
    for &u in unlabeled {
        s += pair_prob(anchor, u)?;
    }
    Ok(s / R::from_count(unlabeled.len()))
}

/// Mean pair probability of the anchor against extra positive scores.
pub fn pp_prob<R: Real>(anchor: R, extra_pos: &[R]) -> Result<R> {
    if extra_pos.is_empty() {
        return Err(Error::Domain("pp_prob needs at least one positive score".into()));
    }
    let mut s = R::zero();
    for &e in extra_pos {
        s += pair_prob(anchor, e)?;
    }
    Ok(s / R::from_count(extra_pos.len()))
}

/// Class-prior correction: converts a positive-vs-unlabeled probability into
/// a positive-vs-negative one. The output is intentionally not clamped; it
/// can leave [0, 1] at small sample sizes, and downstream code decides how to
/// handle that. `ClassPrior` guarantees `tau_minus > 0`.
pub fn pn_correct<R: Real>(p_pu: R, p_pp: R, prior: &ClassPrior<R>) -> R {
    (p_pu - prior.tau_plus() * p_pp) / prior.tau_minus()
}

// ---------------------------------------------------------------------------
// per-entry kernels
// ---------------------------------------------------------------------------

fn require_n<R: Real>(entry: &ScoredEntry<R>, kind: LossKind) -> Result<()> {
    if entry.n() == 0 {
        return Err(Error::Domain(format!(
            "{kind} requires at least one unlabeled score per entry"
        )));
    }
    Ok(())
}

fn require_m_if_corrected<R: Real>(
    entry: &ScoredEntry<R>,
    cfg: &LossConfig<R>,
    kind: LossKind,
) -> Result<()> {
    if cfg.prior.tau_plus() > R::zero() && entry.m() == 0 {
        return Err(Error::Domain(format!(
            "{kind} with tau_plus > 0 requires at least one extra positive score per entry"
        )));
    }
    Ok(())
}

struct EntryTerm<R> {
    /// Entry's contribution before batch averaging. For BPR this is the sum
    /// over its pairs; for the others it is the entry loss.
    value: R,
    grad: EntryGrad<R>,
    clamped: bool,
    pairs: usize,
}

fn zero_grad<R: Real>(entry: &ScoredEntry<R>) -> EntryGrad<R> {
    EntryGrad {
        anchor: R::zero(),
        extra_pos: vec![R::zero(); entry.m()],
        unlabeled: vec![R::zero(); entry.n()],
    }
}

fn bpr_term<R: Real>(entry: &ScoredEntry<R>) -> Result<EntryTerm<R>> {
    require_n(entry, LossKind::Bpr)?;
    let a = entry.anchor();
    let mut grad = zero_grad(entry);
    let mut value = R::zero();
    for (j, &u) in entry.unlabeled().iter().enumerate() {
        let z = a - u;
        value += neg_ln_sigmoid(z);
        let slack = R::one() - sigmoid(z);
        grad.anchor += -slack;
        grad.unlabeled[j] = slack;
    }
    Ok(EntryTerm {
        value,
        grad,
        clamped: false,
        pairs: entry.n(),
    })
}

fn infonce_term<R: Real>(entry: &ScoredEntry<R>) -> Result<EntryTerm<R>> {
    require_n(entry, LossKind::InfoNce)?;
    let a = entry.anchor();
    let c = entry
        .unlabeled()
        .iter()
        .fold(a, |acc, &u| if u > acc { u } else { acc });
    let ea = (a - c).exp();
    let mut denom = ea;
    for &u in entry.unlabeled() {
        denom += (u - c).exp();
    }
    // lse = c + ln(denom); loss = lse - a.
    let value = c + denom.ln() - a;
    let mut grad = zero_grad(entry);
    grad.anchor = ea / denom - R::one();
    for (j, &u) in entry.unlabeled().iter().enumerate() {
        grad.unlabeled[j] = (u - c).exp() / denom;
    }
    Ok(EntryTerm {
        value,
        grad,
        clamped: false,
        pairs: entry.n(),
    })
}

/// Shared denominator logic for DCL and HCL. `weighted` holds each unlabeled
/// term's contribution `w_n * exp(u_n - c)` under the max shift `c`, and
/// `d_weighted[k][j]` is d(weighted_j)/d(u_k) folded to the diagonal plus a
/// correction; HCL's normalization couples the terms, so derivatives of the
/// whole weighted sum per unlabeled score are passed in instead.
struct CorrectedDenom<R> {
    /// g under the max shift: g * exp(-c).
    g_shifted: R,
    /// exp(anchor - c).
    ea: R,
    /// Shared shift.
    c: R,
    clamped: bool,
}

fn corrected_denom<R: Real>(
    entry: &ScoredEntry<R>,
    cfg: &LossConfig<R>,
    weighted_sum_shifted: R,
    c: R,
) -> CorrectedDenom<R> {
    let tau_plus = cfg.prior.tau_plus();
    let tau_minus = cfg.prior.tau_minus();
    let n = R::from_count(entry.n());
    let mut sp = R::zero();
    if tau_plus > R::zero() && entry.m() > 0 {
        for &e in entry.extra_pos() {
            sp += (e - c).exp();
        }
        sp = sp / R::from_count(entry.m());
    }
    let g_shifted = (weighted_sum_shifted - n * tau_plus * sp) / (n * tau_minus);
    // Clamp test in unshifted units: g < floor  <=>  g_shifted < floor*e^-c.
    let floor_shifted = cfg.clamp_floor * (-c).exp();
    let clamped = g_shifted < floor_shifted;
    CorrectedDenom {
        g_shifted,
        ea: (entry.anchor() - c).exp(),
        c,
        clamped,
    }
}

/// Assembles loss and gradients once the (possibly clamped) denominator is
/// known. `d_weighted` maps each unlabeled index to d(weighted sum, shifted
/// by c)/d(u_k); extras and anchor are handled here.
fn denom_loss<R: Real>(
    entry: &ScoredEntry<R>,
    cfg: &LossConfig<R>,
    den: &CorrectedDenom<R>,
    d_weighted: &[R],
) -> EntryTerm<R> {
    let a = entry.anchor();
    let n = R::from_count(entry.n());
    let tau_plus = cfg.prior.tau_plus();
    let tau_minus = cfg.prior.tau_minus();
    let mut grad = zero_grad(entry);

    if den.clamped {
        // g pinned at the floor: only the anchor path stays differentiable.
        // loss = ln(e^a + N*floor) - a, computed via ln1p for stability.
        let t = n * cfg.clamp_floor * (-a).exp();
        let value = t.ln_1p();
        grad.anchor = -t / (R::one() + t);
        return EntryTerm {
            value,
            grad,
            clamped: true,
            pairs: entry.n(),
        };
    }

    // denom_shifted = e^(a-c) + N * g_shifted, all under the shared shift.
    let denom = den.ea + n * den.g_shifted;
    let value = den.c + denom.ln() - a;
    grad.anchor = den.ea / denom - R::one();
    for (k, dw) in d_weighted.iter().enumerate() {
        grad.unlabeled[k] = *dw / (denom * tau_minus);
    }
    if tau_plus > R::zero() && entry.m() > 0 {
        let m = R::from_count(entry.m());
        for (k, &e) in entry.extra_pos().iter().enumerate() {
            grad.extra_pos[k] = -(n * tau_plus * (e - den.c).exp()) / (denom * m * tau_minus);
        }
    }
    EntryTerm {
        value,
        grad,
        clamped: false,
        pairs: entry.n(),
    }
}

fn dcl_term<R: Real>(entry: &ScoredEntry<R>, cfg: &LossConfig<R>) -> Result<EntryTerm<R>> {
    require_n(entry, LossKind::Dcl)?;
    require_m_if_corrected(entry, cfg, LossKind::Dcl)?;
    let c = shared_shift(entry, cfg);
    let mut su = R::zero();
    for &u in entry.unlabeled() {
        su += (u - c).exp();
    }
    let den = corrected_denom(entry, cfg, su, c);
    let d_weighted: Vec<R> = entry.unlabeled().iter().map(|&u| (u - c).exp()).collect();
    Ok(denom_loss(entry, cfg, &den, &d_weighted))
}

fn hcl_term<R: Real>(entry: &ScoredEntry<R>, cfg: &LossConfig<R>) -> Result<EntryTerm<R>> {
    require_n(entry, LossKind::Hcl)?;
    require_m_if_corrected(entry, cfg, LossKind::Hcl)?;
    let beta = cfg.beta;
    let c = shared_shift(entry, cfg);
    // Hardness weights w_n = exp(u_n), normalized so they average to one:
    // omega_n = w_n^beta / mean(w^beta). The weighted sum
    //   sum_n omega_n exp(u_n) = N * S1 / S0,
    // with S1 = sum exp((1+beta)(u_n - d)), S0 = sum exp(beta (u_n - d))
    // under the local shift d = max u_n, stays finite for any scores.
    let d = entry
        .unlabeled()
        .iter()
        .fold(R::neg_infinity(), |acc, &u| if u > acc { u } else { acc });
    let one_plus_beta = R::one() + beta;
    let mut s1 = R::zero();
    let mut s0 = R::zero();
    for &u in entry.unlabeled() {
        let v = u - d;
        s1 += (one_plus_beta * v).exp();
        s0 += (beta * v).exp();
    }
    let n = R::from_count(entry.n());
    // Weighted sum shifted by c: N * e^(d-c) * S1/S0.
    let scale = (d - c).exp();
    let weighted = n * scale * s1 / s0;
    let den = corrected_denom(entry, cfg, weighted, c);
    // d(weighted)/d(u_k) shifted by c:
    //   N e^(d-c) [ (1+beta) e^((1+beta)v_k) S0 - beta e^(beta v_k) S1 ] / S0^2.
    let d_weighted: Vec<R> = entry
        .unlabeled()
        .iter()
        .map(|&u| {
            let v = u - d;
            n * scale * (one_plus_beta * (one_plus_beta * v).exp() * s0
                - beta * (beta * v).exp() * s1)
                / (s0 * s0)
        })
        .collect();
    Ok(denom_loss(entry, cfg, &den, &d_weighted))
}

/// Max over every score an exp() is taken of; keeps all shifted exponentials
/// at or below one.
fn shared_shift<R: Real>(entry: &ScoredEntry<R>, cfg: &LossConfig<R>) -> R {
    let mut c = entry.anchor();
    for &u in entry.unlabeled() {
        if u > c {
            c = u;
        }
    }
    if cfg.prior.tau_plus() > R::zero() {
        for &e in entry.extra_pos() {
            if e > c {
                c = e;
            }
        }
    }
    c
}

fn dpl_term<R: Real>(entry: &ScoredEntry<R>, cfg: &LossConfig<R>) -> Result<EntryTerm<R>> {
    require_n(entry, LossKind::Dpl)?;
    require_m_if_corrected(entry, cfg, LossKind::Dpl)?;
    let a = entry.anchor();
    let tau_plus = cfg.prior.tau_plus();
    let tau_minus = cfg.prior.tau_minus();
    let n = R::from_count(entry.n());
    let correct = tau_plus > R::zero() && entry.m() > 0;

    let p_pu = pu_prob(a, entry.unlabeled())?;
    let p_pp = if correct {
        pp_prob(a, entry.extra_pos())?
    } else {
        R::zero()
    };
    let p = (p_pu - tau_plus * p_pp) / tau_minus;

    let mut grad = zero_grad(entry);
    if p < cfg.clamp_floor || p > R::one() {
        // Clamped plateau: constant loss, exactly zero gradient.
        let clamped = if p < cfg.clamp_floor {
            cfg.clamp_floor
        } else {
            R::one()
        };
        return Ok(EntryTerm {
            value: -clamped.ln(),
            grad,
            clamped: true,
            pairs: entry.n(),
        });
    }

    let value = -p.ln();
    // d(-ln p)/dx = -(1/p) dp/dx.
    let inv = -p.recip();
    let mut dp_da = R::zero();
    for (j, &u) in entry.unlabeled().iter().enumerate() {
        let ds = d_sigmoid(a - u);
        dp_da += ds / (n * tau_minus);
        grad.unlabeled[j] = -inv * ds / (n * tau_minus); // = +ds / (p n tau-)
    }
    if correct {
        let m = R::from_count(entry.m());
        for (k, &e) in entry.extra_pos().iter().enumerate() {
            let ds = d_sigmoid(a - e);
            dp_da = dp_da - tau_plus * ds / (m * tau_minus);
            grad.extra_pos[k] = inv * tau_plus * ds / (m * tau_minus);
        }
    }
    grad.anchor = inv * dp_da;
    Ok(EntryTerm {
        value,
        grad,
        clamped: false,
        pairs: entry.n(),
    })
}

fn entry_term<R: Real>(entry: &ScoredEntry<R>, cfg: &LossConfig<R>) -> Result<EntryTerm<R>> {
    match cfg.kind {
        LossKind::Bpr => bpr_term(entry),
        LossKind::InfoNce => infonce_term(entry),
        LossKind::Dcl => dcl_term(entry, cfg),
        LossKind::Hcl => hcl_term(entry, cfg),
        LossKind::Dpl => dpl_term(entry, cfg),
    }
}

// ---------------------------------------------------------------------------
// batch aggregation
// ---------------------------------------------------------------------------

fn scale_grad<R: Real>(grad: &mut EntryGrad<R>, w: R) {
    grad.anchor = grad.anchor * w;
    for g in &mut grad.extra_pos {
        *g = *g * w;
    }
    for g in &mut grad.unlabeled {
        *g = *g * w;
    }
}

/// Batch loss together with its gradient with respect to every score.
///
/// BPR averages over (entry, unlabeled) pairs; the other losses average over
/// entries. Gradients are of the averaged batch loss.
pub fn batch_loss_grad<R: Real>(
    entries: &[ScoredEntry<R>],
    cfg: &LossConfig<R>,
) -> Result<(BatchLoss<R>, Vec<EntryGrad<R>>)> {
    cfg.validate()?;
    if entries.is_empty() {
        return Err(Error::Domain("empty batch".into()));
    }
    let mut terms = Vec::with_capacity(entries.len());
    let mut total_pairs = 0usize;
    for entry in entries {
        let t = entry_term(entry, cfg)?;
        total_pairs += t.pairs;
        terms.push(t);
    }
    let denom = match cfg.kind {
        LossKind::Bpr => R::from_count(total_pairs),
        _ => R::from_count(entries.len()),
    };
    let w = denom.recip();
    let mut value = R::zero();
    let mut clamped_entries = 0usize;
    let mut grads = Vec::with_capacity(terms.len());
    for mut t in terms {
        value += t.value * w;
        if t.clamped {
            clamped_entries += 1;
        }
        scale_grad(&mut t.grad, w);
        grads.push(t.grad);
    }
    Ok((
        BatchLoss {
            value,
            clamped_entries,
            entries: entries.len(),
        },
        grads,
    ))
}

/// Batch loss without gradients.
pub fn batch_loss<R: Real>(entries: &[ScoredEntry<R>], cfg: &LossConfig<R>) -> Result<BatchLoss<R>> {
    batch_loss_grad(entries, cfg).map(|(l, _)| l)
}

fn with_kind<R: Real>(cfg: &LossConfig<R>, kind: LossKind) -> LossConfig<R> {
    let mut c = cfg.clone();
    c.kind = kind;
    c
}

/// BPR: mean over all (entry, unlabeled) pairs of `-ln sigmoid(anchor - u)`.
pub fn bpr_loss<R: Real>(entries: &[ScoredEntry<R>], cfg: &LossConfig<R>) -> Result<R> {
    batch_loss(entries, &with_kind(cfg, LossKind::Bpr)).map(|l| l.value)
}

/// InfoNCE: mean over entries of `-ln softmax(anchor | anchor, unlabeled)`.
pub fn infonce_loss<R: Real>(entries: &[ScoredEntry<R>], cfg: &LossConfig<R>) -> Result<R> {
    batch_loss(entries, &with_kind(cfg, LossKind::InfoNce)).map(|l| l.value)
}

/// DCL: InfoNCE with the denominator's unlabeled mass replaced by the
/// prior-corrected estimate, clamped below at `clamp_floor`.
pub fn dcl_loss<R: Real>(entries: &[ScoredEntry<R>], cfg: &LossConfig<R>) -> Result<R> {
    batch_loss(entries, &with_kind(cfg, LossKind::Dcl)).map(|l| l.value)
}

/// HCL: DCL with each unlabeled term reweighted by normalized hardness
/// `omega_n = w_n^beta / mean(w^beta)`, `w_n = exp(u_n)`.
pub fn hcl_loss<R: Real>(entries: &[ScoredEntry<R>], cfg: &LossConfig<R>) -> Result<R> {
    batch_loss(entries, &with_kind(cfg, LossKind::Hcl)).map(|l| l.value)
}

/// DPL: mean over entries of `-ln clamp(pn_correct(pu, pp), floor, 1)`.
pub fn dpl_loss<R: Real>(entries: &[ScoredEntry<R>], cfg: &LossConfig<R>) -> Result<R> {
    batch_loss(entries, &with_kind(cfg, LossKind::Dpl)).map(|l| l.value)
}

// ---------------------------------------------------------------------------
// tests
// ---------------------------------------------------------------------------
