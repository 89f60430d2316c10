//! Synthetic verification benchmark for the debiasing estimator.
//!
//! A [`SyntheticWorld`] is a finite scoring universe: one anchor score, a
//! finite set of positive-class scores, a finite set of negative-class
//! scores, and a class prior. Because the universe is finite, the exact
//! expectations the estimator is supposed to recover are computable by
//! enumeration, so three properties become checkable experiments:
//!
//! 1. unbiasedness: the Monte Carlo mean of the uncorrected estimate matches
//!    the enumerated expectation within sampling error;
//! 2. consistency: the corrected-loss gap to the supervised objective
//!    shrinks as the per-entry sample sizes grow;
//! 3. concentration: the p99 loss gap stays below the analytic deviation
//!    bound, and quadrupling the sample size roughly halves the gap.
//!
//! Estimates are produced by the same public scoring functions the training
//! loop uses; only the exact expectations are computed here.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::loss::{dpl_loss, ClassPrior, LossConfig, LossKind, ScoredEntry};
use crate::rng::{stream_rng, streams};

/// Sampling statistics run in f64 regardless of the training scalar type.
pub type Score = f64;

#[derive(Debug, Clone)]
pub struct SyntheticWorld {
    anchor: Score,
    pos_scores: Vec<Score>,
    neg_scores: Vec<Score>,
    prior: ClassPrior<Score>,
}

impl SyntheticWorld {
    pub fn new(
        anchor: Score,
        pos_scores: Vec<Score>,
        neg_scores: Vec<Score>,
        tau_plus: Score,
    ) -> Result<Self> {
        if pos_scores.is_empty() || neg_scores.is_empty() {
            return Err(Error::Config(
                "a world needs at least one positive and one negative score".into(),
            ));
        }
        for s in pos_scores
            .iter()
            .chain(neg_scores.iter())
            .chain(std::iter::once(&anchor))
        {
            if !s.is_finite() {
                return Err(Error::Config("world scores must be finite".into()));
            }
        }
        Ok(Self {
            anchor,
            pos_scores,
            neg_scores,
            prior: ClassPrior::new(tau_plus)?,
        })
    }

    /// Draws a world with anchor and scores uniform on (-1, 1). Score
    /// differences then stay in (-2, 2), keeping the exact expectation well
    /// away from the clamp floor.
    pub fn random(
        num_pos: usize,
        num_neg: usize,
        tau_plus: Score,
        seed: u64,
        world_id: u64,
    ) -> Result<Self> {
        let mut rng = stream_rng(seed, streams::WORLD_BASE + world_id);
        let anchor = rng.gen_range(-1.0..1.0);
        let pos_scores = (0..num_pos).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let neg_scores = (0..num_neg).map(|_| rng.gen_range(-1.0..1.0)).collect();
        Self::new(anchor, pos_scores, neg_scores, tau_plus)
    }

    pub fn anchor(&self) -> Score {
        self.anchor
    }

    pub fn prior(&self) -> &ClassPrior<Score> {
        &self.prior
    }

    fn sigma_mean(&self, scores: &[Score]) -> Score {
        let s: Score = scores
            .iter()
            .map(|x| 1.0 / (1.0 + (-(self.anchor - x)).exp()))
            .sum();
        s / scores.len() as Score
    }

    /// Enumerated expectation of a pairwise win against a positive-class item.
    pub fn exact_pp(&self) -> Score {
        self.sigma_mean(&self.pos_scores)
    }

    /// Enumerated expectation of a pairwise win against an unlabeled item
    /// (mixture of both classes under the prior).
    pub fn exact_pu(&self) -> Score {
        self.prior.tau_plus() * self.exact_pp()
            + self.prior.tau_minus() * self.sigma_mean(&self.neg_scores)
    }

    /// Draws one scored entry: `n` unlabeled scores from the class mixture
    /// and `m` extra-positive scores from the positive class.
    pub fn draw_entry<G: Rng>(&self, m: usize, n: usize, rng: &mut G) -> ScoredEntry<Score> {
        let tau = self.prior.tau_plus();
        let unlabeled = (0..n)
            .map(|_| {
                if tau > 0.0 && rng.gen_bool(tau) {
                    self.pos_scores[rng.gen_range(0..self.pos_scores.len())]
                } else {
                    self.neg_scores[rng.gen_range(0..self.neg_scores.len())]
                }
            })
            .collect();
        let extra = (0..m)
            .map(|_| self.pos_scores[rng.gen_range(0..self.pos_scores.len())])
            .collect();
        ScoredEntry::new(self.anchor, extra, unlabeled)
            .expect("world scores are finite by construction")
    }
}

/// The quantity the correction is meant to recover: the enumerated
/// expectation of a pairwise win against a true negative.
pub fn exact_pn_expectation(world: &SyntheticWorld) -> Score {
    world.sigma_mean(&world.neg_scores)
}

/// The supervised skyline the corrected loss converges to.
pub fn exact_supervised_objective(world: &SyntheticWorld) -> Score {
    -exact_pn_expectation(world).ln()
}

/// Analytic deviation envelope for the loss gap at per-entry sample sizes
/// (n, m) and prior tau: e^2 sqrt(2 pi / n) + e^2 tau sqrt(2 pi / m).
pub fn deviation_bound(n: usize, m: usize, tau_plus: Score) -> Score {
    let e2 = std::f64::consts::E * std::f64::consts::E;
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut b = e2 * (two_pi / n as Score).sqrt();
    if tau_plus > 0.0 {
        b += e2 * tau_plus * (two_pi / m as Score).sqrt();
    }
    b
}

// ---------------------------------------------------------------------------
// experiment rows
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct UnbiasedRow {
    pub world: u64,
    pub tau: Score,
    pub m: usize,
    pub n: usize,
    pub trials: usize,
    pub exact: Score,
    pub mc_mean: Score,
    pub std_err: Score,
    pub z: Score,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct ConsistencyRow {
    pub size: usize,
    pub trials: usize,
    pub estimator_gap: Score,
    pub loss_gap: Score,
    pub clamps: usize,
    pub nonpositive: usize,
}

#[derive(Debug, Clone)]
pub struct ConsistencyOutcome {
    pub rows: Vec<ConsistencyRow>,
    pub final_gap_below: Score,
    /// Loss gap at the largest size is under the threshold.
    pub final_gap_ok: bool,
    /// Loss gap at the largest size is below the gap at size one.
    pub shrinks: bool,
    /// Every clamped trial had a non-positive raw estimate, and the largest
    /// size clamped nothing.
    pub clamp_ok: bool,
}

impl ConsistencyOutcome {
    pub fn pass(&self) -> bool {
        self.final_gap_ok && self.shrinks && self.clamp_ok
    }
}

#[derive(Debug, Clone)]
pub struct BoundRow {
    pub tau: Score,
    pub n: usize,
    pub m: usize,
    pub trials: usize,
    pub mean_gap: Score,
    pub p99_gap: Score,
    pub bound: Score,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct RatioRow {
    pub tau: Score,
    pub size_small: usize,
    pub size_large: usize,
    pub ratio: Score,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct LemmaReport {
    pub trials: usize,
    pub seed: u64,
    pub unbiasedness: Vec<UnbiasedRow>,
    pub consistency: ConsistencyOutcome,
    pub bounds: Vec<BoundRow>,
    pub ratios: Vec<RatioRow>,
}

impl LemmaReport {
    pub fn unbiasedness_pass(&self) -> bool {
        !self.unbiasedness.is_empty() && self.unbiasedness.iter().all(|r| r.pass)
    }

    pub fn consistency_pass(&self) -> bool {
        self.consistency.pass()
    }

    pub fn bound_pass(&self) -> bool {
        !self.bounds.is_empty()
            && self.bounds.iter().all(|r| r.pass)
            && !self.ratios.is_empty()
            && self.ratios.iter().all(|r| r.pass)
    }

    pub fn all_pass(&self) -> bool {
        self.unbiasedness_pass() && self.consistency_pass() && self.bound_pass()
    }
}

// ---------------------------------------------------------------------------
// battery layout (frozen; stream ids depend on the ordering below)
// ---------------------------------------------------------------------------

const UNBIASED_WORLDS: &[(Score, usize, usize)] = &[(0.2, 6, 7), (0.5, 5, 5)];
const UNBIASED_SIZES: &[(usize, usize)] = &[(1, 1), (4, 2)]; // (m, n)
const CONSISTENCY_TAU: Score = 0.3;
const CONSISTENCY_SIZES: &[usize] = &[1, 10, 100, 1000, 10_000];
const CONSISTENCY_GAP_MAX: Score = 0.01;
const BOUND_TAUS: &[Score] = &[0.0, 0.25, 0.5];
const BOUND_SIZES: &[usize] = &[100, 400, 1600];
const RATIO_WINDOW: (Score, Score) = (0.35, 0.7);
const Z_LIMIT: Score = 3.0;

const WORLD_CONSISTENCY: u64 = 2;
const WORLD_BOUND_BASE: u64 = 10;

fn trial_rng(seed: u64, cell: u64) -> rand_chacha::ChaCha8Rng {
    stream_rng(seed, streams::TRIAL_BASE + cell)
}

fn dpl_config(world: &SyntheticWorld) -> LossConfig<Score> {
    LossConfig::new(LossKind::Dpl, world.prior().clone())
}

/// Monte Carlo check that the uncorrected estimate is centered on the
/// enumerated expectation: |z| of the trial mean stays within 3.
pub fn unbiasedness_experiment(trials: usize, seed: u64) -> Result<Vec<UnbiasedRow>> {
    require_trials(trials)?;
    let mut rows = Vec::new();
    let mut cell = 0u64;
    for (w_idx, &(tau, num_pos, num_neg)) in UNBIASED_WORLDS.iter().enumerate() {
        let world = SyntheticWorld::random(num_pos, num_neg, tau, seed, w_idx as u64)?;
        let exact = exact_pn_expectation(&world);
        for &(m, n) in UNBIASED_SIZES {
            let mut rng = trial_rng(seed, cell);
            cell += 1;
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for _ in 0..trials {
                let entry = world.draw_entry(m, n, &mut rng);
                let pn = raw_pn(&world, &entry)?;
                sum += pn;
                sum_sq += pn * pn;
            }
            let mean = sum / trials as Score;
            let var = (sum_sq / trials as Score - mean * mean).max(0.0);
            let std_err = (var / trials as Score).sqrt();
            let z = if std_err > 0.0 {
                (mean - exact) / std_err
            } else {
                0.0
            };
            rows.push(UnbiasedRow {
                world: w_idx as u64,
                tau,
                m,
                n,
                trials,
                exact,
                mc_mean: mean,
                std_err,
                z,
                pass: z.abs() <= Z_LIMIT,
            });
        }
    }
    Ok(rows)
}

/// Raw (unclamped) corrected estimate through the public scoring functions.
fn raw_pn(world: &SyntheticWorld, entry: &ScoredEntry<Score>) -> Result<Score> {
    let p_pu = crate::loss::pu_prob(entry.anchor(), entry.unlabeled())?;
    let p_pp = if entry.m() > 0 {
        crate::loss::pp_prob(entry.anchor(), entry.extra_pos())?
    } else {
        0.0
    };
    Ok(crate::loss::pn_correct(p_pu, p_pp, world.prior()))
}

/// Loss-gap decay as the per-entry sample sizes grow along m = n.
pub fn consistency_experiment(trials: usize, seed: u64) -> Result<ConsistencyOutcome> {
    require_trials(trials)?;
    let world = SyntheticWorld::random(8, 8, CONSISTENCY_TAU, seed, WORLD_CONSISTENCY)?;
    let exact_pn = exact_pn_expectation(&world);
    let exact_loss = exact_supervised_objective(&world);
    let cfg = dpl_config(&world);
    let floor = cfg.clamp_floor;

    let base_cell = 100u64;
    let rows: Vec<ConsistencyRow> = CONSISTENCY_SIZES
        .par_iter()
        .enumerate()
        .map(|(idx, &size)| -> Result<ConsistencyRow> {
            let mut rng = trial_rng(seed, base_cell + idx as u64);
            let mut est_gap = 0.0;
            let mut loss_gap = 0.0;
            let mut clamps = 0usize;
            let mut nonpositive = 0usize;
            for _ in 0..trials {
                let entry = world.draw_entry(size, size, &mut rng);
                let pn = raw_pn(&world, &entry)?;
                if pn < floor {
                    clamps += 1;
                }
                if pn <= 0.0 {
                    nonpositive += 1;
                }
                let loss = dpl_loss(std::slice::from_ref(&entry), &cfg)?;
                est_gap += (pn - exact_pn).abs();
                loss_gap += (loss - exact_loss).abs();
            }
            Ok(ConsistencyRow {
                size,
                trials,
                estimator_gap: est_gap / trials as Score,
                loss_gap: loss_gap / trials as Score,
                clamps,
                nonpositive,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let first = rows.first().expect("sizes are fixed and non-empty");
    let last = rows.last().expect("sizes are fixed and non-empty");
    let final_gap_ok = last.loss_gap < CONSISTENCY_GAP_MAX;
    let shrinks = last.loss_gap < first.loss_gap;
    let clamp_ok = rows.iter().all(|r| r.clamps == r.nonpositive) && last.clamps == 0;
    Ok(ConsistencyOutcome {
        rows,
        final_gap_below: CONSISTENCY_GAP_MAX,
        final_gap_ok,
        shrinks,
        clamp_ok,
    })
}

/// Concentration against the analytic envelope over a grid of sizes and
/// priors, plus the quadrupling-ratio sanity check along the diagonal.
pub fn bound_check_experiment(trials: usize, seed: u64) -> Result<(Vec<BoundRow>, Vec<RatioRow>)> {
    require_trials(trials)?;
    struct Cell {
        tau: Score,
        world_id: u64,
        n: usize,
        m: usize,
        cell: u64,
    }
    let mut cells = Vec::new();
    let mut cell_id = 200u64;
    for (t_idx, &tau) in BOUND_TAUS.iter().enumerate() {
        for &n in BOUND_SIZES {
            for &m in BOUND_SIZES {
                cells.push(Cell {
                    tau,
                    world_id: WORLD_BOUND_BASE + t_idx as u64,
                    n,
                    m,
                    cell: cell_id,
                });
                cell_id += 1;
            }
        }
    }

    let rows: Vec<BoundRow> = cells
        .par_iter()
        .map(|c| bound_cell(c.n, c.m, c.tau, trials, seed, c.world_id, c.cell))
        .collect::<Result<Vec<_>>>()?;

    // Quadrupling n (with m = n) should roughly halve the p99 gap.
    let mut ratios = Vec::new();
    for &tau in BOUND_TAUS {
        for w in BOUND_SIZES.windows(2) {
            let (small, large) = (w[0], w[1]);
            let find = |sz: usize| {
                rows.iter()
                    .find(|r| r.tau == tau && r.n == sz && r.m == sz)
                    .expect("diagonal cell exists by construction")
            };
            let ratio = find(large).p99_gap / find(small).p99_gap;
            ratios.push(RatioRow {
                tau,
                size_small: small,
                size_large: large,
                ratio,
                pass: ratio >= RATIO_WINDOW.0 && ratio <= RATIO_WINDOW.1,
            });
        }
    }
    Ok((rows, ratios))
}

fn require_trials(trials: usize) -> Result<()> {
    if trials == 0 {
        return Err(Error::Config("trial count must be positive".into()));
    }
    Ok(())
}

/// Measures one deviation-bound cell: p99 of |single-draw loss - exact loss|
/// against the analytic bound for (n, m, tau). `world_id` and `cell` pick the
/// random world and the trial stream, so ad-hoc cells stay reproducible.
pub fn bound_cell(
    n: usize,
    m: usize,
    tau: Score,
    trials: usize,
    seed: u64,
    world_id: u64,
    cell: u64,
) -> Result<BoundRow> {
    require_trials(trials)?;
    if n == 0 {
        return Err(Error::Config("bound cell needs n >= 1".into()));
    }
    if tau > 0.0 && m == 0 {
        return Err(Error::Config("bound cell needs m >= 1 when tau > 0".into()));
    }
    let world = SyntheticWorld::random(8, 8, tau, seed, world_id)?;
    let exact_loss = exact_supervised_objective(&world);
    let cfg = dpl_config(&world);
    let mut rng = trial_rng(seed, cell);
    let mut gaps = Vec::with_capacity(trials);
    let mut sum = 0.0;
    for _ in 0..trials {
        let entry = world.draw_entry(m, n, &mut rng);
        let loss = dpl_loss(std::slice::from_ref(&entry), &cfg)?;
        let gap = (loss - exact_loss).abs();
        sum += gap;
        gaps.push(gap);
    }
    gaps.sort_unstable_by(|a, b| a.partial_cmp(b).expect("gaps are finite"));
    let idx = ((0.99 * trials as Score).ceil() as usize).clamp(1, trials) - 1;
    let p99 = gaps[idx];
    let bound = deviation_bound(n, m, tau);
    Ok(BoundRow {
        tau,
        n,
        m,
        trials,
        mean_gap: sum / trials as Score,
        p99_gap: p99,
        bound,
        pass: p99 <= bound,
    })
}

/// Runs all three experiments with a shared seed and trial budget.
pub fn run_lemma_battery(trials: usize, seed: u64) -> Result<LemmaReport> {
    let unbiasedness = unbiasedness_experiment(trials, seed)?;
    let consistency = consistency_experiment(trials, seed)?;
    let (bounds, ratios) = bound_check_experiment(trials, seed)?;
    Ok(LemmaReport {
        trials,
        seed,
        unbiasedness,
        consistency,
        bounds,
        ratios,
    })
}

/// Column header shared by all verification TSV emitters.
pub const LEMMA_TSV_HEADER: &str = "section\ttau\tm\tn\ttrials\tmetric\tvalue\ttarget\tpass\n";

/// Long-format TSV: one row per measured quantity.
pub fn lemma_tsv(report: &LemmaReport) -> String {
    use std::fmt::Write as _;
    let mut s = String::from(LEMMA_TSV_HEADER);
    s.push_str(&unbiasedness_tsv_rows(&report.unbiasedness));
    s.push_str(&consistency_tsv_rows(&report.consistency));
    s.push_str(&bound_tsv_rows(&report.bounds, &report.ratios));
    let _ = writeln!(
        s,
        "summary\t-\t-\t-\t{}\tall_pass\t-\t-\t{}",
        report.trials,
        pass_str(report.all_pass())
    );
    s
}

/// Body rows (no header) for the unbiasedness suite.
pub fn unbiasedness_tsv_rows(rows: &[UnbiasedRow]) -> String {
    use std::fmt::Write as _;
    let mut s = String::new();
    for r in rows {
        let _ = writeln!(
            s,
            "unbiasedness\t{}\t{}\t{}\t{}\texact\t{}\t-\t-",
            r.tau, r.m, r.n, r.trials, r.exact
        );
        let _ = writeln!(
            s,
            "unbiasedness\t{}\t{}\t{}\t{}\tmc_mean\t{}\t-\t-",
            r.tau, r.m, r.n, r.trials, r.mc_mean
        );
        let _ = writeln!(
            s,
            "unbiasedness\t{}\t{}\t{}\t{}\tabs_z\t{}\t<={}\t{}",
            r.tau,
            r.m,
            r.n,
            r.trials,
            r.z.abs(),
            Z_LIMIT,
            pass_str(r.pass)
        );
    }
    s
}

/// Body rows (no header) for the consistency suite.
pub fn consistency_tsv_rows(c: &ConsistencyOutcome) -> String {
    use std::fmt::Write as _;
    let mut s = String::new();
    for r in &c.rows {
        let _ = writeln!(
            s,
            "consistency\t{}\t{}\t{}\t{}\tloss_gap\t{}\t-\t-",
            CONSISTENCY_TAU, r.size, r.size, r.trials, r.loss_gap
        );
        let _ = writeln!(
            s,
            "consistency\t{}\t{}\t{}\t{}\testimator_gap\t{}\t-\t-",
            CONSISTENCY_TAU, r.size, r.size, r.trials, r.estimator_gap
        );
        let _ = writeln!(
            s,
            "consistency\t{}\t{}\t{}\t{}\tclamps\t{}\t-\t-",
            CONSISTENCY_TAU, r.size, r.size, r.trials, r.clamps
        );
    }
    let _ = writeln!(
        s,
        "consistency\t{}\t-\t-\t-\tfinal_gap_ok\t{}\t<{}\t{}",
        CONSISTENCY_TAU,
        c.rows.last().map(|r| r.loss_gap).unwrap_or(f64::NAN),
        c.final_gap_below,
        pass_str(c.final_gap_ok)
    );
    let _ = writeln!(
        s,
        "consistency\t{}\t-\t-\t-\tshrinks\t-\t-\t{}",
        CONSISTENCY_TAU,
        pass_str(c.shrinks)
    );
    let _ = writeln!(
        s,
        "consistency\t{}\t-\t-\t-\tclamp_ok\t-\t-\t{}",
        CONSISTENCY_TAU,
        pass_str(c.clamp_ok)
    );
    s
}

/// Body rows (no header) for the deviation-bound suite.
pub fn bound_tsv_rows(bounds: &[BoundRow], ratios: &[RatioRow]) -> String {
    use std::fmt::Write as _;
    let mut s = String::new();
    for r in bounds {
        let _ = writeln!(
            s,
            "bound\t{}\t{}\t{}\t{}\tp99_gap\t{}\t<={}\t{}",
            r.tau,
            r.m,
            r.n,
            r.trials,
            r.p99_gap,
            r.bound,
            pass_str(r.pass)
        );
    }
    for r in ratios {
        let _ = writeln!(
            s,
            "bound\t{}\t{}\t{}\t-\tp99_ratio\t{}\t{}..{}\t{}",
            r.tau,
            r.size_small,
            r.size_large,
            r.ratio,
            RATIO_WINDOW.0,
            RATIO_WINDOW.1,
            pass_str(r.pass)
        );
    }
    s
}

fn pass_str(b: bool) -> &'static str {
    if b {
        "pass"
    } else {
        "FAIL"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn world(tau: Score) -> SyntheticWorld {
        SyntheticWorld::new(
            0.25,
            vec![0.6, -0.1, 0.3],
            vec![-0.4, 0.1, -0.8, 0.5],
            tau,
        )
        .unwrap()
    }

    #[test]
    fn debiasing_identity_holds_exactly() {
        // (E_pu - tau * E_pp) / (1 - tau) equals the negative-class mean by
        // construction of the mixture; the enumeration must reproduce it.
        for tau in [0.0, 0.2, 0.5, 0.9] {
            let w = world(tau);
            let lhs = (w.exact_pu() - tau * w.exact_pp()) / (1.0 - tau);
            assert_abs_diff_eq!(lhs, exact_pn_expectation(&w), epsilon = 1e-14);
        }
    }

    #[test]
    fn supervised_objective_is_neg_log_of_expectation() {
        let w = world(0.3);
        assert_abs_diff_eq!(
            exact_supervised_objective(&w),
            -exact_pn_expectation(&w).ln(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn deviation_bound_matches_frozen_values() {
        assert_abs_diff_eq!(
            deviation_bound(10_000, 10_000, 0.5),
            0.27782425410621311,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            deviation_bound(100, 100, 0.5),
            2.7782425410621311,
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(
            deviation_bound(1600, 1600, 0.5),
            0.69456063526553277,
            epsilon = 1e-15
        );
        // tau = 0 drops the extra-positive term entirely.
        assert_abs_diff_eq!(
            deviation_bound(100, 1, 0.0),
            std::f64::consts::E.powi(2) * (2.0 * std::f64::consts::PI / 100.0).sqrt(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn random_world_is_deterministic_in_seed_and_id() {
        let a = SyntheticWorld::random(5, 5, 0.2, 7, 3).unwrap();
        let b = SyntheticWorld::random(5, 5, 0.2, 7, 3).unwrap();
        assert_eq!(a.anchor, b.anchor);
        assert_eq!(a.pos_scores, b.pos_scores);
        let c = SyntheticWorld::random(5, 5, 0.2, 7, 4).unwrap();
        assert_ne!(a.pos_scores, c.pos_scores);
    }

    #[test]
    fn random_world_scores_stay_in_open_unit_range() {
        let w = SyntheticWorld::random(50, 50, 0.1, 11, 0).unwrap();
        for s in w.pos_scores.iter().chain(w.neg_scores.iter()) {
            assert!(*s > -1.0 && *s < 1.0);
        }
        assert!(w.anchor > -1.0 && w.anchor < 1.0);
    }

    #[test]
    fn world_rejects_empty_or_nonfinite() {
        assert!(SyntheticWorld::new(0.0, vec![], vec![0.1], 0.2).is_err());
        assert!(SyntheticWorld::new(0.0, vec![0.1], vec![], 0.2).is_err());
        assert!(SyntheticWorld::new(f64::NAN, vec![0.1], vec![0.2], 0.2).is_err());
        assert!(SyntheticWorld::new(0.0, vec![0.1], vec![0.2], 1.0).is_err());
    }

    #[test]
    fn drawn_scores_come_from_the_world() {
        let w = world(0.4);
        let mut rng = stream_rng(3, 9);
        let e = w.draw_entry(5, 8, &mut rng);
        assert_eq!(e.m(), 5);
        assert_eq!(e.n(), 8);
        for s in e.extra_pos() {
            assert!(w.pos_scores.contains(s));
        }
        let all: Vec<Score> = w
            .pos_scores
            .iter()
            .chain(w.neg_scores.iter())
            .copied()
            .collect();
        for s in e.unlabeled() {
            assert!(all.contains(s));
        }
    }

    #[test]
    fn zero_prior_draws_only_negatives() {
        let w = world(0.0);
        let mut rng = stream_rng(5, 21);
        for _ in 0..50 {
            let e = w.draw_entry(0, 4, &mut rng);
            for s in e.unlabeled() {
                assert!(w.neg_scores.contains(s));
            }
        }
    }

    #[test]
    fn unbiasedness_passes_at_default_seed() {
        let rows = unbiasedness_experiment(800, 0).unwrap();
        assert_eq!(rows.len(), UNBIASED_WORLDS.len() * UNBIASED_SIZES.len());
        for r in &rows {
            assert!(r.pass, "z={} for world {} m={} n={}", r.z, r.world, r.m, r.n);
            assert!(r.std_err > 0.0);
        }
    }

    #[test]
    fn consistency_gap_shrinks_with_size() {
        let out = consistency_experiment(400, 0).unwrap();
        assert_eq!(out.rows.len(), CONSISTENCY_SIZES.len());
        assert!(out.shrinks, "gap did not shrink: {:?}", out.rows);
        assert!(out.final_gap_ok, "final gap {}", out.rows.last().unwrap().loss_gap);
        assert!(out.clamp_ok);
        assert_eq!(out.rows.last().unwrap().clamps, 0);
    }

    #[test]
    fn clamps_fire_only_for_nonpositive_estimates() {
        // Extras score far below the anchor (pp near 1) while negatives score
        // far above it (pu near 0 on negative draws), so with tau = 0.5 and a
        // single draw per side the raw estimate goes negative about half the
        // time; every clamp must coincide with a non-positive estimate.
        let w = SyntheticWorld::new(-0.5, vec![-3.0, -2.5], vec![3.0, 2.5], 0.5).unwrap();
        let cfg = dpl_config(&w);
        let mut rng = stream_rng(2, 40);
        let mut clamped = 0;
        for _ in 0..2000 {
            let e = w.draw_entry(1, 1, &mut rng);
            let pn = raw_pn(&w, &e).unwrap();
            let loss = dpl_loss(std::slice::from_ref(&e), &cfg).unwrap();
            assert!(loss.is_finite());
            if pn < cfg.clamp_floor {
                clamped += 1;
                assert!(pn <= 0.0, "clamped a strictly positive estimate {pn}");
                assert_abs_diff_eq!(loss, -cfg.clamp_floor.ln(), epsilon = 1e-12);
            }
        }
        assert!(clamped > 0, "the crafted world never clamped");
    }

    #[test]
    fn bound_rows_hold_and_ratios_halve() {
        let (rows, ratios) = bound_check_experiment(600, 0).unwrap();
        assert_eq!(
            rows.len(),
            BOUND_TAUS.len() * BOUND_SIZES.len() * BOUND_SIZES.len()
        );
        for r in &rows {
            assert!(
                r.pass,
                "p99 {} exceeded bound {} at tau={} n={} m={}",
                r.p99_gap, r.bound, r.tau, r.n, r.m
            );
            assert!(r.mean_gap <= r.p99_gap);
        }
        assert_eq!(ratios.len(), BOUND_TAUS.len() * (BOUND_SIZES.len() - 1));
        for r in &ratios {
            assert!(
                r.pass,
                "ratio {} outside window at tau={} {}->{}",
                r.ratio, r.tau, r.size_small, r.size_large
            );
        }
    }

    #[test]
    fn battery_is_deterministic_and_reports_pass() {
        let a = run_lemma_battery(300, 123).unwrap();
        let b = run_lemma_battery(300, 123).unwrap();
        assert!(a.all_pass());
        assert_eq!(lemma_tsv(&a), lemma_tsv(&b));
        let tsv = lemma_tsv(&a);
        assert!(tsv.contains("unbiasedness"));
        assert!(tsv.contains("consistency"));
        assert!(tsv.contains("bound"));
        assert!(tsv.contains("all_pass\t-\t-\tpass"));
    }

    #[test]
    fn zero_trials_rejected() {
        assert!(unbiasedness_experiment(0, 1).is_err());
        assert!(consistency_experiment(0, 1).is_err());
        assert!(bound_check_experiment(0, 1).is_err());
    }
}
