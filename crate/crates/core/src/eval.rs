//! Ranking evaluation: precision/recall/NDCG at K cutoffs and AUC, averaged
//! per user over the held-out positives.
//!
//! Determinism contract: score ties rank by ascending item index, users are
//! reduced in index order (the rayon map preserves it), so a fixed table and
//! split always produce bit-identical reports.

use std::cmp::Ordering;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::data::SplitDataset;
use crate::encoder::{EmbeddingTable, ScoreKind};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Full item ranking for one user: descending score, ties by ascending item
/// index, with `exclude_sorted` (the user's training positives) removed.
/// Scores are assumed finite; `evaluate_split` validates before ranking.
pub fn rank_items<R: Real>(scores: &[R], exclude_sorted: &[u32]) -> Vec<u32> {
    let mut idx: Vec<u32> = (0..scores.len() as u32)
        .filter(|i| exclude_sorted.binary_search(i).is_err())
        .collect();
    idx.sort_unstable_by(|&a, &b| {
        match scores[b as usize].partial_cmp(&scores[a as usize]) {
            Some(o) if o != Ordering::Equal => o,
            _ => a.cmp(&b),
        }
    });
    idx
}

/// Precision, recall and NDCG at cutoff `k` for one ranked list.
///
/// Precision divides by `k` even when fewer items were rankable; recall
/// divides by the test-set size; NDCG uses 1/log2(rank+1) gains with the
/// ideal DCG truncated at min(k, |test|). An empty test set yields zeros.
pub fn topk_metrics<R: Real>(ranked: &[u32], test_sorted: &[u32], k: usize) -> (R, R, R) {
    if test_sorted.is_empty() || k == 0 {
        return (R::zero(), R::zero(), R::zero());
    }
    let mut hits = 0usize;
    let mut dcg = R::zero();
    for (pos, item) in ranked.iter().take(k).enumerate() {
        if test_sorted.binary_search(item).is_ok() {
            hits += 1;
            dcg += discount::<R>(pos + 1);
        }
    }
    let mut idcg = R::zero();
    for rank in 1..=k.min(test_sorted.len()) {
        idcg += discount::<R>(rank);
    }
    let precision = R::from_count(hits) / R::from_count(k);
    let recall = R::from_count(hits) / R::from_count(test_sorted.len());
    let ndcg = dcg / idcg;
    (precision, recall, ndcg)
}

/// Gain discount at a 1-indexed rank.
fn discount<R: Real>(rank: usize) -> R {
    R::one() / R::from_count(rank + 1).log2()
}

/// Probability that a random test positive outscores a random candidate
/// negative (items outside both the user's train and test positives), with
/// ties counting one half. `None` when either side is empty.
pub fn auc<R: Real>(scores: &[R], test_sorted: &[u32], train_sorted: &[u32]) -> Option<R> {
    if test_sorted.is_empty() {
        return None;
    }
    let mut neg: Vec<R> = (0..scores.len() as u32)
        .filter(|i| {
            test_sorted.binary_search(i).is_err() && train_sorted.binary_search(i).is_err()
        })
        .map(|i| scores[i as usize])
        .collect();
    if neg.is_empty() {
        return None;
    }
    neg.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    let half = R::of(0.5);
    let mut won = R::zero();
    for &i in test_sorted {
        let s = scores[i as usize];
        let below = neg.partition_point(|&x| x < s);
        let not_above = neg.partition_point(|&x| x <= s);
        won += R::from_count(below) + half * R::from_count(not_above - below);
    }
    Some(won / (R::from_count(test_sorted.len()) * R::from_count(neg.len())))
}

/// Metric averages over all users with held-out positives.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport<R> {
    pub ks: Vec<usize>,
    pub precision: Vec<R>,
    pub recall: Vec<R>,
    pub ndcg: Vec<R>,
    /// Average over users where AUC was defined (some negatives existed).
    pub auc: R,
    pub users_evaluated: usize,
}

struct UserEval<R> {
    precision: Vec<R>,
    recall: Vec<R>,
    ndcg: Vec<R>,
    auc: Option<R>,
}

/// Scores every item for every test user against `table` and averages the
/// ranking metrics. For propagation-based encoders, pass the propagated
/// table; this function only reads embedding rows.
pub fn evaluate_split<R: Real>(
    table: &EmbeddingTable<R>,
    score: ScoreKind,
    split: &SplitDataset,
    ks: &[usize],
) -> Result<EvalReport<R>> {
    if ks.is_empty() {
        return Err(Error::Config("need at least one K cutoff".into()));
    }
    if ks.iter().any(|&k| k == 0) {
        return Err(Error::Config("K cutoffs must be positive".into()));
    }
    if table.num_users() < split.num_users() || table.num_items() < split.num_items() {
        return Err(Error::Config(format!(
            "table holds {}x{} embeddings but the split needs {}x{}",
            table.num_users(),
            table.num_items(),
            split.num_users(),
            split.num_items()
        )));
    }

    let num_items = split.num_items();
    let per_user: Vec<Option<UserEval<R>>> = (0..split.num_users() as u32)
        .into_par_iter()
        .map(|u| -> Result<Option<UserEval<R>>> {
            let test = split.test_pos(u);
            if test.is_empty() {
                return Ok(None);
            }
            let train = split.train_pos(u);
            let mut scores = Vec::with_capacity(num_items);
            for i in 0..num_items {
                let s = crate::encoder::mf_score(table, u as usize, i, score)?;
                if !s.is_finite() {
                    return Err(Error::NonFinite(format!(
                        "score for user {u}, item {i} is not finite"
                    )));
                }
                scores.push(s);
            }
            let ranked = rank_items(&scores, train);
            let mut precision = Vec::with_capacity(ks.len());
            let mut recall = Vec::with_capacity(ks.len());
            let mut ndcg = Vec::with_capacity(ks.len());
            for &k in ks {
                let (p, r, n) = topk_metrics(&ranked, test, k);
                precision.push(p);
                recall.push(r);
                ndcg.push(n);
            }
            Ok(Some(UserEval {
                precision,
                recall,
                ndcg,
                auc: auc(&scores, test, train),
            }))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut precision = vec![R::zero(); ks.len()];
    let mut recall = vec![R::zero(); ks.len()];
    let mut ndcg = vec![R::zero(); ks.len()];
    let mut auc_sum = R::zero();
    let mut auc_users = 0usize;
    let mut users = 0usize;
    for ue in per_user.into_iter().flatten() {
        users += 1;
        for j in 0..ks.len() {
            precision[j] += ue.precision[j];
            recall[j] += ue.recall[j];
            ndcg[j] += ue.ndcg[j];
        }
        if let Some(a) = ue.auc {
            auc_sum += a;
            auc_users += 1;
        }
    }
    if users == 0 {
        return Err(Error::Data("no user has held-out positives".into()));
    }
    let denom = R::from_count(users);
    for j in 0..ks.len() {
        precision[j] = precision[j] / denom;
        recall[j] = recall[j] / denom;
        ndcg[j] = ndcg[j] / denom;
    }
    let auc = if auc_users == 0 {
        R::zero()
    } else {
        auc_sum / R::from_count(auc_users)
    };
    Ok(EvalReport {
        ks: ks.to_vec(),
        precision,
        recall,
        ndcg,
        auc,
        users_evaluated: users,
    })
}

/// Tab-separated rendering: `metric  k  value` rows, AUC and the user count
/// with `-` in the k column.
pub fn metrics_tsv<R: Real>(report: &EvalReport<R>) -> String {
    let mut s = String::from("metric\tk\tvalue\n");
    for (j, &k) in report.ks.iter().enumerate() {
        let _ = writeln!(s, "precision\t{k}\t{}", report.precision[j]);
        let _ = writeln!(s, "recall\t{k}\t{}", report.recall[j]);
        let _ = writeln!(s, "ndcg\t{k}\t{}", report.ndcg[j]);
    }
    let _ = writeln!(s, "auc\t-\t{}", report.auc);
    let _ = writeln!(s, "users\t-\t{}", report.users_evaluated);
    s
}
