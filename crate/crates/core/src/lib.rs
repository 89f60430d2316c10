//! Learning to rank from positive-unlabeled implicit feedback.
//!
//! Interaction logs record what users engaged with, never what they
//! rejected, so every "negative" drawn at training time is merely unlabeled
//! and hides true positives at the positive-class rate. This crate trains
//! pairwise rankers under that regime:
//!
//! - [`loss`]: pairwise objectives over scored entries: BPR, InfoNCE, their
//!   debiased and hardness-weighted contrastive variants (DCL, HCL), and the
//!   prior-corrected debiased pairwise loss (DPL), each with analytic
//!   gradients;
//! - [`encoder`]: embedding tables, matrix-factorization scoring, and
//!   light graph-convolution propagation, plus binary checkpoints;
//! - [`data`]: interaction parsing, implicit conversion, seeded holdout
//!   splits, and the positive-unlabeled batch sampler;
//! - [`train`]: mini-batch training with SGD or lazy Adam and a
//!   finite-difference gradient audit;
//! - [`eval`]: precision/recall/NDCG at K and AUC over held-out positives;
//! - [`synth`]: a synthetic benchmark that checks the estimator's
//!   unbiasedness, consistency, and concentration against enumerable worlds;
//! - [`rng`]: deterministic stream-split RNG underlying every seeded step.
//!
//! Numeric kernels are generic over [`scalar::Real`] (`f32` or `f64`);
//! `*64`/`*32` aliases at the crate root pin the common choices.

pub mod data;
pub mod encoder;
pub mod error;
pub mod eval;
pub mod loss;
pub mod rng;
pub mod scalar;
pub mod synth;
pub mod train;

pub use data::{
    epoch_plan, parse_dataset, sample_entry, sample_entry_anchored, split_holdout, to_implicit,
    BatchEntry, FileFormat, IdMap, ImplicitData, Interaction, ParsedData, SplitConfig,
    SplitDataset, SplitManifest, SplitMode,
};
pub use encoder::{
    init_embeddings, l2_penalty, load_checkpoint, mf_score, propagate, save_checkpoint,
    BipartiteGraph, Checkpoint, EmbeddingTable, EncoderConfig, EncoderKind, ScoreKind,
};
pub use error::{Error, Result};
pub use eval::{auc, evaluate_split, metrics_tsv, rank_items, topk_metrics, EvalReport};
pub use loss::{
    batch_loss, batch_loss_grad, bpr_loss, dcl_loss, dpl_loss, hcl_loss, infonce_loss, pair_prob,
    pn_correct, pp_prob, pu_prob, BatchLoss, ClassPrior, EntryGrad, LossConfig, LossKind,
    ScoredEntry,
};
pub use scalar::Real;
pub use synth::{
    bound_cell, bound_check_experiment, bound_tsv_rows, consistency_experiment,
    consistency_tsv_rows, deviation_bound, exact_pn_expectation, exact_supervised_objective,
    lemma_tsv, run_lemma_battery, unbiasedness_experiment, unbiasedness_tsv_rows, LemmaReport,
    SyntheticWorld, LEMMA_TSV_HEADER,
};
pub use train::{
    epochs_tsv, grad_check_tsv, gradient_check, run_training, train, EpochStats, GradCheckReport,
    OptimizerKind, TrainConfig, TrainOutcome, TrainReport,
};

/// Double-precision aliases, the default choice.
pub type ClassPrior64 = loss::ClassPrior<f64>;
pub type ScoredEntry64 = loss::ScoredEntry<f64>;
pub type LossConfig64 = loss::LossConfig<f64>;
pub type EmbeddingTable64 = encoder::EmbeddingTable<f64>;
pub type EncoderConfig64 = encoder::EncoderConfig<f64>;
pub type Checkpoint64 = encoder::Checkpoint<f64>;
pub type TrainConfig64 = train::TrainConfig<f64>;
pub type EvalReport64 = eval::EvalReport<f64>;

/// Single-precision aliases for memory-bound tables.
pub type ClassPrior32 = loss::ClassPrior<f32>;
pub type ScoredEntry32 = loss::ScoredEntry<f32>;
pub type LossConfig32 = loss::LossConfig<f32>;
pub type EmbeddingTable32 = encoder::EmbeddingTable<f32>;
pub type EncoderConfig32 = encoder::EncoderConfig<f32>;
pub type Checkpoint32 = encoder::Checkpoint<f32>;
pub type TrainConfig32 = train::TrainConfig<f32>;
pub type EvalReport32 = eval::EvalReport<f32>;
