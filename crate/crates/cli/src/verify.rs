//! The `verify` command: estimator checks on synthetic worlds.

use purank::{
    bound_cell, bound_check_experiment, consistency_experiment, consistency_tsv_rows, lemma_tsv,
    run_lemma_battery, unbiasedness_experiment, unbiasedness_tsv_rows, Error, Result,
    LEMMA_TSV_HEADER,
};

use crate::opts::{Overlay, VerifyCmd};

const MIN_TRIALS: usize = 1000;
const LEMMA_FILE: &str = "lemma.tsv";

/// World and stream ids for ad-hoc bound cells, outside the battery's range.
const ADHOC_WORLD: u64 = 999;
const ADHOC_CELL: u64 = 999;

pub fn cmd_verify(cmd: &VerifyCmd) -> Result<()> {
    let mut ov = Overlay::load(cmd.config.as_deref())?;
    let trials = ov.resolve("trials", cmd.trials, 2000)?;
    let seed = ov.resolve("seed", cmd.seed, 42)?;
    let lemma = ov.resolve_opt("lemma", cmd.lemma)?;
    let n = ov.resolve_opt("n", cmd.n)?;
    let m = ov.resolve_opt("m", cmd.m)?;
    let tau = ov.resolve_opt("tau", cmd.tau)?;
    let out = ov.resolve_opt::<std::path::PathBuf>("out", cmd.out.clone())?;
    ov.finish()?;

    if trials < MIN_TRIALS {
        return Err(Error::Config(format!(
            "verification needs at least {MIN_TRIALS} trials per cell, got {trials}"
        )));
    }
    let adhoc = n.is_some() || m.is_some() || tau.is_some();
    if adhoc && lemma != Some(3) {
        return Err(Error::Config(
            "--n/--m/--tau describe an ad-hoc bound cell and require --lemma 3".into(),
        ));
    }

    let mut tsv = String::from(LEMMA_TSV_HEADER);
    match lemma {
        None => {
            let report = run_lemma_battery(trials, seed)?;
            tsv = lemma_tsv(&report);
        }
        Some(1) => {
            let rows = unbiasedness_experiment(trials, seed)?;
            tsv.push_str(&unbiasedness_tsv_rows(&rows));
        }
        Some(2) => {
            let outcome = consistency_experiment(trials, seed)?;
            tsv.push_str(&consistency_tsv_rows(&outcome));
        }
        Some(3) if adhoc => {
            let n = n.ok_or_else(|| missing("n"))?;
            let m = m.ok_or_else(|| missing("m"))?;
            let tau = tau.ok_or_else(|| missing("tau"))?;
            let row = bound_cell(n, m, tau, trials, seed, ADHOC_WORLD, ADHOC_CELL)?;
            eprintln!(
                "observed gap at n={n} m={m} tau={tau}: mean {:.6}, p99 {:.6}, bound {:.6}",
                row.mean_gap, row.p99_gap, row.bound
            );
            tsv.push_str(&purank::bound_tsv_rows(
                std::slice::from_ref(&row),
                &[],
            ));
        }
        Some(3) => {
            let (bounds, ratios) = bound_check_experiment(trials, seed)?;
            tsv.push_str(&purank::bound_tsv_rows(&bounds, &ratios));
        }
        Some(k) => {
            return Err(Error::Config(format!(
                "unknown lemma {k}: expected 1, 2 or 3"
            )));
        }
    }

    print!("{tsv}");
    if let Some(dir) = &out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(LEMMA_FILE), &tsv)?;
    }

    let failing: Vec<&str> = tsv.lines().filter(|l| l.ends_with("\tFAIL")).collect();
    if failing.is_empty() {
        Ok(())
    } else {
        Err(Error::Verification(format!(
            "{} failing cell(s):\n{}",
            failing.len(),
            failing.join("\n")
        )))
    }
}

fn missing(flag: &str) -> Error {
    Error::Config(format!("an ad-hoc bound cell needs --{flag}"))
}
