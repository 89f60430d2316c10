//! The `sweep` command: train a grid of loss configurations on one split.

use std::fmt::Write as _;

use purank::{
    run_training, ClassPrior64, Error, LossKind, Result, TrainConfig64,
};

use crate::opts::SweepSettings;
use crate::run::load_split;

const SWEEP_FILE: &str = "sweep.tsv";

/// Axes in canonical order; flags may name them in any order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum AxisKey {
    Loss,
    M,
    N,
    Tau,
    Beta,
}

impl AxisKey {
    fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "loss" => Ok(AxisKey::Loss),
            "m" => Ok(AxisKey::M),
            "n" => Ok(AxisKey::N),
            "tau" => Ok(AxisKey::Tau),
            "beta" => Ok(AxisKey::Beta),
            other => Err(Error::Config(format!(
                "unknown grid axis '{other}': expected loss, m, n, tau or beta"
            ))),
        }
    }
}

enum AxisValues {
    Losses(Vec<LossKind>),
    Counts(Vec<usize>),
    Reals(Vec<f64>),
}

impl AxisValues {
    fn len(&self) -> usize {
        match self {
            AxisValues::Losses(v) => v.len(),
            AxisValues::Counts(v) => v.len(),
            AxisValues::Reals(v) => v.len(),
        }
    }
}

struct Axis {
    key: AxisKey,
    values: AxisValues,
}

fn parse_axis(spec: &str) -> Result<Axis> {
    let Some((key, raw)) = spec.split_once('=') else {
        return Err(Error::Config(format!(
            "grid axis '{spec}' must look like KEY=SPEC"
        )));
    };
    let key = AxisKey::parse(key.trim())?;
    let raw = raw.trim();
    let values = match key {
        AxisKey::Loss => {
            let mut kinds = Vec::new();
            for part in split_list(raw)? {
                kinds.push(part.parse::<LossKind>()?);
            }
            AxisValues::Losses(kinds)
        }
        AxisKey::M | AxisKey::N => AxisValues::Counts(parse_counts(raw)?),
        AxisKey::Tau | AxisKey::Beta => AxisValues::Reals(parse_reals(raw)?),
    };
    if values.len() == 0 {
        return Err(Error::Config(format!("grid axis '{spec}' has no values")));
    }
    Ok(Axis { key, values })
}

fn split_list(raw: &str) -> Result<Vec<&str>> {
    let parts: Vec<&str> = raw
        .split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .collect();
    if parts.is_empty() {
        return Err(Error::Config(format!("empty value list '{raw}'")));
    }
    Ok(parts)
}

/// Comma list or inclusive start:stop:step range.
fn parse_reals(raw: &str) -> Result<Vec<f64>> {
    if raw.contains(':') {
        let parts: Vec<&str> = raw.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::Config(format!(
                "range '{raw}' must be start:stop:step"
            )));
        }
        let start = parse_f64(parts[0])?;
        let stop = parse_f64(parts[1])?;
        let step = parse_f64(parts[2])?;
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::Config(format!("range step must be positive: '{raw}'")));
        }
        if stop < start {
            return Err(Error::Config(format!("range stop below start: '{raw}'")));
        }
        // Multiply instead of accumulating so long ranges do not drift.
        let eps = step * 1e-9;
        let mut out = Vec::new();
        for i in 0.. {
            let v = start + i as f64 * step;
            if v > stop + eps {
                break;
            }
            out.push(v);
        }
        Ok(out)
    } else {
        split_list(raw)?.into_iter().map(parse_f64).collect()
    }
}

fn parse_counts(raw: &str) -> Result<Vec<usize>> {
    if raw.contains(':') {
        let parts: Vec<&str> = raw.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::Config(format!(
                "range '{raw}' must be start:stop:step"
            )));
        }
        let start = parse_usize(parts[0])?;
        let stop = parse_usize(parts[1])?;
        let step = parse_usize(parts[2])?;
        if step == 0 {
            return Err(Error::Config(format!("range step must be positive: '{raw}'")));
        }
        if stop < start {
            return Err(Error::Config(format!("range stop below start: '{raw}'")));
        }
        Ok((start..=stop).step_by(step).collect())
    } else {
        split_list(raw)?.into_iter().map(parse_usize).collect()
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|e| Error::Config(format!("bad number '{s}': {e}")))?;
    if !v.is_finite() {
        return Err(Error::Config(format!("number '{s}' must be finite")));
    }
    Ok(v)
}

fn parse_usize(s: &str) -> Result<usize> {
    s.trim()
        .parse()
        .map_err(|e| Error::Config(format!("bad count '{s}': {e}")))
}

fn parse_grid(specs: &[String]) -> Result<Vec<Axis>> {
    if specs.is_empty() {
        return Err(Error::Config(
            "sweep needs at least one --grid KEY=SPEC axis".into(),
        ));
    }
    let mut axes = Vec::new();
    for spec in specs {
        let axis = parse_axis(spec)?;
        if axes.iter().any(|a: &Axis| a.key == axis.key) {
            return Err(Error::Config(format!(
                "grid axis '{:?}' given twice",
                axis.key
            )));
        }
        axes.push(axis);
    }
    axes.sort_by_key(|a| a.key);
    Ok(axes)
}

/// One resolved grid cell. `m = 0` disables the correction, so tau is
/// forced to 0 there instead of failing the whole sweep.
#[derive(Debug, Clone, Copy)]
struct Cell {
    kind: LossKind,
    m: usize,
    n: usize,
    tau: f64,
    beta: f64,
}

fn cells(axes: &[Axis], base: &TrainConfig64) -> Vec<Cell> {
    let template = Cell {
        kind: base.loss.kind,
        m: base.loss.m_extra_pos,
        n: base.loss.n_neg,
        tau: base.loss.prior.tau_plus(),
        beta: base.loss.beta,
    };
    let mut out = vec![template];
    for axis in axes {
        let mut next = Vec::with_capacity(out.len() * axis.values.len());
        for cell in &out {
            match &axis.values {
                AxisValues::Losses(v) => {
                    for &kind in v {
                        next.push(Cell { kind, ..*cell });
                    }
                }
                AxisValues::Counts(v) => {
                    for &c in v {
                        match axis.key {
                            AxisKey::M => next.push(Cell { m: c, ..*cell }),
                            AxisKey::N => next.push(Cell { n: c, ..*cell }),
                            _ => unreachable!("counts only parse for m and n"),
                        }
                    }
                }
                AxisValues::Reals(v) => {
                    for &r in v {
                        match axis.key {
                            AxisKey::Tau => next.push(Cell { tau: r, ..*cell }),
                            AxisKey::Beta => next.push(Cell { beta: r, ..*cell }),
                            _ => unreachable!("reals only parse for tau and beta"),
                        }
                    }
                }
            }
        }
        out = next;
    }
    for cell in &mut out {
        if cell.m == 0 {
            cell.tau = 0.0;
        }
    }
    out
}

pub fn cmd_sweep(settings: &SweepSettings) -> Result<()> {
    let axes = parse_grid(&settings.grid)?;
    let base = &settings.base;
    let grid = cells(&axes, &base.cfg);

    let split = load_split(&base.data)?;
    eprintln!(
        "sweep: {} cells on {} users x {} items",
        grid.len(),
        split.num_users(),
        split.num_items()
    );

    let mut tsv = String::from("loss\tm\tn\ttau\tbeta\tmetric\tk\tvalue\n");
    for (idx, cell) in grid.iter().enumerate() {
        let mut cfg = base.cfg.clone();
        cfg.loss.kind = cell.kind;
        cfg.loss.m_extra_pos = cell.m;
        cfg.loss.n_neg = cell.n;
        cfg.loss.prior = ClassPrior64::new(cell.tau)?;
        cfg.loss.beta = cell.beta;
        cfg.validate()?;

        eprintln!(
            "cell {}/{}: loss={} m={} n={} tau={} beta={}",
            idx + 1,
            grid.len(),
            cell.kind,
            cell.m,
            cell.n,
            cell.tau,
            cell.beta
        );
        let outcome = run_training(&split, &cfg, &base.ks)?;

        let prefix = format!(
            "{}\t{}\t{}\t{}\t{}",
            cell.kind, cell.m, cell.n, cell.tau, cell.beta
        );
        let eval = &outcome.eval;
        for (i, k) in eval.ks.iter().enumerate() {
            let _ = writeln!(tsv, "{prefix}\tprecision\t{k}\t{}", eval.precision[i]);
            let _ = writeln!(tsv, "{prefix}\trecall\t{k}\t{}", eval.recall[i]);
            let _ = writeln!(tsv, "{prefix}\tndcg\t{k}\t{}", eval.ndcg[i]);
        }
        let _ = writeln!(tsv, "{prefix}\tauc\t-\t{}", eval.auc);
        let _ = writeln!(tsv, "{prefix}\tusers\t-\t{}", eval.users_evaluated);
        let _ = writeln!(
            tsv,
            "{prefix}\ttrain_loss\t-\t{}",
            outcome.report.final_loss().unwrap_or(f64::NAN)
        );
    }

    print!("{tsv}");
    std::fs::create_dir_all(&base.out)?;
    std::fs::write(base.out.join(SWEEP_FILE), &tsv)?;
    eprintln!("sweep table written to {}", base.out.display());
    Ok(())
}
