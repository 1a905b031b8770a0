//! Exhaustive reference solver and batch metrics.

use web_time::Instant;

use crate::error::{Error, Result};
use crate::hierarchy::{min_cover, Budgets, ClassSet, Hierarchy};
use crate::prediction::{elapsed_us, Prediction};
use crate::prob::FlatDistribution;

/// Largest class count the exhaustive oracle accepts.
pub const ORACLE_MAX_CLASSES: usize = 16;

/// Best feasible set by scanning every non-empty subset of the classes.
/// Ties go to the lexicographically smallest member list.
pub fn oracle_solve(h: &Hierarchy, d: &FlatDistribution, b: Budgets) -> Result<Prediction> {
    let classes = h.class_count();
    if classes > ORACLE_MAX_CLASSES {
        return Err(Error::TooLarge(format!(
            "oracle scans 2^K subsets, K={classes} exceeds {ORACLE_MAX_CLASSES}"
        )));
    }
    if d.class_count() != classes {
        return Err(Error::DimensionMismatch {
            expected: classes,
            got: d.class_count(),
        });
    }
    let start = Instant::now();
    let mut best: Option<(ClassSet, f64)> = None;
    for mask in 1u64..(1 << classes) {
        if mask.count_ones() as usize > b.k {
            continue;
        }
        let y = ClassSet::from_mask(mask);
        let mass: f64 = y.members().iter().map(|&c| d.probs()[c]).sum();
        let better = match &best {
            None => true,
            Some((set, m)) => mass > *m || (mass == *m && y < *set),
        };
        if better && min_cover(h, &y)?.complexity() <= b.r {
            best = Some((y, mass));
        }
    }
    let (set, mass) = best.ok_or(Error::InfeasibleBudget)?;
    Ok(Prediction {
        set,
        mass,
        n: (1u64 << classes) - 1,
        time_us: elapsed_us(start),
    })
}

/// One row of a benchmark table.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub solver: String,
    pub r: usize,
    pub k: usize,
    /// Fraction of instances whose true class is in the predicted set.
    pub recall: f64,
    pub avg_set_size: f64,
    pub avg_time_us: f64,
    pub avg_n: f64,
}

pub fn evaluate(
    solver: &str,
    b: Budgets,
    preds: &[Prediction],
    truths: &[usize],
) -> Result<MetricsRow> {
    if preds.len() != truths.len() {
        return Err(Error::LengthMismatch(preds.len(), truths.len()));
    }
    if preds.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let n = preds.len() as f64;
    let hits = preds
        .iter()
        .zip(truths)
        .filter(|(p, &t)| p.set.contains(t))
        .count();
    let mean = |f: &dyn Fn(&Prediction) -> f64| preds.iter().map(f).sum::<f64>() / n;
    Ok(MetricsRow {
        solver: solver.to_string(),
        r: b.r,
        k: b.k,
        recall: hits as f64 / n,
        avg_set_size: mean(&|p| p.set.len() as f64),
        avg_time_us: mean(&|p| p.time_us),
        avg_n: mean(&|p| p.n as f64),
    })
}
