use std::cmp::Ordering;

use serde::Serialize;

use super::align_queries;
use super::methods::NsfPool;
use super::normalize::{Normalization, ScoreDistribution};
use crate::error::{Error, Result};
use crate::metrics::Metric;
use crate::model::{Qrels, RunList, RunSet};

/// Default spacing of the weight grid.
pub const DEFAULT_TUNING_STEP: f64 = 0.05;

/// Every weight vector with entries in `{0, step, …, 1}` summing to one, as
/// integer multiples of `step`, in lexicographically descending order.
pub fn simplex_grid(systems: usize, step: f64) -> Result<Vec<Vec<u32>>> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(Error::InvalidArgument(format!("step must be in (0, 1], got {step}")));
    }
    let units = (1.0 / step).round();
    if (units * step - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!("step {step} does not divide 1")));
    }
    if systems == 0 {
        return Err(Error::InvalidArgument("need at least one system".into()));
    }
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(systems);
    compositions(units as u32, systems, &mut current, &mut out);
    Ok(out)
}

fn compositions(remaining: u32, parts: usize, current: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if parts == 1 {
        current.push(remaining);
        out.push(current.clone());
        current.pop();
        return;
    }
    for first in (0..=remaining).rev() {
        current.push(first);
        compositions(remaining - first, parts - 1, current, out);
        current.pop();
    }
}

/// Shannon entropy of a composition, computed on sorted counts so that
/// permutations give bit-identical values.
fn entropy(counts: &[u32]) -> f64 {
    let total: u32 = counts.iter().sum();
    let mut sorted = counts.to_vec();
    sorted.sort_unstable();
    sorted
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total as f64;
            -p * p.ln()
        })
        .sum()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TuneOutcome {
    pub weights: Vec<f64>,
    pub score: f64,
    pub metric: String,
    /// Every grid point with its objective, in evaluation order.
    pub grid: Vec<(Vec<f64>, f64)>,
}

/// Exhaustive grid search of NSF weights maximizing a macro-averaged metric.
///
/// Ties go to the most uniform weight vector (maximum entropy), then to the
/// lexicographically greatest one.
pub fn tune_weights(
    systems: &[RunSet],
    qrels: &Qrels,
    normalization: Normalization,
    dists: Option<&[ScoreDistribution]>,
    metric: Metric,
    step: f64,
    depth: Option<usize>,
) -> Result<TuneOutcome> {
    if !(2..=4).contains(&systems.len()) {
        return Err(Error::InvalidArgument(format!(
            "weight tuning supports 2 to 4 systems, got {}",
            systems.len()
        )));
    }
    let grid = simplex_grid(systems.len(), step)?;
    let units: u32 = grid[0].iter().sum();
    let pools = align_queries(systems, depth)
        .into_iter()
        .filter(|(q, _)| qrels.relevant(q.as_str()).is_some_and(|r| !r.is_empty()))
        .map(|(_, runs)| {
            let refs: Vec<&RunList> = runs.iter().collect();
            NsfPool::new(&refs, normalization, dists)
        })
        .collect::<Result<Vec<_>>>()?;
    if pools.is_empty() {
        return Err(Error::Validation(
            "no query appears in both the runs and the qrels".into(),
        ));
    }

    let mut evaluated = Vec::with_capacity(grid.len());
    let mut best: Option<(usize, f64, f64)> = None;
    for (i, counts) in grid.iter().enumerate() {
        let weights: Vec<f64> = counts.iter().map(|&c| c as f64 / units as f64).collect();
        let mut total = 0.0;
        for pool in &pools {
            let fused = pool.combine(&weights, "tune")?;
            total += metric.evaluate(&fused, qrels)?;
        }
        let score = total / pools.len() as f64;
        let h = entropy(counts);
        let better = match best {
            None => true,
            Some((_, s, e)) => match score.partial_cmp(&s) {
                Some(Ordering::Greater) => true,
                Some(Ordering::Equal) => h > e,
                _ => false,
            },
        };
        if better {
            best = Some((i, score, h));
        }
        evaluated.push((weights, score));
    }
    let (idx, score, _) = best.expect("grid is never empty");
    Ok(TuneOutcome {
        weights: evaluated[idx].0.clone(),
        score,
        metric: metric.to_string(),
        grid: evaluated,
    })
}
