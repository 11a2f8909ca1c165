use std::collections::BTreeMap;

use super::normalize::{normalize, Normalization, ScoreDistribution};
use super::rank::ranks;
use crate::error::{Error, Result};
use crate::model::{ranking_order, DocId, QueryId, RunList};

/// Default RRF smoothing constant.
pub const DEFAULT_RRF_K: f64 = 60.0;

fn common_query(runs: &[&RunList]) -> Result<QueryId> {
    let Some(first) = runs.first() else {
        return Err(Error::InvalidArgument("fusion needs at least one run".into()));
    };
    let query = first.query_id();
    if let Some(other) = runs.iter().find(|r| r.query_id() != query) {
        return Err(Error::InvalidArgument(format!(
            "cannot fuse runs of different queries `{query}` and `{}`",
            other.query_id()
        )));
    }
    Ok(query.clone())
}

fn finish(query: QueryId, system: &str, totals: BTreeMap<DocId, f64>) -> Result<RunList> {
    let mut entries: Vec<(DocId, f64)> = totals.into_iter().collect();
    entries.sort_by(ranking_order);
    RunList::new(query, system, entries)
}

/// Accumulates a per-entry contribution from each run, in run order.
fn rank_fusion<F>(runs: &[&RunList], system: &str, contribution: F) -> Result<RunList>
where
    F: Fn(usize, usize) -> f64,
{
    let query = common_query(runs)?;
    let mut totals: BTreeMap<DocId, f64> = BTreeMap::new();
    for run in runs {
        for ((doc, _), rank) in run.entries().iter().zip(ranks(run)) {
            *totals.entry(doc.clone()).or_insert(0.0) += contribution(run.len(), rank);
        }
    }
    finish(query, system, totals)
}

/// Borda count: each system awards `|R_m| − π_m + 1` points; systems whose
/// list omits a document award nothing.
pub fn fuse_bcf(runs: &[&RunList]) -> Result<RunList> {
    rank_fusion(runs, "bcf", |len, rank| (len - rank + 1) as f64)
}

/// Reciprocal rank fusion: `Σ_m 1 / (k + π_m)`.
pub fn fuse_rrf(runs: &[&RunList], k: f64) -> Result<RunList> {
    if !(k.is_finite() && k > 0.0) {
        return Err(Error::InvalidArgument(format!("rrf k must be > 0, got {k}")));
    }
    rank_fusion(runs, "rrf", |_, rank| 1.0 / (k + rank as f64))
}

pub(crate) fn check_weights(weights: &[f64], systems: usize) -> Result<()> {
    if weights.len() != systems {
        return Err(Error::InvalidArgument(format!(
            "{} weights for {systems} systems",
            weights.len()
        )));
    }
    if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
        return Err(Error::InvalidArgument(format!("weight {w} is negative or not finite")));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!("weights sum to {sum}, not 1")));
    }
    Ok(())
}

/// One query's normalized scores for every system over the union pool.
///
/// A document missing from a system's list takes that system's lowest
/// normalized score for the query; a system with an empty list contributes 0.
#[derive(Clone, Debug)]
pub struct NsfPool {
    query: QueryId,
    docs: Vec<DocId>,
    /// `columns[m][i]`: normalized score of `docs[i]` under system `m`.
    columns: Vec<Vec<f64>>,
}

impl NsfPool {
    pub fn new(runs: &[&RunList], normalization: Normalization, dists: Option<&[ScoreDistribution]>) -> Result<Self> {
        let query = common_query(runs)?;
        if normalization == Normalization::Percentile {
            match dists {
                Some(d) if d.len() == runs.len() => {}
                Some(d) => {
                    return Err(Error::InvalidArgument(format!(
                        "{} distributions for {} systems",
                        d.len(),
                        runs.len()
                    )))
                }
                None => {
                    return Err(Error::InvalidArgument(
                        "percentile normalization needs one distribution per system".into(),
                    ))
                }
            }
        }
        let mut slot: BTreeMap<DocId, usize> = BTreeMap::new();
        for run in runs {
            for doc in run.doc_ids() {
                slot.entry(doc.clone()).or_insert(0);
            }
        }
        let docs: Vec<DocId> = slot.keys().cloned().collect();
        for (i, v) in slot.values_mut().enumerate() {
            *v = i;
        }
        let mut columns = Vec::with_capacity(runs.len());
        for (m, run) in runs.iter().enumerate() {
            if run.is_empty() {
                columns.push(vec![0.0; docs.len()]);
                continue;
            }
            let raw: Vec<f64> = run.scores().collect();
            let dist = dists.map(|d| &d[m]);
            let normed = normalize(&raw, normalization, dist)?;
            let floor = normed.iter().copied().fold(f64::INFINITY, f64::min);
            let mut col = vec![floor; docs.len()];
            for (doc, value) in run.doc_ids().zip(normed) {
                col[slot[doc]] = value;
            }
            columns.push(col);
        }
        Ok(Self { query, docs, columns })
    }

    pub fn docs(&self) -> &[DocId] {
        &self.docs
    }

    pub fn systems(&self) -> usize {
        self.columns.len()
    }

    pub fn normalized(&self, system: usize) -> &[f64] {
        &self.columns[system]
    }

    /// `Σ_m α_m·ŝ_m` per pooled document, accumulated in system order.
    pub fn combine(&self, weights: &[f64], system: &str) -> Result<RunList> {
        check_weights(weights, self.columns.len())?;
        let mut entries: Vec<(DocId, f64)> = self
            .docs
            .iter()
            .enumerate()
            .map(|(i, doc)| {
                let mut acc = 0.0;
                for (w, col) in weights.iter().zip(&self.columns) {
                    acc += w * col[i];
                }
                (doc.clone(), acc)
            })
            .collect();
        entries.sort_by(ranking_order);
        RunList::new(self.query.clone(), system, entries)
    }
}

/// Normalized score fusion (CombSUM when weights are uniform).
pub fn fuse_nsf(
    runs: &[&RunList],
    weights: &[f64],
    normalization: Normalization,
    dists: Option<&[ScoreDistribution]>,
) -> Result<RunList> {
    check_weights(weights, runs.len())?;
    NsfPool::new(runs, normalization, dists)?.combine(weights, &format!("nsf-{normalization}"))
}

pub fn equal_weights(systems: usize) -> Vec<f64> {
    vec![1.0 / systems as f64; systems]
}
