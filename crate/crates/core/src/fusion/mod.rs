//! Late fusion of ranked lists from independent retrievers.
//!
//! Rank-based methods (Borda count, reciprocal rank) consume only each
//! system's ranks. Normalized score fusion (NSF) takes a weighted sum of
//! per-system normalized scores, with min-max, z-score or global-percentile
//! normalization.

mod methods;
mod normalize;
mod rank;
mod tune;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

pub use methods::{equal_weights, fuse_bcf, fuse_nsf, fuse_rrf, NsfPool, DEFAULT_RRF_K};
pub use normalize::{build_score_distribution, normalize, Normalization, ScoreDistribution, DEFAULT_SAMPLE_CAP};
pub use rank::{rank_positions, ranks};
pub use tune::{simplex_grid, tune_weights, TuneOutcome, DEFAULT_TUNING_STEP};

use crate::error::{Error, Result};
use crate::model::{QueryId, RunList, RunSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FusionMethod {
    Bcf,
    Rrf,
    Nsf,
}

impl fmt::Display for FusionMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Bcf => "bcf",
            Self::Rrf => "rrf",
            Self::Nsf => "nsf",
        })
    }
}

impl FromStr for FusionMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bcf" | "borda" => Ok(Self::Bcf),
            "rrf" => Ok(Self::Rrf),
            "nsf" | "combsum" => Ok(Self::Nsf),
            other => Err(Error::InvalidArgument(format!("unknown fusion method `{other}`"))),
        }
    }
}

/// Complete description of a fusion run.
#[derive(Clone, Debug, PartialEq)]
pub struct FusionSpec {
    pub method: FusionMethod,
    /// Used by NSF only.
    pub normalization: Normalization,
    /// One per system, non-negative, summing to one. `None` means equal.
    pub weights: Option<Vec<f64>>,
    pub rrf_k: f64,
}

impl Default for FusionSpec {
    fn default() -> Self {
        Self {
            method: FusionMethod::Nsf,
            normalization: Normalization::ZScore,
            weights: None,
            rrf_k: DEFAULT_RRF_K,
        }
    }
}

impl FusionSpec {
    pub fn weights_for(&self, systems: usize) -> Result<Vec<f64>> {
        let w = self.weights.clone().unwrap_or_else(|| equal_weights(systems));
        methods::check_weights(&w, systems)?;
        Ok(w)
    }

    /// Applies one `key=value` setting (`method`, `norm`, `weights`, `rrf_k`).
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "method" => self.method = value.parse()?,
            "norm" | "normalization" => self.normalization = value.parse()?,
            "weights" => self.weights = Some(parse_weights(value)?),
            "rrf_k" | "rrf-k" => {
                let k: f64 = value
                    .parse()
                    .map_err(|_| Error::InvalidArgument(format!("rrf_k `{value}` is not a number")))?;
                if !(k.is_finite() && k > 0.0) {
                    return Err(Error::InvalidArgument(format!("rrf_k must be > 0, got {k}")));
                }
                self.rrf_k = k;
            }
            other => return Err(Error::InvalidArgument(format!("unknown fusion key `{other}`"))),
        }
        Ok(())
    }

    /// Parses a block of `key=value` lines; blank lines and `#` comments are
    /// skipped.
    pub fn from_kv(text: &str) -> Result<Self> {
        let mut spec = Self::default();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidArgument(format!("expected key=value, got `{line}`")))?;
            spec.set(k, v)?;
        }
        Ok(spec)
    }

    pub fn to_kv(&self) -> String {
        let mut out = format!(
            "method={}\nnorm={}\nrrf_k={}\n",
            self.method, self.normalization, self.rrf_k
        );
        if let Some(w) = &self.weights {
            let joined: Vec<String> = w.iter().map(f64::to_string).collect();
            out.push_str(&format!("weights={}\n", joined.join(",")));
        }
        out
    }

    pub fn label(&self) -> String {
        match self.method {
            FusionMethod::Nsf => format!("nsf-{}", self.normalization),
            m => m.to_string(),
        }
    }
}

pub fn parse_weights(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|w| {
            w.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidArgument(format!("weight `{w}` is not a number")))
        })
        .collect()
}

/// Fuses one query's runs (one per system, in system order).
pub fn fuse_query(runs: &[&RunList], spec: &FusionSpec, dists: Option<&[ScoreDistribution]>) -> Result<RunList> {
    let fused = match spec.method {
        FusionMethod::Bcf => fuse_bcf(runs)?,
        FusionMethod::Rrf => fuse_rrf(runs, spec.rrf_k)?,
        FusionMethod::Nsf => {
            let weights = spec.weights_for(runs.len())?;
            fuse_nsf(runs, &weights, spec.normalization, dists)?
        }
    };
    Ok(fused.with_system_id(spec.label()))
}

/// Per-query runs of every system, aligned over the union of queries.
///
/// A query missing from a system gets an empty run; `depth` truncates every
/// input run before fusion.
pub fn align_queries(systems: &[RunSet], depth: Option<usize>) -> Vec<(QueryId, Vec<RunList>)> {
    let queries: BTreeSet<&QueryId> = systems.iter().flat_map(|s| s.keys()).collect();
    queries
        .into_iter()
        .map(|q| {
            let runs = systems
                .iter()
                .map(|s| {
                    let mut run = s.get(q).cloned().unwrap_or_else(|| RunList::empty(q.clone(), ""));
                    if let Some(d) = depth {
                        run.truncate(d);
                    }
                    run
                })
                .collect();
            (q.clone(), runs)
        })
        .collect()
}

/// Global distributions for percentile normalization, one per system.
pub fn distributions_for(systems: &[RunSet], labels: &[String]) -> Result<Vec<ScoreDistribution>> {
    systems
        .iter()
        .zip(labels)
        .map(|(runs, label)| build_score_distribution(label.clone(), runs.values()))
        .collect()
}

/// Fuses whole run sets query by query.
pub fn fuse_runsets(
    systems: &[RunSet],
    spec: &FusionSpec,
    dists: Option<&[ScoreDistribution]>,
    depth: Option<usize>,
) -> Result<RunSet> {
    if systems.is_empty() {
        return Err(Error::InvalidArgument("fusion needs at least one system".into()));
    }
    if spec.method == FusionMethod::Nsf {
        spec.weights_for(systems.len())?;
    }
    align_queries(systems, depth)
        .into_iter()
        .map(|(q, runs)| {
            let refs: Vec<&RunList> = runs.iter().collect();
            Ok((q, fuse_query(&refs, spec, dists)?))
        })
        .collect()
}
