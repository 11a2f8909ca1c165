//! Browser demo over the synthetic benchmark. The `Explorer` type and
//! `cost_report` are plain Rust and tested natively; the `wasm` module wraps
//! them for JavaScript with JSON strings in and out.

use std::collections::{BTreeMap, HashMap};

use fusekit::analysis::{export_histograms, normalized_distribution, HistogramBin};
use fusekit::efficiency::{estimate_flat_index_size, CostModelInputs, FlopsReport, IndexSize};
use fusekit::fusion::{distributions_for, fuse_runsets, FusionMethod, FusionSpec, Normalization, ScoreDistribution};
use fusekit::lexical::{tokenize, Bm25Params, LexicalIndex};
use fusekit::metrics::{mean_metric, Metric};
use fusekit::model::{DocId, Qrels, Query, QueryId, RunList, RunSet};
use fusekit::synth::{generate, SynthConfig};
use fusekit::vectors::{l2_normalize, FlatDenseIndex};
use fusekit::{Error, Result};
use serde::Serialize;

pub mod wasm;

pub const SYSTEMS: [&str; 2] = ["bm25", "dense"];
const DEPTH: usize = 100;
const CUTOFF: usize = 10;
const SNIPPET_CHARS: usize = 80;

/// BM25 and dense runs over one generated benchmark.
pub struct Explorer {
    texts: HashMap<DocId, String>,
    queries: Vec<Query>,
    qrels: Qrels,
    systems: Vec<RunSet>,
    dists: Vec<ScoreDistribution>,
}

#[derive(Debug, Serialize)]
pub struct QueryInfo {
    pub id: String,
    pub text: String,
    pub relevant: usize,
}

/// Mean R@10 of NSF as the BM25 weight goes from 0 to 1, for every
/// normalization, next to the single systems and the rank-based methods.
#[derive(Debug, Serialize)]
pub struct Sweep {
    pub alphas: Vec<f64>,
    pub nsf: BTreeMap<String, Vec<f64>>,
    pub baselines: BTreeMap<String, f64>,
}

#[derive(Debug, Serialize)]
pub struct Hit {
    pub doc: String,
    pub score: f64,
    pub relevant: bool,
    pub snippet: String,
}

#[derive(Debug, Serialize)]
pub struct Column {
    pub name: String,
    pub recall: f64,
    pub hits: Vec<Hit>,
}

#[derive(Debug, Serialize)]
pub struct QueryView {
    pub query: String,
    pub text: String,
    pub columns: Vec<Column>,
}

#[derive(Debug, Serialize)]
pub struct SystemHistogram {
    pub system: String,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub bins: Vec<HistogramBin>,
}

#[derive(Debug, Serialize)]
pub struct IndexRow {
    pub dim: u64,
    pub size: IndexSize,
}

#[derive(Debug, Serialize)]
pub struct CostReport {
    pub inputs: CostModelInputs,
    pub flops: FlopsReport,
    /// Flat index size at the input dimension, then at 384, 768 and 1024.
    pub index: Vec<IndexRow>,
}

pub fn parse_norm(name: &str) -> Result<Normalization> {
    name.parse()
}

fn snippet(text: &str) -> String {
    match text.char_indices().nth(SNIPPET_CHARS) {
        Some((i, _)) => format!("{}...", &text[..i]),
        None => text.to_string(),
    }
}

impl Explorer {
    pub fn new(seed: u64) -> Result<Self> {
        let bench = generate(&SynthConfig {
            seed,
            ..SynthConfig::default()
        })?;
        let lexical = LexicalIndex::build(&bench.corpus)?;
        let bm25 = bench
            .queries
            .iter()
            .map(|q| {
                let run = lexical.search(Bm25Params::GENERAL, q.id.clone(), &tokenize(&q.text), DEPTH)?;
                Ok((q.id.clone(), run.with_system_id(SYSTEMS[0])))
            })
            .collect::<Result<RunSet>>()?;
        let mut docs = bench.dense_docs.clone();
        for d in &mut docs {
            l2_normalize(&d.id, &mut d.vector)?;
        }
        let index = FlatDenseIndex::from_records(docs)?;
        let dense = bench
            .dense_queries
            .iter()
            .map(|q| {
                let id = QueryId::new(q.id.clone())?;
                let mut v = q.vector.clone();
                l2_normalize(&q.id, &mut v)?;
                Ok((id.clone(), index.search(id, &v, DEPTH)?.with_system_id(SYSTEMS[1])))
            })
            .collect::<Result<RunSet>>()?;
        let systems = vec![bm25, dense];
        let labels: Vec<String> = SYSTEMS.iter().map(|s| s.to_string()).collect();
        let dists = distributions_for(&systems, &labels)?;
        Ok(Self {
            texts: bench.corpus.iter().map(|d| (d.id.clone(), d.text.clone())).collect(),
            queries: bench.queries,
            qrels: bench.qrels,
            systems,
            dists,
        })
    }

    pub fn queries(&self) -> Vec<QueryInfo> {
        self.queries
            .iter()
            .map(|q| QueryInfo {
                id: q.id.to_string(),
                text: q.text.clone(),
                relevant: self.qrels.relevant(q.id.as_str()).map_or(0, |r| r.len()),
            })
            .collect()
    }

    fn fuse(&self, spec: &FusionSpec) -> Result<RunSet> {
        fuse_runsets(&self.systems, spec, Some(&self.dists), None)
    }

    fn nsf(alpha: f64, norm: Normalization) -> Result<FusionSpec> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidArgument(format!("alpha {alpha} outside [0, 1]")));
        }
        Ok(FusionSpec {
            method: FusionMethod::Nsf,
            normalization: norm,
            weights: Some(vec![alpha, 1.0 - alpha]),
            ..FusionSpec::default()
        })
    }

    fn recall(&self, runs: &RunSet) -> Result<f64> {
        mean_metric(runs.values(), &self.qrels, Metric::Recall(CUTOFF))
    }

    pub fn sweep(&self, step: f64) -> Result<Sweep> {
        let n = (1.0 / step).round();
        if !(step > 0.0 && (n * step - 1.0).abs() < 1e-9) {
            return Err(Error::InvalidArgument(format!("step {step} does not divide 1")));
        }
        let alphas: Vec<f64> = (0..=n as u32).map(|i| i as f64 / n).collect();
        let mut nsf = BTreeMap::new();
        for norm in [Normalization::MinMax, Normalization::ZScore, Normalization::Percentile] {
            let curve = alphas
                .iter()
                .map(|&a| self.recall(&self.fuse(&Self::nsf(a, norm)?)?))
                .collect::<Result<Vec<_>>>()?;
            nsf.insert(norm.name().to_string(), curve);
        }
        let mut baselines = BTreeMap::new();
        for (name, runs) in SYSTEMS.iter().zip(&self.systems) {
            baselines.insert(name.to_string(), self.recall(runs)?);
        }
        for method in [FusionMethod::Rrf, FusionMethod::Bcf] {
            let spec = FusionSpec {
                method,
                ..FusionSpec::default()
            };
            baselines.insert(method.to_string(), self.recall(&self.fuse(&spec)?)?);
        }
        Ok(Sweep { alphas, nsf, baselines })
    }

    fn column(&self, name: &str, run: &RunList) -> Result<Column> {
        let q = run.query_id().as_str();
        let recall = match self.qrels.relevant(q) {
            Some(_) => fusekit::metrics::recall_at_k(run, &self.qrels, CUTOFF)?,
            None => 0.0,
        };
        let hits = run
            .entries()
            .iter()
            .take(CUTOFF)
            .map(|(d, s)| Hit {
                doc: d.to_string(),
                score: *s,
                relevant: self.qrels.is_relevant(q, d.as_str()),
                snippet: self.texts.get(d).map(|t| snippet(t)).unwrap_or_default(),
            })
            .collect();
        Ok(Column {
            name: name.to_string(),
            recall,
            hits,
        })
    }

    /// Top-10 of each system and of NSF at the given BM25 weight.
    pub fn inspect(&self, query: &str, alpha: f64, norm: Normalization) -> Result<QueryView> {
        let q = self
            .queries
            .iter()
            .find(|q| q.id.as_str() == query)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown query `{query}`")))?;
        let empty = |s: &str| RunList::empty(q.id.clone(), s);
        let mut columns = Vec::new();
        for (name, runs) in SYSTEMS.iter().zip(&self.systems) {
            columns.push(self.column(name, runs.get(&q.id).unwrap_or(&empty(name)))?);
        }
        let fused = self.fuse(&Self::nsf(alpha, norm)?)?;
        let label = format!("nsf {norm} α={alpha:.2}");
        columns.push(self.column(&label, fused.get(&q.id).unwrap_or(&empty("nsf")))?);
        Ok(QueryView {
            query: q.id.to_string(),
            text: q.text.clone(),
            columns,
        })
    }

    /// Pooled normalized score histograms of both systems.
    pub fn histograms(&self, norm: Normalization, bins: usize) -> Result<Vec<SystemHistogram>> {
        SYSTEMS
            .iter()
            .zip(&self.systems)
            .zip(&self.dists)
            .map(|((name, runs), raw)| {
                let dist = normalized_distribution(name, runs, norm, Some(raw))?;
                Ok(SystemHistogram {
                    system: name.to_string(),
                    q1: dist.q1(),
                    median: dist.median(),
                    q3: dist.q3(),
                    bins: export_histograms(&dist, bins)?,
                })
            })
            .collect()
    }

    /// Percentile of a raw score within a system's pooled distribution.
    pub fn percentile(&self, system: &str, score: f64) -> Result<f64> {
        let i = SYSTEMS
            .iter()
            .position(|s| *s == system)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown system `{system}`")))?;
        if !score.is_finite() {
            return Err(Error::InvalidArgument("score must be finite".into()));
        }
        Ok(self.dists[i].percentile(score))
    }

    /// Raw score range of a system, for the lookup slider.
    pub fn score_range(&self, system: &str) -> Option<(f64, f64)> {
        let i = SYSTEMS.iter().position(|s| *s == system)?;
        Some((self.dists[i].min(), self.dists[i].max()))
    }
}

pub fn cost_report(inputs: CostModelInputs) -> Result<CostReport> {
    inputs.validate()?;
    let mut dims = vec![inputs.dim];
    dims.extend([384, 768, 1024].into_iter().filter(|d| *d != inputs.dim));
    let index = dims
        .into_iter()
        .map(|dim| IndexRow {
            dim,
            size: estimate_flat_index_size(dim, inputs.bits_per_value, inputs.corpus_size),
        })
        .collect();
    Ok(CostReport {
        flops: FlopsReport::from_inputs(&inputs),
        index,
        inputs,
    })
}
