//! Inference cost accounting: FLOPs per query, flat index footprint, and
//! streaming (batch size one) latency.
//!
//! Encoder forward-pass costs are inputs measured by an external profiler;
//! the defaults below are the figures behind the reference cost table.

use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Forward pass of a base-size bi-encoder.
pub const ENCODER_FORWARD_FLOPS: f64 = 2.6e9;
/// Forward pass of a base-size cross-encoder on a 512-token pair.
pub const CROSS_ENCODER_FORWARD_FLOPS: f64 = 2.2e10;
pub const MIB: f64 = (1u64 << 20) as f64;

/// Inputs of the analytic cost model. Lengths are in tokens. Missing fields
/// deserialize to the defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CostModelInputs {
    pub avg_query_len: f64,
    pub avg_doc_len: f64,
    pub corpus_size: u64,
    /// Dimension of single-vector embeddings.
    pub dim: u64,
    /// Dimension of late-interaction token embeddings.
    pub token_dim: u64,
    pub bits_per_value: u64,
    pub forward_flops: f64,
    pub cross_forward_flops: f64,
    pub avg_query_nonzeros: f64,
    pub avg_posting_len: f64,
    pub rerank_depth: u64,
}

impl Default for CostModelInputs {
    /// Statute-retrieval setting: 15-token queries, 157-token articles,
    /// 27,942 articles, 768-dim vectors, 128-dim token vectors, 32-bit
    /// storage, 178 active query terms over 378-long posting lists, and
    /// 1,000 re-ranked candidates.
    fn default() -> Self {
        Self {
            avg_query_len: 15.0,
            avg_doc_len: 157.0,
            corpus_size: 27_942,
            dim: 768,
            token_dim: 128,
            bits_per_value: 32,
            forward_flops: ENCODER_FORWARD_FLOPS,
            cross_forward_flops: CROSS_ENCODER_FORWARD_FLOPS,
            avg_query_nonzeros: 178.0,
            avg_posting_len: 378.0,
            rerank_depth: 1000,
        }
    }
}

impl CostModelInputs {
    pub fn validate(&self) -> Result<()> {
        let reals = [
            ("avg_query_len", self.avg_query_len),
            ("avg_doc_len", self.avg_doc_len),
            ("forward_flops", self.forward_flops),
            ("cross_forward_flops", self.cross_forward_flops),
            ("avg_query_nonzeros", self.avg_query_nonzeros),
            ("avg_posting_len", self.avg_posting_len),
        ];
        for (name, v) in reals {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidArgument(format!("{name} must be ≥ 0, got {v}")));
            }
        }
        if self.corpus_size == 0 {
            return Err(Error::InvalidArgument("corpus size must be ≥ 1".into()));
        }
        Ok(())
    }
}

/// Two multiplications, one addition and one division per query term and
/// document: `4·q̄·|C|`.
pub fn flops_bm25(avg_query_len: f64, corpus_size: u64) -> f64 {
    4.0 * avg_query_len * corpus_size as f64
}

/// One encoder pass plus `|C|` inner products of `d` multiplications and
/// `d − 1` additions.
pub fn flops_dense(forward_flops: f64, dim: u64, corpus_size: u64) -> f64 {
    forward_flops + (2 * dim).saturating_sub(1) as f64 * corpus_size as f64
}

/// One encoder pass plus a multiply-add per (active query term, posting).
pub fn flops_sparse(forward_flops: f64, avg_query_nonzeros: f64, avg_posting_len: f64) -> f64 {
    forward_flops + 2.0 * avg_query_nonzeros * avg_posting_len
}

/// Exhaustive MaxSim over the corpus, summing the enumerated components per
/// document: `2·d·q̄·ā` for token inner products, `q̄·ā` for the row-wise
/// maxima and `q̄` for the final sum.
pub fn flops_multivector(forward_flops: f64, dim: u64, avg_query_len: f64, avg_doc_len: f64, corpus_size: u64) -> f64 {
    let (d, q, a) = (dim as f64, avg_query_len, avg_doc_len);
    forward_flops + (2.0 * d * q * a + q * a + q) * corpus_size as f64
}

/// The closed form `C_fw + q̄²·(2·d·ā + ā + 1)·|C|`, which is a factor `q̄`
/// above [`flops_multivector`]. Reported alongside it, not used for ranking.
pub fn flops_multivector_closed_form(
    forward_flops: f64,
    dim: u64,
    avg_query_len: f64,
    avg_doc_len: f64,
    corpus_size: u64,
) -> f64 {
    let (d, q, a) = (dim as f64, avg_query_len, avg_doc_len);
    forward_flops + q * q * (2.0 * d * a + a + 1.0) * corpus_size as f64
}

/// One cross-encoder pass per re-ranked candidate.
pub fn flops_cross_encoder(rerank_depth: u64, forward_flops: f64) -> f64 {
    rerank_depth as f64 * forward_flops
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlopsReport {
    pub bm25: f64,
    pub dense: f64,
    pub sparse: f64,
    pub multivector: f64,
    pub multivector_closed_form: f64,
    pub cross_encoder: f64,
}

impl FlopsReport {
    pub fn from_inputs(i: &CostModelInputs) -> Self {
        Self {
            bm25: flops_bm25(i.avg_query_len, i.corpus_size),
            dense: flops_dense(i.forward_flops, i.dim, i.corpus_size),
            sparse: flops_sparse(i.forward_flops, i.avg_query_nonzeros, i.avg_posting_len),
            multivector: flops_multivector(
                i.forward_flops,
                i.token_dim,
                i.avg_query_len,
                i.avg_doc_len,
                i.corpus_size,
            ),
            multivector_closed_form: flops_multivector_closed_form(
                i.forward_flops,
                i.token_dim,
                i.avg_query_len,
                i.avg_doc_len,
                i.corpus_size,
            ),
            cross_encoder: flops_cross_encoder(i.rerank_depth, i.cross_forward_flops),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IndexSize {
    pub bytes: u64,
    pub mib: f64,
}

impl IndexSize {
    pub fn from_bytes(bytes: u64) -> Self {
        Self {
            bytes,
            mib: bytes as f64 / MIB,
        }
    }

    pub fn ratio_to(&self, plaintext_bytes: u64) -> Option<f64> {
        (plaintext_bytes > 0).then(|| self.bytes as f64 / plaintext_bytes as f64)
    }
}

/// Flat index storing `|C|` vectors of `d` values at `b` bits each.
pub fn estimate_flat_index_size(dim: u64, bits_per_value: u64, corpus_size: u64) -> IndexSize {
    let bits = dim * bits_per_value * corpus_size;
    IndexSize::from_bytes(bits.div_ceil(8))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LatencyReport {
    pub mean_secs: f64,
    pub min_secs: f64,
    pub max_secs: f64,
    pub count: usize,
    pub warmup: usize,
    pub samples_secs: Vec<f64>,
}

pub const DEFAULT_WARMUP: usize = 3;

/// Times `search` on each query individually (batch size one) with a
/// monotonic clock, after `warmup` unrecorded calls cycling over the queries.
pub fn measure_latency<Q, F>(queries: &[Q], warmup: usize, mut search: F) -> Result<LatencyReport>
where
    F: FnMut(&Q),
{
    if queries.is_empty() {
        return Err(Error::InvalidArgument("latency needs at least one query".into()));
    }
    for q in queries.iter().cycle().take(warmup) {
        search(q);
    }
    let samples: Vec<f64> = queries
        .iter()
        .map(|q| {
            let start = Instant::now();
            search(q);
            start.elapsed().as_secs_f64()
        })
        .collect();
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    let min = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let max = samples.iter().copied().fold(0.0, f64::max);
    Ok(LatencyReport {
        mean_secs: mean,
        min_secs: min,
        max_secs: max,
        count: samples.len(),
        warmup,
        samples_secs: samples,
    })
}

/// One row of the efficiency table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProfileRow {
    pub system: String,
    pub index: Option<IndexSize>,
    pub ratio: Option<f64>,
    pub latency_secs: Option<f64>,
    pub flops: f64,
}

pub fn render_profile_table(rows: &[ProfileRow]) -> String {
    let width = rows.iter().map(|r| r.system.len()).chain([6]).max().unwrap_or(6);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<width$}  {:>10}  {:>7}  {:>12}  {:>8}",
        "system", "disk(MiB)", "ratio", "latency(s/q)", "FLOPs"
    );
    for r in rows {
        let disk = r.index.map_or("--".to_string(), |s| match s.mib {
            m if m >= 0.1 => format!("{m:.1}"),
            m => format!("{m:.4}"),
        });
        let ratio = r.ratio.map_or("--".to_string(), |x| format!("x{x:.1}"));
        let lat = r.latency_secs.map_or("--".to_string(), |x| format!("{x:.6}"));
        let _ = writeln!(
            out,
            "{:<width$}  {:>10}  {:>7}  {:>12}  {:>8.1e}",
            r.system, disk, ratio, lat, r.flops
        );
    }
    out
}
