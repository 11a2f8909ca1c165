//! Scoring over precomputed embeddings: flat dense vectors, learned-sparse
//! term weights, and per-token matrices for late interaction.
//!
//! Embeddings come from external encoders as JSON lines (`id` plus `vector`,
//! `weights` or `tokens`) or as the FBVX binary matrix format.

mod binfmt;
mod dense;
mod multivector;
mod sparse;

pub use binfmt::{ids_path, read_matrix, read_matrix_from, write_matrix, write_matrix_to, Matrix, HEADER_BYTES};
pub use dense::{read_dense_records, DenseRecord, FlatDenseIndex};
pub use multivector::{maxsim_score, read_multivector_records, MultiVectorStore, TokenMatrix};
pub use sparse::{read_sparse_records, SparseIndex, SparseVector};

use crate::error::{Error, Result};
use crate::model::{ranking_order, DocId};

/// Plain inner product; callers guarantee equal lengths.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Scales `v` to unit L2 norm.
pub fn l2_normalize(id: &str, v: &mut [f64]) -> Result<()> {
    let norm = dot(v, v).sqrt();
    if norm == 0.0 {
        return Err(Error::Validation(format!("cannot normalize zero vector `{id}`")));
    }
    v.iter_mut().for_each(|x| *x /= norm);
    Ok(())
}

pub(crate) fn check_finite(id: &str, values: &[f64]) -> Result<()> {
    match values.iter().find(|x| !x.is_finite()) {
        Some(x) => Err(Error::Validation(format!("non-finite value {x} in `{id}`"))),
        None => Ok(()),
    }
}

pub(crate) fn top_k(mut scored: Vec<(DocId, f64)>, k: usize) -> Vec<(DocId, f64)> {
    if k < scored.len() {
        scored.select_nth_unstable_by(k, ranking_order);
        scored.truncate(k);
    }
    scored.sort_by(ranking_order);
    scored
}

pub(crate) fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        Err(Error::InvalidArgument("k must be ≥ 1".into()))
    } else {
        Ok(())
    }
}
