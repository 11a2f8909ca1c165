//! Hybrid retrieval and late fusion.
//!
//! `fusekit` scores a corpus with BM25, flat dense vectors, learned-sparse
//! term weights and late-interaction token matrices, fuses the resulting
//! rankings (Borda count, reciprocal rank, normalized score fusion), and
//! evaluates them with recall, reciprocal rank and R-precision. It also
//! estimates per-query inference cost and analyzes how two retrievers'
//! score distributions complement each other.
//!
//! ```
//! use fusekit::fusion::{fuse_rrf, DEFAULT_RRF_K};
//! use fusekit::model::{DocId, QueryId, RunList};
//!
//! let q = QueryId::new("q1").unwrap();
//! let doc = |s: &str| DocId::new(s).unwrap();
//! let a = RunList::new(q.clone(), "bm25", vec![(doc("d1"), 3.0), (doc("d2"), 1.0)]).unwrap();
//! let b = RunList::new(q, "dense", vec![(doc("d2"), 0.9), (doc("d3"), 0.1)]).unwrap();
//! let fused = fuse_rrf(&[&a, &b], DEFAULT_RRF_K).unwrap();
//! assert_eq!(fused.entries()[0].0.as_str(), "d2");
//! ```

pub mod analysis;
pub mod efficiency;
pub mod error;
pub mod fusion;
pub mod io;
pub mod lexical;
pub mod metrics;
pub mod model;
pub mod synth;
pub mod vectors;

pub use error::{Error, Result};
pub use model::{Corpus, DocId, Document, Qrels, Query, QueryId, RunList, RunSet};
