use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, Read, Write};
use std::path::Path;

use integer_encoding::{VarIntReader, VarIntWriter};
use serde::{Deserialize, Serialize};

use super::{check_k, top_k};
use crate::error::{Error, Result};
use crate::io::{create, for_each_json_line, open};
use crate::lexical::{read_array, read_string, read_u32, read_u64, write_bytes};
use crate::model::{DocId, QueryId, RunList};

/// Non-negative term weights; only strictly positive weights are stored.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<String, f64>", into = "BTreeMap<String, f64>")]
pub struct SparseVector(BTreeMap<String, f64>);

impl SparseVector {
    pub fn new(weights: BTreeMap<String, f64>) -> Result<Self> {
        let mut kept = BTreeMap::new();
        for (term, w) in weights {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::Validation(format!(
                    "sparse weight for `{term}` must be finite and ≥ 0, got {w}"
                )));
            }
            if w > 0.0 {
                kept.insert(term, w);
            }
        }
        Ok(Self(kept))
    }

    pub fn get(&self, term: &str) -> f64 {
        self.0.get(term).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(t, w)| (t.as_str(), *w))
    }

    pub fn nnz(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<BTreeMap<String, f64>> for SparseVector {
    type Error = Error;
    fn try_from(value: BTreeMap<String, f64>) -> Result<Self> {
        Self::new(value)
    }
}

impl From<SparseVector> for BTreeMap<String, f64> {
    fn from(value: SparseVector) -> Self {
        value.0
    }
}

#[derive(Debug, Deserialize, Serialize)]
struct SparseRecord {
    id: String,
    weights: SparseVector,
}

/// Reads `{"id", "weights": {term: weight}}` lines.
pub fn read_sparse_records<R: BufRead>(reader: R, origin: &str) -> Result<Vec<(String, SparseVector)>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for_each_json_line(reader, origin, |_, rec: SparseRecord| {
        if !seen.insert(rec.id.clone()) {
            return Err(Error::Validation(format!("duplicate id `{}`", rec.id)));
        }
        out.push((rec.id, rec.weights));
        Ok(())
    })?;
    Ok(out)
}

/// Inverted index over learned-sparse document vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseIndex {
    doc_ids: Vec<DocId>,
    nnz: Vec<u32>,
    postings: BTreeMap<String, Vec<(u32, f64)>>,
}

impl SparseIndex {
    pub fn from_vectors(docs: Vec<(String, SparseVector)>) -> Result<Self> {
        if docs.is_empty() {
            return Err(Error::InvalidArgument("no vectors to index".into()));
        }
        let mut doc_ids = Vec::with_capacity(docs.len());
        let mut nnz = Vec::with_capacity(docs.len());
        let mut postings: BTreeMap<String, Vec<(u32, f64)>> = BTreeMap::new();
        let mut seen = HashSet::new();
        for (ord, (id, vector)) in docs.into_iter().enumerate() {
            if !seen.insert(id.clone()) {
                return Err(Error::Validation(format!("duplicate id `{id}`")));
            }
            nnz.push(vector.nnz() as u32);
            for (term, w) in vector.0 {
                postings.entry(term).or_default().push((ord as u32, w));
            }
            doc_ids.push(DocId::new(id)?);
        }
        Ok(Self { doc_ids, nnz, postings })
    }

    pub fn ingest(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_vectors(read_sparse_records(open(path)?, &path.display().to_string())?)
    }

    pub fn len(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.doc_ids.is_empty()
    }

    pub fn doc_ids(&self) -> &[DocId] {
        &self.doc_ids
    }

    pub fn nnz(&self, row: usize) -> u32 {
        self.nnz[row]
    }

    pub fn num_terms(&self) -> usize {
        self.postings.len()
    }

    /// Mean posting-list length over the terms of the index.
    pub fn avg_posting_len(&self) -> f64 {
        if self.postings.is_empty() {
            return 0.0;
        }
        let total: usize = self.postings.values().map(Vec::len).sum();
        total as f64 / self.postings.len() as f64
    }

    pub fn postings(&self, term: &str) -> &[(u32, f64)] {
        self.postings.get(term).map_or(&[], Vec::as_slice)
    }

    /// Σ_t q_t·a_t for every document touched by a query term, by postings
    /// traversal.
    pub fn search(&self, query_id: QueryId, query: &SparseVector, k: usize) -> Result<RunList> {
        check_k(k)?;
        let mut acc = vec![0.0f64; self.doc_ids.len()];
        let mut touched = vec![false; self.doc_ids.len()];
        for (term, qw) in query.iter() {
            for &(doc, dw) in self.postings(term) {
                acc[doc as usize] += qw * dw;
                touched[doc as usize] = true;
            }
        }
        let scored = acc
            .into_iter()
            .zip(touched)
            .enumerate()
            .filter(|(_, (_, t))| *t)
            .map(|(ord, (s, _))| (self.doc_ids[ord].clone(), s))
            .collect();
        RunList::new(query_id, "sparse", top_k(scored, k))
    }

    /// Binary layout mirrors the lexical index, with f32 weights in place of
    /// term frequencies. See `docs/FORMATS.md`.
    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(SPARSE_MAGIC)?;
        w.write_all(&SPARSE_VERSION.to_le_bytes())?;
        w.write_all(&(self.doc_ids.len() as u64).to_le_bytes())?;
        for (id, nnz) in self.doc_ids.iter().zip(&self.nnz) {
            write_bytes(&mut w, id.as_str().as_bytes())?;
            w.write_varint(*nnz)?;
        }
        w.write_varint(self.postings.len() as u64)?;
        for (term, list) in &self.postings {
            write_bytes(&mut w, term.as_bytes())?;
            w.write_varint(list.len() as u64)?;
            let mut prev = 0u32;
            for &(doc, weight) in list {
                w.write_varint(doc - prev)?;
                w.write_all(&(weight as f32).to_le_bytes())?;
                prev = doc;
            }
        }
        w.flush()
    }

    pub fn read_from<R: Read>(mut r: R, origin: &str) -> Result<Self> {
        let bad = |msg: String| Error::parse(origin, 0, msg);
        let io = |e: std::io::Error| Error::parse(origin, 0, e.to_string());
        let magic: [u8; 4] = read_array(&mut r).map_err(io)?;
        if &magic != SPARSE_MAGIC {
            return Err(bad("not a sparse index (bad magic)".into()));
        }
        let version = read_u32(&mut r).map_err(io)?;
        if version != SPARSE_VERSION {
            return Err(bad(format!("unsupported sparse index version {version}")));
        }
        let n_docs = read_u64(&mut r).map_err(io)? as usize;
        let mut doc_ids = Vec::with_capacity(n_docs.min(1 << 24));
        let mut nnz = Vec::with_capacity(n_docs.min(1 << 24));
        for _ in 0..n_docs {
            let id = read_string(&mut r, origin)?;
            doc_ids.push(DocId::new(id).map_err(|e| bad(e.to_string()))?);
            nnz.push(r.read_varint::<u32>().map_err(io)?);
        }
        let n_terms: u64 = r.read_varint().map_err(io)?;
        let mut postings = BTreeMap::new();
        for _ in 0..n_terms {
            let term = read_string(&mut r, origin)?;
            let len: u64 = r.read_varint().map_err(io)?;
            if len == 0 || len as usize > n_docs {
                return Err(bad(format!("term `{term}` has {len} postings")));
            }
            let mut list = Vec::with_capacity(len as usize);
            let mut doc = 0u32;
            for i in 0..len {
                let delta: u32 = r.read_varint().map_err(io)?;
                if i > 0 && delta == 0 {
                    return Err(bad(format!("postings for `{term}` are not strictly increasing")));
                }
                doc = doc
                    .checked_add(delta)
                    .filter(|&d| (d as usize) < n_docs)
                    .ok_or_else(|| bad(format!("posting for `{term}` points past the corpus")))?;
                let weight = f32::from_le_bytes(read_array(&mut r).map_err(io)?) as f64;
                if !(weight.is_finite() && weight > 0.0) {
                    return Err(bad(format!("non-positive weight in postings for `{term}`")));
                }
                list.push((doc, weight));
            }
            postings.insert(term, list);
        }
        Ok(Self { doc_ids, nnz, postings })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        self.write_to(create(path)?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::read_from(open(path)?, &path.display().to_string())
    }
}

const SPARSE_MAGIC: &[u8; 4] = b"FKSP";
const SPARSE_VERSION: u32 = 1;
