use std::collections::HashSet;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::binfmt::{read_matrix, write_matrix, Matrix};
use super::{check_finite, check_k, dot, l2_normalize, top_k};
use crate::error::{Error, Result};
use crate::io::{for_each_json_line, open};
use crate::model::{DocId, QueryId, RunList};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseRecord {
    pub id: String,
    pub vector: Vec<f64>,
}

/// Reads `{"id", "vector"}` lines, checking dimensions and finiteness.
pub fn read_dense_records<R: BufRead>(reader: R, origin: &str, normalize: bool) -> Result<Vec<DenseRecord>> {
    let mut out: Vec<DenseRecord> = Vec::new();
    let mut seen = HashSet::new();
    for_each_json_line(reader, origin, |_, mut rec: DenseRecord| {
        if let Some(first) = out.first() {
            if rec.vector.len() != first.vector.len() {
                return Err(Error::DimensionMismatch {
                    id: rec.id,
                    expected: first.vector.len(),
                    actual: rec.vector.len(),
                });
            }
        } else if rec.vector.is_empty() {
            return Err(Error::Validation(format!("empty vector for `{}`", rec.id)));
        }
        if !seen.insert(rec.id.clone()) {
            return Err(Error::Validation(format!("duplicate id `{}`", rec.id)));
        }
        check_finite(&rec.id, &rec.vector)?;
        if normalize {
            l2_normalize(&rec.id, &mut rec.vector)?;
        }
        out.push(rec);
        Ok(())
    })?;
    Ok(out)
}

/// Brute-force index of one vector per document, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct FlatDenseIndex {
    dim: usize,
    ids: Vec<DocId>,
    data: Vec<f64>,
}

impl FlatDenseIndex {
    pub fn from_records(records: Vec<DenseRecord>) -> Result<Self> {
        let Some(first) = records.first() else {
            return Err(Error::InvalidArgument("no vectors to index".into()));
        };
        let dim = first.vector.len();
        let mut ids = Vec::with_capacity(records.len());
        let mut data = Vec::with_capacity(records.len() * dim);
        let mut seen = HashSet::new();
        for rec in records {
            if rec.vector.len() != dim {
                return Err(Error::DimensionMismatch {
                    id: rec.id,
                    expected: dim,
                    actual: rec.vector.len(),
                });
            }
            check_finite(&rec.id, &rec.vector)?;
            if !seen.insert(rec.id.clone()) {
                return Err(Error::Validation(format!("duplicate id `{}`", rec.id)));
            }
            ids.push(DocId::new(rec.id)?);
            data.extend(rec.vector);
        }
        Ok(Self { dim, ids, data })
    }

    pub fn ingest(path: impl AsRef<Path>, normalize: bool) -> Result<Self> {
        let path = path.as_ref();
        let records = read_dense_records(open(path)?, &path.display().to_string(), normalize)?;
        Self::from_records(records)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[DocId] {
        &self.ids
    }

    pub fn vector(&self, row: usize) -> &[f64] {
        &self.data[row * self.dim..(row + 1) * self.dim]
    }

    /// Inner product of `query` with every document, in index order.
    pub fn score_all(&self, query: &[f64]) -> Result<Vec<f64>> {
        if query.len() != self.dim {
            return Err(Error::DimensionMismatch {
                id: "<query>".into(),
                expected: self.dim,
                actual: query.len(),
            });
        }
        Ok(self.data.chunks_exact(self.dim).map(|row| dot(row, query)).collect())
    }

    /// Top-`k` documents by inner product (cosine when both sides are unit
    /// normalized), ties broken by ascending doc id.
    pub fn search(&self, query_id: QueryId, query: &[f64], k: usize) -> Result<RunList> {
        check_k(k)?;
        let scored = self
            .score_all(query)?
            .into_iter()
            .zip(&self.ids)
            .map(|(s, id)| (id.clone(), s))
            .collect();
        RunList::new(query_id, "dense", top_k(scored, k))
    }

    pub fn records(&self) -> impl Iterator<Item = DenseRecord> + '_ {
        self.ids.iter().enumerate().map(|(i, id)| DenseRecord {
            id: id.to_string(),
            vector: self.vector(i).to_vec(),
        })
    }

    /// Writes the index back out as JSON lines.
    pub fn dump_jsonl<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for rec in self.records() {
            serde_json::to_writer(&mut w, &rec)?;
            w.write_all(b"\n")?;
        }
        w.flush()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_matrix(
            path,
            &Matrix {
                dim: self.dim,
                ids: self.ids.iter().map(ToString::to_string).collect(),
                values: self.data.clone(),
            },
        )
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let m = read_matrix(path)?;
        let records = (0..m.rows())
            .map(|i| DenseRecord {
                id: m.ids[i].clone(),
                vector: m.row(i).to_vec(),
            })
            .collect();
        Self::from_records(records)
    }
}
