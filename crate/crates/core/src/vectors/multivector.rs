use std::collections::HashSet;
use std::io::BufRead;
use std::path::Path;

use serde::Deserialize;

use super::binfmt::{read_matrix, write_matrix, Matrix};
use super::{check_finite, check_k, dot, l2_normalize, top_k};
use crate::error::{Error, Result};
use crate::io::{for_each_json_line, open};
use crate::model::{DocId, QueryId, RunList};

/// Per-token embeddings of one text, `rows × dim`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct TokenMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl TokenMatrix {
    pub fn new(id: &str, rows: Vec<Vec<f64>>, normalize: bool) -> Result<Self> {
        let Some(first) = rows.first() else {
            return Err(Error::Validation(format!("`{id}` has no token vectors")));
        };
        let dim = first.len();
        if dim == 0 {
            return Err(Error::Validation(format!("`{id}` has zero-dimensional tokens")));
        }
        let mut data = Vec::with_capacity(rows.len() * dim);
        for mut row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    id: id.to_string(),
                    expected: dim,
                    actual: row.len(),
                });
            }
            check_finite(id, &row)?;
            if normalize {
                l2_normalize(id, &mut row)?;
            }
            data.extend(row);
        }
        Ok(Self { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }
}

/// Late-interaction relevance: for each query token the best-matching
/// document token similarity, summed over query tokens.
pub fn maxsim_score(query: &TokenMatrix, doc: &TokenMatrix) -> Result<f64> {
    if query.dim != doc.dim {
        return Err(Error::DimensionMismatch {
            id: "<tokens>".into(),
            expected: doc.dim,
            actual: query.dim,
        });
    }
    Ok(query
        .iter_rows()
        .map(|q| doc.iter_rows().map(|d| dot(q, d)).fold(f64::NEG_INFINITY, f64::max))
        .sum())
}

#[derive(Deserialize)]
struct MultiRecord {
    id: String,
    tokens: Vec<Vec<f64>>,
}

/// Reads `{"id", "tokens": [[...], ...]}` lines.
pub fn read_multivector_records<R: BufRead>(
    reader: R,
    origin: &str,
    normalize: bool,
) -> Result<Vec<(String, TokenMatrix)>> {
    let mut out: Vec<(String, TokenMatrix)> = Vec::new();
    let mut seen = HashSet::new();
    for_each_json_line(reader, origin, |_, rec: MultiRecord| {
        let m = TokenMatrix::new(&rec.id, rec.tokens, normalize)?;
        if let Some((_, first)) = out.first() {
            if m.dim != first.dim {
                return Err(Error::DimensionMismatch {
                    id: rec.id,
                    expected: first.dim,
                    actual: m.dim,
                });
            }
        }
        if !seen.insert(rec.id.clone()) {
            return Err(Error::Validation(format!("duplicate id `{}`", rec.id)));
        }
        out.push((rec.id, m));
        Ok(())
    })?;
    Ok(out)
}

/// Exhaustive MaxSim store: one token matrix per document.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiVectorStore {
    dim: usize,
    ids: Vec<DocId>,
    docs: Vec<TokenMatrix>,
}

impl MultiVectorStore {
    pub fn from_matrices(docs: Vec<(String, TokenMatrix)>) -> Result<Self> {
        let Some((_, first)) = docs.first() else {
            return Err(Error::InvalidArgument("no documents to index".into()));
        };
        let dim = first.dim;
        let mut ids = Vec::with_capacity(docs.len());
        let mut mats = Vec::with_capacity(docs.len());
        let mut seen = HashSet::new();
        for (id, m) in docs {
            if m.dim != dim {
                return Err(Error::DimensionMismatch {
                    id,
                    expected: dim,
                    actual: m.dim,
                });
            }
            if !seen.insert(id.clone()) {
                return Err(Error::Validation(format!("duplicate id `{id}`")));
            }
            ids.push(DocId::new(id)?);
            mats.push(m);
        }
        Ok(Self { dim, ids, docs: mats })
    }

    pub fn ingest(path: impl AsRef<Path>, normalize: bool) -> Result<Self> {
        let path = path.as_ref();
        Self::from_matrices(read_multivector_records(
            open(path)?,
            &path.display().to_string(),
            normalize,
        )?)
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

    pub fn doc(&self, i: usize) -> &TokenMatrix {
        &self.docs[i]
    }

    pub fn total_tokens(&self) -> usize {
        self.docs.iter().map(TokenMatrix::rows).sum()
    }

    pub fn search(&self, query_id: QueryId, query: &TokenMatrix, k: usize) -> Result<RunList> {
        check_k(k)?;
        let scored = self
            .ids
            .iter()
            .zip(&self.docs)
            .map(|(id, doc)| Ok((id.clone(), maxsim_score(query, doc)?)))
            .collect::<Result<Vec<_>>>()?;
        RunList::new(query_id, "multivector", top_k(scored, k))
    }

    /// Stores every token row in an FBVX matrix; the id file repeats each
    /// document id once per token row.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut ids = Vec::with_capacity(self.total_tokens());
        let mut values = Vec::with_capacity(self.total_tokens() * self.dim);
        for (id, doc) in self.ids.iter().zip(&self.docs) {
            for row in doc.iter_rows() {
                ids.push(id.to_string());
                values.extend_from_slice(row);
            }
        }
        write_matrix(
            path,
            &Matrix {
                dim: self.dim,
                ids,
                values,
            },
        )
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let m = read_matrix(path)?;
        let mut docs: Vec<(String, Vec<Vec<f64>>)> = Vec::new();
        for i in 0..m.rows() {
            match docs.last_mut() {
                Some((id, rows)) if *id == m.ids[i] => rows.push(m.row(i).to_vec()),
                _ => docs.push((m.ids[i].clone(), vec![m.row(i).to_vec()])),
            }
        }
        let mats = docs
            .into_iter()
            .map(|(id, rows)| {
                let tm = TokenMatrix::new(&id, rows, false)?;
                Ok((id, tm))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_matrices(mats)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tm(rows: &[&[f64]]) -> TokenMatrix {
        TokenMatrix::new("t", rows.iter().map(|r| r.to_vec()).collect(), false).unwrap()
    }

    #[test]
    fn identical_unit_token_scores_one() {
        let q = tm(&[&[0.6, 0.8]]);
        let d = tm(&[&[1.0, 0.0], &[0.6, 0.8]]);
        assert!((maxsim_score(&q, &d).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn singleton_document_sums_both_queries() {
        let q = tm(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let d = tm(&[&[0.3, 0.7]]);
        assert!((maxsim_score(&q, &d).unwrap() - (0.3 + 0.7)).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch() {
        let q = tm(&[&[1.0, 0.0]]);
        let d = tm(&[&[1.0, 0.0, 0.0]]);
        assert!(maxsim_score(&q, &d).is_err());
        assert!(TokenMatrix::new("x", vec![vec![1.0], vec![1.0, 2.0]], false).is_err());
        assert!(TokenMatrix::new("x", vec![], false).is_err());
    }

    #[test]
    fn single_document_store() {
        let store = MultiVectorStore::from_matrices(vec![("only".into(), tm(&[&[1.0, 2.0]]))]).unwrap();
        let q = tm(&[&[1.0, 1.0]]);
        let run = store.search(QueryId::new("q").unwrap(), &q, 5).unwrap();
        assert_eq!(run.len(), 1);
        assert_eq!(run.entries()[0].1, 3.0);
    }

    #[test]
    fn fbvx_round_trip_groups_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mv.fbvx");
        let store = MultiVectorStore::from_matrices(vec![
            ("a".into(), tm(&[&[0.5, 0.25], &[1.0, 0.0]])),
            ("b".into(), tm(&[&[0.0, 1.0]])),
        ])
        .unwrap();
        store.save(&path).unwrap();
        let back = MultiVectorStore::load(&path).unwrap();
        assert_eq!(back, store);
    }
}
