//! Domain types shared by every retriever, fusion method and metric.

use std::borrow::Borrow;
use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

macro_rules! text_id {
    ($name:ident, $what:literal) => {
        #[doc = concat!("Opaque ", $what, " identifier: non-empty, no whitespace.")]
        #[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(try_from = "String", into = "String")]
        pub struct $name(String);

        impl $name {
            pub fn new(id: impl Into<String>) -> Result<Self> {
                let id = id.into();
                if id.is_empty() {
                    return Err(Error::Validation(concat!("empty ", $what, " id").into()));
                }
                if id.chars().any(char::is_whitespace) {
                    return Err(Error::Validation(format!(
                        concat!($what, " id `{}` contains whitespace"),
                        id
                    )));
                }
                Ok(Self(id))
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl Borrow<str> for $name {
            fn borrow(&self) -> &str {
                &self.0
            }
        }

        impl TryFrom<String> for $name {
            type Error = Error;
            fn try_from(value: String) -> Result<Self> {
                Self::new(value)
            }
        }

        impl TryFrom<&str> for $name {
            type Error = Error;
            fn try_from(value: &str) -> Result<Self> {
                Self::new(value)
            }
        }

        impl From<$name> for String {
            fn from(value: $name) -> String {
                value.0
            }
        }
    };
}

text_id!(DocId, "document");
text_id!(QueryId, "query");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub id: DocId,
    pub text: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Query {
    pub id: QueryId,
    pub text: String,
}

/// Ordered document collection with unique ids.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Corpus {
    docs: Vec<Document>,
}

impl Corpus {
    pub fn new(docs: Vec<Document>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(docs.len());
        for doc in &docs {
            if !seen.insert(doc.id.as_str()) {
                return Err(Error::Validation(format!("duplicate document id `{}`", doc.id)));
            }
        }
        Ok(Self { docs })
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn docs(&self) -> &[Document] {
        &self.docs
    }

    pub fn iter(&self) -> impl Iterator<Item = &Document> {
        self.docs.iter()
    }

    /// Total UTF-8 byte length of all document texts.
    pub fn plaintext_bytes(&self) -> u64 {
        self.docs.iter().map(|d| d.text.len() as u64).sum()
    }
}

/// Binary relevance judgments: a document is relevant iff it is in the set.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Qrels {
    judgments: BTreeMap<QueryId, BTreeSet<DocId>>,
}

impl Qrels {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, query: QueryId, doc: DocId) {
        self.judgments.entry(query).or_default().insert(doc);
    }

    /// Registers a query with no relevant documents (all judgments were ≤ 0).
    pub(crate) fn touch(&mut self, query: QueryId) {
        self.judgments.entry(query).or_default();
    }

    pub fn relevant(&self, query: &str) -> Option<&BTreeSet<DocId>> {
        self.judgments.get(query)
    }

    pub fn is_relevant(&self, query: &str, doc: &str) -> bool {
        self.judgments.get(query).is_some_and(|docs| docs.contains(doc))
    }

    pub fn queries(&self) -> impl Iterator<Item = &QueryId> {
        self.judgments.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&QueryId, &BTreeSet<DocId>)> {
        self.judgments.iter()
    }

    pub fn len(&self) -> usize {
        self.judgments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.judgments.is_empty()
    }
}

impl FromIterator<(QueryId, DocId)> for Qrels {
    fn from_iter<I: IntoIterator<Item = (QueryId, DocId)>>(iter: I) -> Self {
        let mut qrels = Qrels::new();
        for (q, d) in iter {
            qrels.insert(q, d);
        }
        qrels
    }
}

/// Canonical ranking order: score descending, then doc id ascending.
///
/// Scores must be finite.
pub fn ranking_order(a: &(DocId, f64), b: &(DocId, f64)) -> Ordering {
    b.1.partial_cmp(&a.1)
        .expect("finite scores")
        .then_with(|| a.0.cmp(&b.0))
}

/// One system's ranked output for one query.
///
/// Entries are sorted by non-increasing score, doc ids are distinct and every
/// score is finite. Every constructor enforces this.
#[derive(Clone, Debug, PartialEq)]
pub struct RunList {
    query_id: QueryId,
    system_id: String,
    entries: Vec<(DocId, f64)>,
}

impl RunList {
    /// Builds a run from entries already in ranked order.
    pub fn new(query_id: QueryId, system_id: impl Into<String>, entries: Vec<(DocId, f64)>) -> Result<Self> {
        let run = Self {
            query_id,
            system_id: system_id.into(),
            entries,
        };
        run.validate()?;
        Ok(run)
    }

    /// Builds a run from entries in any order, sorting them canonically.
    pub fn from_unsorted(
        query_id: QueryId,
        system_id: impl Into<String>,
        mut entries: Vec<(DocId, f64)>,
    ) -> Result<Self> {
        if let Some((doc, score)) = entries.iter().find(|(_, s)| !s.is_finite()) {
            return Err(Error::Validation(format!(
                "non-finite score {score} for `{doc}` in query `{query_id}`"
            )));
        }
        entries.sort_by(ranking_order);
        Self::new(query_id, system_id, entries)
    }

    pub fn empty(query_id: QueryId, system_id: impl Into<String>) -> Self {
        Self {
            query_id,
            system_id: system_id.into(),
            entries: Vec::new(),
        }
    }

    fn validate(&self) -> Result<()> {
        let mut seen = HashSet::with_capacity(self.entries.len());
        let mut prev = f64::INFINITY;
        for (doc, score) in &self.entries {
            if !score.is_finite() {
                return Err(Error::Validation(format!(
                    "non-finite score {score} for `{doc}` in query `{}`",
                    self.query_id
                )));
            }
            if *score > prev {
                return Err(Error::Validation(format!(
                    "run for query `{}` is not sorted by non-increasing score at `{doc}`",
                    self.query_id
                )));
            }
            if !seen.insert(doc.as_str()) {
                return Err(Error::Validation(format!(
                    "duplicate document `{doc}` in run for query `{}`",
                    self.query_id
                )));
            }
            prev = *score;
        }
        Ok(())
    }

    pub fn query_id(&self) -> &QueryId {
        &self.query_id
    }

    pub fn system_id(&self) -> &str {
        &self.system_id
    }

    pub fn entries(&self) -> &[(DocId, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn scores(&self) -> impl Iterator<Item = f64> + '_ {
        self.entries.iter().map(|(_, s)| *s)
    }

    pub fn doc_ids(&self) -> impl Iterator<Item = &DocId> {
        self.entries.iter().map(|(d, _)| d)
    }

    /// Keeps only the first `k` entries.
    pub fn truncate(&mut self, k: usize) {
        self.entries.truncate(k);
    }

    pub fn with_system_id(mut self, system_id: impl Into<String>) -> Self {
        self.system_id = system_id.into();
        self
    }

    pub fn into_entries(self) -> Vec<(DocId, f64)> {
        self.entries
    }
}

/// All of one system's runs, keyed by query.
pub type RunSet = BTreeMap<QueryId, RunList>;

#[cfg(test)]
mod tests {
    use super::*;

    fn d(s: &str) -> DocId {
        DocId::new(s).unwrap()
    }

    fn q(s: &str) -> QueryId {
        QueryId::new(s).unwrap()
    }

    #[test]
    fn ids_reject_whitespace_and_empty() {
        assert!(DocId::new("").is_err());
        assert!(DocId::new("a b").is_err());
        assert!(QueryId::new("q\t1").is_err());
        assert_eq!(DocId::new("art-42").unwrap().as_str(), "art-42");
    }

    #[test]
    fn corpus_rejects_duplicate_ids() {
        let doc = |id: &str| Document {
            id: d(id),
            text: String::new(),
        };
        assert!(Corpus::new(vec![doc("a1"), doc("a2")]).is_ok());
        assert!(matches!(
            Corpus::new(vec![doc("a1"), doc("a1")]),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn run_constructor_checks_invariants() {
        assert!(RunList::new(q("q"), "s", vec![(d("a"), 2.0), (d("b"), 3.0)]).is_err());
        assert!(RunList::new(q("q"), "s", vec![(d("a"), 2.0), (d("a"), 1.0)]).is_err());
        assert!(RunList::new(q("q"), "s", vec![(d("a"), f64::NAN)]).is_err());
        assert!(RunList::from_unsorted(q("q"), "s", vec![(d("a"), f64::INFINITY)]).is_err());
    }

    #[test]
    fn from_unsorted_breaks_ties_by_doc_id() {
        let run = RunList::from_unsorted(q("q"), "s", vec![(d("c"), 1.0), (d("b"), 2.0), (d("a"), 1.0)]).unwrap();
        let ids: Vec<_> = run.doc_ids().map(DocId::as_str).collect();
        assert_eq!(ids, ["b", "a", "c"]);
    }

    #[test]
    fn signed_zero_is_a_tie() {
        let run = RunList::from_unsorted(q("q"), "s", vec![(d("b"), 0.0), (d("a"), -0.0)]).unwrap();
        let ids: Vec<_> = run.doc_ids().map(DocId::as_str).collect();
        assert_eq!(ids, ["a", "b"]);
    }
}
