//! Tokenization, inverted index and Okapi BM25 scoring.
//!
//! Scores follow the classic formulation without IDF clamping:
//!
//! ```text
//! s(q, a) = Σ_{t ∈ q} ln((|C| − df(t) + 0.5) / (df(t) + 0.5))
//!                     · tf(t,a)·(k1 + 1) / (tf(t,a) + k1·(1 − b + b·|a|/avgal))
//! ```
//!
//! The IDF factor goes negative for terms present in more than half of the
//! corpus; such terms lower a document's score. Query terms form a multiset,
//! so a repeated query term contributes once per occurrence.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use integer_encoding::{VarIntReader, VarIntWriter};

use crate::error::{Error, Result};
use crate::model::{ranking_order, Corpus, DocId, QueryId, RunList};

/// Lowercased maximal runs of alphanumeric characters. No stemming, no
/// stopwords; diacritics are kept.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut terms = Vec::new();
    let mut current = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            current.extend(ch.to_lowercase());
        } else if !current.is_empty() {
            terms.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        terms.push(current);
    }
    terms
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Bm25Params {
    /// Setting tuned on a general-domain passage collection.
    pub const GENERAL: Bm25Params = Bm25Params { k1: 0.9, b: 0.4 };
    /// Setting tuned on the statute-article collection.
    pub const LEGAL: Bm25Params = Bm25Params { k1: 2.5, b: 0.2 };

    pub fn new(k1: f64, b: f64) -> Result<Self> {
        if !(k1.is_finite() && k1 >= 0.0) {
            return Err(Error::InvalidArgument(format!("k1 must be ≥ 0, got {k1}")));
        }
        if !(0.0..=1.0).contains(&b) {
            return Err(Error::InvalidArgument(format!("b must be in [0, 1], got {b}")));
        }
        Ok(Self { k1, b })
    }
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self::GENERAL
    }
}

/// Corpus-level statistics entering the BM25 formula.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CorpusStats {
    pub corpus_size: usize,
    pub avg_len: f64,
}

/// Contribution of one query-term occurrence to a document's score.
pub fn bm25_term_weight(tf: u32, df: u32, doc_len: u32, stats: CorpusStats, params: Bm25Params) -> f64 {
    if tf == 0 {
        return 0.0;
    }
    let n = stats.corpus_size as f64;
    let df = df as f64;
    let tf = tf as f64;
    let idf = ((n - df + 0.5) / (df + 0.5)).ln();
    // avgal = 0 only when every document is empty, in which case tf = 0 above.
    let len_ratio = doc_len as f64 / stats.avg_len;
    let norm = params.k1 * (1.0 - params.b + params.b * len_ratio);
    idf * (tf * (params.k1 + 1.0)) / (tf + norm)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Posting {
    /// Position of the document in corpus order.
    pub doc: u32,
    pub tf: u32,
}

/// Inverted index over a tokenized corpus.
#[derive(Clone, Debug, PartialEq)]
pub struct LexicalIndex {
    doc_ids: Vec<DocId>,
    doc_lens: Vec<u32>,
    avg_len: f64,
    postings: BTreeMap<String, Vec<Posting>>,
}

impl LexicalIndex {
    pub fn build(corpus: &Corpus) -> Result<Self> {
        if corpus.is_empty() {
            return Err(Error::InvalidArgument("cannot index an empty corpus".into()));
        }
        let mut postings: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
        let mut doc_ids = Vec::with_capacity(corpus.len());
        let mut doc_lens = Vec::with_capacity(corpus.len());
        for (ord, doc) in corpus.iter().enumerate() {
            let terms = tokenize(&doc.text);
            let mut counts: BTreeMap<String, u32> = BTreeMap::new();
            for term in &terms {
                *counts.entry(term.clone()).or_default() += 1;
            }
            for (term, tf) in counts {
                postings.entry(term).or_default().push(Posting { doc: ord as u32, tf });
            }
            doc_ids.push(doc.id.clone());
            doc_lens.push(terms.len() as u32);
        }
        let total: u64 = doc_lens.iter().map(|&l| l as u64).sum();
        let avg_len = total as f64 / doc_lens.len() as f64;
        Ok(Self {
            doc_ids,
            doc_lens,
            avg_len,
            postings,
        })
    }

    pub fn stats(&self) -> CorpusStats {
        CorpusStats {
            corpus_size: self.doc_ids.len(),
            avg_len: self.avg_len,
        }
    }

    pub fn corpus_size(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn avg_len(&self) -> f64 {
        self.avg_len
    }

    pub fn doc_ids(&self) -> &[DocId] {
        &self.doc_ids
    }

    pub fn doc_len(&self, doc: &str) -> Option<u32> {
        self.ordinal(doc).map(|o| self.doc_lens[o])
    }

    pub fn df(&self, term: &str) -> u32 {
        self.postings.get(term).map_or(0, |p| p.len() as u32)
    }

    pub fn tf(&self, term: &str, doc: &str) -> u32 {
        match self.ordinal(doc) {
            Some(ord) => self.tf_at(term, ord as u32),
            None => 0,
        }
    }

    pub fn postings(&self, term: &str) -> &[Posting] {
        self.postings.get(term).map_or(&[], Vec::as_slice)
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.postings.keys().map(String::as_str)
    }

    pub fn num_terms(&self) -> usize {
        self.postings.len()
    }

    fn tf_at(&self, term: &str, ord: u32) -> u32 {
        let list = self.postings(term);
        list.binary_search_by_key(&ord, |p| p.doc).map_or(0, |i| list[i].tf)
    }

    fn ordinal(&self, doc: &str) -> Option<usize> {
        // Linear scan is fine for point lookups; search never calls this.
        self.doc_ids.iter().position(|d| d.as_str() == doc)
    }

    /// BM25 score of one document for a tokenized query.
    pub fn score(&self, params: Bm25Params, query_terms: &[String], doc: &str) -> Result<f64> {
        self.score_with_stats(params, self.stats(), query_terms, doc)
    }

    /// Like [`LexicalIndex::score`] but with caller-pinned `|C|` and avgal.
    pub fn score_with_stats(
        &self,
        params: Bm25Params,
        stats: CorpusStats,
        query_terms: &[String],
        doc: &str,
    ) -> Result<f64> {
        let ord = self
            .ordinal(doc)
            .ok_or_else(|| Error::UnknownDocument(doc.to_string()))?;
        let doc_len = self.doc_lens[ord];
        Ok(query_terms
            .iter()
            .map(|t| {
                let tf = self.tf_at(t, ord as u32);
                bm25_term_weight(tf, self.df(t), doc_len, stats, params)
            })
            .sum())
    }

    /// Top-`k` documents by BM25, ties broken by ascending doc id.
    ///
    /// Documents matching no query term score exactly zero; they are only
    /// listed when needed to place negatively scored documents below them.
    pub fn search(&self, params: Bm25Params, query_id: QueryId, query_terms: &[String], k: usize) -> Result<RunList> {
        if k == 0 {
            return Err(Error::InvalidArgument("k must be ≥ 1".into()));
        }
        let stats = self.stats();
        let mut acc = vec![0.0f64; self.doc_ids.len()];
        let mut touched = vec![false; self.doc_ids.len()];
        for term in query_terms {
            let list = self.postings(term);
            let df = list.len() as u32;
            for p in list {
                let ord = p.doc as usize;
                acc[ord] += bm25_term_weight(p.tf, df, self.doc_lens[ord], stats, params);
                touched[ord] = true;
            }
        }
        let mut scored: Vec<(DocId, f64)> = acc
            .iter()
            .zip(&touched)
            .enumerate()
            .filter(|(_, (&s, &t))| t && s != 0.0)
            .map(|(ord, (&s, _))| (self.doc_ids[ord].clone(), s))
            .collect();
        scored.sort_by(ranking_order);
        let positives = scored.iter().take_while(|(_, s)| *s > 0.0).count();
        if positives < k && positives < scored.len() {
            let negatives = scored.split_off(positives);
            let mut zeros: Vec<(DocId, f64)> = acc
                .iter()
                .enumerate()
                .filter(|(_, &s)| s == 0.0)
                .map(|(ord, _)| (self.doc_ids[ord].clone(), 0.0))
                .collect();
            zeros.sort_by(ranking_order);
            scored.extend(zeros);
            scored.extend(negatives);
        }
        scored.truncate(k);
        RunList::new(query_id, "bm25", scored)
    }

    /// Serializes the index. See `docs/FORMATS.md` for the layout.
    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(LEXICAL_MAGIC)?;
        w.write_all(&LEXICAL_VERSION.to_le_bytes())?;
        w.write_all(&(self.doc_ids.len() as u64).to_le_bytes())?;
        w.write_all(&self.avg_len.to_le_bytes())?;
        for (id, len) in self.doc_ids.iter().zip(&self.doc_lens) {
            write_bytes(&mut w, id.as_str().as_bytes())?;
            w.write_varint(*len)?;
        }
        w.write_varint(self.postings.len() as u64)?;
        for (term, list) in &self.postings {
            write_bytes(&mut w, term.as_bytes())?;
            w.write_varint(list.len() as u64)?;
            let mut prev = 0u32;
            for p in list {
                w.write_varint(p.doc - prev)?;
                w.write_varint(p.tf)?;
                prev = p.doc;
            }
        }
        w.flush()
    }

    pub fn read_from<R: Read>(mut r: R, origin: &str) -> Result<Self> {
        let bad = |msg: String| Error::parse(origin, 0, msg);
        let io = |e: std::io::Error| Error::parse(origin, 0, e.to_string());
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(io)?;
        if &magic != LEXICAL_MAGIC {
            return Err(bad("not a lexical index (bad magic)".into()));
        }
        let version = read_u32(&mut r).map_err(io)?;
        if version != LEXICAL_VERSION {
            return Err(bad(format!("unsupported lexical index version {version}")));
        }
        let n_docs = read_u64(&mut r).map_err(io)? as usize;
        let avg_len = f64::from_le_bytes(read_array(&mut r).map_err(io)?);
        let mut doc_ids = Vec::with_capacity(n_docs.min(1 << 24));
        let mut doc_lens = Vec::with_capacity(n_docs.min(1 << 24));
        for _ in 0..n_docs {
            let id = read_string(&mut r, origin)?;
            doc_ids.push(DocId::new(id).map_err(|e| bad(e.to_string()))?);
            doc_lens.push(r.read_varint::<u32>().map_err(io)?);
        }
        let n_terms: u64 = r.read_varint().map_err(io)?;
        let mut postings = BTreeMap::new();
        for _ in 0..n_terms {
            let term = read_string(&mut r, origin)?;
            let df: u64 = r.read_varint().map_err(io)?;
            if df == 0 || df as usize > n_docs {
                return Err(bad(format!("term `{term}` has df {df} outside [1, {n_docs}]")));
            }
            let mut list = Vec::with_capacity(df as usize);
            let mut doc = 0u32;
            for i in 0..df {
                let delta: u32 = r.read_varint().map_err(io)?;
                if i > 0 && delta == 0 {
                    return Err(bad(format!("postings for `{term}` are not strictly increasing")));
                }
                doc = doc
                    .checked_add(delta)
                    .filter(|&d| (d as usize) < n_docs)
                    .ok_or_else(|| bad(format!("posting for `{term}` points past the corpus")))?;
                let tf: u32 = r.read_varint().map_err(io)?;
                if tf == 0 {
                    return Err(bad(format!("zero term frequency in postings for `{term}`")));
                }
                list.push(Posting { doc, tf });
            }
            postings.insert(term, list);
        }
        Ok(Self {
            doc_ids,
            doc_lens,
            avg_len,
            postings,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let out = crate::io::create(path)?;
        self.write_to(out).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::read_from(crate::io::open(path)?, &path.display().to_string())
    }
}

const LEXICAL_MAGIC: &[u8; 4] = b"FKLX";
const LEXICAL_VERSION: u32 = 1;

pub(crate) fn write_bytes<W: Write>(w: &mut W, bytes: &[u8]) -> std::io::Result<()> {
    w.write_varint(bytes.len() as u64)?;
    w.write_all(bytes)
}

pub(crate) fn read_string<R: Read>(r: &mut R, origin: &str) -> Result<String> {
    let io = |e: std::io::Error| Error::parse(origin, 0, e.to_string());
    let len: u64 = r.read_varint().map_err(io)?;
    let mut buf = Vec::new();
    r.take(len).read_to_end(&mut buf).map_err(io)?;
    if buf.len() as u64 != len {
        return Err(Error::parse(origin, 0, "truncated string"));
    }
    String::from_utf8(buf).map_err(|e| Error::parse(origin, 0, e.to_string()))
}

pub(crate) fn read_array<R: Read, const N: usize>(r: &mut R) -> std::io::Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

pub(crate) fn read_u32<R: Read>(r: &mut R) -> std::io::Result<u32> {
    read_array(r).map(u32::from_le_bytes)
}

pub(crate) fn read_u64<R: Read>(r: &mut R) -> std::io::Result<u64> {
    read_array(r).map(u64::from_le_bytes)
}
