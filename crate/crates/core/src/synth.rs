//! Deterministic synthetic benchmark with planted lexical and semantic signal.
//!
//! Each query owns ten documents:
//! - two lexical-friendly relevant documents repeating the query keywords,
//!   with random embeddings;
//! - two semantic-friendly relevant documents using synonyms only, with
//!   embeddings planted near the query vector;
//! - lexical distractors holding a single keyword;
//! - semantic distractors whose embeddings sit loosely around the query.
//!
//! BM25 cannot see the synonym documents and the dense encoder cannot see the
//! keyword documents, so each alone tops out near R@10 = 0.5 while a score
//! fusion of both recovers all four.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::io::{write_jsonl, write_qrels};
use crate::model::{Corpus, DocId, Document, Qrels, Query, QueryId};
use crate::vectors::DenseRecord;

pub const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Clone, Debug, PartialEq)]
pub struct SynthConfig {
    pub queries: usize,
    pub seed: u64,
    pub dense_dim: usize,
    pub token_dim: usize,
    pub lexical_relevant: usize,
    pub semantic_relevant: usize,
    pub lexical_distractors: usize,
    pub semantic_distractors: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            queries: 20,
            seed: DEFAULT_SEED,
            dense_dim: 32,
            token_dim: 16,
            lexical_relevant: 2,
            semantic_relevant: 2,
            lexical_distractors: 3,
            semantic_distractors: 3,
        }
    }
}

impl SynthConfig {
    pub fn docs_per_query(&self) -> usize {
        self.lexical_relevant + self.semantic_relevant + self.lexical_distractors + self.semantic_distractors
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SparseRecord {
    pub id: String,
    pub weights: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MultiVectorRecord {
    pub id: String,
    pub tokens: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Benchmark {
    pub corpus: Corpus,
    pub queries: Vec<Query>,
    pub qrels: Qrels,
    pub dense_docs: Vec<DenseRecord>,
    pub dense_queries: Vec<DenseRecord>,
    pub sparse_docs: Vec<SparseRecord>,
    pub sparse_queries: Vec<SparseRecord>,
    pub multi_docs: Vec<MultiVectorRecord>,
    pub multi_queries: Vec<MultiVectorRecord>,
}

/// File names written by [`Benchmark::write_dir`].
pub mod files {
    pub const CORPUS: &str = "corpus.jsonl";
    pub const QUERIES: &str = "queries.jsonl";
    pub const QRELS: &str = "qrels.txt";
    pub const DENSE_DOCS: &str = "dense_docs.jsonl";
    pub const DENSE_QUERIES: &str = "dense_queries.jsonl";
    pub const SPARSE_DOCS: &str = "sparse_docs.jsonl";
    pub const SPARSE_QUERIES: &str = "sparse_queries.jsonl";
    pub const MULTI_DOCS: &str = "multi_docs.jsonl";
    pub const MULTI_QUERIES: &str = "multi_queries.jsonl";
}

impl Benchmark {
    pub fn write_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_jsonl(self.corpus.docs(), dir.join(files::CORPUS))?;
        write_jsonl(&self.queries, dir.join(files::QUERIES))?;
        write_qrels(&self.qrels, dir.join(files::QRELS))?;
        write_jsonl(&self.dense_docs, dir.join(files::DENSE_DOCS))?;
        write_jsonl(&self.dense_queries, dir.join(files::DENSE_QUERIES))?;
        write_jsonl(&self.sparse_docs, dir.join(files::SPARSE_DOCS))?;
        write_jsonl(&self.sparse_queries, dir.join(files::SPARSE_QUERIES))?;
        write_jsonl(&self.multi_docs, dir.join(files::MULTI_DOCS))?;
        write_jsonl(&self.multi_queries, dir.join(files::MULTI_QUERIES))
    }
}

const COMMON_WORDS: usize = 5;
const COMMON_RATE: f64 = 0.3;
const FILLER_WORDS: usize = 300;
const TERMS_PER_QUERY: usize = 3;

#[derive(Clone, Copy, PartialEq)]
enum Role {
    LexicalRelevant,
    SemanticRelevant,
    LexicalDistractor,
    SemanticDistractor,
}

fn gaussian(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

fn unit(mut v: Vec<f64>) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    v
}

/// `anchor` plus isotropic noise of expected norm `spread`, renormalized.
fn around(rng: &mut ChaCha8Rng, anchor: &[f64], spread: f64) -> Vec<f64> {
    let scale = spread / (anchor.len() as f64).sqrt();
    let noise = gaussian(rng, anchor.len());
    unit(anchor.iter().zip(noise).map(|(a, n)| a + scale * n).collect())
}

/// Six decimals keep the files small and platform-independent.
fn round6(v: Vec<f64>) -> Vec<f64> {
    v.into_iter().map(|x| (x * 1e6).round() / 1e6).collect()
}

fn pseudo_words(rng: &mut ChaCha8Rng, n: usize) -> Vec<String> {
    const ONSETS: [&str; 16] = [
        "b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "ch", "st",
    ];
    const VOWELS: [&str; 6] = ["a", "e", "i", "o", "u", "ou"];
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let syllables = rng.random_range(2..=3);
        let word: String = (0..syllables)
            .map(|_| {
                let o = ONSETS[rng.random_range(0..ONSETS.len())];
                let v = VOWELS[rng.random_range(0..VOWELS.len())];
                format!("{o}{v}")
            })
            .collect();
        if seen.insert(word.clone()) {
            out.push(word);
        }
    }
    out
}

pub fn generate(config: &SynthConfig) -> Result<Benchmark> {
    if config.queries == 0 || config.lexical_relevant + config.semantic_relevant == 0 {
        return Err(Error::InvalidArgument(
            "benchmark needs queries and relevant documents".into(),
        ));
    }
    if config.dense_dim == 0 || config.token_dim == 0 {
        return Err(Error::InvalidArgument("embedding dimensions must be ≥ 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let nq = config.queries;
    let words = pseudo_words(&mut rng, 2 * TERMS_PER_QUERY * nq + COMMON_WORDS + FILLER_WORDS);
    let (keywords, rest) = words.split_at(TERMS_PER_QUERY * nq);
    let (synonyms, rest) = rest.split_at(TERMS_PER_QUERY * nq);
    let (common, filler) = rest.split_at(COMMON_WORDS);
    let keywords_of = |q: usize| &keywords[q * TERMS_PER_QUERY..(q + 1) * TERMS_PER_QUERY];
    let synonyms_of = |q: usize| &synonyms[q * TERMS_PER_QUERY..(q + 1) * TERMS_PER_QUERY];

    // Token embeddings: synonyms sit next to their keyword.
    let mut token_vec: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for w in keywords.iter().chain(common).chain(filler) {
        let v = unit(gaussian(&mut rng, config.token_dim));
        token_vec.insert(w, v);
    }
    for (syn, kw) in synonyms.iter().zip(keywords) {
        let v = around(&mut rng, &token_vec[kw.as_str()], 0.3);
        token_vec.insert(syn, v);
    }

    let query_vecs: Vec<Vec<f64>> = (0..nq).map(|_| unit(gaussian(&mut rng, config.dense_dim))).collect();

    let roles = [
        (Role::LexicalRelevant, config.lexical_relevant),
        (Role::SemanticRelevant, config.semantic_relevant),
        (Role::LexicalDistractor, config.lexical_distractors),
        (Role::SemanticDistractor, config.semantic_distractors),
    ];
    let mut plan: Vec<(usize, Role)> = (0..nq)
        .flat_map(|q| {
            roles
                .iter()
                .flat_map(move |&(role, n)| std::iter::repeat_n((q, role), n))
        })
        .collect();
    plan.shuffle(&mut rng);
    let width = plan.len().to_string().len().max(3);

    let mut docs = Vec::with_capacity(plan.len());
    let mut dense_docs = Vec::with_capacity(plan.len());
    let mut sparse_docs = Vec::with_capacity(plan.len());
    let mut multi_docs = Vec::with_capacity(plan.len());
    let mut qrels = Qrels::new();
    for (i, &(q, role)) in plan.iter().enumerate() {
        let id = format!("d{i:0width$}");
        let len = rng.random_range(20..=40);
        let mut tokens: Vec<&str> = (0..len)
            .map(|_| filler[rng.random_range(0..filler.len())].as_str())
            .collect();
        for (c, word) in common.iter().enumerate() {
            let banned = role == Role::SemanticRelevant && c == q % COMMON_WORDS;
            if !banned && rng.random_bool(COMMON_RATE) {
                tokens.push(word);
            }
        }
        match role {
            Role::LexicalRelevant => {
                for w in keywords_of(q) {
                    tokens.extend([w.as_str(), w.as_str()]);
                }
            }
            Role::SemanticRelevant => tokens.extend(synonyms_of(q).iter().map(String::as_str)),
            Role::LexicalDistractor => {
                tokens.push(&keywords_of(q)[rng.random_range(0..TERMS_PER_QUERY)]);
            }
            Role::SemanticDistractor => {}
        }
        tokens.shuffle(&mut rng);

        let vector = match role {
            Role::SemanticRelevant => around(&mut rng, &query_vecs[q], 0.4),
            Role::SemanticDistractor => around(&mut rng, &query_vecs[q], 1.5),
            _ => unit(gaussian(&mut rng, config.dense_dim)),
        };

        let mut tf: BTreeMap<String, f64> = BTreeMap::new();
        for t in &tokens {
            *tf.entry(t.to_string()).or_default() += 1.0;
        }
        let mut weights: BTreeMap<String, f64> = tf
            .into_iter()
            .map(|(t, n)| (t, ((1.0 + n.ln()) * 0.8 * 1e4).round() / 1e4))
            .collect();
        if role == Role::SemanticRelevant {
            for w in keywords_of(q) {
                weights.insert(w.clone(), 0.6);
            }
        }

        let mut distinct = BTreeSet::new();
        let token_rows: Vec<Vec<f64>> = tokens
            .iter()
            .filter(|t| distinct.insert(**t))
            .map(|t| round6(token_vec[t].clone()))
            .collect();

        let doc_id = DocId::new(id.clone())?;
        if matches!(role, Role::LexicalRelevant | Role::SemanticRelevant) {
            qrels.insert(QueryId::new(query_name(q, nq))?, doc_id.clone());
        }
        docs.push(Document {
            id: doc_id,
            text: tokens.join(" "),
        });
        dense_docs.push(DenseRecord {
            id: id.clone(),
            vector: round6(vector),
        });
        sparse_docs.push(SparseRecord {
            id: id.clone(),
            weights,
        });
        multi_docs.push(MultiVectorRecord { id, tokens: token_rows });
    }

    let mut queries = Vec::with_capacity(nq);
    let mut dense_queries = Vec::with_capacity(nq);
    let mut sparse_queries = Vec::with_capacity(nq);
    let mut multi_queries = Vec::with_capacity(nq);
    for (q, qvec) in query_vecs.into_iter().enumerate() {
        let id = query_name(q, nq);
        let mut terms: Vec<&str> = keywords_of(q).iter().map(String::as_str).collect();
        terms.push(&common[q % COMMON_WORDS]);
        queries.push(Query {
            id: QueryId::new(id.clone())?,
            text: terms.join(" "),
        });
        dense_queries.push(DenseRecord {
            id: id.clone(),
            vector: round6(qvec),
        });
        let mut weights: BTreeMap<String, f64> = keywords_of(q).iter().map(|w| (w.clone(), 1.0)).collect();
        weights.insert(common[q % COMMON_WORDS].clone(), 0.3);
        sparse_queries.push(SparseRecord {
            id: id.clone(),
            weights,
        });
        multi_queries.push(MultiVectorRecord {
            id,
            tokens: terms.iter().map(|t| round6(token_vec[t].clone())).collect(),
        });
    }

    Ok(Benchmark {
        corpus: Corpus::new(docs)?,
        queries,
        qrels,
        dense_docs,
        dense_queries,
        sparse_docs,
        sparse_queries,
        multi_docs,
        multi_queries,
    })
}

fn query_name(q: usize, total: usize) -> String {
    let width = total.to_string().len().max(2);
    format!("q{:0width$}", q + 1)
}
