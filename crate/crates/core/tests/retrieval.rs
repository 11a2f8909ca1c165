mod oracles;

use std::collections::BTreeMap;

use fusekit::lexical::{tokenize, Bm25Params, LexicalIndex};
use fusekit::model::{Corpus, DocId, Document, QueryId};
use fusekit::vectors::{
    maxsim_score, DenseRecord, FlatDenseIndex, MultiVectorStore, SparseIndex, SparseVector, TokenMatrix,
};
use oracles::*;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-9;

fn random_text(rng: &mut ChaCha8Rng, vocab: usize) -> String {
    let len = rng.random_range(1..30);
    (0..len)
        .map(|_| format!("w{}", rng.random_range(0..vocab)))
        .collect::<Vec<_>>()
        .join(if rng.random_bool(0.5) { " " } else { ", " })
}

fn qid() -> QueryId {
    QueryId::new("q").unwrap()
}

#[test]
fn bm25_matches_naive_counting() {
    let mut rng = rng(21);
    for case in 0..30 {
        let n = if case == 0 { 1000 } else { rng.random_range(1..200) };
        let vocab = rng.random_range(2..60);
        let docs: Vec<(String, String)> = (0..n)
            .map(|i| (format!("doc{i:04}"), random_text(&mut rng, vocab)))
            .collect();
        let corpus = Corpus::new(
            docs.iter()
                .map(|(id, text)| Document {
                    id: DocId::new(id.clone()).unwrap(),
                    text: text.clone(),
                })
                .collect(),
        )
        .unwrap();
        let index = LexicalIndex::build(&corpus).unwrap();
        for params in [Bm25Params::GENERAL, Bm25Params::LEGAL] {
            for _ in 0..5 {
                let query = random_text(&mut rng, vocab + 5);
                let oracle = bm25_oracle(&docs, &query, params.k1, params.b);
                let positives = oracle.iter().filter(|x| x.1 > 0.0).count();
                let negatives = oracle.iter().filter(|x| x.1 < 0.0).count();
                for k in [1, 10, n] {
                    let run = index.search(params, qid(), &tokenize(&query), k).unwrap();
                    check_prefix(&run, &oracle, TOL).unwrap_or_else(|e| panic!("case {case}: {e}"));
                    let expected = if negatives > 0 && positives < k {
                        k.min(n)
                    } else {
                        k.min(positives)
                    };
                    assert_eq!(run.len(), expected, "case {case} k {k}");
                }
                for (id, want) in oracle.iter().take(5) {
                    let got = index.score(params, &tokenize(&query), id).unwrap();
                    assert!((got - want).abs() <= TOL * want.abs().max(1.0));
                }
            }
        }
    }
}

fn unit_or_raw(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()
}

#[test]
fn dense_matches_brute_force() {
    let mut rng = rng(22);
    for _ in 0..20 {
        let dim = rng.random_range(1..40);
        let n = rng.random_range(1..1000);
        let records: Vec<DenseRecord> = (0..n)
            .map(|i| DenseRecord {
                id: format!("d{i:04}"),
                vector: unit_or_raw(&mut rng, dim),
            })
            .collect();
        let index = FlatDenseIndex::from_records(records.clone()).unwrap();
        let q = unit_or_raw(&mut rng, dim);
        let mut oracle: Vec<(String, f64)> = records.iter().map(|r| (r.id.clone(), dot(&q, &r.vector))).collect();
        sort_ranking(&mut oracle);
        for k in [1, 7, n] {
            let run = index.search(qid(), &q, k).unwrap();
            assert_eq!(run.len(), k.min(n));
            check_prefix(&run, &oracle, TOL).unwrap();
        }
    }
}

fn random_sparse(rng: &mut ChaCha8Rng, vocab: usize) -> BTreeMap<String, f64> {
    let nnz = rng.random_range(1..12);
    (0..nnz)
        .map(|_| (format!("t{}", rng.random_range(0..vocab)), rng.random_range(0.01..3.0)))
        .collect()
}

#[test]
fn sparse_matches_dense_expansion() {
    let mut rng = rng(23);
    for _ in 0..20 {
        let vocab = rng.random_range(5..300);
        let n = rng.random_range(1..1000);
        let maps: Vec<BTreeMap<String, f64>> = (0..n).map(|_| random_sparse(&mut rng, vocab)).collect();
        let index = SparseIndex::from_vectors(
            maps.iter()
                .enumerate()
                .map(|(i, m)| (format!("d{i:04}"), SparseVector::new(m.clone()).unwrap()))
                .collect(),
        )
        .unwrap();
        let qmap = random_sparse(&mut rng, vocab);
        let mut all: Vec<&BTreeMap<String, f64>> = maps.iter().collect();
        all.push(&qmap);
        let expanded = expand(&all);
        let qvec = expanded.last().unwrap();
        let mut oracle: Vec<(String, f64)> = expanded[..n]
            .iter()
            .enumerate()
            .map(|(i, v)| (format!("d{i:04}"), dot(qvec, v)))
            .filter(|(_, s)| *s > 0.0)
            .collect();
        sort_ranking(&mut oracle);
        let run = index
            .search(qid(), &SparseVector::new(qmap.clone()).unwrap(), n)
            .unwrap();
        assert_eq!(run.len(), oracle.len());
        check_prefix(&run, &oracle, TOL).unwrap();
        let top = index.search(qid(), &SparseVector::new(qmap).unwrap(), 5).unwrap();
        check_prefix(&top, &oracle, TOL).unwrap();
    }
}

fn random_tokens(rng: &mut ChaCha8Rng, dim: usize) -> Vec<Vec<f64>> {
    let rows = rng.random_range(1..12);
    (0..rows).map(|_| unit_or_raw(rng, dim)).collect()
}

#[test]
fn maxsim_matches_triple_loop() {
    let mut rng = rng(24);
    for _ in 0..20 {
        let dim = rng.random_range(1..16);
        let n = rng.random_range(1..300);
        let docs: Vec<Vec<Vec<f64>>> = (0..n).map(|_| random_tokens(&mut rng, dim)).collect();
        let store = MultiVectorStore::from_matrices(
            docs.iter()
                .enumerate()
                .map(|(i, rows)| {
                    let id = format!("d{i:04}");
                    let m = TokenMatrix::new(&id, rows.clone(), false).unwrap();
                    (id, m)
                })
                .collect(),
        )
        .unwrap();
        let q = random_tokens(&mut rng, dim);
        let qm = TokenMatrix::new("q", q.clone(), false).unwrap();
        let mut oracle: Vec<(String, f64)> = docs
            .iter()
            .enumerate()
            .map(|(i, d)| (format!("d{i:04}"), maxsim_oracle(&q, d)))
            .collect();
        sort_ranking(&mut oracle);
        for k in [1, 10, n] {
            let run = store.search(qid(), &qm, k).unwrap();
            assert_eq!(run.len(), k.min(n));
            check_prefix(&run, &oracle, TOL).unwrap();
        }
    }
}

#[test]
fn maxsim_ignores_token_order() {
    let mut rng = rng(25);
    for _ in 0..50 {
        let dim = rng.random_range(1..16);
        let q = random_tokens(&mut rng, dim);
        let d = random_tokens(&mut rng, dim);
        let mut d2 = d.clone();
        d2.shuffle(&mut rng);
        let mut q2 = q.clone();
        q2.shuffle(&mut rng);
        let tm = |rows: &Vec<Vec<f64>>| TokenMatrix::new("x", rows.clone(), false).unwrap();
        let base = maxsim_score(&tm(&q), &tm(&d)).unwrap();
        assert_eq!(base, maxsim_score(&tm(&q), &tm(&d2)).unwrap());
        assert!((base - maxsim_score(&tm(&q2), &tm(&d)).unwrap()).abs() <= 1e-12 * base.abs().max(1.0));
    }
}

#[test]
fn maxsim_rejects_dimension_mismatch() {
    let a = TokenMatrix::new("a", vec![vec![1.0, 0.0]], false).unwrap();
    let b = TokenMatrix::new("b", vec![vec![1.0, 0.0, 0.0]], false).unwrap();
    assert!(maxsim_score(&a, &b).is_err());
}
