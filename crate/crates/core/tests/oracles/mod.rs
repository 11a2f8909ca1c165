//! Brute-force reference implementations, written straight from the formulas
//! and sharing no code with the library beyond its data types.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use fusekit::model::{DocId, Qrels, QueryId, RunList, RunSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `1 + #{j : s_j > s_i}`, quadratic.
pub fn rank_oracle(scores: &[f64]) -> Vec<usize> {
    scores
        .iter()
        .map(|s| 1 + scores.iter().filter(|t| *t > s).count())
        .collect()
}

pub fn ranks_by_doc(run: &RunList) -> BTreeMap<String, usize> {
    let scores: Vec<f64> = run.entries().iter().map(|e| e.1).collect();
    run.entries()
        .iter()
        .zip(rank_oracle(&scores))
        .map(|((d, _), r)| (d.to_string(), r))
        .collect()
}

/// A fused score together with the sum of absolute contributions, the scale
/// against which rounding error is judged.
#[derive(Clone, Copy, Debug)]
pub struct Fused {
    pub value: f64,
    pub scale: f64,
}

fn union_docs(runs: &[RunList]) -> BTreeSet<String> {
    runs.iter()
        .flat_map(|r| r.entries().iter().map(|e| e.0.to_string()))
        .collect()
}

pub fn bcf_oracle(runs: &[RunList]) -> BTreeMap<String, Fused> {
    let ranks: Vec<_> = runs.iter().map(ranks_by_doc).collect();
    union_docs(runs)
        .into_iter()
        .map(|d| {
            let mut f = Fused { value: 0.0, scale: 0.0 };
            for (run, r) in runs.iter().zip(&ranks) {
                if let Some(&pi) = r.get(&d) {
                    let c = (run.len() - pi + 1) as f64;
                    f.value += c;
                    f.scale += c.abs();
                }
            }
            (d, f)
        })
        .collect()
}

pub fn rrf_oracle(runs: &[RunList], k: f64) -> BTreeMap<String, Fused> {
    let ranks: Vec<_> = runs.iter().map(ranks_by_doc).collect();
    union_docs(runs)
        .into_iter()
        .map(|d| {
            let mut f = Fused { value: 0.0, scale: 0.0 };
            for r in &ranks {
                if let Some(&pi) = r.get(&d) {
                    let c = 1.0 / (k + pi as f64);
                    f.value += c;
                    f.scale += c;
                }
            }
            (d, f)
        })
        .collect()
}

pub fn min_max_oracle(xs: &[f64]) -> Vec<f64> {
    let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    xs.iter()
        .map(|x| if hi == lo { 0.5 } else { (x - lo) / (hi - lo) })
        .collect()
}

pub fn z_oracle(xs: &[f64]) -> Vec<f64> {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let sd = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
    xs.iter()
        .map(|x| if sd == 0.0 { 0.0 } else { (x - mean) / sd })
        .collect()
}

/// Midpoint CDF by linear counting.
pub fn percentile_oracle(sample: &[f64], x: f64) -> f64 {
    let lt = sample.iter().filter(|s| **s < x).count();
    let eq = sample.iter().filter(|s| **s == x).count();
    (lt as f64 + 0.5 * eq as f64) / sample.len() as f64
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Norm {
    MinMax,
    Z,
    /// Against the given per-system samples.
    Percentile,
}

pub fn nsf_oracle(runs: &[RunList], weights: &[f64], norm: Norm, samples: &[Vec<f64>]) -> BTreeMap<String, Fused> {
    let normalized: Vec<BTreeMap<String, f64>> = runs
        .iter()
        .enumerate()
        .map(|(m, run)| {
            let raw: Vec<f64> = run.entries().iter().map(|e| e.1).collect();
            let vals = match norm {
                Norm::MinMax => min_max_oracle(&raw),
                Norm::Z => z_oracle(&raw),
                Norm::Percentile => raw.iter().map(|x| percentile_oracle(&samples[m], *x)).collect(),
            };
            run.entries().iter().map(|e| e.0.to_string()).zip(vals).collect()
        })
        .collect();
    union_docs(runs)
        .into_iter()
        .map(|d| {
            let mut f = Fused { value: 0.0, scale: 0.0 };
            for (w, col) in weights.iter().zip(&normalized) {
                let s = match col.get(&d) {
                    Some(v) => *v,
                    None if col.is_empty() => 0.0,
                    None => col.values().cloned().fold(f64::INFINITY, f64::min),
                };
                f.value += w * s;
                f.scale += (w * s).abs();
            }
            (d, f)
        })
        .collect()
}

/// Checks a fused run against oracle scores: same documents, every score
/// within `rel` of the oracle relative to its contribution scale, and the
/// run's order consistent with the oracle's (non-increasing up to that
/// tolerance, ids ascending on exact oracle ties).
pub fn check_fused(run: &RunList, oracle: &BTreeMap<String, Fused>, rel: f64) -> Result<(), String> {
    if run.len() != oracle.len() {
        return Err(format!("{} docs, oracle has {}", run.len(), oracle.len()));
    }
    let tol = |f: &Fused| rel * f.scale.max(f64::MIN_POSITIVE);
    for (d, s) in run.entries() {
        let f = oracle.get(d.as_str()).ok_or_else(|| format!("unexpected doc {d}"))?;
        if (s - f.value).abs() > tol(f) {
            return Err(format!("doc {d}: {s} vs oracle {}", f.value));
        }
    }
    for w in run.entries().windows(2) {
        let (a, b) = (&oracle[w[0].0.as_str()], &oracle[w[1].0.as_str()]);
        if b.value - a.value > tol(a).max(tol(b)) {
            return Err(format!("{} ranked above {} against the oracle", w[0].0, w[1].0));
        }
        if a.value == b.value && w[0].1 == w[1].1 && w[0].0 > w[1].0 {
            return Err(format!("tie between {} and {} not broken by id", w[0].0, w[1].0));
        }
    }
    Ok(())
}

/// Random run over docs `d000..`, with ties drawn from a coarse score grid
/// about a third of the time.
pub fn random_run(rng: &mut ChaCha8Rng, query: &QueryId, system: &str, universe: usize) -> RunList {
    let len = rng.random_range(0..=universe);
    let mut ids: Vec<usize> = (0..universe).collect();
    for i in 0..len {
        let j = rng.random_range(i..universe);
        ids.swap(i, j);
    }
    let coarse = rng.random_bool(0.35);
    let entries = ids[..len]
        .iter()
        .map(|&i| {
            let s = if coarse {
                rng.random_range(0..6) as f64
            } else {
                rng.random_range(-50.0..50.0)
            };
            (DocId::new(format!("d{i:03}")).unwrap(), s)
        })
        .collect();
    RunList::from_unsorted(query.clone(), system, entries).unwrap()
}

pub fn random_instance(rng: &mut ChaCha8Rng, max_systems: usize, max_docs: usize) -> Vec<RunList> {
    let q = QueryId::new("q").unwrap();
    let systems = rng.random_range(1..=max_systems);
    let universe = rng.random_range(1..=max_docs);
    (0..systems)
        .map(|m| random_run(rng, &q, &format!("s{m}"), universe))
        .collect()
}

pub fn random_weights(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut w: Vec<f64> = raw.iter().map(|x| x / total).collect();
    // Push the rounding residue into the last weight so the sum is 1 to 1e-15.
    let head: f64 = w[..n - 1].iter().sum();
    w[n - 1] = 1.0 - head;
    w
}

// Retrieval oracles.

pub fn tokens(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// BM25 over every document, counting term statistics from raw text.
pub fn bm25_oracle(docs: &[(String, String)], query: &str, k1: f64, b: f64) -> Vec<(String, f64)> {
    let toks: Vec<Vec<String>> = docs.iter().map(|(_, t)| tokens(t)).collect();
    let n = docs.len() as f64;
    let avg = toks.iter().map(Vec::len).sum::<usize>() as f64 / n;
    let q = tokens(query);
    let mut out: Vec<(String, f64)> = docs
        .iter()
        .zip(&toks)
        .map(|((id, _), dt)| {
            let mut score = 0.0;
            for t in &q {
                let tf = dt.iter().filter(|x| *x == t).count() as f64;
                if tf == 0.0 {
                    continue;
                }
                let df = toks.iter().filter(|d| d.contains(t)).count() as f64;
                let idf = ((n - df + 0.5) / (df + 0.5)).ln();
                score += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * dt.len() as f64 / avg));
            }
            (id.clone(), score)
        })
        .collect();
    sort_ranking(&mut out);
    out
}

pub fn sort_ranking(v: &mut [(String, f64)]) {
    v.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn maxsim_oracle(q: &[Vec<f64>], d: &[Vec<f64>]) -> f64 {
    let mut total = 0.0;
    for qi in q {
        let mut best = f64::NEG_INFINITY;
        for dj in d {
            let mut s = 0.0;
            for k in 0..qi.len() {
                s += qi[k] * dj[k];
            }
            best = best.max(s);
        }
        total += best;
    }
    total
}

/// Expands term-weight maps into dense vectors over their joint vocabulary.
pub fn expand(maps: &[&BTreeMap<String, f64>]) -> Vec<Vec<f64>> {
    let vocab: BTreeSet<&String> = maps.iter().flat_map(|m| m.keys()).collect();
    maps.iter()
        .map(|m| vocab.iter().map(|t| m.get(*t).copied().unwrap_or(0.0)).collect())
        .collect()
}

/// `actual` must be a prefix of the oracle ranking, modulo swaps among
/// documents whose oracle scores agree within `tol`.
pub fn check_prefix(actual: &RunList, oracle: &[(String, f64)], tol: f64) -> Result<(), String> {
    let by_id: BTreeMap<&str, f64> = oracle.iter().map(|(d, s)| (d.as_str(), *s)).collect();
    if actual.len() > oracle.len() {
        return Err("longer than the oracle ranking".into());
    }
    for (i, (d, s)) in actual.entries().iter().enumerate() {
        let want = by_id.get(d.as_str()).ok_or_else(|| format!("unknown doc {d}"))?;
        let scale = want.abs().max(1.0);
        if (s - want).abs() > tol * scale {
            return Err(format!("doc {d}: score {s} vs oracle {want}"));
        }
        if d.as_str() != oracle[i].0 && (want - oracle[i].1).abs() > tol * scale {
            return Err(format!("rank {}: {d} but oracle has {}", i + 1, oracle[i].0));
        }
    }
    Ok(())
}

// Metric oracles.

pub fn recall_oracle(ranked: &[String], relevant: &BTreeSet<String>, k: usize) -> f64 {
    let top: BTreeSet<&String> = ranked.iter().take(k).collect();
    relevant.iter().filter(|r| top.contains(r)).count() as f64 / relevant.len() as f64
}

pub fn rr_oracle(ranked: &[String], relevant: &BTreeSet<String>, k: usize) -> f64 {
    for (i, d) in ranked.iter().enumerate() {
        if i >= k {
            break;
        }
        if relevant.contains(d) {
            return 1.0 / (i as f64 + 1.0);
        }
    }
    0.0
}

pub fn rp_oracle(ranked: &[String], relevant: &BTreeSet<String>) -> f64 {
    let n = relevant.len();
    ranked.iter().take(n).filter(|d| relevant.contains(*d)).count() as f64 / n as f64
}

// Tuning oracle.

pub fn entropy_oracle(w: &[f64]) -> f64 {
    let mut ps: Vec<f64> = w.to_vec();
    ps.sort_by(f64::total_cmp);
    ps.iter().filter(|p| **p > 0.0).map(|p| -p * p.ln()).sum()
}

/// Independent optimum: every 0.05-grid weight vector scored with oracle NSF
/// and the oracle recall, maximum objective, then maximum entropy, then the
/// lexicographically greatest vector.
pub fn tune_oracle(systems: &[RunSet], qrels: &Qrels) -> (Vec<f64>, f64) {
    let mut best: Option<(Vec<u32>, f64, f64)> = None;
    let m = systems.len();
    let mut counts = vec![0u32; m];
    let mut grid = Vec::new();
    fn rec(i: usize, left: u32, counts: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if i + 1 == counts.len() {
            counts[i] = left;
            out.push(counts.clone());
            return;
        }
        for c in 0..=left {
            counts[i] = c;
            rec(i + 1, left - c, counts, out);
        }
    }
    rec(0, 20, &mut counts, &mut grid);
    let queries: BTreeSet<&QueryId> = systems.iter().flat_map(|s| s.keys()).collect();
    for c in grid {
        let w: Vec<f64> = c.iter().map(|&x| x as f64 / 20.0).collect();
        let mut total = 0.0;
        let mut n = 0;
        for q in &queries {
            let Some(rel) = qrels.relevant(q.as_str()) else {
                continue;
            };
            let runs: Vec<RunList> = systems
                .iter()
                .map(|s| s.get(*q).cloned().unwrap_or_else(|| RunList::empty((*q).clone(), "")))
                .collect();
            let fused = nsf_oracle(&runs, &w, Norm::Z, &[]);
            let mut ranked: Vec<(String, f64)> = fused.into_iter().map(|(d, f)| (d, f.value)).collect();
            sort_ranking(&mut ranked);
            let ids: Vec<String> = ranked.into_iter().map(|x| x.0).collect();
            let rel: BTreeSet<String> = rel.iter().map(|d| d.to_string()).collect();
            total += recall_oracle(&ids, &rel, 10);
            n += 1;
        }
        let score = total / n as f64;
        let h = entropy_oracle(&w);
        let better = match &best {
            None => true,
            Some((bc, bs, bh)) => score > *bs || (score == *bs && (h > *bh || (h == *bh && c > *bc))),
        };
        if better {
            best = Some((c, score, h));
        }
    }
    let (c, s, _) = best.unwrap();
    (c.iter().map(|&x| x as f64 / 20.0).collect(), s)
}
