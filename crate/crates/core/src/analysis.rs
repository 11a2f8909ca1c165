//! Score-distribution and complementarity analysis between retrievers.
//!
//! Pairs of (query, document) are placed in one of four regions by comparing
//! each system's min-max normalized score with the quartiles of that system's
//! global distribution:
//!
//! | region | system 1 | system 2 |
//! |--------|----------|----------|
//! | A      | > Q3     | < Q1     |
//! | B      | < Q1     | > Q3     |
//! | C      | > Q3     | > Q3     |
//! | D      | < Q1     | < Q1     |
//!
//! Pairs between the quartiles on either axis get no region.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt::{self, Write as _};

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fusion::{normalize, Normalization, ScoreDistribution};
use crate::model::{DocId, Qrels, QueryId, RunSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Quadrant {
    A,
    B,
    C,
    D,
}

impl Quadrant {
    pub const ALL: [Quadrant; 4] = [Quadrant::A, Quadrant::B, Quadrant::C, Quadrant::D];
}

impl fmt::Display for Quadrant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// One (query, document) pair with each system's min-max normalized score.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairSample {
    pub query_id: QueryId,
    pub doc_id: DocId,
    pub scores: Vec<f64>,
    pub relevant: bool,
}

pub fn quadrant_of(s1: f64, s2: f64, dist1: &ScoreDistribution, dist2: &ScoreDistribution) -> Option<Quadrant> {
    let high1 = s1 > dist1.q3();
    let low1 = s1 < dist1.q1();
    let high2 = s2 > dist2.q3();
    let low2 = s2 < dist2.q1();
    match (high1, low1, high2, low2) {
        (true, _, _, true) => Some(Quadrant::A),
        (_, true, true, _) => Some(Quadrant::B),
        (true, _, true, _) => Some(Quadrant::C),
        (_, true, _, true) => Some(Quadrant::D),
        _ => None,
    }
}

/// Region of a pair using its first two systems' scores.
pub fn quadrant_classify(pair: &PairSample, dist1: &ScoreDistribution, dist2: &ScoreDistribution) -> Option<Quadrant> {
    quadrant_of(pair.scores[0], pair.scores[1], dist1, dist2)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct RegionCounts {
    pub relevant: usize,
    pub non_relevant: usize,
}

impl RegionCounts {
    pub fn total(&self) -> usize {
        self.relevant + self.non_relevant
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComplementarityReport {
    pub regions: BTreeMap<Quadrant, RegionCounts>,
    pub unlabeled: usize,
}

impl ComplementarityReport {
    /// Fraction of a region's pairs on which the high-scoring signal is right.
    ///
    /// In A and B one system scores high and the other low, so this is the
    /// rate at which the higher-scoring system is correct (the pair is
    /// relevant). In C both agree on relevant; in D both agree on
    /// non-relevant. `None` for an empty region.
    pub fn agreement(&self, region: Quadrant) -> Option<f64> {
        let c = &self.regions[&region];
        if c.total() == 0 {
            return None;
        }
        let right = match region {
            Quadrant::D => c.non_relevant,
            _ => c.relevant,
        };
        Some(right as f64 / c.total() as f64)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("region,relevant,non_relevant,agreement\n");
        for q in Quadrant::ALL {
            let c = &self.regions[&q];
            let agree = self.agreement(q).map_or(String::new(), |a| format!("{a:.6}"));
            let _ = writeln!(out, "{q},{},{},{agree}", c.relevant, c.non_relevant);
        }
        let _ = writeln!(out, "none,,{},", self.unlabeled);
        out
    }
}

pub fn complementarity_report(
    pairs: &[PairSample],
    dist1: &ScoreDistribution,
    dist2: &ScoreDistribution,
) -> ComplementarityReport {
    let mut regions: BTreeMap<Quadrant, RegionCounts> =
        Quadrant::ALL.iter().map(|q| (*q, RegionCounts::default())).collect();
    let mut unlabeled = 0;
    for pair in pairs {
        match quadrant_classify(pair, dist1, dist2) {
            Some(q) => {
                let c = regions.get_mut(&q).expect("all regions present");
                if pair.relevant {
                    c.relevant += 1;
                } else {
                    c.non_relevant += 1;
                }
            }
            None => unlabeled += 1,
        }
    }
    ComplementarityReport { regions, unlabeled }
}

/// Per-query normalized scores of one system, keyed by document.
pub fn normalized_scores(
    runs: &RunSet,
    normalization: Normalization,
    dist: Option<&ScoreDistribution>,
) -> Result<BTreeMap<QueryId, HashMap<DocId, f64>>> {
    runs.iter()
        .filter(|(_, run)| !run.is_empty())
        .map(|(q, run)| {
            let raw: Vec<f64> = run.scores().collect();
            let normed = normalize(&raw, normalization, dist)?;
            Ok((q.clone(), run.doc_ids().cloned().zip(normed).collect()))
        })
        .collect()
}

/// Global distribution of a system's normalized scores pooled over queries.
pub fn normalized_distribution(
    system_id: &str,
    runs: &RunSet,
    normalization: Normalization,
    raw_dist: Option<&ScoreDistribution>,
) -> Result<ScoreDistribution> {
    let per_query = normalized_scores(runs, normalization, raw_dist)?;
    // BTreeMap order over queries, then sorted scores: deterministic pooling.
    let mut pooled = Vec::new();
    for scores in per_query.values() {
        let mut v: Vec<f64> = scores.values().copied().collect();
        v.sort_by(f64::total_cmp);
        pooled.extend(v);
    }
    ScoreDistribution::from_scores(system_id, pooled)
}

/// Draws `n_pos` relevant and `n_neg` non-relevant (query, document) pairs
/// and attaches every system's min-max normalized score.
///
/// Negatives come uniformly from `corpus` (or, when `None`, from every
/// document seen in any run) minus the documents judged relevant for the
/// query. A document absent from a system's run for the query takes that
/// system's lowest normalized score (0).
pub fn sample_pairs(
    systems: &[RunSet],
    qrels: &Qrels,
    corpus: Option<&[DocId]>,
    n_pos: usize,
    n_neg: usize,
    seed: u64,
) -> Result<Vec<PairSample>> {
    if systems.is_empty() {
        return Err(Error::InvalidArgument("need at least one system".into()));
    }
    let normed = systems
        .iter()
        .map(|runs| normalized_scores(runs, Normalization::MinMax, None))
        .collect::<Result<Vec<_>>>()?;
    let run_queries: BTreeSet<&QueryId> = systems.iter().flat_map(|s| s.keys()).collect();
    let queries: Vec<&QueryId> = run_queries
        .into_iter()
        .filter(|q| qrels.relevant(q.as_str()).is_some_and(|r| !r.is_empty()))
        .collect();
    let pool: Vec<&DocId> = match corpus {
        Some(docs) => docs.iter().collect::<BTreeSet<_>>(),
        None => systems
            .iter()
            .flat_map(|s| s.values().flat_map(|r| r.doc_ids()))
            .collect(),
    }
    .into_iter()
    .collect();

    let positives: Vec<(&QueryId, &DocId)> = queries
        .iter()
        .flat_map(|q| qrels.relevant(q.as_str()).into_iter().flatten().map(move |d| (*q, d)))
        .collect();
    if n_pos > positives.len() {
        return Err(Error::InvalidArgument(format!(
            "requested {n_pos} positive pairs but only {} exist",
            positives.len()
        )));
    }
    let negatives_available: usize = queries
        .iter()
        .map(|q| {
            let rel = qrels.relevant(q.as_str()).expect("filtered above");
            pool.len() - pool.iter().filter(|d| rel.contains(**d)).count()
        })
        .sum();
    if n_neg > negatives_available {
        return Err(Error::InvalidArgument(format!(
            "requested {n_neg} negative pairs but only {negatives_available} exist"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen: Vec<(&QueryId, &DocId, bool)> = index::sample(&mut rng, positives.len(), n_pos)
        .into_iter()
        .map(|i| (positives[i].0, positives[i].1, true))
        .collect();

    if n_neg * 2 > negatives_available {
        let all: Vec<(&QueryId, &DocId)> = queries
            .iter()
            .flat_map(|q| {
                pool.iter()
                    .filter(move |d| !qrels.is_relevant(q.as_str(), d.as_str()))
                    .map(move |d| (*q, *d))
            })
            .collect();
        chosen.extend(
            index::sample(&mut rng, all.len(), n_neg)
                .into_iter()
                .map(|i| (all[i].0, all[i].1, false)),
        );
    } else {
        let mut taken = HashSet::with_capacity(n_neg);
        while taken.len() < n_neg {
            let q = queries[rng.random_range(0..queries.len())];
            let d = pool[rng.random_range(0..pool.len())];
            if qrels.is_relevant(q.as_str(), d.as_str()) || !taken.insert((q, d)) {
                continue;
            }
            chosen.push((q, d, false));
        }
    }

    Ok(chosen
        .into_iter()
        .map(|(q, d, relevant)| PairSample {
            query_id: q.clone(),
            doc_id: d.clone(),
            scores: normed
                .iter()
                .map(|per_query| {
                    per_query
                        .get(q)
                        .map_or(0.0, |scores| scores.get(d).copied().unwrap_or(0.0))
                })
                .collect(),
            relevant,
        })
        .collect())
}

pub fn pairs_csv(pairs: &[PairSample], systems: &[String]) -> String {
    let mut out = String::from("query,doc");
    for s in systems {
        let _ = write!(out, ",{s}");
    }
    out.push_str(",relevant\n");
    for p in pairs {
        let _ = write!(out, "{},{}", p.query_id, p.doc_id);
        for s in &p.scores {
            let _ = write!(out, ",{s}");
        }
        let _ = writeln!(out, ",{}", u8::from(p.relevant));
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HistogramBin {
    pub left: f64,
    pub right: f64,
    pub count: u64,
}

/// Equal-width histogram of the distribution's sample over `[min, max]`;
/// the last bin is closed on the right.
pub fn export_histograms(dist: &ScoreDistribution, bins: usize) -> Result<Vec<HistogramBin>> {
    if bins == 0 {
        return Err(Error::InvalidArgument("need at least one bin".into()));
    }
    let (lo, hi) = (dist.min(), dist.max());
    let width = (hi - lo) / bins as f64;
    let mut out: Vec<HistogramBin> = (0..bins)
        .map(|i| HistogramBin {
            left: lo + width * i as f64,
            right: if i + 1 == bins { hi } else { lo + width * (i + 1) as f64 },
            count: 0,
        })
        .collect();
    for &x in dist.sample() {
        let slot = if width == 0.0 {
            0
        } else {
            (((x - lo) / width) as usize).min(bins - 1)
        };
        out[slot].count += 1;
    }
    Ok(out)
}

pub fn histogram_csv(bins: &[HistogramBin]) -> String {
    let mut out = String::from("bin_left,bin_right,count\n");
    for b in bins {
        let _ = writeln!(out, "{},{},{}", b.left, b.right, b.count);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::RunList;

    fn uniform_dist() -> ScoreDistribution {
        ScoreDistribution::from_scores("s", (0..=100).map(|i| i as f64 / 100.0)).unwrap()
    }

    #[test]
    fn quadrant_examples() {
        let d = uniform_dist();
        let p99 = d.quantile(0.99);
        let p01 = d.quantile(0.01);
        let p50 = d.quantile(0.5);
        assert_eq!(quadrant_of(p99, p01, &d, &d), Some(Quadrant::A));
        assert_eq!(quadrant_of(p01, p99, &d, &d), Some(Quadrant::B));
        assert_eq!(quadrant_of(p99, p99, &d, &d), Some(Quadrant::C));
        assert_eq!(quadrant_of(p01, p01, &d, &d), Some(Quadrant::D));
        assert_eq!(quadrant_of(p50, p50, &d, &d), None);
        assert_eq!(quadrant_of(p99, p50, &d, &d), None);
    }

    fn pair(s1: f64, s2: f64, relevant: bool) -> PairSample {
        PairSample {
            query_id: QueryId::new("q").unwrap(),
            doc_id: DocId::new("d").unwrap(),
            scores: vec![s1, s2],
            relevant,
        }
    }

    #[test]
    fn planted_region_a_is_always_right() {
        let d = uniform_dist();
        let pairs: Vec<_> = (0..20).map(|_| pair(0.95, 0.05, true)).collect();
        let report = complementarity_report(&pairs, &d, &d);
        assert_eq!(report.agreement(Quadrant::A), Some(1.0));
        assert_eq!(report.agreement(Quadrant::B), None);
    }

    #[test]
    fn all_in_c_relevant() {
        let d = uniform_dist();
        let pairs: Vec<_> = (0..7).map(|_| pair(0.9, 0.9, true)).collect();
        let report = complementarity_report(&pairs, &d, &d);
        assert_eq!(
            report.regions[&Quadrant::C],
            RegionCounts {
                relevant: 7,
                non_relevant: 0
            }
        );
        assert_eq!(report.regions[&Quadrant::D].total(), 0);
        assert!(report.to_csv().starts_with("region,"));
    }

    #[test]
    fn histogram_examples() {
        let single = ScoreDistribution::from_scores("s", [0.3]).unwrap();
        let h = export_histograms(&single, 5).unwrap();
        assert_eq!(h.iter().filter(|b| b.count > 0).count(), 1);
        assert_eq!(h.iter().map(|b| b.count).sum::<u64>(), 1);
        assert!(export_histograms(&single, 0).is_err());
    }

    fn runs(system: &str, q: &str, docs: &[(&str, f64)]) -> RunSet {
        let run = RunList::from_unsorted(
            QueryId::new(q).unwrap(),
            system,
            docs.iter().map(|(d, s)| (DocId::new(*d).unwrap(), *s)).collect(),
        )
        .unwrap();
        [(run.query_id().clone(), run)].into()
    }

    fn toy() -> (Vec<RunSet>, Qrels) {
        let docs: Vec<(String, f64)> = (0..30).map(|i| (format!("d{i:02}"), i as f64)).collect();
        let refs: Vec<(&str, f64)> = docs.iter().map(|(d, s)| (d.as_str(), *s)).collect();
        let a = runs("a", "q1", &refs);
        let rev: Vec<(&str, f64)> = refs.iter().map(|(d, s)| (*d, -s)).collect();
        let b = runs("b", "q1", &rev);
        let qrels: Qrels = ["d01", "d05", "d20"]
            .iter()
            .map(|d| (QueryId::new("q1").unwrap(), DocId::new(*d).unwrap()))
            .collect();
        (vec![a, b], qrels)
    }

    #[test]
    fn sampling_is_deterministic_and_balanced() {
        let (systems, qrels) = toy();
        let a = sample_pairs(&systems, &qrels, None, 3, 10, 7).unwrap();
        let b = sample_pairs(&systems, &qrels, None, 3, 10, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.iter().filter(|p| p.relevant).count(), 3);
        assert_eq!(a.iter().filter(|p| !p.relevant).count(), 10);
        for p in &a {
            assert_eq!(p.relevant, qrels.is_relevant(p.query_id.as_str(), p.doc_id.as_str()));
        }
        let dense = sample_pairs(&systems, &qrels, None, 1, 27, 7).unwrap();
        assert_eq!(dense.iter().filter(|p| !p.relevant).count(), 27);
    }

    #[test]
    fn sampling_errors_when_short() {
        let (systems, qrels) = toy();
        assert!(sample_pairs(&systems, &qrels, None, 4, 1, 0).is_err());
        assert!(sample_pairs(&systems, &qrels, None, 1, 28, 0).is_err());
    }

    #[test]
    fn pair_scores_are_min_max_normalized() {
        let (systems, qrels) = toy();
        let pairs = sample_pairs(&systems, &qrels, None, 3, 0, 1).unwrap();
        for p in pairs {
            let i: f64 = p.doc_id.as_str()[1..].parse().unwrap();
            assert!((p.scores[0] - i / 29.0).abs() < 1e-12);
            assert!((p.scores[1] - (29.0 - i) / 29.0).abs() < 1e-12);
        }
    }
}
