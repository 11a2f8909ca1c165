//! Binary-relevance retrieval metrics, macro-averaged over queries.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{DocId, Qrels, QueryId, RunList, RunSet};

fn relevant_set<'a>(run: &RunList, qrels: &'a Qrels) -> Result<&'a BTreeSet<DocId>> {
    match qrels.relevant(run.query_id().as_str()) {
        Some(rel) if !rel.is_empty() => Ok(rel),
        Some(_) => Err(Error::InvalidArgument(format!(
            "query `{}` has no relevant documents",
            run.query_id()
        ))),
        None => Err(Error::InvalidArgument(format!(
            "query `{}` is not in the qrels",
            run.query_id()
        ))),
    }
}

fn hits_in_top(run: &RunList, relevant: &BTreeSet<DocId>, k: usize) -> usize {
    run.doc_ids().take(k).filter(|d| relevant.contains(*d)).count()
}

/// Fraction of the query's relevant documents found in the top `k`.
pub fn recall_at_k(run: &RunList, qrels: &Qrels, k: usize) -> Result<f64> {
    let rel = relevant_set(run, qrels)?;
    Ok(hits_in_top(run, rel, k) as f64 / rel.len() as f64)
}

/// Inverse position of the first relevant document within the top `k`, or 0.
pub fn rr_at_k(run: &RunList, qrels: &Qrels, k: usize) -> Result<f64> {
    let rel = relevant_set(run, qrels)?;
    Ok(run
        .doc_ids()
        .take(k)
        .position(|d| rel.contains(d))
        .map_or(0.0, |pos| 1.0 / (pos + 1) as f64))
}

/// Precision at `N`, the number of relevant documents. Runs shorter than `N`
/// still divide by `N`.
pub fn r_precision(run: &RunList, qrels: &Qrels) -> Result<f64> {
    let rel = relevant_set(run, qrels)?;
    Ok(hits_in_top(run, rel, rel.len()) as f64 / rel.len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Metric {
    Recall(usize),
    ReciprocalRank(usize),
    RPrecision,
}

impl Metric {
    pub fn evaluate(&self, run: &RunList, qrels: &Qrels) -> Result<f64> {
        match *self {
            Metric::Recall(k) => recall_at_k(run, qrels, k),
            Metric::ReciprocalRank(k) => rr_at_k(run, qrels, k),
            Metric::RPrecision => r_precision(run, qrels),
        }
    }

    /// R@k for each cutoff, then MRR@10 and RP.
    pub fn standard_set(cutoffs: &[usize]) -> Vec<Metric> {
        let mut out: Vec<Metric> = cutoffs.iter().map(|&k| Metric::Recall(k)).collect();
        out.push(Metric::ReciprocalRank(10));
        out.push(Metric::RPrecision);
        out
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::Recall(k) => write!(f, "R@{k}"),
            Metric::ReciprocalRank(k) => write!(f, "MRR@{k}"),
            Metric::RPrecision => f.write_str("RP"),
        }
    }
}

impl FromStr for Metric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        if matches!(lower.as_str(), "rp" | "r-precision" | "rprec") {
            return Ok(Metric::RPrecision);
        }
        let bad = || Error::InvalidArgument(format!("unknown metric `{s}`"));
        let (name, k) = lower.split_once('@').ok_or_else(bad)?;
        let k: usize = k.parse().map_err(|_| bad())?;
        if k == 0 {
            return Err(Error::InvalidArgument("metric cutoff must be ≥ 1".into()));
        }
        match name {
            "r" | "recall" => Ok(Metric::Recall(k)),
            "mrr" | "rr" => Ok(Metric::ReciprocalRank(k)),
            _ => Err(bad()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MetricReport {
    pub metrics: Vec<String>,
    /// Per evaluated query, one value per metric.
    pub per_query: BTreeMap<QueryId, Vec<f64>>,
    /// Macro average per metric.
    pub average: Vec<f64>,
    /// Queries in the run but absent from the qrels or without any relevant
    /// document.
    pub skipped: Vec<QueryId>,
}

impl MetricReport {
    pub fn get(&self, metric: Metric) -> Option<f64> {
        let name = metric.to_string();
        self.metrics.iter().position(|m| *m == name).map(|i| self.average[i])
    }

    pub fn evaluated(&self) -> usize {
        self.per_query.len()
    }

    /// Aligned plain-text table: one row per query, then the mean.
    pub fn to_table(&self) -> String {
        let qwidth = self
            .per_query
            .keys()
            .map(|q| q.as_str().len())
            .chain([5])
            .max()
            .unwrap_or(5);
        let mut out = String::new();
        let _ = write!(out, "{:<qwidth$}", "query");
        for m in &self.metrics {
            let _ = write!(out, "  {m:>8}");
        }
        out.push('\n');
        for (q, values) in &self.per_query {
            let _ = write!(out, "{:<qwidth$}", q.as_str());
            for v in values {
                let _ = write!(out, "  {v:>8.4}");
            }
            out.push('\n');
        }
        let _ = write!(out, "{:<qwidth$}", "mean");
        for v in &self.average {
            let _ = write!(out, "  {v:>8.4}");
        }
        out.push('\n');
        let _ = writeln!(
            out,
            "evaluated {} queries, skipped {}",
            self.per_query.len(),
            self.skipped.len()
        );
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Evaluates every query present in both the run set and the qrels (with at
/// least one relevant document) and macro-averages.
pub fn evaluate_run(runs: &RunSet, qrels: &Qrels, metrics: &[Metric]) -> Result<MetricReport> {
    let mut per_query = BTreeMap::new();
    let mut skipped = Vec::new();
    for (q, run) in runs {
        match qrels.relevant(q.as_str()) {
            Some(rel) if !rel.is_empty() => {
                let values = metrics
                    .iter()
                    .map(|m| m.evaluate(run, qrels))
                    .collect::<Result<Vec<_>>>()?;
                per_query.insert(q.clone(), values);
            }
            _ => skipped.push(q.clone()),
        }
    }
    if per_query.is_empty() {
        return Err(Error::Validation(
            "no query appears in both the run and the qrels".into(),
        ));
    }
    let n = per_query.len() as f64;
    let average = (0..metrics.len())
        .map(|i| per_query.values().map(|v: &Vec<f64>| v[i]).sum::<f64>() / n)
        .collect();
    Ok(MetricReport {
        metrics: metrics.iter().map(ToString::to_string).collect(),
        per_query,
        average,
        skipped,
    })
}

/// Macro average of one metric; used as the tuning objective.
pub fn mean_metric<'a, I>(runs: I, qrels: &Qrels, metric: Metric) -> Result<f64>
where
    I: IntoIterator<Item = &'a RunList>,
{
    let mut total = 0.0;
    let mut n = 0usize;
    for run in runs {
        if qrels.relevant(run.query_id().as_str()).is_some_and(|r| !r.is_empty()) {
            total += metric.evaluate(run, qrels)?;
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::Validation(
            "no query appears in both the run and the qrels".into(),
        ));
    }
    Ok(total / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(q: &str, docs: &[&str]) -> RunList {
        let n = docs.len();
        RunList::new(
            QueryId::new(q).unwrap(),
            "s",
            docs.iter()
                .enumerate()
                .map(|(i, d)| (DocId::new(*d).unwrap(), (n - i) as f64))
                .collect(),
        )
        .unwrap()
    }

    fn qrels(pairs: &[(&str, &str)]) -> Qrels {
        pairs
            .iter()
            .map(|(q, d)| (QueryId::new(*q).unwrap(), DocId::new(*d).unwrap()))
            .collect()
    }

    #[test]
    fn recall_examples() {
        let qr = qrels(&[("q", "a"), ("q", "b"), ("q", "c"), ("q", "d")]);
        assert_eq!(recall_at_k(&run("q", &["a", "x", "b", "y"]), &qr, 4).unwrap(), 0.5);
        assert_eq!(recall_at_k(&run("q", &["a", "b", "c", "d", "x"]), &qr, 5).unwrap(), 1.0);
    }

    #[test]
    fn rr_examples() {
        let qr = qrels(&[("q", "c")]);
        assert_eq!(rr_at_k(&run("q", &["a", "b", "c"]), &qr, 10).unwrap(), 1.0 / 3.0);
        assert_eq!(rr_at_k(&run("q", &["a", "b", "c"]), &qr, 2).unwrap(), 0.0);
    }

    #[test]
    fn rp_examples() {
        let qr = qrels(&[("q", "a"), ("q", "b")]);
        assert_eq!(r_precision(&run("q", &["a", "x", "b"]), &qr).unwrap(), 0.5);
        assert_eq!(r_precision(&run("q", &["b", "a"]), &qr).unwrap(), 1.0);
        assert_eq!(r_precision(&run("q", &["a"]), &qr).unwrap(), 0.5);
    }

    #[test]
    fn unjudged_query_errors() {
        let qr = qrels(&[("q", "a")]);
        assert!(recall_at_k(&run("other", &["a"]), &qr, 1).is_err());
    }

    #[test]
    fn mrr_of_two_queries() {
        let qr = qrels(&[("q1", "a"), ("q2", "b")]);
        let runs: RunSet = [run("q1", &["a", "b"]), run("q2", &["a", "b"])]
            .into_iter()
            .map(|r| (r.query_id().clone(), r))
            .collect();
        let report = evaluate_run(&runs, &qr, &[Metric::ReciprocalRank(10)]).unwrap();
        assert_eq!(report.average, [0.75]);
    }

    #[test]
    fn single_query_average_is_the_value() {
        let qr = qrels(&[("q", "b")]);
        let runs: RunSet = [(QueryId::new("q").unwrap(), run("q", &["a", "b"]))].into();
        let report = evaluate_run(&runs, &qr, &Metric::standard_set(&[1, 10])).unwrap();
        assert_eq!(report.average, report.per_query.values().next().unwrap().clone());
        assert_eq!(report.get(Metric::ReciprocalRank(10)), Some(0.5));
    }

    #[test]
    fn unjudged_queries_are_skipped_and_reported() {
        let qr = qrels(&[("q1", "a")]);
        let runs: RunSet = [run("q1", &["a"]), run("q9", &["a"])]
            .into_iter()
            .map(|r| (r.query_id().clone(), r))
            .collect();
        let report = evaluate_run(&runs, &qr, &[Metric::RPrecision]).unwrap();
        assert_eq!(report.evaluated(), 1);
        assert_eq!(report.skipped, [QueryId::new("q9").unwrap()]);
        assert!(report.to_table().contains("skipped 1"));
    }

    #[test]
    fn disjoint_queries_error() {
        let qr = qrels(&[("q1", "a")]);
        let runs: RunSet = [(QueryId::new("q2").unwrap(), run("q2", &["a"]))].into();
        assert!(evaluate_run(&runs, &qr, &[Metric::RPrecision]).is_err());
    }

    #[test]
    fn metric_names() {
        assert_eq!("recall@10".parse::<Metric>().unwrap(), Metric::Recall(10));
        assert_eq!("R@500".parse::<Metric>().unwrap(), Metric::Recall(500));
        assert_eq!("mrr@10".parse::<Metric>().unwrap(), Metric::ReciprocalRank(10));
        assert_eq!("rp".parse::<Metric>().unwrap(), Metric::RPrecision);
        assert!("ndcg@10".parse::<Metric>().is_err());
        assert!("r@0".parse::<Metric>().is_err());
        assert_eq!(Metric::Recall(10).to_string(), "R@10");
    }
}
