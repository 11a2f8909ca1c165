//! Corpus, query, qrels and TREC run file readers and writers.
//!
//! Corpora and query sets are JSON lines with `id` and `text` fields. Qrels use
//! the TREC layout `qid 0 docid rel`; runs use `qid Q0 docid rank score tag`.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Corpus, DocId, Document, Qrels, Query, QueryId, RunList, RunSet};

pub(crate) fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

pub(crate) fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn origin(path: &Path) -> String {
    path.display().to_string()
}

#[derive(Deserialize)]
struct TextRecord {
    id: String,
    text: String,
}

/// Iterates non-blank JSON lines, deserializing each into `T`.
pub(crate) fn for_each_json_line<T, R, F>(reader: R, origin: &str, mut f: F) -> Result<()>
where
    T: for<'de> Deserialize<'de>,
    R: BufRead,
    F: FnMut(usize, T) -> Result<()>,
{
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::parse(origin, lineno, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: T = serde_json::from_str(&line).map_err(|e| Error::parse(origin, lineno, e.to_string()))?;
        f(lineno, record)?;
    }
    Ok(())
}

fn parse_text_records<R: BufRead>(reader: R, origin: &str) -> Result<Vec<(usize, TextRecord)>> {
    let mut out = Vec::new();
    for_each_json_line(reader, origin, |lineno, rec: TextRecord| {
        out.push((lineno, rec));
        Ok(())
    })?;
    Ok(out)
}

pub fn parse_corpus<R: BufRead>(reader: R, origin: &str) -> Result<Corpus> {
    let docs = parse_text_records(reader, origin)?
        .into_iter()
        .map(|(lineno, rec)| {
            let id = DocId::new(rec.id).map_err(|e| Error::parse(origin, lineno, e.to_string()))?;
            Ok(Document { id, text: rec.text })
        })
        .collect::<Result<Vec<_>>>()?;
    Corpus::new(docs)
}

pub fn read_corpus(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    parse_corpus(open(path)?, &origin(path))
}

pub fn parse_queries<R: BufRead>(reader: R, origin: &str) -> Result<Vec<Query>> {
    let mut seen = HashSet::new();
    parse_text_records(reader, origin)?
        .into_iter()
        .map(|(lineno, rec)| {
            let id = QueryId::new(rec.id).map_err(|e| Error::parse(origin, lineno, e.to_string()))?;
            if !seen.insert(id.clone()) {
                return Err(Error::Validation(format!("duplicate query id `{id}`")));
            }
            Ok(Query { id, text: rec.text })
        })
        .collect()
}

pub fn read_queries(path: impl AsRef<Path>) -> Result<Vec<Query>> {
    let path = path.as_ref();
    parse_queries(open(path)?, &origin(path))
}

/// Parses TREC qrels. Judgments with `rel > 0` are relevant, the rest ignored.
pub fn parse_qrels<R: BufRead>(reader: R, origin: &str) -> Result<Qrels> {
    let mut qrels = Qrels::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::parse(origin, lineno, e.to_string()))?;
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.is_empty() {
            continue;
        }
        if cols.len() != 4 {
            return Err(Error::parse(
                origin,
                lineno,
                format!("expected `qid 0 docid rel`, got {} columns", cols.len()),
            ));
        }
        let rel: i64 = cols[3]
            .parse()
            .map_err(|_| Error::parse(origin, lineno, format!("relevance `{}` is not an integer", cols[3])))?;
        let query = QueryId::new(cols[0]).map_err(|e| Error::parse(origin, lineno, e.to_string()))?;
        let doc = DocId::new(cols[2]).map_err(|e| Error::parse(origin, lineno, e.to_string()))?;
        if rel > 0 {
            qrels.insert(query, doc);
        } else {
            qrels.touch(query);
        }
    }
    Ok(qrels)
}

pub fn read_qrels(path: impl AsRef<Path>) -> Result<Qrels> {
    let path = path.as_ref();
    parse_qrels(open(path)?, &origin(path))
}

/// Per query while parsing: system tag, entries, ids seen.
type Pending = (String, Vec<(DocId, f64)>, HashSet<String>);

/// Parses a TREC run. The rank column is ignored; each query's entries are
/// re-sorted by score (doc id breaks ties).
pub fn parse_run<R: BufRead>(reader: R, origin: &str) -> Result<RunSet> {
    let mut grouped: BTreeMap<QueryId, Pending> = BTreeMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::parse(origin, lineno, e.to_string()))?;
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.is_empty() {
            continue;
        }
        if cols.len() != 6 {
            return Err(Error::parse(
                origin,
                lineno,
                format!("expected `qid Q0 docid rank score tag`, got {} columns", cols.len()),
            ));
        }
        let score: f64 = cols[4]
            .parse()
            .map_err(|_| Error::parse(origin, lineno, format!("score `{}` is not a number", cols[4])))?;
        if !score.is_finite() {
            return Err(Error::parse(
                origin,
                lineno,
                format!("score `{}` is not finite", cols[4]),
            ));
        }
        let query = QueryId::new(cols[0]).map_err(|e| Error::parse(origin, lineno, e.to_string()))?;
        let doc = DocId::new(cols[2]).map_err(|e| Error::parse(origin, lineno, e.to_string()))?;
        let (_, entries, seen) = grouped
            .entry(query)
            .or_insert_with(|| (cols[5].to_string(), Vec::new(), HashSet::new()));
        if !seen.insert(cols[2].to_string()) {
            return Err(Error::Validation(format!(
                "{origin}:{lineno}: duplicate document `{}` for query `{}`",
                cols[2], cols[0]
            )));
        }
        entries.push((doc, score));
    }
    grouped
        .into_iter()
        .map(|(query, (tag, entries, _))| {
            let run = RunList::from_unsorted(query.clone(), tag, entries)?;
            Ok((query, run))
        })
        .collect()
}

pub fn read_run(path: impl AsRef<Path>) -> Result<RunSet> {
    let path = path.as_ref();
    parse_run(open(path)?, &origin(path))
}

/// Formats a score with 17 significant digits, enough to round-trip any f64.
pub fn format_score(score: f64) -> String {
    format!("{score:.16e}")
}

/// Writes runs in TREC format, ranks being 1-based positions.
pub fn write_run_to<'a, W, I>(mut out: W, runs: I, tag: &str) -> std::io::Result<()>
where
    W: Write,
    I: IntoIterator<Item = &'a RunList>,
{
    for run in runs {
        for (pos, (doc, score)) in run.entries().iter().enumerate() {
            writeln!(
                out,
                "{} Q0 {} {} {} {}",
                run.query_id(),
                doc,
                pos + 1,
                format_score(*score),
                tag
            )?;
        }
    }
    out.flush()
}

pub fn write_run<'a, I>(runs: I, path: impl AsRef<Path>, tag: &str) -> Result<()>
where
    I: IntoIterator<Item = &'a RunList>,
{
    let path = path.as_ref();
    let out = create(path)?;
    write_run_to(out, runs, tag).map_err(|e| Error::io(path, e))
}

/// Writes one JSON object per line.
pub fn write_jsonl<'a, T, I>(items: I, path: impl AsRef<Path>) -> Result<()>
where
    T: Serialize + 'a,
    I: IntoIterator<Item = &'a T>,
{
    let path = path.as_ref();
    let mut out = create(path)?;
    let io_err = |e| Error::io(path, e);
    for item in items {
        serde_json::to_writer(&mut out, item).map_err(|e| io_err(e.into()))?;
        out.write_all(b"\n").map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

pub fn write_qrels_to<W: Write>(mut out: W, qrels: &Qrels) -> std::io::Result<()> {
    for (q, docs) in qrels.iter() {
        for d in docs {
            writeln!(out, "{q} 0 {d} 1")?;
        }
    }
    out.flush()
}

pub fn write_qrels(qrels: &Qrels, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    write_qrels_to(create(path)?, qrels).map_err(|e| Error::io(path, e))
}
