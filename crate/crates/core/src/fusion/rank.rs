use std::collections::HashMap;

use crate::model::{DocId, RunList};

/// Rank of every entry, aligned with `run.entries()`.
///
/// The rank of a document is one plus the number of documents with a
/// strictly higher score, so tied documents share the best rank: scores
/// `[5, 5, 1]` yield ranks `[1, 1, 3]`.
pub fn ranks(run: &RunList) -> Vec<usize> {
    let entries = run.entries();
    let mut out = Vec::with_capacity(entries.len());
    let mut group_start = 0;
    for (i, (_, score)) in entries.iter().enumerate() {
        if i == 0 || *score != entries[i - 1].1 {
            group_start = i;
        }
        out.push(group_start + 1);
    }
    out
}

/// Document → rank map; see [`ranks`].
pub fn rank_positions(run: &RunList) -> HashMap<DocId, usize> {
    run.doc_ids().cloned().zip(ranks(run)).collect()
}
