//! Accuracy and diversity metrics with binary relevance.

use std::collections::{BTreeMap, BTreeSet};

use crate::embedding::Vector;
use crate::error::{Error, Result};
use crate::ranking::cosine_slices;

fn hit<S: AsRef<str>>(relevant: &BTreeSet<String>, id: &S) -> bool {
    relevant.contains(id.as_ref())
}

/// Share of the first `k` positions that are relevant. A list shorter than
/// `k` counts its missing positions as misses.
pub fn precision_at_k<S: AsRef<str>>(ranked: &[S], relevant: &BTreeSet<String>, k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let hits = ranked.iter().take(k).filter(|id| hit(relevant, id)).count();
    hits as f64 / k as f64
}

/// Average precision over the top `n`, normalized by the total number of
/// relevant papers. `None` when nothing is relevant.
pub fn ap_at_n<S: AsRef<str>>(ranked: &[S], relevant: &BTreeSet<String>, n: usize) -> Option<f64> {
    if relevant.is_empty() {
        return None;
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, id) in ranked.iter().take(n).enumerate() {
        if hit(relevant, id) {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    Some(sum / relevant.len() as f64)
}

/// Mean of the defined APs; an error when every query was skipped.
pub fn map_at_k(aps: &[Option<f64>]) -> Result<f64> {
    let defined: Vec<f64> = aps.iter().flatten().copied().collect();
    if defined.is_empty() {
        return Err(Error::Evaluation("every query was skipped".into()));
    }
    Ok(defined.iter().sum::<f64>() / defined.len() as f64)
}

/// nDCG with gains `2^rel - 1` and an ideal list of `min(|relevant|, k)`
/// hits. `None` when nothing is relevant.
pub fn ndcg_at_k<S: AsRef<str>>(
    ranked: &[S],
    relevant: &BTreeSet<String>,
    k: usize,
) -> Option<f64> {
    if relevant.is_empty() {
        return None;
    }
    let discount = |i: usize| 1.0 / ((i + 2) as f64).log2();
    let dcg: f64 = ranked
        .iter()
        .take(k)
        .enumerate()
        .filter(|(_, id)| hit(relevant, id))
        .map(|(i, _)| discount(i))
        .sum();
    let idcg: f64 = (0..relevant.len().min(k)).map(discount).sum();
    if idcg == 0.0 {
        return Some(0.0);
    }
    Some(dcg / idcg)
}

/// Mean pairwise cosine distance among the first `k` vectors.
pub fn ild_at_k(vectors: &[&Vector], k: usize) -> Result<f64> {
    let k = k.min(vectors.len());
    if k < 2 {
        return Err(Error::Evaluation(format!(
            "ILD needs at least 2 items, got {k}"
        )));
    }
    Ok(ild_by(k, |i, j| {
        cosine_slices(vectors[i].as_slice(), vectors[j].as_slice()).value
    }))
}

/// ILD for `k` items given a pairwise cosine lookup.
pub(crate) fn ild_by(k: usize, cos: impl Fn(usize, usize) -> f64) -> f64 {
    let mut sum = 0.0;
    for i in 0..k {
        for j in i + 1..k {
            sum += 1.0 - cos(i, j);
        }
    }
    2.0 * sum / (k * (k - 1)) as f64
}

pub type BucketMap = BTreeMap<String, BTreeSet<String>>;

/// Buckets spanned by a set of papers.
pub fn buckets_of<'a, I>(papers: I, buckets: &BucketMap) -> Result<BTreeSet<String>>
where
    I: IntoIterator<Item = &'a str>,
{
    let mut out = BTreeSet::new();
    for p in papers {
        let b = buckets
            .get(p)
            .ok_or_else(|| Error::Evaluation(format!("paper `{p}` has no bucket")))?;
        out.extend(b.iter().cloned());
    }
    Ok(out)
}

/// Coverage of one list: distinct buckets of its top `k` over the buckets
/// of the candidate pool.
pub fn coverage_one<S: AsRef<str>>(
    ranked: &[S],
    buckets: &BucketMap,
    pool_buckets: &BTreeSet<String>,
    k: usize,
) -> Result<f64> {
    if pool_buckets.is_empty() {
        return Err(Error::Evaluation("candidate pool spans no buckets".into()));
    }
    let top = buckets_of(ranked.iter().take(k).map(|s| s.as_ref()), buckets)?;
    Ok(top.len() as f64 / pool_buckets.len() as f64)
}

/// Coverage averaged over queries.
pub fn coverage_at_k<S: AsRef<str>>(
    lists: &[Vec<S>],
    buckets: &BucketMap,
    pool_buckets: &[BTreeSet<String>],
    k: usize,
) -> Result<f64> {
    if lists.len() != pool_buckets.len() || lists.is_empty() {
        return Err(Error::Evaluation(format!(
            "{} lists for {} candidate pools",
            lists.len(),
            pool_buckets.len()
        )));
    }
    let mut sum = 0.0;
    for (list, pool) in lists.iter().zip(pool_buckets) {
        sum += coverage_one(list, buckets, pool, k)?;
    }
    Ok(sum / lists.len() as f64)
}

/// Jaccard overlap of entity-id sets; a labeled proxy for entity-aware
/// relevance rather than a metric with an agreed definition.
pub fn entity_jaccard(a: &BTreeSet<String>, b: &BTreeSet<String>) -> f64 {
    let union = a.union(b).count();
    if union == 0 {
        return 0.0;
    }
    a.intersection(b).count() as f64 / union as f64
}
