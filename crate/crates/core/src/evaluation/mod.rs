//! Offline evaluation with citation-derived relevance: accuracy (MAP, nDCG),
//! diversity (ILD, Coverage), seed statistics and ablation reports.

pub mod ablation;
pub mod buckets;
pub mod metrics;
pub mod report;
pub mod stats;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;
use std::sync::OnceLock;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::{Corpus, View};
use crate::error::{Error, Result};
use crate::graph::KnowledgeGraph;
use crate::ranking::{
    candidate_features, coarse_pool, cosine_slices, rank_pool, QueryFeatures, RankMode, Simplex4,
    WeightProfile,
};

pub use ablation::{ablation_report, apply_mode, AblationInput, AblationMode};
pub use buckets::{bucket_map, BucketScheme};
pub use metrics::BucketMap;
pub use report::{config_hash, EvalReport, MetricRow, TestRow};

/// One query paper and the papers it cites.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub query_id: String,
    pub relevant: BTreeSet<String>,
}

/// Queries are the papers with at least `min_citations` references; each
/// query's relevant set is its reference list.
pub fn judgments_from_graph(graph: &KnowledgeGraph, min_citations: usize) -> Result<Vec<Query>> {
    let mut out = Vec::new();
    for p in graph.papers() {
        let mut refs = graph.references_of(&p.paper_id)?;
        refs.remove(&p.paper_id);
        if refs.len() >= min_citations {
            out.push(Query {
                query_id: p.paper_id.clone(),
                relevant: refs,
            });
        }
    }
    Ok(out)
}

pub fn read_judgments(path: impl AsRef<Path>) -> Result<Vec<Query>> {
    crate::relation::read_jsonl(path)
}

pub fn write_judgments(queries: &[Query], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut s = String::new();
    for q in queries {
        s.push_str(&serde_json::to_string(q).map_err(|e| Error::Serialization(e.to_string()))?);
        s.push('\n');
    }
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}

/// Seeded dev/test split. Each side keeps at least one query when there
/// are two or more, and both come back sorted by query id.
pub fn split_queries(queries: &[Query], dev_fraction: f64, seed: u64) -> (Vec<Query>, Vec<Query>) {
    let mut shuffled: Vec<Query> = queries.to_vec();
    shuffled.sort_by(|a, b| a.query_id.cmp(&b.query_id));
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n = shuffled.len();
    let mut n_dev = (dev_fraction.clamp(0.0, 1.0) * n as f64).round() as usize;
    if n >= 2 {
        n_dev = n_dev.clamp(1, n - 1);
    }
    let mut test = shuffled.split_off(n_dev.min(n));
    let mut dev = shuffled;
    dev.sort_by(|a, b| a.query_id.cmp(&b.query_id));
    test.sort_by(|a, b| a.query_id.cmp(&b.query_id));
    (dev, test)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Metric {
    #[serde(rename = "MAP")]
    Map,
    #[serde(rename = "nDCG")]
    Ndcg,
    #[serde(rename = "ILD")]
    Ild,
    Coverage,
    /// Query/recommendation entity overlap; a proxy with no agreed definition.
    #[serde(rename = "EntityJaccardProxy")]
    EntityJaccard,
}

impl Metric {
    pub const ALL: [Metric; 5] = [
        Metric::Map,
        Metric::Ndcg,
        Metric::Ild,
        Metric::Coverage,
        Metric::EntityJaccard,
    ];

    pub fn range(self) -> (f64, f64) {
        match self {
            Metric::Ild => (0.0, 2.0),
            _ => (0.0, 1.0),
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::Map => "MAP",
            Metric::Ndcg => "nDCG",
            Metric::Ild => "ILD",
            Metric::Coverage => "Coverage",
            Metric::EntityJaccard => "EntityJaccardProxy",
        })
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown metric `{s}`")))
    }
}

/// Everything needed to score ranked lists for a set of queries.
#[derive(Debug, Clone)]
pub struct EvalContext {
    pub queries: Vec<Query>,
    /// Fixed candidate ids per query. When absent, every run draws its own
    /// top-K coarse pool from the whole corpus.
    pub candidate_pools: Option<BTreeMap<String, BTreeSet<String>>>,
    pub bucket_map: BucketMap,
    pub diversity_view: View,
    /// Entity ids per paper, for the overlap proxy.
    pub entity_sets: Option<BTreeMap<String, BTreeSet<String>>>,
}

impl EvalContext {
    pub fn new(queries: Vec<Query>, bucket_map: BucketMap) -> Self {
        EvalContext {
            queries,
            candidate_pools: None,
            bucket_map,
            diversity_view: View::Entities,
            entity_sets: None,
        }
    }

    pub fn from_graph(
        graph: &KnowledgeGraph,
        queries: Vec<Query>,
        scheme: BucketScheme,
    ) -> Result<Self> {
        let mut entity_sets = BTreeMap::new();
        for p in graph.papers() {
            let ids = graph
                .entities_of(&p.paper_id, None)?
                .into_iter()
                .map(|e| e.entity_id.clone())
                .collect();
            entity_sets.insert(p.paper_id.clone(), ids);
        }
        Ok(EvalContext {
            entity_sets: Some(entity_sets),
            ..EvalContext::new(queries, bucket_map(graph, scheme)?)
        })
    }

    /// Same context over other queries.
    pub fn with_queries(&self, queries: Vec<Query>) -> Self {
        EvalContext {
            queries,
            ..self.clone()
        }
    }
}

/// Metrics, cutoffs and pool size of one evaluation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub mode: RankMode,
    /// Coarse candidate pool size K.
    pub pool_k: usize,
    pub cutoffs: Vec<usize>,
    pub metrics: Vec<Metric>,
}

impl RunSpec {
    pub fn new(mode: RankMode, pool_k: usize, cutoffs: &[usize], metrics: &[Metric]) -> Self {
        RunSpec {
            mode,
            pool_k,
            cutoffs: cutoffs.to_vec(),
            metrics: metrics.to_vec(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.cutoffs.is_empty() || self.metrics.is_empty() {
            return Err(Error::Config(
                "need at least one metric and one cutoff".into(),
            ));
        }
        for &k in &self.cutoffs {
            if k == 0 || k > self.pool_k {
                return Err(Error::Config(format!(
                    "cutoff {k} must be in 1..={} (the pool size)",
                    self.pool_k
                )));
            }
            if k < 2 && self.metrics.contains(&Metric::Ild) {
                return Err(Error::Config(format!(
                    "ILD needs a cutoff of at least 2, got {k}"
                )));
            }
        }
        Ok(())
    }

    fn max_cutoff(&self) -> usize {
        self.cutoffs.iter().copied().max().unwrap_or(1)
    }
}

/// Per-query metric values of one run, aligned with `query_ids`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunMetrics {
    pub query_ids: Vec<String>,
    pub values: BTreeMap<(Metric, usize), Vec<f64>>,
    /// Ranked ids per query, as long as the largest cutoff allows.
    pub lists: Vec<Vec<String>>,
    pub skipped: Vec<String>,
}

impl RunMetrics {
    pub fn mean(&self, metric: Metric, k: usize) -> Option<f64> {
        let v = self.values.get(&(metric, k))?;
        if v.is_empty() {
            return None;
        }
        Some(v.iter().sum::<f64>() / v.len() as f64)
    }

    /// Values of `key` for the queries both runs share, in this run's order.
    pub fn paired(&self, other: &RunMetrics, key: (Metric, usize)) -> Option<Vec<f64>> {
        let mine = self.values.get(&key)?;
        other.values.get(&key)?;
        let shared: BTreeSet<&String> = other.query_ids.iter().collect();
        let mut ordered: Vec<(&String, f64)> = self
            .query_ids
            .iter()
            .zip(mine)
            .filter(|(q, _)| shared.contains(q))
            .map(|(q, v)| (q, *v))
            .collect();
        ordered.sort_by(|a, b| a.0.cmp(b.0));
        Some(ordered.into_iter().map(|(_, v)| v).collect())
    }
}

struct Diversity {
    index: HashMap<String, usize>,
    n: usize,
    cos: Vec<f64>,
}

impl Diversity {
    fn build(corpus: &Corpus, view: View) -> Self {
        let sets = corpus.sets();
        let n = sets.len();
        let rows: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let a = sets[i].view(view).as_slice();
                (0..n)
                    .map(|j| cosine_slices(a, sets[j].view(view).as_slice()).value)
                    .collect()
            })
            .collect();
        Diversity {
            index: sets
                .iter()
                .enumerate()
                .map(|(i, s)| (s.paper_id.clone(), i))
                .collect(),
            n,
            cos: rows.into_iter().flatten().collect(),
        }
    }

    fn ild(&self, ids: &[String], k: usize) -> f64 {
        let idx: Vec<usize> = ids.iter().take(k).map(|id| self.index[id]).collect();
        if idx.len() < 2 {
            return 0.0;
        }
        metrics::ild_by(idx.len(), |i, j| self.cos[idx[i] * self.n + idx[j]])
    }
}

struct PreparedQuery<'a> {
    query: &'a Query,
    features: QueryFeatures,
}

/// Query features computed once and reused across weight profiles.
pub struct PreparedEval<'a> {
    ctx: &'a EvalContext,
    corpus: &'a Corpus,
    queries: Vec<PreparedQuery<'a>>,
    skipped: Vec<String>,
    diversity: OnceLock<Diversity>,
}

impl<'a> PreparedEval<'a> {
    pub fn new(ctx: &'a EvalContext, corpus: &'a Corpus) -> Result<Self> {
        if corpus.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        if let Some(id) = ctx.bucket_map.keys().find(|id| corpus.get(id).is_none()) {
            return Err(Error::Evaluation(format!(
                "bucket map names `{id}`, which is not in the corpus"
            )));
        }
        let mut skipped = Vec::new();
        let mut live = Vec::new();
        for q in &ctx.queries {
            if corpus.get(&q.query_id).is_none() {
                return Err(Error::UnknownPaper(q.query_id.clone()));
            }
            if q.relevant.contains(&q.query_id) {
                return Err(Error::Evaluation(format!(
                    "query `{}` lists itself as relevant",
                    q.query_id
                )));
            }
            if q.relevant.is_empty() {
                skipped.push(q.query_id.clone());
            } else {
                live.push(q);
            }
        }
        let queries = live
            .into_par_iter()
            .map(|q| {
                let qs = corpus.get(&q.query_id).expect("checked above");
                let candidates = match &ctx.candidate_pools {
                    None => corpus
                        .sets()
                        .iter()
                        .filter(|p| p.paper_id != q.query_id)
                        .map(|p| candidate_features(qs, p))
                        .collect::<Result<Vec<_>>>()?,
                    Some(pools) => {
                        let pool = pools.get(&q.query_id).ok_or_else(|| {
                            Error::Evaluation(format!(
                                "no candidate pool for query `{}`",
                                q.query_id
                            ))
                        })?;
                        pool.iter()
                            .filter(|id| **id != q.query_id)
                            .map(|id| {
                                let p = corpus
                                    .get(id)
                                    .ok_or_else(|| Error::UnknownPaper(id.clone()))?;
                                candidate_features(qs, p)
                            })
                            .collect::<Result<Vec<_>>>()?
                    }
                };
                Ok(PreparedQuery {
                    query: q,
                    features: QueryFeatures {
                        query_id: q.query_id.clone(),
                        candidates,
                    },
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PreparedEval {
            ctx,
            corpus,
            queries,
            skipped,
            diversity: OnceLock::new(),
        })
    }

    /// Queries that will be scored.
    pub fn query_count(&self) -> usize {
        self.queries.len()
    }

    pub fn skipped(&self) -> &[String] {
        &self.skipped
    }

    fn diversity(&self) -> &Diversity {
        self.diversity
            .get_or_init(|| Diversity::build(self.corpus, self.ctx.diversity_view))
    }

    /// Top-`pool_k` coarse candidate ids per query under `w`.
    pub fn pools(&self, w: &Simplex4, pool_k: usize) -> Result<BTreeMap<String, BTreeSet<String>>> {
        self.queries
            .iter()
            .map(|pq| {
                let pool = coarse_pool(&pq.features, w, pool_k)?;
                Ok((
                    pq.query.query_id.clone(),
                    pool.items.into_iter().map(|c| c.paper_id).collect(),
                ))
            })
            .collect()
    }

    pub fn evaluate(&self, profile: &WeightProfile, spec: &RunSpec) -> Result<RunMetrics> {
        spec.validate()?;
        if self.queries.is_empty() {
            return Err(Error::Evaluation("no query with a relevant paper".into()));
        }
        if spec.metrics.contains(&Metric::EntityJaccard) && self.ctx.entity_sets.is_none() {
            return Err(Error::Config(
                "entity overlap needs entity sets in the context".into(),
            ));
        }
        let diversity = spec
            .metrics
            .contains(&Metric::Ild)
            .then(|| self.diversity());
        let n = spec.max_cutoff();
        let per_query = self
            .queries
            .par_iter()
            .map(|pq| self.score_query(pq, profile, spec, n, diversity))
            .collect::<Result<Vec<_>>>()?;

        let mut out = RunMetrics {
            skipped: self.skipped.clone(),
            ..Default::default()
        };
        for (pq, (list, vals)) in self.queries.iter().zip(per_query) {
            out.query_ids.push(pq.query.query_id.clone());
            out.lists.push(list);
            for (key, v) in vals {
                out.values.entry(key).or_default().push(v);
            }
        }
        Ok(out)
    }

    #[allow(clippy::type_complexity)]
    fn score_query(
        &self,
        pq: &PreparedQuery<'_>,
        profile: &WeightProfile,
        spec: &RunSpec,
        n: usize,
        diversity: Option<&Diversity>,
    ) -> Result<(Vec<String>, Vec<((Metric, usize), f64)>)> {
        if pq.features.candidates.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let pool = coarse_pool(&pq.features, &profile.w, spec.pool_k)?;
        let list = rank_pool(&pool, &profile.alpha, n, spec.mode)?;
        let ids: Vec<String> = list.items.into_iter().map(|c| c.paper_id).collect();
        let pool_buckets = if spec.metrics.contains(&Metric::Coverage) {
            Some(metrics::buckets_of(
                pool.items.iter().map(|c| c.paper_id.as_str()),
                &self.ctx.bucket_map,
            )?)
        } else {
            None
        };
        let rel = &pq.query.relevant;
        let mut vals = Vec::with_capacity(spec.metrics.len() * spec.cutoffs.len());
        for &metric in &spec.metrics {
            for &k in &spec.cutoffs {
                let v = match metric {
                    Metric::Map => {
                        metrics::ap_at_n(&ids, rel, k).expect("relevant set is nonempty")
                    }
                    Metric::Ndcg => {
                        metrics::ndcg_at_k(&ids, rel, k).expect("relevant set is nonempty")
                    }
                    Metric::Ild => diversity.expect("built when requested").ild(&ids, k),
                    Metric::Coverage => metrics::coverage_one(
                        &ids,
                        &self.ctx.bucket_map,
                        pool_buckets.as_ref().expect("built when requested"),
                        k,
                    )?,
                    Metric::EntityJaccard => {
                        let sets = self.ctx.entity_sets.as_ref().expect("checked above");
                        let empty = BTreeSet::new();
                        let qe = sets.get(&pq.query.query_id).unwrap_or(&empty);
                        let top: Vec<&String> = ids.iter().take(k).collect();
                        if top.is_empty() {
                            0.0
                        } else {
                            top.iter()
                                .map(|r| {
                                    metrics::entity_jaccard(qe, sets.get(*r).unwrap_or(&empty))
                                })
                                .sum::<f64>()
                                / top.len() as f64
                        }
                    }
                };
                vals.push(((metric, k), v));
            }
        }
        Ok((ids, vals))
    }

    /// `MAP@k + lambda * ILD@k`, the weight-learning objective.
    pub fn objective(
        &self,
        profile: &WeightProfile,
        mode: RankMode,
        pool_k: usize,
        k: usize,
        lambda: f64,
    ) -> Result<f64> {
        let metrics: &[Metric] = if lambda > 0.0 {
            &[Metric::Map, Metric::Ild]
        } else {
            &[Metric::Map]
        };
        let run = self.evaluate(profile, &RunSpec::new(mode, pool_k, &[k], metrics))?;
        let map = run.mean(Metric::Map, k).unwrap_or(0.0);
        if lambda > 0.0 {
            Ok(map + lambda * run.mean(Metric::Ild, k).unwrap_or(0.0))
        } else {
            Ok(map)
        }
    }
}
