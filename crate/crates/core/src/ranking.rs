//! Two-stage ranking: coarse candidate generation by a convex combination of
//! per-view cosines, then refinement of the task-similar subset by four
//! task-anchored signals.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::{Vector, VectorSet, View};
use crate::error::{Error, Result};

/// Tolerance for the unit-sum check of a simplex block.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// A point on the 4-simplex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Simplex4([f64; 4]);

impl Simplex4 {
    pub fn new(values: [f64; 4]) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Weights(format!(
                "{values:?} has a negative or non-finite entry"
            )));
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::Weights(format!("{values:?} sums to {sum}, not 1")));
        }
        Ok(Simplex4(values))
    }

    /// For values already known to be on the simplex up to rounding.
    pub(crate) fn from_unchecked(values: [f64; 4]) -> Self {
        Simplex4(values)
    }

    pub const fn uniform() -> Self {
        Simplex4([0.25; 4])
    }

    pub const fn vertex(i: usize) -> Self {
        let mut v = [0.0; 4];
        v[i] = 1.0;
        Simplex4(v)
    }

    pub fn values(&self) -> [f64; 4] {
        self.0
    }

    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }

    /// Index of the largest coordinate; the first one on ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for i in 1..4 {
            if self.0[i] > self.0[best] {
                best = i;
            }
        }
        best
    }

    pub fn dot(&self, x: &[f64; 4]) -> f64 {
        self.0.iter().zip(x).map(|(w, v)| w * v).sum()
    }
}

impl TryFrom<Vec<f64>> for Simplex4 {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        let arr: [f64; 4] = v.try_into().map_err(|v: Vec<f64>| {
            Error::Weights(format!("expected 4 weights, got {}", v.len()))
        })?;
        Simplex4::new(arr)
    }
}

impl From<Simplex4> for Vec<f64> {
    fn from(s: Simplex4) -> Vec<f64> {
        s.0.to_vec()
    }
}

impl fmt::Display for Simplex4 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = self.0;
        write!(f, "({a:.4}, {b:.4}, {c:.4}, {d:.4})")
    }
}

/// Coarse view weights `w` over (general, task, method, material/metric) and
/// refinement weights `alpha` over the four signals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightProfile {
    pub w: Simplex4,
    pub alpha: Simplex4,
}

impl WeightProfile {
    /// Starting point for weight search.
    pub fn heuristic() -> Self {
        let h = Simplex4([0.4, 0.3, 0.2, 0.1]);
        WeightProfile { w: h, alpha: h }
    }

    /// The optimum reported on the in-domain benchmark corpus.
    pub fn reported() -> Self {
        WeightProfile {
            w: Simplex4([0.46, 0.28, 0.18, 0.08]),
            alpha: Simplex4([0.40, 0.30, 0.20, 0.10]),
        }
    }

    pub fn uniform() -> Self {
        WeightProfile {
            w: Simplex4::uniform(),
            alpha: Simplex4::uniform(),
        }
    }
}

impl Default for WeightProfile {
    fn default() -> Self {
        Self::heuristic()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankMode {
    Coarse,
    Refined,
}

impl fmt::Display for RankMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RankMode::Coarse => "coarse",
            RankMode::Refined => "refined",
        })
    }
}

impl std::str::FromStr for RankMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "coarse" => Ok(RankMode::Coarse),
            "refined" => Ok(RankMode::Refined),
            other => Err(Error::Config(format!("unknown mode `{other}`"))),
        }
    }
}

/// Cosine similarity plus a flag for the zero-vector convention.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cosine {
    pub value: f64,
    /// Set when either side is the zero vector; `value` is then 0.
    pub degenerate: bool,
}

pub(crate) fn cosine_slices(a: &[f32], b: &[f32]) -> Cosine {
    let (mut dot, mut na, mut nb) = (0.0f64, 0.0f64, 0.0f64);
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = (x as f64, y as f64);
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Cosine {
            value: 0.0,
            degenerate: true,
        };
    }
    Cosine {
        value: (dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0),
        degenerate: false,
    }
}

pub fn cosine(a: &Vector, b: &Vector) -> Result<Cosine> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            actual: b.dim(),
        });
    }
    Ok(cosine_slices(a.as_slice(), b.as_slice()))
}

fn view_cos(q: &VectorSet, p: &VectorSet, view: View) -> f64 {
    cosine_slices(q.view(view).as_slice(), p.view(view).as_slice()).value
}

fn check_dims(q: &VectorSet, p: &VectorSet) -> Result<()> {
    for (a, b) in [(q.doc_dim(), p.doc_dim()), (q.entity_dim(), p.entity_dim())] {
        if a != b {
            return Err(Error::DimensionMismatch {
                expected: a,
                actual: b,
            });
        }
    }
    Ok(())
}

/// Every quantity the ranker needs about one (query, candidate) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateFeatures {
    pub paper_id: String,
    /// Cosines over the general, task, method and material/metric views.
    pub views: [f64; 4],
    pub signals: [f64; 4],
}

pub fn candidate_features(q: &VectorSet, p: &VectorSet) -> Result<CandidateFeatures> {
    check_dims(q, p)?;
    let views = View::COARSE.map(|v| view_cos(q, p, v));
    let signals = [
        view_cos(q, p, View::TaskMethod),
        views[1] - views[2],
        views[1] - views[3],
        view_cos(q, p, View::TaskMatMet),
    ];
    Ok(CandidateFeatures {
        paper_id: p.paper_id.clone(),
        views,
        signals,
    })
}

/// The four refinement signals: joint task+method cosine, task minus
/// method, task minus material/metric, joint task+material/metric cosine.
pub fn compute_signals(q: &VectorSet, p: &VectorSet) -> Result<[f64; 4]> {
    Ok(candidate_features(q, p)?.signals)
}

/// Features of the query against every other paper of the corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryFeatures {
    pub query_id: String,
    pub candidates: Vec<CandidateFeatures>,
}

pub fn query_features(q: &VectorSet, corpus: &[VectorSet]) -> Result<QueryFeatures> {
    let candidates = corpus
        .par_iter()
        .filter(|p| p.paper_id != q.paper_id)
        .map(|p| candidate_features(q, p))
        .collect::<Result<Vec<_>>>()?;
    Ok(QueryFeatures {
        query_id: q.paper_id.clone(),
        candidates,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredCandidate {
    pub paper_id: String,
    pub per_view_cos: [f64; 4],
    pub coarse_score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signals: Option<[f64; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refined_score: Option<f64>,
    /// Filled from the coarse order because the task subset ran short.
    #[serde(default)]
    pub padded: bool,
}

impl ScoredCandidate {
    fn from_features(f: &CandidateFeatures, w: &Simplex4) -> Self {
        ScoredCandidate {
            paper_id: f.paper_id.clone(),
            per_view_cos: f.views,
            coarse_score: w.dot(&f.views),
            signals: Some(f.signals),
            refined_score: None,
            padded: false,
        }
    }

    /// Score used for ordering: refined when present, coarse otherwise.
    pub fn score(&self) -> f64 {
        self.refined_score.unwrap_or(self.coarse_score)
    }
}

pub fn score_coarse(q: &VectorSet, p: &VectorSet, w: &Simplex4) -> Result<ScoredCandidate> {
    Ok(ScoredCandidate::from_features(
        &candidate_features(q, p)?,
        w,
    ))
}

fn by_score_then_id(a_score: f64, a_id: &str, b_score: f64, b_id: &str) -> Ordering {
    b_score.total_cmp(&a_score).then_with(|| a_id.cmp(b_id))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidatePool {
    pub query_id: String,
    /// Sorted by coarse score, ties by ascending paper id.
    pub items: Vec<ScoredCandidate>,
    /// Set when fewer than the requested K candidates were available.
    pub exhausted: bool,
}

/// Top-`k` candidates by coarse score from precomputed features.
pub fn coarse_pool(features: &QueryFeatures, w: &Simplex4, k: usize) -> Result<CandidatePool> {
    if k == 0 {
        return Err(Error::Config(
            "candidate pool size K must be at least 1".into(),
        ));
    }
    let mut items: Vec<ScoredCandidate> = features
        .candidates
        .iter()
        .map(|f| ScoredCandidate::from_features(f, w))
        .collect();
    items
        .sort_by(|a, b| by_score_then_id(a.coarse_score, &a.paper_id, b.coarse_score, &b.paper_id));
    let exhausted = items.len() < k;
    items.truncate(k);
    Ok(CandidatePool {
        query_id: features.query_id.clone(),
        items,
        exhausted,
    })
}

/// Exact scan of the corpus; the query itself is never a candidate.
pub fn generate_candidates(
    q: &VectorSet,
    corpus: &[VectorSet],
    w: &Simplex4,
    k: usize,
) -> Result<CandidatePool> {
    coarse_pool(&query_features(q, corpus)?, w, k)
}

/// Candidates whose task-view cosine reaches the pool mean.
pub fn task_subset(pool: &CandidatePool) -> CandidatePool {
    if pool.items.is_empty() {
        return pool.clone();
    }
    let mean = pool.items.iter().map(|c| c.per_view_cos[1]).sum::<f64>() / pool.items.len() as f64;
    // absorb rounding in the mean so equal cosines are all retained
    let threshold = mean - 1e-12;
    CandidatePool {
        query_id: pool.query_id.clone(),
        items: pool
            .items
            .iter()
            .filter(|c| c.per_view_cos[1] >= threshold)
            .cloned()
            .collect(),
        exhausted: pool.exhausted,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedList {
    pub query_id: String,
    pub mode: RankMode,
    /// Requested list length.
    pub k: usize,
    pub items: Vec<ScoredCandidate>,
    /// The candidate pool held fewer papers than requested.
    #[serde(default)]
    pub pool_exhausted: bool,
}

impl RankedList {
    pub fn ids(&self) -> Vec<&str> {
        self.items.iter().map(|c| c.paper_id.as_str()).collect()
    }
}

/// Re-scores a subset by `sum_j alpha_j * s_j` and sorts it.
pub fn refine(subset: &CandidatePool, alpha: &Simplex4) -> Result<RankedList> {
    let mut items = Vec::with_capacity(subset.items.len());
    for c in &subset.items {
        let signals = c.signals.ok_or_else(|| {
            Error::Evaluation(format!("candidate `{}` carries no signals", c.paper_id))
        })?;
        let mut c = c.clone();
        c.refined_score = Some(alpha.dot(&signals));
        items.push(c);
    }
    items.sort_by(|a, b| by_score_then_id(a.score(), &a.paper_id, b.score(), &b.paper_id));
    Ok(RankedList {
        query_id: subset.query_id.clone(),
        mode: RankMode::Refined,
        k: items.len(),
        items,
        pool_exhausted: subset.exhausted,
    })
}

/// First `n` of an already generated pool, refined or not.
pub fn rank_pool(
    pool: &CandidatePool,
    alpha: &Simplex4,
    n: usize,
    mode: RankMode,
) -> Result<RankedList> {
    if n == 0 {
        return Err(Error::Config("list length N must be at least 1".into()));
    }
    let items = match mode {
        RankMode::Coarse => pool.items.iter().take(n).cloned().collect(),
        RankMode::Refined => {
            let refined = refine(&task_subset(pool), alpha)?;
            let mut items: Vec<ScoredCandidate> = refined.items.into_iter().take(n).collect();
            if items.len() < n {
                let used: BTreeSet<String> = items.iter().map(|c| c.paper_id.clone()).collect();
                let fill: Vec<ScoredCandidate> = pool
                    .items
                    .iter()
                    .filter(|c| !used.contains(&c.paper_id))
                    .take(n - items.len())
                    .map(|c| ScoredCandidate {
                        padded: true,
                        ..c.clone()
                    })
                    .collect();
                items.extend(fill);
            }
            items
        }
    };
    Ok(RankedList {
        query_id: pool.query_id.clone(),
        mode,
        k: n,
        items,
        pool_exhausted: pool.exhausted,
    })
}

/// Full pipeline from precomputed features.
pub fn rank_features(
    features: &QueryFeatures,
    profile: &WeightProfile,
    k: usize,
    n: usize,
    mode: RankMode,
) -> Result<RankedList> {
    if features.candidates.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if n == 0 || n > k {
        return Err(Error::Config(format!("need 1 <= N <= K, got N={n}, K={k}")));
    }
    let pool = coarse_pool(features, &profile.w, k)?;
    rank_pool(&pool, &profile.alpha, n, mode)
}

/// Recommends `n` papers for `q` from a pool of `k` coarse candidates.
pub fn recommend(
    q: &VectorSet,
    corpus: &[VectorSet],
    profile: &WeightProfile,
    k: usize,
    n: usize,
    mode: RankMode,
) -> Result<RankedList> {
    if corpus.iter().all(|p| p.paper_id == q.paper_id) {
        return Err(Error::EmptyCorpus);
    }
    rank_features(&query_features(q, corpus)?, profile, k, n, mode)
}
