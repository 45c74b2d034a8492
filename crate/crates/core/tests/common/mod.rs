//! Straight-line reference implementations used to cross-check the library.
//! Nothing here calls into the ranking or metric code under test; corpora
//! are handed to the library as `VectorSet`s and recomputed here from the
//! raw pieces.

#![allow(dead_code)]

pub mod cli;

use std::collections::{BTreeMap, BTreeSet};

use facetrec::embedding::{Vector, VectorSet};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// One paper as its four raw pieces: document, task, method, material+metric.
#[derive(Debug, Clone)]
pub struct RawPaper {
    pub id: String,
    pub s: Vec<f32>,
    pub t: Vec<f32>,
    pub m: Vec<f32>,
    pub d: Vec<f32>,
}

impl RawPaper {
    pub fn to_set(&self) -> VectorSet {
        let v = |x: &Vec<f32>| Vector::new(x.clone()).unwrap();
        VectorSet::from_parts(
            self.id.clone(),
            v(&self.s),
            v(&self.t),
            v(&self.m),
            v(&self.d),
        )
        .unwrap()
    }

    fn cat(&self, parts: &[&Vec<f32>]) -> Vec<f32> {
        parts.iter().flat_map(|p| p.iter().copied()).collect()
    }

    pub fn general(&self) -> Vec<f32> {
        self.cat(&[&self.t, &self.m, &self.d, &self.s])
    }
    pub fn task(&self) -> Vec<f32> {
        self.cat(&[&self.t, &self.s])
    }
    pub fn method(&self) -> Vec<f32> {
        self.cat(&[&self.m, &self.s])
    }
    pub fn matmet(&self) -> Vec<f32> {
        self.cat(&[&self.d, &self.s])
    }
    pub fn task_method(&self) -> Vec<f32> {
        self.cat(&[&self.t, &self.m, &self.s])
    }
    pub fn task_matmet(&self) -> Vec<f32> {
        self.cat(&[&self.t, &self.d, &self.s])
    }
    pub fn entities(&self) -> Vec<f32> {
        self.cat(&[&self.t, &self.m, &self.d])
    }
}

fn random_vec(rng: &mut ChaCha8Rng, dim: usize, zero_prob: f64) -> Vec<f32> {
    if rng.random_bool(zero_prob) {
        return vec![0.0; dim];
    }
    (0..dim).map(|_| rng.random_range(-1.0f32..1.0)).collect()
}

/// Random papers; some entity pieces are zero and some papers are exact
/// copies of an earlier one so that ties occur.
pub fn random_papers(
    rng: &mut ChaCha8Rng,
    n: usize,
    doc_dim: usize,
    ent_dim: usize,
) -> Vec<RawPaper> {
    let mut out: Vec<RawPaper> = Vec::with_capacity(n);
    for i in 0..n {
        let id = format!("p{i:03}");
        if i > 0 && rng.random_bool(0.08) {
            let j = rng.random_range(0..i);
            out.push(RawPaper {
                id,
                ..out[j].clone()
            });
            continue;
        }
        out.push(RawPaper {
            id,
            s: random_vec(rng, doc_dim, 0.02),
            t: random_vec(rng, ent_dim, 0.1),
            m: random_vec(rng, ent_dim, 0.15),
            d: random_vec(rng, ent_dim, 0.15),
        });
    }
    out
}

/// A random point on the 4-simplex, sometimes a vertex or an edge midpoint.
pub fn random_simplex(rng: &mut ChaCha8Rng) -> [f64; 4] {
    match rng.random_range(0..6) {
        0 => {
            let mut v = [0.0; 4];
            v[rng.random_range(0..4)] = 1.0;
            v
        }
        1 => {
            let mut v = [0.0; 4];
            let a = rng.random_range(0..4);
            let b = (a + 1 + rng.random_range(0..3)) % 4;
            v[a] = 0.5;
            v[b] = 0.5;
            v
        }
        _ => {
            let raw: [f64; 4] = std::array::from_fn(|_| -rng.random_range(1e-9f64..1.0).ln());
            let s: f64 = raw.iter().sum();
            raw.map(|x| x / s)
        }
    }
}

pub fn cos(a: &[f32], b: &[f32]) -> f64 {
    assert_eq!(a.len(), b.len());
    let dot: f64 = a.iter().zip(b).map(|(x, y)| *x as f64 * *y as f64).sum();
    let na: f64 = a.iter().map(|x| (*x as f64).powi(2)).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| (*x as f64).powi(2)).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        (dot / (na * nb)).clamp(-1.0, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleItem {
    pub id: String,
    pub padded: bool,
}

fn desc_then_id(a: (f64, &str), b: (f64, &str)) -> std::cmp::Ordering {
    b.0.partial_cmp(&a.0).unwrap().then_with(|| a.1.cmp(b.1))
}

/// Coarse pool of `q`: every other paper scored by `w . (cos_g, cos_t,
/// cos_m, cos_d)`, best first, ties by id, cut at `k`. Returns ids with the
/// four cosines.
pub fn oracle_pool(
    q: &RawPaper,
    papers: &[RawPaper],
    w: [f64; 4],
    k: usize,
) -> Vec<(String, [f64; 4])> {
    let mut scored: Vec<(f64, String, [f64; 4])> = papers
        .iter()
        .filter(|p| p.id != q.id)
        .map(|p| {
            let c = [
                cos(&q.general(), &p.general()),
                cos(&q.task(), &p.task()),
                cos(&q.method(), &p.method()),
                cos(&q.matmet(), &p.matmet()),
            ];
            (
                w[0] * c[0] + w[1] * c[1] + w[2] * c[2] + w[3] * c[3],
                p.id.clone(),
                c,
            )
        })
        .collect();
    scored.sort_by(|a, b| desc_then_id((a.0, &a.1), (b.0, &b.1)));
    scored.truncate(k);
    scored.into_iter().map(|(_, id, c)| (id, c)).collect()
}

/// The whole ranking pipeline written out in one pass.
pub fn oracle_recommend(
    q: &RawPaper,
    papers: &[RawPaper],
    w: [f64; 4],
    alpha: [f64; 4],
    k: usize,
    n: usize,
    refined: bool,
) -> Vec<OracleItem> {
    let pool = oracle_pool(q, papers, w, k);
    if !refined {
        return pool
            .into_iter()
            .take(n)
            .map(|(id, _)| OracleItem { id, padded: false })
            .collect();
    }
    let mean_t = pool.iter().map(|(_, c)| c[1]).sum::<f64>() / pool.len() as f64;
    let by_id: BTreeMap<&str, &RawPaper> = papers.iter().map(|p| (p.id.as_str(), p)).collect();
    let mut subset: Vec<(f64, String)> = pool
        .iter()
        .filter(|(_, c)| c[1] >= mean_t - 1e-12)
        .map(|(id, c)| {
            let p = by_id[id.as_str()];
            let s1 = cos(&q.task_method(), &p.task_method());
            let s2 = c[1] - c[2];
            let s3 = c[1] - c[3];
            let s4 = cos(&q.task_matmet(), &p.task_matmet());
            (
                alpha[0] * s1 + alpha[1] * s2 + alpha[2] * s3 + alpha[3] * s4,
                id.clone(),
            )
        })
        .collect();
    subset.sort_by(|a, b| desc_then_id((a.0, &a.1), (b.0, &b.1)));
    let mut out: Vec<OracleItem> = subset
        .into_iter()
        .take(n)
        .map(|(_, id)| OracleItem { id, padded: false })
        .collect();
    for (id, _) in &pool {
        if out.len() >= n {
            break;
        }
        if !out.iter().any(|o| &o.id == id) {
            out.push(OracleItem {
                id: id.clone(),
                padded: true,
            });
        }
    }
    out
}

pub fn bf_ap(list: &[String], rel: &BTreeSet<String>, k: usize) -> f64 {
    let mut hits = 0.0;
    let mut total = 0.0;
    for (i, id) in list.iter().take(k).enumerate() {
        if rel.contains(id) {
            hits += 1.0;
            total += hits / (i + 1) as f64;
        }
    }
    total / rel.len() as f64
}

pub fn bf_ndcg(list: &[String], rel: &BTreeSet<String>, k: usize) -> f64 {
    let gain = |i: usize| 1.0 / ((i + 2) as f64).log2();
    let dcg: f64 = list
        .iter()
        .take(k)
        .enumerate()
        .filter(|(_, id)| rel.contains(*id))
        .map(|(i, _)| gain(i))
        .sum();
    let ideal: f64 = (0..rel.len().min(k)).map(gain).sum();
    dcg / ideal
}

/// Mean of `1 - cos` over all ordered pairs of distinct positions.
pub fn bf_ild(vectors: &[Vec<f32>]) -> f64 {
    let n = vectors.len();
    if n < 2 {
        return 0.0;
    }
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                total += 1.0 - cos(&vectors[i], &vectors[j]);
            }
        }
    }
    total / (n * (n - 1)) as f64
}

pub fn bf_coverage(
    list: &[String],
    pool: &[String],
    buckets: &BTreeMap<String, BTreeSet<String>>,
    k: usize,
) -> f64 {
    let cover = |ids: &mut dyn Iterator<Item = &String>| -> BTreeSet<String> {
        ids.flat_map(|id| buckets[id].iter().cloned()).collect()
    };
    let top = cover(&mut list.iter().take(k));
    let all = cover(&mut pool.iter());
    top.len() as f64 / all.len() as f64
}

pub fn bf_jaccard_mean(
    q: &BTreeSet<String>,
    list: &[String],
    sets: &BTreeMap<String, BTreeSet<String>>,
    k: usize,
) -> f64 {
    let top: Vec<&String> = list.iter().take(k).collect();
    if top.is_empty() {
        return 0.0;
    }
    let mut total = 0.0;
    for id in &top {
        let other = &sets[*id];
        let inter = q.iter().filter(|e| other.contains(*e)).count();
        let uni = q.len() + other.len() - inter;
        total += if uni == 0 {
            0.0
        } else {
            inter as f64 / uni as f64
        };
    }
    total / top.len() as f64
}

/// One random metric comparison: the library harness against the
/// brute-force evaluator on the same corpus and profile. Returns the
/// largest absolute difference over every query, metric and cutoff.
pub fn metric_trial(seed: u64) -> Result<f64, String> {
    use facetrec::embedding::Corpus;
    use facetrec::evaluation::{EvalContext, Metric, PreparedEval, Query, RunSpec};
    use facetrec::ranking::{RankMode, Simplex4, WeightProfile};
    use rand::SeedableRng;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(3..=100);
    let (doc_dim, ent_dim) = (rng.random_range(2..8), rng.random_range(2..8));
    let papers = random_papers(&mut rng, n, doc_dim, ent_dim);
    let ids: Vec<String> = papers.iter().map(|p| p.id.clone()).collect();
    let n_queries = rng.random_range(1..=20.min(n));
    let mut queries = Vec::new();
    for qi in 0..n_queries {
        let qid = ids[(qi * 7 + seed as usize) % n].clone();
        if queries.iter().any(|q: &Query| q.query_id == qid) {
            continue;
        }
        let relevant: BTreeSet<String> = ids
            .iter()
            .filter(|id| **id != qid && rng.random_bool(0.15))
            .cloned()
            .collect();
        queries.push(Query {
            query_id: qid,
            relevant,
        });
    }
    let labels = ["a", "b", "c", "d", "e", "f"];
    let mut buckets = BTreeMap::new();
    let mut entity_sets = BTreeMap::new();
    for id in &ids {
        let count = rng.random_range(1..=3);
        let b: BTreeSet<String> = (0..count)
            .map(|_| labels[rng.random_range(0..labels.len())].to_string())
            .collect();
        buckets.insert(id.clone(), b);
        let e: BTreeSet<String> = (0..rng.random_range(0..5))
            .map(|_| format!("e{}", rng.random_range(0..8)))
            .collect();
        entity_sets.insert(id.clone(), e);
    }
    let w = random_simplex(&mut rng);
    let alpha = random_simplex(&mut rng);
    let pool_k = rng.random_range(2..n);
    let mode = if rng.random_bool(0.5) {
        RankMode::Refined
    } else {
        RankMode::Coarse
    };
    let cutoffs: Vec<usize> = [2, 3, 5, 10, 20]
        .into_iter()
        .filter(|&k| k <= pool_k)
        .collect();

    let corpus =
        Corpus::new(papers.iter().map(RawPaper::to_set).collect()).map_err(|e| e.to_string())?;
    let mut ctx = EvalContext::new(queries.clone(), buckets.clone());
    ctx.entity_sets = Some(entity_sets.clone());
    let prepared = PreparedEval::new(&ctx, &corpus).map_err(|e| e.to_string())?;
    if prepared.query_count() == 0 {
        return Ok(0.0);
    }
    let profile = WeightProfile {
        w: Simplex4::new(w).map_err(|e| e.to_string())?,
        alpha: Simplex4::new(alpha).map_err(|e| e.to_string())?,
    };
    let spec = RunSpec::new(mode, pool_k, &cutoffs, &Metric::ALL);
    let run = prepared
        .evaluate(&profile, &spec)
        .map_err(|e| e.to_string())?;

    let by_id: BTreeMap<&str, &RawPaper> = papers.iter().map(|p| (p.id.as_str(), p)).collect();
    let mut worst = 0.0f64;
    let live: Vec<&Query> = queries.iter().filter(|q| !q.relevant.is_empty()).collect();
    if run.query_ids.len() != live.len() {
        return Err(format!(
            "seed {seed}: {} scored queries, expected {}",
            run.query_ids.len(),
            live.len()
        ));
    }
    for (qi, q) in live.iter().enumerate() {
        if run.query_ids[qi] != q.query_id {
            return Err(format!("seed {seed}: query order differs at {qi}"));
        }
        let qp = by_id[q.query_id.as_str()];
        let pool: Vec<String> = oracle_pool(qp, &papers, w, pool_k)
            .into_iter()
            .map(|(id, _)| id)
            .collect();
        let max_k = *cutoffs.iter().max().unwrap();
        let list: Vec<String> = oracle_recommend(
            qp,
            &papers,
            w,
            alpha,
            pool_k,
            max_k,
            mode == RankMode::Refined,
        )
        .into_iter()
        .map(|o| o.id)
        .collect();
        for &k in &cutoffs {
            let top: Vec<Vec<f32>> = list
                .iter()
                .take(k)
                .map(|id| by_id[id.as_str()].entities())
                .collect();
            let expected = [
                (Metric::Map, bf_ap(&list, &q.relevant, k)),
                (Metric::Ndcg, bf_ndcg(&list, &q.relevant, k)),
                (Metric::Ild, bf_ild(&top)),
                (Metric::Coverage, bf_coverage(&list, &pool, &buckets, k)),
                (
                    Metric::EntityJaccard,
                    bf_jaccard_mean(&entity_sets[&q.query_id], &list, &entity_sets, k),
                ),
            ];
            for (metric, want) in expected {
                let got = run.values[&(metric, k)][qi];
                worst = worst.max((got - want).abs());
            }
        }
    }
    Ok(worst)
}

/// One random ranking comparison in both modes. Returns the number of
/// queries compared.
pub fn pipeline_trial(seed: u64) -> Result<usize, String> {
    use facetrec::ranking::{recommend, RankMode, Simplex4, WeightProfile};
    use rand::SeedableRng;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=100);
    let (doc_dim, ent_dim) = (rng.random_range(2..10), rng.random_range(2..10));
    let papers = random_papers(&mut rng, n, doc_dim, ent_dim);
    let sets: Vec<VectorSet> = papers.iter().map(RawPaper::to_set).collect();
    let w = random_simplex(&mut rng);
    let alpha = random_simplex(&mut rng);
    let profile = WeightProfile {
        w: Simplex4::new(w).map_err(|e| e.to_string())?,
        alpha: Simplex4::new(alpha).map_err(|e| e.to_string())?,
    };
    let mut compared = 0;
    for _ in 0..3 {
        let qi = rng.random_range(0..n);
        let k = rng.random_range(1..=n);
        let nn = rng.random_range(1..=k);
        for (mode, refined) in [(RankMode::Coarse, false), (RankMode::Refined, true)] {
            let got =
                recommend(&sets[qi], &sets, &profile, k, nn, mode).map_err(|e| e.to_string())?;
            let want = oracle_recommend(&papers[qi], &papers, w, alpha, k, nn, refined);
            let got: Vec<OracleItem> = got
                .items
                .iter()
                .map(|c| OracleItem {
                    id: c.paper_id.clone(),
                    padded: c.padded,
                })
                .collect();
            if got != want {
                return Err(format!(
                    "seed {seed}, query {}, {mode} K={k} N={nn}: {got:?} != {want:?}",
                    papers[qi].id
                ));
            }
            compared += 1;
        }
    }
    Ok(compared)
}
