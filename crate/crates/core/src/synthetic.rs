//! Planted corpora: papers drawn from known task, method and material
//! clusters, so the right answer of a ranking or learning run is known.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::embedding::{compose_corpus, Corpus, Vector, VectorStore};
use crate::error::{Error, Result};
use crate::evaluation::{judgments_from_graph, Query};
use crate::graph::{EdgeRecord, EntityRecord, KnowledgeGraph, PaperRecord, RelationKind, TopType};

/// Which planted clusters make a paper relevant to a query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relevance {
    /// Same task cluster.
    Task,
    /// Same task, method and material clusters.
    AllFacets,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlantedConfig {
    pub papers: usize,
    /// The first `queries` papers cite their relevant papers.
    pub queries: usize,
    pub task_clusters: usize,
    pub method_clusters: usize,
    pub matmet_clusters: usize,
    pub entities_per_cluster: usize,
    pub doc_dim: usize,
    pub entity_dim: usize,
    /// Norm of the per-entity offset from its cluster centre (centres have
    /// unit norm).
    pub task_noise: f64,
    pub method_noise: f64,
    pub matmet_noise: f64,
    /// Weight of the task-cluster direction in document vectors.
    pub doc_signal: f64,
    pub doc_noise: f64,
    pub relevance: Relevance,
    /// Method clusters subdivide task clusters: each task cluster owns
    /// `method_clusters` method clusters of its own. Only used with
    /// [`Relevance::Task`].
    pub nested_methods: bool,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        PlantedConfig {
            papers: 120,
            queries: 120,
            task_clusters: 12,
            method_clusters: 4,
            matmet_clusters: 4,
            entities_per_cluster: 3,
            doc_dim: 16,
            entity_dim: 16,
            task_noise: 1.5,
            method_noise: 0.5,
            matmet_noise: 0.5,
            doc_signal: 1.0,
            doc_noise: 1.0,
            relevance: Relevance::Task,
            nested_methods: false,
        }
    }
}

impl PlantedConfig {
    /// Relevance follows the task cluster; the task signal is split between
    /// the task entities and the document vector.
    pub fn task_signal() -> Self {
        Self::default()
    }

    /// Relevance needs the task, method and material clusters to agree.
    pub fn complementary() -> Self {
        PlantedConfig {
            papers: 216,
            queries: 216,
            task_clusters: 3,
            method_clusters: 3,
            matmet_clusters: 3,
            relevance: Relevance::AllFacets,
            ..Self::default()
        }
    }

    /// Few large task clusters, each split into tight method sub-clusters,
    /// so method similarity buys accuracy at the cost of list diversity.
    pub fn clustered() -> Self {
        PlantedConfig {
            papers: 160,
            queries: 160,
            task_clusters: 4,
            method_clusters: 2,
            method_noise: 0.3,
            nested_methods: true,
            ..Self::default()
        }
    }
}

/// Generated graph, vectors and judgments plus the hidden assignment.
#[derive(Debug, Clone)]
pub struct PlantedCorpus {
    pub graph: KnowledgeGraph,
    pub docs: VectorStore,
    pub entities: VectorStore,
    pub queries: Vec<Query>,
    /// (task, method, material) cluster of every paper.
    pub clusters: BTreeMap<String, [usize; 3]>,
}

impl PlantedCorpus {
    pub fn corpus(&self) -> Result<Corpus> {
        Corpus::new(compose_corpus(&self.graph, &self.docs, &self.entities)?)
    }
}

fn gaussian(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect()
}

fn unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    let v = gaussian(rng, dim);
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

/// `centre + noise * direction` with a random unit direction.
fn around(rng: &mut ChaCha8Rng, centre: &[f64], noise: f64) -> Vec<f64> {
    let d = unit(rng, centre.len());
    centre.iter().zip(d).map(|(c, x)| c + noise * x).collect()
}

fn to_vector(v: Vec<f64>) -> Result<Vector> {
    Vector::new(v.into_iter().map(|x| x as f32).collect())
}

fn paper(id: &str) -> PaperRecord {
    PaperRecord {
        paper_id: id.to_string(),
        title: format!("Paper {id}"),
        abstract_text: String::new(),
        domain_tag: None,
    }
}

fn edge(source: &str, target: &str, kind: RelationKind) -> EdgeRecord {
    EdgeRecord {
        source: source.to_string(),
        target: target.to_string(),
        kind,
        confidence: 1.0,
    }
}

/// Draws a planted corpus. Clusters are balanced and assigned at random.
pub fn planted_corpus(cfg: &PlantedConfig, seed: u64) -> Result<PlantedCorpus> {
    let nested = cfg.nested_methods && cfg.relevance == Relevance::Task;
    let method_total = if nested {
        cfg.task_clusters * cfg.method_clusters
    } else {
        cfg.method_clusters
    };
    let counts = [cfg.task_clusters, method_total, cfg.matmet_clusters];
    if cfg.papers < 2 || counts.contains(&0) || cfg.entities_per_cluster == 0 {
        return Err(Error::Config(
            "planted corpus needs >= 2 papers and nonempty clusters".into(),
        ));
    }
    if cfg.doc_dim == 0 || cfg.entity_dim == 0 {
        return Err(Error::Config(
            "planted corpus needs positive dimensions".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut graph = KnowledgeGraph::new();
    let mut entities = VectorStore::new(cfg.entity_dim);
    let mut docs = VectorStore::new(cfg.doc_dim);

    let facets = [
        (TopType::Task, "task", cfg.task_noise),
        (TopType::Method, "method", cfg.method_noise),
        (TopType::Material, "material", cfg.matmet_noise),
    ];
    // entity ids per facet and cluster
    let mut members: Vec<Vec<Vec<String>>> = Vec::new();
    for (f, &(top_type, name, noise)) in facets.iter().enumerate() {
        let mut per_cluster = Vec::new();
        for c in 0..counts[f] {
            let centre = unit(&mut rng, cfg.entity_dim);
            let mut ids = Vec::new();
            for j in 0..cfg.entities_per_cluster {
                let id = format!("{name}-{c:02}-{j}");
                graph.add_entity(EntityRecord {
                    entity_id: id.clone(),
                    surface: format!("{name} {c} variant {j}"),
                    domains: BTreeSet::new(),
                    top_type,
                    sub_type: None,
                })?;
                entities.insert(id.clone(), to_vector(around(&mut rng, &centre, noise))?)?;
                ids.push(id);
            }
            per_cluster.push(ids);
        }
        members.push(per_cluster);
    }
    let doc_centres: Vec<Vec<f64>> = (0..cfg.task_clusters)
        .map(|_| unit(&mut rng, cfg.doc_dim))
        .collect();

    let combos = match cfg.relevance {
        Relevance::Task => cfg.task_clusters,
        Relevance::AllFacets => cfg.task_clusters * cfg.method_clusters * cfg.matmet_clusters,
    };
    let mut slots: Vec<usize> = (0..cfg.papers).map(|i| i % combos).collect();
    slots.shuffle(&mut rng);

    let mut clusters = BTreeMap::new();
    for (i, slot) in slots.into_iter().enumerate() {
        let id = format!("p{i:03}");
        let assign = match cfg.relevance {
            Relevance::Task if nested => [
                slot,
                slot * cfg.method_clusters + rng.random_range(0..cfg.method_clusters),
                rng.random_range(0..cfg.matmet_clusters),
            ],
            Relevance::Task => [
                slot,
                rng.random_range(0..cfg.method_clusters),
                rng.random_range(0..cfg.matmet_clusters),
            ],
            Relevance::AllFacets => [
                slot / (cfg.method_clusters * cfg.matmet_clusters),
                (slot / cfg.matmet_clusters) % cfg.method_clusters,
                slot % cfg.matmet_clusters,
            ],
        };
        graph.add_paper(paper(&id))?;
        for (f, &c) in assign.iter().enumerate() {
            let e = members[f][c].choose(&mut rng).expect("nonempty cluster");
            graph.add_edge(edge(&id, e, RelationKind::Mentions))?;
        }
        let noise = gaussian(&mut rng, cfg.doc_dim);
        let scale = cfg.doc_noise / (cfg.doc_dim as f64).sqrt();
        let doc: Vec<f64> = doc_centres[assign[0]]
            .iter()
            .zip(noise)
            .map(|(c, n)| cfg.doc_signal * c + scale * n)
            .collect();
        docs.insert(id.clone(), to_vector(doc)?)?;
        clusters.insert(id, assign);
    }

    let relevant = |a: &[usize; 3], b: &[usize; 3]| match cfg.relevance {
        Relevance::Task => a[0] == b[0],
        Relevance::AllFacets => a == b,
    };
    let ids: Vec<String> = clusters.keys().cloned().collect();
    for q in ids.iter().take(cfg.queries) {
        for p in &ids {
            if p != q && relevant(&clusters[q], &clusters[p]) {
                graph.add_edge(edge(q, p, RelationKind::Cites))?;
            }
        }
    }
    let queries = judgments_from_graph(&graph, 1)?;
    Ok(PlantedCorpus {
        graph,
        docs,
        entities,
        queries,
        clusters,
    })
}

/// Settings for a corpus whose semantic edges carry extra bucket variety.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RelationPlan {
    pub papers: usize,
    pub task_clusters: usize,
    /// Method entities; each is mentioned by at least two papers.
    pub methods: usize,
    pub methods_per_paper: usize,
    pub related_edges: usize,
    pub dim: usize,
}

impl Default for RelationPlan {
    fn default() -> Self {
        RelationPlan {
            papers: 60,
            task_clusters: 6,
            methods: 30,
            methods_per_paper: 2,
            related_edges: 60,
            dim: 16,
        }
    }
}

/// A corpus in which every entity is mentioned by at least two papers and
/// semantic edges link method entities to one another and to tasks.
///
/// Every paper mentions one method entity from a fixed rotation, so the
/// entities spanned by any pool that leaves out a single paper do not depend
/// on the semantic edges; dropping edges can only shrink what a top-K list
/// reaches.
pub fn planted_relation_corpus(plan: &RelationPlan, seed: u64) -> Result<PlantedCorpus> {
    if plan.papers < 4 || plan.task_clusters == 0 || plan.methods < 2 || plan.methods_per_paper == 0
    {
        return Err(Error::Config("relation plan is too small".into()));
    }
    let cfg = PlantedConfig {
        papers: plan.papers,
        queries: plan.papers,
        task_clusters: plan.task_clusters,
        method_clusters: 1,
        matmet_clusters: 1,
        entities_per_cluster: 1,
        doc_dim: plan.dim,
        entity_dim: plan.dim,
        ..PlantedConfig::default()
    };
    let mut pc = planted_corpus(&cfg, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0f_ed9e5);
    let mut methods = Vec::new();
    for j in 0..plan.methods {
        let id = format!("mx-{j:03}");
        pc.graph.add_entity(EntityRecord {
            entity_id: id.clone(),
            surface: format!("method family {j}"),
            domains: BTreeSet::new(),
            top_type: TopType::Method,
            sub_type: None,
        })?;
        pc.entities
            .insert(id.clone(), to_vector(unit(&mut rng, plan.dim))?)?;
        methods.push(id);
    }
    let ids: Vec<String> = pc.clusters.keys().cloned().collect();
    for (i, p) in ids.iter().enumerate() {
        // two papers per method in the rotation keeps each one mentioned twice
        pc.graph.add_edge(edge(
            p,
            &methods[(i / 2) % plan.methods],
            RelationKind::Mentions,
        ))?;
        for m in methods.choose_multiple(&mut rng, plan.methods_per_paper.saturating_sub(1)) {
            pc.graph.add_edge(edge(p, m, RelationKind::Mentions))?;
        }
    }
    let mut added = 0;
    let mut attempts = 0;
    while added < plan.related_edges && attempts < plan.related_edges * 20 {
        attempts += 1;
        let pair: Vec<&String> = methods.choose_multiple(&mut rng, 2).collect();
        let (a, b) = if pair[0] < pair[1] {
            (pair[0], pair[1])
        } else {
            (pair[1], pair[0])
        };
        if pc
            .graph
            .edge_confidence(a, b, RelationKind::Related)
            .is_none()
        {
            pc.graph.add_edge(edge(a, b, RelationKind::Related))?;
            added += 1;
        }
    }
    Ok(pc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_balanced() {
        let cfg = PlantedConfig::default();
        let a = planted_corpus(&cfg, 3).unwrap();
        let b = planted_corpus(&cfg, 3).unwrap();
        assert_eq!(a.graph, b.graph);
        assert_eq!(a.docs, b.docs);
        assert_eq!(a.queries.len(), cfg.queries);
        let mut sizes = vec![0; cfg.task_clusters];
        for c in a.clusters.values() {
            sizes[c[0]] += 1;
        }
        assert!(sizes.iter().all(|&s| s == cfg.papers / cfg.task_clusters));
        for q in &a.queries {
            assert_eq!(q.relevant.len(), cfg.papers / cfg.task_clusters - 1);
        }
        a.graph.validate().unwrap();
        assert_eq!(a.corpus().unwrap().len(), cfg.papers);
    }

    #[test]
    fn all_facets_relevance() {
        let cfg = PlantedConfig {
            papers: 54,
            task_clusters: 3,
            method_clusters: 3,
            matmet_clusters: 2,
            relevance: Relevance::AllFacets,
            ..Default::default()
        };
        let pc = planted_corpus(&cfg, 1).unwrap();
        for q in &pc.queries {
            for r in &q.relevant {
                assert_eq!(pc.clusters[r], pc.clusters[&q.query_id]);
            }
        }
    }

    #[test]
    fn relation_corpus_mentions() {
        let plan = RelationPlan::default();
        let pc = planted_relation_corpus(&plan, 0).unwrap();
        assert_eq!(
            pc.graph.count_kind(RelationKind::Related),
            plan.related_edges
        );
        pc.graph.validate().unwrap();
        let mut mentioned: BTreeMap<String, usize> = BTreeMap::new();
        for e in pc
            .graph
            .edges()
            .filter(|e| e.kind == RelationKind::Mentions)
        {
            *mentioned.entry(e.target).or_default() += 1;
        }
        assert!(pc
            .graph
            .entities()
            .all(|e| mentioned.get(&e.entity_id).copied().unwrap_or(0) >= 2
                || !e.entity_id.starts_with("mx-")));
    }
}
