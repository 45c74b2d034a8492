//! The fine-grained scholarly knowledge graph.
//!
//! Papers and typed knowledge entities are the two node families. Three edge
//! families connect them: citations (paper to paper), mentions (paper to
//! entity) and the four semantic relations between entities. The graph is
//! built by a single writer and then treated as an immutable snapshot;
//! operations that change it return a new graph.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Top-level entity category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TopType {
    #[serde(alias = "task", alias = "TASK")]
    Task,
    #[serde(alias = "method", alias = "METHOD")]
    Method,
    #[serde(alias = "material", alias = "MATERIAL")]
    Material,
    #[serde(alias = "metric", alias = "METRIC")]
    Metric,
}

impl TopType {
    pub const ALL: [TopType; 4] = [
        TopType::Task,
        TopType::Method,
        TopType::Material,
        TopType::Metric,
    ];

    /// Node category name used in the `data.nodes` array.
    pub fn category(self) -> &'static str {
        match self {
            TopType::Task => "task",
            TopType::Method => "method",
            TopType::Material => "material",
            TopType::Metric => "metric",
        }
    }
}

impl fmt::Display for TopType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.category())
    }
}

/// Sub-entity refinements of Task and Method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SubType {
    #[serde(alias = "object")]
    Object,
    #[serde(alias = "problem")]
    Problem,
    #[serde(alias = "process")]
    Process,
}

impl SubType {
    /// The top type this sub-entity refines.
    pub fn parent(self) -> TopType {
        match self {
            SubType::Object | SubType::Problem => TopType::Task,
            SubType::Process => TopType::Method,
        }
    }
}

/// Edge kinds across all three families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RelationKind {
    #[serde(rename = "cites")]
    Cites,
    #[serde(rename = "mentions")]
    Mentions,
    #[serde(rename = "achievedBy")]
    AchievedBy,
    #[serde(rename = "usedBy")]
    UsedBy,
    #[serde(rename = "evaluatedBy")]
    EvaluatedBy,
    #[serde(rename = "related")]
    Related,
}

impl RelationKind {
    pub const SEMANTIC: [RelationKind; 4] = [
        RelationKind::AchievedBy,
        RelationKind::UsedBy,
        RelationKind::EvaluatedBy,
        RelationKind::Related,
    ];

    pub fn is_semantic(self) -> bool {
        !matches!(self, RelationKind::Cites | RelationKind::Mentions)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RelationKind::Cites => "cites",
            RelationKind::Mentions => "mentions",
            RelationKind::AchievedBy => "achievedBy",
            RelationKind::UsedBy => "usedBy",
            RelationKind::EvaluatedBy => "evaluatedBy",
            RelationKind::Related => "related",
        }
    }

    pub fn parse(s: &str) -> Option<RelationKind> {
        [
            RelationKind::Cites,
            RelationKind::Mentions,
            RelationKind::AchievedBy,
            RelationKind::UsedBy,
            RelationKind::EvaluatedBy,
            RelationKind::Related,
        ]
        .into_iter()
        .find(|k| k.as_str() == s)
    }

    /// Whether a semantic relation may link `source` to `target`.
    pub fn admits(self, source: TopType, target: TopType) -> bool {
        use TopType::*;
        match self {
            RelationKind::AchievedBy => source == Task && target == Method,
            RelationKind::UsedBy => source == Material && target == Task,
            RelationKind::EvaluatedBy => source == Task && target == Metric,
            RelationKind::Related => source == target && matches!(source, Task | Method),
            RelationKind::Cites | RelationKind::Mentions => false,
        }
    }
}

impl fmt::Display for RelationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaperRecord {
    pub paper_id: String,
    pub title: String,
    #[serde(rename = "abstract", default)]
    pub abstract_text: String,
    #[serde(rename = "domain", default, skip_serializing_if = "Option::is_none")]
    pub domain_tag: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityRecord {
    pub entity_id: String,
    #[serde(rename = "name")]
    pub surface: String,
    #[serde(default)]
    pub domains: BTreeSet<String>,
    pub top_type: TopType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sub_type: Option<SubType>,
}

impl EntityRecord {
    fn check(&self) -> Result<()> {
        if let Some(sub) = self.sub_type {
            if sub.parent() != self.top_type {
                return Err(Error::Schema(format!(
                    "entity `{}`: sub_type {:?} is not allowed under {:?}",
                    self.entity_id, sub, self.top_type
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeKey {
    pub source: String,
    pub target: String,
    pub kind: RelationKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeRecord {
    pub source: String,
    pub target: String,
    pub kind: RelationKind,
    pub confidence: f64,
}

/// Which semantic edges [`KnowledgeGraph::drop_relations`] samples from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelationFilter {
    Kind(RelationKind),
    AllSemantic,
}

impl RelationFilter {
    fn matches(self, kind: RelationKind) -> bool {
        match self {
            RelationFilter::Kind(k) => k == kind,
            RelationFilter::AllSemantic => kind.is_semantic(),
        }
    }
}

/// Non-fatal findings collected while loading.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LoadWarning {
    SelfCitation(String),
    DuplicateEdge(EdgeKey),
}

#[derive(Debug, Clone, Default)]
pub struct LoadReport {
    pub papers: usize,
    pub entities: usize,
    pub edges: usize,
    pub warnings: Vec<LoadWarning>,
}

pub const DEFAULT_CATEGORIES: [&str; 5] = ["paper", "task", "method", "material", "metric"];

#[derive(Debug, Clone, PartialEq)]
pub struct KnowledgeGraph {
    papers: BTreeMap<String, PaperRecord>,
    entities: BTreeMap<String, EntityRecord>,
    edges: BTreeMap<EdgeKey, f64>,
    categories: Vec<String>,
}

impl Default for KnowledgeGraph {
    fn default() -> Self {
        Self::new()
    }
}

impl KnowledgeGraph {
    pub fn new() -> Self {
        KnowledgeGraph {
            papers: BTreeMap::new(),
            entities: BTreeMap::new(),
            edges: BTreeMap::new(),
            categories: DEFAULT_CATEGORIES.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn add_paper(&mut self, paper: PaperRecord) -> Result<()> {
        if paper.title.trim().is_empty() {
            return Err(Error::Schema(format!(
                "paper `{}` has an empty title",
                paper.paper_id
            )));
        }
        if self.entities.contains_key(&paper.paper_id) || self.papers.contains_key(&paper.paper_id)
        {
            return Err(Error::Schema(format!(
                "duplicate node id `{}`",
                paper.paper_id
            )));
        }
        self.papers.insert(paper.paper_id.clone(), paper);
        Ok(())
    }

    pub fn add_entity(&mut self, entity: EntityRecord) -> Result<()> {
        entity.check()?;
        if self.entities.contains_key(&entity.entity_id)
            || self.papers.contains_key(&entity.entity_id)
        {
            return Err(Error::Schema(format!(
                "duplicate node id `{}`",
                entity.entity_id
            )));
        }
        self.entities.insert(entity.entity_id.clone(), entity);
        Ok(())
    }

    /// Adds an edge after checking endpoints and type discipline.
    ///
    /// Returns `true` when an edge with the same `(source, target, kind)`
    /// already existed; the stored confidence is then the maximum of both.
    pub fn add_edge(&mut self, edge: EdgeRecord) -> Result<bool> {
        self.check_edge(&edge)?;
        let key = EdgeKey {
            source: edge.source,
            target: edge.target,
            kind: edge.kind,
        };
        match self.edges.get_mut(&key) {
            Some(conf) => {
                *conf = conf.max(edge.confidence);
                Ok(true)
            }
            None => {
                self.edges.insert(key, edge.confidence);
                Ok(false)
            }
        }
    }

    fn check_edge(&self, edge: &EdgeRecord) -> Result<()> {
        let dangling = |detail: &str| Error::DanglingEdge {
            source_id: edge.source.clone(),
            target: edge.target.clone(),
            kind: edge.kind.to_string(),
            detail: detail.to_string(),
        };
        let exists = |id: &str| self.papers.contains_key(id) || self.entities.contains_key(id);
        if !exists(&edge.source) {
            return Err(dangling("source does not exist"));
        }
        if !exists(&edge.target) {
            return Err(dangling("target does not exist"));
        }
        if !(0.0..=1.0).contains(&edge.confidence) {
            return Err(Error::Schema(format!(
                "edge {} -[{}]-> {}: confidence {} outside [0, 1]",
                edge.source, edge.kind, edge.target, edge.confidence
            )));
        }
        let wrong_family = |expected: &str| {
            Error::Schema(format!(
                "edge {} -[{}]-> {}: {expected}",
                edge.source, edge.kind, edge.target
            ))
        };
        match edge.kind {
            RelationKind::Cites => {
                if !self.papers.contains_key(&edge.source)
                    || !self.papers.contains_key(&edge.target)
                {
                    return Err(wrong_family("cites must link paper to paper"));
                }
            }
            RelationKind::Mentions => {
                if !self.papers.contains_key(&edge.source)
                    || !self.entities.contains_key(&edge.target)
                {
                    return Err(wrong_family("mentions must link paper to entity"));
                }
            }
            kind => {
                let (Some(src), Some(tgt)) = (
                    self.entities.get(&edge.source),
                    self.entities.get(&edge.target),
                ) else {
                    return Err(wrong_family(
                        "semantic relations must link entity to entity",
                    ));
                };
                if !kind.admits(src.top_type, tgt.top_type) {
                    return Err(wrong_family(&format!(
                        "type pair ({}, {}) is not admissible",
                        src.top_type, tgt.top_type
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn paper(&self, id: &str) -> Option<&PaperRecord> {
        self.papers.get(id)
    }

    pub fn entity(&self, id: &str) -> Option<&EntityRecord> {
        self.entities.get(id)
    }

    pub fn papers(&self) -> impl Iterator<Item = &PaperRecord> {
        self.papers.values()
    }

    pub fn entities(&self) -> impl Iterator<Item = &EntityRecord> {
        self.entities.values()
    }

    /// All edges in `(source, target, kind)` order.
    pub fn edges(&self) -> impl Iterator<Item = EdgeRecord> + '_ {
        self.edges.iter().map(|(k, &confidence)| EdgeRecord {
            source: k.source.clone(),
            target: k.target.clone(),
            kind: k.kind,
            confidence,
        })
    }

    pub fn edge_confidence(&self, source: &str, target: &str, kind: RelationKind) -> Option<f64> {
        self.edges
            .get(&EdgeKey {
                source: source.to_string(),
                target: target.to_string(),
                kind,
            })
            .copied()
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub fn paper_count(&self) -> usize {
        self.papers.len()
    }

    pub fn entity_count(&self) -> usize {
        self.entities.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn count_kind(&self, kind: RelationKind) -> usize {
        self.edges.keys().filter(|k| k.kind == kind).count()
    }

    /// Entities a paper mentions, optionally restricted to one top type,
    /// in entity-id order.
    pub fn entities_of(
        &self,
        paper_id: &str,
        top_type: Option<TopType>,
    ) -> Result<Vec<&EntityRecord>> {
        if !self.papers.contains_key(paper_id) {
            return Err(Error::UnknownPaper(paper_id.to_string()));
        }
        Ok(self
            .out_edges(paper_id, RelationKind::Mentions)
            .filter_map(|target| self.entities.get(target))
            .filter(|e| top_type.map_or(true, |t| e.top_type == t))
            .collect())
    }

    /// Papers cited by `paper_id`.
    pub fn references_of(&self, paper_id: &str) -> Result<BTreeSet<String>> {
        if !self.papers.contains_key(paper_id) {
            return Err(Error::UnknownPaper(paper_id.to_string()));
        }
        Ok(self
            .out_edges(paper_id, RelationKind::Cites)
            .map(str::to_string)
            .collect())
    }

    fn out_edges<'a>(
        &'a self,
        source: &'a str,
        kind: RelationKind,
    ) -> impl Iterator<Item = &'a str> {
        let start = EdgeKey {
            source: source.to_string(),
            target: String::new(),
            kind: RelationKind::Cites,
        };
        self.edges
            .range(start..)
            .take_while(move |(k, _)| k.source == source)
            .filter(move |(k, _)| k.kind == kind)
            .map(|(k, _)| k.target.as_str())
    }

    /// Semantic edges touching `entity_id` in either direction.
    pub fn semantic_neighbors(&self, entity_id: &str) -> Vec<(&str, RelationKind)> {
        self.edges
            .keys()
            .filter(|k| k.kind.is_semantic())
            .filter_map(|k| {
                if k.source == entity_id {
                    Some((k.target.as_str(), k.kind))
                } else if k.target == entity_id {
                    Some((k.source.as_str(), k.kind))
                } else {
                    None
                }
            })
            .collect()
    }

    /// A citation is cross-domain when both papers carry a domain tag and
    /// the tags differ.
    pub fn is_cross_domain(&self, citing: &str, cited: &str) -> bool {
        match (
            self.papers.get(citing).and_then(|p| p.domain_tag.as_ref()),
            self.papers.get(cited).and_then(|p| p.domain_tag.as_ref()),
        ) {
            (Some(a), Some(b)) => a != b,
            _ => false,
        }
    }

    /// Copy of the graph keeping `ceil(keep_fraction * n)` of the `n` edges
    /// selected by `filter`, sampled uniformly under `seed`.
    ///
    /// The sample is a prefix of one seeded permutation, so for a fixed seed
    /// a smaller fraction always keeps a subset of a larger one.
    pub fn drop_relations(
        &self,
        filter: RelationFilter,
        keep_fraction: f64,
        seed: u64,
    ) -> KnowledgeGraph {
        let fraction = if keep_fraction.is_nan() {
            1.0
        } else {
            keep_fraction.clamp(0.0, 1.0)
        };
        let mut selected: Vec<&EdgeKey> = self
            .edges
            .keys()
            .filter(|k| k.kind.is_semantic() && filter.matches(k.kind))
            .collect();
        let n = selected.len();
        let keep = ((fraction * n as f64) - 1e-9).ceil().max(0.0) as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        selected.shuffle(&mut rng);
        let dropped: BTreeSet<&EdgeKey> = selected[keep.min(n)..].iter().copied().collect();

        let mut out = self.clone();
        out.edges.retain(|k, _| !dropped.contains(k));
        out
    }

    /// Copy of the graph without any edge of `kind`.
    pub fn without_kind(&self, kind: RelationKind) -> KnowledgeGraph {
        let mut out = self.clone();
        out.edges.retain(|k, _| k.kind != kind);
        out
    }

    /// Re-checks every invariant; used after deserialization.
    pub fn validate(&self) -> Result<()> {
        for e in self.entities.values() {
            e.check()?;
        }
        for edge in self.edges() {
            self.check_edge(&edge)?;
        }
        Ok(())
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct GraphFile {
    #[serde(default)]
    papers: Vec<PaperRecord>,
    #[serde(default)]
    entities: Vec<EntityRecord>,
    #[serde(default)]
    data: DataSection,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct DataSection {
    #[serde(default)]
    nodes: Vec<NodeEntry>,
    #[serde(default)]
    links: Vec<LinkEntry>,
    #[serde(default)]
    categories: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct NodeEntry {
    id: String,
    category: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct LinkEntry {
    source: String,
    target: String,
    relation: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    confidence: Option<f64>,
}

/// Parses the corpus JSON format.
pub fn graph_from_json(text: &str) -> Result<(KnowledgeGraph, LoadReport)> {
    let file: GraphFile = serde_json::from_str(text).map_err(Error::from_json)?;
    let mut graph = KnowledgeGraph::new();
    if !file.data.categories.is_empty() {
        graph.categories = file.data.categories.clone();
    }
    for p in file.papers {
        graph.add_paper(p)?;
    }
    for e in file.entities {
        graph.add_entity(e)?;
    }
    for node in &file.data.nodes {
        let expected = if graph.papers.contains_key(&node.id) {
            "paper"
        } else if let Some(e) = graph.entities.get(&node.id) {
            e.top_type.category()
        } else {
            return Err(Error::Schema(format!(
                "node `{}` has no paper or entity record",
                node.id
            )));
        };
        if !node.category.eq_ignore_ascii_case(expected) {
            return Err(Error::Schema(format!(
                "node `{}` has category `{}`, record says `{}`",
                node.id, node.category, expected
            )));
        }
    }

    let mut warnings = Vec::new();
    for link in file.data.links {
        let kind = RelationKind::parse(&link.relation).ok_or_else(|| {
            Error::Schema(format!(
                "edge {} -> {}: unknown relation `{}`",
                link.source, link.target, link.relation
            ))
        })?;
        if kind == RelationKind::Cites && link.source == link.target {
            warnings.push(LoadWarning::SelfCitation(link.source.clone()));
        }
        let edge = EdgeRecord {
            source: link.source,
            target: link.target,
            kind,
            confidence: link.confidence.unwrap_or(1.0),
        };
        let key = EdgeKey {
            source: edge.source.clone(),
            target: edge.target.clone(),
            kind,
        };
        if graph.add_edge(edge)? {
            warnings.push(LoadWarning::DuplicateEdge(key));
        }
    }
    for w in &warnings {
        log::warn!("{w:?}");
    }
    let report = LoadReport {
        papers: graph.paper_count(),
        entities: graph.entity_count(),
        edges: graph.edge_count(),
        warnings,
    };
    Ok((graph, report))
}

/// Serializes to the corpus JSON format with a canonical ordering.
pub fn graph_to_json(graph: &KnowledgeGraph) -> Result<String> {
    let mut nodes: Vec<NodeEntry> = graph
        .papers
        .keys()
        .map(|id| NodeEntry {
            id: id.clone(),
            category: "paper".into(),
        })
        .collect();
    nodes.extend(graph.entities.values().map(|e| NodeEntry {
        id: e.entity_id.clone(),
        category: e.top_type.category().into(),
    }));
    let file = GraphFile {
        papers: graph.papers.values().cloned().collect(),
        entities: graph.entities.values().cloned().collect(),
        data: DataSection {
            nodes,
            links: graph
                .edges()
                .map(|e| LinkEntry {
                    source: e.source,
                    target: e.target,
                    relation: e.kind.as_str().to_string(),
                    confidence: Some(e.confidence),
                })
                .collect(),
            categories: graph.categories.clone(),
        },
    };
    serde_json::to_string_pretty(&file).map_err(|e| Error::Serialization(e.to_string()))
}

pub fn load_graph(path: impl AsRef<Path>) -> Result<(KnowledgeGraph, LoadReport)> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    graph_from_json(&text)
}

pub fn save_graph(graph: &KnowledgeGraph, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text = graph_to_json(graph)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
