//! Semantic buckets used by Coverage.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::metrics::BucketMap;
use crate::error::{Error, Result};
use crate::graph::{KnowledgeGraph, TopType};

/// How a paper is mapped to buckets.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BucketScheme {
    /// One bucket per distinct set of normalized Task surfaces.
    #[default]
    TaskSurface,
    /// Every mentioned entity is its own bucket.
    EntityFacets,
    /// Mentioned entities plus their direct semantic neighbours.
    RelationFacets,
}

impl fmt::Display for BucketScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BucketScheme::TaskSurface => "task-surface",
            BucketScheme::EntityFacets => "entity-facets",
            BucketScheme::RelationFacets => "relation-facets",
        })
    }
}

impl FromStr for BucketScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "task-surface" => Ok(BucketScheme::TaskSurface),
            "entity-facets" => Ok(BucketScheme::EntityFacets),
            "relation-facets" => Ok(BucketScheme::RelationFacets),
            other => Err(Error::Config(format!("unknown bucket scheme `{other}`"))),
        }
    }
}

/// Lowercased with runs of whitespace collapsed to one space.
pub fn normalize_surface(s: &str) -> String {
    s.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

fn singleton(paper_id: &str) -> BTreeSet<String> {
    BTreeSet::from([format!("paper:{paper_id}")])
}

fn task_bucket(graph: &KnowledgeGraph, paper_id: &str) -> Result<BTreeSet<String>> {
    let surfaces: BTreeSet<String> = graph
        .entities_of(paper_id, Some(TopType::Task))?
        .iter()
        .map(|e| normalize_surface(&e.surface))
        .collect();
    if surfaces.is_empty() {
        return Ok(singleton(paper_id));
    }
    let mut h = Sha256::new();
    for s in &surfaces {
        h.update(s.as_bytes());
        h.update([0u8]);
    }
    let digest = h.finalize();
    Ok(BTreeSet::from([format!(
        "task:{}",
        hex::encode(&digest[..8])
    )]))
}

/// Buckets for every paper of `graph`.
pub fn bucket_map(graph: &KnowledgeGraph, scheme: BucketScheme) -> Result<BucketMap> {
    let mut neighbors: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    if scheme == BucketScheme::RelationFacets {
        for e in graph.edges().filter(|e| e.kind.is_semantic()) {
            // the edge records are owned, so look the ids up again to borrow from the graph
            let (Some(s), Some(t)) = (graph.entity(&e.source), graph.entity(&e.target)) else {
                continue;
            };
            neighbors
                .entry(&s.entity_id)
                .or_default()
                .insert(&t.entity_id);
            neighbors
                .entry(&t.entity_id)
                .or_default()
                .insert(&s.entity_id);
        }
    }
    let mut out = BucketMap::new();
    for p in graph.papers() {
        let id = p.paper_id.as_str();
        let buckets = match scheme {
            BucketScheme::TaskSurface => task_bucket(graph, id)?,
            BucketScheme::EntityFacets | BucketScheme::RelationFacets => {
                let mut b = BTreeSet::new();
                for e in graph.entities_of(id, None)? {
                    b.insert(format!("entity:{}", e.entity_id));
                    if let Some(ns) = neighbors.get(e.entity_id.as_str()) {
                        b.extend(ns.iter().map(|n| format!("entity:{n}")));
                    }
                }
                if b.is_empty() {
                    singleton(id)
                } else {
                    b
                }
            }
        };
        out.insert(p.paper_id.clone(), buckets);
    }
    Ok(out)
}
