//! Paper and entity vectors, entity pooling and multi-view composition.
//!
//! Every paper carries a document vector and three pooled entity vectors
//! (task, method, material/metric). Six composed views concatenate those
//! pieces with the document vector; ranking compares papers view by view.

mod store;
mod stub;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{KnowledgeGraph, TopType};

pub use store::{decode_vectors, encode_vectors, load_vectors, save_vectors, VectorStore, META_ID};
pub use stub::stub_encode;

pub const DEFAULT_DOC_DIM: usize = 768;
pub const DEFAULT_ENTITY_DIM: usize = 1536;

/// A dense single-precision vector with finite components.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector(Vec<f32>);

impl Vector {
    pub fn new(values: Vec<f32>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: 1,
                actual: 0,
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("{} components", values.len())));
        }
        Ok(Vector(values))
    }

    pub fn zeros(dim: usize) -> Self {
        Vector(vec![0.0; dim.max(1)])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f32> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0
            .iter()
            .map(|&v| (v as f64) * (v as f64))
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0.0)
    }

    /// Same vector multiplied by `factor`.
    pub fn scaled(&self, factor: f32) -> Vector {
        Vector(self.0.iter().map(|v| v * factor).collect())
    }

    fn concat(parts: &[&Vector]) -> Vector {
        let mut out = Vec::with_capacity(parts.iter().map(|p| p.dim()).sum());
        for p in parts {
            out.extend_from_slice(&p.0);
        }
        Vector(out)
    }
}

impl TryFrom<Vec<f32>> for Vector {
    type Error = Error;

    fn try_from(values: Vec<f32>) -> Result<Self> {
        Vector::new(values)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EncoderKind {
    FileStore,
    StubHash,
}

/// Where vectors come from and their fixed dimensions for a run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderSource {
    pub kind: EncoderKind,
    pub doc_dim: usize,
    pub entity_dim: usize,
}

impl Default for EncoderSource {
    fn default() -> Self {
        EncoderSource {
            kind: EncoderKind::StubHash,
            doc_dim: DEFAULT_DOC_DIM,
            entity_dim: DEFAULT_ENTITY_DIM,
        }
    }
}

/// Elementwise sum; an empty input yields the zero vector of `dim`.
///
/// Each component is summed in sorted order, so the result does not depend
/// on the order of `vecs`.
pub fn sum_pool(vecs: &[&Vector], dim: usize) -> Result<Vector> {
    if let Some(bad) = vecs.iter().find(|v| v.dim() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: bad.dim(),
        });
    }
    if vecs.is_empty() {
        return Ok(Vector::zeros(dim));
    }
    let mut column = Vec::with_capacity(vecs.len());
    let out = (0..dim)
        .map(|i| {
            column.clear();
            column.extend(vecs.iter().map(|v| v.0[i]));
            column.sort_by(f32::total_cmp);
            column.iter().map(|&x| x as f64).sum::<f64>() as f32
        })
        .collect();
    Vector::new(out)
}

/// The four views combined by the coarse score, and the two pair views used
/// by refinement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum View {
    /// `[c_t, c_m, c_d, s]`
    General,
    /// `[c_t, s]`
    Task,
    /// `[c_m, s]`
    Method,
    /// `[c_d, s]`
    MatMet,
    /// `[c_t, c_m, s]`
    TaskMethod,
    /// `[c_t, c_d, s]`
    TaskMatMet,
    /// `[c_t, c_m, c_d]`, the entity-only concatenation used for diversity.
    Entities,
}

impl View {
    /// Order of the coarse weights `w = (g, t, m, d)`.
    pub const COARSE: [View; 4] = [View::General, View::Task, View::Method, View::MatMet];
}

/// Entity vectors of one paper grouped by pooled view.
#[derive(Debug, Default, Clone)]
pub struct EntityGroups<'a> {
    pub task: Vec<&'a Vector>,
    pub method: Vec<&'a Vector>,
    /// Material and Metric entities pool together.
    pub matmet: Vec<&'a Vector>,
}

impl<'a> EntityGroups<'a> {
    pub fn push(&mut self, top_type: TopType, v: &'a Vector) {
        match top_type {
            TopType::Task => self.task.push(v),
            TopType::Method => self.method.push(v),
            TopType::Material | TopType::Metric => self.matmet.push(v),
        }
    }
}

/// Which pooled pieces an ablation zeroes out.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViewMask {
    pub task: bool,
    pub method: bool,
    pub matmet: bool,
    pub doc: bool,
}

impl ViewMask {
    pub fn is_empty(&self) -> bool {
        !(self.task || self.method || self.matmet || self.doc)
    }
}

/// All vectors of one paper.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorSet {
    pub paper_id: String,
    pub doc: Vector,
    pub task: Vector,
    pub method: Vector,
    pub matmet: Vector,
    general_view: Vector,
    task_view: Vector,
    method_view: Vector,
    matmet_view: Vector,
    task_method_view: Vector,
    task_matmet_view: Vector,
    entities_view: Vector,
}

impl VectorSet {
    /// Builds every composed view from already pooled pieces.
    pub fn from_parts(
        paper_id: impl Into<String>,
        doc: Vector,
        task: Vector,
        method: Vector,
        matmet: Vector,
    ) -> Result<Self> {
        let entity_dim = task.dim();
        for v in [&method, &matmet] {
            if v.dim() != entity_dim {
                return Err(Error::DimensionMismatch {
                    expected: entity_dim,
                    actual: v.dim(),
                });
            }
        }
        Ok(VectorSet {
            paper_id: paper_id.into(),
            general_view: Vector::concat(&[&task, &method, &matmet, &doc]),
            task_view: Vector::concat(&[&task, &doc]),
            method_view: Vector::concat(&[&method, &doc]),
            matmet_view: Vector::concat(&[&matmet, &doc]),
            task_method_view: Vector::concat(&[&task, &method, &doc]),
            task_matmet_view: Vector::concat(&[&task, &matmet, &doc]),
            entities_view: Vector::concat(&[&task, &method, &matmet]),
            doc,
            task,
            method,
            matmet,
        })
    }

    pub fn view(&self, view: View) -> &Vector {
        match view {
            View::General => &self.general_view,
            View::Task => &self.task_view,
            View::Method => &self.method_view,
            View::MatMet => &self.matmet_view,
            View::TaskMethod => &self.task_method_view,
            View::TaskMatMet => &self.task_matmet_view,
            View::Entities => &self.entities_view,
        }
    }

    pub fn doc_dim(&self) -> usize {
        self.doc.dim()
    }

    pub fn entity_dim(&self) -> usize {
        self.task.dim()
    }

    /// Recomposes with the masked pieces replaced by zeros.
    pub fn masked(&self, mask: ViewMask) -> VectorSet {
        if mask.is_empty() {
            return self.clone();
        }
        let pick = |v: &Vector, off: bool| {
            if off {
                Vector::zeros(v.dim())
            } else {
                v.clone()
            }
        };
        VectorSet::from_parts(
            self.paper_id.clone(),
            pick(&self.doc, mask.doc),
            pick(&self.task, mask.task),
            pick(&self.method, mask.method),
            pick(&self.matmet, mask.matmet),
        )
        .expect("dimensions unchanged")
    }

    /// Every vector multiplied by one factor.
    pub fn scaled(&self, factor: f32) -> VectorSet {
        VectorSet::from_parts(
            self.paper_id.clone(),
            self.doc.scaled(factor),
            self.task.scaled(factor),
            self.method.scaled(factor),
            self.matmet.scaled(factor),
        )
        .expect("dimensions unchanged")
    }
}

/// Vector sets of a whole corpus with lookup by paper id.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    sets: Vec<VectorSet>,
    index: BTreeMap<String, usize>,
}

impl Corpus {
    pub fn new(sets: Vec<VectorSet>) -> Result<Self> {
        let mut index = BTreeMap::new();
        for (i, s) in sets.iter().enumerate() {
            if index.insert(s.paper_id.clone(), i).is_some() {
                return Err(Error::Schema(format!(
                    "duplicate paper `{}` in corpus",
                    s.paper_id
                )));
            }
            if s.doc_dim() != sets[0].doc_dim() || s.entity_dim() != sets[0].entity_dim() {
                return Err(Error::DimensionMismatch {
                    expected: sets[0].view(View::General).dim(),
                    actual: s.view(View::General).dim(),
                });
            }
        }
        Ok(Corpus { sets, index })
    }

    pub fn get(&self, paper_id: &str) -> Option<&VectorSet> {
        self.index.get(paper_id).map(|&i| &self.sets[i])
    }

    pub fn sets(&self) -> &[VectorSet] {
        &self.sets
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.sets.iter().map(|s| s.paper_id.as_str())
    }

    pub fn masked(&self, mask: ViewMask) -> Corpus {
        Corpus {
            sets: self.sets.iter().map(|s| s.masked(mask)).collect(),
            index: self.index.clone(),
        }
    }

    /// The sets for `ids`, in the order given; unknown ids are an error.
    pub fn select<'a, I>(&self, ids: I) -> Result<Vec<VectorSet>>
    where
        I: IntoIterator<Item = &'a String>,
    {
        ids.into_iter()
            .map(|id| {
                self.get(id)
                    .cloned()
                    .ok_or_else(|| Error::UnknownPaper(id.clone()))
            })
            .collect()
    }
}

/// Pools `entities` by type and composes the views of one paper.
pub fn compose(
    paper_id: &str,
    doc: &Vector,
    entities: &EntityGroups<'_>,
    doc_dim: usize,
    entity_dim: usize,
) -> Result<VectorSet> {
    if doc.dim() != doc_dim {
        return Err(Error::DimensionMismatch {
            expected: doc_dim,
            actual: doc.dim(),
        });
    }
    VectorSet::from_parts(
        paper_id,
        doc.clone(),
        sum_pool(&entities.task, entity_dim)?,
        sum_pool(&entities.method, entity_dim)?,
        sum_pool(&entities.matmet, entity_dim)?,
    )
}

/// Composes a vector set for every paper in the graph, in paper-id order.
pub fn compose_corpus(
    graph: &KnowledgeGraph,
    docs: &VectorStore,
    entities: &VectorStore,
) -> Result<Vec<VectorSet>> {
    let doc_dim = docs.dim;
    let entity_dim = entities.dim;
    graph
        .papers()
        .map(|p| {
            let doc = docs.get(&p.paper_id).ok_or_else(|| {
                Error::VectorStore(format!("no document vector for paper `{}`", p.paper_id))
            })?;
            let mut groups = EntityGroups::default();
            for e in graph.entities_of(&p.paper_id, None)? {
                let v = entities.get(&e.entity_id).ok_or_else(|| {
                    Error::VectorStore(format!("no entity vector for `{}`", e.entity_id))
                })?;
                groups.push(e.top_type, v);
            }
            compose(&p.paper_id, doc, &groups, doc_dim, entity_dim)
        })
        .collect()
}

/// Stub-encodes every paper (title and abstract) and every entity surface.
pub fn stub_encode_graph(
    graph: &KnowledgeGraph,
    source: &EncoderSource,
    seed: u64,
) -> (VectorStore, VectorStore) {
    let docs: BTreeMap<String, Vector> = graph
        .papers()
        .map(|p| {
            let text = format!("{} {}", p.title, p.abstract_text);
            (p.paper_id.clone(), stub_encode(&text, source.doc_dim, seed))
        })
        .collect();
    let ents: BTreeMap<String, Vector> = graph
        .entities()
        .map(|e| {
            (
                e.entity_id.clone(),
                stub_encode(&e.surface, source.entity_dim, seed),
            )
        })
        .collect();
    (
        VectorStore {
            dim: source.doc_dim,
            vectors: docs,
        },
        VectorStore {
            dim: source.entity_dim,
            vectors: ents,
        },
    )
}
