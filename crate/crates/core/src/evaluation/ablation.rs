//! Ablations: each mode rebuilds the corpus or graph with one component
//! removed and is scored on the candidate pools of the full system.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{config_hash, BucketScheme};
use super::{judgments_from_graph, EvalContext, EvalReport, PreparedEval, Query, RunSpec};
use crate::embedding::{compose_corpus, Corpus, VectorStore, ViewMask};
use crate::error::{Error, Result};
use crate::graph::{KnowledgeGraph, RelationFilter, RelationKind};
use crate::ranking::WeightProfile;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AblationMode {
    Full,
    /// Zero one or more pooled entity vectors.
    DropView(ViewMask),
    /// Zero the document vector, which is the citation-informed part.
    DropCitations,
    DropRelation(RelationKind),
    /// Keep a seeded fraction of all semantic edges.
    RetainFraction(f64),
}

impl fmt::Display for AblationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AblationMode::Full => f.write_str("full"),
            AblationMode::DropView(m) => {
                let parts: Vec<&str> = [(m.task, "t"), (m.method, "m"), (m.matmet, "d")]
                    .into_iter()
                    .filter(|(on, _)| *on)
                    .map(|(_, s)| s)
                    .collect();
                write!(f, "drop-view:{}", parts.join("+"))
            }
            AblationMode::DropCitations => f.write_str("drop-citations"),
            AblationMode::DropRelation(k) => write!(f, "drop-relation:{}", k.as_str()),
            AblationMode::RetainFraction(r) => write!(f, "retain-fraction:{r}"),
        }
    }
}

impl FromStr for AblationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let unknown = || Error::UnknownMode(s.to_string());
        if s == "full" {
            return Ok(AblationMode::Full);
        }
        if s == "drop-citations" {
            return Ok(AblationMode::DropCitations);
        }
        let (head, arg) = s.split_once(':').ok_or_else(unknown)?;
        match head {
            "drop-view" => {
                let mut m = ViewMask::default();
                for part in arg.split('+') {
                    match part {
                        "t" => m.task = true,
                        "m" => m.method = true,
                        "d" => m.matmet = true,
                        _ => return Err(unknown()),
                    }
                }
                Ok(AblationMode::DropView(m))
            }
            "drop-relation" => {
                let k = RelationKind::parse(arg)
                    .filter(|k| k.is_semantic())
                    .ok_or_else(unknown)?;
                Ok(AblationMode::DropRelation(k))
            }
            "retain-fraction" => {
                let r: f64 = arg.parse().map_err(|_| unknown())?;
                if !(0.0..=1.0).contains(&r) {
                    return Err(unknown());
                }
                Ok(AblationMode::RetainFraction(r))
            }
            _ => Err(unknown()),
        }
    }
}

impl Serialize for AblationMode {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for AblationMode {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Inputs shared by every ablation run.
pub struct AblationInput<'a> {
    pub graph: &'a KnowledgeGraph,
    pub docs: &'a VectorStore,
    pub entities: &'a VectorStore,
    /// Judgments; derived from citations when absent.
    pub queries: Option<Vec<Query>>,
    pub scheme: BucketScheme,
    pub profile: WeightProfile,
    pub spec: RunSpec,
    /// Seeds the edge sample of `retain-fraction`.
    pub seed: u64,
}

/// Graph and corpus a mode evaluates on.
pub fn apply_mode(
    mode: AblationMode,
    graph: &KnowledgeGraph,
    corpus: &Corpus,
    docs: &VectorStore,
    entities: &VectorStore,
    seed: u64,
) -> Result<(KnowledgeGraph, Corpus)> {
    Ok(match mode {
        AblationMode::Full => (graph.clone(), corpus.clone()),
        AblationMode::DropView(mask) => (graph.clone(), corpus.masked(mask)),
        AblationMode::DropCitations => (
            graph.clone(),
            corpus.masked(ViewMask {
                doc: true,
                ..Default::default()
            }),
        ),
        AblationMode::DropRelation(kind) => {
            let g = graph.without_kind(kind);
            let c = Corpus::new(compose_corpus(&g, docs, entities)?)?;
            (g, c)
        }
        AblationMode::RetainFraction(r) => {
            let g = graph.drop_relations(RelationFilter::AllSemantic, r, seed);
            let c = Corpus::new(compose_corpus(&g, docs, entities)?)?;
            (g, c)
        }
    })
}

/// Scores every mode on the full system's candidate pools and reports
/// deltas and paired tests against the full system.
pub fn ablation_report(input: &AblationInput<'_>, modes: &[AblationMode]) -> Result<EvalReport> {
    #[derive(Serialize)]
    struct HashKey<'a> {
        modes: &'a [AblationMode],
        scheme: BucketScheme,
        profile: &'a WeightProfile,
        spec: &'a RunSpec,
        seed: u64,
        queries: &'a [Query],
    }
    input.spec.validate()?;
    let queries = match &input.queries {
        Some(q) => q.clone(),
        None => judgments_from_graph(input.graph, 1)?,
    };
    let corpus = Corpus::new(compose_corpus(input.graph, input.docs, input.entities)?)?;
    let full_ctx = EvalContext::from_graph(input.graph, queries.clone(), input.scheme)?;
    let full_prep = PreparedEval::new(&full_ctx, &corpus)?;
    let pools = full_prep.pools(&input.profile.w, input.spec.pool_k)?;
    let full_ctx = EvalContext {
        candidate_pools: Some(pools.clone()),
        ..full_ctx
    };
    let full = PreparedEval::new(&full_ctx, &corpus)?.evaluate(&input.profile, &input.spec)?;

    let mut report = EvalReport::new(config_hash(&HashKey {
        modes,
        scheme: input.scheme,
        profile: &input.profile,
        spec: &input.spec,
        seed: input.seed,
        queries: &queries,
    })?);
    report.push_run("full", input.spec.mode, Some(input.seed), &full);
    report
        .notes
        .push("every mode ranks within the candidate pools of the full system".into());

    for &mode in modes {
        if mode == AblationMode::Full {
            continue;
        }
        let name = mode.to_string();
        let (g, c) = apply_mode(
            mode,
            input.graph,
            &corpus,
            input.docs,
            input.entities,
            input.seed,
        )?;
        let ctx = EvalContext {
            candidate_pools: Some(pools.clone()),
            ..EvalContext::from_graph(&g, queries.clone(), input.scheme)?
        };
        let run = PreparedEval::new(&ctx, &c)?.evaluate(&input.profile, &input.spec)?;
        report.push_run(&name, input.spec.mode, Some(input.seed), &run);
        report.fill_deltas(&name, "full");
        report.push_tests(&name, &run, "full", &full, Some(input.seed));
    }
    report.validate()?;
    Ok(report)
}
