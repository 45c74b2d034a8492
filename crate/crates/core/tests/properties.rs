mod common;

use std::collections::BTreeSet;

use facetrec::embedding::{compose, sum_pool, EntityGroups, Vector, VectorSet, View};
use facetrec::evaluation::metrics::{ap_at_n, map_at_k, ndcg_at_k};
use facetrec::graph::{
    graph_from_json, graph_to_json, EdgeRecord, EntityRecord, KnowledgeGraph, PaperRecord,
    RelationFilter, RelationKind, SubType, TopType,
};
use facetrec::learning::{coordinate_ascent, simplex_project};
use facetrec::ranking::{recommend, RankMode, Simplex4, WeightProfile};
use facetrec::relation::{
    induce_relations, read_jsonl, AnnotatedSentence, ParsedSentence, RuleSet,
};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOP: [TopType; 4] = [
    TopType::Task,
    TopType::Method,
    TopType::Material,
    TopType::Metric,
];

fn random_graph(seed: u64, papers: usize, entities: usize, edges: usize) -> KnowledgeGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = KnowledgeGraph::new();
    let surfaces = ["graph", "réseau", "模型", "naïve bayes", "data set", "f1"];
    for i in 0..papers {
        g.add_paper(PaperRecord {
            paper_id: format!("p{i}"),
            title: format!("{} {i}", surfaces[rng.random_range(0..surfaces.len())]),
            abstract_text: if rng.random_bool(0.5) {
                "abstract ✓".into()
            } else {
                String::new()
            },
            domain_tag: rng
                .random_bool(0.5)
                .then(|| ["cs", "bio"][rng.random_range(0..2)].to_string()),
        })
        .unwrap();
    }
    for i in 0..entities {
        let top = TOP[rng.random_range(0..4)];
        let sub = match top {
            TopType::Task if rng.random_bool(0.3) => {
                Some([SubType::Object, SubType::Problem][rng.random_range(0..2)])
            }
            TopType::Method if rng.random_bool(0.3) => Some(SubType::Process),
            _ => None,
        };
        g.add_entity(EntityRecord {
            entity_id: format!("e{i}"),
            surface: surfaces[rng.random_range(0..surfaces.len())].to_string(),
            domains: BTreeSet::new(),
            top_type: top,
            sub_type: sub,
        })
        .unwrap();
    }
    let ents: Vec<(String, TopType)> = g
        .entities()
        .map(|e| (e.entity_id.clone(), e.top_type))
        .collect();
    for _ in 0..edges {
        let confidence = (rng.random_range(1..=100) as f64) / 100.0;
        let edge = match rng.random_range(0..3) {
            0 if papers > 0 => EdgeRecord {
                source: format!("p{}", rng.random_range(0..papers)),
                target: format!("p{}", rng.random_range(0..papers)),
                kind: RelationKind::Cites,
                confidence,
            },
            1 if papers > 0 && !ents.is_empty() => EdgeRecord {
                source: format!("p{}", rng.random_range(0..papers)),
                target: ents[rng.random_range(0..ents.len())].0.clone(),
                kind: RelationKind::Mentions,
                confidence,
            },
            _ if ents.len() >= 2 => {
                let (a, ta) = &ents[rng.random_range(0..ents.len())];
                let (b, tb) = &ents[rng.random_range(0..ents.len())];
                let Some(kind) = RelationKind::SEMANTIC
                    .into_iter()
                    .find(|k| k.admits(*ta, *tb))
                else {
                    continue;
                };
                if a == b {
                    continue;
                }
                EdgeRecord {
                    source: a.clone(),
                    target: b.clone(),
                    kind,
                    confidence,
                }
            }
            _ => continue,
        };
        g.add_edge(edge).unwrap();
    }
    g
}

fn edge_keys(g: &KnowledgeGraph) -> BTreeSet<(String, String, RelationKind)> {
    g.edges().map(|e| (e.source, e.target, e.kind)).collect()
}

fn toy_sentences() -> Vec<ParsedSentence> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/toy_sentences.jsonl");
    read_jsonl::<AnnotatedSentence>(path)
        .unwrap()
        .into_iter()
        .map(|a| a.sentence)
        .collect()
}

fn toy_graph() -> KnowledgeGraph {
    facetrec::graph::load_graph(concat!(env!("CARGO_MANIFEST_DIR"), "/data/toy_corpus.json"))
        .unwrap()
        .0
}

fn vector(values: Vec<f32>) -> Vector {
    Vector::new(values).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn graph_round_trip(seed in any::<u64>(), papers in 0usize..20, entities in 0usize..20, edges in 0usize..80) {
        let g = random_graph(seed, papers, entities, edges);
        g.validate().unwrap();
        let text = graph_to_json(&g).unwrap();
        let (back, report) = graph_from_json(&text).unwrap();
        prop_assert_eq!(&back, &g);
        prop_assert_eq!(report.edges, g.edge_count());
        prop_assert_eq!(graph_to_json(&back).unwrap(), text);
    }

    #[test]
    fn semantic_edges_respect_type_table(seed in any::<u64>()) {
        let g = random_graph(seed, 5, 15, 60);
        for e in g.edges().filter(|e| e.kind.is_semantic()) {
            let s = g.entity(&e.source).unwrap().top_type;
            let t = g.entity(&e.target).unwrap().top_type;
            prop_assert!(e.kind.admits(s, t));
        }
    }

    #[test]
    fn drop_relations_is_monotone(seed in any::<u64>(), graph_seed in any::<u64>(), a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
        let g = random_graph(graph_seed, 6, 16, 80);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let filter = RelationFilter::AllSemantic;
        let small = edge_keys(&g.drop_relations(filter, lo, seed));
        let large = edge_keys(&g.drop_relations(filter, hi, seed));
        prop_assert!(small.is_subset(&large));
        prop_assert!(large.is_subset(&edge_keys(&g)));
        let kept = g.drop_relations(RelationFilter::Kind(RelationKind::Related), lo, seed);
        prop_assert_eq!(kept.count_kind(RelationKind::Cites), g.count_kind(RelationKind::Cites));
    }

    #[test]
    fn induction_is_sound_deterministic_and_monotone(seed in any::<u64>(), cut in 0usize..=20) {
        let g = toy_graph();
        let mut sentences = toy_sentences();
        sentences.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let rules = RuleSet::default();
        let (fewer, _) = induce_relations(&g, &sentences[..cut], &rules).unwrap();
        let (all, _) = induce_relations(&g, &sentences, &rules).unwrap();
        let (again, _) = induce_relations(&g, &sentences, &rules).unwrap();
        prop_assert_eq!(&all, &again);
        prop_assert!(edge_keys(&g).is_subset(&edge_keys(&fewer)));
        prop_assert!(edge_keys(&fewer).is_subset(&edge_keys(&all)));
        for e in all.edges().filter(|e| e.kind.is_semantic()) {
            let s = all.entity(&e.source).unwrap().top_type;
            let t = all.entity(&e.target).unwrap().top_type;
            prop_assert!(e.kind.admits(s, t));
        }
    }

    #[test]
    fn sum_pool_is_additive(dim in 1usize..8, a in 0usize..5, b in 0usize..5, seed in any::<u64>()) {
        // small integers keep every partial sum exact in f32
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut make = |n: usize| -> Vec<Vector> {
            (0..n).map(|_| vector((0..dim).map(|_| rng.random_range(-50i32..50) as f32).collect())).collect()
        };
        let (va, vb) = (make(a), make(b));
        let left: Vec<&Vector> = va.iter().collect();
        let right: Vec<&Vector> = vb.iter().collect();
        let both: Vec<&Vector> = va.iter().chain(vb.iter()).collect();
        let pa = sum_pool(&left, dim).unwrap();
        let pb = sum_pool(&right, dim).unwrap();
        let sum: Vec<f32> = pa.as_slice().iter().zip(pb.as_slice()).map(|(x, y)| x + y).collect();
        let pooled = sum_pool(&both, dim).unwrap();
        prop_assert_eq!(pooled.as_slice(), &sum[..]);
        let mut shuffled = both.clone();
        shuffled.shuffle(&mut rng);
        prop_assert_eq!(sum_pool(&shuffled, dim).unwrap(), sum_pool(&both, dim).unwrap());
    }

    #[test]
    fn composed_views_slice_back(doc_dim in 1usize..10, ent_dim in 1usize..10, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rv = |d: usize| vector((0..d).map(|_| rng.random_range(-1.0f32..1.0)).collect());
        let doc = rv(doc_dim);
        let (t, m, d) = (rv(ent_dim), rv(ent_dim), rv(ent_dim));
        let groups = EntityGroups { task: vec![&t], method: vec![&m], matmet: vec![&d] };
        let set = compose("p", &doc, &groups, doc_dim, ent_dim).unwrap();
        let g = set.view(View::General).as_slice();
        prop_assert_eq!(g.len(), 3 * ent_dim + doc_dim);
        prop_assert_eq!(&g[..ent_dim], t.as_slice());
        prop_assert_eq!(&g[ent_dim..2 * ent_dim], m.as_slice());
        prop_assert_eq!(&g[2 * ent_dim..3 * ent_dim], d.as_slice());
        prop_assert_eq!(&g[3 * ent_dim..], doc.as_slice());
        for (view, width) in [
            (View::Task, ent_dim + doc_dim),
            (View::Method, ent_dim + doc_dim),
            (View::MatMet, ent_dim + doc_dim),
            (View::TaskMethod, 2 * ent_dim + doc_dim),
            (View::TaskMatMet, 2 * ent_dim + doc_dim),
            (View::Entities, 3 * ent_dim),
        ] {
            prop_assert_eq!(set.view(view).dim(), width);
        }
    }

    #[test]
    fn projection_lands_on_simplex_and_is_idempotent(v in prop::array::uniform4(-10.0f64..10.0)) {
        let p = simplex_project(v);
        let x = p.values();
        prop_assert!(x.iter().all(|c| *c >= 0.0));
        prop_assert!((x.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        prop_assert_eq!(simplex_project(x), p);
    }

    #[test]
    fn positive_scaling_keeps_rankings(seed in any::<u64>(), exp in -6i32..6) {
        // a power of two scales every component exactly
        let factor = 2f32.powi(exp);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(2..40);
        let papers = common::random_papers(&mut rng, n, 5, 4);
        let sets: Vec<VectorSet> = papers.iter().map(common::RawPaper::to_set).collect();
        let scaled: Vec<VectorSet> = sets.iter().map(|s| s.scaled(factor)).collect();
        let profile = WeightProfile {
            w: Simplex4::new(common::random_simplex(&mut rng)).unwrap(),
            alpha: Simplex4::new(common::random_simplex(&mut rng)).unwrap(),
        };
        let k = rng.random_range(1..n);
        let q = rng.random_range(0..n);
        for mode in [RankMode::Coarse, RankMode::Refined] {
            let a = recommend(&sets[q], &sets, &profile, k, k, mode).unwrap();
            let b = recommend(&scaled[q], &scaled, &profile, k, k, mode).unwrap();
            prop_assert_eq!(a.ids(), b.ids());
            prop_assert!(!a.ids().contains(&sets[q].paper_id.as_str()));
            for c in &a.items {
                prop_assert!(c.coarse_score.abs() <= 1.0 + 1e-12);
                if let Some(r) = c.refined_score {
                    prop_assert!((-2.0 - 1e-12..=1.0 + 1e-12).contains(&r));
                }
            }
        }
    }

    #[test]
    fn promoting_a_relevant_item_never_hurts(seed in any::<u64>(), len in 2usize..30, k in 1usize..30) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ids: Vec<String> = (0..len).map(|i| format!("d{i}")).collect();
        let relevant: BTreeSet<String> = ids.iter().filter(|_| rng.random_bool(0.4)).cloned().collect();
        prop_assume!(!relevant.is_empty());
        let mut ranked = ids.clone();
        ranked.shuffle(&mut rng);
        let Some(pos) = (1..len).find(|&i| relevant.contains(&ranked[i]) && !relevant.contains(&ranked[i - 1])) else {
            return Ok(());
        };
        let target = rng.random_range(0..pos);
        let mut moved = ranked.clone();
        let item = moved.remove(pos);
        moved.insert(target, item);
        let ap = |r: &[String]| ap_at_n(r, &relevant, k).unwrap();
        let nd = |r: &[String]| ndcg_at_k(r, &relevant, k).unwrap();
        prop_assert!(ap(&moved) >= ap(&ranked) - 1e-12);
        prop_assert!(nd(&moved) >= nd(&ranked) - 1e-12);
    }

    #[test]
    fn map_ignores_query_order(aps in prop::collection::vec(prop::option::weighted(0.8, 0.0f64..=1.0), 1..40), seed in any::<u64>()) {
        prop_assume!(aps.iter().any(Option::is_some));
        let mut shuffled = aps.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let a = map_at_k(&aps).unwrap();
        let b = map_at_k(&shuffled).unwrap();
        prop_assert!((a - b).abs() <= 1e-12);
    }

    #[test]
    fn ascent_never_accepts_a_worse_point(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let peak = common::random_simplex(&mut rng);
        let bumps: [f64; 4] = std::array::from_fn(|_| rng.random_range(0.0..3.0));
        let f = |s: &Simplex4| -> facetrec::Result<f64> {
            let x = s.values();
            Ok(-(0..4).map(|i| (x[i] - peak[i]).powi(2)).sum::<f64>() + (bumps[0] * x[0] * 10.0).sin() * 0.01)
        };
        let start = Simplex4::new(common::random_simplex(&mut rng)).unwrap();
        let run = coordinate_ascent(start, 0.05, 5, 200, f).unwrap();
        let mut last = f(&start).unwrap();
        for (_, value, point) in &run.accepted {
            prop_assert!(*value >= last);
            prop_assert!((point.values().iter().sum::<f64>() - 1.0).abs() <= 1e-9);
            last = *value;
        }
        prop_assert!(run.objective >= f(&start).unwrap());
    }
}
