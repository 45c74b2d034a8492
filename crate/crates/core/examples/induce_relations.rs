//! Template-based relation induction over annotated dependency parses.
//!
//! ```bash
//! cargo run -p facetrec --example induce_relations
//! ```

use std::error::Error;

use facetrec::graph::load_graph;
use facetrec::relation::{
    induce_relations, load_rules, match_templates, read_jsonl, score_induction, shortest_dep_path,
    AnnotatedSentence, ParsedSentence,
};

fn main() -> Result<(), Box<dyn Error>> {
    let data = concat!(env!("CARGO_MANIFEST_DIR"), "/data");
    let rules = load_rules(format!("{data}/default_rules.json"))?;
    let annotated: Vec<AnnotatedSentence> = read_jsonl(format!("{data}/toy_sentences.jsonl"))?;

    let first = &annotated[0].sentence;
    let words: Vec<&str> = first.tokens.iter().map(|t| t.surface.as_str()).collect();
    println!("{}", words.join(" "));
    let path = shortest_dep_path(first, &first.mentions[0], &first.mentions[1])?;
    println!("  path {path:?}");
    for m in match_templates(first, &rules) {
        println!(
            "  {} -[{}]-> {} via {} ({:.2})",
            m.source, m.relation, m.target, m.rule, m.confidence
        );
    }

    let score = score_induction(&annotated, &rules);
    println!(
        "template precision {:.3}, recall {:.3}, f1 {:.3}",
        score.precision(),
        score.recall(),
        score.f1()
    );

    let (graph, _) = load_graph(format!("{data}/toy_corpus.json"))?;
    let sentences: Vec<ParsedSentence> = annotated.into_iter().map(|a| a.sentence).collect();
    let (induced, report) = induce_relations(&graph, &sentences, &rules)?;
    println!(
        "{} matches: {} new edges, {} merged into existing ones ({} -> {} edges)",
        report.matches,
        report.added,
        report.merged,
        graph.edge_count(),
        induced.edge_count()
    );
    Ok(())
}
