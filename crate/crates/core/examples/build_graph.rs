//! Load the bundled toy corpus, query it, and write it back out.
//!
//! ```bash
//! cargo run -p facetrec --example build_graph
//! ```

use std::error::Error;

use facetrec::graph::{load_graph, save_graph, RelationKind, TopType};

fn main() -> Result<(), Box<dyn Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/data/toy_corpus.json");
    let (graph, report) = load_graph(path)?;
    println!(
        "{} papers, {} entities, {} edges ({} warnings)",
        report.papers,
        report.entities,
        report.edges,
        report.warnings.len()
    );
    for kind in RelationKind::SEMANTIC {
        println!("  {kind:<12} {}", graph.count_kind(kind));
    }

    let tasks: Vec<_> = graph
        .entities_of("p02", Some(TopType::Task))?
        .into_iter()
        .map(|e| e.surface.as_str())
        .collect();
    println!("p02 tasks: {tasks:?}");
    println!("p12 cites: {:?}", graph.references_of("p12")?);
    for (neighbor, kind) in graph.semantic_neighbors("t-ner") {
        println!("t-ner -[{kind}]- {neighbor}");
    }

    let out = std::env::temp_dir().join("facetrec-toy-graph.json");
    save_graph(&graph, &out)?;
    let (again, _) = load_graph(&out)?;
    assert_eq!(again, graph);
    println!("round trip through {} is lossless", out.display());
    Ok(())
}
