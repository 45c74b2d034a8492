//! Rank the toy corpus for one query paper in both modes.
//!
//! ```bash
//! cargo run -p facetrec --example recommend -- p04
//! ```

use std::error::Error;

use facetrec::cli::render_table;
use facetrec::embedding::{compose_corpus, stub_encode_graph, Corpus, EncoderSource};
use facetrec::graph::load_graph;
use facetrec::ranking::{recommend, RankMode, WeightProfile};

fn main() -> Result<(), Box<dyn Error>> {
    let query = std::env::args().nth(1).unwrap_or_else(|| "p04".to_string());
    let (graph, _) = load_graph(concat!(env!("CARGO_MANIFEST_DIR"), "/data/toy_corpus.json"))?;
    let source = EncoderSource {
        doc_dim: 64,
        entity_dim: 64,
        ..Default::default()
    };
    let (docs, entities) = stub_encode_graph(&graph, &source, 0);
    let corpus = Corpus::new(compose_corpus(&graph, &docs, &entities)?)?;
    let q = corpus.get(&query).ok_or("unknown query paper")?;

    for (profile, label) in [
        (WeightProfile::heuristic(), "heuristic"),
        (WeightProfile::reported(), "reported"),
    ] {
        for mode in [RankMode::Coarse, RankMode::Refined] {
            let list = recommend(q, corpus.sets(), &profile, 8, 5, mode)?;
            println!("{label} profile");
            print!("{}", render_table(&list));
            println!();
        }
    }
    Ok(())
}
