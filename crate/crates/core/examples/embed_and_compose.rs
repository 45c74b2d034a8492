//! Stub-encode a graph, compose per-paper views and round-trip the vector
//! files.
//!
//! ```bash
//! cargo run -p facetrec --example embed_and_compose
//! ```

use std::error::Error;

use facetrec::embedding::{
    compose_corpus, decode_vectors, encode_vectors, stub_encode_graph, EncoderKind, EncoderSource,
    View,
};
use facetrec::graph::load_graph;

fn main() -> Result<(), Box<dyn Error>> {
    let (graph, _) = load_graph(concat!(env!("CARGO_MANIFEST_DIR"), "/data/toy_corpus.json"))?;
    let source = EncoderSource {
        kind: EncoderKind::StubHash,
        doc_dim: 64,
        entity_dim: 96,
    };
    let (docs, entities) = stub_encode_graph(&graph, &source, 7);
    println!(
        "{} document vectors, {} entity vectors",
        docs.len(),
        entities.len()
    );

    let bytes = encode_vectors(&docs)?;
    assert_eq!(decode_vectors(&bytes)?, docs);
    println!(
        "document store encodes to {} bytes and decodes unchanged",
        bytes.len()
    );

    let sets = compose_corpus(&graph, &docs, &entities)?;
    let p = &sets[0];
    for view in [
        View::General,
        View::Task,
        View::Method,
        View::MatMet,
        View::TaskMethod,
        View::TaskMatMet,
    ] {
        println!(
            "{} {:?}: dim {}, norm {:.3}",
            p.paper_id,
            view,
            p.view(view).dim(),
            p.view(view).norm()
        );
    }
    Ok(())
}
