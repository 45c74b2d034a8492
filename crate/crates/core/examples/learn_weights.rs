//! Learn the coarse weights on a planted corpus whose relevance follows
//! the task view only.
//!
//! ```bash
//! cargo run --release -p facetrec --example learn_weights
//! ```

use std::error::Error;

use facetrec::evaluation::{BucketScheme, EvalContext};
use facetrec::learning::{learn_seeded, SearchConfig};
use facetrec::ranking::RankMode;
use facetrec::synthetic::{planted_corpus, PlantedConfig};

fn main() -> Result<(), Box<dyn Error>> {
    let planted = planted_corpus(&PlantedConfig::task_signal(), 11)?;
    let corpus = planted.corpus()?;
    let ctx = EvalContext::from_graph(
        &planted.graph,
        planted.queries.clone(),
        BucketScheme::TaskSurface,
    )?;
    let cfg = SearchConfig {
        mode: RankMode::Coarse,
        eval_k: 10,
        ..Default::default()
    };
    let (learned, test) = learn_seeded(&ctx, &corpus, &cfg, 11)?;
    println!("w     = {}", learned.w);
    println!("alpha = {}", learned.alpha);
    println!(
        "dev MAP@{} {:.4} after {} trajectory points; {} test queries held out",
        cfg.eval_k,
        learned.objective,
        learned.trajectory.len(),
        test.queries.len()
    );
    for p in learned.trajectory.iter().take(8) {
        println!(
            "  {} {:?} #{:<3} {:.4} {}",
            p.block, p.phase, p.iteration, p.objective, p.weights
        );
    }
    assert!(learned.is_monotone());
    Ok(())
}
