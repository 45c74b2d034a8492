//! Tune for MAP alone and for MAP plus intra-list diversity, then compare
//! the two profiles on held-out queries.
//!
//! ```bash
//! cargo run --release -p facetrec --example diversity_tradeoff
//! ```

use std::error::Error;

use facetrec::evaluation::{BucketScheme, EvalContext, Metric, PreparedEval, RunSpec};
use facetrec::learning::{learn_seeded, Objective, SearchConfig};
use facetrec::synthetic::{planted_corpus, PlantedConfig};

fn main() -> Result<(), Box<dyn Error>> {
    let seed = 0;
    let planted = planted_corpus(&PlantedConfig::clustered(), seed)?;
    let corpus = planted.corpus()?;
    let ctx = EvalContext::from_graph(
        &planted.graph,
        planted.queries.clone(),
        BucketScheme::TaskSurface,
    )?;

    for (objective, lambda) in [(Objective::Map, 0.0), (Objective::Jdiv, 0.5)] {
        let cfg = SearchConfig {
            objective,
            lambda,
            eval_k: 10,
            pool_k: 50,
            ..Default::default()
        };
        let (learned, test_ctx) = learn_seeded(&ctx, &corpus, &cfg, seed)?;
        let test = PreparedEval::new(&test_ctx, &corpus)?;
        let run = test.evaluate(
            &learned.profile(),
            &RunSpec::new(cfg.mode, 50, &[10], &[Metric::Map, Metric::Ild]),
        )?;
        println!(
            "{objective:?} (lambda {lambda}): w {} alpha {} | test MAP@10 {:.4} ILD@10 {:.4}",
            learned.w,
            learned.alpha,
            run.mean(Metric::Map, 10).unwrap_or(0.0),
            run.mean(Metric::Ild, 10).unwrap_or(0.0)
        );
    }
    Ok(())
}
