//! Perturb each weight of a profile by a relative amount and watch MAP and
//! nDCG move.
//!
//! ```bash
//! cargo run --release -p facetrec --example sensitivity
//! ```

use std::error::Error;

use facetrec::evaluation::{BucketScheme, EvalContext, PreparedEval};
use facetrec::learning::{sensitivity, Block, SENSITIVITY_DELTAS};
use facetrec::ranking::{RankMode, WeightProfile};
use facetrec::synthetic::{planted_corpus, PlantedConfig};

fn main() -> Result<(), Box<dyn Error>> {
    let planted = planted_corpus(&PlantedConfig::task_signal(), 5)?;
    let corpus = planted.corpus()?;
    let ctx = EvalContext::from_graph(
        &planted.graph,
        planted.queries.clone(),
        BucketScheme::TaskSurface,
    )?;
    let prepared = PreparedEval::new(&ctx, &corpus)?;

    let table = sensitivity(
        &WeightProfile::reported(),
        &prepared,
        RankMode::Refined,
        100,
        10,
        &SENSITIVITY_DELTAS,
    )?;
    println!(
        "baseline MAP@{} {:.4}, nDCG {:.4}",
        table.k, table.baseline_map, table.baseline_ndcg
    );
    print!("{}", table.to_csv()?);
    for block in [Block::W, Block::Alpha] {
        if let Some(r) = table.largest_drop(block) {
            println!(
                "largest {block} drop: {} at {:+.1} ({:+.4})",
                r.coordinate, r.delta, r.map_delta
            );
        }
    }
    Ok(())
}
