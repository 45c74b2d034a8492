//! Entity-view ablations on a corpus where task, method and material
//! views each carry part of the relevance signal.
//!
//! ```bash
//! cargo run --release -p facetrec --example ablation
//! ```

use std::error::Error;

use facetrec::evaluation::{
    ablation_report, AblationInput, AblationMode, BucketScheme, Metric, RunSpec,
};
use facetrec::ranking::{RankMode, WeightProfile};
use facetrec::synthetic::{planted_corpus, PlantedConfig};

fn main() -> Result<(), Box<dyn Error>> {
    let planted = planted_corpus(&PlantedConfig::complementary(), 0)?;
    let modes: Vec<AblationMode> = ["full", "drop-view:m+d", "drop-view:d", "drop-citations"]
        .iter()
        .map(|s| s.parse())
        .collect::<Result<_, _>>()?;
    let input = AblationInput {
        graph: &planted.graph,
        docs: &planted.docs,
        entities: &planted.entities,
        queries: Some(planted.queries.clone()),
        scheme: BucketScheme::EntityFacets,
        profile: WeightProfile::heuristic(),
        spec: RunSpec::new(RankMode::Coarse, 100, &[10], &[Metric::Map, Metric::Ndcg]),
        seed: 0,
    };
    let report = ablation_report(&input, &modes)?;
    for r in report.rows.iter().filter(|r| r.metric == Metric::Map) {
        let delta = r.delta.map_or_else(String::new, |d| format!("{d:+.4}"));
        println!("{:<16} MAP@{} {:.4} {delta}", r.run, r.k, r.value);
    }
    Ok(())
}
