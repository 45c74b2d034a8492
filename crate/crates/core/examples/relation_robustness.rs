//! Coverage as semantic edges are removed from a graph whose relations
//! link otherwise separate method buckets.
//!
//! ```bash
//! cargo run --release -p facetrec --example relation_robustness
//! ```

use std::error::Error;

use facetrec::evaluation::{
    ablation_report, AblationInput, AblationMode, BucketScheme, Metric, RunSpec,
};
use facetrec::ranking::{RankMode, WeightProfile};
use facetrec::synthetic::{planted_relation_corpus, RelationPlan};

fn main() -> Result<(), Box<dyn Error>> {
    let plan = RelationPlan::default();
    let planted = planted_relation_corpus(&plan, 1)?;
    let fractions = [1.0, 0.75, 0.5, 0.25];
    let modes: Vec<AblationMode> = fractions
        .iter()
        .map(|&r| AblationMode::RetainFraction(r))
        .collect();
    let input = AblationInput {
        graph: &planted.graph,
        docs: &planted.docs,
        entities: &planted.entities,
        queries: Some(planted.queries.clone()),
        scheme: BucketScheme::RelationFacets,
        profile: WeightProfile::heuristic(),
        spec: RunSpec::new(
            RankMode::Refined,
            plan.papers - 1,
            &[10],
            &[Metric::Coverage, Metric::Map],
        ),
        seed: 1,
    };
    let report = ablation_report(&input, &modes)?;
    for m in &modes {
        let name = m.to_string();
        println!(
            "{name:<22} Coverage@10 {:.4}  MAP@10 {:.4}",
            report
                .value(&name, Metric::Coverage, 10, Some(1))
                .unwrap_or(f64::NAN),
            report
                .value(&name, Metric::Map, 10, Some(1))
                .unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
