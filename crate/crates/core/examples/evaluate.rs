//! Evaluate coarse and refined ranking on a planted corpus and compare them
//! with a paired t-test.
//!
//! ```bash
//! cargo run --release -p facetrec --example evaluate
//! ```

use std::error::Error;

use facetrec::evaluation::{BucketScheme, EvalContext, EvalReport, Metric, PreparedEval, RunSpec};
use facetrec::ranking::{RankMode, WeightProfile};
use facetrec::synthetic::{planted_corpus, PlantedConfig};

fn main() -> Result<(), Box<dyn Error>> {
    let planted = planted_corpus(&PlantedConfig::task_signal(), 3)?;
    let corpus = planted.corpus()?;
    let ctx = EvalContext::from_graph(
        &planted.graph,
        planted.queries.clone(),
        BucketScheme::TaskSurface,
    )?;
    let prepared = PreparedEval::new(&ctx, &corpus)?;
    let profile = WeightProfile::reported();

    let mut report = EvalReport::new("example");
    let mut runs = Vec::new();
    for mode in [RankMode::Coarse, RankMode::Refined] {
        let spec = RunSpec::new(mode, 100, &[10, 20], &Metric::ALL);
        let run = prepared.evaluate(&profile, &spec)?;
        report.push_run(&mode.to_string(), mode, Some(3), &run);
        runs.push(run);
    }
    report.push_tests("refined", &runs[1], "coarse", &runs[0], Some(3));
    report.validate()?;
    print!("{}", report.to_csv()?);
    for t in report.tests.iter().filter(|t| t.metric == Metric::Map) {
        println!(
            "{}@{}: t = {:.3}, p = {:.4} over {} queries",
            t.metric, t.k, t.statistic, t.p_value, t.n
        );
    }
    Ok(())
}
