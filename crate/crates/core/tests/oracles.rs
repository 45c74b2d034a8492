mod common;

#[test]
fn metrics_match_brute_force_evaluator() {
    for seed in 0..40 {
        let worst = common::metric_trial(seed).unwrap();
        assert!(worst <= 1e-9, "seed {seed}: difference {worst:e}");
    }
}

#[test]
fn rankings_match_straight_line_pipeline() {
    for seed in 0..30 {
        common::pipeline_trial(1000 + seed).unwrap();
    }
}
