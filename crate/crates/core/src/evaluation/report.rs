use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::stats::{mean_std, paired_t_test};
use super::{Metric, RunMetrics};
use crate::error::{Error, Result};
use crate::ranking::RankMode;

/// Hex SHA-256 of the canonical JSON form of `value`.
pub fn config_hash<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value).map_err(|e| Error::Serialization(e.to_string()))?;
    // serde_json maps keep keys sorted, so this string is canonical
    let s = serde_json::to_string(&v).map_err(|e| Error::Serialization(e.to_string()))?;
    Ok(hex::encode(Sha256::digest(s.as_bytes())))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    /// Which run the row belongs to, e.g. `full` or `drop-view:t`.
    pub run: String,
    pub metric: Metric,
    pub k: usize,
    pub mode: RankMode,
    /// `None` on rows aggregated over seeds.
    pub seed: Option<u64>,
    pub value: f64,
    /// Spread across queries on per-seed rows, across seeds on aggregates.
    pub std: f64,
    pub n: usize,
    /// Difference to the reference run, when there is one.
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestRow {
    pub metric: Metric,
    pub k: usize,
    pub seed: Option<u64>,
    pub a: String,
    pub b: String,
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
    pub degenerate: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config_hash: String,
    pub rows: Vec<MetricRow>,
    pub tests: Vec<TestRow>,
    /// Queries left out because they have no relevant paper.
    pub skipped: Vec<String>,
    pub notes: Vec<String>,
}

impl EvalReport {
    pub fn new(config_hash: impl Into<String>) -> Self {
        EvalReport {
            config_hash: config_hash.into(),
            ..Default::default()
        }
    }

    /// Per-seed rows for one run.
    pub fn push_run(&mut self, run: &str, mode: RankMode, seed: Option<u64>, metrics: &RunMetrics) {
        for ((metric, k), values) in &metrics.values {
            let (value, std) = mean_std(values);
            self.rows.push(MetricRow {
                run: run.to_string(),
                metric: *metric,
                k: *k,
                mode,
                seed,
                value,
                std,
                n: values.len(),
                delta: None,
            });
        }
        for q in &metrics.skipped {
            if !self.skipped.contains(q) {
                self.skipped.push(q.clone());
            }
        }
    }

    /// Mean and spread over seeds of every per-seed row of `run`.
    pub fn aggregate(&mut self, run: &str) {
        let mut groups: std::collections::BTreeMap<(Metric, usize, String), (RankMode, Vec<f64>)> =
            Default::default();
        for r in self
            .rows
            .iter()
            .filter(|r| r.run == run && r.seed.is_some())
        {
            groups
                .entry((r.metric, r.k, r.mode.to_string()))
                .or_insert((r.mode, Vec::new()))
                .1
                .push(r.value);
        }
        for ((metric, k, _), (mode, values)) in groups {
            let (value, std) = mean_std(&values);
            self.rows.push(MetricRow {
                run: run.to_string(),
                metric,
                k,
                mode,
                seed: None,
                value,
                std,
                n: values.len(),
                delta: None,
            });
        }
    }

    /// Fills `delta` on every row of `run` against the matching row of
    /// `reference`.
    pub fn fill_deltas(&mut self, run: &str, reference: &str) {
        let base: Vec<MetricRow> = self
            .rows
            .iter()
            .filter(|r| r.run == reference)
            .cloned()
            .collect();
        for r in self.rows.iter_mut().filter(|r| r.run == run) {
            if let Some(b) = base.iter().find(|b| {
                b.metric == r.metric && b.k == r.k && b.mode == r.mode && b.seed == r.seed
            }) {
                r.delta = Some(r.value - b.value);
            }
        }
    }

    /// Paired tests of `a` against `b` over their shared queries, one per
    /// metric and cutoff.
    pub fn push_tests(
        &mut self,
        a_name: &str,
        a: &RunMetrics,
        b_name: &str,
        b: &RunMetrics,
        seed: Option<u64>,
    ) {
        for (key, _) in a.values.iter() {
            let (Some(xa), Some(xb)) = (a.paired(b, *key), b.paired(a, *key)) else {
                continue;
            };
            if let Ok(t) = paired_t_test(&xa, &xb) {
                self.tests.push(TestRow {
                    metric: key.0,
                    k: key.1,
                    seed,
                    a: a_name.to_string(),
                    b: b_name.to_string(),
                    statistic: t.statistic,
                    p_value: t.p_value,
                    n: t.n,
                    degenerate: t.degenerate,
                });
            }
        }
    }

    /// Row lookup; `seed: None` selects the aggregate row.
    pub fn value(&self, run: &str, metric: Metric, k: usize, seed: Option<u64>) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.run == run && r.metric == metric && r.k == k && r.seed == seed)
            .map(|r| r.value)
    }

    /// Every metric value lies in its documented range.
    pub fn validate(&self) -> Result<()> {
        for r in &self.rows {
            let (lo, hi) = r.metric.range();
            if !(r.value.is_finite() && r.value >= lo - 1e-12 && r.value <= hi + 1e-12) {
                return Err(Error::MetricRange {
                    metric: format!("{}@{}", r.metric, r.k),
                    value: r.value,
                });
            }
        }
        for t in &self.tests {
            if !(0.0..=1.0).contains(&t.p_value) {
                return Err(Error::MetricRange {
                    metric: format!("p-value {}@{}", t.metric, t.k),
                    value: t.p_value,
                });
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s =
            serde_json::to_string_pretty(self).map_err(|e| Error::Serialization(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "run", "metric", "k", "mode", "seed", "value", "std", "n", "delta",
        ])
        .map_err(|e| Error::Serialization(e.to_string()))?;
        for r in &self.rows {
            w.write_record([
                r.run.clone(),
                r.metric.to_string(),
                r.k.to_string(),
                r.mode.to_string(),
                r.seed.map_or_else(|| "all".to_string(), |s| s.to_string()),
                format!("{:.10}", r.value),
                format!("{:.10}", r.std),
                r.n.to_string(),
                r.delta.map_or_else(String::new, |d| format!("{d:.10}")),
            ])
            .map_err(|e| Error::Serialization(e.to_string()))?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::Serialization(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Serialization(e.to_string()))
    }

    /// Writes `<stem>.json` and `<stem>.csv` into `dir`.
    pub fn save(&self, dir: impl AsRef<Path>, stem: &str) -> Result<(PathBuf, PathBuf)> {
        self.validate()?;
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let json = dir.join(format!("{stem}.json"));
        let csv = dir.join(format!("{stem}.csv"));
        std::fs::write(&json, self.to_json()?).map_err(|e| Error::io(&json, e))?;
        std::fs::write(&csv, self.to_csv()?).map_err(|e| Error::io(&csv, e))?;
        Ok((json, csv))
    }
}
