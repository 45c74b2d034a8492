//! Weight search on the simplex: a lattice grid followed by coordinate
//! ascent with projection, and the one-at-a-time sensitivity protocol.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::embedding::Corpus;
use crate::error::{Error, Result};
use crate::evaluation::{config_hash, split_queries, EvalContext, Metric, PreparedEval, RunSpec};
use crate::ranking::{RankMode, Simplex4, WeightProfile};

/// Minimum gain for a move to count as an improvement.
pub const IMPROVE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Objective {
    /// MAP at the evaluation cutoff.
    #[serde(rename = "map", alias = "MAP50", alias = "MAP")]
    Map,
    /// MAP plus lambda times ILD at the evaluation cutoff.
    #[serde(rename = "jdiv", alias = "Jdiv")]
    Jdiv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Block {
    W,
    Alpha,
}

impl Block {
    pub fn coordinate_name(self, i: usize) -> &'static str {
        match self {
            Block::W => ["g", "t", "m", "d"][i],
            Block::Alpha => ["s1", "s2", "s3", "s4"][i],
        }
    }
}

impl fmt::Display for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Block::W => "w",
            Block::Alpha => "alpha",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    pub coarse_step: f64,
    pub fine_step: f64,
    /// Consecutive non-improving full sweeps before ascent stops.
    pub patience: usize,
    pub objective: Objective,
    pub lambda: f64,
    pub seeds: Vec<u64>,
    pub eval_k: usize,
    /// Coarse candidate pool size used while learning.
    pub pool_k: usize,
    /// Share of queries in the development split.
    pub dev_fraction: f64,
    /// Refined mode also learns `alpha`; coarse mode keeps the start `alpha`.
    pub mode: RankMode,
    /// Hard stop for ascent, in sweeps.
    pub max_sweeps: usize,
    pub start: Option<WeightProfile>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            coarse_step: 0.05,
            fine_step: 0.01,
            patience: 5,
            objective: Objective::Map,
            lambda: 0.0,
            seeds: vec![0, 1, 2],
            eval_k: 50,
            pool_k: 100,
            dev_fraction: 0.5,
            mode: RankMode::Refined,
            max_sweeps: 1000,
            start: None,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        for (name, s) in [
            ("coarse_step", self.coarse_step),
            ("fine_step", self.fine_step),
        ] {
            if !(s > 0.0 && s < 1.0) {
                problems.push(format!("{name} = {s} is not in (0, 1)"));
            }
        }
        let m = 1.0 / self.coarse_step;
        if self.coarse_step > 0.0 && (m - m.round()).abs() > 1e-6 {
            problems.push(format!(
                "coarse_step = {} does not divide 1",
                self.coarse_step
            ));
        }
        if self.patience == 0 {
            problems.push("patience must be at least 1".into());
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            problems.push(format!("lambda = {} must be finite and >= 0", self.lambda));
        }
        if self.objective == Objective::Map && self.lambda != 0.0 {
            problems.push("lambda must be 0 with the MAP objective".into());
        }
        if self.eval_k == 0 || self.eval_k > self.pool_k {
            problems.push(format!(
                "eval_k = {} must be in 1..=pool_k ({})",
                self.eval_k, self.pool_k
            ));
        }
        if self.objective == Objective::Jdiv && self.eval_k < 2 {
            problems.push("the diversity objective needs eval_k >= 2".into());
        }
        if !(0.0..=1.0).contains(&self.dev_fraction) {
            problems.push(format!(
                "dev_fraction = {} is not in [0, 1]",
                self.dev_fraction
            ));
        }
        if self.seeds.is_empty() {
            problems.push("at least one seed is required".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("; ")))
        }
    }

    fn lambda_eff(&self) -> f64 {
        match self.objective {
            Objective::Map => 0.0,
            Objective::Jdiv => self.lambda,
        }
    }

    fn start_profile(&self) -> WeightProfile {
        self.start.unwrap_or_else(WeightProfile::heuristic)
    }
}

/// Euclidean projection onto `{x >= 0, sum x = 1}` by sorting and
/// thresholding. Non-finite entries are read as 0.
pub fn simplex_project(v: [f64; 4]) -> Simplex4 {
    let v = v.map(|x| if x.is_finite() { x } else { 0.0 });
    let mut u = v;
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cum += uj;
        let t = (cum - 1.0) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        }
    }
    let mut x = v.map(|vi| (vi - theta).max(0.0));
    let sum: f64 = x.iter().sum();
    if sum > 0.0 {
        for xi in &mut x {
            *xi /= sum;
        }
    } else {
        x = [0.25; 4];
    }
    Simplex4::from_unchecked(x)
}

/// Every simplex point with coordinates in multiples of `step`, in
/// lexicographic order.
pub fn lattice(step: f64) -> Vec<Simplex4> {
    let m = (1.0 / step).round() as usize;
    let mut out = Vec::new();
    for a in 0..=m {
        for b in 0..=m - a {
            for c in 0..=m - a - b {
                let d = m - a - b - c;
                out.push(Simplex4::from_unchecked(
                    [a, b, c, d].map(|x| x as f64 / m as f64),
                ));
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Grid,
    Ascent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub block: Block,
    pub phase: Phase,
    pub iteration: usize,
    pub objective: f64,
    pub weights: Simplex4,
}

/// Best lattice point of `f`. Later points replace the incumbent only on a
/// strict improvement, so ties go to the lexicographically smallest point.
pub fn coarse_grid<F>(step: f64, f: F) -> Result<(Simplex4, f64)>
where
    F: Fn(&Simplex4) -> Result<f64> + Sync,
{
    use rayon::prelude::*;
    let points = lattice(step);
    let values = points.par_iter().map(&f).collect::<Result<Vec<f64>>>()?;
    let mut best = 0;
    for i in 1..points.len() {
        if values[i] > values[best] + IMPROVE_TOL {
            best = i;
        }
    }
    Ok((points[best], values[best]))
}

/// Result of one coordinate-ascent run.
#[derive(Debug, Clone, PartialEq)]
pub struct Ascent {
    pub point: Simplex4,
    pub objective: f64,
    pub sweeps: usize,
    /// Objective after the start and after every accepted move.
    pub accepted: Vec<(usize, f64, Simplex4)>,
}

/// Round-robin coordinate ascent: for each coordinate try `+step`, then
/// `-step`, project, and keep the first strict improvement. Stops after
/// `patience` consecutive sweeps without an accepted move.
pub fn coordinate_ascent<F>(
    start: Simplex4,
    step: f64,
    patience: usize,
    max_sweeps: usize,
    f: F,
) -> Result<Ascent>
where
    F: Fn(&Simplex4) -> Result<f64> + Sync,
{
    let mut cur = start;
    let mut best = f(&cur)?;
    let mut accepted = vec![(0, best, cur)];
    let mut idle = 0;
    let mut sweeps = 0;
    let mut moves = 0;
    while idle < patience && sweeps < max_sweeps {
        let mut improved = false;
        for i in 0..4 {
            let mut up = cur.values();
            up[i] += step;
            let mut down = cur.values();
            down[i] -= step;
            let (up, down) = (simplex_project(up), simplex_project(down));
            let (fu, fd) = rayon::join(|| f(&up), || f(&down));
            let (fu, fd) = (fu?, fd?);
            let pick = if up != cur && fu > best + IMPROVE_TOL {
                Some((up, fu))
            } else if down != cur && fd > best + IMPROVE_TOL {
                Some((down, fd))
            } else {
                None
            };
            if let Some((p, v)) = pick {
                cur = p;
                best = v;
                moves += 1;
                accepted.push((moves, v, p));
                improved = true;
            }
        }
        sweeps += 1;
        idle = if improved { 0 } else { idle + 1 };
    }
    Ok(Ascent {
        point: cur,
        objective: best,
        sweeps,
        accepted,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnedProfile {
    pub w: Simplex4,
    pub alpha: Simplex4,
    /// Final development objective.
    pub objective: f64,
    pub criterion: Objective,
    pub seed: u64,
    pub config_hash: String,
    pub trajectory: Vec<TrajectoryPoint>,
}

impl LearnedProfile {
    pub fn profile(&self) -> WeightProfile {
        WeightProfile {
            w: self.w,
            alpha: self.alpha,
        }
    }

    /// Accepted objectives never decrease within one block.
    pub fn is_monotone(&self) -> bool {
        [Block::W, Block::Alpha].iter().all(|b| {
            let seq: Vec<f64> = self
                .trajectory
                .iter()
                .filter(|p| p.block == *b)
                .map(|p| p.objective)
                .collect();
            seq.windows(2).all(|w| w[1] >= w[0])
        })
    }
}

/// Learns `w` with coarse ranking, then `alpha` inside task subsets with `w`
/// frozen, on the prepared development queries.
pub fn learn(dev: &PreparedEval<'_>, cfg: &SearchConfig, seed: u64) -> Result<LearnedProfile> {
    cfg.validate()?;
    if dev.query_count() == 0 {
        return Err(Error::Evaluation(
            "development split has no query with a relevant paper".into(),
        ));
    }
    let lambda = cfg.lambda_eff();
    let start = cfg.start_profile();
    let mut trajectory = Vec::new();

    let obj_w = |w: &Simplex4| {
        dev.objective(
            &WeightProfile {
                w: *w,
                alpha: start.alpha,
            },
            RankMode::Coarse,
            cfg.pool_k,
            cfg.eval_k,
            lambda,
        )
    };
    let (w, final_w) = search_block(Block::W, start.w, cfg, obj_w, &mut trajectory)?;

    let (alpha, objective) = if cfg.mode == RankMode::Refined {
        let obj_a = |a: &Simplex4| {
            dev.objective(
                &WeightProfile { w, alpha: *a },
                RankMode::Refined,
                cfg.pool_k,
                cfg.eval_k,
                lambda,
            )
        };
        search_block(Block::Alpha, start.alpha, cfg, obj_a, &mut trajectory)?
    } else {
        (start.alpha, final_w)
    };

    Ok(LearnedProfile {
        w,
        alpha,
        objective,
        criterion: cfg.objective,
        seed,
        config_hash: config_hash(cfg)?,
        trajectory,
    })
}

/// Grid search then ascent for one block. The start point is the incumbent,
/// so the grid only replaces it with a strictly better lattice point.
fn search_block<F>(
    block: Block,
    start: Simplex4,
    cfg: &SearchConfig,
    f: F,
    trajectory: &mut Vec<TrajectoryPoint>,
) -> Result<(Simplex4, f64)>
where
    F: Fn(&Simplex4) -> Result<f64> + Sync,
{
    let start_value = f(&start)?;
    let (mut grid_point, mut grid_value) = coarse_grid(cfg.coarse_step, &f)?;
    if grid_value <= start_value + IMPROVE_TOL {
        (grid_point, grid_value) = (start, start_value);
    }
    trajectory.push(TrajectoryPoint {
        block,
        phase: Phase::Grid,
        iteration: 0,
        objective: grid_value,
        weights: grid_point,
    });
    let ascent = coordinate_ascent(grid_point, cfg.fine_step, cfg.patience, cfg.max_sweeps, &f)?;
    for (iteration, objective, weights) in ascent.accepted.iter().skip(1) {
        trajectory.push(TrajectoryPoint {
            block,
            phase: Phase::Ascent,
            iteration: *iteration,
            objective: *objective,
            weights: *weights,
        });
    }
    log::debug!(
        "{block}: grid {grid_value:.6} -> ascent {:.6} in {} sweeps",
        ascent.objective,
        ascent.sweeps
    );
    Ok((ascent.point, ascent.objective))
}

/// Splits `ctx.queries` under `seed`, learns on the development part and
/// returns the learned profile with the held-out context.
pub fn learn_seeded(
    ctx: &EvalContext,
    corpus: &Corpus,
    cfg: &SearchConfig,
    seed: u64,
) -> Result<(LearnedProfile, EvalContext)> {
    cfg.validate()?;
    let (dev, test) = split_queries(&ctx.queries, cfg.dev_fraction, seed);
    let dev_ctx = ctx.with_queries(dev);
    let prepared = PreparedEval::new(&dev_ctx, corpus)?;
    let learned = learn(&prepared, cfg, seed)?;
    Ok((learned, ctx.with_queries(test)))
}

/// Scales coordinate `i` by `1 + delta` and renormalizes the block.
pub fn perturb(s: &Simplex4, i: usize, delta: f64) -> Result<Simplex4> {
    if delta == 0.0 {
        return Ok(*s);
    }
    let mut v = s.values();
    v[i] *= 1.0 + delta;
    let sum: f64 = v.iter().sum();
    if !(sum > 0.0) || v.iter().any(|x| *x < 0.0) {
        return Err(Error::Weights(format!(
            "perturbing {s} at {i} by {delta} leaves the simplex"
        )));
    }
    Simplex4::new(v.map(|x| x / sum))
}

pub const SENSITIVITY_DELTAS: [f64; 4] = [-0.2, -0.1, 0.1, 0.2];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityRow {
    pub block: Block,
    pub coordinate: String,
    pub delta: f64,
    pub weights: Simplex4,
    pub map: f64,
    pub ndcg: f64,
    pub map_delta: f64,
    pub ndcg_delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityTable {
    pub config_hash: String,
    pub k: usize,
    pub mode: RankMode,
    pub baseline_map: f64,
    pub baseline_ndcg: f64,
    pub rows: Vec<SensitivityRow>,
}

impl SensitivityTable {
    /// Row of `block` with the most negative MAP change; the first such row
    /// in table order on ties.
    pub fn largest_drop(&self, block: Block) -> Option<&SensitivityRow> {
        let mut best: Option<&SensitivityRow> = None;
        for r in self.rows.iter().filter(|r| r.block == block) {
            if best.map_or(true, |b| r.map_delta < b.map_delta) {
                best = Some(r);
            }
        }
        best
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| Error::Serialization(e.to_string());
        w.write_record([
            "block",
            "coordinate",
            "delta",
            "weights",
            "map",
            "ndcg",
            "map_delta",
            "ndcg_delta",
        ])
        .map_err(err)?;
        for r in &self.rows {
            w.write_record([
                r.block.to_string(),
                r.coordinate.clone(),
                format!("{:+.2}", r.delta),
                r.weights.to_string(),
                format!("{:.10}", r.map),
                format!("{:.10}", r.ndcg),
                format!("{:+.10}", r.map_delta),
                format!("{:+.10}", r.ndcg_delta),
            ])
            .map_err(err)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| Error::Serialization(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Serialization(e.to_string()))
    }
}

/// One-at-a-time perturbation of every coordinate of `w` (and of `alpha`
/// in refined mode), scored by MAP@k and nDCG@k on `test`.
pub fn sensitivity(
    profile: &WeightProfile,
    test: &PreparedEval<'_>,
    mode: RankMode,
    pool_k: usize,
    k: usize,
    deltas: &[f64],
) -> Result<SensitivityTable> {
    let spec = RunSpec::new(mode, pool_k, &[k], &[Metric::Map, Metric::Ndcg]);
    let score = |p: &WeightProfile| -> Result<(f64, f64)> {
        let run = test.evaluate(p, &spec)?;
        Ok((
            run.mean(Metric::Map, k).unwrap_or(0.0),
            run.mean(Metric::Ndcg, k).unwrap_or(0.0),
        ))
    };
    let (baseline_map, baseline_ndcg) = score(profile)?;
    let blocks: &[Block] = match mode {
        RankMode::Coarse => &[Block::W],
        RankMode::Refined => &[Block::W, Block::Alpha],
    };
    let mut rows = Vec::new();
    for &block in blocks {
        for i in 0..4 {
            for &delta in deltas {
                let mut p = *profile;
                let target = match block {
                    Block::W => &mut p.w,
                    Block::Alpha => &mut p.alpha,
                };
                *target = perturb(target, i, delta)?;
                let weights = *target;
                let (map, ndcg) = score(&p)?;
                rows.push(SensitivityRow {
                    block,
                    coordinate: block.coordinate_name(i).to_string(),
                    delta,
                    weights,
                    map,
                    ndcg,
                    map_delta: map - baseline_map,
                    ndcg_delta: ndcg - baseline_ndcg,
                });
            }
        }
    }
    #[derive(Serialize)]
    struct Key<'a> {
        profile: &'a WeightProfile,
        mode: RankMode,
        pool_k: usize,
        k: usize,
        deltas: &'a [f64],
    }
    Ok(SensitivityTable {
        config_hash: config_hash(&Key {
            profile,
            mode,
            pool_k,
            k,
            deltas,
        })?,
        k,
        mode,
        baseline_map,
        baseline_ndcg,
        rows,
    })
}
