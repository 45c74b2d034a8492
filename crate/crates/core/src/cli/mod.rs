//! Command-line front end. The binary only parses arguments and calls
//! [`main_with`]; everything else lives here so it can be driven from tests.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::embedding::{
    compose_corpus, load_vectors, save_vectors, stub_encode_graph, Corpus, EncoderKind,
    EncoderSource, VectorStore,
};
use crate::error::{Error, Result};
use crate::evaluation::{
    ablation_report, config_hash, judgments_from_graph, read_judgments, split_queries,
    AblationInput, AblationMode, BucketScheme, EvalContext, EvalReport, Metric, PreparedEval,
    Query, RunSpec,
};
use crate::graph::{load_graph, save_graph, KnowledgeGraph, RelationKind};
use crate::learning::{
    learn_seeded, sensitivity, LearnedProfile, SearchConfig, SensitivityTable, SENSITIVITY_DELTAS,
};
use crate::ranking::{recommend, RankMode, RankedList, WeightProfile};
use crate::relation::{induce_relations, load_rules, read_sentences, RuleSet};

#[derive(Debug, Parser)]
#[command(
    name = "facetrec",
    version,
    about = "Entity-aware multi-vector paper recommender"
)]
pub struct Cli {
    /// JSON run configuration; flags given on the command line win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Replaces the configured seed list with this single seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for the global thread pool.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Load a corpus, optionally induce relations, validate and save the graph.
    Build(BuildArgs),
    /// Encode papers and entities with the deterministic stub encoder.
    Embed(EmbedArgs),
    /// Rank candidates for one query paper.
    Recommend(RecommendArgs),
    /// Learn weight profiles, one per seed.
    Learn(InputArgs),
    /// Evaluate a profile in both ranking modes on each seed's test split.
    Eval(InputArgs),
    /// Run ablations against the full system.
    Ablate(AblateArgs),
    /// Perturb each weight of a profile and report the metric change.
    Sensitivity(SensitivityArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Build(_) => "build",
            Command::Embed(_) => "embed",
            Command::Recommend(_) => "recommend",
            Command::Learn(_) => "learn",
            Command::Eval(_) => "eval",
            Command::Ablate(_) => "ablate",
            Command::Sensitivity(_) => "sensitivity",
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct BuildArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Parsed sentences (JSONL) to induce relations from.
    #[arg(long)]
    pub sentences: Option<PathBuf>,
    /// Template rules; the built-in set is used when absent.
    #[arg(long)]
    pub rules: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct EmbedArgs {
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[arg(long)]
    pub doc_dim: Option<usize>,
    #[arg(long)]
    pub entity_dim: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct InputArgs {
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[arg(long)]
    pub docs: Option<PathBuf>,
    #[arg(long)]
    pub entities: Option<PathBuf>,
    /// Relevance judgments (JSONL); derived from citations when absent.
    #[arg(long)]
    pub judgments: Option<PathBuf>,
    /// Weight profile (JSON); the heuristic profile when absent.
    #[arg(long)]
    pub profile: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct RecommendArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub query: String,
    /// Candidate pool size.
    #[arg(short = 'k', long)]
    pub k: Option<usize>,
    /// List length.
    #[arg(short = 'n', long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub mode: Option<RankMode>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct AblateArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Comma-separated modes, e.g. `drop-view:t,retain-fraction:0.5`.
    #[arg(long, value_delimiter = ',')]
    pub modes: Vec<AblationMode>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SensitivityArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Comma-separated relative changes, e.g. `-0.2,-0.1,0,0.1`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub deltas: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub corpus: Option<PathBuf>,
    pub sentences: Option<PathBuf>,
    pub rules: Option<PathBuf>,
    pub graph: Option<PathBuf>,
    pub doc_vectors: Option<PathBuf>,
    pub entity_vectors: Option<PathBuf>,
    pub judgments: Option<PathBuf>,
    pub profile: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

/// Everything a subcommand needs besides its query id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub paths: Paths,
    pub doc_dim: usize,
    pub entity_dim: usize,
    /// Candidate pool size.
    pub k: usize,
    /// Recommendation list length.
    pub n: usize,
    pub mode: RankMode,
    pub search: SearchConfig,
    pub cutoffs: Vec<usize>,
    pub metrics: Vec<Metric>,
    pub buckets: BucketScheme,
    /// Queries need at least this many cited papers in the corpus.
    pub min_citations: usize,
    pub ablations: Vec<AblationMode>,
    /// Edge-retention fractions added to the ablation modes.
    pub retain_fractions: Vec<f64>,
    pub deltas: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let mut ablations = vec![
            AblationMode::Full,
            AblationMode::DropView(crate::embedding::ViewMask {
                task: true,
                ..Default::default()
            }),
            AblationMode::DropView(crate::embedding::ViewMask {
                method: true,
                ..Default::default()
            }),
            AblationMode::DropView(crate::embedding::ViewMask {
                matmet: true,
                ..Default::default()
            }),
            AblationMode::DropCitations,
        ];
        for kind in [
            RelationKind::AchievedBy,
            RelationKind::UsedBy,
            RelationKind::EvaluatedBy,
            RelationKind::Related,
        ] {
            ablations.push(AblationMode::DropRelation(kind));
        }
        RunConfig {
            paths: Paths::default(),
            doc_dim: crate::embedding::DEFAULT_DOC_DIM,
            entity_dim: crate::embedding::DEFAULT_ENTITY_DIM,
            k: 100,
            n: 10,
            mode: RankMode::Refined,
            search: SearchConfig::default(),
            cutoffs: vec![5, 10, 20, 50],
            metrics: Metric::ALL.to_vec(),
            buckets: BucketScheme::default(),
            min_citations: 1,
            ablations,
            retain_fractions: vec![1.0, 0.75, 0.5, 0.25],
            deltas: SENSITIVITY_DELTAS.to_vec(),
        }
    }
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Output directory, `out` when nothing is configured.
    pub fn out_dir(&self) -> PathBuf {
        self.paths
            .out
            .clone()
            .unwrap_or_else(|| PathBuf::from("out"))
    }

    fn spec(&self, mode: RankMode) -> RunSpec {
        RunSpec::new(mode, self.k, &self.cutoffs, &self.metrics)
    }

    /// Every problem the configuration has for `command`, reported together.
    pub fn validate_for(&self, command: &Command) -> Result<()> {
        let mut problems = Vec::new();
        if self.n == 0 {
            problems.push("n must be at least 1".to_string());
        }
        if self.k < self.n {
            problems.push(format!("k = {} must be at least n = {}", self.k, self.n));
        }
        if let Err(Error::Config(msg)) | Err(Error::Weights(msg)) = self.search.validate() {
            problems.push(format!("search: {msg}"));
        }
        if matches!(command, Command::Eval(_) | Command::Ablate(_)) {
            if let Err(e) = self.spec(self.mode).validate() {
                problems.push(e.to_string());
            }
        }
        if matches!(command, Command::Embed(_)) && (self.doc_dim == 0 || self.entity_dim == 0) {
            problems.push("vector dimensions must be positive".into());
        }
        if let Some(r) = self
            .retain_fractions
            .iter()
            .find(|r| !(0.0..=1.0).contains(*r))
        {
            problems.push(format!("retain fraction {r} outside [0, 1]"));
        }
        if let Some(d) = self.deltas.iter().find(|d| !d.is_finite() || **d <= -1.0) {
            problems.push(format!("sensitivity delta {d} must be finite and above -1"));
        }

        let p = &self.paths;
        let mut require = |name: &str, path: &Option<PathBuf>, needed: bool| match path {
            Some(path) if !path.exists() => {
                problems.push(format!("{name} `{}` does not exist", path.display()))
            }
            None if needed => problems.push(format!("{name} path is required")),
            _ => {}
        };
        match command {
            Command::Build(_) => {
                require("corpus", &p.corpus, true);
                require("sentences", &p.sentences, false);
                require("rules", &p.rules, false);
            }
            Command::Embed(_) => require("graph", &p.graph, true),
            _ => {
                require("graph", &p.graph, true);
                require("doc vectors", &p.doc_vectors, true);
                require("entity vectors", &p.entity_vectors, true);
                require("judgments", &p.judgments, false);
                require("profile", &p.profile, false);
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems.join("; ")))
        }
    }
}

/// Configuration after merging the config file with command-line flags.
pub fn resolve(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.search.seeds = vec![seed];
    }
    if let Some(out) = &cli.out {
        cfg.paths.out = Some(out.clone());
    }
    let set = |slot: &mut Option<PathBuf>, v: &Option<PathBuf>| {
        if v.is_some() {
            slot.clone_from(v);
        }
    };
    let p = &mut cfg.paths;
    let input = |p: &mut Paths, a: &InputArgs| {
        set(&mut p.graph, &a.graph);
        set(&mut p.doc_vectors, &a.docs);
        set(&mut p.entity_vectors, &a.entities);
        set(&mut p.judgments, &a.judgments);
        set(&mut p.profile, &a.profile);
    };
    match &cli.command {
        Command::Build(a) => {
            set(&mut p.corpus, &a.corpus);
            set(&mut p.sentences, &a.sentences);
            set(&mut p.rules, &a.rules);
        }
        Command::Embed(a) => {
            set(&mut p.graph, &a.graph);
            cfg.doc_dim = a.doc_dim.unwrap_or(cfg.doc_dim);
            cfg.entity_dim = a.entity_dim.unwrap_or(cfg.entity_dim);
        }
        Command::Recommend(a) => {
            input(p, &a.input);
            cfg.k = a.k.unwrap_or(cfg.k);
            cfg.n = a.n.unwrap_or(cfg.n);
            cfg.mode = a.mode.unwrap_or(cfg.mode);
        }
        Command::Learn(a) | Command::Eval(a) => input(p, a),
        Command::Ablate(a) => {
            input(p, &a.input);
            if !a.modes.is_empty() {
                cfg.ablations.clone_from(&a.modes);
                cfg.retain_fractions.clear();
            }
        }
        Command::Sensitivity(a) => {
            input(p, &a.input);
            if !a.deltas.is_empty() {
                cfg.deltas.clone_from(&a.deltas);
            }
        }
    }
    Ok(cfg)
}

/// Runs one command and returns the files it wrote.
pub fn run(cli: &Cli) -> Result<Vec<PathBuf>> {
    let cfg = resolve(cli)?;
    cfg.validate_for(&cli.command)?;
    let mut hashed = cfg.clone();
    hashed.paths.out = None;
    let hash = config_hash(&HashKey {
        command: cli.command.name(),
        config: &hashed,
        query: match &cli.command {
            Command::Recommend(a) => Some(a.query.as_str()),
            _ => None,
        },
    })?;
    let out = cfg.out_dir();
    std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    log::info!(
        "{} -> {} (config {})",
        cli.command.name(),
        out.display(),
        &hash[..12]
    );
    match &cli.command {
        Command::Build(_) => cmd_build(&cfg, &hash, &out),
        Command::Embed(_) => cmd_embed(&cfg, &hash, &out),
        Command::Recommend(a) => cmd_recommend(&cfg, &a.query, &out),
        Command::Learn(_) => cmd_learn(&cfg, &hash, &out),
        Command::Eval(_) => cmd_eval(&cfg, &hash, &out),
        Command::Ablate(_) => cmd_ablate(&cfg, &hash, &out),
        Command::Sensitivity(_) => cmd_sensitivity(&cfg, &hash, &out),
    }
}

/// Entry point used by the binary: runs the command, prints a JSON error
/// record on stderr when it fails and returns the exit status.
pub fn main_with(cli: Cli) -> i32 {
    if let Some(n) = cli.threads {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    match run(&cli) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            0
        }
        Err(e) => {
            eprintln!("{}", error_record(&e));
            e.exit_code()
        }
    }
}

/// Machine-readable description of `e`.
pub fn error_record(e: &Error) -> String {
    let mut record = serde_json::json!({
        "error": e.code(),
        "message": e.to_string(),
    });
    if let Error::DanglingEdge {
        source_id,
        target,
        kind,
        ..
    } = e
    {
        record["edge"] = serde_json::json!({ "source": source_id, "target": target, "kind": kind });
    }
    record.to_string()
}

#[derive(Serialize)]
struct HashKey<'a> {
    command: &'a str,
    config: &'a RunConfig,
    query: Option<&'a str>,
}

fn write_text(path: PathBuf, text: &str) -> Result<PathBuf> {
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

fn write_json<T: Serialize>(path: PathBuf, value: &T) -> Result<PathBuf> {
    let mut s =
        serde_json::to_string_pretty(value).map_err(|e| Error::Serialization(e.to_string()))?;
    s.push('\n');
    write_text(path, &s)
}

fn required<'a>(slot: &'a Option<PathBuf>, name: &str) -> Result<&'a PathBuf> {
    slot.as_ref()
        .ok_or_else(|| Error::Config(format!("{name} path is required")))
}

#[derive(Serialize)]
struct BuildSummary {
    config_hash: String,
    papers: usize,
    entities: usize,
    edges: usize,
    load_warnings: Vec<String>,
    induced: Option<InductionSummary>,
}

#[derive(Serialize)]
struct InductionSummary {
    sentences: usize,
    matches: usize,
    added: usize,
    merged: usize,
}

pub fn cmd_build(cfg: &RunConfig, hash: &str, out: &Path) -> Result<Vec<PathBuf>> {
    let (mut graph, report) = load_graph(required(&cfg.paths.corpus, "corpus")?)?;
    let mut induced = None;
    if let Some(path) = &cfg.paths.sentences {
        let sentences = read_sentences(path)?;
        let rules = match &cfg.paths.rules {
            Some(r) => load_rules(r)?,
            None => RuleSet::default(),
        };
        let (g, r) = induce_relations(&graph, &sentences, &rules)?;
        graph = g;
        induced = Some(InductionSummary {
            sentences: sentences.len(),
            matches: r.matches,
            added: r.added,
            merged: r.merged,
        });
    }
    graph.validate()?;
    let graph_path = out.join("graph.json");
    save_graph(&graph, &graph_path)?;
    let summary = BuildSummary {
        config_hash: hash.to_string(),
        papers: graph.paper_count(),
        entities: graph.entity_count(),
        edges: graph.edge_count(),
        load_warnings: report.warnings.iter().map(|w| format!("{w:?}")).collect(),
        induced,
    };
    Ok(vec![
        graph_path,
        write_json(out.join("build_report.json"), &summary)?,
    ])
}

#[derive(Serialize)]
struct EmbedSummary {
    config_hash: String,
    encoder: EncoderSource,
    seed: u64,
    papers: usize,
    entities: usize,
}

pub fn cmd_embed(cfg: &RunConfig, hash: &str, out: &Path) -> Result<Vec<PathBuf>> {
    let (graph, _) = load_graph(required(&cfg.paths.graph, "graph")?)?;
    let source = EncoderSource {
        kind: EncoderKind::StubHash,
        doc_dim: cfg.doc_dim,
        entity_dim: cfg.entity_dim,
    };
    let seed = cfg.search.seeds.first().copied().unwrap_or(0);
    let (docs, entities) = stub_encode_graph(&graph, &source, seed);
    let doc_path = out.join("doc_vectors.evec");
    let ent_path = out.join("entity_vectors.evec");
    save_vectors(&docs, &doc_path)?;
    save_vectors(&entities, &ent_path)?;
    let summary = EmbedSummary {
        config_hash: hash.to_string(),
        encoder: source,
        seed,
        papers: docs.len(),
        entities: entities.len(),
    };
    Ok(vec![
        doc_path,
        ent_path,
        write_json(out.join("embed_report.json"), &summary)?,
    ])
}

/// Graph, vectors, judgments and profile shared by the ranking commands.
struct Inputs {
    graph: KnowledgeGraph,
    docs: VectorStore,
    entities: VectorStore,
    corpus: Corpus,
    queries: Vec<Query>,
    profile: WeightProfile,
}

fn load_inputs(cfg: &RunConfig) -> Result<Inputs> {
    let p = &cfg.paths;
    let (graph, _) = load_graph(required(&p.graph, "graph")?)?;
    let docs = load_vectors(required(&p.doc_vectors, "doc vectors")?)?;
    let entities = load_vectors(required(&p.entity_vectors, "entity vectors")?)?;
    let corpus = Corpus::new(compose_corpus(&graph, &docs, &entities)?)?;
    let queries = match &p.judgments {
        Some(path) => read_judgments(path)?,
        None => judgments_from_graph(&graph, cfg.min_citations)?,
    };
    let profile = match &p.profile {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let prof: WeightProfile = serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("profile {}: {e}", path.display())))?;
            prof
        }
        None => WeightProfile::heuristic(),
    };
    Ok(Inputs {
        graph,
        docs,
        entities,
        corpus,
        queries,
        profile,
    })
}

fn file_safe(id: &str) -> String {
    id.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Fixed-width table of a ranked list.
pub fn render_table(list: &RankedList) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "query {} ({} mode, top {})",
        list.query_id, list.mode, list.k
    );
    let _ = writeln!(
        s,
        "{:>4}  {:<20} {:>9} {:>9} {:>8} {:>8} {:>8} {:>8}  pad",
        "rank", "paper", "coarse", "refined", "cos_g", "cos_t", "cos_m", "cos_d"
    );
    for (i, c) in list.items.iter().enumerate() {
        let refined = c
            .refined_score
            .map_or_else(|| "-".to_string(), |r| format!("{r:.5}"));
        let [g, t, m, d] = c.per_view_cos;
        let _ = writeln!(
            s,
            "{:>4}  {:<20} {:>9.5} {:>9} {:>8.4} {:>8.4} {:>8.4} {:>8.4}  {}",
            i + 1,
            c.paper_id,
            c.coarse_score,
            refined,
            g,
            t,
            m,
            d,
            if c.padded { "yes" } else { "" }
        );
    }
    if list.pool_exhausted {
        s.push_str("candidate pool held fewer papers than requested\n");
    }
    s
}

pub fn cmd_recommend(cfg: &RunConfig, query: &str, out: &Path) -> Result<Vec<PathBuf>> {
    let inputs = load_inputs(cfg)?;
    let q = inputs
        .corpus
        .get(query)
        .ok_or_else(|| Error::UnknownPaper(query.to_string()))?;
    let list = recommend(
        q,
        inputs.corpus.sets(),
        &inputs.profile,
        cfg.k,
        cfg.n,
        cfg.mode,
    )?;
    let stem = format!("recommend-{}", file_safe(query));
    Ok(vec![
        write_json(out.join(format!("{stem}.json")), &list)?,
        write_text(out.join(format!("{stem}.txt")), &render_table(&list))?,
    ])
}

pub fn cmd_learn(cfg: &RunConfig, hash: &str, out: &Path) -> Result<Vec<PathBuf>> {
    let inputs = load_inputs(cfg)?;
    let ctx = EvalContext::from_graph(&inputs.graph, inputs.queries.clone(), cfg.buckets)?;
    let mut search = cfg.search.clone();
    search.pool_k = cfg.k;
    let spec = cfg.spec(search.mode);
    let mut files = Vec::new();
    let mut report = EvalReport::new(hash);
    let mut profiles: Vec<LearnedProfile> = Vec::new();
    for &seed in &cfg.search.seeds {
        let (learned, test_ctx) = learn_seeded(&ctx, &inputs.corpus, &search, seed)?;
        log::info!(
            "seed {seed}: w {} alpha {} objective {:.6}",
            learned.w,
            learned.alpha,
            learned.objective
        );
        let test = PreparedEval::new(&test_ctx, &inputs.corpus)?;
        if test.query_count() > 0 {
            let run = test.evaluate(&learned.profile(), &spec)?;
            report.push_run("learned", spec.mode, Some(seed), &run);
        }
        files.push(write_json(
            out.join(format!("profile-seed{seed}.json")),
            &learned,
        )?);
        profiles.push(learned);
    }
    report.aggregate("learned");
    report
        .notes
        .push("each profile is scored on the test split of its own seed".into());
    if let Some(first) = profiles.first() {
        files.push(write_json(out.join("profile.json"), first)?);
    }
    let (json, csv) = report.save(out, "learn_report")?;
    files.extend([json, csv]);
    Ok(files)
}

pub fn cmd_eval(cfg: &RunConfig, hash: &str, out: &Path) -> Result<Vec<PathBuf>> {
    let inputs = load_inputs(cfg)?;
    let ctx = EvalContext::from_graph(&inputs.graph, inputs.queries.clone(), cfg.buckets)?;
    let mut report = EvalReport::new(hash);
    for &seed in &cfg.search.seeds {
        let (_, test) = split_queries(&ctx.queries, cfg.search.dev_fraction, seed);
        let test_ctx = ctx.with_queries(test);
        let prepared = PreparedEval::new(&test_ctx, &inputs.corpus)?;
        let coarse = prepared.evaluate(&inputs.profile, &cfg.spec(RankMode::Coarse))?;
        let refined = prepared.evaluate(&inputs.profile, &cfg.spec(RankMode::Refined))?;
        report.push_run("coarse", RankMode::Coarse, Some(seed), &coarse);
        report.push_run("refined", RankMode::Refined, Some(seed), &refined);
        report.push_tests("refined", &refined, "coarse", &coarse, Some(seed));
    }
    report.aggregate("coarse");
    report.aggregate("refined");
    report.fill_deltas("refined", "coarse");
    report.notes.push(format!(
        "profile w {} alpha {}",
        inputs.profile.w, inputs.profile.alpha
    ));
    report
        .notes
        .push("every seed is scored on its own test split".into());
    let (json, csv) = report.save(out, "eval_report")?;
    Ok(vec![json, csv])
}

pub fn cmd_ablate(cfg: &RunConfig, hash: &str, out: &Path) -> Result<Vec<PathBuf>> {
    let inputs = load_inputs(cfg)?;
    let mut modes = cfg.ablations.clone();
    modes.extend(
        cfg.retain_fractions
            .iter()
            .map(|&r| AblationMode::RetainFraction(r)),
    );
    let mut seen = BTreeSet::new();
    modes.retain(|m| seen.insert(m.to_string()));

    let mut report = EvalReport::new(hash);
    for &seed in &cfg.search.seeds {
        let input = AblationInput {
            graph: &inputs.graph,
            docs: &inputs.docs,
            entities: &inputs.entities,
            queries: Some(inputs.queries.clone()),
            scheme: cfg.buckets,
            profile: inputs.profile,
            spec: cfg.spec(cfg.mode),
            seed,
        };
        let r = ablation_report(&input, &modes)?;
        report.rows.extend(r.rows);
        report.tests.extend(r.tests);
        for q in r.skipped {
            if !report.skipped.contains(&q) {
                report.skipped.push(q);
            }
        }
        for n in r.notes {
            if !report.notes.contains(&n) {
                report.notes.push(n);
            }
        }
    }
    let mut runs = vec!["full".to_string()];
    runs.extend(modes.iter().map(|m| m.to_string()).filter(|m| m != "full"));
    for run in &runs {
        report.aggregate(run);
    }
    for run in runs.iter().skip(1) {
        report.fill_deltas(run, "full");
    }
    let (json, csv) = report.save(out, "ablation_report")?;
    Ok(vec![json, csv])
}

#[derive(Serialize)]
struct SeedTable<'a> {
    seed: u64,
    #[serde(flatten)]
    table: &'a SensitivityTable,
}

#[derive(Serialize)]
struct SensitivitySummary<'a> {
    config_hash: &'a str,
    profile: WeightProfile,
    tables: Vec<SeedTable<'a>>,
}

pub fn cmd_sensitivity(cfg: &RunConfig, hash: &str, out: &Path) -> Result<Vec<PathBuf>> {
    let inputs = load_inputs(cfg)?;
    let ctx = EvalContext::from_graph(&inputs.graph, inputs.queries.clone(), cfg.buckets)?;
    let mut tables = Vec::new();
    let mut files = Vec::new();
    for &seed in &cfg.search.seeds {
        let (_, test) = split_queries(&ctx.queries, cfg.search.dev_fraction, seed);
        let test_ctx = ctx.with_queries(test);
        let prepared = PreparedEval::new(&test_ctx, &inputs.corpus)?;
        let table = sensitivity(
            &inputs.profile,
            &prepared,
            cfg.mode,
            cfg.k,
            cfg.search.eval_k,
            &cfg.deltas,
        )?;
        files.push(write_text(
            out.join(format!("sensitivity-seed{seed}.csv")),
            &table.to_csv()?,
        )?);
        tables.push((seed, table));
    }
    let summary = SensitivitySummary {
        config_hash: hash,
        profile: inputs.profile,
        tables: tables
            .iter()
            .map(|(seed, table)| SeedTable { seed: *seed, table })
            .collect(),
    };
    files.push(write_json(out.join("sensitivity.json"), &summary)?);
    Ok(files)
}
