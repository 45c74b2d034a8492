//! Drives the compiled binary in a scratch directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub const SMALL_CONFIG: &str = r#"{
  "k": 11,
  "n": 5,
  "cutoffs": [5, 10],
  "search": {"coarse_step": 0.25, "fine_step": 0.05, "eval_k": 5, "seeds": [0, 1]},
  "retain_fractions": [1.0, 0.5]
}"#;

pub fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(name)
}

pub fn facetrec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_facetrec"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .expect("binary runs")
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Every file below `dir` with its bytes, keyed by relative path.
pub fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

/// Toy graph plus stub vectors and a small config, built with the CLI.
pub struct Workspace {
    pub root: tempfile::TempDir,
    pub config: PathBuf,
    pub graph: PathBuf,
    pub docs: PathBuf,
    pub entities: PathBuf,
}

impl Workspace {
    pub fn new() -> Self {
        let root = tempfile::tempdir().unwrap();
        let config = root.path().join("config.json");
        std::fs::write(&config, SMALL_CONFIG).unwrap();
        let inputs = root.path().join("inputs");
        let out = facetrec(&[
            "--out",
            s(&inputs),
            "build",
            "--corpus",
            s(&data("toy_corpus.json")),
            "--sentences",
            s(&data("toy_sentences.jsonl")),
        ]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        let graph = inputs.join("graph.json");
        let out = facetrec(&[
            "--out",
            s(&inputs),
            "--seed",
            "3",
            "embed",
            "--graph",
            s(&graph),
            "--doc-dim",
            "32",
            "--entity-dim",
            "32",
        ]);
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        Workspace {
            config,
            docs: inputs.join("doc_vectors.evec"),
            entities: inputs.join("entity_vectors.evec"),
            graph,
            root,
        }
    }

    pub fn inputs(&self) -> Vec<String> {
        [
            "--graph",
            s(&self.graph),
            "--docs",
            s(&self.docs),
            "--entities",
            s(&self.entities),
        ]
        .iter()
        .map(|x| x.to_string())
        .collect()
    }

    /// Argument lists for every subcommand, reading only workspace inputs.
    pub fn invocations(&self) -> Vec<(&'static str, Vec<String>)> {
        let owned = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        let with_inputs = |head: &[&str], tail: &[&str]| {
            let mut v = owned(head);
            v.extend(self.inputs());
            v.extend(owned(tail));
            v
        };
        vec![
            (
                "build",
                owned(&[
                    "build",
                    "--corpus",
                    s(&data("toy_corpus.json")),
                    "--sentences",
                    s(&data("toy_sentences.jsonl")),
                    "--rules",
                    s(&data("default_rules.json")),
                ]),
            ),
            (
                "embed",
                owned(&[
                    "embed",
                    "--graph",
                    s(&self.graph),
                    "--doc-dim",
                    "16",
                    "--entity-dim",
                    "24",
                ]),
            ),
            (
                "recommend",
                with_inputs(&["recommend"], &["--query", "p04", "-k", "11", "-n", "11"]),
            ),
            ("learn", with_inputs(&["learn"], &[])),
            ("eval", with_inputs(&["eval"], &[])),
            ("ablate", with_inputs(&["ablate"], &[])),
            (
                "sensitivity",
                with_inputs(&["sensitivity"], &["--deltas=-0.2,0,0.2"]),
            ),
        ]
    }

    /// Runs `args` with the workspace config into a fresh directory `name`.
    pub fn run(&self, name: &str, args: &[String]) -> (Output, PathBuf) {
        let out_dir = self.root.path().join(name);
        let mut full = vec![
            "--config".to_string(),
            s(&self.config).to_string(),
            "--out".into(),
            s(&out_dir).into(),
        ];
        full.extend(args.iter().cloned());
        let refs: Vec<&str> = full.iter().map(String::as_str).collect();
        (facetrec(&refs), out_dir)
    }
}

/// Runs every subcommand twice; returns, per subcommand, whether both
/// runs succeeded with byte-identical outputs and untouched inputs.
pub fn determinism_report() -> Vec<(&'static str, Result<usize, String>)> {
    let ws = Workspace::new();
    let inputs_dir = ws.graph.parent().unwrap().to_path_buf();
    let before = snapshot(&inputs_dir);
    let mut report = Vec::new();
    for (name, args) in ws.invocations() {
        let (a, dir_a) = ws.run(&format!("{name}-a"), &args);
        let (b, dir_b) = ws.run(&format!("{name}-b"), &args);
        let result = if !a.status.success() || !b.status.success() {
            Err(format!(
                "{name} failed: {}",
                String::from_utf8_lossy(&a.stderr)
            ))
        } else {
            let (sa, sb) = (snapshot(&dir_a), snapshot(&dir_b));
            if sa.is_empty() {
                Err(format!("{name} wrote nothing"))
            } else if sa != sb {
                let differing: Vec<&String> =
                    sa.keys().filter(|k| sa.get(*k) != sb.get(*k)).collect();
                Err(format!("{name}: outputs differ: {differing:?}"))
            } else if snapshot(&inputs_dir) != before {
                Err(format!("{name} modified its inputs"))
            } else {
                Ok(sa.len())
            }
        };
        report.push((name, result));
    }
    report
}
