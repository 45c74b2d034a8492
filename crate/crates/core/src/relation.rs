//! Template-based relation induction over pre-parsed sentences.
//!
//! A pair of entity mentions is linked only when its ordered type pair is
//! admissible for some rule and the dependency path between the mentions'
//! head tokens matches one of that rule's patterns. The relation kind comes
//! from the rule, never from the path.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, BufReader};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EdgeRecord, KnowledgeGraph, RelationKind, SubType, TopType};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub index: usize,
    pub surface: String,
    #[serde(default)]
    pub lemma: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DepArc {
    pub head_index: usize,
    pub dependent_index: usize,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mention {
    pub entity_id: String,
    pub top_type: TopType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sub_type: Option<SubType>,
    /// Half-open token range `[start, end)`.
    pub token_span: [usize; 2],
}

impl Mention {
    fn range(&self) -> std::ops::Range<usize> {
        self.token_span[0]..self.token_span[1]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedSentence {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub tokens: Vec<Token>,
    pub arcs: Vec<DepArc>,
    #[serde(default)]
    pub mentions: Vec<Mention>,
}

fn is_root_label(label: &str) -> bool {
    label.eq_ignore_ascii_case("root")
}

impl ParsedSentence {
    /// Parent of every token: `(head, label)`, or `None` for the root.
    /// Arcs labelled `root` are ignored.
    fn parents(&self) -> Result<Vec<Option<(usize, &str)>>> {
        let n = self.tokens.len();
        let mut parent: Vec<Option<(usize, &str)>> = vec![None; n];
        for arc in &self.arcs {
            if is_root_label(&arc.label) {
                continue;
            }
            if arc.head_index >= n || arc.dependent_index >= n {
                return Err(Error::Parse(format!(
                    "arc {} -> {} out of bounds for {} tokens",
                    arc.head_index, arc.dependent_index, n
                )));
            }
            if arc.head_index == arc.dependent_index {
                return Err(Error::Parse(format!(
                    "self arc on token {}",
                    arc.head_index
                )));
            }
            if parent[arc.dependent_index].is_some() {
                return Err(Error::Parse(format!(
                    "token {} has more than one head",
                    arc.dependent_index
                )));
            }
            parent[arc.dependent_index] = Some((arc.head_index, arc.label.as_str()));
        }
        Ok(parent)
    }

    /// Checks the single-rooted tree and mention-span invariants.
    pub fn validate(&self) -> Result<()> {
        for (i, t) in self.tokens.iter().enumerate() {
            if t.index != i {
                return Err(Error::Parse(format!(
                    "token {} carries index {}",
                    i, t.index
                )));
            }
        }
        let parent = self.parents()?;
        let roots = parent.iter().filter(|p| p.is_none()).count();
        if !self.tokens.is_empty() && roots != 1 {
            return Err(Error::Parse(format!("parse has {roots} roots, expected 1")));
        }
        for start in 0..parent.len() {
            let mut cur = start;
            let mut steps = 0;
            while let Some((head, _)) = parent[cur] {
                cur = head;
                steps += 1;
                if steps > parent.len() {
                    return Err(Error::Parse("cycle in dependency arcs".into()));
                }
            }
        }
        let n = self.tokens.len();
        for m in &self.mentions {
            let [s, e] = m.token_span;
            if s >= e || e > n {
                return Err(Error::Parse(format!(
                    "mention `{}` has invalid span [{s}, {e})",
                    m.entity_id
                )));
            }
            if let Some(sub) = m.sub_type {
                if sub.parent() != m.top_type {
                    return Err(Error::Parse(format!(
                        "mention `{}`: sub_type {:?} under {:?}",
                        m.entity_id, sub, m.top_type
                    )));
                }
            }
        }
        for (i, a) in self.mentions.iter().enumerate() {
            for b in &self.mentions[i + 1..] {
                let (ra, rb) = (a.range(), b.range());
                if ra.start < rb.end && rb.start < ra.end {
                    return Err(Error::Parse(format!(
                        "mentions `{}` and `{}` overlap",
                        a.entity_id, b.entity_id
                    )));
                }
            }
        }
        Ok(())
    }

    /// Head token of a mention span: the one span token whose head lies
    /// outside the span (or which is the root); the last span token when
    /// that is not unique.
    pub fn head_token(&self, mention: &Mention) -> Result<usize> {
        let parent = self.parents()?;
        head_of(&parent, mention)
    }
}

fn head_of(parent: &[Option<(usize, &str)>], mention: &Mention) -> Result<usize> {
    let range = mention.range();
    if range.is_empty() || range.end > parent.len() {
        return Err(Error::Parse(format!(
            "mention `{}` span out of bounds",
            mention.entity_id
        )));
    }
    let exits: Vec<usize> = range
        .clone()
        .filter(|&i| match parent[i] {
            None => true,
            Some((h, _)) => !range.contains(&h),
        })
        .collect();
    Ok(if exits.len() == 1 {
        exits[0]
    } else {
        range.end - 1
    })
}

fn dep_path(parent: &[Option<(usize, &str)>], from: usize, to: usize) -> Result<Vec<String>> {
    let ancestors = |start: usize| -> Result<Vec<usize>> {
        let mut chain = vec![start];
        let mut cur = start;
        while let Some((head, _)) = parent[cur] {
            cur = head;
            chain.push(cur);
            if chain.len() > parent.len() + 1 {
                return Err(Error::Parse("cycle in dependency arcs".into()));
            }
        }
        Ok(chain)
    };
    let up_a = ancestors(from)?;
    let up_b = ancestors(to)?;
    let set_b: BTreeSet<usize> = up_b.iter().copied().collect();
    let Some(lca_pos_a) = up_a.iter().position(|n| set_b.contains(n)) else {
        return Err(Error::Parse(format!(
            "disconnected parse: no path between tokens {from} and {to}"
        )));
    };
    let lca = up_a[lca_pos_a];
    let lca_pos_b = up_b.iter().position(|&n| n == lca).expect("lca in chain");
    let label = |node: usize| parent[node].map(|(_, l)| l.to_string()).expect("non-root");
    let mut labels: Vec<String> = up_a[..lca_pos_a].iter().map(|&n| label(n)).collect();
    labels.extend(up_b[..lca_pos_b].iter().rev().map(|&n| label(n)));
    Ok(labels)
}

/// Arc labels along the tree path between the head tokens of `a` and `b`.
pub fn shortest_dep_path(s: &ParsedSentence, a: &Mention, b: &Mention) -> Result<Vec<String>> {
    let parent = s.parents()?;
    let ha = head_of(&parent, a)?;
    let hb = head_of(&parent, b)?;
    dep_path(&parent, ha, hb)
}

/// Sub-type requirement for one side of a rule.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum SubConstraint {
    #[default]
    Any,
    /// The mention must not carry a sub type.
    Bare,
    OneOf(Vec<SubType>),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum SubConstraintRepr {
    Word(String),
    List(Vec<SubType>),
}

impl Serialize for SubConstraint {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            SubConstraint::Any => SubConstraintRepr::Word("any".into()),
            SubConstraint::Bare => SubConstraintRepr::Word("none".into()),
            SubConstraint::OneOf(v) => SubConstraintRepr::List(v.clone()),
        }
        .serialize(ser)
    }
}

impl<'de> Deserialize<'de> for SubConstraint {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        match SubConstraintRepr::deserialize(de)? {
            SubConstraintRepr::Word(w) if w == "any" => Ok(SubConstraint::Any),
            SubConstraintRepr::Word(w) if w == "none" => Ok(SubConstraint::Bare),
            SubConstraintRepr::Word(w) => Err(serde::de::Error::custom(format!(
                "sub_type must be \"any\", \"none\" or a list, got `{w}`"
            ))),
            SubConstraintRepr::List(v) => Ok(SubConstraint::OneOf(v)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeSpec {
    pub top_type: TopType,
    #[serde(default)]
    pub sub_type: SubConstraint,
}

impl TypeSpec {
    pub fn any(top_type: TopType) -> Self {
        TypeSpec {
            top_type,
            sub_type: SubConstraint::Any,
        }
    }

    fn accepts(&self, top: TopType, sub: Option<SubType>) -> bool {
        top == self.top_type
            && match &self.sub_type {
                SubConstraint::Any => true,
                SubConstraint::Bare => sub.is_none(),
                SubConstraint::OneOf(allowed) => sub.is_some_and(|s| allowed.contains(&s)),
            }
    }
}

/// One row of the template table: which typed pair links under which
/// relation, given which dependency paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplateRule {
    pub name: String,
    /// Edge source; the rule is tried in both mention orders.
    pub source: TypeSpec,
    pub target: TypeSpec,
    pub relation: RelationKind,
    /// `a+b` matches a two-arc path with labels {a, b} in either order;
    /// a bare label matches a one-arc path with exactly that label.
    pub path_patterns: Vec<String>,
    pub precision_prior: f64,
}

impl TemplateRule {
    pub fn validate(&self) -> Result<()> {
        if !self.relation.is_semantic()
            || !self
                .relation
                .admits(self.source.top_type, self.target.top_type)
        {
            return Err(Error::Config(format!(
                "rule `{}`: {} does not admit ({}, {})",
                self.name, self.relation, self.source.top_type, self.target.top_type
            )));
        }
        if self.path_patterns.is_empty() || self.path_patterns.iter().any(|p| p.trim().is_empty()) {
            return Err(Error::Config(format!(
                "rule `{}` has no path patterns",
                self.name
            )));
        }
        if !(0.0..=1.0).contains(&self.precision_prior) {
            return Err(Error::Config(format!(
                "rule `{}`: precision prior {} outside [0, 1]",
                self.name, self.precision_prior
            )));
        }
        for spec in [&self.source, &self.target] {
            if let SubConstraint::OneOf(subs) = &spec.sub_type {
                if subs.iter().any(|s| s.parent() != spec.top_type) {
                    return Err(Error::Config(format!(
                        "rule `{}`: sub types {:?} do not refine {}",
                        self.name, subs, spec.top_type
                    )));
                }
            }
        }
        Ok(())
    }

    fn path_matches(&self, path: &[String]) -> bool {
        self.path_patterns.iter().any(|p| pattern_matches(p, path))
    }
}

fn pattern_matches(pattern: &str, path: &[String]) -> bool {
    let mut want: Vec<&str> = pattern.split('+').map(str::trim).collect();
    if want.len() != path.len() {
        return false;
    }
    if want.len() == 1 {
        return want[0] == path[0];
    }
    let mut have: Vec<&str> = path.iter().map(String::as_str).collect();
    want.sort_unstable();
    have.sort_unstable();
    want == have
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleSet {
    /// Paths longer than this are never linked, whatever the patterns say.
    #[serde(default = "default_max_path")]
    pub max_path_len: usize,
    pub rules: Vec<TemplateRule>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

fn default_max_path() -> usize {
    3
}

impl Default for RuleSet {
    /// The five template rows with their measured precision as prior.
    fn default() -> Self {
        use TopType::*;
        let rule = |name: &str, source: TypeSpec, target: TypeSpec, relation, paths: &[&str], p| {
            TemplateRule {
                name: name.into(),
                source,
                target,
                relation,
                path_patterns: paths.iter().map(|s| s.to_string()).collect(),
                precision_prior: p,
            }
        };
        let bare = |t| TypeSpec {
            top_type: t,
            sub_type: SubConstraint::Bare,
        };
        RuleSet {
            max_path_len: default_max_path(),
            rules: vec![
                rule(
                    "task-method",
                    TypeSpec::any(Task),
                    TypeSpec::any(Method),
                    RelationKind::AchievedBy,
                    &["nsubj+dobj", "nmod"],
                    0.85,
                ),
                rule(
                    "task-material",
                    TypeSpec::any(Material),
                    TypeSpec::any(Task),
                    RelationKind::UsedBy,
                    &["nsubj+dobj", "nmod"],
                    0.88,
                ),
                rule(
                    "task-metric",
                    TypeSpec::any(Task),
                    TypeSpec::any(Metric),
                    RelationKind::EvaluatedBy,
                    &["nmod"],
                    0.90,
                ),
                rule(
                    "task-object-problem",
                    bare(Task),
                    TypeSpec {
                        top_type: Task,
                        sub_type: SubConstraint::OneOf(vec![SubType::Object, SubType::Problem]),
                    },
                    RelationKind::Related,
                    &["nmod", "acl", "acl:relcl"],
                    0.87,
                ),
                rule(
                    "method-process",
                    bare(Method),
                    TypeSpec {
                        top_type: Method,
                        sub_type: SubConstraint::OneOf(vec![SubType::Process]),
                    },
                    RelationKind::Related,
                    &["nsubj+dobj", "nmod", "acl", "acl:relcl"],
                    0.83,
                ),
            ],
            notes: vec!["`acl` rules also accept the `acl:relcl` relative-clause variant.".into()],
        }
    }
}

impl RuleSet {
    pub fn validate(&self) -> Result<()> {
        if self.max_path_len == 0 {
            return Err(Error::Config("max_path_len must be at least 1".into()));
        }
        self.rules.iter().try_for_each(TemplateRule::validate)
    }
}

pub fn load_rules(path: impl AsRef<Path>) -> Result<RuleSet> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let rules: RuleSet = serde_json::from_str(&text).map_err(Error::from_json)?;
    rules.validate()?;
    Ok(rules)
}

pub fn save_rules(rules: &RuleSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text =
        serde_json::to_string_pretty(rules).map_err(|e| Error::Serialization(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Reads a JSON-lines file; blank lines are skipped. Syntax errors carry the
/// file line number.
pub fn read_jsonl<T: serde::de::DeserializeOwned>(path: impl AsRef<Path>) -> Result<Vec<T>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line).map_err(|e| Error::Syntax {
            line: lineno + 1,
            column: e.column(),
            message: e.to_string(),
        })?;
        out.push(item);
    }
    Ok(out)
}

pub fn read_sentences(path: impl AsRef<Path>) -> Result<Vec<ParsedSentence>> {
    let sentences: Vec<ParsedSentence> = read_jsonl(path)?;
    for s in &sentences {
        s.validate()?;
    }
    Ok(sentences)
}

/// An edge proposed by a rule.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateEdge {
    pub source: String,
    pub target: String,
    pub relation: RelationKind,
    pub confidence: f64,
    pub rule: String,
}

/// All rule matches in one sentence. Pairs whose path cannot be computed are
/// skipped, as are pairs of the same entity.
pub fn match_templates(s: &ParsedSentence, rules: &RuleSet) -> Vec<CandidateEdge> {
    let Ok(parent) = s.parents() else {
        return Vec::new();
    };
    let mut found: BTreeMap<(String, String, RelationKind), CandidateEdge> = BTreeMap::new();
    for (i, a) in s.mentions.iter().enumerate() {
        for b in &s.mentions[i + 1..] {
            if a.entity_id == b.entity_id {
                continue;
            }
            let mut path: Option<Option<Vec<String>>> = None;
            for rule in &rules.rules {
                for (src, tgt) in [(a, b), (b, a)] {
                    if !rule.source.accepts(src.top_type, src.sub_type)
                        || !rule.target.accepts(tgt.top_type, tgt.sub_type)
                    {
                        continue;
                    }
                    let p = path.get_or_insert_with(|| {
                        let ha = head_of(&parent, a).ok()?;
                        let hb = head_of(&parent, b).ok()?;
                        dep_path(&parent, ha, hb).ok()
                    });
                    let Some(p) = p else { continue };
                    if p.len() > rules.max_path_len || !rule.path_matches(p) {
                        continue;
                    }
                    let key = (src.entity_id.clone(), tgt.entity_id.clone(), rule.relation);
                    let cand = CandidateEdge {
                        source: src.entity_id.clone(),
                        target: tgt.entity_id.clone(),
                        relation: rule.relation,
                        confidence: rule.precision_prior,
                        rule: rule.name.clone(),
                    };
                    match found.get(&key) {
                        Some(prev) if prev.confidence >= cand.confidence => {}
                        _ => {
                            found.insert(key, cand);
                        }
                    }
                }
            }
        }
    }
    found.into_values().collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InductionReport {
    pub matches: usize,
    pub added: usize,
    pub merged: usize,
}

/// Adds every template match to a copy of `graph`.
pub fn induce_relations(
    graph: &KnowledgeGraph,
    sentences: &[ParsedSentence],
    rules: &RuleSet,
) -> Result<(KnowledgeGraph, InductionReport)> {
    rules.validate()?;
    for s in sentences {
        for m in &s.mentions {
            let entity = graph
                .entity(&m.entity_id)
                .ok_or_else(|| Error::UnknownEntity(m.entity_id.clone()))?;
            if entity.top_type != m.top_type || entity.sub_type != m.sub_type {
                return Err(Error::Schema(format!(
                    "mention of `{}` typed {:?}/{:?}, graph says {:?}/{:?}",
                    m.entity_id, m.top_type, m.sub_type, entity.top_type, entity.sub_type
                )));
            }
        }
    }
    let per_sentence: Vec<Vec<CandidateEdge>> = sentences
        .par_iter()
        .map(|s| match_templates(s, rules))
        .collect();

    let mut out = graph.clone();
    let mut report = InductionReport::default();
    for cand in per_sentence.into_iter().flatten() {
        report.matches += 1;
        let merged = out.add_edge(EdgeRecord {
            source: cand.source,
            target: cand.target,
            kind: cand.relation,
            confidence: cand.confidence,
        })?;
        if merged {
            report.merged += 1;
        } else {
            report.added += 1;
        }
    }
    Ok((out, report))
}

/// Gold relation attached to an annotated sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldRelation {
    pub source: String,
    pub target: String,
    pub relation: RelationKind,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnnotatedSentence {
    #[serde(flatten)]
    pub sentence: ParsedSentence,
    #[serde(default)]
    pub gold: Vec<GoldRelation>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct InductionScore {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
}

impl InductionScore {
    pub fn precision(&self) -> f64 {
        let predicted = self.true_positives + self.false_positives;
        if predicted == 0 {
            0.0
        } else {
            self.true_positives as f64 / predicted as f64
        }
    }

    pub fn recall(&self) -> f64 {
        let gold = self.true_positives + self.false_negatives;
        if gold == 0 {
            0.0
        } else {
            self.true_positives as f64 / gold as f64
        }
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }
}

/// Scores template matches against gold labels, sentence by sentence.
pub fn score_induction(annotated: &[AnnotatedSentence], rules: &RuleSet) -> InductionScore {
    let mut score = InductionScore::default();
    for a in annotated {
        let predicted: BTreeSet<(String, String, RelationKind)> =
            match_templates(&a.sentence, rules)
                .into_iter()
                .map(|c| (c.source, c.target, c.relation))
                .collect();
        let gold: BTreeSet<(String, String, RelationKind)> = a
            .gold
            .iter()
            .map(|g| (g.source.clone(), g.target.clone(), g.relation))
            .collect();
        score.true_positives += predicted.intersection(&gold).count();
        score.false_positives += predicted.difference(&gold).count();
        score.false_negatives += gold.difference(&predicted).count();
    }
    score
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tokens(words: &[&str]) -> Vec<Token> {
        words
            .iter()
            .enumerate()
            .map(|(i, w)| Token {
                index: i,
                surface: w.to_string(),
                lemma: w.to_lowercase(),
            })
            .collect()
    }

    fn arc(h: usize, d: usize, label: &str) -> DepArc {
        DepArc {
            head_index: h,
            dependent_index: d,
            label: label.into(),
        }
    }

    fn mention(id: &str, top: TopType, sub: Option<SubType>, s: usize, e: usize) -> Mention {
        Mention {
            entity_id: id.into(),
            top_type: top,
            sub_type: sub,
            token_span: [s, e],
        }
    }

    /// "Parsing uses transformers": parsing <-nsubj- uses -dobj-> transformers
    fn svo(subj: Mention, obj: Mention) -> ParsedSentence {
        ParsedSentence {
            id: None,
            tokens: tokens(&["Parsing", "uses", "transformers"]),
            arcs: vec![arc(1, 0, "nsubj"), arc(1, 2, "dobj")],
            mentions: vec![subj, obj],
        }
    }

    #[test]
    fn subject_object_path() {
        let s = svo(
            mention("t", TopType::Task, None, 0, 1),
            mention("m", TopType::Method, None, 2, 3),
        );
        s.validate().unwrap();
        let path = shortest_dep_path(&s, &s.mentions[0], &s.mentions[1]).unwrap();
        assert_eq!(path, ["nsubj", "dobj"]);
    }

    #[test]
    fn same_head_gives_empty_path() {
        let s = svo(
            mention("t", TopType::Task, None, 0, 1),
            mention("m", TopType::Method, None, 2, 3),
        );
        let a = mention("x", TopType::Task, None, 0, 2);
        let b = mention("y", TopType::Task, None, 1, 2);
        // both spans are headed by token 1
        assert_eq!(shortest_dep_path(&s, &a, &b).unwrap(), Vec::<String>::new());
    }

    #[test]
    fn nominal_modifier_chain() {
        // "accuracy of tagging": accuracy -nmod-> tagging -case-> of
        let s = ParsedSentence {
            id: None,
            tokens: tokens(&["accuracy", "of", "tagging"]),
            arcs: vec![arc(0, 2, "nmod"), arc(2, 1, "case")],
            mentions: vec![
                mention("r", TopType::Metric, None, 0, 1),
                mention("t", TopType::Task, None, 2, 3),
            ],
        };
        s.validate().unwrap();
        assert_eq!(
            shortest_dep_path(&s, &s.mentions[0], &s.mentions[1]).unwrap(),
            ["nmod"]
        );
        let found = match_templates(&s, &RuleSet::default());
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].relation, RelationKind::EvaluatedBy);
        assert_eq!(
            (found[0].source.as_str(), found[0].target.as_str()),
            ("t", "r")
        );
        assert_eq!(found[0].confidence, 0.90);
    }

    #[test]
    fn multi_token_span_head() {
        // "neural machine translation": neural, machine <-amod/compound- translation
        let s = ParsedSentence {
            id: None,
            tokens: tokens(&["neural", "machine", "translation", "improves"]),
            arcs: vec![arc(2, 0, "amod"), arc(2, 1, "compound"), arc(3, 2, "nsubj")],
            mentions: vec![],
        };
        let m = mention("t", TopType::Task, None, 0, 3);
        assert_eq!(s.head_token(&m).unwrap(), 2);
    }

    #[test]
    fn disconnected_parse_is_an_error() {
        let s = ParsedSentence {
            id: None,
            tokens: tokens(&["a", "b"]),
            arcs: vec![],
            mentions: vec![
                mention("t", TopType::Task, None, 0, 1),
                mention("m", TopType::Method, None, 1, 2),
            ],
        };
        assert!(s.validate().is_err());
        let err = shortest_dep_path(&s, &s.mentions[0], &s.mentions[1]).unwrap_err();
        assert!(err.to_string().contains("disconnected"));
    }

    #[test]
    fn overlapping_mentions_rejected() {
        let mut s = svo(
            mention("t", TopType::Task, None, 0, 2),
            mention("m", TopType::Method, None, 1, 3),
        );
        assert!(s.validate().is_err());
        s.mentions[0].token_span = [0, 1];
        assert!(s.validate().is_ok());
    }

    #[test]
    fn task_method_match() {
        let s = svo(
            mention("t", TopType::Task, None, 0, 1),
            mention("m", TopType::Method, None, 2, 3),
        );
        let found = match_templates(&s, &RuleSet::default());
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].relation, RelationKind::AchievedBy);
        assert_eq!(found[0].source, "t");
        assert_eq!(found[0].confidence, 0.85);
    }

    #[test]
    fn pattern_order_does_not_matter() {
        let s = svo(
            mention("m", TopType::Method, None, 0, 1),
            mention("t", TopType::Task, None, 2, 3),
        );
        let found = match_templates(&s, &RuleSet::default());
        assert_eq!(found.len(), 1);
        assert_eq!(
            (found[0].source.as_str(), found[0].target.as_str()),
            ("t", "m")
        );
    }

    #[test]
    fn two_plain_methods_do_not_link() {
        let s = svo(
            mention("m1", TopType::Method, None, 0, 1),
            mention("m2", TopType::Method, None, 2, 3),
        );
        assert!(match_templates(&s, &RuleSet::default()).is_empty());
    }

    #[test]
    fn method_process_links_as_related() {
        let s = svo(
            mention("m1", TopType::Method, None, 0, 1),
            mention("p1", TopType::Method, Some(SubType::Process), 2, 3),
        );
        let found = match_templates(&s, &RuleSet::default());
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].relation, RelationKind::Related);
        assert_eq!(found[0].source, "m1");
    }

    #[test]
    fn acl_relcl_accepted() {
        let s = ParsedSentence {
            id: None,
            tokens: tokens(&["segmentation", "labels", "cells"]),
            arcs: vec![arc(0, 1, "acl:relcl"), arc(1, 2, "dobj")],
            mentions: vec![
                mention("t", TopType::Task, None, 0, 1),
                mention("o", TopType::Task, Some(SubType::Object), 1, 2),
            ],
        };
        s.validate().unwrap();
        let found = match_templates(&s, &RuleSet::default());
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].relation, RelationKind::Related);
    }

    #[test]
    fn long_paths_are_ignored() {
        let mut rules = RuleSet::default();
        rules.rules[0].path_patterns.push("nsubj+dobj".into());
        rules.max_path_len = 1;
        let s = svo(
            mention("t", TopType::Task, None, 0, 1),
            mention("m", TopType::Method, None, 2, 3),
        );
        assert!(match_templates(&s, &rules).is_empty());
    }

    #[test]
    fn invalid_rule_rejected() {
        let mut rules = RuleSet::default();
        rules.rules[0].relation = RelationKind::UsedBy;
        assert!(rules.validate().is_err());
        let mut rules = RuleSet::default();
        rules.rules[2].path_patterns.clear();
        assert!(rules.validate().is_err());
    }

    #[test]
    fn sub_constraint_serde() {
        let spec: TypeSpec =
            serde_json::from_str(r#"{"top_type":"Task","sub_type":["Object","Problem"]}"#).unwrap();
        assert_eq!(
            spec.sub_type,
            SubConstraint::OneOf(vec![SubType::Object, SubType::Problem])
        );
        let spec: TypeSpec =
            serde_json::from_str(r#"{"top_type":"Task","sub_type":"none"}"#).unwrap();
        assert_eq!(spec.sub_type, SubConstraint::Bare);
        let spec: TypeSpec = serde_json::from_str(r#"{"top_type":"Task"}"#).unwrap();
        assert_eq!(spec.sub_type, SubConstraint::Any);
        assert!(serde_json::from_str::<TypeSpec>(r#"{"top_type":"Task","sub_type":"x"}"#).is_err());
    }
}
