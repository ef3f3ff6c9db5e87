//! Class hierarchies: parsing, validation, the inferred class hierarchy and
//! the level/occurrence statistics that parameterize the embedding loss.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense index of a concept inside its [`Ontology`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ConceptId(pub usize);

impl ConceptId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

/// Named concepts with told subsumption and disjointness axioms.
///
/// Subsumptions are stored as `(child, parent)`; disjoint pairs are stored
/// with the smaller id first. Identifiers keep first-appearance order.
#[derive(Debug, Clone, PartialEq)]
pub struct Ontology {
    concepts: Vec<String>,
    index: HashMap<String, ConceptId>,
    subclass: Vec<(ConceptId, ConceptId)>,
    disjoint: Vec<(ConceptId, ConceptId)>,
    leaves: Vec<ConceptId>,
    parents: Vec<Vec<ConceptId>>,
    children: Vec<Vec<ConceptId>>,
}

impl Ontology {
    pub fn len(&self) -> usize {
        self.concepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
    }

    pub fn concepts(&self) -> &[String] {
        &self.concepts
    }

    pub fn ids(&self) -> impl Iterator<Item = ConceptId> + '_ {
        (0..self.concepts.len()).map(ConceptId)
    }

    pub fn name(&self, id: ConceptId) -> &str {
        &self.concepts[id.0]
    }

    pub fn id(&self, name: &str) -> Option<ConceptId> {
        self.index.get(name.trim()).copied()
    }

    pub fn require(&self, name: &str) -> Result<ConceptId> {
        self.id(name)
            .ok_or_else(|| Error::UnknownConcept(name.to_string()))
    }

    pub fn told_subsumptions(&self) -> &[(ConceptId, ConceptId)] {
        &self.subclass
    }

    pub fn disjoint_pairs(&self) -> &[(ConceptId, ConceptId)] {
        &self.disjoint
    }

    pub fn leaves(&self) -> &[ConceptId] {
        &self.leaves
    }

    pub fn leaf_names(&self) -> Vec<String> {
        self.leaves.iter().map(|&l| self.name(l).to_string()).collect()
    }

    pub fn is_leaf(&self, id: ConceptId) -> bool {
        self.leaves.contains(&id)
    }

    /// Told parents of `id`.
    pub fn parents(&self, id: ConceptId) -> &[ConceptId] {
        &self.parents[id.0]
    }

    /// Told children of `id`.
    pub fn children(&self, id: ConceptId) -> &[ConceptId] {
        &self.children[id.0]
    }

    pub fn to_document(&self) -> OntologyDocument {
        let pair = |&(a, b): &(ConceptId, ConceptId)| [self.name(a).to_string(), self.name(b).to_string()];
        OntologyDocument {
            concepts: self.concepts.clone(),
            subclass: self.subclass.iter().map(pair).collect(),
            disjoint: self.disjoint.iter().map(pair).collect(),
            leaves: Some(self.leaf_names()),
        }
    }
}

/// Incrementally assembles an [`Ontology`]. Duplicate axioms are dropped and
/// recorded as warnings; nothing here checks acyclicity (see [`validate`]).
#[derive(Debug, Default)]
pub struct OntologyBuilder {
    concepts: Vec<String>,
    index: HashMap<String, ConceptId>,
    subclass: Vec<(ConceptId, ConceptId)>,
    subclass_seen: HashSet<(ConceptId, ConceptId)>,
    disjoint: Vec<(ConceptId, ConceptId)>,
    disjoint_seen: HashSet<(ConceptId, ConceptId)>,
    leaves: Option<Vec<ConceptId>>,
    warnings: Vec<String>,
}

impl OntologyBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Interns `name` (trimmed), returning the existing id if already known.
    pub fn intern(&mut self, name: &str) -> Result<ConceptId> {
        let name = name.trim();
        if name.is_empty() {
            return Err(Error::Config("empty concept identifier".into()));
        }
        if let Some(&id) = self.index.get(name) {
            return Ok(id);
        }
        let id = ConceptId(self.concepts.len());
        self.concepts.push(name.to_string());
        self.index.insert(name.to_string(), id);
        Ok(id)
    }

    /// Declares a new concept; redeclaring an identifier is an error.
    pub fn declare(&mut self, name: &str) -> Result<ConceptId> {
        if self.index.contains_key(name.trim()) {
            return Err(Error::Config(format!(
                "duplicate concept `{}`",
                name.trim()
            )));
        }
        self.intern(name)
    }

    pub fn lookup(&self, name: &str) -> Result<ConceptId> {
        self.index
            .get(name.trim())
            .copied()
            .ok_or_else(|| Error::UnknownConcept(name.trim().to_string()))
    }

    pub fn subclass(&mut self, child: ConceptId, parent: ConceptId) {
        if self.subclass_seen.insert((child, parent)) {
            self.subclass.push((child, parent));
        } else {
            self.warnings.push(format!(
                "duplicate subclass axiom {} -> {} ignored",
                self.concepts[child.0], self.concepts[parent.0]
            ));
        }
    }

    pub fn disjoint(&mut self, a: ConceptId, b: ConceptId) {
        let key = if a <= b { (a, b) } else { (b, a) };
        if self.disjoint_seen.insert(key) {
            self.disjoint.push(key);
        } else {
            self.warnings.push(format!(
                "duplicate disjointness axiom {} / {} ignored",
                self.concepts[a.0], self.concepts[b.0]
            ));
        }
    }

    pub fn leaf(&mut self, id: ConceptId) {
        let leaves = self.leaves.get_or_insert_with(Vec::new);
        if leaves.contains(&id) {
            self.warnings
                .push(format!("duplicate leaf `{}` ignored", self.concepts[id.0]));
        } else {
            leaves.push(id);
        }
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Finishes the ontology. Without explicit leaves, every concept that has
    /// no told children is a leaf.
    pub fn build(self) -> (Ontology, Vec<String>) {
        let n = self.concepts.len();
        let mut parents = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        for &(c, p) in &self.subclass {
            parents[c.0].push(p);
            children[p.0].push(c);
        }
        let leaves = self.leaves.unwrap_or_else(|| {
            (0..n)
                .filter(|&i| children[i].is_empty())
                .map(ConceptId)
                .collect()
        });
        let ontology = Ontology {
            concepts: self.concepts,
            index: self.index,
            subclass: self.subclass,
            disjoint: self.disjoint,
            leaves,
            parents,
            children,
        };
        (ontology, self.warnings)
    }
}

/// The JSON document form: `{"concepts":[..], "subclass":[[child,parent],..],
/// "disjoint":[[a,b],..], "leaves":[..]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OntologyDocument {
    pub concepts: Vec<String>,
    #[serde(default)]
    pub subclass: Vec<[String; 2]>,
    #[serde(default)]
    pub disjoint: Vec<[String; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leaves: Option<Vec<String>>,
}

/// A validated ontology plus any non-fatal warnings raised while reading it.
#[derive(Debug, Clone)]
pub struct Parsed {
    pub ontology: Ontology,
    pub warnings: Vec<String>,
}

/// Parses and validates an ontology JSON document.
pub fn parse_ontology(text: &str) -> Result<Parsed> {
    let doc: OntologyDocument = serde_json::from_str(text).map_err(|e| Error::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    from_document(&doc)
}

pub fn from_document(doc: &OntologyDocument) -> Result<Parsed> {
    let mut builder = OntologyBuilder::new();
    for name in &doc.concepts {
        builder.declare(name)?;
    }
    for [child, parent] in &doc.subclass {
        let c = builder.lookup(child)?;
        let p = builder.lookup(parent)?;
        builder.subclass(c, p);
    }
    for [a, b] in &doc.disjoint {
        let a = builder.lookup(a)?;
        let b = builder.lookup(b)?;
        builder.disjoint(a, b);
    }
    if let Some(leaves) = &doc.leaves {
        for leaf in leaves {
            let id = builder.lookup(leaf)?;
            builder.leaf(id);
        }
    }
    let (ontology, warnings) = builder.build();
    for w in &warnings {
        log::warn!("{w}");
    }
    let diagnostics = validate(&ontology);
    if !diagnostics.is_empty() {
        return Err(Error::InvalidOntology(diagnostics));
    }
    Ok(Parsed { ontology, warnings })
}

/// A violated ontology invariant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Diagnostic {
    /// Subsumption cycle; the witness lists concepts along the cycle.
    Cycle { witness: Vec<String> },
    /// A disjoint pair where one member subsumes the other (or `A ⊥ A`).
    DisjointSubsumption { sub: String, sup: String },
    /// A concept whose ancestors include both members of a disjoint pair.
    Unsatisfiable {
        concept: String,
        disjoint: (String, String),
    },
    LeafHasChild { leaf: String, child: String },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::Cycle { witness } => {
                write!(f, "subsumption cycle {}", witness.join(" -> "))?;
                if let Some(first) = witness.first() {
                    write!(f, " -> {first}")?;
                }
                Ok(())
            }
            Diagnostic::DisjointSubsumption { sub, sup } => {
                write!(f, "`{sub}` is subsumed by `{sup}` but declared disjoint from it")
            }
            Diagnostic::Unsatisfiable { concept, disjoint } => write!(
                f,
                "`{concept}` is unsatisfiable: its ancestors include disjoint `{}` and `{}`",
                disjoint.0, disjoint.1
            ),
            Diagnostic::LeafHasChild { leaf, child } => {
                write!(f, "leaf `{leaf}` has told child `{child}`")
            }
        }
    }
}

/// Reflexive-transitive ancestor sets by BFS; tolerates cycles.
fn reachability(ontology: &Ontology) -> Vec<BTreeSet<ConceptId>> {
    ontology
        .ids()
        .map(|start| {
            let mut seen = BTreeSet::new();
            let mut queue: VecDeque<ConceptId> = ontology.parents(start).iter().copied().collect();
            while let Some(v) = queue.pop_front() {
                if seen.insert(v) {
                    queue.extend(ontology.parents(v).iter().copied());
                }
            }
            seen
        })
        .collect()
}

/// Shortest cycle through `start` following parent edges, as a list of ids.
fn cycle_through(ontology: &Ontology, start: ConceptId) -> Option<Vec<ConceptId>> {
    let mut pred: HashMap<ConceptId, ConceptId> = HashMap::new();
    let mut queue = VecDeque::from([start]);
    let mut visited = HashSet::from([start]);
    while let Some(v) = queue.pop_front() {
        for &p in ontology.parents(v) {
            if p == start {
                let mut path = vec![v];
                let mut cur = v;
                while cur != start {
                    cur = pred[&cur];
                    path.push(cur);
                }
                path.reverse();
                return Some(path);
            }
            if visited.insert(p) {
                pred.insert(p, v);
                queue.push_back(p);
            }
        }
    }
    None
}

fn cycle_witnesses(ontology: &Ontology, reach: &[BTreeSet<ConceptId>]) -> Vec<Vec<ConceptId>> {
    let mut covered = vec![false; ontology.len()];
    let mut cycles = Vec::new();
    for v in ontology.ids() {
        if covered[v.0] || !reach[v.0].contains(&v) {
            continue;
        }
        for u in ontology.ids() {
            if reach[v.0].contains(&u) && reach[u.0].contains(&v) {
                covered[u.0] = true;
            }
        }
        if let Some(cycle) = cycle_through(ontology, v) {
            cycles.push(cycle);
        }
    }
    cycles
}

/// Checks every ontology invariant; an empty list means the ontology is sound.
pub fn validate(ontology: &Ontology) -> Vec<Diagnostic> {
    let reach = reachability(ontology);
    let names = |ids: &[ConceptId]| ids.iter().map(|&i| ontology.name(i).to_string()).collect();
    let mut out: Vec<Diagnostic> = cycle_witnesses(ontology, &reach)
        .into_iter()
        .map(|c| Diagnostic::Cycle { witness: names(&c) })
        .collect();

    let subsumed = |sub: ConceptId, sup: ConceptId| sub == sup || reach[sub.0].contains(&sup);
    for &(a, b) in ontology.disjoint_pairs() {
        let hit = if subsumed(a, b) {
            Some((a, b))
        } else if subsumed(b, a) {
            Some((b, a))
        } else {
            None
        };
        if let Some((sub, sup)) = hit {
            out.push(Diagnostic::DisjointSubsumption {
                sub: ontology.name(sub).to_string(),
                sup: ontology.name(sup).to_string(),
            });
        }
    }

    for c in ontology.ids() {
        let has = |x: ConceptId| x == c || reach[c.0].contains(&x);
        if let Some(&(a, b)) = ontology.disjoint_pairs().iter().find(|&&(a, b)| has(a) && has(b)) {
            out.push(Diagnostic::Unsatisfiable {
                concept: ontology.name(c).to_string(),
                disjoint: (ontology.name(a).to_string(), ontology.name(b).to_string()),
            });
        }
    }

    for &leaf in ontology.leaves() {
        if let Some(&child) = ontology.children(leaf).first() {
            out.push(Diagnostic::LeafHasChild {
                leaf: ontology.name(leaf).to_string(),
                child: ontology.name(child).to_string(),
            });
        }
    }
    out
}

/// Parents-before-children order (Kahn). On a cycle, returns the witness.
fn topological_order(ontology: &Ontology) -> Result<Vec<ConceptId>> {
    let mut pending: Vec<usize> = ontology.ids().map(|v| ontology.parents(v).len()).collect();
    let mut queue: VecDeque<ConceptId> = ontology.ids().filter(|v| pending[v.0] == 0).collect();
    let mut order = Vec::with_capacity(ontology.len());
    while let Some(v) = queue.pop_front() {
        order.push(v);
        for &c in ontology.children(v) {
            pending[c.0] -= 1;
            if pending[c.0] == 0 {
                queue.push_back(c);
            }
        }
    }
    if order.len() == ontology.len() {
        return Ok(order);
    }
    let reach = reachability(ontology);
    let witness = cycle_witnesses(ontology, &reach)
        .into_iter()
        .next()
        .unwrap_or_default();
    Err(Error::Cycle(
        witness.iter().map(|&i| ontology.name(i).to_string()).collect(),
    ))
}

/// The inferred class hierarchy: every entailed strict subsumption `(P, Q)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ich {
    pairs: Vec<(ConceptId, ConceptId)>,
    ancestors: Vec<BTreeSet<ConceptId>>,
}

impl Ich {
    /// Pairs `(sub, sup)` sorted by `(sub, sup)`.
    pub fn pairs(&self) -> &[(ConceptId, ConceptId)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn contains(&self, sub: ConceptId, sup: ConceptId) -> bool {
        self.ancestors
            .get(sub.0)
            .is_some_and(|a| a.contains(&sup))
    }

    /// Strict ancestors of `id`.
    pub fn ancestors(&self, id: ConceptId) -> &BTreeSet<ConceptId> {
        &self.ancestors[id.0]
    }

    pub fn named_pairs(&self, ontology: &Ontology) -> Vec<[String; 2]> {
        self.pairs
            .iter()
            .map(|&(p, q)| [ontology.name(p).to_string(), ontology.name(q).to_string()])
            .collect()
    }
}

/// Transitive closure of the told subsumptions, excluding reflexive pairs.
pub fn compute_ich(ontology: &Ontology) -> Result<Ich> {
    let order = topological_order(ontology)?;
    let mut ancestors: Vec<BTreeSet<ConceptId>> = vec![BTreeSet::new(); ontology.len()];
    for v in order {
        let mut acc = BTreeSet::new();
        for &p in ontology.parents(v) {
            acc.insert(p);
            acc.extend(ancestors[p.0].iter().copied());
        }
        ancestors[v.0] = acc;
    }
    let pairs = ancestors
        .iter()
        .enumerate()
        .flat_map(|(i, set)| set.iter().map(move |&q| (ConceptId(i), q)))
        .collect();
    Ok(Ich { pairs, ancestors })
}

/// What counts as an occurrence of a concept in the extracted axioms.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OccurrenceCounting {
    /// ICH subsumptions plus asserted disjointness pairs.
    #[default]
    Inferred,
    /// Told subsumptions plus asserted disjointness pairs.
    Told,
}

/// Level and occurrence statistics, indexed by [`ConceptId`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HierarchyStats {
    pub total_levels: usize,
    pub level: Vec<usize>,
    pub occurrences: Vec<usize>,
}

impl HierarchyStats {
    pub fn level(&self, id: ConceptId) -> usize {
        self.level[id.0]
    }

    pub fn occurrences(&self, id: ConceptId) -> usize {
        self.occurrences[id.0]
    }
}

pub fn compute_stats(ontology: &Ontology, ich: &Ich) -> Result<HierarchyStats> {
    compute_stats_with(ontology, ich, OccurrenceCounting::Inferred)
}

/// Levels follow the longest told path to a root (roots are level 1).
pub fn compute_stats_with(
    ontology: &Ontology,
    ich: &Ich,
    counting: OccurrenceCounting,
) -> Result<HierarchyStats> {
    let order = topological_order(ontology)?;
    let mut level = vec![1usize; ontology.len()];
    for v in order {
        level[v.0] = ontology
            .parents(v)
            .iter()
            .map(|p| level[p.0] + 1)
            .max()
            .unwrap_or(1);
    }
    let total_levels = level.iter().copied().max().unwrap_or(0);

    let mut occurrences = vec![0usize; ontology.len()];
    let subsumptions = match counting {
        OccurrenceCounting::Inferred => ich.pairs(),
        OccurrenceCounting::Told => ontology.told_subsumptions(),
    };
    for &(a, b) in subsumptions.iter().chain(ontology.disjoint_pairs()) {
        occurrences[a.0] += 1;
        occurrences[b.0] += 1;
    }
    Ok(HierarchyStats {
        total_levels,
        level,
        occurrences,
    })
}

/// Parses `child<TAB>parent` lines; blank lines and `#` comments are skipped.
pub fn parse_hypernym_edges(text: &str) -> Result<Vec<(String, String)>> {
    let mut edges = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = raw.split('\t').map(str::trim);
        match (fields.next(), fields.next(), fields.next()) {
            (Some(c), Some(p), None) if !c.is_empty() && !p.is_empty() => {
                edges.push((c.to_string(), p.to_string()))
            }
            _ => {
                return Err(Error::Parse {
                    path: "hypernym edges".into(),
                    message: format!("line {}: expected `child<TAB>parent`", lineno + 1),
                })
            }
        }
    }
    Ok(edges)
}

/// One label per line; blank lines and `#` comments are skipped.
pub fn parse_label_list(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

/// Builds an ontology from the ancestor chains of `leaf_labels` in a
/// hypernym edge list. With `sibling_disjoint`, leaves sharing a told parent
/// are made pairwise disjoint.
pub fn ingest_hypernym_edges(
    edges: &[(String, String)],
    leaf_labels: &[String],
    sibling_disjoint: bool,
) -> Result<Ontology> {
    let mut all = OntologyBuilder::new();
    for (c, p) in edges {
        let c = all.intern(c)?;
        let p = all.intern(p)?;
        all.subclass(c, p);
    }
    let (graph, _) = all.build();
    topological_order(&graph)?;

    let mut builder = OntologyBuilder::new();
    let mut leaf_ids = Vec::with_capacity(leaf_labels.len());
    for label in leaf_labels {
        let start = graph.id(label).ok_or_else(|| Error::UnknownConcept(label.trim().to_string()))?;
        let leaf = builder.intern(graph.name(start))?;
        builder.leaf(leaf);
        leaf_ids.push(leaf);
        let mut queue = VecDeque::from([start]);
        let mut seen = HashSet::from([start]);
        while let Some(v) = queue.pop_front() {
            let child = builder.intern(graph.name(v))?;
            for &p in graph.parents(v) {
                let parent = builder.intern(graph.name(p))?;
                if !builder.subclass_seen.contains(&(child, parent)) {
                    builder.subclass(child, parent);
                }
                if seen.insert(p) {
                    queue.push_back(p);
                }
            }
        }
    }

    if sibling_disjoint {
        let mut by_parent: Vec<(ConceptId, Vec<ConceptId>)> = Vec::new();
        for &leaf in &leaf_ids {
            let parents: Vec<ConceptId> = builder
                .subclass
                .iter()
                .filter(|(c, _)| *c == leaf)
                .map(|&(_, p)| p)
                .collect();
            for p in parents {
                match by_parent.iter_mut().find(|(q, _)| *q == p) {
                    Some((_, group)) => group.push(leaf),
                    None => by_parent.push((p, vec![leaf])),
                }
            }
        }
        for (_, group) in by_parent {
            for (i, &a) in group.iter().enumerate() {
                for &b in &group[i + 1..] {
                    let key = if a <= b { (a, b) } else { (b, a) };
                    if !builder.disjoint_seen.contains(&key) {
                        builder.disjoint(a, b);
                    }
                }
            }
        }
    }

    let (ontology, _) = builder.build();
    let diagnostics = validate(&ontology);
    if !diagnostics.is_empty() {
        return Err(Error::InvalidOntology(diagnostics));
    }
    Ok(ontology)
}

/// Which sibling pairs a generated tree declares disjoint.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SiblingDisjointness {
    None,
    Leaves,
    #[default]
    All,
}

/// A balanced tree with `branching[i]` children per node at depth `i`.
///
/// Names encode the path from the root: `c`, `c.0`, `c.0.2`, ...
pub fn synthetic_tree(branching: &[usize], disjointness: SiblingDisjointness) -> Ontology {
    let mut builder = OntologyBuilder::new();
    let root = builder.intern("c").expect("non-empty name");
    let mut frontier = vec![(root, "c".to_string())];
    let depth = branching.len();
    for (d, &width) in branching.iter().enumerate() {
        let mut next = Vec::new();
        for (parent, name) in &frontier {
            let mut siblings = Vec::with_capacity(width);
            for k in 0..width {
                let child_name = format!("{name}.{k}");
                let child = builder.intern(&child_name).expect("non-empty name");
                builder.subclass(child, *parent);
                siblings.push(child);
                next.push((child, child_name));
            }
            let declare = match disjointness {
                SiblingDisjointness::None => false,
                SiblingDisjointness::Leaves => d + 1 == depth,
                SiblingDisjointness::All => true,
            };
            if declare {
                for (i, &a) in siblings.iter().enumerate() {
                    for &b in &siblings[i + 1..] {
                        builder.disjoint(a, b);
                    }
                }
            }
        }
        frontier = next;
    }
    builder.build().0
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const POODLE: &str = r#"{
        "concepts": ["entity", "animal", "dog", "poodle", "retriever", "street_sign"],
        "subclass": [["animal", "entity"], ["dog", "animal"], ["poodle", "dog"],
                     ["retriever", "dog"], ["street_sign", "entity"]],
        "disjoint": [["poodle", "retriever"]],
        "leaves": ["poodle", "retriever", "street_sign"]
    }"#;

    fn build(subclass: &[(&str, &str)], disjoint: &[(&str, &str)]) -> Ontology {
        let mut b = OntologyBuilder::new();
        for (c, p) in subclass {
            let c = b.intern(c).unwrap();
            let p = b.intern(p).unwrap();
            b.subclass(c, p);
        }
        for (x, y) in disjoint {
            let x = b.intern(x).unwrap();
            let y = b.intern(y).unwrap();
            b.disjoint(x, y);
        }
        b.build().0
    }

    #[test]
    fn minimal_document() {
        let p = parse_ontology(r#"{"concepts":["A","B"],"subclass":[["A","B"]],"disjoint":[]}"#).unwrap();
        assert_eq!(p.ontology.len(), 2);
        assert_eq!(p.ontology.told_subsumptions().len(), 1);
        assert_eq!(p.ontology.leaf_names(), vec!["A"]);
    }

    #[test]
    fn self_subsumption_is_a_cycle() {
        let err = parse_ontology(r#"{"concepts":["A"],"subclass":[["A","A"]],"disjoint":[]}"#).unwrap_err();
        match err {
            Error::InvalidOntology(d) => {
                assert!(matches!(&d[0], Diagnostic::Cycle { witness } if witness == &["A"]))
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn syntax_error_reports_position() {
        let err = parse_ontology("{\n  \"concepts\": [\"A\",\n  }").unwrap_err();
        assert!(matches!(err, Error::Syntax { line: 3, .. }), "{err:?}");
    }

    #[test]
    fn unknown_reference_is_an_error() {
        let err = parse_ontology(r#"{"concepts":["A"],"subclass":[["A","B"]]}"#).unwrap_err();
        assert!(matches!(err, Error::UnknownConcept(ref n) if n == "B"));
    }

    #[test]
    fn duplicate_axioms_warn_and_dedupe() {
        let p = parse_ontology(
            r#"{"concepts":["A","B"],"subclass":[["A","B"],["A","B"]],"disjoint":[]}"#,
        )
        .unwrap();
        assert_eq!(p.ontology.told_subsumptions().len(), 1);
        assert_eq!(p.warnings.len(), 1);
    }

    #[test]
    fn identifiers_are_trimmed_and_unique() {
        let p = parse_ontology(r#"{"concepts":[" Dog ","cat"],"subclass":[["Dog ","cat"]]}"#).unwrap();
        assert_eq!(p.ontology.concepts(), &["Dog", "cat"]);
        assert!(parse_ontology(r#"{"concepts":["A"," A"]}"#).is_err());
    }

    #[test]
    fn poodle_fixture_counts() {
        let p = parse_ontology(POODLE).unwrap();
        assert_eq!(p.ontology.len(), 6);
        assert_eq!(p.ontology.told_subsumptions().len(), 5);
        assert_eq!(p.ontology.disjoint_pairs().len(), 1);
    }

    #[test]
    fn validate_reports_two_cycle() {
        let o = build(&[("A", "B"), ("B", "A")], &[]);
        let d = validate(&o);
        assert_eq!(
            d,
            vec![Diagnostic::Cycle {
                witness: vec!["A".into(), "B".into()]
            }]
        );
    }

    #[test]
    fn validate_reports_unsatisfiable_concept() {
        let o = build(&[("C", "A"), ("C", "B")], &[("A", "B")]);
        let d = validate(&o);
        assert_eq!(
            d,
            vec![Diagnostic::Unsatisfiable {
                concept: "C".into(),
                disjoint: ("A".into(), "B".into())
            }]
        );
    }

    #[test]
    fn validate_accepts_acyclic_fixture() {
        let p = parse_ontology(POODLE).unwrap();
        assert!(validate(&p.ontology).is_empty());
    }

    #[test]
    fn validate_flags_disjoint_subsumption_and_leaf_children() {
        let mut b = OntologyBuilder::new();
        let a = b.intern("A").unwrap();
        let c = b.intern("B").unwrap();
        b.subclass(a, c);
        b.disjoint(a, c);
        b.leaf(c);
        let (o, _) = b.build();
        let d = validate(&o);
        assert!(d.contains(&Diagnostic::DisjointSubsumption {
            sub: "A".into(),
            sup: "B".into()
        }));
        assert!(d.contains(&Diagnostic::LeafHasChild {
            leaf: "B".into(),
            child: "A".into()
        }));
    }

    #[test]
    fn ich_chain() {
        let o = build(&[("A", "B"), ("B", "C")], &[]);
        let ich = compute_ich(&o).unwrap();
        let mut got = ich.named_pairs(&o);
        got.sort();
        assert_eq!(
            got,
            vec![
                ["A".to_string(), "B".to_string()],
                ["A".to_string(), "C".to_string()],
                ["B".to_string(), "C".to_string()]
            ]
        );
    }

    #[test]
    fn ich_empty() {
        let o = build(&[], &[]);
        assert!(compute_ich(&o).unwrap().is_empty());
    }

    #[test]
    fn ich_rejects_cycle() {
        let o = build(&[("A", "B"), ("B", "C"), ("C", "A")], &[]);
        match compute_ich(&o) {
            Err(Error::Cycle(w)) => assert_eq!(w.len(), 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn stats_single_root_and_chain() {
        let mut b = OntologyBuilder::new();
        b.intern("root").unwrap();
        let (o, _) = b.build();
        let s = compute_stats(&o, &compute_ich(&o).unwrap()).unwrap();
        assert_eq!((s.level[0], s.total_levels), (1, 1));

        let o = build(&[("A", "B"), ("B", "C")], &[]);
        let s = compute_stats(&o, &compute_ich(&o).unwrap()).unwrap();
        let lvl = |n| s.level(o.id(n).unwrap());
        assert_eq!((lvl("C"), lvl("B"), lvl("A"), s.total_levels), (1, 2, 3, 3));
    }

    #[test]
    fn levels_use_longest_path() {
        // D has a shortcut parent at level 1 and a deep parent at level 3.
        let o = build(&[("B", "A"), ("C", "B"), ("D", "C"), ("D", "A")], &[]);
        let s = compute_stats(&o, &compute_ich(&o).unwrap()).unwrap();
        assert_eq!(s.level(o.id("D").unwrap()), 4);
    }

    #[test]
    fn told_occurrence_counting() {
        let o = build(&[("A", "B"), ("B", "C")], &[]);
        let ich = compute_ich(&o).unwrap();
        let told = compute_stats_with(&o, &ich, OccurrenceCounting::Told).unwrap();
        let inferred = compute_stats(&o, &ich).unwrap();
        let a = o.id("A").unwrap();
        assert_eq!(told.occurrences(a), 1);
        assert_eq!(inferred.occurrences(a), 2);
    }

    #[test]
    fn ingest_chain() {
        let edges = parse_hypernym_edges("poodle\tdog\ndog\tanimal\n# comment\nanimal\tentity\n").unwrap();
        let o = ingest_hypernym_edges(&edges, &["poodle".into()], false).unwrap();
        assert_eq!(o.len(), 4);
        assert_eq!(o.leaf_names(), vec!["poodle"]);
        assert!(o.disjoint_pairs().is_empty());
    }

    #[test]
    fn ingest_merges_shared_chains() {
        let edges = parse_hypernym_edges(
            "poodle\tdog\nretriever\tdog\ndog\tanimal\nanimal\tentity\nsign\tentity\n",
        )
        .unwrap();
        let leaves = vec!["poodle".to_string(), "retriever".into(), "sign".into()];
        let o = ingest_hypernym_edges(&edges, &leaves, true).unwrap();
        assert_eq!(o.len(), 6);
        assert_eq!(o.told_subsumptions().len(), 5);
        let named: Vec<_> = o
            .disjoint_pairs()
            .iter()
            .map(|&(a, b)| (o.name(a), o.name(b)))
            .collect();
        assert_eq!(named, vec![("poodle", "retriever")]);
    }

    #[test]
    fn ingest_errors() {
        let edges = parse_hypernym_edges("a\tb\n").unwrap();
        assert!(matches!(
            ingest_hypernym_edges(&edges, &["zzz".into()], false),
            Err(Error::UnknownConcept(_))
        ));
        let cyclic = parse_hypernym_edges("a\tb\nb\ta\n").unwrap();
        assert!(matches!(
            ingest_hypernym_edges(&cyclic, &["a".into()], false),
            Err(Error::Cycle(_))
        ));
        assert!(parse_hypernym_edges("only-one-field\n").is_err());
    }

    #[test]
    fn synthetic_tree_shape() {
        let o = synthetic_tree(&[2, 2, 5], SiblingDisjointness::All);
        assert_eq!(o.leaves().len(), 20);
        assert_eq!(o.len(), 27);
        // 1 pair at depth 1, 2 at depth 2, 4 groups of C(5,2) at the leaves.
        assert_eq!(o.disjoint_pairs().len(), 1 + 2 + 40);
        assert!(validate(&o).is_empty());
        let s = compute_stats(&o, &compute_ich(&o).unwrap()).unwrap();
        assert_eq!(s.total_levels, 4);
    }
}
