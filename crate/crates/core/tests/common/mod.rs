//! Independent oracles shared by the integration tests. Nothing here calls
//! into the library's own geometry or graph code.
#![allow(dead_code)]

use std::collections::BTreeSet;

use geoball::ontology::{parse_ontology, Ontology, OntologyBuilder};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const POODLE: &str = include_str!("../../fixtures/poodle.json");

pub fn poodle() -> Ontology {
    parse_ontology(POODLE).unwrap().ontology
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        s += (a[i] - b[i]) * (a[i] - b[i]);
    }
    s.sqrt()
}

pub fn norm(a: &[f64]) -> f64 {
    dist(a, &vec![0.0; a.len()])
}

/// Ball P inside ball Q.
pub fn inside(cp: &[f64], rp: f64, cq: &[f64], rq: f64) -> bool {
    dist(cp, cq) <= rq - rp
}

/// Every (u, v) with v reachable from u along `edges` (u → v), u ≠ v, by
/// depth-first search from each node.
pub fn reachability(n: usize, edges: &[(usize, usize)]) -> BTreeSet<(usize, usize)> {
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in edges {
        adj[u].push(v);
    }
    let mut out = BTreeSet::new();
    for start in 0..n {
        let mut seen = vec![false; n];
        let mut stack = vec![start];
        while let Some(u) = stack.pop() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        for (v, &s) in seen.iter().enumerate() {
            if s && v != start {
                out.insert((start, v));
            }
        }
    }
    out
}

/// Random DAG on `n` nodes: edges only from higher to lower index, so node
/// order is a topological order. Returns (child, parent) pairs.
pub fn random_dag(n: usize, p: f64, seed: u64) -> Vec<(usize, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for c in 1..n {
        for q in 0..c {
            if rng.random_bool(p) {
                edges.push((c, q));
            }
        }
    }
    edges
}

pub fn build_ontology(n: usize, edges: &[(usize, usize)], disjoint: &[(usize, usize)]) -> Ontology {
    let mut b = OntologyBuilder::new();
    let ids: Vec<_> = (0..n).map(|i| b.declare(&format!("n{i}")).unwrap()).collect();
    for &(c, p) in edges {
        b.subclass(ids[c], ids[p]);
    }
    for &(x, y) in disjoint {
        b.disjoint(ids[x], ids[y]);
    }
    b.build().0
}

pub fn f1(tp: usize, fp: usize, fn_: usize) -> f64 {
    let p = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
    let r = if tp + fn_ == 0 { 0.0 } else { tp as f64 / (tp + fn_) as f64 };
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Ball-embedding loss written term by term from its definition.
pub fn embedding_loss(
    space: &geoball::embedding::BallSpace,
    o: &Ontology,
    ich: &geoball::ontology::Ich,
    stats: &geoball::ontology::HierarchyStats,
    cfg: &geoball::embedding::EmbedConfig,
) -> f64 {
    let gd = cfg.gamma_disjoint.unwrap_or(cfg.gamma);
    let mut total = 0.0;
    for &(p, q) in ich.pairs() {
        let (p, q) = (p.0, q.0);
        let d = dist(space.centre(p), space.centre(q));
        total += (d + space.radius(p) - space.radius(q) - cfg.gamma).max(0.0);
    }
    for &(p, q) in o.disjoint_pairs() {
        let (p, q) = (p.0, q.0);
        let d = dist(space.centre(p), space.centre(q));
        total += (space.radius(p) + space.radius(q) + gd - d).max(0.0);
    }
    for i in 0..space.len() {
        let floor = cfg.psi * ((stats.total_levels - stats.level[i]) as f64).sqrt();
        total += (floor - space.radius(i)).max(0.0);
        total += stats.occurrences[i] as f64 * (norm(space.centre(i)) - cfg.phi).abs();
    }
    total
}

/// Projector ranking loss from its definition.
pub fn ranking_loss(h: &[f64], pos: (&[f64], f64), negs: &[(&[f64], f64)], mu: f64, nu: f64) -> f64 {
    let mut l = (dist(pos.0, h) - mu * pos.1).max(0.0);
    for (c, r) in negs {
        l += (nu * r - dist(c, h)).max(0.0);
    }
    l
}

/// Brute-force (f1_all, f1_leaf, s_d) for a space indexed like `o`, from
/// the told edges alone.
pub fn score_oracle(space: &geoball::embedding::BallSpace, o: &Ontology) -> (f64, f64, usize) {
    let n = o.len();
    let edges: Vec<(usize, usize)> = o.told_subsumptions().iter().map(|&(c, p)| (c.0, p.0)).collect();
    let leaves: Vec<usize> = o.leaves().iter().map(|l| l.0).collect();
    let truth = reachability(n, &edges);
    let holds = |p: usize, q: usize| inside(space.centre(p), space.radius(p), space.centre(q), space.radius(q));
    let count = |pairs: &mut dyn Iterator<Item = (usize, usize)>| {
        let (mut tp, mut fp, mut fn_) = (0, 0, 0);
        for (p, q) in pairs {
            match (truth.contains(&(p, q)), holds(p, q)) {
                (true, true) => tp += 1,
                (false, true) => fp += 1,
                (true, false) => fn_ += 1,
                _ => {}
            }
        }
        f1(tp, fp, fn_)
    };
    let all = count(&mut (0..n).flat_map(|p| (0..n).map(move |q| (p, q))).filter(|(p, q)| p != q));
    let mut targets: BTreeSet<usize> = leaves.iter().copied().collect();
    for &(c, p) in &edges {
        if leaves.contains(&c) {
            targets.insert(p);
        }
    }
    let leaf = count(
        &mut leaves
            .iter()
            .flat_map(|&p| targets.iter().map(move |&q| (p, q)))
            .filter(|(p, q)| p != q),
    );
    let mut sd = 0;
    for (i, &a) in leaves.iter().enumerate() {
        for &b in &leaves[i + 1..] {
            if dist(space.centre(a), space.centre(b)) >= space.radius(a) + space.radius(b) {
                sd += 1;
            }
        }
    }
    (all, leaf, sd)
}

/// "Inside with the smallest ‖c − h‖ − r, else nearest centre; first wins
/// ties" over `(centre, radius)` candidates; returns the winning index.
pub fn classify_oracle(h: &[f64], candidates: &[(&[f64], f64)]) -> usize {
    let mut inside: Option<(usize, f64)> = None;
    let mut near: Option<(usize, f64)> = None;
    for (k, (c, r)) in candidates.iter().enumerate() {
        let d = dist(c, h);
        let u = d - r;
        if u <= 0.0 && inside.is_none_or(|(_, b)| u < b) {
            inside = Some((k, u));
        }
        if near.is_none_or(|(_, b)| d < b) {
            near = Some((k, d));
        }
    }
    inside.or(near).unwrap().0
}
