//! Hard negatives: k-means over leaf-ball centres; classes sharing a cluster
//! serve as each other's negatives in the ranking loss.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::embedding::BallSpace;
use crate::error::{Error, Result};
use crate::linalg;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KMeansConfig {
    pub k: usize,
    pub seed: u64,
    pub max_iters: usize,
    /// Independent k-means++ restarts; the lowest-SSE run is kept.
    pub restarts: usize,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        KMeansConfig {
            k: 1,
            seed: 42,
            max_iters: 100,
            restarts: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    /// Cluster index per point, numbered by first appearance.
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    pub sse: f64,
    pub iterations: usize,
}

impl Clustering {
    pub fn k(&self) -> usize {
        self.centroids.len()
    }

    /// Point indices of every cluster.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k()];
        for (i, &c) in self.assignments.iter().enumerate() {
            out[c].push(i);
        }
        out
    }
}

/// Lloyd iterations from k-means++ seeding, best of `restarts` runs.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64, max_iters: usize) -> Result<Clustering> {
    kmeans_with(
        points,
        &KMeansConfig {
            k,
            seed,
            max_iters,
            ..KMeansConfig::default()
        },
    )
}

pub fn kmeans_with(points: &[Vec<f64>], config: &KMeansConfig) -> Result<Clustering> {
    let k = config.k;
    if k == 0 || k > points.len() {
        return Err(Error::KOutOfRange {
            k,
            points: points.len(),
        });
    }
    let dim = points[0].len();
    for p in points {
        linalg::check_dims(dim, p.len())?;
    }
    let mut best: Option<Clustering> = None;
    for restart in 0..config.restarts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(restart as u64);
        let run = lloyd(points, plus_plus(points, k, &mut rng), config.max_iters);
        if best.as_ref().is_none_or(|b| run.sse < b.sse) {
            best = Some(run);
        }
    }
    Ok(canonical(best.expect("at least one restart")))
}

fn plus_plus(points: &[Vec<f64>], k: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut d2: Vec<f64> = points
        .iter()
        .map(|p| linalg::squared_distance(p, &points[chosen[0]]))
        .collect();
    while chosen.len() < k {
        let next = match WeightedIndex::new(&d2) {
            Ok(w) => w.sample(rng),
            // All remaining mass is zero: duplicates only, pick any unused point.
            Err(_) => {
                let free: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
                free[rng.random_range(0..free.len())]
            }
        };
        chosen.push(next);
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(linalg::squared_distance(p, &points[next]));
        }
    }
    chosen.into_iter().map(|i| points[i].clone()).collect()
}

fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (j, c) in centroids.iter().enumerate() {
        let d = linalg::squared_distance(point, c);
        if d < best_d {
            best_d = d;
            best = j;
        }
    }
    best
}

fn recompute(points: &[Vec<f64>], assignments: &[usize], centroids: &mut [Vec<f64>]) {
    let dim = points[0].len();
    let mut counts = vec![0usize; centroids.len()];
    let mut sums = vec![vec![0.0; dim]; centroids.len()];
    for (p, &a) in points.iter().zip(assignments) {
        counts[a] += 1;
        sums[a].iter_mut().zip(p).for_each(|(s, x)| *s += x);
    }
    for (j, c) in centroids.iter_mut().enumerate() {
        if counts[j] > 0 {
            *c = sums[j].iter().map(|s| s / counts[j] as f64).collect();
        }
    }
}

/// Moves the point farthest from its centroid in the largest cluster into
/// each empty cluster.
fn repair_empty(points: &[Vec<f64>], assignments: &mut [usize], centroids: &mut [Vec<f64>]) {
    loop {
        let k = centroids.len();
        let mut counts = vec![0usize; k];
        assignments.iter().for_each(|&a| counts[a] += 1);
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            return;
        };
        let largest = (0..k).max_by_key(|&j| (counts[j], std::cmp::Reverse(j))).unwrap();
        let victim = (0..points.len())
            .filter(|&i| assignments[i] == largest)
            .max_by(|&a, &b| {
                let da = linalg::squared_distance(&points[a], &centroids[largest]);
                let db = linalg::squared_distance(&points[b], &centroids[largest]);
                da.partial_cmp(&db).unwrap().then(b.cmp(&a))
            })
            .unwrap();
        assignments[victim] = empty;
        centroids[empty] = points[victim].clone();
        recompute(points, assignments, centroids);
    }
}

fn lloyd(points: &[Vec<f64>], mut centroids: Vec<Vec<f64>>, max_iters: usize) -> Clustering {
    let mut assignments: Vec<usize> = points.iter().map(|p| nearest(p, &centroids)).collect();
    repair_empty(points, &mut assignments, &mut centroids);
    recompute(points, &assignments, &mut centroids);
    let mut iterations = 1;
    while iterations < max_iters {
        let next: Vec<usize> = points.iter().map(|p| nearest(p, &centroids)).collect();
        if next == assignments {
            break;
        }
        assignments = next;
        repair_empty(points, &mut assignments, &mut centroids);
        recompute(points, &assignments, &mut centroids);
        iterations += 1;
    }
    let sse = points
        .iter()
        .zip(&assignments)
        .map(|(p, &a)| linalg::squared_distance(p, &centroids[a]))
        .sum();
    Clustering {
        assignments,
        centroids,
        sse,
        iterations,
    }
}

/// Renumbers clusters in order of first appearance.
fn canonical(c: Clustering) -> Clustering {
    let mut map = vec![usize::MAX; c.centroids.len()];
    let mut next = 0;
    for &a in &c.assignments {
        if map[a] == usize::MAX {
            map[a] = next;
            next += 1;
        }
    }
    let mut centroids = vec![Vec::new(); c.centroids.len()];
    for (old, &new) in map.iter().enumerate() {
        centroids[new] = c.centroids[old].clone();
    }
    Clustering {
        assignments: c.assignments.iter().map(|&a| map[a]).collect(),
        centroids,
        sse: c.sse,
        iterations: c.iterations,
    }
}

/// Cluster partition of the leaf classes and the negative set of each class.
#[derive(Debug, Clone, PartialEq)]
pub struct NegativeSets {
    pub clusters: Vec<Vec<String>>,
    negatives: Vec<(String, Vec<String>)>,
}

impl NegativeSets {
    pub fn from_map(negatives: Vec<(String, Vec<String>)>) -> Self {
        NegativeSets {
            clusters: Vec::new(),
            negatives,
        }
    }

    pub fn classes(&self) -> impl Iterator<Item = &str> {
        self.negatives.iter().map(|(c, _)| c.as_str())
    }

    pub fn get(&self, class: &str) -> Option<&[String]> {
        self.negatives
            .iter()
            .find(|(c, _)| c == class)
            .map(|(_, n)| n.as_slice())
    }

    pub fn len(&self) -> usize {
        self.negatives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.negatives.is_empty()
    }

    /// JSON object mapping each class to its negatives, in class order.
    pub fn to_json(&self) -> Value {
        let map: Map<String, Value> = self
            .negatives
            .iter()
            .map(|(c, n)| (c.clone(), Value::from(n.clone())))
            .collect();
        Value::Object(map)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text)?;
        let obj = value.as_object().ok_or_else(|| Error::Parse {
            path: "negatives".into(),
            message: "expected an object mapping class to negatives".into(),
        })?;
        let mut negatives = Vec::with_capacity(obj.len());
        for (class, list) in obj {
            negatives.push((class.clone(), serde_json::from_value(list.clone())?));
        }
        Ok(NegativeSets::from_map(negatives))
    }
}

/// Default cluster count: `⌈√#leaves⌉`.
pub fn default_k(leaves: usize) -> usize {
    (leaves as f64).sqrt().ceil() as usize
}

/// Clusters the leaf centres; every class's negatives are the other members
/// of its cluster, or its nearest other class when its cluster is a singleton.
pub fn build_negative_sets(
    space: &BallSpace,
    leaves: &[String],
    k: Option<usize>,
    seed: u64,
) -> Result<NegativeSets> {
    let k = k.unwrap_or_else(|| default_k(leaves.len()));
    if k == 0 || k > leaves.len() {
        return Err(Error::KOutOfRange {
            k,
            points: leaves.len(),
        });
    }
    let points: Vec<Vec<f64>> = leaves
        .iter()
        .map(|l| space.ball_by_name(l).map(|b| b.centre.to_vec()))
        .collect::<Result<_>>()?;
    let clustering = kmeans_with(
        &points,
        &KMeansConfig {
            k,
            seed,
            ..KMeansConfig::default()
        },
    )?;
    let members = clustering.members();
    let clusters = members
        .iter()
        .map(|m| m.iter().map(|&i| leaves[i].clone()).collect())
        .collect();
    let negatives = (0..leaves.len())
        .map(|i| {
            let cluster = &members[clustering.assignments[i]];
            let mut negs: Vec<String> = cluster
                .iter()
                .filter(|&&j| j != i)
                .map(|&j| leaves[j].clone())
                .collect();
            if negs.is_empty() && leaves.len() > 1 {
                let nearest = (0..leaves.len())
                    .filter(|&j| j != i)
                    .min_by(|&a, &b| {
                        let da = linalg::squared_distance(&points[i], &points[a]);
                        let db = linalg::squared_distance(&points[i], &points[b]);
                        da.partial_cmp(&db).unwrap().then(a.cmp(&b))
                    })
                    .unwrap();
                negs.push(leaves[nearest].clone());
            }
            (leaves[i].clone(), negs)
        })
        .collect();
    Ok(NegativeSets {
        clusters,
        negatives,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(v: &[(f64, f64)]) -> Vec<Vec<f64>> {
        v.iter().map(|&(x, y)| vec![x, y]).collect()
    }

    #[test]
    fn k_equals_n_gives_singletons() {
        let p = pts(&[(0.0, 0.0), (1.0, 5.0), (3.0, 3.0)]);
        let c = kmeans(&p, 3, 7, 50).unwrap();
        assert_eq!(c.assignments, vec![0, 1, 2]);
        assert_eq!(c.sse, 0.0);
    }

    #[test]
    fn k_one_is_the_mean() {
        let p = pts(&[(0.0, 0.0), (2.0, 4.0), (4.0, 2.0)]);
        let c = kmeans(&p, 1, 7, 50).unwrap();
        assert_eq!(c.centroids, vec![vec![2.0, 2.0]]);
    }

    #[test]
    fn two_obvious_groups() {
        let p = pts(&[(0.0, 0.0), (0.0, 1.0), (10.0, 0.0), (10.0, 1.0)]);
        let c = kmeans(&p, 2, 3, 50).unwrap();
        assert_eq!(c.assignments, vec![0, 0, 1, 1]);
        assert_eq!(c.sse, 1.0);
    }

    #[test]
    fn k_out_of_range() {
        let p = pts(&[(0.0, 0.0)]);
        assert!(matches!(kmeans(&p, 2, 0, 10), Err(Error::KOutOfRange { k: 2, points: 1 })));
        assert!(kmeans(&p, 0, 0, 10).is_err());
    }

    #[test]
    fn duplicate_points_still_fill_every_cluster() {
        let p = pts(&[(1.0, 1.0), (1.0, 1.0), (1.0, 1.0), (2.0, 2.0)]);
        let c = kmeans(&p, 3, 11, 50).unwrap();
        assert_eq!(c.members().iter().filter(|m| m.is_empty()).count(), 0);
    }

    #[test]
    fn negative_sets_for_pairs_and_singletons() {
        let space = BallSpace::new(
            2,
            vec!["a".into(), "b".into(), "z".into()],
            vec![vec![0.0, 0.0], vec![0.0, 0.1], vec![9.0, 9.0]],
            vec![0.01; 3],
        )
        .unwrap();
        let two: Vec<String> = vec!["a".into(), "b".into()];
        let n = build_negative_sets(&space, &two, Some(1), 1).unwrap();
        assert_eq!(n.get("a").unwrap(), &["b"]);
        assert_eq!(n.get("b").unwrap(), &["a"]);

        let three: Vec<String> = vec!["a".into(), "b".into(), "z".into()];
        let n = build_negative_sets(&space, &three, Some(2), 1).unwrap();
        assert_eq!(n.get("a").unwrap(), &["b"]);
        // Singleton cluster falls back to the nearest other class.
        assert_eq!(n.get("z").unwrap(), &["b"]);
        assert!(build_negative_sets(&space, &three, Some(4), 1).is_err());
    }

    #[test]
    fn json_round_trip() {
        let n = NegativeSets::from_map(vec![
            ("x".into(), vec!["y".into()]),
            ("y".into(), vec!["x".into()]),
        ]);
        let text = n.to_json().to_string();
        assert_eq!(text, r#"{"x":["y"],"y":["x"]}"#);
        assert_eq!(NegativeSets::from_json_str(&text).unwrap(), n);
    }
}
