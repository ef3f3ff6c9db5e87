//! Geometric scoring of a trained ball space against the inferred hierarchy,
//! and grid search over the embedding hyperparameters.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::{train_embeddings, Ball, BallSpace, EmbedConfig, LossBreakdown};
use crate::error::{Error, Result};
use crate::linalg::{self, check_dims};
use crate::ontology::{ConceptId, HierarchyStats, Ich, Ontology};

/// `‖c_P − c_Q‖ ≤ r_Q − r_P`: ball P lies inside ball Q.
pub fn containment_holds(p: Ball<'_>, q: Ball<'_>) -> Result<bool> {
    check_dims(p.dim(), q.dim())?;
    Ok(linalg::distance(p.centre, q.centre) <= q.radius - p.radius)
}

fn contained(p: Ball<'_>, q: Ball<'_>) -> bool {
    linalg::distance(p.centre, q.centre) <= q.radius - p.radius
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PrecisionRecall {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
}

impl PrecisionRecall {
    /// Ratios are 0 when their denominators are 0.
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        PrecisionRecall {
            precision,
            recall,
            f1,
            true_positives: tp,
            false_positives: fp,
            false_negatives: fn_,
        }
    }
}

fn score_pairs(
    space: &BallSpace,
    ich: &Ich,
    pairs: impl Iterator<Item = (ConceptId, ConceptId)>,
) -> PrecisionRecall {
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for (p, q) in pairs {
        let predicted = contained(space.ball_of(p), space.ball_of(q));
        match (ich.contains(p, q), predicted) {
            (true, true) => tp += 1,
            (false, true) => fp += 1,
            (true, false) => fn_ += 1,
            (false, false) => {}
        }
    }
    PrecisionRecall::from_counts(tp, fp, fn_)
}

fn check_space(space: &BallSpace, n: usize) -> Result<()> {
    if space.len() < n {
        return Err(Error::MissingBall(format!("concept #{}", space.len())));
    }
    Ok(())
}

/// Scores containment over every ordered pair of distinct concepts.
pub fn f1_all(space: &BallSpace, ich: &Ich) -> Result<PrecisionRecall> {
    let n = ich.pairs().iter().map(|&(p, q)| p.0.max(q.0) + 1).max().unwrap_or(0);
    check_space(space, n)?;
    let n = space.len();
    let pairs = (0..n)
        .flat_map(move |p| (0..n).map(move |q| (ConceptId(p), ConceptId(q))))
        .filter(|(p, q)| p != q);
    Ok(score_pairs(space, ich, pairs))
}

/// The `(P, Q)` pairs scored by [`f1_leaf`]: P a leaf, Q a leaf or a direct
/// parent of a leaf.
pub fn leaf_candidate_pairs(ontology: &Ontology) -> Vec<(ConceptId, ConceptId)> {
    let mut targets: Vec<ConceptId> = ontology.leaves().to_vec();
    for &leaf in ontology.leaves() {
        for &p in ontology.parents(leaf) {
            if !targets.contains(&p) {
                targets.push(p);
            }
        }
    }
    ontology
        .leaves()
        .iter()
        .flat_map(|&p| targets.iter().map(move |&q| (p, q)))
        .filter(|(p, q)| p != q)
        .collect()
}

/// Like [`f1_all`] restricted to [`leaf_candidate_pairs`].
pub fn f1_leaf(space: &BallSpace, ich: &Ich, ontology: &Ontology) -> Result<PrecisionRecall> {
    check_space(space, ontology.len())?;
    if ontology.leaves().is_empty() {
        log::warn!("no leaves declared; F1 over leaves is 0");
        return Ok(PrecisionRecall::default());
    }
    let pairs = leaf_candidate_pairs(ontology);
    Ok(score_pairs(space, ich, pairs.into_iter()))
}

/// Number of unordered leaf pairs whose balls do not overlap.
pub fn s_d(space: &BallSpace, leaves: &[ConceptId]) -> Result<usize> {
    if leaves.len() < 2 {
        return Err(Error::TooFewLeaves(leaves.len()));
    }
    let mut count = 0;
    for (i, &a) in leaves.iter().enumerate() {
        for &b in &leaves[i + 1..] {
            let (pa, pb) = (space.ball_of(a), space.ball_of(b));
            if linalg::distance(pa.centre, pb.centre) >= pa.radius + pb.radius {
                count += 1;
            }
        }
    }
    Ok(count)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub f1_all: f64,
    pub f1_leaf: f64,
    pub s_d: usize,
    /// `s_d` over the number of leaf pairs; 1 when there are fewer than two leaves.
    pub s_d_fraction: f64,
}

pub fn score_space(space: &BallSpace, ich: &Ich, ontology: &Ontology) -> Result<Scores> {
    let all = f1_all(space, ich)?;
    let leaf = f1_leaf(space, ich, ontology)?;
    let leaves = ontology.leaves();
    let (s, frac) = if leaves.len() < 2 {
        (0, 1.0)
    } else {
        let s = s_d(space, leaves)?;
        let pairs = leaves.len() * (leaves.len() - 1) / 2;
        (s, s as f64 / pairs as f64)
    };
    Ok(Scores {
        f1_all: all.f1,
        f1_leaf: leaf.f1,
        s_d: s,
        s_d_fraction: frac,
    })
}

/// Candidate values for the three tuned hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub gamma: Vec<f64>,
    pub psi: Vec<f64>,
    pub phi: Vec<f64>,
    /// Minimum `s_d_fraction` a grid point must reach.
    #[serde(default = "default_threshold")]
    pub s_d_threshold: f64,
}

fn default_threshold() -> f64 {
    0.95
}

impl GridSpec {
    /// Grid points in row-major order over `(gamma, psi, phi)`.
    pub fn points(&self) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::with_capacity(self.gamma.len() * self.psi.len() * self.phi.len());
        for &g in &self.gamma {
            for &s in &self.psi {
                for &f in &self.phi {
                    out.push((g, s, f));
                }
            }
        }
        out
    }

    fn validate(&self) -> Result<()> {
        if self.gamma.is_empty() || self.psi.is_empty() || self.phi.is_empty() {
            return Err(Error::Config("grid lists must be non-empty".into()));
        }
        if !(0.0..=1.0).contains(&self.s_d_threshold) {
            return Err(Error::Config("s_d_threshold must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneRow {
    pub gamma: f64,
    pub psi: f64,
    pub phi: f64,
    pub scores: Scores,
    pub final_loss: Option<LossBreakdown>,
    pub passes_threshold: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneReport {
    pub rows: Vec<TuneRow>,
    pub best: usize,
    pub best_config: EmbedConfig,
    /// Set when no grid point reached the threshold and `best` is best-effort.
    pub below_threshold: bool,
}

/// Orders rows best-first: higher (f1_leaf, f1_all, s_d_fraction), then
/// smaller |γ|, then earlier grid position.
fn rank(rows: &[TuneRow], a: usize, b: usize) -> Ordering {
    let (x, y) = (&rows[a].scores, &rows[b].scores);
    let desc = |u: f64, v: f64| v.partial_cmp(&u).unwrap_or(Ordering::Equal);
    desc(x.f1_leaf, y.f1_leaf)
        .then(desc(x.f1_all, y.f1_all))
        .then(desc(x.s_d_fraction, y.s_d_fraction))
        .then(
            rows[a]
                .gamma
                .abs()
                .partial_cmp(&rows[b].gamma.abs())
                .unwrap_or(Ordering::Equal),
        )
        .then(a.cmp(&b))
}

/// Picks the winning row among those passing the threshold, falling back
/// to all rows. Returns `(index, below_threshold)`.
pub fn select_best(rows: &[TuneRow]) -> Option<(usize, bool)> {
    let survivors: Vec<usize> = (0..rows.len()).filter(|&i| rows[i].passes_threshold).collect();
    let (pool, below) = if survivors.is_empty() {
        ((0..rows.len()).collect(), true)
    } else {
        (survivors, false)
    };
    pool.into_iter()
        .min_by(|&a, &b| rank(rows, a, b))
        .map(|i| (i, below))
}

/// Trains one embedding per grid point (all with `base.seed`) and scores it.
pub fn grid_search(
    ontology: &Ontology,
    ich: &Ich,
    stats: &HierarchyStats,
    grid: &GridSpec,
    base: &EmbedConfig,
) -> Result<TuneReport> {
    grid.validate()?;
    let configs: Vec<EmbedConfig> = grid
        .points()
        .into_iter()
        .map(|(gamma, psi, phi)| EmbedConfig {
            gamma,
            psi,
            phi,
            ..base.clone()
        })
        .collect();
    let rows = configs
        .par_iter()
        .map(|config| {
            let (space, history) = train_embeddings(ontology, ich, stats, config)?;
            let scores = score_space(&space, ich, ontology)?;
            log::info!(
                "gamma {} psi {} phi {}: f1_leaf {:.4} f1_all {:.4} s_d {:.4}",
                config.gamma,
                config.psi,
                config.phi,
                scores.f1_leaf,
                scores.f1_all,
                scores.s_d_fraction
            );
            Ok(TuneRow {
                gamma: config.gamma,
                psi: config.psi,
                phi: config.phi,
                scores,
                final_loss: history.final_loss(),
                passes_threshold: scores.s_d_fraction >= grid.s_d_threshold,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let (best, below_threshold) = select_best(&rows).expect("grid is non-empty");
    Ok(TuneReport {
        best_config: configs[best].clone(),
        rows,
        best,
        below_threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(gamma: f64, f1_leaf: f64, f1_all: f64, frac: f64, passes: bool) -> TuneRow {
        TuneRow {
            gamma,
            psi: 0.1,
            phi: 1.0,
            scores: Scores {
                f1_all,
                f1_leaf,
                s_d: 0,
                s_d_fraction: frac,
            },
            final_loss: None,
            passes_threshold: passes,
        }
    }

    #[test]
    fn containment_examples() {
        let o = [0.0, 0.0];
        assert!(containment_holds(Ball::new(&o, 0.5), Ball::new(&o, 1.0)).unwrap());
        assert!(containment_holds(Ball::new(&o, 1.0), Ball::new(&o, 1.0)).unwrap());
        assert!(!containment_holds(Ball::new(&[1.0, 0.0], 0.5), Ball::new(&o, 1.0)).unwrap());
        assert!(containment_holds(Ball::new(&[1.0], 0.5), Ball::new(&o, 1.0)).is_err());
    }

    #[test]
    fn f1_from_counts() {
        let pr = PrecisionRecall::from_counts(2, 0, 1);
        assert_eq!(pr.precision, 1.0);
        assert!((pr.recall - 2.0 / 3.0).abs() < 1e-15);
        assert!((pr.f1 - 0.8).abs() < 1e-15);
        assert_eq!(PrecisionRecall::from_counts(0, 0, 4).f1, 0.0);
    }

    #[test]
    fn filter_then_rank() {
        let rows = vec![row(0.0, 1.0, 1.0, 0.5, false), row(-0.1, 0.2, 0.2, 0.99, true)];
        assert_eq!(select_best(&rows), Some((1, false)));
    }

    #[test]
    fn best_effort_when_nothing_passes() {
        let rows = vec![row(0.0, 0.3, 1.0, 0.5, false), row(-0.1, 0.9, 0.2, 0.6, false)];
        assert_eq!(select_best(&rows), Some((1, true)));
    }

    #[test]
    fn ties_prefer_small_margin_then_grid_order() {
        let rows = vec![
            row(-0.2, 1.0, 1.0, 1.0, true),
            row(0.1, 1.0, 1.0, 1.0, true),
            row(-0.1, 1.0, 1.0, 1.0, true),
        ];
        assert_eq!(select_best(&rows), Some((1, false)));
        let rows = vec![row(-0.1, 1.0, 1.0, 1.0, true), row(0.1, 1.0, 1.0, 1.0, true)];
        assert_eq!(select_best(&rows), Some((0, false)));
    }

    #[test]
    fn s_d_needs_two_leaves() {
        let space = BallSpace::new(2, vec!["a".into()], vec![vec![0.0, 0.0]], vec![1.0]).unwrap();
        assert!(matches!(s_d(&space, &[ConceptId(0)]), Err(Error::TooFewLeaves(1))));
    }
}
