mod common;

use common::{build_ontology, poodle, random_dag, score_oracle};
use geoball::embedding::{BallSpace, EmbedConfig};
use geoball::eval::{f1_all, f1_leaf, grid_search, s_d, score_space, GridSpec};
use geoball::ontology::{compute_ich, compute_stats, Ontology};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_space(o: &Ontology, dim: usize, rng: &mut ChaCha8Rng) -> BallSpace {
    let centres = (0..o.len())
        .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let radii = (0..o.len()).map(|_| rng.random_range(0.05..1.5)).collect();
    BallSpace::new(dim, o.concepts().to_vec(), centres, radii).unwrap()
}

#[test]
fn scores_match_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for seed in 0..60 {
        let n = rng.random_range(3..15);
        let edges = random_dag(n, 0.25, seed);
        let o = build_ontology(n, &edges, &[]);
        let ich = compute_ich(&o).unwrap();
        let s = random_space(&o, 2, &mut rng);
        let (all, leaf, sd) = score_oracle(&s, &o);
        assert!((f1_all(&s, &ich).unwrap().f1 - all).abs() < 1e-12, "seed {seed}");
        assert!((f1_leaf(&s, &ich, &o).unwrap().f1 - leaf).abs() < 1e-12, "seed {seed}");
        if o.leaves().len() >= 2 {
            assert_eq!(s_d(&s, o.leaves()).unwrap(), sd);
        }
    }
}

#[test]
fn two_of_three_pairs_gives_f1_point_eight() {
    // a⊑b, c⊑d, e⊑f, placed far apart; e escapes f.
    let o = build_ontology(6, &[(0, 1), (2, 3), (4, 5)], &[]);
    let ich = compute_ich(&o).unwrap();
    let centres = vec![
        vec![0.0, 0.0],
        vec![0.1, 0.0],
        vec![10.0, 0.0],
        vec![10.0, 0.1],
        vec![20.0, 0.0],
        vec![23.0, 0.0],
    ];
    let radii = vec![0.5, 1.0, 0.5, 1.0, 0.5, 1.0];
    let s = BallSpace::new(2, o.concepts().to_vec(), centres, radii).unwrap();
    let pr = f1_all(&s, &ich).unwrap();
    assert_eq!((pr.true_positives, pr.false_positives, pr.false_negatives), (2, 0, 1));
    assert!((pr.f1 - 0.8).abs() < 1e-12);
}

#[test]
fn one_escaped_leaf_costs_one_kth_of_recall() {
    for k in 2..8 {
        let edges: Vec<(usize, usize)> = (1..=k).map(|i| (i, 0)).collect();
        let o = build_ontology(k + 1, &edges, &[]);
        let ich = compute_ich(&o).unwrap();
        let mut centres = vec![vec![0.0, 0.0]];
        let mut radii = vec![5.0];
        for i in 0..k {
            let angle = i as f64 * std::f64::consts::TAU / k as f64;
            let r = if i == 0 { 7.0 } else { 3.0 };
            centres.push(vec![r * angle.cos(), r * angle.sin()]);
            radii.push(0.1);
        }
        let s = BallSpace::new(2, o.concepts().to_vec(), centres, radii).unwrap();
        let pr = f1_leaf(&s, &ich, &o).unwrap();
        assert!((pr.recall - (k - 1) as f64 / k as f64).abs() < 1e-12);
        assert_eq!(pr.precision, 1.0);
    }
}

fn rotation(dim: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    while basis.len() < dim {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        for b in &basis {
            let d: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= d * y);
        }
        let n = common::norm(&v);
        if n > 1e-6 {
            basis.push(v.iter().map(|x| x / n).collect());
        }
    }
    basis
}

fn transform(s: &BallSpace, f: impl Fn(&[f64]) -> Vec<f64>, g: impl Fn(f64) -> f64) -> BallSpace {
    let centres = (0..s.len()).map(|i| f(s.centre(i))).collect();
    let radii = (0..s.len()).map(|i| g(s.radius(i))).collect();
    BallSpace::new(s.dim(), s.names().to_vec(), centres, radii).unwrap()
}

#[test]
fn scores_invariant_under_rigid_motion_and_uniform_scaling() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for seed in 0..30 {
        let n = rng.random_range(4..12);
        let edges = random_dag(n, 0.3, 400 + seed);
        let o = build_ontology(n, &edges, &[]);
        let ich = compute_ich(&o).unwrap();
        let s = random_space(&o, 3, &mut rng);
        let base = score_space(&s, &ich, &o).unwrap();
        let rot = rotation(3, &mut rng);
        let shift = [0.3, -2.0, 5.0];
        let moved = transform(
            &s,
            |c| (0..3).map(|r| rot[r].iter().zip(c).map(|(a, x)| a * x).sum::<f64>() + shift[r]).collect(),
            |r| r,
        );
        let scaled = transform(&s, |c| c.iter().map(|x| x * 4.0).collect(), |r| r * 4.0);
        // Containment sits on a ≤ boundary; random spaces are far from it.
        assert_eq!(score_space(&moved, &ich, &o).unwrap(), base, "seed {seed}");
        assert_eq!(score_space(&scaled, &ich, &o).unwrap(), base, "seed {seed}");
    }
}

#[test]
fn containment_predicate_ignores_uniform_radius_shift() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for seed in 0..30 {
        let edges = random_dag(10, 0.3, 700 + seed);
        let o = build_ontology(10, &edges, &[]);
        let ich = compute_ich(&o).unwrap();
        let s = random_space(&o, 2, &mut rng);
        let grown = transform(&s, |c| c.to_vec(), |r| r + 0.75);
        assert_eq!(f1_all(&s, &ich).unwrap(), f1_all(&grown, &ich).unwrap());
    }
}

fn poodle_base() -> EmbedConfig {
    EmbedConfig {
        dim: 10,
        radius_clamp_min: 0.05,
        ..EmbedConfig::default()
    }
}

#[test]
fn poodle_grid_picks_a_perfect_row() {
    let o = poodle();
    let ich = compute_ich(&o).unwrap();
    let stats = compute_stats(&o, &ich).unwrap();
    let grid = GridSpec {
        gamma: vec![-0.05, 0.0],
        psi: vec![0.1, 0.2],
        phi: vec![1.0],
        s_d_threshold: 0.95,
    };
    let report = grid_search(&o, &ich, &stats, &grid, &poodle_base()).unwrap();
    assert_eq!(report.rows.len(), 4);
    assert!(!report.below_threshold);
    let best = &report.rows[report.best];
    assert_eq!(best.scores.f1_leaf, 1.0);
    assert!(best.passes_threshold);
    for r in &report.rows {
        if r.passes_threshold {
            assert!(r.scores.f1_leaf <= best.scores.f1_leaf);
        }
    }
    assert_eq!((report.best_config.gamma, report.best_config.psi), (best.gamma, best.psi));
}

#[test]
fn singleton_grid_returns_its_point() {
    let o = poodle();
    let ich = compute_ich(&o).unwrap();
    let stats = compute_stats(&o, &ich).unwrap();
    let grid = GridSpec {
        gamma: vec![-0.1],
        psi: vec![0.15],
        phi: vec![1.2],
        s_d_threshold: 1.0,
    };
    let report = grid_search(&o, &ich, &stats, &grid, &poodle_base()).unwrap();
    assert_eq!(report.best, 0);
    assert_eq!(
        (report.best_config.gamma, report.best_config.psi, report.best_config.phi),
        (-0.1, 0.15, 1.2)
    );
}
