//! Synthetic feature datasets, w-way s-shot episodes and their evaluation.

use std::collections::BTreeMap;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::BallSpace;
use crate::error::{Error, Result};
use crate::linalg;
use crate::negatives::NegativeSets;
use crate::ontology::{compute_ich, compute_stats, ConceptId, HierarchyStats, Ontology};
use crate::projector::{classify, finetune_fewshot, Mlp, ProjectorConfig};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    #[default]
    Base,
    Novel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example {
    pub label: String,
    pub features: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureDataset {
    pub dim: usize,
    pub split: Split,
    pub examples: Vec<Example>,
}

impl FeatureDataset {
    pub fn new(dim: usize, split: Split) -> Self {
        FeatureDataset {
            dim,
            split,
            examples: Vec::new(),
        }
    }

    pub fn push(&mut self, label: impl Into<String>, features: Vec<f64>) -> Result<()> {
        linalg::check_dims(self.dim, features.len())?;
        self.examples.push(Example {
            label: label.into(),
            features,
        });
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    /// Labels in order of first appearance.
    pub fn classes(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for e in &self.examples {
            if !out.contains(&e.label) {
                out.push(e.label.clone());
            }
        }
        out
    }

    /// Examples grouped by label, classes in order of first appearance.
    pub fn by_class(&self) -> Vec<(String, Vec<&Example>)> {
        let mut out: Vec<(String, Vec<&Example>)> = Vec::new();
        for e in &self.examples {
            match out.iter_mut().find(|(c, _)| *c == e.label) {
                Some((_, v)) => v.push(e),
                None => out.push((e.label.clone(), vec![e])),
            }
        }
        out
    }
}

/// Errors with [`Error::BaseNovelOverlap`] if a label occurs in both sets.
pub fn check_disjoint_splits(base: &FeatureDataset, novel: &FeatureDataset) -> Result<()> {
    let base_classes = base.classes();
    match novel.classes().into_iter().find(|c| base_classes.contains(c)) {
        Some(c) => Err(Error::BaseNovelOverlap(c)),
        None => Ok(()),
    }
}

/// Settings of the synthetic feature generator.
///
/// Every concept gets a latent anchor of size `latent_dim`: roots draw a
/// standard normal vector, children mix their parents' mean anchor with fresh
/// noise, `a = ρ·a_parent + √(1−ρ²)·z`, with `ρ = sibling_correlation`.
/// Leaf anchors are lifted into `dim` features by a fixed random orthonormal
/// map and scaled by `anchor_scale`; examples add isotropic Gaussian noise
/// of standard deviation `noise_sigma` on every feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    pub dim: usize,
    pub latent_dim: usize,
    pub per_class: usize,
    /// Extra base examples per class, drawn independently for held-out checks.
    pub heldout_per_class: usize,
    pub noise_sigma: f64,
    pub anchor_scale: f64,
    pub sibling_correlation: f64,
    /// Share of each parent's leaves assigned to the novel split.
    pub novel_fraction: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            dim: 256,
            latent_dim: 16,
            per_class: 300,
            heldout_per_class: 0,
            noise_sigma: 0.7,
            anchor_scale: 8.0,
            sibling_correlation: 0.8,
            novel_fraction: 0.5,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticFeatures {
    pub base: FeatureDataset,
    pub base_heldout: FeatureDataset,
    pub novel: FeatureDataset,
}

/// Splits leaves into (base, novel). Leaves are grouped by their first
/// parent; within a group of `n` the last `round(n · fraction)` go to the
/// novel split.
pub fn split_leaves(ontology: &Ontology, novel_fraction: f64) -> (Vec<String>, Vec<String>) {
    let mut groups: BTreeMap<Option<ConceptId>, Vec<ConceptId>> = BTreeMap::new();
    for &leaf in ontology.leaves() {
        groups
            .entry(ontology.parents(leaf).first().copied())
            .or_default()
            .push(leaf);
    }
    let mut novel_ids = Vec::new();
    for members in groups.values() {
        let n = members.len();
        let take = ((n as f64 * novel_fraction).round() as usize).min(n);
        novel_ids.extend(&members[n - take..]);
    }
    let (mut base, mut novel) = (Vec::new(), Vec::new());
    for &leaf in ontology.leaves() {
        let name = ontology.name(leaf).to_string();
        if novel_ids.contains(&leaf) {
            novel.push(name);
        } else {
            base.push(name);
        }
    }
    (base, novel)
}

/// Latent anchors for every concept, indexed like the ontology.
pub fn latent_anchors(ontology: &Ontology, stats: &HierarchyStats, config: &SyntheticConfig) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let rho = config.sibling_correlation.clamp(0.0, 1.0);
    let fresh = (1.0 - rho * rho).sqrt();
    let mut order: Vec<ConceptId> = ontology.ids().collect();
    order.sort_by_key(|&c| (stats.level(c), c));
    let mut anchors = vec![Vec::new(); ontology.len()];
    for c in order {
        let z: Vec<f64> = (0..config.latent_dim)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        let parents = ontology.parents(c);
        anchors[c.index()] = if parents.is_empty() {
            z
        } else {
            let views: Vec<&[f64]> = parents.iter().map(|p| anchors[p.index()].as_slice()).collect();
            let mean = linalg::mean(&views).expect("non-empty");
            mean.iter().zip(&z).map(|(m, z)| rho * m + fresh * z).collect()
        };
    }
    anchors
}

/// `rows × cols` matrix with orthonormal columns, from Gram–Schmidt on
/// Gaussian draws; stored column-major.
fn orthonormal_columns(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(cols);
    while basis.len() < cols {
        let mut v: Vec<f64> = (0..rows).map(|_| StandardNormal.sample(rng)).collect();
        for b in &basis {
            let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= dot * y);
        }
        let n = linalg::norm(&v);
        if n > 1e-8 {
            v.iter_mut().for_each(|x| *x /= n);
            basis.push(v);
        }
    }
    basis
}

/// Feature-space anchor of every leaf, in leaf order.
pub fn leaf_anchors(ontology: &Ontology, config: &SyntheticConfig) -> Result<Vec<(String, Vec<f64>)>> {
    validate_synthetic(config)?;
    let ich = compute_ich(ontology)?;
    let stats = compute_stats(ontology, &ich)?;
    let latent = latent_anchors(ontology, &stats, config);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let basis = orthonormal_columns(config.dim, config.latent_dim, &mut rng);
    Ok(ontology
        .leaves()
        .iter()
        .map(|&leaf| {
            let f = lift(&latent[leaf.index()], &basis, config.dim, config.anchor_scale);
            (ontology.name(leaf).to_string(), f)
        })
        .collect())
}

fn validate_synthetic(config: &SyntheticConfig) -> Result<()> {
    if config.dim == 0 || config.latent_dim == 0 || config.latent_dim > config.dim {
        return Err(Error::Config("need 0 < latent_dim <= dim".into()));
    }
    if !(config.noise_sigma >= 0.0) {
        return Err(Error::Config("noise_sigma must be non-negative".into()));
    }
    if !(0.0..=1.0).contains(&config.novel_fraction) {
        return Err(Error::Config("novel_fraction must lie in [0, 1]".into()));
    }
    Ok(())
}

/// Seeded base, held-out base and novel datasets for the ontology's leaves,
/// with anchors from the hierarchy alone.
pub fn generate_synthetic_features(ontology: &Ontology, config: &SyntheticConfig) -> Result<SyntheticFeatures> {
    let anchors = leaf_anchors(ontology, config)?;
    sample_around(ontology, &anchors, config)
}

/// Like [`generate_synthetic_features`], but each leaf's latent anchor is
/// its ball centre in `space` (so `latent_dim` is taken from the space).
/// A single fixed linear map then sends every class into its ball, which is
/// what lets a projector trained on base classes transfer to novel ones.
pub fn generate_space_aligned_features(
    ontology: &Ontology,
    space: &BallSpace,
    config: &SyntheticConfig,
) -> Result<SyntheticFeatures> {
    let config = SyntheticConfig {
        latent_dim: space.dim(),
        ..config.clone()
    };
    validate_synthetic(&config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let basis = orthonormal_columns(config.dim, config.latent_dim, &mut rng);
    let anchors = ontology
        .leaves()
        .iter()
        .map(|&leaf| {
            let name = ontology.name(leaf);
            let centre = space.ball_by_name(name)?.centre;
            Ok((name.to_string(), lift(centre, &basis, config.dim, config.anchor_scale)))
        })
        .collect::<Result<Vec<_>>>()?;
    sample_around(ontology, &anchors, &config)
}

fn lift(latent: &[f64], basis: &[Vec<f64>], dim: usize, scale: f64) -> Vec<f64> {
    let mut f = vec![0.0; dim];
    for (a, b) in latent.iter().zip(basis) {
        f.iter_mut().zip(b).for_each(|(x, y)| *x += a * y);
    }
    f.iter_mut().for_each(|x| *x *= scale);
    f
}

fn sample_around(
    ontology: &Ontology,
    anchors: &[(String, Vec<f64>)],
    config: &SyntheticConfig,
) -> Result<SyntheticFeatures> {
    if anchors.len() < 2 {
        return Err(Error::TooFewLeaves(anchors.len()));
    }
    let (_, novel_names) = split_leaves(ontology, config.novel_fraction);
    let noise = Normal::new(0.0, config.noise_sigma).map_err(|e| Error::Config(e.to_string()))?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(2);
    let mut heldout_rng = ChaCha8Rng::seed_from_u64(config.seed);
    heldout_rng.set_stream(3);

    let mut out = SyntheticFeatures {
        base: FeatureDataset::new(config.dim, Split::Base),
        base_heldout: FeatureDataset::new(config.dim, Split::Base),
        novel: FeatureDataset::new(config.dim, Split::Novel),
    };
    for (name, anchor) in anchors {
        let is_novel = novel_names.contains(name);
        let target = if is_novel { &mut out.novel } else { &mut out.base };
        for _ in 0..config.per_class {
            let f = anchor.iter().map(|a| a + noise.sample(&mut rng)).collect();
            target.push(name.clone(), f)?;
        }
        if !is_novel {
            for _ in 0..config.heldout_per_class {
                let f = anchor.iter().map(|a| a + noise.sample(&mut heldout_rng)).collect();
                out.base_heldout.push(name.clone(), f)?;
            }
        }
    }
    Ok(out)
}

/// One w-way s-shot task: support and query examples of `classes`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub classes: Vec<String>,
    pub support: FeatureDataset,
    pub query: Vec<Example>,
}

/// Samples `w` classes, then `s + q` distinct examples of each, without
/// replacement.
pub fn sample_episode(novel: &FeatureDataset, w: usize, s: usize, q: usize, seed: u64) -> Result<Episode> {
    let groups = novel.by_class();
    let eligible: Vec<&(String, Vec<&Example>)> = groups.iter().filter(|(_, v)| v.len() >= s + q).collect();
    if w == 0 || eligible.len() < w {
        return Err(Error::InsufficientData(format!(
            "{w}-way episode needs {w} classes with {} examples each; {} available",
            s + q,
            eligible.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chosen: Vec<&&(String, Vec<&Example>)> = eligible.choose_multiple(&mut rng, w).collect();
    let mut episode = Episode {
        classes: Vec::with_capacity(w),
        support: FeatureDataset::new(novel.dim, Split::Novel),
        query: Vec::with_capacity(w * q),
    };
    for (class, examples) in chosen.into_iter().map(|g| (&g.0, &g.1)) {
        let mut picked: Vec<&Example> = examples.choose_multiple(&mut rng, s + q).copied().collect();
        picked.shuffle(&mut rng);
        episode.classes.push(class.clone());
        for e in &picked[..s] {
            episode.support.examples.push((*e).clone());
        }
        episode.query.extend(picked[s..].iter().map(|e| (*e).clone()));
    }
    Ok(episode)
}

/// `count` episodes with seeds `seed, seed + 1, …`.
pub fn sample_episodes(
    novel: &FeatureDataset,
    w: usize,
    s: usize,
    q: usize,
    count: usize,
    seed: u64,
) -> Result<Vec<Episode>> {
    (0..count)
        .map(|i| sample_episode(novel, w, s, q, seed.wrapping_add(i as u64)))
        .collect()
}

/// Mean of per-episode accuracies with a normal-approximation 95% interval,
/// `1.96 · σ / √n` using the sample standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracySummary {
    pub accuracy: f64,
    pub ci95_half_width: f64,
    pub per_episode: Vec<f64>,
}

impl AccuracySummary {
    pub fn from_episodes(per_episode: Vec<f64>) -> Self {
        let n = per_episode.len();
        if n == 0 {
            return AccuracySummary {
                accuracy: 0.0,
                ci95_half_width: 0.0,
                per_episode,
            };
        }
        let mean = per_episode.iter().sum::<f64>() / n as f64;
        let half = if n < 2 {
            0.0
        } else {
            let var = per_episode.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            1.96 * var.sqrt() / (n as f64).sqrt()
        };
        AccuracySummary {
            accuracy: mean,
            ci95_half_width: half,
            per_episode,
        }
    }
}

/// Published accuracy (percent) kept alongside desk-scale results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceValue {
    pub benchmark: String,
    pub setting: String,
    pub accuracy: f64,
    pub reproducible: bool,
}

pub fn reference_values() -> Vec<ReferenceValue> {
    [
        ("miniImageNet", "5-way 1-shot", 65.71),
        ("miniImageNet", "5-way 5-shot", 93.65),
        ("tieredImageNet", "5-way 1-shot", 73.4),
        ("tieredImageNet", "5-way 5-shot", 88.95),
        ("miniImageNet", "20-way 1-shot", 48.02),
        ("miniImageNet", "20-way 5-shot", 84.13),
    ]
    .into_iter()
    .map(|(b, s, a)| ReferenceValue {
        benchmark: b.into(),
        setting: s.into(),
        accuracy: a,
        reproducible: false,
    })
    .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    #[serde(flatten)]
    pub summary: AccuracySummary,
    /// Share of wrong predictions whose point still lies in a parent ball of
    /// the true class; needs the ontology.
    pub semantic_error_fraction: Option<f64>,
    pub errors: usize,
    pub queries: usize,
    pub reference: Vec<ReferenceValue>,
}

struct EpisodeOutcome {
    correct: usize,
    queries: usize,
    errors: usize,
    semantic_errors: usize,
}

fn run_episode(
    episode: &Episode,
    space: &BallSpace,
    ontology: Option<&Ontology>,
    base_mlp: &Mlp,
    config: &ProjectorConfig,
    negatives: Option<&NegativeSets>,
) -> Result<EpisodeOutcome> {
    let (mlp, _) = finetune_fewshot(base_mlp, &episode.support, space, negatives, config)?;
    let candidates = episode
        .classes
        .iter()
        .map(|c| Ok((c.as_str(), space.ball_by_name(c)?)))
        .collect::<Result<Vec<_>>>()?;
    let mut outcome = EpisodeOutcome {
        correct: 0,
        queries: episode.query.len(),
        errors: 0,
        semantic_errors: 0,
    };
    for example in &episode.query {
        let h = mlp.forward(&example.features)?;
        if classify(&h, &candidates)?.class == example.label {
            outcome.correct += 1;
            continue;
        }
        outcome.errors += 1;
        if let Some(ontology) = ontology {
            let truth = ontology.require(&example.label)?;
            let semantic = ontology.parents(truth).iter().any(|p| {
                space
                    .ball_by_name(ontology.name(*p))
                    .is_ok_and(|b| b.boundary_gap(&h) <= 0.0)
            });
            if semantic {
                outcome.semantic_errors += 1;
            }
        }
    }
    Ok(outcome)
}

/// Fine-tunes a fresh copy of `base_mlp` per episode, classifies its queries
/// against the episode's candidate balls, and aggregates in episode order.
pub fn evaluate_episodes(
    space: &BallSpace,
    ontology: Option<&Ontology>,
    base_mlp: &Mlp,
    episodes: &[Episode],
    config: &ProjectorConfig,
    negatives: Option<&NegativeSets>,
) -> Result<EvalReport> {
    let outcomes = episodes
        .par_iter()
        .map(|e| run_episode(e, space, ontology, base_mlp, config, negatives))
        .collect::<Result<Vec<_>>>()?;
    let per_episode = outcomes
        .iter()
        .map(|o| if o.queries == 0 { 0.0 } else { o.correct as f64 / o.queries as f64 })
        .collect();
    let errors: usize = outcomes.iter().map(|o| o.errors).sum();
    let semantic: usize = outcomes.iter().map(|o| o.semantic_errors).sum();
    let semantic_error_fraction = ontology.map(|_| if errors == 0 { 0.0 } else { semantic as f64 / errors as f64 });
    Ok(EvalReport {
        summary: AccuracySummary::from_episodes(per_episode),
        semantic_error_fraction,
        errors,
        queries: outcomes.iter().map(|o| o.queries).sum(),
        reference: reference_values(),
    })
}

/// Prototype baseline: each query takes the class of the nearest mean
/// support vector in raw feature space.
pub fn nearest_centroid_baseline(episodes: &[Episode]) -> Result<AccuracySummary> {
    let mut per_episode = Vec::with_capacity(episodes.len());
    for episode in episodes {
        let prototypes: Vec<(String, Vec<f64>)> = episode
            .support
            .by_class()
            .into_iter()
            .map(|(c, ex)| {
                let views: Vec<&[f64]> = ex.iter().map(|e| e.features.as_slice()).collect();
                (c, linalg::mean(&views).expect("non-empty class"))
            })
            .collect();
        if prototypes.is_empty() {
            return Err(Error::InsufficientData("episode without support".into()));
        }
        let mut correct = 0;
        for q in &episode.query {
            let mut best = (f64::INFINITY, "");
            for (c, p) in &prototypes {
                let d = linalg::squared_distance(p, &q.features);
                if d < best.0 {
                    best = (d, c);
                }
            }
            if best.1 == q.label {
                correct += 1;
            }
        }
        per_episode.push(if episode.query.is_empty() {
            0.0
        } else {
            correct as f64 / episode.query.len() as f64
        });
    }
    Ok(AccuracySummary::from_episodes(per_episode))
}

/// Share of `data` classified into its own label among `candidates`.
pub fn dataset_accuracy(mlp: &Mlp, data: &FeatureDataset, candidates: &[String], space: &BallSpace) -> Result<f64> {
    if data.is_empty() {
        return Ok(0.0);
    }
    let balls = candidates
        .iter()
        .map(|c| Ok((c.as_str(), space.ball_by_name(c)?)))
        .collect::<Result<Vec<_>>>()?;
    let mut correct = 0;
    for e in &data.examples {
        let h = mlp.forward(&e.features)?;
        if classify(&h, &balls)?.class == e.label {
            correct += 1;
        }
    }
    Ok(correct as f64 / data.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ontology::{synthetic_tree, SiblingDisjointness};

    fn tree() -> Ontology {
        synthetic_tree(&[2, 2, 4], SiblingDisjointness::All)
    }

    #[test]
    fn zero_noise_examples_equal_anchor() {
        let config = SyntheticConfig {
            noise_sigma: 0.0,
            per_class: 3,
            ..Default::default()
        };
        let data = generate_synthetic_features(&tree(), &config).unwrap();
        for (_, ex) in data.base.by_class() {
            assert!(ex.iter().all(|e| e.features == ex[0].features));
        }
    }

    #[test]
    fn generator_is_seeded() {
        let config = SyntheticConfig {
            per_class: 4,
            ..Default::default()
        };
        let a = generate_synthetic_features(&tree(), &config).unwrap();
        let b = generate_synthetic_features(&tree(), &config).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn split_is_stratified_and_disjoint() {
        let o = tree();
        let (base, novel) = split_leaves(&o, 0.5);
        assert_eq!((base.len(), novel.len()), (8, 8));
        let data = generate_synthetic_features(&o, &SyntheticConfig::default()).unwrap();
        check_disjoint_splits(&data.base, &data.novel).unwrap();
        assert!(check_disjoint_splits(&data.base, &data.base).is_err());
    }

    #[test]
    fn episode_uses_every_example_when_full() {
        let config = SyntheticConfig {
            per_class: 6,
            ..Default::default()
        };
        let data = generate_synthetic_features(&tree(), &config).unwrap();
        let n_classes = data.novel.classes().len();
        let e = sample_episode(&data.novel, n_classes, 2, 4, 5).unwrap();
        let mut sorted = e.classes.clone();
        sorted.sort();
        let mut all = data.novel.classes();
        all.sort();
        assert_eq!(sorted, all);
        assert_eq!(e.support.len() + e.query.len(), data.novel.len());
        assert_eq!(e, sample_episode(&data.novel, n_classes, 2, 4, 5).unwrap());
        assert_ne!(e, sample_episode(&data.novel, n_classes, 2, 4, 6).unwrap());
        assert!(sample_episode(&data.novel, n_classes + 1, 2, 4, 5).is_err());
        assert!(sample_episode(&data.novel, 2, 4, 4, 5).is_err());
    }

    #[test]
    fn summary_interval() {
        let s = AccuracySummary::from_episodes(vec![1.0, 0.0]);
        assert_eq!(s.accuracy, 0.5);
        let expected = 1.96 * 0.5f64.sqrt() / 2f64.sqrt();
        assert!((s.ci95_half_width - expected).abs() < 1e-12);
        assert_eq!(AccuracySummary::from_episodes(vec![0.7]).ci95_half_width, 0.0);
    }
}
