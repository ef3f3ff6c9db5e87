//! Maps feature vectors into ball space with an MLP trained on the pairwise
//! ranking loss, and classifies projected points by ball membership.

mod mlp;

pub use mlp::{Layer, Mlp, Trace};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::embedding::{Ball, BallSpace};
use crate::error::{Error, Result};
use crate::harness::FeatureDataset;
use crate::linalg::{self, check_dims};
use crate::negatives::NegativeSets;
use crate::ontology::HierarchyStats;
use crate::optim::{inverse_decay, Optimizer, OptimizerKind};

/// `max(0, ‖c_P − h‖ − μ·r_P) + Σ_Q max(0, ν·r_Q − ‖c_Q − h‖)`.
pub fn ranking_loss(h: &[f64], positive: Ball<'_>, negatives: &[Ball<'_>], mu: f64, nu: f64) -> Result<f64> {
    check_dims(positive.dim(), h.len())?;
    for n in negatives {
        check_dims(n.dim(), h.len())?;
    }
    Ok(ranking_loss_grad(h, positive, negatives, mu, nu, None))
}

/// Value of the ranking loss; writes `∂loss/∂h` into `grad` when given.
pub fn ranking_loss_grad(
    h: &[f64],
    positive: Ball<'_>,
    negatives: &[Ball<'_>],
    mu: f64,
    nu: f64,
    mut grad: Option<&mut [f64]>,
) -> f64 {
    if let Some(g) = grad.as_deref_mut() {
        g.iter_mut().for_each(|x| *x = 0.0);
    }
    let d = linalg::distance(positive.centre, h);
    let mut loss = 0.0;
    let pull = d - mu * positive.radius;
    if pull > 0.0 {
        loss += pull;
        if let (Some(g), true) = (grad.as_deref_mut(), d > 0.0) {
            for ((gk, hk), ck) in g.iter_mut().zip(h).zip(positive.centre) {
                *gk += (hk - ck) / d;
            }
        }
    }
    for neg in negatives {
        let d = linalg::distance(neg.centre, h);
        let push = nu * neg.radius - d;
        if push > 0.0 {
            loss += push;
            if let (Some(g), true) = (grad.as_deref_mut(), d > 0.0) {
                for ((gk, hk), ck) in g.iter_mut().zip(h).zip(neg.centre) {
                    *gk -= (hk - ck) / d;
                }
            }
        }
    }
    loss
}

/// Hidden-layer presets for the projector.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// `input → 128 → 64 → dim`.
    #[default]
    Desk,
    /// `input → 1024 → 512 → 512 → dim`, the large reference stack (meant
    /// for 2048-wide backbone features and a 300-dimensional ball space).
    Paper,
}

impl Preset {
    pub fn hidden(self) -> Vec<usize> {
        match self {
            Preset::Desk => vec![128, 64],
            Preset::Paper => vec![1024, 512, 512],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProjectorConfig {
    pub mu: f64,
    pub nu: f64,
    pub learning_rate: f64,
    pub lr_decay: f64,
    /// Step size during few-shot fine-tuning.
    pub fsl_learning_rate: f64,
    pub epochs_bl: usize,
    pub epochs_fsl: usize,
    /// Examples per mini-batch; 0 means the whole set.
    pub batch_size: usize,
    /// L2 penalty `λ/2 · ‖W‖²` on weights (not biases), added per batch.
    pub weight_decay: f64,
    pub seed: u64,
    pub hidden: Vec<usize>,
    pub optimizer: OptimizerKind,
}

impl Default for ProjectorConfig {
    fn default() -> Self {
        ProjectorConfig {
            mu: 1.0,
            nu: 1.0,
            learning_rate: 1e-3,
            lr_decay: 0.0,
            fsl_learning_rate: 1e-3,
            epochs_bl: 100,
            epochs_fsl: 30,
            batch_size: 32,
            weight_decay: 3e-2,
            seed: 42,
            hidden: Preset::Desk.hidden(),
            optimizer: OptimizerKind::adam(),
        }
    }
}

impl ProjectorConfig {
    pub fn with_preset(preset: Preset) -> Self {
        ProjectorConfig {
            hidden: preset.hidden(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.nu > 0.0) {
            return Err(Error::Config("mu and nu must be positive".into()));
        }
        if !(self.weight_decay >= 0.0) {
            return Err(Error::Config("weight_decay must be non-negative".into()));
        }
        if !(self.learning_rate > 0.0 && self.fsl_learning_rate > 0.0) {
            return Err(Error::Config("learning rates must be positive".into()));
        }
        Ok(())
    }
}

/// Positive ball and negative balls for one class, as space indices.
#[derive(Debug, Clone)]
struct Target {
    positive: usize,
    negatives: Vec<usize>,
}

/// Mean loss per example after each epoch.
pub type LossHistory = Vec<f64>;

fn ball_index(space: &BallSpace, class: &str) -> Result<usize> {
    space
        .index_of(class)
        .ok_or_else(|| Error::MissingBall(class.to_string()))
}

#[allow(clippy::too_many_arguments)]
fn fit(
    mlp: &mut Mlp,
    inputs: &[&[f64]],
    targets: &[&Target],
    space: &BallSpace,
    config: &ProjectorConfig,
    epochs: usize,
    learning_rate: f64,
    stream: u64,
) -> Result<LossHistory> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(stream);
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    let batch = match config.batch_size {
        0 => inputs.len().max(1),
        b => b,
    };
    let mut weight_opt: Vec<Optimizer> = mlp
        .layers
        .iter()
        .map(|l| Optimizer::new(config.optimizer, l.weights.len()))
        .collect();
    let mut bias_opt: Vec<Optimizer> = mlp
        .layers
        .iter()
        .map(|l| Optimizer::new(config.optimizer, l.biases.len()))
        .collect();
    let mut grads = mlp.zero_grads();
    let mut d_out = vec![0.0; mlp.output_dim()];
    let mut history = Vec::with_capacity(epochs);

    for epoch in 0..epochs {
        let lr = inverse_decay(learning_rate, config.lr_decay, epoch);
        order.shuffle(&mut rng);
        for chunk in order.chunks(batch) {
            for g in grads.iter_mut() {
                g.weights.iter_mut().for_each(|x| *x = 0.0);
                g.biases.iter_mut().for_each(|x| *x = 0.0);
            }
            let scale = 1.0 / chunk.len() as f64;
            for &i in chunk {
                let trace = mlp.forward_trace(inputs[i])?;
                let t = targets[i];
                let negs: Vec<Ball<'_>> = t.negatives.iter().map(|&q| space.ball(q)).collect();
                ranking_loss_grad(
                    trace.output(),
                    space.ball(t.positive),
                    &negs,
                    config.mu,
                    config.nu,
                    Some(&mut d_out),
                );
                mlp.backward(&trace, &d_out, scale, &mut grads);
            }
            for (l, layer) in mlp.layers.iter_mut().enumerate() {
                if config.weight_decay > 0.0 {
                    for (g, w) in grads[l].weights.iter_mut().zip(&layer.weights) {
                        *g += config.weight_decay * w;
                    }
                }
                weight_opt[l].step(&mut layer.weights, &grads[l].weights, lr);
                bias_opt[l].step(&mut layer.biases, &grads[l].biases, lr);
            }
        }
        let mean = mean_loss(mlp, inputs, targets, space, config)?;
        if !mean.is_finite() || !mlp.is_finite() {
            return Err(Error::NonFinite {
                term: "ranking",
                epoch,
            });
        }
        log::debug!("projector epoch {epoch}: mean loss {mean:.6}");
        history.push(mean);
    }
    Ok(history)
}

fn mean_loss(
    mlp: &Mlp,
    inputs: &[&[f64]],
    targets: &[&Target],
    space: &BallSpace,
    config: &ProjectorConfig,
) -> Result<f64> {
    if inputs.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for (x, t) in inputs.iter().zip(targets) {
        let h = mlp.forward(x)?;
        let negs: Vec<Ball<'_>> = t.negatives.iter().map(|&q| space.ball(q)).collect();
        total += ranking_loss_grad(&h, space.ball(t.positive), &negs, config.mu, config.nu, None);
    }
    Ok(total / inputs.len() as f64)
}

/// Base learning: trains a freshly initialized MLP on base-class features
/// with each class's hard negatives.
pub fn train_base(
    features: &FeatureDataset,
    space: &BallSpace,
    negatives: &NegativeSets,
    config: &ProjectorConfig,
) -> Result<(Mlp, LossHistory)> {
    config.validate()?;
    let classes = features.classes();
    let mut targets = Vec::with_capacity(classes.len());
    for class in &classes {
        let positive = ball_index(space, class)?;
        let negs = negatives
            .get(class)
            .ok_or_else(|| Error::MissingNegatives(class.clone()))?
            .iter()
            .map(|n| ball_index(space, n))
            .collect::<Result<Vec<_>>>()?;
        targets.push(Target {
            positive,
            negatives: negs,
        });
    }
    let mut sizes = vec![features.dim];
    sizes.extend(&config.hidden);
    sizes.push(space.dim());
    let mut mlp = Mlp::new(&sizes, config.seed)?;
    mlp.base_classes = classes.clone();

    let (inputs, per_example) = per_example_targets(features, &classes, &targets);
    let history = fit(
        &mut mlp,
        &inputs,
        &per_example,
        space,
        config,
        config.epochs_bl,
        config.learning_rate,
        1,
    )?;
    Ok((mlp, history))
}

fn per_example_targets<'a>(
    features: &'a FeatureDataset,
    classes: &[String],
    targets: &'a [Target],
) -> (Vec<&'a [f64]>, Vec<&'a Target>) {
    features
        .examples
        .iter()
        .map(|e| {
            let k = classes.iter().position(|c| *c == e.label).expect("class listed");
            (e.features.as_slice(), &targets[k])
        })
        .unzip()
}

/// Negatives of `class` among `candidates`; falls back to the nearest other
/// candidate by centre distance when none of its negatives are present.
fn episode_negatives(
    class: &str,
    candidates: &[String],
    space: &BallSpace,
    negatives: Option<&NegativeSets>,
) -> Result<Vec<usize>> {
    let own = ball_index(space, class)?;
    let mut out = Vec::new();
    for c in candidates.iter().filter(|c| *c != class) {
        let keep = match negatives.and_then(|n| n.get(class)) {
            Some(list) => list.iter().any(|n| n == c),
            None => true,
        };
        if keep {
            out.push(ball_index(space, c)?);
        }
    }
    if out.is_empty() {
        let nearest = candidates
            .iter()
            .filter(|c| *c != class)
            .map(|c| ball_index(space, c))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .min_by(|&a, &b| {
                let da = linalg::squared_distance(space.centre(own), space.centre(a));
                let db = linalg::squared_distance(space.centre(own), space.centre(b));
                da.partial_cmp(&db).unwrap().then(a.cmp(&b))
            });
        out.extend(nearest);
    }
    Ok(out)
}

/// Few-shot learning: continues training a copy of `mlp` on novel-class
/// support examples. Negatives are restricted to the support classes.
pub fn finetune_fewshot(
    mlp: &Mlp,
    support: &FeatureDataset,
    space: &BallSpace,
    negatives: Option<&NegativeSets>,
    config: &ProjectorConfig,
) -> Result<(Mlp, LossHistory)> {
    config.validate()?;
    let classes = support.classes();
    if let Some(c) = classes.iter().find(|c| mlp.base_classes.contains(c)) {
        return Err(Error::BaseNovelOverlap(c.clone()));
    }
    check_dims(mlp.input_dim(), support.dim)?;
    let targets = classes
        .iter()
        .map(|c| {
            Ok(Target {
                positive: ball_index(space, c)?,
                negatives: episode_negatives(c, &classes, space, negatives)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut tuned = mlp.clone();
    let (inputs, per_example) = per_example_targets(support, &classes, &targets);
    let history = fit(
        &mut tuned,
        &inputs,
        &per_example,
        space,
        config,
        config.epochs_fsl,
        config.fsl_learning_rate,
        2,
    )?;
    Ok((tuned, history))
}

/// Outcome of classifying one projected point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub class: String,
    /// Position of `class` in the candidate list.
    pub index: usize,
    /// `‖c_P − h‖ − r_P` for the chosen class.
    pub u_value: f64,
    pub inside: bool,
    /// Non-candidate concepts whose balls contain the point, deepest first.
    pub containing_ancestors: Vec<String>,
}

/// Picks the candidate whose ball contains `h` most deeply (smallest
/// `‖c − h‖ − r`); if no ball contains `h`, the candidate with the nearest
/// centre. Ties go to the earlier candidate.
pub fn classify(h: &[f64], candidates: &[(&str, Ball<'_>)]) -> Result<Prediction> {
    if candidates.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    for (_, b) in candidates {
        check_dims(b.dim(), h.len())?;
    }
    let mut best_inside: Option<(usize, f64)> = None;
    let mut best_near: Option<(usize, f64)> = None;
    for (i, (_, ball)) in candidates.iter().enumerate() {
        let d = linalg::distance(ball.centre, h);
        let u = d - ball.radius;
        if u <= 0.0 && best_inside.is_none_or(|(_, bu)| u < bu) {
            best_inside = Some((i, u));
        }
        if best_near.is_none_or(|(_, bd)| d < bd) {
            best_near = Some((i, d));
        }
    }
    let (index, inside) = match best_inside {
        Some((i, _)) => (i, true),
        None => (best_near.expect("non-empty").0, false),
    };
    let (name, ball) = candidates[index];
    Ok(Prediction {
        class: name.to_string(),
        index,
        u_value: ball.boundary_gap(h),
        inside,
        containing_ancestors: Vec::new(),
    })
}

/// Every concept whose ball contains `h`, deepest first: by descending
/// level when `stats` (indexed like `space`) is given, otherwise by
/// ascending radius. Remaining ties keep space order.
pub fn ancestor_report(h: &[f64], space: &BallSpace, stats: Option<&HierarchyStats>) -> Vec<String> {
    let mut hits: Vec<usize> = (0..space.len())
        .filter(|&i| space.ball(i).boundary_gap(h) <= 0.0)
        .collect();
    match stats {
        Some(stats) => hits.sort_by_key(|&i| (std::cmp::Reverse(stats.level.get(i).copied().unwrap_or(0)), i)),
        None => hits.sort_by(|&a, &b| space.radius(a).total_cmp(&space.radius(b)).then(a.cmp(&b))),
    }
    hits.into_iter().map(|i| space.name(i).to_string()).collect()
}

/// Classifies among `candidates` and records which other balls contain `h`.
pub fn classify_in_space(
    h: &[f64],
    candidates: &[String],
    space: &BallSpace,
    stats: Option<&HierarchyStats>,
) -> Result<Prediction> {
    let balls = candidates
        .iter()
        .map(|c| Ok((c.as_str(), space.ball_by_name(c)?)))
        .collect::<Result<Vec<_>>>()?;
    let mut prediction = classify(h, &balls)?;
    prediction.containing_ancestors = ancestor_report(h, space, stats)
        .into_iter()
        .filter(|c| !candidates.contains(c))
        .collect();
    Ok(prediction)
}
