//! n-ball concept embeddings learned by (sub)gradient descent on the
//! subsumption, disjointness, radius-floor and centre-norm terms.

mod loss;
mod space;

pub use loss::{
    center_norm_penalty, disjointness_hinge, loss_gradients, radius_floor, radius_floor_penalty,
    subsumption_hinge, total_loss, Gradient, LossBreakdown,
};
pub use space::{Ball, BallSpace};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::Scores;
use crate::linalg;
use crate::ontology::{ConceptId, HierarchyStats, Ich, Ontology};
use crate::optim::{inverse_decay, Optimizer, OptimizerKind};

/// Hyperparameters and optimizer settings for ball training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbedConfig {
    pub dim: usize,
    /// Margin shared by subsumption and disjointness hinges.
    pub gamma: f64,
    /// Separate disjointness margin; `None` shares `gamma`.
    pub gamma_disjoint: Option<f64>,
    pub psi: f64,
    pub phi: f64,
    pub learning_rate: f64,
    /// Step size at epoch `t` is `learning_rate / (1 + lr_decay · t)`.
    pub lr_decay: f64,
    pub epochs: usize,
    /// Axioms per mini-batch; 0 means one batch per epoch.
    pub batch_size: usize,
    pub seed: u64,
    pub radius_clamp_min: f64,
    pub optimizer: OptimizerKind,
    /// With full batches, halve a step (up to `max_backtracks` times) until
    /// the loss does not increase; a step that never qualifies is skipped.
    pub backtrack: bool,
    pub max_backtracks: usize,
}

impl Default for EmbedConfig {
    fn default() -> Self {
        EmbedConfig {
            dim: 300,
            gamma: -0.05,
            gamma_disjoint: None,
            psi: 0.1,
            phi: 1.0,
            learning_rate: 0.05,
            lr_decay: 0.01,
            epochs: 2000,
            batch_size: 0,
            seed: 42,
            radius_clamp_min: 1e-4,
            optimizer: OptimizerKind::Sgd,
            backtrack: false,
            max_backtracks: 30,
        }
    }
}

impl EmbedConfig {
    pub fn disjoint_gamma(&self) -> f64 {
        self.gamma_disjoint.unwrap_or(self.gamma)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if self.dim < 2 {
            return fail("dim must be at least 2");
        }
        if !(self.psi > 0.0) {
            return fail("psi must be positive");
        }
        if !(self.phi > 0.0) {
            return fail("phi must be positive");
        }
        if !(self.radius_clamp_min > 0.0) {
            return fail("radius_clamp_min must be positive");
        }
        if !(self.learning_rate > 0.0) || !(self.lr_decay >= 0.0) {
            return fail("learning_rate must be positive and lr_decay non-negative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub learning_rate: f64,
    pub loss: LossBreakdown,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    pub final_scores: Option<Scores>,
}

impl TrainHistory {
    pub fn final_loss(&self) -> Option<LossBreakdown> {
        self.epochs.last().map(|e| e.loss)
    }
}

/// Centres uniform on the sphere of radius `phi`; radii at their floor plus
/// `radius_clamp_min`.
pub fn init_space(concepts: &[String], stats: &HierarchyStats, config: &EmbedConfig) -> Result<BallSpace> {
    config.validate()?;
    if stats.level.len() != concepts.len() {
        return Err(Error::Config(format!(
            "{} concepts but statistics for {}",
            concepts.len(),
            stats.level.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let dim = config.dim;
    let mut centres = Vec::with_capacity(dim * concepts.len());
    let mut radii = Vec::with_capacity(concepts.len());
    for (i, _) in concepts.iter().enumerate() {
        let v: Vec<f64> = loop {
            let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
            if linalg::norm(&v) > 1e-12 {
                break v;
            }
        };
        let scale = config.phi / linalg::norm(&v);
        centres.extend(v.iter().map(|x| x * scale));
        radii.push(radius_floor(stats.total_levels, stats.level[i], config.psi)? + config.radius_clamp_min);
    }
    Ok(BallSpace::from_flat(dim, concepts.to_vec(), centres, radii))
}

#[derive(Debug, Clone, Copy)]
enum Axiom {
    Subsumption(ConceptId, ConceptId),
    Disjoint(ConceptId, ConceptId),
}

/// Mini-batch descent over shuffled axioms. Concept-level terms are applied
/// in every batch, scaled by the batch's share of the axioms, so one epoch
/// sums to the full-loss gradient.
pub fn train_embeddings(
    ontology: &Ontology,
    ich: &Ich,
    stats: &HierarchyStats,
    config: &EmbedConfig,
) -> Result<(BallSpace, TrainHistory)> {
    let mut space = init_space(ontology.concepts(), stats, config)?;
    let history = train_from(&mut space, ich, ontology.disjoint_pairs(), stats, config)?;
    Ok((space, history))
}

/// Gradient step on the hinge and floor terms, then the exact proximal step
/// of the centre-norm term: each centre moves radially toward the sphere of
/// radius `phi` by at most `lr · share · N(P)`, stopping on it.
#[allow(clippy::too_many_arguments)]
fn apply_step(
    space: &mut BallSpace,
    centre_opt: &mut Optimizer,
    radius_opt: &mut Optimizer,
    grad: &Gradient,
    lr: f64,
    share: f64,
    stats: &HierarchyStats,
    config: &EmbedConfig,
) {
    let dim = space.dim();
    let (centres, radii) = space.params_mut();
    centre_opt.step(centres, &grad.centres, lr);
    radius_opt.step(radii, &grad.radii, lr);
    radii
        .iter_mut()
        .for_each(|r| *r = r.max(config.radius_clamp_min));
    for (c, &n_occ) in centres.chunks_mut(dim).zip(&stats.occurrences) {
        let norm = linalg::norm(c);
        if n_occ == 0 || norm == 0.0 {
            continue;
        }
        let reach = lr * share * n_occ as f64;
        let gap = norm - config.phi;
        let target = if gap.abs() <= reach {
            config.phi
        } else {
            norm - reach * gap.signum()
        };
        let scale = target / norm;
        c.iter_mut().for_each(|x| *x *= scale);
    }
}

/// Continues training an existing space in place.
pub fn train_from(
    space: &mut BallSpace,
    ich: &Ich,
    disjoint: &[(ConceptId, ConceptId)],
    stats: &HierarchyStats,
    config: &EmbedConfig,
) -> Result<TrainHistory> {
    config.validate()?;
    let mut axioms: Vec<Axiom> = ich
        .pairs()
        .iter()
        .map(|&(p, q)| Axiom::Subsumption(p, q))
        .chain(disjoint.iter().map(|&(p, q)| Axiom::Disjoint(p, q)))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);

    let n = space.len();
    let dim = space.dim();
    let mut grad = Gradient::zeros(dim, n);
    let mut centre_opt = Optimizer::new(config.optimizer, dim * n);
    let mut radius_opt = Optimizer::new(config.optimizer, n);
    let batch_size = match config.batch_size {
        0 => axioms.len().max(1),
        b => b,
    };
    let gamma_d = config.disjoint_gamma();
    let mut history = TrainHistory::default();

    let full_batch = batch_size >= axioms.len();
    let mut current = total_loss(space, ich, disjoint, stats, config)?.total();

    for epoch in 0..config.epochs {
        let lr = inverse_decay(config.learning_rate, config.lr_decay, epoch);
        axioms.shuffle(&mut rng);
        let batches: Vec<&[Axiom]> = if axioms.is_empty() {
            vec![&[]]
        } else {
            axioms.chunks(batch_size).collect()
        };
        for batch in batches {
            grad.clear();
            for ax in batch {
                match *ax {
                    Axiom::Subsumption(p, q) => {
                        loss::add_subsumption(space, p.0, q.0, config.gamma, 1.0, Some(&mut grad));
                    }
                    Axiom::Disjoint(p, q) => {
                        loss::add_disjointness(space, p.0, q.0, gamma_d, 1.0, Some(&mut grad));
                    }
                }
            }
            let share = if axioms.is_empty() {
                1.0
            } else {
                batch.len() as f64 / axioms.len() as f64
            };
            for i in 0..n {
                loss::add_radius_floor(space, i, stats, config.psi, share, &mut grad);
            }
            if full_batch && config.backtrack {
                let saved = (space.clone(), centre_opt.clone(), radius_opt.clone());
                let mut step = lr;
                let mut accepted = false;
                for _ in 0..=config.max_backtracks {
                    apply_step(space, &mut centre_opt, &mut radius_opt, &grad, step, share, stats, config);
                    let trial = total_loss(space, ich, disjoint, stats, config)?.total();
                    if trial <= current {
                        current = trial;
                        accepted = true;
                        break;
                    }
                    *space = saved.0.clone();
                    centre_opt = saved.1.clone();
                    radius_opt = saved.2.clone();
                    step *= 0.5;
                }
                if !accepted {
                    log::trace!("epoch {epoch}: no descent step found");
                }
            } else {
                apply_step(space, &mut centre_opt, &mut radius_opt, &grad, lr, share, stats, config);
            }
        }

        let loss = total_loss(space, ich, disjoint, stats, config)?;
        if let Some(term) = loss.non_finite_term() {
            return Err(Error::NonFinite { term, epoch });
        }
        log::debug!(
            "epoch {epoch}: total {:.6} (subsumption {:.6}, disjointness {:.6}, floor {:.6}, norm {:.6})",
            loss.total(),
            loss.subsumption,
            loss.disjointness,
            loss.radius_floor,
            loss.centre_norm
        );
        current = loss.total();
        history.epochs.push(EpochRecord {
            epoch,
            learning_rate: lr,
            loss,
        });
    }
    Ok(history)
}
