//! Hinge, radius-floor and centre-norm terms of the ball embedding loss,
//! with analytic (sub)gradients. Every hinge uses subgradient 0 at its kink,
//! and direction terms vanish where two centres coincide.

use serde::{Deserialize, Serialize};

use super::space::BallSpace;
use super::EmbedConfig;
use crate::error::{Error, Result};
use crate::linalg::{self, check_dims};
use crate::ontology::{ConceptId, HierarchyStats, Ich};

/// `max(0, ‖c_P − c_Q‖ + r_P − r_Q − γ)`: ball P inside ball Q.
pub fn subsumption_hinge(c_p: &[f64], c_q: &[f64], r_p: f64, r_q: f64, gamma: f64) -> Result<f64> {
    check_dims(c_p.len(), c_q.len())?;
    Ok((linalg::distance(c_p, c_q) + r_p - r_q - gamma).max(0.0))
}

/// `max(0, −‖c_P − c_Q‖ + r_P + r_Q + γ)`: balls P and Q apart.
pub fn disjointness_hinge(c_p: &[f64], c_q: &[f64], r_p: f64, r_q: f64, gamma: f64) -> Result<f64> {
    check_dims(c_p.len(), c_q.len())?;
    Ok((r_p + r_q + gamma - linalg::distance(c_p, c_q)).max(0.0))
}

/// The level-dependent lower bound `ψ·sqrt(N_h − L(P))` on a radius.
pub fn radius_floor(total_levels: usize, level: usize, psi: f64) -> Result<f64> {
    if level < 1 || level > total_levels {
        return Err(Error::LevelOutOfRange {
            level,
            total_levels,
        });
    }
    Ok(psi * ((total_levels - level) as f64).sqrt())
}

/// `max(0, ψ·sqrt(N_h − L(P)) − r_P)`.
pub fn radius_floor_penalty(r_p: f64, total_levels: usize, level: usize, psi: f64) -> Result<f64> {
    Ok((radius_floor(total_levels, level, psi)? - r_p).max(0.0))
}

/// `N(P)·|‖c_P‖ − φ|`.
pub fn center_norm_penalty(c_p: &[f64], occurrences: usize, phi: f64) -> f64 {
    occurrences as f64 * (linalg::norm(c_p) - phi).abs()
}

/// Loss split by term.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub subsumption: f64,
    pub disjointness: f64,
    pub radius_floor: f64,
    pub centre_norm: f64,
}

impl LossBreakdown {
    pub fn total(&self) -> f64 {
        self.subsumption + self.disjointness + self.radius_floor + self.centre_norm
    }

    pub fn hinge(&self) -> f64 {
        self.subsumption + self.disjointness
    }

    /// Name of the first non-finite term, if any.
    pub fn non_finite_term(&self) -> Option<&'static str> {
        [
            ("subsumption", self.subsumption),
            ("disjointness", self.disjointness),
            ("radius_floor", self.radius_floor),
            ("centre_norm", self.centre_norm),
        ]
        .into_iter()
        .find(|(_, v)| !v.is_finite())
        .map(|(n, _)| n)
    }
}

/// Gradient with the same layout as [`BallSpace`]: flat centres then radii.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub dim: usize,
    pub centres: Vec<f64>,
    pub radii: Vec<f64>,
}

impl Gradient {
    pub fn zeros(dim: usize, n: usize) -> Self {
        Gradient {
            dim,
            centres: vec![0.0; dim * n],
            radii: vec![0.0; n],
        }
    }

    pub fn centre(&self, i: usize) -> &[f64] {
        &self.centres[i * self.dim..(i + 1) * self.dim]
    }

    fn centre_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.centres[i * self.dim..(i + 1) * self.dim]
    }

    pub fn clear(&mut self) {
        self.centres.iter_mut().for_each(|g| *g = 0.0);
        self.radii.iter_mut().for_each(|g| *g = 0.0);
    }
}

/// Accumulates `weight · ∂ hinge` for one subsumption; returns the hinge value.
pub(crate) fn add_subsumption(
    space: &BallSpace,
    p: usize,
    q: usize,
    gamma: f64,
    weight: f64,
    grad: Option<&mut Gradient>,
) -> f64 {
    let (cp, cq) = (space.centre(p), space.centre(q));
    let d = linalg::distance(cp, cq);
    let value = d + space.radius(p) - space.radius(q) - gamma;
    if value <= 0.0 {
        return 0.0;
    }
    if let Some(grad) = grad {
        grad.radii[p] += weight;
        grad.radii[q] -= weight;
        if d > 0.0 {
            for k in 0..space.dim() {
                let u = weight * (cp[k] - cq[k]) / d;
                grad.centre_mut(p)[k] += u;
                grad.centre_mut(q)[k] -= u;
            }
        }
    }
    value
}

pub(crate) fn add_disjointness(
    space: &BallSpace,
    p: usize,
    q: usize,
    gamma: f64,
    weight: f64,
    grad: Option<&mut Gradient>,
) -> f64 {
    let (cp, cq) = (space.centre(p), space.centre(q));
    let d = linalg::distance(cp, cq);
    let value = space.radius(p) + space.radius(q) + gamma - d;
    if value <= 0.0 {
        return 0.0;
    }
    if let Some(grad) = grad {
        grad.radii[p] += weight;
        grad.radii[q] += weight;
        if d > 0.0 {
            for k in 0..space.dim() {
                let u = weight * (cp[k] - cq[k]) / d;
                grad.centre_mut(p)[k] -= u;
                grad.centre_mut(q)[k] += u;
            }
        }
    }
    value
}

pub(crate) fn add_radius_floor(
    space: &BallSpace,
    i: usize,
    stats: &HierarchyStats,
    psi: f64,
    weight: f64,
    grad: &mut Gradient,
) {
    let floor = psi * ((stats.total_levels - stats.level[i]) as f64).sqrt();
    if floor - space.radius(i) > 0.0 {
        grad.radii[i] -= weight;
    }
}

/// Radius-floor and centre-norm terms for concept `i`, weighted.
pub(crate) fn add_concept_terms(
    space: &BallSpace,
    i: usize,
    stats: &HierarchyStats,
    psi: f64,
    phi: f64,
    weight: f64,
    mut grad: Option<&mut Gradient>,
) -> (f64, f64) {
    let floor = psi * ((stats.total_levels - stats.level[i]) as f64).sqrt();
    let floor_value = (floor - space.radius(i)).max(0.0);
    if floor_value > 0.0 {
        if let Some(g) = grad.as_deref_mut() {
            g.radii[i] -= weight;
        }
    }

    let c = space.centre(i);
    let n_occ = stats.occurrences[i] as f64;
    let norm = linalg::norm(c);
    let norm_value = n_occ * (norm - phi).abs();
    if let Some(g) = grad {
        if n_occ > 0.0 && norm > 0.0 && norm != phi {
            let s = weight * n_occ * (norm - phi).signum() / norm;
            for (gk, ck) in g.centre_mut(i).iter_mut().zip(c) {
                *gk += s * ck;
            }
        }
    }
    (floor_value, norm_value)
}

fn check_coverage(
    space: &BallSpace,
    ich: &Ich,
    disjoint: &[(ConceptId, ConceptId)],
    stats: &HierarchyStats,
) -> Result<()> {
    let missing = |i: usize| Error::MissingBall(format!("concept #{i}"));
    if stats.level.len() > space.len() {
        return Err(missing(space.len()));
    }
    for &(a, b) in ich.pairs().iter().chain(disjoint) {
        let hi = a.0.max(b.0);
        if hi >= space.len() {
            return Err(missing(hi));
        }
    }
    Ok(())
}

fn evaluate(
    space: &BallSpace,
    ich: &Ich,
    disjoint: &[(ConceptId, ConceptId)],
    stats: &HierarchyStats,
    config: &EmbedConfig,
    mut grad: Option<&mut Gradient>,
) -> Result<LossBreakdown> {
    check_coverage(space, ich, disjoint, stats)?;
    let mut out = LossBreakdown::default();
    for &(p, q) in ich.pairs() {
        out.subsumption += add_subsumption(space, p.0, q.0, config.gamma, 1.0, grad.as_deref_mut());
    }
    let gamma_d = config.disjoint_gamma();
    for &(p, q) in disjoint {
        out.disjointness += add_disjointness(space, p.0, q.0, gamma_d, 1.0, grad.as_deref_mut());
    }
    for i in 0..stats.level.len() {
        let (f, n) = add_concept_terms(space, i, stats, config.psi, config.phi, 1.0, grad.as_deref_mut());
        out.radius_floor += f;
        out.centre_norm += n;
    }
    Ok(out)
}

/// Full loss over all ICH pairs, disjoint pairs and concepts.
pub fn total_loss(
    space: &BallSpace,
    ich: &Ich,
    disjoint: &[(ConceptId, ConceptId)],
    stats: &HierarchyStats,
    config: &EmbedConfig,
) -> Result<LossBreakdown> {
    evaluate(space, ich, disjoint, stats, config, None)
}

/// Analytic gradient of [`total_loss`] with respect to every centre and radius.
pub fn loss_gradients(
    space: &BallSpace,
    ich: &Ich,
    disjoint: &[(ConceptId, ConceptId)],
    stats: &HierarchyStats,
    config: &EmbedConfig,
) -> Result<Gradient> {
    let mut grad = Gradient::zeros(space.dim(), space.len());
    evaluate(space, ich, disjoint, stats, config, Some(&mut grad))?;
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn subsumption_examples() {
        assert_eq!(subsumption_hinge(&[0.0, 0.0], &[0.0, 0.0], 0.3, 1.0, 0.0).unwrap(), 0.0);
        assert_eq!(subsumption_hinge(&[1.0, 0.0], &[0.0, 0.0], 0.5, 0.5, 0.0).unwrap(), 1.0);
        assert_relative_eq!(
            subsumption_hinge(&[1.0, 0.0], &[0.0, 0.0], 0.5, 0.5, -0.2).unwrap(),
            1.2
        );
        assert!(matches!(
            subsumption_hinge(&[1.0], &[0.0, 0.0], 0.5, 0.5, 0.0),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn disjointness_examples() {
        assert_eq!(disjointness_hinge(&[0.0, 0.0], &[3.0, 0.0], 1.0, 1.0, 0.0).unwrap(), 0.0);
        assert_relative_eq!(
            disjointness_hinge(&[0.0, 0.0], &[1.0, 0.0], 0.6, 0.6, 0.0).unwrap(),
            0.2,
            epsilon = 1e-15
        );
        assert_eq!(disjointness_hinge(&[0.5, 0.5], &[0.5, 0.5], 1.0, 1.0, 0.0).unwrap(), 2.0);
        assert!(disjointness_hinge(&[0.0], &[0.0, 1.0], 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn radius_floor_examples() {
        assert_eq!(radius_floor_penalty(0.0, 4, 4, 0.3).unwrap(), 0.0);
        assert_relative_eq!(
            radius_floor_penalty(0.1, 4, 1, 0.1).unwrap(),
            0.1 * 3f64.sqrt() - 0.1,
            epsilon = 1e-15
        );
        assert_relative_eq!(radius_floor_penalty(0.1, 4, 1, 0.1).unwrap(), 0.07321, epsilon = 1e-5);
        assert_eq!(radius_floor_penalty(0.5, 4, 1, 0.1).unwrap(), 0.0);
        assert!(matches!(
            radius_floor_penalty(0.5, 4, 5, 0.1),
            Err(Error::LevelOutOfRange { level: 5, total_levels: 4 })
        ));
        assert!(radius_floor_penalty(0.5, 4, 0, 0.1).is_err());
    }

    #[test]
    fn centre_norm_examples() {
        assert_eq!(center_norm_penalty(&[0.6, 0.8], 5, 1.0), 0.0);
        assert_relative_eq!(center_norm_penalty(&[1.2, 0.0], 3, 1.0), 0.6, epsilon = 1e-12);
        assert_eq!(center_norm_penalty(&[7.0, -3.0], 0, 1.0), 0.0);
    }
}
