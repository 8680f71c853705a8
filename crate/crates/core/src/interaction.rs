//! Interaction-aware weighting.
//!
//! The interaction factor `g` multiplies predicted particle weights. It is
//! built from the previous frame's extracted estimates with the subject's own
//! label removed (the leave-one-out context). Two models are provided:
//!
//! * **Swarm**: keep the distance to the nearest neighbour.
//! * **FrontVehicle**: keep the distance to the nearest neighbour that is
//!   close, heading the same way, and ahead of the subject.
//!
//! In both cases `g = N(e; 0, σ_d²)` with `e = d̂ − dist(particle, F x̂_neighbour)`
//! where `d̂` is the distance between the two previous estimates.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::motion::{noise_free_predict, NcvParams};
use crate::rfs::{Label, MultiTargetEstimate, StateVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InteractionModel {
    #[default]
    None,
    Swarm,
    FrontVehicle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InteractionConfig {
    pub model: InteractionModel,
    /// Near-distance threshold in scene units.
    pub d_th: f64,
    /// Same-direction threshold, degrees.
    pub alpha_th: f64,
    /// In-front threshold, degrees.
    pub beta_th: f64,
    /// Accepted change of the neighbour distance per frame, scene units.
    pub sigma_d: f64,
    /// Whether the in-front (β) filter is applied.
    pub front_filter: bool,
}

impl Default for InteractionConfig {
    fn default() -> Self {
        Self {
            model: InteractionModel::None,
            d_th: 50.0,
            alpha_th: 15.0,
            beta_th: 60.0,
            sigma_d: 5.0,
            front_filter: true,
        }
    }
}

impl InteractionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.d_th > 0.0) {
            return Err(Error::invalid("interaction.d_th", "must be positive"));
        }
        if !(self.alpha_th > 0.0 && self.alpha_th < 180.0) {
            return Err(Error::invalid("interaction.alpha_th", "must lie in (0, 180) degrees"));
        }
        if !(self.beta_th > 0.0 && self.beta_th < 180.0) {
            return Err(Error::invalid("interaction.beta_th", "must lie in (0, 180) degrees"));
        }
        if !(self.sigma_d > 0.0) {
            return Err(Error::invalid("interaction.sigma_d", "must be positive"));
        }
        Ok(())
    }
}

/// Previous-frame estimates seen from one subject: the subject itself is
/// never part of the context.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionContext {
    estimates: MultiTargetEstimate,
    excluded: Label,
}

impl InteractionContext {
    pub fn new(estimates: &MultiTargetEstimate, excluded: Label) -> Self {
        Self {
            estimates: estimates.without(excluded),
            excluded,
        }
    }

    pub fn estimates(&self) -> &MultiTargetEstimate {
        &self.estimates
    }

    pub fn excluded(&self) -> Label {
        self.excluded
    }

    fn state(&self, label: Label) -> Option<StateVector> {
        self.estimates.get(label)
    }
}

pub fn euclidean_distance(a: &StateVector, b: &StateVector) -> f64 {
    let dx = a.px - b.px;
    let dy = a.py - b.py;
    (dx * dx + dy * dy).sqrt()
}

/// Closest context element to `query`; ties go to the smaller label.
pub fn nearest_neighbor(query: &StateVector, ctx: &InteractionContext) -> Option<(Label, f64)> {
    let mut best: Option<(Label, f64)> = None;
    for (label, state) in ctx.estimates.items() {
        let d = euclidean_distance(query, state);
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((*label, d));
        }
    }
    best
}

/// Gaussian density `N(e; 0, σ_d²)` of the distance-keeping error.
pub fn swarm_weight_factor(
    particle: &StateVector,
    d_hat: f64,
    neighbor_pred: &StateVector,
    sigma_d: f64,
) -> f64 {
    let e = d_hat - euclidean_distance(particle, neighbor_pred);
    (-0.5 * (e / sigma_d).powi(2)).exp() / ((2.0 * std::f64::consts::PI).sqrt() * sigma_d)
}

/// Angle between two planar vectors in degrees, in `[0, 180]`.
pub fn velocity_angle(v1: [f64; 2], v2: [f64; 2]) -> Result<f64> {
    let n1 = v1[0].hypot(v1[1]);
    let n2 = v2[0].hypot(v2[1]);
    if !(n1 > 0.0 && n2 > 0.0) {
        return Err(Error::ZeroNorm);
    }
    let cos = ((v1[0] * v2[0] + v1[1] * v2[1]) / (n1 * n2)).clamp(-1.0, 1.0);
    Ok(cos.acos().to_degrees())
}

pub fn near_set(
    subject: Label,
    subject_state: &StateVector,
    ctx: &InteractionContext,
    d_th: f64,
) -> BTreeSet<Label> {
    ctx.estimates
        .items()
        .iter()
        .filter(|(l, s)| *l != subject && euclidean_distance(subject_state, s) <= d_th)
        .map(|(l, _)| *l)
        .collect()
}

pub fn filter_same_direction(
    subject_vel: [f64; 2],
    candidates: &BTreeSet<Label>,
    ctx: &InteractionContext,
    alpha_th: f64,
) -> BTreeSet<Label> {
    candidates
        .iter()
        .copied()
        .filter(|l| {
            ctx.state(*l)
                .and_then(|s| velocity_angle(subject_vel, s.velocity()).ok())
                .is_some_and(|angle| angle <= alpha_th)
        })
        .collect()
}

pub fn filter_in_front(
    subject_state: &StateVector,
    candidates: &BTreeSet<Label>,
    ctx: &InteractionContext,
    beta_th: f64,
) -> BTreeSet<Label> {
    candidates
        .iter()
        .copied()
        .filter(|l| {
            ctx.state(*l)
                .and_then(|s| {
                    let rel = [s.px - subject_state.px, s.py - subject_state.py];
                    velocity_angle(subject_state.velocity(), rel).ok()
                })
                .is_some_and(|angle| angle <= beta_th)
        })
        .collect()
}

/// Near set → same direction → in front (when enabled) → closest.
pub fn front_vehicle(
    subject: Label,
    subject_state: &StateVector,
    ctx: &InteractionContext,
    cfg: &InteractionConfig,
) -> Option<Label> {
    let near = near_set(subject, subject_state, ctx, cfg.d_th);
    let mut candidates = filter_same_direction(subject_state.velocity(), &near, ctx, cfg.alpha_th);
    if cfg.front_filter {
        candidates = filter_in_front(subject_state, &candidates, ctx, cfg.beta_th);
    }
    let mut best: Option<(Label, f64)> = None;
    for l in candidates {
        let d = euclidean_distance(subject_state, &ctx.state(l)?);
        if best.is_none_or(|(_, bd)| d < bd) {
            best = Some((l, d));
        }
    }
    best.map(|(l, _)| l)
}

/// The interacting neighbour of one subject, resolved once per track.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InteractionAnchor {
    pub neighbor: Label,
    /// Distance between the subject's and the neighbour's previous estimates.
    pub d_hat: f64,
    /// Noise-free prediction of the neighbour's estimate.
    pub neighbor_pred: StateVector,
}

impl InteractionAnchor {
    pub fn factor(&self, particle: &StateVector, sigma_d: f64) -> f64 {
        swarm_weight_factor(particle, self.d_hat, &self.neighbor_pred, sigma_d)
    }

    /// `log g` up to the additive constant `−ln(√(2π) σ_d)`.
    pub fn log_factor_unnormalized(&self, particle: &StateVector, sigma_d: f64) -> f64 {
        let e = self.d_hat - euclidean_distance(particle, &self.neighbor_pred);
        -0.5 * (e / sigma_d).powi(2)
    }
}

pub fn resolve_anchor(
    cfg: &InteractionConfig,
    subject: Label,
    subject_prev_estimate: &StateVector,
    ctx: &InteractionContext,
    motion: &NcvParams,
) -> Option<InteractionAnchor> {
    let neighbor = match cfg.model {
        InteractionModel::None => return None,
        InteractionModel::Swarm => nearest_neighbor(subject_prev_estimate, ctx)?.0,
        InteractionModel::FrontVehicle => front_vehicle(subject, subject_prev_estimate, ctx, cfg)?,
    };
    let neighbor_state = ctx.state(neighbor)?;
    Some(InteractionAnchor {
        neighbor,
        d_hat: euclidean_distance(subject_prev_estimate, &neighbor_state),
        neighbor_pred: noise_free_predict(neighbor_state, motion),
    })
}

/// `g(particle | ψ)` for one particle; 1 when the model is off or no
/// interacting neighbour exists.
pub fn interaction_factor(
    cfg: &InteractionConfig,
    subject: Label,
    particle: &StateVector,
    ctx: &InteractionContext,
    motion: &NcvParams,
    subject_prev_estimate: &StateVector,
) -> f64 {
    resolve_anchor(cfg, subject, subject_prev_estimate, ctx, motion)
        .map_or(1.0, |a| a.factor(particle, cfg.sigma_d))
}
