use rand::Rng;
use rand_distr::StandardNormal;

use super::FilterConfig;
use crate::interaction::{resolve_anchor, InteractionConfig, InteractionContext, InteractionModel};
use crate::motion::sample_transition;
use crate::par;
use crate::random::RandomSource;
use crate::rfs::{BernoulliTrack, Label, LmbDensity, MultiTargetEstimate, Particle, StateVector};

/// Weight sums below this are treated as underflow.
const UNDERFLOW_SUM: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub density: LmbDensity,
    /// Tracks whose weights were shaped by an interacting neighbour.
    pub interaction_pairs: usize,
    /// Tracks whose interaction-weighted sum underflowed (prior weights kept).
    pub underflows: usize,
}

/// Interaction-aware prediction using `cfg.interaction`.
pub fn predict(
    prior: &LmbDensity,
    prev_estimates: &MultiTargetEstimate,
    cfg: &FilterConfig,
    rng: &RandomSource,
) -> Prediction {
    predict_with(prior, prev_estimates, cfg, &cfg.interaction, rng)
}

/// Prediction with an explicit interaction configuration.
///
/// Each track draws from its own substream `rng/[birth_time, birth_index]`,
/// so the result does not depend on the interaction model or on evaluation
/// order. `r' = p_s · r`; particles move through the NCV model and weights
/// are multiplied by `g` and renormalized.
pub fn predict_with(
    prior: &LmbDensity,
    prev_estimates: &MultiTargetEstimate,
    cfg: &FilterConfig,
    interaction: &InteractionConfig,
    rng: &RandomSource,
) -> Prediction {
    let results = par::map(cfg.execution, prior.tracks(), |track| {
        let label = track.label();
        let mut track_rng = rng.substream(&[label.birth_time, label.birth_index]);
        predict_track(track, prev_estimates, cfg, interaction, &mut track_rng)
    });
    let mut interaction_pairs = 0;
    let mut underflows = 0;
    let tracks = results
        .into_iter()
        .map(|(t, anchored, underflow)| {
            interaction_pairs += anchored as usize;
            underflows += underflow as usize;
            t
        })
        .collect();
    Prediction {
        density: LmbDensity::from_tracks_unchecked(tracks),
        interaction_pairs,
        underflows,
    }
}

fn predict_track(
    track: &BernoulliTrack,
    prev_estimates: &MultiTargetEstimate,
    cfg: &FilterConfig,
    interaction: &InteractionConfig,
    rng: &mut RandomSource,
) -> (BernoulliTrack, bool, bool) {
    let label = track.label();
    let r = (cfg.p_s * track.r()).clamp(0.0, 1.0);
    let mut particles: Vec<Particle> = track
        .particles()
        .iter()
        .map(|p| Particle::new(sample_transition(p.state, &cfg.motion, rng), p.weight))
        .collect();

    if interaction.model == InteractionModel::None {
        return (BernoulliTrack::from_parts(label, r, particles), false, false);
    }

    let subject_prev = track.mean();
    let ctx = InteractionContext::new(prev_estimates, label);
    let Some(anchor) = resolve_anchor(interaction, label, &subject_prev, &ctx, &cfg.motion) else {
        return (BernoulliTrack::from_parts(label, r, particles), false, false);
    };

    // Work with g scaled by its maximum so a factor common to all particles
    // leaves the weights bit-for-bit unchanged.
    let logs: Vec<f64> = particles
        .iter()
        .map(|p| anchor.log_factor_unnormalized(&p.state, interaction.sigma_d))
        .collect();
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scale: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    if scale.iter().all(|&s| s == 1.0) {
        return (BernoulliTrack::from_parts(label, r, particles), true, false);
    }
    let sum: f64 = particles.iter().zip(&scale).map(|(p, s)| p.weight * s).sum();
    if !(sum >= UNDERFLOW_SUM && sum.is_finite()) {
        return (BernoulliTrack::from_parts(label, r, particles), true, true);
    }
    for (p, s) in particles.iter_mut().zip(&scale) {
        p.weight = p.weight * s / sum;
    }
    (BernoulliTrack::from_parts(label, r, particles), true, false)
}

/// Appends one track per birth component, labeled `(frame, index)`, with
/// `num_particles` uniform-weight draws from the component's Gaussian.
pub fn append_birth(predicted: LmbDensity, cfg: &FilterConfig, frame: u64, rng: &RandomSource) -> LmbDensity {
    if cfg.birth.components.is_empty() {
        return predicted;
    }
    let j = cfg.num_particles;
    let born = par::map(cfg.execution, &cfg.birth.components.iter().enumerate().collect::<Vec<_>>(), |(i, c)| {
        let mut rng = rng.substream(&[*i as u64]);
        let mean = nalgebra::Vector4::from(c.mean.to_array());
        let states: Vec<StateVector> = (0..j)
            .map(|_| {
                let z = nalgebra::Vector4::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal));
                let x = mean + c.chol() * z;
                StateVector::new(x[0], x[1], x[2], x[3])
            })
            .collect();
        let w = 1.0 / j as f64;
        BernoulliTrack::from_parts(
            Label::new(frame, *i as u64),
            c.r,
            states.into_iter().map(|s| Particle::new(s, w)).collect(),
        )
    });
    let mut tracks = predicted.into_tracks();
    tracks.extend(born);
    LmbDensity::new(tracks).expect("birth labels are frame-stamped and cannot collide")
}
