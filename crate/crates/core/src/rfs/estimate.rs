use super::{mean_unchecked, BernoulliTrack, Label, LmbDensity, MultiTargetEstimate, Particle, StateVector, WEIGHT_SUM_TOL};
use crate::error::{Error, Result};

/// How point estimates are read off an LMB density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtractionMode {
    /// Every track with `r > τ`.
    Threshold(f64),
    /// The `round(Σ r)` tracks with the largest `r`, ties to the smaller label.
    MapCardinality,
}

impl Default for ExtractionMode {
    fn default() -> Self {
        ExtractionMode::Threshold(0.5)
    }
}

/// Weighted average of a particle cloud. Rejects clouds whose weights do not
/// sum to one.
pub fn weighted_mean(particles: &[Particle]) -> Result<StateVector> {
    let sum: f64 = particles.iter().map(|p| p.weight).sum();
    if particles.is_empty() || (sum - 1.0).abs() > WEIGHT_SUM_TOL {
        return Err(Error::Unnormalized {
            label: "<unlabeled>".into(),
            sum,
        });
    }
    Ok(mean_unchecked(particles))
}

pub fn estimated_cardinality(lmb: &LmbDensity) -> f64 {
    lmb.tracks().iter().map(|t| t.r()).sum()
}

pub fn extract_estimates(lmb: &LmbDensity, mode: ExtractionMode) -> MultiTargetEstimate {
    let selected: Vec<&BernoulliTrack> = match mode {
        ExtractionMode::Threshold(tau) => lmb.tracks().iter().filter(|t| t.r() > tau).collect(),
        ExtractionMode::MapCardinality => {
            // round half up
            let n = (estimated_cardinality(lmb) + 0.5).floor() as usize;
            let mut ranked: Vec<&BernoulliTrack> = lmb.tracks().iter().collect();
            ranked.sort_by(|a, b| {
                b.r()
                    .total_cmp(&a.r())
                    .then_with(|| a.label().cmp(&b.label()))
            });
            ranked.truncate(n);
            ranked
        }
    };
    let items: Vec<(Label, StateVector)> = selected.iter().map(|t| (t.label(), t.mean())).collect();
    MultiTargetEstimate::new(items).expect("LMB labels are unique")
}
