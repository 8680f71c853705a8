//! Labeled random finite set data model.
//!
//! An LMB density is a uniquely labeled collection of Bernoulli tracks, each
//! an existence probability plus a weighted particle cloud.

mod estimate;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub use estimate::{estimated_cardinality, extract_estimates, weighted_mean, ExtractionMode};

/// Tolerance on `|Σ weights − 1|` accepted by every constructor.
pub const WEIGHT_SUM_TOL: f64 = 1e-9;

/// Track label: the frame a component was born in and its index within that
/// frame's birth model. Ordered lexicographically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Label {
    pub birth_time: u64,
    pub birth_index: u64,
}

impl Label {
    pub const fn new(birth_time: u64, birth_index: u64) -> Self {
        Self {
            birth_time,
            birth_index,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.birth_time, self.birth_index)
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let (t, i) = s
            .split_once(':')
            .ok_or_else(|| format!("label `{s}` is not of the form birth_time:birth_index"))?;
        let birth_time = t
            .trim()
            .parse()
            .map_err(|_| format!("bad birth time in label `{s}`"))?;
        let birth_index = i
            .trim()
            .parse()
            .map_err(|_| format!("bad birth index in label `{s}`"))?;
        Ok(Label::new(birth_time, birth_index))
    }
}

/// Single-target state `[px, vx, py, vy]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StateVector {
    pub px: f64,
    pub vx: f64,
    pub py: f64,
    pub vy: f64,
}

impl StateVector {
    pub const fn new(px: f64, vx: f64, py: f64, vy: f64) -> Self {
        Self { px, vx, py, vy }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.px, self.vx, self.py, self.vy]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn position(&self) -> [f64; 2] {
        [self.px, self.py]
    }

    pub fn velocity(&self) -> [f64; 2] {
        [self.vx, self.vy]
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Particle {
    pub state: StateVector,
    pub weight: f64,
}

impl Particle {
    pub const fn new(state: StateVector, weight: f64) -> Self {
        Self { state, weight }
    }
}

/// One labeled, possibly existing target.
#[derive(Debug, Clone, PartialEq)]
pub struct BernoulliTrack {
    label: Label,
    r: f64,
    particles: Vec<Particle>,
}

impl BernoulliTrack {
    /// Validates existence probability, particle finiteness and weight normalization.
    pub fn new(label: Label, r: f64, particles: Vec<Particle>) -> Result<Self> {
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::InvalidTrack(format!(
                "existence probability {r} of {label} outside [0, 1]"
            )));
        }
        check_particles(label, &particles)?;
        Ok(Self {
            label,
            r,
            particles,
        })
    }

    /// Builds a track with uniform weights `1/J` over `states`.
    pub fn uniform(label: Label, r: f64, states: Vec<StateVector>) -> Result<Self> {
        let w = 1.0 / states.len().max(1) as f64;
        Self::new(
            label,
            r,
            states.into_iter().map(|s| Particle::new(s, w)).collect(),
        )
    }

    pub(crate) fn from_parts(label: Label, r: f64, particles: Vec<Particle>) -> Self {
        debug_assert!(check_particles(label, &particles).is_ok());
        debug_assert!((0.0..=1.0).contains(&r));
        Self {
            label,
            r,
            particles,
        }
    }

    pub fn label(&self) -> Label {
        self.label
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn particles(&self) -> &[Particle] {
        &self.particles
    }

    pub fn num_particles(&self) -> usize {
        self.particles.len()
    }

    pub fn into_particles(self) -> Vec<Particle> {
        self.particles
    }

    pub fn with_r(mut self, r: f64) -> Self {
        self.r = r.clamp(0.0, 1.0);
        self
    }

    pub fn weight_sum(&self) -> f64 {
        self.particles.iter().map(|p| p.weight).sum()
    }

    /// Component-wise weighted average of the particle states.
    pub fn mean(&self) -> StateVector {
        mean_unchecked(&self.particles)
    }
}

pub(crate) fn mean_unchecked(particles: &[Particle]) -> StateVector {
    let mut acc = [0.0; 4];
    for p in particles {
        for (a, s) in acc.iter_mut().zip(p.state.to_array()) {
            *a += p.weight * s;
        }
    }
    StateVector::from_array(acc)
}

fn check_particles(label: Label, particles: &[Particle]) -> Result<()> {
    if particles.is_empty() {
        return Err(Error::InvalidTrack(format!("track {label} has no particles")));
    }
    for p in particles {
        if !(p.weight >= 0.0 && p.weight.is_finite()) {
            return Err(Error::InvalidTrack(format!(
                "track {label} has invalid particle weight {}",
                p.weight
            )));
        }
        if !p.state.is_finite() {
            return Err(Error::InvalidTrack(format!(
                "track {label} has a non-finite particle state"
            )));
        }
    }
    let sum: f64 = particles.iter().map(|p| p.weight).sum();
    if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
        return Err(Error::Unnormalized {
            label: label.to_string(),
            sum,
        });
    }
    Ok(())
}

/// Labeled multi-Bernoulli density: tracks with pairwise distinct labels.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LmbDensity {
    tracks: Vec<BernoulliTrack>,
}

impl LmbDensity {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn new(tracks: Vec<BernoulliTrack>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for t in &tracks {
            if !seen.insert(t.label) {
                return Err(Error::DuplicateLabel(t.label.to_string()));
            }
        }
        Ok(Self { tracks })
    }

    pub(crate) fn from_tracks_unchecked(tracks: Vec<BernoulliTrack>) -> Self {
        Self { tracks }
    }

    pub fn tracks(&self) -> &[BernoulliTrack] {
        &self.tracks
    }

    pub fn into_tracks(self) -> Vec<BernoulliTrack> {
        self.tracks
    }

    pub fn len(&self) -> usize {
        self.tracks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tracks.is_empty()
    }

    pub fn get(&self, label: Label) -> Option<&BernoulliTrack> {
        self.tracks.iter().find(|t| t.label == label)
    }

    pub fn labels(&self) -> Vec<Label> {
        self.tracks.iter().map(|t| t.label).collect()
    }

    /// Union with a density over a disjoint label set.
    pub fn concat(mut self, other: LmbDensity) -> Result<Self> {
        self.tracks.extend(other.tracks);
        Self::new(self.tracks)
    }
}

/// Extracted point estimates, sorted by label.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MultiTargetEstimate {
    items: Vec<(Label, StateVector)>,
}

impl MultiTargetEstimate {
    pub fn new(mut items: Vec<(Label, StateVector)>) -> Result<Self> {
        items.sort_by_key(|(l, _)| *l);
        if let Some(w) = items.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::DuplicateLabel(w[0].0.to_string()));
        }
        Ok(Self { items })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn items(&self) -> &[(Label, StateVector)] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn get(&self, label: Label) -> Option<StateVector> {
        self.items
            .binary_search_by_key(&label, |(l, _)| *l)
            .ok()
            .map(|i| self.items[i].1)
    }

    pub fn labels(&self) -> Vec<Label> {
        self.items.iter().map(|(l, _)| *l).collect()
    }

    /// Leave-one-out view: every item except `label`.
    pub fn without(&self, label: Label) -> MultiTargetEstimate {
        Self {
            items: self
                .items
                .iter()
                .filter(|(l, _)| *l != label)
                .copied()
                .collect(),
        }
    }
}
