//! Particle (SMC) labeled multi-Bernoulli filter with interaction-aware
//! prediction.
//!
//! One [`step`] runs: estimate extraction on the previous posterior →
//! [`predict`] → [`append_birth`] → [`update`] → [`prune`] → [`resample`].

mod predict;
mod resample;
mod update;

use nalgebra::Matrix4;

use crate::error::{Error, Result};
use crate::interaction::InteractionConfig;
use crate::motion::NcvParams;
use crate::par::{self, Execution};
use crate::random::RandomSource;
use crate::rfs::{extract_estimates, ExtractionMode, LmbDensity, MultiTargetEstimate, StateVector};

pub use predict::{append_birth, predict, predict_with, Prediction};
pub use resample::{prune, resample};
pub use update::{gate_threshold, update, UpdateOutcome};

// Substream tags.
const TAG_PREDICT: u64 = 1;
const TAG_BIRTH: u64 = 2;
const TAG_RESAMPLE: u64 = 3;

/// Axis-aligned rectangle in scene units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Region {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Self {
        Self {
            x_min,
            x_max,
            y_min,
            y_max,
        }
    }

    pub fn area(&self) -> f64 {
        (self.x_max - self.x_min).max(0.0) * (self.y_max - self.y_min).max(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BirthComponent {
    pub r: f64,
    pub mean: StateVector,
    pub cov: Matrix4<f64>,
    chol: Matrix4<f64>,
}

impl BirthComponent {
    pub fn new(r: f64, mean: StateVector, cov: Matrix4<f64>) -> Result<Self> {
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::invalid("birth.r", format!("must lie in (0, 1), got {r}")));
        }
        let chol = nalgebra::Cholesky::new(cov)
            .ok_or_else(|| Error::invalid("birth.cov", "covariance is not positive definite"))?
            .l();
        Ok(Self { r, mean, cov, chol })
    }

    /// Diagonal covariance with position std `pos_std` and velocity std `vel_std`.
    pub fn diagonal(r: f64, mean: StateVector, pos_std: f64, vel_std: f64) -> Result<Self> {
        let (p, v) = (pos_std * pos_std, vel_std * vel_std);
        Self::new(r, mean, Matrix4::from_diagonal(&nalgebra::Vector4::new(p, v, p, v)))
    }

    pub(crate) fn chol(&self) -> &Matrix4<f64> {
        &self.chol
    }
}

/// Spontaneous births, appended every frame with labels `(frame, index)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BirthModel {
    pub components: Vec<BirthComponent>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    pub z: [f64; 2],
}

impl Measurement {
    pub fn new(x: f64, y: f64) -> Self {
        Self { z: [x, y] }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Scan {
    pub frame: u64,
    pub measurements: Vec<Measurement>,
}

impl Scan {
    pub fn new(frame: u64, measurements: Vec<Measurement>) -> Self {
        Self {
            frame,
            measurements,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterConfig {
    pub p_s: f64,
    pub p_d: f64,
    /// Expected clutter count per scan, Poisson.
    pub clutter_rate: f64,
    pub clutter_region: Region,
    /// Per-axis measurement noise variance.
    pub obs_noise_var: f64,
    pub num_particles: usize,
    pub prune_threshold: f64,
    pub gate_prob: f64,
    pub interaction: InteractionConfig,
    /// Number of completed steps before interaction is switched on.
    pub interaction_warmup: u64,
    pub motion: NcvParams,
    pub birth: BirthModel,
    pub extraction: ExtractionMode,
    pub max_group_tracks: usize,
    pub max_group_measurements: usize,
    pub execution: Execution,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            p_s: 0.99,
            p_d: 0.995,
            clutter_rate: 2.0,
            clutter_region: Region::new(0.0, 1000.0, 0.0, 1000.0),
            obs_noise_var: 3.0,
            num_particles: 200,
            prune_threshold: 1e-4,
            gate_prob: 0.999,
            interaction: InteractionConfig::default(),
            interaction_warmup: 5,
            motion: NcvParams::new(1.0, 7.0).expect("valid defaults"),
            birth: BirthModel::default(),
            extraction: ExtractionMode::Threshold(0.5),
            max_group_tracks: 64,
            max_group_measurements: 10,
            execution: Execution::default(),
        }
    }
}

impl FilterConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.p_s > 0.0 && self.p_s <= 1.0) {
            return Err(Error::invalid("filter.p_s", "must lie in (0, 1]"));
        }
        if !(self.p_d > 0.0 && self.p_d <= 1.0) {
            return Err(Error::invalid("filter.p_d", "must lie in (0, 1]"));
        }
        if !(self.clutter_rate >= 0.0 && self.clutter_rate.is_finite()) {
            return Err(Error::invalid("filter.clutter_rate", "must be nonnegative"));
        }
        if self.clutter_rate > 0.0 && !(self.clutter_region.area() > 0.0) {
            return Err(Error::invalid(
                "filter.clutter_region",
                "must have positive area when clutter_rate > 0",
            ));
        }
        if !(self.obs_noise_var > 0.0 && self.obs_noise_var.is_finite()) {
            return Err(Error::invalid("filter.obs_noise_var", "must be positive"));
        }
        if self.num_particles == 0 {
            return Err(Error::invalid("filter.num_particles", "must be positive"));
        }
        if !(0.0..1.0).contains(&self.prune_threshold) {
            return Err(Error::invalid("filter.prune_threshold", "must lie in [0, 1)"));
        }
        if !(self.gate_prob > 0.0 && self.gate_prob < 1.0) {
            return Err(Error::invalid("filter.gate_prob", "must lie in (0, 1)"));
        }
        if let ExtractionMode::Threshold(t) = self.extraction {
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::invalid("extraction", "threshold must lie in (0, 1)"));
            }
        }
        if self.max_group_tracks == 0 || self.max_group_measurements == 0 {
            return Err(Error::invalid("filter.max_group_*", "limits must be positive"));
        }
        if self.max_group_measurements > 20 {
            return Err(Error::invalid(
                "filter.max_group_measurements",
                "exact association is exponential in measurements; at most 20 supported",
            ));
        }
        self.interaction.validate()
    }

    /// Uniform clutter intensity over the clutter region.
    pub fn clutter_intensity(&self) -> f64 {
        if self.clutter_rate == 0.0 {
            0.0
        } else {
            self.clutter_rate / self.clutter_region.area()
        }
    }
}

/// Per-frame counters written to the diagnostics file.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepDiagnostics {
    pub frame: u64,
    pub num_tracks: usize,
    pub num_estimates: usize,
    pub interaction_active: bool,
    pub interaction_pairs: usize,
    pub underflows: usize,
    pub association_groups: usize,
    pub largest_group: usize,
    pub degenerate_groups: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FilterState {
    pub posterior: LmbDensity,
    /// Estimates extracted from `posterior`.
    pub estimates: MultiTargetEstimate,
    pub last_frame: Option<u64>,
    pub steps: u64,
    pub diagnostics: StepDiagnostics,
}

impl FilterState {
    pub fn new() -> Self {
        Self::default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Predicted,
    Born,
    Updated,
    Pruned,
    Resampled,
}

pub fn step(state: &FilterState, scan: &Scan, cfg: &FilterConfig, rng: &RandomSource) -> Result<FilterState> {
    step_observed(state, scan, cfg, rng, |_, _| {})
}

/// [`step`] with a callback invoked on the density after every stage.
pub fn step_observed<F>(
    state: &FilterState,
    scan: &Scan,
    cfg: &FilterConfig,
    rng: &RandomSource,
    mut observe: F,
) -> Result<FilterState>
where
    F: FnMut(Stage, &LmbDensity),
{
    if let Some(last) = state.last_frame {
        if scan.frame <= last {
            return Err(Error::OutOfOrderFrame {
                last,
                got: scan.frame,
            });
        }
    }
    let frame = scan.frame;
    let frame_rng = rng.substream(&[frame]);
    let prev_estimates = extract_estimates(&state.posterior, cfg.extraction);

    let interaction_active = state.steps >= cfg.interaction_warmup;
    let off = InteractionConfig::default();
    let interaction = if interaction_active {
        &cfg.interaction
    } else {
        &off
    };

    let predicted = predict_with(
        &state.posterior,
        &prev_estimates,
        cfg,
        interaction,
        &frame_rng.substream(&[TAG_PREDICT]),
    );
    observe(Stage::Predicted, &predicted.density);

    let born = append_birth(predicted.density, cfg, frame, &frame_rng.substream(&[TAG_BIRTH]));
    observe(Stage::Born, &born);

    let updated = update(&born, scan, cfg)?;
    observe(Stage::Updated, &updated.density);

    let pruned = prune(updated.density, cfg.prune_threshold);
    observe(Stage::Pruned, &pruned);

    let resample_rng = frame_rng.substream(&[TAG_RESAMPLE]);
    let tracks = par::map_owned(cfg.execution, pruned.into_tracks(), |t| {
        let label = t.label();
        let mut rng = resample_rng.substream(&[label.birth_time, label.birth_index]);
        resample(&t, cfg.num_particles, &mut rng)
    });
    let posterior = LmbDensity::from_tracks_unchecked(tracks);
    observe(Stage::Resampled, &posterior);

    let estimates = extract_estimates(&posterior, cfg.extraction);
    let diagnostics = StepDiagnostics {
        frame,
        num_tracks: posterior.len(),
        num_estimates: estimates.len(),
        interaction_active: interaction_active && interaction.model != crate::interaction::InteractionModel::None,
        interaction_pairs: predicted.interaction_pairs,
        underflows: predicted.underflows,
        association_groups: updated.groups,
        largest_group: updated.largest_group,
        degenerate_groups: updated.degenerate_groups,
    };
    Ok(FilterState {
        posterior,
        estimates,
        last_frame: Some(frame),
        steps: state.steps + 1,
        diagnostics,
    })
}
