//! Synthetic ground truth for the swarm and vehicle-following regimes,
//! detection/clutter simulation, and the delimited text file formats.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::filter::{BirthComponent, BirthModel};
use crate::metrics::TrackSeries;
use crate::motion::NcvParams;
use crate::rfs::{Label, StateVector};

pub mod io;
mod scan;
mod swarm;
mod vehicles;

pub use scan::{generate_scan, generate_scans};
pub use swarm::simulate_swarm;
pub use vehicles::{simulate_vehicles, vehicle_layout, VehicleRole};

/// One true trajectory, defined on the contiguous frame range `[birth_frame, death_frame)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthTrack {
    pub label: Label,
    pub states: BTreeMap<u64, StateVector>,
}

impl GroundTruthTrack {
    pub fn new(label: Label, birth_frame: u64, states: Vec<StateVector>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::InvalidTrack(format!("{label}: no states")));
        }
        Ok(Self {
            label,
            states: (birth_frame..).zip(states).collect(),
        })
    }

    /// Validates a frame map (non-empty and contiguous).
    pub fn from_map(label: Label, states: BTreeMap<u64, StateVector>) -> Result<Self> {
        let (Some(&first), Some(&last)) = (states.keys().next(), states.keys().next_back()) else {
            return Err(Error::InvalidTrack(format!("{label}: no states")));
        };
        if last - first + 1 != states.len() as u64 {
            return Err(Error::InvalidTrack(format!("{label}: frames {first}..={last} are not contiguous")));
        }
        Ok(Self { label, states })
    }

    pub fn birth_frame(&self) -> u64 {
        *self.states.keys().next().expect("non-empty by construction")
    }

    /// One past the last frame with a state.
    pub fn death_frame(&self) -> u64 {
        self.states.keys().next_back().expect("non-empty by construction") + 1
    }

    pub fn state_at(&self, frame: u64) -> Option<StateVector> {
        self.states.get(&frame).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GroundTruth {
    pub num_frames: u64,
    pub tracks: Vec<GroundTruthTrack>,
}

impl GroundTruth {
    pub fn alive_at(&self, frame: u64) -> Vec<(Label, StateVector)> {
        self.tracks
            .iter()
            .filter_map(|t| t.state_at(frame).map(|s| (t.label, s)))
            .collect()
    }

    pub fn positions_at(&self, frame: u64) -> Vec<[f64; 2]> {
        self.alive_at(frame).into_iter().map(|(_, s)| s.position()).collect()
    }

    pub fn series(&self) -> TrackSeries<Label> {
        self.tracks
            .iter()
            .map(|t| (t.label, t.states.iter().map(|(&k, s)| (k, s.position())).collect()))
            .collect()
    }

    pub fn target_frames(&self) -> usize {
        self.tracks.iter().map(|t| t.states.len()).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    Swarm,
    VehicleFollowing,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwarmConfig {
    pub origin: [f64; 2],
    pub spacing: f64,
    /// Uniform jitter half-width applied to the initial grid.
    pub jitter: f64,
    pub velocity: [f64; 2],
    /// Per-target NCV noise on top of the shared maneuver.
    pub individual_noise_var: f64,
    /// Fraction of the nearest-neighbor gap error removed per frame.
    pub gap_gain: f64,
    /// Fraction of the velocity difference to the swarm mean removed per frame.
    pub align_gain: f64,
    /// Target `i` is born at frame `i * birth_stagger`.
    pub birth_stagger: u64,
    /// Target `i` dies `i * death_stagger` frames before the end.
    pub death_stagger: u64,
}

impl Default for SwarmConfig {
    fn default() -> Self {
        Self {
            origin: [200.0, 200.0],
            spacing: 30.0,
            jitter: 3.0,
            velocity: [6.0, 3.0],
            individual_noise_var: 0.5,
            gap_gain: 0.3,
            align_gain: 0.3,
            birth_stagger: 0,
            death_stagger: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleConfig {
    /// Lanes travelling in +x.
    pub lanes: usize,
    /// Lanes travelling in -x, placed beyond the same-direction lanes.
    pub opposing_lanes: usize,
    pub lane_width: f64,
    /// Initial distance between consecutive vehicles of a platoon.
    pub gap: f64,
    pub speed: f64,
    /// x of the rearmost vehicle in lane 0, and y of lane 0.
    pub start: [f64; 2],
    /// Frame at which the lead vehicle of lane 0 brakes; `None` disables braking.
    pub brake_frame: Option<u64>,
    /// Fractional speed drop of the braking lead vehicle, in `[0, 1)`.
    pub brake_intensity: f64,
    /// Gap-error feedback gain of the follower rule.
    pub follow_gain: f64,
    /// Largest per-frame speed change of a follower.
    pub max_accel: f64,
}

impl Default for VehicleConfig {
    fn default() -> Self {
        Self {
            lanes: 2,
            opposing_lanes: 1,
            lane_width: 45.0,
            gap: 35.0,
            speed: 10.0,
            start: [50.0, 400.0],
            brake_frame: None,
            brake_intensity: 0.5,
            follow_gain: 0.1,
            max_accel: 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    pub num_frames: u64,
    pub num_targets: usize,
    /// Truth dynamics (the swarm's shared maneuver noise).
    pub motion: NcvParams,
    pub seed: u64,
    pub max_speed: f64,
    pub swarm: SwarmConfig,
    pub vehicles: VehicleConfig,
}

impl ScenarioConfig {
    pub fn new(kind: ScenarioKind, num_frames: u64, num_targets: usize) -> Self {
        Self {
            kind,
            num_frames,
            num_targets,
            motion: NcvParams::new(1.0, 0.5).expect("valid defaults"),
            seed: 0,
            max_speed: 40.0,
            swarm: SwarmConfig::default(),
            vehicles: VehicleConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_frames < 1 {
            return Err(Error::invalid("num_frames", "must be at least 1"));
        }
        if self.num_targets < 1 {
            return Err(Error::invalid("num_targets", "must be at least 1"));
        }
        if !(self.max_speed > 0.0) {
            return Err(Error::invalid("max_speed", "must be positive"));
        }
        let s = &self.swarm;
        if !(s.spacing > 0.0) || !(s.jitter >= 0.0) || !(s.individual_noise_var >= 0.0) {
            return Err(Error::invalid("swarm", "spacing must be positive, jitter and noise nonnegative"));
        }
        if !(0.0..=1.0).contains(&s.gap_gain) || !(0.0..=1.0).contains(&s.align_gain) {
            return Err(Error::invalid("swarm", "gains must lie in [0, 1]"));
        }
        let v = &self.vehicles;
        if v.lanes < 1 {
            return Err(Error::invalid("vehicles.lanes", "need at least one lane"));
        }
        if !(v.lane_width > 0.0) || !(v.gap > 0.0) || !(v.speed > 0.0) || v.speed > self.max_speed {
            return Err(Error::invalid(
                "vehicles",
                "lane_width, gap and speed must be positive, speed within max_speed",
            ));
        }
        if !(0.0..1.0).contains(&v.brake_intensity) || !(v.follow_gain >= 0.0) || !(v.max_accel > 0.0) {
            return Err(Error::invalid(
                "vehicles",
                "brake_intensity in [0, 1), follow_gain nonnegative, max_accel positive",
            ));
        }
        Ok(())
    }
}

/// Dispatches on `cfg.kind`.
pub fn simulate(cfg: &ScenarioConfig, rng: &crate::RandomSource) -> Result<GroundTruth> {
    cfg.validate()?;
    let tracks = match cfg.kind {
        ScenarioKind::Swarm => simulate_swarm(cfg, rng),
        ScenarioKind::VehicleFollowing => simulate_vehicles(cfg, rng),
    };
    Ok(GroundTruth {
        num_frames: cfg.num_frames,
        tracks,
    })
}

/// One birth component per entry point, i.e. per true track at its first state.
pub fn birth_model_from_truth(truth: &GroundTruth, r_b: f64, pos_std: f64, vel_std: f64) -> Result<BirthModel> {
    let components = truth
        .tracks
        .iter()
        .map(|t| BirthComponent::diagonal(r_b, t.states[&t.birth_frame()], pos_std, vel_std))
        .collect::<Result<_>>()?;
    Ok(BirthModel { components })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sv(x: f64) -> StateVector {
        StateVector::new(x, 0.0, 0.0, 0.0)
    }

    #[test]
    fn track_frame_range() {
        let t = GroundTruthTrack::new(Label::new(3, 0), 3, vec![sv(0.0), sv(1.0)]).unwrap();
        assert_eq!((t.birth_frame(), t.death_frame()), (3, 5));
        assert_eq!(t.state_at(4), Some(sv(1.0)));
        assert_eq!(t.state_at(5), None);
        assert!(GroundTruthTrack::new(Label::new(0, 0), 0, vec![]).is_err());
    }

    #[test]
    fn gaps_are_rejected() {
        let m: BTreeMap<u64, StateVector> = [(0, sv(0.0)), (2, sv(1.0))].into();
        assert!(GroundTruthTrack::from_map(Label::new(0, 0), m).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(ScenarioConfig::new(ScenarioKind::Swarm, 0, 1).validate().is_err());
        assert!(ScenarioConfig::new(ScenarioKind::Swarm, 1, 0).validate().is_err());
        assert!(ScenarioConfig::new(ScenarioKind::Swarm, 1, 1).validate().is_ok());
        let mut c = ScenarioConfig::new(ScenarioKind::VehicleFollowing, 5, 3);
        c.vehicles.brake_intensity = 1.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn birth_model_uses_first_states() {
        let truth = GroundTruth {
            num_frames: 4,
            tracks: vec![
                GroundTruthTrack::new(Label::new(0, 0), 0, vec![sv(1.0), sv(2.0)]).unwrap(),
                GroundTruthTrack::new(Label::new(2, 1), 2, vec![sv(7.0)]).unwrap(),
            ],
        };
        let b = birth_model_from_truth(&truth, 0.2, 5.0, 3.0).unwrap();
        assert_eq!(b.components.len(), 2);
        assert_eq!(b.components[1].mean, sv(7.0));
        assert_eq!(b.components[0].r, 0.2);
        assert_eq!(b.components[0].cov[(0, 0)], 25.0);
        assert_eq!(b.components[0].cov[(1, 1)], 9.0);
    }
}
