use rand::Rng;
use rand_distr::StandardNormal;

use super::{GroundTruthTrack, ScenarioConfig};
use crate::motion::{noise_free_predict, NcvParams};
use crate::random::RandomSource;
use crate::rfs::{Label, StateVector};

/// Coordinated swarm: a shared NCV maneuver, small individual NCV noise,
/// a proportional correction restoring each target's initial
/// nearest-neighbor distance, and velocity alignment toward the swarm mean.
pub fn simulate_swarm(cfg: &ScenarioConfig, rng: &RandomSource) -> Vec<GroundTruthTrack> {
    let s = &cfg.swarm;
    let n = cfg.num_targets;
    let dt = cfg.motion.dt();
    let individual = NcvParams::new(dt, s.individual_noise_var).expect("validated");

    let cols = (n as f64).sqrt().ceil() as usize;
    let mut init = rng.substream(&[0]);
    let offsets: Vec<[f64; 2]> = (0..n)
        .map(|i| {
            let jx = init.random_range(-1.0..=1.0) * s.jitter;
            let jy = init.random_range(-1.0..=1.0) * s.jitter;
            [(i % cols) as f64 * s.spacing + jx, (i / cols) as f64 * s.spacing + jy]
        })
        .collect();
    let reference_gap: Vec<f64> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j != i)
                .map(|j| dist(offsets[i], offsets[j]))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let lifetime: Vec<(u64, u64)> = (0..n as u64)
        .map(|i| {
            let birth = i * s.birth_stagger;
            let death = cfg.num_frames.saturating_sub(i * s.death_stagger);
            (birth, death)
        })
        .collect();

    let mut centre = StateVector::new(s.origin[0], s.velocity[0], s.origin[1], s.velocity[1]);
    let mut current: Vec<Option<StateVector>> = vec![None; n];
    let mut history: Vec<Vec<StateVector>> = vec![Vec::new(); n];

    for k in 0..cfg.num_frames {
        let shared = if k == 0 {
            [0.0; 4]
        } else {
            noise(cfg.motion.process_noise_chol(), &mut rng.substream(&[1, k]))
        };
        if k > 0 {
            centre = add(noise_free_predict(centre, &cfg.motion), shared);
        }

        let prev = current.clone();
        let alive: Vec<usize> = (0..n).filter(|&i| prev[i].is_some()).collect();
        let mean_v = if alive.is_empty() {
            [0.0; 2]
        } else {
            let m = alive.len() as f64;
            let sum = alive.iter().fold([0.0; 2], |acc, &i| {
                let v = prev[i].unwrap().velocity();
                [acc[0] + v[0], acc[1] + v[1]]
            });
            [sum[0] / m, sum[1] / m]
        };

        for i in 0..n {
            let (birth, death) = lifetime[i];
            if k < birth || k >= death {
                current[i] = None;
                continue;
            }
            let next = match prev[i] {
                None => StateVector::new(
                    centre.px + offsets[i][0],
                    centre.vx,
                    centre.py + offsets[i][1],
                    centre.vy,
                ),
                Some(x) => {
                    let mut v = x.velocity();
                    let p = x.position();
                    let nearest = alive
                        .iter()
                        .filter(|&&j| j != i)
                        .map(|&j| prev[j].unwrap().position())
                        .map(|q| (dist(p, q), q))
                        .min_by(|a, b| a.0.total_cmp(&b.0));
                    if let Some((d, q)) = nearest {
                        if d > 0.0 {
                            let push = s.gap_gain * (reference_gap[i] - d) / dt / d;
                            v[0] += push * (p[0] - q[0]);
                            v[1] += push * (p[1] - q[1]);
                        }
                    }
                    v[0] += s.align_gain * (mean_v[0] - v[0]);
                    v[1] += s.align_gain * (mean_v[1] - v[1]);
                    let own = noise(individual.process_noise_chol(), &mut rng.substream(&[2, k, i as u64]));
                    let moved = noise_free_predict(StateVector::new(p[0], v[0], p[1], v[1]), &individual);
                    add(add(moved, shared), own)
                }
            };
            let next = clamp_speed(next, cfg.max_speed);
            history[i].push(next);
            current[i] = Some(next);
        }
    }

    history
        .into_iter()
        .enumerate()
        .filter(|(_, h)| !h.is_empty())
        .map(|(i, h)| {
            let birth = lifetime[i].0;
            GroundTruthTrack::new(Label::new(birth, i as u64), birth, h).expect("non-empty")
        })
        .collect()
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn noise(chol: &nalgebra::Matrix4<f64>, rng: &mut RandomSource) -> [f64; 4] {
    let z = nalgebra::Vector4::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal));
    let e = chol * z;
    [e[0], e[1], e[2], e[3]]
}

fn add(s: StateVector, e: [f64; 4]) -> StateVector {
    StateVector::new(s.px + e[0], s.vx + e[1], s.py + e[2], s.vy + e[3])
}

pub(super) fn clamp_speed(s: StateVector, max: f64) -> StateVector {
    let speed = s.vx.hypot(s.vy);
    if speed <= max {
        return s;
    }
    let k = max / speed;
    StateVector::new(s.px, s.vx * k, s.py, s.vy * k)
}
