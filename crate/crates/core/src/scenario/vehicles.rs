use super::{GroundTruthTrack, ScenarioConfig};
use crate::random::RandomSource;
use crate::rfs::{Label, StateVector};

/// Where a generated vehicle sits in the road layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VehicleRole {
    /// Lane index; same-direction lanes come first, then opposing lanes.
    pub lane: usize,
    pub opposing: bool,
    /// Position in the lane's platoon, 0 being the lead vehicle.
    pub rank: usize,
}

/// Vehicles are dealt round-robin over all lanes.
pub fn vehicle_layout(cfg: &ScenarioConfig) -> Vec<VehicleRole> {
    let v = &cfg.vehicles;
    let total_lanes = v.lanes + v.opposing_lanes;
    let mut per_lane = vec![0usize; total_lanes];
    for i in 0..cfg.num_targets {
        per_lane[i % total_lanes] += 1;
    }
    (0..cfg.num_targets)
        .map(|i| {
            let lane = i % total_lanes;
            // round-robin fills lane slots back to front; rank 0 is the last dealt
            let slot = i / total_lanes;
            VehicleRole {
                lane,
                opposing: lane >= v.lanes,
                rank: per_lane[lane] - 1 - slot,
            }
        })
        .collect()
}

/// Straight multi-lane road with one platoon per lane. The lead vehicle of
/// lane 0 drops its speed at the braking frame; every follower steers its
/// speed toward its leader's previous speed plus a proportional gap
/// correction, changing by at most `max_accel` per frame.
/// Trajectories are noise-free, so `rng` is unused.
pub fn simulate_vehicles(cfg: &ScenarioConfig, _rng: &RandomSource) -> Vec<GroundTruthTrack> {
    let v = &cfg.vehicles;
    let dt = cfg.motion.dt();
    let layout = vehicle_layout(cfg);
    let total_lanes = v.lanes + v.opposing_lanes;
    let far_x = v.start[0] + v.speed * dt * cfg.num_frames as f64;

    // Per lane, vehicle indices ordered by rank.
    let mut platoons: Vec<Vec<usize>> = vec![Vec::new(); total_lanes];
    for (i, role) in layout.iter().enumerate() {
        platoons[role.lane].push(i);
    }
    for p in &mut platoons {
        p.sort_by_key(|&i| layout[i].rank);
    }

    let n = cfg.num_targets;
    let mut x = vec![0.0; n];
    let mut speed = vec![v.speed; n];
    let mut dir = vec![1.0; n];
    let mut y = vec![0.0; n];
    for (lane, platoon) in platoons.iter().enumerate() {
        let m = platoon.len();
        for (rank, &i) in platoon.iter().enumerate() {
            y[i] = v.start[1] + lane as f64 * v.lane_width;
            if lane < v.lanes {
                let stagger = lane as f64 * v.gap / 2.0;
                x[i] = v.start[0] + stagger + (m - 1 - rank) as f64 * v.gap;
            } else {
                dir[i] = -1.0;
                x[i] = far_x + rank as f64 * v.gap;
            }
        }
    }

    let mut history: Vec<Vec<StateVector>> = vec![Vec::with_capacity(cfg.num_frames as usize); n];
    let record = |history: &mut Vec<Vec<StateVector>>, x: &[f64], speed: &[f64]| {
        for i in 0..n {
            history[i].push(StateVector::new(x[i], dir[i] * speed[i], y[i], 0.0));
        }
    };
    record(&mut history, &x, &speed);

    for k in 1..cfg.num_frames {
        let prev_x = x.clone();
        let prev_speed = speed.clone();
        for (lane, platoon) in platoons.iter().enumerate() {
            for (rank, &i) in platoon.iter().enumerate() {
                speed[i] = if rank == 0 {
                    let braking = lane == 0 && v.brake_frame.is_some_and(|b| k >= b);
                    if braking {
                        v.speed * (1.0 - v.brake_intensity)
                    } else {
                        v.speed
                    }
                } else {
                    let leader = platoon[rank - 1];
                    let gap = (prev_x[leader] - prev_x[i]).abs();
                    let target = prev_speed[leader] + v.follow_gain * (gap - v.gap) / dt;
                    let step = v.max_accel * dt;
                    target
                        .clamp(prev_speed[i] - step, prev_speed[i] + step)
                        .clamp(0.0, cfg.max_speed)
                };
                x[i] = prev_x[i] + dir[i] * speed[i] * dt;
            }
        }
        record(&mut history, &x, &speed);
    }

    history
        .into_iter()
        .enumerate()
        .map(|(i, h)| GroundTruthTrack::new(Label::new(0, i as u64), 0, h).expect("num_frames >= 1"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interaction::{front_vehicle, velocity_angle, InteractionConfig, InteractionContext};
    use crate::rfs::MultiTargetEstimate;
    use crate::scenario::ScenarioKind;

    fn cfg(n: usize, frames: u64) -> ScenarioConfig {
        ScenarioConfig::new(ScenarioKind::VehicleFollowing, frames, n)
    }

    #[test]
    fn layout_is_round_robin_with_unique_ranks() {
        let c = cfg(10, 5);
        let l = vehicle_layout(&c);
        assert_eq!(l.iter().filter(|r| r.lane == 0).count(), 4);
        assert_eq!(l.iter().filter(|r| r.opposing).count(), 3);
        for lane in 0..3 {
            let mut ranks: Vec<usize> = l.iter().filter(|r| r.lane == lane).map(|r| r.rank).collect();
            ranks.sort();
            assert_eq!(ranks, (0..ranks.len()).collect::<Vec<_>>());
        }
    }

    #[test]
    fn no_braking_means_constant_velocity() {
        let c = cfg(10, 30);
        for t in simulate_vehicles(&c, &RandomSource::new(0)) {
            let first = t.states[&0];
            for (&k, s) in &t.states {
                assert_eq!(s.velocity(), first.velocity());
                assert!((s.px - (first.px + first.vx * k as f64)).abs() < 1e-9);
                assert_eq!(s.py, first.py);
            }
        }
    }

    #[test]
    fn braking_follower_keeps_sixty_percent_of_gap() {
        let mut c = cfg(10, 60);
        c.vehicles.brake_frame = Some(10);
        c.vehicles.brake_intensity = 0.5;
        let tracks = simulate_vehicles(&c, &RandomSource::new(0));
        let layout = vehicle_layout(&c);
        let mut lane0: Vec<usize> = (0..10).filter(|&i| layout[i].lane == 0).collect();
        lane0.sort_by_key(|&i| layout[i].rank);
        let lead = &tracks[lane0[0]];
        assert_eq!(lead.states[&9].vx, 10.0);
        assert_eq!(lead.states[&10].vx, 5.0);
        let mut min_gap = f64::INFINITY;
        for w in lane0.windows(2) {
            for k in 0..60 {
                let gap = tracks[w[0]].states[&k].px - tracks[w[1]].states[&k].px;
                min_gap = min_gap.min(gap);
            }
        }
        assert!(min_gap >= 0.6 * 35.0, "min gap {min_gap}");
        assert!(min_gap < 35.0);
        // followers slow down too
        assert!(tracks[lane0[1]].states[&30].vx < 6.0);
        for &i in &lane0[1..] {
            for k in 1..60 {
                let dv = tracks[i].states[&k].vx - tracks[i].states[&(k - 1)].vx;
                assert!(dv.abs() <= c.vehicles.max_accel + 1e-12);
            }
        }
    }

    #[test]
    fn same_lane_headings_agree_and_speeds_bounded() {
        let mut c = cfg(12, 60);
        c.vehicles.brake_frame = Some(20);
        c.vehicles.brake_intensity = 0.7;
        let tracks = simulate_vehicles(&c, &RandomSource::new(0));
        let layout = vehicle_layout(&c);
        for k in 0..60 {
            for i in 0..12 {
                for j in 0..12 {
                    if layout[i].lane == layout[j].lane && i != j {
                        let a = velocity_angle(tracks[i].states[&k].velocity(), tracks[j].states[&k].velocity()).unwrap();
                        assert!(a <= 15.0);
                    }
                }
                let s = tracks[i].states[&k];
                assert!(s.is_finite() && s.vx.abs() <= c.max_speed);
            }
        }
    }

    #[test]
    fn opposing_vehicles_are_never_front_vehicles() {
        let mut c = cfg(12, 60);
        c.vehicles.brake_frame = Some(15);
        let tracks = simulate_vehicles(&c, &RandomSource::new(0));
        let layout = vehicle_layout(&c);
        let icfg = InteractionConfig::default();
        for k in 0..60 {
            let est = MultiTargetEstimate::new(tracks.iter().map(|t| (t.label, t.states[&k])).collect()).unwrap();
            for (i, t) in tracks.iter().enumerate() {
                if layout[i].opposing {
                    continue;
                }
                let ctx = InteractionContext::new(&est, t.label);
                if let Some(f) = front_vehicle(t.label, &t.states[&k], &ctx, &icfg) {
                    let j = f.birth_index as usize;
                    assert!(!layout[j].opposing, "frame {k}: {i} picked opposing {j}");
                    assert_eq!(layout[j].lane, layout[i].lane);
                    assert_eq!(layout[j].rank + 1, layout[i].rank);
                }
            }
        }
    }
}
