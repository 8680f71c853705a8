//! LMB measurement update.
//!
//! Tracks are gated against measurements with an elliptical gate built from
//! the particle cloud's position covariance plus measurement noise. Tracks
//! that share gated measurements form a group; within a group the
//! association hypotheses (each track missed or assigned one distinct
//! measurement, the rest clutter) are summed exactly, and the result is
//! collapsed back to one Bernoulli track per label by matching each label's
//! marginal existence probability and particle weights.
//!
//! The exact sum over injective assignments is computed with a dynamic
//! program over (track, set of used measurements), so a group costs
//! `O(n · 2^m · m)` rather than the number of hypotheses.

use nalgebra::{Matrix2, Vector2};

use super::{FilterConfig, Scan};
use crate::error::{Error, Result};
use crate::par;
use crate::rfs::{BernoulliTrack, LmbDensity, Particle};

#[derive(Debug, Clone, PartialEq)]
pub struct UpdateOutcome {
    pub density: LmbDensity,
    pub groups: usize,
    pub largest_group: usize,
    /// Groups whose hypotheses all had zero weight; handled as missed detections.
    pub degenerate_groups: usize,
}

/// Squared Mahalanobis gate for a 2-D measurement: the `gate_prob` quantile
/// of a chi-square with two degrees of freedom.
pub fn gate_threshold(gate_prob: f64) -> f64 {
    -2.0 * (1.0 - gate_prob).ln()
}

struct TrackGate {
    mean: Vector2<f64>,
    s_inv: Matrix2<f64>,
}

fn track_gate(track: &BernoulliTrack, obs_noise_var: f64) -> TrackGate {
    let mut mean = Vector2::zeros();
    for p in track.particles() {
        mean += p.weight * Vector2::new(p.state.px, p.state.py);
    }
    let mut cov = Matrix2::zeros();
    for p in track.particles() {
        let d = Vector2::new(p.state.px, p.state.py) - mean;
        cov += p.weight * d * d.transpose();
    }
    let s = cov + Matrix2::identity() * obs_noise_var;
    let s_inv = s.try_inverse().unwrap_or_else(|| Matrix2::identity() / obs_noise_var);
    TrackGate { mean, s_inv }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        Self((0..n).collect())
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

struct Group {
    tracks: Vec<usize>,
    measurements: Vec<usize>,
    /// `gated[i][k]`: track `tracks[i]` gates measurement `measurements[k]`.
    gated: Vec<Vec<bool>>,
}

pub fn update(predicted: &LmbDensity, scan: &Scan, cfg: &FilterConfig) -> Result<UpdateOutcome> {
    let tracks = predicted.tracks();
    let n_t = tracks.len();
    let n_m = scan.measurements.len();
    let gamma = gate_threshold(cfg.gate_prob);

    let gates = par::map(cfg.execution, tracks, |t| track_gate(t, cfg.obs_noise_var));
    let gated_pairs: Vec<Vec<usize>> = par::map(cfg.execution, &gates, |g| {
        scan.measurements
            .iter()
            .enumerate()
            .filter(|(_, m)| {
                let nu = Vector2::new(m.z[0], m.z[1]) - g.mean;
                (nu.transpose() * g.s_inv * nu)[(0, 0)] <= gamma
            })
            .map(|(k, _)| k)
            .collect()
    });

    let mut uf = UnionFind::new(n_t + n_m);
    for (t, ms) in gated_pairs.iter().enumerate() {
        for &m in ms {
            uf.union(t, n_t + m);
        }
    }
    let mut groups: Vec<Group> = Vec::new();
    let mut root_to_group = std::collections::HashMap::new();
    for t in 0..n_t {
        let root = uf.find(t);
        let gi = *root_to_group.entry(root).or_insert_with(|| {
            groups.push(Group {
                tracks: Vec::new(),
                measurements: Vec::new(),
                gated: Vec::new(),
            });
            groups.len() - 1
        });
        groups[gi].tracks.push(t);
    }
    for g in &mut groups {
        let mut ms: Vec<usize> = g.tracks.iter().flat_map(|&t| gated_pairs[t].iter().copied()).collect();
        ms.sort_unstable();
        ms.dedup();
        g.gated = g
            .tracks
            .iter()
            .map(|&t| ms.iter().map(|m| gated_pairs[t].binary_search(m).is_ok()).collect())
            .collect();
        g.measurements = ms;
    }

    for g in &groups {
        if g.tracks.len() > cfg.max_group_tracks || g.measurements.len() > cfg.max_group_measurements {
            return Err(Error::GroupTooLarge {
                tracks: g.tracks.len(),
                measurements: g.measurements.len(),
                max_tracks: cfg.max_group_tracks,
                max_measurements: cfg.max_group_measurements,
            });
        }
    }

    let largest_group = groups.iter().map(|g| g.tracks.len()).max().unwrap_or(0);
    let n_groups = groups.len();
    let results = par::map(cfg.execution, &groups, |g| update_group(g, tracks, scan, cfg));

    let mut out: Vec<Option<BernoulliTrack>> = vec![None; n_t];
    let mut degenerate_groups = 0;
    for (g, (updated, degenerate)) in groups.iter().zip(results) {
        degenerate_groups += degenerate as usize;
        for (&t, track) in g.tracks.iter().zip(updated) {
            out[t] = Some(track);
        }
    }
    Ok(UpdateOutcome {
        density: LmbDensity::from_tracks_unchecked(out.into_iter().map(|t| t.expect("every track is in a group")).collect()),
        groups: n_groups,
        largest_group,
        degenerate_groups,
    })
}

fn gaussian_2d(dx: f64, dy: f64, var: f64) -> f64 {
    (-(dx * dx + dy * dy) / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var)
}

fn update_group(g: &Group, tracks: &[BernoulliTrack], scan: &Scan, cfg: &FilterConfig) -> (Vec<BernoulliTrack>, bool) {
    let n = g.tracks.len();
    let m = g.measurements.len();
    let p_d = cfg.p_d;
    let kappa = cfg.clutter_intensity();

    // Per-particle likelihoods g(z_k | x_j) for gated pairs, and their
    // prior-weighted sums ψ(z_k).
    let mut lik: Vec<Vec<Option<Vec<f64>>>> = Vec::with_capacity(n);
    let mut psi = vec![vec![0.0; m]; n];
    for (i, &t) in g.tracks.iter().enumerate() {
        let track = &tracks[t];
        let mut row = Vec::with_capacity(m);
        for (k, &mi) in g.measurements.iter().enumerate() {
            if !g.gated[i][k] {
                row.push(None);
                continue;
            }
            let z = scan.measurements[mi].z;
            let l: Vec<f64> = track
                .particles()
                .iter()
                .map(|p| gaussian_2d(z[0] - p.state.px, z[1] - p.state.py, cfg.obs_noise_var))
                .collect();
            psi[i][k] = track.particles().iter().zip(&l).map(|(p, l)| p.weight * l).sum();
            row.push(Some(l));
        }
        lik.push(row);
    }

    // Hypothesis factors. With κ > 0 every measurement term is divided by κ
    // so unassigned measurements contribute 1; with κ = 0 unassigned
    // measurements make a hypothesis impossible.
    let clutter_term = if kappa > 0.0 { 1.0 } else { 0.0 };
    let miss: Vec<f64> = g
        .tracks
        .iter()
        .map(|&t| {
            let r = tracks[t].r();
            (1.0 - r) + r * (1.0 - p_d)
        })
        .collect();
    let assoc: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let r = tracks[g.tracks[i]].r();
            (0..m)
                .map(|k| {
                    let a = r * p_d * psi[i][k];
                    if kappa > 0.0 {
                        a / kappa
                    } else {
                        a
                    }
                })
                .collect()
        })
        .collect();

    let marg = association_marginals(&miss, &assoc, clutter_term);
    let degenerate = marg.is_none();

    let updated = g
        .tracks
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let track = &tracks[t];
            let r = track.r();
            let miss_exist = if miss[i] > 0.0 { r * (1.0 - p_d) / miss[i] } else { 0.0 };
            let (c0, cm): (f64, Vec<f64>) = match &marg {
                Some(mg) => (mg[i][0] * miss_exist, mg[i][1..].to_vec()),
                None => (miss_exist, vec![0.0; m]),
            };
            let r_post = (c0 + cm.iter().sum::<f64>()).clamp(0.0, 1.0);

            if cm.iter().all(|&c| c == 0.0) {
                // Pure missed detection: the spatial density is unchanged.
                return BernoulliTrack::from_parts(track.label(), r_post, track.particles().to_vec());
            }
            let mut w: Vec<f64> = track.particles().iter().map(|p| c0 * p.weight).collect();
            for (k, c) in cm.iter().enumerate() {
                if *c == 0.0 || psi[i][k] == 0.0 {
                    continue;
                }
                let l = lik[i][k].as_ref().expect("nonzero marginal implies gated");
                let scale = c / psi[i][k];
                for ((wj, p), lj) in w.iter_mut().zip(track.particles()).zip(l) {
                    *wj += scale * p.weight * lj;
                }
            }
            let sum: f64 = w.iter().sum();
            let particles: Vec<Particle> = if sum > 0.0 && sum.is_finite() {
                track
                    .particles()
                    .iter()
                    .zip(&w)
                    .map(|(p, wj)| Particle::new(p.state, wj / sum))
                    .collect()
            } else {
                track.particles().to_vec()
            };
            BernoulliTrack::from_parts(track.label(), r_post, particles)
        })
        .collect();
    (updated, degenerate)
}

/// Exact marginal association probabilities.
///
/// Hypothesis weight is `Π_i φ_i(θ_i) · clutter^(#unassigned)` over injective
/// maps `θ: tracks → {miss} ∪ measurements`, with `φ_i(miss) = miss[i]` and
/// `φ_i(k) = assoc[i][k]`. Returns `P(θ_i = c)` for `c = 0` (miss) and
/// `c = 1 + k`, or `None` when every hypothesis has zero weight.
pub(crate) fn association_marginals(miss: &[f64], assoc: &[Vec<f64>], clutter: f64) -> Option<Vec<Vec<f64>>> {
    let n = miss.len();
    let m = assoc.first().map_or(0, |a| a.len());
    let full = 1usize << m;

    // backward[i][U]: total weight of tracks i.. given measurements U are taken.
    let mut backward = vec![vec![0.0; full]; n + 1];
    for (u, b) in backward[n].iter_mut().enumerate() {
        let free = m - (u as u32).count_ones() as usize;
        *b = clutter.powi(free as i32);
    }
    for i in (0..n).rev() {
        for u in 0..full {
            let mut acc = miss[i] * backward[i + 1][u];
            for k in 0..m {
                if u & (1 << k) == 0 && assoc[i][k] != 0.0 {
                    acc += assoc[i][k] * backward[i + 1][u | (1 << k)];
                }
            }
            backward[i][u] = acc;
        }
    }
    let z = backward[0][0];
    if !(z > 0.0 && z.is_finite()) {
        return None;
    }

    // forward[U]: total weight of tracks ..i using exactly U.
    let mut forward = vec![0.0; full];
    forward[0] = 1.0;
    let mut marg = vec![vec![0.0; m + 1]; n];
    for i in 0..n {
        let mut next = vec![0.0; full];
        for u in 0..full {
            let f = forward[u];
            if f == 0.0 {
                continue;
            }
            let w0 = f * miss[i];
            marg[i][0] += w0 * backward[i + 1][u];
            next[u] += w0;
            for k in 0..m {
                if u & (1 << k) == 0 && assoc[i][k] != 0.0 {
                    let wk = f * assoc[i][k];
                    let v = u | (1 << k);
                    marg[i][1 + k] += wk * backward[i + 1][v];
                    next[v] += wk;
                }
            }
        }
        forward = next;
        for c in marg[i].iter_mut() {
            *c /= z;
        }
    }
    Some(marg)
}
