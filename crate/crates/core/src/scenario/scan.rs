use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use super::GroundTruth;
use crate::filter::{FilterConfig, Measurement, Scan};
use crate::random::RandomSource;

/// Detections of alive targets (probability `p_d`, Gaussian noise) plus
/// Poisson-uniform clutter, in shuffled order.
pub fn generate_scan<R: Rng + ?Sized>(truth: &GroundTruth, frame: u64, cfg: &FilterConfig, rng: &mut R) -> Scan {
    let sd = cfg.obs_noise_var.sqrt();
    let mut measurements: Vec<Measurement> = Vec::new();
    for (_, s) in truth.alive_at(frame) {
        if rng.random::<f64>() < cfg.p_d {
            let nx: f64 = rng.sample(StandardNormal);
            let ny: f64 = rng.sample(StandardNormal);
            measurements.push(Measurement::new(s.px + sd * nx, s.py + sd * ny));
        }
    }
    let clutter = if cfg.clutter_rate > 0.0 {
        Poisson::new(cfg.clutter_rate).expect("positive rate").sample(rng) as usize
    } else {
        0
    };
    let region = cfg.clutter_region;
    for _ in 0..clutter {
        let x = region.x_min + rng.random::<f64>() * (region.x_max - region.x_min);
        let y = region.y_min + rng.random::<f64>() * (region.y_max - region.y_min);
        measurements.push(Measurement::new(x, y));
    }
    measurements.shuffle(rng);
    Scan::new(frame, measurements)
}

/// One scan per frame `0..num_frames`, frame `k` drawn from substream `[k]`.
pub fn generate_scans(truth: &GroundTruth, cfg: &FilterConfig, rng: &RandomSource) -> Vec<Scan> {
    (0..truth.num_frames)
        .map(|k| generate_scan(truth, k, cfg, &mut rng.substream(&[k])))
        .collect()
}
