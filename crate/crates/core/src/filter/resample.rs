use rand::Rng;

use crate::rfs::{BernoulliTrack, LmbDensity, Particle};

/// Drops tracks with `r < threshold`, keeping the order of the survivors.
pub fn prune(lmb: LmbDensity, threshold: f64) -> LmbDensity {
    LmbDensity::from_tracks_unchecked(lmb.into_tracks().into_iter().filter(|t| t.r() >= threshold).collect())
}

/// Systematic resampling to `num_particles` equally weighted particles.
pub fn resample<R: Rng + ?Sized>(track: &BernoulliTrack, num_particles: usize, rng: &mut R) -> BernoulliTrack {
    let src = track.particles();
    let j = num_particles.max(1);
    let w = 1.0 / j as f64;
    // Spacing over the actual weight total so rounding cannot push the last
    // pointer past the final nonzero weight.
    let total: f64 = src.iter().map(|p| p.weight).sum();
    let step = total / j as f64;
    let mut u = rng.random::<f64>() * step;
    let mut idx = 0;
    let mut cdf = src[0].weight;
    let mut out = Vec::with_capacity(j);
    for _ in 0..j {
        while cdf <= u && idx + 1 < src.len() {
            idx += 1;
            cdf += src[idx].weight;
        }
        out.push(Particle::new(src[idx].state, w));
        u += step;
    }
    BernoulliTrack::from_parts(track.label(), track.r(), out)
}
