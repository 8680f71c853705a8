//! Tracking performance metrics: OSPA, OSPA² and cardinality error.
//!
//! For point sets `X` (size `m`) and `Y` (size `n`, `m ≤ n` after swapping):
//!
//! ```text
//! total = ( (min_π Σ d_c(x_i, y_π(i))^p + c^p (n − m)) / n )^(1/p)
//! loc   = ( (min_π Σ d_c(x_i, y_π(i))^p) / n )^(1/p)
//! card  = ( c^p (n − m) / n )^(1/p)
//! ```
//!
//! with `d_c = min(c, d)`, so `total^p = loc^p + card^p` and every component
//! is at most `c`.
//!
//! OSPA² applies the same formula to tracks. The base distance between a
//! truth track and an estimated track is the mean, over window frames where
//! at least one of them exists, of `min(c, ‖x_t − y_t‖)` when both exist and
//! `c` when only one does. Tracks with no frame in the window are ignored.

mod assignment;

use std::collections::BTreeMap;

pub use assignment::hungarian;

use crate::error::{Error, Result};

/// Per-track position series keyed by frame.
pub type TrackSeries<K> = BTreeMap<K, BTreeMap<u64, [f64; 2]>>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OspaParams {
    pub c: f64,
    pub p: f64,
    pub window: usize,
}

impl Default for OspaParams {
    fn default() -> Self {
        Self {
            c: 100.0,
            p: 2.0,
            window: 5,
        }
    }
}

impl OspaParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::invalid("metrics.c", "cut-off must be positive"));
        }
        if !(self.p >= 1.0 && self.p.is_finite()) {
            return Err(Error::invalid("metrics.p", "order must be at least 1"));
        }
        if self.window == 0 {
            return Err(Error::invalid("metrics.window", "window must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct OspaResult {
    pub total: f64,
    pub localization: f64,
    pub cardinality: f64,
}

/// OSPA machinery over an abstract `m × n` base distance.
fn ospa_core(m: usize, n: usize, base: impl Fn(usize, usize) -> f64, params: &OspaParams) -> OspaResult {
    let (c, p) = (params.c, params.p);
    if m == 0 && n == 0 {
        return OspaResult::default();
    }
    let (small, large, swapped) = if m <= n { (m, n, false) } else { (n, m, true) };
    let cost: Vec<Vec<f64>> = (0..small)
        .map(|i| {
            (0..large)
                .map(|j| {
                    let d = if swapped { base(j, i) } else { base(i, j) };
                    d.min(c).powf(p)
                })
                .collect()
        })
        .collect();
    let (loc_sum, _) = hungarian(&cost);
    let card_sum = c.powf(p) * (large - small) as f64;
    let nf = large as f64;
    OspaResult {
        total: ((loc_sum + card_sum) / nf).powf(1.0 / p).min(c),
        localization: (loc_sum / nf).powf(1.0 / p).min(c),
        cardinality: (card_sum / nf).powf(1.0 / p).min(c),
    }
}

fn dist(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

pub fn ospa(truth: &[[f64; 2]], estimates: &[[f64; 2]], params: &OspaParams) -> OspaResult {
    ospa_core(truth.len(), estimates.len(), |i, j| dist(&truth[i], &estimates[j]), params)
}

/// OSPA² at `at_frame` over the window `[at_frame − window + 1, at_frame]`.
pub fn ospa2<K: Ord, L: Ord>(
    truth_tracks: &TrackSeries<K>,
    est_tracks: &TrackSeries<L>,
    at_frame: u64,
    params: &OspaParams,
) -> OspaResult {
    let start = at_frame.saturating_sub(params.window as u64 - 1);
    let in_window = |s: &BTreeMap<u64, [f64; 2]>| s.range(start..=at_frame).next().is_some();
    let truth: Vec<&BTreeMap<u64, [f64; 2]>> = truth_tracks.values().filter(|s| in_window(s)).collect();
    let est: Vec<&BTreeMap<u64, [f64; 2]>> = est_tracks.values().filter(|s| in_window(s)).collect();
    let c = params.c;
    let base = |i: usize, j: usize| {
        let (x, y) = (truth[i], est[j]);
        let mut sum = 0.0;
        let mut count = 0usize;
        for t in start..=at_frame {
            match (x.get(&t), y.get(&t)) {
                (Some(a), Some(b)) => {
                    sum += dist(a, b).min(c);
                    count += 1;
                }
                (Some(_), None) | (None, Some(_)) => {
                    sum += c;
                    count += 1;
                }
                (None, None) => {}
            }
        }
        sum / count as f64
    };
    ospa_core(truth.len(), est.len(), base, params)
}

/// Ground-truth count minus estimated count; negative means over-estimation.
pub fn cardinality_error(truth_count: usize, estimated_count: usize) -> i64 {
    truth_count as i64 - estimated_count as i64
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const P: OspaParams = OspaParams {
        c: 100.0,
        p: 2.0,
        window: 5,
    };

    #[test]
    fn identical_sets_are_zero() {
        let x = [[1.0, 2.0], [30.0, -4.0], [7.5, 7.5]];
        assert_eq!(ospa(&x, &x, &P), OspaResult::default());
        assert_eq!(ospa(&[], &[], &P), OspaResult::default());
    }

    #[test]
    fn one_empty_set_is_full_cardinality_error() {
        let y = [[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]];
        let r = ospa(&[], &y, &P);
        assert_eq!(r.total, 100.0);
        assert_eq!(r.cardinality, 100.0);
        assert_eq!(r.localization, 0.0);
        assert_eq!(ospa(&y, &[], &P), r);
    }

    #[test]
    fn hand_computed_pair() {
        // one matched pair at distance 3, one extra estimate
        let r = ospa(&[[0.0, 0.0]], &[[3.0, 0.0], [500.0, 0.0]], &P);
        assert!((r.localization - (9.0f64 / 2.0).sqrt()).abs() < 1e-12);
        assert!((r.cardinality - (10000.0f64 / 2.0).sqrt()).abs() < 1e-12);
        assert!((r.total - (10009.0f64 / 2.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn cardinality_error_sign() {
        assert_eq!(cardinality_error(5, 5), 0);
        assert_eq!(cardinality_error(5, 3), 2);
        assert_eq!(cardinality_error(3, 5), -2);
    }

    fn series(points: &[(u64, [f64; 2])]) -> BTreeMap<u64, [f64; 2]> {
        points.iter().copied().collect()
    }

    #[test]
    fn ospa2_window_one_is_frame_ospa() {
        let truth: TrackSeries<u32> = [
            (0, series(&[(0, [0.0, 0.0]), (1, [1.0, 0.0])])),
            (1, series(&[(1, [50.0, 50.0])])),
        ]
        .into();
        let est: TrackSeries<u32> = [(7, series(&[(0, [3.0, 4.0]), (1, [4.0, 4.0])]))].into();
        let p1 = OspaParams { window: 1, ..P };
        let got = ospa2(&truth, &est, 1, &p1);
        let want = ospa(&[[1.0, 0.0], [50.0, 50.0]], &[[4.0, 4.0]], &p1);
        assert!((got.total - want.total).abs() < 1e-12);
        assert!((got.localization - want.localization).abs() < 1e-12);
    }

    #[test]
    fn ospa2_two_by_two_hand_oracle() {
        // Truth A exists frames 0..5, B frames 2..5; estimates X on 0..5
        // offset 3 from A, Y frames 3..5 offset 4 from B.
        let mut a = BTreeMap::new();
        let mut b = BTreeMap::new();
        let mut x = BTreeMap::new();
        let mut y = BTreeMap::new();
        for t in 0..5u64 {
            let tf = t as f64;
            a.insert(t, [tf * 10.0, 0.0]);
            x.insert(t, [tf * 10.0, 3.0]);
            if t >= 2 {
                b.insert(t, [tf * 10.0, 60.0]);
            }
            if t >= 3 {
                y.insert(t, [tf * 10.0 + 4.0, 60.0]);
            }
        }
        let truth: TrackSeries<u8> = [(0, a), (1, b)].into();
        let est: TrackSeries<u8> = [(0, x), (1, y)].into();
        let got = ospa2(&truth, &est, 4, &P);
        // base distances over frames 0..=4
        let d_ax: f64 = 3.0;
        let d_by: f64 = (100.0 + 4.0 + 4.0) / 3.0; // frame 2: only B → c; 3,4: 4
        let d_ay: f64 = (3.0 * 100.0 + 2.0 * 60.0f64.hypot(4.0)) / 5.0;
        let d_bx: f64 = (2.0 * 100.0 + 3.0 * 57.0) / 5.0;
        let opt = (d_ax.powi(2) + d_by.powi(2)).min(d_ay.powi(2) + d_bx.powi(2));
        assert!((got.total - (opt / 2.0).sqrt()).abs() < 1e-9);
        assert_eq!(got.cardinality, 0.0);
        assert_eq!(ospa2(&truth, &truth, 4, &P), OspaResult::default());
    }

    fn pts() -> impl Strategy<Value = Vec<[f64; 2]>> {
        prop::collection::vec(prop::array::uniform2(0.0f64..200.0), 0..6)
    }

    proptest! {
        #[test]
        fn symmetric_and_bounded(x in pts(), y in pts()) {
            let a = ospa(&x, &y, &P);
            let b = ospa(&y, &x, &P);
            prop_assert!((a.total - b.total).abs() < 1e-9);
            for v in [a.total, a.localization, a.cardinality] {
                prop_assert!((0.0..=P.c).contains(&v));
            }
            prop_assert!((a.total.powi(2) - a.localization.powi(2) - a.cardinality.powi(2)).abs() < 1e-6);
        }

        #[test]
        fn monotone_in_cutoff(x in pts(), y in pts(), c1 in 1.0f64..200.0, c2 in 1.0f64..200.0) {
            let (lo, hi) = if c1 <= c2 { (c1, c2) } else { (c2, c1) };
            let a = ospa(&x, &y, &OspaParams { c: lo, ..P });
            let b = ospa(&x, &y, &OspaParams { c: hi, ..P });
            prop_assert!(a.total <= b.total + 1e-9);
        }

        #[test]
        fn zero_iff_equal(x in pts()) {
            prop_assert_eq!(ospa(&x, &x, &P).total, 0.0);
            if let Some(first) = x.first() {
                let mut y = x.clone();
                y[0] = [first[0] + 0.5, first[1]];
                prop_assert!(ospa(&x, &y, &P).total > 0.0);
            }
        }
    }
}
