use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use super::RunConfig;
use crate::error::{Error, Result};
use crate::filter::{step, FilterConfig, FilterState, Scan, StepDiagnostics};
use crate::interaction::InteractionModel;
use crate::metrics::{cardinality_error, ospa, ospa2, OspaParams, OspaResult};
use crate::par;
use crate::random::RandomSource;
use crate::scenario::io::{self, format_real, EstimateRow, TrackEstimates};
use crate::scenario::{self, birth_model_from_truth, GroundTruth};

// Top-level substream tags under the run seed.
const TAG_TRUTH: u64 = 1;
const TAG_SCANS: u64 = 2;
const TAG_FILTER: u64 = 3;

pub const DIAGNOSTICS_HEADER: &str = "frame,num_tracks,num_estimates,interaction_active,interaction_pairs,underflows,association_groups,largest_group,degenerate_groups";
pub const METRICS_HEADER: &str = "frame,ospa_total,ospa_loc,ospa_card,ospa2_total,ospa2_loc,ospa2_card,card_error";
const METRIC_NAMES: [&str; 7] = [
    "ospa_total",
    "ospa_loc",
    "ospa_card",
    "ospa2_total",
    "ospa2_loc",
    "ospa2_card",
    "card_error",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimulateSummary {
    pub frames: u64,
    pub targets: usize,
    pub target_frames: usize,
    pub measurements: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackRun {
    pub estimates: TrackEstimates,
    pub diagnostics: Vec<StepDiagnostics>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameMetrics {
    pub frame: u64,
    pub ospa: OspaResult,
    pub ospa2: OspaResult,
    pub card_error: i64,
}

impl FrameMetrics {
    fn values(&self) -> [f64; 7] {
        [
            self.ospa.total,
            self.ospa.localization,
            self.ospa.cardinality,
            self.ospa2.total,
            self.ospa2.localization,
            self.ospa2.cardinality,
            self.card_error as f64,
        ]
    }
}

/// Per-metric run means; `abs_card_error` is the mean of `|card_error|`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MetricMeans {
    pub ospa_total: f64,
    pub ospa_loc: f64,
    pub ospa_card: f64,
    pub ospa2_total: f64,
    pub ospa2_loc: f64,
    pub ospa2_card: f64,
    pub card_error: f64,
    pub abs_card_error: f64,
}

impl MetricMeans {
    pub fn of(rows: &[FrameMetrics]) -> Self {
        let n = rows.len().max(1) as f64;
        let mean = |f: &dyn Fn(&FrameMetrics) -> f64| rows.iter().map(f).sum::<f64>() / n;
        Self {
            ospa_total: mean(&|r| r.ospa.total),
            ospa_loc: mean(&|r| r.ospa.localization),
            ospa_card: mean(&|r| r.ospa.cardinality),
            ospa2_total: mean(&|r| r.ospa2.total),
            ospa2_loc: mean(&|r| r.ospa2.localization),
            ospa2_card: mean(&|r| r.ospa2.cardinality),
            card_error: mean(&|r| r.card_error as f64),
            abs_card_error: mean(&|r| r.card_error.abs() as f64),
        }
    }

    fn named(&self) -> [(&'static str, f64); 8] {
        [
            ("ospa_total", self.ospa_total),
            ("ospa_loc", self.ospa_loc),
            ("ospa_card", self.ospa_card),
            ("ospa2_total", self.ospa2_total),
            ("ospa2_loc", self.ospa2_loc),
            ("ospa2_card", self.ospa2_card),
            ("card_error", self.card_error),
            ("abs_card_error", self.abs_card_error),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareSummary {
    pub baseline: MetricMeans,
    pub interaction: MetricMeans,
    pub baseline_frames: Vec<FrameMetrics>,
    pub interaction_frames: Vec<FrameMetrics>,
}

impl CompareSummary {
    /// Baseline mean OSPA minus interaction-aware mean OSPA; positive favours interaction.
    pub fn ospa_difference(&self) -> f64 {
        self.baseline.ospa_total - self.interaction.ospa_total
    }
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub fn simulate_truth(run: &RunConfig) -> Result<GroundTruth> {
    scenario::simulate(&run.scenario, &RandomSource::new(run.seed).substream(&[TAG_TRUTH]))
}

pub fn simulate_scans(run: &RunConfig, truth: &GroundTruth) -> Vec<Scan> {
    scenario::generate_scans(truth, &run.filter, &RandomSource::new(run.seed).substream(&[TAG_SCANS]))
}

/// The run's filter configuration with birth components at the scenario's entry points.
pub fn filter_config(run: &RunConfig, truth: &GroundTruth) -> Result<FilterConfig> {
    let b = run.birth;
    Ok(FilterConfig {
        birth: birth_model_from_truth(truth, b.r, b.pos_std, b.vel_std)?,
        ..run.filter.clone()
    })
}

/// Runs the filter over `scans`, recording each frame's estimates with their existence probabilities.
pub fn run_filter(cfg: &FilterConfig, scans: &[Scan], rng: &RandomSource) -> Result<TrackRun> {
    cfg.validate()?;
    let mut state = FilterState::new();
    let mut out = TrackRun {
        estimates: TrackEstimates::default(),
        diagnostics: Vec::with_capacity(scans.len()),
    };
    for scan in scans {
        state = step(&state, scan, cfg, rng)?;
        let rows = state
            .estimates
            .items()
            .iter()
            .map(|&(label, s)| EstimateRow {
                label,
                state: s,
                r: state.posterior.get(label).map_or(0.0, |t| t.r()),
            })
            .collect();
        out.estimates.frames.insert(scan.frame, rows);
        log::debug!(
            "frame {}: {} tracks, {} estimates",
            scan.frame,
            state.diagnostics.num_tracks,
            state.diagnostics.num_estimates
        );
        out.diagnostics.push(state.diagnostics);
    }
    Ok(out)
}

fn filter_rng(run: &RunConfig) -> RandomSource {
    RandomSource::new(run.seed).substream(&[TAG_FILTER])
}

pub fn format_diagnostics(diags: &[StepDiagnostics]) -> String {
    let mut out = format!("{DIAGNOSTICS_HEADER}\n");
    for d in diags {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            d.frame,
            d.num_tracks,
            d.num_estimates,
            d.interaction_active as u8,
            d.interaction_pairs,
            d.underflows,
            d.association_groups,
            d.largest_group,
            d.degenerate_groups
        )
        .unwrap();
    }
    out
}

/// Writes `truth.csv` and `scans.csv`.
pub fn cmd_simulate(run: &RunConfig, out_dir: &Path) -> Result<SimulateSummary> {
    let truth = simulate_truth(run)?;
    let scans = simulate_scans(run, &truth);
    ensure_dir(out_dir)?;
    io::write_truth(out_dir.join("truth.csv"), &truth)?;
    io::write_scans(out_dir.join("scans.csv"), &scans)?;
    Ok(SimulateSummary {
        frames: truth.num_frames,
        targets: truth.tracks.len(),
        target_frames: truth.target_frames(),
        measurements: scans.iter().map(|s| s.measurements.len()).sum(),
    })
}

/// Writes `tracks.csv`, `diagnostics.csv` and `timing.csv` (wall time is
/// kept apart so the other two files are reproducible byte for byte).
pub fn cmd_track(run: &RunConfig, scans_path: &Path, out_dir: &Path) -> Result<TrackRun> {
    let scans = io::read_scans(scans_path)?;
    let truth = simulate_truth(run)?;
    let cfg = filter_config(run, &truth)?;
    let started = Instant::now();
    let result = run_filter(&cfg, &scans, &filter_rng(run))?;
    let secs = started.elapsed().as_secs_f64();
    log::info!("tracked {} frames in {secs:.3} s", scans.len());
    ensure_dir(out_dir)?;
    io::write_tracks(out_dir.join("tracks.csv"), &result.estimates)?;
    write(&out_dir.join("diagnostics.csv"), &format_diagnostics(&result.diagnostics))?;
    let per_frame = if scans.is_empty() { 0.0 } else { secs / scans.len() as f64 };
    write(
        &out_dir.join("timing.csv"),
        &format!("frames,wall_seconds,seconds_per_frame\n{},{secs:.6},{per_frame:.6}\n", scans.len()),
    )?;
    Ok(result)
}

/// Per-frame OSPA, OSPA² and cardinality error. Every truth frame must
/// have a tracks entry and vice versa.
pub fn evaluate(truth: &GroundTruth, tracks: &TrackEstimates, params: &OspaParams) -> Result<Vec<FrameMetrics>> {
    params.validate()?;
    let missing_in_tracks: Vec<u64> = (0..truth.num_frames).filter(|k| !tracks.frames.contains_key(k)).collect();
    let missing_in_truth: Vec<u64> = tracks.frames.keys().copied().filter(|&k| k >= truth.num_frames).collect();
    if !missing_in_tracks.is_empty() || !missing_in_truth.is_empty() {
        return Err(Error::FrameMismatch {
            missing_in_tracks,
            missing_in_truth,
        });
    }
    let truth_series = truth.series();
    let est_series = tracks.series();
    Ok((0..truth.num_frames)
        .map(|k| {
            let x = truth.positions_at(k);
            let y = tracks.positions_at(k);
            FrameMetrics {
                frame: k,
                ospa: ospa(&x, &y, params),
                ospa2: ospa2(&truth_series, &est_series, k, params),
                card_error: cardinality_error(x.len(), y.len()),
            }
        })
        .collect())
}

pub fn format_metrics(rows: &[FrameMetrics]) -> String {
    let mut out = format!("{METRICS_HEADER}\n");
    for r in rows {
        let v = r.values();
        write!(out, "{}", r.frame).unwrap();
        for x in &v[..6] {
            write!(out, ",{}", format_real(*x)).unwrap();
        }
        writeln!(out, ",{}", r.card_error).unwrap();
    }
    out
}

fn format_means(m: &MetricMeans) -> String {
    let named = m.named();
    let header: Vec<&str> = named.iter().map(|(n, _)| *n).collect();
    let values: Vec<String> = named.iter().map(|(_, v)| format_real(*v)).collect();
    format!("{}\n{}\n", header.join(","), values.join(","))
}

/// Writes `metrics.csv` (one row per frame) and `metrics_summary.csv` (run means).
pub fn cmd_evaluate(truth_path: &Path, tracks_path: &Path, params: &OspaParams, out_dir: &Path) -> Result<Vec<FrameMetrics>> {
    let truth = io::read_truth(truth_path)?;
    let tracks = io::read_tracks(tracks_path)?;
    let rows = evaluate(&truth, &tracks, params)?;
    ensure_dir(out_dir)?;
    write(&out_dir.join("metrics.csv"), &format_metrics(&rows))?;
    write(&out_dir.join("metrics_summary.csv"), &format_means(&MetricMeans::of(&rows)))?;
    Ok(rows)
}

/// Baseline (no interaction) and interaction-aware filters on one shared
/// scan stream and seed. Writes the simulated inputs, both track files,
/// `compare.csv` (paired per-frame metrics) and `compare_summary.csv`
/// (means and baseline − interaction differences).
pub fn cmd_compare(run: &RunConfig, out_dir: &Path) -> Result<CompareSummary> {
    let truth = simulate_truth(run)?;
    let scans = simulate_scans(run, &truth);
    let summary = compare_on(run, &truth, &scans)?;
    ensure_dir(out_dir)?;
    io::write_truth(out_dir.join("truth.csv"), &truth)?;
    io::write_scans(out_dir.join("scans.csv"), &scans)?;
    write(&out_dir.join("compare.csv"), &format_compare(&summary))?;
    write(&out_dir.join("compare_summary.csv"), &format_compare_summary(&summary))?;
    Ok(summary)
}

/// The comparison itself, on caller-provided truth and scans.
pub fn compare_on(run: &RunConfig, truth: &GroundTruth, scans: &[Scan]) -> Result<CompareSummary> {
    let aware = filter_config(run, truth)?;
    let mut baseline = aware.clone();
    baseline.interaction.model = InteractionModel::None;
    let rng = filter_rng(run);
    let (b, i) = par::join(
        aware.execution,
        || run_filter(&baseline, scans, &rng),
        || run_filter(&aware, scans, &rng),
    );
    let (b, i) = (b?, i?);
    let bm = evaluate(truth, &b.estimates, &run.metrics)?;
    let im = evaluate(truth, &i.estimates, &run.metrics)?;
    Ok(CompareSummary {
        baseline: MetricMeans::of(&bm),
        interaction: MetricMeans::of(&im),
        baseline_frames: bm,
        interaction_frames: im,
    })
}

fn format_compare(s: &CompareSummary) -> String {
    let mut out = String::from("frame");
    for m in METRIC_NAMES {
        write!(out, ",baseline_{m},interaction_{m}").unwrap();
    }
    out.push('\n');
    for (b, i) in s.baseline_frames.iter().zip(&s.interaction_frames) {
        write!(out, "{}", b.frame).unwrap();
        let (bv, iv) = (b.values(), i.values());
        for k in 0..6 {
            write!(out, ",{},{}", format_real(bv[k]), format_real(iv[k])).unwrap();
        }
        writeln!(out, ",{},{}", b.card_error, i.card_error).unwrap();
    }
    out
}

fn format_compare_summary(s: &CompareSummary) -> String {
    let mut out = String::from("metric,baseline_mean,interaction_mean,difference\n");
    for ((name, b), (_, i)) in s.baseline.named().into_iter().zip(s.interaction.named()) {
        writeln!(out, "{name},{},{},{}", format_real(b), format_real(i), format_real(b - i)).unwrap();
    }
    out
}
