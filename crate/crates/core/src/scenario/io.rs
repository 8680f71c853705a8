//! Delimited text formats.
//!
//! Every file starts with a header naming the columns and has one row per
//! item. A frame with no items is written as a marker row holding only the
//! frame number (remaining cells empty), so the frame range survives a
//! round trip. Reals are written with 17 significant digits, which
//! reproduces every `f64` exactly.
//!
//! | file   | columns                              |
//! |--------|--------------------------------------|
//! | truth  | `frame,label,px,vx,py,vy`            |
//! | scans  | `frame,zx,zy`                        |
//! | tracks | `frame,label,px,vx,py,vy,r`          |
//!
//! Labels are written as `birth_time:birth_index`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use super::{GroundTruth, GroundTruthTrack};
use crate::error::{Error, Result};
use crate::filter::{Measurement, Scan};
use crate::metrics::TrackSeries;
use crate::rfs::{Label, StateVector};

pub const TRUTH_HEADER: &str = "frame,label,px,vx,py,vy";
pub const SCANS_HEADER: &str = "frame,zx,zy";
pub const TRACKS_HEADER: &str = "frame,label,px,vx,py,vy,r";

/// One reported estimate in a tracks file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateRow {
    pub label: Label,
    pub state: StateVector,
    pub r: f64,
}

/// Per-frame estimates as stored in a tracks file. Frames without
/// estimates are present with an empty list.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrackEstimates {
    pub frames: BTreeMap<u64, Vec<EstimateRow>>,
}

impl TrackEstimates {
    pub fn positions_at(&self, frame: u64) -> Vec<[f64; 2]> {
        self.frames
            .get(&frame)
            .map(|rows| rows.iter().map(|r| r.state.position()).collect())
            .unwrap_or_default()
    }

    pub fn series(&self) -> TrackSeries<Label> {
        let mut out = TrackSeries::new();
        for (&k, rows) in &self.frames {
            for r in rows {
                out.entry(r.label).or_default().insert(k, r.state.position());
            }
        }
        out
    }
}

/// `{:.16e}`: 17 significant digits.
pub fn format_real(v: f64) -> String {
    format!("{v:.16e}")
}

fn push_state(out: &mut String, s: &StateVector) {
    for v in s.to_array() {
        out.push(',');
        out.push_str(&format_real(v));
    }
}

pub fn format_truth(truth: &GroundTruth) -> String {
    let mut out = format!("{TRUTH_HEADER}\n");
    for k in 0..truth.num_frames {
        let alive = truth.alive_at(k);
        if alive.is_empty() {
            writeln!(out, "{k},,,,,").unwrap();
        }
        for (label, s) in alive {
            write!(out, "{k},{label}").unwrap();
            push_state(&mut out, &s);
            out.push('\n');
        }
    }
    out
}

pub fn format_scans(scans: &[Scan]) -> String {
    let mut out = format!("{SCANS_HEADER}\n");
    for scan in scans {
        if scan.measurements.is_empty() {
            writeln!(out, "{},,", scan.frame).unwrap();
        }
        for m in &scan.measurements {
            writeln!(out, "{},{},{}", scan.frame, format_real(m.z[0]), format_real(m.z[1])).unwrap();
        }
    }
    out
}

pub fn format_tracks(tracks: &TrackEstimates) -> String {
    let mut out = format!("{TRACKS_HEADER}\n");
    for (k, rows) in &tracks.frames {
        if rows.is_empty() {
            writeln!(out, "{k},,,,,,").unwrap();
        }
        for row in rows {
            write!(out, "{k},{}", row.label).unwrap();
            push_state(&mut out, &row.state);
            writeln!(out, ",{}", format_real(row.r)).unwrap();
        }
    }
    out
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_truth(path: impl AsRef<Path>, truth: &GroundTruth) -> Result<()> {
    write_file(path.as_ref(), &format_truth(truth))
}

pub fn write_scans(path: impl AsRef<Path>, scans: &[Scan]) -> Result<()> {
    write_file(path.as_ref(), &format_scans(scans))
}

pub fn write_tracks(path: impl AsRef<Path>, tracks: &TrackEstimates) -> Result<()> {
    write_file(path.as_ref(), &format_tracks(tracks))
}

/// A parsed data row: frame plus the remaining cells, `None` for a marker row.
struct Row {
    line: usize,
    frame: u64,
    cells: Option<Vec<String>>,
}

struct Table<'a> {
    path: &'a Path,
}

impl Table<'_> {
    fn err(&self, line: usize, column: usize, message: impl Into<String>) -> Error {
        Error::Parse {
            path: self.path.to_path_buf(),
            line,
            column,
            message: message.into(),
        }
    }

    fn rows(&self, text: &str, header: &str) -> Result<Vec<Row>> {
        let expected: Vec<&str> = header.split(',').collect();
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_reader(text.as_bytes());
        let mut records = reader.records();
        match records.next() {
            None => return Err(self.err(1, 1, format!("missing header `{header}`"))),
            Some(rec) => {
                let rec = rec.map_err(|e| self.csv_err(e))?;
                let got: Vec<&str> = rec.iter().map(str::trim).collect();
                if got != expected {
                    return Err(self.err(1, 1, format!("expected header `{header}`, found `{}`", got.join(","))));
                }
            }
        }
        let mut rows = Vec::new();
        for rec in records {
            let rec = rec.map_err(|e| self.csv_err(e))?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            if rec.len() == 1 && rec[0].trim().is_empty() {
                continue;
            }
            if rec.len() != expected.len() {
                return Err(self.err(
                    line,
                    rec.len().min(expected.len()) + 1,
                    format!("expected {} cells, found {}", expected.len(), rec.len()),
                ));
            }
            let frame = self.cell::<u64>(&rec[0], line, 1, "frame")?;
            let rest: Vec<String> = rec.iter().skip(1).map(|c| c.trim().to_string()).collect();
            let cells = if rest.iter().all(String::is_empty) {
                None
            } else {
                Some(rest)
            };
            rows.push(Row { line, frame, cells });
        }
        Ok(rows)
    }

    fn csv_err(&self, e: csv::Error) -> Error {
        let line = e.position().map_or(0, |p| p.line() as usize);
        self.err(line, 1, e.to_string())
    }

    fn cell<T: FromStr>(&self, s: &str, line: usize, column: usize, what: &str) -> Result<T> {
        s.trim()
            .parse()
            .map_err(|_| self.err(line, column, format!("invalid {what} `{}`", s.trim())))
    }

    /// Cells from column 2 on: label then reals.
    fn labelled(&self, row: &Row, cells: &[String]) -> Result<(Label, Vec<f64>)> {
        let label: Label = cells[0]
            .parse()
            .map_err(|m: String| self.err(row.line, 2, m))?;
        let reals = cells[1..]
            .iter()
            .enumerate()
            .map(|(i, c)| self.cell::<f64>(c, row.line, i + 3, "number"))
            .collect::<Result<_>>()?;
        Ok((label, reals))
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn parse_truth(path: &Path, text: &str) -> Result<GroundTruth> {
    let t = Table { path };
    let mut num_frames = 0;
    let mut tracks: BTreeMap<Label, BTreeMap<u64, StateVector>> = BTreeMap::new();
    for row in t.rows(text, TRUTH_HEADER)? {
        num_frames = num_frames.max(row.frame + 1);
        let Some(cells) = &row.cells else { continue };
        let (label, v) = t.labelled(&row, cells)?;
        let state = StateVector::new(v[0], v[1], v[2], v[3]);
        if tracks.entry(label).or_default().insert(row.frame, state).is_some() {
            return Err(t.err(row.line, 2, format!("duplicate row for label {label} at frame {}", row.frame)));
        }
    }
    let tracks = tracks
        .into_iter()
        .map(|(label, states)| GroundTruthTrack::from_map(label, states))
        .collect::<Result<_>>()?;
    Ok(GroundTruth { num_frames, tracks })
}

pub fn parse_scans(path: &Path, text: &str) -> Result<Vec<Scan>> {
    let t = Table { path };
    let mut scans: Vec<Scan> = Vec::new();
    for row in t.rows(text, SCANS_HEADER)? {
        if scans.last().is_none_or(|s| s.frame != row.frame) {
            scans.push(Scan::new(row.frame, Vec::new()));
        }
        if let Some(cells) = &row.cells {
            let x = t.cell::<f64>(&cells[0], row.line, 2, "number")?;
            let y = t.cell::<f64>(&cells[1], row.line, 3, "number")?;
            scans.last_mut().unwrap().measurements.push(Measurement::new(x, y));
        }
    }
    Ok(scans)
}

pub fn parse_tracks(path: &Path, text: &str) -> Result<TrackEstimates> {
    let t = Table { path };
    let mut out = TrackEstimates::default();
    for row in t.rows(text, TRACKS_HEADER)? {
        let rows = out.frames.entry(row.frame).or_default();
        let Some(cells) = &row.cells else { continue };
        let (label, v) = t.labelled(&row, cells)?;
        if rows.iter().any(|r| r.label == label) {
            return Err(t.err(row.line, 2, format!("duplicate label {label} at frame {}", row.frame)));
        }
        rows.push(EstimateRow {
            label,
            state: StateVector::new(v[0], v[1], v[2], v[3]),
            r: v[4],
        });
    }
    Ok(out)
}

pub fn read_truth(path: impl AsRef<Path>) -> Result<GroundTruth> {
    let path = path.as_ref();
    parse_truth(path, &read_text(path)?)
}

pub fn read_scans(path: impl AsRef<Path>) -> Result<Vec<Scan>> {
    let path = path.as_ref();
    parse_scans(path, &read_text(path)?)
}

pub fn read_tracks(path: impl AsRef<Path>) -> Result<TrackEstimates> {
    let path = path.as_ref();
    parse_tracks(path, &read_text(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::FilterConfig;
    use crate::random::RandomSource;
    use crate::scenario::{generate_scans, simulate, ScenarioConfig, ScenarioKind};
    use proptest::prelude::*;

    fn p() -> &'static Path {
        Path::new("mem.csv")
    }

    #[test]
    fn empty_truth_is_header_only() {
        let t = GroundTruth::default();
        let text = format_truth(&t);
        assert_eq!(text, "frame,label,px,vx,py,vy\n");
        assert_eq!(parse_truth(p(), &text).unwrap(), t);
    }

    #[test]
    fn empty_frames_are_kept() {
        let t = GroundTruth {
            num_frames: 3,
            tracks: vec![GroundTruthTrack::new(Label::new(1, 0), 1, vec![StateVector::new(1.0, 2.0, 3.0, 4.0)]).unwrap()],
        };
        let text = format_truth(&t);
        assert!(text.starts_with("frame,label,px,vx,py,vy\n0,,,,,\n1,1:0,"));
        assert!(text.ends_with("2,,,,,\n"));
        assert_eq!(parse_truth(p(), &text).unwrap(), t);

        let scans = vec![Scan::new(0, vec![]), Scan::new(1, vec![Measurement::new(0.1, -2.5)])];
        assert_eq!(parse_scans(p(), &format_scans(&scans)).unwrap(), scans);
    }

    #[test]
    fn scenario_round_trips_bit_exactly() {
        let mut sc = ScenarioConfig::new(ScenarioKind::Swarm, 25, 7);
        sc.swarm.birth_stagger = 2;
        sc.swarm.death_stagger = 1;
        let truth = simulate(&sc, &RandomSource::new(11)).unwrap();
        assert_eq!(parse_truth(p(), &format_truth(&truth)).unwrap(), truth);
        let scans = generate_scans(&truth, &FilterConfig::default(), &RandomSource::new(12));
        assert_eq!(parse_scans(p(), &format_scans(&scans)).unwrap(), scans);
    }

    #[test]
    fn tracks_round_trip() {
        let mut t = TrackEstimates::default();
        t.frames.insert(0, vec![]);
        t.frames.insert(
            1,
            vec![
                EstimateRow {
                    label: Label::new(0, 2),
                    state: StateVector::new(1.0 / 3.0, -0.0, 1e300, -7.25),
                    r: 0.999,
                },
                EstimateRow {
                    label: Label::new(1, 0),
                    state: StateVector::new(0.0, 0.0, 0.0, 0.0),
                    r: 0.6,
                },
            ],
        );
        let back = parse_tracks(p(), &format_tracks(&t)).unwrap();
        assert_eq!(back, t);
        assert!(back.frames[&1][0].state.vx.is_sign_negative());
        assert_eq!(back.series()[&Label::new(1, 0)].len(), 1);
    }

    #[test]
    fn non_numeric_cell_reports_line_and_column() {
        let text = "frame,zx,zy\n0,1.0,2.0\n1,abc,3\n";
        match parse_scans(Path::new("scans.csv"), text) {
            Err(Error::Parse { line, column, path, .. }) => {
                assert_eq!((line, column), (3, 2));
                assert_eq!(path, Path::new("scans.csv"));
            }
            other => panic!("{other:?}"),
        }
        let msg = parse_truth(Path::new("t.csv"), "frame,label,px,vx,py,vy\n0,0:0,1,2,x,4\n")
            .unwrap_err()
            .to_string();
        assert!(msg.starts_with("t.csv:2:5:"), "{msg}");
    }

    #[test]
    fn structural_errors() {
        assert!(parse_scans(p(), "").is_err());
        assert!(parse_scans(p(), "frame,x,y\n").is_err());
        assert!(parse_scans(p(), "frame,zx,zy\n0,1\n").is_err());
        assert!(parse_truth(p(), "frame,label,px,vx,py,vy\n0,zz,1,2,3,4\n").is_err());
        let dup = "frame,label,px,vx,py,vy\n0,0:0,1,2,3,4\n0,0:0,1,2,3,4\n";
        assert!(parse_truth(p(), dup).is_err());
        let gap = "frame,label,px,vx,py,vy\n0,0:0,1,2,3,4\n2,0:0,1,2,3,4\n";
        assert!(matches!(parse_truth(p(), gap), Err(Error::InvalidTrack(_))));
    }

    #[test]
    fn files_on_disk() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scans.csv");
        let scans = vec![Scan::new(4, vec![Measurement::new(1.0, 2.0)])];
        write_scans(&path, &scans).unwrap();
        assert_eq!(read_scans(&path).unwrap(), scans);
        assert!(matches!(read_scans(dir.path().join("nope.csv")), Err(Error::Io { .. })));
    }

    proptest! {
        #[test]
        fn reals_round_trip(v in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
            prop_assert_eq!(format_real(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
    }
}
