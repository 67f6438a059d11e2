//! Velocity-threshold event detection.
//!
//! Positions are smoothed with a centered moving mean, speeds come from a
//! central difference of the smoothed track, and samples faster than the
//! threshold are classified as saccadic (I-VT). Runs are then tidied with
//! minimum-duration rules and turned into [`Fixation`] and [`Saccade`]
//! events.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{clean_gaps, GapPolicy, Recording, DEFAULT_PX_PER_DEGREE, DEFAULT_RATE_HZ};

/// Parameters for [`segment_events`] and [`detect_events`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorParams {
    /// Saccade speed threshold in px/ms.
    pub threshold: f64,
    pub min_fixation: f64,
    pub min_saccade: f64,
    pub px_per_degree: f64,
    pub nominal_rate: f64,
    /// Smoothing window in samples (odd).
    pub window: usize,
}

impl Default for DetectorParams {
    fn default() -> Self {
        DetectorParams {
            threshold: 0.7,
            min_fixation: 60.0,
            min_saccade: 10.0,
            px_per_degree: DEFAULT_PX_PER_DEGREE,
            nominal_rate: DEFAULT_RATE_HZ,
            window: 5,
        }
    }
}

/// Smoothed gaze track with the hard segment each sample belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedTrack {
    pub points: Vec<Option<(f64, f64)>>,
    pub segment: Vec<usize>,
    pub window: usize,
}

/// Per-sample smoothed positions and speeds.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityTrace {
    pub timestamps: Vec<f64>,
    pub positions: Vec<Option<(f64, f64)>>,
    /// Unsmoothed (gap-cleaned) positions, used for peak-velocity measurement.
    pub raw: Vec<Option<(f64, f64)>>,
    /// Speed in px/ms; `None` at track ends, gaps and segment boundaries.
    pub speed: Vec<Option<f64>>,
    pub segment: Vec<usize>,
    pub window: usize,
}

impl VelocityTrace {
    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fixation {
    pub start: f64,
    pub end: f64,
    pub centroid_x: f64,
    pub centroid_y: f64,
    pub duration: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Saccade {
    pub start: f64,
    pub end: f64,
    /// Degrees.
    pub amplitude: f64,
    /// Degrees per second.
    pub peak_velocity: f64,
    pub duration: f64,
}

impl Saccade {
    /// Chord amplitude over duration, in degrees per second.
    pub fn mean_velocity(&self) -> f64 {
        if self.duration > 0.0 {
            self.amplitude / (self.duration / 1000.0)
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EventStream {
    pub fixations: Vec<Fixation>,
    pub saccades: Vec<Saccade>,
    /// Milliseconds of signal covered by usable segments.
    pub valid_duration: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Fixation,
    Saccade,
}

impl EventStream {
    /// All events as `(kind, start, end)`, sorted by start.
    pub fn intervals(&self) -> Vec<(EventKind, f64, f64)> {
        let mut all: Vec<_> = self
            .fixations
            .iter()
            .map(|f| (EventKind::Fixation, f.start, f.end))
            .chain(self.saccades.iter().map(|s| (EventKind::Saccade, s.start, s.end)))
            .collect();
        all.sort_by(|a, b| a.1.total_cmp(&b.1));
        all
    }
}

fn segment_ids(len: usize, boundaries: &[usize]) -> Vec<usize> {
    let mut ids = Vec::with_capacity(len);
    let mut seg = 0;
    let mut next = boundaries.iter().peekable();
    for i in 0..len {
        while next.peek().is_some_and(|&&b| b <= i) {
            if *next.next().unwrap() == i {
                seg += 1;
            }
        }
        ids.push(seg);
    }
    ids
}

/// Centered moving mean of usable positions, clipped to hard segments.
///
/// A sample without a usable position of its own stays missing.
pub fn smooth_positions(rec: &Recording, window: usize) -> Result<SmoothedTrack> {
    if window == 0 || window % 2 == 0 {
        return Err(Error::InvalidWindow(window));
    }
    let n = rec.len();
    if window > n {
        return Err(Error::WindowTooLarge { window, len: n });
    }
    let segment = segment_ids(n, &rec.boundaries);
    let raw: Vec<_> = rec.samples.iter().map(|s| s.position()).collect();
    let half = window / 2;
    let points = (0..n)
        .map(|i| {
            raw[i]?;
            let lo = i.saturating_sub(half);
            let hi = (i + half).min(n - 1);
            let (mut sx, mut sy, mut k) = (0.0, 0.0, 0usize);
            for j in lo..=hi {
                if segment[j] != segment[i] {
                    continue;
                }
                if let Some((x, y)) = raw[j] {
                    sx += x;
                    sy += y;
                    k += 1;
                }
            }
            Some((sx / k as f64, sy / k as f64))
        })
        .collect();
    Ok(SmoothedTrack {
        points,
        segment,
        window,
    })
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

fn central_speeds(
    points: &[Option<(f64, f64)>],
    segment: &[usize],
    timestamps: &[f64],
) -> Vec<Option<f64>> {
    let n = points.len();
    (0..n)
        .map(|i| {
            if i == 0 || i + 1 >= n || segment[i - 1] != segment[i + 1] {
                return None;
            }
            points[i]?;
            let (a, b) = (points[i - 1]?, points[i + 1]?);
            Some(dist(a, b) / (timestamps[i + 1] - timestamps[i - 1]))
        })
        .collect()
}

/// Central-difference speed (px/ms) of a smoothed track.
pub fn compute_velocity(track: &SmoothedTrack, timestamps: &[f64]) -> Result<VelocityTrace> {
    if track.points.len() != timestamps.len() {
        return Err(Error::SchemaMismatch(format!(
            "{} positions vs {} timestamps",
            track.points.len(),
            timestamps.len()
        )));
    }
    if timestamps.len() < 3 {
        return Err(Error::EmptyRecording);
    }
    let speed = central_speeds(&track.points, &track.segment, timestamps);
    Ok(VelocityTrace {
        timestamps: timestamps.to_vec(),
        positions: track.points.clone(),
        raw: track.points.clone(),
        speed,
        segment: track.segment.clone(),
        window: track.window,
    })
}

/// Smooths and differentiates a recording, keeping its raw positions on the
/// trace.
pub fn velocity_trace(rec: &Recording, window: usize) -> Result<VelocityTrace> {
    let track = smooth_positions(rec, window)?;
    let mut trace = compute_velocity(&track, &rec.timestamps())?;
    trace.raw = rec.samples.iter().map(|s| s.position()).collect();
    Ok(trace)
}

#[derive(Debug, Clone, Copy)]
struct Run {
    saccadic: bool,
    first: usize,
    last: usize,
    start: f64,
    end: f64,
}

impl Run {
    fn duration(&self) -> f64 {
        self.end - self.start
    }
}

/// Labels one block of contiguous defined positions and returns its runs.
///
/// A run ends where the next run of the block starts; the final run ends at
/// the block's last timestamp.
fn block_runs(trace: &VelocityTrace, lo: usize, hi: usize, threshold: f64) -> Vec<Run> {
    let defined: Vec<usize> = (lo..=hi).filter(|&i| trace.speed[i].is_some()).collect();
    if defined.is_empty() {
        return Vec::new();
    }
    let label = |i: usize| -> bool {
        let j = match defined.binary_search(&i) {
            Ok(k) => defined[k],
            Err(k) if k == 0 => defined[0],
            Err(k) if k == defined.len() => defined[k - 1],
            Err(k) => {
                let (a, b) = (defined[k - 1], defined[k]);
                if i - a <= b - i {
                    a
                } else {
                    b
                }
            }
        };
        trace.speed[j].unwrap() > threshold
    };

    let mut runs: Vec<Run> = Vec::new();
    for i in lo..=hi {
        let s = label(i);
        match runs.last_mut() {
            Some(r) if r.saccadic == s => r.last = i,
            _ => runs.push(Run {
                saccadic: s,
                first: i,
                last: i,
                start: trace.timestamps[i],
                end: 0.0,
            }),
        }
    }
    for k in 0..runs.len() {
        runs[k].end = match runs.get(k + 1) {
            Some(next) => next.start,
            None => trace.timestamps[runs[k].last],
        };
    }
    runs
}

fn coalesce(runs: Vec<Run>) -> Vec<Run> {
    let mut out: Vec<Run> = Vec::with_capacity(runs.len());
    for r in runs {
        match out.last_mut() {
            Some(prev) if prev.saccadic == r.saccadic && prev.end == r.start => {
                prev.last = r.last;
                prev.end = r.end;
            }
            _ => out.push(r),
        }
    }
    out
}

fn tidy_runs(mut runs: Vec<Run>, params: &DetectorParams) -> Vec<Run> {
    // short saccadic runs between two fixation runs become part of one fixation
    for k in 1..runs.len().saturating_sub(1) {
        if runs[k].saccadic
            && runs[k].duration() < params.min_saccade
            && !runs[k - 1].saccadic
            && !runs[k + 1].saccadic
        {
            runs[k].saccadic = false;
        }
    }
    coalesce(runs)
        .into_iter()
        .filter(|r| {
            let min = if r.saccadic {
                params.min_saccade
            } else {
                params.min_fixation
            };
            r.duration() >= min && (!r.saccadic || r.duration() > 0.0)
        })
        .collect()
}

fn fixation_from(trace: &VelocityTrace, r: &Run) -> Fixation {
    let (mut sx, mut sy) = (0.0, 0.0);
    let members = &trace.positions[r.first..=r.last];
    for p in members.iter().flatten() {
        sx += p.0;
        sy += p.1;
    }
    let n = members.len() as f64;
    Fixation {
        start: r.start,
        end: r.end,
        centroid_x: sx / n,
        centroid_y: sy / n,
        duration: r.duration(),
    }
}

/// Builds a saccade from a run of block `[lo, hi]`.
///
/// The amplitude is the chord between smoothed positions just outside the
/// smoothing footprint of the run. Peak velocity is the largest central-difference
/// speed of the unsmoothed positions inside the run, falling back to the
/// smoothed speed where raw neighbours are missing.
fn saccade_from(trace: &VelocityTrace, r: &Run, lo: usize, hi: usize, params: &DetectorParams) -> Saccade {
    let reach = trace.window / 2 + 1;
    let a = r.first.saturating_sub(reach).max(lo);
    let b = (r.last + reach).min(hi);
    let chord = dist(trace.positions[a].unwrap(), trace.positions[b].unwrap());

    let raw_speed = central_speeds(&trace.raw, &trace.segment, &trace.timestamps);
    let peak = (r.first..=r.last)
        .filter_map(|i| raw_speed[i].or(trace.speed[i]))
        .fold(0.0f64, f64::max);
    Saccade {
        start: r.start,
        end: r.end,
        amplitude: chord / params.px_per_degree,
        peak_velocity: peak * 1000.0 / params.px_per_degree,
        duration: r.duration(),
    }
}

/// Splits a velocity trace into fixations and saccades.
pub fn segment_events(trace: &VelocityTrace, params: &DetectorParams) -> Result<EventStream> {
    if trace.speed.iter().all(Option::is_none) {
        return Err(Error::EmptyRecording);
    }
    let n = trace.len();
    let mut stream = EventStream::default();
    let mut i = 0;
    while i < n {
        if trace.positions[i].is_none() {
            i += 1;
            continue;
        }
        let lo = i;
        while i + 1 < n && trace.positions[i + 1].is_some() && trace.segment[i + 1] == trace.segment[lo] {
            i += 1;
        }
        let hi = i;
        i += 1;

        let runs = block_runs(trace, lo, hi, params.threshold);
        if runs.is_empty() {
            continue;
        }
        stream.valid_duration += trace.timestamps[hi] - trace.timestamps[lo];
        let runs = tidy_runs(runs, params);
        for r in &runs {
            if r.saccadic {
                stream.saccades.push(saccade_from(trace, r, lo, hi, params));
            } else {
                stream.fixations.push(fixation_from(trace, r));
            }
        }
    }
    Ok(stream)
}

/// Full detection pipeline: gap cleaning, smoothing, velocity, segmentation.
pub fn detect_events(rec: &Recording, params: &DetectorParams, gaps: &GapPolicy) -> Result<EventStream> {
    let cleaned = clean_gaps(rec, gaps);
    let trace = velocity_trace(&cleaned, params.window)?;
    segment_events(&trace, params)
}

pub const EVENTS_HEADER: &str = "kind,start_ms,end_ms,duration_ms,amp_deg,peak_vel_dps,cx_px,cy_px";

/// Writes one row per event, ordered by start time.
pub fn write_events<W: Write>(stream: &EventStream, mut out: W) -> Result<()> {
    enum Row<'a> {
        F(&'a Fixation),
        S(&'a Saccade),
    }
    let mut rows: Vec<(f64, Row)> = stream
        .fixations
        .iter()
        .map(|f| (f.start, Row::F(f)))
        .chain(stream.saccades.iter().map(|s| (s.start, Row::S(s))))
        .collect();
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut buf = String::from(EVENTS_HEADER);
    buf.push('\n');
    for (_, row) in rows {
        let line = match row {
            Row::F(f) => format!(
                "fixation,{},{},{},,,{},{}\n",
                f.start, f.end, f.duration, f.centroid_x, f.centroid_y
            ),
            Row::S(s) => format!(
                "saccade,{},{},{},{},{},,\n",
                s.start, s.end, s.duration, s.amplitude, s.peak_velocity
            ),
        };
        buf.push_str(&line);
    }
    out.write_all(buf.as_bytes())?;
    Ok(())
}
