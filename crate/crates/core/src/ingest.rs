//! Gaze recording ingestion: delimited-text parsing, the canonical writer,
//! and gap cleaning.
//!
//! The canonical file layout is
//!
//! ```text
//! t_ms,gx_px,gy_px,pupil_l_mm,pupil_r_mm,gyro_x_dps,gyro_y_dps,gyro_z_dps,valid
//! ```
//!
//! with empty fields for missing numerics and `valid` in `{0,1}`. Other
//! vendor exports are read through a [`ColumnMapping`].

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CANONICAL_HEADER: [&str; 9] = [
    "t_ms",
    "gx_px",
    "gy_px",
    "pupil_l_mm",
    "pupil_r_mm",
    "gyro_x_dps",
    "gyro_y_dps",
    "gyro_z_dps",
    "valid",
];

pub const DEFAULT_RATE_HZ: f64 = 100.0;
pub const DEFAULT_PX_PER_DEGREE: f64 = 40.0;

/// Expertise group of a participant.
///
/// The declaration order is used for display and tie-breaking only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExpertiseClass {
    Expert,
    Intermediate,
    Novice,
}

impl ExpertiseClass {
    pub const ALL: [ExpertiseClass; 3] = [
        ExpertiseClass::Expert,
        ExpertiseClass::Intermediate,
        ExpertiseClass::Novice,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            ExpertiseClass::Expert => "expert",
            ExpertiseClass::Intermediate => "intermediate",
            ExpertiseClass::Novice => "novice",
        }
    }

    /// Single-letter code used in generated participant ids.
    pub fn code(self) -> char {
        match self {
            ExpertiseClass::Expert => 'E',
            ExpertiseClass::Intermediate => 'I',
            ExpertiseClass::Novice => 'N',
        }
    }
}

impl fmt::Display for ExpertiseClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExpertiseClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "expert" | "e" | "fellow" => Ok(ExpertiseClass::Expert),
            "intermediate" | "i" | "r4" => Ok(ExpertiseClass::Intermediate),
            "novice" | "n" | "r3" => Ok(ExpertiseClass::Novice),
            other => Err(Error::Parse(format!("unknown expertise class `{other}`"))),
        }
    }
}

/// One row of a gaze recording.
///
/// When `valid` is false the stored gaze coordinates are ignored unless the
/// sample was filled by [`clean_gaps`] (`interpolated`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GazeSample {
    pub timestamp: f64,
    pub gaze_x: f64,
    pub gaze_y: f64,
    pub pupil_left: Option<f64>,
    pub pupil_right: Option<f64>,
    pub gyro_x: Option<f64>,
    pub gyro_y: Option<f64>,
    pub gyro_z: Option<f64>,
    pub valid: bool,
    pub interpolated: bool,
}

impl GazeSample {
    /// A valid sample with only a gaze position.
    pub fn at(timestamp: f64, x: f64, y: f64) -> Self {
        GazeSample {
            timestamp,
            gaze_x: x,
            gaze_y: y,
            pupil_left: None,
            pupil_right: None,
            gyro_x: None,
            gyro_y: None,
            gyro_z: None,
            valid: true,
            interpolated: false,
        }
    }

    /// An invalid sample at `timestamp`.
    pub fn missing(timestamp: f64) -> Self {
        GazeSample {
            gaze_x: f64::NAN,
            gaze_y: f64::NAN,
            valid: false,
            ..GazeSample::at(timestamp, 0.0, 0.0)
        }
    }

    /// Gaze position if the sample carries a usable one.
    pub fn position(&self) -> Option<(f64, f64)> {
        let usable = self.valid || self.interpolated;
        (usable && self.gaze_x.is_finite() && self.gaze_y.is_finite())
            .then_some((self.gaze_x, self.gaze_y))
    }

    /// Mean of both eyes when both are present, otherwise whichever is.
    pub fn pupil(&self) -> Option<f64> {
        match (self.pupil_left, self.pupil_right) {
            (Some(l), Some(r)) => Some(0.5 * (l + r)),
            (Some(v), None) | (None, Some(v)) => Some(v),
            (None, None) => None,
        }
    }
}

/// One participant session.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub participant_id: String,
    pub label: Option<ExpertiseClass>,
    pub samples: Vec<GazeSample>,
    pub nominal_rate: f64,
    pub px_per_degree: f64,
    /// Sample indices at which a new hard segment starts. Event detection
    /// never bridges the gap just before such an index.
    pub boundaries: Vec<usize>,
}

impl Recording {
    /// Builds a recording, checking non-emptiness and strictly increasing
    /// timestamps.
    pub fn new(meta: RecordingMeta, samples: Vec<GazeSample>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyRecording);
        }
        for (row, w) in samples.windows(2).enumerate() {
            if w[1].timestamp <= w[0].timestamp {
                return Err(Error::NonMonotoneTimestamps {
                    row: row + 1,
                    previous: w[0].timestamp,
                    current: w[1].timestamp,
                });
            }
        }
        if !(meta.nominal_rate > 0.0) || !(meta.px_per_degree > 0.0) {
            return Err(Error::Config(
                "sample rate and px_per_degree must be positive".into(),
            ));
        }
        Ok(Recording {
            participant_id: meta.participant_id,
            label: meta.label,
            samples,
            nominal_rate: meta.nominal_rate,
            px_per_degree: meta.px_per_degree,
            boundaries: Vec::new(),
        })
    }

    /// Nominal spacing between samples in milliseconds.
    pub fn sample_spacing(&self) -> f64 {
        1000.0 / self.nominal_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn timestamps(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.timestamp).collect()
    }

    pub fn meta(&self) -> RecordingMeta {
        RecordingMeta {
            participant_id: self.participant_id.clone(),
            label: self.label,
            nominal_rate: self.nominal_rate,
            px_per_degree: self.px_per_degree,
        }
    }
}

/// Session metadata that does not live in the sample file itself.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordingMeta {
    pub participant_id: String,
    pub label: Option<ExpertiseClass>,
    pub nominal_rate: f64,
    pub px_per_degree: f64,
}

impl Default for RecordingMeta {
    fn default() -> Self {
        RecordingMeta {
            participant_id: String::new(),
            label: None,
            nominal_rate: DEFAULT_RATE_HZ,
            px_per_degree: DEFAULT_PX_PER_DEGREE,
        }
    }
}

/// Maps header names onto [`GazeSample`] fields.
///
/// `None` leaves a field unmapped. Mapped names must all appear in the
/// header. `timestamp_scale` converts the file's time unit into
/// milliseconds (e.g. `0.001` for microsecond exports).
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnMapping {
    pub timestamp: String,
    pub gaze_x: String,
    pub gaze_y: String,
    pub pupil_left: Option<String>,
    pub pupil_right: Option<String>,
    pub gyro_x: Option<String>,
    pub gyro_y: Option<String>,
    pub gyro_z: Option<String>,
    pub valid: Option<String>,
    pub timestamp_scale: f64,
}

impl Default for ColumnMapping {
    fn default() -> Self {
        let h = CANONICAL_HEADER;
        ColumnMapping {
            timestamp: h[0].into(),
            gaze_x: h[1].into(),
            gaze_y: h[2].into(),
            pupil_left: Some(h[3].into()),
            pupil_right: Some(h[4].into()),
            gyro_x: Some(h[5].into()),
            gyro_y: Some(h[6].into()),
            gyro_z: Some(h[7].into()),
            valid: Some(h[8].into()),
            timestamp_scale: 1.0,
        }
    }
}

enum Field {
    Missing,
    Value(f64),
    Garbage,
}

fn field(record: &csv::StringRecord, col: Option<usize>) -> Field {
    let Some(raw) = col.and_then(|c| record.get(c)) else {
        return Field::Missing;
    };
    let raw = raw.trim();
    if raw.is_empty() {
        return Field::Missing;
    }
    match raw.parse::<f64>() {
        Ok(v) if v.is_finite() => Field::Value(v),
        _ => Field::Garbage,
    }
}

/// Parses a tab- or comma-separated recording.
///
/// Rows whose timestamp does not parse are dropped. Unparsable numerics in
/// any other mapped column, or a missing gaze coordinate, mark the sample
/// invalid without affecting other rows.
pub fn parse_recording<R: Read>(
    source: R,
    mapping: &ColumnMapping,
    meta: RecordingMeta,
) -> Result<Recording> {
    let mut text = String::new();
    let mut source = source;
    source.read_to_string(&mut text)?;
    let header_line = text.lines().next().unwrap_or("");
    let delimiter = if header_line.contains('\t') { b'\t' } else { b',' };

    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader.headers()?.clone();
    let find = |name: &str| -> Result<usize> {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let find_opt = |name: &Option<String>| -> Result<Option<usize>> {
        name.as_deref().map(find).transpose()
    };

    let c_t = find(&mapping.timestamp)?;
    let c_x = find(&mapping.gaze_x)?;
    let c_y = find(&mapping.gaze_y)?;
    let c_pl = find_opt(&mapping.pupil_left)?;
    let c_pr = find_opt(&mapping.pupil_right)?;
    let c_gx = find_opt(&mapping.gyro_x)?;
    let c_gy = find_opt(&mapping.gyro_y)?;
    let c_gz = find_opt(&mapping.gyro_z)?;
    let c_valid = find_opt(&mapping.valid)?;

    let mut samples = Vec::new();
    let mut rejected = 0usize;
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let timestamp = match field(&record, Some(c_t)) {
            Field::Value(t) if t >= 0.0 => t * mapping.timestamp_scale,
            _ => {
                rejected += 1;
                continue;
            }
        };
        if let Some(prev) = samples.last().map(|s: &GazeSample| s.timestamp) {
            if timestamp <= prev {
                return Err(Error::NonMonotoneTimestamps {
                    row: row + 1,
                    previous: prev,
                    current: timestamp,
                });
            }
        }

        let mut valid = true;
        let mut coord = |col| match field(&record, Some(col)) {
            Field::Value(v) => v,
            _ => {
                valid = false;
                f64::NAN
            }
        };
        let gaze_x = coord(c_x);
        let gaze_y = coord(c_y);
        let mut optional = |col: Option<usize>| match field(&record, col) {
            Field::Value(v) => Some(v),
            Field::Missing => None,
            Field::Garbage => {
                valid = false;
                None
            }
        };
        let pupil_left = optional(c_pl);
        let pupil_right = optional(c_pr);
        let gyro_x = optional(c_gx);
        let gyro_y = optional(c_gy);
        let gyro_z = optional(c_gz);
        if let Some(c) = c_valid {
            let flag = record.get(c).map(str::trim).unwrap_or("");
            let flagged_valid = matches!(flag, "1" | "true" | "TRUE" | "True");
            valid &= flagged_valid;
        }

        samples.push(GazeSample {
            timestamp,
            gaze_x,
            gaze_y,
            pupil_left,
            pupil_right,
            gyro_x,
            gyro_y,
            gyro_z,
            valid,
            interpolated: false,
        });
    }
    if rejected > 0 {
        log::warn!("dropped {rejected} rows with unparsable timestamps");
    }
    Recording::new(meta, samples)
}

fn push_num(out: &mut String, v: Option<f64>) {
    if let Some(v) = v.filter(|v| v.is_finite()) {
        out.push_str(&v.to_string());
    }
}

/// Writes `rec` in the canonical layout. Finite values round-trip exactly
/// through [`parse_recording`] with the default mapping.
pub fn write_recording<W: Write>(rec: &Recording, mut out: W) -> Result<()> {
    let mut buf = CANONICAL_HEADER.join(",");
    buf.push('\n');
    for s in &rec.samples {
        push_num(&mut buf, Some(s.timestamp));
        for v in [
            Some(s.gaze_x),
            Some(s.gaze_y),
            s.pupil_left,
            s.pupil_right,
            s.gyro_x,
            s.gyro_y,
            s.gyro_z,
        ] {
            buf.push(',');
            push_num(&mut buf, v);
        }
        buf.push(',');
        buf.push(if s.valid { '1' } else { '0' });
        buf.push('\n');
    }
    out.write_all(buf.as_bytes())?;
    Ok(())
}

/// Thresholds for [`clean_gaps`], in milliseconds of missing signal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapPolicy {
    pub max_interp_gap: f64,
    pub split_gap: f64,
}

impl Default for GapPolicy {
    fn default() -> Self {
        GapPolicy {
            max_interp_gap: 75.0,
            split_gap: 100.0,
        }
    }
}

/// Fills short runs of missing gaze by linear interpolation and records long
/// ones as hard segment boundaries.
///
/// The missing time between two consecutive usable samples `p < n` is
/// `t[n] - t[p] - spacing`; this also catches dropped rows. Samples flagged
/// valid are never modified and the sample count is preserved.
pub fn clean_gaps(rec: &Recording, policy: &GapPolicy) -> Recording {
    let mut out = rec.clone();
    let spacing = rec.sample_spacing();
    let usable: Vec<usize> = rec
        .samples
        .iter()
        .enumerate()
        .filter_map(|(i, s)| s.position().map(|_| i))
        .collect();

    let mut boundaries = rec.boundaries.clone();
    for pair in usable.windows(2) {
        let (p, n) = (pair[0], pair[1]);
        let (sp, sn) = (rec.samples[p], rec.samples[n]);
        let gap = sn.timestamp - sp.timestamp - spacing;
        if gap >= policy.split_gap {
            boundaries.push(n);
        } else if n > p + 1 && gap < policy.max_interp_gap {
            let span = sn.timestamp - sp.timestamp;
            for s in &mut out.samples[p + 1..n] {
                let f = (s.timestamp - sp.timestamp) / span;
                s.gaze_x = sp.gaze_x + (sn.gaze_x - sp.gaze_x) * f;
                s.gaze_y = sp.gaze_y + (sn.gaze_y - sp.gaze_y) * f;
                s.interpolated = true;
            }
        }
    }
    boundaries.sort_unstable();
    boundaries.dedup();
    out.boundaries = boundaries;
    out
}
