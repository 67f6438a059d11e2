//! Per-participant eye-movement features.
//!
//! Every participant is described by the same 35 scalars, in the order of
//! [`FEATURE_NAMES`]. Series that are empty for a participant (for example
//! no saccades, or no pupil channel) yield zeros with the corresponding
//! mask entry cleared, so downstream models always see a dense matrix.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::events::EventStream;
use crate::ingest::{ExpertiseClass, Recording};

pub const FEATURE_COUNT: usize = 35;

/// Column order of every feature vector and matrix.
pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "sacc_peak_vel_mean",
    "sacc_peak_vel_min",
    "sacc_peak_vel_max",
    "sacc_peak_vel_std",
    "sacc_amp_mean",
    "sacc_amp_min",
    "sacc_amp_max",
    "sacc_amp_std",
    "sacc_amp_total",
    "sacc_dur_mean",
    "sacc_dur_min",
    "sacc_dur_max",
    "sacc_dur_std",
    "fix_dur_mean",
    "fix_dur_min",
    "fix_dur_max",
    "fix_dur_std",
    "fix_freq",
    "sacc_freq",
    "pupil_mean",
    "pupil_min",
    "pupil_max",
    "pupil_std",
    "gyro_x_mean",
    "gyro_x_min",
    "gyro_x_max",
    "gyro_x_std",
    "gyro_y_mean",
    "gyro_y_min",
    "gyro_y_max",
    "gyro_y_std",
    "gyro_z_mean",
    "gyro_z_min",
    "gyro_z_max",
    "gyro_z_std",
];

/// The four features that dominated importance in the original cohort.
pub const TOP_FOUR: [&str; 4] = [
    "sacc_peak_vel_std",
    "sacc_amp_min",
    "sacc_amp_total",
    "gyro_z_min",
];

pub fn feature_index(name: &str) -> Option<usize> {
    FEATURE_NAMES.iter().position(|&n| n == name)
}

/// Features that are physically non-negative (amplitudes, durations,
/// frequencies, pupil size, velocity magnitudes and spreads).
pub fn is_non_negative(index: usize) -> bool {
    !FEATURE_NAMES[index].starts_with("gyro_") || FEATURE_NAMES[index].ends_with("_std")
}

/// Mean, extrema and sample standard deviation of a series.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StatQuad {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub std: f64,
}

/// Summarises `values`; the flag is false for an empty series.
pub fn summarize(values: &[f64]) -> (StatQuad, bool) {
    if values.is_empty() {
        return (StatQuad::default(), false);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let std = if values.len() > 1 {
        let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
        (ss / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    // guard against rounding pushing the mean outside [min, max]
    let mean = mean.clamp(min, max);
    (StatQuad { mean, min, max, std }, true)
}

/// Which per-saccade velocity feeds the velocity statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VelocityMeasure {
    #[default]
    Peak,
    Mean,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: [f64; FEATURE_COUNT],
    pub mask: [bool; FEATURE_COUNT],
}

impl FeatureVector {
    pub fn get(&self, name: &str) -> Option<f64> {
        feature_index(name).map(|i| self.values[i])
    }

    pub fn computable(&self, name: &str) -> Option<bool> {
        feature_index(name).map(|i| self.mask[i])
    }
}

struct Builder {
    values: Vec<f64>,
    mask: Vec<bool>,
}

impl Builder {
    fn quad(&mut self, series: &[f64]) {
        let (q, ok) = summarize(series);
        self.values.extend([q.mean, q.min, q.max, q.std]);
        self.mask.extend([ok; 4]);
    }

    fn scalar(&mut self, v: f64, ok: bool) {
        self.values.push(v);
        self.mask.push(ok);
    }
}

/// Computes the 35 features of one participant.
pub fn extract_features(
    events: &EventStream,
    rec: &Recording,
    velocity: VelocityMeasure,
) -> Result<FeatureVector> {
    if rec.is_empty() || events.valid_duration <= 0.0 {
        return Err(Error::EmptyRecording);
    }
    let saccades = &events.saccades;
    let velocities: Vec<f64> = saccades
        .iter()
        .map(|s| match velocity {
            VelocityMeasure::Peak => s.peak_velocity,
            VelocityMeasure::Mean => s.mean_velocity(),
        })
        .collect();
    let amplitudes: Vec<f64> = saccades.iter().map(|s| s.amplitude).collect();
    let sacc_durations: Vec<f64> = saccades.iter().map(|s| s.duration).collect();
    let fix_durations: Vec<f64> = events.fixations.iter().map(|f| f.duration).collect();
    let seconds = events.valid_duration / 1000.0;

    let valid = || rec.samples.iter().filter(|s| s.valid);
    let pupil: Vec<f64> = valid().filter_map(|s| s.pupil()).collect();
    let gx: Vec<f64> = valid().filter_map(|s| s.gyro_x).collect();
    let gy: Vec<f64> = valid().filter_map(|s| s.gyro_y).collect();
    let gz: Vec<f64> = valid().filter_map(|s| s.gyro_z).collect();

    let mut b = Builder {
        values: Vec::with_capacity(FEATURE_COUNT),
        mask: Vec::with_capacity(FEATURE_COUNT),
    };
    b.quad(&velocities);
    b.quad(&amplitudes);
    b.scalar(amplitudes.iter().sum(), !amplitudes.is_empty());
    b.quad(&sacc_durations);
    b.quad(&fix_durations);
    b.scalar(fix_durations.len() as f64 / seconds, true);
    b.scalar(saccades.len() as f64 / seconds, true);
    b.quad(&pupil);
    b.quad(&gx);
    b.quad(&gy);
    b.quad(&gz);

    Ok(FeatureVector {
        values: b.values.try_into().expect("35 features"),
        mask: b.mask.try_into().expect("35 features"),
    })
}

/// Participants by features, with named columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub columns: Vec<String>,
    pub ids: Vec<String>,
    pub labels: Vec<Option<ExpertiseClass>>,
    pub rows: Vec<Vec<f64>>,
    pub masks: Vec<Vec<bool>>,
}

impl FeatureMatrix {
    /// Empty matrix with the full 35-feature schema.
    pub fn with_full_schema() -> Self {
        FeatureMatrix {
            columns: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
            ids: Vec::new(),
            labels: Vec::new(),
            rows: Vec::new(),
            masks: Vec::new(),
        }
    }

    pub fn push(&mut self, id: String, label: Option<ExpertiseClass>, v: &FeatureVector) -> Result<()> {
        if self.columns.len() != FEATURE_COUNT {
            return Err(Error::SchemaMismatch(format!(
                "matrix has {} columns, feature vectors have {FEATURE_COUNT}",
                self.columns.len()
            )));
        }
        self.ids.push(id);
        self.labels.push(label);
        self.rows.push(v.values.to_vec());
        self.masks.push(v.mask.to_vec());
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Resolves column names against this matrix's schema.
    pub fn resolve(&self, names: &[&str]) -> Result<Vec<usize>> {
        names
            .iter()
            .map(|n| {
                self.column_index(n)
                    .ok_or_else(|| Error::SchemaMismatch(format!("unknown feature `{n}`")))
            })
            .collect()
    }

    /// Keeps only `columns`, in the given order.
    pub fn select(&self, columns: &[usize]) -> FeatureMatrix {
        let pick = |row: &Vec<f64>| columns.iter().map(|&c| row[c]).collect();
        let pick_mask = |row: &Vec<bool>| columns.iter().map(|&c| row[c]).collect();
        FeatureMatrix {
            columns: columns.iter().map(|&c| self.columns[c].clone()).collect(),
            ids: self.ids.clone(),
            labels: self.labels.clone(),
            rows: self.rows.iter().map(pick).collect(),
            masks: self.masks.iter().map(pick_mask).collect(),
        }
    }

    /// Keeps only the given rows.
    pub fn subset_rows(&self, rows: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            columns: self.columns.clone(),
            ids: rows.iter().map(|&r| self.ids[r].clone()).collect(),
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
            rows: rows.iter().map(|&r| self.rows[r].clone()).collect(),
            masks: rows.iter().map(|&r| self.masks[r].clone()).collect(),
        }
    }

    /// Row labels, failing if any participant is unlabelled.
    pub fn require_labels(&self) -> Result<Vec<ExpertiseClass>> {
        self.labels
            .iter()
            .zip(&self.ids)
            .map(|(l, id)| l.ok_or_else(|| Error::Parse(format!("participant `{id}` has no label"))))
            .collect()
    }

    /// Writes `participant_id,label,<features>,<mask_features>`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["participant_id".to_string(), "label".to_string()];
        header.extend(self.columns.iter().cloned());
        header.extend(self.columns.iter().map(|c| format!("mask_{c}")));
        w.write_record(&header)?;
        for r in 0..self.n_rows() {
            let mut rec = vec![
                self.ids[r].clone(),
                self.labels[r].map(|l| l.name().to_string()).unwrap_or_default(),
            ];
            rec.extend(self.rows[r].iter().map(|v| v.to_string()));
            rec.extend(self.masks[r].iter().map(|&m| if m { "1" } else { "0" }.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<FeatureMatrix> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let header = rdr.headers()?.clone();
        if header.len() < 2 || &header[0] != "participant_id" || &header[1] != "label" {
            return Err(Error::SchemaMismatch(
                "feature file must start with participant_id,label".into(),
            ));
        }
        let rest: Vec<&str> = header.iter().skip(2).collect();
        let n = rest.len() / 2;
        if rest.len() % 2 != 0 || (0..n).any(|i| rest[n + i] != format!("mask_{}", rest[i])) {
            return Err(Error::SchemaMismatch("feature and mask columns do not pair up".into()));
        }
        let mut m = FeatureMatrix {
            columns: rest[..n].iter().map(|s| s.to_string()).collect(),
            ids: Vec::new(),
            labels: Vec::new(),
            rows: Vec::new(),
            masks: Vec::new(),
        };
        for (line, record) in rdr.records().enumerate() {
            let record = record?;
            if record.len() != 2 + 2 * n {
                return Err(Error::Parse(format!("row {} has {} fields", line + 1, record.len())));
            }
            m.ids.push(record[0].to_string());
            m.labels.push(match &record[1] {
                "" => None,
                s => Some(s.parse()?),
            });
            let row = (0..n)
                .map(|i| {
                    record[2 + i].parse::<f64>().map_err(|_| {
                        Error::Parse(format!("row {}: bad value `{}`", line + 1, &record[2 + i]))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            m.rows.push(row);
            m.masks.push((0..n).map(|i| &record[2 + n + i] == "1").collect());
        }
        Ok(m)
    }
}

/// One row per participant, in cohort order.
pub fn build_feature_matrix(
    cohort: &[(EventStream, Recording)],
    velocity: VelocityMeasure,
) -> Result<FeatureMatrix> {
    if cohort.is_empty() {
        return Err(Error::EmptyRecording);
    }
    let mut m = FeatureMatrix::with_full_schema();
    for (events, rec) in cohort {
        let v = extract_features(events, rec, velocity)?;
        m.push(rec.participant_id.clone(), rec.label, &v)?;
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::{Fixation, Saccade};
    use crate::ingest::{GazeSample, RecordingMeta};
    use proptest::prelude::*;

    fn saccade(start: f64, amplitude: f64, peak: f64) -> Saccade {
        Saccade {
            start,
            end: start + 40.0,
            amplitude,
            peak_velocity: peak,
            duration: 40.0,
        }
    }

    fn fixation(start: f64, duration: f64) -> Fixation {
        Fixation {
            start,
            end: start + duration,
            centroid_x: 0.0,
            centroid_y: 0.0,
            duration,
        }
    }

    fn flat_recording() -> Recording {
        let samples = (0..10).map(|i| GazeSample::at(i as f64 * 10.0, 0.0, 0.0)).collect();
        Recording::new(RecordingMeta::default(), samples).unwrap()
    }

    #[test]
    fn summarize_cases() {
        assert_eq!(
            summarize(&[5.0]),
            (StatQuad { mean: 5.0, min: 5.0, max: 5.0, std: 0.0 }, true)
        );
        let (q, ok) = summarize(&[2.0, 4.0]);
        assert!(ok);
        assert_eq!((q.mean, q.min, q.max), (3.0, 2.0, 4.0));
        assert!((q.std - 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(summarize(&[]), (StatQuad::default(), false));
    }

    #[test]
    fn amplitude_statistics() {
        let ev = EventStream {
            saccades: vec![saccade(0.0, 2.0, 100.0), saccade(500.0, 4.0, 200.0)],
            fixations: vec![fixation(100.0, 300.0)],
            valid_duration: 1000.0,
        };
        let f = extract_features(&ev, &flat_recording(), VelocityMeasure::Peak).unwrap();
        assert_eq!(f.get("sacc_amp_total"), Some(6.0));
        assert_eq!(f.get("sacc_amp_min"), Some(2.0));
        assert_eq!(f.get("sacc_amp_max"), Some(4.0));
        assert_eq!(f.get("sacc_amp_mean"), Some(3.0));
        assert!((f.get("sacc_amp_std").unwrap() - 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(f.get("sacc_freq"), Some(2.0));
    }

    #[test]
    fn fixation_frequency() {
        let ev = EventStream {
            fixations: (0..5).map(|k| fixation(k as f64 * 2000.0, 250.0)).collect(),
            saccades: vec![],
            valid_duration: 10_000.0,
        };
        let f = extract_features(&ev, &flat_recording(), VelocityMeasure::Peak).unwrap();
        assert_eq!(f.get("fix_freq"), Some(0.5));
    }

    #[test]
    fn no_saccades_masks_saccade_features() {
        let ev = EventStream {
            fixations: vec![fixation(0.0, 90.0)],
            saccades: vec![],
            valid_duration: 90.0,
        };
        let f = extract_features(&ev, &flat_recording(), VelocityMeasure::Peak).unwrap();
        for name in &FEATURE_NAMES[..13] {
            assert_eq!(f.get(name), Some(0.0), "{name}");
            assert_eq!(f.computable(name), Some(false), "{name}");
        }
        assert_eq!(f.computable("fix_dur_mean"), Some(true));
        assert_eq!(f.get("fix_dur_mean"), Some(90.0));
        assert_eq!(f.computable("sacc_freq"), Some(true));
        assert_eq!(f.computable("pupil_mean"), Some(false));
    }

    #[test]
    fn mean_velocity_mode() {
        let ev = EventStream {
            saccades: vec![saccade(0.0, 2.0, 100.0)],
            fixations: vec![],
            valid_duration: 1000.0,
        };
        let f = extract_features(&ev, &flat_recording(), VelocityMeasure::Mean).unwrap();
        assert_eq!(f.get("sacc_peak_vel_mean"), Some(50.0));
    }

    #[test]
    fn pupil_and_gyro_use_valid_samples() {
        let mut samples: Vec<_> = (0..4).map(|i| GazeSample::at(i as f64 * 10.0, 0.0, 0.0)).collect();
        for (i, s) in samples.iter_mut().enumerate() {
            s.pupil_left = Some(3.0 + i as f64);
            s.gyro_z = Some(-10.0 * i as f64);
        }
        samples[3].valid = false;
        let rec = Recording::new(RecordingMeta::default(), samples).unwrap();
        let ev = EventStream { valid_duration: 30.0, ..Default::default() };
        let f = extract_features(&ev, &rec, VelocityMeasure::Peak).unwrap();
        assert_eq!(f.get("pupil_max"), Some(5.0));
        assert_eq!(f.get("gyro_z_min"), Some(-20.0));
        assert_eq!(f.get("gyro_z_mean"), Some(-10.0));
    }

    #[test]
    fn empty_events_are_rejected() {
        let ev = EventStream::default();
        assert!(matches!(
            extract_features(&ev, &flat_recording(), VelocityMeasure::Peak),
            Err(Error::EmptyRecording)
        ));
    }

    #[test]
    fn top_four_are_in_schema() {
        for name in TOP_FOUR {
            assert!(feature_index(name).is_some(), "{name}");
        }
        assert_eq!(FEATURE_NAMES.iter().collect::<std::collections::BTreeSet<_>>().len(), 35);
    }

    #[test]
    fn matrix_shapes() {
        let ev = EventStream {
            fixations: vec![fixation(0.0, 90.0)],
            saccades: vec![saccade(100.0, 1.0, 50.0)],
            valid_duration: 200.0,
        };
        let one = vec![(ev.clone(), flat_recording())];
        let m = build_feature_matrix(&one, VelocityMeasure::Peak).unwrap();
        assert_eq!((m.n_rows(), m.n_cols()), (1, 35));
        let fifteen: Vec<_> = (0..15).map(|_| (ev.clone(), flat_recording())).collect();
        let m = build_feature_matrix(&fifteen, VelocityMeasure::Peak).unwrap();
        assert_eq!((m.n_rows(), m.n_cols()), (15, 35));
        assert!(build_feature_matrix(&[], VelocityMeasure::Peak).is_err());
    }

    #[test]
    fn csv_round_trip_and_select() {
        let ev = EventStream {
            fixations: vec![fixation(0.0, 90.0)],
            saccades: vec![saccade(100.0, 1.25, 50.0)],
            valid_duration: 200.0,
        };
        let mut rec = flat_recording();
        rec.participant_id = "E01".into();
        rec.label = Some(ExpertiseClass::Expert);
        let m = build_feature_matrix(&[(ev, rec)], VelocityMeasure::Peak).unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let header = String::from_utf8(buf.clone()).unwrap();
        assert!(header.starts_with("participant_id,label,sacc_peak_vel_mean,"));
        assert_eq!(FeatureMatrix::read_csv(buf.as_slice()).unwrap(), m);

        let cols = m.resolve(&TOP_FOUR).unwrap();
        let s = m.select(&cols);
        assert_eq!(s.columns, TOP_FOUR.to_vec());
        assert_eq!(s.rows[0][2], 1.25);
    }

    proptest! {
        #[test]
        fn stat_quads_are_ordered(values in prop::collection::vec(-1e4f64..1e4, 0..40)) {
            let (q, ok) = summarize(&values);
            prop_assert_eq!(ok, !values.is_empty());
            prop_assert!(q.min <= q.mean && q.mean <= q.max);
            prop_assert!(q.std >= 0.0);
        }

        #[test]
        fn total_amplitude_is_sum(amps in prop::collection::vec(0.0f64..30.0, 1..50)) {
            let ev = EventStream {
                saccades: amps.iter().enumerate().map(|(i, &a)| saccade(i as f64 * 100.0, a, 100.0)).collect(),
                fixations: vec![],
                valid_duration: 1e5,
            };
            let f = extract_features(&ev, &flat_recording(), VelocityMeasure::Peak).unwrap();
            let sum: f64 = amps.iter().sum();
            prop_assert!((f.get("sacc_amp_total").unwrap() - sum).abs() <= 1e-9 * sum.max(1.0));
        }
    }
}
