//! Eye-movement expertise classification: gaze-log ingestion, velocity
//! threshold event detection, feature extraction, SVM training and a
//! repeated leave-one-per-group-out evaluation harness, plus a synthetic
//! cohort generator.
//!
//! ```no_run
//! use gazemetric::{detect_events, extract_features, parse_recording};
//! use gazemetric::{ColumnMapping, DetectorParams, GapPolicy, RecordingMeta, VelocityMeasure};
//!
//! let file = std::fs::File::open("rec.csv").unwrap();
//! let rec = parse_recording(file, &ColumnMapping::default(), RecordingMeta::default()).unwrap();
//! let events = detect_events(&rec, &DetectorParams::default(), &GapPolicy::default()).unwrap();
//! let features = extract_features(&events, &rec, VelocityMeasure::Peak).unwrap();
//! println!("{:?}", features.get("sacc_amp_total"));
//! ```

pub mod config;
pub mod error;
pub mod eval;
pub mod events;
pub mod features;
pub mod ingest;
pub mod rng;
pub mod svm;
pub mod synth;

pub use config::PipelineConfig;
pub use error::{Error, ErrorKind, Result};
pub use eval::{
    compute_metrics, reduced_model_workflow, run_repeated_cv, AggregateReport, ConfusionMatrix, CvConfig,
    FeatureSelection, FrequencyTable, MetricSet, RunResult,
};
pub use events::{detect_events, DetectorParams, EventStream, Fixation, Saccade};
pub use features::{
    extract_features, FeatureMatrix, FeatureVector, StatQuad, VelocityMeasure, FEATURE_COUNT, FEATURE_NAMES,
    TOP_FOUR,
};
pub use ingest::{
    clean_gaps, parse_recording, ColumnMapping, ExpertiseClass, GapPolicy, GazeSample, Recording, RecordingMeta,
};
pub use svm::{Kernel, MulticlassModel, SvmConfig};
