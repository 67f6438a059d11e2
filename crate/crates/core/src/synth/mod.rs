//! Synthetic stand-in cohorts.
//!
//! Two levels: feature vectors sampled around class profiles (fast, for
//! harness tests) and full gaze recordings with scripted ground-truth events
//! (for detector and end-to-end tests).

mod profile;
mod signal;

pub use profile::{
    builtin_profiles, generate_feature_cohort, identical_profiles, participant_id, ClassProfile, DEFAULT_DISPERSION,
    NEUTRAL_MEANS, TABLE_TWO,
};
pub use signal::{
    generate_signal_cohort, generate_signal_recording, main_sequence_peak, pulse_duration_ms, read_cohort_manifest,
    write_cohort_manifest, write_ground_truth, CohortEntry, GroundTruth, SynthConfig, TruthEvent, GROUND_TRUTH_HEADER,
};
