//! Shared fixtures for benchmarks.

use gazemetric::rng::stream;
use gazemetric::synth::{builtin_profiles, generate_feature_cohort, generate_signal_recording, SynthConfig};
use gazemetric::{FeatureMatrix, Recording};

/// One 60 s novice recording at 100 Hz.
pub fn recording(seed: u64) -> Recording {
    let profile = &builtin_profiles()[2];
    let cfg = SynthConfig { seed, ..Default::default() };
    generate_signal_recording(profile, &cfg, &mut stream(seed, "bench", 0))
        .expect("default config is feasible")
        .0
}

/// A 15-participant feature-level cohort.
pub fn cohort(seed: u64) -> FeatureMatrix {
    generate_feature_cohort(&builtin_profiles(), 5, seed).expect("builtin profiles are valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_have_expected_shape() {
        assert_eq!(recording(1).len(), 6000);
        assert_eq!(cohort(1).n_rows(), 15);
    }
}
