use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{feature_index, is_non_negative, FeatureMatrix, FeatureVector, FEATURE_COUNT};
use crate::ingest::ExpertiseClass;
use crate::rng::stream;

/// Relative dispersion used by [`builtin_profiles`].
pub const DEFAULT_DISPERSION: f64 = 0.10;

/// Class-independent feature means, in [`FEATURE_NAMES`] order.
pub const NEUTRAL_MEANS: [f64; FEATURE_COUNT] = [
    250.0, 60.0, 550.0, 110.0, // saccade peak velocity, deg/s
    4.0, 0.6, 18.0, 3.0, 1200.0, // saccade amplitude, deg
    45.0, 20.0, 110.0, 18.0, // saccade duration, ms
    280.0, 80.0, 1400.0, 190.0, // fixation duration, ms
    2.6, 2.5, // fixation / saccade frequency, 1/s
    3.8, 2.6, 5.4, 0.45, // pupil, mm
    0.5, -45.0, 48.0, 12.0, // gyro x, deg/s
    -0.3, -38.0, 40.0, 10.0, // gyro y
    0.2, -72.0, 70.0, 16.0, // gyro z
];

/// `(sacc_peak_vel_std, sacc_amp_min, sacc_amp_total, gyro_z_min)` per class.
pub const TABLE_TWO: [(ExpertiseClass, [f64; 4]); 3] = [
    (ExpertiseClass::Expert, [93.26, 0.86, 481.32, -72.90]),
    (ExpertiseClass::Intermediate, [121.72, 0.40, 1120.74, -66.47]),
    (ExpertiseClass::Novice, [117.45, 0.64, 1956.21, -80.12]),
];

/// Target means and relative dispersions of one class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassProfile {
    pub class: ExpertiseClass,
    pub mean: Vec<f64>,
    pub dispersion: Vec<f64>,
}

impl ClassProfile {
    /// Neutral means with uniform dispersion `d`.
    pub fn neutral(class: ExpertiseClass, d: f64) -> Self {
        ClassProfile {
            class,
            mean: NEUTRAL_MEANS.to_vec(),
            dispersion: vec![d; FEATURE_COUNT],
        }
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        feature_index(name).map(|i| self.mean[i])
    }

    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        let i = feature_index(name).ok_or_else(|| Error::Config(format!("unknown feature `{name}`")))?;
        self.mean[i] = value;
        Ok(())
    }

    pub fn with_dispersion(mut self, d: f64) -> Self {
        self.dispersion = vec![d; FEATURE_COUNT];
        self
    }

    /// Draws one participant: `mean * (1 + d * z)` per feature, clamped at
    /// zero for non-negative features.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> FeatureVector {
        let mut values = [0.0; FEATURE_COUNT];
        for (j, v) in values.iter_mut().enumerate() {
            let z: f64 = rng.sample(StandardNormal);
            let x = self.mean[j] * (1.0 + self.dispersion[j] * z);
            *v = if is_non_negative(j) { x.max(0.0) } else { x };
        }
        FeatureVector {
            values,
            mask: [true; FEATURE_COUNT],
        }
    }

    fn validate(&self) -> Result<()> {
        if self.mean.len() != FEATURE_COUNT || self.dispersion.len() != FEATURE_COUNT {
            return Err(Error::Config(format!("profile for {} must have {FEATURE_COUNT} entries", self.class)));
        }
        if self.dispersion.iter().any(|&d| !(d >= 0.0)) {
            return Err(Error::Config("dispersions must be non-negative".into()));
        }
        Ok(())
    }
}

/// Expert, intermediate and novice profiles: neutral means overridden by
/// the four published class means, dispersion [`DEFAULT_DISPERSION`].
pub fn builtin_profiles() -> [ClassProfile; 3] {
    TABLE_TWO.map(|(class, values)| {
        let mut p = ClassProfile::neutral(class, DEFAULT_DISPERSION);
        for (name, v) in crate::features::TOP_FOUR.iter().zip(values) {
            p.set(name, v).expect("known feature");
        }
        p
    })
}

/// Three classes sharing one profile, for chance-level experiments.
pub fn identical_profiles(base: &ClassProfile) -> [ClassProfile; 3] {
    ExpertiseClass::ALL.map(|class| ClassProfile { class, ..base.clone() })
}

/// Participant id such as `E03`.
pub fn participant_id(class: ExpertiseClass, i: usize) -> String {
    format!("{}{:02}", class.code(), i + 1)
}

/// Samples `per_class` labelled participants per profile.
///
/// Participant `k` (global index in class order) draws from the stream
/// `(seed, "feature-participant", k)`.
pub fn generate_feature_cohort(profiles: &[ClassProfile; 3], per_class: usize, seed: u64) -> Result<FeatureMatrix> {
    if per_class < 2 {
        return Err(Error::Config("at least 2 participants per class required".into()));
    }
    let mut m = FeatureMatrix::with_full_schema();
    for (c, class) in ExpertiseClass::ALL.into_iter().enumerate() {
        let profile = profiles
            .iter()
            .find(|p| p.class == class)
            .ok_or_else(|| Error::ClassMissing(format!("no profile for {class}")))?;
        profile.validate()?;
        for i in 0..per_class {
            let mut rng = stream(seed, "feature-participant", (c * per_class + i) as u64);
            m.push(participant_id(class, i), Some(class), &profile.sample(&mut rng))?;
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FEATURE_NAMES;
    use ExpertiseClass::*;

    fn mean_of(m: &FeatureMatrix, class: ExpertiseClass, j: usize) -> f64 {
        let v: Vec<f64> = (0..m.n_rows()).filter(|&i| m.labels[i] == Some(class)).map(|i| m.rows[i][j]).collect();
        v.iter().sum::<f64>() / v.len() as f64
    }

    #[test]
    fn builtin_values() {
        let p = builtin_profiles();
        assert_eq!(p[0].get("sacc_amp_total"), Some(481.32));
        assert_eq!(p[2].get("sacc_amp_total"), Some(1956.21));
        assert_eq!(p[1].get("sacc_peak_vel_std"), Some(121.72));
        assert_eq!(p[0].get("gyro_z_min"), Some(-72.90));
        assert_eq!(p[2].get("sacc_amp_min"), Some(0.64));
        assert_eq!([p[0].class, p[1].class, p[2].class], [Expert, Intermediate, Novice]);
        for j in 0..FEATURE_COUNT {
            if !TOP_FOUR_IDX.contains(&j) {
                assert_eq!(p[0].mean[j], p[1].mean[j]);
                assert_eq!(p[1].mean[j], p[2].mean[j]);
            }
        }
    }

    const TOP_FOUR_IDX: [usize; 4] = [3, 5, 8, 32];

    #[test]
    fn zero_dispersion_collapses() {
        let profiles = builtin_profiles().map(|p| p.with_dispersion(0.0));
        let m = generate_feature_cohort(&profiles, 3, 1).unwrap();
        for i in 0..m.n_rows() {
            let c = m.labels[i].unwrap();
            assert_eq!(m.rows[i], profiles[c.index()].mean);
        }
    }

    #[test]
    fn sample_means_near_profile() {
        let profiles = builtin_profiles();
        let m = generate_feature_cohort(&profiles, 5, 7).unwrap();
        for class in ExpertiseClass::ALL {
            for j in 0..FEATURE_COUNT {
                let target = profiles[class.index()].mean[j];
                let got = mean_of(&m, class, j);
                assert!((got - target).abs() <= 0.15 * target.abs(), "{class} {}: {got} vs {target}", FEATURE_NAMES[j]);
            }
        }
    }

    #[test]
    fn deterministic_and_clamped() {
        let mut profiles = builtin_profiles().map(|p| p.with_dispersion(3.0));
        profiles[0].mean[0] = 1.0;
        let a = generate_feature_cohort(&profiles, 4, 3).unwrap();
        assert_eq!(a, generate_feature_cohort(&profiles, 4, 3).unwrap());
        for row in &a.rows {
            for (j, v) in row.iter().enumerate() {
                if is_non_negative(j) {
                    assert!(*v >= 0.0);
                }
            }
        }
    }

    #[test]
    fn rejects_small_cohorts_and_bad_profiles() {
        assert!(generate_feature_cohort(&builtin_profiles(), 1, 0).is_err());
        let mut p = builtin_profiles();
        p[1].dispersion[0] = -1.0;
        assert!(matches!(generate_feature_cohort(&p, 2, 0), Err(Error::Config(_))));
    }

    #[test]
    fn ids_are_zero_padded() {
        assert_eq!(participant_id(Novice, 2), "N03");
    }
}
