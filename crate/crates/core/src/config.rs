//! Layered pipeline settings with a flat `key = value` text format.
//!
//! ```text
//! # comments start with '#'
//! detector.threshold = 0.7
//! svm.kernel = rbf
//! cv.features = top4
//! ```
//!
//! Keys are listed by [`PipelineConfig::keys`]. Layers are applied in order
//! defaults, file, command-line overrides; later layers win.

use std::fmt::Display;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{CvConfig, FeatureSelection};
use crate::events::DetectorParams;
use crate::features::{VelocityMeasure, TOP_FOUR};
use crate::ingest::GapPolicy;
use crate::svm::{Kernel, SvmConfig};
use crate::synth::{SynthConfig, DEFAULT_DISPERSION};

/// Environment variable naming a config file.
pub const CONFIG_ENV: &str = "GAZEMETRIC_CONFIG";

/// How the CV harness chooses its columns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureChoice {
    All,
    /// Full pass, then a reduced pass on the most frequent `cv.top_k`.
    TopK,
    List(Vec<String>),
}

impl FromStr for FeatureChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "all" => Ok(FeatureChoice::All),
            "top4" | "topk" => Ok(FeatureChoice::TopK),
            "table2" => Ok(FeatureChoice::List(TOP_FOUR.iter().map(|s| s.to_string()).collect())),
            list => {
                let names: Vec<String> = list.split(',').map(|n| n.trim().to_string()).filter(|n| !n.is_empty()).collect();
                if names.is_empty() {
                    return Err(Error::Config("empty feature list".into()));
                }
                Ok(FeatureChoice::List(names))
            }
        }
    }
}

impl Display for FeatureChoice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FeatureChoice::All => f.write_str("all"),
            FeatureChoice::TopK => f.write_str("top4"),
            FeatureChoice::List(v) => f.write_str(&v.join(",")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub detector: DetectorParams,
    pub gaps: GapPolicy,
    pub velocity: VelocityMeasure,
    pub kernel: String,
    /// RBF width; `None` means `1 / n_features`.
    pub gamma: Option<f64>,
    pub c: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub permutation_repeats: usize,
    pub runs: usize,
    pub seed: u64,
    pub top_k: usize,
    pub features: FeatureChoice,
    pub parallel: bool,
    pub synth: SynthConfig,
    pub dispersion: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let svm = SvmConfig::default();
        PipelineConfig {
            detector: DetectorParams::default(),
            gaps: GapPolicy::default(),
            velocity: VelocityMeasure::Peak,
            kernel: "linear".into(),
            gamma: None,
            c: svm.c,
            tol: svm.tol,
            max_iter: svm.max_iter,
            permutation_repeats: svm.permutation_repeats,
            runs: 1000,
            seed: 0,
            top_k: 4,
            features: FeatureChoice::All,
            parallel: true,
            synth: SynthConfig::default(),
            dispersion: DEFAULT_DISPERSION,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("invalid value `{value}` for `{key}`")))
}

impl PipelineConfig {
    /// Keys of the effective-settings snapshot. `cv.parallel` is accepted by
    /// [`set`](Self::set) but left out: it never changes results.
    pub fn keys() -> &'static [&'static str] {
        &[
            "detector.threshold",
            "detector.min_fixation_ms",
            "detector.min_saccade_ms",
            "detector.window",
            "detector.px_per_degree",
            "detector.rate_hz",
            "gaps.max_interp_ms",
            "gaps.split_ms",
            "features.velocity",
            "svm.kernel",
            "svm.gamma",
            "svm.c",
            "svm.tol",
            "svm.max_iter",
            "svm.permutation_repeats",
            "cv.runs",
            "cv.seed",
            "cv.top_k",
            "cv.features",
            "synth.per_class",
            "synth.duration_s",
            "synth.noise_px",
            "synth.v_max",
            "synth.a63",
            "synth.fixation_shape",
            "synth.min_fixation_ms",
            "synth.min_amplitude",
            "synth.max_amplitude",
            "synth.dispersion",
            "synth.seed",
        ]
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "detector.threshold" => self.detector.threshold = parse(key, v)?,
            "detector.min_fixation_ms" => self.detector.min_fixation = parse(key, v)?,
            "detector.min_saccade_ms" => self.detector.min_saccade = parse(key, v)?,
            "detector.window" => self.detector.window = parse(key, v)?,
            "detector.px_per_degree" => self.detector.px_per_degree = parse(key, v)?,
            "detector.rate_hz" => self.detector.nominal_rate = parse(key, v)?,
            "gaps.max_interp_ms" => self.gaps.max_interp_gap = parse(key, v)?,
            "gaps.split_ms" => self.gaps.split_gap = parse(key, v)?,
            "features.velocity" => {
                self.velocity = match v {
                    "peak" => VelocityMeasure::Peak,
                    "mean" => VelocityMeasure::Mean,
                    _ => return Err(Error::Config(format!("features.velocity must be peak or mean, got `{v}`"))),
                }
            }
            "svm.kernel" => {
                if v != "linear" && v != "rbf" {
                    return Err(Error::Config(format!("svm.kernel must be linear or rbf, got `{v}`")));
                }
                self.kernel = v.to_string();
            }
            "svm.gamma" => self.gamma = if v == "auto" { None } else { Some(parse(key, v)?) },
            "svm.c" => self.c = parse(key, v)?,
            "svm.tol" => self.tol = parse(key, v)?,
            "svm.max_iter" => self.max_iter = parse(key, v)?,
            "svm.permutation_repeats" => self.permutation_repeats = parse(key, v)?,
            "cv.runs" => self.runs = parse(key, v)?,
            "cv.seed" => self.seed = parse(key, v)?,
            "cv.top_k" => self.top_k = parse(key, v)?,
            "cv.features" => self.features = v.parse()?,
            "cv.parallel" => self.parallel = parse(key, v)?,
            "synth.per_class" => self.synth.per_class = parse(key, v)?,
            "synth.duration_s" => self.synth.duration_s = parse(key, v)?,
            "synth.noise_px" => self.synth.noise_px = parse(key, v)?,
            "synth.v_max" => self.synth.v_max = parse(key, v)?,
            "synth.a63" => self.synth.a63 = parse(key, v)?,
            "synth.fixation_shape" => self.synth.fixation_shape = parse(key, v)?,
            "synth.min_fixation_ms" => self.synth.min_fixation_ms = parse(key, v)?,
            "synth.min_amplitude" => self.synth.min_amplitude = parse(key, v)?,
            "synth.max_amplitude" => self.synth.max_amplitude = parse(key, v)?,
            "synth.dispersion" => self.dispersion = parse(key, v)?,
            "synth.seed" => self.synth.seed = parse(key, v)?,
            other => return Err(Error::Config(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<String> {
        self.to_kv().into_iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    /// Every key with its effective value, in [`keys`](Self::keys) order.
    pub fn to_kv(&self) -> Vec<(String, String)> {
        let d = &self.detector;
        let s = &self.synth;
        let values = [
            d.threshold.to_string(),
            d.min_fixation.to_string(),
            d.min_saccade.to_string(),
            d.window.to_string(),
            d.px_per_degree.to_string(),
            d.nominal_rate.to_string(),
            self.gaps.max_interp_gap.to_string(),
            self.gaps.split_gap.to_string(),
            match self.velocity {
                VelocityMeasure::Peak => "peak".into(),
                VelocityMeasure::Mean => "mean".into(),
            },
            self.kernel.clone(),
            self.gamma.map_or("auto".into(), |g| g.to_string()),
            self.c.to_string(),
            self.tol.to_string(),
            self.max_iter.to_string(),
            self.permutation_repeats.to_string(),
            self.runs.to_string(),
            self.seed.to_string(),
            self.top_k.to_string(),
            self.features.to_string(),
            s.per_class.to_string(),
            s.duration_s.to_string(),
            s.noise_px.to_string(),
            s.v_max.to_string(),
            s.a63.to_string(),
            s.fixation_shape.to_string(),
            s.min_fixation_ms.to_string(),
            s.min_amplitude.to_string(),
            s.max_amplitude.to_string(),
            self.dispersion.to_string(),
            s.seed.to_string(),
        ];
        Self::keys().iter().map(|k| k.to_string()).zip(values).collect()
    }

    /// Renders the flat text format; [`apply_text`](Self::apply_text) reads it back.
    pub fn to_text(&self) -> String {
        self.to_kv().into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", n + 1)))?;
            self.set(k, v).map_err(|e| Error::Config(format!("line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut c = PipelineConfig::default();
        c.apply_text(text)?;
        Ok(c)
    }

    /// SVM settings for a model over `n_features` columns.
    pub fn svm(&self, n_features: usize, seed: u64) -> SvmConfig {
        let kernel = match self.kernel.as_str() {
            "rbf" => Kernel::Rbf {
                gamma: self.gamma.unwrap_or(1.0 / n_features.max(1) as f64),
            },
            _ => Kernel::Linear,
        };
        SvmConfig {
            kernel,
            c: self.c,
            tol: self.tol,
            max_iter: self.max_iter,
            seed,
            permutation_repeats: self.permutation_repeats,
        }
    }

    /// Harness settings; a `TopK` choice maps to all columns (the caller
    /// runs the reduced workflow).
    pub fn cv(&self, n_features: usize) -> CvConfig {
        let features = match &self.features {
            FeatureChoice::List(v) => FeatureSelection::Named(v.clone()),
            _ => FeatureSelection::All,
        };
        let width = match &self.features {
            FeatureChoice::List(v) => v.len(),
            _ => n_features,
        };
        CvConfig {
            runs: self.runs,
            seed: self.seed,
            features,
            svm: self.svm(width, 0),
            top_k: self.top_k,
            parallel: self.parallel,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let mut c = PipelineConfig::default();
        c.set("detector.threshold", "0.9").unwrap();
        c.set("svm.kernel", "rbf").unwrap();
        c.set("svm.gamma", "0.25").unwrap();
        c.set("cv.features", "sacc_amp_total, gyro_z_min").unwrap();
        c.set("synth.noise_px", "1.5").unwrap();
        let back = PipelineConfig::from_text(&c.to_text()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.get("cv.features").as_deref(), Some("sacc_amp_total,gyro_z_min"));
    }

    #[test]
    fn layering_later_wins() {
        let mut c = PipelineConfig::from_text("cv.runs = 10\n# note\n\ncv.seed = 3\n").unwrap();
        c.set("cv.runs", "20").unwrap();
        assert_eq!((c.runs, c.seed), (20, 3));
    }

    #[test]
    fn bad_entries() {
        assert!(matches!(PipelineConfig::from_text("nope = 1"), Err(Error::Config(_))));
        assert!(matches!(PipelineConfig::from_text("cv.runs = x"), Err(Error::Config(_))));
        assert!(matches!(PipelineConfig::from_text("cv.runs"), Err(Error::Config(_))));
        assert!(PipelineConfig::default().set("svm.kernel", "poly").is_err());
    }

    #[test]
    fn every_key_settable() {
        let d = PipelineConfig::default();
        for (k, v) in d.to_kv() {
            let mut c = PipelineConfig::default();
            c.set(&k, &v).unwrap();
            assert_eq!(c, d, "{k}");
        }
        assert_eq!(d.to_kv().len(), PipelineConfig::keys().len());
    }

    #[test]
    fn svm_mapping() {
        let mut c = PipelineConfig::default();
        c.set("svm.kernel", "rbf").unwrap();
        assert_eq!(c.svm(4, 0).kernel, Kernel::Rbf { gamma: 0.25 });
        c.set("cv.features", "top4").unwrap();
        assert_eq!(c.cv(35).features, FeatureSelection::All);
    }
}
