use std::f64::consts::PI;
use std::io::{Read, Write};

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, Normal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::profile::{participant_id, ClassProfile};
use crate::error::{Error, Result};
use crate::events::EventKind;
use crate::features::{feature_index, FEATURE_COUNT};
use crate::ingest::{ExpertiseClass, GazeSample, Recording, RecordingMeta};
use crate::rng::{stream, StreamRng};

/// Parameters of signal-level generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub per_class: usize,
    pub duration_s: f64,
    /// Standard deviation of additive gaze noise, px.
    pub noise_px: f64,
    /// Main-sequence asymptote, deg/s.
    pub v_max: f64,
    /// Main-sequence amplitude constant, deg.
    pub a63: f64,
    /// Gamma shape of the fixation duration distribution.
    pub fixation_shape: f64,
    pub min_fixation_ms: f64,
    pub min_amplitude: f64,
    pub max_amplitude: f64,
    pub rate_hz: f64,
    pub px_per_degree: f64,
    pub screen_px: (f64, f64),
    pub seed: u64,
    /// Forces the number of saccades instead of deriving it from `sacc_freq`.
    pub saccade_count: Option<usize>,
    /// Overrides the profile's `sacc_amp_total` budget.
    pub total_amplitude: Option<f64>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            per_class: 5,
            duration_s: 60.0,
            noise_px: 0.0,
            v_max: 500.0,
            a63: 5.0,
            fixation_shape: 3.0,
            min_fixation_ms: 150.0,
            min_amplitude: 1.5,
            max_amplitude: 20.0,
            rate_hz: 100.0,
            px_per_degree: 40.0,
            screen_px: (1920.0, 1080.0),
            seed: 0,
            saccade_count: None,
            total_amplitude: None,
        }
    }
}

impl SynthConfig {
    fn validate(&self) -> Result<()> {
        let positive = [
            ("duration_s", self.duration_s),
            ("v_max", self.v_max),
            ("a63", self.a63),
            ("fixation_shape", self.fixation_shape),
            ("min_fixation_ms", self.min_fixation_ms),
            ("min_amplitude", self.min_amplitude),
            ("rate_hz", self.rate_hz),
            ("px_per_degree", self.px_per_degree),
            ("screen width", self.screen_px.0),
            ("screen height", self.screen_px.1),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| !(*v > 0.0)) {
            return Err(Error::Config(format!("synth parameter {name} must be positive")));
        }
        if !(self.noise_px >= 0.0) {
            return Err(Error::Config("noise must be non-negative".into()));
        }
        if self.duration_s < 5.0 {
            return Err(Error::Config("synthetic recordings need at least 5 s".into()));
        }
        if self.max_amplitude < self.min_amplitude {
            return Err(Error::Config("max_amplitude below min_amplitude".into()));
        }
        Ok(())
    }
}

/// Main-sequence peak velocity `v_max * (1 - exp(-a / a63))`, deg/s.
pub fn main_sequence_peak(amplitude: f64, v_max: f64, a63: f64) -> f64 {
    v_max * (1.0 - (-amplitude / a63).exp())
}

/// Duration in ms of a raised-cosine velocity pulse covering `amplitude`
/// degrees with the given peak.
pub fn pulse_duration_ms(amplitude: f64, peak: f64) -> f64 {
    2000.0 * amplitude / peak
}

/// Fraction of the displacement covered after fraction `u` of the pulse.
fn pulse_progress(u: f64) -> f64 {
    let u = u.clamp(0.0, 1.0);
    u - (2.0 * PI * u).sin() / (2.0 * PI)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthEvent {
    #[serde(with = "kind_name")]
    pub kind: EventKind,
    pub start: f64,
    pub end: f64,
    /// Degrees (0 for fixations).
    pub amplitude: f64,
    /// Degrees per second (0 for fixations).
    pub peak_velocity: f64,
}

mod kind_name {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::events::EventKind;

    pub fn serialize<S: Serializer>(k: &EventKind, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(super::kind_str(*k))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<EventKind, D::Error> {
        match String::deserialize(d)?.as_str() {
            "fixation" => Ok(EventKind::Fixation),
            "saccade" => Ok(EventKind::Saccade),
            other => Err(serde::de::Error::custom(format!("unknown event kind {other}"))),
        }
    }
}

fn kind_str(k: EventKind) -> &'static str {
    match k {
        EventKind::Fixation => "fixation",
        EventKind::Saccade => "saccade",
    }
}

/// Scripted events of one synthetic recording, ordered and non-overlapping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub participant_id: String,
    pub events: Vec<TruthEvent>,
}

impl GroundTruth {
    pub fn saccades(&self) -> impl Iterator<Item = &TruthEvent> {
        self.events.iter().filter(|e| e.kind == EventKind::Saccade)
    }

    pub fn total_amplitude(&self) -> f64 {
        self.saccades().map(|e| e.amplitude).sum()
    }
}

fn profile_value(profile: &ClassProfile, name: &str) -> f64 {
    profile.mean[feature_index(name).expect("known feature")]
}

fn choose_count(profile: &ClassProfile, cfg: &SynthConfig, budget: f64) -> Result<usize> {
    let infeasible = |n: usize| {
        Error::BudgetInfeasible(format!(
            "{budget:.2} deg cannot be split into {n} saccades of {}..{} deg",
            cfg.min_amplitude, cfg.max_amplitude
        ))
    };
    if let Some(n) = cfg.saccade_count {
        if n == 0 || budget < n as f64 * cfg.min_amplitude || budget > n as f64 * cfg.max_amplitude {
            return Err(infeasible(n));
        }
        return Ok(n);
    }
    let freq = profile_value(profile, "sacc_freq").max(0.0);
    let mut n = ((freq * cfg.duration_s).round() as usize).max(1);
    if budget < n as f64 * cfg.min_amplitude {
        n = (budget / cfg.min_amplitude).floor() as usize;
    }
    if budget > n as f64 * cfg.max_amplitude {
        n = (budget / cfg.max_amplitude).ceil() as usize;
    }
    if n == 0 {
        return Err(infeasible(0));
    }
    Ok(n)
}

/// Splits `budget` into `n` amplitudes within `[lo, hi]`, summing to it.
fn split_budget(rng: &mut StreamRng, n: usize, budget: f64, lo: f64, hi: f64) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
    let mut amp = vec![lo; n];
    let mut free: Vec<bool> = vec![true; n];
    let mut remaining = budget - lo * n as f64;
    loop {
        let wsum: f64 = (0..n).filter(|&i| free[i]).map(|i| w[i]).sum();
        let mut clipped = false;
        for i in 0..n {
            if !free[i] {
                continue;
            }
            let share = if wsum > 0.0 { remaining * w[i] / wsum } else { remaining / n as f64 };
            if lo + share > hi {
                amp[i] = hi;
                free[i] = false;
                clipped = true;
            }
        }
        if !clipped {
            for i in (0..n).filter(|&i| free[i]) {
                amp[i] = lo + if wsum > 0.0 { remaining * w[i] / wsum } else { remaining / n as f64 };
            }
            return amp;
        }
        remaining = budget - amp.iter().enumerate().map(|(i, &a)| if free[i] { lo } else { a }).sum::<f64>();
    }
}

/// Random walk of `n` steps rescaled onto `[lo, hi]`.
fn bounded_walk(rng: &mut StreamRng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    let mut x = 0.0;
    let walk: Vec<f64> = (0..n)
        .map(|_| {
            x += rng.sample::<f64, _>(StandardNormal);
            x
        })
        .collect();
    let min = walk.iter().copied().fold(f64::INFINITY, f64::min);
    let max = walk.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = (lo.min(hi), lo.max(hi));
    if max - min <= 0.0 {
        return vec![0.5 * (lo + hi); n];
    }
    walk.iter().map(|v| lo + (v - min) / (max - min) * (hi - lo)).collect()
}

fn direction(rng: &mut StreamRng, from: (f64, f64), len: f64, screen: (f64, f64)) -> (f64, f64) {
    let margin = 20.0;
    let inside = |p: (f64, f64)| p.0 >= margin && p.0 <= screen.0 - margin && p.1 >= margin && p.1 <= screen.1 - margin;
    for _ in 0..256 {
        let theta = rng.random_range(0.0..2.0 * PI);
        let u = (theta.cos(), theta.sin());
        if inside((from.0 + u.0 * len, from.1 + u.1 * len)) {
            return u;
        }
    }
    if from.0 < screen.0 / 2.0 {
        (1.0, 0.0)
    } else {
        (-1.0, 0.0)
    }
}

struct PlannedSaccade {
    onset: f64,
    duration: f64,
    amplitude: f64,
    peak: f64,
    from: (f64, f64),
    dir: (f64, f64),
}

/// Generates one recording whose targets are `profile.mean` taken as-is.
///
/// Saccade onsets lie on the sample grid; the recording's participant id is
/// empty and its label is `profile.class`.
pub fn generate_signal_recording(
    profile: &ClassProfile,
    cfg: &SynthConfig,
    rng: &mut StreamRng,
) -> Result<(Recording, GroundTruth)> {
    cfg.validate()?;
    if profile.mean.len() != FEATURE_COUNT {
        return Err(Error::Config("profile has the wrong number of features".into()));
    }
    let spacing = 1000.0 / cfg.rate_hz;
    let total_ms = cfg.duration_s * 1000.0;
    let budget = cfg.total_amplitude.unwrap_or_else(|| profile_value(profile, "sacc_amp_total"));
    if !(budget > 0.0) {
        return Err(Error::BudgetInfeasible(format!("total amplitude {budget} must be positive")));
    }
    let n = choose_count(profile, cfg, budget)?;
    let amps = split_budget(rng, n, budget, cfg.min_amplitude, cfg.max_amplitude);
    let peaks: Vec<f64> = amps.iter().map(|&a| main_sequence_peak(a, cfg.v_max, cfg.a63)).collect();
    let durs: Vec<f64> = amps.iter().zip(&peaks).map(|(&a, &p)| pulse_duration_ms(a, p)).collect();

    let min_gap = cfg.min_fixation_ms + spacing;
    let slack = total_ms - durs.iter().sum::<f64>() - (n + 1) as f64 * min_gap;
    if slack < 0.0 {
        return Err(Error::BudgetInfeasible(format!(
            "{n} saccades totalling {budget:.2} deg do not fit in {} s",
            cfg.duration_s
        )));
    }
    let gamma = Gamma::new(cfg.fixation_shape, 1.0).map_err(|e| Error::Config(e.to_string()))?;
    let g: Vec<f64> = (0..=n).map(|_| gamma.sample(rng)).collect();
    let gsum: f64 = g.iter().sum();

    let ppd = cfg.px_per_degree;
    let mut pos = (cfg.screen_px.0 / 2.0, cfg.screen_px.1 / 2.0);
    let mut plan = Vec::with_capacity(n);
    let mut clock = 0.0;
    for i in 0..n {
        clock += min_gap + slack * g[i] / gsum;
        let onset = (clock / spacing).floor() * spacing;
        let len = amps[i] * ppd;
        let dir = direction(rng, pos, len, cfg.screen_px);
        plan.push(PlannedSaccade { onset, duration: durs[i], amplitude: amps[i], peak: peaks[i], from: pos, dir });
        pos = (pos.0 + dir.0 * len, pos.1 + dir.1 * len);
        clock = onset + durs[i];
    }

    let n_samples = (total_ms / spacing).floor() as usize;
    let noise = Normal::new(0.0, cfg.noise_px).map_err(|e| Error::Config(e.to_string()))?;
    let get = |name: &str| profile_value(profile, name);
    let pupil = bounded_walk(rng, n_samples, get("pupil_min"), get("pupil_max"));
    let gyro: Vec<Vec<f64>> = ["gyro_x", "gyro_y", "gyro_z"]
        .iter()
        .map(|g| bounded_walk(rng, n_samples, get(&format!("{g}_min")), get(&format!("{g}_max"))))
        .collect();

    let mut samples = Vec::with_capacity(n_samples);
    let mut k = 0;
    for s in 0..n_samples {
        let t = s as f64 * spacing;
        while k + 1 < plan.len() && t >= plan[k + 1].onset {
            k += 1;
        }
        let (x, y) = match plan.get(k) {
            Some(p) if t >= p.onset => {
                let d = p.amplitude * ppd * pulse_progress((t - p.onset) / p.duration);
                (p.from.0 + p.dir.0 * d, p.from.1 + p.dir.1 * d)
            }
            Some(p) => p.from,
            None => pos,
        };
        let (nx, ny) = if cfg.noise_px > 0.0 { (noise.sample(rng), noise.sample(rng)) } else { (0.0, 0.0) };
        let mut sample = GazeSample::at(t, x + nx, y + ny);
        sample.pupil_left = Some(pupil[s]);
        sample.pupil_right = Some(pupil[s]);
        sample.gyro_x = Some(gyro[0][s]);
        sample.gyro_y = Some(gyro[1][s]);
        sample.gyro_z = Some(gyro[2][s]);
        samples.push(sample);
    }

    let mut events = Vec::with_capacity(2 * n + 1);
    let mut prev_end = 0.0;
    for p in &plan {
        events.push(TruthEvent { kind: EventKind::Fixation, start: prev_end, end: p.onset, amplitude: 0.0, peak_velocity: 0.0 });
        events.push(TruthEvent {
            kind: EventKind::Saccade,
            start: p.onset,
            end: p.onset + p.duration,
            amplitude: p.amplitude,
            peak_velocity: p.peak,
        });
        prev_end = p.onset + p.duration;
    }
    let last_t = (n_samples - 1) as f64 * spacing;
    events.push(TruthEvent { kind: EventKind::Fixation, start: prev_end, end: last_t, amplitude: 0.0, peak_velocity: 0.0 });

    let meta = RecordingMeta {
        participant_id: String::new(),
        label: Some(profile.class),
        nominal_rate: cfg.rate_hz,
        px_per_degree: ppd,
    };
    Ok((Recording::new(meta, samples)?, GroundTruth { participant_id: String::new(), events }))
}

/// Generates `cfg.per_class` participants per class.
///
/// Participant `k` (global index in class order) draws its own feature
/// targets from its class profile and then its signal, both from the stream
/// `(cfg.seed, "signal-participant", k)`.
pub fn generate_signal_cohort(profiles: &[ClassProfile; 3], cfg: &SynthConfig) -> Result<Vec<(Recording, GroundTruth)>> {
    cfg.validate()?;
    if cfg.per_class < 2 {
        return Err(Error::Config("at least 2 participants per class required".into()));
    }
    let jobs: Vec<(ExpertiseClass, usize, usize)> = ExpertiseClass::ALL
        .into_iter()
        .enumerate()
        .flat_map(|(c, class)| (0..cfg.per_class).map(move |i| (class, i, c * cfg.per_class + i)))
        .collect();
    jobs.into_par_iter()
        .map(|(class, i, k)| {
            let profile = profiles
                .iter()
                .find(|p| p.class == class)
                .ok_or_else(|| Error::ClassMissing(format!("no profile for {class}")))?;
            let mut rng = stream(cfg.seed, "signal-participant", k as u64);
            let drawn = profile.sample(&mut rng);
            let target = ClassProfile {
                class,
                mean: drawn.values.to_vec(),
                dispersion: vec![0.0; FEATURE_COUNT],
            };
            let (mut rec, mut truth) = generate_signal_recording(&target, cfg, &mut rng)?;
            let id = participant_id(class, i);
            rec.participant_id = id.clone();
            truth.participant_id = id;
            Ok((rec, truth))
        })
        .collect()
}

pub const GROUND_TRUTH_HEADER: &str = "participant_id,kind,start_ms,end_ms,amp_deg,peak_vel_dps";

pub fn write_ground_truth<W: Write>(truths: &[GroundTruth], mut out: W) -> Result<()> {
    let mut buf = format!("{GROUND_TRUTH_HEADER}\n");
    for t in truths {
        for e in &t.events {
            buf.push_str(&format!(
                "{},{},{},{},{},{}\n",
                t.participant_id,
                kind_str(e.kind),
                e.start,
                e.end,
                e.amplitude,
                e.peak_velocity
            ));
        }
    }
    out.write_all(buf.as_bytes())?;
    Ok(())
}

/// One row of a `cohort.csv` manifest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CohortEntry {
    pub participant_id: String,
    pub label: Option<ExpertiseClass>,
    /// Recording path relative to the manifest's directory.
    pub file: String,
}

pub fn write_cohort_manifest<W: Write>(entries: &[CohortEntry], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["participant_id", "label", "file"])?;
    for e in entries {
        let label = e.label.map(|l| l.name().to_string()).unwrap_or_default();
        w.write_record([e.participant_id.as_str(), label.as_str(), e.file.as_str()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_cohort_manifest<R: Read>(input: R) -> Result<Vec<CohortEntry>> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = r.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let (id, label, file) = (col("participant_id")?, col("label")?, col("file")?);
    let mut out = Vec::new();
    for row in r.records() {
        let row = row?;
        let raw = row.get(label).unwrap_or("");
        let label = if raw.is_empty() { None } else { Some(raw.parse::<ExpertiseClass>()?) };
        out.push(CohortEntry {
            participant_id: row.get(id).unwrap_or("").to_string(),
            label,
            file: row.get(file).unwrap_or("").to_string(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::events::{detect_events, DetectorParams};
    use crate::features::{extract_features, VelocityMeasure};
    use crate::ingest::GapPolicy;
    use crate::synth::builtin_profiles;

    fn one(cfg: &SynthConfig, seed: u64) -> (Recording, GroundTruth) {
        let p = builtin_profiles()[0].clone();
        generate_signal_recording(&p, cfg, &mut stream(seed, "test", 0)).unwrap()
    }

    #[test]
    fn main_sequence_values() {
        assert!((main_sequence_peak(10.0, 500.0, 5.0) - 432.332358).abs() < 1e-5);
        assert!(main_sequence_peak(1e-9, 500.0, 5.0) < 1e-6);
        assert_eq!(main_sequence_peak(0.0, 500.0, 5.0), 0.0);
    }

    #[test]
    fn pulse_integrates_to_amplitude() {
        assert_eq!(pulse_progress(0.0), 0.0);
        assert!((pulse_progress(1.0) - 1.0).abs() < 1e-15);
        assert!((pulse_progress(0.5) - 0.5).abs() < 1e-15);
        let d = pulse_duration_ms(10.0, 400.0);
        assert!((d - 50.0).abs() < 1e-12);
    }

    #[test]
    fn budget_split_is_exact_and_bounded() {
        let mut rng = stream(1, "split", 0);
        let a = split_budget(&mut rng, 50, 600.0, 1.5, 20.0);
        assert!((a.iter().sum::<f64>() - 600.0).abs() < 1e-9);
        assert!(a.iter().all(|&x| (1.5..=20.0 + 1e-12).contains(&x)));
    }

    #[test]
    fn scripted_count_is_recovered() {
        let cfg = SynthConfig { saccade_count: Some(20), total_amplitude: Some(160.0), duration_s: 20.0, ..Default::default() };
        let (rec, truth) = one(&cfg, 3);
        assert_eq!(truth.saccades().count(), 20);
        let ev = detect_events(&rec, &DetectorParams::default(), &GapPolicy::default()).unwrap();
        assert_eq!(ev.saccades.len(), 20);
    }

    #[test]
    fn truth_is_ordered_and_disjoint() {
        let (rec, truth) = one(&SynthConfig::default(), 5);
        for w in truth.events.windows(2) {
            assert!(w[0].end <= w[1].start + 1e-9);
            assert!(w[0].start <= w[0].end);
        }
        assert!((truth.total_amplitude() - 481.32).abs() < 1e-6);
        assert_eq!(rec.len(), 6000);
    }

    #[test]
    fn extracted_total_tracks_script() {
        let (rec, truth) = one(&SynthConfig::default(), 8);
        let ev = detect_events(&rec, &DetectorParams::default(), &GapPolicy::default()).unwrap();
        let f = extract_features(&ev, &rec, VelocityMeasure::Peak).unwrap();
        let got = f.get("sacc_amp_total").unwrap();
        assert!((got - truth.total_amplitude()).abs() <= 0.02 * truth.total_amplitude(), "{got}");
        assert!((f.get("gyro_z_min").unwrap() - (-72.90)).abs() < 1e-9);
    }

    #[test]
    fn seed_determinism() {
        let cfg = SynthConfig { noise_px: 1.0, ..Default::default() };
        assert_eq!(one(&cfg, 4), one(&cfg, 4));
        assert_ne!(one(&cfg, 4).0, one(&cfg, 5).0);
    }

    #[test]
    fn infeasible_budgets() {
        let cfg = SynthConfig { saccade_count: Some(10), total_amplitude: Some(1000.0), ..Default::default() };
        assert!(matches!(generate_signal_recording(&builtin_profiles()[0], &cfg, &mut stream(0, "x", 0)), Err(Error::BudgetInfeasible(_))));
        let cfg = SynthConfig { duration_s: 5.0, total_amplitude: Some(5000.0), ..Default::default() };
        assert!(matches!(generate_signal_recording(&builtin_profiles()[0], &cfg, &mut stream(0, "x", 0)), Err(Error::BudgetInfeasible(_))));
        let cfg = SynthConfig { duration_s: 4.0, ..Default::default() };
        assert!(matches!(generate_signal_recording(&builtin_profiles()[0], &cfg, &mut stream(0, "x", 0)), Err(Error::Config(_))));
    }

    #[test]
    fn cohort_order_and_class_ordering() {
        let cfg = SynthConfig { per_class: 3, duration_s: 30.0, ..Default::default() };
        let cohort = generate_signal_cohort(&builtin_profiles(), &cfg).unwrap();
        let ids: Vec<_> = cohort.iter().map(|(r, _)| r.participant_id.as_str()).collect();
        assert_eq!(ids, ["E01", "E02", "E03", "I01", "I02", "I03", "N01", "N02", "N03"]);
        let mean_total = |c: usize| cohort[c * 3..c * 3 + 3].iter().map(|(_, t)| t.total_amplitude()).sum::<f64>() / 3.0;
        assert!(mean_total(0) < mean_total(1) && mean_total(1) < mean_total(2));
        assert_eq!(cohort, generate_signal_cohort(&builtin_profiles(), &cfg).unwrap());
    }

    #[test]
    fn manifest_round_trip() {
        let entries = vec![
            CohortEntry { participant_id: "E01".into(), label: Some(ExpertiseClass::Expert), file: "E01.csv".into() },
            CohortEntry { participant_id: "x".into(), label: None, file: "x.csv".into() },
        ];
        let mut buf = Vec::new();
        write_cohort_manifest(&entries, &mut buf).unwrap();
        assert!(buf.starts_with(b"participant_id,label,file\nE01,expert,E01.csv\n"));
        assert_eq!(read_cohort_manifest(buf.as_slice()).unwrap(), entries);
    }

    #[test]
    fn ground_truth_layout() {
        let (_, mut truth) = one(&SynthConfig { duration_s: 5.0, total_amplitude: Some(20.0), saccade_count: Some(2), ..Default::default() }, 1);
        truth.participant_id = "E01".into();
        let mut buf = Vec::new();
        write_ground_truth(&[truth.clone()], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(GROUND_TRUTH_HEADER));
        assert_eq!(lines.count(), truth.events.len());
        assert!(text.contains("E01,saccade,"));
    }
}
