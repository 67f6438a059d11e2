use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gazemetric::config::{FeatureChoice, PipelineConfig, CONFIG_ENV};
use gazemetric::eval::{rank_feature_frequency, reduced_model_workflow, run_repeated_cv, AggregateReport};
use gazemetric::events::write_events;
use gazemetric::features::{build_feature_matrix, FeatureMatrix};
use gazemetric::ingest::write_recording;
use gazemetric::svm::{feature_importance, load_model, predict_matrix, save_model, train_multiclass};
use gazemetric::synth::{
    builtin_profiles, generate_feature_cohort, generate_signal_cohort, identical_profiles, read_cohort_manifest,
    write_cohort_manifest, write_ground_truth, ClassProfile, CohortEntry,
};
use gazemetric::{
    clean_gaps, detect_events, parse_recording, ColumnMapping, Error, ErrorKind, ExpertiseClass, RecordingMeta,
};

mod render;

#[derive(Parser)]
#[command(name = "gazemetric", version, about = "Eye-movement expertise classification pipeline")]
struct Cli {
    /// Config file (flat `key = value`); defaults to $GAZEMETRIC_CONFIG.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one config key, e.g. `--set svm.c=2`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Increase log verbosity on standard error.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Detect fixations and saccades in one recording.
    Detect(DetectArgs),
    /// Extract the feature matrix of a cohort or a single recording.
    Features(FeaturesArgs),
    /// Train a multiclass model on a feature matrix.
    Train(TrainArgs),
    /// Predict classes for a feature matrix.
    Predict(PredictArgs),
    /// Run repeated leave-one-per-group-out cross-validation.
    Cv(CvArgs),
    /// Recount the feature-frequency table of a report.
    Rank(RankArgs),
    /// Generate a synthetic cohort.
    Synth(SynthArgs),
    /// Render a report as a text table.
    Report(ReportArgs),
}

#[derive(Args, Default)]
struct DetectorFlags {
    /// Saccade speed threshold, px/ms.
    #[arg(long)]
    threshold: Option<f64>,
    /// Smoothing window in samples (odd).
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    min_fixation: Option<f64>,
    #[arg(long)]
    min_saccade: Option<f64>,
    #[arg(long)]
    px_per_degree: Option<f64>,
    /// Nominal sample rate, Hz.
    #[arg(long)]
    rate: Option<f64>,
}

#[derive(Args)]
struct DetectArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Events file; defaults to `<input stem>.events.csv` next to the input.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    detector: DetectorFlags,
}

#[derive(Args)]
struct FeaturesArgs {
    /// Cohort directory containing `cohort.csv`.
    #[arg(long, conflicts_with = "input")]
    cohort: Option<PathBuf>,
    /// Single recording.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Participant id for `--in` (defaults to the file stem).
    #[arg(long)]
    id: Option<String>,
    /// Class label for `--in`.
    #[arg(long)]
    label: Option<String>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum)]
    velocity: Option<Velocity>,
    #[command(flatten)]
    detector: DetectorFlags,
}

#[derive(Clone, Copy, ValueEnum)]
enum Velocity {
    Peak,
    Mean,
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelArg {
    Linear,
    Rbf,
}

#[derive(Args, Default)]
struct SvmFlags {
    #[arg(long, value_enum)]
    kernel: Option<KernelArg>,
    #[arg(long)]
    c: Option<f64>,
    /// RBF width (`auto` = 1 / number of features).
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Args)]
struct TrainArgs {
    /// Feature matrix CSV.
    #[arg(long)]
    features: PathBuf,
    /// Columns to train on: `all`, `table2` or a comma-separated list.
    #[arg(long, default_value = "all")]
    columns: String,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    svm: SvmFlags,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    features: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CvArgs {
    /// Cohort directory (`features.csv` or `cohort.csv`) or a feature matrix CSV.
    #[arg(long)]
    cohort: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// `all`, `top4` (full pass then reduced pass) or a comma-separated list.
    #[arg(long)]
    features: Option<String>,
    /// Size of the per-run top list counted in the frequency table.
    #[arg(long)]
    top_k: Option<usize>,
    /// Execute runs sequentially.
    #[arg(long)]
    serial: bool,
    #[command(flatten)]
    svm: SvmFlags,
    #[command(flatten)]
    detector: DetectorFlags,
}

#[derive(Args)]
struct RankArgs {
    #[arg(long)]
    report: PathBuf,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    /// Published class profiles.
    Table2,
    /// One neutral profile shared by all classes.
    Identical,
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum Level {
    Signal,
    Features,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, value_enum, default_value = "table2")]
    preset: Preset,
    #[arg(long, value_enum, default_value = "signal")]
    level: Level,
    /// Participants per class.
    #[arg(long)]
    per_class: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Recording length, seconds.
    #[arg(long)]
    duration: Option<f64>,
    /// Gaussian gaze noise, px.
    #[arg(long)]
    noise: Option<f64>,
    /// Relative between-participant spread of each feature.
    #[arg(long)]
    dispersion: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    report: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn exit_code(e: &Error) -> u8 {
    match e.kind() {
        ErrorKind::Config => 2,
        ErrorKind::Data => 3,
        ErrorKind::Numeric => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn load_config(cli: &Cli) -> Result<PipelineConfig, Error> {
    let mut cfg = PipelineConfig::default();
    let path = cli.config.clone().or_else(|| std::env::var_os(CONFIG_ENV).map(PathBuf::from));
    if let Some(p) = path {
        let text = fs::read_to_string(&p).map_err(|e| Error::Config(format!("config file {}: {e}", p.display())))?;
        cfg.apply_text(&text)?;
        log::info!("loaded config {}", p.display());
    }
    for o in &cli.overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got `{o}`")))?;
        cfg.set(k, v)?;
    }
    Ok(cfg)
}

fn set_opt<T: ToString>(cfg: &mut PipelineConfig, key: &str, v: &Option<T>) -> Result<(), Error> {
    if let Some(v) = v {
        cfg.set(key, &v.to_string())?;
    }
    Ok(())
}

fn apply_detector(cfg: &mut PipelineConfig, f: &DetectorFlags) -> Result<(), Error> {
    set_opt(cfg, "detector.threshold", &f.threshold)?;
    set_opt(cfg, "detector.window", &f.window)?;
    set_opt(cfg, "detector.min_fixation_ms", &f.min_fixation)?;
    set_opt(cfg, "detector.min_saccade_ms", &f.min_saccade)?;
    set_opt(cfg, "detector.px_per_degree", &f.px_per_degree)?;
    set_opt(cfg, "detector.rate_hz", &f.rate)
}

fn apply_svm(cfg: &mut PipelineConfig, f: &SvmFlags) -> Result<(), Error> {
    let kernel = f.kernel.map(|k| match k {
        KernelArg::Linear => "linear",
        KernelArg::Rbf => "rbf",
    });
    set_opt(cfg, "svm.kernel", &kernel)?;
    set_opt(cfg, "svm.c", &f.c)?;
    set_opt(cfg, "svm.gamma", &f.gamma)?;
    set_opt(cfg, "svm.tol", &f.tol)
}

/// Writes `bytes` to a temporary file next to `path` and renames it into place.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Error> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".config");
    PathBuf::from(s)
}

/// Writes all outputs only after every one of them has been rendered.
fn commit(outputs: Vec<(PathBuf, Vec<u8>)>) -> Result<(), Error> {
    for (path, bytes) in &outputs {
        write_atomic(path, bytes)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<String, Error> {
    let mut cfg = load_config(&cli)?;
    match cli.command {
        Command::Detect(a) => detect(&mut cfg, a),
        Command::Features(a) => features(&mut cfg, a),
        Command::Train(a) => train(&mut cfg, a),
        Command::Predict(a) => predict(a),
        Command::Cv(a) => cv(&mut cfg, a),
        Command::Rank(a) => rank(a),
        Command::Synth(a) => synth(&mut cfg, a),
        Command::Report(a) => report(a),
    }
}

fn meta(cfg: &PipelineConfig, id: String, label: Option<ExpertiseClass>) -> RecordingMeta {
    RecordingMeta {
        participant_id: id,
        label,
        nominal_rate: cfg.detector.nominal_rate,
        px_per_degree: cfg.detector.px_per_degree,
    }
}

fn read_recording(path: &Path, meta: RecordingMeta) -> Result<gazemetric::Recording, Error> {
    let file = File::open(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    parse_recording(BufReader::new(file), &ColumnMapping::default(), meta)
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn detect(cfg: &mut PipelineConfig, a: DetectArgs) -> Result<String, Error> {
    apply_detector(cfg, &a.detector)?;
    let rec = read_recording(&a.input, meta(cfg, stem(&a.input), None))?;
    let events = detect_events(&rec, &cfg.detector, &cfg.gaps)?;
    let out = a
        .out
        .unwrap_or_else(|| a.input.with_file_name(format!("{}.events.csv", stem(&a.input))));
    let mut buf = Vec::new();
    write_events(&events, &mut buf)?;
    commit(vec![(sidecar(&out), cfg.to_text().into_bytes()), (out.clone(), buf)])?;
    Ok(format!(
        "detect: {} fixations, {} saccades -> {}",
        events.fixations.len(),
        events.saccades.len(),
        out.display()
    ))
}

fn extract_recordings(
    cfg: &PipelineConfig,
    recs: Vec<gazemetric::Recording>,
) -> Result<FeatureMatrix, Error> {
    let mut pairs = Vec::with_capacity(recs.len());
    for rec in recs {
        let cleaned = clean_gaps(&rec, &cfg.gaps);
        let events = detect_events(&cleaned, &cfg.detector, &cfg.gaps)?;
        pairs.push((events, cleaned));
    }
    build_feature_matrix(&pairs, cfg.velocity)
}

fn load_manifest_recordings(cfg: &PipelineConfig, dir: &Path) -> Result<FeatureMatrix, Error> {
    let manifest = dir.join("cohort.csv");
    let file = File::open(&manifest).map_err(|e| Error::Parse(format!("{}: {e}", manifest.display())))?;
    let entries = read_cohort_manifest(BufReader::new(file))?;
    if entries.is_empty() {
        return Err(Error::Parse(format!("{} lists no recordings", manifest.display())));
    }
    let recs = entries
        .into_iter()
        .map(|e| read_recording(&dir.join(&e.file), meta(cfg, e.participant_id, e.label)))
        .collect::<Result<Vec<_>, _>>()?;
    extract_recordings(cfg, recs)
}

fn read_matrix(path: &Path) -> Result<FeatureMatrix, Error> {
    let file = File::open(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    FeatureMatrix::read_csv(BufReader::new(file))
}

/// A feature CSV, a directory with `features.csv`, or a directory with a
/// `cohort.csv` manifest of recordings.
fn load_cohort(cfg: &PipelineConfig, path: &Path) -> Result<FeatureMatrix, Error> {
    if path.is_dir() {
        let features = path.join("features.csv");
        if features.is_file() {
            read_matrix(&features)
        } else {
            load_manifest_recordings(cfg, path)
        }
    } else {
        read_matrix(path)
    }
}

fn matrix_bytes(m: &FeatureMatrix) -> Result<Vec<u8>, Error> {
    let mut buf = Vec::new();
    m.write_csv(&mut buf)?;
    Ok(buf)
}

fn features(cfg: &mut PipelineConfig, a: FeaturesArgs) -> Result<String, Error> {
    apply_detector(cfg, &a.detector)?;
    let velocity = a.velocity.map(|v| match v {
        Velocity::Peak => "peak",
        Velocity::Mean => "mean",
    });
    set_opt(cfg, "features.velocity", &velocity)?;
    let m = match (&a.cohort, &a.input) {
        (Some(dir), None) => load_manifest_recordings(cfg, dir)?,
        (None, Some(input)) => {
            let label = a.label.as_deref().map(str::parse).transpose()?;
            let id = a.id.clone().unwrap_or_else(|| stem(input));
            extract_recordings(cfg, vec![read_recording(input, meta(cfg, id, label))?])?
        }
        _ => return Err(Error::Config("features needs exactly one of --cohort or --in".into())),
    };
    commit(vec![(sidecar(&a.out), cfg.to_text().into_bytes()), (a.out.clone(), matrix_bytes(&m)?)])?;
    Ok(format!("features: {} participants x {} features -> {}", m.n_rows(), m.n_cols(), a.out.display()))
}

fn column_subset(m: &FeatureMatrix, choice: &str) -> Result<FeatureMatrix, Error> {
    match choice.parse::<FeatureChoice>()? {
        FeatureChoice::All => Ok(m.clone()),
        FeatureChoice::TopK => Err(Error::Config("train takes `all`, `table2` or a column list".into())),
        FeatureChoice::List(names) => {
            let refs: Vec<&str> = names.iter().map(String::as_str).collect();
            Ok(m.select(&m.resolve(&refs)?))
        }
    }
}

fn train(cfg: &mut PipelineConfig, a: TrainArgs) -> Result<String, Error> {
    apply_svm(cfg, &a.svm)?;
    set_opt(cfg, "cv.seed", &a.seed)?;
    let m = column_subset(&read_matrix(&a.features)?, &a.columns)?;
    let model = train_multiclass(&m, &cfg.svm(m.n_cols(), cfg.seed))?;
    let ranking = feature_importance(&model);
    let mut buf = Vec::new();
    save_model(&model, &mut buf)?;
    commit(vec![(sidecar(&a.out), cfg.to_text().into_bytes()), (a.out.clone(), buf)])?;
    Ok(format!(
        "train: {} rows, {} features, most important {} -> {}",
        m.n_rows(),
        m.n_cols(),
        ranking.top(1).first().copied().unwrap_or("-"),
        a.out.display()
    ))
}

fn predict(a: PredictArgs) -> Result<String, Error> {
    let file = File::open(&a.model).map_err(|e| Error::Parse(format!("{}: {e}", a.model.display())))?;
    let model = load_model(BufReader::new(file))?;
    let m = read_matrix(&a.features)?;
    let predicted = predict_matrix(&model, &m)?;
    let mut out = String::from("participant_id,label,predicted\n");
    let mut correct = 0;
    let mut labelled = 0;
    for ((id, label), p) in m.ids.iter().zip(&m.labels).zip(&predicted) {
        if let Some(l) = label {
            labelled += 1;
            correct += usize::from(l == p);
        }
        out.push_str(&format!("{id},{},{}\n", label.map(|l| l.name()).unwrap_or(""), p.name()));
    }
    commit(vec![(a.out.clone(), out.into_bytes())])?;
    let acc = if labelled > 0 {
        format!(", {correct}/{labelled} correct")
    } else {
        String::new()
    };
    Ok(format!("predict: {} rows{acc} -> {}", predicted.len(), a.out.display()))
}

fn report_bytes(r: &AggregateReport, cfg: &PipelineConfig) -> Result<Vec<u8>, Error> {
    let mut r = r.clone();
    r.pipeline = cfg.to_kv().into_iter().collect::<BTreeMap<_, _>>();
    let mut text = r.to_json()?;
    text.push('\n');
    Ok(text.into_bytes())
}

fn cv(cfg: &mut PipelineConfig, a: CvArgs) -> Result<String, Error> {
    apply_detector(cfg, &a.detector)?;
    apply_svm(cfg, &a.svm)?;
    set_opt(cfg, "cv.runs", &a.runs)?;
    set_opt(cfg, "cv.seed", &a.seed)?;
    set_opt(cfg, "cv.features", &a.features)?;
    set_opt(cfg, "cv.top_k", &a.top_k)?;
    if a.serial {
        cfg.set("cv.parallel", "false")?;
    }
    let out = a.out.unwrap_or_else(|| PathBuf::from("report.json"));
    let cohort = load_cohort(cfg, &a.cohort)?;
    let cv_cfg = cfg.cv(cohort.n_cols());
    match cfg.features {
        FeatureChoice::TopK => {
            let w = reduced_model_workflow(&cohort, &cv_cfg)?;
            let full_path = out.with_extension("full.json");
            commit(vec![
                (full_path.clone(), report_bytes(&w.full, cfg)?),
                (out.clone(), report_bytes(&w.reduced, cfg)?),
            ])?;
            Ok(format!(
                "cv: full {} features mean accuracy {:.4}, reduced [{}] mean accuracy {:.4} over {} runs -> {} (full pass {})",
                w.full.columns.len(),
                w.full.summary.accuracy.mean,
                w.reduced.columns.join(","),
                w.reduced.summary.accuracy.mean,
                cv_cfg.runs,
                out.display(),
                full_path.display()
            ))
        }
        _ => {
            let r = run_repeated_cv(&cohort, &cv_cfg)?;
            commit(vec![(out.clone(), report_bytes(&r, cfg)?)])?;
            Ok(format!(
                "cv: {} runs, {} features, mean accuracy {:.4} -> {}",
                r.runs.len(),
                r.columns.len(),
                r.summary.accuracy.mean,
                out.display()
            ))
        }
    }
}

fn read_report(path: &Path) -> Result<AggregateReport, Error> {
    let text = fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    AggregateReport::from_json(&text)
}

fn rank(a: RankArgs) -> Result<String, Error> {
    let r = read_report(&a.report)?;
    let k = a.k.unwrap_or(r.frequency.k);
    if k == 0 || k > r.columns.len() {
        return Err(Error::Config(format!("k must be in 1..={}", r.columns.len())));
    }
    let table = rank_feature_frequency(&r.runs, &r.columns, k)?;
    let mut csv = String::from("rank,feature,count\n");
    for (i, e) in table.ranked().iter().enumerate() {
        csv.push_str(&format!("{},{},{}\n", i + 1, e.feature, e.count));
    }
    if let Some(out) = &a.out {
        commit(vec![(out.clone(), csv.into_bytes())])?;
    } else {
        print!("{csv}");
    }
    Ok(format!("rank: top-{k} over {} runs: {}", table.runs, table.top(k).join(", ")))
}

fn synth(cfg: &mut PipelineConfig, a: SynthArgs) -> Result<String, Error> {
    set_opt(cfg, "synth.per_class", &a.per_class)?;
    set_opt(cfg, "synth.seed", &a.seed)?;
    set_opt(cfg, "synth.duration_s", &a.duration)?;
    set_opt(cfg, "synth.noise_px", &a.noise)?;
    set_opt(cfg, "synth.dispersion", &a.dispersion)?;
    let profiles: [ClassProfile; 3] = match a.preset {
        Preset::Table2 => builtin_profiles(),
        Preset::Identical => identical_profiles(&ClassProfile::neutral(ExpertiseClass::Expert, cfg.dispersion)),
    }
    .map(|p| p.with_dispersion(cfg.dispersion));
    let dir = a.out;
    let mut outputs = vec![(dir.join("synth.config"), cfg.to_text().into_bytes())];
    let summary = match a.level {
        Level::Features => {
            let m = generate_feature_cohort(&profiles, cfg.synth.per_class, cfg.synth.seed)?;
            outputs.push((dir.join("features.csv"), matrix_bytes(&m)?));
            format!("synth: {} feature vectors -> {}", m.n_rows(), dir.join("features.csv").display())
        }
        Level::Signal => {
            let cohort = generate_signal_cohort(&profiles, &cfg.synth)?;
            let mut entries = Vec::with_capacity(cohort.len());
            let mut truths = Vec::with_capacity(cohort.len());
            for (rec, truth) in cohort {
                let file = format!("{}.csv", rec.participant_id);
                let mut buf = Vec::new();
                write_recording(&rec, &mut buf)?;
                outputs.push((dir.join(&file), buf));
                entries.push(CohortEntry {
                    participant_id: rec.participant_id.clone(),
                    label: rec.label,
                    file,
                });
                truths.push(truth);
            }
            let mut gt = Vec::new();
            write_ground_truth(&truths, &mut gt)?;
            outputs.push((dir.join("ground_truth.csv"), gt));
            let mut manifest = Vec::new();
            write_cohort_manifest(&entries, &mut manifest)?;
            outputs.push((dir.join("cohort.csv"), manifest));
            format!("synth: {} recordings -> {}", entries.len(), dir.display())
        }
    };
    commit(outputs)?;
    Ok(summary)
}

fn report(a: ReportArgs) -> Result<String, Error> {
    let r = read_report(&a.report)?;
    let table = render::render_report(&r);
    match &a.out {
        Some(out) => {
            commit(vec![(out.clone(), table.into_bytes())])?;
            Ok(format!("report: {} runs -> {}", r.runs.len(), out.display()))
        }
        None => {
            print!("{table}");
            Ok(format!("report: {} runs, mean accuracy {:.4}", r.runs.len(), r.summary.accuracy.mean))
        }
    }
}
