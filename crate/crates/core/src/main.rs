use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use asanakit::benchmark::{default_gbdt_search, render_benchmark, run_benchmark, table1_configs, BenchTarget};
use asanakit::classifiers::{load_model_file, save_model_file, train, Family, ModelSpec, ParamValue, TrainedModel};
use asanakit::correction::{evaluate_pose, profile_from_samples, PoseProfile, ProfileSet};
use asanakit::dataset::{
    class_summary, load_dataset, load_recording, save_dataset, save_recording, synth_mudra_dataset, synth_recording,
    Dataset, SplitSpec,
};
use asanakit::geometry::extract_features;
use asanakit::metrics::{report_csv, ConfusionMatrix};
use asanakit::session::{activity_report, DateRange, LogStore, Server, SessionConfig, SessionManager};
use asanakit::skeleton::{LandmarkFrame, DEFAULT_MIN_CONFIDENCE};

const DEFAULT_SEED: u64 = 42;

#[derive(Parser)]
#[command(name = "asanakit", version, about = "Yoga pose and hand-mudra recognition toolkit")]
struct Cli {
    /// Random seed (also ASANAKIT_SEED, then the config file, then 42).
    #[arg(long, global = true, env = "ASANAKIT_SEED")]
    seed: Option<u64>,
    /// Directory for models, profiles and session logs (also ASANAKIT_DATA_DIR).
    #[arg(long, global = true, env = "ASANAKIT_DATA_DIR")]
    data_dir: Option<PathBuf>,
    /// TOML file with defaults for data_dir, model_path, profiles_dir, seed and log_level.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// error, warn, info, debug or trace.
    #[arg(long, global = true)]
    log_level: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic mudra dataset (CSV) or a synthetic recording (JSON lines).
    Synth(SynthArgs),
    /// Fit one model and save it.
    Train(TrainArgs),
    /// Run every model-comparison configuration on an 80:20 split.
    Bench(BenchArgs),
    /// Label a feature CSV or a recording with a saved model.
    Predict(PredictArgs),
    /// Build, check or apply pose profiles.
    #[command(subcommand)]
    Profile(ProfileCommand),
    /// Serve live sessions over wire protocol v1.
    Serve(ServeArgs),
    /// Print a user's activity report.
    Report(ReportArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// Samples per mudra class.
    #[arg(long, default_value_t = 500, value_parser = clap::value_parser!(u64).range(2..))]
    per_class: u64,
    /// Gaussian jitter of every finger joint, degrees.
    #[arg(long, default_value_t = 6.0)]
    noise: f64,
    /// Write a recording of this mudra instead of a dataset.
    #[arg(long)]
    recording: Option<String>,
    /// Frames in the recording.
    #[arg(long, default_value_t = 300)]
    frames: usize,
    /// Recording frame rate.
    #[arg(long, default_value_t = 30.0)]
    fps: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    /// knn, decision_tree, random_forest, gaussian_nb, logistic_regression, linear_svm, mlp, gbdt or one_vs_rest.
    #[arg(long)]
    family: String,
    /// Inner family for one_vs_rest.
    #[arg(long)]
    inner: Option<String>,
    /// Hyperparameter as key=value; repeatable.
    #[arg(long = "param", value_name = "KEY=VALUE")]
    params: Vec<String>,
    /// Tune a gbdt with the default random search instead of fixed parameters.
    #[arg(long)]
    search: bool,
    /// Training dataset CSV.
    #[arg(long)]
    data: PathBuf,
    /// Model output path (default: <data-dir>/model.bin or model_path from the config).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Dataset CSV.
    #[arg(long)]
    data: PathBuf,
    /// Also write the table here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-class report of the best model as CSV.
    #[arg(long)]
    report_csv: Option<PathBuf>,
    /// Confusion matrix of the best model as CSV.
    #[arg(long)]
    matrix_csv: Option<PathBuf>,
    /// Confusion-matrix heatmap as a greyscale PGM image.
    #[arg(long)]
    heatmap: Option<PathBuf>,
    /// Search iterations for the gbdt row.
    #[arg(long, default_value_t = 10)]
    n_iter: usize,
    /// Cross-validation folds for the gbdt row.
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(2..))]
    cv_folds: u64,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: Option<PathBuf>,
    /// Feature CSV (`.csv`) or recording (`.jsonl`).
    #[arg(long)]
    data: PathBuf,
    /// Write per-row predictions here as CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum ProfileCommand {
    /// Derive an angle profile from exemplar samples of one pose.
    Build(ProfileBuildArgs),
    /// Validate profile files.
    Check {
        /// Profile files or directories.
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
    /// Evaluate every frame of a recording against a profile.
    Eval {
        #[arg(long)]
        profile: PathBuf,
        #[arg(long)]
        frames: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MIN_CONFIDENCE)]
        min_confidence: f64,
    },
}

#[derive(Args)]
struct ProfileBuildArgs {
    /// Feature CSV (`.csv`) or recording (`.jsonl`) of exemplars.
    #[arg(long)]
    data: PathBuf,
    /// Pose to take from a CSV, or the id to give a recording's profile.
    #[arg(long)]
    pose: String,
    #[arg(long, default_value_t = 2.0)]
    k_sigma: f64,
    #[arg(long, default_value_t = 5.0)]
    floor: f64,
    /// Output YAML (default: <profiles-dir>/<pose>.yaml).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long)]
    model: Option<PathBuf>,
    /// Directory of profile YAML files (default: <data-dir>/profiles if present).
    #[arg(long)]
    profiles: Option<PathBuf>,
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    /// 0 picks a free port.
    #[arg(long, default_value_t = 7878)]
    port: u16,
    /// Smoothing window in frames.
    #[arg(long, default_value_t = 15)]
    window: usize,
    /// Exit after serving this many connections.
    #[arg(long)]
    max_connections: Option<usize>,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    user: String,
    /// `7d` (last seven days) or `YYYY-MM-DD..YYYY-MM-DD`.
    #[arg(long, default_value = "7d")]
    window: String,
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    data_dir: Option<PathBuf>,
    model_path: Option<PathBuf>,
    profiles_dir: Option<PathBuf>,
    seed: Option<u64>,
    log_level: Option<String>,
}

/// Settings after applying flags > environment > config file > defaults.
struct CliConfig {
    data_dir: PathBuf,
    model_path: PathBuf,
    profiles_dir: PathBuf,
    seed: u64,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

type CmdResult = Result<(), Failure>;

fn runtime(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn resolve(cli: &Cli) -> Result<(CliConfig, String), Failure> {
    let file = match &cli.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| runtime(format!("{}: {e}", p.display())))?;
            toml::from_str::<FileConfig>(&text).map_err(|e| usage(format!("{}: {e}", p.display())))?
        }
        None => FileConfig::default(),
    };
    let data_dir = cli
        .data_dir
        .clone()
        .or(file.data_dir)
        .unwrap_or_else(|| PathBuf::from("asanakit-data"));
    let config = CliConfig {
        model_path: file.model_path.unwrap_or_else(|| data_dir.join("model.bin")),
        profiles_dir: file.profiles_dir.unwrap_or_else(|| data_dir.join("profiles")),
        seed: cli.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
        data_dir,
    };
    let level = cli.log_level.clone().or(file.log_level).unwrap_or_else(|| "warn".into());
    Ok((config, level))
}

fn write_output(path: &Path, contents: &[u8]) -> CmdResult {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| runtime(format!("{}: {e}", parent.display())))?;
    }
    fs::write(path, contents).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

fn cmd_synth(args: &SynthArgs, cfg: &CliConfig) -> CmdResult {
    if !(args.noise.is_finite() && args.noise >= 0.0) {
        return Err(usage("--noise must be a non-negative number"));
    }
    if let Some(mudra) = &args.recording {
        let frames = synth_recording(mudra, args.frames, args.fps, args.noise, cfg.seed).map_err(usage)?;
        save_recording(&frames, &args.out).map_err(runtime)?;
        println!("wrote {} frames of {mudra} to {}", frames.len(), args.out.display());
        return Ok(());
    }
    let d = synth_mudra_dataset(args.per_class as usize, args.noise, cfg.seed).map_err(usage)?;
    save_dataset(&d, &args.out).map_err(runtime)?;
    for (name, n) in class_summary(&d) {
        println!("{name}\t{n}");
    }
    println!("total\t{}", d.len());
    Ok(())
}

fn parse_params(pairs: &[String]) -> Result<Vec<(String, ParamValue)>, Failure> {
    pairs
        .iter()
        .map(|p| match p.split_once('=') {
            Some((k, v)) if !k.trim().is_empty() => Ok((k.trim().to_string(), ParamValue::parse_loose(v.trim()))),
            _ => Err(usage(format!("--param expects KEY=VALUE, got `{p}`"))),
        })
        .collect()
}

fn family(name: &str) -> Result<Family, Failure> {
    Family::from_tag(name).ok_or_else(|| usage(format!("unknown family `{name}`")))
}

fn build_spec(args: &TrainArgs, seed: u64) -> Result<ModelSpec, Failure> {
    let params = parse_params(&args.params)?;
    let tag = args.family.to_ascii_lowercase().replace('-', "_");
    let mut spec = if matches!(tag.as_str(), "one_vs_rest" | "ovr") {
        let inner = args
            .inner
            .as_deref()
            .ok_or_else(|| usage("one_vs_rest needs --inner FAMILY"))?;
        let mut inner = ModelSpec::new(family(inner)?).with_seed(seed);
        for (k, v) in params {
            inner = inner.with(&k, v);
        }
        ModelSpec::new(Family::OneVsRest(Box::new(inner)))
    } else {
        let mut s = ModelSpec::new(family(&tag)?);
        for (k, v) in params {
            s = s.with(&k, v);
        }
        s
    };
    spec = spec.with_seed(seed);
    spec.validate().map_err(usage)?;
    Ok(spec)
}

fn cmd_train(args: &TrainArgs, cfg: &CliConfig) -> CmdResult {
    let data = load_dataset(&args.data).map_err(runtime)?;
    let spec = if args.search {
        if family(&args.family)? != Family::Gbdt {
            return Err(usage("--search is only available for gbdt"));
        }
        let r = asanakit::classifiers::random_search_cv(&default_gbdt_search(cfg.seed), &data).map_err(runtime)?;
        println!("search picked {} (cv accuracy {:.4})", r.best_spec, r.best_cv_accuracy);
        r.best_spec
    } else {
        build_spec(args, cfg.seed)?
    };
    let model = train(&spec, &data).map_err(runtime)?;
    let out = args.out.clone().unwrap_or_else(|| cfg.model_path.clone());
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(runtime)?;
    }
    save_model_file(&model, &out).map_err(runtime)?;
    println!("trained {} on {} samples; saved to {}", model.spec, data.len(), out.display());
    Ok(())
}

fn cmd_bench(args: &BenchArgs, cfg: &CliConfig) -> CmdResult {
    let data = load_dataset(&args.data).map_err(runtime)?;
    let mut configs = table1_configs(cfg.seed);
    for c in &mut configs {
        if let BenchTarget::Search(s) = &mut c.target {
            s.n_iter = args.n_iter.max(1);
            s.cv_folds = args.cv_folds as usize;
        }
    }
    let outcome = run_benchmark(&data, &SplitSpec::with_seed(cfg.seed), &configs).map_err(runtime)?;
    let text = render_benchmark(&outcome);
    print!("{text}");
    if let Some(p) = &args.out {
        write_output(p, text.as_bytes())?;
    }
    if let Some(p) = &args.report_csv {
        write_output(p, report_csv(&outcome.best_report).as_bytes())?;
    }
    if let Some(p) = &args.matrix_csv {
        write_output(p, outcome.best_matrix.to_csv().as_bytes())?;
    }
    if let Some(p) = &args.heatmap {
        let mut buf = Vec::new();
        outcome.best_matrix.write_pgm(32, &mut buf).map_err(runtime)?;
        write_output(p, &buf)?;
    }
    Ok(())
}

fn is_recording(path: &Path) -> bool {
    matches!(path.extension().and_then(|e| e.to_str()), Some("jsonl" | "ndjson"))
}

fn load_model(path: Option<&PathBuf>, cfg: &CliConfig) -> Result<TrainedModel, Failure> {
    let path = path.cloned().unwrap_or_else(|| cfg.model_path.clone());
    load_model_file(&path).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

fn cmd_predict(args: &PredictArgs, cfg: &CliConfig) -> CmdResult {
    let model = load_model(args.model.as_ref(), cfg)?;
    let mut out = String::from("row,source,predicted,score,truth\n");
    if is_recording(&args.data) {
        let frames = load_recording(&args.data).map_err(runtime)?;
        for (i, f) in frames.iter().enumerate() {
            match extract_features(f, model.kind.topology(), DEFAULT_MIN_CONFIDENCE) {
                Ok(fv) => {
                    let p = model.predict(&fv).map_err(runtime)?;
                    out.push_str(&format!("{i},ts={},{},{},\n", f.timestamp_ms, model.label_name(p.label), p.scores[p.label]));
                }
                Err(e) => {
                    log::warn!("frame {i}: {e}");
                    out.push_str(&format!("{i},ts={},,,\n", f.timestamp_ms));
                }
            }
        }
        println!("labelled {} frames", frames.len());
    } else {
        let data = load_dataset(&args.data).map_err(runtime)?;
        let mut matrix = ConfusionMatrix::new(model.class_names.clone());
        let comparable = data.class_names == model.class_names;
        for (i, s) in data.samples.iter().enumerate() {
            let p = model.predict(&s.features).map_err(runtime)?;
            out.push_str(&format!(
                "{i},{},{},{},{}\n",
                s.source_id,
                model.label_name(p.label),
                p.scores[p.label],
                s.label_name
            ));
            if comparable {
                matrix.record(s.label, p.label);
            }
        }
        if comparable {
            println!("accuracy: {:.4} ({}/{})", matrix.accuracy(), matrix.trace(), matrix.total());
        } else {
            println!("labelled {} samples (class lists differ from the model's; no accuracy)", data.len());
        }
    }
    if let Some(p) = &args.out {
        write_output(p, out.as_bytes())?;
    }
    Ok(())
}

fn exemplars(path: &Path, pose: &str) -> Result<Dataset, Failure> {
    if is_recording(path) {
        let frames = load_recording(path).map_err(runtime)?;
        let kind = frames.first().map(|f| f.kind).ok_or_else(|| usage("recording is empty"))?;
        let mut d = Dataset::new(kind, vec![pose.to_string()]);
        for (i, f) in frames.iter().enumerate() {
            match extract_features(f, kind.topology(), DEFAULT_MIN_CONFIDENCE) {
                Ok(fv) => d.push(pose, format!("frame:{i}"), fv.values).map_err(runtime)?,
                Err(e) => log::warn!("skipping frame {i}: {e}"),
            }
        }
        Ok(d)
    } else {
        let d = load_dataset(path).map_err(runtime)?;
        d.restrict_to_class(pose)
            .ok_or_else(|| usage(format!("pose `{pose}` is not in {}", path.display())))
    }
}

fn cmd_profile(cmd: &ProfileCommand, cfg: &CliConfig) -> CmdResult {
    match cmd {
        ProfileCommand::Build(a) => {
            let d = exemplars(&a.data, &a.pose)?;
            let profile = profile_from_samples(&d, a.k_sigma, a.floor).map_err(usage)?;
            let out = a
                .out
                .clone()
                .unwrap_or_else(|| cfg.profiles_dir.join(format!("{}.yaml", a.pose)));
            write_output(&out, profile.to_yaml().as_bytes())?;
            println!(
                "wrote profile {} ({} constraints from {} samples) to {}",
                profile.pose_id,
                profile.constraint_count(),
                d.len(),
                out.display()
            );
            Ok(())
        }
        ProfileCommand::Check { paths } => {
            let mut bad = 0;
            for p in paths {
                let result = if p.is_dir() {
                    ProfileSet::load_dir(p).map(|s| format!("{} profiles", s.len()))
                } else {
                    PoseProfile::load(p).map(|pr| format!("{} ({} constraints)", pr.pose_id, pr.constraint_count()))
                };
                match result {
                    Ok(msg) => println!("ok   {}: {msg}", p.display()),
                    Err(e) => {
                        bad += 1;
                        println!("FAIL {}: {e}", p.display());
                    }
                }
            }
            if bad > 0 {
                Err(runtime(format!("{bad} invalid profile path(s)")))
            } else {
                Ok(())
            }
        }
        ProfileCommand::Eval {
            profile,
            frames,
            min_confidence,
        } => {
            let profile = PoseProfile::load(profile).map_err(runtime)?;
            let frames: Vec<LandmarkFrame> = load_recording(frames).map_err(runtime)?;
            let mut correct = 0;
            for (i, f) in frames.iter().enumerate() {
                let r = evaluate_pose(f, &profile, *min_confidence).map_err(runtime)?;
                correct += usize::from(r.correct);
                let hints: Vec<&str> = r.deviations.iter().map(|d| d.message.as_str()).collect();
                println!(
                    "{i}\t{}\t{}",
                    if r.correct { "correct" } else { "adjust" },
                    hints.join("; ")
                );
            }
            println!("correct: {correct}/{}", frames.len());
            Ok(())
        }
    }
}

fn cmd_serve(args: &ServeArgs, cfg: &CliConfig) -> CmdResult {
    let model = load_model(args.model.as_ref(), cfg)?;
    let profiles = match &args.profiles {
        Some(dir) => ProfileSet::load_dir(dir).map_err(runtime)?,
        None if cfg.profiles_dir.is_dir() => ProfileSet::load_dir(&cfg.profiles_dir).map_err(runtime)?,
        None => ProfileSet::default(),
    };
    if args.window == 0 {
        return Err(usage("--window must be at least 1"));
    }
    let store = LogStore::open(cfg.data_dir.join("sessions")).map_err(runtime)?;
    let config = SessionConfig {
        window: args.window,
        ..SessionConfig::default()
    };
    let manager = SessionManager::new(Arc::new(model), Arc::new(profiles), Arc::new(store), config);
    let server = Server::bind((args.host.as_str(), args.port), Arc::new(manager)).map_err(runtime)?;
    let addr = server.local_addr().map_err(runtime)?;
    println!("listening on {addr}");
    println!("port {}", addr.port());
    std::io::stdout().flush().map_err(runtime)?;
    server.run_until(args.max_connections).map_err(runtime)
}

fn parse_window(text: &str) -> Result<DateRange, Failure> {
    let today = chrono::Utc::now().date_naive();
    if let Some(days) = text.strip_suffix('d') {
        let days: u32 = days
            .parse()
            .ok()
            .filter(|&d| d >= 1)
            .ok_or_else(|| usage(format!("bad window `{text}`")))?;
        return Ok(DateRange::last_days(today, days));
    }
    let (a, b) = text
        .split_once("..")
        .ok_or_else(|| usage(format!("bad window `{text}` (use 7d or FROM..TO)")))?;
    let date = |s: &str| {
        chrono::NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d").map_err(|e| usage(format!("bad date `{s}`: {e}")))
    };
    let (from, to) = (date(a)?, date(b)?);
    if from > to {
        return Err(usage("window start is after its end"));
    }
    Ok(DateRange::new(from, to))
}

fn cmd_report(args: &ReportArgs, cfg: &CliConfig) -> CmdResult {
    let window = parse_window(&args.window)?;
    let store = LogStore::open(cfg.data_dir.join("sessions")).map_err(runtime)?;
    let report = activity_report(&args.user, window, &store).map_err(runtime)?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&report).map_err(runtime)?);
    } else {
        print!("{}", report.to_text());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cfg, level) = match resolve(&cli) {
        Ok(v) => v,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            return ExitCode::from(2);
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            return ExitCode::from(1);
        }
    };
    env_logger::Builder::new().parse_filters(&level).init();
    let result = match &cli.command {
        Command::Synth(a) => cmd_synth(a, &cfg),
        Command::Train(a) => cmd_train(a, &cfg),
        Command::Bench(a) => cmd_bench(a, &cfg),
        Command::Predict(a) => cmd_predict(a, &cfg),
        Command::Profile(c) => cmd_profile(c, &cfg),
        Command::Serve(a) => cmd_serve(a, &cfg),
        Command::Report(a) => cmd_report(a, &cfg),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
