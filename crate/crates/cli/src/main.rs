use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use petjoy_core::petclass::{validate_backend, LabelRecord, MockClassifier, NoiseMatrix, PetClassifier, PetLabel};
use petjoy_core::pipeline::{read_profiles, run_pipeline, ClassifierBackend, FaceBackend, PipelineError, RunConfig};
use petjoy_core::report::build_reports;
use petjoy_core::stats::{compare_subgroups, Factor, Metric, Stratum};
use petjoy_core::synth::{evaluate_pipeline, generate_corpus, read_truth, SynthConfig};

#[derive(Parser)]
#[command(name = "petjoy", version, about = "Pet ownership and well-being analysis over user timelines")]
struct Cli {
    /// More log output (repeat for trace).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    /// Only warnings and errors.
    #[arg(short, long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corpus with planted ground truth.
    Synth(SynthArgs),
    /// Run the full pipeline: ingest, classify, group faces, score, compare.
    Run(RunArgs),
    /// Measure a classifier against a labeled image set.
    ValidateBackend(ValidateArgs),
    /// Multiple-comparison table for one factor over saved profiles.
    Compare(CompareArgs),
    /// Re-emit every table and chart file from saved profiles.
    Report(ReportArgs),
    /// Score saved profiles against synthetic ground truth.
    Evaluate(EvaluateArgs),
}

#[derive(Args)]
struct SynthArgs {
    /// TOML generator config; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "synth")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    users: Option<usize>,
}

#[derive(Args)]
struct RunArgs {
    /// TOML run config; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Corpus file (newline-delimited JSON); repeatable.
    #[arg(long)]
    corpus: Vec<PathBuf>,
    /// Mock classifier sidecar labels.
    #[arg(long, conflicts_with = "classifier_url")]
    labels: Option<PathBuf>,
    #[arg(long)]
    classifier_url: Option<String>,
    /// Mock face annotations.
    #[arg(long, conflicts_with = "faces_url")]
    annotations: Option<PathBuf>,
    #[arg(long)]
    faces_url: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    concurrency: Option<usize>,
    /// Face grouping similarity threshold.
    #[arg(long)]
    tau: Option<f64>,
    /// Reference confusion rates on the mock classifier.
    #[arg(long)]
    classifier_noise: bool,
    #[arg(long)]
    face_sigma: Option<f64>,
    /// Write the merged config as TOML and exit.
    #[arg(long)]
    print_config: bool,
}

#[derive(Args)]
struct ValidateArgs {
    /// Labeled set: one `{"image_ref", "label"}` object per line.
    #[arg(long)]
    labeled: PathBuf,
    /// Mock sidecar labels; defaults to the labeled set itself.
    #[arg(long, conflicts_with = "url")]
    labels: Option<PathBuf>,
    /// Remote classifier endpoint.
    #[arg(long)]
    url: Option<String>,
    #[arg(long)]
    classifier_noise: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 8)]
    concurrency: usize,
    /// Also write the report as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    profiles: PathBuf,
    #[arg(long, default_value = "pet")]
    factor: Factor,
    #[arg(long, default_value = "all")]
    stratum: Stratum,
    #[arg(long, default_value = "visual")]
    metric: Metric,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Emit JSON instead of a tab-separated table.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    profiles: PathBuf,
    #[arg(long, default_value = "reports")]
    out: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    profiles: PathBuf,
    /// `truth.ndjson` written by `synth`.
    #[arg(long)]
    truth: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match (cli.quiet, cli.verbose) {
        (true, _) => "warn",
        (false, 0) => "info",
        (false, 1) => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).format_timestamp(None).init();

    let result = match cli.command {
        Command::Synth(a) => synth(a),
        Command::Run(a) => run(a),
        Command::ValidateBackend(a) => validate(a),
        Command::Compare(a) => compare(a),
        Command::Report(a) => report(a),
        Command::Evaluate(a) => evaluate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            // partial runs get their own code so wrappers can retry
            if matches!(e.downcast_ref::<PipelineError>(), Some(PipelineError::Partial { .. })) {
                ExitCode::from(3)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain().any(|c| c.downcast_ref::<std::io::Error>().is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe))
}

/// Writes to stdout, surfacing a closed pipe as an error instead of a panic.
fn emit(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(())
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn synth(a: SynthArgs) -> Result<()> {
    let mut config = match &a.config {
        Some(p) => SynthConfig::from_toml(&read_text(p)?)?,
        None => SynthConfig::default(),
    };
    if let Some(s) = a.seed {
        config.seed = s;
    }
    if let Some(n) = a.users {
        config.n_users = n;
    }
    let out = generate_corpus(&config)?;
    let files = out.write_to_dir(&a.out)?;
    let eligible = out.truth.eligible().count();
    log::info!(
        "{} users ({eligible} eligible), {} posts written to {}",
        out.truth.records.len(),
        out.posts.len(),
        a.out.display()
    );
    emit(&format!("{}\n", files.corpus.display()))
}

/// Config file first, then flags.
fn merged_run_config(a: &RunArgs) -> Result<RunConfig> {
    let mut config = match &a.config {
        Some(p) => {
            let base = p.parent().unwrap_or(Path::new("."));
            RunConfig::from_toml(&read_text(p)?, base)?
        }
        None => {
            if a.corpus.is_empty() {
                bail!("either --config or at least one --corpus is required");
            }
            let classifier = match (&a.labels, &a.classifier_url) {
                (Some(l), _) => ClassifierBackend::Mock { labels: l.clone(), noise: None },
                (None, Some(u)) => ClassifierBackend::Remote { url: u.clone() },
                (None, None) => bail!("without --config, one of --labels or --classifier-url is required"),
            };
            let faces = match (&a.annotations, &a.faces_url) {
                (Some(p), _) => FaceBackend::Mock { annotations: p.clone(), sigma: 0.0 },
                (None, Some(u)) => FaceBackend::Remote { url: u.clone() },
                (None, None) => bail!("without --config, one of --annotations or --faces-url is required"),
            };
            let mut c = RunConfig::with_mocks(PathBuf::new(), PathBuf::new(), PathBuf::new(), "out".into());
            c.classifier = classifier;
            c.faces = faces;
            c
        }
    };
    if !a.corpus.is_empty() {
        config.corpus = a.corpus.clone();
    }
    if a.config.is_some() {
        if let Some(l) = &a.labels {
            config.classifier = ClassifierBackend::Mock { labels: l.clone(), noise: None };
        }
        if let Some(u) = &a.classifier_url {
            config.classifier = ClassifierBackend::Remote { url: u.clone() };
        }
        if let Some(p) = &a.annotations {
            config.faces = FaceBackend::Mock { annotations: p.clone(), sigma: 0.0 };
        }
        if let Some(u) = &a.faces_url {
            config.faces = FaceBackend::Remote { url: u.clone() };
        }
    }
    if let Some(o) = &a.out {
        config.output_dir = o.clone();
    }
    if let Some(x) = a.alpha {
        config.alpha = x;
    }
    if let Some(s) = a.seed {
        config.seed = s;
    }
    if let Some(c) = a.concurrency {
        config.concurrency = c;
    }
    if let Some(t) = a.tau {
        config.grouping.tau = t;
    }
    if a.classifier_noise {
        match &mut config.classifier {
            ClassifierBackend::Mock { noise, .. } => *noise = Some(NoiseMatrix::reference_classifier()),
            ClassifierBackend::Remote { .. } => bail!("--classifier-noise only applies to the mock classifier"),
        }
    }
    if let Some(s) = a.face_sigma {
        match &mut config.faces {
            FaceBackend::Mock { sigma, .. } => *sigma = s,
            FaceBackend::Remote { .. } => bail!("--face-sigma only applies to the mock face engine"),
        }
    }
    Ok(config)
}

fn run(a: RunArgs) -> Result<()> {
    let config = merged_run_config(&a)?;
    if a.print_config {
        return emit(&config.to_toml()?);
    }
    let artifacts = run_pipeline(&config)?;
    let s = &artifacts.summary;
    log::info!(
        "{} users, {} profiles ({} dog, {} cat, {} none); dropped {} for posts, {} for faces; {} resumed",
        s.users_total,
        s.profiles,
        s.dog_owners,
        s.cat_owners,
        s.non_owners,
        s.dropped_too_few_posts,
        s.dropped_too_few_faces,
        artifacts.resumed_users
    );
    emit(&format!("{}\n", config.output_dir.display()))
}

fn read_labeled(path: &Path) -> Result<Vec<LabelRecord>> {
    let f = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(f).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).with_context(|| format!("{}:{}", path.display(), n + 1))?);
    }
    Ok(out)
}

fn validate(a: ValidateArgs) -> Result<()> {
    let labeled = read_labeled(&a.labeled)?;
    let backend: Box<dyn PetClassifier> = match (&a.url, &a.labels) {
        (Some(url), _) => remote_classifier(url)?,
        (None, sidecar) => {
            let records = match sidecar {
                Some(p) => read_labeled(p)?,
                None => labeled.clone(),
            };
            let mut mock = MockClassifier::from_records(records);
            if a.classifier_noise {
                mock = mock.with_noise(petjoy_core::petclass::ClassifierNoise {
                    matrix: NoiseMatrix::reference_classifier(),
                    seed: a.seed,
                })?;
            }
            Box::new(mock)
        }
    };
    let set: Vec<(String, PetLabel)> = labeled.into_iter().map(|r| (r.image_ref, r.label)).collect();
    let report = validate_backend(&set, backend.as_ref(), a.concurrency.max(1))?;
    emit(&report.matrix.to_tsv())?;
    if let Some(p) = &a.json {
        fs::write(p, serde_json::to_string_pretty(&report)?).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(())
}

#[cfg(feature = "remote")]
fn remote_classifier(url: &str) -> Result<Box<dyn PetClassifier>> {
    use petjoy_core::backend::http::{HttpSettings, RemoteClassifier};
    Ok(Box::new(RemoteClassifier::new(url, HttpSettings::default())))
}

#[cfg(not(feature = "remote"))]
fn remote_classifier(_url: &str) -> Result<Box<dyn PetClassifier>> {
    bail!("this build has no HTTP support")
}

fn compare(a: CompareArgs) -> Result<()> {
    let profiles = read_profiles(&a.profiles)?;
    let table = compare_subgroups(&profiles, a.factor, a.stratum, a.metric, a.alpha)?;
    if a.json {
        emit(&format!("{}\n", serde_json::to_string_pretty(&table)?))
    } else {
        emit(&table.to_tsv())
    }
}

fn report(a: ReportArgs) -> Result<()> {
    let profiles = read_profiles(&a.profiles)?;
    let reports = build_reports(&profiles, a.alpha)?;
    let files = reports.write_to_dir(&a.out)?;
    log::info!("{} report files written to {}", files.len(), a.out.display());
    emit(&format!("{}\n", a.out.display()))
}

fn evaluate(a: EvaluateArgs) -> Result<()> {
    let profiles = read_profiles(&a.profiles)?;
    let truth = read_truth(&a.truth)?;
    let report = evaluate_pipeline(&profiles, &truth)?;
    emit(&format!("{}\n", serde_json::to_string_pretty(&report)?))
}
