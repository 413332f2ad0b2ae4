//! Command implementations for the `defakehop` binary.
//!
//! Each command writes its human-readable output to the given writer so
//! tests can drive commands without spawning processes.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use defakehop::config::RunConfig;
use defakehop::ingest::DatasetManifest;
use defakehop::persist::{load_model, save_model};
use defakehop::pipeline::{
    audit_parameters, audit_shape, evaluate, landmark_discriminability, landmark_table, train_detector, BlockSelector,
    ModelShape,
};
use defakehop::select::cost_table;
use defakehop::source::FsFrameSource;
use defakehop::synth::{SynthConfig, SyntheticCorpus};
use defakehop::Error;

pub type Result<T> = std::result::Result<T, Error>;

pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_IO: i32 = 4;
pub const EXIT_TRAINING: i32 = 5;
pub const EXIT_INTEGRITY: i32 = 6;

#[derive(Debug, Parser)]
#[command(name = "defakehop", version, about = "Lightweight fake-face detector")]
pub struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a detector and write the model file.
    Train(TrainArgs),
    /// Score a manifest and report frame- and video-level AUC.
    Evaluate(EvaluateArgs),
    /// Print the parameter budget of a model.
    Audit(AuditArgs),
    /// Per-landmark discriminability table.
    AnalyzeLandmarks(AnalyzeArgs),
    /// Write a synthetic corpus (PNG frames plus train/test manifests).
    Synth(SynthArgs),
    /// Export each block's discriminant feature test costs.
    Costs(CostsArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output model file.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also write the parameter report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    /// Directory for `frames.tsv`, `videos.tsv` and `summary.tsv`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    /// Model to audit. Without it, audits the reference geometry.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Training manifest.
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub test_manifest: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub videos: usize,
    #[arg(long, default_value_t = 10)]
    pub frames: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.3)]
    pub test_fraction: f64,
    /// Half-width of the noise planted in fake eye regions.
    #[arg(long, default_value_t = 0.12)]
    pub noise: f64,
}

#[derive(Debug, Args)]
pub struct CostsArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Output directory, one TSV per block.
    #[arg(long)]
    pub out: PathBuf,
}

/// Exit status for an error: validation 3, I/O 4, training 5, integrity 6.
pub fn exit_code(err: &Error) -> i32 {
    match err.root() {
        Error::Parse { .. } | Error::Validation(_) | Error::Argument(_) | Error::Geometry(_) | Error::Config(_) => {
            EXIT_VALIDATION
        }
        Error::Io { .. } | Error::Image { .. } => EXIT_IO,
        Error::InsufficientData { .. } | Error::Fitting(_) | Error::Metric(_) => EXIT_TRAINING,
        Error::Integrity(_) => EXIT_INTEGRITY,
        Error::Stage { .. } => unreachable!("root strips stages"),
    }
}

fn stdout_error(e: std::io::Error) -> Error {
    Error::Io {
        path: "<output>".into(),
        source: e,
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn load_manifest(path: &Path) -> Result<DatasetManifest> {
    if !path.is_file() {
        return Err(Error::Io {
            path: path.to_path_buf(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "manifest not found"),
        });
    }
    DatasetManifest::load(path)
}

/// Rewrites image references relative to the manifest's directory as full
/// paths, so manifests from different directories share one source.
fn with_resolved_refs(manifest: DatasetManifest, path: &Path) -> Result<DatasetManifest> {
    let source = FsFrameSource::for_manifest(path);
    let split = manifest.split;
    let records = manifest
        .records()
        .iter()
        .cloned()
        .map(|mut r| {
            r.image_ref = source.resolve(&r.image_ref).to_string_lossy().into_owned();
            r
        })
        .collect();
    DatasetManifest::new(split, records)
}

fn load_config(path: Option<&Path>, seed: Option<u64>) -> Result<RunConfig> {
    let config = match path {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    Ok(match seed {
        Some(s) => config.with_seed(s),
        None => config,
    })
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Train(a) => cmd_train(a, out),
        Command::Evaluate(a) => cmd_evaluate(a, out),
        Command::Audit(a) => cmd_audit(a, out),
        Command::AnalyzeLandmarks(a) => cmd_analyze_landmarks(a, out),
        Command::Synth(a) => cmd_synth(a, out),
        Command::Costs(a) => cmd_costs(a, out),
    }
}

pub fn cmd_train(args: &TrainArgs, out: &mut dyn Write) -> Result<()> {
    let config = load_config(args.config.as_deref(), args.seed)?;
    let manifest = load_manifest(&args.manifest)?;
    let source = FsFrameSource::for_manifest(&args.manifest);
    let model = train_detector(&manifest, &source, &config)?;
    save_model(&model, &args.model)?;
    let report = audit_parameters(&model);
    if let Some(p) = &args.out {
        write_file(p, &report.to_tsv())?;
    }
    writeln!(
        out,
        "trained on {} frames: {} features, {} trees\n{report}\nmodel written to {}",
        manifest.len(),
        model.num_features(),
        model.classifier.trees.len(),
        args.model.display()
    )
    .map_err(stdout_error)
}

pub fn cmd_evaluate(args: &EvaluateArgs, out: &mut dyn Write) -> Result<()> {
    let model = load_model(&args.model)?;
    let manifest = load_manifest(&args.manifest)?;
    let source = FsFrameSource::for_manifest(&args.manifest);
    let report = evaluate(&model, &manifest, &source)?;
    if let Some(dir) = &args.out {
        create_dir(dir)?;
        write_file(&dir.join("frames.tsv"), &report.frames_tsv())?;
        write_file(&dir.join("videos.tsv"), &report.videos_tsv())?;
        write_file(&dir.join("summary.tsv"), &report.summary())?;
    }
    write!(out, "{}", report.summary()).map_err(stdout_error)
}

pub fn cmd_audit(args: &AuditArgs, out: &mut dyn Write) -> Result<()> {
    let report = match &args.model {
        Some(p) => audit_parameters(&load_model(p)?),
        None => audit_shape(&ModelShape::reference()),
    };
    if let Some(p) = &args.out {
        write_file(p, &report.to_tsv())?;
    }
    writeln!(out, "{report}").map_err(stdout_error)
}

pub fn cmd_analyze_landmarks(args: &AnalyzeArgs, out: &mut dyn Write) -> Result<()> {
    let config = load_config(args.config.as_deref(), args.seed)?;
    let train = with_resolved_refs(load_manifest(&args.manifest)?, &args.manifest)?;
    let test = with_resolved_refs(load_manifest(&args.test_manifest)?, &args.test_manifest)?;
    let source = FsFrameSource::new("");
    let aucs = landmark_discriminability(&train, &test, &source, &config)?;
    let table = landmark_table(&aucs);
    if let Some(p) = &args.out {
        write_file(p, &table)?;
    }
    write!(out, "{table}").map_err(stdout_error)
}

pub fn cmd_synth(args: &SynthArgs, out: &mut dyn Write) -> Result<()> {
    let corpus = SyntheticCorpus::generate(SynthConfig {
        videos: args.videos,
        frames_per_video: args.frames,
        noise_amplitude: args.noise,
        seed: args.seed,
        ..SynthConfig::default()
    })?;
    let (train, test) = corpus.write(&args.out, args.test_fraction)?;
    writeln!(
        out,
        "wrote {} videos x {} frames\ntrain manifest {}\ntest manifest {}",
        args.videos,
        args.frames,
        train.display(),
        test.display()
    )
    .map_err(stdout_error)
}

pub fn cmd_costs(args: &CostsArgs, out: &mut dyn Write) -> Result<()> {
    let model = load_model(&args.model)?;
    create_dir(&args.out)?;
    let mut written = 0;
    for (i, slot) in model.slots.iter().enumerate() {
        if let BlockSelector::Dft(sel) = &slot.selector {
            let name = slot.slot.origin.describe().replace(' ', "");
            write_file(&args.out.join(format!("{i:02}_{name}.tsv")), &cost_table(sel))?;
            written += 1;
        }
    }
    writeln!(out, "wrote {written} cost tables to {}", args.out.display()).map_err(stdout_error)
}
