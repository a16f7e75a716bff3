//! The `courtbias` command line: configuration, subcommand dispatch, run
//! manifests and the consolidated report.

pub mod config;
pub mod manifest;
pub mod report;
pub mod stages;

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use config::{CorpusKind, RunConfig};
use manifest::RunManifest;
use stages::StageOutput;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Stage(#[from] courtbias_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 2,
            CliError::Stage(_) => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Config(_) => "config",
            CliError::Stage(_) => "stage",
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "courtbias",
    version,
    about = "Gender-bias measurement over court proceedings"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Root seed; every stage seed derives from it.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Fail on the first malformed input record.
    #[arg(long, global = true)]
    pub strict: bool,
    /// Backend: `cmd:<program> [args]`, an http(s) URL, or `mock:<policy>`.
    #[arg(long, global = true)]
    pub backend: Option<String>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Load, filter and normalize the corpus.
    Ingest {
        #[arg(long = "in")]
        input: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<CorpusKind>,
    },
    /// Keyword statistics, their correlation and monetary claims.
    Stats,
    /// Rewrite verb arguments into gender-role sentinels.
    Roletag {
        #[arg(long)]
        parses: Option<PathBuf>,
    },
    #[command(subcommand)]
    Embed(EmbedCommand),
    #[command(subcommand)]
    Entail(EntailCommand),
    #[command(subcommand)]
    Cloze(ClozeCommand),
    #[command(subcommand)]
    Sample(SampleCommand),
    /// Serve the annotation HTTP API over the sampling store.
    ServeAnnotation {
        #[arg(long)]
        bind: Option<String>,
    },
    /// Cohen's kappa for one iteration.
    Kappa {
        #[arg(long)]
        iteration: u32,
    },
    /// Export adjudicated labels of one iteration as training data.
    ExportTrain {
        #[arg(long)]
        iteration: u32,
    },
    /// Consolidate stage outputs into report.json and report.txt.
    Report,
    /// Run every stage in order on one configuration.
    Run {
        #[arg(long = "in")]
        input: Option<PathBuf>,
        #[arg(long)]
        parses: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Subcommand)]
pub enum EmbedCommand {
    /// Train vectors on the role-tagged corpus.
    Train,
    /// WEAT scores for the three perspectives, or one custom spec.
    Weat {
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        vectors: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Subcommand)]
pub enum EntailCommand {
    /// Per-verb entailment gap.
    Gap {
        #[arg(long)]
        parses: Option<PathBuf>,
    },
    /// nli_bias over original and gender-flipped premises.
    Bias {
        #[arg(long)]
        parses: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        iteration: u32,
    },
}

#[derive(Debug, Clone, Subcommand)]
pub enum ClozeCommand {
    /// Masked-language-model bias measures.
    Audit {
        #[arg(long)]
        verbs: Option<PathBuf>,
        #[arg(long)]
        name: Option<String>,
    },
}

#[derive(Debug, Clone, Subcommand)]
pub enum SampleCommand {
    /// Find pairs whose verdict changes under gender flip.
    Detect {
        #[arg(long)]
        parses: Option<PathBuf>,
    },
    /// Draw a verb-balanced annotation batch.
    Batch {
        #[arg(long)]
        iteration: Option<u32>,
        #[arg(long)]
        size: Option<usize>,
    },
}

/// Builds the effective configuration: file, then flags.
pub fn resolve_config(global: &GlobalArgs, command: &Command) -> Result<RunConfig, CliError> {
    let mut cfg = match &global.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = global.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &global.out {
        cfg.out = out.clone();
    }
    if global.strict {
        cfg.strict = true;
    }
    if let Some(b) = &global.backend {
        cfg.backend = Some(b.clone());
    }
    let parses = match command {
        Command::Roletag { parses }
        | Command::Entail(EntailCommand::Gap { parses })
        | Command::Entail(EntailCommand::Bias { parses, .. })
        | Command::Sample(SampleCommand::Detect { parses })
        | Command::Run { parses, .. } => parses.clone(),
        _ => None,
    };
    if parses.is_some() {
        cfg.paths.parses = parses;
    }
    match command {
        Command::Ingest { input, format } => {
            if input.is_some() {
                cfg.paths.corpus = input.clone();
            }
            if format.is_some() {
                cfg.paths.corpus_format = *format;
            }
        }
        Command::Run { input: Some(i), .. } => cfg.paths.corpus = Some(i.clone()),
        Command::Embed(EmbedCommand::Weat { spec, vectors }) => {
            if spec.is_some() {
                cfg.paths.weat_spec = spec.clone();
            }
            if vectors.is_some() {
                cfg.paths.vectors = vectors.clone();
            }
        }
        Command::Cloze(ClozeCommand::Audit { verbs, name }) => {
            if verbs.is_some() {
                cfg.paths.verbs = verbs.clone();
            }
            if let Some(n) = name {
                cfg.verb_set_name = n.clone();
            }
        }
        Command::Sample(SampleCommand::Batch { size: Some(s), .. }) => cfg.sampling.batch_size = *s,
        Command::ServeAnnotation { bind: Some(b) } => cfg.annotation.bind = b.clone(),
        _ => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

fn timed(
    cfg: &RunConfig,
    manifest: &mut RunManifest,
    stage: &str,
    argv: Vec<String>,
    f: impl FnOnce(&RunConfig) -> Result<StageOutput, CliError>,
) -> Result<(), CliError> {
    log::info!("stage `{stage}` starting");
    let start = Instant::now();
    let out = f(cfg)?;
    let elapsed = start.elapsed().as_millis() as u64;
    manifest.record(cfg, stage, argv, elapsed, &out)?;
    manifest.save(&cfg.out)?;
    println!("{stage}: {}", out.summary);
    Ok(())
}

fn words(w: &[&str]) -> Vec<String> {
    w.iter().map(|s| s.to_string()).collect()
}

fn report_stage(cfg: &RunConfig) -> Result<StageOutput, CliError> {
    let r = report::emit_report(&cfg.out)?;
    let outputs = report::write_report(&cfg.out, &r)?;
    let present = [
        r.weat.is_present(),
        r.gaps.is_present(),
        r.nli_bias.is_present(),
        r.cloze.is_present(),
    ]
    .iter()
    .filter(|p| **p)
    .count();
    Ok(StageOutput {
        outputs,
        summary: format!("{present} of 4 sections present"),
        ..Default::default()
    })
}

/// Every stage of a full run, in order.
pub const PIPELINE: [&str; 11] = [
    "ingest",
    "stats",
    "roletag",
    "embed train",
    "embed weat",
    "entail gap",
    "entail bias",
    "cloze audit",
    "sample detect",
    "sample batch",
    "report",
];

fn run_named(cfg: &RunConfig, manifest: &mut RunManifest, stage: &str) -> Result<(), CliError> {
    let argv = words(&stage.split(' ').collect::<Vec<_>>());
    match stage {
        "ingest" => timed(cfg, manifest, stage, argv, stages::ingest),
        "stats" => timed(cfg, manifest, stage, argv, stages::stats),
        "roletag" => timed(cfg, manifest, stage, argv, stages::roletag),
        "embed train" => timed(cfg, manifest, stage, argv, stages::embed_train),
        "embed weat" => timed(cfg, manifest, stage, argv, stages::embed_weat),
        "entail gap" => timed(cfg, manifest, stage, argv, stages::entail_gap),
        "entail bias" => timed(
            cfg,
            manifest,
            stage,
            words(&["entail", "bias", "--iteration", "0"]),
            |c| stages::entail_bias(c, 0),
        ),
        "cloze audit" => timed(cfg, manifest, stage, argv, stages::cloze_audit),
        "sample detect" => timed(cfg, manifest, stage, argv, stages::sample_detect),
        "sample batch" => timed(
            cfg,
            manifest,
            stage,
            words(&["sample", "batch", "--iteration", "1"]),
            |c| stages::sample_batch_stage(c, Some(1)),
        ),
        "report" => timed(cfg, manifest, stage, argv, report_stage),
        other => Err(CliError::Usage(format!("unknown stage `{other}`"))),
    }
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    let cfg = resolve_config(&cli.global, &cli.command)?;
    let mut manifest = RunManifest::load_or_new(&cfg)?;
    let m = &mut manifest;
    match cli.command {
        Command::Ingest { .. } => timed(&cfg, m, "ingest", words(&["ingest"]), stages::ingest),
        Command::Stats => timed(&cfg, m, "stats", words(&["stats"]), stages::stats),
        Command::Roletag { .. } => timed(&cfg, m, "roletag", words(&["roletag"]), stages::roletag),
        Command::Embed(EmbedCommand::Train) => timed(
            &cfg,
            m,
            "embed train",
            words(&["embed", "train"]),
            stages::embed_train,
        ),
        Command::Embed(EmbedCommand::Weat { .. }) => timed(
            &cfg,
            m,
            "embed weat",
            words(&["embed", "weat"]),
            stages::embed_weat,
        ),
        Command::Entail(EntailCommand::Gap { .. }) => timed(
            &cfg,
            m,
            "entail gap",
            words(&["entail", "gap"]),
            stages::entail_gap,
        ),
        Command::Entail(EntailCommand::Bias { iteration, .. }) => timed(
            &cfg,
            m,
            "entail bias",
            words(&["entail", "bias", "--iteration", &iteration.to_string()]),
            |c| stages::entail_bias(c, iteration),
        ),
        Command::Cloze(ClozeCommand::Audit { .. }) => timed(
            &cfg,
            m,
            "cloze audit",
            words(&["cloze", "audit"]),
            stages::cloze_audit,
        ),
        Command::Sample(SampleCommand::Detect { .. }) => timed(
            &cfg,
            m,
            "sample detect",
            words(&["sample", "detect"]),
            stages::sample_detect,
        ),
        Command::Sample(SampleCommand::Batch { iteration, .. }) => {
            let mut argv = words(&["sample", "batch"]);
            if let Some(i) = iteration {
                argv.extend(words(&["--iteration", &i.to_string()]));
            }
            timed(&cfg, m, "sample batch", argv, |c| {
                stages::sample_batch_stage(c, iteration)
            })
        }
        Command::ServeAnnotation { .. } => stages::serve_annotation(&cfg),
        Command::Kappa { iteration } => timed(
            &cfg,
            m,
            "kappa",
            words(&["kappa", "--iteration", &iteration.to_string()]),
            |c| stages::kappa(c, iteration),
        ),
        Command::ExportTrain { iteration } => timed(
            &cfg,
            m,
            "export-train",
            words(&["export-train", "--iteration", &iteration.to_string()]),
            |c| stages::export_train(c, iteration),
        ),
        Command::Report => timed(&cfg, m, "report", words(&["report"]), report_stage),
        Command::Run { .. } => {
            for stage in PIPELINE {
                run_named(&cfg, m, stage)?;
            }
            Ok(())
        }
    }
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code: 0 on success, 2 for usage and configuration errors,
/// 1 for stage errors.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.kind());
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            e.exit_code()
        }
    }
}
