//! The `framecue` command line.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use framecue::engine::{Interpretation, Interpreter};
use framecue::eval::{
    dataset_to_json, load_dataset_file, run_evaluation, synthesize_suite, EvalCorpus,
};
use framecue::metadata::{synthesize_bundle, GeneratorSpec, MetadataBundle};
use framecue::providers::{
    LiveConfig, ProviderConfig, ProviderMode, Providers, RecordKind, RecordingChat,
    RecordingEmbedder, ReplayCache, DEFAULT_MAX_REPAIRS,
};
use framecue::temporal::SegmentIndex;
use framecue::{load_bundle_file, EditCommand};
use serde::{Deserialize, Serialize};

pub const INTERPRET_FORMAT: &str = "framecue-interpret";
pub const INTERPRET_VERSION: u32 = 1;
/// File looked up when `--replay` names a directory.
pub const REPLAY_FILE_NAME: &str = "replay-cache.jsonl";

#[derive(Debug, Parser)]
#[command(
    name = "framecue",
    version,
    about = "Interpret video edit commands against metadata bundles"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Json,
}

/// Where model calls are answered. Defaults to `--oracle`.
#[derive(Debug, Clone, Default, Args)]
#[group(id = "mode", multiple = false)]
pub struct ModeArgs {
    /// Answer from a replay cache file, or a directory holding replay-cache.jsonl.
    #[arg(long, value_name = "CACHE")]
    pub replay: Option<PathBuf>,
    /// Answer offline with the built-in responder.
    #[arg(long)]
    pub oracle: bool,
    /// Call the live endpoints described in a TOML file.
    #[arg(long, value_name = "CONFIG")]
    pub live: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a metadata bundle.
    ValidateBundle {
        path: PathBuf,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Run the pipeline on each command of a file.
    Interpret {
        #[arg(long)]
        bundle: PathBuf,
        /// One command per line, or a JSON array of command objects.
        #[arg(long)]
        commands: PathBuf,
        #[command(flatten)]
        mode: ModeArgs,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Score the pipeline against a ground-truth dataset.
    Evaluate {
        #[arg(long)]
        bundle_dir: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[command(flatten)]
        mode: ModeArgs,
        /// Also write the JSON report here.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Start the HTTP service.
    Serve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Record or inspect replay caches.
    Cache {
        #[command(subcommand)]
        command: CacheCommand,
    },
    /// Write a synthetic bundle, and optionally a matching dataset.
    SynthBundle {
        #[arg(long, default_value = "synthetic")]
        video_id: String,
        #[arg(long, default_value_t = 300.0)]
        duration: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        dataset_out: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        entries: usize,
        #[arg(long, default_value_t = 1)]
        dataset_seed: u64,
    },
}

#[derive(Debug, Subcommand)]
pub enum CacheCommand {
    /// Run interpret and/or evaluate inputs and append every model call to a cache.
    Record {
        #[arg(long)]
        out: PathBuf,
        /// Live endpoints to record from; offline answers otherwise.
        #[arg(long, value_name = "CONFIG")]
        live: Option<PathBuf>,
        #[arg(long, requires = "commands")]
        bundle: Option<PathBuf>,
        #[arg(long, requires = "bundle")]
        commands: Option<PathBuf>,
        #[arg(long, requires = "dataset")]
        bundle_dir: Option<PathBuf>,
        #[arg(long, requires = "bundle_dir")]
        dataset: Option<PathBuf>,
    },
    /// Summarize a cache.
    Inspect {
        path: PathBuf,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::ValidateBundle { path, format } => validate_bundle(&path, format),
        Command::Interpret {
            bundle,
            commands,
            mode,
            format,
        } => {
            let bundle = load_bundle_file(&bundle)
                .with_context(|| format!("bundle {}", bundle.display()))?;
            let commands = load_commands(&commands)?;
            let providers = providers(&mode, bundle.embedding_dim)?;
            let (out, invalid) = interpret(&bundle, &commands, &providers)?;
            print!("{}", render_interpret(&out, format));
            if invalid > 0 {
                bail!("{invalid} command(s) were invalid");
            }
            Ok(())
        }
        Command::Evaluate {
            bundle_dir,
            dataset,
            mode,
            report,
            format,
        } => {
            let bundles = load_bundle_dir(&bundle_dir)?;
            let providers = providers(&mode, shared_dim(&bundles)?)?;
            let dataset = load_dataset_file(&dataset)
                .with_context(|| format!("dataset {}", dataset.display()))?;
            let corpus = EvalCorpus::build(bundles, &providers).context("indexing bundles")?;
            let r = run_evaluation(&dataset, &corpus, &providers);
            if let Some(path) = report {
                std::fs::write(&path, r.to_json())
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            match format {
                Format::Json => print!("{}", r.to_json()),
                Format::Text => print!("{}", r.to_table()),
            }
            Ok(())
        }
        Command::Serve { config } => {
            let cfg = framecue_server::ServerConfig::load(&config)?;
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(framecue_server::serve(cfg))?;
            Ok(())
        }
        Command::Cache { command } => cache(command),
        Command::SynthBundle {
            video_id,
            duration,
            seed,
            out,
            dataset_out,
            entries,
            dataset_seed,
        } => {
            if !(duration.is_finite() && duration > 0.0) {
                bail!("--duration must be positive");
            }
            let bundle = synthesize_bundle(&GeneratorSpec::new(video_id, duration), seed);
            std::fs::write(&out, bundle.to_json() + "\n")
                .with_context(|| format!("writing {}", out.display()))?;
            if let Some(path) = dataset_out {
                let suite = synthesize_suite(&bundle, entries, dataset_seed);
                std::fs::write(&path, dataset_to_json(&suite.entries))
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            Ok(())
        }
    }
}

#[derive(Debug, Serialize)]
struct BundleSummary {
    valid: bool,
    video_id: String,
    duration_s: f64,
    transcript_segments: usize,
    clips: usize,
    frames: usize,
    crops: usize,
}

fn validate_bundle(path: &Path, format: Format) -> Result<()> {
    let b =
        load_bundle_file(path).with_context(|| format!("bundle {} is invalid", path.display()))?;
    let s = BundleSummary {
        valid: true,
        video_id: b.video_id.clone(),
        duration_s: b.duration_s,
        transcript_segments: b.transcript.len(),
        clips: b.clips.len(),
        frames: b.frames.len(),
        crops: b.frames.iter().map(|f| f.crops.len()).sum(),
    };
    match format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&s)?),
        Format::Text => println!(
            "ok: {} ({}s, {} transcript segments, {} clips, {} frames, {} crops)",
            s.video_id, s.duration_s, s.transcript_segments, s.clips, s.frames, s.crops
        ),
    }
    Ok(())
}

/// Reads a commands file: a JSON array of command objects, or plain text
/// with one command per line (`#` starts a comment line).
pub fn load_commands(path: &Path) -> Result<Vec<EditCommand>> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if text.trim_start().starts_with('[') {
        return serde_json::from_str(&text)
            .with_context(|| format!("commands file {}", path.display()));
    }
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(EditCommand::new)
        .collect())
}

pub fn load_bundle_dir(dir: &Path) -> Result<Vec<MetadataBundle>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        bail!("no *.json bundles in {}", dir.display());
    }
    paths
        .iter()
        .map(|p| load_bundle_file(p).with_context(|| format!("bundle {}", p.display())))
        .collect()
}

fn shared_dim(bundles: &[MetadataBundle]) -> Result<usize> {
    let dim = bundles[0].embedding_dim;
    if let Some(b) = bundles.iter().find(|b| b.embedding_dim != dim) {
        bail!(
            "bundle {} has embedding_dim {} but {} has {dim}",
            b.video_id,
            b.embedding_dim,
            bundles[0].video_id
        );
    }
    Ok(dim)
}

fn read_live(path: &Path) -> Result<LiveConfig> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("live config {}", path.display()))
}

pub fn replay_path(p: &Path) -> PathBuf {
    if p.is_dir() {
        p.join(REPLAY_FILE_NAME)
    } else {
        p.to_path_buf()
    }
}

/// Providers for the selected mode.
pub fn providers(mode: &ModeArgs, embedding_dim: usize) -> Result<Providers> {
    let (m, replay_cache, live) = match (&mode.replay, &mode.live) {
        (Some(r), _) => (ProviderMode::Replay, Some(replay_path(r)), None),
        (_, Some(l)) => (ProviderMode::Live, None, Some(read_live(l)?)),
        _ => (ProviderMode::Oracle, None, None),
    };
    let cfg = ProviderConfig {
        mode: m,
        replay_cache,
        live,
        embedding_dim,
        max_repairs: DEFAULT_MAX_REPAIRS,
    };
    Ok(cfg.build()?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpretRecord {
    pub index: usize,
    pub command: EditCommand,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interpretation: Option<Interpretation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpretOutput {
    pub format: String,
    pub version: u32,
    pub video_id: String,
    pub records: Vec<InterpretRecord>,
}

/// Interprets every command; returns the output and the number of
/// commands rejected before running.
pub fn interpret(
    bundle: &MetadataBundle,
    commands: &[EditCommand],
    providers: &Providers,
) -> Result<(InterpretOutput, usize)> {
    let index = SegmentIndex::build(bundle, providers).context("indexing bundle")?;
    let interp = Interpreter::new(bundle, &index, providers);
    let mut invalid = 0;
    let records = commands
        .iter()
        .enumerate()
        .map(|(i, c)| match c.validate(bundle.duration_s) {
            Ok(()) => InterpretRecord {
                index: i,
                command: c.clone(),
                interpretation: Some(interp.interpret(c)),
                error: None,
            },
            Err(e) => {
                invalid += 1;
                InterpretRecord {
                    index: i,
                    command: c.clone(),
                    interpretation: None,
                    error: Some(e.to_string()),
                }
            }
        })
        .collect();
    let out = InterpretOutput {
        format: INTERPRET_FORMAT.into(),
        version: INTERPRET_VERSION,
        video_id: bundle.video_id.clone(),
        records,
    };
    Ok((out, invalid))
}

pub fn render_interpret(out: &InterpretOutput, format: Format) -> String {
    if format == Format::Json {
        return serde_json::to_string_pretty(out).expect("output serializes") + "\n";
    }
    let mut s = String::new();
    for r in &out.records {
        let _ = writeln!(s, "[{}] {}", r.index, r.command.text);
        if let Some(e) = &r.error {
            let _ = writeln!(s, "  error: {e}");
            continue;
        }
        let it = r.interpretation.as_ref().expect("valid command");
        let p = &it.parsed;
        let ops: Vec<&str> = p.operations.iter().map(|o| o.as_str()).collect();
        let _ = writeln!(s, "  operations: {}", ops.join(", "));
        for t in &p.temporal_refs {
            let _ = writeln!(s, "  when: {:?} ({:?})", t.span.surface, t.category);
        }
        for sp in &p.spatial_refs {
            let _ = writeln!(s, "  where: {:?} ({:?})", sp.span.surface, sp.category);
        }
        for (op, refs) in &p.param_refs {
            for r in refs {
                let _ = writeln!(s, "  how ({}): {:?}", op.as_str(), r.surface);
            }
        }
        let _ = writeln!(s, "  candidates: {}", it.candidates.len());
        for sg in &it.suggestions {
            let r = sg.rect;
            let _ = writeln!(
                s,
                "  - {} [{}, {}) {} rect=({:.4}, {:.4}, {:.4}, {:.4}) params={}",
                sg.operation.as_str(),
                sg.interval.start_s(),
                sg.interval.end_s(),
                sg.spatial.method.as_str(),
                r.x(),
                r.y(),
                r.w(),
                r.h(),
                serde_json::to_string(&sg.params).expect("params serialize"),
            );
        }
        for d in &it.diagnostics {
            let _ = writeln!(s, "  note: {d}");
        }
    }
    s
}

fn cache(cmd: CacheCommand) -> Result<()> {
    match cmd {
        CacheCommand::Inspect { path, format } => {
            let path = replay_path(&path);
            let cache = ReplayCache::open_read_only(&path)?;
            let records = cache.records();
            let count = |k: RecordKind| records.iter().filter(|r| r.kind == k).count();
            match format {
                Format::Json => {
                    let v = serde_json::json!({
                        "path": path,
                        "records": records.len(),
                        "by_kind": {
                            "chat": count(RecordKind::Chat),
                            "embed_text": count(RecordKind::EmbedText),
                            "embed_region": count(RecordKind::EmbedRegion),
                        },
                        "keys": records.iter().map(|r| serde_json::json!({"kind": r.kind, "key": r.key})).collect::<Vec<_>>(),
                    });
                    println!("{}", serde_json::to_string_pretty(&v)?);
                }
                Format::Text => {
                    println!(
                        "{}: {} records ({} chat, {} embed_text, {} embed_region)",
                        path.display(),
                        records.len(),
                        count(RecordKind::Chat),
                        count(RecordKind::EmbedText),
                        count(RecordKind::EmbedRegion)
                    );
                    for r in &records {
                        println!("  {:<12} {}", r.kind.to_string(), r.key);
                    }
                }
            }
            Ok(())
        }
        CacheCommand::Record {
            out,
            live,
            bundle,
            commands,
            bundle_dir,
            dataset,
        } => {
            if commands.is_none() && dataset.is_none() {
                bail!("nothing to record: give --bundle/--commands and/or --bundle-dir/--dataset");
            }
            let single = bundle.as_deref().map(load_bundle_file).transpose()?;
            let many = bundle_dir.as_deref().map(load_bundle_dir).transpose()?;
            let mut all: Vec<MetadataBundle> = single.iter().cloned().collect();
            all.extend(many.iter().flatten().cloned());
            let dim = shared_dim(&all)?;
            let inner = match &live {
                Some(p) => providers(
                    &ModeArgs {
                        live: Some(p.clone()),
                        ..Default::default()
                    },
                    dim,
                )?,
                None => Providers::offline(dim),
            };
            let cache = Arc::new(ReplayCache::open_append(&out)?);
            let before = cache.len();
            let rec = Providers::new(
                inner.mode(),
                Arc::new(RecordingChat::new(
                    inner.chat_backend().clone(),
                    cache.clone(),
                )),
                Arc::new(RecordingEmbedder::new(
                    inner.embedder().clone(),
                    cache.clone(),
                )),
            )
            .with_max_repairs(DEFAULT_MAX_REPAIRS);
            if let (Some(b), Some(c)) = (&single, &commands) {
                interpret(b, &load_commands(c)?, &rec)?;
            }
            if let (Some(bs), Some(d)) = (many, &dataset) {
                let ds =
                    load_dataset_file(d).with_context(|| format!("dataset {}", d.display()))?;
                let corpus = EvalCorpus::build(bs, &rec)?;
                run_evaluation(&ds, &corpus, &rec);
            }
            println!(
                "{}: {} new records, {} total",
                out.display(),
                cache.len() - before,
                cache.len()
            );
            Ok(())
        }
    }
}
