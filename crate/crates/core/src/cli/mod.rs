//! Command-line interface.

mod config;

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

pub use config::{LlmRunSettings, Paths, ProtocolSettings, RunConfig, RUN_CONFIG_FILE};

use crate::contrastive::{
    grid_search, save_checkpoint, Checkpoint, Grid, ProjectionKind,
};
use crate::corpus::{
    functionality_histogram, load_corpus, sample_balanced, save_corpus, synthesize, PairCorpus, SynthConfig,
};
use crate::encoder::{import_embeddings, EncoderSource};
use crate::error::{Error, Result};
use crate::llmclient::{
    compare_transcripts, read_transcript, run_llm_experiment, serve_forever, summarize, LlmClient, LlmExperiment,
    PromptKind, SelectionMode, StubBehavior, StubRule, StubServer,
};
use crate::protocols::{
    render_markdown, run_plan, split_cross_dataset, split_one_vs_rest, split_random, write_report, Alternative,
    EvaluationReport, ModelVariant, ProtocolKind, TrainSpec,
};

pub const TRANSCRIPT_FILE: &str = "transcript.jsonl";
pub const LLM_REPORT_FILE: &str = "llm_report.json";
pub const COMPARE_FILE: &str = "compare.json";
pub const EVALUATION_FILE: &str = "evaluation.json";
pub const CHECKPOINT_FILE: &str = "model.json";
pub const LOSS_TRACE_FILE: &str = "loss_trace.json";
pub const GRID_FILE: &str = "grid.json";

#[derive(Debug, Parser)]
#[command(name = "xfclone", version, about = "Semantic code-clone detection across functionalities")]
pub struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a balanced corpus or generate a synthetic one.
    #[command(subcommand)]
    Dataset(DatasetCommand),
    /// Train one model on every pair of a corpus and write a checkpoint.
    Train(TrainArgs),
    /// Run an evaluation protocol and write report files.
    Eval(EvalArgs),
    /// Pick margin and projection head by validation F1.
    Gridsearch(GridArgs),
    /// In-context classification with a chat model, or compare two transcripts.
    Llm(LlmArgs),
    /// Re-render report files from saved results.
    Report(ReportArgs),
    /// Serve the deterministic stub chat endpoint.
    StubServer(StubArgs),
}

#[derive(Debug, Subcommand)]
pub enum DatasetCommand {
    /// Keep functionalities with at least `cap` pairs of each class and
    /// sample exactly `cap` of each.
    Build {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        cap: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Generate a synthetic corpus.
    Synth {
        #[arg(long, default_value_t = 4)]
        functionalities: usize,
        #[arg(long, default_value_t = 25)]
        pairs: usize,
        #[arg(long, default_value_t = 0.8)]
        overlap: f64,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args, Default)]
pub struct ModelArgs {
    #[arg(long)]
    pub variant: Option<ModelVariant>,
    #[arg(long, allow_negative_numbers = true)]
    pub margin: Option<f64>,
    /// Projection head: identity or batchnorm.
    #[arg(long = "g")]
    pub head: Option<ProjectionKind>,
    #[arg(long, allow_negative_numbers = true)]
    pub threshold: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub dim: Option<usize>,
    /// Imported snippet vectors (JSONL) used as a frozen encoder.
    #[arg(long)]
    pub vectors: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub protocol: Option<ProtocolKind>,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Training corpus of a cross-dataset run.
    #[arg(long)]
    pub train: Option<PathBuf>,
    /// Test corpus of a cross-dataset run.
    #[arg(long)]
    pub test: Option<PathBuf>,
    #[arg(long)]
    pub train_fraction: Option<f64>,
    /// Test per-experiment F1 against this value.
    #[arg(long)]
    pub reference_f1: Option<f64>,
    #[arg(long)]
    pub alternative: Option<Alternative>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub margins: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub heads: Option<Vec<ProjectionKind>>,
    #[arg(long)]
    pub train_fraction: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Debug, Args)]
pub struct LlmArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub prompt: Option<PromptKind>,
    #[arg(long)]
    pub mode: Option<SelectionMode>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Base URL of an OpenAI-compatible API.
    #[arg(long, conflicts_with = "stub")]
    pub endpoint: Option<String>,
    /// Start the bundled stub and send requests to it.
    #[arg(long)]
    pub stub: bool,
    #[arg(long)]
    pub model_name: Option<String>,
    #[arg(long)]
    pub max_in_flight: Option<usize>,
    #[arg(long)]
    pub max_attempts: Option<u32>,
    #[arg(long)]
    pub timeout_secs: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Compare two transcripts with a paired signed-rank test over k folds.
    #[arg(long, num_args = 2, value_names = ["T1", "T2"])]
    pub compare: Option<Vec<PathBuf>>,
    #[arg(long, alias = "k")]
    pub folds: Option<usize>,
    #[arg(long)]
    pub alternative: Option<Alternative>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// evaluation.json written by `eval`.
    #[arg(long, conflicts_with = "transcript")]
    pub input: Option<PathBuf>,
    /// transcript.jsonl written by `llm`.
    #[arg(long)]
    pub transcript: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StubArgs {
    #[arg(long, default_value = "127.0.0.1:8089")]
    pub addr: SocketAddr,
    #[arg(long, value_parser = parse_rule, default_value = "similarity")]
    pub rule: StubRule,
}

fn parse_rule(s: &str) -> std::result::Result<StubRule, String> {
    match s {
        "similarity" => Ok(StubRule::Similarity),
        "exact" | "exact-match" => Ok(StubRule::ExactMatch),
        other => Err(format!("unknown stub rule `{other}`")),
    }
}

fn base_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::from_toml_file(p),
        None => Ok(RunConfig::default()),
    }
}

fn required<'a>(value: &'a Option<PathBuf>, what: &str) -> Result<&'a Path> {
    value
        .as_deref()
        .ok_or_else(|| Error::Validation(format!("missing {what} path (flag or config)")))
}

impl ModelArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        cfg.contrastive.seed = cfg.seed;
        if let Some(v) = self.variant {
            cfg.variant = v;
        }
        if let Some(v) = self.margin {
            cfg.contrastive.margin = v;
        }
        if let Some(v) = self.head {
            cfg.head = v;
        }
        if let Some(v) = self.threshold {
            cfg.contrastive.threshold = v;
        }
        if let Some(v) = self.lr {
            cfg.contrastive.learning_rate = v;
        }
        if let Some(v) = self.batch_size {
            cfg.contrastive.batch_size = v;
        }
        if let Some(v) = self.epochs {
            cfg.contrastive.epochs = v;
        }
        if let Some(v) = self.dim {
            cfg.encoder.dim = v;
        }
        if let Some(v) = &self.vectors {
            cfg.paths.vectors = Some(v.clone());
        }
    }
}

fn encoder_source(cfg: &RunConfig) -> Result<EncoderSource> {
    Ok(match &cfg.paths.vectors {
        Some(p) => EncoderSource::Imported(Arc::new(import_embeddings(p)?)),
        None => EncoderSource::Trainable(cfg.encoder),
    })
}

fn train_spec(cfg: &RunConfig) -> Result<TrainSpec> {
    cfg.contrastive.validate()?;
    Ok(TrainSpec {
        variant: cfg.variant,
        head: cfg.head,
        config: cfg.contrastive,
        source: encoder_source(cfg)?,
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, serde_json::to_string_pretty(value)?).map_err(|e| Error::io(path, e))
}

fn print_histogram(corpus: &PairCorpus) {
    println!("{:<32} {:>8} {:>10}", "functionality", "clone", "non-clone");
    for (f, c) in functionality_histogram(corpus) {
        println!("{f:<32} {:>8} {:>10}", c.clone, c.nonclone);
    }
}

/// Parse arguments, run, and map errors to exit codes.
pub fn main() -> i32 {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let mut cfg = base_config(cli.config.as_deref())?;
    match cli.command {
        Command::Dataset(cmd) => cmd_dataset(&mut cfg, cmd),
        Command::Train(args) => cmd_train(&mut cfg, args),
        Command::Eval(args) => cmd_eval(&mut cfg, args),
        Command::Gridsearch(args) => cmd_gridsearch(&mut cfg, args),
        Command::Llm(args) => cmd_llm(&mut cfg, args),
        Command::Report(args) => cmd_report(&cfg, args),
        Command::StubServer(args) => runtime()?.block_on(async {
            eprintln!("stub listening on http://{}/v1", args.addr);
            serve_forever(
                args.addr,
                StubBehavior {
                    rule: args.rule,
                    fail_first: 0,
                },
            )
            .await
        }),
    }
}

fn runtime() -> Result<tokio::runtime::Runtime> {
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| Error::io("tokio runtime", e))
}

fn cmd_dataset(cfg: &mut RunConfig, cmd: DatasetCommand) -> Result<()> {
    match cmd {
        DatasetCommand::Build { input, out, cap, seed } => {
            if let Some(s) = seed {
                cfg.seed = s;
            }
            cfg.sampler.seed = cfg.seed;
            if let Some(c) = cap {
                cfg.sampler.per_class_cap = c;
            }
            if input.is_some() {
                cfg.paths.corpus = input;
            }
            if let Some(o) = out {
                cfg.paths.out_dir = o;
            }
            let raw = load_corpus(required(&cfg.paths.corpus, "input corpus")?)?;
            let balanced = sample_balanced(&raw, &cfg.sampler)?;
            save_corpus(&balanced, &cfg.paths.out_dir)?;
            cfg.persist(&cfg.paths.out_dir)?;
            print_histogram(&balanced);
            println!(
                "retained {} functionalities, {} pairs (cap {})",
                balanced.functionalities().len(),
                balanced.len(),
                cfg.sampler.per_class_cap
            );
            Ok(())
        }
        DatasetCommand::Synth {
            functionalities,
            pairs,
            overlap,
            seed,
            out,
        } => {
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(o) = out {
                cfg.paths.out_dir = o;
            }
            let synth = SynthConfig::new(functionalities, pairs, overlap, cfg.seed);
            let corpus = synthesize(&synth)?;
            cfg.synth = Some(synth);
            save_corpus(&corpus, &cfg.paths.out_dir)?;
            cfg.persist(&cfg.paths.out_dir)?;
            print_histogram(&corpus);
            println!("wrote {} snippets, {} pairs", corpus.snippets().len(), corpus.len());
            Ok(())
        }
    }
}

fn cmd_train(cfg: &mut RunConfig, args: TrainArgs) -> Result<()> {
    args.model.apply(cfg);
    if args.corpus.is_some() {
        cfg.paths.corpus = args.corpus;
    }
    if let Some(o) = args.out {
        cfg.paths.out_dir = o;
    }
    let spec = train_spec(cfg)?;
    let corpus = load_corpus(required(&cfg.paths.corpus, "corpus")?)?;
    println!("{}", serde_json::to_string_pretty(&cfg)?);
    let all: Vec<usize> = (0..corpus.len()).collect();
    let (model, losses) = spec.fit(&corpus, &all)?;
    let out = cfg.paths.out_dir.clone();
    let ck_path = cfg.paths.checkpoint.clone().unwrap_or_else(|| out.join(CHECKPOINT_FILE));
    write_json(&out.join(LOSS_TRACE_FILE), &losses)?;
    save_checkpoint(&Checkpoint::new(model, losses.clone()), &ck_path)?;
    cfg.paths.checkpoint = Some(ck_path.clone());
    cfg.persist(&out)?;
    for (e, l) in losses.iter().enumerate() {
        println!("epoch {:>3}  loss {l:.6}", e + 1);
    }
    println!("checkpoint written to {}", ck_path.display());
    Ok(())
}

fn cmd_eval(cfg: &mut RunConfig, args: EvalArgs) -> Result<()> {
    args.model.apply(cfg);
    if let Some(p) = args.protocol {
        cfg.protocol.kind = p;
    }
    if args.corpus.is_some() {
        cfg.paths.corpus = args.corpus;
    }
    if args.train.is_some() {
        cfg.paths.train_corpus = args.train;
    }
    if args.test.is_some() {
        cfg.paths.test_corpus = args.test;
    }
    if let Some(f) = args.train_fraction {
        cfg.protocol.train_fraction = f;
    }
    if args.reference_f1.is_some() {
        cfg.protocol.reference_f1 = args.reference_f1;
    }
    if let Some(a) = args.alternative {
        cfg.protocol.alternative = a;
    }
    if let Some(o) = args.out {
        cfg.paths.out_dir = o;
    }
    let spec = train_spec(cfg)?;
    let (train_corpus, test_corpus, plan) = match cfg.protocol.kind {
        ProtocolKind::CrossDataset => {
            let a = load_corpus(required(&cfg.paths.train_corpus, "training corpus")?)?;
            let b = load_corpus(required(&cfg.paths.test_corpus, "test corpus")?)?;
            let plan = split_cross_dataset(&a, &b)?;
            (a, b, plan)
        }
        kind => {
            let c = load_corpus(required(&cfg.paths.corpus, "corpus")?)?;
            let plan = match kind {
                ProtocolKind::RandomSeen => split_random(&c, cfg.protocol.train_fraction, cfg.seed)?,
                _ => split_one_vs_rest(&c)?,
            };
            (c.clone(), c, plan)
        }
    };
    let mut report = run_plan(&plan, &train_corpus, &test_corpus, &spec)?;
    if let Some(reference) = cfg.protocol.reference_f1 {
        report.test_against_reference(reference, cfg.protocol.alternative)?;
    }
    let out = cfg.paths.out_dir.clone();
    write_report(&report, &out)?;
    write_json(&out.join(EVALUATION_FILE), &report)?;
    cfg.persist(&out)?;
    print!("{}", render_markdown(&report));
    Ok(())
}

fn cmd_gridsearch(cfg: &mut RunConfig, args: GridArgs) -> Result<()> {
    args.model.apply(cfg);
    if args.corpus.is_some() {
        cfg.paths.corpus = args.corpus;
    }
    if let Some(f) = args.train_fraction {
        cfg.protocol.train_fraction = f;
    }
    if let Some(o) = args.out {
        cfg.paths.out_dir = o;
    }
    let mut grid = Grid::default();
    if let Some(m) = args.margins {
        grid.margins = m;
    }
    if let Some(h) = args.heads {
        grid.heads = h;
    }
    cfg.contrastive.validate()?;
    for &m in &grid.margins {
        crate::contrastive::ContrastiveConfig {
            margin: m,
            ..cfg.contrastive
        }
        .validate()?;
    }
    let corpus = load_corpus(required(&cfg.paths.corpus, "corpus")?)?;
    let plan = split_random(&corpus, cfg.protocol.train_fraction, cfg.seed)?;
    let e = &plan.experiments[0];
    let result = grid_search(&encoder_source(cfg)?, &grid, cfg.contrastive, &corpus, &e.train, &e.test)?;
    let out = cfg.paths.out_dir.clone();
    write_json(&out.join(GRID_FILE), &result)?;
    cfg.persist(&out)?;
    println!("{:>8} {:>10} {:>8}", "margin", "head", "F1");
    for c in &result.table {
        println!("{:>8} {:>10} {:>8.4}", c.margin, c.head.to_string(), c.metrics.f1);
    }
    println!("best: margin {} head {}", result.best.margin, result.best.head);
    Ok(())
}

fn cmd_llm(cfg: &mut RunConfig, args: LlmArgs) -> Result<()> {
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(o) = &args.out {
        cfg.paths.out_dir = o.clone();
    }
    if let Some(k) = args.folds {
        cfg.llm_run.folds = k;
    }
    if let Some(paths) = &args.compare {
        let a = read_transcript(&paths[0])?;
        let b = read_transcript(&paths[1])?;
        let alternative = args.alternative.unwrap_or(Alternative::TwoSided);
        let cmp = compare_transcripts(&a, &b, cfg.llm_run.folds, cfg.seed, alternative)?;
        write_json(&cfg.paths.out_dir.join(COMPARE_FILE), &cmp)?;
        println!("{}", serde_json::to_string_pretty(&cmp)?);
        return Ok(());
    }
    if let Some(p) = args.prompt {
        cfg.llm_run.prompt = p;
    }
    if let Some(m) = args.mode {
        cfg.llm_run.mode = m;
    }
    if let Some(n) = args.n {
        cfg.llm_run.n = n;
    }
    if args.corpus.is_some() {
        cfg.paths.corpus = args.corpus.clone();
    }
    if let Some(e) = &args.endpoint {
        cfg.llm.endpoint = e.clone();
    }
    if let Some(m) = &args.model_name {
        cfg.llm.model = m.clone();
    }
    if let Some(v) = args.max_in_flight {
        cfg.llm.max_in_flight = v;
    }
    if let Some(v) = args.max_attempts {
        cfg.llm.retry.max_attempts = v;
    }
    if let Some(v) = args.timeout_secs {
        cfg.llm.timeout_secs = v;
    }
    cfg.llm.validate()?;
    let corpus = load_corpus(required(&cfg.paths.corpus, "corpus")?)?;
    let exp = LlmExperiment {
        mode: cfg.llm_run.mode,
        kind: cfg.llm_run.prompt,
        n: cfg.llm_run.n,
        seed: cfg.seed,
    };
    let out = cfg.paths.out_dir.clone();
    std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    let rt = runtime()?;
    let report = rt.block_on(async {
        let _stub = if args.stub {
            let stub = StubServer::spawn(StubBehavior::default()).await?;
            cfg.llm.endpoint = stub.endpoint();
            Some(stub)
        } else {
            None
        };
        cfg.persist(&out)?;
        let client = LlmClient::new(cfg.llm.clone())?;
        run_llm_experiment(&client, &corpus, &exp, &out.join(TRANSCRIPT_FILE))
            .await
            .map(|(r, _)| r)
    })?;
    write_json(&out.join(LLM_REPORT_FILE), &report)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn cmd_report(cfg: &RunConfig, args: ReportArgs) -> Result<()> {
    let out = args.out.unwrap_or_else(|| cfg.paths.out_dir.clone());
    if let Some(t) = args.transcript {
        let report = summarize(&read_transcript(&t)?)?;
        write_json(&out.join(LLM_REPORT_FILE), &report)?;
        println!("{}", serde_json::to_string_pretty(&report)?);
        return Ok(());
    }
    let input = args
        .input
        .ok_or_else(|| Error::Validation("report needs --input or --transcript".into()))?;
    let text = std::fs::read_to_string(&input).map_err(|e| Error::io(&input, e))?;
    let report: EvaluationReport = serde_json::from_str(&text)?;
    write_report(&report, &out)?;
    print!("{}", render_markdown(&report));
    Ok(())
}
