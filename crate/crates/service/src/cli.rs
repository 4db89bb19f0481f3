//! Command-line front end: `analyze`, `simulate` and `serve`.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use hintbandit::analysis::{self, AnalysisError, Corpus, Metric, ReportOptions, DEFAULT_WINDOW};
use hintbandit::session::{Clock, StepClock, SystemClock, MAIN_CONCEPTS};
use hintbandit::simulant::{run_batch, run_llm_session, run_mock_session, BatchPlan, HttpChatClient, LlmConfig};
use hintbandit::synthetic::{SyntheticWorld, WorldSpec};
use hintbandit::{Condition, EmbeddingSpace, Engine, Normalizer, SessionRecord, WordStore};

use crate::config::{self, ServiceConfig};

/// Exit status for a corpus that does not parse as session records.
pub const EXIT_SCHEMA: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "hintbandit", version, about = "Adaptive hinting for feature-listing studies")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute one metric over a JSONL corpus of session records and write it as CSV.
    Analyze(AnalyzeArgs),
    /// Run simulated participants and write their records as JSONL.
    Simulate(SimulateArgs),
    /// Run the HTTP session service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Session records, one JSON object per line.
    pub corpus: PathBuf,
    /// Word vectors used for relatedness distances.
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long, value_parser = parse_metric)]
    pub metric: Metric,
    /// Restrict the metric to one concept.
    #[arg(long)]
    pub concept: Option<String>,
    /// Output CSV; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Drop sessions whose feature count is far above the corpus mean.
    #[arg(long)]
    pub filter_outliers: bool,
    /// Offsets of the relatedness curve, as `FROM:TO` [default: -5:10].
    #[arg(long, value_parser = parse_window, allow_hyphen_values = true)]
    pub window: Option<(i32, i32)>,
    /// Replacement stopword list, one word per line.
    #[arg(long)]
    pub stopwords: Option<PathBuf>,
    /// Replacement lemma table, `form<TAB>lemma` per line.
    #[arg(long)]
    pub lemmas: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Mock,
    Llm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConditionArg {
    Hinted,
    Unhinted,
    Both,
}

impl ConditionArg {
    fn conditions(self) -> Vec<Condition> {
        match self {
            ConditionArg::Hinted => vec![Condition::Hinted],
            ConditionArg::Unhinted => vec![Condition::Unhinted],
            ConditionArg::Both => vec![Condition::Hinted, Condition::Unhinted],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProfileArg {
    /// Knowledge spread over four clusters, recalled within a radius of the cue.
    Desk,
    /// Knowledge near the concept; copies hint words after each hint.
    Focused,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub mode: Mode,
    /// Concept to list features for; repeat for several.
    #[arg(long = "concept", default_values_t = MAIN_CONCEPTS.map(String::from))]
    pub concepts: Vec<String>,
    #[arg(long, value_enum, default_value = "both")]
    pub condition: ConditionArg,
    /// Sessions per (concept, condition) cell.
    #[arg(short = 'n', long, default_value_t = 10)]
    pub n: usize,
    /// Session `i` of the batch is seeded with `seed + i`.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Output JSONL.
    #[arg(long)]
    pub out: PathBuf,
    /// Sessions run concurrently; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    /// Mock participant profile.
    #[arg(long, value_enum, default_value = "desk")]
    pub profile: ProfileArg,
    /// Seed of the generated world the mock participants live in.
    #[arg(long, default_value_t = WorldSpec::default().seed)]
    pub world_seed: u64,
    /// Also write the generated world's `embeddings.txt` and
    /// `frequencies.tsv` here, for analyzing the mock corpus afterwards.
    #[arg(long)]
    pub world_dir: Option<PathBuf>,
    /// Word vectors (llm mode).
    #[arg(long, required_if_eq("mode", "llm"))]
    pub embeddings: Option<PathBuf>,
    /// Corpus frequencies (llm mode).
    #[arg(long, required_if_eq("mode", "llm"))]
    pub frequencies: Option<PathBuf>,
    /// Chat endpoint settings, TOML or JSON (llm mode).
    #[arg(long, required_if_eq("mode", "llm"))]
    pub llm_config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Service config, TOML or JSON. `HINTBANDIT_*` variables override it;
    /// without a file every required setting must come from the environment.
    #[arg(long, env = "HINTBANDIT_CONFIG")]
    pub config: Option<PathBuf>,
}

fn parse_metric(s: &str) -> Result<Metric, String> {
    s.parse()
}

/// Parses `FROM:TO` with `FROM <= TO`.
pub fn parse_window(s: &str) -> Result<(i32, i32), String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("expected FROM:TO, got `{s}`"))?;
    let parse = |v: &str| v.trim().parse::<i32>().map_err(|e| format!("`{v}`: {e}"));
    let (a, b) = (parse(a)?, parse(b)?);
    if a > b {
        return Err(format!("window start {a} is after its end {b}"));
    }
    Ok((a, b))
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> u8 {
    let result = match cli.command {
        Command::Analyze(args) => return run_analyze(&args),
        Command::Simulate(args) => simulate(&args),
        Command::Serve(args) => serve(&args),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

fn run_analyze(args: &AnalyzeArgs) -> u8 {
    match analyze(args) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            let schema = e.downcast_ref::<AnalysisError>().is_some_and(AnalysisError::is_schema_error);
            if schema {
                EXIT_SCHEMA
            } else {
                1
            }
        }
    }
}

pub fn analyze(args: &AnalyzeArgs) -> anyhow::Result<()> {
    let mut corpus = Corpus::load_jsonl(&args.corpus)?;
    if args.filter_outliers {
        let before = corpus.len();
        corpus = corpus.filter_outliers();
        eprintln!("filtered {} outlier session(s)", before - corpus.len());
    }
    let space = EmbeddingSpace::load(&args.embeddings)?;
    let normalizer = Normalizer::from_files(args.stopwords.as_deref(), args.lemmas.as_deref())?;
    let options = ReportOptions {
        metric: args.metric,
        concept: args.concept.as_deref(),
        window: args.window.unwrap_or(DEFAULT_WINDOW),
    };
    match &args.out {
        Some(path) => {
            let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
            let mut out = BufWriter::new(file);
            analysis::write_report(&corpus, &space, &normalizer, &options, &mut out)?;
            out.flush()?;
        }
        None => analysis::write_report(&corpus, &space, &normalizer, &options, std::io::stdout().lock())?,
    }
    Ok(())
}

/// Start of the simulated clock for mock sessions; one reading every 3 s.
const MOCK_START_MS: u64 = 1_700_000_000_000;
const MOCK_STEP_MS: u64 = 3_000;
/// LLM sessions are untimed; the turn cap ends them.
const LLM_SESSION_SECS: u64 = 7 * 24 * 3600;

pub fn simulate(args: &SimulateArgs) -> anyhow::Result<()> {
    if args.n == 0 {
        bail!("-n must be positive");
    }
    let concepts: Vec<&str> = args.concepts.iter().map(String::as_str).collect();
    let mut plan = BatchPlan::new(&concepts, &args.condition.conditions(), args.n, args.seed);
    plan.parallelism = args.jobs;

    let results: Vec<_> = match args.mode {
        Mode::Mock => {
            let world = SyntheticWorld::generate(WorldSpec {
                seed: args.world_seed,
                ..WorldSpec::default()
            });
            if let Some(dir) = &args.world_dir {
                std::fs::create_dir_all(dir)?;
                world.write_files(dir)?;
            }
            let engine = Engine::new(Arc::new(world.word_store()), Arc::new(Normalizer::default()));
            run_batch(&plan, |cell| {
                let profile = match args.profile {
                    ProfileArg::Desk => world.desk_profile(&cell.concept, cell.seed),
                    ProfileArg::Focused => {
                        let mut p = world.focused_profile(&cell.concept, 12, 2, cell.seed);
                        p.copy_hint_words = 3;
                        p
                    }
                };
                let mut clock = StepClock::new(MOCK_START_MS, MOCK_STEP_MS);
                run_mock_session(&engine, cell.config(), &profile, &mut clock)
            })
        }
        Mode::Llm => {
            let (emb, freq, llm_path) = match (&args.embeddings, &args.frequencies, &args.llm_config) {
                (Some(e), Some(f), Some(l)) => (e, f, l),
                _ => bail!("llm mode needs --embeddings, --frequencies and --llm-config"),
            };
            let llm = load_llm_config(llm_path)?;
            let client = HttpChatClient::from_config(llm.clone())?;
            let store = WordStore::load(emb, freq)?;
            let engine = Engine::new(Arc::new(store), Arc::new(Normalizer::default()));
            run_batch(&plan, |cell| {
                let mut config = cell.config();
                config.duration_secs = LLM_SESSION_SECS;
                let mut clock = SystemClock::default();
                run_llm_session(&client, &llm, &engine, config, &mut clock as &mut dyn Clock)
            })
        }
    };

    let mut out = BufWriter::new(
        File::create(&args.out).with_context(|| format!("cannot create {}", args.out.display()))?,
    );
    let mut written: Vec<SessionRecord> = Vec::new();
    let mut failures = 0;
    for (cell, result) in plan.cells().iter().zip(results) {
        match result {
            Ok(record) => {
                writeln!(out, "{}", record.to_json_line())?;
                written.push(record);
            }
            Err(e) => {
                failures += 1;
                eprintln!("{}: {e}", cell.participant_id);
            }
        }
    }
    out.flush()?;
    summarize(&written);
    if failures > 0 {
        bail!("{failures} session(s) failed; {} written to {}", written.len(), args.out.display());
    }
    Ok(())
}

fn load_llm_config(path: &Path) -> anyhow::Result<LlmConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let config: LlmConfig = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        serde_json::from_str(&text)?
    } else {
        toml::from_str(&text)?
    };
    config.validate().map_err(anyhow::Error::msg)?;
    Ok(config)
}

/// Median feature count per (concept, condition) on standard error.
fn summarize(records: &[SessionRecord]) {
    let mut cells: std::collections::BTreeMap<(String, String), Vec<f64>> = Default::default();
    for r in records {
        cells
            .entry((r.config.concept.clone(), r.config.condition.to_string()))
            .or_default()
            .push(analysis::feature_count(r) as f64);
    }
    for ((concept, condition), counts) in cells {
        let median = hintbandit::stats::median(&counts).unwrap_or(f64::NAN);
        eprintln!("{concept:>12} {condition:<9} n={:<4} median features {median:.1}", counts.len());
    }
}

pub fn serve(args: &ServeArgs) -> anyhow::Result<()> {
    let config = match &args.config {
        Some(path) => config::load(path)?,
        None => {
            let mut c = ServiceConfig::new("", "");
            c.apply_env(|k| std::env::var(k).ok())?;
            if c.embeddings.as_os_str().is_empty() || c.frequencies.as_os_str().is_empty() {
                bail!("no --config given and HINTBANDIT_EMBEDDINGS / HINTBANDIT_FREQUENCIES are not set");
            }
            c.validate()?;
            c
        }
    };
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    runtime.block_on(crate::server::serve(config))
}
