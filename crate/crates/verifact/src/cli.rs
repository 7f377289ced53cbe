//! Command-line driver for the crate: build indexes, run verification
//! batches, poke at retrieval, and report on finished record files.
//!
//! The driver is a thin layer over the library. Every subcommand reads
//! plain files and writes plain files; concurrency lives inside
//! [`verify_batch`](crate::pipeline::verify_batch) and randomness is
//! confined to `sample`, which takes an explicit `--seed`.
//!
//! For `verify`, options resolve in a fixed order: command-line flags beat
//! the optional `--config` TOML file, which beats built-in defaults.
//! Per-question failures are embedded in the output records and reported in
//! a summary line; they do not change the exit status. Only configuration
//! and I/O problems are fatal.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};

use crate::analysis::{
    agreement_matrix, distribution_csv, label_distribution, matrix_csv, render_audit_sheet,
    render_distribution, render_matrix, sample_for_audit, OutcomeClass,
};
use crate::corpus::{load_collection, load_queries, Corpus};
use crate::index::{Bm25Params, InvertedIndex};
use crate::llm::{ChatClient, CompletionParams, HttpClient, MockClient, API_KEY_ENV, DEFAULT_ENDPOINT};
use crate::pipeline::{
    config_hash, read_records, verify_batch, write_records, AnswerCache, Bm25Retriever,
    ConfigFingerprint, Journal, PipelineConfig, Retriever,
};
use crate::runs::{parse_run, serialize_run, RunEntry, RunRetriever, RunTable};

/// Seed used by `sample` when none is given.
pub const DEFAULT_SEED: u64 = 17;

const DEFAULT_TAG: &str = "verifact";

#[derive(Parser)]
#[command(
    name = "verifact",
    version,
    about = "Check LLM answers against retrieved passages"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a BM25 index snapshot from a passage collection
    Index(IndexArgs),
    /// Answer, retrieve, and classify every question in a query file
    Verify(Box<VerifyArgs>),
    /// Query the index directly to inspect evidence selection
    Retrieve(RetrieveArgs),
    /// Summarize record files: outcome distributions and pairwise agreement
    Analyze(AnalyzeArgs),
    /// Draw a reproducible sample of records for manual audit
    Sample(SampleArgs),
}

#[derive(Args)]
struct IndexArgs {
    /// Passage collection, one "pid<TAB>text" line per passage
    #[arg(long)]
    collection: PathBuf,
    /// Where to write the index snapshot
    #[arg(long)]
    out: PathBuf,
    /// BM25 k1 [default: 0.82]
    #[arg(long)]
    k1: Option<f64>,
    /// BM25 b [default: 0.68]
    #[arg(long)]
    b: Option<f64>,
}

#[derive(Args, Default)]
struct VerifyArgs {
    /// TOML file supplying any verify option; explicit flags win
    #[arg(long)]
    config: Option<PathBuf>,
    /// Passage collection, one "pid<TAB>text" line per passage
    #[arg(long)]
    collection: Option<PathBuf>,
    /// Questions to verify, one "qid<TAB>text" line per question
    #[arg(long)]
    queries: Option<PathBuf>,
    /// Evidence source: "bm25" or "run:<path>" for a TREC run file
    #[arg(long)]
    retriever: Option<String>,
    /// Reuse an index snapshot instead of indexing --collection [bm25 only]
    #[arg(long)]
    index: Option<PathBuf>,
    /// Extract a short reader answer from the evidence before classifying
    #[arg(long)]
    reader: bool,
    /// Model identifier sent with every completion [default: gpt-3.5-turbo]
    #[arg(long)]
    model: Option<String>,
    /// Sampling temperature sent with every completion [default: 0]
    #[arg(long)]
    temperature: Option<f64>,
    /// Serve completions from a recorded transcript instead of the network
    #[arg(long)]
    mock: Option<PathBuf>,
    /// Chat completion endpoint [default: the OpenAI API]
    #[arg(long)]
    endpoint: Option<String>,
    /// Where to write the JSONL records
    #[arg(long)]
    out: Option<PathBuf>,
    /// Continue from this run's journal instead of starting over
    #[arg(long)]
    resume: bool,
    /// Cache generated answers here and reuse them across runs
    #[arg(long)]
    answer_cache: Option<PathBuf>,
    /// Concurrent completions [default: 4]
    #[arg(long)]
    max_in_flight: Option<usize>,
    /// BM25 k1 [default: 0.82]
    #[arg(long)]
    k1: Option<f64>,
    /// BM25 b [default: 0.68]
    #[arg(long)]
    b: Option<f64>,
}

#[derive(Args)]
struct RetrieveArgs {
    /// Passage collection, one "pid<TAB>text" line per passage
    #[arg(long)]
    collection: PathBuf,
    /// Reuse an index snapshot instead of indexing --collection
    #[arg(long)]
    index: Option<PathBuf>,
    /// A single ad-hoc query, printed as a ranked list
    #[arg(long, conflicts_with = "queries", required_unless_present = "queries")]
    query: Option<String>,
    /// A query file; results are written as a TREC run
    #[arg(long)]
    queries: Option<PathBuf>,
    /// Passages to keep per query
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// Where to write the run; stdout when omitted [--queries only]
    #[arg(long, requires = "queries")]
    out: Option<PathBuf>,
    /// Run tag recorded in the last column
    #[arg(long, default_value = DEFAULT_TAG)]
    tag: String,
    /// BM25 k1 [default: 0.82]
    #[arg(long)]
    k1: Option<f64>,
    /// BM25 b [default: 0.68]
    #[arg(long)]
    b: Option<f64>,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// One or more record files; two or more also get pairwise agreement
    #[arg(required = true)]
    records: Vec<PathBuf>,
    /// Emit comma-separated values instead of aligned text
    #[arg(long)]
    csv: bool,
}

#[derive(Args)]
struct SampleArgs {
    /// Record file to sample from
    #[arg(long)]
    records: PathBuf,
    /// Outcome to audit: Yes, No, "Not Related", Unparseable, NoEvidence, Error
    #[arg(long)]
    outcome: String,
    /// How many records to draw
    #[arg(long)]
    n: usize,
    /// Shuffle seed; the same seed always draws the same records
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Where to write the audit sheet; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Which evidence source a verify run uses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RetrieverSpec {
    Bm25,
    Run(PathBuf),
}

impl FromStr for RetrieverSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "bm25" {
            return Ok(RetrieverSpec::Bm25);
        }
        if let Some(path) = s.strip_prefix("run:") {
            if path.is_empty() {
                return Err("run: needs a path, e.g. run:neural.trec".to_string());
            }
            return Ok(RetrieverSpec::Run(PathBuf::from(path)));
        }
        Err(format!("expected \"bm25\" or \"run:<path>\", got {s:?}"))
    }
}

/// The verify options that may come from a `--config` TOML file.
///
/// Every key is optional; anything set here loses to an explicit flag and
/// beats the built-in default.
#[derive(Debug, Default, serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    collection: Option<PathBuf>,
    queries: Option<PathBuf>,
    retriever: Option<String>,
    index: Option<PathBuf>,
    reader: Option<bool>,
    model: Option<String>,
    temperature: Option<f64>,
    mock: Option<PathBuf>,
    endpoint: Option<String>,
    out: Option<PathBuf>,
    resume: Option<bool>,
    answer_cache: Option<PathBuf>,
    max_in_flight: Option<usize>,
    k1: Option<f64>,
    b: Option<f64>,
}

/// A fully resolved verify run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub collection: PathBuf,
    pub queries: PathBuf,
    pub retriever: RetrieverSpec,
    pub index: Option<PathBuf>,
    pub reader: bool,
    pub model_id: String,
    pub temperature: f64,
    pub mock: Option<PathBuf>,
    pub endpoint: String,
    pub out: PathBuf,
    pub resume: bool,
    pub answer_cache: Option<PathBuf>,
    pub max_in_flight: usize,
    /// BM25 parameters as requested, before defaulting. `None` means the
    /// caller did not care, which matters when a snapshot supplies them.
    pub k1: Option<f64>,
    pub b: Option<f64>,
}

fn resolve(flags: VerifyArgs, file: FileConfig) -> anyhow::Result<ExperimentConfig> {
    let defaults = CompletionParams::default();
    let retriever = flags
        .retriever
        .or(file.retriever)
        .map(|s| RetrieverSpec::from_str(&s).map_err(|e| anyhow!("--retriever: {e}")))
        .transpose()?
        .unwrap_or(RetrieverSpec::Bm25);
    let config = ExperimentConfig {
        collection: flags
            .collection
            .or(file.collection)
            .context("--collection is required")?,
        queries: flags
            .queries
            .or(file.queries)
            .context("--queries is required")?,
        retriever,
        index: flags.index.or(file.index),
        reader: flags.reader || file.reader.unwrap_or(false),
        model_id: flags.model.or(file.model).unwrap_or(defaults.model_id),
        temperature: flags
            .temperature
            .or(file.temperature)
            .unwrap_or(defaults.temperature),
        mock: flags.mock.or(file.mock),
        endpoint: flags
            .endpoint
            .or(file.endpoint)
            .unwrap_or_else(|| DEFAULT_ENDPOINT.to_string()),
        out: flags.out.or(file.out).context("--out is required")?,
        resume: flags.resume || file.resume.unwrap_or(false),
        answer_cache: flags.answer_cache.or(file.answer_cache),
        max_in_flight: flags
            .max_in_flight
            .or(file.max_in_flight)
            .unwrap_or(defaults.max_in_flight),
        k1: flags.k1.or(file.k1),
        b: flags.b.or(file.b),
    };
    if !config.temperature.is_finite() || config.temperature < 0.0 {
        bail!("--temperature must be finite and not negative");
    }
    if config.index.is_some() && config.retriever != RetrieverSpec::Bm25 {
        bail!("--index only applies to --retriever bm25");
    }
    Ok(config)
}

fn load_file_config(path: Option<&Path>) -> anyhow::Result<FileConfig> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config file {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing config file {}", path.display()))
}

fn requested_params(k1: Option<f64>, b: Option<f64>) -> Bm25Params {
    let defaults = Bm25Params::default();
    Bm25Params {
        k1: k1.unwrap_or(defaults.k1),
        b: b.unwrap_or(defaults.b),
    }
}

/// Build from the collection, or reuse a snapshot after checking that it
/// was built with any explicitly requested parameters.
fn load_or_build_index(
    corpus: &Corpus,
    snapshot: Option<&Path>,
    k1: Option<f64>,
    b: Option<f64>,
) -> anyhow::Result<InvertedIndex> {
    match snapshot {
        Some(path) => {
            let index = InvertedIndex::load(path)
                .with_context(|| format!("loading index snapshot {}", path.display()))?;
            let params = index.params();
            if let Some(k1) = k1 {
                if k1 != params.k1 {
                    bail!(
                        "index snapshot {} was built with k1={}, not the requested {k1}",
                        path.display(),
                        params.k1
                    );
                }
            }
            if let Some(b) = b {
                if b != params.b {
                    bail!(
                        "index snapshot {} was built with b={}, not the requested {b}",
                        path.display(),
                        params.b
                    );
                }
            }
            if index.doc_count() != corpus.len() {
                bail!(
                    "index snapshot {} covers {} passages but the collection has {}",
                    path.display(),
                    index.doc_count(),
                    corpus.len()
                );
            }
            Ok(index)
        }
        None => Ok(InvertedIndex::build(corpus, requested_params(k1, b))?),
    }
}

/// The journal sits next to the record file as `<out>.journal`.
fn journal_path_for(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_os_string();
    name.push(".journal");
    PathBuf::from(name)
}

fn cmd_index(args: IndexArgs) -> anyhow::Result<()> {
    let corpus = load_collection(&args.collection)
        .with_context(|| format!("loading collection {}", args.collection.display()))?;
    let index = InvertedIndex::build(&corpus, requested_params(args.k1, args.b))?;
    index
        .save(&args.out)
        .with_context(|| format!("writing snapshot {}", args.out.display()))?;
    println!(
        "indexed {} passages (avg length {:.2} tokens, {} distinct terms) -> {}",
        index.doc_count(),
        index.avg_doc_len(),
        index.vocab_size(),
        args.out.display()
    );
    Ok(())
}

enum EvidenceBacking {
    Bm25(InvertedIndex),
    Run(RunTable),
}

fn cmd_verify(args: VerifyArgs) -> anyhow::Result<()> {
    let file = load_file_config(args.config.as_deref())?;
    let config = resolve(args, file)?;

    let corpus = load_collection(&config.collection)
        .with_context(|| format!("loading collection {}", config.collection.display()))?;
    let questions = load_queries(&config.queries)
        .with_context(|| format!("loading queries {}", config.queries.display()))?;

    let backing = match &config.retriever {
        RetrieverSpec::Bm25 => EvidenceBacking::Bm25(load_or_build_index(
            &corpus,
            config.index.as_deref(),
            config.k1,
            config.b,
        )?),
        RetrieverSpec::Run(path) => EvidenceBacking::Run(
            parse_run(path).with_context(|| format!("loading run file {}", path.display()))?,
        ),
    };
    let bm25_holder;
    let run_holder;
    let retriever: &dyn Retriever = match &backing {
        EvidenceBacking::Bm25(index) => {
            bm25_holder = Bm25Retriever::new(index, &corpus);
            &bm25_holder
        }
        EvidenceBacking::Run(table) => {
            run_holder = RunRetriever::new(table, &corpus);
            &run_holder
        }
    };

    let mock_holder;
    let http_holder;
    let client: &dyn ChatClient = match &config.mock {
        Some(path) => {
            mock_holder = MockClient::from_transcript_path(path)
                .with_context(|| format!("loading mock transcript {}", path.display()))?;
            &mock_holder
        }
        None => {
            http_holder = HttpClient::from_env(&config.endpoint, config.max_in_flight)
                .map_err(|e| anyhow!("{e}; export {API_KEY_ENV} or pass --mock <transcript>"))?;
            &http_holder
        }
    };

    let pipeline = PipelineConfig {
        completion: CompletionParams {
            model_id: config.model_id.clone(),
            temperature: config.temperature,
            max_in_flight: config.max_in_flight,
            ..CompletionParams::default()
        },
        use_reader: config.reader,
    };

    let journal_path = journal_path_for(&config.out);
    if !config.resume && journal_path.exists() {
        std::fs::remove_file(&journal_path)
            .with_context(|| format!("clearing stale journal {}", journal_path.display()))?;
    }
    let hash = config_hash(&ConfigFingerprint::new(&pipeline, retriever));
    let journal = Journal::open(&journal_path, &hash)?;

    let cache = config
        .answer_cache
        .as_ref()
        .map(AnswerCache::open)
        .transpose()?;

    let runtime = tokio::runtime::Runtime::new().context("starting async runtime")?;
    let outcome = runtime.block_on(verify_batch(
        client,
        retriever,
        &questions,
        &pipeline,
        Some(&journal),
        cache.as_ref(),
    ))?;

    write_records(&config.out, &outcome.records)?;
    println!(
        "wrote {} records to {} ({} resumed, {} executed)",
        outcome.records.len(),
        config.out.display(),
        outcome.resumed,
        outcome.executed
    );
    let dist = label_distribution(&outcome.records)?;
    let counts: Vec<String> = OutcomeClass::ALL
        .into_iter()
        .filter(|class| class.is_label() || dist.count(*class) > 0)
        .map(|class| format!("{} {}", class.as_str(), dist.count(class)))
        .collect();
    println!("outcomes: {}", counts.join(", "));
    let embedded = dist.count(OutcomeClass::Error);
    if embedded > 0 {
        println!(
            "{embedded} question(s) failed and carry an embedded error; \
             rerun without --resume to retry everything"
        );
    }
    Ok(())
}

fn cmd_retrieve(args: RetrieveArgs) -> anyhow::Result<()> {
    let corpus = load_collection(&args.collection)
        .with_context(|| format!("loading collection {}", args.collection.display()))?;
    let index = load_or_build_index(&corpus, args.index.as_deref(), args.k1, args.b)?;

    if let Some(query) = &args.query {
        let hits = index.search(query, args.k);
        if hits.is_empty() {
            println!("no passage shares a term with the query");
            return Ok(());
        }
        for (i, hit) in hits.iter().enumerate() {
            let passage = corpus.get(&hit.pid).expect("hit came from this corpus");
            println!("{:2}. {:12.6}  {}  {}", i + 1, hit.score, hit.pid, passage.text);
        }
        return Ok(());
    }

    let queries_path = args.queries.as_ref().expect("clap requires one input");
    let questions = load_queries(queries_path)
        .with_context(|| format!("loading queries {}", queries_path.display()))?;
    let mut entries = Vec::new();
    for question in &questions {
        for (i, hit) in index.search(&question.text, args.k).into_iter().enumerate() {
            entries.push(RunEntry {
                qid: question.qid.clone(),
                pid: hit.pid,
                rank: (i + 1) as u32,
                score: hit.score,
            });
        }
    }
    let table = RunTable::from_entries(&args.tag, entries)?;
    let serialized = serialize_run(&table);
    match &args.out {
        Some(path) => {
            std::fs::write(path, &serialized)
                .with_context(|| format!("writing run file {}", path.display()))?;
            println!(
                "wrote {} entries for {} of {} queries -> {}",
                table.entry_count(),
                table.query_count(),
                questions.len(),
                path.display()
            );
        }
        None => print!("{serialized}"),
    }
    Ok(())
}

/// Short display name for a record file: its stem, or the full path when
/// stems collide.
fn display_ids(paths: &[PathBuf]) -> Vec<String> {
    let stems: Vec<String> = paths
        .iter()
        .map(|p| {
            p.file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| p.display().to_string())
        })
        .collect();
    let unique = stems
        .iter()
        .collect::<std::collections::HashSet<_>>()
        .len();
    if unique == stems.len() {
        stems
    } else {
        paths.iter().map(|p| p.display().to_string()).collect()
    }
}

fn cmd_analyze(args: AnalyzeArgs) -> anyhow::Result<()> {
    let ids = display_ids(&args.records);
    let mut loaded = Vec::new();
    for (path, id) in args.records.iter().zip(&ids) {
        let records = read_records(path)
            .with_context(|| format!("reading record file {}", path.display()))?;
        let dist = label_distribution(&records)
            .with_context(|| format!("analyzing record file {}", path.display()))?;
        loaded.push((id.as_str(), records, dist));
    }

    let mut first = true;
    for (id, _, dist) in &loaded {
        if !std::mem::take(&mut first) {
            println!();
        }
        if args.csv {
            println!("# distribution {id}");
            print!("{}", distribution_csv(dist));
        } else {
            print!("{}", render_distribution(id, dist));
        }
    }
    for i in 0..loaded.len() {
        for j in i + 1..loaded.len() {
            let (id_a, records_a, _) = &loaded[i];
            let (id_b, records_b, _) = &loaded[j];
            let matrix = agreement_matrix(id_a, records_a, id_b, records_b)?;
            println!();
            if args.csv {
                println!("# agreement {id_a} vs {id_b}");
                print!("{}", matrix_csv(&matrix));
            } else {
                print!("{}", render_matrix(&matrix));
            }
        }
    }
    Ok(())
}

fn cmd_sample(args: SampleArgs) -> anyhow::Result<()> {
    let class = OutcomeClass::parse(&args.outcome).ok_or_else(|| {
        anyhow!(
            "--outcome {:?} is not one of Yes, No, \"Not Related\", Unparseable, NoEvidence, Error",
            args.outcome
        )
    })?;
    let records = read_records(&args.records)
        .with_context(|| format!("reading record file {}", args.records.display()))?;
    let samples = sample_for_audit(&records, class, args.n, args.seed)?;
    let sheet = render_audit_sheet(&samples);
    match &args.out {
        Some(path) => {
            std::fs::write(path, &sheet)
                .with_context(|| format!("writing audit sheet {}", path.display()))?;
            println!(
                "sampled {} of {} {} records (seed {}) -> {}",
                samples.len(),
                records.len(),
                class.as_str(),
                args.seed,
                path.display()
            );
        }
        None => print!("{sheet}"),
    }
    Ok(())
}

/// Parse `std::env::args` and run the chosen subcommand.
pub fn run() -> anyhow::Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Index(args) => cmd_index(args),
        Command::Verify(args) => cmd_verify(*args),
        Command::Retrieve(args) => cmd_retrieve(args),
        Command::Analyze(args) => cmd_analyze(args),
        Command::Sample(args) => cmd_sample(args),
    }
}
