use std::fs;
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

use coderag_core::embedding::ProviderKind;
use coderag_core::engine::{BuildConfig, Engine, QueryOptions};
use coderag_core::eval::{aggregate, evaluate, load_dataset, load_transcripts, report_csv};
use coderag_core::retrieval::{Mode, RetrieveResult};
use coderag_core::snapshot::{load_manifest, load_snapshot, save_snapshot};
use coderag_core::{server, Error, Exec};

const ENDPOINT_ENV: &str = "QIBOAGENT_EMBED_ENDPOINT";

#[derive(Parser)]
#[command(
    name = "coderag",
    version,
    about = "Retrieval-augmented generation index for code repositories"
)]
struct Cli {
    /// Run every stage on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scan, chunk, embed and index a repository into a snapshot directory.
    Ingest(IngestArgs),
    /// Retrieve chunks for a question from a snapshot.
    Query(QueryArgs),
    /// Serve JSON-RPC over stdio or TCP.
    Serve(ServeArgs),
    /// Score execution transcripts against a benchmark dataset.
    Eval(EvalArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum EmbedderArg {
    Http,
    Test,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Semantic,
    Hybrid,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Semantic => Mode::Semantic,
            ModeArg::Hybrid => Mode::Hybrid,
        }
    }
}

#[derive(Args)]
struct IngestArgs {
    repo: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Build configuration (TOML, or JSON by `.json` extension).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    embedder: Option<EmbedderArg>,
    #[arg(long, env = ENDPOINT_ENV)]
    endpoint: Option<String>,
    #[arg(long)]
    dim: Option<usize>,
    /// Revision label recorded in the manifest.
    #[arg(long)]
    repo_rev: Option<String>,
}

#[derive(Args)]
struct QueryArgs {
    dir: PathBuf,
    question: String,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(short = 'k', long = "k")]
    k: Option<usize>,
    /// Print the hits as JSON in the server's `retrieve` result schema.
    #[arg(long)]
    json: bool,
    #[arg(long, env = ENDPOINT_ENV)]
    endpoint: Option<String>,
}

#[derive(Args)]
struct ServeArgs {
    dir: PathBuf,
    #[arg(long, conflicts_with = "port")]
    stdio: bool,
    #[arg(long)]
    port: Option<u16>,
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    /// Directory of extra prompt templates (`<id>.txt`).
    #[arg(long)]
    templates: Option<PathBuf>,
    #[arg(long, env = ENDPOINT_ENV)]
    endpoint: Option<String>,
}

#[derive(Args)]
struct EvalArgs {
    /// Snapshot whose retrieval settings label the run.
    dir: PathBuf,
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    transcripts: PathBuf,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Also write a CSV row (model, config, accuracy, hallucination, lint).
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Generator model name for the CSV row.
    #[arg(long, default_value = "unknown")]
    model: String,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Domain(_) => 3,
        Error::Ingest(_) | Error::Io { .. } => 4,
        Error::Provider(_) | Error::ContractViolation(_) => 5,
        Error::Snapshot(_) | Error::Json(_) => 6,
        Error::Eval(_) => 7,
    }
}

fn load_build_config(path: &Path) -> Result<BuildConfig, Error> {
    let raw = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    if path.extension().is_some_and(|x| x == "json") {
        serde_json::from_str(&raw).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    } else {
        toml::from_str(&raw).map_err(|e| Error::Config(format!("{}: {}", path.display(), e.message())))
    }
}

fn ingest(args: IngestArgs, exec: Exec) -> Result<(), Error> {
    let mut cfg = match &args.config {
        Some(p) => load_build_config(p)?,
        None => BuildConfig::default(),
    };
    match args.embedder {
        Some(EmbedderArg::Http) => cfg.embedder.provider = ProviderKind::Http,
        Some(EmbedderArg::Test) => cfg.embedder.provider = ProviderKind::DeterministicTest,
        None => {}
    }
    if let Some(dim) = args.dim {
        cfg.embedder.dim = dim;
    }
    if cfg.embedder.provider == ProviderKind::Http {
        if let Some(url) = args.endpoint {
            cfg.embedder.endpoint_url = Some(url);
        }
    } else {
        cfg.embedder.endpoint_url = None;
    }
    let (engine, warnings) = Engine::build(&args.repo, cfg, args.repo_rev.as_deref(), exec)?;
    save_snapshot(&engine, &args.out)?;
    println!(
        "ingested {} documents into {} chunks ({} files skipped) -> {}",
        engine.n_docs(),
        engine.corpus().len(),
        warnings.len(),
        args.out.display()
    );
    Ok(())
}

fn first_line(text: &str) -> &str {
    text.lines().find(|l| !l.trim().is_empty()).unwrap_or("").trim()
}

fn query(args: QueryArgs, exec: Exec) -> Result<(), Error> {
    let engine = load_snapshot(&args.dir, args.endpoint.as_deref(), exec)?;
    let opts = QueryOptions {
        mode: args.mode.map(Mode::from),
        k: args.k,
    };
    let (cfg, hits) = engine.retrieve(&args.question, opts)?;
    let result = RetrieveResult::new(&hits, cfg.mode);
    if args.json {
        println!("{}", serde_json::to_string(&result)?);
        return Ok(());
    }
    println!("{:>4}  {:>8}  {:<40}  first line", "rank", "score", "source");
    for (i, h) in result.hits.iter().enumerate() {
        let source = format!("{} {}", h.path, h.span);
        println!(
            "{:>4}  {:>8.4}  {:<40}  {}",
            i + 1,
            h.score,
            source,
            first_line(&h.text)
        );
    }
    Ok(())
}

fn serve(args: ServeArgs, exec: Exec) -> Result<(), Error> {
    let mut engine = load_snapshot(&args.dir, args.endpoint.as_deref(), exec)?;
    if let Some(dir) = &args.templates {
        engine.templates_mut().load_dir(dir)?;
    }
    match args.port {
        Some(port) => {
            let addr = format!("{}:{port}", args.host);
            let listener = TcpListener::bind(&addr).map_err(|e| Error::Io {
                path: addr.clone().into(),
                source: e,
            })?;
            log::info!("listening on {addr}");
            server::serve_tcp(Arc::new(engine), listener).map_err(|e| Error::Io {
                path: addr.into(),
                source: e,
            })
        }
        None => server::serve_stdio(&engine).map_err(|e| Error::Io {
            path: "<stdio>".into(),
            source: e,
        }),
    }
}

fn write_out(path: &Path, text: &str) -> Result<(), Error> {
    fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn eval(args: EvalArgs, exec: Exec) -> Result<(), Error> {
    let manifest = load_manifest(&args.dir)?;
    let items = load_dataset(&args.dataset)?;
    let transcripts = load_transcripts(&args.transcripts)?;
    let verdicts = evaluate(&items, &transcripts, exec);
    let report = aggregate(&items, &verdicts, &transcripts)?;
    let json = serde_json::to_string_pretty(&report)?;
    match &args.report {
        Some(p) => write_out(p, &(json + "\n"))?,
        None => println!("{json}"),
    }
    if let Some(p) = &args.csv {
        let r = manifest.retrieval;
        let mode = serde_json::to_value(r.mode)?;
        let label = format!("{} k={}", mode.as_str().unwrap_or_default(), r.k);
        write_out(p, &report_csv(&report, &args.model, &label))?;
    }
    eprintln!(
        "accuracy {:.4}  hallucination {:.4}  over {} items",
        report.overall.accuracy, report.overall.hallucination_rate, report.overall.n_items
    );
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let exec = if cli.sequential {
        Exec::Sequential
    } else {
        Exec::default()
    };
    let result = match cli.command {
        Command::Ingest(a) => ingest(a, exec),
        Command::Query(a) => query(a, exec),
        Command::Serve(a) => serve(a, exec),
        Command::Eval(a) => eval(a, exec),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("coderag: {msg}");
            ExitCode::from(exit_code(&e))
        }
    }
}
