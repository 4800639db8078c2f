use std::io::{self, Write};
use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::Result;
use clap::{Parser, Subcommand};
use gistline::service::{Service, ServiceConfig, SystemClock};
use gistline::Engine;
use gistline_cli::{AggregateOptions, ChatOptions, STORE_ENV};

#[derive(Parser)]
#[command(
    name = "gistline",
    version,
    about = "Schema-driven dialogue engine: server, terminal chat and tools"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the HTTP API.
    Serve {
        #[arg(long)]
        pack: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Store directory. `GISTLINE_STORE` overrides it when set.
        #[arg(long)]
        store: Option<PathBuf>,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Derive ids and seeds from this value (reproducible runs).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Hold one session in the terminal.
    Chat {
        #[arg(long)]
        pack: PathBuf,
        /// Session number, 1 to 10.
        #[arg(long, default_value_t = 1)]
        session: usize,
        /// Curriculum and session seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Print the gists derived from each input.
        #[arg(long)]
        show_gists: bool,
    },
    /// Write a 10-session curriculum as JSON.
    Compose {
        #[arg(long)]
        pack: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a content pack and list problems.
    Validate {
        #[arg(long)]
        pack: PathBuf,
    },
    /// Transcript evaluation tools.
    Eval {
        #[command(subcommand)]
        command: EvalCommand,
    },
}

#[derive(Subcommand)]
enum EvalCommand {
    /// Scrub names and long digit runs and relabel transcripts.
    Deid {
        #[arg(long)]
        names: PathBuf,
        /// Directory of transcript files.
        #[arg(long = "in")]
        input: PathBuf,
        /// Directory for the scrubbed transcripts.
        #[arg(long)]
        out: PathBuf,
        /// Where to keep the label to original id table.
        #[arg(long)]
        mapping: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Deal transcripts to raters.
    Assign {
        #[arg(long = "t")]
        transcripts: usize,
        #[arg(long = "r")]
        raters: usize,
        #[arg(long)]
        coverage: usize,
        #[arg(long)]
        load: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Condition means and SDs per criterion, plus sentiment series.
    Aggregate {
        #[arg(long)]
        sheets: PathBuf,
        #[arg(long)]
        transcripts: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Series file; defaults to `<out stem>.series.csv`.
        #[arg(long)]
        series: Option<PathBuf>,
        /// Valence lexicon (`word<TAB>score`) for the sentiment series.
        #[arg(long)]
        valence: Option<PathBuf>,
        #[arg(long, default_value_t = 3)]
        window: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(command: Command) -> Result<ExitCode> {
    let stdout = io::stdout();
    match command {
        Command::Serve {
            pack,
            port,
            store,
            host,
            seed,
        } => {
            tracing_subscriber::fmt()
                .with_env_filter(
                    tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
                )
                .init();
            let store = gistline_cli::store_dir(store, std::env::var_os(STORE_ENV))?;
            let content = Arc::new(gistline_cli::load_pack(&pack)?);
            let config = ServiceConfig {
                base_seed: seed,
                no_sync: false,
            };
            let service = Service::open(Engine::new(content), &store, config, Arc::new(SystemClock))?;
            let addr: SocketAddr = format!("{host}:{port}").parse()?;
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(async move {
                let listener = tokio::net::TcpListener::bind(addr).await?;
                tracing::info!(%addr, store = %store.display(), "listening");
                axum::serve(listener, gistline_cli::http::router(Arc::new(service)))
                    .with_graceful_shutdown(async {
                        let _ = tokio::signal::ctrl_c().await;
                    })
                    .await?;
                anyhow::Ok(())
            })?;
        }
        Command::Chat {
            pack,
            session,
            seed,
            show_gists,
        } => {
            let opts = ChatOptions {
                session,
                seed,
                show_gists,
            };
            gistline_cli::chat(&pack, &opts, io::stdin().lock(), &mut stdout.lock())?;
        }
        Command::Compose { pack, seed, out } => {
            gistline_cli::compose(&pack, seed, &out)?;
            println!("wrote {}", out.display());
        }
        Command::Validate { pack } => {
            if !gistline_cli::validate(&pack, &mut stdout.lock())? {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Eval { command } => match command {
            EvalCommand::Deid {
                names,
                input,
                out,
                mapping,
                seed,
            } => {
                let n = gistline_cli::deid(&names, &input, &out, &mapping, seed)?;
                println!("deidentified {n} transcript(s) into {}", out.display());
            }
            EvalCommand::Assign {
                transcripts,
                raters,
                coverage,
                load,
                seed,
            } => gistline_cli::assign(transcripts, raters, coverage, load, seed, &mut stdout.lock())?,
            EvalCommand::Aggregate {
                sheets,
                transcripts,
                out,
                series,
                valence,
                window,
            } => {
                let opts = AggregateOptions {
                    sheets: &sheets,
                    transcripts: &transcripts,
                    out: &out,
                    series: series.as_deref(),
                    valence: valence.as_deref(),
                    window,
                };
                gistline_cli::aggregate(&opts, &mut stdout.lock())?;
            }
        },
    }
    io::stdout().flush()?;
    Ok(ExitCode::SUCCESS)
}
