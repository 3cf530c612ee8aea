use std::collections::BTreeMap;
use std::io::Write;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use mmla_core::fixture::{write_demo_session, DemoOptions};
use mmla_core::ingest::Modality;
use mmla_core::store::{to_canonical_bytes, FileStore};

use crate::config::Config;
use crate::engine::{AnalyticsKind, AnalyticsQuery, Engine};
use crate::error::ErrorCode;

pub type CliResult = Result<(), Box<dyn std::error::Error + Send + Sync>>;

#[derive(Debug, Parser)]
#[command(name = "mmla", version, about = "Multimodal learning-session analytics")]
pub struct Cli {
    /// TOML config file; MMLA_* environment variables override it.
    #[arg(long, global = true, env = "MMLA_CONFIG")]
    pub config: Option<PathBuf>,
    /// Session store directory.
    #[arg(long, global = true)]
    pub store_root: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ingest a session from its manifest and print the new session id.
    Ingest { manifest: PathBuf },
    /// Print analytics JSON for a stored session.
    Analyze {
        session_id: String,
        /// activity_stats, correlations, extrema, ranking or test_comparison
        /// (repeatable; default: all that apply).
        #[arg(long = "kind")]
        kinds: Vec<String>,
        #[arg(long)]
        modality: Option<Modality>,
        #[arg(long)]
        source: Option<String>,
        #[arg(long)]
        activity: Option<String>,
        #[arg(long)]
        window_ms: Option<u64>,
        #[arg(long)]
        step_ms: Option<i64>,
        #[arg(long)]
        prominence_frac: Option<f64>,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long)]
        port: Option<u16>,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
    },
    /// Write the stored session document (canonical JSON) to a file.
    Export { session_id: String, path: PathBuf },
    /// List stored sessions.
    List,
    /// Write the synthetic demo session bundle into a directory.
    Demo {
        dir: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn engine(config: Config) -> Result<Engine, Box<dyn std::error::Error + Send + Sync>> {
    let store = FileStore::open(&config.store_root)?;
    Ok(Engine::new(Arc::new(store), config))
}

fn print_json(out: &mut dyn Write, v: &impl serde::Serialize) -> CliResult {
    serde_json::to_writer_pretty(&mut *out, v)?;
    writeln!(out)?;
    Ok(())
}

pub fn run(cli: Cli, out: &mut dyn Write) -> CliResult {
    let mut config = Config::load(cli.config.as_deref())?;
    if let Some(root) = cli.store_root {
        config.store_root = root;
    }
    match cli.command {
        Command::Ingest { manifest } => {
            let outcome = engine(config)?.ingest_session(&manifest)?;
            print_json(out, &outcome)
        }
        Command::Analyze { session_id, kinds, modality, source, activity, window_ms, step_ms, prominence_frac } => {
            let e = engine(config)?;
            let q = AnalyticsQuery { modality, source, activity, window_ms, step_ms, prominence_frac };
            let explicit = !kinds.is_empty();
            let kinds: Vec<AnalyticsKind> = if explicit {
                kinds.iter().map(|k| k.parse()).collect::<Result<_, _>>()?
            } else {
                AnalyticsKind::ALL.to_vec()
            };
            let mut report = BTreeMap::new();
            for kind in kinds {
                match e.get_analytics(&session_id, kind, &q) {
                    Ok(p) => {
                        report.insert(kind.as_str(), p);
                    }
                    // without --kind, skip kinds that do not apply to this request
                    Err(err) if !explicit && matches!(err.code, ErrorCode::BadParams) => {}
                    Err(err)
                        if !explicit && kind == AnalyticsKind::TestComparison && err.code == ErrorCode::NotFound => {}
                    Err(err) => return Err(err.into()),
                }
            }
            print_json(out, &report)
        }
        Command::Serve { port, host } => {
            let addr = SocketAddr::new(host, port.unwrap_or(config.port));
            let e = engine(config)?;
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::bind(addr).await?;
                tracing::info!("listening on http://{}", listener.local_addr()?);
                axum::serve(listener, crate::api::router(e))
                    .with_graceful_shutdown(async {
                        let _ = tokio::signal::ctrl_c().await;
                    })
                    .await?;
                Ok(())
            })
        }
        Command::Export { session_id, path } => {
            let session = engine(config)?.get_session(&session_id)?;
            std::fs::write(&path, to_canonical_bytes(&session)?)?;
            writeln!(out, "{}", path.display())?;
            Ok(())
        }
        Command::List => print_json(out, &engine(config)?.list_sessions()?),
        Command::Demo { dir, seed } => {
            let mut options = DemoOptions::default();
            if let Some(s) = seed {
                options.seed = s;
            }
            let manifest = write_demo_session(&dir, &options)?;
            writeln!(out, "{}", manifest.display())?;
            Ok(())
        }
    }
}
