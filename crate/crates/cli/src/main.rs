//! `disaster-monitor`: build monitoring lists, run or replay the service,
//! and talk to a running instance.
//!
//! Every flag can also be set through an environment variable with the
//! `DMON_` prefix, e.g. `DMON_BIND=0.0.0.0:8080`.

use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use disaster_monitor_client::Client;
use disaster_monitor_core::alerts::CandidateState;
use disaster_monitor_core::editstream::read_replay_file;
use disaster_monitor_core::wikigraph::{build_from_seed, serialize_monitoring_list, ListFormat};
use disaster_monitor_core::ManualClock;
use disaster_monitor_service::{build_providers, build_wiki_client, replay_file, serve, start, Monitor, ServiceConfig};
use tracing_subscriber::EnvFilter;

#[derive(Parser)]
#[command(name = "disaster-monitor", version, about = "Detects disasters from Wikipedia edit spikes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags that override the configuration file.
#[derive(Args)]
struct ConfigArgs {
    /// TOML configuration file.
    #[arg(long, short, env = "DMON_CONFIG")]
    config: Option<PathBuf>,
    /// Seed article as lang:Title.
    #[arg(long, env = "DMON_SEED")]
    seed: Option<String>,
    #[arg(long, env = "DMON_BIND")]
    bind: Option<String>,
    /// Base URL used in fragment links.
    #[arg(long, env = "DMON_PUBLIC_URL")]
    public_url: Option<String>,
    #[arg(long, env = "DMON_DATA_DIR")]
    data_dir: Option<PathBuf>,
    #[arg(long, env = "DMON_REFRESH_INTERVAL_SECS")]
    refresh_interval_secs: Option<u64>,
    /// Live SSE endpoint of the edit stream.
    #[arg(long, env = "DMON_STREAM_URL")]
    stream_url: Option<String>,
    #[arg(long, env = "DMON_REPLAY_SPEED")]
    replay_speed: Option<f64>,
    /// MediaWiki API URL with a {lang} placeholder.
    #[arg(long, env = "DMON_WIKI_API")]
    wiki_api: Option<String>,
    /// Directory of canned wiki pages used instead of the live API.
    #[arg(long, env = "DMON_WIKI_FIXTURES")]
    wiki_fixtures: Option<PathBuf>,
    /// Search provider file.
    #[arg(long, env = "DMON_PROVIDERS")]
    providers: Option<PathBuf>,
    #[arg(long, env = "DMON_CAP_SENDER")]
    cap_sender: Option<String>,
    #[arg(long, env = "DMON_VOCAB_BASE")]
    vocab_base: Option<String>,
}

impl ConfigArgs {
    fn load(&self) -> Result<ServiceConfig> {
        let mut cfg = match &self.config {
            Some(p) => ServiceConfig::load(p)?,
            None => ServiceConfig::default(),
        };
        macro_rules! set {
            ($field:expr, $value:expr) => {
                if let Some(v) = $value.clone() {
                    $field = v;
                }
            };
        }
        set!(cfg.seed, self.seed);
        set!(cfg.bind, self.bind);
        set!(cfg.data_dir, self.data_dir);
        set!(cfg.refresh_interval_secs, self.refresh_interval_secs);
        set!(cfg.stream.url, self.stream_url);
        set!(cfg.stream.replay_speed, self.replay_speed);
        set!(cfg.wiki.api_url, self.wiki_api);
        set!(cfg.cap.sender, self.cap_sender);
        set!(cfg.ldf.base_url, self.vocab_base);
        if self.public_url.is_some() {
            cfg.public_url = self.public_url.clone();
        }
        if self.wiki_fixtures.is_some() {
            cfg.wiki.fixture_dir = self.wiki_fixtures.clone();
        }
        if self.providers.is_some() {
            cfg.media.providers = self.providers.clone();
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Build the monitoring list and write it as .json, .tsv and .txt.
    BuildList {
        #[command(flatten)]
        config: ConfigArgs,
        /// Output path without extension.
        #[arg(long, short, default_value = "monitoring_list")]
        out: PathBuf,
    },
    /// Run the service against the configured edit stream.
    Run {
        #[command(flatten)]
        config: ConfigArgs,
        /// Replay this file instead of following the live stream.
        #[arg(long, env = "DMON_REPLAY")]
        replay: Option<PathBuf>,
    },
    /// Replay a recorded stream deterministically and print a summary.
    Replay {
        file: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        /// Keep serving the API after the replay until interrupted.
        #[arg(long)]
        serve: bool,
    },
    /// Print the CAP document of a confirmed alert.
    RenderCap {
        id: u64,
        #[arg(long, env = "DMON_SERVER", default_value = "http://127.0.0.1:8080")]
        server: String,
    },
    /// List candidates of a running service.
    Candidates {
        /// open, confirmed or dismissed
        #[arg(long)]
        state: Option<String>,
        #[arg(long, env = "DMON_SERVER", default_value = "http://127.0.0.1:8080")]
        server: String,
    },
    /// Confirm an Open candidate, publishing it as an alert.
    Confirm {
        id: u64,
        #[arg(long, env = "DMON_OPERATOR")]
        operator: String,
        #[arg(long, env = "DMON_SERVER", default_value = "http://127.0.0.1:8080")]
        server: String,
    },
    /// Dismiss an Open candidate.
    Dismiss {
        id: u64,
        #[arg(long, env = "DMON_OPERATOR")]
        operator: String,
        #[arg(long, env = "DMON_SERVER", default_value = "http://127.0.0.1:8080")]
        server: String,
    },
}

fn print_json(v: &impl serde::Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

async fn build_list(cfg: ServiceConfig, out: PathBuf) -> Result<()> {
    let seed = cfg.seed_key()?;
    let build = tokio::task::spawn_blocking(move || -> Result<_> {
        let wiki = build_wiki_client(&cfg)?;
        Ok(build_from_seed(&seed, wiki.as_ref(), chrono::Utc::now(), cfg.wiki.build)?)
    })
    .await??;
    for f in &build.report.failures {
        eprintln!("warning: {} {:?}: {}", f.key, f.operation, f.message);
    }
    for format in ListFormat::ALL {
        let path = out.with_extension(format.extension());
        std::fs::write(&path, serialize_monitoring_list(&build.list, format))
            .with_context(|| format!("writing {}", path.display()))?;
        println!("{}", path.display());
    }
    eprintln!("{} types, {} entries", build.types.len(), build.list.len());
    Ok(())
}

async fn replay(cfg: ServiceConfig, file: PathBuf, keep_serving: bool) -> Result<()> {
    cfg.validate()?;
    let first = {
        let f = file.clone();
        tokio::task::spawn_blocking(move || read_replay_file(&f)).await??
    };
    let start_ms = first.0.first().map(|e| e.timestamp).unwrap_or(0);
    let clock = Arc::new(ManualClock::new(start_ms));
    let speed = cfg.stream.replay_speed;
    let bind = cfg.bind.clone();
    let monitor = {
        let clock = clock.clone();
        tokio::task::spawn_blocking(move || -> Result<Arc<Monitor>> {
            let wiki = build_wiki_client(&cfg)?;
            let providers = build_providers(&cfg)?;
            let m = Monitor::open(cfg, clock, wiki, providers)?;
            if m.list().is_empty() {
                m.refresh_list()?;
            }
            Ok(m)
        })
        .await??
    };
    let report = replay_file(&monitor, &clock, &file, speed).await?;
    print_json(&report)?;
    if keep_serving {
        let handle = serve(monitor, &bind).await?;
        eprintln!("serving on {}", handle.base_url());
        handle.wait_for_ctrl_c().await?;
    }
    Ok(())
}

fn parse_state(s: &str) -> Result<CandidateState> {
    Ok(match s.to_ascii_lowercase().as_str() {
        "open" => CandidateState::Open,
        "confirmed" => CandidateState::Confirmed,
        "dismissed" => CandidateState::Dismissed,
        other => bail!("unknown state {other:?}; expected open, confirmed or dismissed"),
    })
}

#[tokio::main]
async fn main() -> Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_env("DMON_LOG").unwrap_or_else(|_| EnvFilter::new("info")))
        .with_writer(std::io::stderr)
        .init();
    match Cli::parse().command {
        Command::BuildList { config, out } => build_list(config.load()?, out).await,
        Command::Run { config, replay } => {
            let mut cfg = config.load()?;
            if replay.is_some() {
                cfg.stream.replay = replay;
            }
            let handle = start(cfg).await?;
            eprintln!("serving on {}", handle.base_url());
            handle.wait_for_ctrl_c().await?;
            Ok(())
        }
        Command::Replay { file, config, serve } => replay(config.load()?, file, serve).await,
        Command::RenderCap { id, server } => {
            let xml = Client::new(&server).alert_cap(id).await?;
            println!("{}", String::from_utf8_lossy(&xml));
            Ok(())
        }
        Command::Candidates { state, server } => {
            let state = state.as_deref().map(parse_state).transpose()?;
            print_json(&Client::new(&server).candidates(state).await?)
        }
        Command::Confirm { id, operator, server } => print_json(&Client::new(&server).confirm(id, &operator).await?),
        Command::Dismiss { id, operator, server } => print_json(&Client::new(&server).dismiss(id, &operator).await?),
    }
}
