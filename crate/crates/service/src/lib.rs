//! Disaster monitor service: the monitoring loop over a Wikipedia edit
//! stream, candidate persistence, and the operator HTTP API.

pub mod api;
pub mod config;
pub mod monitor;
pub mod providers;
pub mod replay;
pub mod run;

use disaster_monitor_core::editstream::StreamError;
use disaster_monitor_core::wikigraph::WikiError;
use thiserror::Error;

pub use config::{ConfigError, ServiceConfig};
pub use monitor::{EventOutcome, Monitor, MonitorError};
pub use replay::{drive, replay_file, ReplayReport};
pub use run::{build_providers, build_wiki_client, serve, start, ServiceHandle};

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Monitor(#[from] MonitorError),
    #[error(transparent)]
    Stream(#[from] StreamError),
    #[error(transparent)]
    Wiki(#[from] WikiError),
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: String,
        #[source]
        source: std::io::Error,
    },
    #[error("background task failed: {0}")]
    Task(String),
}
