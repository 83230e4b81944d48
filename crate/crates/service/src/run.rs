//! Wiring: clients from config, the HTTP server, and the background tasks
//! of a running service.

use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Duration;

use disaster_monitor_core::editstream::{connect, LiveOptions, StreamSource};
use disaster_monitor_core::media::SearchProvider;
use disaster_monitor_core::wikigraph::{FixtureWikiClient, HttpWikiClient, WikiClient};
use disaster_monitor_core::{Clock, ManualClock};
use tokio::net::TcpListener;
use tokio::sync::watch;
use tokio::task::JoinHandle;
use tracing::{error, info, warn};

use crate::api::{router, AppState};
use crate::config::ServiceConfig;
use crate::monitor::Monitor;
use crate::providers::load_providers;
use crate::replay::drive;
use crate::ServiceError;

/// Builds the wiki client. The HTTP client is blocking, so call this from
/// a blocking context (e.g. `spawn_blocking`), never from async code.
pub fn build_wiki_client(cfg: &ServiceConfig) -> Result<Arc<dyn WikiClient>, ServiceError> {
    Ok(match &cfg.wiki.fixture_dir {
        Some(dir) => Arc::new(FixtureWikiClient::from_dir(dir)?),
        None => Arc::new(HttpWikiClient::new(cfg.wiki.api_url.clone())?),
    })
}

/// Loads the search providers. Blocking, like [`build_wiki_client`].
pub fn build_providers(cfg: &ServiceConfig) -> Result<Vec<Arc<dyn SearchProvider>>, ServiceError> {
    Ok(match &cfg.media.providers {
        Some(p) => load_providers(p)?,
        None => Vec::new(),
    })
}

/// A running server plus its background tasks.
pub struct ServiceHandle {
    pub addr: SocketAddr,
    pub monitor: Arc<Monitor>,
    shutdown: watch::Sender<bool>,
    server: JoinHandle<std::io::Result<()>>,
    tasks: Vec<JoinHandle<()>>,
}

impl ServiceHandle {
    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Stops background tasks and the server, letting in-flight requests
    /// finish.
    pub async fn shutdown(self) -> Result<(), ServiceError> {
        let _ = self.shutdown.send(true);
        for t in self.tasks {
            t.abort();
            let _ = t.await;
        }
        match self.server.await {
            Ok(r) => r.map_err(|e| ServiceError::Task(e.to_string())),
            Err(e) => Err(ServiceError::Task(e.to_string())),
        }
    }

    /// Runs until ctrl-c, then shuts down.
    pub async fn wait_for_ctrl_c(self) -> Result<(), ServiceError> {
        let _ = tokio::signal::ctrl_c().await;
        info!("shutting down");
        self.shutdown().await
    }
}

/// Serves the API for `monitor` on `addr` with no background tasks.
pub async fn serve(monitor: Arc<Monitor>, addr: &str) -> Result<ServiceHandle, ServiceError> {
    let listener = TcpListener::bind(addr).await.map_err(|source| ServiceError::Bind {
        addr: addr.to_string(),
        source,
    })?;
    let local = listener.local_addr().map_err(|source| ServiceError::Bind {
        addr: addr.to_string(),
        source,
    })?;
    let (tx, rx) = watch::channel(false);
    let app = router(AppState {
        monitor: monitor.clone(),
        shutdown: rx.clone(),
    });
    let mut stop = rx;
    let server = tokio::spawn(async move {
        axum::serve(listener, app)
            .with_graceful_shutdown(async move {
                let _ = stop.wait_for(|v| *v).await;
            })
            .await
    });
    info!(addr = %local, "API listening");
    Ok(ServiceHandle {
        addr: local,
        monitor,
        shutdown: tx,
        server,
        tasks: Vec::new(),
    })
}

async fn refresh(monitor: &Arc<Monitor>) -> bool {
    let m = monitor.clone();
    match tokio::task::spawn_blocking(move || m.refresh_list()).await {
        Ok(Ok(_)) => true,
        Ok(Err(_)) => false,
        Err(e) => {
            error!(error = %e, "refresh task panicked");
            false
        }
    }
}

/// Starts the full service: restores state, builds the list if there is no
/// snapshot yet, then runs the API, the ingest worker and the periodic
/// refresh. With `stream.replay` set the clock follows the recorded events.
pub async fn start(config: ServiceConfig) -> Result<ServiceHandle, ServiceError> {
    config.validate()?;
    let manual = config.stream.replay.as_ref().map(|_| Arc::new(ManualClock::new(0)));
    let clock: Arc<dyn Clock> = match &manual {
        Some(c) => c.clone(),
        None => Arc::new(disaster_monitor_core::SystemClock),
    };
    let monitor = tokio::task::spawn_blocking({
        let config = config.clone();
        move || -> Result<Arc<Monitor>, ServiceError> {
            let wiki = build_wiki_client(&config)?;
            let providers = build_providers(&config)?;
            Ok(Monitor::open(config, clock, wiki, providers)?)
        }
    })
    .await
    .map_err(|e| ServiceError::Task(e.to_string()))??;

    if monitor.list().is_empty() && !refresh(&monitor).await {
        warn!("no monitoring list yet; edits are ignored until a refresh succeeds");
    }

    let mut handle = serve(monitor.clone(), &config.bind).await?;

    let interval = Duration::from_secs(config.refresh_interval_secs);
    let m = monitor.clone();
    handle.tasks.push(tokio::spawn(async move {
        let mut ticker = tokio::time::interval_at(tokio::time::Instant::now() + interval, interval);
        loop {
            ticker.tick().await;
            refresh(&m).await;
        }
    }));

    let source = match &config.stream.replay {
        Some(path) => StreamSource::Replay(path.clone(), config.stream.replay_speed),
        None => StreamSource::Live(config.stream.url.clone()),
    };
    let live = LiveOptions {
        backoff: config.stream.backoff,
        event_filter: (!config.stream.event_filter.is_empty()).then(|| config.stream.event_filter.clone()),
        connect_timeout: Duration::from_millis(config.stream.connect_timeout_ms),
        clock: monitor.clock().clone(),
    };
    let stream = connect(source, config.stream.mapping.clone(), config.stream.queue_capacity, live)?;
    let m = monitor.clone();
    handle.tasks.push(tokio::spawn(async move {
        let inline = manual.is_some();
        match drive(&m, manual.as_deref(), &stream, inline).await {
            Ok(r) => info!(events = r.events, opened = r.opened.len(), "stream ended"),
            Err(e) => error!(error = %e, "ingest stopped"),
        }
        stream.close();
        if let Err(e) = stream.finish().await {
            error!(error = %e, "edit stream failed");
        }
    }));
    Ok(handle)
}
