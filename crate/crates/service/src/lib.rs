//! Live feedback service: ingests glove streams, pushes per-sensor feedback
//! to subscribers and produces competency reports when a participant is done.

pub mod hub;
pub mod ingest;
pub mod live;
pub mod messages;
pub mod server;
pub mod settings;

use std::net::SocketAddr;
use std::sync::Arc;

use tokio::net::TcpListener;
use tokio::sync::watch;
use tokio::task::JoinHandle;

pub use hub::{Hub, IngestSummary, ServiceError, SessionInfo, SessionState, Subscription, SubscriptionFilter};
pub use live::{FinishedSession, LiveSensorState, LiveSession, SNAPSHOT_INTERVAL_MS};
pub use messages::{FeedbackBody, FeedbackMessage, OpenSession};
pub use settings::ServiceConfig;

/// Running HTTP and ingest listeners.
pub struct ServerHandle {
    pub http_addr: SocketAddr,
    pub ingest_addr: SocketAddr,
    pub hub: Arc<Hub>,
    stop: watch::Sender<bool>,
    tasks: Vec<JoinHandle<()>>,
}

impl ServerHandle {
    /// Stop accepting, close live connections and wait for the listeners.
    pub async fn shutdown(self) {
        let _ = self.stop.send(true);
        for t in self.tasks {
            let _ = t.await;
        }
    }

    /// Run until the listeners exit or `signal` resolves.
    pub async fn run_until(self, signal: impl std::future::Future<Output = ()>) {
        signal.await;
        self.shutdown().await;
    }
}

/// Bind both listeners (port 0 picks a free port) and start serving.
pub async fn spawn(cfg: ServiceConfig) -> Result<ServerHandle, ServiceError> {
    let bind = |addr: String| async move {
        TcpListener::bind(&addr)
            .await
            .map_err(|e| ServiceError::Storage(format!("binding {addr}: {e}")))
    };
    let http = bind(cfg.http_listen.clone()).await?;
    let ingest = bind(cfg.ingest_listen.clone()).await?;
    let local = |l: &TcpListener| l.local_addr().map_err(|e| ServiceError::Storage(e.to_string()));
    let (http_addr, ingest_addr) = (local(&http)?, local(&ingest)?);
    let hub = Arc::new(Hub::new(cfg)?);
    let (stop, stopped) = watch::channel(false);

    let app = server::router(server::AppState {
        hub: hub.clone(),
        shutdown: stopped.clone(),
    });
    let mut http_stop = stopped.clone();
    let http_task = tokio::spawn(async move {
        let graceful = async move {
            let _ = http_stop.changed().await;
        };
        if let Err(e) = axum::serve(http, app).with_graceful_shutdown(graceful).await {
            tracing::error!(error = %e, "http server failed");
        }
    });
    let ingest_task = tokio::spawn(ingest::serve_ingest(ingest, hub.clone(), stopped));
    tracing::info!(%http_addr, %ingest_addr, "feedback service listening");
    Ok(ServerHandle {
        http_addr,
        ingest_addr,
        hub,
        stop,
        tasks: vec![http_task, ingest_task],
    })
}
