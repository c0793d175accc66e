//! Raw TCP ingest. A connection starts with one JSON header line (an
//! [`OpenSession`]); every byte after it is wire frames. The server answers
//! with one JSON line after the header and, if it finalized the task, one
//! more when the stream ends.

use std::sync::Arc;

use serde_json::json;
use tokio::io::{AsyncBufReadExt, AsyncReadExt, AsyncWriteExt, BufReader};
use tokio::net::{TcpListener, TcpStream};
use tokio::sync::watch;

use crate::hub::{Hub, ServiceError};
use crate::messages::OpenSession;

const MAX_HEADER_BYTES: u64 = 64 * 1024;
const READ_CHUNK: usize = 4096;

pub async fn serve_ingest(listener: TcpListener, hub: Arc<Hub>, mut shutdown: watch::Receiver<bool>) {
    loop {
        tokio::select! {
            accepted = listener.accept() => match accepted {
                Ok((stream, peer)) => {
                    let hub = hub.clone();
                    let stop = shutdown.clone();
                    tokio::spawn(async move {
                        if let Err(e) = handle(stream, hub, stop).await {
                            tracing::warn!(%peer, error = %e, "ingest connection failed");
                        }
                    });
                }
                Err(e) => tracing::warn!(error = %e, "accept failed"),
            },
            _ = shutdown.changed() => break,
        }
    }
}

async fn reply(stream: &mut (impl AsyncWriteExt + Unpin), value: serde_json::Value) -> std::io::Result<()> {
    let mut line = value.to_string();
    line.push('\n');
    stream.write_all(line.as_bytes()).await
}

async fn handle(stream: TcpStream, hub: Arc<Hub>, mut shutdown: watch::Receiver<bool>) -> std::io::Result<()> {
    stream.set_nodelay(true)?;
    let (read_half, mut write_half) = stream.into_split();
    let mut reader = BufReader::new(read_half);

    let mut header = String::new();
    (&mut reader).take(MAX_HEADER_BYTES).read_line(&mut header).await?;
    let req = match parse_header(&header) {
        Ok(r) => r,
        Err(e) => return reply(&mut write_half, json!({ "error": e.body() })).await,
    };
    if let Err(e) = attach_or_open(&hub, &req) {
        return reply(&mut write_half, json!({ "error": e.body() })).await;
    }
    reply(&mut write_half, json!({ "ok": true, "session_id": req.session_id })).await?;
    tracing::info!(session = %req.session_id, "ingest stream attached");

    let mut buf = vec![0u8; READ_CHUNK];
    loop {
        let n = tokio::select! {
            n = reader.read(&mut buf) => n?,
            _ = shutdown.changed() => 0,
        };
        if n == 0 {
            break;
        }
        if let Err(e) = hub.ingest_bytes(&req.session_id, &buf[..n]) {
            // Finalized from elsewhere while we were streaming.
            return reply(&mut write_half, json!({ "error": e.body() })).await;
        }
    }

    if req.finalize_on_close {
        let id = req.session_id.clone();
        let hub = hub.clone();
        let result = tokio::task::spawn_blocking(move || hub.finalize_task(&id))
            .await
            .map_err(std::io::Error::other)?;
        let line = match result {
            Ok(info) => json!({ "finalized": info }),
            Err(e) => json!({ "error": e.body() }),
        };
        // The peer may already be gone; the session is finalized regardless.
        let _ = reply(&mut write_half, line).await;
    }
    Ok(())
}

fn parse_header(line: &str) -> Result<OpenSession, ServiceError> {
    if !line.ends_with('\n') {
        return Err(ServiceError::BadRequest("missing or oversized header line".into()));
    }
    serde_json::from_str(line.trim_end()).map_err(|e| ServiceError::BadRequest(format!("invalid header: {e}")))
}

fn attach_or_open(hub: &Hub, req: &OpenSession) -> Result<(), ServiceError> {
    if hub.is_open(&req.session_id) {
        return Ok(());
    }
    let meta = req.to_meta().map_err(ServiceError::BadRequest)?;
    hub.open_session(meta)
}
