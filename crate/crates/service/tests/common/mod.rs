#![allow(dead_code)]

use std::time::Duration;

use futures::StreamExt;
use tokio::net::TcpStream;
use tokio_tungstenite::tungstenite::Message;
use tokio_tungstenite::{MaybeTlsStream, WebSocketStream};

use palpation_core::simulator::{generate_session_with_meta, Archetype, SimProfile};
use palpation_core::telemetry::{Cohort, Session, SessionMeta, TaskKind};
use palpation_service::{spawn, FeedbackMessage, ServerHandle, ServiceConfig};

pub type Ws = WebSocketStream<MaybeTlsStream<TcpStream>>;

pub async fn server(cfg: ServiceConfig) -> ServerHandle {
    spawn(ServiceConfig {
        http_listen: "127.0.0.1:0".into(),
        ingest_listen: "127.0.0.1:0".into(),
        ..cfg
    })
    .await
    .unwrap()
}

pub fn url(h: &ServerHandle, path: &str) -> String {
    format!("http://{}{path}", h.http_addr)
}

pub async fn ws(h: &ServerHandle, query: &str) -> Ws {
    let (socket, _) = tokio_tungstenite::connect_async(format!("ws://{}/ws{query}", h.http_addr))
        .await
        .unwrap();
    // The subscription is registered once the upgrade handler runs.
    for _ in 0..200 {
        if h.hub.subscriber_count() > 0 {
            break;
        }
        tokio::time::sleep(Duration::from_millis(5)).await;
    }
    socket
}

pub async fn next_message(socket: &mut Ws, wait: Duration) -> Option<FeedbackMessage> {
    loop {
        match tokio::time::timeout(wait, socket.next()).await {
            Ok(Some(Ok(Message::Text(t)))) => return Some(serde_json::from_str(&t).unwrap()),
            Ok(Some(Ok(_))) => continue,
            _ => return None,
        }
    }
}

/// Read until a message satisfies `stop` (inclusive) or nothing arrives for a second.
pub async fn collect_until(socket: &mut Ws, stop: impl Fn(&FeedbackMessage) -> bool) -> Vec<FeedbackMessage> {
    let mut out = Vec::new();
    while let Some(m) = next_message(socket, Duration::from_secs(5)).await {
        let done = stop(&m);
        out.push(m);
        if done {
            break;
        }
    }
    out
}

pub fn meta(id: &str, pid: &str, task: TaskKind) -> SessionMeta {
    SessionMeta::new(id, pid, Cohort::VT, task)
}

pub fn sim(a: Archetype, m: SessionMeta, seed: u64) -> Session {
    generate_session_with_meta(&SimProfile::archetype(a), m, seed).unwrap()
}

pub fn ideal_triplet(pid: &str, seed: u64) -> Vec<Session> {
    [
        (Archetype::IdealSuperficial, TaskKind::Superficial),
        (Archetype::IdealDeep, TaskKind::Deep),
        (Archetype::IdealLiver, TaskKind::Liver),
    ]
    .into_iter()
    .map(|(a, t)| sim(a, meta(&format!("{pid}-{}", t.name()), pid, t), seed))
    .collect()
}
