//! HTTP front end: every request is forwarded to [`NodeService::handle`].

use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{Method as HttpMethod, StatusCode, Uri};
use axum::response::{IntoResponse, Response};
use axum::{Json, Router};
use tokio::net::TcpListener;
use tokio::sync::oneshot;

use crate::service::{Method, NodeService, RpcError};

async fn dispatch(State(svc): State<Arc<NodeService>>, method: HttpMethod, uri: Uri, body: Bytes) -> Response {
    let method = match method {
        HttpMethod::GET => Method::Get,
        HttpMethod::POST => Method::Post,
        _ => return StatusCode::METHOD_NOT_ALLOWED.into_response(),
    };
    let path = uri.path_and_query().map(|p| p.as_str().to_string()).unwrap_or_else(|| "/".into());
    let body: Option<serde_json::Value> = if body.is_empty() {
        None
    } else {
        match serde_json::from_slice(&body) {
            Ok(j) => Some(j),
            Err(e) => return reply(Err(RpcError::decode(format!("invalid JSON body: {e}")))),
        }
    };
    let out = tokio::task::spawn_blocking(move || svc.handle(method, &path, body.as_ref()))
        .await
        .unwrap_or_else(|e| Err(RpcError::decode(format!("handler panicked: {e}"))));
    reply(out)
}

fn reply(r: Result<serde_json::Value, RpcError>) -> Response {
    match r {
        Ok(j) => Json(j).into_response(),
        Err(e) => {
            let status = StatusCode::from_u16(e.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
            (status, Json(e.body)).into_response()
        }
    }
}

pub fn router(svc: Arc<NodeService>) -> Router {
    Router::new().fallback(dispatch).with_state(svc)
}

/// Bakes a block every `every` until the task is dropped.
pub fn spawn_baker(svc: Arc<NodeService>, every: Duration) -> tokio::task::JoinHandle<()> {
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(every);
        tick.tick().await;
        loop {
            tick.tick().await;
            let s = svc.clone();
            if tokio::task::spawn_blocking(move || s.bake()).await.is_err() {
                return;
            }
        }
    })
}

pub async fn serve(listener: TcpListener, svc: Arc<NodeService>, shutdown: impl std::future::Future<Output = ()> + Send + 'static) -> std::io::Result<()> {
    axum::serve(listener, router(svc)).with_graceful_shutdown(shutdown).await
}

/// A server on its own runtime thread, stopped when dropped.
pub struct BackgroundNode {
    pub addr: SocketAddr,
    stop: Option<oneshot::Sender<()>>,
    thread: Option<std::thread::JoinHandle<()>>,
}

impl BackgroundNode {
    pub fn start(svc: Arc<NodeService>, bake_every: Option<Duration>) -> std::io::Result<BackgroundNode> {
        let rt = tokio::runtime::Builder::new_multi_thread().worker_threads(2).enable_all().build()?;
        let listener = rt.block_on(TcpListener::bind("127.0.0.1:0"))?;
        let addr = listener.local_addr()?;
        let (tx, rx) = oneshot::channel::<()>();
        let thread = std::thread::spawn(move || {
            rt.block_on(async move {
                let baker = bake_every.map(|d| spawn_baker(svc.clone(), d));
                let _ = serve(listener, svc, async {
                    let _ = rx.await;
                })
                .await;
                if let Some(b) = baker {
                    b.abort();
                }
            });
        });
        Ok(BackgroundNode { addr, stop: Some(tx), thread: Some(thread) })
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }
}

impl Drop for BackgroundNode {
    fn drop(&mut self) {
        if let Some(tx) = self.stop.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}
