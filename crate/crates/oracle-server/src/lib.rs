//! HTTP server exposing an [`Oracle`] over the `/candidates` protocol,
//! with deterministic failure injection for robustness tests.

use std::io;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;

use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::post;
use axum::{Json, Router};
use pact_core::search::Oracle;
use serde::{Deserialize, Serialize};
use tokio::sync::oneshot;

#[derive(Deserialize)]
struct CandidateRequest {
    tactic_state: String,
    n: usize,
    #[allow(dead_code)]
    keyword: Option<String>,
}

#[derive(Serialize)]
struct WireCandidate {
    text: String,
    logprob: f64,
}

#[derive(Serialize)]
struct CandidateResponse {
    candidates: Vec<WireCandidate>,
}

#[derive(Debug, Default)]
pub struct Stats {
    pub requests: AtomicU64,
    pub failures: AtomicU64,
}

struct Shared {
    oracle: Arc<dyn Oracle>,
    failure_rate: f64,
    stats: Arc<Stats>,
}

/// Request `i` (0-based arrival order) fails when `floor((i+1)·rate)`
/// exceeds `floor(i·rate)`, so any prefix of `k` requests sees
/// `floor(k·rate)` failures.
pub fn injected_failure(i: u64, rate: f64) -> bool {
    let rate = rate.clamp(0.0, 1.0);
    ((i + 1) as f64 * rate).floor() > (i as f64 * rate).floor()
}

async fn candidates(State(s): State<Arc<Shared>>, Json(req): Json<CandidateRequest>) -> Response {
    let i = s.stats.requests.fetch_add(1, Ordering::SeqCst);
    if injected_failure(i, s.failure_rate) {
        s.stats.failures.fetch_add(1, Ordering::SeqCst);
        return (StatusCode::SERVICE_UNAVAILABLE, "injected failure").into_response();
    }
    let oracle = s.oracle.clone();
    let cands = tokio::task::spawn_blocking(move || oracle.query(&req.tactic_state, req.n)).await.unwrap_or_default();
    let candidates = cands.into_iter().map(|(text, logprob)| WireCandidate { text, logprob }).collect();
    Json(CandidateResponse { candidates }).into_response()
}

pub fn router(oracle: Arc<dyn Oracle>, failure_rate: f64, stats: Arc<Stats>) -> Router {
    Router::new().route("/candidates", post(candidates)).with_state(Arc::new(Shared { oracle, failure_rate, stats }))
}

/// Serve until `shutdown` resolves.
pub async fn serve<F>(listener: tokio::net::TcpListener, app: Router, shutdown: F) -> io::Result<()>
where
    F: std::future::Future<Output = ()> + Send + 'static,
{
    axum::serve(listener, app).with_graceful_shutdown(shutdown).await
}

/// Blocking foreground server for the CLI.
pub fn run_forever(addr: SocketAddr, oracle: Arc<dyn Oracle>, failure_rate: f64) -> io::Result<()> {
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr).await?;
        tracing::info!(addr = %listener.local_addr()?, "oracle server listening");
        serve(listener, router(oracle, failure_rate, Arc::default()), std::future::pending()).await
    })
}

/// A server on its own runtime thread; dropped handles shut it down.
pub struct BackgroundServer {
    pub addr: SocketAddr,
    pub stats: Arc<Stats>,
    shutdown: Option<oneshot::Sender<()>>,
    thread: Option<JoinHandle<io::Result<()>>>,
}

impl BackgroundServer {
    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }
}

impl Drop for BackgroundServer {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

/// Bind 127.0.0.1 on an ephemeral port and serve in the background.
pub fn spawn_background(oracle: Arc<dyn Oracle>, failure_rate: f64) -> io::Result<BackgroundServer> {
    let std_listener = std::net::TcpListener::bind("127.0.0.1:0")?;
    std_listener.set_nonblocking(true)?;
    let addr = std_listener.local_addr()?;
    let stats = Arc::new(Stats::default());
    let app = router(oracle, failure_rate, stats.clone());
    let (tx, rx) = oneshot::channel::<()>();
    let thread = std::thread::Builder::new().name("oracle-server".into()).spawn(move || {
        let rt = tokio::runtime::Builder::new_multi_thread().worker_threads(2).enable_all().build()?;
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::from_std(std_listener)?;
            serve(listener, app, async {
                let _ = rx.await;
            })
            .await
        })
    })?;
    Ok(BackgroundServer { addr, stats, shutdown: Some(tx), thread: Some(thread) })
}
