//! Session-oriented labeling service: serves ACIS batches over HTTP, takes
//! human labels, and reports the running estimate and its variance.

pub mod error;
pub mod http;
pub mod session;
pub mod store;

use std::future::Future;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

pub use error::{ErrorBody, Result, ServiceError};
pub use http::{router, Created};
pub use session::{
    BatchItem, BatchView, CreateRequest, EstimateView, IterationView, LabelIn, Progress, Session, SessionDoc,
    SessionState, SubmitRequest, SubmitView, SCHEMA_VERSION,
};
pub use store::SessionStore;

/// Serves on an already-bound listener until `shutdown` resolves.
pub async fn serve(
    listener: tokio::net::TcpListener,
    data_dir: PathBuf,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    let store = SessionStore::open(&data_dir).map_err(std::io::Error::other)?;
    let addr: SocketAddr = listener.local_addr()?;
    log::info!("listening on {addr}, sessions in {}", data_dir.display());
    axum::serve(listener, router(Arc::new(store)))
        .with_graceful_shutdown(shutdown)
        .await
}
