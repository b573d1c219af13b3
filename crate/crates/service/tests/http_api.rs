use std::path::Path;
use std::sync::Arc;

use lowshot_core::{acis_run, combine_estimates, AcisConfig, PoolItem, ScoredPool};
use lowshot_service::{BatchView, Created, ErrorBody, EstimateView, SessionDoc, SubmitView};
use reqwest::{Client, StatusCode};
use serde_json::{json, Value};
use tokio::sync::oneshot;

struct Server {
    base: String,
    client: Client,
    stop: Option<oneshot::Sender<()>>,
    task: Option<tokio::task::JoinHandle<()>>,
}

impl Server {
    async fn start(dir: &Path) -> Self {
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
        let base = format!("http://{}", listener.local_addr().unwrap());
        let (tx, rx) = oneshot::channel::<()>();
        let dir = dir.to_path_buf();
        let task = tokio::spawn(async move {
            lowshot_service::serve(listener, dir, async {
                let _ = rx.await;
            })
            .await
            .unwrap();
        });
        Self {
            base,
            client: Client::new(),
            stop: Some(tx),
            task: Some(task),
        }
    }

    async fn stop(mut self) {
        self.stop.take().unwrap().send(()).unwrap();
        self.task.take().unwrap().await.unwrap();
    }

    async fn get(&self, path: &str) -> (StatusCode, Vec<u8>) {
        let r = self.client.get(format!("{}{path}", self.base)).send().await.unwrap();
        (r.status(), r.bytes().await.unwrap().to_vec())
    }

    async fn post(&self, path: &str, body: Vec<u8>) -> (StatusCode, Vec<u8>) {
        let r = self
            .client
            .post(format!("{}{path}", self.base))
            .header("content-type", "application/json")
            .body(body)
            .send()
            .await
            .unwrap();
        (r.status(), r.bytes().await.unwrap().to_vec())
    }

    async fn create(&self, pool: &ScoredPool, config: &AcisConfig) -> String {
        let body = serde_json::to_vec(&json!({ "pool": pool, "config": config })).unwrap();
        let (status, bytes) = self.post("/sessions", body).await;
        assert_eq!(status, StatusCode::CREATED, "{}", String::from_utf8_lossy(&bytes));
        serde_json::from_slice::<Created>(&bytes).unwrap().session_id
    }

    async fn batch(&self, id: &str) -> Result<BatchView, (StatusCode, ErrorBody)> {
        decode(self.get(&format!("/sessions/{id}/batch")).await)
    }

    async fn submit(&self, id: &str, labels: &[(&str, Value)]) -> Result<SubmitView, (StatusCode, ErrorBody)> {
        let labels: Vec<Value> = labels.iter().map(|(i, l)| json!({ "id": i, "label": l })).collect();
        let body = serde_json::to_vec(&json!({ "labels": labels })).unwrap();
        decode(self.post(&format!("/sessions/{id}/labels"), body).await)
    }

    async fn estimate(&self, id: &str) -> Result<EstimateView, (StatusCode, ErrorBody)> {
        decode(self.get(&format!("/sessions/{id}/estimate")).await)
    }

    async fn export(&self, id: &str) -> Vec<u8> {
        let (status, bytes) = self.get(&format!("/sessions/{id}/export")).await;
        assert_eq!(status, StatusCode::OK);
        bytes
    }

    /// Answers every pending item from the ground truth, `chunk` labels per request.
    async fn drive(&self, id: &str, truth: &ScoredPool, chunk: usize, max_requests: usize) -> usize {
        let mut requests = 0;
        while requests < max_requests {
            let batch = match self.batch(id).await {
                Ok(b) => b,
                Err((_, e)) if e.error == "SessionComplete" => break,
                Err(e) => panic!("{e:?}"),
            };
            let todo: Vec<(&str, Value)> = batch
                .items
                .iter()
                .filter(|it| it.label.is_none())
                .map(|it| (it.id.as_str(), json!(u8::from(label_of(truth, &it.id)))))
                .collect();
            for part in todo.chunks(chunk) {
                if requests == max_requests {
                    break;
                }
                self.submit(id, part).await.unwrap();
                requests += 1;
            }
        }
        requests
    }
}

fn decode<T: serde::de::DeserializeOwned>((status, bytes): (StatusCode, Vec<u8>)) -> Result<T, (StatusCode, ErrorBody)> {
    if status.is_success() {
        Ok(serde_json::from_slice(&bytes).unwrap())
    } else {
        Err((status, serde_json::from_slice(&bytes).unwrap()))
    }
}

fn label_of(pool: &ScoredPool, id: &str) -> bool {
    let i: usize = id.trim_start_matches("item-").parse().unwrap();
    pool.item(i).label.unwrap()
}

fn test_pool(n: usize) -> ScoredPool {
    let items = (0..n)
        .map(|i| {
            let s = ((i * 7919) % 1000) as f64 / 1000.0;
            let y = (s > 0.85) ^ (i % 23 == 0);
            PoolItem::new(format!("item-{i}"), s, s > 0.8).with_label(y)
        })
        .collect();
    ScoredPool::new(items).unwrap()
}

fn config(budget: usize, seed: u64) -> AcisConfig {
    AcisConfig {
        budget,
        seed,
        ..AcisConfig::default()
    }
}

fn expect_err<T: std::fmt::Debug>(r: Result<T, (StatusCode, ErrorBody)>, status: StatusCode, code: &str) {
    let (s, body) = r.expect_err("request should fail");
    assert_eq!((s, body.error.as_str()), (status, code), "{}", body.message);
}

#[tokio::test]
async fn health_and_missing_sessions() {
    let dir = tempfile::tempdir().unwrap();
    let server = Server::start(dir.path()).await;
    let (status, body) = server.get("/healthz").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(serde_json::from_slice::<Value>(&body).unwrap()["status"], "ok");
    expect_err(server.batch("nope").await, StatusCode::NOT_FOUND, "NotFound");
    expect_err(server.batch("a.b").await, StatusCode::NOT_FOUND, "NotFound");
    server.stop().await;
}

#[tokio::test]
async fn first_batch_is_stable_and_reports_progress() {
    let dir = tempfile::tempdir().unwrap();
    let server = Server::start(dir.path()).await;
    let pool = test_pool(300);
    let id = server.create(&pool, &config(60, 1)).await;
    let a = server.batch(&id).await.unwrap();
    let b = server.batch(&id).await.unwrap();
    assert_eq!(a, b);
    assert!(!a.items.is_empty() && a.items.len() <= 10);
    assert_eq!(a.iteration, 1);
    assert_eq!(a.progress.labels_used, 0);
    assert_eq!(a.progress.budget, 60);
    assert_eq!(a.progress.g, None);

    // Partial submission keeps the batch and advances the count.
    let first = &a.items[0];
    let r = server.submit(&id, &[(first.id.as_str(), json!(1))]).await.unwrap();
    assert_eq!(r.completed_iteration, None);
    assert_eq!(r.progress.labels_used, 1);
    let c = server.batch(&id).await.unwrap();
    assert_eq!(c.items.iter().map(|i| &i.id).collect::<Vec<_>>(), a.items.iter().map(|i| &i.id).collect::<Vec<_>>());
    assert_eq!(c.items[0].label, Some(1));
    assert_eq!(c.progress.labels_used, c.items.iter().filter(|i| i.label.is_some()).count());
    server.stop().await;
}

#[tokio::test]
async fn invalid_pools_and_configs_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let server = Server::start(dir.path()).await;
    let dup = json!({ "pool": { "items": [
        { "id": "a", "score": 0.1, "predicted": 0 },
        { "id": "a", "score": 0.9, "predicted": 1 }
    ] } });
    let bad_label = json!({ "pool": { "items": [ { "id": "a", "score": 0.1, "predicted": 0, "label": 7 } ] } });
    let too_big = json!({ "pool": test_pool(20), "config": config(21, 0) });
    for body in [dup, bad_label, too_big, json!({ "config": {} })] {
        let r: Result<Created, _> = decode(server.post("/sessions", serde_json::to_vec(&body).unwrap()).await);
        expect_err(r, StatusCode::BAD_REQUEST, "ValidationError");
    }
    let r: Result<Created, _> = decode(server.post("/sessions", b"not json".to_vec()).await);
    expect_err(r, StatusCode::BAD_REQUEST, "ValidationError");
    server.stop().await;
}

#[tokio::test]
async fn bad_submissions_change_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let server = Server::start(dir.path()).await;
    let pool = test_pool(300);
    let id = server.create(&pool, &config(60, 2)).await;
    let batch = server.batch(&id).await.unwrap();
    let (x, y) = (batch.items[0].id.as_str(), batch.items[1].id.as_str());
    server.submit(&id, &[(x, json!(0))]).await.unwrap();
    let before = server.export(&id).await;

    let outside = (0..300).map(|i| format!("item-{i}")).find(|s| batch.items.iter().all(|it| &it.id != s)).unwrap();
    expect_err(server.submit(&id, &[(y, json!(1)), (outside.as_str(), json!(1))]).await, StatusCode::BAD_REQUEST, "UnknownItem");
    expect_err(server.submit(&id, &[("ghost", json!(1))]).await, StatusCode::BAD_REQUEST, "UnknownItem");
    expect_err(server.submit(&id, &[(y, json!(1)), (x, json!(1))]).await, StatusCode::CONFLICT, "AlreadyLabeled");
    expect_err(server.submit(&id, &[(y, json!(1)), (y, json!(0))]).await, StatusCode::CONFLICT, "AlreadyLabeled");
    expect_err(server.submit(&id, &[(y, json!(2))]).await, StatusCode::BAD_REQUEST, "InvalidLabel");
    expect_err(server.submit(&id, &[(y, json!("yes"))]).await, StatusCode::BAD_REQUEST, "InvalidLabel");
    expect_err(server.submit(&id, &[]).await, StatusCode::BAD_REQUEST, "ValidationError");

    assert_eq!(server.export(&id).await, before);
    server.stop().await;
}

#[tokio::test]
async fn estimates_follow_completed_iterations() {
    let dir = tempfile::tempdir().unwrap();
    let server = Server::start(dir.path()).await;
    let pool = test_pool(400);
    let id = server.create(&pool, &config(70, 3)).await;
    expect_err(server.estimate(&id).await, StatusCode::CONFLICT, "NoEstimateYet");

    let batch = server.batch(&id).await.unwrap();
    let labels: Vec<(&str, Value)> = batch.items.iter().map(|it| (it.id.as_str(), json!(u8::from(label_of(&pool, &it.id))))).collect();
    let r = server.submit(&id, &labels).await.unwrap();
    assert_eq!(r.completed_iteration, Some(1));
    let est = server.estimate(&id).await.unwrap();
    assert_eq!(est.per_iteration.len(), 1);
    assert_eq!(est.g_combined, est.per_iteration[0].g);
    assert_eq!(est.var_combined, est.per_iteration[0].var);
    assert_eq!(r.progress.g, Some(est.g_combined));

    server.drive(&id, &pool, 7, usize::MAX).await;
    let est = server.estimate(&id).await.unwrap();
    let doc: SessionDoc = serde_json::from_slice(&server.export(&id).await).unwrap();
    let offline = combine_estimates(&doc.run.records, doc.run.config.avg_window).unwrap();
    assert_eq!(est.g_combined, offline.g);
    assert_eq!(est.var_combined, offline.var);
    assert_eq!(est.per_iteration.iter().map(|p| p.batch_size).collect::<Vec<_>>(), vec![10, 20, 40]);

    expect_err(server.batch(&id).await, StatusCode::CONFLICT, "SessionComplete");
    expect_err(server.submit(&id, &[("item-0", json!(1))]).await, StatusCode::CONFLICT, "SessionComplete");
    server.stop().await;
}

#[tokio::test]
async fn oracle_client_reproduces_the_library_run() {
    let dir = tempfile::tempdir().unwrap();
    let server = Server::start(dir.path()).await;
    let pool = test_pool(500);
    let cfg = config(150, 11);
    let id = server.create(&pool, &cfg).await;
    server.drive(&id, &pool, 4, usize::MAX).await;
    let doc: SessionDoc = serde_json::from_slice(&server.export(&id).await).unwrap();
    let truth = pool.oracle_labels().unwrap();
    let direct = acis_run(Arc::new(pool.without_labels()), |i| truth[i], cfg).unwrap();
    assert_eq!(serde_json::to_string(&doc.run.records).unwrap(), serde_json::to_string(&direct.records).unwrap());
    assert_eq!(doc.run.labeled, direct.labeled);
    server.stop().await;
}

#[tokio::test]
async fn export_import_round_trips_and_resumes() {
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let (s1, s2) = (Server::start(d1.path()).await, Server::start(d2.path()).await);
    let pool = test_pool(400);
    let id = s1.create(&pool, &config(100, 4)).await;
    s1.drive(&id, &pool, 3, 5).await;
    let exported = s1.export(&id).await;
    let doc: SessionDoc = serde_json::from_slice(&exported).unwrap();
    assert!(!doc.pool.has_oracle() && doc.pool.items().iter().all(|it| it.label.is_none()));

    let (status, body) = s1.post("/sessions/import", exported.clone()).await;
    assert_eq!(status, StatusCode::CONFLICT, "{}", String::from_utf8_lossy(&body));

    let (status, body) = s2.post("/sessions/import", exported.clone()).await;
    assert_eq!(status, StatusCode::CREATED);
    assert_eq!(serde_json::from_slice::<Created>(&body).unwrap().session_id, id);
    assert_eq!(s2.export(&id).await, exported);

    s1.drive(&id, &pool, 5, usize::MAX).await;
    s2.drive(&id, &pool, 5, usize::MAX).await;
    let strip = |b: Vec<u8>| {
        let mut v: Value = serde_json::from_slice(&b).unwrap();
        v.as_object_mut().unwrap().remove("updated_at");
        v
    };
    assert_eq!(strip(s1.export(&id).await), strip(s2.export(&id).await));
    s1.stop().await;
    s2.stop().await;
}

#[tokio::test]
async fn imports_check_the_schema_version_and_content() {
    let dir = tempfile::tempdir().unwrap();
    let server = Server::start(dir.path()).await;
    let pool = test_pool(200);
    let id = server.create(&pool, &config(40, 5)).await;
    server.drive(&id, &pool, 10, 2).await;
    let mut doc: Value = serde_json::from_slice(&server.export(&id).await).unwrap();
    doc["session_id"] = json!("copy");

    let mut wrong = doc.clone();
    wrong["schema_version"] = json!(99);
    let r: Result<Created, _> = decode(server.post("/sessions/import", serde_json::to_vec(&wrong).unwrap()).await);
    expect_err(r, StatusCode::BAD_REQUEST, "SchemaMismatch");

    let mut tampered = doc.clone();
    let labeled = tampered["run"]["labeled"].as_array_mut().unwrap();
    let flipped = !labeled[0][1].as_bool().unwrap();
    labeled[0][1] = json!(flipped);
    let r: Result<Created, _> = decode(server.post("/sessions/import", serde_json::to_vec(&tampered).unwrap()).await);
    expect_err(r, StatusCode::BAD_REQUEST, "ValidationError");

    let mut escape = doc.clone();
    escape["session_id"] = json!("../x");
    let r: Result<Created, _> = decode(server.post("/sessions/import", serde_json::to_vec(&escape).unwrap()).await);
    expect_err(r, StatusCode::BAD_REQUEST, "ValidationError");

    let r: Created = decode(server.post("/sessions/import", serde_json::to_vec(&doc).unwrap()).await).unwrap();
    assert_eq!(r.session_id, "copy");
    assert_eq!(server.batch("copy").await.unwrap(), server.batch(&id).await.unwrap_or_else(|e| panic!("{e:?}")).with_id("copy"));
    server.stop().await;
}

trait WithId {
    fn with_id(self, id: &str) -> Self;
}

impl WithId for BatchView {
    fn with_id(mut self, id: &str) -> Self {
        self.session_id = id.to_string();
        self
    }
}

#[tokio::test]
async fn restart_resumes_from_disk() {
    let dir = tempfile::tempdir().unwrap();
    let pool = test_pool(500);
    let cfg = config(120, 8);
    let server = Server::start(dir.path()).await;
    let id = server.create(&pool, &cfg).await;
    server.drive(&id, &pool, 6, 4).await;
    let pending = server.batch(&id).await.unwrap();
    server.stop().await;

    // A stale temp file from an interrupted write must not matter.
    std::fs::write(dir.path().join(format!(".{id}.json.tmp")), b"{ torn").unwrap();
    let server = Server::start(dir.path()).await;
    assert_eq!(server.batch(&id).await.unwrap(), pending);
    server.drive(&id, &pool, 6, usize::MAX).await;
    let doc: SessionDoc = serde_json::from_slice(&server.export(&id).await).unwrap();
    let truth = pool.oracle_labels().unwrap();
    let direct = acis_run(Arc::new(pool.without_labels()), |i| truth[i], cfg).unwrap();
    assert_eq!(doc.run.records, direct.records);
    server.stop().await;
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_submissions_to_one_session_serialize() {
    let dir = tempfile::tempdir().unwrap();
    let server = Arc::new(Server::start(dir.path()).await);
    let pool = test_pool(300);
    let id = server.create(&pool, &config(40, 6)).await;
    let batch = server.batch(&id).await.unwrap();
    let mut tasks = Vec::new();
    for item in batch.items.clone() {
        let (server, id, label) = (server.clone(), id.clone(), u8::from(label_of(&pool, &item.id)));
        tasks.push(tokio::spawn(async move { server.submit(&id, &[(item.id.as_str(), json!(label))]).await.unwrap() }));
    }
    let mut completed = 0;
    for t in tasks {
        completed += usize::from(t.await.unwrap().completed_iteration.is_some());
    }
    assert_eq!(completed, 1);
    let est = server.estimate(&id).await.unwrap();
    assert_eq!(est.per_iteration.len(), 1);
    assert_eq!(server.batch(&id).await.unwrap().progress.labels_used, batch.items.len());
}
