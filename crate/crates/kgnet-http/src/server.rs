//! The platform's HTTP surface: a SPARQL 1.1 protocol endpoint over the
//! embedded store, the GMLaaS JSON API, and the SPARQL-ML query API.
//! All JSON bodies carry `"v": 1`.

use std::net::SocketAddr;
use std::path::Path;
use std::sync::Arc;

use axum::extract::{Form, Path as UrlPath, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};

use kgnet_core::engine::{parse_store_query, QueryOutcome};
use kgnet_core::gml::{select_method, KnnQuery};
use kgnet_core::pipeline::{Platform, PipelineError, QueryOutput};
use kgnet_core::rdf::ntriples;
use kgnet_core::sparqlml::parse_train_json;
use kgnet_core::transform::{package_read, package_read_dir, DatasetPackage};

use crate::results::table_to_json;

const API_VERSION: u32 = 1;

struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn bad_request(message: impl Into<String>) -> ApiError {
        ApiError {
            status: StatusCode::BAD_REQUEST,
            message: message.into(),
        }
    }

    fn not_found(message: impl Into<String>) -> ApiError {
        ApiError {
            status: StatusCode::NOT_FOUND,
            message: message.into(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({ "v": API_VERSION, "error": self.message });
        (self.status, Json(body)).into_response()
    }
}

impl From<PipelineError> for ApiError {
    fn from(e: PipelineError) -> ApiError {
        ApiError::bad_request(e.to_string())
    }
}

fn check_version(v: u32) -> Result<(), ApiError> {
    if v == API_VERSION {
        Ok(())
    } else {
        Err(ApiError::bad_request(format!(
            "unsupported protocol version {v}; this server speaks v{API_VERSION}"
        )))
    }
}

/// The full route set over one platform instance.
pub fn router(platform: Arc<Platform>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/sparql", post(sparql))
        .route("/sparqlml", post(sparqlml))
        .route("/gml/train", post(gml_train))
        .route("/gml/infer/nodeclass", post(gml_nodeclass))
        .route("/gml/infer/links", post(gml_links))
        .route("/gml/knn", post(gml_knn))
        .route("/gml/models/:artifact", get(gml_get_model).delete(gml_delete_model))
        .with_state(platform)
}

async fn health() -> Json<Value> {
    Json(json!({ "v": API_VERSION, "status": "ok" }))
}

#[derive(Deserialize)]
struct SparqlForm {
    query: Option<String>,
    update: Option<String>,
}

/// SPARQL 1.1 protocol over the embedded store: urlencoded `query=` or
/// `update=`, JSON results for SELECT, N-Triples for CONSTRUCT.
async fn sparql(
    State(platform): State<Arc<Platform>>,
    Form(form): Form<SparqlForm>,
) -> Result<Response, ApiError> {
    let backend = platform.backend();
    let text = form
        .query
        .as_deref()
        .or(form.update.as_deref())
        .ok_or_else(|| ApiError::bad_request("missing query or update parameter"))?;
    let parsed = parse_store_query(text).map_err(|e| ApiError::bad_request(e.to_string()))?;
    let outcome = backend
        .run(&parsed)
        .map_err(|e| ApiError::bad_request(e.to_string()))?;
    Ok(match outcome {
        QueryOutcome::Table(table) => Json(table_to_json(&table)).into_response(),
        QueryOutcome::Triples(triples) => (
            [(header::CONTENT_TYPE, "application/n-triples")],
            ntriples::serialize(&triples),
        )
            .into_response(),
        QueryOutcome::Count(n) => Json(json!({ "v": API_VERSION, "count": n })).into_response(),
    })
}

#[derive(Deserialize)]
struct SparqlMlRequest {
    v: u32,
    query: String,
}

/// SPARQL-ML queries: SELECT plans and executes, INSERT trains, DELETE
/// removes models.
async fn sparqlml(
    State(platform): State<Arc<Platform>>,
    Json(req): Json<SparqlMlRequest>,
) -> Result<Json<Value>, ApiError> {
    check_version(req.v)?;
    let output = platform.query(&req.query)?;
    Ok(Json(match output {
        QueryOutput::Bindings(table) => {
            let mut doc = table_to_json(&table);
            doc["v"] = json!(API_VERSION);
            doc
        }
        QueryOutput::Trained(meta) => json!({
            "v": API_VERSION,
            "trained": model_meta_json(&meta),
        }),
        QueryOutput::Deleted(uris) => json!({ "v": API_VERSION, "deleted": uris }),
    }))
}

fn model_meta_json(meta: &kgnet_core::kgmeta::ModelMetadata) -> Value {
    json!({
        "model_uri": meta.model_uri,
        "task_type": format!("{:?}", meta.task_type),
        "method": meta.method_name,
        "accuracy": meta.accuracy,
        "inference_time_ms": meta.inference_time_ms,
        "cardinality": meta.model_cardinality,
        "artifact_ref": meta.artifact_ref,
        "sampling": { "d": meta.sampling.0, "h": meta.sampling.1 },
    })
}

#[derive(Deserialize)]
struct TrainRequest {
    v: u32,
    /// TrainGML document: either the raw text or an embedded JSON object.
    train_gml: Value,
    /// Optional pre-built dataset package (zip file or directory); when
    /// absent the task is sampled and transformed from the platform KG.
    package: Option<String>,
}

fn load_package(path: &str) -> Result<DatasetPackage, ApiError> {
    let p = Path::new(path);
    let result = if p.is_dir() {
        package_read_dir(p)
    } else {
        package_read(p)
    };
    result.map_err(|e| ApiError::bad_request(format!("package {path}: {e}")))
}

async fn gml_train(
    State(platform): State<Arc<Platform>>,
    Json(req): Json<TrainRequest>,
) -> Result<Json<Value>, ApiError> {
    check_version(req.v)?;
    let text = match &req.train_gml {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    };
    let task = parse_train_json(&text).map_err(ApiError::bad_request)?;

    if let Some(path) = &req.package {
        // GMLaaS-only path: train on a prepared package, no KG sampling
        // and no metadata registration
        let pkg = load_package(path)?;
        let profile = match &task.method_override {
            Some(name) => kgnet_core::gml::profile_named(&platform.profiles, name)
                .ok_or_else(|| ApiError::bad_request(format!("unknown method {name:?}")))?,
            None => {
                let (p, _) = select_method(
                    &platform.profiles,
                    task.task_type,
                    &pkg.stats,
                    &task.budget,
                    platform.embedding_dim,
                )
                .map_err(|e| ApiError::bad_request(e.to_string()))?;
                p
            }
        };
        let model = platform
            .gml
            .train(&task, &pkg, profile)
            .map_err(|e| ApiError::bad_request(e.to_string()))?;
        Ok(Json(json!({
            "v": API_VERSION,
            "artifact_ref": model.artifact_ref,
            "method": model.method_name,
            "task_type": format!("{:?}", model.task_type),
            "accuracy": model.metrics.accuracy,
            "inference_time_ms": model.metrics.mean_inference_ms,
            "cardinality": model.metrics.cardinality,
        })))
    } else {
        let meta = platform.train(&task)?;
        Ok(Json(json!({ "v": API_VERSION, "trained": model_meta_json(&meta) })))
    }
}

#[derive(Deserialize)]
struct NodeClassRequest {
    v: u32,
    model: String,
    targets: Vec<String>,
}

async fn gml_nodeclass(
    State(platform): State<Arc<Platform>>,
    Json(req): Json<NodeClassRequest>,
) -> Result<Json<Value>, ApiError> {
    check_version(req.v)?;
    let out = platform
        .gml
        .infer_node_class(&req.model, &req.targets)
        .map_err(|e| ApiError::bad_request(e.to_string()))?;
    Ok(Json(json!({
        "v": API_VERSION,
        "predictions": out.predictions,
        "unresolved": out.unresolved,
    })))
}

#[derive(Deserialize)]
struct LinksRequest {
    v: u32,
    model: String,
    sources: Vec<String>,
    k: usize,
}

async fn gml_links(
    State(platform): State<Arc<Platform>>,
    Json(req): Json<LinksRequest>,
) -> Result<Json<Value>, ApiError> {
    check_version(req.v)?;
    let out = platform
        .gml
        .infer_links(&req.model, &req.sources, req.k)
        .map_err(|e| ApiError::bad_request(e.to_string()))?;
    Ok(Json(json!({
        "v": API_VERSION,
        "predictions": out.predictions,
        "unresolved": out.unresolved,
    })))
}

#[derive(Deserialize)]
#[serde(rename_all = "snake_case")]
enum KnnQueryBody {
    Node(String),
    Vector(Vec<f64>),
}

#[derive(Deserialize)]
struct KnnRequest {
    v: u32,
    model: String,
    query: KnnQueryBody,
    k: usize,
}

async fn gml_knn(
    State(platform): State<Arc<Platform>>,
    Json(req): Json<KnnRequest>,
) -> Result<Json<Value>, ApiError> {
    check_version(req.v)?;
    let query = match req.query {
        KnnQueryBody::Node(key) => KnnQuery::Node(key),
        KnnQueryBody::Vector(v) => KnnQuery::Vector(v),
    };
    let neighbors = platform
        .gml
        .knn(&req.model, &query, req.k)
        .map_err(|e| ApiError::bad_request(e.to_string()))?;
    let neighbors: Vec<Value> = neighbors
        .into_iter()
        .map(|(key, score)| json!({ "key": key, "score": score }))
        .collect();
    Ok(Json(json!({ "v": API_VERSION, "neighbors": neighbors })))
}

async fn gml_get_model(
    State(platform): State<Arc<Platform>>,
    UrlPath(artifact): UrlPath<String>,
) -> Result<Json<Value>, ApiError> {
    let model = platform
        .gml
        .get(&artifact)
        .map_err(|e| ApiError::not_found(e.to_string()))?;
    Ok(Json(json!({
        "v": API_VERSION,
        "artifact_ref": model.artifact_ref,
        "method": model.method_name,
        "task_type": format!("{:?}", model.task_type),
        "target_node_type": model.target_node_type,
        "accuracy": model.metrics.accuracy,
        "inference_time_ms": model.metrics.mean_inference_ms,
        "cardinality": model.metrics.cardinality,
    })))
}

async fn gml_delete_model(
    State(platform): State<Arc<Platform>>,
    UrlPath(artifact): UrlPath<String>,
) -> Result<Json<Value>, ApiError> {
    platform
        .gml
        .delete_artifact(&artifact)
        .map_err(|e| ApiError::not_found(e.to_string()))?;
    Ok(Json(json!({ "v": API_VERSION, "deleted": artifact })))
}

/// A running server on its own thread and runtime; dropping the handle
/// shuts it down.
pub struct ServerHandle {
    addr: SocketAddr,
    shutdown: Option<tokio::sync::oneshot::Sender<()>>,
    thread: Option<std::thread::JoinHandle<()>>,
}

impl ServerHandle {
    /// Binds (use port 0 for an ephemeral port) and starts serving.
    pub fn spawn(platform: Arc<Platform>, bind: &str) -> std::io::Result<ServerHandle> {
        let runtime = tokio::runtime::Builder::new_multi_thread()
            .worker_threads(2)
            .enable_all()
            .build()?;
        let listener = runtime.block_on(tokio::net::TcpListener::bind(bind))?;
        let addr = listener.local_addr()?;
        let (tx, rx) = tokio::sync::oneshot::channel::<()>();
        let app = router(platform);
        let thread = std::thread::spawn(move || {
            runtime.block_on(async move {
                let serve = axum::serve(listener, app).with_graceful_shutdown(async {
                    let _ = rx.await;
                });
                if let Err(e) = serve.await {
                    eprintln!("server error: {e}");
                }
            });
        });
        Ok(ServerHandle {
            addr,
            shutdown: Some(tx),
            thread: Some(thread),
        })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self, path: &str) -> String {
        format!("http://{}{path}", self.addr)
    }

    /// Blocks until the server exits (for foreground serving).
    pub fn wait(mut self) {
        // hold the shutdown sender: dropping it would stop the server
        let _keep_serving = self.shutdown.take();
        if let Some(thread) = self.thread.take() {
            let _ = thread.join();
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(thread) = self.thread.take() {
            let _ = thread.join();
        }
    }
}
