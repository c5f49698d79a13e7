use std::sync::Arc;

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use nimbus_core::api::{
    BenchRequest, ErrorBody, JobStatus, JobSummary, PartitionRequest, PartitionResponse, RunRequest, RunResponse,
    VerifyRequest,
};
use nimbus_core::coordinator::{Coordinator, Launcher, ThreadLauncher};
use nimbus_core::graph::{ingest, parse_edge_list, parse_vertex_list};
use nimbus_core::maas::{Actor, Maas, MaasClient, MemStore};
use nimbus_core::metrics::{collect, parse_matrix, run_matrix, upload, verify, BenchRecord, CorruptingStore, Recorder, VerifyOutcome};
use nimbus_core::partitioner::read_id_map;
use nimbus_core::Error;
use serde::Serialize;

use crate::launcher::ProcessLauncher;
use crate::state::{AppState, WorkerMode};

pub struct ApiError(StatusCode, String);

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Ingestion(_)
            | Error::Config(_)
            | Error::Setup(_)
            | Error::UnknownAlgorithm(_)
            | Error::DuplicateAlgorithm(_)
            | Error::Json(_) => StatusCode::BAD_REQUEST,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError(status, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(ErrorBody { error: self.1 })).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/partition", post(partition))
        .route("/run", post(run))
        .route("/jobs", get(jobs))
        .route("/jobs/{id}", get(job))
        .route("/verify", post(verify_job))
        .route("/bench", post(bench))
        .with_state(state)
}

#[derive(Serialize)]
struct Health {
    status: &'static str,
    algorithms: Vec<String>,
}

async fn health(State(state): State<Arc<AppState>>) -> Json<Health> {
    Json(Health { status: "ok", algorithms: state.registry.names().map(str::to_string).collect() })
}

/// Runs blocking engine work off the async executor.
async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> ApiResult<T> {
    match tokio::task::spawn_blocking(f).await {
        Ok(r) => r.map(Json),
        Err(e) => Err(ApiError(StatusCode::INTERNAL_SERVER_ERROR, format!("task failed: {e}"))),
    }
}

fn busy(uri: &str) -> ApiError {
    ApiError(StatusCode::CONFLICT, format!("store `{uri}` is busy with another request"))
}

async fn partition(State(state): State<Arc<AppState>>, Json(req): Json<PartitionRequest>) -> ApiResult<PartitionResponse> {
    blocking(move || {
        let _guard = state.lock_store(&req.maas).ok_or_else(|| busy(&req.maas))?;
        let edges = parse_edge_list(&req.edges, req.weighted)?;
        let vertices = req.vertices.as_deref().map(parse_vertex_list).transpose()?;
        let (graph, ids) = ingest(&edges, vertices.as_deref(), req.directed, req.weighted)?;
        let client = MaasClient::new(state.store(&req.maas)?, None, Actor::Tool);
        let manifest = upload(&graph, &ids, req.partitions, &client)?;
        log::info!("partitioned {} vertices into {} parts on {}", graph.vertex_count(), req.partitions, req.maas);
        Ok(PartitionResponse { manifest })
    })
    .await
}

async fn run(State(state): State<Arc<AppState>>, Json(req): Json<RunRequest>) -> ApiResult<RunResponse> {
    blocking(move || {
        let config = req.config;
        let uri = config.maas_uri.clone();
        let _guard = state.lock_store(&uri).ok_or_else(|| busy(&uri))?;
        let id = state.start_job(&config.algorithm, &uri);
        let outcome = (|| {
            let recorder = Arc::new(Recorder::new());
            let client = MaasClient::new(state.store(&uri)?, Some(recorder.clone()), Actor::Tool);
            let launcher: Box<dyn Launcher> = match &state.workers {
                WorkerMode::Processes(exe) if uri.starts_with("file://") => Box::new(ProcessLauncher::new(exe, &uri)?),
                _ => Box::new(ThreadLauncher::new(&client, state.registry.clone())),
            };
            let result = Coordinator::new(&client, config.clone(), &state.registry).run(launcher.as_ref())?;
            let ids = read_id_map(&client)?;
            let report = collect(&config, &result, Some(&recorder));
            let values = (0..result.values.len()).map(|v| (ids.to_external(v as u64), result.render(v))).collect();
            Ok::<_, Error>(RunResponse {
                job: id,
                supersteps: result.supersteps,
                mode: result.mode,
                workers: result.num_workers,
                hit_cap: result.hit_cap,
                values,
                report,
            })
        })();
        match &outcome {
            Ok(r) => state.update_job(id, |j| {
                j.status = JobStatus::Succeeded;
                j.supersteps = Some(r.supersteps);
                j.report = Some(r.report.clone());
            }),
            Err(e) => state.update_job(id, |j| {
                j.status = JobStatus::Failed;
                j.error = Some(e.to_string());
            }),
        }
        Ok(outcome?)
    })
    .await
}

async fn jobs(State(state): State<Arc<AppState>>) -> Json<Vec<JobSummary>> {
    Json(state.jobs())
}

async fn job(State(state): State<Arc<AppState>>, Path(id): Path<u64>) -> ApiResult<JobSummary> {
    state.job(id).map(Json).ok_or_else(|| ApiError(StatusCode::NOT_FOUND, format!("no job {id}")))
}

async fn verify_job(State(state): State<Arc<AppState>>, Json(req): Json<VerifyRequest>) -> ApiResult<VerifyOutcome> {
    blocking(move || {
        let graph = req.graph.build()?;
        let store: Arc<dyn Maas> = if req.corrupt {
            Arc::new(CorruptingStore::new(Arc::new(MemStore::new())))
        } else {
            Arc::new(MemStore::new())
        };
        Ok(verify(&graph, &req.config, store, state.registry.clone())?)
    })
    .await
}

async fn bench(State(state): State<Arc<AppState>>, Json(req): Json<BenchRequest>) -> ApiResult<Vec<BenchRecord>> {
    blocking(move || {
        let matrix = parse_matrix(&req.matrix)?;
        Ok(run_matrix(&matrix, state.registry.clone(), |_| Ok(()))?)
    })
    .await
}
