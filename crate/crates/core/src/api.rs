//! Request and response bodies of the HTTP service, shared by server and
//! client.

use serde::{Deserialize, Serialize};

use crate::job::{JobConfig, Mode};
use crate::metrics::{GraphSpec, RunReport};
use crate::partitioner::PartitionManifest;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionRequest {
    /// Edge list text: `src dst [weight]` per line.
    pub edges: String,
    /// Optional vertex list text, one id per line.
    #[serde(default)]
    pub vertices: Option<String>,
    pub partitions: u32,
    #[serde(default)]
    pub directed: bool,
    #[serde(default)]
    pub weighted: bool,
    pub maas: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionResponse {
    pub manifest: PartitionManifest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRequest {
    /// `config.maas_uri` names the store holding the partitions.
    pub config: JobConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResponse {
    pub job: u64,
    pub supersteps: u64,
    pub mode: Mode,
    pub workers: u32,
    pub hit_cap: bool,
    /// `(external id, rendered value)` for every vertex.
    pub values: Vec<(u64, String)>,
    pub report: RunReport,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobStatus {
    Running,
    Succeeded,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobSummary {
    pub job: u64,
    pub algorithm: String,
    pub maas: String,
    pub status: JobStatus,
    #[serde(default)]
    pub supersteps: Option<u64>,
    #[serde(default)]
    pub error: Option<String>,
    #[serde(default)]
    pub report: Option<RunReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyRequest {
    pub graph: GraphSpec,
    pub config: JobConfig,
    /// Test hook: zero one message value in flight.
    #[serde(default)]
    pub corrupt: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRequest {
    /// Matrix file contents (TOML).
    pub matrix: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}
