//! Benchmark matrices: a TOML file lists graphs and parameter axes; every
//! combination runs in-process and yields one record.

use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::harness::run_local;
use super::verify::compare;
use crate::algorithms::{Params, Registry};
use crate::error::{Error, Result};
use crate::generate;
use crate::graph::{load_graph_files, GlobalGraph};
use crate::job::{JobConfig, Mode};
use crate::maas::MemStore;
use crate::simulator::simulate;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GraphSpec {
    Random { n: u64, degree: f64, #[serde(default)] directed: bool, #[serde(default)] seed: u64 },
    Path { n: u64 },
    Tree { n: u64, #[serde(default)] seed: u64 },
    Star { n: u64 },
    File { path: PathBuf, #[serde(default)] vertices: Option<PathBuf>, #[serde(default)] directed: bool, #[serde(default)] weighted: bool },
}

impl GraphSpec {
    pub fn build(&self) -> Result<GlobalGraph> {
        match self {
            GraphSpec::Random { n, degree, directed, seed } => generate::random_graph(*n, *degree, *directed, *seed),
            GraphSpec::Path { n } => generate::path(*n),
            GraphSpec::Tree { n, seed } => generate::random_tree(*n, *seed),
            GraphSpec::Star { n } => generate::star(*n),
            GraphSpec::File { path, vertices, directed, weighted } => {
                load_graph_files(path, vertices.as_deref(), *directed, *weighted).map(|(g, _)| g)
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            GraphSpec::Random { n, degree, directed, seed } => {
                format!("random-n{n}-d{degree}-{}-s{seed}", if *directed { "dir" } else { "undir" })
            }
            GraphSpec::Path { n } => format!("path-{n}"),
            GraphSpec::Tree { n, seed } => format!("tree-{n}-s{seed}"),
            GraphSpec::Star { n } => format!("star-{n}"),
            GraphSpec::File { path, .. } => path.display().to_string(),
        }
    }
}

fn one<T>(x: T) -> Vec<T> {
    vec![x]
}

fn no_activation() -> Vec<i64> {
    vec![-1]
}

fn yes() -> Vec<bool> {
    vec![true]
}

fn gb() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchMatrix {
    pub graphs: Vec<GraphSpec>,
    pub algorithms: Vec<String>,
    pub partitions: Vec<u32>,
    pub max_worker: Vec<u32>,
    #[serde(default = "default_threads")]
    pub threads: Vec<u32>,
    /// Negative disables activation.
    #[serde(default = "no_activation")]
    pub activation_start: Vec<i64>,
    #[serde(default = "yes")]
    pub key_aggregation: Vec<bool>,
    #[serde(default = "yes")]
    pub colocation_dedup: Vec<bool>,
    #[serde(default = "yes")]
    pub preload: Vec<bool>,
    #[serde(default)]
    pub params: std::collections::BTreeMap<String, Params>,
    #[serde(default = "gb")]
    pub memory_gb: f64,
    #[serde(default = "default_repeat")]
    pub repeat: u32,
}

fn default_threads() -> Vec<u32> {
    one(1)
}

fn default_repeat() -> u32 {
    1
}

pub fn parse_matrix(text: &str) -> Result<BenchMatrix> {
    let m: BenchMatrix = toml::from_str(text).map_err(|e| Error::Config(format!("bench matrix: {e}")))?;
    if m.graphs.is_empty() || m.algorithms.is_empty() || m.partitions.is_empty() || m.max_worker.is_empty() {
        return Err(Error::Config("bench matrix needs graphs, algorithms, partitions and max_worker".into()));
    }
    Ok(m)
}

/// One line of the benchmark report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub config_hash: String,
    pub graph: String,
    pub algorithm: String,
    pub partitions: u32,
    pub max_worker: u32,
    pub threads: u32,
    pub activation_start: Option<u64>,
    pub key_aggregation: bool,
    pub colocation_dedup: bool,
    pub preload: bool,
    pub mode: Mode,
    pub workers: u32,
    pub supersteps: u64,
    pub wall_seconds: f64,
    pub core_seconds: f64,
    pub gb_seconds: f64,
    pub key_ops: u64,
    pub msg_key_ops: u64,
    pub message_bytes: u64,
    pub peak_concurrency: u32,
    pub matches_oracle: bool,
}

impl BenchMatrix {
    /// Every job configuration of the matrix for one graph, skipping
    /// partition counts the graph cannot support.
    pub fn configs(&self, vertex_count: u64) -> Vec<JobConfig> {
        let mut out = Vec::new();
        for alg in &self.algorithms {
            for &p in self.partitions.iter().filter(|&&p| u64::from(p) <= vertex_count.max(1)) {
                for &mw in &self.max_worker {
                    for &t in &self.threads {
                        for &a in &self.activation_start {
                            for &ka in &self.key_aggregation {
                                for &cd in &self.colocation_dedup {
                                    for &pl in &self.preload {
                                        out.push(JobConfig {
                                            params: self.params.get(alg).cloned().unwrap_or_default(),
                                            activation_start: u64::try_from(a).ok(),
                                            key_aggregation: ka,
                                            colocation_dedup: cd,
                                            preload: pl,
                                            memory_gb: self.memory_gb,
                                            ..JobConfig::new(alg, p, mw, t)
                                        });
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

/// Runs the matrix, handing each record to `sink` as soon as it exists.
pub fn run_matrix(
    matrix: &BenchMatrix,
    registry: Arc<Registry>,
    mut sink: impl FnMut(&BenchRecord) -> Result<()>,
) -> Result<Vec<BenchRecord>> {
    let mut records = Vec::new();
    for spec in &matrix.graphs {
        let graph = spec.build()?;
        for config in matrix.configs(graph.vertex_count()) {
            let alg = registry.build(&config.algorithm, &config.params)?;
            let oracle = simulate(&graph, alg.as_ref(), config.activation_start);
            for _ in 0..matrix.repeat.max(1) {
                let run = run_local(&graph, &config, Arc::new(MemStore::new()), registry.clone())?;
                let r = &run.report;
                let record = BenchRecord {
                    config_hash: r.config_hash.clone(),
                    graph: spec.label(),
                    algorithm: config.algorithm.clone(),
                    partitions: config.partitions,
                    max_worker: config.max_worker,
                    threads: config.threads,
                    activation_start: config.activation_start,
                    key_aggregation: config.key_aggregation,
                    colocation_dedup: config.colocation_dedup,
                    preload: config.preload,
                    mode: r.mode,
                    workers: r.workers,
                    supersteps: r.supersteps,
                    wall_seconds: r.wall_seconds,
                    core_seconds: r.core_seconds,
                    gb_seconds: r.gb_seconds,
                    key_ops: r.ops.iter().map(|o| o.counts.total()).sum(),
                    msg_key_ops: r.msg_key_ops,
                    message_bytes: r.message_bytes_out + r.message_bytes_in,
                    peak_concurrency: r.peak_concurrency,
                    matches_oracle: compare(oracle.kind, &run.result.values, &oracle.values).is_empty(),
                };
                sink(&record)?;
                records.push(record);
            }
        }
    }
    Ok(records)
}
