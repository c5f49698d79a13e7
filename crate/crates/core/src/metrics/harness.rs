use std::sync::Arc;

use super::{collect, Recorder, RunReport};
use crate::algorithms::Registry;
use crate::coordinator::{Coordinator, JobResult, ThreadLauncher};
use crate::error::Result;
use crate::graph::{GlobalGraph, IdMap};
use crate::job::JobConfig;
use crate::maas::{Actor, Maas, MaasClient, Namespace};
use crate::partitioner::{partition_by_degree, write_partitions, PartitionManifest};

/// Replaces whatever graph the store holds with `graph` cut into `p`
/// degree-balanced partitions.
pub fn upload(graph: &GlobalGraph, ids: &IdMap, p: u32, client: &MaasClient) -> Result<PartitionManifest> {
    client.clear_namespace(Namespace::Part)?;
    let assignment = partition_by_degree(graph, p)?;
    write_partitions(graph, &assignment, ids, client)
}

#[derive(Debug)]
pub struct LocalRun {
    pub result: JobResult,
    pub report: RunReport,
    pub recorder: Arc<Recorder>,
}

/// Uploads `graph` and runs the job with workers as threads of this process.
pub fn run_local(
    graph: &GlobalGraph,
    config: &JobConfig,
    store: Arc<dyn Maas>,
    registry: Arc<Registry>,
) -> Result<LocalRun> {
    let recorder = Arc::new(Recorder::new());
    let client = MaasClient::new(store, Some(recorder.clone()), Actor::Tool);
    upload(graph, &IdMap::identity(graph.vertex_count()), config.partitions, &client)?;
    let result = Coordinator::new(&client, config.clone(), &registry).run(&ThreadLauncher::new(&client, registry.clone()))?;
    let report = collect(config, &result, Some(&recorder));
    Ok(LocalRun { result, report, recorder })
}
