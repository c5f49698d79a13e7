//! Instrumentation, cost accounting, verification against the sequential
//! simulator, and benchmark matrices.

mod bench;
mod harness;
mod recorder;
mod report;
mod verify;

pub use bench::{parse_matrix, run_matrix, BenchMatrix, BenchRecord, GraphSpec};
pub use harness::{run_local, upload, LocalRun};
pub use recorder::{Event, EventKind, OpCounts, OpKind, Recorder};
pub use report::{collect, config_hash, cost, msg_ops_per_worker_step, OpRecord, RunReport};
pub use verify::{compare, values_match, verify, CorruptingStore, Divergence, VerifyOutcome, FLOAT_RTOL};
