//! HTTP/JSON front end of the engine. Every handler runs the blocking
//! engine calls on the blocking pool; workers run as threads of the server
//! or as `worker` processes of the same binary.

pub mod launcher;
pub mod routes;
pub mod state;

pub use routes::router;
pub use state::{AppState, WorkerMode};
