//! Subgraph-centric BSP graph engine whose workers are stateless tasks that
//! share nothing but an external store.
//!
//! A job runs as follows: the [`partitioner`] uploads degree-balanced
//! partitions, the [`coordinator`] writes control state and launches
//! [`worker`] tasks, and every superstep ends at a barrier kept in the
//! store ([`maas`]). Vertex programs plug in through [`algorithms`].

pub mod activation;
pub mod api;
pub mod algorithms;
pub mod bitmap;
pub mod codec;
pub mod coordinator;
pub mod error;
pub mod generate;
pub mod graph;
pub mod job;
pub mod maas;
pub mod metrics;
pub mod partition;
pub mod partitioner;
pub mod simulator;
pub mod worker;

pub use error::{Error, Result};
