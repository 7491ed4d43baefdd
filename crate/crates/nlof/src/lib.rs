//! Network link soft-failure localization from passively collected
//! flow records.
//!
//! Flow throughputs are clustered in two stages (DBSCAN, then a
//! relative-window merge into throughput classes), each flow gets an
//! outlier factor relative to its class's representative normal
//! throughput, flows are traced along shortest paths on the topology,
//! and each link is scored by the ratio of outlier flows to total
//! flows traversing it (NLOF). A seeded scenario generator produces
//! synthetic inputs for end-to-end validation.

pub mod clustering;
pub mod flow_model;
pub mod netsim;
pub mod pipeline;
pub mod scoring;
pub mod topology;
