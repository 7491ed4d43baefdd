//! Pipeline orchestration: ingest or generate flow data, cluster,
//! score flows, trace them on the topology, and rank links by NLOF.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clustering::{self, ClusterError, DensityCluster, TpCluster};
use crate::flow_model::FlowRecord;
use crate::scoring::{self, LinkScore, ScoreError};
use crate::topology::{self, Topology, TopologyError, TracedFlow};

/// Analysis parameters. `eps` has no default: it shares units with the
/// throughput values (bits/second) and must be chosen consciously.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineParams {
    pub eps: f64,
    #[serde(default = "default_min_samples")]
    pub min_samples: usize,
    #[serde(default = "default_tpr")]
    pub tpr: f64,
    #[serde(default = "default_tpdev")]
    pub tpdev: f64,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_fof_threshold")]
    pub fof_threshold: f64,
}

fn default_min_samples() -> usize {
    50
}
fn default_tpr() -> f64 {
    0.3
}
fn default_tpdev() -> f64 {
    0.1
}
fn default_k() -> usize {
    2
}
fn default_fof_threshold() -> f64 {
    0.1
}

impl PipelineParams {
    pub fn with_eps(eps: f64) -> Self {
        PipelineParams {
            eps,
            min_samples: default_min_samples(),
            tpr: default_tpr(),
            tpdev: default_tpdev(),
            k: default_k(),
            fof_threshold: default_fof_threshold(),
        }
    }

    /// Collects every range violation rather than stopping at the first.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.eps > 0.0) {
            out.push("eps must be positive".to_string());
        }
        if self.min_samples < 1 {
            out.push("min_samples must be >= 1".to_string());
        }
        if !(0.0..1.0).contains(&self.tpr) {
            out.push("tpr must be in [0, 1): tpr must be < 1".to_string());
        }
        if !(self.tpdev >= 0.0) {
            out.push("tpdev must be non-negative".to_string());
        }
        if self.k < 1 {
            out.push("k must be >= 1".to_string());
        }
        if !self.fof_threshold.is_finite() {
            out.push("fof_threshold must be finite".to_string());
        }
        out
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("clustering: {0}")]
    Clustering(#[from] ClusterError),
    #[error("tracing: {0}")]
    Tracing(#[from] TopologyError),
    #[error("scoring: {0}")]
    Scoring(#[from] ScoreError),
    #[error("config: {}", .0.join("; "))]
    Config(Vec<String>),
}

/// Per-flow intermediate assignment, exportable for plotting.
#[derive(Debug, Clone, Serialize)]
pub struct FlowAssignment {
    pub flow_id: String,
    pub throughput: f64,
    /// Density cluster id, or "noise".
    pub density_cluster_id: String,
    pub tpcluster_id: usize,
    pub fof: f64,
}

/// Everything the pipeline produced, ranked report included.
#[derive(Debug)]
pub struct PipelineOutput {
    pub density_clusters: Vec<DensityCluster>,
    pub noise: Vec<String>,
    pub tpclusters: Vec<TpCluster>,
    pub traced: Vec<TracedFlow>,
    pub scores: Vec<LinkScore>,
    /// `scores` in report order.
    pub ranked: Vec<LinkScore>,
}

impl PipelineOutput {
    /// Flattens cluster state into one row per flow, flow_id order.
    pub fn assignments(&self) -> Vec<FlowAssignment> {
        let mut density_of: BTreeMap<&str, String> = BTreeMap::new();
        for c in &self.density_clusters {
            for (id, _) in &c.members {
                density_of.insert(id, c.cluster_id.to_string());
            }
        }
        for id in &self.noise {
            density_of.insert(id, "noise".to_string());
        }
        let mut rows = Vec::new();
        for tc in &self.tpclusters {
            for (id, tp) in &tc.members {
                rows.push(FlowAssignment {
                    flow_id: id.clone(),
                    throughput: *tp,
                    density_cluster_id: density_of
                        .get(id.as_str())
                        .cloned()
                        .unwrap_or_else(|| "noise".to_string()),
                    tpcluster_id: tc.tpcluster_id,
                    fof: tc.fof[id],
                });
            }
        }
        rows.sort_by(|a, b| a.flow_id.cmp(&b.flow_id));
        rows
    }
}

/// Runs the full analysis: DBSCAN, TPCluster merge, FOF, flow tracing,
/// NLOF, ranking. Pure function of its inputs.
pub fn run_pipeline(
    flows: &[FlowRecord],
    topo: &Topology,
    params: &PipelineParams,
) -> Result<PipelineOutput, PipelineError> {
    let violations = params.violations();
    if !violations.is_empty() {
        return Err(PipelineError::Config(violations));
    }

    let throughputs: Vec<(String, f64)> = flows
        .iter()
        .map(|f| (f.flow_id.clone(), f.throughput))
        .collect();
    let (density_clusters, noise) =
        clustering::dbscan_1d(&throughputs, params.eps, params.min_samples);

    let tp_of: BTreeMap<&str, f64> = flows
        .iter()
        .map(|f| (f.flow_id.as_str(), f.throughput))
        .collect();
    let noise_points: Vec<(String, f64)> = noise
        .iter()
        .map(|id| (id.clone(), tp_of[id.as_str()]))
        .collect();
    let mut tpclusters =
        clustering::form_tpclusters(&density_clusters, &noise_points, params.tpr, params.tpdev)?;
    clustering::compute_fof(&mut tpclusters, params.k)?;

    let mut traced = Vec::with_capacity(flows.len());
    for flow in flows {
        traced.push(topology::trace_flow(topo, &flow.flow_id, &flow.src, &flow.dst)?);
    }
    let link_flows = topology::associate_flows(topo, &traced);

    let fof: BTreeMap<String, f64> = tpclusters
        .iter()
        .flat_map(|tc| tc.fof.iter().map(|(id, v)| (id.clone(), *v)))
        .collect();
    let scores = scoring::compute_nlof(&link_flows, &fof, params.fof_threshold)?;
    let ranked = scoring::rank_links(&scores);

    Ok(PipelineOutput {
        density_clusters,
        noise,
        tpclusters,
        traced,
        scores,
        ranked,
    })
}

/// Report output format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

/// Renders the ranked report. CSV columns:
/// `link_a,link_b,nlof,outlier_flows,total_flows,no_data`.
pub fn render_report(ranked: &[LinkScore], format: ReportFormat) -> String {
    match format {
        ReportFormat::Csv => {
            let mut out = String::from("link_a,link_b,nlof,outlier_flows,total_flows,no_data\n");
            for s in ranked {
                writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    s.link.0, s.link.1, s.nlof, s.outlier_flows, s.total_flows, s.no_data
                )
                .expect("string write");
            }
            out
        }
        ReportFormat::Json => {
            #[derive(Serialize)]
            struct Row<'a> {
                link_a: &'a str,
                link_b: &'a str,
                nlof: f64,
                outlier_flows: usize,
                total_flows: usize,
                no_data: bool,
            }
            let rows: Vec<Row> = ranked
                .iter()
                .map(|s| Row {
                    link_a: &s.link.0,
                    link_b: &s.link.1,
                    nlof: s.nlof,
                    outlier_flows: s.outlier_flows,
                    total_flows: s.total_flows,
                    no_data: s.no_data,
                })
                .collect();
            let mut text = serde_json::to_string_pretty(&rows).expect("report serializes");
            text.push('\n');
            text
        }
    }
}
