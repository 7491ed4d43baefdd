//! Synthetic scenario generation.
//!
//! Produces desk-scale validation inputs: a topology plus flows whose
//! throughput follows the analytic fair-share model — each flow gets
//! `min(alpha, min over path links of capacity / share_count)`, then a
//! multiplicative `(1 - error_rate)` penalty per errored link on its
//! path and uniform relative jitter. All flows are treated as
//! concurrent when computing share counts.

use std::collections::BTreeMap;
use std::io::Read;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flow_model::FlowRecord;
use crate::topology::{self, LinkId, Topology, TopologyError, TracedFlow};

/// Synthesized records use a fixed duration; only throughput is analyzed.
const FLOW_DURATION_SECS: f64 = 10.0;
const PAIR_RETRY_LIMIT: usize = 1000;

/// Declarative description of a synthetic scenario.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub topology: TopologyDescription,
    pub flow_count: usize,
    /// Generation rates (alpha), bits/second.
    pub throughput_classes: Vec<f64>,
    /// Selection probabilities per class; must sum to 1.
    pub class_weights: Vec<f64>,
    /// Nodes eligible as flow endpoints.
    pub host_nodes: Vec<String>,
    /// Relative multiplicative noise half-width on modeled throughput.
    pub jitter: f64,
    pub seed: u64,
}

/// Topology as written in a scenario file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TopologyDescription {
    pub nodes: Vec<String>,
    pub links: Vec<LinkDescription>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinkDescription {
    pub a: String,
    pub b: String,
    pub capacity_bps: f64,
    #[serde(default)]
    pub error_rate: f64,
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error("no connected endpoint pair found after {0} attempts")]
    NoConnectedPair(usize),
    #[error("invalid scenario JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl ScenarioSpec {
    pub fn from_reader<R: Read>(mut source: R) -> Result<Self, SimError> {
        let mut text = String::new();
        source.read_to_string(&mut text)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.flow_count == 0 {
            return Err(SimError::InvalidSpec("flow_count must be positive".into()));
        }
        if self.host_nodes.len() < 2 {
            return Err(SimError::InvalidSpec(
                "at least two host_nodes are required".into(),
            ));
        }
        if self.throughput_classes.is_empty() {
            return Err(SimError::InvalidSpec(
                "throughput_classes must be non-empty".into(),
            ));
        }
        if self.throughput_classes.iter().any(|&c| c <= 0.0) {
            return Err(SimError::InvalidSpec(
                "throughput classes must be positive".into(),
            ));
        }
        if self.class_weights.len() != self.throughput_classes.len() {
            return Err(SimError::InvalidSpec(
                "class_weights length must match throughput_classes".into(),
            ));
        }
        let weight_sum: f64 = self.class_weights.iter().sum();
        if self.class_weights.iter().any(|&w| w < 0.0) || (weight_sum - 1.0).abs() > 1e-9 {
            return Err(SimError::InvalidSpec(
                "class_weights must be non-negative and sum to 1".into(),
            ));
        }
        if !(0.0..=0.5).contains(&self.jitter) {
            return Err(SimError::InvalidSpec("jitter must be in [0, 0.5]".into()));
        }
        Ok(())
    }

    pub fn build_topology(&self) -> Result<Topology, SimError> {
        let mut topo = Topology::new();
        for node in &self.topology.nodes {
            topo.add_node(node)?;
        }
        for link in &self.topology.links {
            topo.add_link(
                &link.a,
                &link.b,
                topology::LinkAttrs {
                    capacity_bps: link.capacity_bps,
                    error_rate: link.error_rate,
                },
            )?;
        }
        for host in &self.host_nodes {
            if !topo.has_node(host) {
                return Err(SimError::InvalidSpec(format!(
                    "host node `{host}` is not in the topology"
                )));
            }
        }
        Ok(topo)
    }
}

/// Fair-share throughput model: `min(alpha, min capacity/share)` over
/// the path, degraded by `(1 - error_rate)` per path link.
pub fn model_throughput(
    alpha: f64,
    path: &[LinkId],
    share_counts: &BTreeMap<LinkId, usize>,
    error_rates: &BTreeMap<LinkId, f64>,
    capacities: &BTreeMap<LinkId, f64>,
) -> f64 {
    assert!(!path.is_empty(), "path must be non-empty");
    let mut rate = alpha;
    let mut delivery = 1.0;
    for link in path {
        let share = share_counts[link];
        assert!(share >= 1, "share count must be >= 1");
        rate = rate.min(capacities[link] / share as f64);
        delivery *= 1.0 - error_rates[link];
    }
    rate * delivery
}

/// A generated scenario ready to feed the analysis pipeline.
#[derive(Debug)]
pub struct GeneratedScenario {
    pub topology: Topology,
    pub flows: Vec<FlowRecord>,
    /// Links configured with a non-zero error rate.
    pub ground_truth: Vec<LinkId>,
}

pub fn generate_scenario(spec: &ScenarioSpec) -> Result<GeneratedScenario, SimError> {
    spec.validate()?;
    let topology = spec.build_topology()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    // Per-flow draws happen in a fixed order (endpoints, class, jitter)
    // so the output is a pure function of the seed.
    let mut traced: Vec<TracedFlow> = Vec::with_capacity(spec.flow_count);
    let mut alphas: Vec<f64> = Vec::with_capacity(spec.flow_count);
    let mut jitters: Vec<f64> = Vec::with_capacity(spec.flow_count);
    let mut endpoints: Vec<(String, String)> = Vec::with_capacity(spec.flow_count);
    for i in 0..spec.flow_count {
        let flow_id = format!("f{i:05}");
        let flow = draw_connected_pair(&topology, spec, &flow_id, &mut rng)?;
        endpoints.push((flow.1.clone(), flow.2.clone()));
        traced.push(flow.0);
        alphas.push(draw_class(spec, &mut rng));
        jitters.push(if spec.jitter > 0.0 {
            rng.gen_range(-spec.jitter..=spec.jitter)
        } else {
            0.0
        });
    }

    let mut share_counts: BTreeMap<LinkId, usize> =
        topology.links().map(|(id, _)| (id.clone(), 0)).collect();
    for flow in &traced {
        for link in &flow.path {
            *share_counts.get_mut(link).expect("topology link") += 1;
        }
    }
    let capacities: BTreeMap<LinkId, f64> = topology
        .links()
        .map(|(id, attrs)| (id.clone(), attrs.capacity_bps))
        .collect();
    let error_rates: BTreeMap<LinkId, f64> = topology
        .links()
        .map(|(id, attrs)| (id.clone(), attrs.error_rate))
        .collect();

    let mut flows = Vec::with_capacity(spec.flow_count);
    for (i, flow) in traced.iter().enumerate() {
        let modeled = model_throughput(
            alphas[i],
            &flow.path,
            &share_counts,
            &error_rates,
            &capacities,
        );
        let throughput = modeled * (1.0 + jitters[i]);
        let bytes = (throughput * FLOW_DURATION_SECS / 8.0).round() as u64;
        let (src, dst) = &endpoints[i];
        flows.push(FlowRecord {
            flow_id: flow.flow_id.clone(),
            src: src.clone(),
            dst: dst.clone(),
            bytes,
            duration: FLOW_DURATION_SECS,
            // derived form so records survive a serialization round trip
            throughput: bytes as f64 * 8.0 / FLOW_DURATION_SECS,
        });
    }

    let ground_truth = topology.errored_links();
    Ok(GeneratedScenario {
        topology,
        flows,
        ground_truth,
    })
}

fn draw_connected_pair(
    topology: &Topology,
    spec: &ScenarioSpec,
    flow_id: &str,
    rng: &mut ChaCha8Rng,
) -> Result<(TracedFlow, String, String), SimError> {
    for _ in 0..PAIR_RETRY_LIMIT {
        let src = &spec.host_nodes[rng.gen_range(0..spec.host_nodes.len())];
        let dst = &spec.host_nodes[rng.gen_range(0..spec.host_nodes.len())];
        if src == dst {
            continue;
        }
        match topology::trace_flow(topology, flow_id, src, dst) {
            Ok(flow) => return Ok((flow, src.clone(), dst.clone())),
            Err(TopologyError::NoPath { .. }) => continue,
            Err(e) => return Err(e.into()),
        }
    }
    Err(SimError::NoConnectedPair(PAIR_RETRY_LIMIT))
}

fn draw_class(spec: &ScenarioSpec, rng: &mut ChaCha8Rng) -> f64 {
    let roll: f64 = rng.gen_range(0.0..1.0);
    let mut acc = 0.0;
    for (i, &w) in spec.class_weights.iter().enumerate() {
        acc += w;
        if roll < acc {
            return spec.throughput_classes[i];
        }
    }
    *spec
        .throughput_classes
        .last()
        .expect("classes are non-empty")
}
