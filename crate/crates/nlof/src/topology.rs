//! Network model: an undirected graph with capacity-annotated links,
//! shortest-path flow tracing, and link/flow association.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::io::Read;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// An undirected link identified by its endpoints in sorted order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LinkId(pub String, pub String);

impl LinkId {
    /// Normalizes the endpoint order so (A,B) and (B,A) are the same link.
    pub fn new(a: &str, b: &str) -> Self {
        if a <= b {
            LinkId(a.to_string(), b.to_string())
        } else {
            LinkId(b.to_string(), a.to_string())
        }
    }
}

impl std::fmt::Display for LinkId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.0, self.1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkAttrs {
    /// Link rate, bits/second.
    pub capacity_bps: f64,
    /// Fraction of traffic lost on the link; 0 for analysis-only inputs.
    pub error_rate: f64,
}

/// Undirected graph of named nodes and capacity-annotated links.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    nodes: BTreeSet<String>,
    links: BTreeMap<LinkId, LinkAttrs>,
    adjacency: BTreeMap<String, BTreeSet<String>>,
}

/// A flow's route: the ordered links of its shortest src-dst path.
#[derive(Debug, Clone, PartialEq)]
pub struct TracedFlow {
    pub flow_id: String,
    pub path: Vec<LinkId>,
}

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("self-loop {0}\u{2013}{0}")]
    SelfLoop(String),
    #[error("duplicate link ({0}, {1})")]
    DuplicateLink(String, String),
    #[error("link ({0}, {1}) references unknown node `{2}`")]
    UnknownEndpoint(String, String, String),
    #[error("link ({0}, {1}) has non-positive capacity {2}")]
    NonPositiveCapacity(String, String, f64),
    #[error("link ({0}, {1}) has error_rate {2} outside [0, 1]")]
    ErrorRateOutOfRange(String, String, f64),
    #[error("duplicate node `{0}`")]
    DuplicateNode(String),
    #[error("no path from {src} to {dst}{}", flow_context(.flow_id))]
    NoPath {
        src: String,
        dst: String,
        flow_id: Option<String>,
    },
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("invalid topology JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn flow_context(flow_id: &Option<String>) -> String {
    match flow_id {
        Some(id) => format!(" (flow {id})"),
        None => String::new(),
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct TopologyFile {
    nodes: Vec<String>,
    links: Vec<LinkFile>,
}

#[derive(Debug, Serialize, Deserialize)]
struct LinkFile {
    a: String,
    b: String,
    capacity_bps: f64,
    #[serde(default)]
    error_rate: f64,
}

impl Topology {
    pub fn new() -> Self {
        Topology {
            nodes: BTreeSet::new(),
            links: BTreeMap::new(),
            adjacency: BTreeMap::new(),
        }
    }

    pub fn add_node(&mut self, name: &str) -> Result<(), TopologyError> {
        if !self.nodes.insert(name.to_string()) {
            return Err(TopologyError::DuplicateNode(name.to_string()));
        }
        self.adjacency.entry(name.to_string()).or_default();
        Ok(())
    }

    pub fn add_link(
        &mut self,
        a: &str,
        b: &str,
        attrs: LinkAttrs,
    ) -> Result<(), TopologyError> {
        if a == b {
            return Err(TopologyError::SelfLoop(a.to_string()));
        }
        for endpoint in [a, b] {
            if !self.nodes.contains(endpoint) {
                return Err(TopologyError::UnknownEndpoint(
                    a.to_string(),
                    b.to_string(),
                    endpoint.to_string(),
                ));
            }
        }
        if !(attrs.capacity_bps > 0.0) {
            return Err(TopologyError::NonPositiveCapacity(
                a.to_string(),
                b.to_string(),
                attrs.capacity_bps,
            ));
        }
        if !(0.0..=1.0).contains(&attrs.error_rate) {
            return Err(TopologyError::ErrorRateOutOfRange(
                a.to_string(),
                b.to_string(),
                attrs.error_rate,
            ));
        }
        let id = LinkId::new(a, b);
        if self.links.contains_key(&id) {
            return Err(TopologyError::DuplicateLink(a.to_string(), b.to_string()));
        }
        self.links.insert(id, attrs);
        self.adjacency
            .get_mut(a)
            .expect("endpoint exists")
            .insert(b.to_string());
        self.adjacency
            .get_mut(b)
            .expect("endpoint exists")
            .insert(a.to_string());
        Ok(())
    }

    pub fn nodes(&self) -> impl Iterator<Item = &str> {
        self.nodes.iter().map(|s| s.as_str())
    }

    pub fn has_node(&self, name: &str) -> bool {
        self.nodes.contains(name)
    }

    pub fn links(&self) -> impl Iterator<Item = (&LinkId, &LinkAttrs)> {
        self.links.iter()
    }

    pub fn link_attrs(&self, link: &LinkId) -> Option<&LinkAttrs> {
        self.links.get(link)
    }

    /// Links with a non-zero error rate.
    pub fn errored_links(&self) -> Vec<LinkId> {
        self.links
            .iter()
            .filter(|(_, attrs)| attrs.error_rate > 0.0)
            .map(|(id, _)| id.clone())
            .collect()
    }
}

impl Default for Topology {
    fn default() -> Self {
        Self::new()
    }
}

/// Loads and validates a topology from its JSON form.
pub fn load_topology<R: Read>(mut source: R) -> Result<Topology, TopologyError> {
    let mut text = String::new();
    source.read_to_string(&mut text)?;
    let file: TopologyFile = serde_json::from_str(&text)?;
    let mut topo = Topology::new();
    for node in &file.nodes {
        topo.add_node(node)?;
    }
    for link in &file.links {
        topo.add_link(
            &link.a,
            &link.b,
            LinkAttrs {
                capacity_bps: link.capacity_bps,
                error_rate: link.error_rate,
            },
        )?;
    }
    Ok(topo)
}

/// Serializes a topology to the JSON form accepted by [`load_topology`].
pub fn topology_to_json(topo: &Topology) -> String {
    let file = TopologyFile {
        nodes: topo.nodes().map(str::to_string).collect(),
        links: topo
            .links()
            .map(|(id, attrs)| LinkFile {
                a: id.0.clone(),
                b: id.1.clone(),
                capacity_bps: attrs.capacity_bps,
                error_rate: attrs.error_rate,
            })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("topology serializes")
}

/// Minimum-hop path from `src` to `dst`; among equal-hop paths the
/// lexicographically smallest node-name sequence wins. `src == dst`
/// yields an empty path.
pub fn trace_flow(
    topology: &Topology,
    flow_id: &str,
    src: &str,
    dst: &str,
) -> Result<TracedFlow, TopologyError> {
    for node in [src, dst] {
        if !topology.has_node(node) {
            return Err(TopologyError::UnknownNode(node.to_string()));
        }
    }
    if src == dst {
        return Ok(TracedFlow {
            flow_id: flow_id.to_string(),
            path: Vec::new(),
        });
    }

    // BFS distances toward dst; the greedy forward walk over them picks
    // the smallest-named next hop, which minimizes the node sequence
    // lexicographically among all minimum-hop paths.
    let mut dist: BTreeMap<&str, usize> = BTreeMap::new();
    dist.insert(dst, 0);
    let mut queue = VecDeque::from([dst]);
    while let Some(node) = queue.pop_front() {
        let d = dist[node];
        for next in &topology.adjacency[node] {
            if !dist.contains_key(next.as_str()) {
                dist.insert(next, d + 1);
                queue.push_back(next);
            }
        }
    }
    let Some(&total) = dist.get(src) else {
        return Err(TopologyError::NoPath {
            src: src.to_string(),
            dst: dst.to_string(),
            flow_id: Some(flow_id.to_string()),
        });
    };

    let mut path = Vec::with_capacity(total);
    let mut current = src;
    for step in (0..total).rev() {
        // adjacency sets iterate in name order, so the first match is
        // the lexicographically smallest eligible next hop
        let next = topology.adjacency[current]
            .iter()
            .find(|n| dist.get(n.as_str()) == Some(&step))
            .expect("some neighbor advances toward dst");
        path.push(LinkId::new(current, next));
        current = next;
    }
    Ok(TracedFlow {
        flow_id: flow_id.to_string(),
        path,
    })
}

/// Maps every topology link to the flows whose paths traverse it.
/// Links carrying no flows map to an empty list.
pub fn associate_flows(
    topology: &Topology,
    traced: &[TracedFlow],
) -> BTreeMap<LinkId, Vec<String>> {
    let mut map: BTreeMap<LinkId, Vec<String>> = topology
        .links()
        .map(|(id, _)| (id.clone(), Vec::new()))
        .collect();
    for flow in traced {
        for link in &flow.path {
            map.get_mut(link)
                .expect("traced path uses topology links")
                .push(flow.flow_id.clone());
        }
    }
    map
}

#[cfg(test)]
mod tests {
    use super::*;

    fn attrs(capacity: f64) -> LinkAttrs {
        LinkAttrs {
            capacity_bps: capacity,
            error_rate: 0.0,
        }
    }

    fn chain_abc() -> Topology {
        let mut t = Topology::new();
        for n in ["A", "B", "C"] {
            t.add_node(n).unwrap();
        }
        t.add_link("A", "B", attrs(10e6)).unwrap();
        t.add_link("B", "C", attrs(10e6)).unwrap();
        t
    }

    #[test]
    fn minimal_topology_loads() {
        let json = r#"{"nodes": ["A", "B"],
            "links": [{"a": "A", "b": "B", "capacity_bps": 10000000}]}"#;
        let topo = load_topology(json.as_bytes()).unwrap();
        assert_eq!(topo.links().count(), 1);
        assert_eq!(topo.link_attrs(&LinkId::new("B", "A")).unwrap().error_rate, 0.0);
    }

    #[test]
    fn self_loop_rejected() {
        let json = r#"{"nodes": ["A"],
            "links": [{"a": "A", "b": "A", "capacity_bps": 1.0}]}"#;
        let err = load_topology(json.as_bytes()).unwrap_err();
        assert_eq!(err.to_string(), "self-loop A\u{2013}A");
    }

    #[test]
    fn reversed_duplicate_link_rejected() {
        let json = r#"{"nodes": ["A", "B"], "links": [
            {"a": "A", "b": "B", "capacity_bps": 1.0},
            {"a": "B", "b": "A", "capacity_bps": 1.0}]}"#;
        let err = load_topology(json.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("duplicate link"));
    }

    #[test]
    fn unknown_endpoint_and_bad_attrs_rejected() {
        let mut t = Topology::new();
        t.add_node("A").unwrap();
        t.add_node("B").unwrap();
        assert!(matches!(
            t.add_link("A", "X", attrs(1.0)),
            Err(TopologyError::UnknownEndpoint(..))
        ));
        assert!(matches!(
            t.add_link("A", "B", attrs(0.0)),
            Err(TopologyError::NonPositiveCapacity(..))
        ));
        assert!(matches!(
            t.add_link(
                "A",
                "B",
                LinkAttrs {
                    capacity_bps: 1.0,
                    error_rate: 1.5
                }
            ),
            Err(TopologyError::ErrorRateOutOfRange(..))
        ));
    }

    #[test]
    fn trace_unique_path() {
        let t = chain_abc();
        let traced = trace_flow(&t, "f", "A", "C").unwrap();
        assert_eq!(
            traced.path,
            vec![LinkId::new("A", "B"), LinkId::new("B", "C")]
        );
    }

    #[test]
    fn trace_identity_is_empty() {
        let t = chain_abc();
        assert!(trace_flow(&t, "f", "A", "A").unwrap().path.is_empty());
    }

    #[test]
    fn trace_tie_break_is_lexicographic() {
        // square: A-B-D and A-C-D
        let mut t = Topology::new();
        for n in ["A", "B", "C", "D"] {
            t.add_node(n).unwrap();
        }
        t.add_link("A", "B", attrs(1.0)).unwrap();
        t.add_link("B", "D", attrs(1.0)).unwrap();
        t.add_link("A", "C", attrs(1.0)).unwrap();
        t.add_link("C", "D", attrs(1.0)).unwrap();
        let traced = trace_flow(&t, "f", "A", "D").unwrap();
        assert_eq!(
            traced.path,
            vec![LinkId::new("A", "B"), LinkId::new("B", "D")]
        );
        // reverse direction lands on the same links once normalized
        let back = trace_flow(&t, "g", "D", "A").unwrap();
        let mut fwd: Vec<_> = traced.path.clone();
        let mut rev: Vec<_> = back.path.clone();
        fwd.sort();
        rev.sort();
        assert_eq!(fwd, rev);
    }

    #[test]
    fn trace_disconnected_is_error() {
        let mut t = chain_abc();
        t.add_node("Z").unwrap();
        let err = trace_flow(&t, "f9", "A", "Z").unwrap_err();
        assert_eq!(err.to_string(), "no path from A to Z (flow f9)");
    }

    #[test]
    fn associate_counts_paths() {
        let t = chain_abc();
        let flows = vec![
            trace_flow(&t, "f1", "A", "C").unwrap(),
            trace_flow(&t, "f2", "B", "C").unwrap(),
        ];
        let map = associate_flows(&t, &flows);
        assert_eq!(map[&LinkId::new("B", "C")], vec!["f1", "f2"]);
        assert_eq!(map[&LinkId::new("A", "B")], vec!["f1"]);
    }

    #[test]
    fn associate_empty_flows_keeps_all_links() {
        let t = chain_abc();
        let map = associate_flows(&t, &[]);
        assert_eq!(map.len(), 2);
        assert!(map.values().all(Vec::is_empty));
    }
}
