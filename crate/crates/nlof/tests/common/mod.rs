//! Shared test oracles and scenario fixtures.
//!
//! The oracles here are deliberately naive (O(n^2) scans, exhaustive
//! enumeration) and independent of the library's implementation path.

#![allow(dead_code)]

use nlof::netsim::{LinkDescription, ScenarioSpec, TopologyDescription};

/// Brute-force 1-D DBSCAN over the input order, O(n^2) neighbor scans.
/// Returns (clusters as member-index sets, noise indices).
pub fn dbscan_oracle(
    values: &[f64],
    eps: f64,
    min_samples: usize,
) -> (Vec<Vec<usize>>, Vec<usize>) {
    const NOISE: usize = usize::MAX;
    let n = values.len();
    let neighbors = |i: usize| -> Vec<usize> {
        (0..n)
            .filter(|&j| (values[j] - values[i]).abs() <= eps)
            .collect()
    };
    let mut label: Vec<Option<usize>> = vec![None; n];
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        if label[i].is_some() {
            continue;
        }
        let seeds = neighbors(i);
        if seeds.len() < min_samples {
            label[i] = Some(NOISE);
            continue;
        }
        let cluster = clusters.len();
        clusters.push(Vec::new());
        label[i] = Some(cluster);
        let mut queue = seeds;
        let mut pos = 0;
        while pos < queue.len() {
            let q = queue[pos];
            pos += 1;
            match label[q] {
                Some(NOISE) => label[q] = Some(cluster),
                None => {
                    label[q] = Some(cluster);
                    let qn = neighbors(q);
                    if qn.len() >= min_samples {
                        queue.extend(qn);
                    }
                }
                Some(_) => {}
            }
        }
    }
    let mut noise = Vec::new();
    for i in 0..n {
        match label[i] {
            Some(NOISE) | None => noise.push(i),
            Some(c) => clusters[c].push(i),
        }
    }
    (clusters, noise)
}

/// Canonical form of a clustering for set-of-sets comparison.
pub fn canonical_partition(mut clusters: Vec<Vec<usize>>, mut noise: Vec<usize>) -> (Vec<Vec<usize>>, Vec<usize>) {
    for c in clusters.iter_mut() {
        c.sort_unstable();
    }
    clusters.sort();
    noise.sort_unstable();
    (clusters, noise)
}

/// SSE of a set of values around their own mean, direct formula.
pub fn segment_sse(values: &[f64]) -> f64 {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    values.iter().map(|v| (v - mean) * (v - mean)).sum()
}

/// Minimum SSE over all contiguous partitions of the sorted values
/// into exactly `k` non-empty segments, by exhaustive enumeration.
pub fn kmeans_oracle_sse(values: &[f64], k: usize) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let distinct = {
        let mut d = 1;
        for i in 1..sorted.len() {
            if sorted[i] != sorted[i - 1] {
                d += 1;
            }
        }
        d
    };
    let k = k.min(distinct);
    let n = sorted.len();
    let mut best = f64::INFINITY;
    // choose k-1 split points out of n-1 positions
    let mut splits = vec![0usize; k - 1];
    enumerate_splits(&sorted, &mut splits, 0, 1, &mut best);
    if k == 1 {
        best = segment_sse(&sorted);
    }
    let _ = n;
    best
}

fn enumerate_splits(sorted: &[f64], splits: &mut [usize], idx: usize, min_pos: usize, best: &mut f64) {
    if idx == splits.len() {
        if splits.is_empty() {
            return;
        }
        let mut sse = 0.0;
        let mut start = 0;
        for &s in splits.iter() {
            sse += segment_sse(&sorted[start..s]);
            start = s;
        }
        sse += segment_sse(&sorted[start..]);
        if sse < *best {
            *best = sse;
        }
        return;
    }
    for pos in min_pos..sorted.len() - (splits.len() - idx - 1) {
        splits[idx] = pos;
        enumerate_splits(sorted, splits, idx + 1, pos + 1, best);
    }
}

/// SSE of `values` against the nearest of the given cluster means,
/// recomputed with the same direct formula the oracle uses: values are
/// grouped by nearest mean, then each group is scored around its own
/// mean.
pub fn clustering_sse(values: &[f64], means: &[f64]) -> f64 {
    let mut values = values.to_vec();
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut groups: Vec<Vec<f64>> = vec![Vec::new(); means.len()];
    for &v in &values {
        let mut best = 0;
        for (i, &m) in means.iter().enumerate() {
            if (v - m).abs() < (v - means[best]).abs() {
                best = i;
            }
        }
        groups[best].push(v);
    }
    // means arrive in descending order; sum ascending like the oracle
    groups
        .iter()
        .rev()
        .filter(|g| !g.is_empty())
        .map(|g| segment_sse(g))
        .sum()
}

/// Hop count between two nodes by plain BFS over an edge list.
pub fn bfs_distance(edges: &[(String, String)], src: &str, dst: &str) -> Option<usize> {
    use std::collections::{BTreeMap, VecDeque};
    let mut adj: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (a, b) in edges {
        adj.entry(a).or_default().push(b);
        adj.entry(b).or_default().push(a);
    }
    let mut dist = BTreeMap::from([(src, 0usize)]);
    let mut queue = VecDeque::from([src]);
    while let Some(node) = queue.pop_front() {
        if node == dst {
            return Some(dist[node]);
        }
        let d = dist[node];
        for &next in adj.get(node).into_iter().flatten() {
            dist.entry(next).or_insert_with(|| {
                queue.push_back(next);
                d + 1
            });
        }
    }
    dist.get(dst).copied()
}

/// Ten-node validation topology: hosts h1..h8 on two routers joined by
/// a trunk. Capacities are far above any class rate so the generation
/// rate always binds.
pub fn two_router_spec(
    seed: u64,
    flow_count: usize,
    classes: &[f64],
    errors: &[(&str, &str, f64)],
) -> ScenarioSpec {
    let mut nodes: Vec<String> = (1..=8).map(|i| format!("h{i}")).collect();
    nodes.push("r1".into());
    nodes.push("r2".into());
    let mut links = Vec::new();
    for i in 1..=4 {
        links.push((format!("h{i}"), "r1".to_string()));
    }
    for i in 5..=8 {
        links.push((format!("h{i}"), "r2".to_string()));
    }
    links.push(("r1".to_string(), "r2".to_string()));
    let links = links
        .into_iter()
        .map(|(a, b)| {
            let error_rate = errors
                .iter()
                .find(|(ea, eb, _)| {
                    (*ea == a && *eb == b) || (*ea == b && *eb == a)
                })
                .map(|(_, _, r)| *r)
                .unwrap_or(0.0);
            LinkDescription {
                a,
                b,
                capacity_bps: 1e11,
                error_rate,
            }
        })
        .collect();
    let weight = 1.0 / classes.len() as f64;
    ScenarioSpec {
        topology: TopologyDescription { nodes, links },
        flow_count,
        throughput_classes: classes.to_vec(),
        class_weights: vec![weight; classes.len()],
        host_nodes: (1..=8).map(|i| format!("h{i}")).collect(),
        jitter: 0.02,
        seed,
    }
}

/// Chain h1 - rA - rB - {h2, h3}: the h1-rA and rA-rB links carry the
/// identical flow set.
pub fn serial_chain_spec(seed: u64, error_rate: f64) -> ScenarioSpec {
    let nodes: Vec<String> = ["h1", "rA", "rB", "h2", "h3"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mk = |a: &str, b: &str, err: f64| LinkDescription {
        a: a.into(),
        b: b.into(),
        capacity_bps: 1e11,
        error_rate: err,
    };
    ScenarioSpec {
        topology: TopologyDescription {
            nodes,
            links: vec![
                mk("h1", "rA", 0.0),
                mk("rA", "rB", error_rate),
                mk("rB", "h2", 0.0),
                mk("rB", "h3", 0.0),
            ],
        },
        flow_count: 1000,
        throughput_classes: vec![1_000_000.0],
        class_weights: vec![1.0],
        host_nodes: vec!["h1".into(), "h2".into(), "h3".into()],
        jitter: 0.02,
        seed,
    }
}
