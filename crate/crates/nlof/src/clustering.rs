//! Two-stage throughput clustering and per-flow outlier scoring.
//!
//! Stage 1 runs DBSCAN over 1-D throughput values. Stage 2 merges the
//! density clusters into throughput classes (TPClusters) by absorbing
//! clusters whose maxima lie within a relative window of a seed
//! maximum, then folds DBSCAN noise into the nearest eligible class.
//! Each TPCluster gets a representative "normal" throughput from an
//! optimal 1-D k-means split, and every member flow a Flow Outlier
//! Factor (FOF): its relative shortfall from that normal point.

use std::collections::BTreeMap;

use thiserror::Error;

/// Stage-1 output: one dense cluster of flows.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityCluster {
    pub cluster_id: usize,
    /// (flow_id, throughput) members, input order.
    pub members: Vec<(String, f64)>,
    pub max_throughput: f64,
}

/// Stage-2 output: a merged throughput class.
#[derive(Debug, Clone, PartialEq)]
pub struct TpCluster {
    pub tpcluster_id: usize,
    /// max_throughput of the founding density cluster.
    pub seed_max: f64,
    pub members: Vec<(String, f64)>,
    /// Representative healthy throughput; populated by [`compute_fof`].
    pub normal_point: f64,
    /// flow_id -> FOF; populated by [`compute_fof`].
    pub fof: BTreeMap<String, f64>,
    /// True when every member throughput is zero and FOF was forced to 1.
    pub degenerate_zero: bool,
}

#[derive(Debug, Error)]
pub enum ClusterError {
    #[error("no clusters formed from {noise} noise flows; adjust eps/min_samples")]
    NoClusters { noise: usize },
    #[error("k-means requires a non-empty input")]
    EmptyKmeans,
}

/// DBSCAN over 1-D values with absolute-difference distance.
///
/// A point is core iff at least `min_samples` points (itself included)
/// lie within `eps` of it. Returned clusters are sorted by descending
/// `max_throughput` with ids assigned in that order; points in no
/// cluster come back in the noise list.
pub fn dbscan_1d(
    throughputs: &[(String, f64)],
    eps: f64,
    min_samples: usize,
) -> (Vec<DensityCluster>, Vec<String>) {
    assert!(eps > 0.0, "eps must be positive");
    assert!(min_samples >= 1, "min_samples must be >= 1");
    let n = throughputs.len();
    if n == 0 {
        return (Vec::new(), Vec::new());
    }

    // Sorted view for O(log n) range queries; `order[rank]` is the
    // original index of the rank-th smallest value.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        throughputs[a]
            .1
            .partial_cmp(&throughputs[b].1)
            .expect("throughputs are comparable")
    });
    let sorted_vals: Vec<f64> = order.iter().map(|&i| throughputs[i].1).collect();

    // Neighbors of original index i as a contiguous rank range [lo, hi).
    let range_of = |value: f64| -> (usize, usize) {
        let lo = sorted_vals.partition_point(|&v| v < value - eps);
        let hi = sorted_vals.partition_point(|&v| v <= value + eps);
        (lo, hi)
    };

    let is_core: Vec<bool> = (0..n)
        .map(|i| {
            let (lo, hi) = range_of(throughputs[i].1);
            hi - lo >= min_samples
        })
        .collect();

    const UNLABELED: usize = usize::MAX;
    const NOISE: usize = usize::MAX - 1;
    let mut label = vec![UNLABELED; n];
    let mut next_cluster = 0usize;

    // Seed clusters in input order so border points land in the first
    // cluster that reaches them, matching the reference formulation.
    for i in 0..n {
        if label[i] != UNLABELED || !is_core[i] {
            continue;
        }
        let cluster = next_cluster;
        next_cluster += 1;
        label[i] = cluster;
        let mut queue = vec![i];
        while let Some(p) = queue.pop() {
            let (lo, hi) = range_of(throughputs[p].1);
            for rank in lo..hi {
                let q = order[rank];
                if label[q] == NOISE {
                    label[q] = cluster;
                } else if label[q] == UNLABELED {
                    label[q] = cluster;
                    if is_core[q] {
                        queue.push(q);
                    }
                }
            }
        }
    }
    for l in label.iter_mut() {
        if *l == UNLABELED {
            *l = NOISE;
        }
    }

    let mut clusters: Vec<DensityCluster> = (0..next_cluster)
        .map(|id| DensityCluster {
            cluster_id: id,
            members: Vec::new(),
            max_throughput: f64::NEG_INFINITY,
        })
        .collect();
    let mut noise = Vec::new();
    for i in 0..n {
        if label[i] == NOISE {
            noise.push(throughputs[i].0.clone());
        } else {
            let c = &mut clusters[label[i]];
            c.members.push(throughputs[i].clone());
            c.max_throughput = c.max_throughput.max(throughputs[i].1);
        }
    }

    clusters.sort_by(|a, b| {
        b.max_throughput
            .partial_cmp(&a.max_throughput)
            .expect("maxima are comparable")
    });
    for (id, c) in clusters.iter_mut().enumerate() {
        c.cluster_id = id;
    }
    (clusters, noise)
}

/// Globally optimal 1-D k-means via dynamic programming over the
/// sorted values (the optimum uses contiguous partitions in 1-D).
/// `k` is reduced to the number of distinct values when larger.
/// Returns the cluster means in descending order.
pub fn kmeans_1d(values: &[f64], k: usize) -> Result<Vec<f64>, ClusterError> {
    assert!(k >= 1, "k must be >= 1");
    if values.is_empty() {
        return Err(ClusterError::EmptyKmeans);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("values are comparable"));
    let n = sorted.len();
    let mut distinct = 1;
    for i in 1..n {
        if sorted[i] != sorted[i - 1] {
            distinct += 1;
        }
    }
    let k = k.min(distinct);

    // Prefix sums give O(1) within-segment SSE.
    let mut prefix = vec![0.0f64; n + 1];
    let mut prefix_sq = vec![0.0f64; n + 1];
    for (i, &v) in sorted.iter().enumerate() {
        prefix[i + 1] = prefix[i] + v;
        prefix_sq[i + 1] = prefix_sq[i] + v * v;
    }
    // SSE of sorted[i..j] around its own mean.
    let seg_cost = |i: usize, j: usize| -> f64 {
        let len = (j - i) as f64;
        let sum = prefix[j] - prefix[i];
        let sq = prefix_sq[j] - prefix_sq[i];
        (sq - sum * sum / len).max(0.0)
    };

    // cost[m][j]: best SSE splitting sorted[..j] into m+1 segments.
    // split[m][j]: start index of the last segment in that solution.
    let mut cost = vec![vec![f64::INFINITY; n + 1]; k];
    let mut split = vec![vec![0usize; n + 1]; k];
    for j in 1..=n {
        cost[0][j] = seg_cost(0, j);
    }
    for m in 1..k {
        for j in (m + 1)..=n {
            for i in m..j {
                let c = cost[m - 1][i] + seg_cost(i, j);
                if c < cost[m][j] {
                    cost[m][j] = c;
                    split[m][j] = i;
                }
            }
        }
    }

    let mut means = Vec::with_capacity(k);
    let mut end = n;
    for m in (0..k).rev() {
        let start = if m == 0 { 0 } else { split[m][end] };
        let mean = (prefix[end] - prefix[start]) / (end - start) as f64;
        // the true mean lies within the segment's range; rounding must
        // not push it past either endpoint
        means.push(mean.clamp(sorted[start], sorted[end - 1]));
        end = start;
    }
    // Backtracking walks right to left, so means are already descending.
    Ok(means)
}

/// Stage-2 merge: density clusters become TPClusters and noise flows
/// are folded in.
///
/// Clusters are processed in descending `max_throughput` order; an
/// unclaimed cluster founds a TPCluster with `seed_max` equal to its
/// maximum and absorbs every remaining cluster whose maximum lies in
/// `((1 - tpr) * seed_max, seed_max]`. Each noise flow then joins the
/// candidate TPCluster minimizing the signed distance
/// `seed_max - throughput`, where candidates are those with distance
/// `>= -tpdev * seed_max`; with no candidate it joins the TPCluster
/// with the largest seed_max.
pub fn form_tpclusters(
    clusters: &[DensityCluster],
    noise: &[(String, f64)],
    tpr: f64,
    tpdev: f64,
) -> Result<Vec<TpCluster>, ClusterError> {
    assert!((0.0..1.0).contains(&tpr), "tpr must be in [0, 1)");
    assert!(tpdev >= 0.0, "tpdev must be non-negative");
    if clusters.is_empty() {
        if noise.is_empty() {
            return Ok(Vec::new());
        }
        return Err(ClusterError::NoClusters { noise: noise.len() });
    }

    let mut order: Vec<usize> = (0..clusters.len()).collect();
    order.sort_by(|&a, &b| {
        clusters[b]
            .max_throughput
            .partial_cmp(&clusters[a].max_throughput)
            .expect("maxima are comparable")
    });

    let mut combined = vec![false; clusters.len()];
    let mut tpclusters: Vec<TpCluster> = Vec::new();
    for (pos, &ci) in order.iter().enumerate() {
        if combined[ci] {
            continue;
        }
        let seed_max = clusters[ci].max_throughput;
        let lower = (1.0 - tpr) * seed_max;
        combined[ci] = true;
        let mut members = clusters[ci].members.clone();
        for &cj in &order[pos + 1..] {
            if combined[cj] {
                continue;
            }
            let max = clusters[cj].max_throughput;
            if max > lower && max <= seed_max {
                combined[cj] = true;
                members.extend(clusters[cj].members.iter().cloned());
            }
        }
        tpclusters.push(TpCluster {
            tpcluster_id: tpclusters.len(),
            seed_max,
            members,
            normal_point: 0.0,
            fof: BTreeMap::new(),
            degenerate_zero: false,
        });
    }

    // Largest seed_max is the fallback home for out-of-window noise.
    let largest = tpclusters
        .iter()
        .enumerate()
        .max_by(|(_, a), (_, b)| {
            a.seed_max
                .partial_cmp(&b.seed_max)
                .expect("seed maxima are comparable")
        })
        .map(|(i, _)| i)
        .expect("at least one tpcluster");

    for (flow_id, tp) in noise {
        let mut best: Option<(f64, usize)> = None;
        for (i, tc) in tpclusters.iter().enumerate() {
            let dist = tc.seed_max - tp;
            if dist >= -tpdev * tc.seed_max {
                let better = match best {
                    None => true,
                    Some((best_dist, best_i)) => {
                        dist < best_dist
                            || (dist == best_dist
                                && tc.seed_max > tpclusters[best_i].seed_max)
                    }
                };
                if better {
                    best = Some((dist, i));
                }
            }
        }
        let target = best.map(|(_, i)| i).unwrap_or(largest);
        tpclusters[target].members.push((flow_id.clone(), *tp));
    }
    Ok(tpclusters)
}

/// Populates `normal_point` and per-flow FOF on every TPCluster.
///
/// The normal point is the highest mean from an optimal k-means split
/// of the member throughputs; `fof = (normal - throughput) / normal`.
/// Negative FOF (flows above the normal point) is retained. A cluster
/// whose members are all zero gets FOF 1 for every member and the
/// `degenerate_zero` flag instead of a division by zero.
pub fn compute_fof(tpclusters: &mut [TpCluster], k: usize) -> Result<(), ClusterError> {
    assert!(k >= 1, "k must be >= 1");
    for tc in tpclusters.iter_mut() {
        let values: Vec<f64> = tc.members.iter().map(|(_, tp)| *tp).collect();
        let means = kmeans_1d(&values, k)?;
        let normal = means[0];
        tc.normal_point = normal;
        tc.fof.clear();
        if normal == 0.0 {
            tc.degenerate_zero = true;
            for (flow_id, _) in &tc.members {
                tc.fof.insert(flow_id.clone(), 1.0);
            }
        } else {
            tc.degenerate_zero = false;
            for (flow_id, tp) in &tc.members {
                tc.fof.insert(flow_id.clone(), (normal - tp) / normal);
            }
        }
    }
    Ok(())
}
