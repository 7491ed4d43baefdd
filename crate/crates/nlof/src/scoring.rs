//! Per-link NLOF computation and report ranking.
//!
//! A link's NLOF is the ratio of outlier flows (FOF strictly above the
//! threshold) to total flows traversing it.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::topology::LinkId;

/// Per-link outlier score.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinkScore {
    pub link: LinkId,
    pub total_flows: usize,
    pub outlier_flows: usize,
    pub nlof: f64,
    /// True when no flow traverses the link; nlof is 0 by convention.
    pub no_data: bool,
}

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error("flow `{0}` referenced by link {1} has no FOF score")]
    MissingFof(String, LinkId),
}

/// Computes one [`LinkScore`] per link. Outliers are flows with
/// `fof > threshold` (strict).
pub fn compute_nlof(
    link_flows: &BTreeMap<LinkId, Vec<String>>,
    fof: &BTreeMap<String, f64>,
    threshold: f64,
) -> Result<Vec<LinkScore>, ScoreError> {
    let mut scores = Vec::with_capacity(link_flows.len());
    for (link, flows) in link_flows {
        let mut outliers = 0;
        for flow_id in flows {
            let score = fof
                .get(flow_id)
                .ok_or_else(|| ScoreError::MissingFof(flow_id.clone(), link.clone()))?;
            if *score > threshold {
                outliers += 1;
            }
        }
        let total = flows.len();
        scores.push(LinkScore {
            link: link.clone(),
            total_flows: total,
            outlier_flows: outliers,
            nlof: if total > 0 {
                outliers as f64 / total as f64
            } else {
                0.0
            },
            no_data: total == 0,
        });
    }
    Ok(scores)
}

/// Orders scores for reporting: descending nlof, ties by descending
/// total_flows then lexicographic link name; no-data links last.
pub fn rank_links(scores: &[LinkScore]) -> Vec<LinkScore> {
    let mut ranked = scores.to_vec();
    ranked.sort_by(|a, b| {
        a.no_data
            .cmp(&b.no_data)
            .then_with(|| b.nlof.partial_cmp(&a.nlof).expect("nlof is finite"))
            .then_with(|| b.total_flows.cmp(&a.total_flows))
            .then_with(|| a.link.cmp(&b.link))
    });
    ranked
}
