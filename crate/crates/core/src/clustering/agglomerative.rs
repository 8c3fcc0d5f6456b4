use serde::{Deserialize, Serialize};

use super::TfidfVector;

/// A group of articles describing one major event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventCluster {
    /// Sorted, non-empty.
    pub member_ids: Vec<String>,
    pub centroid: TfidfVector,
}

impl EventCluster {
    pub fn len(&self) -> usize {
        self.member_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.member_ids.is_empty()
    }

    pub fn min_member_id(&self) -> &str {
        &self.member_ids[0]
    }
}

/// Bottom-up average-linkage clustering under cosine distance.
///
/// Starts from singletons and repeatedly merges the closest pair of clusters
/// until the smallest inter-cluster distance exceeds `distance_threshold`.
/// Equal distances are resolved by the lexicographically smallest pair of
/// cluster representatives (each cluster's smallest member id). Items are
/// processed in id order, so the result does not depend on input order.
///
/// Ids must be unique. Clusters come back ordered by size descending, then
/// by smallest member id.
pub fn agglomerative_cluster(items: &[(String, TfidfVector)], distance_threshold: f64) -> Vec<EventCluster> {
    let mut order: Vec<&(String, TfidfVector)> = items.iter().collect();
    order.sort_by(|a, b| a.0.cmp(&b.0));
    let n = order.len();
    if n == 0 {
        return Vec::new();
    }

    let mut dist = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = order[i].1.cosine_distance(&order[j].1);
            dist[i][j] = d;
            dist[j][i] = d;
        }
    }

    // Members hold indices into `order`; index order equals id order, so a
    // cluster's representative is its first member and the slot it occupies.
    let mut members: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut active: Vec<bool> = vec![true; n];

    loop {
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..n {
            if !active[i] {
                continue;
            }
            for j in (i + 1)..n {
                if !active[j] {
                    continue;
                }
                let d = dist[i][j];
                // Slots are scanned in representative order, so a strictly
                // smaller distance is the only reason to replace the best.
                if best.is_none_or(|(bd, _, _)| d < bd) {
                    best = Some((d, i, j));
                }
            }
        }
        let Some((d, keep, absorb)) = best else { break };
        if d > distance_threshold {
            break;
        }
        let (size_keep, size_absorb) = (members[keep].len() as f64, members[absorb].len() as f64);
        for k in 0..n {
            if !active[k] || k == keep || k == absorb {
                continue;
            }
            let merged = (size_keep * dist[keep][k] + size_absorb * dist[absorb][k]) / (size_keep + size_absorb);
            dist[keep][k] = merged;
            dist[k][keep] = merged;
        }
        let moved = std::mem::take(&mut members[absorb]);
        members[keep].extend(moved);
        members[keep].sort_unstable();
        active[absorb] = false;
    }

    let mut clusters: Vec<EventCluster> = (0..n)
        .filter(|&i| active[i])
        .map(|i| EventCluster {
            member_ids: members[i].iter().map(|&m| order[m].0.clone()).collect(),
            centroid: TfidfVector::mean(members[i].iter().map(|&m| &order[m].1)),
        })
        .collect();
    clusters.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.min_member_id().cmp(b.min_member_id())));
    clusters
}
