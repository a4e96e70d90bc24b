//! Graph quality metrics over the views of correct nodes: mean local
//! clustering coefficient, mean directed shortest-path length and the
//! in-degree decile spread.

use std::collections::HashMap;

use rand::seq::index;
use rand::Rng;

use crate::rank::NodeId;

/// Metrics of one view-graph snapshot.
#[derive(Clone, Copy, Debug)]
pub struct GraphMetrics {
    /// Mean local clustering coefficient over correct nodes, computed on
    /// the undirected projection of view edges with every
    /// Byzantine-Byzantine pair counted as connected.
    pub clustering: f64,
    /// Mean directed shortest-path length over (sampled) ordered pairs of
    /// correct nodes, with Byzantine nodes removed entirely. Unreachable
    /// pairs are excluded from the mean.
    pub mean_path: f64,
    /// Fraction of evaluated ordered pairs that were unreachable.
    pub disconnected_fraction: f64,
    /// 90th minus 10th percentile of correct nodes' in-degrees, counting
    /// only edges originating at correct nodes.
    pub indegree_spread: f64,
}

/// Pair sampling configuration for the mean path length: below
/// `exact_limit` correct nodes all ordered pairs are evaluated, above it
/// BFS sources are sampled so that roughly `pair_budget` pairs are covered.
#[derive(Clone, Copy, Debug)]
pub struct PathSampling {
    pub exact_limit: usize,
    pub pair_budget: usize,
}

impl Default for PathSampling {
    fn default() -> Self {
        PathSampling {
            exact_limit: 2_000,
            pair_budget: 100_000,
        }
    }
}

/// Linear-interpolation percentile of a sorted slice, `q` in [0, 1].
fn percentile(sorted: &[u32], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    f64::from(sorted[lo]) * (1.0 - frac) + f64::from(sorted[hi]) * frac
}

/// Compute all metrics from the views of correct nodes.
///
/// `views` holds one entry per correct node: its identifier and current
/// view contents (which may include Byzantine identifiers). The RNG is
/// only used for BFS source sampling and must be a stream dedicated to
/// metrics so that enabling them does not perturb a simulation.
pub fn graph_metrics<R: Rng + ?Sized>(
    views: &[(NodeId, Vec<NodeId>)],
    sampling: PathSampling,
    rng: &mut R,
) -> GraphMetrics {
    let q = views.len();
    if q == 0 {
        return GraphMetrics {
            clustering: f64::NAN,
            mean_path: f64::NAN,
            disconnected_fraction: f64::NAN,
            indegree_spread: f64::NAN,
        };
    }

    // Dense indexing: correct nodes first (slice order), then any
    // Byzantine identifier appearing in a view.
    let mut index_of: HashMap<u32, usize> = HashMap::with_capacity(q * 2);
    let mut byz = Vec::new();
    for (i, (id, _)) in views.iter().enumerate() {
        index_of.insert(id.addr(), i);
    }
    for (_, view) in views {
        for p in view {
            if p.is_byzantine() && !index_of.contains_key(&p.addr()) {
                index_of.insert(p.addr(), q + byz.len());
                byz.push(*p);
            }
        }
    }
    let total = q + byz.len();
    let is_byz = |idx: usize| idx >= q;

    // Undirected projection as bitset rows.
    let words = total.div_ceil(64);
    let mut adj = vec![0u64; total * words];
    let set_edge = |a: usize, b: usize, adj: &mut Vec<u64>| {
        adj[a * words + b / 64] |= 1 << (b % 64);
        adj[b * words + a / 64] |= 1 << (a % 64);
    };
    // Directed adjacency (correct targets only, deduplicated) and correct
    // in-degrees from correct sources.
    let mut out_edges: Vec<Vec<u32>> = vec![Vec::new(); q];
    let mut indegree = vec![0u32; q];
    for (u, (_, view)) in views.iter().enumerate() {
        for p in view {
            let w = index_of[&p.addr()];
            if w != u {
                set_edge(u, w, &mut adj);
            }
            if !is_byz(w) && w != u {
                out_edges[u].push(w as u32);
            }
        }
        out_edges[u].sort_unstable();
        out_edges[u].dedup();
        for &w in &out_edges[u] {
            indegree[w as usize] += 1;
        }
    }

    let has_edge = |a: usize, b: usize| adj[a * words + b / 64] >> (b % 64) & 1 == 1;

    // Mean local clustering coefficient over correct nodes.
    let mut clustering_sum = 0.0;
    let mut neighbors = Vec::new();
    for u in 0..q {
        neighbors.clear();
        for w in 0..words {
            let mut bits = adj[u * words + w];
            while bits != 0 {
                let b = bits.trailing_zeros() as usize;
                neighbors.push(w * 64 + b);
                bits &= bits - 1;
            }
        }
        let deg = neighbors.len();
        if deg < 2 {
            continue;
        }
        let mut links = 0usize;
        for i in 0..deg {
            for j in (i + 1)..deg {
                let (a, b) = (neighbors[i], neighbors[j]);
                if (is_byz(a) && is_byz(b)) || has_edge(a, b) {
                    links += 1;
                }
            }
        }
        clustering_sum += links as f64 / (deg * (deg - 1) / 2) as f64;
    }
    let clustering = clustering_sum / q as f64;

    // Mean directed shortest path over correct nodes via BFS.
    let sources: Vec<usize> = if q <= sampling.exact_limit {
        (0..q).collect()
    } else {
        let wanted = (sampling.pair_budget + q - 2) / (q - 1);
        index::sample(rng, q, wanted.clamp(1, q)).into_vec()
    };
    let mut dist = vec![u32::MAX; q];
    let mut queue = std::collections::VecDeque::new();
    let mut path_sum = 0u64;
    let mut reached_pairs = 0u64;
    let mut total_pairs = 0u64;
    for &s in &sources {
        dist.fill(u32::MAX);
        dist[s] = 0;
        queue.clear();
        queue.push_back(s);
        while let Some(u) = queue.pop_front() {
            let d = dist[u];
            for &w in &out_edges[u] {
                let w = w as usize;
                if dist[w] == u32::MAX {
                    dist[w] = d + 1;
                    queue.push_back(w);
                }
            }
        }
        for (w, &d) in dist.iter().enumerate() {
            if w == s {
                continue;
            }
            total_pairs += 1;
            if d != u32::MAX {
                path_sum += u64::from(d);
                reached_pairs += 1;
            }
        }
    }
    let mean_path = if reached_pairs > 0 {
        path_sum as f64 / reached_pairs as f64
    } else {
        f64::NAN
    };
    let disconnected_fraction = if total_pairs > 0 {
        (total_pairs - reached_pairs) as f64 / total_pairs as f64
    } else {
        f64::NAN
    };

    indegree.sort_unstable();
    let indegree_spread = percentile(&indegree, 0.9) - percentile(&indegree, 0.1);

    GraphMetrics {
        clustering,
        mean_path,
        disconnected_fraction,
        indegree_spread,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(0x6ea9)
    }

    fn complete_graph(n: u32) -> Vec<(NodeId, Vec<NodeId>)> {
        (0..n)
            .map(|i| {
                (
                    NodeId::correct(i),
                    (0..n).filter(|&j| j != i).map(NodeId::correct).collect(),
                )
            })
            .collect()
    }

    #[test]
    fn complete_correct_graph_is_fully_clustered() {
        let m = graph_metrics(&complete_graph(12), PathSampling::default(), &mut rng());
        assert_eq!(m.clustering, 1.0);
        assert_eq!(m.mean_path, 1.0);
        assert_eq!(m.disconnected_fraction, 0.0);
        assert_eq!(m.indegree_spread, 0.0);
    }

    #[test]
    fn directed_ring_has_zero_clustering_and_half_n_paths() {
        let n = 50u32;
        let views: Vec<(NodeId, Vec<NodeId>)> = (0..n)
            .map(|i| (NodeId::correct(i), vec![NodeId::correct((i + 1) % n)]))
            .collect();
        let m = graph_metrics(&views, PathSampling::default(), &mut rng());
        assert_eq!(m.clustering, 0.0);
        // Mean over ordered pairs of 1..n-1 is n/2.
        assert!((m.mean_path - f64::from(n) / 2.0).abs() < 1e-9);
        assert_eq!(m.indegree_spread, 0.0);
    }

    #[test]
    fn random_out_digraph_matches_log_ratio_path_length() {
        // Oracle: a pure random v-out digraph with n = 10^4, v = 160 has
        // mean path length about ln(n)/ln(v) ≈ 1.81.
        let n = 10_000u32;
        let v = 160usize;
        let mut r = rng();
        let views: Vec<(NodeId, Vec<NodeId>)> = (0..n)
            .map(|i| {
                let out = (0..v)
                    .map(|_| {
                        let mut j = r.gen_range(0..n);
                        while j == i {
                            j = r.gen_range(0..n);
                        }
                        NodeId::correct(j)
                    })
                    .collect();
                (NodeId::correct(i), out)
            })
            .collect();
        let m = graph_metrics(&views, PathSampling::default(), &mut r);
        let expected = (f64::from(n)).ln() / (v as f64).ln();
        assert!(
            (m.mean_path - expected).abs() < 0.3,
            "mean path {} vs {}",
            m.mean_path,
            expected
        );
        assert!(m.disconnected_fraction < 1e-3);
    }

    #[test]
    fn byzantine_pairs_count_as_connected_for_clustering() {
        // One correct node whose only neighbors are two Byzantine nodes:
        // the pair is virtually connected, coefficient 1.
        let views = vec![(
            NodeId::correct(0),
            vec![NodeId::byzantine(100), NodeId::byzantine(101)],
        )];
        let m = graph_metrics(&views, PathSampling::default(), &mut rng());
        assert_eq!(m.clustering, 1.0);
        // A single correct node has no ordered pairs to measure.
        assert!(m.mean_path.is_nan());
        assert!(m.disconnected_fraction.is_nan());
    }

    #[test]
    fn mean_path_excludes_byzantine_relays() {
        // correct 0 -> byz 9 -> correct 1 provides no correct path.
        let views = vec![
            (NodeId::correct(0), vec![NodeId::byzantine(9)]),
            (NodeId::correct(1), vec![NodeId::correct(0)]),
        ];
        let m = graph_metrics(&views, PathSampling::default(), &mut rng());
        // Only 1 -> 0 is reachable.
        assert_eq!(m.mean_path, 1.0);
        assert_eq!(m.disconnected_fraction, 0.5);
    }

    #[test]
    fn indegree_spread_uses_decile_difference() {
        // 10 nodes in a directed star onto node 0 plus a chain, giving a
        // known in-degree multiset.
        let n = 10u32;
        let mut views: Vec<(NodeId, Vec<NodeId>)> = (0..n)
            .map(|i| (NodeId::correct(i), vec![NodeId::correct(0)]))
            .collect();
        views[0].1 = vec![NodeId::correct(1)];
        let m = graph_metrics(&views, PathSampling::default(), &mut rng());
        // In-degrees: node 0 has 9, node 1 has 1, rest 0.
        // Sorted: [0,0,0,0,0,0,0,0,1,9]; p90 = 1 + 0.1*8 = 1.8... wait,
        // pos = 0.9*9 = 8.1 -> 1*(0.9) + 9*(0.1) = 1.8; p10 = 0.
        assert!((m.indegree_spread - 1.8).abs() < 1e-9);
    }
}
