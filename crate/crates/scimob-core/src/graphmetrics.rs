//! Closeness and betweenness centrality over co-affiliation graphs.
//!
//! Edges are binarized by default: centrality sees edge existence, not
//! weight. A weighted mode (distance = 1/weight) is available behind a
//! flag. Closeness uses the component-scaled convention
//! `((r−1)/(n−1)) · ((r−1)/Σd)` so disconnected graphs still score in
//! [0, 1]; betweenness is the classic endpoint-excluded, non-normalized
//! shortest-path fraction sum.
//!
//! Sources are processed in fixed index blocks and block partials are
//! folded in index order, so parallel runs accumulate floating-point sums
//! in one fixed order: results are bit-identical regardless of thread
//! count.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coaffil::{induce_subgraph, CoAffiliationGraph};
use crate::{CoreError, EntityKey, Result};

/// Tolerance for comparing accumulated 1/weight distances in weighted mode.
const DIST_EPS: f64 = 1e-12;

/// Sources per parallel work unit; the block layout depends only on the
/// node count, never on the thread count.
const SOURCE_BLOCK: usize = 64;

/// Distance metric used by the centrality kernels.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum EdgeMode {
    /// Hop counts over binarized edges. Default.
    #[default]
    Unweighted,
    /// Dijkstra over distance = 1/weight: heavier ties are shorter.
    InverseWeight,
}

/// One row of the ranked centrality table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentralityRow {
    pub entity: EntityKey,
    pub researcher_count: u64,
    pub closeness: f64,
    pub betweenness: f64,
}

/// Ranking key for [`centrality_table`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum SortKey {
    #[default]
    Betweenness,
    Closeness,
}

/// Dense index view of a graph: node id ↔ index, adjacency with per-edge
/// distances.
struct Adjacency {
    keys: Vec<EntityKey>,
    neighbors: Vec<Vec<(usize, f64)>>,
}

impl Adjacency {
    fn build(graph: &CoAffiliationGraph, mode: EdgeMode) -> Adjacency {
        let keys: Vec<EntityKey> = graph.nodes.keys().cloned().collect();
        let index: BTreeMap<&EntityKey, usize> =
            keys.iter().enumerate().map(|(i, k)| (k, i)).collect();
        let mut neighbors = vec![Vec::new(); keys.len()];
        for ((a, b), w) in &graph.edges {
            let dist = match mode {
                EdgeMode::Unweighted => 1.0,
                EdgeMode::InverseWeight => 1.0 / (*w as f64),
            };
            let (ia, ib) = (index[a], index[b]);
            neighbors[ia].push((ib, dist));
            neighbors[ib].push((ia, dist));
        }
        for list in &mut neighbors {
            list.sort_by_key(|(neighbor, _)| *neighbor);
        }
        Adjacency { keys, neighbors }
    }

    fn len(&self) -> usize {
        self.keys.len()
    }
}

/// Per-source shortest-path structure shared by both centralities.
struct ShortestPaths {
    /// Settle order (ascending distance from the source).
    order: Vec<usize>,
    dist: Vec<f64>,
    sigma: Vec<f64>,
    preds: Vec<Vec<usize>>,
}

fn shortest_paths(adj: &Adjacency, source: usize, mode: EdgeMode) -> ShortestPaths {
    match mode {
        EdgeMode::Unweighted => bfs(adj, source),
        EdgeMode::InverseWeight => dijkstra(adj, source),
    }
}

fn bfs(adj: &Adjacency, source: usize) -> ShortestPaths {
    let n = adj.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut sigma = vec![0.0; n];
    let mut preds = vec![Vec::new(); n];
    let mut order = Vec::with_capacity(n);
    let mut queue = std::collections::VecDeque::new();

    dist[source] = 0.0;
    sigma[source] = 1.0;
    queue.push_back(source);
    while let Some(v) = queue.pop_front() {
        order.push(v);
        for &(w, _) in &adj.neighbors[v] {
            if dist[w].is_infinite() {
                dist[w] = dist[v] + 1.0;
                queue.push_back(w);
            }
            if dist[w] == dist[v] + 1.0 {
                sigma[w] += sigma[v];
                preds[w].push(v);
            }
        }
    }
    ShortestPaths { order, dist, sigma, preds }
}

fn dijkstra(adj: &Adjacency, source: usize) -> ShortestPaths {
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;

    // Total order on (distance, node): distances here are finite, non-NaN.
    #[derive(PartialEq)]
    struct Entry(f64, usize);
    impl Eq for Entry {}
    impl PartialOrd for Entry {
        fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
            Some(self.cmp(other))
        }
    }
    impl Ord for Entry {
        fn cmp(&self, other: &Self) -> std::cmp::Ordering {
            self.0
                .partial_cmp(&other.0)
                .expect("distances are never NaN")
                .then(self.1.cmp(&other.1))
        }
    }

    let n = adj.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut sigma = vec![0.0; n];
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut order = Vec::with_capacity(n);
    let mut settled = vec![false; n];
    let mut heap = BinaryHeap::new();

    dist[source] = 0.0;
    sigma[source] = 1.0;
    heap.push(Reverse(Entry(0.0, source)));
    while let Some(Reverse(Entry(d, v))) = heap.pop() {
        if settled[v] || d > dist[v] + DIST_EPS {
            continue;
        }
        settled[v] = true;
        order.push(v);
        for &(w, len) in &adj.neighbors[v] {
            let candidate = dist[v] + len;
            if candidate < dist[w] - DIST_EPS {
                dist[w] = candidate;
                sigma[w] = sigma[v];
                preds[w].clear();
                preds[w].push(v);
                heap.push(Reverse(Entry(candidate, w)));
            } else if (candidate - dist[w]).abs() <= DIST_EPS && !settled[w] {
                sigma[w] += sigma[v];
                preds[w].push(v);
            }
        }
    }
    ShortestPaths { order, dist, sigma, preds }
}

/// Closeness for every node.
///
/// For node v in a component of r nodes within an n-node graph:
/// `((r−1)/(n−1)) · ((r−1)/Σ_{u in component} d(v,u))`; isolated nodes and
/// singleton graphs score 0.
pub fn closeness_all(graph: &CoAffiliationGraph, mode: EdgeMode) -> BTreeMap<EntityKey, f64> {
    let adj = Adjacency::build(graph, mode);
    let n = adj.len();
    if n == 0 {
        return BTreeMap::new();
    }
    let values: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|v| {
            let sp = shortest_paths(&adj, v, mode);
            let mut reachable = 0usize;
            let mut total = 0.0;
            for u in 0..n {
                if sp.dist[u].is_finite() {
                    reachable += 1;
                    total += sp.dist[u];
                }
            }
            if reachable <= 1 || total == 0.0 || n == 1 {
                0.0
            } else {
                let r = (reachable - 1) as f64;
                (r / (n - 1) as f64) * (r / total)
            }
        })
        .collect();
    adj.keys.iter().cloned().zip(values).collect()
}

/// Betweenness for every node: over all unordered pairs (s, t) with
/// s ≠ v ≠ t, the fraction of shortest s–t paths passing through v.
/// Endpoints excluded, no normalization.
pub fn betweenness_all(graph: &CoAffiliationGraph, mode: EdgeMode) -> BTreeMap<EntityKey, f64> {
    let adj = Adjacency::build(graph, mode);
    let n = adj.len();
    if n == 0 {
        return BTreeMap::new();
    }

    let block_count = n.div_ceil(SOURCE_BLOCK);
    let partials: Vec<Vec<f64>> = (0..block_count)
        .into_par_iter()
        .map(|b| {
            let mut acc = vec![0.0; n];
            let end = usize::min((b + 1) * SOURCE_BLOCK, n);
            for s in b * SOURCE_BLOCK..end {
                accumulate_source(&adj, s, mode, &mut acc);
            }
            acc
        })
        .collect();

    let mut centrality = vec![0.0; n];
    for partial in partials {
        for (c, p) in centrality.iter_mut().zip(partial) {
            *c += p;
        }
    }
    // each unordered pair was visited from both endpoints
    for c in &mut centrality {
        *c /= 2.0;
    }
    adj.keys.iter().cloned().zip(centrality).collect()
}

/// One source's dependency accumulation (the backward pass of Brandes'
/// algorithm) added into `acc`.
fn accumulate_source(adj: &Adjacency, source: usize, mode: EdgeMode, acc: &mut [f64]) {
    let sp = shortest_paths(adj, source, mode);
    let mut delta = vec![0.0; adj.len()];
    for &w in sp.order.iter().rev() {
        for &p in &sp.preds[w] {
            delta[p] += sp.sigma[p] / sp.sigma[w] * (1.0 + delta[w]);
        }
        if w != source {
            acc[w] += delta[w];
        }
    }
}

/// Ranked centrality rows: sorted by `sort` descending, ties broken by
/// researcher count descending then entity key ascending, truncated to
/// `top_k`. `top_k` below one is a configuration error.
pub fn centrality_table(
    graph: &CoAffiliationGraph,
    top_k: i64,
    sort: SortKey,
    mode: EdgeMode,
) -> Result<Vec<CentralityRow>> {
    if top_k <= 0 {
        return Err(CoreError::Config(format!(
            "top_k must be positive, got {top_k}"
        )));
    }
    let closeness = closeness_all(graph, mode);
    let betweenness = betweenness_all(graph, mode);
    let mut rows: Vec<CentralityRow> = graph
        .nodes
        .iter()
        .map(|(entity, researchers)| CentralityRow {
            entity: entity.clone(),
            researcher_count: *researchers,
            closeness: closeness[entity],
            betweenness: betweenness[entity],
        })
        .collect();
    rows.sort_by(|a, b| {
        let (ka, kb) = match sort {
            SortKey::Betweenness => (a.betweenness, b.betweenness),
            SortKey::Closeness => (a.closeness, b.closeness),
        };
        kb.partial_cmp(&ka)
            .expect("centrality values are never NaN")
            .then_with(|| b.researcher_count.cmp(&a.researcher_count))
            .then_with(|| a.entity.cmp(&b.entity))
    });
    rows.truncate(top_k as usize);
    Ok(rows)
}

/// Induced subgraph used for regional tables. Centralities must be
/// recomputed on the result, never sliced from global values.
pub fn region_subgraph(
    graph: &CoAffiliationGraph,
    entities: &std::collections::BTreeSet<EntityKey>,
) -> Result<CoAffiliationGraph> {
    if entities.is_empty() {
        return Err(CoreError::Config(
            "region entity set must not be empty".into(),
        ));
    }
    Ok(induce_subgraph(graph, entities))
}

/// Centrality table export: closeness to six decimals, betweenness to four.
pub fn centrality_to_csv(rows: &[CentralityRow]) -> String {
    let mut out = String::from("entity,researchers,closeness,betweenness\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{:.6},{:.4}\n",
            row.entity, row.researcher_count, row.closeness, row.betweenness
        ));
    }
    out
}
