//! Co-affiliation networks.
//!
//! Each eligible researcher is reduced to their two most common
//! affiliations at the chosen aggregation level; that single trusted pair
//! contributes one unit of edge weight, while node weights count every
//! researcher affiliated to the entity at least once. Counts are kept
//! non-normalized: the networks are relational, not positional.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::AuthorHistory;
use crate::{CoreError, EntityKey, Level, Result};

/// How "most common" is counted when picking an author's top entities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CountMode {
    /// Number of publications listing the entity (a year with three papers
    /// at A counts three). Default.
    Publications,
    /// Number of active years listing the entity.
    ActiveYears,
}

/// Network construction switches.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphOptions {
    pub count_mode: CountMode,
    /// Connect every pair of the researcher's entities instead of only the
    /// top-two pair (sensitivity mode; off by default).
    pub all_pairs: bool,
    /// Restrict to one country: researchers qualify only when both top
    /// entities lie in it, and foreign entities are dropped from the node
    /// set.
    pub scope_country: Option<String>,
    /// Edges below this weight are dropped from the final graph.
    pub min_edge_weight: u64,
}

impl Default for GraphOptions {
    fn default() -> Self {
        GraphOptions {
            count_mode: CountMode::Publications,
            all_pairs: false,
            scope_country: None,
            min_edge_weight: 1,
        }
    }
}

/// Undirected co-affiliation graph at one aggregation level.
///
/// Edge keys are stored canonically sorted; weights are researcher counts,
/// so every stored weight is at least one (after thresholding, at least the
/// configured minimum).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoAffiliationGraph {
    pub level: Level,
    /// Entity → number of researchers affiliated to it at least once.
    pub nodes: BTreeMap<EntityKey, u64>,
    /// Sorted pair → number of researchers whose pair is exactly this one.
    pub edges: BTreeMap<(EntityKey, EntityKey), u64>,
    /// Researchers included in the graph.
    pub researchers: u64,
}

impl CoAffiliationGraph {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Neighbors of `entity` over stored edges.
    pub fn neighbors<'a>(&'a self, entity: &'a EntityKey) -> impl Iterator<Item = &'a EntityKey> {
        self.edges.keys().filter_map(move |(a, b)| {
            if a == entity {
                Some(b)
            } else if b == entity {
                Some(a)
            } else {
                None
            }
        })
    }
}

/// Aggregate numbers describing one graph.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GraphSummary {
    pub node_count: usize,
    pub edge_count: usize,
    pub researchers: u64,
    pub component_count: usize,
    pub density: f64,
}

impl GraphSummary {
    pub fn to_csv(&self) -> String {
        format!(
            "node_count,edge_count,researchers,component_count,density\n{},{},{},{},{:.6}\n",
            self.node_count, self.edge_count, self.researchers, self.component_count, self.density
        )
    }
}

fn entity_counts(history: &AuthorHistory, level: Level, mode: CountMode) -> BTreeMap<EntityKey, u32> {
    match mode {
        CountMode::Publications => history
            .entity_pub_counts
            .get(&level)
            .cloned()
            .unwrap_or_default(),
        CountMode::ActiveYears => history
            .all_entities(level)
            .into_iter()
            .map(|e| {
                let years = history.year_count(&e, level);
                (e, years)
            })
            .collect(),
    }
}

/// Picks the researcher's one or two most common entities at `level`.
///
/// Ordered by occurrence count descending; ties broken by earliest
/// first-use year, then lexicographic key — so the result is independent of
/// input record order. Authors with no entity at this level yield an empty
/// result.
pub fn top_two_entities(
    history: &AuthorHistory,
    level: Level,
    mode: CountMode,
) -> Vec<EntityKey> {
    let counts = entity_counts(history, level, mode);
    let mut ranked: Vec<(EntityKey, u32)> = counts.into_iter().collect();
    ranked.sort_by(|(ka, ca), (kb, cb)| {
        cb.cmp(ca)
            .then_with(|| {
                let fa = history.first_use_year(ka, level);
                let fb = history.first_use_year(kb, level);
                fa.cmp(&fb)
            })
            .then_with(|| ka.cmp(kb))
    });
    ranked.into_iter().take(2).map(|(k, _)| k).collect()
}

fn in_scope(entity: &EntityKey, scope: &str) -> bool {
    entity.country() == scope
}

/// Per-researcher contribution, merged additively into the graph.
struct Contribution {
    node_entities: BTreeSet<EntityKey>,
    edge_pairs: Vec<(EntityKey, EntityKey)>,
}

fn sorted_pair(a: EntityKey, b: EntityKey) -> (EntityKey, EntityKey) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

fn contribution(
    history: &AuthorHistory,
    level: Level,
    options: &GraphOptions,
) -> Option<Contribution> {
    let top = top_two_entities(history, level, options.count_mode);
    if top.is_empty() {
        return None;
    }
    if let Some(scope) = &options.scope_country {
        if !top.iter().all(|e| in_scope(e, scope)) {
            return None;
        }
    }
    let mut node_entities = history.all_entities(level);
    if let Some(scope) = &options.scope_country {
        node_entities.retain(|e| in_scope(e, scope));
    }
    let edge_pairs = if options.all_pairs {
        let list: Vec<&EntityKey> = node_entities.iter().collect();
        let mut pairs = Vec::new();
        for i in 0..list.len() {
            for j in (i + 1)..list.len() {
                pairs.push(sorted_pair(list[i].clone(), list[j].clone()));
            }
        }
        pairs
    } else if top.len() == 2 {
        vec![sorted_pair(top[0].clone(), top[1].clone())]
    } else {
        Vec::new()
    };
    Some(Contribution {
        node_entities,
        edge_pairs,
    })
}

/// Builds the co-affiliation graph over all eligible researchers.
///
/// Per-researcher contributions are computed in parallel and merged by
/// integer addition, so the result does not depend on scheduling. A scope
/// matching zero researchers yields an empty graph, not an error.
pub fn build_coaffiliation_graph(
    histories: &BTreeMap<String, AuthorHistory>,
    level: Level,
    options: &GraphOptions,
) -> CoAffiliationGraph {
    let contributions: Vec<Contribution> = histories
        .par_iter()
        .filter_map(|(_, history)| contribution(history, level, options))
        .collect();

    let mut graph = CoAffiliationGraph {
        level,
        ..CoAffiliationGraph::default()
    };
    for c in &contributions {
        graph.researchers += 1;
        for entity in &c.node_entities {
            *graph.nodes.entry(entity.clone()).or_insert(0) += 1;
        }
        for pair in &c.edge_pairs {
            *graph.edges.entry(pair.clone()).or_insert(0) += 1;
        }
    }
    graph.edges.retain(|_, w| *w >= options.min_edge_weight.max(1));
    graph
}

/// Induced subgraph on `keep`: nodes and both-endpoint edges survive with
/// their original weights. Listing no present entity yields an empty graph.
pub fn induce_subgraph(graph: &CoAffiliationGraph, keep: &BTreeSet<EntityKey>) -> CoAffiliationGraph {
    let nodes: BTreeMap<EntityKey, u64> = graph
        .nodes
        .iter()
        .filter(|(k, _)| keep.contains(*k))
        .map(|(k, w)| (k.clone(), *w))
        .collect();
    let edges: BTreeMap<(EntityKey, EntityKey), u64> = graph
        .edges
        .iter()
        .filter(|((a, b), _)| nodes.contains_key(a) && nodes.contains_key(b))
        .map(|(k, w)| (k.clone(), *w))
        .collect();
    CoAffiliationGraph {
        level: graph.level,
        nodes,
        edges,
        researchers: graph.researchers,
    }
}

/// Counts, components, and density for one graph.
pub fn graph_summary(graph: &CoAffiliationGraph) -> GraphSummary {
    let n = graph.nodes.len();
    let m = graph.edges.len();
    let density = if n >= 2 {
        (2 * m) as f64 / (n as f64 * (n as f64 - 1.0))
    } else {
        0.0
    };
    GraphSummary {
        node_count: n,
        edge_count: m,
        researchers: graph.researchers,
        component_count: component_count(graph),
        density,
    }
}

fn component_count(graph: &CoAffiliationGraph) -> usize {
    let index: BTreeMap<&EntityKey, usize> =
        graph.nodes.keys().enumerate().map(|(i, k)| (k, i)).collect();
    let mut parent: Vec<usize> = (0..index.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for (a, b) in graph.edges.keys() {
        let (ra, rb) = (find(&mut parent, index[a]), find(&mut parent, index[b]));
        if ra != rb {
            parent[ra] = rb;
        }
    }
    (0..index.len())
        .filter(|&i| find(&mut parent, i) == i)
        .count()
}

/// Validates configuration invariants shared by the graph exporters.
pub fn check_graph(graph: &CoAffiliationGraph) -> Result<()> {
    for ((a, b), w) in &graph.edges {
        if a == b {
            return Err(CoreError::Contract(format!("self-loop on {a}")));
        }
        if !graph.nodes.contains_key(a) || !graph.nodes.contains_key(b) {
            return Err(CoreError::Contract(format!(
                "edge {a}–{b} references a missing node"
            )));
        }
        if *w == 0 {
            return Err(CoreError::Contract(format!("zero-weight edge {a}–{b}")));
        }
    }
    Ok(())
}
