//! Directed mobility flows and capacity-normalized shares.
//!
//! Every mobile event contributes total weight 1, split fractionally over
//! the (prior × new) entity pairs so multi-affiliated movers are never
//! double-counted. A country's capacity is its eligible-researcher count;
//! a normalized share above 1 means the country sends (or receives) more
//! than its capacity share predicts.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::corpus::AuthorHistory;
use crate::mobility::MobilityEvent;
use crate::{CoreError, EntityKey, Level, Result};

/// Flow direction for share computations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Sending,
    Receiving,
}

impl Direction {
    pub fn as_str(&self) -> &'static str {
        match self {
            Direction::Sending => "sending",
            Direction::Receiving => "receiving",
        }
    }
}

/// How a scope list restricts flows.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScopeMode {
    /// Keep a flow only when sender and receiver are both in scope
    /// (intra-region analysis). Default.
    #[default]
    Both,
    /// Keep a flow when either endpoint is in scope
    /// (emigration-to-anywhere studies).
    Either,
}

/// Flow accumulation switches.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FlowOptions {
    pub scope: Option<BTreeSet<EntityKey>>,
    pub scope_mode: ScopeMode,
    /// Count only each researcher's first mobile event instead of all of
    /// them (off by default: events are the unit, not researchers).
    pub dedup_per_researcher: bool,
}

/// Square origin→destination matrix over a fixed entity list, with the
/// capacity of each entity alongside.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FlowMatrix {
    pub entities: Vec<EntityKey>,
    /// Row = sender, column = receiver; diagonal is structurally zero.
    pub flow: Vec<Vec<f64>>,
    pub capacity: BTreeMap<EntityKey, u64>,
}

impl FlowMatrix {
    pub fn index_of(&self, entity: &EntityKey) -> Option<usize> {
        self.entities.binary_search(entity).ok()
    }

    pub fn cell(&self, from: &EntityKey, to: &EntityKey) -> f64 {
        match (self.index_of(from), self.index_of(to)) {
            (Some(i), Some(j)) => self.flow[i][j],
            _ => 0.0,
        }
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.flow[i].iter().sum()
    }

    pub fn col_sum(&self, j: usize) -> f64 {
        self.flow.iter().map(|row| row[j]).sum()
    }

    pub fn total_flow(&self) -> f64 {
        self.flow.iter().flatten().sum()
    }
}

/// One country's row in a share table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShareRow {
    pub country: EntityKey,
    pub capacity: u64,
    pub capacity_share: f64,
    pub observed_share: f64,
    /// `observed_share / capacity_share`; absent when the country has no
    /// capacity (flagged upstream as a data warning).
    pub normalized_share: Option<f64>,
}

/// Country capacities: for each eligible researcher, +1 to every country
/// appearing anywhere in their timeline.
pub fn capacities_from_histories(
    histories: &BTreeMap<String, AuthorHistory>,
) -> BTreeMap<EntityKey, u64> {
    let mut capacity = BTreeMap::new();
    for history in histories.values() {
        for country in history.all_entities(Level::Country) {
            *capacity.entry(country).or_insert(0) += 1;
        }
    }
    capacity
}

/// Directed fractional edges of one mobile event: one per
/// (prior × new) pair, each weighing `1/(|prior|·|new|)`, so the event's
/// edges sum to exactly 1. Calling this on a non-mobile event is a
/// contract violation.
pub fn flow_edges_from_event(event: &MobilityEvent) -> Result<Vec<(EntityKey, EntityKey, f64)>> {
    if !event.label.is_mobile() {
        return Err(CoreError::Contract(format!(
            "flow edges requested for a {} event",
            event.label
        )));
    }
    if event.prior_entities.is_empty() {
        return Err(CoreError::Contract(
            "mobile event with empty prior entity set".into(),
        ));
    }
    debug_assert!(!event.new_entities.is_empty());
    let weight = 1.0 / (event.prior_entities.len() * event.new_entities.len()) as f64;
    let mut edges = Vec::with_capacity(event.prior_entities.len() * event.new_entities.len());
    for from in &event.prior_entities {
        for to in &event.new_entities {
            edges.push((from.clone(), to.clone(), weight));
        }
    }
    Ok(edges)
}

fn edge_in_scope(options: &FlowOptions, from: &EntityKey, to: &EntityKey) -> bool {
    match &options.scope {
        None => true,
        Some(scope) => match options.scope_mode {
            ScopeMode::Both => scope.contains(from) && scope.contains(to),
            ScopeMode::Either => scope.contains(from) || scope.contains(to),
        },
    }
}

/// Accumulates all (in-scope) mobile events into a flow matrix.
///
/// Events are folded in author order, then year order, so float sums are
/// accumulated in one fixed order and repeated runs are byte-identical.
pub fn build_flow_matrix(
    events_by_author: &BTreeMap<String, Vec<MobilityEvent>>,
    capacities: &BTreeMap<EntityKey, u64>,
    options: &FlowOptions,
) -> Result<FlowMatrix> {
    let mut kept_edges: Vec<(EntityKey, EntityKey, f64)> = Vec::new();
    for events in events_by_author.values() {
        let mut mobile = events.iter().filter(|e| e.label.is_mobile());
        let selected: Vec<&MobilityEvent> = if options.dedup_per_researcher {
            mobile.next().into_iter().collect()
        } else {
            mobile.collect()
        };
        for event in selected {
            for (from, to, weight) in flow_edges_from_event(event)? {
                if edge_in_scope(options, &from, &to) {
                    kept_edges.push((from, to, weight));
                }
            }
        }
    }

    let mut entity_set: BTreeSet<EntityKey> = match &options.scope {
        Some(scope) => capacities.keys().filter(|k| scope.contains(*k)).cloned().collect(),
        None => capacities.keys().cloned().collect(),
    };
    for (from, to, _) in &kept_edges {
        entity_set.insert(from.clone());
        entity_set.insert(to.clone());
    }

    let entities: Vec<EntityKey> = entity_set.into_iter().collect();
    let index: BTreeMap<&EntityKey, usize> =
        entities.iter().enumerate().map(|(i, k)| (k, i)).collect();
    let n = entities.len();
    let mut flow = vec![vec![0.0; n]; n];
    for (from, to, weight) in &kept_edges {
        flow[index[from]][index[to]] += weight;
    }

    let capacity: BTreeMap<EntityKey, u64> = entities
        .iter()
        .map(|e| (e.clone(), capacities.get(e).copied().unwrap_or(0)))
        .collect();

    Ok(FlowMatrix {
        entities,
        flow,
        capacity,
    })
}

/// Sending or receiving shares per country, normalized by capacity share.
///
/// A zero total flow is an error ("no mobility events in scope"); a country
/// with zero capacity but positive flow gets `normalized_share: None` and
/// should be surfaced as a warning by the caller.
pub fn normalized_shares(matrix: &FlowMatrix, direction: Direction) -> Result<Vec<ShareRow>> {
    let total_flow = matrix.total_flow();
    if total_flow == 0.0 {
        return Err(CoreError::Empty("no mobility events in scope".into()));
    }
    let total_capacity: u64 = matrix.capacity.values().sum();
    if total_capacity == 0 {
        return Err(CoreError::Empty(
            "total capacity is zero; shares are undefined".into(),
        ));
    }

    let rows = matrix
        .entities
        .iter()
        .enumerate()
        .map(|(i, entity)| {
            let capacity = matrix.capacity[entity];
            let capacity_share = capacity as f64 / total_capacity as f64;
            let observed = match direction {
                Direction::Sending => matrix.row_sum(i),
                Direction::Receiving => matrix.col_sum(i),
            };
            let observed_share = observed / total_flow;
            let normalized_share = if capacity_share > 0.0 {
                Some(observed_share / capacity_share)
            } else {
                None
            };
            ShareRow {
                country: entity.clone(),
                capacity,
                capacity_share,
                observed_share,
                normalized_share,
            }
        })
        .collect();
    Ok(rows)
}

/// Square matrix export: header row and column of country keys, cells to
/// four decimals.
pub fn flow_matrix_to_csv(matrix: &FlowMatrix) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["country".to_string()];
    header.extend(matrix.entities.iter().map(|e| e.as_str().to_string()));
    writer.write_record(&header)?;
    for (i, entity) in matrix.entities.iter().enumerate() {
        let mut row = vec![entity.as_str().to_string()];
        row.extend(matrix.flow[i].iter().map(|v| format!("{v:.4}")));
        writer.write_record(&row)?;
    }
    String::from_utf8(writer.into_inner().expect("vec writer cannot fail"))
        .map_err(|e| CoreError::format("flow matrix csv", e.to_string()))
}

/// Share table export; an undefined normalized share prints as `NA`.
pub fn shares_to_csv(rows: &[ShareRow]) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record([
        "country",
        "capacity",
        "capacity_share",
        "observed_share",
        "normalized_share",
    ])?;
    for row in rows {
        let normalized = row
            .normalized_share
            .map(|v| format!("{v:.6}"))
            .unwrap_or_else(|| "NA".to_string());
        writer.write_record([
            row.country.as_str(),
            &row.capacity.to_string(),
            &format!("{:.6}", row.capacity_share),
            &format!("{:.6}", row.observed_share),
            &normalized,
        ])?;
    }
    String::from_utf8(writer.into_inner().expect("vec writer cannot fail"))
        .map_err(|e| CoreError::format("shares csv", e.to_string()))
}

/// Heatmap-ready long format: one row per (country, direction).
pub fn shares_long_to_csv(sending: &[ShareRow], receiving: &[ShareRow]) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(["country", "direction", "normalized_share"])?;
    for (direction, rows) in [(Direction::Sending, sending), (Direction::Receiving, receiving)] {
        for row in rows {
            let normalized = row
                .normalized_share
                .map(|v| format!("{v:.6}"))
                .unwrap_or_else(|| "NA".to_string());
            writer.write_record([row.country.as_str(), direction.as_str(), &normalized])?;
        }
    }
    String::from_utf8(writer.into_inner().expect("vec writer cannot fail"))
        .map_err(|e| CoreError::format("shares csv", e.to_string()))
}
