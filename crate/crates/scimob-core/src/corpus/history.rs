use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{Affiliation, PublicationRecord};
use crate::{CoreError, EntityKey, Level, Result, Year};

/// Per-researcher publication history: the year-by-year affiliation
/// timeline plus the occurrence bookkeeping needed downstream.
///
/// `first_year`/`last_year` are the first and last *active* years (years
/// with at least one affiliated publication). For authors whose records
/// never carry an affiliation the timeline is empty and the bounds fall
/// back to their publication years.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthorHistory {
    pub author_id: String,
    pub timeline: BTreeMap<Year, BTreeSet<Affiliation>>,
    pub first_year: Year,
    pub last_year: Year,
    pub pub_count: u32,
    /// Publications listing each entity at least once, per level. A year
    /// with three papers at the same place counts three.
    pub entity_pub_counts: BTreeMap<Level, BTreeMap<EntityKey, u32>>,
    /// Years in which some single publication listed more than one entity
    /// at the given level (drives the per-paper multi-affiliation mode).
    pub multi_within_paper: BTreeMap<Year, BTreeSet<Level>>,
}

impl AuthorHistory {
    /// Entity set for one year at `level`, derived from the timeline.
    pub fn entities_in_year(&self, year: Year, level: Level) -> BTreeSet<EntityKey> {
        self.timeline
            .get(&year)
            .map(|affs| affs.iter().filter_map(|a| a.entity_key(level)).collect())
            .unwrap_or_default()
    }

    /// Years with a non-empty entity set at `level`, ascending.
    pub fn active_years(&self, level: Level) -> Vec<Year> {
        self.timeline
            .iter()
            .filter(|(_, affs)| affs.iter().any(|a| a.entity_key(level).is_some()))
            .map(|(y, _)| *y)
            .collect()
    }

    /// All distinct entities over the whole timeline at `level`.
    pub fn all_entities(&self, level: Level) -> BTreeSet<EntityKey> {
        self.timeline
            .values()
            .flat_map(|affs| affs.iter().filter_map(|a| a.entity_key(level)))
            .collect()
    }

    /// First timeline year in which `entity` appears.
    pub fn first_use_year(&self, entity: &EntityKey, level: Level) -> Option<Year> {
        self.timeline
            .iter()
            .find(|(_, affs)| affs.iter().any(|a| a.entity_key(level).as_ref() == Some(entity)))
            .map(|(y, _)| *y)
    }

    /// Number of timeline years in which `entity` appears (the year-based
    /// occurrence-counting mode).
    pub fn year_count(&self, entity: &EntityKey, level: Level) -> u32 {
        self.timeline
            .values()
            .filter(|affs| affs.iter().any(|a| a.entity_key(level).as_ref() == Some(entity)))
            .count() as u32
    }
}

#[derive(Default)]
struct HistoryBuilder {
    timeline: BTreeMap<Year, BTreeSet<Affiliation>>,
    pub_ids: HashSet<String>,
    pub_years: BTreeSet<Year>,
    entity_pub_counts: BTreeMap<Level, BTreeMap<EntityKey, u32>>,
    multi_within_paper: BTreeMap<Year, BTreeSet<Level>>,
}

/// Folds a record set into per-author histories. Each author's affiliation
/// set for a year is the union over all their publications in that year;
/// `pub_count` counts distinct `pub_id`s. Input order does not matter.
pub fn build_author_histories(
    records: &[PublicationRecord],
) -> BTreeMap<String, AuthorHistory> {
    let mut builders: HashMap<&str, HistoryBuilder> = HashMap::new();

    for record in records {
        // The same author may appear twice on one record; union their
        // affiliations so the record still counts once.
        let mut per_author: BTreeMap<&str, Vec<&Affiliation>> = BTreeMap::new();
        for entry in &record.author_entries {
            per_author
                .entry(entry.author_id.as_str())
                .or_default()
                .extend(entry.affiliations.iter());
        }

        for (author_id, affiliations) in per_author {
            let builder = builders.entry(author_id).or_default();
            if !builder.pub_ids.insert(record.pub_id.clone()) {
                continue;
            }
            builder.pub_years.insert(record.year);

            if !affiliations.is_empty() {
                builder
                    .timeline
                    .entry(record.year)
                    .or_default()
                    .extend(affiliations.iter().map(|a| (*a).clone()));
            }

            for level in Level::ALL {
                let entities: BTreeSet<EntityKey> = affiliations
                    .iter()
                    .filter_map(|a| a.entity_key(level))
                    .collect();
                if entities.len() > 1 {
                    builder
                        .multi_within_paper
                        .entry(record.year)
                        .or_default()
                        .insert(level);
                }
                for key in entities {
                    *builder
                        .entity_pub_counts
                        .entry(level)
                        .or_default()
                        .entry(key)
                        .or_insert(0) += 1;
                }
            }
        }
    }

    builders
        .into_iter()
        .map(|(author_id, b)| {
            let (first_year, last_year) = match (
                b.timeline.keys().next().copied(),
                b.timeline.keys().next_back().copied(),
            ) {
                (Some(first), Some(last)) => (first, last),
                _ => (
                    *b.pub_years.iter().next().expect("author has >=1 pub"),
                    *b.pub_years.iter().next_back().expect("author has >=1 pub"),
                ),
            };
            let history = AuthorHistory {
                author_id: author_id.to_string(),
                timeline: b.timeline,
                first_year,
                last_year,
                pub_count: b.pub_ids.len() as u32,
                entity_pub_counts: b.entity_pub_counts,
                multi_within_paper: b.multi_within_paper,
            };
            (author_id.to_string(), history)
        })
        .collect()
}

/// Keeps exactly the researchers with at least two publications whose first
/// active year falls inside `[window_start, window_end]`.
pub fn filter_eligible_researchers(
    histories: &BTreeMap<String, AuthorHistory>,
    window_start: Year,
    window_end: Year,
) -> Result<BTreeMap<String, AuthorHistory>> {
    if window_start > window_end {
        return Err(CoreError::Config(format!(
            "eligibility window start {window_start} is after end {window_end}"
        )));
    }
    Ok(histories
        .iter()
        .filter(|(_, h)| {
            h.pub_count >= 2 && h.first_year >= window_start && h.first_year <= window_end
        })
        .map(|(id, h)| (id.clone(), h.clone()))
        .collect())
}
