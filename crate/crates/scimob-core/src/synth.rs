//! Deterministic synthetic corpora with planted mobility patterns.
//!
//! The generator decides each author's labels first — origin, yearly
//! moves, returns, simultaneous affiliations — and then synthesizes a
//! publication timeline that realizes exactly those decisions under the
//! classifier's rules. The planted decisions are returned as ground truth,
//! so downstream tests exercise the pipeline against an oracle rather than
//! against the generator's luck.
//!
//! Randomness comes from one portable seeded generator; every author owns
//! a private stream derived from (seed, author index), so generation can
//! run on any number of threads and still produce identical corpora.

use std::collections::{BTreeMap, BTreeSet};

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::Poisson;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Affiliation, AuthorEntry, PublicationRecord};
use crate::flows::FlowMatrix;
use crate::mobility::{MobilityEvent, MobilityLabel};
use crate::{CoreError, EntityKey, Result, Year};

/// One country and its relative capacity weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountrySpec {
    pub name: String,
    pub weight: f64,
}

/// Partition of the country list into clusters joined only through one
/// bridge country: authors never hold affiliations outside their home
/// block plus the bridge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockConfig {
    pub blocks: Vec<Vec<String>>,
    pub bridge: String,
}

/// Mobility-rate boost for a set of over-sending countries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OversendConfig {
    pub countries: Vec<String>,
    /// Multiplies the mobility rate while the author is affiliated to an
    /// over-sending country (capped at probability 1).
    pub factor: f64,
}

/// Field-year citation model: per-field base means, with a multiplier on
/// papers published in any year whose label is not NON_MOBILE.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CitationModel {
    pub field_means: BTreeMap<String, f64>,
    pub mobile_multiplier: f64,
}

/// Full generator scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub n_authors: usize,
    pub start_year: Year,
    pub end_year: Year,
    pub countries: Vec<CountrySpec>,
    /// Chance per non-first active year of moving to a new entity.
    pub mobility_rate: f64,
    /// Chance an author holds two simultaneous affiliations throughout.
    pub multi_rate: f64,
    /// Chance per fully-away active year of moving back to the origin.
    pub return_rate: f64,
    /// Chance each calendar year in the window is an active year.
    pub active_year_rate: f64,
    pub max_papers_per_year: u32,
    pub blocks: Option<BlockConfig>,
    pub oversend: Option<OversendConfig>,
    pub citation: CitationModel,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let names = [
            ("ALPHA", 30.0),
            ("BRAVO", 20.0),
            ("CHARLIE", 15.0),
            ("DELTA", 10.0),
            ("ECHO", 8.0),
            ("FOXTROT", 6.0),
            ("GOLF", 5.0),
            ("HOTEL", 3.0),
            ("INDIA", 2.0),
            ("JULIET", 1.0),
        ];
        ScenarioConfig {
            seed: 42,
            n_authors: 500,
            start_year: 2003,
            end_year: 2012,
            countries: names
                .into_iter()
                .map(|(name, weight)| CountrySpec {
                    name: name.to_string(),
                    weight,
                })
                .collect(),
            mobility_rate: 0.15,
            multi_rate: 0.10,
            return_rate: 0.25,
            active_year_rate: 0.75,
            max_papers_per_year: 3,
            blocks: None,
            oversend: None,
            citation: CitationModel {
                field_means: [("FIELD_A".to_string(), 4.0), ("FIELD_B".to_string(), 2.5)]
                    .into(),
                mobile_multiplier: 1.0,
            },
        }
    }
}

/// The planted decisions for one author.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthorTruth {
    pub author_id: String,
    pub origin: BTreeSet<EntityKey>,
    /// Planted entity set per active year.
    pub sets: BTreeMap<Year, BTreeSet<EntityKey>>,
    pub labels: BTreeMap<Year, MobilityLabel>,
    pub returns: BTreeMap<Year, bool>,
}

/// Everything the generator planted, used as the pipeline oracle.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub authors: BTreeMap<String, AuthorTruth>,
    /// Fractional flow weight planted per directed country pair.
    pub flows: BTreeMap<(EntityKey, EntityKey), f64>,
    pub label_totals: BTreeMap<MobilityLabel, u64>,
}

fn config_err(message: impl Into<String>) -> CoreError {
    CoreError::Config(message.into())
}

fn check_probability(name: &str, value: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&value) || value.is_nan() {
        return Err(config_err(format!("{name} must be in [0, 1], got {value}")));
    }
    Ok(())
}

fn validate(config: &ScenarioConfig) -> Result<Vec<String>> {
    if config.n_authors == 0 {
        return Err(config_err("n_authors must be at least 1"));
    }
    if config.start_year > config.end_year {
        return Err(config_err(format!(
            "year window {}..{} is empty",
            config.start_year, config.end_year
        )));
    }
    check_probability("mobility_rate", config.mobility_rate)?;
    check_probability("multi_rate", config.multi_rate)?;
    check_probability("return_rate", config.return_rate)?;
    check_probability("active_year_rate", config.active_year_rate)?;
    if config.active_year_rate == 0.0 {
        return Err(config_err("active_year_rate must be positive"));
    }
    if config.max_papers_per_year == 0 {
        return Err(config_err("max_papers_per_year must be at least 1"));
    }
    if config.countries.is_empty() {
        return Err(config_err("at least one country is required"));
    }
    let mut names = Vec::with_capacity(config.countries.len());
    for country in &config.countries {
        let name = country.name.trim().to_uppercase();
        if name.is_empty() {
            return Err(config_err("country names must not be blank"));
        }
        if name.contains(';') || name.contains('|') {
            return Err(config_err(format!(
                "country name {name:?} contains a reserved character"
            )));
        }
        if !(country.weight.is_finite() && country.weight > 0.0) {
            return Err(config_err(format!(
                "capacity weight for {name} must be positive"
            )));
        }
        if names.contains(&name) {
            return Err(config_err(format!("duplicate country {name}")));
        }
        names.push(name);
    }
    let needs_two = config.multi_rate > 0.0 || config.mobility_rate > 0.0;
    if needs_two && names.len() < 2 {
        return Err(config_err(
            "mobility or multiple affiliation requires at least two countries",
        ));
    }
    if let Some(blocks) = &config.blocks {
        let bridge = blocks.bridge.trim().to_uppercase();
        if !names.contains(&bridge) {
            return Err(config_err(format!("bridge {bridge} is not a listed country")));
        }
        if blocks.blocks.len() < 2 {
            return Err(config_err("a block layout needs at least two blocks"));
        }
        let mut seen = BTreeSet::new();
        for block in &blocks.blocks {
            if block.is_empty() {
                return Err(config_err("blocks must not be empty"));
            }
            for member in block {
                let member = member.trim().to_uppercase();
                if member == bridge {
                    return Err(config_err("the bridge country cannot sit inside a block"));
                }
                if !names.contains(&member) {
                    return Err(config_err(format!("block country {member} is not listed")));
                }
                if !seen.insert(member.clone()) {
                    return Err(config_err(format!("country {member} appears in two blocks")));
                }
            }
        }
    }
    if let Some(oversend) = &config.oversend {
        if !(oversend.factor.is_finite() && oversend.factor > 0.0) {
            return Err(config_err("oversend factor must be positive"));
        }
        for country in &oversend.countries {
            if !names.contains(&country.trim().to_uppercase()) {
                return Err(config_err(format!(
                    "oversend country {country} is not listed"
                )));
            }
        }
    }
    if config.citation.field_means.is_empty() {
        return Err(config_err("at least one field is required"));
    }
    for (field, mean) in &config.citation.field_means {
        if field.trim().is_empty() {
            return Err(config_err("field names must not be blank"));
        }
        if !(mean.is_finite() && *mean >= 0.0) {
            return Err(config_err(format!("citation mean for {field} must be ≥ 0")));
        }
    }
    if !(config.citation.mobile_multiplier.is_finite() && config.citation.mobile_multiplier > 0.0)
    {
        return Err(config_err("mobile citation multiplier must be positive"));
    }
    Ok(names)
}

/// Country universe one author may ever be affiliated with.
struct Universe {
    countries: Vec<String>,
}

struct Scenario<'c> {
    config: &'c ScenarioConfig,
    names: Vec<String>,
    weights: WeightedIndex<f64>,
    /// country name → block index (bridge maps to none)
    block_of: BTreeMap<String, usize>,
    bridge: Option<String>,
    oversend: BTreeSet<String>,
    fields: Vec<String>,
}

impl<'c> Scenario<'c> {
    fn new(config: &'c ScenarioConfig) -> Result<Scenario<'c>> {
        let names = validate(config)?;
        let weights = WeightedIndex::new(config.countries.iter().map(|c| c.weight))
            .map_err(|e| config_err(format!("invalid capacity weights: {e}")))?;
        let mut block_of = BTreeMap::new();
        let mut bridge = None;
        if let Some(blocks) = &config.blocks {
            bridge = Some(blocks.bridge.trim().to_uppercase());
            for (index, block) in blocks.blocks.iter().enumerate() {
                for member in block {
                    block_of.insert(member.trim().to_uppercase(), index);
                }
            }
        }
        let oversend = config
            .oversend
            .iter()
            .flat_map(|o| o.countries.iter().map(|c| c.trim().to_uppercase()))
            .collect();
        let fields = config.citation.field_means.keys().cloned().collect();
        Ok(Scenario {
            config,
            names,
            weights,
            block_of,
            bridge,
            oversend,
            fields,
        })
    }

    fn universe(&self, origin: &str, rng: &mut ChaCha20Rng) -> Universe {
        let Some(bridge) = &self.bridge else {
            return Universe {
                countries: self.names.clone(),
            };
        };
        let block_index = match self.block_of.get(origin) {
            Some(index) => *index,
            // bridge-origin authors adopt one block for their career
            None => rng.gen_range(0..self.config.blocks.as_ref().unwrap().blocks.len()),
        };
        let mut countries: Vec<String> = self
            .block_of
            .iter()
            .filter(|(_, index)| **index == block_index)
            .map(|(name, _)| name.clone())
            .collect();
        countries.push(bridge.clone());
        countries.sort();
        Universe { countries }
    }

    fn mobility_probability(&self, current: &BTreeSet<EntityKey>) -> f64 {
        let boosted = self
            .config
            .oversend
            .as_ref()
            .filter(|_| current.iter().any(|c| self.oversend.contains(c.as_str())))
            .map(|o| o.factor)
            .unwrap_or(1.0);
        (self.config.mobility_rate * boosted).min(1.0)
    }
}

struct AuthorOutput {
    truth: AuthorTruth,
    papers: Vec<PublicationRecord>,
    flows: Vec<((EntityKey, EntityKey), f64)>,
}

fn pick<'a>(items: &'a [String], rng: &mut ChaCha20Rng) -> &'a str {
    &items[rng.gen_range(0..items.len())]
}

fn generate_author(scenario: &Scenario, index: usize) -> AuthorOutput {
    let config = scenario.config;
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    rng.set_stream(index as u64 + 1);
    let author_id = format!("A{index:05}");

    let is_multi = rng.gen_bool(config.multi_rate);

    let mut active: Vec<Year> = (config.start_year..=config.end_year)
        .filter(|_| rng.gen_bool(config.active_year_rate))
        .collect();
    if active.len() < 2 {
        active = if config.start_year == config.end_year {
            vec![config.start_year]
        } else {
            vec![config.start_year, config.start_year + 1]
        };
    }

    let origin_primary = scenario.names[scenario.weights.sample(&mut rng)].clone();
    let universe = scenario.universe(&origin_primary, &mut rng);
    let mut origin: BTreeSet<EntityKey> = [EntityKey::from(origin_primary.clone())].into();
    if is_multi {
        let others: Vec<String> = universe
            .countries
            .iter()
            .filter(|c| **c != origin_primary)
            .cloned()
            .collect();
        origin.insert(EntityKey::from(pick(&others, &mut rng)));
    }

    let mut truth = AuthorTruth {
        author_id: author_id.clone(),
        origin: origin.clone(),
        sets: BTreeMap::new(),
        labels: BTreeMap::new(),
        returns: BTreeMap::new(),
    };
    let mut flows = Vec::new();
    let mut current = origin.clone();

    for (step, &year) in active.iter().enumerate() {
        if step == 0 {
            truth.labels.insert(
                year,
                if current.len() > 1 {
                    MobilityLabel::MultiAffiliation
                } else {
                    MobilityLabel::NonMobile
                },
            );
            truth.returns.insert(year, false);
            truth.sets.insert(year, current.clone());
            continue;
        }

        let away = current.intersection(&origin).next().is_none();
        let mut next = current.clone();
        let mut returned = false;

        if away && rng.gen_bool(config.return_rate) {
            next = origin.clone();
            returned = true;
        } else if rng.gen_bool(scenario.mobility_probability(&current)) {
            // move one leg to a fresh country; when fully away, the origin
            // stays off-limits so returning remains the return coin's job
            let excluded: BTreeSet<&str> = current
                .iter()
                .map(EntityKey::as_str)
                .chain(if away {
                    origin.iter().map(EntityKey::as_str).collect::<Vec<_>>()
                } else {
                    Vec::new()
                })
                .collect();
            let candidates: Vec<String> = universe
                .countries
                .iter()
                .filter(|c| !excluded.contains(c.as_str()))
                .cloned()
                .collect();
            if !candidates.is_empty() {
                let destination = EntityKey::from(pick(&candidates, &mut rng));
                if is_multi {
                    let legs: Vec<EntityKey> = current.iter().cloned().collect();
                    let kept = legs[rng.gen_range(0..legs.len())].clone();
                    next = [kept, destination].into();
                } else {
                    next = [destination].into();
                }
            }
        }

        let new_entities: BTreeSet<EntityKey> = next.difference(&current).cloned().collect();
        if !new_entities.is_empty() {
            let weight = 1.0 / (current.len() * new_entities.len()) as f64;
            for from in &current {
                for to in &new_entities {
                    flows.push(((from.clone(), to.clone()), weight));
                }
            }
        }
        let label = match (!new_entities.is_empty(), next.len() > 1) {
            (false, false) => MobilityLabel::NonMobile,
            (true, false) => MobilityLabel::Mobile,
            (false, true) => MobilityLabel::MultiAffiliation,
            (true, true) => MobilityLabel::MobileAndMulti,
        };
        truth.labels.insert(year, label);
        truth.returns.insert(year, returned);
        truth.sets.insert(year, next.clone());
        current = next;
    }

    // timeline → papers realizing the planted sets
    let mut papers = Vec::new();
    for (step, &year) in active.iter().enumerate() {
        let count = if active.len() == 1 {
            2 + rng.gen_range(0..config.max_papers_per_year.max(2) - 1)
        } else {
            1 + rng.gen_range(0..config.max_papers_per_year)
        };
        let year_label = truth.labels[&year];
        for k in 0..count {
            let field = pick(&scenario.fields, &mut rng).to_string();
            let affiliations: Vec<Affiliation> = truth.sets[&year]
                .iter()
                .map(|country| {
                    let variant = rng.gen_range(1..=2u32);
                    Affiliation {
                        organization: format!("{country} UNIV {variant}"),
                        city: format!("{country} CITY {variant}"),
                        country: country.as_str().to_string(),
                    }
                })
                .collect();
            let mut mean = scenario.config.citation.field_means[&field];
            if year_label != MobilityLabel::NonMobile {
                mean *= scenario.config.citation.mobile_multiplier;
            }
            let citations = if mean > 0.0 {
                let poisson = Poisson::new(mean).expect("validated positive mean");
                poisson.sample(&mut rng) as u64
            } else {
                0
            };
            papers.push(PublicationRecord {
                pub_id: format!("{author_id}-{year}-{k:02}"),
                year,
                field,
                citations,
                author_entries: vec![AuthorEntry {
                    author_id: author_id.clone(),
                    affiliations,
                }],
            });
        }
        let _ = step;
    }

    AuthorOutput {
        truth,
        papers,
        flows,
    }
}

/// Generates a corpus and its ground truth. Identical configs produce
/// byte-identical corpora regardless of thread count.
pub fn generate_corpus(config: &ScenarioConfig) -> Result<(Vec<PublicationRecord>, GroundTruth)> {
    let scenario = Scenario::new(config)?;
    let outputs: Vec<AuthorOutput> = (0..config.n_authors)
        .into_par_iter()
        .map(|index| generate_author(&scenario, index))
        .collect();

    let mut records = Vec::new();
    let mut truth = GroundTruth::default();
    for output in outputs {
        for (pair, weight) in &output.flows {
            *truth.flows.entry(pair.clone()).or_insert(0.0) += weight;
        }
        for label in output.truth.labels.values() {
            *truth.label_totals.entry(*label).or_insert(0) += 1;
        }
        truth
            .authors
            .insert(output.truth.author_id.clone(), output.truth);
        records.extend(output.papers);
    }

    // keep every field-year cell citable so self-normalized scores stay
    // well-defined: bump one paper of an all-zero cell to a single citation
    let mut by_cell: BTreeMap<(String, Year), Vec<usize>> = BTreeMap::new();
    for (i, record) in records.iter().enumerate() {
        by_cell
            .entry((record.field.clone(), record.year))
            .or_default()
            .push(i);
    }
    for indices in by_cell.values() {
        if indices.iter().all(|&i| records[i].citations == 0) {
            records[indices[0]].citations = 1;
        }
    }

    Ok((records, truth))
}

/// The planted decisions replayed as classifier-style events (first-year
/// prior and new sets empty), for sidecar export and direct comparison.
pub fn truth_events(truth: &GroundTruth) -> BTreeMap<String, Vec<MobilityEvent>> {
    let mut result = BTreeMap::new();
    for (author_id, author) in &truth.authors {
        let mut events = Vec::with_capacity(author.sets.len());
        let mut prior: Option<&BTreeSet<EntityKey>> = None;
        for (year, current) in &author.sets {
            let new_entities = match prior {
                Some(p) => current.difference(p).cloned().collect(),
                None => BTreeSet::new(),
            };
            events.push(MobilityEvent {
                author_id: author_id.clone(),
                year: *year,
                label: author.labels[year],
                prior_entities: prior.cloned().unwrap_or_default(),
                current_entities: current.clone(),
                new_entities,
                is_return: author.returns[year],
            });
            prior = Some(current);
        }
        result.insert(author_id.clone(), events);
    }
    result
}

/// Planted flow totals as CSV (from, to, weight to six decimals).
pub fn truth_flows_to_csv(truth: &GroundTruth) -> String {
    let mut out = String::from("from,to,weight\n");
    for ((from, to), weight) in &truth.flows {
        out.push_str(&format!("{from},{to},{weight:.6}\n"));
    }
    out
}

/// Comparison of pipeline outputs against planted truth.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub authors_checked: usize,
    pub events_checked: usize,
    pub label_mismatches: Vec<String>,
    pub return_mismatches: Vec<String>,
    pub flow_mismatches: Vec<String>,
}

impl VerifyReport {
    pub fn total_mismatches(&self) -> usize {
        self.label_mismatches.len() + self.return_mismatches.len() + self.flow_mismatches.len()
    }

    pub fn is_clean(&self) -> bool {
        self.total_mismatches() == 0
    }

    pub fn summary(&self) -> String {
        format!(
            "checked {} authors / {} events: {} label, {} return, {} flow mismatches",
            self.authors_checked,
            self.events_checked,
            self.label_mismatches.len(),
            self.return_mismatches.len(),
            self.flow_mismatches.len()
        )
    }
}

/// Exact comparison of classified events and an unscoped flow matrix
/// against the planted truth.
pub fn verify_against_truth(
    events_by_author: &BTreeMap<String, Vec<MobilityEvent>>,
    matrix: Option<&FlowMatrix>,
    truth: &GroundTruth,
) -> VerifyReport {
    let mut report = VerifyReport::default();
    let empty: Vec<MobilityEvent> = Vec::new();

    for (author_id, author) in &truth.authors {
        report.authors_checked += 1;
        let events = events_by_author.get(author_id).unwrap_or(&empty);
        let by_year: BTreeMap<Year, &MobilityEvent> =
            events.iter().map(|e| (e.year, e)).collect();
        for (year, expected_label) in &author.labels {
            report.events_checked += 1;
            match by_year.get(year) {
                None => report.label_mismatches.push(format!(
                    "{author_id}/{year}: expected {expected_label}, no event produced"
                )),
                Some(event) => {
                    if event.label != *expected_label {
                        report.label_mismatches.push(format!(
                            "{author_id}/{year}: expected {expected_label}, got {}",
                            event.label
                        ));
                    }
                    let expected_return = author.returns[year];
                    if event.is_return != expected_return {
                        report.return_mismatches.push(format!(
                            "{author_id}/{year}: expected is_return={expected_return}, got {}",
                            event.is_return
                        ));
                    }
                }
            }
        }
        for event in events {
            if !author.labels.contains_key(&event.year) {
                report
                    .label_mismatches
                    .push(format!("{author_id}/{}: unexpected extra event", event.year));
            }
        }
    }

    if let Some(matrix) = matrix {
        let mut pairs: BTreeSet<(EntityKey, EntityKey)> = truth.flows.keys().cloned().collect();
        for (i, from) in matrix.entities.iter().enumerate() {
            for (j, to) in matrix.entities.iter().enumerate() {
                if matrix.flow[i][j] > 0.0 {
                    pairs.insert((from.clone(), to.clone()));
                }
            }
        }
        for (from, to) in pairs {
            let expected = truth.flows.get(&(from.clone(), to.clone())).copied().unwrap_or(0.0);
            let got = matrix.cell(&from, &to);
            if (expected - got).abs() > 1e-9 {
                report.flow_mismatches.push(format!(
                    "{from}→{to}: expected {expected:.6}, got {got:.6}"
                ));
            }
        }
    }

    report
}
