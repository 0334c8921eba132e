//! Pipeline stage implementations. Every stage reads its inputs, writes its
//! artifacts plus a provenance record into the output directory, and returns
//! a one-line summary. Stages compose through files only, so `scimob all`
//! is byte-equivalent to running the stages one by one.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde_json::json;

use scimob_core::coaffil::{build_coaffiliation_graph, graph_summary, CountMode, GraphOptions};
use scimob_core::corpus::{
    build_author_histories, compute_field_year_baselines, baselines_to_csv,
    filter_eligible_researchers, read_corpus, AliasMap, AuthorHistory, PublicationRecord,
};
use scimob_core::flows::{
    build_flow_matrix, capacities_from_histories, flow_matrix_to_csv, normalized_shares,
    shares_long_to_csv, shares_to_csv, Direction, FlowOptions, ScopeMode,
};
use scimob_core::graphio::{
    edges_to_csv, graph_from_graphml, graph_to_graphml, graph_to_pajek, nodes_to_csv,
};
use scimob_core::graphmetrics::{centrality_table, centrality_to_csv, region_subgraph, EdgeMode, SortKey};
use scimob_core::impact::{indicators_by_mobility_class, indicators_to_csv};
use scimob_core::mobility::{
    classify_all, events_from_csv, events_to_csv, summarize_profiles, ClassifyOptions,
    MobilityEvent,
};
use scimob_core::synth::{generate_corpus, truth_events, truth_flows_to_csv, ScenarioConfig};
use scimob_core::{EntityKey, Level, Year};

use crate::failure::Failure;
use crate::provenance::write_run_record;

/// Canonical artifact names. Stages locate one another's outputs by these.
pub const CORPUS_FILE: &str = "corpus.jsonl";
pub const VALIDATION_FILE: &str = "validation.csv";
pub const BASELINES_FILE: &str = "baselines.csv";
pub const EVENTS_FILE: &str = "events.csv";
pub const PROFILES_FILE: &str = "profiles.csv";
pub const MOBILITY_SUMMARY_FILE: &str = "mobility_summary.csv";
pub const NETWORK_GRAPHML_FILE: &str = "network.graphml";
pub const NETWORK_NODES_FILE: &str = "network_nodes.csv";
pub const NETWORK_EDGES_FILE: &str = "network_edges.csv";
pub const NETWORK_PAJEK_FILE: &str = "network.net";
pub const NETWORK_SUMMARY_FILE: &str = "network_summary.csv";
pub const CENTRALITY_FILE: &str = "centrality.csv";
pub const FLOW_MATRIX_FILE: &str = "flow_matrix.csv";
pub const SHARES_SENDING_FILE: &str = "shares_sending.csv";
pub const SHARES_RECEIVING_FILE: &str = "shares_receiving.csv";
pub const SHARES_LONG_FILE: &str = "shares_long.csv";
pub const IMPACT_FILE: &str = "impact_by_class.csv";
pub const SYNTH_CORPUS_FILE: &str = "synth_corpus.jsonl";
pub const TRUTH_EVENTS_FILE: &str = "truth_events.csv";
pub const TRUTH_FLOWS_FILE: &str = "truth_flows.csv";

#[derive(Debug, Clone, Copy)]
pub struct Window {
    pub start: Year,
    pub end: Year,
}

impl Window {
    pub fn label(&self) -> String {
        format!("{}:{}", self.start, self.end)
    }
}

fn ensure_out_dir(out: &Path) -> Result<(), Failure> {
    fs::create_dir_all(out)
        .map_err(|e| Failure::data(format!("cannot create {}: {e}", out.display())))
}

fn write_artifact(out: &Path, name: &str, contents: &str) -> Result<(), Failure> {
    let path = out.join(name);
    fs::write(&path, contents)
        .map_err(|e| Failure::data(format!("cannot write {}: {e}", path.display())))
}

/// Opens a stage artifact, turning "file not found" into an actionable
/// pointer at the stage that produces it.
fn open_artifact(out: &Path, name: &str, produced_by: &str) -> Result<BufReader<File>, Failure> {
    let path = out.join(name);
    match File::open(&path) {
        Ok(file) => Ok(BufReader::new(file)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Err(Failure::data(format!(
            "missing {}: run `scimob {produced_by}` first",
            path.display()
        ))),
        Err(e) => Err(Failure::data(format!("cannot open {}: {e}", path.display()))),
    }
}

fn load_corpus(out: &Path) -> Result<Vec<PublicationRecord>, Failure> {
    let reader = open_artifact(out, CORPUS_FILE, "ingest")?;
    let parsed = read_corpus(reader)?;
    if parsed.stats.lines_rejected > 0 {
        return Err(Failure::data(format!(
            "{} is not a clean corpus ({} rejected lines); re-run `scimob ingest`",
            out.join(CORPUS_FILE).display(),
            parsed.stats.lines_rejected
        )));
    }
    Ok(parsed.records)
}

fn eligible_histories(
    records: &[PublicationRecord],
    window: Window,
) -> Result<BTreeMap<String, AuthorHistory>, Failure> {
    let histories = build_author_histories(records);
    Ok(filter_eligible_researchers(&histories, window.start, window.end)?)
}

fn load_events(out: &Path) -> Result<BTreeMap<String, Vec<MobilityEvent>>, Failure> {
    let reader = open_artifact(out, EVENTS_FILE, "classify")?;
    Ok(events_from_csv(reader)?)
}

fn records_to_jsonl(records: &[PublicationRecord]) -> String {
    let mut text = String::new();
    for record in records {
        text.push_str(&record.to_jsonl());
        text.push('\n');
    }
    text
}

// ---------------------------------------------------------------- ingest

pub struct IngestConfig {
    pub input: PathBuf,
    pub aliases: Option<PathBuf>,
    pub out: PathBuf,
}

pub fn run_ingest(config: &IngestConfig) -> Result<String, Failure> {
    ensure_out_dir(&config.out)?;
    let aliases = match &config.aliases {
        Some(path) => {
            let file = File::open(path)
                .map_err(|e| Failure::data(format!("cannot open {}: {e}", path.display())))?;
            AliasMap::from_csv(BufReader::new(file))?
        }
        None => AliasMap::empty(),
    };
    let input = File::open(&config.input)
        .map_err(|e| Failure::data(format!("cannot open {}: {e}", config.input.display())))?;
    let parsed = read_corpus(BufReader::new(input))?;
    let mut records = aliases.apply_all(parsed.records);
    // canonical order: the corpus artifact and everything derived from it
    // must not depend on how the input lines happened to be ordered
    records.sort_by(|a, b| a.pub_id.cmp(&b.pub_id));
    let baselines = compute_field_year_baselines(&records);

    write_artifact(&config.out, CORPUS_FILE, &records_to_jsonl(&records))?;
    write_artifact(&config.out, VALIDATION_FILE, &parsed.stats.to_csv())?;
    write_artifact(&config.out, BASELINES_FILE, &baselines_to_csv(&baselines))?;

    let mut inputs = vec![config.input.clone()];
    if let Some(aliases_path) = &config.aliases {
        inputs.push(aliases_path.clone());
    }
    write_run_record(
        &config.out,
        "ingest",
        json!({
            "input": config.input.display().to_string(),
            "aliases": config.aliases.as_ref().map(|p| p.display().to_string()),
            "alias_entries": aliases.len(),
        }),
        &inputs,
        &[
            CORPUS_FILE.to_string(),
            VALIDATION_FILE.to_string(),
            BASELINES_FILE.to_string(),
        ],
    )?;

    Ok(format!(
        "ingest: {} records kept, {} lines rejected -> {}",
        records.len(),
        parsed.stats.lines_rejected,
        config.out.join(CORPUS_FILE).display()
    ))
}

// -------------------------------------------------------------- classify

pub struct ClassifyConfig {
    pub out: PathBuf,
    pub window: Window,
    pub level: Level,
    pub multi_per_paper: bool,
}

pub fn run_classify(config: &ClassifyConfig) -> Result<String, Failure> {
    ensure_out_dir(&config.out)?;
    let records = load_corpus(&config.out)?;
    let eligible = eligible_histories(&records, config.window)?;
    let events = classify_all(
        &eligible,
        ClassifyOptions {
            level: config.level,
            multi_per_paper: config.multi_per_paper,
        },
    );
    let (profiles, counts) = summarize_profiles(&events);

    let mut profiles_csv =
        String::from("author_id,origin_entities,ever_mobile,ever_multi,returned,event_count\n");
    for profile in profiles.values() {
        let origin = profile
            .origin_entities
            .iter()
            .map(EntityKey::as_str)
            .collect::<Vec<_>>()
            .join(";");
        profiles_csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            profile.author_id,
            origin,
            profile.ever_mobile,
            profile.ever_multi,
            profile.returned,
            profile.events.len()
        ));
    }

    write_artifact(&config.out, EVENTS_FILE, &events_to_csv(&events)?)?;
    write_artifact(&config.out, PROFILES_FILE, &profiles_csv)?;
    write_artifact(&config.out, MOBILITY_SUMMARY_FILE, &counts.to_csv())?;

    write_run_record(
        &config.out,
        "classify",
        json!({
            "window": config.window.label(),
            "level": config.level,
            "multi_per_paper": config.multi_per_paper,
        }),
        &[config.out.join(CORPUS_FILE)],
        &[
            EVENTS_FILE.to_string(),
            PROFILES_FILE.to_string(),
            MOBILITY_SUMMARY_FILE.to_string(),
        ],
    )?;

    Ok(format!(
        "classify: {} researchers, {} events -> {}",
        profiles.len(),
        counts.total_events(),
        config.out.join(EVENTS_FILE).display()
    ))
}

// --------------------------------------------------------------- network

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Csv,
    Graphml,
    Pajek,
}

pub struct NetworkConfig {
    pub out: PathBuf,
    pub window: Window,
    pub level: Level,
    pub scope_country: Option<String>,
    pub threshold: u64,
    pub all_pairs: bool,
    pub count_mode: CountMode,
    pub format: ExportFormat,
}

pub fn run_network(config: &NetworkConfig) -> Result<String, Failure> {
    ensure_out_dir(&config.out)?;
    let records = load_corpus(&config.out)?;
    let eligible = eligible_histories(&records, config.window)?;
    let graph = build_coaffiliation_graph(
        &eligible,
        config.level,
        &GraphOptions {
            count_mode: config.count_mode,
            all_pairs: config.all_pairs,
            scope_country: config.scope_country.clone(),
            min_edge_weight: config.threshold,
        },
    );
    let summary = graph_summary(&graph);

    // the GraphML file is the canonical artifact consumed downstream;
    // csv/pajek are additional export formats
    write_artifact(&config.out, NETWORK_GRAPHML_FILE, &graph_to_graphml(&graph)?)?;
    let mut outputs = vec![
        NETWORK_GRAPHML_FILE.to_string(),
        NETWORK_SUMMARY_FILE.to_string(),
    ];
    match config.format {
        ExportFormat::Csv => {
            write_artifact(&config.out, NETWORK_NODES_FILE, &nodes_to_csv(&graph)?)?;
            write_artifact(&config.out, NETWORK_EDGES_FILE, &edges_to_csv(&graph)?)?;
            outputs.push(NETWORK_NODES_FILE.to_string());
            outputs.push(NETWORK_EDGES_FILE.to_string());
        }
        ExportFormat::Pajek => {
            write_artifact(&config.out, NETWORK_PAJEK_FILE, &graph_to_pajek(&graph))?;
            outputs.push(NETWORK_PAJEK_FILE.to_string());
        }
        ExportFormat::Graphml => {}
    }
    write_artifact(&config.out, NETWORK_SUMMARY_FILE, &summary.to_csv())?;

    write_run_record(
        &config.out,
        "network",
        json!({
            "window": config.window.label(),
            "level": config.level,
            "scope": config.scope_country,
            "threshold": config.threshold,
            "all_pairs": config.all_pairs,
            "count_mode": match config.count_mode {
                CountMode::Publications => "publications",
                CountMode::ActiveYears => "active-years",
            },
            "format": match config.format {
                ExportFormat::Csv => "csv",
                ExportFormat::Graphml => "graphml",
                ExportFormat::Pajek => "pajek",
            },
        }),
        &[config.out.join(CORPUS_FILE)],
        &outputs,
    )?;

    Ok(format!(
        "network: {} nodes, {} edges, {} researchers -> {}",
        summary.node_count,
        summary.edge_count,
        summary.researchers,
        config.out.join(NETWORK_GRAPHML_FILE).display()
    ))
}

// ------------------------------------------------------------- centrality

pub struct CentralityConfig {
    pub out: PathBuf,
    pub top_k: i64,
    pub sort: SortKey,
    pub weighted: bool,
    /// Optional region: recompute centralities on the induced subgraph.
    pub scope: Option<Vec<String>>,
}

pub fn run_centrality(config: &CentralityConfig) -> Result<String, Failure> {
    if config.top_k <= 0 {
        return Err(Failure::usage(format!(
            "top_k must be positive, got {}",
            config.top_k
        )));
    }
    ensure_out_dir(&config.out)?;
    let reader = open_artifact(&config.out, NETWORK_GRAPHML_FILE, "network")?;
    let graph = graph_from_graphml(reader)?;
    let graph = match &config.scope {
        Some(entities) => {
            let set: BTreeSet<EntityKey> =
                entities.iter().map(|e| EntityKey::from(e.as_str())).collect();
            region_subgraph(&graph, &set)?
        }
        None => graph,
    };
    let mode = if config.weighted {
        EdgeMode::InverseWeight
    } else {
        EdgeMode::Unweighted
    };
    let rows = centrality_table(&graph, config.top_k, config.sort, mode)?;
    write_artifact(&config.out, CENTRALITY_FILE, &centrality_to_csv(&rows))?;

    write_run_record(
        &config.out,
        "centrality",
        json!({
            "top_k": config.top_k,
            "sort": match config.sort {
                SortKey::Betweenness => "betweenness",
                SortKey::Closeness => "closeness",
            },
            "weighted": config.weighted,
            "scope": config.scope,
        }),
        &[config.out.join(NETWORK_GRAPHML_FILE)],
        &[CENTRALITY_FILE.to_string()],
    )?;

    let leader = rows
        .first()
        .map(|r| r.entity.as_str().to_string())
        .unwrap_or_else(|| "none".to_string());
    Ok(format!(
        "centrality: {} entities ranked (top: {leader}) -> {}",
        rows.len(),
        config.out.join(CENTRALITY_FILE).display()
    ))
}

// ----------------------------------------------------------------- flows

pub struct FlowsConfig {
    pub out: PathBuf,
    pub window: Window,
    pub scope: Option<Vec<String>>,
    pub scope_mode: ScopeMode,
    pub dedup_per_researcher: bool,
}

pub fn run_flows(config: &FlowsConfig) -> Result<String, Failure> {
    ensure_out_dir(&config.out)?;
    let events = load_events(&config.out)?;
    let non_country = events
        .values()
        .flatten()
        .flat_map(|e| e.current_entities.iter())
        .find(|key| key.as_str().contains('|'));
    if let Some(key) = non_country {
        return Err(Failure::usage(format!(
            "flow analysis runs at the country level but the event table contains {key}; \
             re-run `scimob classify --level country`"
        )));
    }

    let records = load_corpus(&config.out)?;
    let eligible = eligible_histories(&records, config.window)?;
    let capacities = capacities_from_histories(&eligible);

    let matrix = build_flow_matrix(
        &events,
        &capacities,
        &FlowOptions {
            scope: config
                .scope
                .as_ref()
                .map(|s| s.iter().map(|e| EntityKey::from(e.as_str())).collect()),
            scope_mode: config.scope_mode,
            dedup_per_researcher: config.dedup_per_researcher,
        },
    )?;
    let sending = normalized_shares(&matrix, Direction::Sending)?;
    let receiving = normalized_shares(&matrix, Direction::Receiving)?;

    write_artifact(&config.out, FLOW_MATRIX_FILE, &flow_matrix_to_csv(&matrix)?)?;
    write_artifact(&config.out, SHARES_SENDING_FILE, &shares_to_csv(&sending)?)?;
    write_artifact(&config.out, SHARES_RECEIVING_FILE, &shares_to_csv(&receiving)?)?;
    write_artifact(
        &config.out,
        SHARES_LONG_FILE,
        &shares_long_to_csv(&sending, &receiving)?,
    )?;

    write_run_record(
        &config.out,
        "flows",
        json!({
            "window": config.window.label(),
            "scope": config.scope,
            "scope_mode": match config.scope_mode {
                ScopeMode::Both => "both",
                ScopeMode::Either => "either",
            },
            "dedup_per_researcher": config.dedup_per_researcher,
        }),
        &[config.out.join(EVENTS_FILE), config.out.join(CORPUS_FILE)],
        &[
            FLOW_MATRIX_FILE.to_string(),
            SHARES_SENDING_FILE.to_string(),
            SHARES_RECEIVING_FILE.to_string(),
            SHARES_LONG_FILE.to_string(),
        ],
    )?;

    Ok(format!(
        "flows: {:.2} total weight across {} countries -> {}",
        matrix.total_flow(),
        matrix.entities.len(),
        config.out.join(FLOW_MATRIX_FILE).display()
    ))
}

// ---------------------------------------------------------------- impact

pub struct ImpactConfig {
    pub out: PathBuf,
}

pub fn run_impact(config: &ImpactConfig) -> Result<String, Failure> {
    ensure_out_dir(&config.out)?;
    let records = load_corpus(&config.out)?;
    let events = load_events(&config.out)?;
    // baselines are recomputed from the canonical corpus rather than parsed
    // back from baselines.csv, so no decimal rounding enters the scores
    let baselines = compute_field_year_baselines(&records);
    let strata = indicators_by_mobility_class(&records, &events, &baselines)?;
    write_artifact(&config.out, IMPACT_FILE, &indicators_to_csv(&strata))?;

    write_run_record(
        &config.out,
        "impact",
        json!({}),
        &[config.out.join(CORPUS_FILE), config.out.join(EVENTS_FILE)],
        &[IMPACT_FILE.to_string()],
    )?;

    Ok(format!(
        "impact: {} strata -> {}",
        strata.len(),
        config.out.join(IMPACT_FILE).display()
    ))
}

// ----------------------------------------------------------------- synth

pub struct SynthConfig {
    pub out: PathBuf,
    pub config_file: Option<PathBuf>,
    pub seed: Option<u64>,
    pub authors: Option<usize>,
    pub window: Option<Window>,
}

pub fn run_synth(config: &SynthConfig) -> Result<String, Failure> {
    ensure_out_dir(&config.out)?;
    let mut scenario = match &config.config_file {
        Some(path) => {
            let file = File::open(path)
                .map_err(|e| Failure::data(format!("cannot open {}: {e}", path.display())))?;
            serde_json::from_reader::<_, ScenarioConfig>(BufReader::new(file))
                .map_err(|e| Failure::data(format!("invalid scenario {}: {e}", path.display())))?
        }
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = config.seed {
        scenario.seed = seed;
    }
    if let Some(authors) = config.authors {
        scenario.n_authors = authors;
    }
    if let Some(window) = config.window {
        scenario.start_year = window.start;
        scenario.end_year = window.end;
    }

    let (records, truth) = generate_corpus(&scenario)?;
    write_artifact(&config.out, SYNTH_CORPUS_FILE, &records_to_jsonl(&records))?;
    write_artifact(
        &config.out,
        TRUTH_EVENTS_FILE,
        &events_to_csv(&truth_events(&truth))?,
    )?;
    write_artifact(&config.out, TRUTH_FLOWS_FILE, &truth_flows_to_csv(&truth))?;

    let inputs: Vec<PathBuf> = config.config_file.iter().cloned().collect();
    write_run_record(
        &config.out,
        "synth",
        serde_json::to_value(&scenario)
            .map_err(|e| Failure::data(format!("cannot serialize scenario: {e}")))?,
        &inputs,
        &[
            SYNTH_CORPUS_FILE.to_string(),
            TRUTH_EVENTS_FILE.to_string(),
            TRUTH_FLOWS_FILE.to_string(),
        ],
    )?;

    Ok(format!(
        "synth: {} authors, {} records (seed {}) -> {}",
        scenario.n_authors,
        records.len(),
        scenario.seed,
        config.out.join(SYNTH_CORPUS_FILE).display()
    ))
}

// ------------------------------------------------------------------- all

pub struct AllConfig {
    pub ingest: IngestConfig,
    pub classify: ClassifyConfig,
    pub network: NetworkConfig,
    pub centrality: CentralityConfig,
    pub flows: FlowsConfig,
    pub impact: ImpactConfig,
}

/// Runs the six analysis stages in dependency order; output bytes match
/// running each subcommand separately with the same flags.
pub fn run_all(config: &AllConfig) -> Result<Vec<String>, Failure> {
    Ok(vec![
        run_ingest(&config.ingest)?,
        run_classify(&config.classify)?,
        run_network(&config.network)?,
        run_centrality(&config.centrality)?,
        run_flows(&config.flows)?,
        run_impact(&config.impact)?,
    ])
}
