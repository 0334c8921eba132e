//! `scimob` — researcher-mobility indicators from bibliographic records.
//!
//! The pipeline is staged: `ingest` canonicalizes a JSONL corpus, `classify`
//! derives yearly mobility events, `network`/`centrality` build and rank the
//! co-affiliation graph, `flows` accumulates origin→destination moves, and
//! `impact` computes citation indicators per mobility class. `synth` makes
//! deterministic test corpora with planted ground truth, and `all` runs the
//! whole analysis in one call. Stages communicate through files in the
//! output directory, and each writes a `run_<stage>.json` provenance record.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error.

mod failure;
mod provenance;
mod stages;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use scimob_core::coaffil::CountMode;
use scimob_core::flows::ScopeMode;
use scimob_core::graphmetrics::SortKey;
use scimob_core::Level;

use failure::Failure;
use stages::{
    run_all, run_centrality, run_classify, run_flows, run_impact, run_ingest, run_network,
    run_synth, AllConfig, CentralityConfig, ClassifyConfig, ExportFormat, FlowsConfig,
    ImpactConfig, IngestConfig, NetworkConfig, SynthConfig, Window,
};

fn parse_window(value: &str) -> Result<Window, String> {
    let (start, end) = value
        .split_once(':')
        .ok_or_else(|| format!("window must be START:END (e.g. 2003:2015), got {value:?}"))?;
    let start = start
        .trim()
        .parse()
        .map_err(|_| format!("window start {start:?} is not a year"))?;
    let end = end
        .trim()
        .parse()
        .map_err(|_| format!("window end {end:?} is not a year"))?;
    if start > end {
        return Err(format!("window {value:?} is empty (start after end)"));
    }
    Ok(Window { start, end })
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LevelArg {
    Country,
    City,
    Org,
}

impl From<LevelArg> for Level {
    fn from(arg: LevelArg) -> Level {
        match arg {
            LevelArg::Country => Level::Country,
            LevelArg::City => Level::City,
            LevelArg::Org => Level::Organization,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Graphml,
    Pajek,
}

impl From<FormatArg> for ExportFormat {
    fn from(arg: FormatArg) -> ExportFormat {
        match arg {
            FormatArg::Csv => ExportFormat::Csv,
            FormatArg::Graphml => ExportFormat::Graphml,
            FormatArg::Pajek => ExportFormat::Pajek,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CountModeArg {
    Publications,
    ActiveYears,
}

impl From<CountModeArg> for CountMode {
    fn from(arg: CountModeArg) -> CountMode {
        match arg {
            CountModeArg::Publications => CountMode::Publications,
            CountModeArg::ActiveYears => CountMode::ActiveYears,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SortArg {
    Betweenness,
    Closeness,
}

impl From<SortArg> for SortKey {
    fn from(arg: SortArg) -> SortKey {
        match arg {
            SortArg::Betweenness => SortKey::Betweenness,
            SortArg::Closeness => SortKey::Closeness,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ScopeModeArg {
    Both,
    Either,
}

impl From<ScopeModeArg> for ScopeMode {
    fn from(arg: ScopeModeArg) -> ScopeMode {
        match arg {
            ScopeModeArg::Both => ScopeMode::Both,
            ScopeModeArg::Either => ScopeMode::Either,
        }
    }
}

/// Expands a `--scope` value: the name of an existing file is read as one
/// country per line, anything else is a comma-separated country list.
/// Names are canonicalized to trimmed uppercase to match the corpus.
fn resolve_scope(value: &str) -> Result<Vec<String>, Failure> {
    let path = PathBuf::from(value);
    let raw: Vec<String> = if path.is_file() {
        fs::read_to_string(&path)
            .map_err(|e| Failure::data(format!("cannot read {}: {e}", path.display())))?
            .lines()
            .map(str::to_string)
            .collect()
    } else {
        value.split(',').map(str::to_string).collect()
    };
    let countries: Vec<String> = raw
        .iter()
        .map(|s| s.trim().to_uppercase())
        .filter(|s| !s.is_empty())
        .collect();
    if countries.is_empty() {
        return Err(Failure::usage(format!("scope {value:?} names no countries")));
    }
    Ok(countries)
}

#[derive(Debug, Args)]
struct OutArg {
    /// Output directory for stage artifacts
    #[arg(long, env = "SCIMOB_OUT", default_value = "out")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct WindowArg {
    /// Eligibility window: researchers whose first active year falls inside
    #[arg(long, value_parser = parse_window, default_value = "2003:2015")]
    window: Window,
}

#[derive(Debug, Parser)]
#[command(
    name = "scimob",
    version,
    about = "Researcher-mobility indicators from disambiguated bibliographic records"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate, canonicalize, and summarize a publication corpus
    Ingest {
        /// Publication records, one JSON object per line
        #[arg(long)]
        input: PathBuf,
        /// Optional `raw,canonical` CSV renaming organizations and cities
        #[arg(long)]
        aliases: Option<PathBuf>,
        #[command(flatten)]
        out: OutArg,
    },
    /// Classify each researcher's yearly mobility events
    Classify {
        #[command(flatten)]
        out: OutArg,
        #[command(flatten)]
        window: WindowArg,
        /// Aggregation level for affiliation comparison
        #[arg(long, value_enum, default_value_t = LevelArg::Country)]
        level: LevelArg,
        /// Judge multiple affiliation within single papers instead of
        /// within year unions
        #[arg(long)]
        multi_per_paper: bool,
    },
    /// Build the co-affiliation network over eligible researchers
    Network {
        #[command(flatten)]
        out: OutArg,
        #[command(flatten)]
        window: WindowArg,
        #[arg(long, value_enum, default_value_t = LevelArg::Country)]
        level: LevelArg,
        /// Restrict to one country's national map (city or org level)
        #[arg(long)]
        scope: Option<String>,
        /// Drop edges linking fewer researchers than this
        #[arg(long, default_value_t = 1)]
        threshold: u64,
        /// Link all pairs of a researcher's entities, not just the top two
        #[arg(long)]
        all_pairs: bool,
        /// What affiliation occurrences count
        #[arg(long, value_enum, default_value_t = CountModeArg::Publications)]
        count_mode: CountModeArg,
        /// Additional export format next to the canonical GraphML artifact
        #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
        format: FormatArg,
    },
    /// Rank network entities by closeness and betweenness centrality
    Centrality {
        #[command(flatten)]
        out: OutArg,
        /// Number of rows in the ranked table
        #[arg(long, default_value_t = 20)]
        top_k: i64,
        #[arg(long, value_enum, default_value_t = SortArg::Betweenness)]
        sort: SortArg,
        /// Use inverse-weight edge lengths instead of hop counts
        #[arg(long)]
        weighted: bool,
        /// Recompute on a regional subgraph: comma-separated entities or a
        /// file with one entity per line
        #[arg(long)]
        scope: Option<String>,
    },
    /// Accumulate origin→destination flows and capacity-normalized shares
    Flows {
        #[command(flatten)]
        out: OutArg,
        #[command(flatten)]
        window: WindowArg,
        /// Restrict to these countries: comma-separated or a file with one
        /// country per line
        #[arg(long)]
        scope: Option<String>,
        /// Whether both endpoints or either endpoint must be in scope
        #[arg(long, value_enum, default_value_t = ScopeModeArg::Both)]
        scope_mode: ScopeModeArg,
        /// Count only each researcher's first move
        #[arg(long)]
        dedup_per_researcher: bool,
    },
    /// Citation indicators (MNCS, top-10% share) per mobility class
    Impact {
        #[command(flatten)]
        out: OutArg,
    },
    /// Generate a deterministic synthetic corpus with planted ground truth
    Synth {
        #[command(flatten)]
        out: OutArg,
        /// Scenario description (JSON); defaults cover a 10-country world
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override the scenario seed
        #[arg(long)]
        seed: Option<u64>,
        /// Override the scenario author count
        #[arg(long)]
        authors: Option<usize>,
        /// Override the scenario year window
        #[arg(long, value_parser = parse_window)]
        window: Option<Window>,
    },
    /// Run ingest, classify, network, centrality, flows, and impact
    All {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        aliases: Option<PathBuf>,
        #[command(flatten)]
        out: OutArg,
        #[command(flatten)]
        window: WindowArg,
        #[arg(long, value_enum, default_value_t = LevelArg::Country)]
        level: LevelArg,
        #[arg(long, default_value_t = 1)]
        threshold: u64,
        #[arg(long, default_value_t = 20)]
        top_k: i64,
        #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
        format: FormatArg,
        #[arg(long)]
        all_pairs: bool,
        #[arg(long, value_enum, default_value_t = CountModeArg::Publications)]
        count_mode: CountModeArg,
        #[arg(long)]
        multi_per_paper: bool,
        #[arg(long)]
        weighted: bool,
        #[arg(long)]
        dedup_per_researcher: bool,
    },
}

fn dispatch(cli: Cli) -> Result<Vec<String>, Failure> {
    match cli.command {
        Command::Ingest {
            input,
            aliases,
            out,
        } => Ok(vec![run_ingest(&IngestConfig {
            input,
            aliases,
            out: out.out,
        })?]),
        Command::Classify {
            out,
            window,
            level,
            multi_per_paper,
        } => Ok(vec![run_classify(&ClassifyConfig {
            out: out.out,
            window: window.window,
            level: level.into(),
            multi_per_paper,
        })?]),
        Command::Network {
            out,
            window,
            level,
            scope,
            threshold,
            all_pairs,
            count_mode,
            format,
        } => {
            let scope_country = match scope {
                Some(value) => {
                    let countries = resolve_scope(&value)?;
                    if countries.len() != 1 {
                        return Err(Failure::usage(format!(
                            "network scope takes exactly one country, got {}",
                            countries.len()
                        )));
                    }
                    Some(countries.into_iter().next().unwrap())
                }
                None => None,
            };
            Ok(vec![run_network(&NetworkConfig {
                out: out.out,
                window: window.window,
                level: level.into(),
                scope_country,
                threshold,
                all_pairs,
                count_mode: count_mode.into(),
                format: format.into(),
            })?])
        }
        Command::Centrality {
            out,
            top_k,
            sort,
            weighted,
            scope,
        } => {
            let scope = scope.map(|value| resolve_scope(&value)).transpose()?;
            Ok(vec![run_centrality(&CentralityConfig {
                out: out.out,
                top_k,
                sort: sort.into(),
                weighted,
                scope,
            })?])
        }
        Command::Flows {
            out,
            window,
            scope,
            scope_mode,
            dedup_per_researcher,
        } => {
            let scope = scope.map(|value| resolve_scope(&value)).transpose()?;
            Ok(vec![run_flows(&FlowsConfig {
                out: out.out,
                window: window.window,
                scope,
                scope_mode: scope_mode.into(),
                dedup_per_researcher,
            })?])
        }
        Command::Impact { out } => Ok(vec![run_impact(&ImpactConfig { out: out.out })?]),
        Command::Synth {
            out,
            config,
            seed,
            authors,
            window,
        } => Ok(vec![run_synth(&SynthConfig {
            out: out.out,
            config_file: config,
            seed,
            authors,
            window,
        })?]),
        Command::All {
            input,
            aliases,
            out,
            window,
            level,
            threshold,
            top_k,
            format,
            all_pairs,
            count_mode,
            multi_per_paper,
            weighted,
            dedup_per_researcher,
        } => {
            let out = out.out;
            let window = window.window;
            let level: Level = level.into();
            run_all(&AllConfig {
                ingest: IngestConfig {
                    input,
                    aliases,
                    out: out.clone(),
                },
                classify: ClassifyConfig {
                    out: out.clone(),
                    window,
                    level,
                    multi_per_paper,
                },
                network: NetworkConfig {
                    out: out.clone(),
                    window,
                    level,
                    scope_country: None,
                    threshold,
                    all_pairs,
                    count_mode: count_mode.into(),
                    format: format.into(),
                },
                centrality: CentralityConfig {
                    out: out.clone(),
                    top_k,
                    sort: SortKey::Betweenness,
                    weighted,
                    scope: None,
                },
                flows: FlowsConfig {
                    out: out.clone(),
                    window,
                    scope: None,
                    scope_mode: ScopeMode::Both,
                    dedup_per_researcher,
                },
                impact: ImpactConfig { out },
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help and version requests are successes, everything else is
            // a usage error (exit 1)
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(summaries) => {
            for line in summaries {
                println!("{line}");
            }
            ExitCode::SUCCESS
        }
        Err(failure) => {
            eprintln!("error: {failure}");
            ExitCode::from(failure.exit_code() as u8)
        }
    }
}
