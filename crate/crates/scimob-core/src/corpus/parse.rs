use std::collections::HashSet;
use std::io::BufRead;

use serde::Deserialize;
use serde_json::Value;

use super::{Affiliation, AuthorEntry, PublicationRecord, ValidationStats};
use crate::{CoreError, Result, Year};

// Wire schema with everything optional so that missing fields can be
// reported as schema errors rather than opaque serde failures.
#[derive(Deserialize)]
struct RawRecord {
    pub_id: Option<String>,
    year: Option<Value>,
    field: Option<String>,
    citations: Option<Value>,
    authors: Option<Vec<RawAuthor>>,
}

#[derive(Deserialize)]
struct RawAuthor {
    author_id: Option<String>,
    #[serde(default)]
    affiliations: Vec<RawAffiliation>,
}

#[derive(Deserialize)]
struct RawAffiliation {
    #[serde(default)]
    org: String,
    #[serde(default)]
    city: String,
    #[serde(default)]
    country: String,
}

const YEAR_MIN: Year = 1000;
const YEAR_MAX: Year = 3000;

fn parse_err(line: usize, message: impl Into<String>) -> CoreError {
    CoreError::Parse {
        line,
        message: message.into(),
    }
}

fn schema_err(line: usize, message: impl Into<String>) -> CoreError {
    CoreError::Schema {
        line,
        message: message.into(),
    }
}

fn validation_err(line: usize, message: impl Into<String>) -> CoreError {
    CoreError::Validation {
        line,
        message: message.into(),
    }
}

fn int_field(value: &Value, name: &str, line: usize) -> Result<i64> {
    match value {
        Value::Number(n) => n
            .as_i64()
            .ok_or_else(|| parse_err(line, format!("field `{name}` is not an integer: {n}"))),
        Value::String(s) => s
            .trim()
            .parse::<i64>()
            .map_err(|_| parse_err(line, format!("field `{name}` is not an integer: {s:?}"))),
        other => Err(parse_err(
            line,
            format!("field `{name}` has unexpected type: {other}"),
        )),
    }
}

// The event and graph exports join entity names with `;` and build composite
// keys with `|`, so neither may appear inside a name.
fn check_name(s: &str, what: &str, line: usize) -> Result<()> {
    if s.contains(';') || s.contains('|') {
        return Err(validation_err(
            line,
            format!("{what} contains a reserved character (';' or '|'): {s:?}"),
        ));
    }
    Ok(())
}

/// Parses one line of the corpus input into a validated record.
///
/// Country names come out trimmed and uppercased. Affiliations with a blank
/// country are dropped (the caller's [`ValidationStats`] counts them via
/// [`read_corpus`]); organization and city names are trimmed and may be
/// empty.
pub fn parse_publication_line(line: &str, line_no: usize) -> Result<PublicationRecord> {
    let (record, _) = parse_line_with_counts(line, line_no)?;
    Ok(record)
}

fn parse_line_with_counts(line: &str, line_no: usize) -> Result<(PublicationRecord, u64)> {
    let raw: RawRecord = serde_json::from_str(line)
        .map_err(|e| parse_err(line_no, format!("malformed record: {e}")))?;

    let pub_id = raw
        .pub_id
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .ok_or_else(|| schema_err(line_no, "missing pub_id"))?;

    let year_value = raw
        .year
        .ok_or_else(|| schema_err(line_no, "missing year"))?;
    let year = int_field(&year_value, "year", line_no)?;
    let year = Year::try_from(year)
        .ok()
        .filter(|y| (YEAR_MIN..=YEAR_MAX).contains(y))
        .ok_or_else(|| validation_err(line_no, format!("implausible year {year}")))?;

    let citations_value = raw
        .citations
        .ok_or_else(|| schema_err(line_no, "missing citations"))?;
    let citations = int_field(&citations_value, "citations", line_no)?;
    if citations < 0 {
        return Err(validation_err(
            line_no,
            format!("negative citations {citations}"),
        ));
    }
    let citations = citations as u64;

    let field = raw.field.unwrap_or_default().trim().to_string();

    let raw_authors = raw
        .authors
        .ok_or_else(|| schema_err(line_no, "missing authors"))?;

    let mut author_entries = Vec::with_capacity(raw_authors.len());
    let mut dropped_no_country = 0u64;
    for author in raw_authors {
        let author_id = author
            .author_id
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .ok_or_else(|| schema_err(line_no, "author entry missing author_id"))?;

        let mut affiliations = Vec::with_capacity(author.affiliations.len());
        for aff in author.affiliations {
            let country = aff.country.trim().to_uppercase();
            if country.is_empty() {
                dropped_no_country += 1;
                continue;
            }
            let organization = aff.org.trim().to_string();
            let city = aff.city.trim().to_string();
            check_name(&country, "country", line_no)?;
            check_name(&city, "city", line_no)?;
            check_name(&organization, "organization", line_no)?;
            affiliations.push(Affiliation {
                organization,
                city,
                country,
            });
        }
        author_entries.push(AuthorEntry {
            author_id,
            affiliations,
        });
    }

    Ok((
        PublicationRecord {
            pub_id,
            year,
            field,
            citations,
            author_entries,
        },
        dropped_no_country,
    ))
}

/// A fully ingested corpus: valid records plus the validation bookkeeping.
#[derive(Debug)]
pub struct ParsedCorpus {
    pub records: Vec<PublicationRecord>,
    pub stats: ValidationStats,
    /// One message per rejected line, in input order.
    pub rejections: Vec<String>,
}

/// Reads a line-delimited corpus, keeping every valid record and counting
/// rejected lines instead of aborting. Duplicate `pub_id`s reject the later
/// line.
pub fn read_corpus<R: BufRead>(reader: R) -> Result<ParsedCorpus> {
    let mut records = Vec::new();
    let mut stats = ValidationStats::default();
    let mut rejections = Vec::new();
    let mut seen_ids: HashSet<String> = HashSet::new();

    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        stats.lines_total += 1;
        match parse_line_with_counts(&line, line_no) {
            Ok((record, dropped)) => {
                if !seen_ids.insert(record.pub_id.clone()) {
                    stats.lines_rejected += 1;
                    stats.duplicate_pub_ids += 1;
                    rejections.push(format!(
                        "validation error at line {line_no}: duplicate pub_id {:?}",
                        record.pub_id
                    ));
                    continue;
                }
                stats.records_parsed += 1;
                stats.affiliations_dropped_no_country += dropped;
                if record.field.is_empty() {
                    stats.records_empty_field += 1;
                }
                for entry in &record.author_entries {
                    stats.author_entries_total += 1;
                    if entry.affiliations.is_empty() {
                        stats.author_entries_no_affiliation += 1;
                    }
                }
                records.push(record);
            }
            Err(err) => {
                stats.lines_rejected += 1;
                rejections.push(err.to_string());
            }
        }
    }

    Ok(ParsedCorpus {
        records,
        stats,
        rejections,
    })
}
