//! Corpus ingestion: publication records, author histories, eligibility
//! filtering, and field-year citation baselines.

mod alias;
mod baseline;
mod history;
mod parse;

pub use alias::{apply_alias_map, AliasMap};
pub use baseline::{baselines_to_csv, compute_field_year_baselines, BaselineMap, FieldYearBaseline};
pub use history::{build_author_histories, filter_eligible_researchers, AuthorHistory};
pub use parse::{parse_publication_line, read_corpus, ParsedCorpus};

use serde::{Deserialize, Serialize};

use crate::{EntityKey, Level, Year};

/// One address line of one author on one publication.
///
/// `country` is always canonical (trimmed, uppercased) and non-empty;
/// `organization` and `city` may be empty when the source record was
/// incomplete.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Affiliation {
    #[serde(rename = "org")]
    pub organization: String,
    pub city: String,
    pub country: String,
}

impl Affiliation {
    pub fn new(
        organization: impl Into<String>,
        city: impl Into<String>,
        country: impl Into<String>,
    ) -> Self {
        Affiliation {
            organization: organization.into(),
            city: city.into(),
            country: country.into(),
        }
    }

    /// Entity key of this affiliation at `level`, or `None` when the level's
    /// name component is empty. City and organization keys are prefixed with
    /// the country so homonyms across countries stay distinct.
    pub fn entity_key(&self, level: Level) -> Option<EntityKey> {
        match level {
            Level::Country => Some(EntityKey::new(self.country.clone())),
            Level::City => (!self.city.is_empty())
                .then(|| EntityKey::new(format!("{}|{}", self.country, self.city))),
            Level::Organization => (!self.organization.is_empty())
                .then(|| EntityKey::new(format!("{}|{}", self.country, self.organization))),
        }
    }
}

/// One author's appearance on one publication.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuthorEntry {
    pub author_id: String,
    #[serde(default)]
    pub affiliations: Vec<Affiliation>,
}

/// One publication, already validated and canonicalized.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublicationRecord {
    pub pub_id: String,
    pub year: Year,
    pub field: String,
    pub citations: u64,
    #[serde(rename = "authors")]
    pub author_entries: Vec<AuthorEntry>,
}

impl PublicationRecord {
    /// Serializes the record back to its one-line wire form. Parsing the
    /// result yields an identical record.
    pub fn to_jsonl(&self) -> String {
        serde_json::to_string(self).expect("record serialization cannot fail")
    }
}

/// Counters accumulated while reading a corpus, exported as the validation
/// report.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationStats {
    pub lines_total: u64,
    pub records_parsed: u64,
    pub lines_rejected: u64,
    pub duplicate_pub_ids: u64,
    pub author_entries_total: u64,
    pub author_entries_no_affiliation: u64,
    pub affiliations_dropped_no_country: u64,
    pub records_empty_field: u64,
}

impl ValidationStats {
    /// Delimited `metric,value` summary table.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("metric,value\n");
        for (k, v) in [
            ("lines_total", self.lines_total),
            ("records_parsed", self.records_parsed),
            ("lines_rejected", self.lines_rejected),
            ("duplicate_pub_ids", self.duplicate_pub_ids),
            ("author_entries_total", self.author_entries_total),
            (
                "author_entries_no_affiliation",
                self.author_entries_no_affiliation,
            ),
            (
                "affiliations_dropped_no_country",
                self.affiliations_dropped_no_country,
            ),
            ("records_empty_field", self.records_empty_field),
        ] {
            out.push_str(&format!("{k},{v}\n"));
        }
        out
    }
}
