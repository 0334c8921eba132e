use std::collections::BTreeMap;
use std::io::Read;

use crate::{CoreError, Result};

use super::PublicationRecord;

/// Canonical-name substitution map for organization and city names, loaded
/// from a two-column `raw,canonical` file.
///
/// Chains (`A -> B`, `B -> C`) are flattened to their terminal name at load
/// time, which keeps application idempotent; cycles are a configuration
/// error.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AliasMap {
    map: BTreeMap<String, String>,
}

impl AliasMap {
    pub fn empty() -> Self {
        AliasMap::default()
    }

    pub fn from_pairs<I, S>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, S)>,
        S: Into<String>,
    {
        let mut map = BTreeMap::new();
        for (raw, canonical) in pairs {
            let raw = raw.into().trim().to_string();
            let canonical = canonical.into().trim().to_string();
            if raw.is_empty() || canonical.is_empty() {
                return Err(CoreError::Config(
                    "alias map entries must have non-empty raw and canonical names".into(),
                ));
            }
            map.insert(raw, canonical);
        }
        Self::flatten(map)
    }

    /// Reads the `raw,canonical` CSV format (header required).
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut csv_reader = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let headers = csv_reader.headers()?.clone();
        if headers.len() < 2 || headers.get(0) != Some("raw") || headers.get(1) != Some("canonical")
        {
            return Err(CoreError::Config(format!(
                "alias map must start with header `raw,canonical`, got {headers:?}"
            )));
        }
        let mut pairs = Vec::new();
        for row in csv_reader.records() {
            let row = row?;
            let raw = row.get(0).unwrap_or("").to_string();
            let canonical = row.get(1).unwrap_or("").to_string();
            pairs.push((raw, canonical));
        }
        Self::from_pairs(pairs)
    }

    fn flatten(map: BTreeMap<String, String>) -> Result<Self> {
        let mut flat = BTreeMap::new();
        for start in map.keys() {
            let mut seen = vec![start.as_str()];
            let mut current = start.as_str();
            while let Some(next) = map.get(current) {
                if seen.contains(&next.as_str()) {
                    return Err(CoreError::Config(format!(
                        "cyclic alias chain involving {start:?}"
                    )));
                }
                seen.push(next);
                current = next;
            }
            flat.insert(start.clone(), current.to_string());
        }
        Ok(AliasMap { map: flat })
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn resolve<'a>(&'a self, name: &'a str) -> &'a str {
        self.map.get(name).map(String::as_str).unwrap_or(name)
    }
}

/// Replaces organization and city names by their canonical forms; unmapped
/// names pass through unchanged. Countries are not aliased.
pub fn apply_alias_map(mut record: PublicationRecord, aliases: &AliasMap) -> PublicationRecord {
    if aliases.is_empty() {
        return record;
    }
    for entry in &mut record.author_entries {
        for aff in &mut entry.affiliations {
            let org = aliases.resolve(&aff.organization);
            if org != aff.organization {
                aff.organization = org.to_string();
            }
            let city = aliases.resolve(&aff.city);
            if city != aff.city {
                aff.city = city.to_string();
            }
        }
    }
    record
}

impl AliasMap {
    /// Convenience wrapper over [`apply_alias_map`] for whole corpora.
    pub fn apply_all(&self, records: Vec<PublicationRecord>) -> Vec<PublicationRecord> {
        records
            .into_iter()
            .map(|r| apply_alias_map(r, self))
            .collect()
    }
}
