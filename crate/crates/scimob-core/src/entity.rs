use std::fmt;

use serde::{Deserialize, Serialize};

/// Aggregation level at which affiliations are keyed.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    #[default]
    Country,
    City,
    Organization,
}

impl Level {
    pub const ALL: [Level; 3] = [Level::Country, Level::City, Level::Organization];

    pub fn as_str(&self) -> &'static str {
        match self {
            Level::Country => "country",
            Level::City => "city",
            Level::Organization => "organization",
        }
    }

    /// Parses a level name; accepts `org` as shorthand for `organization`.
    pub fn parse(s: &str) -> Option<Level> {
        match s.trim().to_ascii_lowercase().as_str() {
            "country" => Some(Level::Country),
            "city" => Some(Level::City),
            "org" | "organization" => Some(Level::Organization),
            _ => None,
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Canonical key of one entity (country, city, or organization) in a graph
/// or event stream.
///
/// Country-level keys are the bare country name. City and organization keys
/// are prefixed with their country (`"SPAIN|BARCELONA"`) so that homonyms in
/// different countries never collide.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntityKey(pub String);

impl EntityKey {
    pub fn new(key: impl Into<String>) -> Self {
        EntityKey(key.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// The country component of the key (the whole key at country level).
    pub fn country(&self) -> &str {
        match self.0.find('|') {
            Some(idx) => &self.0[..idx],
            None => &self.0,
        }
    }
}

impl fmt::Display for EntityKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for EntityKey {
    fn from(s: &str) -> Self {
        EntityKey(s.to_string())
    }
}

impl From<String> for EntityKey {
    fn from(s: String) -> Self {
        EntityKey(s)
    }
}
