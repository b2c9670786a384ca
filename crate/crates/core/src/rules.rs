//! Keyword categories and the substring matcher every scanner uses.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Lock,
    Debug,
    Reset,
    SecurityRegister,
    Wdata,
    ControlPrune,
}

impl Category {
    pub const ALL: [Category; 6] = [
        Category::Lock,
        Category::Debug,
        Category::Reset,
        Category::SecurityRegister,
        Category::Wdata,
        Category::ControlPrune,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Lock => "lock",
            Category::Debug => "debug",
            Category::Reset => "reset",
            Category::SecurityRegister => "security_register",
            Category::Wdata => "wdata",
            Category::ControlPrune => "control_prune",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = RulebookError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Category::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| RulebookError::UnknownCategory(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct KeywordCategory {
    #[serde(rename = "match")]
    pub match_list: Vec<String>,
    #[serde(rename = "exclude")]
    pub exclude_list: Vec<String>,
}

impl KeywordCategory {
    pub fn new(matches: &[&str], excludes: &[&str]) -> Self {
        KeywordCategory {
            match_list: matches.iter().map(|s| s.to_string()).collect(),
            exclude_list: excludes.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// The first match entry contained in `name`, unless an exclude entry is
    /// also contained. `name` must already be lowercase.
    fn hit_lower(&self, name: &str) -> Option<&str> {
        if name.is_empty() || self.exclude_list.iter().any(|e| name.contains(e.as_str())) {
            return None;
        }
        self.match_list
            .iter()
            .find(|m| name.contains(m.as_str()))
            .map(String::as_str)
    }
}

#[derive(Debug, Error)]
pub enum RulebookError {
    #[error("cannot read rule file {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{origin}:{line}:{column}: {message}")]
    Parse {
        origin: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown keyword category `{0}`")]
    UnknownCategory(String),
    #[error("{origin}: category `{category}` has an invalid entry {entry:?} (empty or contains whitespace)")]
    InvalidEntry {
        origin: String,
        category: Category,
        entry: String,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CategoryFile {
    #[serde(rename = "match")]
    match_list: Option<Vec<String>>,
    #[serde(rename = "exclude")]
    exclude_list: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rulebook {
    categories: BTreeMap<Category, KeywordCategory>,
    provenance: String,
}

impl Default for Rulebook {
    fn default() -> Self {
        Rulebook::defaults()
    }
}

impl Rulebook {
    pub fn defaults() -> Self {
        let categories = Category::ALL.into_iter().map(|c| (c, default_category(c))).collect();
        Rulebook {
            categories,
            provenance: "defaults".to_string(),
        }
    }

    /// Loads `path`, or the defaults when no path is given.
    pub fn load(path: Option<&Path>) -> Result<Self, RulebookError> {
        let Some(path) = path else {
            return Ok(Rulebook::defaults());
        };
        let text = std::fs::read_to_string(path).map_err(|source| RulebookError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Rulebook::from_json(&text, &path.display().to_string())
    }

    /// Parses a rule file. Categories absent from the file keep their
    /// defaults; within a category, an absent list keeps its default too.
    pub fn from_json(text: &str, origin: &str) -> Result<Self, RulebookError> {
        let parse_err = |e: serde_json::Error| RulebookError::Parse {
            origin: origin.to_string(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        };
        let raw: BTreeMap<String, CategoryFile> = serde_json::from_str(text).map_err(parse_err)?;
        let mut book = Rulebook::defaults();
        book.provenance = origin.to_string();
        for (name, cat) in raw {
            let category: Category = name.parse()?;
            let entry = book.categories.get_mut(&category).expect("all categories present");
            if let Some(list) = cat.match_list {
                entry.match_list = normalize(list, category, origin)?;
            }
            if let Some(list) = cat.exclude_list {
                entry.exclude_list = normalize(list, category, origin)?;
            }
        }
        Ok(book)
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn category(&self, c: Category) -> &KeywordCategory {
        &self.categories[&c]
    }

    /// Replaces one category; entries are lowercased.
    pub fn set(&mut self, c: Category, mut cat: KeywordCategory) {
        for e in cat.match_list.iter_mut().chain(cat.exclude_list.iter_mut()) {
            *e = e.to_lowercase();
        }
        self.categories.insert(c, cat);
    }

    /// True iff the lowercased name contains a match entry and no exclude
    /// entry.
    pub fn matches(&self, name: &str, c: Category) -> bool {
        self.matched_keyword(name, c).is_some()
    }

    /// The match entry that fired for `name`, if any.
    pub fn matched_keyword(&self, name: &str, c: Category) -> Option<&str> {
        self.categories[&c].hit_lower(&name.to_lowercase())
    }

    pub fn to_json(&self) -> String {
        let map: BTreeMap<&str, &KeywordCategory> = self.categories.iter().map(|(k, v)| (k.as_str(), v)).collect();
        serde_json::to_string_pretty(&map).expect("rulebook serializes")
    }
}

fn normalize(list: Vec<String>, category: Category, origin: &str) -> Result<Vec<String>, RulebookError> {
    list.into_iter()
        .map(|e| {
            if e.is_empty() || e.chars().any(char::is_whitespace) {
                Err(RulebookError::InvalidEntry {
                    origin: origin.to_string(),
                    category,
                    entry: e,
                })
            } else {
                Ok(e.to_lowercase())
            }
        })
        .collect()
}

fn default_category(c: Category) -> KeywordCategory {
    match c {
        Category::Lock | Category::SecurityRegister => KeywordCategory::new(&["lock", "prot"], &["clock"]),
        Category::Debug => KeywordCategory::new(&["debug", "dbg"], &[]),
        Category::Reset => KeywordCategory::new(&["rst", "reset"], &[]),
        Category::Wdata => KeywordCategory::new(&["wdata"], &[]),
        Category::ControlPrune => KeywordCategory::new(&["clk", "clock", "rst", "reset"], &[]),
    }
}
