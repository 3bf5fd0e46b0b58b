//! JSON query files.
//!
//! A query file is a JSON array of tagged objects:
//!
//! ```json
//! [
//!   {"kind": "prefix", "strings": ["+-", "+"]},
//!   {"kind": "threshold", "tau": 0.5},
//!   {"kind": "corr", "alpha": 0.5, "constraints_file": "v.strings"}
//! ]
//! ```
//!
//! A `corr` entry reads its constraint vectors from a file holding one `+`/`-`
//! string per line, resolved relative to the query file. An empty constraint
//! set needs an explicit `"n"`.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{BitString, CorrelatedVectorQuery, PrefixQuery, Query, ThresholdQuery};
use crate::error::{param, Result};
use crate::io::parse_strings;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum QuerySpec {
    Prefix {
        strings: Vec<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bound: Option<usize>,
    },
    Threshold {
        tau: f64,
    },
    Corr {
        alpha: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        constraints_file: Option<PathBuf>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tolerance: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n: Option<usize>,
    },
}

impl QuerySpec {
    /// Builds the query; relative constraint paths resolve against `base`.
    pub fn build(&self, base: &Path) -> Result<Query> {
        Ok(match self {
            QuerySpec::Prefix { strings, bound } => {
                let parsed = strings
                    .iter()
                    .map(|s| BitString::parse(s))
                    .collect::<Result<Vec<_>>>()?;
                Query::Prefix(PrefixQuery::new(parsed, *bound)?)
            }
            QuerySpec::Threshold { tau } => Query::Threshold(ThresholdQuery::new(*tau)?),
            QuerySpec::Corr {
                alpha,
                constraints_file,
                tolerance,
                n,
            } => {
                let constraints = match constraints_file {
                    Some(p) => {
                        let path = base.join(p);
                        let text = fs::read_to_string(&path)?;
                        parse_strings(&text, &path.display().to_string())?
                            .into_iter()
                            .map(|s| Arc::new(s.as_signs().clone()))
                            .collect()
                    }
                    None => Vec::new(),
                };
                let len = match (n, constraints.first()) {
                    (Some(n), _) => *n,
                    (None, Some(v)) => v.len(),
                    (None, None) => return param("corr query without constraints must state \"n\""),
                };
                let mut q = CorrelatedVectorQuery::new(constraints, *alpha, len)?;
                if let Some(t) = tolerance {
                    q = q.with_tolerance(*t)?;
                }
                Query::Corr(q)
            }
        })
    }
}

/// Parses a query file's contents; `base` anchors relative constraint paths.
pub fn parse_queries(text: &str, base: &Path) -> Result<Vec<Query>> {
    let specs: Vec<QuerySpec> = serde_json::from_str(text)?;
    specs.iter().map(|s| s.build(base)).collect()
}

pub fn load_queries(path: impl AsRef<Path>) -> Result<Vec<Query>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    parse_queries(&text, path.parent().unwrap_or(Path::new(".")))
}
