//! Grouping specification files for custom vocabularies and groupings.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use bevprompt_core::grouping::{ClassGrouping, HeadArity, Superclass, Vocabulary};
use serde::{Deserialize, Serialize};

use crate::errors::CliError;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuperclassJson {
    pub name: String,
    pub members: Vec<String>,
    /// "one_way" or "k_way".
    pub arity: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupingSpecJson {
    pub name: String,
    pub superclasses: Vec<SuperclassJson>,
}

pub fn read_grouping_spec(path: &Path) -> Result<GroupingSpecJson> {
    let raw = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&raw).with_context(|| format!("parsing grouping spec {}", path.display()))
}

/// Builds a grouping over the roadside vocabulary from a spec file.
pub fn grouping_from_spec(spec: &GroupingSpecJson) -> Result<ClassGrouping> {
    let vocab = Vocabulary::roadside();
    let mut superclasses = Vec::with_capacity(spec.superclasses.len());
    for sc in &spec.superclasses {
        let arity = match sc.arity.as_str() {
            "one_way" => HeadArity::OneWay,
            "k_way" => HeadArity::KWay,
            other => {
                return Err(CliError::schema(format!("unknown head arity {other:?}")).into());
            }
        };
        let members = sc
            .members
            .iter()
            .map(|m| {
                vocab.index_of(m).ok_or_else(|| {
                    anyhow::Error::from(CliError::schema(format!("unknown class {m:?}")))
                })
            })
            .collect::<Result<Vec<u32>>>()?;
        superclasses.push(Superclass {
            name: sc.name.clone(),
            members,
            arity,
        });
    }
    ClassGrouping::from_parts(spec.name.clone(), vocab, superclasses)
        .map_err(|e| CliError::schema(e.to_string()).into())
}

/// Resolves a grouping from either a built-in strategy name or a spec file
/// path ending in `.json`.
pub fn resolve_grouping(name_or_path: &str) -> Result<ClassGrouping> {
    if name_or_path.ends_with(".json") {
        let spec = read_grouping_spec(Path::new(name_or_path))?;
        grouping_from_spec(&spec)
    } else {
        let strategy = bevprompt_core::grouping::Strategy::parse(name_or_path)
            .map_err(crate::errors::from_core)?;
        Ok(bevprompt_core::grouping::builtin_grouping(strategy))
    }
}
