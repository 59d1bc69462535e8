//! Fine-class vocabulary, superclass grouping strategies and head routing.
//!
//! Three built-in strategies over the nine-class roadside vocabulary:
//!
//! * `appearance`  - {truck, bus}, {car, van}, the four cyclist types, and
//!   pedestrian: four heads.
//! * `functionality` - {car, van, truck, bus} -> vehicle, the four cyclist
//!   types -> cyclist, pedestrian: three heads. This matches the evaluation
//!   superclasses.
//! * `entirety` - every fine class -> a single "object" head.
//!
//! Custom vocabularies and groupings can be built with
//! [`ClassGrouping::from_parts`].

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use alloc::{format, vec};

use crate::error::{Error, Result};

/// Ordered fine-class vocabulary; label indices index into it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    names: Vec<String>,
}

/// The nine roadside fine classes, in canonical order.
pub const FINE_CLASSES: [&str; 9] = [
    "truck",
    "bus",
    "car",
    "van",
    "bicyclist",
    "tricyclist",
    "motorcyclist",
    "barrowlist",
    "pedestrian",
];

impl Vocabulary {
    pub fn new(names: Vec<String>) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::Config {
                message: "empty vocabulary".to_string(),
            });
        }
        for (i, a) in names.iter().enumerate() {
            if names[..i].contains(a) {
                return Err(Error::Config {
                    message: format!("duplicate class name {a:?}"),
                });
            }
        }
        Ok(Self { names })
    }

    /// The standard roadside vocabulary.
    pub fn roadside() -> Self {
        Self {
            names: FINE_CLASSES.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Option<u32> {
        self.names.iter().position(|n| n == name).map(|i| i as u32)
    }

    pub fn name(&self, label: u32) -> Result<&str> {
        self.names
            .get(label as usize)
            .map(String::as_str)
            .ok_or(Error::UnknownLabel {
                label,
                num_classes: self.names.len(),
            })
    }
}

/// Whether a head classifies within its superclass (K-way over the fine
/// members) or only detects the superclass itself (1-way).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HeadArity {
    OneWay,
    KWay,
}

/// One superclass: name, fine members (as vocabulary indices) and head arity.
#[derive(Clone, Debug, PartialEq)]
pub struct Superclass {
    pub name: String,
    pub members: Vec<u32>,
    pub arity: HeadArity,
}

/// A total map from fine labels to (superclass, head index).
#[derive(Clone, Debug, PartialEq)]
pub struct ClassGrouping {
    name: String,
    vocab: Vocabulary,
    superclasses: Vec<Superclass>,
    fine_to_head: Vec<u32>,
}

impl ClassGrouping {
    /// Validates totality and disjointness of the member sets.
    pub fn from_parts(
        name: impl Into<String>,
        vocab: Vocabulary,
        superclasses: Vec<Superclass>,
    ) -> Result<Self> {
        let mut fine_to_head = vec![u32::MAX; vocab.len()];
        for (head, sc) in superclasses.iter().enumerate() {
            if sc.members.is_empty() {
                return Err(Error::Config {
                    message: format!("superclass {:?} has no members", sc.name),
                });
            }
            for &m in &sc.members {
                let slot = fine_to_head.get_mut(m as usize).ok_or(Error::UnknownLabel {
                    label: m,
                    num_classes: vocab.len(),
                })?;
                if *slot != u32::MAX {
                    return Err(Error::Config {
                        message: format!(
                            "fine class {:?} assigned to more than one superclass",
                            vocab.name(m)?
                        ),
                    });
                }
                *slot = head as u32;
            }
        }
        if let Some(orphan) = fine_to_head.iter().position(|&h| h == u32::MAX) {
            return Err(Error::Config {
                message: format!(
                    "fine class {:?} not covered by any superclass",
                    vocab.name(orphan as u32)?
                ),
            });
        }
        Ok(Self {
            name: name.into(),
            vocab,
            superclasses,
            fine_to_head,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn superclasses(&self) -> &[Superclass] {
        &self.superclasses
    }

    pub fn head_count(&self) -> usize {
        self.superclasses.len()
    }

    /// Deterministic lookup: fine label -> (superclass, head index).
    pub fn route(&self, fine_label: u32) -> Result<(&Superclass, u32)> {
        let head = *self
            .fine_to_head
            .get(fine_label as usize)
            .ok_or(Error::UnknownLabel {
                label: fine_label,
                num_classes: self.vocab.len(),
            })?;
        Ok((&self.superclasses[head as usize], head))
    }

    /// Superclass name for a fine label.
    pub fn superclass_name(&self, fine_label: u32) -> Result<&str> {
        Ok(self.route(fine_label)?.0.name.as_str())
    }
}

/// Built-in strategy selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    Appearance,
    Functionality,
    Entirety,
}

impl Strategy {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "appearance" => Ok(Self::Appearance),
            "functionality" => Ok(Self::Functionality),
            "entirety" => Ok(Self::Entirety),
            other => Err(Error::UnknownName {
                kind: "grouping strategy",
                name: other.to_string(),
            }),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Appearance => "appearance",
            Self::Functionality => "functionality",
            Self::Entirety => "entirety",
        }
    }
}

fn superclass(vocab: &Vocabulary, name: &str, members: &[&str], arity: HeadArity) -> Superclass {
    Superclass {
        name: name.to_string(),
        members: members
            .iter()
            .map(|m| vocab.index_of(m).expect("built-in member name"))
            .collect(),
        arity,
    }
}

/// The published grouping tables over the roadside vocabulary.
pub fn builtin_grouping(strategy: Strategy) -> ClassGrouping {
    let vocab = Vocabulary::roadside();
    let cyclists = ["bicyclist", "tricyclist", "motorcyclist", "barrowlist"];
    let superclasses = match strategy {
        Strategy::Appearance => vec![
            superclass(&vocab, "big_vehicle", &["truck", "bus"], HeadArity::KWay),
            superclass(&vocab, "small_vehicle", &["car", "van"], HeadArity::KWay),
            superclass(&vocab, "cyclist", &cyclists, HeadArity::KWay),
            superclass(&vocab, "pedestrian", &["pedestrian"], HeadArity::KWay),
        ],
        Strategy::Functionality => vec![
            superclass(
                &vocab,
                "vehicle",
                &["car", "van", "truck", "bus"],
                HeadArity::OneWay,
            ),
            superclass(&vocab, "cyclist", &cyclists, HeadArity::OneWay),
            superclass(&vocab, "pedestrian", &["pedestrian"], HeadArity::OneWay),
        ],
        Strategy::Entirety => vec![superclass(
            &vocab,
            "object",
            &FINE_CLASSES,
            HeadArity::OneWay,
        )],
    };
    ClassGrouping::from_parts(strategy.as_str(), vocab, superclasses)
        .expect("built-in groupings are total and disjoint")
}

/// Per-superclass label agreement of matched (detection, ground truth) fine
/// label pairs: the fraction whose detection superclass equals the ground
/// truth superclass, keyed by the ground truth superclass.
pub fn evaluate_grouping_consistency(
    grouping: &ClassGrouping,
    matched_pairs: &[(u32, u32)],
) -> Result<Vec<(String, f64)>> {
    let mut counts: Vec<(usize, usize)> = vec![(0, 0); grouping.head_count()];
    for &(det_label, gt_label) in matched_pairs {
        let (_, det_head) = grouping.route(det_label)?;
        let (_, gt_head) = grouping.route(gt_label)?;
        let slot = &mut counts[gt_head as usize];
        slot.1 += 1;
        if det_head == gt_head {
            slot.0 += 1;
        }
    }
    Ok(grouping
        .superclasses
        .iter()
        .zip(counts)
        .filter(|(_, (_, total))| *total > 0)
        .map(|(sc, (agree, total))| (sc.name.clone(), agree as f64 / total as f64))
        .collect())
}
