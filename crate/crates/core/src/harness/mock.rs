//! Deterministic stand-in models: the gold answer, the gold answer with one
//! deliberate defect, an empty reply and seeded noise.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, seeded};
use crate::scoring::EvaluatorKind;
use crate::taskgen::context::{parse_context, GroundTruth};
use crate::taskgen::gold::{object, serialize_gold};
use crate::taskgen::item::{BenchmarkItem, GoldAnswer};

/// A single targeted flaw applied to a gold answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Defect {
    /// Right content, wrong surface form.
    WrongFormat,
    /// One entry too many.
    WrongCount,
    /// Entries in reverse order.
    Shuffled,
    /// An element outside the requested position or window.
    OffWindow,
    /// The other of the two options.
    InvertedOption,
}

impl Defect {
    pub const ALL: [Defect; 5] = [
        Defect::WrongFormat,
        Defect::WrongCount,
        Defect::Shuffled,
        Defect::OffWindow,
        Defect::InvertedOption,
    ];

    /// Evaluators whose points the defect is meant to lower; every other
    /// point must score as it does for the gold answer.
    pub fn targets(self) -> &'static [EvaluatorKind] {
        match self {
            Defect::WrongFormat => &[EvaluatorKind::Format],
            Defect::WrongCount => &[EvaluatorKind::Quantity],
            Defect::Shuffled => &[EvaluatorKind::Order],
            Defect::OffWindow => &[EvaluatorKind::Correctness, EvaluatorKind::Window],
            Defect::InvertedOption => &[EvaluatorKind::Correctness],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Defect::WrongFormat => "wrong_format",
            Defect::WrongCount => "wrong_count",
            Defect::Shuffled => "shuffled",
            Defect::OffWindow => "off_window",
            Defect::InvertedOption => "inverted_option",
        }
    }
}

impl fmt::Display for Defect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Defect {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Defect::ALL
            .into_iter()
            .find(|d| d.as_str() == s.trim())
            .ok_or_else(|| Error::config(format!("unknown defect `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "defect", rename_all = "snake_case")]
pub enum MockKind {
    Gold,
    /// Gold with a defect; items the defect does not apply to get the plain
    /// gold answer.
    Mangled(Defect),
    Empty,
    Noise,
}

impl FromStr for MockKind {
    type Err = Error;

    /// `gold`, `empty`, `noise` or `mangled:<defect>`.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "gold" => Ok(MockKind::Gold),
            "empty" => Ok(MockKind::Empty),
            "noise" => Ok(MockKind::Noise),
            other => match other.strip_prefix("mangled:") {
                Some(d) => Ok(MockKind::Mangled(d.parse()?)),
                None => Err(Error::config(format!(
                    "unknown mock `{s}`; expected gold, empty, noise or mangled:<defect>"
                ))),
            },
        }
    }
}

pub fn gold_response(item: &BenchmarkItem) -> String {
    serialize_gold(&item.gold)
}

pub fn mock_response(item: &BenchmarkItem, kind: MockKind) -> Result<String> {
    match kind {
        MockKind::Gold => Ok(gold_response(item)),
        MockKind::Mangled(d) => Ok(mangle(item, d)?.unwrap_or_else(|| gold_response(item))),
        MockKind::Empty => Ok(String::new()),
        MockKind::Noise => Ok(noise(item)),
    }
}

const NOISE_WORDS: &[&str] = &[
    "maybe", "river", "{", "}", "[", "]", "\"", ":", "seven", "lorem", "answer", "list", "yes", "no",
    "document", "sentence", "the", "of", ",", ".", "ok", "id",
];

fn noise(item: &BenchmarkItem) -> String {
    let mut rng = seeded(derive_seed(item.seed, &["noise", &item.item_id]));
    let n = rng.gen_range(0..40);
    (0..n)
        .map(|_| *NOISE_WORDS.choose(&mut rng).expect("non-empty"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn quote(s: &str) -> String {
    serde_json::to_string(s).expect("strings serialize")
}

fn json_list(items: &[String]) -> String {
    serde_json::to_string(items).expect("strings serialize")
}

fn list_elements(item: &BenchmarkItem) -> Result<Vec<String>> {
    match parse_context(item.scenario, &item.context)? {
        GroundTruth::List { elements } => Ok(elements),
        _ => Err(Error::Render(format!("item {} has no list context", item.item_id))),
    }
}

/// Element next to `target` in the list (the following one, or the
/// preceding one at the end).
fn neighbour(elements: &[String], target: &str) -> Option<String> {
    let idx = elements.iter().position(|e| e == target)?;
    elements.get(idx + 1).or_else(|| idx.checked_sub(1).and_then(|i| elements.get(i))).cloned()
}

fn dict_lines(entries: &[(String, String)]) -> String {
    entries
        .iter()
        .map(|(k, v)| format!("{}: {}", quote(k), quote(v)))
        .collect::<Vec<_>>()
        .join("\n")
}

/// The gold answer with `defect` applied, or `None` when the defect has no
/// meaning for the item's task.
pub fn mangle(item: &BenchmarkItem, defect: Defect) -> Result<Option<String>> {
    use GoldAnswer::*;
    let out = match (defect, &item.gold) {
        (Defect::WrongFormat, SingleElement { element }) => Some(format!("The answer is {element}")),
        (Defect::WrongFormat, ElementSetInWindow { reference, .. }) => Some(format!("The answer is {reference}")),
        (Defect::WrongFormat, ElementList { elements }) => Some(bullets(elements)),
        (Defect::WrongFormat, KeySentences { sentences, count_expected }) => {
            Some(bullets(&sentences[..*count_expected]))
        }
        (Defect::WrongFormat, LabelList { labels, .. }) => Some(dict_lines(labels)),
        (Defect::WrongFormat, DupGroups { pairs, .. }) => Some(dict_lines(pairs)),
        (Defect::WrongFormat, OrderedSentences { entries }) => Some(dict_lines(entries)),
        (Defect::WrongFormat, OptionChoice { answer, .. }) => Some(format!("The answer is: {answer}.")),

        (Defect::WrongCount, ElementList { elements }) => {
            let all = list_elements(item)?;
            let extra = all.iter().find(|e| !elements.contains(e)).cloned();
            extra.map(|x| {
                let mut v = elements.clone();
                v.push(x);
                json_list(&v)
            })
        }
        (Defect::WrongCount, KeySentences { sentences, count_expected }) => {
            (*count_expected < sentences.len()).then(|| json_list(&sentences[..count_expected + 1]))
        }
        (Defect::WrongCount, LabelList { labels, options }) => {
            let taken: HashSet<&str> = labels.iter().map(|(id, _)| id.as_str()).collect();
            let fake = (0u32..)
                .map(|i| format!("{:08x}", 0xfeed_0000u32.wrapping_add(i)))
                .find(|id| !taken.contains(id.as_str()))
                .expect("an unused id exists");
            let mut v = labels.clone();
            v.push((fake, options.1.clone()));
            Some(object(v.iter().map(|(k, l)| (k.as_str(), l.as_str()))))
        }
        (Defect::WrongCount, DupGroups { attr, groups, pairs, .. }) => {
            let docs = match parse_context(item.scenario, &item.context)? {
                GroundTruth::Docs { docs } => docs,
                _ => return Err(Error::Render(format!("item {} has no documents", item.item_id))),
            };
            let grouped: HashSet<&str> = groups.iter().flatten().map(String::as_str).collect();
            let value = |d: &crate::corpus::DocRecord| if attr == "iD2" { d.id2.clone() } else { d.id.clone() };
            let singles: Vec<String> = docs.iter().map(value).filter(|v| !grouped.contains(v.as_str())).collect();
            (singles.len() >= 2).then(|| {
                let mut v = pairs.clone();
                v.push((singles[1].clone(), singles[0].clone()));
                object(v.iter().map(|(k, o)| (k.as_str(), o.as_str())))
            })
        }

        (Defect::Shuffled, ElementList { elements }) if elements.len() >= 2 => {
            let mut v = elements.clone();
            v.reverse();
            Some(json_list(&v))
        }
        (Defect::Shuffled, OrderedSentences { entries }) if entries.len() >= 2 => {
            Some(object(entries.iter().rev().map(|(k, s)| (k.as_str(), s.as_str()))))
        }

        (Defect::OffWindow, SingleElement { element }) => {
            neighbour(&list_elements(item)?, element).map(|e| quote(&e))
        }
        (Defect::OffWindow, ElementSetInWindow { window, .. }) => {
            let all = list_elements(item)?;
            let (lo, hi) = *window;
            // first position outside the window on either side
            let outside = if hi < all.len() { Some(hi + 1) } else { lo.checked_sub(1).filter(|&p| p >= 1) };
            outside.map(|p| quote(&all[p - 1]))
        }

        (Defect::InvertedOption, OptionChoice { answer, options }) => {
            Some(if *answer == options.0 { options.1.clone() } else { options.0.clone() })
        }
        _ => None,
    };
    Ok(out)
}

fn bullets(items: &[String]) -> String {
    items.iter().map(|s| format!("- {s}")).collect::<Vec<_>>().join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mock_names_parse() {
        assert_eq!("gold".parse::<MockKind>().unwrap(), MockKind::Gold);
        assert_eq!(
            "mangled:off_window".parse::<MockKind>().unwrap(),
            MockKind::Mangled(Defect::OffWindow)
        );
        assert!("mangled:nope".parse::<MockKind>().is_err());
        assert!("oracle".parse::<MockKind>().is_err());
    }

    #[test]
    fn neighbours() {
        let v: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        assert_eq!(neighbour(&v, "a").as_deref(), Some("b"));
        assert_eq!(neighbour(&v, "c").as_deref(), Some("b"));
        assert_eq!(neighbour(&v, "z"), None);
    }
}
