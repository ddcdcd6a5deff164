use serde::{Deserialize, Serialize};

use crate::expansion::Assignment;
use crate::task::{Scenario, TaskId};

/// Expected answer of an item, computed from the generator's ground truth.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GoldAnswer {
    SingleElement {
        element: String,
    },
    ElementList {
        elements: Vec<String>,
    },
    /// Any element inside the closed 1-based `window` is acceptable;
    /// `reference` is the element at the anchor.
    ElementSetInWindow {
        window: (usize, usize),
        elements: Vec<String>,
        reference: String,
    },
    /// `(doc id, label)` in document order.
    LabelList {
        labels: Vec<(String, String)>,
        options: (String, String),
    },
    /// Documents sharing a text, identified by `attr`. Each pair maps a
    /// repeated document to the earliest document with the same text.
    DupGroups {
        attr: String,
        groups: Vec<Vec<String>>,
        pairs: Vec<(String, String)>,
        count_expected: usize,
    },
    /// Every tagged sentence is acceptable; `count_expected` are requested.
    KeySentences {
        sentences: Vec<String>,
        count_expected: usize,
    },
    OptionChoice {
        answer: String,
        options: (String, String),
    },
    /// `(tag id, sentence)` sorted by tag id.
    OrderedSentences {
        entries: Vec<(String, String)>,
    },
}

impl GoldAnswer {
    pub fn count_expected(&self) -> Option<usize> {
        match self {
            GoldAnswer::ElementList { elements } => Some(elements.len()),
            GoldAnswer::LabelList { labels, .. } => Some(labels.len()),
            GoldAnswer::DupGroups { count_expected, .. } => Some(*count_expected),
            GoldAnswer::KeySentences { count_expected, .. } => Some(*count_expected),
            GoldAnswer::OrderedSentences { entries } => Some(entries.len()),
            _ => None,
        }
    }

    /// Strings of the gold payload that must occur verbatim in the context.
    pub fn payload_strings(&self) -> Vec<&str> {
        match self {
            GoldAnswer::SingleElement { element } => vec![element],
            GoldAnswer::ElementList { elements } => elements.iter().map(String::as_str).collect(),
            GoldAnswer::ElementSetInWindow {
                elements, reference, ..
            } => elements.iter().chain([reference]).map(String::as_str).collect(),
            GoldAnswer::LabelList { labels, .. } => labels.iter().map(|(id, _)| id.as_str()).collect(),
            GoldAnswer::DupGroups { groups, .. } => groups.iter().flatten().map(String::as_str).collect(),
            GoldAnswer::KeySentences { sentences, .. } => sentences.iter().map(String::as_str).collect(),
            GoldAnswer::OptionChoice { .. } => Vec::new(),
            GoldAnswer::OrderedSentences { entries } => entries
                .iter()
                .flat_map(|(id, s)| [id.as_str(), s.as_str()])
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkItem {
    pub item_id: String,
    pub scenario: Scenario,
    pub task_id: TaskId,
    pub interval: String,
    pub nominal_tokens: usize,
    pub expression_index: usize,
    pub variable_index: usize,
    pub variable_assignment: Assignment,
    pub seed: u64,
    pub description: String,
    pub context: String,
    pub instruction: String,
    pub gold: GoldAnswer,
    pub prompt_token_count: usize,
    pub context_token_count: usize,
    pub context_budget: usize,
}

pub const PART_SEPARATOR: &str = "\n\n";

impl BenchmarkItem {
    pub fn prompt(&self) -> String {
        assemble_prompt(&self.description, &self.context, &self.instruction)
    }

    pub fn fill_ratio(&self) -> f64 {
        self.context_token_count as f64 / self.context_budget as f64
    }
}

pub fn assemble_prompt(description: &str, context: &str, instruction: &str) -> String {
    let mut p = String::with_capacity(description.len() + context.len() + instruction.len() + 4);
    p.push_str(description);
    p.push_str(PART_SEPARATOR);
    p.push_str(context);
    p.push_str(PART_SEPARATOR);
    p.push_str(instruction);
    p
}

/// Content address of an item.
pub fn item_id(task: TaskId, interval: &str, expression: usize, variable: usize, seed: u64, instruction: &str) -> String {
    let key = format!("{task}\u{1f}{interval}\u{1f}{expression}\u{1f}{variable}\u{1f}{seed}\u{1f}{instruction}");
    crate::rng::sha256_hex(key.as_bytes())[..16].to_string()
}
