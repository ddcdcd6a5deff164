//! Per-task variable spaces, built against a concrete context.

use std::collections::{HashMap, HashSet};

use rand::seq::{IteratorRandom, SliceRandom};
use rand::Rng;

use crate::corpus::docs::DocRecord;
use crate::error::{Error, Result};
use crate::expansion::variables::{position_candidates, DocRule, Section, VarKind, VarValue, VariableSlot, VariableSpace};
use crate::expansion::Assignment;
use crate::rng::{derived, SeededRng};
use crate::task::TaskId;
use crate::taskgen::context::GroundTruth;

pub const OFFSETS: [i64; 6] = [-5, -3, -1, 1, 3, 5];
pub const WIDTHS: [usize; 5] = [1, 2, 3, 4, 5];
pub const KEY_COUNTS: [usize; 5] = [2, 3, 4, 5, 6];
pub const LABEL_PAIRS: [(&str, &str); 5] = [
    ("A", "B"),
    ("relevant", "irrelevant"),
    ("yes", "no"),
    ("keep", "discard"),
    ("match", "other"),
];
pub const MB_CUTOFF_DATE: &str = "2012-01-01";
/// Answer options for the key-sentence question. The first option answers
/// "is key"; the last three reverse the usual polarity.
pub const OPTION_PAIRS: [(&str, &str); 6] = [
    ("True", "False"),
    ("Yes", "No"),
    ("apple", "banana"),
    ("False", "True"),
    ("No", "Yes"),
    ("correct", "incorrect"),
];
pub const MF_KEYS: [(&str, &str); 6] = [
    ("id", "documents"),
    ("iD2", "documents"),
    ("id", "records"),
    ("iD2", "entries"),
    ("id", "articles"),
    ("iD2", "items"),
];
const POSITION_SPREAD: [usize; 3] = [2, 3, 2];

pub type Validator = Box<dyn Fn(&Assignment) -> bool + Send + Sync>;

fn always() -> Validator {
    Box::new(|_| true)
}

fn list_elements(truth: &GroundTruth) -> Result<&[String]> {
    match truth {
        GroundTruth::List { elements } if !elements.is_empty() => Ok(elements),
        _ => Err(Error::config("task needs a non-empty list context")),
    }
}

fn docs(truth: &GroundTruth) -> Result<&[DocRecord]> {
    match truth {
        GroundTruth::Docs { docs } if !docs.is_empty() => Ok(docs),
        _ => Err(Error::config("task needs a document collection context")),
    }
}

fn positions(len: usize, rng: &mut SeededRng) -> Result<Vec<(usize, Section)>> {
    position_candidates(len, POSITION_SPREAD, rng, &|_| true)
}

fn position_slot(name: &str, len: usize, rng: &mut SeededRng) -> Result<VariableSlot> {
    let cands = positions(len, rng)?;
    Ok(VariableSlot::sectioned(
        name,
        VarKind::Position,
        cands.into_iter().map(|(p, s)| (VarValue::Position(p), s)).collect(),
    ))
}

fn anchor_slot(elements: &[String], rng: &mut SeededRng) -> Result<VariableSlot> {
    let cands = positions(elements.len(), rng)?;
    Ok(VariableSlot::sectioned(
        "anchor",
        VarKind::Phrase,
        cands
            .into_iter()
            .map(|(p, s)| (VarValue::Text(elements[p - 1].clone()), s))
            .collect(),
    ))
}

fn offset_slot() -> VariableSlot {
    VariableSlot::plain("offset", VarKind::Numeric, OFFSETS.iter().map(|&o| VarValue::Offset(o)).collect())
}

fn width_slot() -> VariableSlot {
    VariableSlot::plain("width", VarKind::Numeric, WIDTHS.iter().map(|&w| VarValue::Number(w)).collect())
}

fn in_range(pos: i64, len: usize) -> bool {
    pos >= 1 && pos <= len as i64
}

fn position_sets(len: usize, rng: &mut SeededRng, count: usize) -> Result<Vec<Vec<usize>>> {
    if len < 5 {
        return Err(Error::config(format!("list of {len} elements is too short for multi-position picks")));
    }
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    let mut attempts = 0;
    while out.len() < count {
        attempts += 1;
        if attempts > 10_000 {
            return Err(Error::config("could not draw distinct position sets"));
        }
        let size = rng.gen_range(3..=5);
        let mut picks: Vec<usize> = Vec::with_capacity(size);
        for section in Section::ALL {
            picks.push(section.range(len).choose(rng).expect("sections of a list of five or more are non-empty"));
        }
        while picks.len() < size {
            let p = rng.gen_range(1..=len);
            if !picks.contains(&p) {
                picks.push(p);
            }
        }
        picks.dedup();
        if picks.iter().collect::<HashSet<_>>().len() != picks.len() {
            continue;
        }
        picks.shuffle(rng);
        let mut key = picks.clone();
        key.sort_unstable();
        if seen.insert(key) {
            out.push(picks);
        }
    }
    Ok(out)
}

/// Candidate sentences for the key-sentence question: three tagged and
/// three untagged, each occurring once in the document.
fn question_sentences(truth: &GroundTruth, rng: &mut SeededRng) -> Result<Vec<String>> {
    let GroundTruth::OneDoc { tags, sentences, .. } = truth else {
        return Err(Error::config("task needs a tagged document context"));
    };
    let mut occurrences: HashMap<&str, usize> = HashMap::new();
    for s in sentences {
        *occurrences.entry(s.as_str()).or_default() += 1;
    }
    let tagged: HashSet<&str> = tags.iter().map(|t| t.sentence.as_str()).collect();
    let key: Vec<&str> = tags
        .iter()
        .map(|t| t.sentence.as_str())
        .filter(|s| occurrences.get(s) == Some(&1))
        .collect();
    let plain: Vec<&str> = sentences
        .iter()
        .map(String::as_str)
        .filter(|s| occurrences[s] == 1 && !tagged.contains(s) && s.split_whitespace().count() >= 4)
        .collect();
    if key.len() < 3 || plain.len() < 3 {
        return Err(Error::config("document has too few distinct sentences for key-sentence questions"));
    }
    let mut out: Vec<String> = key.choose_multiple(rng, 3).map(|s| s.to_string()).collect();
    out.extend(plain.choose_multiple(rng, 3).map(|s| s.to_string()));
    Ok(out)
}

fn tag_id_lists(truth: &GroundTruth, rng: &mut SeededRng) -> Result<Vec<Vec<String>>> {
    let GroundTruth::OneDoc { tags, .. } = truth else {
        return Err(Error::config("task needs a tagged document context"));
    };
    if tags.len() < 4 {
        return Err(Error::config(format!("document has {} key sentences, at least 4 needed", tags.len())));
    }
    let ids: Vec<&String> = tags.iter().map(|t| &t.tag_id).collect();
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    let mut attempts = 0;
    while out.len() < 6 {
        attempts += 1;
        if attempts > 10_000 {
            return Err(Error::config("could not draw distinct id lists"));
        }
        let size = rng.gen_range(2..=4);
        let picks: Vec<String> = ids.choose_multiple(rng, size).map(|s| s.to_string()).collect();
        let mut key = picks.clone();
        key.sort();
        // Lists already in ascending order would not exercise ordering.
        if key == picks {
            continue;
        }
        if seen.insert(key) {
            out.push(picks);
        }
    }
    Ok(out)
}

/// Variable space of `task` over a concrete context, plus the predicate an
/// assignment must satisfy to yield an answerable item.
pub fn variable_space(task: TaskId, truth: &GroundTruth, seed: u64) -> Result<(VariableSpace, Validator)> {
    let mut rng = derived(seed, &["spaces", task.as_str()]);
    let rng = &mut rng;
    Ok(match task {
        TaskId::LSI => {
            let len = list_elements(truth)?.len();
            (VariableSpace::new(vec![position_slot("pos", len, rng)?]), always())
        }
        TaskId::LMI => {
            let len = list_elements(truth)?.len();
            let sets = position_sets(len, rng, 7)?;
            let slot = VariableSlot::plain("positions", VarKind::Position, sets.into_iter().map(VarValue::Positions).collect());
            (VariableSpace::new(vec![slot]), always())
        }
        TaskId::LOI => {
            let len = list_elements(truth)?.len();
            let space = VariableSpace::new(vec![position_slot("pos", len, rng)?, offset_slot()]);
            let valid: Validator = Box::new(move |a| match (&a["pos"], &a["offset"]) {
                (VarValue::Position(p), VarValue::Offset(o)) => in_range(*p as i64 + o, len),
                _ => false,
            });
            (space, valid)
        }
        TaskId::LOE => {
            let elements = list_elements(truth)?;
            let index: HashMap<String, usize> = elements.iter().enumerate().map(|(i, e)| (e.clone(), i + 1)).collect();
            let len = elements.len();
            let space = VariableSpace::new(vec![anchor_slot(elements, rng)?, offset_slot()]);
            let valid: Validator = Box::new(move |a| match (&a["anchor"], &a["offset"]) {
                (VarValue::Text(t), VarValue::Offset(o)) => index.get(t).is_some_and(|&p| in_range(p as i64 + o, len)),
                _ => false,
            });
            (space, valid)
        }
        TaskId::LBI => {
            let len = list_elements(truth)?.len();
            (VariableSpace::new(vec![position_slot("pos", len, rng)?, width_slot()]), always())
        }
        TaskId::LBE => {
            let elements = list_elements(truth)?;
            (VariableSpace::new(vec![anchor_slot(elements, rng)?, width_slot()]), always())
        }
        TaskId::MB => {
            let docs = docs(truth)?.to_vec();
            let mut sources: Vec<String> = docs.iter().filter_map(|d| d.source.clone()).collect::<HashSet<_>>().into_iter().collect();
            sources.sort();
            sources.shuffle(rng);
            let mut rules: Vec<VarValue> = sources.into_iter().take(4).map(|s| VarValue::Rule(DocRule::SourceIs(s))).collect();
            rules.push(VarValue::Rule(DocRule::HasTitle));
            rules.push(VarValue::Rule(DocRule::DateBefore(MB_CUTOFF_DATE.to_string())));
            let labels = LABEL_PAIRS.iter().map(|(a, b)| VarValue::Pair(a.to_string(), b.to_string())).collect();
            let space = VariableSpace::new(vec![
                VariableSlot::plain("rule", VarKind::Phrase, rules),
                VariableSlot::plain("labels", VarKind::OptionPair, labels),
            ]);
            let valid: Validator = Box::new(move |a| match &a["rule"] {
                VarValue::Rule(r) => {
                    let hits = docs
                        .iter()
                        .filter(|d| r.matches(d.source.as_deref(), d.title.as_deref(), &d.date))
                        .count();
                    hits > 0 && hits < docs.len()
                }
                _ => false,
            });
            (space, valid)
        }
        TaskId::MF => {
            docs(truth)?;
            let keys = MF_KEYS.iter().map(|(a, b)| VarValue::Pair(a.to_string(), b.to_string())).collect();
            (VariableSpace::new(vec![VariableSlot::plain("key", VarKind::FormatIndicator, keys)]), always())
        }
        TaskId::OR => {
            let GroundTruth::OneDoc { tags, .. } = truth else {
                return Err(Error::config("task needs a tagged document context"));
            };
            let counts: Vec<VarValue> = KEY_COUNTS.iter().filter(|&&n| n <= tags.len()).map(|&n| VarValue::Number(n)).collect();
            (VariableSpace::new(vec![VariableSlot::plain("n", VarKind::Numeric, counts)]), always())
        }
        TaskId::OQ => {
            let sentences = question_sentences(truth, rng)?;
            let options = OPTION_PAIRS.iter().map(|(a, b)| VarValue::Pair(a.to_string(), b.to_string())).collect();
            let space = VariableSpace::new(vec![
                VariableSlot::plain("sentence", VarKind::Sentence, sentences.into_iter().map(VarValue::Text).collect()),
                VariableSlot::plain("options", VarKind::OptionPair, options),
            ]);
            (space, always())
        }
        TaskId::OE => {
            let lists = tag_id_lists(truth, rng)?;
            let slot = VariableSlot::plain("ids", VarKind::IdList, lists.into_iter().map(VarValue::Ids).collect());
            (VariableSpace::new(vec![slot]), always())
        }
    })
}
