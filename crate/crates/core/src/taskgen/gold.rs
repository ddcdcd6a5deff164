//! Gold answers and their canonical serialization.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::expansion::{Assignment, VarValue};
use crate::task::TaskId;
use crate::taskgen::context::GroundTruth;
use crate::taskgen::item::GoldAnswer;

fn var<'a>(a: &'a Assignment, name: &str) -> Result<&'a VarValue> {
    a.get(name).ok_or_else(|| Error::Render(format!("assignment lacks `{name}`")))
}

fn position(a: &Assignment, name: &str) -> Result<usize> {
    match var(a, name)? {
        VarValue::Position(p) => Ok(*p),
        other => Err(Error::Render(format!("`{name}` is not a position: {other:?}"))),
    }
}

fn text<'a>(a: &'a Assignment, name: &str) -> Result<&'a str> {
    match var(a, name)? {
        VarValue::Text(t) => Ok(t),
        other => Err(Error::Render(format!("`{name}` is not text: {other:?}"))),
    }
}

fn pair<'a>(a: &'a Assignment, name: &str) -> Result<(&'a str, &'a str)> {
    match var(a, name)? {
        VarValue::Pair(x, y) => Ok((x, y)),
        other => Err(Error::Render(format!("`{name}` is not a pair: {other:?}"))),
    }
}

fn number(a: &Assignment, name: &str) -> Result<usize> {
    match var(a, name)? {
        VarValue::Number(n) => Ok(*n),
        other => Err(Error::Render(format!("`{name}` is not a number: {other:?}"))),
    }
}

fn offset(a: &Assignment) -> Result<i64> {
    match var(a, "offset")? {
        VarValue::Offset(o) => Ok(*o),
        other => Err(Error::Render(format!("`offset` is not an offset: {other:?}"))),
    }
}

fn at(elements: &[String], pos: i64) -> Result<String> {
    if pos < 1 || pos as usize > elements.len() {
        return Err(Error::Render(format!("position {pos} outside a list of {}", elements.len())));
    }
    Ok(elements[pos as usize - 1].clone())
}

/// 1-based position of `anchor`, which must occur exactly once.
fn locate(elements: &[String], anchor: &str) -> Result<usize> {
    let mut hits = elements.iter().enumerate().filter(|(_, e)| *e == anchor);
    match (hits.next(), hits.next()) {
        (Some((i, _)), None) => Ok(i + 1),
        (None, _) => Err(Error::Render(format!("anchor `{anchor}` not in the list"))),
        _ => Err(Error::Render(format!("anchor `{anchor}` occurs more than once"))),
    }
}

fn window_gold(elements: &[String], anchor: usize, width: usize) -> GoldAnswer {
    let lo = anchor.saturating_sub(width).max(1);
    let hi = (anchor + width).min(elements.len());
    GoldAnswer::ElementSetInWindow {
        window: (lo, hi),
        elements: elements[lo - 1..hi].to_vec(),
        reference: elements[anchor - 1].clone(),
    }
}

pub fn compute_gold(task: TaskId, truth: &GroundTruth, a: &Assignment) -> Result<GoldAnswer> {
    match (task, truth) {
        (TaskId::LSI, GroundTruth::List { elements }) => Ok(GoldAnswer::SingleElement {
            element: at(elements, position(a, "pos")? as i64)?,
        }),
        (TaskId::LMI, GroundTruth::List { elements }) => {
            let VarValue::Positions(ps) = var(a, "positions")? else {
                return Err(Error::Render("`positions` is not a position list".into()));
            };
            Ok(GoldAnswer::ElementList {
                elements: ps.iter().map(|&p| at(elements, p as i64)).collect::<Result<_>>()?,
            })
        }
        (TaskId::LOI, GroundTruth::List { elements }) => Ok(GoldAnswer::SingleElement {
            element: at(elements, position(a, "pos")? as i64 + offset(a)?)?,
        }),
        (TaskId::LOE, GroundTruth::List { elements }) => {
            let anchor = locate(elements, text(a, "anchor")?)?;
            Ok(GoldAnswer::SingleElement {
                element: at(elements, anchor as i64 + offset(a)?)?,
            })
        }
        (TaskId::LBI, GroundTruth::List { elements }) => {
            let pos = position(a, "pos")?;
            at(elements, pos as i64)?;
            Ok(window_gold(elements, pos, number(a, "width")?))
        }
        (TaskId::LBE, GroundTruth::List { elements }) => {
            let anchor = locate(elements, text(a, "anchor")?)?;
            Ok(window_gold(elements, anchor, number(a, "width")?))
        }
        (TaskId::MB, GroundTruth::Docs { docs }) => {
            let VarValue::Rule(rule) = var(a, "rule")? else {
                return Err(Error::Render("`rule` is not a rule".into()));
            };
            let (yes, no) = pair(a, "labels")?;
            let labels = docs
                .iter()
                .map(|d| {
                    let hit = rule.matches(d.source.as_deref(), d.title.as_deref(), &d.date);
                    (d.id.clone(), if hit { yes } else { no }.to_string())
                })
                .collect();
            Ok(GoldAnswer::LabelList {
                labels,
                options: (yes.to_string(), no.to_string()),
            })
        }
        (TaskId::MF, GroundTruth::Docs { docs }) => {
            let (attr, _) = pair(a, "key")?;
            let value = |d: &crate::corpus::DocRecord| match attr {
                "iD2" => Ok(d.id2.clone()),
                "id" => Ok(d.id.clone()),
                other => Err(Error::Render(format!("unknown document attribute `{other}`"))),
            };
            let mut first: HashMap<&str, usize> = HashMap::new();
            let mut group_of: Vec<usize> = Vec::new();
            let mut groups: Vec<Vec<String>> = Vec::new();
            let mut pairs = Vec::new();
            for d in docs {
                match first.get(d.text.as_str()) {
                    Some(&g) => {
                        pairs.push((value(d)?, groups[g][0].clone()));
                        groups[g].push(value(d)?);
                    }
                    None => {
                        first.insert(&d.text, groups.len());
                        group_of.push(groups.len());
                        groups.push(vec![value(d)?]);
                    }
                }
            }
            groups.retain(|g| g.len() > 1);
            Ok(GoldAnswer::DupGroups {
                attr: attr.to_string(),
                count_expected: pairs.len(),
                groups,
                pairs,
            })
        }
        (TaskId::OR, GroundTruth::OneDoc { tags, .. }) => {
            let n = number(a, "n")?;
            if n == 0 || n > tags.len() {
                return Err(Error::Render(format!("{n} key sentences requested, document has {}", tags.len())));
            }
            Ok(GoldAnswer::KeySentences {
                sentences: tags.iter().map(|t| t.sentence.clone()).collect(),
                count_expected: n,
            })
        }
        (TaskId::OQ, GroundTruth::OneDoc { tags, .. }) => {
            let sentence = text(a, "sentence")?;
            let (is_key, not_key) = pair(a, "options")?;
            let key = tags.iter().any(|t| t.sentence == sentence);
            Ok(GoldAnswer::OptionChoice {
                answer: if key { is_key } else { not_key }.to_string(),
                options: (is_key.to_string(), not_key.to_string()),
            })
        }
        (TaskId::OE, GroundTruth::OneDoc { tags, .. }) => {
            let VarValue::Ids(ids) = var(a, "ids")? else {
                return Err(Error::Render("`ids` is not an id list".into()));
            };
            let mut sorted = ids.clone();
            sorted.sort();
            let entries = sorted
                .into_iter()
                .map(|id| {
                    tags.iter()
                        .find(|t| t.tag_id == id)
                        .map(|t| (id.clone(), t.sentence.clone()))
                        .ok_or_else(|| Error::Render(format!("tag id {id} not in the document")))
                })
                .collect::<Result<_>>()?;
            Ok(GoldAnswer::OrderedSentences { entries })
        }
        (task, _) => Err(Error::Render(format!("context does not match the scenario of {task}"))),
    }
}

/// The reference answer as a model would be asked to write it.
pub fn serialize_gold(gold: &GoldAnswer) -> String {
    let quote = |s: &str| serde_json::to_string(s).expect("strings serialize");
    match gold {
        GoldAnswer::SingleElement { element } => quote(element),
        GoldAnswer::ElementSetInWindow { reference, .. } => quote(reference),
        GoldAnswer::ElementList { elements } => serde_json::to_string(elements).expect("serialize"),
        GoldAnswer::LabelList { labels, .. } => object(labels.iter().map(|(k, v)| (k.as_str(), v.as_str()))),
        GoldAnswer::DupGroups { pairs, .. } => object(pairs.iter().map(|(k, v)| (k.as_str(), v.as_str()))),
        GoldAnswer::KeySentences {
            sentences,
            count_expected,
        } => serde_json::to_string(&sentences[..*count_expected]).expect("serialize"),
        GoldAnswer::OptionChoice { answer, .. } => answer.clone(),
        GoldAnswer::OrderedSentences { entries } => object(entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))),
    }
}

/// JSON object text with keys in the given order.
pub fn object<'a>(entries: impl IntoIterator<Item = (&'a str, &'a str)>) -> String {
    let map: serde_json::Map<String, serde_json::Value> = entries
        .into_iter()
        .map(|(k, v)| (k.to_string(), serde_json::Value::String(v.to_string())))
        .collect();
    serde_json::to_string(&map).expect("serialize")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn list(xs: &[&str]) -> GroundTruth {
        GroundTruth::List {
            elements: xs.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn assign(pairs: &[(&str, VarValue)]) -> Assignment {
        pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
    }

    #[test]
    fn direct_index() {
        let g = compute_gold(TaskId::LSI, &list(&["a", "b", "c"]), &assign(&[("pos", VarValue::Position(2))])).unwrap();
        assert_eq!(g, GoldAnswer::SingleElement { element: "b".into() });
    }

    #[test]
    fn offset_walk() {
        let elements: Vec<String> = (1..=10).map(|i| format!("e{i}")).collect();
        let truth = GroundTruth::List { elements: elements.clone() };
        let a = assign(&[("pos", VarValue::Position(5)), ("offset", VarValue::Offset(-2))]);
        let g = compute_gold(TaskId::LOI, &truth, &a).unwrap();
        // walk two steps back from the fifth element
        let mut idx = 5;
        for _ in 0..2 {
            idx -= 1;
        }
        assert_eq!(g, GoldAnswer::SingleElement { element: elements[idx - 1].clone() });
        let out = assign(&[("pos", VarValue::Position(1)), ("offset", VarValue::Offset(-1))]);
        assert!(compute_gold(TaskId::LOI, &truth, &out).is_err());
    }

    #[test]
    fn window_clamps() {
        let truth = list(&["a", "b", "c", "d", "e"]);
        let a = assign(&[("pos", VarValue::Position(2)), ("width", VarValue::Number(3))]);
        match compute_gold(TaskId::LBI, &truth, &a).unwrap() {
            GoldAnswer::ElementSetInWindow { window, elements, reference } => {
                assert_eq!(window, (1, 5));
                assert_eq!(elements.len(), 5);
                assert_eq!(reference, "b");
            }
            other => panic!("{other:?}"),
        }
    }
}
