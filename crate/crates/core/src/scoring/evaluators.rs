//! Per-point evaluators. Each returns the achieved share of the point's
//! weight for one response.

use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};
use crate::scoring::extract::{extract_dict, extract_list, extract_option, extract_single, normalize};
use crate::scoring::format::{dict_check, list_check, option_score, quoted_element_score, score_quantity};
use crate::scoring::rubric::{EvaluatorKind, FormatSpec, RubricPoint};
use crate::task::TaskId;
use crate::taskgen::context::{parse_context, GroundTruth};
use crate::taskgen::item::{BenchmarkItem, GoldAnswer};

/// An item with its context parsed once for repeated scoring.
pub struct ItemView<'a> {
    pub item: &'a BenchmarkItem,
    elements: Vec<String>,
    /// Document attribute values (ids and `iD2` codes).
    doc_attrs: HashSet<String>,
    doc_count: usize,
    plain: String,
    key_sentences: HashSet<String>,
}

impl<'a> ItemView<'a> {
    pub fn new(item: &'a BenchmarkItem) -> Result<Self> {
        let truth = parse_context(item.scenario, &item.context)?;
        let mut view = ItemView {
            item,
            elements: Vec::new(),
            doc_attrs: HashSet::new(),
            doc_count: 0,
            plain: String::new(),
            key_sentences: HashSet::new(),
        };
        match truth {
            GroundTruth::List { elements } => view.elements = elements.iter().map(|e| normalize(e)).collect(),
            GroundTruth::Docs { docs } => {
                view.doc_count = docs.len();
                for d in docs {
                    view.doc_attrs.insert(d.id);
                    view.doc_attrs.insert(d.id2);
                }
            }
            GroundTruth::OneDoc { tags, plain, .. } => {
                view.plain = normalize(&plain);
                view.key_sentences = tags.iter().map(|t| normalize(&t.sentence)).collect();
            }
        }
        Ok(view)
    }

    fn in_document(&self, sentence: &str) -> bool {
        !sentence.is_empty() && self.plain.contains(sentence)
    }
}

/// Length of the longest common subsequence.
pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    for x in a {
        let mut cur = vec![0usize; b.len() + 1];
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { prev[j + 1].max(cur[j]) };
        }
        prev = cur;
    }
    prev[b.len()]
}

fn share(hits: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        hits as f64 / total as f64
    }
}

fn gold_mismatch(item: &BenchmarkItem) -> Error {
    Error::Render(format!("item {}: gold answer does not fit task {}", item.item_id, item.task_id))
}

/// Score of one rubric point, in `[0, point.weight]`.
pub fn evaluate(view: &ItemView<'_>, format: &FormatSpec, point: &RubricPoint, response: &str) -> Result<f64> {
    let w = point.weight;
    let item = view.item;
    let task = item.task_id;
    if point.evaluator == EvaluatorKind::Format {
        return Ok(match format {
            FormatSpec::QuotedElement => quoted_element_score(response, w),
            FormatSpec::JsonList => list_check(response).scaled(w),
            FormatSpec::JsonDict { keys, values_as_keys } => dict_check(response, *keys, *values_as_keys).scaled(w),
            FormatSpec::OptionWord => match &item.gold {
                GoldAnswer::OptionChoice { options, .. } => option_score(response, (&options.0, &options.1), w),
                _ => return Err(gold_mismatch(item)),
            },
        });
    }
    let fraction = match task {
        TaskId::LSI | TaskId::LOI | TaskId::LOE | TaskId::LBI | TaskId::LBE => single_element(view, point.evaluator, response)?,
        TaskId::LMI => multi_element(view, point.evaluator, response)?,
        TaskId::MB => labels(view, point.evaluator, response)?,
        TaskId::MF => duplicates(view, point.evaluator, response)?,
        TaskId::OR => key_sentences(view, point.evaluator, response)?,
        TaskId::OQ => match (&item.gold, point.evaluator) {
            (GoldAnswer::OptionChoice { answer, options }, EvaluatorKind::Correctness) => {
                let picked = extract_option(response, (&options.0, &options.1));
                f64::from(u8::from(picked.as_deref() == Some(answer.as_str())))
            }
            _ => return Err(unsupported(point.evaluator, task)),
        },
        TaskId::OE => ordered_sentences(view, point.evaluator, response)?,
    };
    Ok(fraction.clamp(0.0, 1.0) * w)
}

fn unsupported(kind: EvaluatorKind, task: TaskId) -> Error {
    Error::config(format!("evaluator {kind:?} is not defined for {task}"))
}

fn single_element(view: &ItemView<'_>, kind: EvaluatorKind, response: &str) -> Result<f64> {
    let picked = extract_single(response, &view.elements);
    let Some(picked) = picked else { return Ok(0.0) };
    let hit = |ok: bool| f64::from(u8::from(ok));
    Ok(match (kind, &view.item.gold) {
        (EvaluatorKind::Origin, _) => hit(view.elements.contains(&picked)),
        (EvaluatorKind::Correctness, GoldAnswer::SingleElement { element }) => hit(normalize(element) == picked),
        (EvaluatorKind::Window, GoldAnswer::ElementSetInWindow { elements, .. }) => {
            hit(elements.iter().any(|e| normalize(e) == picked))
        }
        (EvaluatorKind::Correctness | EvaluatorKind::Window, _) => return Err(gold_mismatch(view.item)),
        (kind, _) => return Err(unsupported(kind, view.item.task_id)),
    })
}

fn multi_element(view: &ItemView<'_>, kind: EvaluatorKind, response: &str) -> Result<f64> {
    let GoldAnswer::ElementList { elements } = &view.item.gold else {
        return Err(gold_mismatch(view.item));
    };
    let gold: Vec<String> = elements.iter().map(|e| normalize(e)).collect();
    let pred = extract_list(response);
    Ok(match kind {
        EvaluatorKind::Order => share(lcs_len(&pred, &gold), gold.len()),
        EvaluatorKind::Quantity => score_quantity(pred.len(), gold.len(), 1.0),
        EvaluatorKind::Correctness => {
            let mut remaining: HashMap<&str, usize> = HashMap::new();
            for g in &gold {
                *remaining.entry(g).or_default() += 1;
            }
            let hits = pred
                .iter()
                .filter(|p| match remaining.get_mut(p.as_str()) {
                    Some(n) if *n > 0 => {
                        *n -= 1;
                        true
                    }
                    _ => false,
                })
                .count();
            share(hits, gold.len())
        }
        kind => return Err(unsupported(kind, view.item.task_id)),
    })
}

fn labels(view: &ItemView<'_>, kind: EvaluatorKind, response: &str) -> Result<f64> {
    let GoldAnswer::LabelList { labels, options } = &view.item.gold else {
        return Err(gold_mismatch(view.item));
    };
    let pred = extract_dict(response);
    let is_option = |v: &str| v.eq_ignore_ascii_case(&options.0) || v.eq_ignore_ascii_case(&options.1);
    Ok(match kind {
        EvaluatorKind::Correctness => {
            let by_id: HashMap<&str, &str> = pred.iter().map(|(k, v)| (k.as_str(), v.as_str())).collect();
            let hits = labels
                .iter()
                .filter(|(id, label)| by_id.get(id.as_str()).is_some_and(|v| v.eq_ignore_ascii_case(label)))
                .count();
            share(hits, labels.len())
        }
        EvaluatorKind::LabelSet => share(pred.iter().filter(|(_, v)| is_option(v)).count(), pred.len()),
        EvaluatorKind::Quantity => score_quantity(pred.len(), view.doc_count, 1.0),
        kind => return Err(unsupported(kind, view.item.task_id)),
    })
}

fn duplicates(view: &ItemView<'_>, kind: EvaluatorKind, response: &str) -> Result<f64> {
    let GoldAnswer::DupGroups {
        pairs, count_expected, ..
    } = &view.item.gold
    else {
        return Err(gold_mismatch(view.item));
    };
    let pred = extract_dict(response);
    Ok(match kind {
        EvaluatorKind::Correctness => {
            if pairs.is_empty() {
                return Ok(f64::from(u8::from(pred.is_empty())));
            }
            let found: HashSet<(&str, &str)> = pred
                .iter()
                .flat_map(|(k, v)| [(k.as_str(), v.as_str()), (v.as_str(), k.as_str())])
                .collect();
            share(pairs.iter().filter(|(c, o)| found.contains(&(c.as_str(), o.as_str()))).count(), pairs.len())
        }
        EvaluatorKind::Quantity => score_quantity(pred.len(), *count_expected, 1.0),
        EvaluatorKind::Origin => {
            let known = pred
                .iter()
                .flat_map(|(k, v)| [k, v])
                .filter(|s| view.doc_attrs.contains(s.as_str()))
                .count();
            share(known, pred.len() * 2)
        }
        kind => return Err(unsupported(kind, view.item.task_id)),
    })
}

fn key_sentences(view: &ItemView<'_>, kind: EvaluatorKind, response: &str) -> Result<f64> {
    let GoldAnswer::KeySentences { count_expected, .. } = &view.item.gold else {
        return Err(gold_mismatch(view.item));
    };
    let pred = extract_list(response);
    Ok(match kind {
        EvaluatorKind::Correctness => {
            share(pred.iter().filter(|p| view.key_sentences.contains(*p)).count(), pred.len())
        }
        EvaluatorKind::Origin => share(pred.iter().filter(|p| view.in_document(p)).count(), pred.len()),
        EvaluatorKind::KeyRecognition => {
            let distinct: HashSet<&String> = pred.iter().filter(|p| view.key_sentences.contains(*p)).collect();
            share(distinct.len(), pred.len())
        }
        EvaluatorKind::Quantity => score_quantity(pred.len(), *count_expected, 1.0),
        kind => return Err(unsupported(kind, view.item.task_id)),
    })
}

fn ordered_sentences(view: &ItemView<'_>, kind: EvaluatorKind, response: &str) -> Result<f64> {
    let GoldAnswer::OrderedSentences { entries } = &view.item.gold else {
        return Err(gold_mismatch(view.item));
    };
    let gold: HashMap<&str, String> = entries.iter().map(|(id, s)| (id.as_str(), normalize(s))).collect();
    let pred = extract_dict(response);
    Ok(match kind {
        EvaluatorKind::Origin => share(pred.iter().filter(|(_, s)| view.in_document(s)).count(), pred.len()),
        EvaluatorKind::Target => {
            let hits = pred
                .iter()
                .filter(|(id, s)| gold.get(id.as_str()).is_some_and(|g| g == s))
                .collect::<HashSet<_>>()
                .len();
            share(hits, pred.len().max(entries.len()))
        }
        EvaluatorKind::Order => {
            let gold_ids: Vec<&str> = entries.iter().map(|(id, _)| id.as_str()).collect();
            let pred_ids: Vec<&str> = pred
                .iter()
                .map(|(id, _)| id.as_str())
                .filter(|id| gold.contains_key(id))
                .collect();
            share(lcs_len(&pred_ids, &gold_ids), gold_ids.len())
        }
        kind => return Err(unsupported(kind, view.item.task_id)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lcs_small_cases() {
        assert_eq!(lcs_len(&[1, 2, 3], &[1, 2, 3]), 3);
        assert_eq!(lcs_len(&[3, 2, 1], &[1, 2, 3]), 1);
        assert_eq!(lcs_len(&[1, 9, 3], &[1, 2, 3]), 2);
        assert_eq!(lcs_len::<u8>(&[], &[1]), 0);
    }
}
