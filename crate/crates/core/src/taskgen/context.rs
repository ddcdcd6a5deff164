//! Contexts sized to a token budget, and the ground truth recovered from them.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::corpus::docs::{title_of, DocFactory, DocRecord, DuplicationPlan, DEFAULT_DUPLICATION_RATE, DEFAULT_SOURCE_LABELS};
use crate::corpus::onedoc::{build_long_doc, parse_tags, strip_markers, LongDocOptions, TaggedSentence, DEFAULT_TAG_FRACTION, DEFAULT_TAG_TYPES};
use crate::corpus::sentences::{PunctuationSplitter, SentenceSplitter};
use crate::corpus::CorpusPools;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, derived};
use crate::task::Scenario;
use crate::tokenizer::{TokenBudget, Tokenizer};

pub const MIN_FILL_RATIO: f64 = 0.9;
/// Swap refinement of document contexts stops once this close to the budget.
const DOC_FILL_TARGET: f64 = 0.98;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContextOptions {
    pub duplication_rate: f64,
    pub source_labels: Vec<String>,
    pub tag_fraction: f64,
    pub tag_types: Vec<String>,
    /// Minimum number of key sentences per OneDoc context.
    pub min_tags: usize,
}

impl Default for ContextOptions {
    fn default() -> Self {
        ContextOptions {
            duplication_rate: DEFAULT_DUPLICATION_RATE,
            source_labels: DEFAULT_SOURCE_LABELS.iter().map(|s| s.to_string()).collect(),
            tag_fraction: DEFAULT_TAG_FRACTION,
            tag_types: DEFAULT_TAG_TYPES.iter().map(|s| s.to_string()).collect(),
            min_tags: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GroundTruth {
    List {
        elements: Vec<String>,
    },
    Docs {
        docs: Vec<DocRecord>,
    },
    OneDoc {
        tags: Vec<TaggedSentence>,
        /// Sentences of the document with markers removed.
        sentences: Vec<String>,
        plain: String,
    },
}

pub fn render_list(elements: &[String]) -> String {
    let mut out = String::from("[\n");
    for (i, e) in elements.iter().enumerate() {
        if i > 0 {
            out.push_str(",\n");
        }
        out.push_str(&serde_json::to_string(e).expect("strings serialize"));
    }
    out.push_str("\n]");
    out
}

pub fn parse_list(context: &str) -> Result<Vec<String>> {
    let body = context
        .trim()
        .strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .ok_or_else(|| Error::Render("list context is not bracketed".into()))?;
    body.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| {
            serde_json::from_str::<String>(l.trim_end_matches(','))
                .map_err(|e| Error::Render(format!("bad list line `{l}`: {e}")))
        })
        .collect()
}

pub fn render_docs(docs: &[DocRecord]) -> String {
    docs.iter().map(DocRecord::to_line).collect::<Vec<_>>().join("\n")
}

pub fn parse_docs(context: &str) -> Result<Vec<DocRecord>> {
    context
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(|e| Error::Render(format!("bad document line: {e}"))))
        .collect()
}

pub fn onedoc_truth(document: &str, splitter: &dyn SentenceSplitter) -> GroundTruth {
    let plain = strip_markers(document);
    GroundTruth::OneDoc {
        tags: parse_tags(document),
        sentences: splitter.split(&plain).into_iter().map(str::to_string).collect(),
        plain,
    }
}

pub fn parse_context(scenario: Scenario, context: &str) -> Result<GroundTruth> {
    Ok(match scenario {
        Scenario::List => GroundTruth::List {
            elements: parse_list(context)?,
        },
        Scenario::MultiDoc => GroundTruth::Docs {
            docs: parse_docs(context)?,
        },
        Scenario::OneDoc => onedoc_truth(context, &PunctuationSplitter),
    })
}

#[derive(Debug, Clone)]
pub struct BuiltContext {
    pub text: String,
    pub truth: GroundTruth,
    pub token_count: usize,
}

/// Finds the longest prefix whose rendering fits `budget`, guided by
/// approximate per-unit `costs` and confirmed with exact `count`s.
/// Returns the prefix length and its exact token count.
fn pack_prefix(costs: &[usize], budget: usize, count: &dyn Fn(usize) -> usize) -> (usize, usize) {
    let mut prefix = Vec::with_capacity(costs.len() + 1);
    prefix.push(0usize);
    for c in costs {
        prefix.push(prefix.last().unwrap() + c);
    }
    let take_within = |target: usize| prefix.partition_point(|&s| s <= target) - 1;
    let mut target = budget;
    let mut best = (0usize, count(0));
    let mut tried = HashSet::new();
    for _ in 0..16 {
        let k = take_within(target);
        if !tried.insert(k) {
            break;
        }
        let n = count(k);
        if n <= budget {
            if k >= best.0 {
                best = (k, n);
            }
            if k == costs.len() || costs[k] > budget - n {
                break;
            }
            target = target.max(prefix[k]) + (budget - n);
        } else {
            target = prefix[k].saturating_sub(n - budget + 1).min(target.saturating_sub(1));
        }
    }
    best
}

fn check_fill(pool: &str, budget: usize, n: usize) -> Result<()> {
    if (n as f64) < MIN_FILL_RATIO * budget as f64 {
        return Err(Error::config(format!(
            "{pool} pool exhausted: context reached {n} of {budget} tokens (needs at least {:.0}%)",
            MIN_FILL_RATIO * 100.0
        )));
    }
    Ok(())
}

pub fn build_list_context(pools: &CorpusPools, budget: usize, seed: u64, tok: &Tokenizer) -> Result<BuiltContext> {
    if pools.list.is_empty() {
        return Err(Error::config("list pool is empty"));
    }
    let smallest = pools.list.iter().map(|e| e.token_len).min().unwrap_or(0);
    if smallest + 2 > budget {
        return Err(Error::config(format!("budget of {budget} tokens cannot hold a single list element")));
    }
    let mut order: Vec<usize> = (0..pools.list.len()).collect();
    order.shuffle(&mut derived(seed, &["context", "list"]));
    let values: Vec<String> = order.iter().map(|&i| pools.list[i].value.clone()).collect();
    let costs: Vec<usize> = order.iter().map(|&i| pools.list[i].token_len + 2).collect();
    let (k, n) = pack_prefix(&costs, budget, &|k| tok.count(&render_list(&values[..k])));
    check_fill("list", budget, n)?;
    let elements = values[..k].to_vec();
    Ok(BuiltContext {
        text: render_list(&elements),
        truth: GroundTruth::List { elements },
        token_count: n,
    })
}

pub fn build_docs_context(
    pools: &CorpusPools,
    budget: usize,
    seed: u64,
    opts: &ContextOptions,
    tok: &Tokenizer,
) -> Result<BuiltContext> {
    let mut seen = HashSet::new();
    let mut texts: Vec<&String> = pools.doc_texts.iter().filter(|t| seen.insert(t.as_str())).collect();
    if texts.is_empty() {
        return Err(Error::config("document text pool is empty"));
    }
    let mut rng = derived(seed, &["context", "docs"]);
    texts.shuffle(&mut rng);
    let text_tokens: Vec<usize> = texts.iter().map(|t| tok.count(t)).collect();

    // Full candidate sequence: the duplication plan decides copy or fresh
    // at every position until fresh texts run out.
    let mut plan = DuplicationPlan::new(opts.duplication_rate)?;
    let mut factory = DocFactory::new(derive_seed(seed, &["context", "docs"]), &opts.source_labels)?;
    let mut text_of: Vec<usize> = Vec::new();
    let mut origin: Vec<Option<usize>> = Vec::new();
    let mut docs: Vec<DocRecord> = Vec::new();
    let mut next_fresh = 0;
    loop {
        let mut probe = plan.clone();
        let decision = probe.next(&mut rng);
        let t = match decision {
            Some(i) => text_of[i],
            None if next_fresh < texts.len() => {
                next_fresh += 1;
                next_fresh - 1
            }
            None => break,
        };
        plan = probe;
        origin.push(decision);
        text_of.push(t);
        docs.push(factory.make(texts[t]));
    }
    let costs: Vec<usize> = docs.iter().map(|d| tok.count(&d.to_line()) + 1).collect();
    let (k, mut n) = pack_prefix(&costs, budget, &|k| tok.count(&render_docs(&docs[..k])));
    docs.truncate(k);
    origin.truncate(k);
    text_of.truncate(k);

    // Swap fresh texts for unused longer ones to close the remaining gap.
    let mut unused: Vec<usize> = (0..texts.len()).filter(|t| !text_of.contains(t)).collect();
    let margin = (budget / 200).max(4);
    for _ in 0..32 {
        if n as f64 >= DOC_FILL_TARGET * budget as f64 {
            break;
        }
        let gap = budget - n;
        let mut best: Option<(usize, usize, usize)> = None;
        for j in (0..docs.len()).filter(|&j| origin[j].is_none()) {
            let copies = 1 + origin.iter().filter(|o| **o == Some(j)).count();
            for (ui, &u) in unused.iter().enumerate() {
                if text_tokens[u] <= text_tokens[text_of[j]] {
                    continue;
                }
                let delta = (text_tokens[u] - text_tokens[text_of[j]]) * copies;
                if delta + margin <= gap && best.is_none_or(|(_, _, d)| delta > d) {
                    best = Some((j, ui, delta));
                }
            }
        }
        let Some((j, ui, _)) = best else { break };
        let previous = docs.clone();
        let old = text_of[j];
        let new = unused[ui];
        for p in 0..docs.len() {
            if p == j || origin[p] == Some(j) {
                docs[p].text = texts[new].clone();
                if docs[p].title.is_some() {
                    docs[p].title = Some(title_of(texts[new]));
                }
                text_of[p] = new;
            }
        }
        let m = tok.count(&render_docs(&docs));
        if m > budget {
            docs = previous;
            for t in text_of.iter_mut().filter(|t| **t == new) {
                *t = old;
            }
            break;
        }
        unused[ui] = old;
        n = m;
    }
    check_fill("document", budget, n)?;
    Ok(BuiltContext {
        text: render_docs(&docs),
        truth: GroundTruth::Docs { docs },
        token_count: n,
    })
}

pub fn build_onedoc_context(
    pools: &CorpusPools,
    budget: usize,
    seed: u64,
    opts: &ContextOptions,
    tok: &Tokenizer,
) -> Result<BuiltContext> {
    let doc_opts = LongDocOptions {
        target_tokens: budget,
        tag_fraction: opts.tag_fraction,
        tag_types: opts.tag_types.clone(),
        min_tags: opts.min_tags,
    };
    let long = build_long_doc(seed, &pools.essays, &doc_opts, &PunctuationSplitter, tok)?;
    let n = tok.count(&long.document);
    check_fill("essay", budget, n)?;
    let truth = onedoc_truth(&long.document, &PunctuationSplitter);
    Ok(BuiltContext {
        text: long.document,
        truth,
        token_count: n,
    })
}

pub fn build_context(
    scenario: Scenario,
    pools: &CorpusPools,
    budget: &TokenBudget,
    seed: u64,
    opts: &ContextOptions,
    tok: &Tokenizer,
) -> Result<BuiltContext> {
    let b = budget.context_budget();
    match scenario {
        Scenario::List => build_list_context(pools, b, seed, tok),
        Scenario::MultiDoc => build_docs_context(pools, b, seed, opts, tok),
        Scenario::OneDoc => build_onedoc_context(pools, b, seed, opts, tok),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn list_round_trip() {
        let elems = vec!["a b".to_string(), "3f2b9c1e-8d4a-4b7e-9f00-12ab34cd56ef".to_string()];
        assert_eq!(parse_list(&render_list(&elems)).unwrap(), elems);
        assert_eq!(parse_list(&render_list(&[])).unwrap(), Vec::<String>::new());
    }

    #[test]
    fn pack_prefix_finds_largest_fitting() {
        let costs = vec![3usize; 100];
        // exact count: 2 per unit plus 1
        let (k, n) = pack_prefix(&costs, 50, &|k| 2 * k + 1);
        assert_eq!((k, n), (24, 49));
    }
}
