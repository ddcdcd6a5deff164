//! Long documents with inline key-sentence markers.
//!
//! A tagged sentence is written as `[[KEY|<type>|<id>]] <sentence> [[/KEY]]`.
//! Ids are one uppercase letter (the type's initial) followed by three digits.

use std::collections::{HashMap, HashSet};
use std::sync::LazyLock;

use rand::seq::{IteratorRandom, SliceRandom};
use rand::Rng;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::corpus::sentences::SentenceSplitter;
use crate::error::{Error, Result};
use crate::rng::{derived, SeededRng};
use crate::tokenizer::Tokenizer;

pub const DEFAULT_TAG_FRACTION: f64 = 0.05;
pub const DEFAULT_TAG_TYPES: [&str; 5] = ["Topic", "Evidence", "Concession", "Conclusion", "Example"];
const MIN_TAGGABLE_WORDS: usize = 4;

static TAG_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"\[\[KEY\|([A-Za-z]+)\|([A-Z][0-9]{3})\]\] (.+?) \[\[/KEY\]\]").expect("valid regex")
});

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TaggedSentence {
    pub sentence: String,
    pub tag_type: String,
    pub tag_id: String,
    /// Byte range of `sentence` inside the marked document.
    pub char_span: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LongDoc {
    pub document: String,
    pub tags: Vec<TaggedSentence>,
}

impl LongDoc {
    /// Sentences of the document with markers removed, in order.
    pub fn plain_sentences(&self, splitter: &dyn SentenceSplitter) -> Vec<String> {
        let plain = strip_markers(&self.document);
        splitter.split(&plain).into_iter().map(str::to_string).collect()
    }
}

pub fn open_marker(tag_type: &str, tag_id: &str) -> String {
    format!("[[KEY|{tag_type}|{tag_id}]] ")
}

pub const CLOSE_MARKER: &str = " [[/KEY]]";

pub fn strip_markers(document: &str) -> String {
    TAG_RE.replace_all(document, "$3").into_owned()
}

/// Recovers the tags embedded in a marked document.
pub fn parse_tags(document: &str) -> Vec<TaggedSentence> {
    TAG_RE
        .captures_iter(document)
        .map(|c| {
            let m = c.get(3).expect("group 3 always participates");
            TaggedSentence {
                sentence: m.as_str().to_string(),
                tag_type: c[1].to_string(),
                tag_id: c[2].to_string(),
                char_span: (m.start(), m.end()),
            }
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct LongDocOptions {
    pub target_tokens: usize,
    pub tag_fraction: f64,
    pub tag_types: Vec<String>,
    pub min_tags: usize,
}

impl LongDocOptions {
    pub fn new(target_tokens: usize) -> Self {
        LongDocOptions {
            target_tokens,
            tag_fraction: DEFAULT_TAG_FRACTION,
            tag_types: DEFAULT_TAG_TYPES.iter().map(|s| s.to_string()).collect(),
            min_tags: 1,
        }
    }
}

fn paragraphs_of(essay: &str, splitter: &dyn SentenceSplitter) -> Vec<Vec<String>> {
    essay
        .split("\n\n")
        .map(|p| {
            splitter
                .split(p.trim())
                .into_iter()
                .map(|s| s.split_whitespace().collect::<Vec<_>>().join(" "))
                .filter(|s| !s.is_empty() && !s.contains("[[") && !s.contains("]]"))
                .collect::<Vec<_>>()
        })
        .filter(|p| !p.is_empty())
        .collect()
}

/// Takes paragraphs in order until `budget` tokens are reached, trimming the
/// last paragraph sentence by sentence.
fn fill(paragraphs: &[Vec<String>], budget: usize, tok: &Tokenizer) -> Vec<Vec<String>> {
    let mut out: Vec<Vec<String>> = Vec::new();
    let mut running = 0usize;
    'outer: for para in paragraphs {
        let mut kept = Vec::new();
        for s in para {
            let cost = tok.count(s) + 1;
            if running + cost > budget {
                if !kept.is_empty() {
                    out.push(kept);
                }
                break 'outer;
            }
            running += cost;
            kept.push(s.clone());
        }
        out.push(kept);
    }
    out
}

fn render(paragraphs: &[Vec<String>], markers: &HashMap<(usize, usize), (String, String)>) -> String {
    paragraphs
        .iter()
        .enumerate()
        .map(|(p, sents)| {
            sents
                .iter()
                .enumerate()
                .map(|(s, text)| match markers.get(&(p, s)) {
                    Some((ty, id)) => format!("{}{text}{CLOSE_MARKER}", open_marker(ty, id)),
                    None => text.clone(),
                })
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect::<Vec<_>>()
        .join("\n\n")
}

fn choose_tags(
    paragraphs: &[Vec<String>],
    opts: &LongDocOptions,
    rng: &mut SeededRng,
) -> Result<HashMap<(usize, usize), (String, String)>> {
    let mut occurrences: HashMap<&str, usize> = HashMap::new();
    for s in paragraphs.iter().flatten() {
        *occurrences.entry(s.as_str()).or_default() += 1;
    }
    let total: usize = paragraphs.iter().map(Vec::len).sum();
    let candidates: Vec<(usize, usize)> = paragraphs
        .iter()
        .enumerate()
        .flat_map(|(p, sents)| sents.iter().enumerate().map(move |(s, t)| (p, s, t)))
        .filter(|(_, _, t)| occurrences[t.as_str()] == 1 && t.split_whitespace().count() >= MIN_TAGGABLE_WORDS)
        .map(|(p, s, _)| (p, s))
        .collect();
    let wanted = ((total as f64 * opts.tag_fraction).round() as usize).max(opts.min_tags);
    if candidates.len() < wanted {
        return Err(Error::config(format!(
            "document has {} taggable sentences, {wanted} tags requested",
            candidates.len()
        )));
    }
    let mut chosen = candidates.into_iter().choose_multiple(rng, wanted);
    chosen.sort();
    let mut used_ids = HashSet::new();
    let mut markers = HashMap::new();
    for pos in chosen {
        let ty = opts.tag_types.choose(rng).expect("non-empty tag types").clone();
        let initial = ty.chars().next().map_or('K', |c| c.to_ascii_uppercase());
        let id = loop {
            let id = format!("{initial}{:03}", rng.gen_range(0..1000));
            if used_ids.insert(id.clone()) {
                break id;
            }
        };
        markers.insert(pos, (ty, id));
    }
    Ok(markers)
}

pub fn build_long_doc(
    seed: u64,
    essays: &[String],
    opts: &LongDocOptions,
    splitter: &dyn SentenceSplitter,
    tok: &Tokenizer,
) -> Result<LongDoc> {
    if essays.is_empty() {
        return Err(Error::config("essay pool is empty"));
    }
    if !(opts.tag_fraction > 0.0 && opts.tag_fraction < 1.0) {
        return Err(Error::config(format!("tag fraction {} must lie in (0, 1)", opts.tag_fraction)));
    }
    if opts.tag_types.is_empty() || opts.tag_types.iter().any(|t| !t.chars().all(|c| c.is_ascii_alphabetic()) || t.is_empty()) {
        return Err(Error::config("tag types must be non-empty alphabetic labels"));
    }
    let mut order: Vec<&String> = essays.iter().collect();
    order.shuffle(&mut derived(seed, &["corpus", "onedoc", "order"]));
    let mut paragraphs = Vec::new();
    let mut approx = 0usize;
    for essay in order {
        for p in paragraphs_of(essay, splitter) {
            approx += p.iter().map(|s| tok.count(s) + 1).sum::<usize>();
            paragraphs.push(p);
        }
        if approx > opts.target_tokens {
            break;
        }
    }
    let smallest = paragraphs.iter().flatten().map(|s| tok.count(s)).min().unwrap_or(usize::MAX);
    if smallest > opts.target_tokens {
        return Err(Error::config(format!(
            "target of {} tokens is smaller than one sentence",
            opts.target_tokens
        )));
    }

    let per_tag_overhead = tok.count(&open_marker("Conclusion", "C000")) + tok.count(CLOSE_MARKER) + 2;
    let mut budget = opts.target_tokens;
    loop {
        let total_estimate = (budget / 20).max(1);
        let tags_estimate = ((total_estimate as f64 * opts.tag_fraction).ceil() as usize).max(opts.min_tags);
        let plain_budget = budget.saturating_sub(tags_estimate * per_tag_overhead);
        let body = fill(&paragraphs, plain_budget, tok);
        let mut rng = derived(seed, &["corpus", "onedoc", "tags"]);
        let markers = choose_tags(&body, opts, &mut rng)?;
        let document = render(&body, &markers);
        let n = tok.count(&document);
        if n <= opts.target_tokens {
            let tags = parse_tags(&document);
            return Ok(LongDoc { document, tags });
        }
        budget = budget.saturating_sub((n - opts.target_tokens).max(8));
        if budget == 0 {
            return Err(Error::config("cannot fit a tagged document in the target"));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::sentences::PunctuationSplitter;
    use crate::corpus::synth::essay;
    use crate::rng::seeded;
    use crate::tokenizer::default_tokenizer;

    fn essays(n: usize) -> Vec<String> {
        let mut rng = seeded(11);
        (0..n).map(|_| essay(&mut rng)).collect()
    }

    #[test]
    fn markers_round_trip() {
        let doc = format!("Plain one. {}Key sentence here.{CLOSE_MARKER} Plain two.", open_marker("Topic", "T001"));
        let tags = parse_tags(&doc);
        assert_eq!(tags.len(), 1);
        assert_eq!(tags[0].sentence, "Key sentence here.");
        assert_eq!(&doc[tags[0].char_span.0..tags[0].char_span.1], "Key sentence here.");
        assert_eq!(strip_markers(&doc), "Plain one. Key sentence here. Plain two.");
    }

    #[test]
    fn long_doc_respects_budget_and_tags() {
        let tok = default_tokenizer();
        let pool = essays(8);
        let opts = LongDocOptions::new(4096);
        let doc = build_long_doc(5, &pool, &opts, &PunctuationSplitter, tok).unwrap();
        let n = tok.count(&doc.document);
        assert!((3600..=4096).contains(&n), "{n}");
        let ids: HashSet<_> = doc.tags.iter().map(|t| &t.tag_id).collect();
        assert_eq!(ids.len(), doc.tags.len());
        let plain = doc.plain_sentences(&PunctuationSplitter);
        let expected = ((plain.len() as f64) * 0.05).round() as usize;
        assert_eq!(doc.tags.len(), expected.max(1));
        for t in &doc.tags {
            assert_eq!(&doc.document[t.char_span.0..t.char_span.1], t.sentence);
            assert!(plain.contains(&t.sentence));
        }
        let again = build_long_doc(5, &pool, &opts, &PunctuationSplitter, tok).unwrap();
        assert_eq!(doc, again);
    }

    #[test]
    fn forced_minimum() {
        let tok = default_tokenizer();
        let mut opts = LongDocOptions::new(300);
        opts.tag_fraction = 0.001;
        opts.min_tags = 1;
        let doc = build_long_doc(1, &essays(2), &opts, &PunctuationSplitter, tok).unwrap();
        assert_eq!(doc.tags.len(), 1);
    }

    #[test]
    fn tiny_target_rejected() {
        let tok = default_tokenizer();
        let opts = LongDocOptions::new(2);
        assert!(matches!(
            build_long_doc(1, &essays(1), &opts, &PunctuationSplitter, tok),
            Err(Error::Config(_))
        ));
    }
}
