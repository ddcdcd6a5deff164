use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derived, SeededRng};
use crate::tokenizer::Tokenizer;

pub const DOC_MIN_TOKENS: usize = 300;
pub const DOC_MAX_TOKENS: usize = 500;
pub const DEFAULT_DUPLICATION_RATE: f64 = 0.25;
pub const FIELD_OMIT_PROBABILITY: f64 = 0.2;
pub const DEFAULT_SOURCE_LABELS: [&str; 6] =
    ["newswire", "blog", "report", "forum", "encyclopedia", "transcript"];

/// One MultiDoc document. Field order is the serialized order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocRecord {
    pub id: String,
    #[serde(rename = "iD2")]
    pub id2: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    pub date: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    pub text: String,
}

impl DocRecord {
    /// Single-line JSON form used inside prompts.
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("doc records serialize")
    }
}

/// Title derived from the opening words of a text.
pub fn title_of(text: &str) -> String {
    let words: Vec<&str> = text.split_whitespace().take(6).collect();
    words
        .join(" ")
        .trim_end_matches(|c: char| c.is_ascii_punctuation())
        .to_string()
}

fn days_in_month(year: u32, month: u32) -> u32 {
    match month {
        2 if (year.is_multiple_of(4) && !year.is_multiple_of(100)) || year.is_multiple_of(400) => 29,
        2 => 28,
        4 | 6 | 9 | 11 => 30,
        _ => 31,
    }
}

/// Issues documents with pool-unique identifiers and independently drawn
/// metadata.
pub struct DocFactory {
    rng: SeededRng,
    source_labels: Vec<String>,
    ids: HashSet<String>,
    id2s: HashSet<String>,
}

impl DocFactory {
    pub fn new(seed: u64, source_labels: &[String]) -> Result<Self> {
        if source_labels.is_empty() {
            return Err(Error::config("source label set is empty"));
        }
        Ok(DocFactory {
            rng: derived(seed, &["corpus", "docs", "fields"]),
            source_labels: source_labels.to_vec(),
            ids: HashSet::new(),
            id2s: HashSet::new(),
        })
    }

    fn fresh_id(&mut self) -> String {
        loop {
            let v: u32 = self.rng.gen();
            let id = format!("{v:08x}");
            if self.ids.insert(id.clone()) {
                return id;
            }
        }
    }

    fn fresh_id2(&mut self) -> String {
        const ALPHABET: &[u8] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
        loop {
            let id: String = (0..6)
                .map(|_| ALPHABET[self.rng.gen_range(0..ALPHABET.len())] as char)
                .collect();
            if self.id2s.insert(id.clone()) {
                return id;
            }
        }
    }

    fn date(&mut self) -> String {
        let year = self.rng.gen_range(2001..=2023);
        let month = self.rng.gen_range(1..=12);
        let day = self.rng.gen_range(1..=days_in_month(year, month));
        format!("{year:04}-{month:02}-{day:02}")
    }

    pub fn make(&mut self, text: &str) -> DocRecord {
        let id = self.fresh_id();
        let id2 = self.fresh_id2();
        let date = self.date();
        let title = (!self.rng.gen_bool(FIELD_OMIT_PROBABILITY)).then(|| title_of(text));
        let source = if self.rng.gen_bool(FIELD_OMIT_PROBABILITY) {
            None
        } else {
            Some(self.source_labels.choose(&mut self.rng).expect("non-empty").clone())
        };
        DocRecord {
            id,
            id2,
            title,
            date,
            source,
            text: text.to_string(),
        }
    }
}

/// Number of copies among `n` documents at `rate`, rounding halves up.
pub fn duplicate_count(n: usize, rate: f64) -> usize {
    (n as f64 * rate + 0.5 + 1e-9).floor() as usize
}

/// Tracks which positions of a growing document sequence are copies, keeping
/// the copy count at `duplicate_count(len, rate)` whenever that is feasible.
#[derive(Debug, Clone)]
pub struct DuplicationPlan {
    rate: f64,
    len: usize,
    copies: usize,
    originals: Vec<usize>,
    copied: HashSet<usize>,
}

impl DuplicationPlan {
    pub fn new(rate: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::config(format!("duplication rate {rate} must lie in [0, 1)")));
        }
        Ok(DuplicationPlan {
            rate,
            len: 0,
            copies: 0,
            originals: Vec::new(),
            copied: HashSet::new(),
        })
    }

    /// Decides the next position: `None` for a fresh text, `Some(i)` to copy
    /// the text at position `i`.
    pub fn next(&mut self, rng: &mut SeededRng) -> Option<usize> {
        let pos = self.len;
        self.len += 1;
        let want = duplicate_count(self.len, self.rate);
        if self.copies < want && !self.originals.is_empty() {
            let fresh: Vec<usize> = self
                .originals
                .iter()
                .copied()
                .filter(|i| !self.copied.contains(i))
                .collect();
            let pick = if fresh.is_empty() {
                *self.originals.choose(rng).expect("non-empty")
            } else {
                *fresh.choose(rng).expect("non-empty")
            };
            self.copied.insert(pick);
            self.copies += 1;
            Some(pick)
        } else {
            self.originals.push(pos);
            None
        }
    }

    pub fn copies(&self) -> usize {
        self.copies
    }

    pub fn uniques(&self) -> usize {
        self.originals.len()
    }
}

pub fn build_doc_pool(
    seed: u64,
    texts: &[String],
    n_docs: usize,
    duplication_rate: f64,
    source_labels: &[String],
) -> Result<Vec<DocRecord>> {
    if texts.is_empty() {
        return Err(Error::config("document text pool is empty"));
    }
    let mut seen = HashSet::new();
    let mut unique: Vec<&String> = texts.iter().filter(|t| seen.insert(t.as_str())).collect();
    let wanted = duplicate_count(n_docs, duplication_rate);
    let needed = n_docs.saturating_sub(wanted);
    if unique.len() < needed {
        return Err(Error::config(format!(
            "{n_docs} documents at duplication rate {duplication_rate} need {needed} distinct texts, only {} available",
            unique.len()
        )));
    }
    if n_docs > 0 && wanted >= n_docs {
        return Err(Error::config(format!(
            "duplication rate {duplication_rate} leaves no original among {n_docs} documents"
        )));
    }
    let mut rng = derived(seed, &["corpus", "docs", "order"]);
    unique.shuffle(&mut rng);
    let mut factory = DocFactory::new(seed, source_labels)?;
    let mut plan = DuplicationPlan::new(duplication_rate)?;
    let mut next_text = unique.into_iter();
    let mut docs: Vec<DocRecord> = Vec::with_capacity(n_docs);
    for _ in 0..n_docs {
        let text = match plan.next(&mut rng) {
            Some(i) => docs[i].text.clone(),
            None => next_text.next().expect("checked above").clone(),
        };
        docs.push(factory.make(&text));
    }
    debug_assert_eq!(plan.copies(), wanted);
    Ok(docs)
}

/// Keeps texts inside the document token bounds, truncating long ones.
pub fn fit_doc_texts(texts: &[String], tok: &Tokenizer) -> Vec<String> {
    texts
        .iter()
        .filter_map(|t| {
            let t = tok.truncate_right(t.trim(), DOC_MAX_TOKENS).trim_end();
            (tok.count(t) >= DOC_MIN_TOKENS).then(|| t.to_string())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels() -> Vec<String> {
        DEFAULT_SOURCE_LABELS.iter().map(|s| s.to_string()).collect()
    }

    fn texts(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("text number {i}")).collect()
    }

    // Copies: documents whose text already appeared earlier in the pool.
    fn copies_by_pairwise_scan(docs: &[DocRecord]) -> usize {
        (0..docs.len())
            .filter(|&j| (0..j).any(|i| docs[i].text == docs[j].text))
            .count()
    }

    #[test]
    fn eight_docs_quarter_rate() {
        let docs = build_doc_pool(3, &texts(20), 8, 0.25, &labels()).unwrap();
        assert_eq!(docs.len(), 8);
        assert_eq!(copies_by_pairwise_scan(&docs), 2);
    }

    #[test]
    fn zero_rate_all_distinct() {
        let docs = build_doc_pool(3, &texts(20), 8, 0.0, &labels()).unwrap();
        let set: HashSet<_> = docs.iter().map(|d| &d.text).collect();
        assert_eq!(set.len(), 8);
    }

    #[test]
    fn identifiers_unique_and_shaped() {
        let docs = build_doc_pool(5, &texts(200), 100, 0.25, &labels()).unwrap();
        let ids: HashSet<_> = docs.iter().map(|d| &d.id).collect();
        let id2s: HashSet<_> = docs.iter().map(|d| &d.id2).collect();
        assert_eq!(ids.len(), 100);
        assert_eq!(id2s.len(), 100);
        for d in &docs {
            assert_eq!(d.id.len(), 8);
            assert!(d.id.chars().all(|c| c.is_ascii_hexdigit()));
            assert_eq!(d.id2.len(), 6);
            assert!(d.id2.chars().all(|c| c.is_ascii_uppercase() || c.is_ascii_digit()));
        }
        assert!(docs.iter().any(|d| d.title.is_none()));
        assert!(docs.iter().any(|d| d.source.is_none()));
    }

    #[test]
    fn too_few_texts() {
        assert!(matches!(
            build_doc_pool(1, &texts(5), 8, 0.25, &labels()),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn line_field_order() {
        let mut f = DocFactory::new(1, &labels()).unwrap();
        let d = DocRecord {
            title: Some("T".into()),
            source: Some("blog".into()),
            ..f.make("x y z")
        };
        let line = d.to_line();
        let pos = |k: &str| line.find(&format!("\"{k}\"")).unwrap();
        assert!(pos("id") < pos("iD2"));
        assert!(pos("iD2") < pos("title"));
        assert!(pos("title") < pos("date"));
        assert!(pos("date") < pos("source"));
        assert!(pos("source") < pos("text"));
    }

    #[test]
    fn prefix_counts_track_rate() {
        let mut rng = crate::rng::seeded(1);
        let mut plan = DuplicationPlan::new(0.25).unwrap();
        for n in 1..=200 {
            plan.next(&mut rng);
            assert_eq!(plan.copies(), duplicate_count(n, 0.25));
        }
    }
}
