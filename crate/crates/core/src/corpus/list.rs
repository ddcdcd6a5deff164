use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derived, SeededRng};
use crate::tokenizer::Tokenizer;

pub const NL_MIN_TOKENS: usize = 5;
pub const NL_MAX_TOKENS: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementKind {
    Uuid,
    NlText,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ListElement {
    pub kind: ElementKind,
    pub value: String,
    pub token_len: usize,
}

/// A v4-format UUID built from the seeded stream.
pub fn seeded_uuid(rng: &mut SeededRng) -> String {
    let mut bytes = [0u8; 16];
    rng.fill_bytes(&mut bytes);
    uuid::Builder::from_random_bytes(bytes)
        .into_uuid()
        .hyphenated()
        .to_string()
}

/// Collapses whitespace and keeps texts usable as list elements: no double
/// quotes (they would break the quoted rendering) and within the token bounds.
/// Duplicates are dropped, first occurrence wins.
pub fn filter_nl_texts(texts: &[String], tok: &Tokenizer) -> Vec<String> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for raw in texts {
        let text = raw.split_whitespace().collect::<Vec<_>>().join(" ");
        if text.is_empty() || text.contains('"') || text.contains('\\') {
            continue;
        }
        let n = tok.count(&text);
        if (NL_MIN_TOKENS..=NL_MAX_TOKENS).contains(&n) && seen.insert(text.clone()) {
            out.push(text);
        }
    }
    out
}

pub fn build_list_pool(
    seed: u64,
    n_uuid: usize,
    nl_texts: &[String],
    tok: &Tokenizer,
) -> Result<Vec<ListElement>> {
    if n_uuid == 0 && nl_texts.is_empty() {
        return Err(Error::config("list pool needs UUIDs or natural-language texts"));
    }
    let mut rng = derived(seed, &["corpus", "list", "uuid"]);
    let mut seen = HashSet::with_capacity(n_uuid);
    let mut pool = Vec::with_capacity(n_uuid + nl_texts.len());
    while seen.len() < n_uuid {
        let value = seeded_uuid(&mut rng);
        if seen.insert(value.clone()) {
            pool.push(ListElement {
                kind: ElementKind::Uuid,
                token_len: tok.count(&value),
                value,
            });
        }
    }
    for text in nl_texts {
        let token_len = tok.count(text);
        if !(NL_MIN_TOKENS..=NL_MAX_TOKENS).contains(&token_len) {
            return Err(Error::config(format!(
                "list text has {token_len} tokens, outside {NL_MIN_TOKENS}..={NL_MAX_TOKENS}: {text}"
            )));
        }
        pool.push(ListElement {
            kind: ElementKind::NlText,
            value: text.clone(),
            token_len,
        });
    }
    let mut rng = derived(seed, &["corpus", "list", "shuffle"]);
    pool.shuffle(&mut rng);
    Ok(pool)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tokenizer::default_tokenizer;

    fn texts(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("Describe the quiet garden number {i} in detail.")).collect()
    }

    #[test]
    fn counts_add_and_uuids_are_unique() {
        let tok = default_tokenizer();
        let pool = build_list_pool(7, 10, &texts(10), tok).unwrap();
        assert_eq!(pool.len(), 20);
        let uuids: HashSet<_> = pool
            .iter()
            .filter(|e| e.kind == ElementKind::Uuid)
            .map(|e| e.value.clone())
            .collect();
        assert_eq!(uuids.len(), 10);
        for u in &uuids {
            let parsed = uuid::Uuid::parse_str(u).unwrap();
            assert_eq!(parsed.get_version_num(), 4);
            assert_eq!(parsed.hyphenated().to_string(), *u);
        }
    }

    #[test]
    fn seeded_order() {
        let tok = default_tokenizer();
        let a = build_list_pool(7, 10, &texts(10), tok).unwrap();
        let b = build_list_pool(7, 10, &texts(10), tok).unwrap();
        let c = build_list_pool(8, 10, &texts(10), tok).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn empty_inputs_rejected() {
        assert!(matches!(
            build_list_pool(1, 0, &[], default_tokenizer()),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn filter_drops_quotes_and_out_of_range() {
        let tok = default_tokenizer();
        let raw = vec![
            "Too short.".to_string(),
            "Explain  the   \"quoted\" thing to a child today.".to_string(),
            "Explain the river bridge  to a curious child today.".to_string(),
            "Explain the river bridge to a curious child today.".to_string(),
        ];
        assert_eq!(
            filter_nl_texts(&raw, tok),
            vec!["Explain the river bridge to a curious child today.".to_string()]
        );
    }
}
