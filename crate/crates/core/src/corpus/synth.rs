//! Seeded pseudo-prose, so that pools can be built without third-party
//! corpora. The output is grammatical-looking filler with a large enough
//! combinatorial space that collisions are rare; callers dedupe anyway.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::rng::{derived, SeededRng};
use crate::tokenizer::Tokenizer;

const DETERMINERS: &[&str] = &["the", "a", "every", "one", "that", "this", "each", "some"];

const ADJECTIVES: &[&str] = &[
    "quiet", "remote", "careful", "ancient", "modern", "fragile", "bright", "hidden", "steady",
    "curious", "narrow", "public", "private", "rural", "urban", "formal", "casual", "bold",
    "gentle", "rapid", "silent", "crowded", "empty", "local", "distant", "practical", "unusual",
    "familiar", "complex", "simple", "early", "late", "northern", "southern", "coastal", "inland",
    "digital", "wooden", "seasonal", "temporary", "reliable", "uncertain", "ambitious", "modest",
];

const NOUNS: &[&str] = &[
    "committee", "river", "startup", "garden", "village", "engineer", "report", "market",
    "library", "teacher", "budget", "harbor", "council", "factory", "museum", "student", "farmer",
    "festival", "journal", "bridge", "network", "kitchen", "mayor", "orchestra", "archive",
    "hospital", "district", "painter", "laboratory", "railway", "newspaper", "founder", "investor",
    "program", "policy", "schedule", "neighborhood", "warehouse", "editor", "volunteer", "agency",
    "survey", "platform", "workshop", "forest", "island", "studio", "courtyard", "pilot", "tenant",
    "contract", "ledger", "prototype", "campaign", "harvest", "reservoir", "tournament", "clinic",
];

const VERBS: &[&str] = &[
    "reviews", "builds", "questions", "supports", "delays", "funds", "describes", "inspects",
    "replaces", "welcomes", "measures", "ignores", "protects", "expands", "studies", "rejects",
    "organizes", "shapes", "follows", "overlooks", "restores", "publishes", "negotiates",
    "simplifies", "tracks", "sponsors", "challenges", "documents", "prepares", "reshapes",
];

const PREPOSITIONS: &[&str] = &[
    "near", "beside", "without", "after", "before", "across", "within", "beyond", "under",
    "around", "behind", "despite",
];

const ADVERBS: &[&str] = &[
    "Eventually", "Meanwhile", "Surprisingly", "Last year", "In practice", "By contrast",
    "Over time", "Occasionally", "Afterwards", "For now", "In the end", "Once again",
];

const CONNECTORS: &[&str] = &["and", "but", "while", "so", "because", "although"];

const IMPERATIVES: &[&str] = &[
    "Describe", "Explain", "Summarize", "List", "Compare", "Suggest", "Outline", "Evaluate",
    "Identify", "Design", "Propose", "Classify", "Rewrite", "Translate", "Estimate", "Illustrate",
    "Draft", "Recommend", "Analyze", "Predict", "Name", "Plan", "Critique", "Define",
];

const TAILS: &[&str] = &[
    "and explain why it matters",
    "in three short sentences",
    "for a general audience",
    "using simple language",
    "with one concrete example",
    "and note any risks",
    "in under fifty words",
    "from the perspective of a newcomer",
];

fn pick<'a>(rng: &mut SeededRng, bank: &[&'a str]) -> &'a str {
    bank.choose(rng).copied().expect("word banks are non-empty")
}

fn noun_phrase(rng: &mut SeededRng) -> String {
    if rng.gen_bool(0.5) {
        format!("{} {} {}", pick(rng, DETERMINERS), pick(rng, ADJECTIVES), pick(rng, NOUNS))
    } else {
        format!("{} {}", pick(rng, DETERMINERS), pick(rng, NOUNS))
    }
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

pub fn sentence(rng: &mut SeededRng) -> String {
    let body = match rng.gen_range(0..5) {
        0 => format!(
            "{} {} {} {} {}",
            noun_phrase(rng),
            pick(rng, VERBS),
            noun_phrase(rng),
            pick(rng, PREPOSITIONS),
            noun_phrase(rng)
        ),
        1 => format!(
            "{}, {} {} {}",
            pick(rng, ADVERBS),
            noun_phrase(rng),
            pick(rng, VERBS),
            noun_phrase(rng)
        ),
        2 => format!(
            "{} {} {}, {} {} {} {}",
            noun_phrase(rng),
            pick(rng, VERBS),
            noun_phrase(rng),
            pick(rng, CONNECTORS),
            noun_phrase(rng),
            pick(rng, VERBS),
            noun_phrase(rng)
        ),
        3 => format!(
            "when {} {} {}, {} {} {} {} {}",
            noun_phrase(rng),
            pick(rng, VERBS),
            noun_phrase(rng),
            noun_phrase(rng),
            pick(rng, VERBS),
            noun_phrase(rng),
            pick(rng, PREPOSITIONS),
            noun_phrase(rng)
        ),
        _ => format!(
            "{} {} {} {} {} {} {}",
            noun_phrase(rng),
            pick(rng, VERBS),
            noun_phrase(rng),
            pick(rng, CONNECTORS),
            noun_phrase(rng),
            pick(rng, VERBS),
            noun_phrase(rng)
        ),
    };
    let end = match rng.gen_range(0..20) {
        0 => '?',
        1 => '!',
        _ => '.',
    };
    let mut s = capitalize(&body);
    s.push(end);
    s
}

/// An imperative, instruction-like line such as the ones used as list noise.
pub fn instruction_text(rng: &mut SeededRng) -> String {
    let mut s = format!(
        "{} {} {} {}",
        pick(rng, IMPERATIVES),
        noun_phrase(rng),
        pick(rng, PREPOSITIONS),
        noun_phrase(rng)
    );
    if rng.gen_bool(0.5) {
        s.push(' ');
        s.push_str(pick(rng, TAILS));
    }
    s.push('.');
    s
}

/// A paragraph-free passage whose token count lies in `[min_tokens, max_tokens]`.
pub fn passage(rng: &mut SeededRng, tok: &Tokenizer, min_tokens: usize, max_tokens: usize) -> String {
    let target = rng.gen_range(min_tokens..=max_tokens);
    loop {
        let mut text = String::new();
        let mut estimate = 0;
        while estimate < target {
            let s = sentence(rng);
            estimate += tok.count(&s);
            if !text.is_empty() {
                text.push(' ');
            }
            text.push_str(&s);
        }
        let n = tok.count(&text);
        if (min_tokens..=max_tokens).contains(&n) {
            return text;
        }
        if n > max_tokens {
            let cut = tok.truncate_right(&text, max_tokens).trim_end().to_string();
            if tok.count(&cut) >= min_tokens {
                return cut;
            }
        }
    }
}

pub fn essay(rng: &mut SeededRng) -> String {
    let paragraphs = rng.gen_range(8..=16);
    (0..paragraphs)
        .map(|_| {
            let sentences = rng.gen_range(4..=9);
            (0..sentences).map(|_| sentence(rng)).collect::<Vec<_>>().join(" ")
        })
        .collect::<Vec<_>>()
        .join("\n\n")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSizes {
    pub nl_texts: usize,
    pub doc_texts: usize,
    pub essays: usize,
}

impl Default for SyntheticSizes {
    /// Enough material for the longest default interval (128k tokens).
    fn default() -> Self {
        SyntheticSizes {
            nl_texts: 3600,
            doc_texts: 380,
            essays: 150,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub nl_texts: Vec<String>,
    pub doc_texts: Vec<String>,
    pub essays: Vec<String>,
}

pub fn synthetic_corpus(seed: u64, sizes: SyntheticSizes, tok: &Tokenizer) -> SyntheticCorpus {
    let mut rng = derived(seed, &["synthetic", "nl_texts"]);
    let mut seen = std::collections::HashSet::new();
    let mut nl_texts = Vec::with_capacity(sizes.nl_texts);
    while nl_texts.len() < sizes.nl_texts {
        let t = instruction_text(&mut rng);
        if seen.insert(t.clone()) {
            nl_texts.push(t);
        }
    }

    let mut rng = derived(seed, &["synthetic", "doc_texts"]);
    let doc_texts = (0..sizes.doc_texts)
        .map(|_| passage(&mut rng, tok, 300, 500))
        .collect();

    let mut rng = derived(seed, &["synthetic", "essays"]);
    let essays = (0..sizes.essays).map(|_| essay(&mut rng)).collect();

    SyntheticCorpus {
        nl_texts,
        doc_texts,
        essays,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use crate::tokenizer::default_tokenizer;

    #[test]
    fn instruction_texts_fit_list_bounds() {
        let tok = default_tokenizer();
        let mut rng = seeded(1);
        for _ in 0..300 {
            let t = instruction_text(&mut rng);
            let n = tok.count(&t);
            assert!((5..=40).contains(&n), "{t} has {n} tokens");
            assert!(!t.contains('"'));
        }
    }

    #[test]
    fn passages_respect_bounds() {
        let tok = default_tokenizer();
        let mut rng = seeded(2);
        for _ in 0..10 {
            let p = passage(&mut rng, tok, 300, 500);
            let n = tok.count(&p);
            assert!((300..=500).contains(&n), "{n}");
        }
    }

    #[test]
    fn corpus_is_deterministic() {
        let tok = default_tokenizer();
        let sizes = SyntheticSizes {
            nl_texts: 20,
            doc_texts: 2,
            essays: 2,
        };
        let a = synthetic_corpus(9, sizes, tok);
        let b = synthetic_corpus(9, sizes, tok);
        assert_eq!(a.nl_texts, b.nl_texts);
        assert_eq!(a.doc_texts, b.doc_texts);
        assert_eq!(a.essays, b.essays);
    }
}
