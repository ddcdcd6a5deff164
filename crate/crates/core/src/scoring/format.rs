//! Graded format checks and the count-based partial credit.
//!
//! Structured answers are graded on a four-step ladder: the right symbols
//! appear, the whole answer parses (or failing that, an embedded span does),
//! and the parsed value has the expected shape. The raw ladder value is
//! rescaled to the weight of the rubric point.

use regex::Regex;
use serde_json::Value;

use crate::scoring::extract::{normalize, quoted_spans};
use crate::scoring::rubric::KeyPattern;

/// Outcome of the parse step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseLevel {
    Whole,
    Embedded,
    Failed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LadderCheck {
    pub symbols: bool,
    pub parse: ParseLevel,
    pub shape: bool,
}

impl LadderCheck {
    /// Points on the 0..=4 ladder.
    pub fn raw(&self) -> u32 {
        let parse = match self.parse {
            ParseLevel::Whole => 2,
            ParseLevel::Embedded => 1,
            ParseLevel::Failed => 0,
        };
        u32::from(self.symbols) + parse + u32::from(self.shape)
    }

    pub fn scaled(&self, weight: f64) -> f64 {
        f64::from(self.raw()) * weight / 4.0
    }
}

/// First span that opens with `open` and closes at the matching `close`,
/// ignoring delimiters inside JSON string literals.
pub fn balanced_span(text: &str, open: char, close: char) -> Option<&str> {
    for (start, _) in text.match_indices(open) {
        let mut depth = 0usize;
        let mut in_string = false;
        let mut escaped = false;
        for (off, c) in text[start..].char_indices() {
            if in_string {
                match c {
                    _ if escaped => escaped = false,
                    '\\' => escaped = true,
                    '"' => in_string = false,
                    _ => {}
                }
                continue;
            }
            if c == '"' {
                in_string = true;
            } else if c == open {
                depth += 1;
            } else if c == close {
                depth -= 1;
                if depth == 0 {
                    return Some(&text[start..start + off + c.len_utf8()]);
                }
            }
        }
    }
    None
}

fn count(text: &str, chars: &[char]) -> usize {
    text.chars().filter(|c| chars.contains(c)).count()
}

/// Parses the whole answer, else the first balanced span, keeping values
/// accepted by `accept`.
fn parse_ladder(answer: &str, open: char, close: char, accept: fn(&Value) -> bool) -> (ParseLevel, Option<Value>) {
    if let Ok(v) = serde_json::from_str::<Value>(answer.trim()) {
        if accept(&v) {
            return (ParseLevel::Whole, Some(v));
        }
    }
    if let Some(span) = balanced_span(answer, open, close) {
        if let Ok(v) = serde_json::from_str::<Value>(span) {
            if accept(&v) {
                return (ParseLevel::Embedded, Some(v));
            }
        }
    }
    (ParseLevel::Failed, None)
}

pub fn key_matches(pattern: KeyPattern, key: &str) -> bool {
    match pattern {
        KeyPattern::Any => !key.is_empty(),
        KeyPattern::DocId => key.len() == 8 && key.bytes().all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b)),
        KeyPattern::DocAttr => {
            key_matches(KeyPattern::DocId, key)
                || (key.len() == 6 && key.bytes().all(|b| b.is_ascii_digit() || b.is_ascii_uppercase()))
        }
        KeyPattern::TagId => {
            let b = key.as_bytes();
            b.len() == 4 && b[0].is_ascii_uppercase() && b[1..].iter().all(u8::is_ascii_digit)
        }
    }
}

/// Ladder check for a JSON object answer whose keys follow `keys` and whose
/// values are strings. `values_as_keys` also applies the key pattern to values.
pub fn dict_check(answer: &str, keys: KeyPattern, values_as_keys: bool) -> LadderCheck {
    let symbols = count(answer, &['{', '}']) >= 2 && count(answer, &['"']) >= 4 && count(answer, &[':']) >= 1;
    let (parse, value) = parse_ladder(answer, '{', '}', Value::is_object);
    let shape = value
        .as_ref()
        .and_then(Value::as_object)
        .is_some_and(|map| {
            !map.is_empty()
                && map.iter().all(|(k, v)| {
                    key_matches(keys, k)
                        && v.as_str()
                            .is_some_and(|s| !s.trim().is_empty() && (!values_as_keys || key_matches(keys, s)))
                })
        });
    LadderCheck { symbols, parse, shape }
}

/// Ladder check for a JSON array of non-empty strings.
pub fn list_check(answer: &str) -> LadderCheck {
    let symbols = count(answer, &['[', ']']) >= 2 && count(answer, &['"']) >= 2;
    let (parse, value) = parse_ladder(answer, '[', ']', Value::is_array);
    let shape = value.as_ref().and_then(Value::as_array).is_some_and(|items| {
        !items.is_empty() && items.iter().all(|v| v.as_str().is_some_and(|s| !s.trim().is_empty()))
    });
    LadderCheck { symbols, parse, shape }
}

/// Full weight for a bare JSON string literal, half when the answer merely
/// contains a quoted span.
pub fn quoted_element_score(answer: &str, weight: f64) -> f64 {
    if serde_json::from_str::<String>(answer.trim()).is_ok_and(|s| !s.trim().is_empty()) {
        weight
    } else if !quoted_spans(answer).is_empty() {
        weight / 2.0
    } else {
        0.0
    }
}

pub fn word_regex(word: &str) -> Regex {
    Regex::new(&format!(r"(?i)(^|[^\p{{L}}\p{{N}}]){}($|[^\p{{L}}\p{{N}}])", regex::escape(word)))
        .expect("escaped word is a valid pattern")
}

/// Full weight when the answer is exactly one option, half when an option
/// appears as a word inside other text.
pub fn option_score(answer: &str, options: (&str, &str), weight: f64) -> f64 {
    let bare = normalize(answer);
    let bare = bare.trim_end_matches('.').trim();
    if [options.0, options.1].iter().any(|o| o.eq_ignore_ascii_case(bare)) {
        weight
    } else if [options.0, options.1].iter().any(|o| word_regex(o).is_match(answer)) {
        weight / 2.0
    } else {
        0.0
    }
}

/// Count credit on a 3-point scale: exact count earns 3, otherwise the
/// relative error is charged against 2. Rescaled to `weight`.
pub fn score_quantity(predicted: usize, expected: usize, weight: f64) -> f64 {
    if predicted == expected {
        return weight;
    }
    if expected == 0 {
        return 0.0;
    }
    let rel = predicted.abs_diff(expected) as f64 / expected as f64;
    (1.0 - rel).max(0.0) * 2.0 * weight / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ladder_on_objects() {
        let ids = KeyPattern::DocId;
        let raw = |a: &str| dict_check(a, ids, false).raw();
        assert_eq!(raw(""), 0);
        assert_eq!(raw(r#"{"a" "b"} :"#), 1);
        assert_eq!(raw(r#"Here it is: {"0a1b2c3d": "yes"} done"#), 3);
        assert_eq!(raw(r#"{"0a1b2c3d": "yes", "ffffffff": "no"}"#), 4);
        assert_eq!(raw(r#"{"doc one": "yes"}"#), 3);
        assert_eq!(raw(r#"{"0a1b2c3d": ["yes"]}"#), 3);
        // two quote marks only, so the symbol step fails
        assert_eq!(raw(r#"{"0a1b2c3d": 1}"#), 2);
        assert_eq!(raw("{}"), 2);
    }

    #[test]
    fn ladder_rescales() {
        let c = dict_check(r#"{"0a1b2c3d": "yes"}"#, KeyPattern::DocId, false);
        assert_eq!(c.scaled(5.0), 5.0);
        let c = dict_check(r#"x {"0a1b2c3d": "yes"}"#, KeyPattern::DocId, false);
        assert_eq!(c.scaled(5.0), 3.75);
    }

    #[test]
    fn balanced_span_skips_string_braces() {
        assert_eq!(balanced_span(r#"a {"k": "}"} b"#, '{', '}'), Some(r#"{"k": "}"}"#));
        assert_eq!(balanced_span("[[1], [2]] tail", '[', ']'), Some("[[1], [2]]"));
        assert_eq!(balanced_span("{ never closed", '{', '}'), None);
        assert_eq!(balanced_span("{ open {x}", '{', '}'), Some("{x}"));
    }

    #[test]
    fn list_ladder() {
        assert_eq!(list_check(r#"["a", "b"]"#).raw(), 4);
        assert_eq!(list_check(r#"Sure: ["a"]"#).raw(), 3);
        assert_eq!(list_check("[1, 2]").raw(), 2);
        assert_eq!(list_check("- a\n- b").raw(), 0);
    }

    #[test]
    fn tag_and_attr_patterns() {
        assert!(key_matches(KeyPattern::TagId, "K012"));
        assert!(!key_matches(KeyPattern::TagId, "k012"));
        assert!(key_matches(KeyPattern::DocAttr, "AB12CD"));
        assert!(key_matches(KeyPattern::DocAttr, "deadbeef"));
        assert!(!key_matches(KeyPattern::DocAttr, "DEADBEEF"));
    }

    #[test]
    fn quantity_spot_values() {
        assert_eq!(score_quantity(5, 5, 3.0), 3.0);
        assert!((score_quantity(4, 5, 3.0) - 1.6).abs() < 1e-12);
        assert_eq!(score_quantity(15, 5, 3.0), 0.0);
        assert_eq!(score_quantity(0, 0, 4.0), 4.0);
        assert_eq!(score_quantity(1, 0, 4.0), 0.0);
    }

    #[test]
    fn options_and_quotes() {
        assert_eq!(option_score("Yes", ("Yes", "No"), 2.0), 2.0);
        assert_eq!(option_score(" no. ", ("Yes", "No"), 2.0), 2.0);
        assert_eq!(option_score("The answer is: No.", ("Yes", "No"), 2.0), 1.0);
        assert_eq!(option_score("Nope", ("Yes", "No"), 2.0), 0.0);
        assert_eq!(quoted_element_score("\"abc\"", 1.0), 1.0);
        assert_eq!(quoted_element_score("It is \"abc\".", 1.0), 0.5);
        assert_eq!(quoted_element_score("abc", 1.0), 0.0);
    }
}
