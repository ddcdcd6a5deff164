//! Pulling answer payloads out of free-form model output.

use std::sync::LazyLock;

use regex::Regex;
use serde_json::Value;

use crate::scoring::format::{balanced_span, word_regex};

static QUOTED: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r#""((?:[^"\\]|\\.)*)""#).expect("valid pattern"));

static KV_PAIR: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r#""((?:[^"\\]|\\.)*)"\s*:\s*"((?:[^"\\]|\\.)*)""#).expect("valid pattern")
});

static BULLET: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\s*(?:[-*\u{2022}]|\d+[.)])\s+(.+)$").expect("valid pattern"));

const QUOTE_PAIRS: [(char, char); 5] = [('"', '"'), ('\'', '\''), ('`', '`'), ('\u{201c}', '\u{201d}'), ('\u{2018}', '\u{2019}')];

/// Trims, collapses whitespace and removes one pair of surrounding quotes.
pub fn normalize(s: &str) -> String {
    let collapsed = s.split_whitespace().collect::<Vec<_>>().join(" ");
    for (open, close) in QUOTE_PAIRS {
        if collapsed.chars().count() >= 2 && collapsed.starts_with(open) && collapsed.ends_with(close) {
            let inner = &collapsed[open.len_utf8()..collapsed.len() - close.len_utf8()];
            return inner.trim().to_string();
        }
    }
    collapsed
}

fn decode_literal(inner: &str) -> String {
    serde_json::from_str::<String>(&format!("\"{inner}\"")).unwrap_or_else(|_| inner.to_string())
}

/// Contents of every double-quoted span, with JSON escapes decoded.
pub fn quoted_spans(text: &str) -> Vec<String> {
    QUOTED.captures_iter(text).map(|c| decode_literal(&c[1])).collect()
}

fn value_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn parse_container(answer: &str, open: char, close: char) -> Option<Value> {
    serde_json::from_str::<Value>(answer.trim())
        .ok()
        .filter(|v| if open == '{' { v.is_object() } else { v.is_array() })
        .or_else(|| {
            balanced_span(answer, open, close)
                .and_then(|span| serde_json::from_str::<Value>(span).ok())
                .filter(|v| if open == '{' { v.is_object() } else { v.is_array() })
        })
}

/// A single answer string. Prefers a bare JSON string, then a quoted span
/// that is a known candidate, then the longest candidate mentioned anywhere,
/// then any quoted span, then the whole answer.
pub fn extract_single(answer: &str, candidates: &[String]) -> Option<String> {
    if let Ok(s) = serde_json::from_str::<String>(answer.trim()) {
        let s = normalize(&s);
        return (!s.is_empty()).then_some(s);
    }
    let spans: Vec<String> = quoted_spans(answer).iter().map(|s| normalize(s)).collect();
    if let Some(hit) = spans.iter().find(|s| candidates.iter().any(|c| c == *s)) {
        return Some(hit.clone());
    }
    let flat = normalize(answer);
    if let Some(c) = candidates
        .iter()
        .filter(|c| !c.is_empty() && flat.contains(c.as_str()))
        .max_by_key(|c| c.len())
    {
        return Some(c.clone());
    }
    if let Some(first) = spans.into_iter().find(|s| !s.is_empty()) {
        return Some(first);
    }
    (!flat.is_empty()).then_some(flat)
}

/// Entries of a list answer: a JSON array, else bullet or numbered lines,
/// else quoted spans.
pub fn extract_list(answer: &str) -> Vec<String> {
    if let Some(Value::Array(items)) = parse_container(answer, '[', ']') {
        return items.iter().map(|v| normalize(&value_text(v))).collect();
    }
    let bullets: Vec<String> = answer
        .lines()
        .filter_map(|l| BULLET.captures(l).map(|c| normalize(&c[1])))
        .collect();
    if !bullets.is_empty() {
        return bullets;
    }
    quoted_spans(answer).iter().map(|s| normalize(s)).collect()
}

/// Key/value entries of an object answer in written order: a JSON object,
/// else every `"key": "value"` fragment.
pub fn extract_dict(answer: &str) -> Vec<(String, String)> {
    if let Some(Value::Object(map)) = parse_container(answer, '{', '}') {
        return map.iter().map(|(k, v)| (normalize(k), normalize(&value_text(v)))).collect();
    }
    KV_PAIR
        .captures_iter(answer)
        .map(|c| (normalize(&decode_literal(&c[1])), normalize(&decode_literal(&c[2]))))
        .collect()
}

/// The option an answer commits to: an exact match, else the option
/// mentioned last.
pub fn extract_option(answer: &str, options: (&str, &str)) -> Option<String> {
    let bare = normalize(answer);
    let bare = bare.trim_end_matches('.').trim();
    for o in [options.0, options.1] {
        if o.eq_ignore_ascii_case(bare) {
            return Some(o.to_string());
        }
    }
    [options.0, options.1]
        .into_iter()
        .filter_map(|o| word_regex(o).find_iter(answer).last().map(|m| (m.end(), o)))
        .max_by_key(|(end, _)| *end)
        .map(|(_, o)| o.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn normalization() {
        assert_eq!(normalize("  \"a   b\"\n"), "a b");
        assert_eq!(normalize("'x'"), "x");
        assert_eq!(normalize("\""), "\"");
        assert_eq!(normalize("\u{201c}curly\u{201d}"), "curly");
    }

    #[test]
    fn single_answers() {
        let cands = v(&["alpha beta", "alpha", "gamma"]);
        assert_eq!(extract_single("\"gamma\"", &cands).as_deref(), Some("gamma"));
        assert_eq!(extract_single("I think \"x\" or \"alpha\"", &cands).as_deref(), Some("alpha"));
        assert_eq!(extract_single("The element is alpha beta.", &cands).as_deref(), Some("alpha beta"));
        assert_eq!(extract_single("It is \"delta\".", &cands).as_deref(), Some("delta"));
        assert_eq!(extract_single("   ", &cands), None);
    }

    #[test]
    fn lists() {
        assert_eq!(extract_list("[\"a\", \" b \"]"), v(&["a", "b"]));
        assert_eq!(extract_list("Result:\n```json\n[\"a\"]\n```"), v(&["a"]));
        assert_eq!(extract_list("- a\n- b\n2. c"), v(&["a", "b", "c"]));
        assert_eq!(extract_list("\"a\" then \"b\""), v(&["a", "b"]));
        assert!(extract_list("nothing").is_empty());
    }

    #[test]
    fn dicts() {
        let want = vec![("k1".to_string(), "v1".to_string()), ("k2".to_string(), "2".to_string())];
        assert_eq!(extract_dict(r#"{"k1": "v1", "k2": 2}"#), want);
        assert_eq!(
            extract_dict("\"k1\": \"v1\"\n\"k2\": \"2\""),
            vec![("k1".to_string(), "v1".to_string()), ("k2".to_string(), "2".to_string())]
        );
    }

    #[test]
    fn options() {
        assert_eq!(extract_option("yes", ("Yes", "No")).as_deref(), Some("Yes"));
        assert_eq!(extract_option("Not sure, yes or no? No.", ("Yes", "No")).as_deref(), Some("No"));
        assert_eq!(extract_option("Nope", ("Yes", "No")), None);
        assert_eq!(extract_option("It is False", ("True", "False")).as_deref(), Some("False"));
    }
}
