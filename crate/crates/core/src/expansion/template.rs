//! Instruction templates with named placeholders.
//!
//! Placeholders are `{name}` or `{name[i]}` (an element of a pair or list
//! value). `{{` and `}}` stand for literal braces; any other brace is an
//! error.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expansion::variables::VarValue;
use crate::task::TaskId;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Placeholder {
    pub name: String,
    pub index: Option<usize>,
}

impl Placeholder {
    pub fn token(&self) -> String {
        match self.index {
            Some(i) => format!("{}[{i}]", self.name),
            None => self.name.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Piece {
    Literal(String),
    Slot(Placeholder),
}

fn parse_slot(inner: &str) -> Option<Placeholder> {
    let (name, index) = match inner.split_once('[') {
        Some((name, rest)) => {
            let idx = rest.strip_suffix(']')?.parse().ok()?;
            (name, Some(idx))
        }
        None => (inner, None),
    };
    let valid = !name.is_empty()
        && name.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    valid.then(|| Placeholder {
        name: name.to_string(),
        index,
    })
}

fn parse(text: &str) -> Result<Vec<Piece>> {
    let mut pieces = Vec::new();
    let mut literal = String::new();
    let mut rest = text;
    while let Some(c) = rest.chars().next() {
        if rest.starts_with("{{") {
            literal.push('{');
            rest = &rest[2..];
        } else if rest.starts_with("}}") {
            literal.push('}');
            rest = &rest[2..];
        } else if c == '{' {
            let close = rest
                .find('}')
                .ok_or_else(|| Error::Render(format!("unclosed `{{` in template: {text}")))?;
            let slot = parse_slot(&rest[1..close]).ok_or_else(|| {
                Error::Render(format!("malformed placeholder `{}` in template", &rest[..=close]))
            })?;
            if !literal.is_empty() {
                pieces.push(Piece::Literal(std::mem::take(&mut literal)));
            }
            pieces.push(Piece::Slot(slot));
            rest = &rest[close + 1..];
        } else if c == '}' {
            return Err(Error::Render(format!("stray `}}` in template: {text}")));
        } else {
            literal.push(c);
            rest = &rest[c.len_utf8()..];
        }
    }
    if !literal.is_empty() {
        pieces.push(Piece::Literal(literal));
    }
    Ok(pieces)
}

/// Placeholder occurrences in `text`, as written (`name` or `name[i]`).
pub fn placeholders(text: &str) -> Result<BTreeSet<String>> {
    Ok(parse(text)?
        .into_iter()
        .filter_map(|p| match p {
            Piece::Slot(s) => Some(s.token()),
            Piece::Literal(_) => None,
        })
        .collect())
}

/// Distinct variable names referenced by `text`.
pub fn variable_names(text: &str) -> Result<BTreeSet<String>> {
    Ok(parse(text)?
        .into_iter()
        .filter_map(|p| match p {
            Piece::Slot(s) => Some(s.name),
            Piece::Literal(_) => None,
        })
        .collect())
}

pub type Assignment = BTreeMap<String, VarValue>;

/// Substitutes every placeholder. Every variable referenced must be
/// assigned and every assigned variable must be referenced.
pub fn render(text: &str, assignment: &Assignment) -> Result<String> {
    let pieces = parse(text)?;
    let mut used = BTreeSet::new();
    let mut out = String::with_capacity(text.len());
    for piece in pieces {
        match piece {
            Piece::Literal(l) => out.push_str(&l),
            Piece::Slot(slot) => {
                let value = assignment
                    .get(&slot.name)
                    .ok_or_else(|| Error::Render(format!("no value for placeholder `{}`", slot.name)))?;
                let rendered = match slot.index {
                    None => value.render(),
                    Some(i) => value.render_index(i).ok_or_else(|| {
                        Error::Render(format!("placeholder `{}` has no element {i}", slot.name))
                    })?,
                };
                out.push_str(&rendered);
                used.insert(slot.name);
            }
        }
    }
    let unused: Vec<&String> = assignment.keys().filter(|k| !used.contains(*k)).collect();
    if !unused.is_empty() {
        return Err(Error::Render(format!("assignment keys not used by template: {unused:?}")));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstructionTemplate {
    pub task_id: TaskId,
    pub expression_index: usize,
    pub text: String,
    pub placeholders: BTreeSet<String>,
}

impl InstructionTemplate {
    pub fn new(task_id: TaskId, expression_index: usize, text: impl Into<String>) -> Result<Self> {
        let text = text.into();
        let placeholders = placeholders(&text)?;
        Ok(InstructionTemplate {
            task_id,
            expression_index,
            text,
            placeholders,
        })
    }

    /// Checks that the declared placeholder set matches the text.
    pub fn validate(&self) -> Result<()> {
        let found = placeholders(&self.text)?;
        if found != self.placeholders {
            return Err(Error::Render(format!(
                "{} template {}: declared placeholders {:?} but text uses {:?}",
                self.task_id, self.expression_index, self.placeholders, found
            )));
        }
        Ok(())
    }

    pub fn render(&self, assignment: &Assignment) -> Result<String> {
        render(&self.text, assignment)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assign(pairs: &[(&str, VarValue)]) -> Assignment {
        pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
    }

    #[test]
    fn renders_position() {
        let a = assign(&[("pos", VarValue::Position(8))]);
        assert_eq!(render("position {pos}", &a).unwrap(), "position 8th");
    }

    #[test]
    fn verbatim_without_placeholders() {
        let t = "Return the list as {{\"a\": 1}} please.";
        assert_eq!(render(t, &Assignment::new()).unwrap(), "Return the list as {\"a\": 1} please.");
    }

    #[test]
    fn extra_and_missing_keys_fail() {
        let a = assign(&[("pos", VarValue::Position(1)), ("x", VarValue::Number(2))]);
        assert!(matches!(render("at {pos}", &a), Err(Error::Render(_))));
        assert!(matches!(render("at {pos} {y}", &assign(&[("pos", VarValue::Position(1))])), Err(Error::Render(_))));
    }

    #[test]
    fn indexed_slots() {
        let a = assign(&[("opt", VarValue::Pair("Yes".into(), "No".into()))]);
        assert_eq!(render("{opt[0]} or {opt[1]}", &a).unwrap(), "Yes or No");
        assert!(render("{opt[2]}", &a).is_err());
        assert_eq!(
            placeholders("{opt[0]} {opt[1]} {n}").unwrap().into_iter().collect::<Vec<_>>(),
            vec!["n", "opt[0]", "opt[1]"]
        );
    }

    #[test]
    fn stray_braces_fail() {
        assert!(placeholders("a } b").is_err());
        assert!(placeholders("a { b").is_err());
        assert!(placeholders("a {b c} d").is_err());
    }
}
