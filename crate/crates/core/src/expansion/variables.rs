//! Variable values, candidate spaces and assignment sampling.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expansion::template::Assignment;
use crate::rng::{derived, SeededRng};

/// English ordinal for a 1-based position: 1st, 2nd, 3rd, 4th, 11th, 21st...
pub fn ordinal(n: usize) -> String {
    let suffix = match (n % 10, n % 100) {
        (_, 11..=13) => "th",
        (1, _) => "st",
        (2, _) => "nd",
        (3, _) => "rd",
        _ => "th",
    };
    format!("{n}{suffix}")
}

/// Joins items as `a`, `a and b`, `a, b and c`.
pub fn join_and(items: &[String]) -> String {
    match items {
        [] => String::new(),
        [one] => one.clone(),
        [init @ .., last] => format!("{} and {last}", init.join(", ")),
    }
}

/// Labeling rule for document batches.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "rule", content = "arg", rename_all = "snake_case")]
pub enum DocRule {
    SourceIs(String),
    HasTitle,
    /// Dates strictly before this ISO day.
    DateBefore(String),
}

impl DocRule {
    pub fn describe(&self) -> String {
        match self {
            DocRule::SourceIs(s) => format!("its \"source\" field is \"{s}\""),
            DocRule::HasTitle => "it has a \"title\" field".to_string(),
            DocRule::DateBefore(d) => format!("its \"date\" is earlier than {d}"),
        }
    }

    pub fn matches(&self, source: Option<&str>, title: Option<&str>, date: &str) -> bool {
        match self {
            DocRule::SourceIs(s) => source == Some(s.as_str()),
            DocRule::HasTitle => title.is_some(),
            DocRule::DateBefore(d) => date < d.as_str(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum VarValue {
    /// 1-based position, rendered as an ordinal.
    Position(usize),
    /// Signed displacement, rendered as "N positions after/before".
    Offset(i64),
    Number(usize),
    Text(String),
    Pair(String, String),
    Positions(Vec<usize>),
    Ids(Vec<String>),
    Rule(DocRule),
}

impl VarValue {
    pub fn render(&self) -> String {
        match self {
            VarValue::Position(p) => ordinal(*p),
            VarValue::Offset(o) => {
                let n = o.unsigned_abs();
                let unit = if n == 1 { "position" } else { "positions" };
                let dir = if *o < 0 { "before" } else { "after" };
                format!("{n} {unit} {dir}")
            }
            VarValue::Number(n) => n.to_string(),
            VarValue::Text(t) => t.clone(),
            VarValue::Pair(a, b) => format!("{a} or {b}"),
            VarValue::Positions(ps) => join_and(&ps.iter().map(|p| ordinal(*p)).collect::<Vec<_>>()),
            VarValue::Ids(ids) => join_and(ids),
            VarValue::Rule(r) => r.describe(),
        }
    }

    pub fn render_index(&self, i: usize) -> Option<String> {
        match self {
            VarValue::Pair(a, _) if i == 0 => Some(a.clone()),
            VarValue::Pair(_, b) if i == 1 => Some(b.clone()),
            VarValue::Positions(ps) => ps.get(i).map(|p| ordinal(*p)),
            VarValue::Ids(ids) => ids.get(i).cloned(),
            _ => None,
        }
    }

    pub fn as_position(&self) -> Option<usize> {
        match self {
            VarValue::Position(p) => Some(*p),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Section {
    Beginning,
    Middle,
    End,
}

impl Section {
    pub const ALL: [Section; 3] = [Section::Beginning, Section::Middle, Section::End];

    /// Section of 1-based `pos` in a sequence of `len`: first quarter,
    /// middle half, last quarter.
    pub fn of(pos: usize, len: usize) -> Section {
        let idx = pos.saturating_sub(1);
        if 4 * idx < len {
            Section::Beginning
        } else if 4 * idx >= 3 * len {
            Section::End
        } else {
            Section::Middle
        }
    }

    /// 1-based inclusive range of positions in this section.
    pub fn range(self, len: usize) -> std::ops::RangeInclusive<usize> {
        let first_middle = len.div_ceil(4) + 1;
        let first_end = (3 * len).div_ceil(4) + 1;
        match self {
            Section::Beginning => 1..=first_middle - 1,
            Section::Middle => first_middle..=first_end - 1,
            Section::End => first_end..=len,
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

pub const SECTION_WEIGHTS: [f64; 3] = [0.25, 0.5, 0.25];

/// Splits `n` picks over beginning/middle/end by largest remainder; ties go
/// to the middle, then the beginning, then the end.
pub fn section_quotas(n: usize) -> [usize; 3] {
    let exact: Vec<f64> = SECTION_WEIGHTS.iter().map(|w| w * n as f64).collect();
    let mut quotas = [0usize; 3];
    for i in 0..3 {
        quotas[i] = exact[i].floor() as usize;
    }
    let mut left = n - quotas.iter().sum::<usize>();
    let priority = [1usize, 0, 2];
    let mut order: Vec<usize> = priority.to_vec();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.partial_cmp(&ra).expect("finite").then_with(|| {
            let pa = priority.iter().position(|&x| x == a).unwrap();
            let pb = priority.iter().position(|&x| x == b).unwrap();
            pa.cmp(&pb)
        })
    });
    for i in order {
        if left == 0 {
            break;
        }
        quotas[i] += 1;
        left -= 1;
    }
    quotas
}

/// Draws distinct positions from each section (`per_section` = beginning,
/// middle, end counts) that pass `valid`.
pub fn position_candidates(
    len: usize,
    per_section: [usize; 3],
    rng: &mut SeededRng,
    valid: &dyn Fn(usize) -> bool,
) -> Result<Vec<(usize, Section)>> {
    let mut out = Vec::new();
    for section in Section::ALL {
        let mut pool: Vec<usize> = section.range(len).filter(|&p| valid(p)).collect();
        let want = per_section[section.index()];
        if pool.len() < want {
            return Err(Error::config(format!(
                "{section:?} section of a {len}-element sequence has {} valid positions, {want} needed",
                pool.len()
            )));
        }
        pool.shuffle(rng);
        let mut picked: Vec<usize> = pool.into_iter().take(want).collect();
        picked.sort_unstable();
        out.extend(picked.into_iter().map(|p| (p, section)));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarKind {
    Position,
    Numeric,
    Phrase,
    Sentence,
    OptionPair,
    FormatIndicator,
    IdList,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableSlot {
    pub name: String,
    pub kind: VarKind,
    pub candidates: Vec<VarValue>,
    /// Context section of each candidate, for location-like variables.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sections: Option<Vec<Section>>,
}

impl VariableSlot {
    pub fn plain(name: &str, kind: VarKind, candidates: Vec<VarValue>) -> Self {
        VariableSlot {
            name: name.to_string(),
            kind,
            candidates,
            sections: None,
        }
    }

    pub fn sectioned(name: &str, kind: VarKind, candidates: Vec<(VarValue, Section)>) -> Self {
        let (candidates, sections) = candidates.into_iter().unzip();
        VariableSlot {
            name: name.to_string(),
            kind,
            candidates,
            sections: Some(sections),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct VariableSpace {
    pub slots: Vec<VariableSlot>,
}

impl VariableSpace {
    pub fn new(slots: Vec<VariableSlot>) -> Self {
        VariableSpace { slots }
    }

    pub fn size(&self) -> u128 {
        self.slots.iter().map(|s| s.candidates.len() as u128).product()
    }

    fn row(&self, idx: &[usize]) -> Assignment {
        self.slots
            .iter()
            .zip(idx)
            .map(|(s, &i)| (s.name.clone(), s.candidates[i].clone()))
            .collect()
    }
}

const MAX_SEARCH: u128 = 200_000;

/// Walks the mixed-radix product of `radices` from a random start,
/// restricted to coordinates where `free[i]` is set (others stay at `base`).
fn search(
    radices: &[usize],
    base: &[usize],
    free: &[bool],
    rng: &mut SeededRng,
    mut accept: impl FnMut(&[usize]) -> bool,
) -> Option<Vec<usize>> {
    let free_radices: Vec<usize> = radices
        .iter()
        .zip(free)
        .map(|(&r, &f)| if f { r } else { 1 })
        .collect();
    let total: u128 = free_radices.iter().map(|&r| r as u128).product();
    if total == 0 {
        return None;
    }
    let start = rng.gen_range(0..total);
    for step in 0..total.min(MAX_SEARCH) {
        let mut code = (start + step) % total;
        let mut idx = base.to_vec();
        for (i, &r) in free_radices.iter().enumerate() {
            if free[i] {
                idx[i] = (code % r as u128) as usize;
                code /= r as u128;
            }
        }
        if accept(&idx) {
            return Some(idx);
        }
    }
    None
}

/// Draws `n` distinct assignments that satisfy `valid`.
///
/// Location-like slots follow the beginning/middle/end quotas; other slots
/// cycle through a seeded permutation of their candidates. A row that
/// repeats an earlier one or fails `valid` is replaced, first by varying the
/// unsectioned slots only, then by searching the whole space.
pub fn sample_variables(
    space: &VariableSpace,
    seed: u64,
    n: usize,
    valid: &dyn Fn(&Assignment) -> bool,
) -> Result<Vec<Assignment>> {
    if let Some(empty) = space.slots.iter().find(|s| s.candidates.is_empty()) {
        return Err(Error::config(format!("variable `{}` has no candidates", empty.name)));
    }
    if (n as u128) > space.size() {
        return Err(Error::config(format!(
            "{n} assignments requested from a space of {}",
            space.size()
        )));
    }
    let mut rng = derived(seed, &["expansion", "variables"]);
    let columns: Vec<Vec<usize>> = space
        .slots
        .iter()
        .map(|slot| column(slot, n, &mut rng))
        .collect();
    let radices: Vec<usize> = space.slots.iter().map(|s| s.candidates.len()).collect();
    let unsectioned: Vec<bool> = space.slots.iter().map(|s| s.sections.is_none()).collect();
    let everything = vec![true; space.slots.len()];

    let mut used: HashSet<Vec<usize>> = HashSet::new();
    let mut rows = Vec::with_capacity(n);
    for r in 0..n {
        let idx: Vec<usize> = columns.iter().map(|c| c[r]).collect();
        let mut ok = |cand: &[usize]| !used.contains(cand) && valid(&space.row(cand));
        let chosen = if ok(&idx) {
            Some(idx)
        } else {
            search(&radices, &idx, &unsectioned, &mut rng, &mut ok)
                .or_else(|| search(&radices, &idx, &everything, &mut rng, &mut ok))
        };
        let chosen = chosen.ok_or_else(|| {
            Error::config(format!("only {r} valid distinct assignments exist, {n} requested"))
        })?;
        used.insert(chosen.clone());
        rows.push(space.row(&chosen));
    }
    Ok(rows)
}

fn column(slot: &VariableSlot, n: usize, rng: &mut SeededRng) -> Vec<usize> {
    match &slot.sections {
        Some(sections) => {
            let quotas = section_quotas(n);
            let mut out = Vec::with_capacity(n);
            let mut spill = 0;
            for section in Section::ALL {
                let mut members: Vec<usize> = (0..slot.candidates.len())
                    .filter(|&i| sections[i] == section)
                    .collect();
                members.shuffle(rng);
                let want = quotas[section.index()] + spill;
                spill = 0;
                if members.is_empty() {
                    spill = want;
                    continue;
                }
                out.extend(members.iter().cycle().take(want).copied());
            }
            if out.len() < n {
                let mut all: Vec<usize> = (0..slot.candidates.len()).collect();
                all.shuffle(rng);
                out.extend(all.iter().cycle().take(n - out.len()).copied());
            }
            out.shuffle(rng);
            out
        }
        None => {
            let mut perm: Vec<usize> = (0..slot.candidates.len()).collect();
            perm.shuffle(rng);
            perm.iter().cycle().take(n).copied().collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn ordinals() {
        let got: Vec<String> = [1, 2, 3, 4, 11, 12, 13, 21, 22, 101, 111, 112]
            .iter()
            .map(|&n| ordinal(n))
            .collect();
        assert_eq!(
            got,
            ["1st", "2nd", "3rd", "4th", "11th", "12th", "13th", "21st", "22nd", "101st", "111th", "112th"]
        );
    }

    #[test]
    fn quotas() {
        assert_eq!(section_quotas(6), [2, 3, 1]);
        assert_eq!(section_quotas(5), [1, 3, 1]);
        assert_eq!(section_quotas(4), [1, 2, 1]);
        assert_eq!(section_quotas(2), [1, 1, 0]);
        assert_eq!(section_quotas(1), [0, 1, 0]);
        assert_eq!(section_quotas(0), [0, 0, 0]);
    }

    #[test]
    fn sections_partition_positions() {
        for len in [1usize, 2, 3, 4, 5, 7, 8, 100, 301] {
            let mut seen = Vec::new();
            for s in Section::ALL {
                for p in s.range(len) {
                    assert_eq!(Section::of(p, len), s, "len {len} pos {p}");
                    seen.push(p);
                }
            }
            assert_eq!(seen, (1..=len).collect::<Vec<_>>());
        }
    }

    #[test]
    fn offsets_render() {
        assert_eq!(VarValue::Offset(-1).render(), "1 position before");
        assert_eq!(VarValue::Offset(3).render(), "3 positions after");
        assert_eq!(VarValue::Positions(vec![2, 15, 40]).render(), "2nd, 15th and 40th");
    }

    #[test]
    fn exhaustive_small_space() {
        let space = VariableSpace::new(vec![VariableSlot::plain(
            "opt",
            VarKind::OptionPair,
            vec![
                VarValue::Pair("True".into(), "False".into()),
                VarValue::Pair("Yes".into(), "No".into()),
            ],
        )]);
        let rows = sample_variables(&space, 1, 2, &|_| true).unwrap();
        let set: HashSet<_> = rows.iter().map(|r| r["opt"].clone()).collect();
        assert_eq!(set.len(), 2);
        assert!(matches!(sample_variables(&space, 1, 3, &|_| true), Err(Error::Config(_))));
    }

    #[test]
    fn position_sampling_spans_sections() {
        let mut rng = seeded(4);
        let cands = position_candidates(300, [2, 3, 2], &mut rng, &|_| true).unwrap();
        let slot = VariableSlot::sectioned(
            "pos",
            VarKind::Position,
            cands.into_iter().map(|(p, s)| (VarValue::Position(p), s)).collect(),
        );
        let space = VariableSpace::new(vec![slot]);
        let rows = sample_variables(&space, 9, 6, &|_| true).unwrap();
        let mut counts = [0usize; 3];
        for r in &rows {
            let p = r["pos"].as_position().unwrap();
            counts[Section::of(p, 300) as usize] += 1;
        }
        assert!(counts.iter().all(|&c| c >= 1), "{counts:?}");
        assert!(counts[1] >= counts[0] && counts[1] >= counts[2]);
        assert_eq!(rows, sample_variables(&space, 9, 6, &|_| true).unwrap());
    }

    #[test]
    fn invalid_rows_are_replaced() {
        let space = VariableSpace::new(vec![
            VariableSlot::plain("a", VarKind::Numeric, (1..=5).map(VarValue::Number).collect()),
            VariableSlot::plain("b", VarKind::Numeric, (1..=5).map(VarValue::Number).collect()),
        ]);
        let valid = |a: &Assignment| a["a"] != a["b"];
        let rows = sample_variables(&space, 3, 10, &valid).unwrap();
        assert!(rows.iter().all(valid));
        let distinct: HashSet<_> = rows.iter().collect();
        assert_eq!(distinct.len(), 10);
    }
}
