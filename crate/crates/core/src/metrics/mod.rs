//! Aggregate scores: per-task and overall rubric scores, capability
//! performance and stability across prompt length, phrasing and variables.

pub mod report;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::scoring::ScoreRecord;
use crate::task::{Capability, TaskId};

pub use report::{build_report, write_report, MetricsReport, ModelReport, TaskMetrics};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Perspective {
    Length,
    Expression,
    Variable,
}

/// Sortable group label within a perspective.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GroupKey {
    pub order: u64,
    pub label: String,
}

impl fmt::Display for Perspective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Perspective {
    pub const ALL: [Perspective; 3] = [Perspective::Length, Perspective::Expression, Perspective::Variable];

    pub fn as_str(self) -> &'static str {
        match self {
            Perspective::Length => "length",
            Perspective::Expression => "expression",
            Perspective::Variable => "variable",
        }
    }

    pub fn key(self, r: &ScoreRecord) -> GroupKey {
        match self {
            Perspective::Length => GroupKey {
                order: interval_order(&r.interval),
                label: r.interval.clone(),
            },
            Perspective::Expression => GroupKey {
                order: r.expression_index as u64,
                label: r.expression_index.to_string(),
            },
            Perspective::Variable => GroupKey {
                order: r.variable_index as u64,
                label: r.variable_index.to_string(),
            },
        }
    }
}

/// Interval labels like `16k` sort by size; anything else sorts last.
fn interval_order(label: &str) -> u64 {
    label
        .trim_end_matches(['k', 'K'])
        .parse::<u64>()
        .map(|n| if label.ends_with(['k', 'K']) { n * 1024 } else { n })
        .unwrap_or(u64::MAX)
}

/// Mean achieved value and weight of each point across `records`.
fn point_means(records: &[&ScoreRecord]) -> BTreeMap<String, (f64, f64, Vec<Capability>)> {
    let mut sums: BTreeMap<String, (f64, f64, Vec<Capability>)> = BTreeMap::new();
    for r in records {
        for p in &r.points {
            let e = sums
                .entry(p.point_id.clone())
                .or_insert_with(|| (0.0, p.weight, p.capabilities.clone()));
            e.0 += p.achieved;
        }
    }
    let n = records.len() as f64;
    for v in sums.values_mut() {
        v.0 /= n;
    }
    sums
}

/// Rubric score of one task: mean achieved per point, summed, over the
/// total weight. Absent for no records.
pub fn ars_task(records: &[&ScoreRecord]) -> Option<f64> {
    if records.is_empty() {
        return None;
    }
    let means = point_means(records);
    let achieved: f64 = means.values().map(|v| v.0).sum();
    let total: f64 = means.values().map(|v| v.1).sum();
    Some(achieved / total)
}

/// Total rubric weight per task, read from the records.
pub fn task_weights(records: &[&ScoreRecord]) -> BTreeMap<TaskId, f64> {
    let mut w = BTreeMap::new();
    for r in records {
        w.entry(r.task_id).or_insert(r.max_score);
    }
    w
}

/// Weighted mean of per-task scores with the tasks' total rubric weights.
/// Absent when the map is empty or a task has no weight.
pub fn ars_overall(per_task: &BTreeMap<TaskId, f64>, weights: &BTreeMap<TaskId, f64>) -> Option<f64> {
    if per_task.is_empty() {
        return None;
    }
    let (mut num, mut den) = (0.0, 0.0);
    for (t, ars) in per_task {
        let w = weights.get(t)?;
        num += w * ars;
        den += w;
    }
    Some(num / den)
}

/// Share of the weight tagged with `capability` that was achieved, using
/// per-task point means. Absent when no point in the run carries the tag.
pub fn ifp(records: &[&ScoreRecord], capability: Capability) -> Option<f64> {
    let mut by_task: BTreeMap<TaskId, Vec<&ScoreRecord>> = BTreeMap::new();
    for r in records {
        by_task.entry(r.task_id).or_default().push(r);
    }
    let (mut num, mut den) = (0.0, 0.0);
    for recs in by_task.values() {
        for (mean, weight, caps) in point_means(recs).values() {
            if caps.contains(&capability) {
                num += mean;
                den += weight;
            }
        }
    }
    (den > 0.0).then(|| num / den)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IfsValue {
    pub value: Option<f64>,
    pub groups: usize,
    /// Why the value is absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flag: Option<String>,
}

/// Coefficient of variation (population standard deviation over mean) of
/// group scores.
pub fn ifs(group_scores: &[f64]) -> IfsValue {
    let groups = group_scores.len();
    if groups < 2 {
        return IfsValue {
            value: None,
            groups,
            flag: Some("fewer than two groups".into()),
        };
    }
    let n = groups as f64;
    let mean = group_scores.iter().sum::<f64>() / n;
    if mean <= 0.0 {
        return IfsValue {
            value: None,
            groups,
            flag: Some("degenerate: zero mean".into()),
        };
    }
    if group_scores.iter().all(|y| *y == group_scores[0]) {
        // exact, rather than the rounding residue of the general formula
        return IfsValue {
            value: Some(0.0),
            groups,
            flag: None,
        };
    }
    let var = group_scores.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / n;
    IfsValue {
        value: Some(var.sqrt() / mean),
        groups,
        flag: None,
    }
}

/// Per-group task scores under `perspective`, in group order.
pub fn group_ars(records: &[&ScoreRecord], perspective: Perspective) -> Vec<(GroupKey, usize, f64)> {
    let mut groups: BTreeMap<GroupKey, Vec<&ScoreRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(perspective.key(r)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|(k, recs)| {
            let ars = ars_task(&recs).expect("groups are non-empty");
            (k, recs.len(), ars)
        })
        .collect()
}

/// Mean of the defined values; absent when none are defined.
pub fn mean_defined(values: impl IntoIterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = values.into_iter().flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Stability over all tasks at once: each group's score is the weighted
/// overall score of its records.
pub fn ifs_pooled(records: &[&ScoreRecord], perspective: Perspective) -> IfsValue {
    let weights = task_weights(records);
    let mut groups: BTreeMap<GroupKey, Vec<&ScoreRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(perspective.key(r)).or_default().push(r);
    }
    let scores: Vec<f64> = groups
        .values()
        .filter_map(|recs| {
            let mut by_task: BTreeMap<TaskId, Vec<&ScoreRecord>> = BTreeMap::new();
            for r in recs {
                by_task.entry(r.task_id).or_default().push(r);
            }
            let per_task: BTreeMap<TaskId, f64> = by_task
                .into_iter()
                .filter_map(|(t, rs)| ars_task(&rs).map(|a| (t, a)))
                .collect();
            ars_overall(&per_task, &weights)
        })
        .collect();
    ifs(&scores)
}
