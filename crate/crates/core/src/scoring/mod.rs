//! Rubric-based scoring of model responses.

pub mod evaluators;
pub mod extract;
pub mod format;
pub mod rubric;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::task::{Capability, Scenario, TaskId};
use crate::taskgen::item::BenchmarkItem;

pub use evaluators::{evaluate, lcs_len, ItemView};
pub use format::score_quantity;
pub use rubric::{EvaluatorKind, FormatSpec, KeyPattern, Rubric, RubricPoint, TaskRubric};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointScore {
    pub point_id: String,
    pub weight: f64,
    pub achieved: f64,
    pub capabilities: Vec<Capability>,
}

/// Scores of one response, carrying enough item metadata to aggregate
/// without the dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub item_id: String,
    pub model: String,
    pub scenario: Scenario,
    pub task_id: TaskId,
    pub interval: String,
    pub expression_index: usize,
    pub variable_index: usize,
    pub points: Vec<PointScore>,
    pub score: f64,
    pub max_score: f64,
    pub normalized: f64,
    /// Set when the response failed at the transport level and was scored
    /// as empty.
    #[serde(default)]
    pub response_error: bool,
    pub dataset_hash: String,
}

/// Scores every rubric point of `item`. A missing response scores as the
/// empty string.
pub fn score_item(rubric: &Rubric, view: &ItemView<'_>, response: Option<&str>) -> Result<Vec<PointScore>> {
    let task = rubric.task(view.item.task_id);
    let text = response.unwrap_or("");
    task.points
        .iter()
        .map(|p| {
            Ok(PointScore {
                point_id: p.point_id.clone(),
                weight: p.weight,
                achieved: evaluate(view, &task.format, p, text)?,
                capabilities: p.capabilities.clone(),
            })
        })
        .collect()
}

pub fn score_record(
    rubric: &Rubric,
    item: &BenchmarkItem,
    model: &str,
    response: Option<&str>,
    dataset_hash: &str,
) -> Result<ScoreRecord> {
    let view = ItemView::new(item)?;
    let points = score_item(rubric, &view, response)?;
    let score: f64 = points.iter().map(|p| p.achieved).sum();
    let max_score: f64 = points.iter().map(|p| p.weight).sum();
    Ok(ScoreRecord {
        item_id: item.item_id.clone(),
        model: model.to_string(),
        scenario: item.scenario,
        task_id: item.task_id,
        interval: item.interval.clone(),
        expression_index: item.expression_index,
        variable_index: item.variable_index,
        points,
        score,
        max_score,
        normalized: score / max_score,
        response_error: response.is_none(),
        dataset_hash: dataset_hash.to_string(),
    })
}
