//! Scoring rubrics: weighted points per task, each tagged with the
//! capabilities it exercises, plus the expected output shape.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::task::{Capability, TaskId};

const BUILTIN_RUBRIC: &str = include_str!("../../data/rubric.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvaluatorKind {
    Format,
    Origin,
    Correctness,
    Order,
    Quantity,
    Window,
    LabelSet,
    KeyRecognition,
    Target,
}

impl EvaluatorKind {
    /// Whether the evaluator has a definition for `task`.
    pub fn applies_to(self, task: TaskId) -> bool {
        use EvaluatorKind::*;
        use TaskId::*;
        match self {
            Format => true,
            Correctness => task != OE,
            Origin => matches!(task, LSI | LOI | LOE | LBI | LBE | MF | OR | OE),
            Order => matches!(task, LMI | OE),
            Quantity => matches!(task, LMI | MB | MF | OR),
            Window => matches!(task, LBI | LBE),
            LabelSet => task == MB,
            KeyRecognition => task == OR,
            Target => task == OE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KeyPattern {
    Any,
    /// Eight lowercase hex digits.
    DocId,
    /// A document id or a six-character `iD2` code.
    DocAttr,
    /// One uppercase letter followed by three digits.
    TagId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum FormatSpec {
    QuotedElement,
    JsonList,
    JsonDict {
        keys: KeyPattern,
        #[serde(default)]
        values_as_keys: bool,
    },
    OptionWord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RubricPoint {
    pub point_id: String,
    pub description: String,
    pub weight: f64,
    pub capabilities: Vec<Capability>,
    pub evaluator: EvaluatorKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskRubric {
    pub task_id: TaskId,
    pub format: FormatSpec,
    pub points: Vec<RubricPoint>,
}

impl TaskRubric {
    pub fn total_weight(&self) -> f64 {
        self.points.iter().map(|p| p.weight).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rubric {
    tasks: BTreeMap<TaskId, TaskRubric>,
}

impl Rubric {
    pub fn builtin() -> Self {
        Self::from_json(BUILTIN_RUBRIC, Path::new("<builtin rubric>")).expect("bundled rubric is valid")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&raw, path)
    }

    fn from_json(raw: &str, path: &Path) -> Result<Self> {
        let list: Vec<TaskRubric> =
            serde_json::from_str(raw).map_err(|e| Error::validation(path, e.line(), e.to_string()))?;
        Self::new(list)
    }

    pub fn new(list: Vec<TaskRubric>) -> Result<Self> {
        let mut tasks = BTreeMap::new();
        for t in list {
            let mut seen = std::collections::HashSet::new();
            if t.points.is_empty() {
                return Err(Error::config(format!("rubric for {} has no points", t.task_id)));
            }
            for p in &t.points {
                if !(p.weight.is_finite() && p.weight > 0.0) {
                    return Err(Error::config(format!("{}/{}: weight must be positive", t.task_id, p.point_id)));
                }
                if p.capabilities.is_empty() {
                    return Err(Error::config(format!("{}/{}: no capability tags", t.task_id, p.point_id)));
                }
                if !p.evaluator.applies_to(t.task_id) {
                    return Err(Error::config(format!(
                        "{}/{}: evaluator {:?} is not defined for this task",
                        t.task_id, p.point_id, p.evaluator
                    )));
                }
                if !seen.insert(p.point_id.clone()) {
                    return Err(Error::config(format!("{}: duplicate point `{}`", t.task_id, p.point_id)));
                }
            }
            let id = t.task_id;
            if tasks.insert(id, t).is_some() {
                return Err(Error::config(format!("rubric lists {id} twice")));
            }
        }
        if let Some(missing) = TaskId::ALL.iter().find(|t| !tasks.contains_key(t)) {
            return Err(Error::config(format!("rubric lacks task {missing}")));
        }
        Ok(Rubric { tasks })
    }

    pub fn task(&self, task: TaskId) -> &TaskRubric {
        &self.tasks[&task]
    }

    pub fn tasks(&self) -> impl Iterator<Item = &TaskRubric> {
        self.tasks.values()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_totals() {
        let r = Rubric::builtin();
        let totals: Vec<f64> = TaskId::ALL.iter().map(|t| r.task(*t).total_weight()).collect();
        assert_eq!(totals, vec![4.0, 10.0, 4.0, 4.0, 5.0, 5.0, 14.0, 20.0, 14.0, 5.0, 14.0]);
    }

    #[test]
    fn capability_weights_per_task() {
        let r = Rubric::builtin();
        let weight = |t: TaskId, c: Capability| -> f64 {
            r.task(t).points.iter().filter(|p| p.capabilities.contains(&c)).map(|p| p.weight).sum()
        };
        assert_eq!(weight(TaskId::MF, Capability::Logic), 9.0);
        assert_eq!(weight(TaskId::MB, Capability::Recog), 3.0);
        assert_eq!(weight(TaskId::OE, Capability::Spat), 4.0);
        assert_eq!(weight(TaskId::OQ, Capability::Num), 0.0);
    }

    #[test]
    fn rejects_bad_rubrics() {
        let mut list: Vec<TaskRubric> = Rubric::builtin().tasks().cloned().collect();
        list.pop();
        assert!(Rubric::new(list.clone()).is_err());
        let mut bad: Vec<TaskRubric> = Rubric::builtin().tasks().cloned().collect();
        bad[0].points[0].evaluator = EvaluatorKind::Target;
        assert!(Rubric::new(bad).is_err());
    }
}
