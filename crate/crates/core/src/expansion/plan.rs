use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::task::TaskId;
use crate::tokenizer::{TokenBudget, DEFAULT_RESERVE_TOKENS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskPlan {
    pub task_id: TaskId,
    /// Number of instruction phrasings.
    pub expressions: usize,
    /// Number of variable assignments per phrasing.
    pub variables: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpansionPlan {
    pub tasks: Vec<TaskPlan>,
    pub intervals: Vec<TokenBudget>,
}

impl ExpansionPlan {
    /// Reference sizes for every task over the six default intervals.
    pub fn reference() -> Self {
        ExpansionPlan {
            tasks: TaskId::ALL
                .iter()
                .map(|&task_id| {
                    let (expressions, variables) = task_id.default_extension();
                    TaskPlan {
                        task_id,
                        expressions,
                        variables,
                    }
                })
                .collect(),
            intervals: TokenBudget::default_intervals(DEFAULT_RESERVE_TOKENS)
                .expect("default intervals are valid"),
        }
    }

    pub fn items_for(&self, task: TaskId) -> usize {
        self.tasks
            .iter()
            .filter(|t| t.task_id == task)
            .map(|t| t.expressions * t.variables * self.intervals.len())
            .sum()
    }

    pub fn expected_items(&self) -> usize {
        self.tasks
            .iter()
            .map(|t| t.expressions * t.variables)
            .sum::<usize>()
            * self.intervals.len()
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for t in &self.tasks {
            if !seen.insert(t.task_id) {
                return Err(Error::config(format!("task {} listed twice in plan", t.task_id)));
            }
            if t.expressions == 0 || t.variables == 0 {
                return Err(Error::config(format!("task {} has an empty expansion", t.task_id)));
            }
        }
        let mut names = std::collections::HashSet::new();
        for b in &self.intervals {
            if !names.insert(b.interval_name.clone()) {
                return Err(Error::config(format!("interval {} listed twice", b.interval_name)));
            }
            if b.reserve_tokens >= b.nominal_tokens {
                return Err(Error::config(format!("interval {} reserve exceeds nominal", b.interval_name)));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_counts() {
        let plan = ExpansionPlan::reference();
        plan.validate().unwrap();
        assert_eq!(plan.items_for(TaskId::LSI), 180);
        assert_eq!(plan.expected_items(), 2766);
    }
}
