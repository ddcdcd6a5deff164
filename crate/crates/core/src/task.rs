use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scenario {
    List,
    MultiDoc,
    OneDoc,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::List => "List",
            Scenario::MultiDoc => "MultiDoc",
            Scenario::OneDoc => "OneDoc",
        }
    }
}

/// The eleven benchmark tasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TaskId {
    LSI,
    LMI,
    LOI,
    LOE,
    LBI,
    LBE,
    MB,
    MF,
    OR,
    OQ,
    OE,
}

impl TaskId {
    pub const ALL: [TaskId; 11] = [
        TaskId::LSI,
        TaskId::LMI,
        TaskId::LOI,
        TaskId::LOE,
        TaskId::LBI,
        TaskId::LBE,
        TaskId::MB,
        TaskId::MF,
        TaskId::OR,
        TaskId::OQ,
        TaskId::OE,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskId::LSI => "LSI",
            TaskId::LMI => "LMI",
            TaskId::LOI => "LOI",
            TaskId::LOE => "LOE",
            TaskId::LBI => "LBI",
            TaskId::LBE => "LBE",
            TaskId::MB => "MB",
            TaskId::MF => "MF",
            TaskId::OR => "OR",
            TaskId::OQ => "OQ",
            TaskId::OE => "OE",
        }
    }

    pub fn scenario(self) -> Scenario {
        match self {
            TaskId::LSI | TaskId::LMI | TaskId::LOI | TaskId::LOE | TaskId::LBI | TaskId::LBE => {
                Scenario::List
            }
            TaskId::MB | TaskId::MF => Scenario::MultiDoc,
            TaskId::OR | TaskId::OQ | TaskId::OE => Scenario::OneDoc,
        }
    }

    /// (#expressions, #variable assignments) of the reference dataset.
    pub fn default_extension(self) -> (usize, usize) {
        match self {
            TaskId::LSI => (5, 6),
            TaskId::LMI => (5, 5),
            TaskId::LOI => (11, 6),
            TaskId::LOE => (12, 6),
            TaskId::LBI => (11, 6),
            TaskId::LBE => (12, 6),
            TaskId::MB => (5, 5),
            TaskId::MF => (5, 5),
            TaskId::OR => (5, 5),
            TaskId::OQ => (5, 6),
            TaskId::OE => (5, 5),
        }
    }

    /// Generation cap in tokens for one response.
    pub fn max_output_tokens(self) -> usize {
        match self {
            TaskId::LSI | TaskId::LOI | TaskId::LOE | TaskId::LBI | TaskId::LBE => 100,
            TaskId::MB | TaskId::MF => 4096,
            TaskId::LMI | TaskId::OR | TaskId::OQ | TaskId::OE => 512,
        }
    }
}

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaskId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TaskId::ALL
            .into_iter()
            .find(|t| t.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::config(format!("unknown task `{s}`")))
    }
}

/// Looks up the generation cap for a task name.
pub fn max_tokens_for(task: &str) -> Result<usize> {
    Ok(task.parse::<TaskId>()?.max_output_tokens())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Capability {
    Ori,
    Num,
    Spat,
    Fmt,
    Logic,
    Recog,
}

impl Capability {
    pub const ALL: [Capability; 6] = [
        Capability::Ori,
        Capability::Num,
        Capability::Spat,
        Capability::Fmt,
        Capability::Logic,
        Capability::Recog,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Capability::Ori => "Ori",
            Capability::Num => "Num",
            Capability::Spat => "Spat",
            Capability::Fmt => "Fmt",
            Capability::Logic => "Logic",
            Capability::Recog => "Recog",
        }
    }
}

impl fmt::Display for Capability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn output_caps() {
        assert_eq!(max_tokens_for("LSI").unwrap(), 100);
        assert_eq!(max_tokens_for("MB").unwrap(), 4096);
        assert_eq!(max_tokens_for("OQ").unwrap(), 512);
        for t in [TaskId::LOI, TaskId::LOE, TaskId::LBI, TaskId::LBE] {
            assert_eq!(t.max_output_tokens(), 100);
        }
        assert_eq!(TaskId::MF.max_output_tokens(), 4096);
        for t in [TaskId::LMI, TaskId::OR, TaskId::OE] {
            assert_eq!(t.max_output_tokens(), 512);
        }
        assert!(matches!(max_tokens_for("XYZ"), Err(Error::Config(_))));
    }

    #[test]
    fn default_extension_matches_reference_totals() {
        let per_task: Vec<usize> = TaskId::ALL
            .iter()
            .map(|t| {
                let (e, v) = t.default_extension();
                e * v * 6
            })
            .collect();
        assert_eq!(per_task, vec![180, 150, 396, 432, 396, 432, 150, 150, 150, 180, 150]);
        assert_eq!(per_task.iter().sum::<usize>(), 2766);
    }
}
