//! Instruction expansion: phrasings (rewrite, cluster, select), variable
//! assignments and length intervals.

pub mod kmeans;
pub mod plan;
pub mod recs;
pub mod template;
pub mod variables;

pub use plan::{ExpansionPlan, TaskPlan};
pub use recs::{recs_rewrite, recs_select, EmbeddingProvider, RewriteProvider};
pub use template::{render, Assignment, InstructionTemplate};
pub use variables::{sample_variables, DocRule, Section, VarKind, VarValue, VariableSlot, VariableSpace};
