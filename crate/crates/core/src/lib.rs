//! Generation, execution and rubric scoring for a long-context
//! instruction-following benchmark.

pub mod config;
pub mod corpus;
pub mod error;
pub mod expansion;
pub mod harness;
pub mod jsonl;
pub mod metrics;
pub mod rng;
pub mod scoring;
pub mod task;
pub mod taskgen;
pub mod tokenizer;

pub use error::{Error, ErrorCategory, Result};
pub use task::{Capability, Scenario, TaskId};
pub use tokenizer::{count_tokens, truncate_right, TokenBudget, Tokenizer};
