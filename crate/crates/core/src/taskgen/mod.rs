//! Benchmark items: description, context sized to a budget, rendered
//! instruction and gold answer.

pub mod context;
pub mod generate;
pub mod gold;
pub mod item;
pub mod spaces;

pub use context::{build_context, parse_context, ContextOptions, GroundTruth};
pub use generate::{generate_dataset, recompute_gold, Descriptions, GenerationConfig, GenerationSummary, TemplateSet};
pub use gold::{compute_gold, serialize_gold};
pub use item::{BenchmarkItem, GoldAnswer};
