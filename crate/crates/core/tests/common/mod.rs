#![allow(dead_code)]

use longif::corpus::{build_pools, CorpusPools, CorpusSpec};
use longif::expansion::{ExpansionPlan, TaskPlan};
use longif::taskgen::{generate_dataset, BenchmarkItem, Descriptions, GenerationConfig, TemplateSet};
use longif::tokenizer::default_tokenizer;
use longif::{TaskId, TokenBudget};

pub fn pools(seed: u64) -> CorpusPools {
    build_pools(seed, &CorpusSpec::default(), default_tokenizer()).unwrap().0
}

pub fn small_plan(intervals: &[&str], expressions: usize, variables: usize) -> ExpansionPlan {
    ExpansionPlan {
        tasks: TaskId::ALL
            .iter()
            .map(|&task_id| TaskPlan { task_id, expressions, variables })
            .collect(),
        intervals: intervals
            .iter()
            .map(|l| TokenBudget::from_label(l, longif::tokenizer::DEFAULT_RESERVE_TOKENS).unwrap())
            .collect(),
    }
}

pub fn generate(seed: u64, plan: ExpansionPlan) -> Vec<BenchmarkItem> {
    let pools = pools(seed);
    let cfg = GenerationConfig { seed, plan, context: Default::default() };
    let mut items = Vec::new();
    generate_dataset(
        &cfg,
        &pools,
        &TemplateSet::builtin(),
        &Descriptions::builtin(),
        default_tokenizer(),
        &mut |item| {
            items.push(item);
            Ok(())
        },
    )
    .unwrap();
    items
}
