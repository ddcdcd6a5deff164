use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};
use tracing::debug;

use crate::corpus::CorpusPools;
use crate::error::{Error, Result};
use crate::expansion::template::{variable_names, InstructionTemplate};
use crate::expansion::{sample_variables, ExpansionPlan};
use crate::jsonl::read_records;
use crate::rng::derive_seed;
use crate::task::{Scenario, TaskId};
use crate::taskgen::context::{build_context, parse_context, ContextOptions};
use crate::taskgen::gold::compute_gold;
use crate::taskgen::item::{assemble_prompt, item_id, BenchmarkItem, GoldAnswer};
use crate::taskgen::spaces::variable_space;
use crate::tokenizer::Tokenizer;

const BUILTIN_TEMPLATES: &str = include_str!("../../data/templates.jsonl");
const BUILTIN_DESCRIPTIONS: &str = include_str!("../../data/descriptions.json");

/// Variables each task's templates must reference.
pub fn expected_variables(task: TaskId) -> &'static [&'static str] {
    match task {
        TaskId::LSI => &["pos"],
        TaskId::LMI => &["positions"],
        TaskId::LOI => &["offset", "pos"],
        TaskId::LOE => &["anchor", "offset"],
        TaskId::LBI => &["pos", "width"],
        TaskId::LBE => &["anchor", "width"],
        TaskId::MB => &["labels", "rule"],
        TaskId::MF => &["key"],
        TaskId::OR => &["n"],
        TaskId::OQ => &["options", "sentence"],
        TaskId::OE => &["ids"],
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemplateSet {
    by_task: BTreeMap<TaskId, Vec<InstructionTemplate>>,
}

impl TemplateSet {
    pub fn builtin() -> Self {
        Self::parse(BUILTIN_TEMPLATES, Path::new("<builtin templates>")).expect("bundled templates are valid")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let rows: Vec<InstructionTemplate> = read_records(path)?;
        Self::from_templates(rows, path)
    }

    fn parse(raw: &str, origin: &Path) -> Result<Self> {
        let rows = raw
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                serde_json::from_str(l).map_err(|e| Error::validation(origin, i + 1, e.to_string()))
            })
            .collect::<Result<Vec<InstructionTemplate>>>()?;
        Self::from_templates(rows, origin)
    }

    pub fn from_templates(rows: Vec<InstructionTemplate>, origin: &Path) -> Result<Self> {
        let mut by_task: BTreeMap<TaskId, Vec<InstructionTemplate>> = BTreeMap::new();
        for t in rows {
            t.validate()?;
            let names = variable_names(&t.text)?;
            let expected: BTreeSet<String> = expected_variables(t.task_id).iter().map(|s| s.to_string()).collect();
            if names != expected {
                return Err(Error::config(format!(
                    "{}: {} template {} uses variables {names:?}, expected {expected:?}",
                    origin.display(),
                    t.task_id,
                    t.expression_index
                )));
            }
            by_task.entry(t.task_id).or_default().push(t);
        }
        for list in by_task.values_mut() {
            list.sort_by_key(|t| t.expression_index);
            for (i, t) in list.iter().enumerate() {
                if t.expression_index != i {
                    return Err(Error::config(format!(
                        "{}: {} expression indices must run 0..n without gaps",
                        origin.display(),
                        t.task_id
                    )));
                }
            }
        }
        Ok(TemplateSet { by_task })
    }

    pub fn for_task(&self, task: TaskId) -> &[InstructionTemplate] {
        self.by_task.get(&task).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn all(&self) -> impl Iterator<Item = &InstructionTemplate> {
        self.by_task.values().flatten()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Descriptions(pub HashMap<Scenario, String>);

impl Descriptions {
    pub fn builtin() -> Self {
        serde_json::from_str(BUILTIN_DESCRIPTIONS).expect("bundled descriptions are valid")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let d: Descriptions = crate::jsonl::read_json(path)?;
        for s in [Scenario::List, Scenario::MultiDoc, Scenario::OneDoc] {
            if !d.0.contains_key(&s) {
                return Err(Error::config(format!("{} lacks a {} description", path.display(), s.name())));
            }
        }
        Ok(d)
    }

    pub fn get(&self, scenario: Scenario) -> &str {
        &self.0[&scenario]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationConfig {
    pub seed: u64,
    pub plan: ExpansionPlan,
    #[serde(default)]
    pub context: ContextOptions,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GenerationSummary {
    pub items: usize,
    pub per_task: BTreeMap<TaskId, usize>,
    pub min_fill_ratio: Option<f64>,
    pub max_prompt_ratio: Option<f64>,
}

pub fn context_seed(seed: u64, task: TaskId, interval: &str) -> u64 {
    derive_seed(seed, &["context", task.as_str(), interval])
}

/// Generates every item of `cfg.plan`, handing each to `sink` in a fixed
/// order: task, interval, expression, variable assignment.
pub fn generate_dataset(
    cfg: &GenerationConfig,
    pools: &CorpusPools,
    templates: &TemplateSet,
    descriptions: &Descriptions,
    tok: &Tokenizer,
    sink: &mut dyn FnMut(BenchmarkItem) -> Result<()>,
) -> Result<GenerationSummary> {
    cfg.plan.validate()?;
    for tp in &cfg.plan.tasks {
        let available = templates.for_task(tp.task_id).len();
        if available < tp.expressions {
            return Err(Error::config(format!(
                "{} needs {} instruction templates, {available} available",
                tp.task_id, tp.expressions
            )));
        }
    }
    let mut summary = GenerationSummary::default();
    for tp in &cfg.plan.tasks {
        let task = tp.task_id;
        let scenario = task.scenario();
        let description = descriptions.get(scenario);
        for budget in &cfg.plan.intervals {
            let ctx_seed = context_seed(cfg.seed, task, &budget.interval_name);
            let built = build_context(scenario, pools, budget, ctx_seed, &cfg.context, tok)?;
            let (space, valid) = variable_space(task, &built.truth, ctx_seed)?;
            let assignments = sample_variables(&space, ctx_seed, tp.variables, valid.as_ref())?;
            let golds: Vec<GoldAnswer> = assignments
                .iter()
                .map(|a| compute_gold(task, &built.truth, a))
                .collect::<Result<_>>()?;
            let fill = built.token_count as f64 / budget.context_budget() as f64;
            summary.min_fill_ratio = Some(summary.min_fill_ratio.map_or(fill, |m: f64| m.min(fill)));
            debug!(%task, interval = %budget.interval_name, tokens = built.token_count, fill, "context built");
            for (e, template) in templates.for_task(task).iter().take(tp.expressions).enumerate() {
                for (v, (assignment, gold)) in assignments.iter().zip(&golds).enumerate() {
                    let instruction = template.render(assignment)?;
                    let prompt = assemble_prompt(description, &built.text, &instruction);
                    let prompt_tokens = tok.count(&prompt);
                    if prompt_tokens > budget.nominal_tokens {
                        return Err(Error::config(format!(
                            "{task} {} item exceeds its budget: {prompt_tokens} > {} tokens; raise reserve_tokens",
                            budget.interval_name, budget.nominal_tokens
                        )));
                    }
                    let ratio = prompt_tokens as f64 / budget.nominal_tokens as f64;
                    summary.max_prompt_ratio = Some(summary.max_prompt_ratio.map_or(ratio, |m: f64| m.max(ratio)));
                    let item = BenchmarkItem {
                        item_id: item_id(task, &budget.interval_name, e, v, ctx_seed, &instruction),
                        scenario,
                        task_id: task,
                        interval: budget.interval_name.clone(),
                        nominal_tokens: budget.nominal_tokens,
                        expression_index: e,
                        variable_index: v,
                        variable_assignment: assignment.clone(),
                        seed: ctx_seed,
                        description: description.to_string(),
                        context: built.text.clone(),
                        instruction,
                        gold: gold.clone(),
                        prompt_token_count: prompt_tokens,
                        context_token_count: built.token_count,
                        context_budget: budget.context_budget(),
                    };
                    sink(item)?;
                    summary.items += 1;
                    *summary.per_task.entry(task).or_default() += 1;
                }
            }
        }
    }
    Ok(summary)
}

/// Recomputes an item's gold answer from its context and assignment alone.
pub fn recompute_gold(item: &BenchmarkItem) -> Result<GoldAnswer> {
    let truth = parse_context(item.scenario, &item.context)?;
    compute_gold(item.task_id, &truth, &item.variable_assignment)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_templates_cover_reference_plan() {
        let set = TemplateSet::builtin();
        for task in TaskId::ALL {
            assert_eq!(set.for_task(task).len(), task.default_extension().0, "{task}");
        }
        assert_eq!(set.all().count(), 81);
        let d = Descriptions::builtin();
        assert!(d.get(Scenario::OneDoc).contains("[[KEY|"));
    }
}
