//! The run configuration: one TOML document covering corpus, generation,
//! scoring and model targets. `${VAR}` references are replaced from the
//! environment before parsing.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::corpus::CorpusSpec;
use crate::error::{Error, Result};
use crate::expansion::recs::EndpointConfig;
use crate::expansion::{ExpansionPlan, TaskPlan};
use crate::harness::{BackendConfig, ModelTarget, PromptMode, RetryPolicy};
use crate::task::TaskId;
use crate::taskgen::ContextOptions;
use crate::tokenizer::{TokenBudget, DEFAULT_INTERVALS, DEFAULT_RESERVE_TOKENS};

pub const DEFAULT_SEED: u64 = 7;

static ENV_REF: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\$\{([A-Za-z_][A-Za-z0-9_]*)\}").expect("valid pattern"));

/// Replaces `${NAME}` with the value of environment variable `NAME`.
pub fn interpolate_env(raw: &str, lookup: impl Fn(&str) -> Option<String>) -> Result<String> {
    let mut missing = Vec::new();
    let out = ENV_REF.replace_all(raw, |c: &regex::Captures<'_>| {
        lookup(&c[1]).unwrap_or_else(|| {
            missing.push(c[1].to_string());
            String::new()
        })
    });
    if !missing.is_empty() {
        return Err(Error::config(format!("unset environment variables: {}", missing.join(", "))));
    }
    Ok(out.into_owned())
}

/// Which tasks and intervals to generate, and how many phrasings and
/// assignments per task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlanSpec {
    pub tasks: Vec<TaskId>,
    pub intervals: Vec<String>,
    pub reserve_tokens: usize,
    /// Uniform override of the expression count for every task.
    pub expressions: Option<usize>,
    /// Uniform override of the assignment count for every task.
    pub variables: Option<usize>,
    /// Per-task `[expressions, variables]`, applied after the uniform overrides.
    pub extension: BTreeMap<TaskId, (usize, usize)>,
}

impl Default for PlanSpec {
    fn default() -> Self {
        PlanSpec {
            tasks: TaskId::ALL.to_vec(),
            intervals: DEFAULT_INTERVALS.iter().map(|s| s.to_string()).collect(),
            reserve_tokens: DEFAULT_RESERVE_TOKENS,
            expressions: None,
            variables: None,
            extension: BTreeMap::new(),
        }
    }
}

impl PlanSpec {
    pub fn load(path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        toml::from_str(&raw).map_err(|e| toml_error(path, &raw, e))
    }

    pub fn to_plan(&self) -> Result<ExpansionPlan> {
        let tasks = self
            .tasks
            .iter()
            .map(|&task_id| {
                let (e, v) = task_id.default_extension();
                let (e, v) = (self.expressions.unwrap_or(e), self.variables.unwrap_or(v));
                let (expressions, variables) = self.extension.get(&task_id).copied().unwrap_or((e, v));
                TaskPlan {
                    task_id,
                    expressions,
                    variables,
                }
            })
            .collect();
        let intervals = self
            .intervals
            .iter()
            .map(|l| TokenBudget::from_label(l, self.reserve_tokens))
            .collect::<Result<Vec<_>>>()?;
        let plan = ExpansionPlan { tasks, intervals };
        plan.validate()?;
        Ok(plan)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerationSection {
    /// Pools written by `build-corpus`; when unset, pools are built in memory
    /// from the `[corpus]` section.
    pub corpus_dir: Option<PathBuf>,
    pub templates: Option<PathBuf>,
    pub descriptions: Option<PathBuf>,
    pub plan: PlanSpec,
    pub context: ContextOptions,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoringSection {
    pub rubric: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub parallel: usize,
    pub retry: RetryPolicy,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            parallel: 4,
            retry: RetryPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub name: String,
    #[serde(default)]
    pub mode: PromptMode,
    #[serde(default)]
    pub context_window: Option<usize>,
    pub backend: BackendConfig,
}

impl ModelConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let raw = interpolate_env(&raw, |k| std::env::var(k).ok())?;
        toml::from_str(&raw).map_err(|e| toml_error(path, &raw, e))
    }

    /// A mock model named after its behavior, e.g. `mock:gold`.
    pub fn mock(spec: &str) -> Result<Self> {
        spec.parse::<crate::harness::MockKind>()?;
        Ok(ModelConfig {
            name: format!("mock-{}", spec.replace(':', "-")),
            mode: PromptMode::Chat,
            context_window: None,
            backend: BackendConfig::Mock { mock: spec.to_string() },
        })
    }

    pub fn target(&self) -> ModelTarget {
        ModelTarget {
            name: self.name.clone(),
            mode: self.mode,
            context_window: self.context_window,
        }
    }
}

/// Rewriting and embedding sources for instruction expansion. Fixture files
/// take precedence over endpoints.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExpansionSection {
    pub seed_templates: Option<PathBuf>,
    pub rewrites_file: Option<PathBuf>,
    pub embeddings_file: Option<PathBuf>,
    pub rewrite_endpoint: Option<EndpointConfig>,
    pub embedding_endpoint: Option<EndpointConfig>,
    /// Rewrites requested per seed template.
    pub candidates: Option<usize>,
    pub reviewed_list: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub corpus: CorpusSpec,
    pub generation: GenerationSection,
    pub scoring: ScoringSection,
    pub run: RunSection,
    pub expansion: ExpansionSection,
    pub models: Vec<ModelConfig>,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            seed: DEFAULT_SEED,
            out_dir: PathBuf::from("out"),
            corpus: CorpusSpec::default(),
            generation: GenerationSection::default(),
            scoring: ScoringSection::default(),
            run: RunSection::default(),
            expansion: ExpansionSection::default(),
            models: Vec::new(),
        }
    }
}

fn toml_error(path: &Path, raw: &str, e: toml::de::Error) -> Error {
    let line = e
        .span()
        .map(|s| raw[..s.start.min(raw.len())].matches('\n').count() + 1)
        .unwrap_or(0);
    Error::validation(path, line, e.message().to_string())
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&raw, path)
    }

    pub fn parse(raw: &str, origin: &Path) -> Result<Self> {
        let raw = interpolate_env(raw, |k| std::env::var(k).ok())?;
        let mut cfg: Config = toml::from_str(&raw).map_err(|e| toml_error(origin, &raw, e))?;
        // relative paths in the file are relative to the file
        if let Some(base) = origin.parent().filter(|p| !p.as_os_str().is_empty()) {
            cfg.rebase(base);
        }
        Ok(cfg)
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.out_dir);
        self.corpus.list_text_files.iter_mut().for_each(fix);
        self.corpus.doc_text_files.iter_mut().for_each(fix);
        self.corpus.essay_files.iter_mut().for_each(fix);
        for p in [
            &mut self.generation.corpus_dir,
            &mut self.generation.templates,
            &mut self.generation.descriptions,
            &mut self.scoring.rubric,
            &mut self.expansion.seed_templates,
            &mut self.expansion.rewrites_file,
            &mut self.expansion.embeddings_file,
            &mut self.expansion.reviewed_list,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
    }

    /// Fails when a referenced input file or directory is missing or the
    /// plan is invalid.
    pub fn validate(&self) -> Result<()> {
        let inputs = self
            .corpus
            .list_text_files
            .iter()
            .chain(&self.corpus.doc_text_files)
            .chain(&self.corpus.essay_files)
            .chain(self.generation.corpus_dir.iter())
            .chain(self.generation.templates.iter())
            .chain(self.generation.descriptions.iter())
            .chain(self.scoring.rubric.iter())
            .chain(self.expansion.seed_templates.iter())
            .chain(self.expansion.rewrites_file.iter())
            .chain(self.expansion.embeddings_file.iter())
            .chain(self.expansion.reviewed_list.iter());
        for p in inputs {
            if !p.exists() {
                return Err(Error::config(format!("referenced path {} does not exist", p.display())));
            }
        }
        self.generation.plan.to_plan()?;
        let ctx = &self.generation.context;
        if !(0.0..1.0).contains(&ctx.duplication_rate) {
            return Err(Error::config("duplication_rate must lie in [0, 1)"));
        }
        if self.run.parallel == 0 {
            return Err(Error::config("run.parallel must be at least 1"));
        }
        let mut names = std::collections::HashSet::new();
        for m in &self.models {
            if !names.insert(&m.name) {
                return Err(Error::config(format!("model `{}` is configured twice", m.name)));
            }
        }
        Ok(())
    }

    /// SHA-256 of the effective configuration in canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        crate::rng::sha256_hex(json.as_bytes())
    }

    pub fn model(&self, name: &str) -> Option<&ModelConfig> {
        self.models.iter().find(|m| m.name == name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn env_interpolation() {
        let env = |k: &str| (k == "TOKEN").then(|| "abc".to_string());
        assert_eq!(interpolate_env("key = \"${TOKEN}\"", env).unwrap(), "key = \"abc\"");
        assert_eq!(interpolate_env("no refs $HOME", env).unwrap(), "no refs $HOME");
        assert!(matches!(interpolate_env("${NOPE}", env), Err(Error::Config(_))));
    }

    #[test]
    fn defaults_give_reference_plan() {
        let cfg = Config::parse("", Path::new("x.toml")).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.generation.plan.to_plan().unwrap(), ExpansionPlan::reference());
    }

    #[test]
    fn plan_overrides() {
        let raw = r#"
            [generation.plan]
            tasks = ["LSI", "MB"]
            intervals = ["4k"]
            expressions = 3
            variables = 3
            extension = { MB = [2, 4] }
        "#;
        let cfg = Config::parse(raw, Path::new("c.toml")).unwrap();
        let plan = cfg.generation.plan.to_plan().unwrap();
        assert_eq!(plan.expected_items(), 9 + 8);
    }

    #[test]
    fn unknown_keys_report_their_line() {
        let raw = "seed = 1\n\n[run]\nparallell = 3\n";
        match Config::parse(raw, Path::new("c.toml")) {
            Err(Error::Validation { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn models_and_hash() {
        let raw = r#"
            [[models]]
            name = "local"
            mode = "completion"
            context_window = 32768
            backend = { type = "http", base_url = "http://localhost:8000/v1", model = "m" }

            [[models]]
            name = "g"
            backend = { type = "mock", mock = "gold" }
        "#;
        let cfg = Config::parse(raw, Path::new("c.toml")).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.model("local").unwrap().mode, PromptMode::Completion);
        let mut other = cfg.clone();
        assert_eq!(cfg.hash(), other.hash());
        other.seed += 1;
        assert_ne!(cfg.hash(), other.hash());
        assert!(ModelConfig::mock("mangled:shuffled").is_ok());
        assert!(ModelConfig::mock("bogus").is_err());
    }

    #[test]
    fn partial_sections_keep_defaults() {
        let raw = "[generation.context]\nduplication_rate = 0.5\n\n[run]\nretry = { max_attempts = 2 }\n\n[corpus.synthetic]\nessays = 20\n";
        let cfg = Config::parse(raw, Path::new("c.toml")).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.generation.context.duplication_rate, 0.5);
        assert_eq!(cfg.generation.context.min_tags, ContextOptions::default().min_tags);
        assert_eq!(cfg.run.retry.max_attempts, 2);
        assert_eq!(cfg.run.retry.max_backoff_ms, RetryPolicy::default().max_backoff_ms);
        assert!(Config::parse("[generation.context]\nduplicate_rate = 0.5\n", Path::new("c.toml")).is_err());
    }

    #[test]
    fn missing_inputs_fail_validation() {
        let cfg = Config::parse("[scoring]\nrubric = \"/no/such/rubric.json\"\n", Path::new("c.toml")).unwrap();
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }
}
