use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use serde::Serialize;
use tracing::info;

use longif::config::{Config, ModelConfig, PlanSpec};
use longif::corpus::{build_pools, CorpusManifest, CorpusPools};
use longif::expansion::recs::{
    reviewed_list, FixtureEmbeddings, FixtureRewrites, HttpEmbedder, HttpRewriter,
};
use longif::expansion::{recs_rewrite, recs_select, EmbeddingProvider, ExpansionPlan, RewriteProvider};
use longif::harness::{build_backend, dataset_hash, latest_responses, run_items_blocking, ResponseRecord, RunOptions};
use longif::jsonl::{read_records, read_records_numbered, write_json, write_records, JsonlWriter};
use longif::metrics::{build_report, report::summary_markdown, write_report};
use longif::rng::derive_seed;
use longif::scoring::{score_record, Rubric, ScoreRecord};
use longif::taskgen::{
    generate_dataset, BenchmarkItem, ContextOptions, Descriptions, GenerationConfig, GenerationSummary, TemplateSet,
};
use longif::tokenizer::default_tokenizer;
use longif::{Error, Result};

use crate::{Cli, Command, GlobalOpts};

pub const DATASET_FILE: &str = "dataset.jsonl";
pub const DATASET_MANIFEST: &str = "dataset.manifest.json";

/// Sidecar of a generated dataset: everything needed to regenerate it.
#[derive(Debug, Serialize)]
struct DatasetManifest {
    dataset_file: String,
    dataset_hash: String,
    config_hash: String,
    seed: u64,
    tokenizer: String,
    plan: ExpansionPlan,
    context: ContextOptions,
    corpus: Vec<CorpusManifest>,
    summary: GenerationSummary,
}

fn load_config(g: &GlobalOpts) -> Result<Config> {
    let mut cfg = match &g.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(seed) = g.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent().filter(|p| !p.as_os_str().is_empty()) {
        Some(dir) => std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e)),
        None => Ok(()),
    }
}

pub fn dispatch(cli: Cli) -> Result<()> {
    let mut cfg = load_config(&cli.global)?;
    let out = cli.global.out.clone();
    match cli.command {
        Command::BuildCorpus => build_corpus(&cfg, out.unwrap_or_else(|| cfg.out_dir.join("corpus"))),
        Command::Generate { plan, corpus } => {
            if let Some(p) = plan {
                cfg.generation.plan = PlanSpec::load(&p)?;
            }
            if let Some(c) = corpus {
                cfg.generation.corpus_dir = Some(c);
            }
            cfg.validate()?;
            let dir = out.unwrap_or_else(|| cfg.out_dir.clone());
            generate(&cfg, &dir)
        }
        Command::Run {
            dataset,
            model,
            parallel,
            resume,
        } => {
            let model = resolve_model(&cfg, &model)?;
            let out = out.unwrap_or_else(|| cfg.out_dir.join(format!("responses-{}.jsonl", model.name)));
            run(&cfg, &dataset, &model, &out, parallel.unwrap_or(cfg.run.parallel), resume)
        }
        Command::Score {
            dataset,
            responses,
            rubric,
        } => {
            let rubric = match rubric.or_else(|| cfg.scoring.rubric.clone()) {
                Some(p) => Rubric::load(&p)?,
                None => Rubric::builtin(),
            };
            score(&dataset, &responses, &rubric, &out.unwrap_or_else(|| cfg.out_dir.join("scores.jsonl")))
        }
        Command::Report { scores, force } => report(&scores, force, &out.unwrap_or_else(|| cfg.out_dir.join("report"))),
        Command::Expand { plan } => {
            if let Some(p) = plan {
                cfg.generation.plan = PlanSpec::load(&p)?;
            }
            let out = out.unwrap_or_else(|| cfg.out_dir.join("templates.jsonl"));
            expand(&cfg, &out)
        }
    }
}

fn build_corpus(cfg: &Config, dir: PathBuf) -> Result<()> {
    let (pools, manifests) = build_pools(cfg.seed, &cfg.corpus, default_tokenizer())?;
    pools.save(&dir, &manifests)?;
    println!(
        "wrote {} list elements, {} document texts and {} essays to {}",
        pools.list.len(),
        pools.doc_texts.len(),
        pools.essays.len(),
        dir.display()
    );
    Ok(())
}

fn generate(cfg: &Config, dir: &Path) -> Result<()> {
    let tok = default_tokenizer();
    let (pools, corpus) = match &cfg.generation.corpus_dir {
        Some(d) => (CorpusPools::load(d)?, CorpusPools::load_manifests(d)?),
        None => build_pools(cfg.seed, &cfg.corpus, tok)?,
    };
    let templates = match &cfg.generation.templates {
        Some(p) => TemplateSet::load(p)?,
        None => TemplateSet::builtin(),
    };
    let descriptions = match &cfg.generation.descriptions {
        Some(p) => Descriptions::load(p)?,
        None => Descriptions::builtin(),
    };
    let gen = GenerationConfig {
        seed: cfg.seed,
        plan: cfg.generation.plan.to_plan()?,
        context: cfg.generation.context.clone(),
    };

    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(DATASET_FILE);
    // written aside and renamed so a failed run never leaves a partial dataset
    let partial = dir.join(format!("{DATASET_FILE}.partial"));
    let mut writer = JsonlWriter::create(&partial)?;
    let summary = generate_dataset(&gen, &pools, &templates, &descriptions, tok, &mut |item| writer.write(&item))?;
    writer.finish()?;
    std::fs::rename(&partial, &path).map_err(|e| Error::io(&path, e))?;

    let manifest = DatasetManifest {
        dataset_file: DATASET_FILE.to_string(),
        dataset_hash: dataset_hash(&path)?,
        config_hash: cfg.hash(),
        seed: cfg.seed,
        tokenizer: tok.name().to_string(),
        plan: gen.plan,
        context: gen.context,
        corpus,
        summary,
    };
    write_json(&dir.join(DATASET_MANIFEST), &manifest)?;
    println!(
        "wrote {} items to {} (min fill {:.3})",
        manifest.summary.items,
        path.display(),
        manifest.summary.min_fill_ratio.unwrap_or(0.0)
    );
    Ok(())
}

fn resolve_model(cfg: &Config, spec: &str) -> Result<ModelConfig> {
    if let Some(m) = cfg.model(spec) {
        return Ok(m.clone());
    }
    if let Some(kind) = spec.strip_prefix("mock:") {
        return ModelConfig::mock(kind);
    }
    let path = Path::new(spec);
    if path.is_file() {
        return ModelConfig::load(path);
    }
    Err(Error::config(format!(
        "model `{spec}` is neither a configured name, a model file nor mock:<kind>"
    )))
}

fn run(cfg: &Config, dataset: &Path, model: &ModelConfig, out: &Path, parallel: usize, resume: bool) -> Result<()> {
    let items: Vec<BenchmarkItem> = read_records(dataset)?;
    let hash = dataset_hash(dataset)?;
    let backend = build_backend(&model.backend)?;
    let opts = RunOptions {
        concurrency: parallel.max(1),
        retry: cfg.run.retry.clone(),
        resume,
    };
    ensure_parent(out)?;
    let summary = run_items_blocking(&items, &model.target(), backend.as_ref(), default_tokenizer(), out, &opts, &hash)?;
    println!(
        "{}: {} items, {} already done, {} completed, {} failed -> {}",
        model.name,
        summary.total,
        summary.skipped,
        summary.completed,
        summary.failed,
        out.display()
    );
    if summary.failed > 0 {
        return Err(Error::Transport(format!(
            "{} of {} requests failed; rerun with --resume to retry them",
            summary.failed,
            summary.total - summary.skipped
        )));
    }
    Ok(())
}

fn score(dataset: &Path, responses: &[PathBuf], rubric: &Rubric, out: &Path) -> Result<()> {
    let hash = dataset_hash(dataset)?;
    let items: HashMap<String, BenchmarkItem> = read_records::<BenchmarkItem>(dataset)?
        .into_iter()
        .map(|i| (i.item_id.clone(), i))
        .collect();

    let mut all = Vec::new();
    for path in responses {
        for (line, r) in read_records_numbered::<ResponseRecord>(path)? {
            if !items.contains_key(&r.item_id) {
                return Err(Error::validation(path, line, format!("unknown item_id {}", r.item_id)));
            }
            if r.dataset_hash != hash {
                return Err(Error::validation(
                    path,
                    line,
                    format!("response is for dataset {}, not {hash}", r.dataset_hash),
                ));
            }
            all.push(r);
        }
    }

    ensure_parent(out)?;
    let mut writer = JsonlWriter::create(out)?;
    let mut per_model: BTreeMap<String, usize> = BTreeMap::new();
    for r in latest_responses(all) {
        let item = &items[&r.item_id];
        let text = if r.error.is_none() { r.raw_text.as_deref() } else { None };
        writer.write(&score_record(rubric, item, &r.model, text, &hash)?)?;
        *per_model.entry(r.model).or_default() += 1;
    }
    let n = writer.finish()?;
    for (model, count) in &per_model {
        info!(%model, count, "scored");
    }
    println!("wrote {n} scores for {} model(s) to {}", per_model.len(), out.display());
    Ok(())
}

fn report(scores: &[PathBuf], force: bool, dir: &Path) -> Result<()> {
    let mut records: Vec<ScoreRecord> = Vec::new();
    for p in scores {
        records.extend(read_records::<ScoreRecord>(p)?);
    }
    let report = build_report(&records, force)?;
    write_report(&report, dir)?;
    print!("{}", summary_markdown(&report));
    println!("\nreport written to {}", dir.display());
    Ok(())
}

fn expand(cfg: &Config, out: &Path) -> Result<()> {
    let x = &cfg.expansion;
    let seeds = match &x.seed_templates {
        Some(p) => TemplateSet::load(p)?,
        None => TemplateSet::builtin(),
    };
    let rewriter: Box<dyn RewriteProvider> = match (&x.rewrites_file, &x.rewrite_endpoint) {
        (Some(p), _) => Box::new(FixtureRewrites::load(p)?),
        (None, Some(e)) => Box::new(HttpRewriter { endpoint: e.clone() }),
        (None, None) => return Err(Error::config("expansion needs rewrites_file or rewrite_endpoint")),
    };
    let embedder: Box<dyn EmbeddingProvider> = match (&x.embeddings_file, &x.embedding_endpoint) {
        (Some(p), _) => Box::new(FixtureEmbeddings::load(p)?),
        (None, Some(e)) => Box::new(HttpEmbedder { endpoint: e.clone() }),
        (None, None) => return Err(Error::config("expansion needs embeddings_file or embedding_endpoint")),
    };
    let approved = x.reviewed_list.as_deref().map(reviewed_list).transpose()?;
    let per_seed = x.candidates.unwrap_or(10);
    let plan = cfg.generation.plan.to_plan()?;

    let mut selected = Vec::new();
    for tp in &plan.tasks {
        let mut candidates = seeds.for_task(tp.task_id).to_vec();
        for seed in seeds.for_task(tp.task_id) {
            candidates.extend(recs_rewrite(seed, rewriter.as_ref(), per_seed)?);
        }
        let mut seen = std::collections::HashSet::new();
        candidates.retain(|c| seen.insert(c.text.clone()));
        let usable = |t: &longif::expansion::InstructionTemplate| approved.as_ref().is_none_or(|a| a.contains(&t.text));
        let picks = recs_select(
            &candidates,
            embedder.as_ref(),
            tp.expressions,
            &usable,
            derive_seed(cfg.seed, &["recs", tp.task_id.as_str()]),
        )?;
        info!(task = %tp.task_id, candidates = candidates.len(), selected = picks.len(), "expanded");
        selected.extend(picks.into_iter().enumerate().map(|(i, mut t)| {
            t.expression_index = i;
            t
        }));
    }
    // the output must load as a template set
    TemplateSet::from_templates(selected.clone(), out)?;
    ensure_parent(out)?;
    write_records(out, &selected)?;
    println!("wrote {} templates to {}", selected.len(), out.display());
    Ok(())
}
