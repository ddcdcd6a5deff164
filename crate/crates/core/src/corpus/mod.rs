//! Raw material for contexts: list elements, field-structured documents and
//! long tagged documents.

pub mod docs;
pub mod ingest;
pub mod list;
pub mod onedoc;
pub mod sentences;
pub mod synth;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub use docs::{build_doc_pool, DocFactory, DocRecord, DuplicationPlan};
pub use ingest::{ingest_texts, IngestFormat};
pub use list::{build_list_pool, ElementKind, ListElement};
pub use onedoc::{build_long_doc, LongDoc, LongDocOptions, TaggedSentence};
pub use sentences::{split_sentences, PunctuationSplitter, SentenceSplitter};

use crate::error::Result;
use crate::jsonl::{read_json, read_records, write_json, write_records};
use crate::task::Scenario;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub scenario: Scenario,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub element_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub doc_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sentence_count: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duplication_rate: Option<f64>,
    #[serde(default)]
    pub source_files: Vec<PathBuf>,
}

/// Source material for every scenario, as persisted under a corpus directory.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CorpusPools {
    pub list: Vec<ListElement>,
    /// Distinct 300–500 token texts for MultiDoc documents.
    pub doc_texts: Vec<String>,
    pub essays: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct TextRow {
    text: String,
}

pub const LIST_FILE: &str = "list.jsonl";
pub const DOC_TEXTS_FILE: &str = "doc_texts.jsonl";
pub const ESSAYS_FILE: &str = "essays.jsonl";

fn manifest_path(dir: &Path, file: &str) -> PathBuf {
    dir.join(format!("{}.manifest.json", file.trim_end_matches(".jsonl")))
}

impl CorpusPools {
    pub fn save(&self, dir: &Path, manifests: &[CorpusManifest]) -> Result<()> {
        write_records(&dir.join(LIST_FILE), &self.list)?;
        let rows: Vec<TextRow> = self.doc_texts.iter().map(|t| TextRow { text: t.clone() }).collect();
        write_records(&dir.join(DOC_TEXTS_FILE), &rows)?;
        let rows: Vec<TextRow> = self.essays.iter().map(|t| TextRow { text: t.clone() }).collect();
        write_records(&dir.join(ESSAYS_FILE), &rows)?;
        for m in manifests {
            let file = match m.scenario {
                Scenario::List => LIST_FILE,
                Scenario::MultiDoc => DOC_TEXTS_FILE,
                Scenario::OneDoc => ESSAYS_FILE,
            };
            write_json(&manifest_path(dir, file), m)?;
        }
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let list = read_records(&dir.join(LIST_FILE))?;
        let doc_texts = read_records::<TextRow>(&dir.join(DOC_TEXTS_FILE))?
            .into_iter()
            .map(|r| r.text)
            .collect();
        let essays = read_records::<TextRow>(&dir.join(ESSAYS_FILE))?
            .into_iter()
            .map(|r| r.text)
            .collect();
        Ok(CorpusPools {
            list,
            doc_texts,
            essays,
        })
    }

    pub fn load_manifests(dir: &Path) -> Result<Vec<CorpusManifest>> {
        [LIST_FILE, DOC_TEXTS_FILE, ESSAYS_FILE]
            .iter()
            .map(|f| manifest_path(dir, f))
            .filter(|p| p.exists())
            .map(|p| read_json(&p))
            .collect()
    }
}

pub const DEFAULT_UUID_COUNT: usize = 3600;

/// What to build a corpus from. Empty file lists fall back to the seeded
/// synthetic generator for that pool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusSpec {
    pub uuid_count: usize,
    pub synthetic: synth::SyntheticSizes,
    pub list_text_files: Vec<PathBuf>,
    pub doc_text_files: Vec<PathBuf>,
    pub essay_files: Vec<PathBuf>,
    pub ingest_format: Option<IngestFormat>,
}

impl Default for CorpusSpec {
    fn default() -> Self {
        CorpusSpec {
            uuid_count: DEFAULT_UUID_COUNT,
            synthetic: synth::SyntheticSizes::default(),
            list_text_files: Vec::new(),
            doc_text_files: Vec::new(),
            essay_files: Vec::new(),
            ingest_format: None,
        }
    }
}

pub fn build_pools(
    seed: u64,
    spec: &CorpusSpec,
    tok: &crate::tokenizer::Tokenizer,
) -> Result<(CorpusPools, Vec<CorpusManifest>)> {
    let needs_synthetic =
        spec.list_text_files.is_empty() || spec.doc_text_files.is_empty() || spec.essay_files.is_empty();
    let synthetic = needs_synthetic.then(|| synth::synthetic_corpus(seed, spec.synthetic, tok));

    let raw_list = if spec.list_text_files.is_empty() {
        synthetic.as_ref().expect("built above").nl_texts.clone()
    } else {
        ingest_texts(&spec.list_text_files, Some(spec.ingest_format.unwrap_or(IngestFormat::Lines)), list::NL_MIN_TOKENS, list::NL_MAX_TOKENS, tok)?
    };
    let nl_texts = list::filter_nl_texts(&raw_list, tok);
    let list = build_list_pool(seed, spec.uuid_count, &nl_texts, tok)?;

    let doc_texts = if spec.doc_text_files.is_empty() {
        docs::fit_doc_texts(&synthetic.as_ref().expect("built above").doc_texts, tok)
    } else {
        ingest_texts(&spec.doc_text_files, spec.ingest_format, docs::DOC_MIN_TOKENS, docs::DOC_MAX_TOKENS, tok)?
    };
    let mut seen = std::collections::HashSet::new();
    let doc_texts: Vec<String> = doc_texts.into_iter().filter(|t| seen.insert(t.clone())).collect();

    let essays = if spec.essay_files.is_empty() {
        synthetic.as_ref().expect("built above").essays.clone()
    } else {
        ingest_texts(&spec.essay_files, spec.ingest_format, 1, usize::MAX, tok)?
    };
    if essays.is_empty() {
        return Err(crate::error::Error::config("essay pool is empty"));
    }

    let manifests = vec![
        CorpusManifest {
            scenario: Scenario::List,
            seed,
            element_count: Some(list.len()),
            doc_count: None,
            sentence_count: None,
            duplication_rate: None,
            source_files: spec.list_text_files.clone(),
        },
        CorpusManifest {
            scenario: Scenario::MultiDoc,
            seed,
            element_count: None,
            doc_count: Some(doc_texts.len()),
            sentence_count: None,
            duplication_rate: Some(docs::DEFAULT_DUPLICATION_RATE),
            source_files: spec.doc_text_files.clone(),
        },
        CorpusManifest {
            scenario: Scenario::OneDoc,
            seed,
            element_count: None,
            doc_count: Some(essays.len()),
            sentence_count: Some(essays.iter().map(|e| split_sentences(e).len()).sum()),
            duplication_rate: None,
            source_files: spec.essay_files.clone(),
        },
    ];
    Ok((
        CorpusPools {
            list,
            doc_texts,
            essays,
        },
        manifests,
    ))
}
