use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tokenizer::Tokenizer;

/// How a text file is cut into documents.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IngestFormat {
    /// One document per non-empty line.
    Lines,
    /// Documents separated by blank lines.
    #[default]
    Paragraphs,
    /// One JSON object per line with a `text` field.
    Jsonl,
}

impl IngestFormat {
    pub fn for_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl") => IngestFormat::Jsonl,
            _ => IngestFormat::Paragraphs,
        }
    }
}

fn split_documents(path: &Path, raw: &str, format: IngestFormat) -> Result<Vec<String>> {
    match format {
        IngestFormat::Lines => Ok(raw
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(str::to_string)
            .collect()),
        IngestFormat::Paragraphs => {
            let normalized = raw.replace("\r\n", "\n");
            Ok(normalized
                .split("\n\n")
                .map(str::trim)
                .filter(|p| !p.is_empty())
                .map(str::to_string)
                .collect())
        }
        IngestFormat::Jsonl => {
            #[derive(Deserialize)]
            struct Row {
                text: String,
            }
            raw.lines()
                .enumerate()
                .filter(|(_, l)| !l.trim().is_empty())
                .map(|(i, l)| {
                    serde_json::from_str::<Row>(l)
                        .map(|r| r.text)
                        .map_err(|e| Error::Ingestion {
                            path: path.to_path_buf(),
                            source: std::io::Error::new(
                                std::io::ErrorKind::InvalidData,
                                format!("line {}: {e}", i + 1),
                            ),
                        })
                })
                .collect()
        }
    }
}

/// Reads documents from `paths` and keeps those within the token bounds,
/// right-truncating any that run over `max_tokens`.
pub fn ingest_texts(
    paths: &[PathBuf],
    format: Option<IngestFormat>,
    min_tokens: usize,
    max_tokens: usize,
    tok: &Tokenizer,
) -> Result<Vec<String>> {
    if min_tokens > max_tokens {
        return Err(Error::config(format!("min_tokens {min_tokens} exceeds max_tokens {max_tokens}")));
    }
    let mut pool = Vec::new();
    for path in paths {
        let raw = std::fs::read_to_string(path).map_err(|source| Error::Ingestion {
            path: path.clone(),
            source,
        })?;
        let format = format.unwrap_or_else(|| IngestFormat::for_path(path));
        for doc in split_documents(path, &raw, format)? {
            let cut = tok.truncate_right(&doc, max_tokens).trim_end();
            if tok.count(cut) >= min_tokens && !cut.is_empty() {
                pool.push(cut.to_string());
            }
        }
    }
    if pool.is_empty() {
        return Err(Error::config(format!(
            "no document within {min_tokens}..={max_tokens} tokens in {} file(s)",
            paths.len()
        )));
    }
    Ok(pool)
}
