//! Rewrite, cluster and select: grows a set of instruction phrasings and
//! keeps one representative per cluster of embeddings.

use std::collections::{HashMap, HashSet};
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use tracing::{info, warn};

use crate::error::{Error, Result};
use crate::expansion::kmeans::{kmeans, sq_dist, DEFAULT_MAX_ITER};
use crate::expansion::template::{placeholders, InstructionTemplate};
use crate::jsonl::read_records;
use crate::task::TaskId;

pub trait RewriteProvider {
    fn rewrite(&self, template: &InstructionTemplate, n: usize) -> Result<Vec<String>>;
}

pub trait EmbeddingProvider {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>>;
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RewriteRow {
    pub task_id: TaskId,
    pub expression_index: usize,
    pub text: String,
}

/// Canned rewrites keyed by the template they rewrite.
#[derive(Debug, Clone, Default)]
pub struct FixtureRewrites {
    rows: HashMap<(TaskId, usize), Vec<String>>,
}

impl FixtureRewrites {
    pub fn load(path: &Path) -> Result<Self> {
        Ok(Self::from_rows(read_records::<RewriteRow>(path)?))
    }

    pub fn from_rows(rows: impl IntoIterator<Item = RewriteRow>) -> Self {
        let mut map: HashMap<(TaskId, usize), Vec<String>> = HashMap::new();
        for r in rows {
            map.entry((r.task_id, r.expression_index)).or_default().push(r.text);
        }
        FixtureRewrites { rows: map }
    }
}

impl RewriteProvider for FixtureRewrites {
    fn rewrite(&self, template: &InstructionTemplate, n: usize) -> Result<Vec<String>> {
        Ok(self
            .rows
            .get(&(template.task_id, template.expression_index))
            .map(|v| v.iter().take(n).cloned().collect())
            .unwrap_or_default())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmbeddingRow {
    pub text: String,
    pub vector: Vec<f64>,
}

/// Precomputed vectors looked up by exact text.
#[derive(Debug, Clone, Default)]
pub struct FixtureEmbeddings {
    vectors: HashMap<String, Vec<f64>>,
}

impl FixtureEmbeddings {
    pub fn load(path: &Path) -> Result<Self> {
        Ok(Self::from_rows(read_records::<EmbeddingRow>(path)?))
    }

    pub fn from_rows(rows: impl IntoIterator<Item = EmbeddingRow>) -> Self {
        FixtureEmbeddings {
            vectors: rows.into_iter().map(|r| (r.text, r.vector)).collect(),
        }
    }
}

impl EmbeddingProvider for FixtureEmbeddings {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>> {
        texts
            .iter()
            .map(|t| {
                self.vectors
                    .get(t)
                    .cloned()
                    .ok_or_else(|| Error::Expansion(format!("no fixture embedding for: {t}")))
            })
            .collect()
    }
}

/// An OpenAI-compatible HTTP endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointConfig {
    pub base_url: String,
    pub model: String,
    /// Name of the environment variable holding the API key.
    #[serde(default)]
    pub api_key_env: Option<String>,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
}

fn default_timeout() -> u64 {
    120
}

fn http_client(cfg: &EndpointConfig) -> Result<reqwest::blocking::Client> {
    reqwest::blocking::Client::builder()
        .timeout(Duration::from_secs(cfg.timeout_secs))
        .build()
        .map_err(|e| Error::Transport(e.to_string()))
}

fn api_key(cfg: &EndpointConfig) -> Result<Option<String>> {
    match &cfg.api_key_env {
        None => Ok(None),
        Some(var) => std::env::var(var)
            .map(Some)
            .map_err(|_| Error::config(format!("environment variable {var} is not set"))),
    }
}

fn post_json(cfg: &EndpointConfig, path: &str, body: &serde_json::Value) -> Result<serde_json::Value> {
    let url = format!("{}/{}", cfg.base_url.trim_end_matches('/'), path);
    let mut req = http_client(cfg)?.post(&url).json(body);
    if let Some(key) = api_key(cfg)? {
        req = req.bearer_auth(key);
    }
    let resp = req.send().map_err(|e| Error::Transport(format!("{url}: {e}")))?;
    let status = resp.status();
    if !status.is_success() {
        return Err(Error::Transport(format!("{url}: HTTP {status}")));
    }
    resp.json().map_err(|e| Error::Transport(format!("{url}: {e}")))
}

pub fn rewrite_request(template: &InstructionTemplate, n: usize) -> String {
    let mut prompt = String::new();
    prompt.push_str("Write ");
    prompt.push_str(&n.to_string());
    prompt.push_str(
        " differently worded versions of the instruction below. Every version must request \
         exactly the same thing and the same answer format. Placeholders are written in curly \
         braces, such as {name}; copy each of them unchanged into every version and do not \
         invent new ones. Put one version per line, without numbering or any other text.\n\n\
         Instruction:\n",
    );
    prompt.push_str(&template.text);
    prompt
}

/// Strips list decorations a chat model may add despite being asked not to.
fn clean_line(line: &str) -> Option<String> {
    let trimmed = line.trim();
    let without_number = trimmed
        .trim_start_matches(|c: char| c.is_ascii_digit())
        .trim_start_matches(['.', ')'])
        .trim_start();
    let body = if without_number.len() < trimmed.len() && trimmed.starts_with(|c: char| c.is_ascii_digit()) {
        without_number
    } else {
        trimmed.trim_start_matches(['-', '*']).trim_start()
    };
    (!body.is_empty()).then(|| body.to_string())
}

pub struct HttpRewriter {
    pub endpoint: EndpointConfig,
}

impl RewriteProvider for HttpRewriter {
    fn rewrite(&self, template: &InstructionTemplate, n: usize) -> Result<Vec<String>> {
        if n == 0 {
            return Ok(Vec::new());
        }
        let body = serde_json::json!({
            "model": self.endpoint.model,
            "messages": [{"role": "user", "content": rewrite_request(template, n)}],
            "temperature": 1.0,
        });
        let resp = post_json(&self.endpoint, "chat/completions", &body)?;
        let content = resp["choices"][0]["message"]["content"]
            .as_str()
            .ok_or_else(|| Error::Transport("chat response has no message content".into()))?;
        Ok(content.lines().filter_map(clean_line).take(n).collect())
    }
}

pub struct HttpEmbedder {
    pub endpoint: EndpointConfig,
}

impl EmbeddingProvider for HttpEmbedder {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>> {
        let body = serde_json::json!({"model": self.endpoint.model, "input": texts});
        let resp = post_json(&self.endpoint, "embeddings", &body)?;
        let data = resp["data"]
            .as_array()
            .ok_or_else(|| Error::Transport("embedding response has no data".into()))?;
        let vectors: Vec<Vec<f64>> = data
            .iter()
            .map(|d| {
                d["embedding"]
                    .as_array()
                    .map(|v| v.iter().filter_map(|x| x.as_f64()).collect())
                    .ok_or_else(|| Error::Transport("embedding entry has no vector".into()))
            })
            .collect::<Result<_>>()?;
        if vectors.len() != texts.len() {
            return Err(Error::Transport(format!(
                "{} embeddings returned for {} texts",
                vectors.len(),
                texts.len()
            )));
        }
        Ok(vectors)
    }
}

/// Asks for `n` rewrites and keeps those whose placeholder set matches the
/// source template exactly.
pub fn recs_rewrite(
    template: &InstructionTemplate,
    provider: &dyn RewriteProvider,
    n: usize,
) -> Result<Vec<InstructionTemplate>> {
    if n == 0 {
        return Ok(Vec::new());
    }
    let raw = provider.rewrite(template, n)?;
    let mut out = Vec::new();
    for text in raw {
        match placeholders(&text) {
            Ok(found) if found == template.placeholders => out.push(InstructionTemplate {
                task_id: template.task_id,
                expression_index: out.len(),
                text,
                placeholders: found,
            }),
            Ok(found) => warn!(
                task = %template.task_id,
                expected = ?template.placeholders,
                ?found,
                "dropping rewrite with altered placeholders"
            ),
            Err(e) => warn!(task = %template.task_id, error = %e, "dropping malformed rewrite"),
        }
    }
    if out.is_empty() {
        return Err(Error::Expansion(format!(
            "no usable rewrite of {} template {}",
            template.task_id, template.expression_index
        )));
    }
    Ok(out)
}

/// Clusters candidate embeddings into `k` groups and returns, per cluster,
/// the usable candidate nearest the centroid. Results are in candidate order.
pub fn recs_select(
    candidates: &[InstructionTemplate],
    embedder: &dyn EmbeddingProvider,
    k: usize,
    usable: &dyn Fn(&InstructionTemplate) -> bool,
    seed: u64,
) -> Result<Vec<InstructionTemplate>> {
    if k == 0 {
        return Ok(Vec::new());
    }
    if candidates.len() < k {
        return Err(Error::Expansion(format!(
            "{} candidates cannot fill {k} clusters",
            candidates.len()
        )));
    }
    let texts: Vec<String> = candidates.iter().map(|c| c.text.clone()).collect();
    let vectors = embedder.embed(&texts)?;
    let clustering = kmeans(&vectors, k, seed, DEFAULT_MAX_ITER)?;
    let ok: Vec<bool> = candidates.iter().map(usable).collect();

    let mut chosen: HashSet<usize> = HashSet::new();
    for (c, centroid) in clustering.centroids.iter().enumerate() {
        let by_distance = |members: Vec<usize>| {
            let mut m = members;
            m.sort_by(|&a, &b| {
                sq_dist(&vectors[a], centroid)
                    .total_cmp(&sq_dist(&vectors[b], centroid))
                    .then(a.cmp(&b))
            });
            m
        };
        let members = by_distance((0..candidates.len()).filter(|&i| clustering.labels[i] == c).collect());
        let pick = members.iter().copied().find(|&i| ok[i] && !chosen.contains(&i));
        let pick = match pick {
            Some(i) => i,
            None => {
                let everyone = by_distance((0..candidates.len()).collect());
                let i = everyone
                    .into_iter()
                    .find(|&i| ok[i] && !chosen.contains(&i))
                    .ok_or_else(|| Error::Expansion(format!("cluster {c} has no usable candidate left")))?;
                info!(cluster = c, candidate = i, "cluster had no usable member; took nearest usable candidate");
                i
            }
        };
        chosen.insert(pick);
    }
    let mut picks: Vec<usize> = chosen.into_iter().collect();
    picks.sort_unstable();
    Ok(picks.into_iter().map(|i| candidates[i].clone()).collect())
}

/// Texts approved by a reviewer, one per line.
pub fn reviewed_list(path: &Path) -> Result<HashSet<String>> {
    let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(raw.lines().map(str::trim).filter(|l| !l.is_empty()).map(str::to_string).collect())
}
