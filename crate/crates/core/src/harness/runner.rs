//! Concurrent execution of items against one model, appending one response
//! record per item as results arrive.

use std::collections::{HashMap, HashSet};
use std::path::Path;
use std::time::Instant;

use futures::stream::{self, StreamExt};
use serde::{Deserialize, Serialize};
use tracing::{info, warn};

use crate::error::{Error, Result};
use crate::harness::client::{Backend, CallError, RetryPolicy};
use crate::harness::request::{build_request, ModelTarget};
use crate::jsonl::{read_records_lenient, write_records, JsonlWriter};
use crate::taskgen::item::BenchmarkItem;
use crate::tokenizer::Tokenizer;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseRecord {
    pub item_id: String,
    pub model: String,
    /// Model output; absent when every attempt failed.
    pub raw_text: Option<String>,
    pub truncated: bool,
    pub request_tokens: usize,
    pub latency_ms: u64,
    /// 1 for the first record of this item and model in the file, one more
    /// for each rerun.
    pub attempt: u32,
    /// Requests sent, counting retries.
    pub tries: u32,
    pub error: Option<String>,
    pub dataset_hash: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub concurrency: usize,
    pub retry: RetryPolicy,
    /// Keep successful records already in the output and skip their items.
    pub resume: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            concurrency: 4,
            retry: RetryPolicy::default(),
            resume: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct RunSummary {
    pub total: usize,
    pub skipped: usize,
    pub completed: usize,
    pub failed: usize,
}

/// Calls the backend with retries. Returns the text (or the last error) and
/// the number of attempts made.
pub async fn call_with_retry(
    backend: &dyn Backend,
    item: &BenchmarkItem,
    request: &crate::harness::request::PreparedRequest,
    policy: &RetryPolicy,
) -> (std::result::Result<String, String>, u32) {
    let mut attempt = 0;
    loop {
        attempt += 1;
        match backend.complete(item, request).await {
            Ok(text) => return (Ok(text), attempt),
            Err(CallError::Retryable(msg)) if attempt < policy.max_attempts.max(1) => {
                let delay = policy.backoff(attempt);
                warn!(item = %item.item_id, attempt, ?delay, "retrying after {msg}");
                tokio::time::sleep(delay).await;
            }
            Err(e) => return (Err(e.to_string()), attempt),
        }
    }
}

/// Prior records in `path` for this model and dataset: the items with a
/// successful record and the number of records per item. A torn final line
/// is dropped and the file rewritten without it.
fn prior_records(path: &Path, model: &str, dataset_hash: &str) -> Result<(HashSet<String>, HashMap<String, u32>)> {
    if !path.exists() {
        return Ok(Default::default());
    }
    let (records, torn) = read_records_lenient::<ResponseRecord>(path)?;
    if torn {
        warn!(path = %path.display(), "dropping an incomplete final record");
        write_records(path, &records)?;
    }
    let mut done = HashSet::new();
    let mut seen: HashMap<String, u32> = HashMap::new();
    for r in &records {
        if r.dataset_hash != dataset_hash {
            return Err(Error::config(format!(
                "{} holds responses for dataset {}, not {dataset_hash}; use a fresh output file",
                path.display(),
                r.dataset_hash
            )));
        }
        if r.model == model {
            *seen.entry(r.item_id.clone()).or_default() += 1;
            if r.error.is_none() {
                done.insert(r.item_id.clone());
            }
        }
    }
    Ok((done, seen))
}

pub async fn run_items(
    items: &[BenchmarkItem],
    target: &ModelTarget,
    backend: &dyn Backend,
    tok: &Tokenizer,
    out: &Path,
    opts: &RunOptions,
    dataset_hash: &str,
) -> Result<RunSummary> {
    let (done, seen) = if opts.resume {
        prior_records(out, &target.name, dataset_hash)?
    } else {
        Default::default()
    };
    let mut writer = if opts.resume {
        JsonlWriter::append(out)?
    } else {
        JsonlWriter::create(out)?
    };
    let pending: Vec<&BenchmarkItem> = items.iter().filter(|i| !done.contains(&i.item_id)).collect();
    let mut summary = RunSummary {
        total: items.len(),
        skipped: items.len() - pending.len(),
        ..Default::default()
    };
    info!(model = %target.name, pending = pending.len(), skipped = summary.skipped, "starting run");

    let mut results = stream::iter(pending)
        .map(|item| {
            let attempt = seen.get(&item.item_id).copied().unwrap_or(0) + 1;
            async move {
                let mut record = ResponseRecord {
                    item_id: item.item_id.clone(),
                    model: target.name.clone(),
                    raw_text: None,
                    truncated: false,
                    request_tokens: 0,
                    latency_ms: 0,
                    attempt,
                    tries: 0,
                    error: None,
                    dataset_hash: dataset_hash.to_string(),
                };
                let request = match build_request(item, target, tok) {
                    Ok(r) => r,
                    Err(e) => {
                        record.error = Some(format!("skipped: {e}"));
                        return record;
                    }
                };
                let started = Instant::now();
                let (outcome, tries) = call_with_retry(backend, item, &request, &opts.retry).await;
                record.truncated = request.truncated;
                record.request_tokens = request.request_tokens;
                record.latency_ms = started.elapsed().as_millis() as u64;
                record.tries = tries;
                match outcome {
                    Ok(t) => record.raw_text = Some(t),
                    Err(e) => record.error = Some(e),
                }
                record
            }
        })
        .buffer_unordered(opts.concurrency.max(1));

    while let Some(record) = results.next().await {
        if let Some(e) = &record.error {
            warn!(item = %record.item_id, "request failed: {e}");
            summary.failed += 1;
        } else {
            summary.completed += 1;
        }
        writer.write(&record)?;
        writer.flush()?;
    }
    writer.finish()?;
    Ok(summary)
}

/// Runs [`run_items`] on a private single-threaded runtime.
pub fn run_items_blocking(
    items: &[BenchmarkItem],
    target: &ModelTarget,
    backend: &dyn Backend,
    tok: &Tokenizer,
    out: &Path,
    opts: &RunOptions,
    dataset_hash: &str,
) -> Result<RunSummary> {
    let rt = tokio::runtime::Builder::new_current_thread()
        .enable_all()
        .build()
        .map_err(|e| Error::Transport(format!("cannot start runtime: {e}")))?;
    rt.block_on(run_items(items, target, backend, tok, out, opts, dataset_hash))
}

/// The latest record per item for `model`, later lines overriding earlier.
pub fn latest_responses(records: Vec<ResponseRecord>) -> Vec<ResponseRecord> {
    let mut order = Vec::new();
    let mut latest: HashMap<(String, String), ResponseRecord> = HashMap::new();
    for r in records {
        let key = (r.model.clone(), r.item_id.clone());
        if !latest.contains_key(&key) {
            order.push(key.clone());
        }
        latest.insert(key, r);
    }
    order.into_iter().filter_map(|k| latest.remove(&k)).collect()
}
