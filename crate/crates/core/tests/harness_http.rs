mod common;

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex, OnceLock};

use axum::extract::State;
use axum::http::StatusCode;
use axum::routing::post;
use axum::{Json, Router};
use serde_json::{json, Value};

use longif::error::Error;
use longif::harness::request::COMPLETION_SUFFIX;
use longif::harness::{
    build_backend, build_request, gold_response, latest_responses, run_items, BackendConfig, ModelTarget,
    PromptMode, ResponseRecord, RetryPolicy, RunOptions,
};
use longif::jsonl::read_records;
use longif::taskgen::BenchmarkItem;
use longif::tokenizer::default_tokenizer;
use longif::TaskId;

fn items() -> &'static [BenchmarkItem] {
    static ITEMS: OnceLock<Vec<BenchmarkItem>> = OnceLock::new();
    ITEMS.get_or_init(|| common::generate(11, common::small_plan(&["4k"], 1, 2)))
}

struct Server {
    /// instruction -> gold answer
    answers: Vec<(String, String)>,
    failing: Option<String>,
    /// status returned for the failing item while unhealthy
    fail_status: StatusCode,
    healthy: AtomicBool,
    hits: Mutex<HashMap<String, u32>>,
    paths: Mutex<Vec<(String, String)>>,
}

async fn answer(state: Arc<Server>, route: &str, body: Value) -> (StatusCode, Json<Value>) {
    let prompt = body["messages"][0]["content"]
        .as_str()
        .or_else(|| body["prompt"].as_str())
        .unwrap_or_default()
        .to_string();
    let trimmed = prompt.strip_suffix(COMPLETION_SUFFIX).unwrap_or(&prompt);
    let hit = state.answers.iter().find(|(instr, _)| trimmed.ends_with(instr.as_str())).cloned();
    let Some((instr, gold)) = hit else {
        return (StatusCode::BAD_REQUEST, Json(json!({"error": "unknown prompt"})));
    };
    *state.hits.lock().unwrap().entry(instr.clone()).or_default() += 1;
    state.paths.lock().unwrap().push((route.to_string(), prompt.clone()));
    if state.failing.as_deref() == Some(instr.as_str()) && !state.healthy.load(Ordering::SeqCst) {
        return (state.fail_status, Json(json!({"error": "boom"})));
    }
    let body = if route == "chat" {
        json!({"choices": [{"message": {"role": "assistant", "content": gold}}]})
    } else {
        json!({"choices": [{"text": gold}]})
    };
    (StatusCode::OK, Json(body))
}

async fn serve(failing: Option<&BenchmarkItem>, fail_status: StatusCode) -> (SocketAddr, Arc<Server>) {
    let state = Arc::new(Server {
        answers: items().iter().map(|i| (i.instruction.clone(), gold_response(i))).collect(),
        failing: failing.map(|i| i.instruction.clone()),
        fail_status,
        healthy: AtomicBool::new(false),
        hits: Mutex::new(HashMap::new()),
        paths: Mutex::new(Vec::new()),
    });
    let app = Router::new()
        .route(
            "/chat/completions",
            post(|State(s): State<Arc<Server>>, Json(b): Json<Value>| async move { answer(s, "chat", b).await }),
        )
        .route(
            "/completions",
            post(|State(s): State<Arc<Server>>, Json(b): Json<Value>| async move { answer(s, "completion", b).await }),
        )
        .with_state(state.clone());
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    (addr, state)
}

fn http(addr: SocketAddr) -> Box<dyn longif::harness::Backend> {
    build_backend(&BackendConfig::Http {
        base_url: format!("http://{addr}"),
        model: "test-model".into(),
        api_key_env: None,
        timeout_secs: 10,
    })
    .unwrap()
}

fn fast_retries() -> RetryPolicy {
    RetryPolicy {
        max_attempts: 5,
        initial_backoff_ms: 1,
        max_backoff_ms: 4,
    }
}

fn target(mode: PromptMode) -> ModelTarget {
    ModelTarget {
        name: "test-model".into(),
        mode,
        context_window: None,
    }
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn persistent_server_errors_fail_only_their_item() {
    let bad = &items()[3];
    let (addr, server) = serve(Some(bad), StatusCode::INTERNAL_SERVER_ERROR).await;
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("responses.jsonl");
    let opts = RunOptions {
        concurrency: 4,
        retry: fast_retries(),
        resume: false,
    };
    let backend = http(addr);
    let summary = run_items(items(), &target(PromptMode::Chat), backend.as_ref(), default_tokenizer(), &out, &opts, "h1")
        .await
        .unwrap();
    assert_eq!((summary.completed, summary.failed), (items().len() - 1, 1));

    let records: Vec<ResponseRecord> = read_records(&out).unwrap();
    assert_eq!(records.len(), items().len());
    for r in &records {
        let item = items().iter().find(|i| i.item_id == r.item_id).unwrap();
        if item.item_id == bad.item_id {
            assert!(r.error.as_deref().unwrap().contains("500"));
            assert_eq!(r.raw_text, None);
            assert_eq!(r.tries, 5);
        } else {
            assert_eq!(r.error, None);
            assert_eq!(r.raw_text.as_deref(), Some(gold_response(item).as_str()));
            assert_eq!(r.tries, 1);
        }
        assert_eq!(r.attempt, 1);
        assert_eq!(r.dataset_hash, "h1");
    }
    assert_eq!(server.hits.lock().unwrap()[&bad.instruction], 5);

    // the endpoint recovers; resuming reruns only the failed item
    server.healthy.store(true, Ordering::SeqCst);
    let resumed = RunOptions { resume: true, ..opts };
    let summary = run_items(items(), &target(PromptMode::Chat), backend.as_ref(), default_tokenizer(), &out, &resumed, "h1")
        .await
        .unwrap();
    assert_eq!((summary.skipped, summary.completed, summary.failed), (items().len() - 1, 1, 0));
    let records: Vec<ResponseRecord> = read_records(&out).unwrap();
    assert_eq!(records.len(), items().len() + 1);
    let last = records.last().unwrap();
    assert_eq!((last.item_id.as_str(), last.attempt, last.error.is_none()), (bad.item_id.as_str(), 2, true));
    let latest = latest_responses(records);
    assert_eq!(latest.len(), items().len());
    assert!(latest.iter().all(|r| r.error.is_none()));

    // a fully done file resumes to no work
    let summary = run_items(items(), &target(PromptMode::Chat), backend.as_ref(), default_tokenizer(), &out, &resumed, "h1")
        .await
        .unwrap();
    assert_eq!((summary.skipped, summary.completed), (items().len(), 0));
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn client_errors_are_not_retried() {
    let bad = &items()[0];
    let (addr, server) = serve(Some(bad), StatusCode::UNAUTHORIZED).await;
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.jsonl");
    let opts = RunOptions {
        concurrency: 2,
        retry: fast_retries(),
        resume: false,
    };
    let backend = http(addr);
    run_items(&items()[..2], &target(PromptMode::Chat), backend.as_ref(), default_tokenizer(), &out, &opts, "h")
        .await
        .unwrap();
    let records: Vec<ResponseRecord> = read_records(&out).unwrap();
    let failed = records.iter().find(|r| r.item_id == bad.item_id).unwrap();
    assert_eq!(failed.tries, 1);
    assert!(failed.error.as_deref().unwrap().contains("401"));
    assert_eq!(server.hits.lock().unwrap()[&bad.instruction], 1);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn completion_mode_posts_prompt_with_suffix() {
    let (addr, server) = serve(None, StatusCode::OK).await;
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.jsonl");
    let backend = http(addr);
    let opts = RunOptions::default();
    run_items(&items()[..3], &target(PromptMode::Completion), backend.as_ref(), default_tokenizer(), &out, &opts, "h")
        .await
        .unwrap();
    let paths = server.paths.lock().unwrap();
    assert_eq!(paths.len(), 3);
    for (route, prompt) in paths.iter() {
        assert_eq!(route, "completion");
        assert!(prompt.ends_with(COMPLETION_SUFFIX));
    }
    let records: Vec<ResponseRecord> = read_records(&out).unwrap();
    assert!(records.iter().all(|r| r.raw_text.is_some()));
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn resume_drops_torn_tail_and_rejects_other_datasets() {
    let (addr, _server) = serve(None, StatusCode::OK).await;
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.jsonl");
    let backend = http(addr);
    let opts = RunOptions::default();
    let subset = &items()[..4];
    run_items(&subset[..2], &target(PromptMode::Chat), backend.as_ref(), default_tokenizer(), &out, &opts, "h")
        .await
        .unwrap();
    // simulate a crash mid-append
    let mut raw = std::fs::read_to_string(&out).unwrap();
    raw.push_str("{\"item_id\": \"trunc");
    std::fs::write(&out, raw).unwrap();

    let resumed = RunOptions {
        resume: true,
        ..RunOptions::default()
    };
    let s = run_items(subset, &target(PromptMode::Chat), backend.as_ref(), default_tokenizer(), &out, &resumed, "h")
        .await
        .unwrap();
    assert_eq!((s.skipped, s.completed), (2, 2));
    let records: Vec<ResponseRecord> = read_records(&out).unwrap();
    assert_eq!(records.len(), 4);

    let err = run_items(subset, &target(PromptMode::Chat), backend.as_ref(), default_tokenizer(), &out, &resumed, "other")
        .await
        .unwrap_err();
    assert!(matches!(err, Error::Config(_)));
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn unreachable_endpoint_records_errors() {
    // bind then drop, leaving a port with nothing listening
    let addr = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap().local_addr().unwrap();
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.jsonl");
    let backend = http(addr);
    let opts = RunOptions {
        concurrency: 2,
        retry: RetryPolicy {
            max_attempts: 2,
            initial_backoff_ms: 1,
            max_backoff_ms: 1,
        },
        resume: false,
    };
    let s = run_items(&items()[..2], &target(PromptMode::Chat), backend.as_ref(), default_tokenizer(), &out, &opts, "h")
        .await
        .unwrap();
    assert_eq!(s.failed, 2);
    let records: Vec<ResponseRecord> = read_records(&out).unwrap();
    assert!(records.iter().all(|r| r.tries == 2 && r.raw_text.is_none()));
}

#[test]
fn long_items_are_cut_to_a_32k_window() {
    let mut plan = common::small_plan(&["64k"], 1, 1);
    plan.tasks.retain(|t| t.task_id == TaskId::LSI || t.task_id == TaskId::MB);
    let long = common::generate(5, plan);
    let tok = default_tokenizer();
    for item in &long {
        for mode in [PromptMode::Chat, PromptMode::Completion] {
            let t = ModelTarget {
                name: "small".into(),
                mode,
                context_window: Some(32 * 1024),
            };
            let req = build_request(item, &t, tok).unwrap();
            assert!(req.truncated);
            assert_eq!(req.request_tokens, tok.count(&req.prompt));
            assert!(req.request_tokens + req.max_tokens <= 32 * 1024, "{} + {}", req.request_tokens, req.max_tokens);
            assert!(req.prompt.starts_with(&item.description));
            let body = req.prompt.strip_suffix(COMPLETION_SUFFIX).unwrap_or(&req.prompt);
            assert!(body.ends_with(&item.instruction));
            assert_eq!(req.prompt.ends_with(COMPLETION_SUFFIX), mode == PromptMode::Completion);
            // the kept context is a prefix of the original
            let ctx_start = item.description.len() + longif::taskgen::item::PART_SEPARATOR.len();
            let ctx_end = body.len() - item.instruction.len() - longif::taskgen::item::PART_SEPARATOR.len();
            assert!(item.context.starts_with(&body[ctx_start..ctx_end]));
        }
        let wide = ModelTarget {
            name: "wide".into(),
            mode: PromptMode::Chat,
            context_window: None,
        };
        let req = build_request(item, &wide, tok).unwrap();
        assert!(!req.truncated);
        assert_eq!(req.prompt, item.prompt());

        let tiny = ModelTarget {
            name: "tiny".into(),
            mode: PromptMode::Chat,
            context_window: Some(item.task_id.max_output_tokens() + 10),
        };
        assert!(matches!(build_request(item, &tiny, tok), Err(Error::Config(_))));
    }
}
