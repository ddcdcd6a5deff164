//! Turning an item into a model request that fits the model's window.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::taskgen::item::{assemble_prompt, BenchmarkItem};
use crate::tokenizer::Tokenizer;

/// Cue appended for base models, which have no chat template.
pub const COMPLETION_SUFFIX: &str = "\nOutput: ";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptMode {
    #[default]
    Chat,
    Completion,
}

/// What the harness needs to know about a model to shape its requests.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelTarget {
    pub name: String,
    #[serde(default)]
    pub mode: PromptMode,
    /// Total window (prompt plus generation). Unset means never truncate.
    #[serde(default)]
    pub context_window: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreparedRequest {
    pub mode: PromptMode,
    pub prompt: String,
    pub max_tokens: usize,
    pub temperature: f64,
    /// The context was cut to fit the window.
    pub truncated: bool,
    pub request_tokens: usize,
}

fn render(mode: PromptMode, description: &str, context: &str, instruction: &str) -> String {
    let mut p = assemble_prompt(description, context, instruction);
    if mode == PromptMode::Completion {
        p.push_str(COMPLETION_SUFFIX);
    }
    p
}

/// Builds the request for `item`. When the prompt plus the generation cap
/// exceeds the window, only the context is cut from the right; the
/// description and instruction are always kept whole.
pub fn build_request(item: &BenchmarkItem, target: &ModelTarget, tok: &Tokenizer) -> Result<PreparedRequest> {
    let max_tokens = item.task_id.max_output_tokens();
    let suffix_tokens = match target.mode {
        PromptMode::Chat => 0,
        PromptMode::Completion => tok.count(COMPLETION_SUFFIX),
    };
    let fits = |tokens: usize| target.context_window.is_none_or(|w| tokens + max_tokens <= w);
    // the stored count lets untruncated requests skip retokenizing long prompts
    let estimate = item.prompt_token_count + suffix_tokens;
    if fits(estimate + 1) {
        let prompt = render(target.mode, &item.description, &item.context, &item.instruction);
        return Ok(PreparedRequest {
            mode: target.mode,
            prompt,
            max_tokens,
            temperature: 0.0,
            truncated: false,
            request_tokens: estimate,
        });
    }
    let window = target.context_window.expect("fits() is true without a window");
    let full = render(target.mode, &item.description, &item.context, &item.instruction);
    let full_tokens = tok.count(&full);
    if full_tokens + max_tokens <= window {
        return Ok(PreparedRequest {
            mode: target.mode,
            prompt: full,
            max_tokens,
            temperature: 0.0,
            truncated: false,
            request_tokens: full_tokens,
        });
    }
    let shell = render(target.mode, &item.description, "", &item.instruction);
    let shell_tokens = tok.count(&shell);
    let room = window
        .checked_sub(max_tokens + shell_tokens)
        .filter(|r| *r > 0)
        .ok_or_else(|| {
            Error::config(format!(
                "model {} window of {window} tokens cannot hold the description, instruction and {max_tokens} output tokens",
                target.name
            ))
        })?;
    // token merges at the joins can add a token or two; shrink until it fits
    let mut budget = room;
    loop {
        let context = tok.truncate_right(&item.context, budget);
        let prompt = render(target.mode, &item.description, context, &item.instruction);
        let n = tok.count(&prompt);
        if n + max_tokens <= window {
            return Ok(PreparedRequest {
                mode: target.mode,
                prompt,
                max_tokens,
                temperature: 0.0,
                truncated: true,
                request_tokens: n,
            });
        }
        if budget == 0 {
            return Err(Error::config(format!("cannot fit item {} into {window} tokens", item.item_id)));
        }
        budget = budget.saturating_sub((n + max_tokens - window).max(1));
    }
}
