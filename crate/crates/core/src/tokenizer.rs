//! Token counting and right truncation.
//!
//! All lengths in the benchmark are measured with a single byte-pair
//! vocabulary. The default is cl100k_base; any tiktoken-format rank file can
//! be loaded instead.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::sync::LazyLock;

use serde::{Deserialize, Serialize};
use tiktoken_rs::CoreBPE;

use crate::error::{Error, Result};

/// Pre-tokenization pattern of cl100k_base.
pub const CL100K_PATTERN: &str = "'(?i:[sdmt]|ll|ve|re)|[^\\r\\n\\p{L}\\p{N}]?+\\p{L}++|\\p{N}{1,3}+| ?[^\\s\\p{L}\\p{N}]++[\\r\\n]*+|\\s++$|\\s*[\\r\\n]|\\s+(?!\\S)|\\s";

pub struct Tokenizer {
    name: String,
    bpe: CoreBPE,
}

impl fmt::Debug for Tokenizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tokenizer").field("name", &self.name).finish()
    }
}

static DEFAULT: LazyLock<Tokenizer> = LazyLock::new(Tokenizer::cl100k_base);

impl Tokenizer {
    pub fn cl100k_base() -> Self {
        let bpe = tiktoken_rs::cl100k_base().expect("bundled cl100k_base vocabulary is valid");
        Tokenizer {
            name: "cl100k_base".to_string(),
            bpe,
        }
    }

    /// Loads a tiktoken rank file (`<base64 token> <rank>` per line).
    pub fn from_tiktoken_file(path: &Path, pattern: Option<&str>) -> Result<Self> {
        use base64::Engine as _;

        let raw = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut encoder = HashMap::default();
        for (idx, line) in raw.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (Some(token), Some(rank)) = (parts.next(), parts.next()) else {
                return Err(Error::validation(path, idx + 1, "expected `<base64> <rank>`"));
            };
            let bytes = base64::engine::general_purpose::STANDARD
                .decode(token)
                .map_err(|e| Error::validation(path, idx + 1, e.to_string()))?;
            let rank: u32 = rank
                .parse()
                .map_err(|_| Error::validation(path, idx + 1, "rank is not an integer"))?;
            encoder.insert(bytes, rank);
        }
        if encoder.is_empty() {
            return Err(Error::config(format!(
                "vocabulary file {} is empty",
                path.display()
            )));
        }
        let bpe = CoreBPE::new(encoder, HashMap::default(), pattern.unwrap_or(CL100K_PATTERN))
            .map_err(|e| Error::config(format!("invalid vocabulary {}: {e}", path.display())))?;
        Ok(Tokenizer {
            name: path.display().to_string(),
            bpe,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn count(&self, text: &str) -> usize {
        if text.is_empty() {
            return 0;
        }
        self.bpe.encode_ordinary(text).len()
    }

    /// Longest prefix of `text` that ends on a token boundary and recounts to
    /// at most `max_tokens`.
    pub fn truncate_right<'a>(&self, text: &'a str, max_tokens: usize) -> &'a str {
        let tokens = self.bpe.encode_ordinary(text);
        if tokens.len() <= max_tokens {
            return text;
        }
        let mut keep = max_tokens;
        loop {
            if keep == 0 {
                return "";
            }
            let bytes = self
                .bpe
                .decode_bytes(&tokens[..keep])
                .expect("tokens produced by this vocabulary decode");
            let mut cut = bytes.len().min(text.len());
            while !text.is_char_boundary(cut) {
                cut -= 1;
            }
            let prefix = &text[..cut];
            if self.count(prefix) <= max_tokens {
                return prefix;
            }
            keep -= 1;
        }
    }
}

pub fn default_tokenizer() -> &'static Tokenizer {
    &DEFAULT
}

pub fn count_tokens(text: &str) -> usize {
    DEFAULT.count(text)
}

pub fn truncate_right(text: &str, max_tokens: usize) -> &str {
    DEFAULT.truncate_right(text, max_tokens)
}

/// A nominal prompt-length class and the headroom kept for the scenario
/// description, the instruction and generation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenBudget {
    pub interval_name: String,
    pub nominal_tokens: usize,
    pub reserve_tokens: usize,
}

pub const DEFAULT_RESERVE_TOKENS: usize = 700;
pub const DEFAULT_INTERVALS: [&str; 6] = ["4k", "8k", "16k", "32k", "64k", "128k"];

impl TokenBudget {
    pub fn new(interval_name: impl Into<String>, nominal_tokens: usize, reserve_tokens: usize) -> Result<Self> {
        let interval_name = interval_name.into();
        if reserve_tokens >= nominal_tokens {
            return Err(Error::config(format!(
                "interval {interval_name}: reserve {reserve_tokens} must be below nominal {nominal_tokens}"
            )));
        }
        Ok(TokenBudget {
            interval_name,
            nominal_tokens,
            reserve_tokens,
        })
    }

    /// Parses labels of the form `<n>k` (n × 1024 tokens).
    pub fn from_label(label: &str, reserve_tokens: usize) -> Result<Self> {
        let digits = label
            .strip_suffix('k')
            .or_else(|| label.strip_suffix('K'))
            .ok_or_else(|| Error::config(format!("interval label `{label}` must look like `16k`")))?;
        let kilo: usize = digits
            .parse()
            .map_err(|_| Error::config(format!("interval label `{label}` must look like `16k`")))?;
        Self::new(label.to_ascii_lowercase(), kilo * 1024, reserve_tokens)
    }

    pub fn default_intervals(reserve_tokens: usize) -> Result<Vec<Self>> {
        DEFAULT_INTERVALS
            .iter()
            .map(|label| Self::from_label(label, reserve_tokens))
            .collect()
    }

    /// Token budget available to the context.
    pub fn context_budget(&self) -> usize {
        self.nominal_tokens - self.reserve_tokens
    }
}
