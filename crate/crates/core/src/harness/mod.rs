//! Running benchmark items against models.

pub mod client;
pub mod mock;
pub mod request;
pub mod runner;

use std::io::Read;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub use client::{build_backend, Backend, BackendConfig, CallError, HttpBackend, MockBackend, RetryPolicy};
pub use mock::{gold_response, mangle, mock_response, Defect, MockKind};
pub use request::{build_request, ModelTarget, PreparedRequest, PromptMode};
pub use runner::{latest_responses, run_items, run_items_blocking, ResponseRecord, RunOptions, RunSummary};

/// Lowercase hex SHA-256 of a file's bytes.
pub fn dataset_hash(path: &Path) -> Result<String> {
    let mut file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 20];
    loop {
        let n = file.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}
