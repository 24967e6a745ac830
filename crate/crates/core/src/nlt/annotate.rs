use std::collections::BTreeSet;
use std::fs::OpenOptions;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use chrono::{SecondsFormat, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::prompt::{build_prompt, Task};
use super::transport::{ChatTransport, RetryPolicy};
use super::transcribe;
use crate::model::Document;

/// Default cap on concurrent requests in a batch.
pub const DEFAULT_PARALLEL: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NltError {
    #[error("TRANSPORT_ERROR after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("EMPTY_RESPONSE: the endpoint returned no text")]
    EmptyResponse,
}

impl NltError {
    pub fn code(&self) -> &'static str {
        match self {
            NltError::Transport { .. } => "TRANSPORT_ERROR",
            NltError::EmptyResponse => "EMPTY_RESPONSE",
        }
    }
}

/// One annotation with its provenance. One line of the annotation log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub document: String,
    pub task: String,
    pub model: String,
    /// Hex SHA-256 of the model id and prompt.
    pub request_hash: String,
    /// RFC 3339 UTC time the response arrived.
    pub timestamp: String,
    pub response: String,
}

pub fn request_hash(model: &str, prompt: &str) -> String {
    let mut h = Sha256::new();
    h.update(model.as_bytes());
    h.update([0u8]);
    h.update(prompt.as_bytes());
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// The annotation prompt for `doc`, with its transcription substituted.
pub fn document_prompt(doc: &Document, task: Task) -> String {
    let nlt = transcribe(doc);
    build_prompt(nlt.text().trim_end(), task, nlt.is_multi_part())
}

/// Builds the prompt for `doc` and requests a single completion.
pub fn annotate(
    name: &str,
    doc: &Document,
    task: Task,
    transport: &dyn ChatTransport,
    retry: &RetryPolicy,
) -> Result<AnnotationRecord, NltError> {
    let prompt = document_prompt(doc, task);
    let response = retry
        .run(|| transport.complete(&prompt))
        .map_err(|(e, attempts)| NltError::Transport { attempts, message: e.to_string() })?;
    if response.trim().is_empty() {
        return Err(NltError::EmptyResponse);
    }
    Ok(AnnotationRecord {
        document: name.to_string(),
        task: task.key().to_string(),
        model: transport.model().to_string(),
        request_hash: request_hash(transport.model(), &prompt),
        timestamp: Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true),
        response,
    })
}

/// Annotates named documents with at most `parallel` requests in flight.
/// Results keep input order and one failure does not affect the others.
pub fn annotate_batch(
    docs: &[(String, Document)],
    task: Task,
    transport: &dyn ChatTransport,
    retry: &RetryPolicy,
    parallel: usize,
) -> Vec<Result<AnnotationRecord, NltError>> {
    let run = || docs.par_iter().map(|(name, doc)| annotate(name, doc, task, transport, retry)).collect();
    match rayon::ThreadPoolBuilder::new().num_threads(parallel.max(1)).build() {
        Ok(pool) => pool.install(run),
        Err(_) => docs.iter().map(|(name, doc)| annotate(name, doc, task, transport, retry)).collect(),
    }
}

/// Appends records as JSON lines, creating the log if needed.
pub fn append_log(path: &Path, records: &[AnnotationRecord]) -> io::Result<()> {
    let mut f = OpenOptions::new().create(true).append(true).open(path)?;
    let mut buf = String::new();
    for r in records {
        buf.push_str(&serde_json::to_string(r).map_err(io::Error::other)?);
        buf.push('\n');
    }
    f.write_all(buf.as_bytes())
}

/// Every record in a log. A missing file reads as empty.
pub fn read_log(path: &Path) -> io::Result<Vec<AnnotationRecord>> {
    let f = match std::fs::File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(e),
    };
    let mut out = Vec::new();
    for line in BufReader::new(f).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?);
    }
    Ok(out)
}

/// Request hashes already present in a log, for skipping repeated requests.
pub fn logged_hashes(path: &Path) -> io::Result<BTreeSet<String>> {
    Ok(read_log(path)?.into_iter().map(|r| r.request_hash).collect())
}
