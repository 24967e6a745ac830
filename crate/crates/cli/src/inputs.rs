//! Input resolution and document loading.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use histcad::flatten::flatten_model;
use histcad::format::{import_hierarchical, parse_document_with, ParseMode};
use histcad::model::Document;

/// Extensions picked up when a directory is given.
pub const DOCUMENT_EXTENSIONS: [&str; 2] = ["hcad", "hier"];

/// Expands files, directories and glob patterns into a sorted, deduplicated list.
/// Directories contribute their files with one of `extensions`.
pub fn resolve_inputs(args: &[String], extensions: &[&str]) -> Vec<PathBuf> {
    let mut out = BTreeSet::new();
    let wanted = |p: &Path| p.extension().and_then(|e| e.to_str()).is_some_and(|e| extensions.contains(&e));
    for arg in args {
        let path = Path::new(arg);
        if path.is_file() {
            out.insert(path.to_path_buf());
        } else if path.is_dir() {
            if let Ok(entries) = std::fs::read_dir(path) {
                out.extend(entries.flatten().map(|e| e.path()).filter(|p| p.is_file() && wanted(p)));
            }
        } else if let Ok(paths) = glob::glob(arg) {
            out.extend(paths.flatten().filter(|p| p.is_file()));
        }
    }
    out.into_iter().collect()
}

/// File name without its extension, used to key outputs.
pub fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "input".into())
}

/// A per-file failure: machine code plus message.
#[derive(Debug, Clone, PartialEq)]
pub struct FileError {
    pub code: String,
    pub message: String,
}

impl FileError {
    pub fn new(code: impl Into<String>, message: impl Into<String>) -> Self {
        FileError { code: code.into(), message: message.into() }
    }
}

impl std::fmt::Display for FileError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        // messages from the library already lead with their code
        if self.message.starts_with(&self.code) {
            f.write_str(&self.message)
        } else {
            write!(f, "{}: {}", self.code, self.message)
        }
    }
}

pub struct Loaded {
    pub document: Document,
    pub warnings: Vec<String>,
}

/// Reads a `.hcad` document, or flattens a `.hier` model on the fly.
pub fn load_document(path: &Path, strict: bool) -> Result<Loaded, FileError> {
    let text = std::fs::read_to_string(path).map_err(|e| FileError::new("IO_ERROR", e.to_string()))?;
    if path.extension().is_some_and(|e| e == "hier") {
        let model = import_hierarchical(&text).map_err(|e| FileError::new(e.code(), e.to_string()))?;
        let (document, _) = flatten_model(&model, &path.display().to_string())
            .map_err(|e| FileError::new(e.code(), e.to_string()))?;
        return Ok(Loaded { document, warnings: Vec::new() });
    }
    let mode = if strict { ParseMode::Strict } else { ParseMode::Lenient };
    let parsed = parse_document_with(&text, mode).map_err(|e| FileError::new(e.code(), e.to_string()))?;
    Ok(Loaded { document: parsed.document, warnings: parsed.warnings })
}
