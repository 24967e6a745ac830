//! On-disk formats.
//!
//! * `.hcad`: canonical document text (JSON subset, `format_version: 1`),
//!   byte-stable through [`serialize_document`]. See `docs/format.md`.
//! * `.hier`: legacy hierarchical face/loop sketches accepted by the flattener.

mod canonical;
mod hier;
mod quantize;

pub use canonical::{
    canonical_sketch, canonicalize, format_number, parse_document, parse_document_with, serialize_document,
    ParseMode, Parsed,
};
pub use hier::{
    import_hierarchical, write_hierarchical, Face, HierLoop, HierSegment, HierarchicalModel, HierarchicalSketch,
};
pub use quantize::{quantize_document, DEFAULT_QUANTIZATION_STEPS};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FormatError {
    #[error("SYNTAX_ERROR at {line}:{column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("SCHEMA_ERROR at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("DUPLICATE_ID `{id}` in part {part}")]
    DuplicateId { part: usize, id: String },
    #[error("OPEN_LOOP in sketch {sketch}, face {face}, loop {loop_index}: gap {gap}")]
    OpenLoop { sketch: usize, face: usize, loop_index: usize, gap: f64 },
    #[error("UNSUPPORTED_CURVE `{curve}` at line {line}")]
    UnsupportedCurve { line: usize, curve: String },
}

impl FormatError {
    pub fn code(&self) -> &'static str {
        match self {
            FormatError::Syntax { .. } => "SYNTAX_ERROR",
            FormatError::Schema { .. } => "SCHEMA_ERROR",
            FormatError::DuplicateId { .. } => "DUPLICATE_ID",
            FormatError::OpenLoop { .. } => "OPEN_LOOP",
            FormatError::UnsupportedCurve { .. } => "UNSUPPORTED_CURVE",
        }
    }
}
