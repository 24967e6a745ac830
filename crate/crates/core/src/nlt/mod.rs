//! Deterministic natural-language transcription of a document and the
//! annotation prompts and transport built on top of it.

mod annotate;
mod prompt;
mod transport;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::OnceLock;

pub use annotate::{
    annotate, annotate_batch, append_log, document_prompt, logged_hashes, read_log, request_hash, AnnotationRecord, NltError,
    DEFAULT_PARALLEL,
};
pub use prompt::{build_prompt, Task, UnknownTask, MULTI_PART_SUBJECT, NLT_PLACEHOLDER, SINGLE_PART_SUBJECT};
pub use transport::{ChatTransport, HttpTransport, MockTransport, RetryPolicy, TransportError, API_KEY_ENV};

use crate::analysis::{analyze_document, DocumentAnalysis, PartAnalysis};
use crate::format::{canonicalize, format_number};
use crate::geom::{Vec2, Vec3};
use crate::model::{Constraint, Document, Extrusion, Geometry, Part, Primitive};
use crate::relations::RelationTable;
use crate::topology::Loop;

const TEMPLATE_SOURCE: &str = include_str!("../../resources/nlt_templates.txt");

/// Keys every template file must define.
pub const TEMPLATE_KEYS: [&str; 22] = [
    "model", "part", "plane", "line", "circle", "arc", "outer", "hole", "no_loop", "dangling", "unary", "unary_pin",
    "binary", "linear", "linear_both", "linear_symmetric", "rotated", "boolean", "obb", "relations", "relation",
    "relation_aligned",
];

fn parse_templates(src: &str) -> BTreeMap<&str, &str> {
    src.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.trim(), v.trim()))
        .collect()
}

fn templates() -> &'static BTreeMap<&'static str, &'static str> {
    static T: OnceLock<BTreeMap<&'static str, &'static str>> = OnceLock::new();
    T.get_or_init(|| parse_templates(TEMPLATE_SOURCE))
}

/// Fills `{name}` placeholders of the template stored under `key`.
fn fill(key: &str, values: &[(&str, String)]) -> String {
    let mut s = templates().get(key).unwrap_or_else(|| panic!("missing sentence template `{key}`")).to_string();
    for (name, value) in values {
        s = s.replace(&format!("{{{name}}}"), value);
    }
    s
}

fn num(x: f64) -> String {
    format_number(x)
}

fn point2(p: &Vec2) -> String {
    format!("({}, {})", num(p.x), num(p.y))
}

fn point3(p: &Vec3) -> String {
    format!("({}, {}, {})", num(p.x), num(p.y), num(p.z))
}

fn list(xs: &[f64]) -> String {
    let items: Vec<String> = xs.iter().map(|&x| num(x)).collect();
    format!("[{}]", items.join(", "))
}

/// Sentences for one part, grouped by section.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NltPart {
    pub header: String,
    pub plane: String,
    pub primitives: Vec<String>,
    pub loops: Vec<String>,
    pub constraints: Vec<String>,
    pub extrusion: String,
    pub boolean: String,
    /// Absent when the part has no bounding box.
    pub obb: Option<String>,
}

impl NltPart {
    fn lines(&self) -> impl Iterator<Item = &String> {
        std::iter::once(&self.header)
            .chain(std::iter::once(&self.plane))
            .chain(&self.primitives)
            .chain(&self.loops)
            .chain(&self.constraints)
            .chain(std::iter::once(&self.extrusion))
            .chain(std::iter::once(&self.boolean))
            .chain(&self.obb)
    }
}

/// A full transcription: a model sentence, the parts in order, then the
/// assembly section.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Nlt {
    pub header: String,
    pub parts: Vec<NltPart>,
    pub relations: Vec<String>,
}

impl Nlt {
    /// One sentence per line.
    pub fn text(&self) -> String {
        self.to_string()
    }

    pub fn is_multi_part(&self) -> bool {
        self.parts.len() > 1
    }
}

impl fmt::Display for Nlt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.header)?;
        for part in &self.parts {
            for line in part.lines() {
                writeln!(f, "{line}")?;
            }
        }
        if !self.relations.is_empty() {
            writeln!(f, "{}", fill("relations", &[]))?;
            for line in &self.relations {
                writeln!(f, "{line}")?;
            }
        }
        Ok(())
    }
}

fn primitive_sentence(p: &Primitive) -> String {
    let id = ("id", p.id.clone());
    match &p.geometry {
        Geometry::Line { start, end } => fill("line", &[("start", point2(start)), ("end", point2(end)), id]),
        Geometry::Circle { center, radius } => {
            fill("circle", &[("center", point2(center)), ("radius", num(*radius)), id])
        }
        Geometry::Arc { start, mid, end } => {
            fill("arc", &[("start", point2(start)), ("mid", point2(mid)), ("end", point2(end)), id])
        }
    }
}

fn loop_ids(lp: &Loop) -> String {
    lp.edges.iter().map(|e| e.id.as_str()).collect::<Vec<_>>().join(", ")
}

fn loop_sentences(a: &PartAnalysis) -> Vec<String> {
    let mut out = Vec::new();
    for o in &a.dict.outers {
        out.push(fill("outer", &[("name", o.name.clone()), ("ids", loop_ids(&o.lp))]));
        for h in &o.holes {
            out.push(fill("hole", &[("name", h.name.clone()), ("outer", o.name.clone()), ("ids", loop_ids(&h.lp))]));
        }
    }
    if out.is_empty() {
        out.push(fill("no_loop", &[]));
    }
    if !a.dangling.is_empty() {
        out.push(fill("dangling", &[("ids", a.dangling.join(", "))]));
    }
    out
}

fn constraint_sentence(c: &Constraint) -> String {
    let kind = ("kind", c.kind.as_str().to_string());
    match (c.refs.as_slice(), &c.pin) {
        ([a, b], _) => fill("binary", &[kind, ("a", a.to_string()), ("b", b.to_string())]),
        (refs, pin) => {
            let a = refs.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(", ");
            match pin {
                Some(values) => fill("unary_pin", &[kind, ("a", a), ("pin", list(values))]),
                None => fill("unary", &[kind, ("a", a)]),
            }
        }
    }
}

fn extrusion_sentence(e: &Extrusion) -> String {
    match *e {
        Extrusion::Linear { direction, length, symmetric: true, .. } => {
            fill("linear_symmetric", &[("direction", point3(&direction)), ("length", num(length))])
        }
        Extrusion::Linear { direction, length, opposite_length, .. } if opposite_length != 0.0 => fill(
            "linear_both",
            &[("direction", point3(&direction)), ("length", num(length)), ("opposite", num(opposite_length))],
        ),
        Extrusion::Linear { direction, length, .. } => {
            fill("linear", &[("direction", point3(&direction)), ("length", num(length))])
        }
        Extrusion::Rotated { axis_point, axis_dir, start_angle, end_angle } => fill(
            "rotated",
            &[
                ("point", point3(&axis_point)),
                ("axis", point3(&axis_dir)),
                ("start", num(start_angle)),
                ("end", num(end_angle)),
            ],
        ),
    }
}

fn part_nlt(index: usize, part: &Part, a: &PartAnalysis) -> NltPart {
    let plane = &part.sketch.plane;
    NltPart {
        header: fill("part", &[("index", (index + 1).to_string())]),
        plane: fill(
            "plane",
            &[
                ("origin", point3(&plane.translation)),
                ("angles", point3(&plane.euler_angles)),
                ("normal", point3(&plane.normal())),
            ],
        ),
        primitives: part.sketch.primitives.iter().map(primitive_sentence).collect(),
        loops: loop_sentences(a),
        constraints: part.sketch.constraints.iter().map(constraint_sentence).collect(),
        extrusion: extrusion_sentence(&part.extrusion),
        boolean: fill("boolean", &[("op", part.boolean.as_str().to_string())]),
        obb: a.obb.map(|b| fill("obb", &[("center", point3(&b.center)), ("half", point3(&b.half_extents))])),
    }
}

/// One sentence per unordered pair, read from the lower-indexed part.
fn relation_sentences(table: &RelationTable) -> Vec<String> {
    table
        .iter()
        .filter(|((i, j), _)| i < j)
        .map(|(&(i, j), r)| {
            let mut values = vec![
                ("i", (i + 1).to_string()),
                ("j", (j + 1).to_string()),
                ("rel", r.rel_type.as_str().to_string()),
            ];
            if r.rel_pos.is_empty() {
                fill("relation_aligned", &values)
            } else {
                let labels: Vec<String> = r.rel_pos.iter().map(|l| l.to_string()).collect();
                values.push(("labels", labels.join(", ")));
                fill("relation", &values)
            }
        })
        .collect()
}

/// Transcribes `doc` using a precomputed analysis of the same document.
/// Sketch content is emitted in canonical order.
pub fn build_nlt(doc: &Document, analysis: &DocumentAnalysis) -> Nlt {
    let doc = canonicalize(doc);
    let count = doc.parts.len();
    let noun = if count == 1 { "part" } else { "parts" };
    Nlt {
        header: fill("model", &[("count", count.to_string()), ("noun", noun.to_string())]),
        parts: doc.parts.iter().zip(&analysis.parts).enumerate().map(|(i, (p, a))| part_nlt(i, p, a)).collect(),
        relations: relation_sentences(&analysis.relations),
    }
}

/// Canonicalizes, analyzes and transcribes in one step. Structurally equal
/// documents give byte-identical text.
pub fn transcribe(doc: &Document) -> Nlt {
    let doc = canonicalize(doc);
    build_nlt(&doc, &analyze_document(&doc))
}
