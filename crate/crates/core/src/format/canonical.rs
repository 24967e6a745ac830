use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt::Write as _;

use serde_json::{Map, Value};

use super::FormatError;
use crate::geom::{Vec2, Vec3};
use crate::model::{
    BooleanOp, Constraint, ConstraintKind, Document, Extrusion, Geometry, Metadata, Part, Primitive, Reference,
    Sketch, SketchPlane,
};

pub const FORMAT_VERSION: i64 = 1;

/// How unknown object keys are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParseMode {
    /// Unknown keys are a `SCHEMA_ERROR`.
    #[default]
    Strict,
    /// Unknown keys are skipped and reported as warnings.
    Lenient,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Parsed {
    pub document: Document,
    pub warnings: Vec<String>,
}

/// Shortest decimal text that parses back to the same `f64` bits.
pub fn format_number(x: f64) -> String {
    format!("{:?}", x)
}

fn cmp_params(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

fn cmp_primitives(a: &Primitive, b: &Primitive) -> Ordering {
    a.kind()
        .cmp(&b.kind())
        .then_with(|| cmp_params(&a.geometry.params(), &b.geometry.params()))
        .then_with(|| a.id.cmp(&b.id))
}

fn cmp_constraints(a: &Constraint, b: &Constraint) -> Ordering {
    fn sorted_ids(c: &Constraint) -> Vec<&str> {
        let mut ids: Vec<&str> = c.refs.iter().map(|r| r.id.as_str()).collect();
        ids.sort_unstable();
        ids
    }
    a.kind
        .cmp(&b.kind)
        .then_with(|| sorted_ids(a).cmp(&sorted_ids(b)))
        .then_with(|| a.refs.cmp(&b.refs))
        .then_with(|| match (&a.pin, &b.pin) {
            (None, None) => Ordering::Equal,
            (None, Some(_)) => Ordering::Less,
            (Some(_), None) => Ordering::Greater,
            (Some(x), Some(y)) => cmp_params(x, y),
        })
}

/// Sketch with primitives sorted by (kind, parameters) and constraints by (kind, sorted ref ids).
pub fn canonical_sketch(sketch: &Sketch) -> Sketch {
    let mut s = sketch.clone();
    s.primitives.sort_by(cmp_primitives);
    s.constraints.sort_by(cmp_constraints);
    s
}

/// Canonical ordering of every sketch set. Idempotent.
pub fn canonicalize(doc: &Document) -> Document {
    let mut d = doc.clone();
    for part in &mut d.parts {
        part.sketch = canonical_sketch(&part.sketch);
    }
    d
}

fn json_str(s: &str) -> String {
    serde_json::to_string(s).expect("string serialization is infallible")
}

fn num_list(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|&x| format_number(x)).collect();
    format!("[{}]", parts.join(", "))
}

fn v2(p: Vec2) -> String {
    num_list(&[p.x, p.y])
}

fn v3(p: Vec3) -> String {
    num_list(&[p.x, p.y, p.z])
}

/// Canonical text of a document. Output is a pure function of `canonicalize(doc)`.
pub fn serialize_document(doc: &Document) -> String {
    let doc = canonicalize(doc);
    let mut out = String::new();
    out.push_str("{\n");
    let _ = writeln!(out, "  \"format_version\": {},", FORMAT_VERSION);
    let _ = writeln!(
        out,
        "  \"metadata\": {{\"source\": {}, \"scale\": {}}},",
        json_str(&doc.metadata.source),
        format_number(doc.metadata.scale)
    );
    out.push_str("  \"parts\": [");
    for (i, part) in doc.parts.iter().enumerate() {
        out.push_str(if i == 0 { "\n" } else { ",\n" });
        write_part(&mut out, part);
    }
    if !doc.parts.is_empty() {
        out.push_str("\n  ");
    }
    out.push_str("]\n}\n");
    out
}

fn write_part(out: &mut String, part: &Part) {
    let sk = &part.sketch;
    out.push_str("    {\n      \"sketch\": {\n");
    let _ = writeln!(
        out,
        "        \"plane\": {{\"translation\": {}, \"euler_angles\": {}}},",
        v3(sk.plane.translation),
        v3(sk.plane.euler_angles)
    );
    out.push_str("        \"primitives\": [");
    for (i, p) in sk.primitives.iter().enumerate() {
        out.push_str(if i == 0 { "\n" } else { ",\n" });
        out.push_str("          ");
        out.push_str(&primitive_text(p));
    }
    if !sk.primitives.is_empty() {
        out.push_str("\n        ");
    }
    out.push_str("],\n        \"constraints\": [");
    for (i, c) in sk.constraints.iter().enumerate() {
        out.push_str(if i == 0 { "\n" } else { ",\n" });
        out.push_str("          ");
        out.push_str(&constraint_text(c));
    }
    if !sk.constraints.is_empty() {
        out.push_str("\n        ");
    }
    out.push_str("]\n      },\n");
    let _ = writeln!(out, "      \"extrusion\": {},", extrusion_text(&part.extrusion));
    let _ = write!(out, "      \"boolean\": {}\n    }}", json_str(part.boolean.as_str()));
}

fn primitive_text(p: &Primitive) -> String {
    let head = format!("{{\"id\": {}, \"kind\": {}", json_str(&p.id), json_str(p.kind().as_str()));
    match p.geometry {
        Geometry::Line { start, end } => format!("{}, \"start\": {}, \"end\": {}}}", head, v2(start), v2(end)),
        Geometry::Circle { center, radius } => {
            format!("{}, \"center\": {}, \"radius\": {}}}", head, v2(center), format_number(radius))
        }
        Geometry::Arc { start, mid, end } => {
            format!("{}, \"start\": {}, \"mid\": {}, \"end\": {}}}", head, v2(start), v2(mid), v2(end))
        }
    }
}

fn constraint_text(c: &Constraint) -> String {
    let refs: Vec<String> = c.refs.iter().map(|r| json_str(&r.to_string())).collect();
    let mut s = format!("{{\"kind\": {}, \"refs\": [{}]", json_str(c.kind.as_str()), refs.join(", "));
    if let Some(pin) = &c.pin {
        let _ = write!(s, ", \"pin\": {}", num_list(pin));
    }
    s.push('}');
    s
}

fn extrusion_text(e: &Extrusion) -> String {
    match *e {
        Extrusion::Linear { direction, length, symmetric, opposite_length } => format!(
            "{{\"mode\": \"linear\", \"direction\": {}, \"length\": {}, \"symmetric\": {}, \"opposite_length\": {}}}",
            v3(direction),
            format_number(length),
            symmetric,
            format_number(opposite_length)
        ),
        Extrusion::Rotated { axis_point, axis_dir, start_angle, end_angle } => format!(
            "{{\"mode\": \"rotated\", \"axis_point\": {}, \"axis_dir\": {}, \"start_angle\": {}, \"end_angle\": {}}}",
            v3(axis_point),
            v3(axis_dir),
            format_number(start_angle),
            format_number(end_angle)
        ),
    }
}

/// Strict parse of canonical document text.
pub fn parse_document(text: &str) -> Result<Document, FormatError> {
    parse_document_with(text, ParseMode::Strict).map(|p| p.document)
}

pub fn parse_document_with(text: &str, mode: ParseMode) -> Result<Parsed, FormatError> {
    let value: Value = serde_json::from_str(text).map_err(|e| FormatError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let mut r = Reader { mode, warnings: Vec::new() };
    let document = r.document(&value)?;
    Ok(Parsed { document, warnings: r.warnings })
}

fn schema(path: &str, message: impl Into<String>) -> FormatError {
    FormatError::Schema { path: path.to_string(), message: message.into() }
}

struct Reader {
    mode: ParseMode,
    warnings: Vec<String>,
}

impl Reader {
    fn object<'a>(&mut self, v: &'a Value, path: &str, allowed: &[&str]) -> Result<&'a Map<String, Value>, FormatError> {
        let map = v.as_object().ok_or_else(|| schema(path, "expected an object"))?;
        for key in map.keys() {
            if !allowed.contains(&key.as_str()) {
                match self.mode {
                    ParseMode::Strict => return Err(schema(&format!("{}.{}", path, key), "unknown field")),
                    ParseMode::Lenient => self.warnings.push(format!("{}.{}: unknown field ignored", path, key)),
                }
            }
        }
        Ok(map)
    }

    fn document(&mut self, v: &Value) -> Result<Document, FormatError> {
        let map = self.object(v, "$", &["format_version", "metadata", "parts"])?;
        match map.get("format_version").and_then(Value::as_i64) {
            Some(FORMAT_VERSION) => {}
            Some(other) => return Err(schema("$.format_version", format!("unsupported version {}", other))),
            None => return Err(schema("$.format_version", "missing or not an integer")),
        }
        let metadata = match map.get("metadata") {
            Some(m) => {
                let mm = self.object(m, "$.metadata", &["source", "scale"])?;
                Metadata {
                    source: match mm.get("source") {
                        Some(s) => s.as_str().ok_or_else(|| schema("$.metadata.source", "expected a string"))?.to_string(),
                        None => String::new(),
                    },
                    scale: match mm.get("scale") {
                        Some(_) => number(mm, "scale", "$.metadata")?,
                        None => 1.0,
                    },
                }
            }
            None => Metadata::default(),
        };
        let parts_v = required(map, "parts", "$")?
            .as_array()
            .ok_or_else(|| schema("$.parts", "expected an array"))?;
        let mut parts = Vec::with_capacity(parts_v.len());
        for (i, pv) in parts_v.iter().enumerate() {
            parts.push(self.part(pv, i)?);
        }
        Ok(Document { parts, metadata })
    }

    fn part(&mut self, v: &Value, index: usize) -> Result<Part, FormatError> {
        let path = format!("$.parts[{}]", index);
        let map = self.object(v, &path, &["sketch", "extrusion", "boolean"])?;
        let sketch = self.sketch(required(map, "sketch", &path)?, &format!("{}.sketch", path), index)?;
        let extrusion = self.extrusion(required(map, "extrusion", &path)?, &format!("{}.extrusion", path))?;
        let bpath = format!("{}.boolean", path);
        let boolean = required(map, "boolean", &path)?
            .as_str()
            .and_then(BooleanOp::parse)
            .ok_or_else(|| schema(&bpath, "expected one of new_body, join, subtract, intersect"))?;
        Ok(Part { sketch, extrusion, boolean })
    }

    fn sketch(&mut self, v: &Value, path: &str, part: usize) -> Result<Sketch, FormatError> {
        let map = self.object(v, path, &["plane", "primitives", "constraints"])?;
        let ppath = format!("{}.plane", path);
        let pm = self.object(required(map, "plane", path)?, &ppath, &["translation", "euler_angles"])?;
        let plane = SketchPlane {
            translation: vec3(required(pm, "translation", &ppath)?, &format!("{}.translation", ppath))?,
            euler_angles: vec3(required(pm, "euler_angles", &ppath)?, &format!("{}.euler_angles", ppath))?,
        };
        let prims_v = required(map, "primitives", path)?
            .as_array()
            .ok_or_else(|| schema(&format!("{}.primitives", path), "expected an array"))?;
        let mut primitives = Vec::with_capacity(prims_v.len());
        let mut ids = HashSet::new();
        for (i, pv) in prims_v.iter().enumerate() {
            let p = self.primitive(pv, &format!("{}.primitives[{}]", path, i))?;
            if !ids.insert(p.id.clone()) {
                return Err(FormatError::DuplicateId { part, id: p.id });
            }
            primitives.push(p);
        }
        let mut constraints = Vec::new();
        if let Some(cv) = map.get("constraints") {
            let arr = cv.as_array().ok_or_else(|| schema(&format!("{}.constraints", path), "expected an array"))?;
            for (i, c) in arr.iter().enumerate() {
                constraints.push(self.constraint(c, &format!("{}.constraints[{}]", path, i))?);
            }
        }
        Ok(Sketch { plane, primitives, constraints })
    }

    fn primitive(&mut self, v: &Value, path: &str) -> Result<Primitive, FormatError> {
        let kind = v
            .get("kind")
            .and_then(Value::as_str)
            .ok_or_else(|| schema(&format!("{}.kind", path), "missing primitive kind"))?;
        let allowed: &[&str] = match kind {
            "line" => &["id", "kind", "start", "end"],
            "circle" => &["id", "kind", "center", "radius"],
            "arc" => &["id", "kind", "start", "mid", "end"],
            other => return Err(schema(&format!("{}.kind", path), format!("unknown primitive kind `{}`", other))),
        };
        let map = self.object(v, path, allowed)?;
        let id = required(map, "id", path)?
            .as_str()
            .ok_or_else(|| schema(&format!("{}.id", path), "expected a string"))?;
        if !crate::model::is_valid_id(id) {
            return Err(schema(&format!("{}.id", path), format!("invalid identifier `{}`", id)));
        }
        let pt = |key: &str| -> Result<Vec2, FormatError> { vec2(required(map, key, path)?, &format!("{}.{}", path, key)) };
        let geometry = match kind {
            "line" => Geometry::Line { start: pt("start")?, end: pt("end")? },
            "circle" => Geometry::Circle { center: pt("center")?, radius: number(map, "radius", path)? },
            _ => Geometry::Arc { start: pt("start")?, mid: pt("mid")?, end: pt("end")? },
        };
        Ok(Primitive { id: id.to_string(), geometry })
    }

    fn constraint(&mut self, v: &Value, path: &str) -> Result<Constraint, FormatError> {
        let map = self.object(v, path, &["kind", "refs", "pin"])?;
        let kind_s = required(map, "kind", path)?
            .as_str()
            .ok_or_else(|| schema(&format!("{}.kind", path), "expected a string"))?;
        let kind = ConstraintKind::parse(kind_s)
            .ok_or_else(|| schema(&format!("{}.kind", path), format!("unknown constraint kind `{}`", kind_s)))?;
        let refs_v = required(map, "refs", path)?
            .as_array()
            .ok_or_else(|| schema(&format!("{}.refs", path), "expected an array"))?;
        let mut refs = Vec::with_capacity(refs_v.len());
        for (i, r) in refs_v.iter().enumerate() {
            let rpath = format!("{}.refs[{}]", path, i);
            let s = r.as_str().ok_or_else(|| schema(&rpath, "expected a string"))?;
            refs.push(s.parse::<Reference>().map_err(|e| schema(&rpath, e.to_string()))?);
        }
        let pin = match map.get("pin") {
            Some(p) => Some(numbers(p, &format!("{}.pin", path))?),
            None => None,
        };
        Ok(Constraint { kind, refs, pin })
    }

    fn extrusion(&mut self, v: &Value, path: &str) -> Result<Extrusion, FormatError> {
        let mode = v
            .get("mode")
            .and_then(Value::as_str)
            .ok_or_else(|| schema(&format!("{}.mode", path), "missing extrusion mode"))?;
        match mode {
            "linear" => {
                let map = self.object(v, path, &["mode", "direction", "length", "symmetric", "opposite_length"])?;
                let symmetric = match map.get("symmetric") {
                    Some(b) => b.as_bool().ok_or_else(|| schema(&format!("{}.symmetric", path), "expected a boolean"))?,
                    None => false,
                };
                Ok(Extrusion::Linear {
                    direction: vec3(required(map, "direction", path)?, &format!("{}.direction", path))?,
                    length: number(map, "length", path)?,
                    symmetric,
                    opposite_length: match map.get("opposite_length") {
                        Some(_) => number(map, "opposite_length", path)?,
                        None => 0.0,
                    },
                })
            }
            "rotated" => {
                let map = self.object(v, path, &["mode", "axis_point", "axis_dir", "start_angle", "end_angle"])?;
                Ok(Extrusion::Rotated {
                    axis_point: vec3(required(map, "axis_point", path)?, &format!("{}.axis_point", path))?,
                    axis_dir: vec3(required(map, "axis_dir", path)?, &format!("{}.axis_dir", path))?,
                    start_angle: number(map, "start_angle", path)?,
                    end_angle: number(map, "end_angle", path)?,
                })
            }
            other => Err(schema(&format!("{}.mode", path), format!("unknown extrusion mode `{}`", other))),
        }
    }
}

fn required<'a>(map: &'a Map<String, Value>, key: &str, path: &str) -> Result<&'a Value, FormatError> {
    map.get(key).ok_or_else(|| schema(&format!("{}.{}", path, key), "missing field"))
}

fn number(map: &Map<String, Value>, key: &str, path: &str) -> Result<f64, FormatError> {
    required(map, key, path)?
        .as_f64()
        .ok_or_else(|| schema(&format!("{}.{}", path, key), "expected a number"))
}

fn numbers(v: &Value, path: &str) -> Result<Vec<f64>, FormatError> {
    let arr = v.as_array().ok_or_else(|| schema(path, "expected an array of numbers"))?;
    arr.iter()
        .enumerate()
        .map(|(i, x)| x.as_f64().ok_or_else(|| schema(&format!("{}[{}]", path, i), "expected a number")))
        .collect()
}

fn vec2(v: &Value, path: &str) -> Result<Vec2, FormatError> {
    match numbers(v, path)?.as_slice() {
        [x, y] => Ok(Vec2::new(*x, *y)),
        other => Err(schema(path, format!("expected 2 numbers, got {}", other.len()))),
    }
}

fn vec3(v: &Value, path: &str) -> Result<Vec3, FormatError> {
    match numbers(v, path)?.as_slice() {
        [x, y, z] => Ok(Vec3::new(*x, *y, *z)),
        other => Err(schema(path, format!("expected 3 numbers, got {}", other.len()))),
    }
}
