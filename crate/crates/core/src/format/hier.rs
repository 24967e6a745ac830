//! Legacy hierarchical sketches: faces made of ordered loops of oriented curves.
//!
//! Line-oriented grammar (`#` starts a comment, tokens are whitespace separated):
//!
//! ```text
//! hier 1
//! sketch
//!   plane <tx> <ty> <tz> <rx> <ry> <rz>
//!   face
//!     loop
//!       line <x1> <y1> <x2> <y2> [@id] [rev]
//!       arc <sx> <sy> <mx> <my> <ex> <ey> [@id] [rev]
//!       circle <cx> <cy> <r> [@id]
//!     end
//!   end
//!   constraint <kind> <ref> [<ref>] [pin <v>...]
//!   extrude linear <dx> <dy> <dz> <length> [symmetric] [opposite <len>]
//!   extrude rotated <px> <py> <pz> <ax> <ay> <az> <start> <end>
//!   boolean new_body|join|subtract|intersect
//! end
//! ```
//!
//! `rev` marks a curve traversed against its stored direction. Segments without
//! an explicit id get `f<face>l<loop>s<segment>` (1-based).

use std::collections::HashSet;
use std::fmt::Write as _;

use super::{format_number, FormatError};
use crate::geom::{Vec2, Vec3};
use crate::model::{geom_eps, BooleanOp, Constraint, ConstraintKind, Extrusion, Geometry, Reference, SketchPlane};

#[derive(Debug, Clone, PartialEq)]
pub struct HierSegment {
    pub id: String,
    pub geometry: Geometry,
    pub reversed: bool,
}

impl HierSegment {
    /// Geometry in traversal direction.
    pub fn oriented(&self) -> Geometry {
        if self.reversed {
            self.geometry.reversed()
        } else {
            self.geometry
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct HierLoop {
    pub segments: Vec<HierSegment>,
}

/// A face: the first loop is the outer boundary, the rest are inner boundaries.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Face {
    pub loops: Vec<HierLoop>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct HierarchicalSketch {
    pub plane: SketchPlane,
    pub faces: Vec<Face>,
    /// Constraints over segment ids, carried through flattening.
    pub constraints: Vec<Constraint>,
}

impl HierarchicalSketch {
    pub fn segments(&self) -> impl Iterator<Item = &HierSegment> {
        self.faces.iter().flat_map(|f| f.loops.iter()).flat_map(|l| l.segments.iter())
    }

    /// Longest edge of the 2D bounds of all segments.
    pub fn extent(&self) -> f64 {
        let mut lo = Vec2::repeat(f64::INFINITY);
        let mut hi = Vec2::repeat(f64::NEG_INFINITY);
        for s in self.segments() {
            let (a, b) = s.geometry.bounds();
            lo = lo.inf(&a);
            hi = hi.sup(&b);
        }
        if lo.x > hi.x {
            0.0
        } else {
            (hi - lo).max()
        }
    }
}

/// Everything imported from one `.hier` file, aligned by index.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct HierarchicalModel {
    pub sketches: Vec<HierarchicalSketch>,
    pub extrusions: Vec<Extrusion>,
    pub booleans: Vec<BooleanOp>,
}

struct Lines<'a> {
    iter: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    /// Next non-empty line as (1-based line number, tokens).
    fn next(&mut self) -> Option<(usize, Vec<&'a str>)> {
        for (i, raw) in self.iter.by_ref() {
            let content = raw.split('#').next().unwrap_or("");
            let toks: Vec<&str> = content.split_whitespace().collect();
            if !toks.is_empty() {
                return Some((i + 1, toks));
            }
        }
        None
    }
}

fn syntax(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Syntax { line, column: 1, message: message.into() }
}

fn nums(line: usize, toks: &[&str], n: usize) -> Result<Vec<f64>, FormatError> {
    if toks.len() < n {
        return Err(syntax(line, format!("expected {} numbers, found {}", n, toks.len())));
    }
    toks[..n]
        .iter()
        .map(|t| match t.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(syntax(line, format!("invalid number `{}`", t))),
        })
        .collect()
}

/// Parses a `.hier` file and checks every loop closes within `ε_geom`.
pub fn import_hierarchical(text: &str) -> Result<HierarchicalModel, FormatError> {
    let mut lines = Lines { iter: text.lines().enumerate() };
    match lines.next() {
        Some((_, t)) if t == ["hier", "1"] => {}
        Some((n, t)) => return Err(syntax(n, format!("expected header `hier 1`, found `{}`", t.join(" ")))),
        None => return Err(syntax(1, "empty input")),
    }
    let mut model = HierarchicalModel::default();
    while let Some((n, toks)) = lines.next() {
        if toks != ["sketch"] {
            return Err(syntax(n, format!("expected `sketch`, found `{}`", toks[0])));
        }
        let (sketch, ext, boolean) = parse_sketch(&mut lines, n)?;
        check_closed(&sketch, model.sketches.len())?;
        model.sketches.push(sketch);
        model.extrusions.push(ext);
        model.booleans.push(boolean);
    }
    Ok(model)
}

fn parse_sketch(
    lines: &mut Lines<'_>,
    start_line: usize,
) -> Result<(HierarchicalSketch, Extrusion, BooleanOp), FormatError> {
    let mut sketch = HierarchicalSketch::default();
    let mut extrusion = None;
    let mut boolean = None;
    let mut ids = HashSet::new();
    loop {
        let Some((n, toks)) = lines.next() else {
            return Err(syntax(start_line, "unterminated sketch block"));
        };
        match toks[0] {
            "end" => break,
            "plane" => {
                let v = nums(n, &toks[1..], 6)?;
                sketch.plane = SketchPlane::new(Vec3::new(v[0], v[1], v[2]), Vec3::new(v[3], v[4], v[5]));
            }
            "face" => {
                let face_index = sketch.faces.len() + 1;
                let face = parse_face(lines, n, face_index, &mut ids)?;
                sketch.faces.push(face);
            }
            "constraint" => sketch.constraints.push(parse_constraint(n, &toks[1..])?),
            "extrude" => extrusion = Some(parse_extrusion(n, &toks[1..])?),
            "boolean" => {
                boolean = Some(
                    toks.get(1)
                        .and_then(|b| BooleanOp::parse(b))
                        .ok_or_else(|| syntax(n, "expected new_body, join, subtract or intersect"))?,
                )
            }
            other => return Err(syntax(n, format!("unexpected `{}` in sketch", other))),
        }
    }
    let extrusion = extrusion.ok_or_else(|| syntax(start_line, "sketch without extrude"))?;
    let boolean = boolean.ok_or_else(|| syntax(start_line, "sketch without boolean"))?;
    Ok((sketch, extrusion, boolean))
}

fn parse_face(
    lines: &mut Lines<'_>,
    start_line: usize,
    face_index: usize,
    ids: &mut HashSet<String>,
) -> Result<Face, FormatError> {
    let mut face = Face::default();
    loop {
        let Some((n, toks)) = lines.next() else {
            return Err(syntax(start_line, "unterminated face block"));
        };
        match toks[0] {
            "end" => break,
            "loop" => {
                let loop_index = face.loops.len() + 1;
                let mut lp = HierLoop::default();
                loop {
                    let Some((m, t)) = lines.next() else {
                        return Err(syntax(n, "unterminated loop block"));
                    };
                    if t[0] == "end" {
                        break;
                    }
                    let auto = format!("f{}l{}s{}", face_index, loop_index, lp.segments.len() + 1);
                    let seg = parse_segment(m, &t, auto)?;
                    if !ids.insert(seg.id.clone()) {
                        return Err(FormatError::DuplicateId { part: 0, id: seg.id });
                    }
                    lp.segments.push(seg);
                }
                if lp.segments.is_empty() {
                    return Err(syntax(n, "empty loop"));
                }
                face.loops.push(lp);
            }
            other => return Err(syntax(n, format!("unexpected `{}` in face", other))),
        }
    }
    if face.loops.is_empty() {
        return Err(syntax(start_line, "face without loops"));
    }
    Ok(face)
}

fn parse_segment(line: usize, toks: &[&str], auto_id: String) -> Result<HierSegment, FormatError> {
    let count = match toks[0] {
        "line" => 4,
        "arc" => 6,
        "circle" => 3,
        other => return Err(FormatError::UnsupportedCurve { line, curve: other.to_string() }),
    };
    let v = nums(line, &toks[1..], count)?;
    let mut id = auto_id;
    let mut reversed = false;
    for t in &toks[1 + count..] {
        if let Some(explicit) = t.strip_prefix('@') {
            if !crate::model::is_valid_id(explicit) {
                return Err(syntax(line, format!("invalid id `{}`", explicit)));
            }
            id = explicit.to_string();
        } else if *t == "rev" {
            reversed = true;
        } else {
            return Err(syntax(line, format!("unexpected token `{}`", t)));
        }
    }
    let geometry = match toks[0] {
        "line" => Geometry::Line { start: Vec2::new(v[0], v[1]), end: Vec2::new(v[2], v[3]) },
        "arc" => Geometry::Arc {
            start: Vec2::new(v[0], v[1]),
            mid: Vec2::new(v[2], v[3]),
            end: Vec2::new(v[4], v[5]),
        },
        _ => Geometry::Circle { center: Vec2::new(v[0], v[1]), radius: v[2] },
    };
    Ok(HierSegment { id, geometry, reversed })
}

fn parse_constraint(line: usize, toks: &[&str]) -> Result<Constraint, FormatError> {
    let kind = toks
        .first()
        .and_then(|k| ConstraintKind::parse(k))
        .ok_or_else(|| syntax(line, "unknown constraint kind"))?;
    let mut refs = Vec::new();
    let mut pin = None;
    let mut i = 1;
    while i < toks.len() {
        if toks[i] == "pin" {
            pin = Some(nums(line, &toks[i + 1..], toks.len() - i - 1)?);
            break;
        }
        refs.push(toks[i].parse::<Reference>().map_err(|e| syntax(line, e.to_string()))?);
        i += 1;
    }
    Ok(Constraint { kind, refs, pin })
}

fn parse_extrusion(line: usize, toks: &[&str]) -> Result<Extrusion, FormatError> {
    match toks.first() {
        Some(&"linear") => {
            let v = nums(line, &toks[1..], 4)?;
            let mut symmetric = false;
            let mut opposite_length = 0.0;
            let mut rest = toks[5..].iter();
            while let Some(t) = rest.next() {
                match *t {
                    "symmetric" => symmetric = true,
                    "opposite" => {
                        let val = rest.next().ok_or_else(|| syntax(line, "opposite needs a length"))?;
                        opposite_length = nums(line, &[val], 1)?[0];
                    }
                    other => return Err(syntax(line, format!("unexpected token `{}`", other))),
                }
            }
            Ok(Extrusion::Linear { direction: Vec3::new(v[0], v[1], v[2]), length: v[3], symmetric, opposite_length })
        }
        Some(&"rotated") => {
            let v = nums(line, &toks[1..], 8)?;
            if toks.len() > 9 {
                return Err(syntax(line, "trailing tokens after rotated extrusion"));
            }
            Ok(Extrusion::Rotated {
                axis_point: Vec3::new(v[0], v[1], v[2]),
                axis_dir: Vec3::new(v[3], v[4], v[5]),
                start_angle: v[6],
                end_angle: v[7],
            })
        }
        _ => Err(syntax(line, "expected `extrude linear` or `extrude rotated`")),
    }
}

fn check_closed(sketch: &HierarchicalSketch, sketch_index: usize) -> Result<(), FormatError> {
    let eps = geom_eps(sketch.extent());
    for (fi, face) in sketch.faces.iter().enumerate() {
        for (li, lp) in face.loops.iter().enumerate() {
            let open = |gap: f64| FormatError::OpenLoop { sketch: sketch_index, face: fi, loop_index: li, gap };
            let has_circle = lp.segments.iter().any(|s| matches!(s.geometry, Geometry::Circle { .. }));
            if has_circle {
                if lp.segments.len() != 1 {
                    return Err(open(f64::NAN));
                }
                continue;
            }
            let ends: Vec<(Vec2, Vec2)> = lp.segments.iter().filter_map(|s| s.oriented().endpoints()).collect();
            for i in 0..ends.len() {
                let gap = (ends[i].1 - ends[(i + 1) % ends.len()].0).norm();
                if gap > eps {
                    return Err(open(gap));
                }
            }
        }
    }
    Ok(())
}

/// Writes a model back in `.hier` syntax with explicit ids.
pub fn write_hierarchical(model: &HierarchicalModel) -> String {
    let f = |x: f64| format_number(x);
    let mut out = String::from("hier 1\n");
    for ((sk, ext), b) in model.sketches.iter().zip(&model.extrusions).zip(&model.booleans) {
        out.push_str("sketch\n");
        let (t, a) = (sk.plane.translation, sk.plane.euler_angles);
        let _ = writeln!(out, "  plane {} {} {} {} {} {}", f(t.x), f(t.y), f(t.z), f(a.x), f(a.y), f(a.z));
        for face in &sk.faces {
            out.push_str("  face\n");
            for lp in &face.loops {
                out.push_str("    loop\n");
                for s in &lp.segments {
                    let body = match s.geometry {
                        Geometry::Line { start, end } => {
                            format!("line {} {} {} {}", f(start.x), f(start.y), f(end.x), f(end.y))
                        }
                        Geometry::Arc { start, mid, end } => format!(
                            "arc {} {} {} {} {} {}",
                            f(start.x),
                            f(start.y),
                            f(mid.x),
                            f(mid.y),
                            f(end.x),
                            f(end.y)
                        ),
                        Geometry::Circle { center, radius } => {
                            format!("circle {} {} {}", f(center.x), f(center.y), f(radius))
                        }
                    };
                    let _ = writeln!(out, "      {} @{}{}", body, s.id, if s.reversed { " rev" } else { "" });
                }
                out.push_str("    end\n");
            }
            out.push_str("  end\n");
        }
        for c in &sk.constraints {
            let refs: Vec<String> = c.refs.iter().map(|r| r.to_string()).collect();
            let _ = write!(out, "  constraint {} {}", c.kind, refs.join(" "));
            if let Some(pin) = &c.pin {
                let vals: Vec<String> = pin.iter().map(|&v| f(v)).collect();
                let _ = write!(out, " pin {}", vals.join(" "));
            }
            out.push('\n');
        }
        match *ext {
            Extrusion::Linear { direction: d, length, symmetric, opposite_length } => {
                let _ = write!(out, "  extrude linear {} {} {} {}", f(d.x), f(d.y), f(d.z), f(length));
                if symmetric {
                    out.push_str(" symmetric");
                }
                if opposite_length != 0.0 {
                    let _ = write!(out, " opposite {}", f(opposite_length));
                }
                out.push('\n');
            }
            Extrusion::Rotated { axis_point: p, axis_dir: d, start_angle, end_angle } => {
                let _ = writeln!(
                    out,
                    "  extrude rotated {} {} {} {} {} {} {} {}",
                    f(p.x),
                    f(p.y),
                    f(p.z),
                    f(d.x),
                    f(d.y),
                    f(d.z),
                    f(start_angle),
                    f(end_angle)
                );
            }
        }
        let _ = writeln!(out, "  boolean {}", b.as_str());
        out.push_str("end\n");
    }
    out
}
