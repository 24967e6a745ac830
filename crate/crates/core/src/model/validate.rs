use std::collections::HashSet;
use std::f64::consts::{PI, TAU};
use std::fmt;

use super::{
    geom_eps, is_valid_id, Anchor, BooleanOp, Constraint, ConstraintKind, Document, Extrusion, Geometry,
    PrimitiveKind, Sketch, GEOM_EPS_REL,
};
use crate::geom::circumcircle;

/// Machine-readable violation codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ViolationCode {
    EmptyDocument,
    FirstNotNewBody,
    NonFinite,
    AngleOutOfRange,
    InvalidId,
    DuplicateId,
    LineDegenerate,
    RadiusNonpositive,
    ArcCollinear,
    DanglingRef,
    ArityMismatch,
    IllegalAnchor,
    IllegalReferent,
    PinMismatch,
    DirectionNotUnit,
    LengthNonpositive,
    SweepOutOfRange,
}

impl ViolationCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ViolationCode::EmptyDocument => "EMPTY_DOCUMENT",
            ViolationCode::FirstNotNewBody => "FIRST_NOT_NEW_BODY",
            ViolationCode::NonFinite => "NON_FINITE",
            ViolationCode::AngleOutOfRange => "ANGLE_OUT_OF_RANGE",
            ViolationCode::InvalidId => "INVALID_ID",
            ViolationCode::DuplicateId => "DUPLICATE_ID",
            ViolationCode::LineDegenerate => "LINE_DEGENERATE",
            ViolationCode::RadiusNonpositive => "RADIUS_NONPOSITIVE",
            ViolationCode::ArcCollinear => "ARC_COLLINEAR",
            ViolationCode::DanglingRef => "DANGLING_REF",
            ViolationCode::ArityMismatch => "ARITY_MISMATCH",
            ViolationCode::IllegalAnchor => "ILLEGAL_ANCHOR",
            ViolationCode::IllegalReferent => "ILLEGAL_REFERENT",
            ViolationCode::PinMismatch => "PIN_MISMATCH",
            ViolationCode::DirectionNotUnit => "DIRECTION_NOT_UNIT",
            ViolationCode::LengthNonpositive => "LENGTH_NONPOSITIVE",
            ViolationCode::SweepOutOfRange => "SWEEP_OUT_OF_RANGE",
        }
    }
}

impl fmt::Display for ViolationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One broken invariant, located by part index and optionally primitive id or constraint index.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub code: ViolationCode,
    pub part: Option<usize>,
    pub primitive: Option<String>,
    pub constraint: Option<usize>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code)?;
        if let Some(p) = self.part {
            write!(f, " part={}", p)?;
        }
        if let Some(id) = &self.primitive {
            write!(f, " primitive={}", id)?;
        }
        if let Some(c) = self.constraint {
            write!(f, " constraint={}", c)?;
        }
        write!(f, ": {}", self.message)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn codes(&self) -> Vec<ViolationCode> {
        self.violations.iter().map(|v| v.code).collect()
    }

    pub fn has(&self, code: ViolationCode) -> bool {
        self.violations.iter().any(|v| v.code == code)
    }
}

struct Collector {
    part: usize,
    out: Vec<Violation>,
}

impl Collector {
    fn push(&mut self, code: ViolationCode, primitive: Option<&str>, constraint: Option<usize>, message: String) {
        self.out.push(Violation {
            code,
            part: Some(self.part),
            primitive: primitive.map(str::to_string),
            constraint,
            message,
        });
    }
}

/// Checks every type invariant. Violations are data; the function never fails.
pub fn validate_document(doc: &Document) -> ValidationReport {
    let mut report = ValidationReport::default();
    if doc.parts.is_empty() {
        report.violations.push(Violation {
            code: ViolationCode::EmptyDocument,
            part: None,
            primitive: None,
            constraint: None,
            message: "document has no parts".into(),
        });
        return report;
    }
    let extent = doc.extent();
    let eps = geom_eps(extent);
    for (i, part) in doc.parts.iter().enumerate() {
        let mut c = Collector { part: i, out: Vec::new() };
        if i == 0 && part.boolean != BooleanOp::NewBody {
            c.push(ViolationCode::FirstNotNewBody, None, None, format!("first part uses {}", part.boolean.as_str()));
        }
        validate_sketch(&part.sketch, eps, extent, &mut c);
        validate_extrusion(&part.extrusion, &mut c);
        report.violations.extend(c.out);
    }
    report
}

fn validate_sketch(sketch: &Sketch, eps: f64, extent: f64, c: &mut Collector) {
    let plane = &sketch.plane;
    if !plane.translation.iter().chain(plane.euler_angles.iter()).all(|v| v.is_finite()) {
        c.push(ViolationCode::NonFinite, None, None, "sketch plane has non-finite values".into());
    } else if plane.euler_angles.iter().any(|&a| !(a > -PI && a <= PI)) {
        c.push(ViolationCode::AngleOutOfRange, None, None, "euler angle outside (-pi, pi]".into());
    }

    let mut seen = HashSet::new();
    for prim in &sketch.primitives {
        let id = prim.id.as_str();
        if !is_valid_id(id) {
            c.push(ViolationCode::InvalidId, Some(id), None, "identifier must be [A-Za-z0-9_-]+".into());
        }
        if !seen.insert(id) {
            c.push(ViolationCode::DuplicateId, Some(id), None, "identifier used twice".into());
        }
        let params = prim.geometry.params();
        if params.iter().any(|v| !v.is_finite()) {
            c.push(ViolationCode::NonFinite, Some(id), None, "non-finite parameter".into());
            continue;
        }
        match prim.geometry {
            Geometry::Line { start, end } => {
                if (end - start).norm() <= eps {
                    c.push(ViolationCode::LineDegenerate, Some(id), None, "line endpoints coincide".into());
                }
            }
            Geometry::Circle { radius, .. } => {
                if radius <= eps {
                    c.push(ViolationCode::RadiusNonpositive, Some(id), None, format!("radius {}", radius));
                }
            }
            Geometry::Arc { start, mid, end } => {
                let ok = circumcircle(start, mid, end).is_some_and(|(_, r)| {
                    let limit = if extent > 0.0 { extent / GEOM_EPS_REL } else { 1.0 / GEOM_EPS_REL };
                    r < limit
                }) && (end - start).norm() > eps
                    && (mid - start).norm() > eps
                    && (end - mid).norm() > eps;
                if !ok {
                    c.push(ViolationCode::ArcCollinear, Some(id), None, "arc points are collinear or coincide".into());
                }
            }
        }
    }

    for (k, con) in sketch.constraints.iter().enumerate() {
        if let Err((code, msg)) = check_constraint(con, sketch) {
            c.push(code, None, Some(k), msg);
        }
    }
}

/// Checks arity, reference resolution, anchor legality and referent kinds of one constraint.
pub fn check_constraint(con: &Constraint, sketch: &Sketch) -> Result<(), (ViolationCode, String)> {
    use ConstraintKind as K;
    use PrimitiveKind as P;

    if con.refs.len() != con.kind.arity() {
        return Err((
            ViolationCode::ArityMismatch,
            format!("{} takes {} reference(s), got {}", con.kind, con.kind.arity(), con.refs.len()),
        ));
    }
    let mut kinds = Vec::with_capacity(2);
    for r in &con.refs {
        match sketch.primitive(&r.id) {
            Some(p) => kinds.push(p.kind()),
            None => return Err((ViolationCode::DanglingRef, format!("reference `{}` does not resolve", r))),
        }
    }
    for (r, &k) in con.refs.iter().zip(&kinds) {
        let legal_point = !matches!(
            (r.anchor, k),
            (Anchor::Start | Anchor::End, P::Circle) | (Anchor::Center, P::Line)
        );
        if !legal_point {
            return Err((ViolationCode::IllegalAnchor, format!("`{}` is not a point of a {}", r, k.as_str())));
        }
    }
    let anchors: Vec<Anchor> = con.refs.iter().map(|r| r.anchor).collect();
    let all_whole = anchors.iter().all(|a| *a == Anchor::Whole);
    let curve = |k: P| k == P::Circle || k == P::Arc;

    let anchor_ok = match con.kind {
        K::Coincident => anchors.iter().all(|a| a.is_point()),
        K::Concentric => anchors.iter().all(|a| matches!(a, Anchor::Whole | Anchor::Center)),
        K::Fix => true,
        _ => all_whole,
    };
    if !anchor_ok {
        return Err((ViolationCode::IllegalAnchor, format!("anchors {:?} not allowed for {}", anchors, con.kind)));
    }

    let kinds_ok = match con.kind {
        K::Coincident | K::Fix => true,
        K::Parallel | K::Perpendicular | K::Horizontal | K::Vertical => kinds.iter().all(|&k| k == P::Line),
        K::Tangent => !(kinds[0] == P::Line && kinds[1] == P::Line),
        K::Equal => (kinds[0] == P::Line) == (kinds[1] == P::Line),
        K::Concentric => kinds.iter().all(|&k| curve(k)),
        K::Normal => (kinds[0] == P::Line) != (kinds[1] == P::Line),
    };
    if !kinds_ok {
        let names: Vec<_> = kinds.iter().map(|k| k.as_str()).collect();
        return Err((ViolationCode::IllegalReferent, format!("{} cannot relate {}", con.kind, names.join(" and "))));
    }
    if con.refs.len() == 2 && con.refs[0].id == con.refs[1].id && con.kind != K::Coincident {
        return Err((ViolationCode::IllegalReferent, format!("{} relates a primitive to itself", con.kind)));
    }

    match (&con.pin, con.kind) {
        (Some(_), k) if k != K::Fix => {
            Err((ViolationCode::PinMismatch, format!("{} does not take pinned values", k)))
        }
        (Some(pin), K::Fix) => {
            let expected = match con.refs[0].anchor {
                Anchor::Whole => kinds[0].param_count(),
                _ => 2,
            };
            if pin.len() != expected {
                Err((ViolationCode::PinMismatch, format!("fix expects {} pinned values, got {}", expected, pin.len())))
            } else if pin.iter().any(|v| !v.is_finite()) {
                Err((ViolationCode::NonFinite, "non-finite pinned value".into()))
            } else {
                Ok(())
            }
        }
        _ => Ok(()),
    }
}

fn validate_extrusion(ext: &Extrusion, c: &mut Collector) {
    match *ext {
        Extrusion::Linear { direction, length, opposite_length, .. } => {
            if !direction.iter().all(|v| v.is_finite()) || !length.is_finite() || !opposite_length.is_finite() {
                c.push(ViolationCode::NonFinite, None, None, "non-finite extrusion".into());
                return;
            }
            if (direction.norm() - 1.0).abs() > 1e-9 {
                c.push(ViolationCode::DirectionNotUnit, None, None, format!("|direction| = {}", direction.norm()));
            }
            if length <= 0.0 || opposite_length < 0.0 {
                c.push(ViolationCode::LengthNonpositive, None, None, format!("length {}", length));
            }
        }
        Extrusion::Rotated { axis_point, axis_dir, start_angle, end_angle } => {
            if !axis_point.iter().chain(axis_dir.iter()).all(|v| v.is_finite())
                || !start_angle.is_finite()
                || !end_angle.is_finite()
            {
                c.push(ViolationCode::NonFinite, None, None, "non-finite extrusion".into());
                return;
            }
            if (axis_dir.norm() - 1.0).abs() > 1e-9 {
                c.push(ViolationCode::DirectionNotUnit, None, None, format!("|axis_dir| = {}", axis_dir.norm()));
            }
            let sweep = end_angle - start_angle;
            if !(sweep > 0.0 && sweep <= TAU) {
                c.push(ViolationCode::SweepOutOfRange, None, None, format!("sweep {}", sweep));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Part, Primitive, Reference, SketchPlane};

    fn square_doc() -> Document {
        let sketch = Sketch::new(
            SketchPlane::default(),
            vec![
                Primitive::line("L1", [0.0, 0.0], [1.0, 0.0]),
                Primitive::line("L2", [1.0, 0.0], [1.0, 1.0]),
                Primitive::line("L3", [1.0, 1.0], [0.0, 1.0]),
                Primitive::line("L4", [0.0, 1.0], [0.0, 0.0]),
            ],
            vec![
                Constraint::unary(ConstraintKind::Horizontal, "L1"),
                Constraint::new(
                    ConstraintKind::Coincident,
                    vec![Reference::at("L1", Anchor::End), Reference::at("L2", Anchor::Start)],
                ),
            ],
        );
        Document::new(vec![Part {
            sketch,
            extrusion: Extrusion::linear([0.0, 0.0, 1.0], 1.0),
            boolean: BooleanOp::NewBody,
        }])
    }

    #[test]
    fn valid_square_has_empty_report() {
        assert!(validate_document(&square_doc()).is_valid());
    }

    #[test]
    fn zero_radius_is_reported() {
        let mut doc = square_doc();
        doc.parts[0].sketch.primitives.push(Primitive::circle("C1", [0.5, 0.5], 0.0));
        let r = validate_document(&doc);
        assert_eq!(r.codes(), vec![ViolationCode::RadiusNonpositive]);
        assert_eq!(r.violations[0].primitive.as_deref(), Some("C1"));
    }

    #[test]
    fn dangling_reference_is_reported() {
        let mut doc = square_doc();
        doc.parts[0].sketch.constraints.push(Constraint::binary(ConstraintKind::Parallel, "L1", "L9"));
        let r = validate_document(&doc);
        assert_eq!(r.codes(), vec![ViolationCode::DanglingRef]);
        assert_eq!(r.violations[0].constraint, Some(2));
    }

    #[test]
    fn anchor_and_kind_rules() {
        let doc = square_doc();
        let sk = &doc.parts[0].sketch;
        let bad_anchor = Constraint::binary(ConstraintKind::Coincident, "L1", "L2");
        assert_eq!(check_constraint(&bad_anchor, sk).unwrap_err().0, ViolationCode::IllegalAnchor);
        let bad_arity = Constraint::new(ConstraintKind::Horizontal, vec![Reference::whole("L1"), Reference::whole("L2")]);
        assert_eq!(check_constraint(&bad_arity, sk).unwrap_err().0, ViolationCode::ArityMismatch);
        let mut with_circle = sk.clone();
        with_circle.primitives.push(Primitive::circle("C1", [0.5, 0.5], 0.2));
        let bad_kind = Constraint::binary(ConstraintKind::Parallel, "L1", "C1");
        assert_eq!(check_constraint(&bad_kind, &with_circle).unwrap_err().0, ViolationCode::IllegalReferent);
        let center_of_line = Constraint::new(
            ConstraintKind::Coincident,
            vec![Reference::at("L1", Anchor::Center), Reference::at("C1", Anchor::Center)],
        );
        assert_eq!(check_constraint(&center_of_line, &with_circle).unwrap_err().0, ViolationCode::IllegalAnchor);
        let start_of_circle = Constraint::new(
            ConstraintKind::Coincident,
            vec![Reference::at("L1", Anchor::Start), Reference::at("C1", Anchor::Start)],
        );
        assert_eq!(check_constraint(&start_of_circle, &with_circle).unwrap_err().0, ViolationCode::IllegalAnchor);
    }

    #[test]
    fn boolean_order_and_extrusion_rules() {
        let mut doc = square_doc();
        doc.parts[0].boolean = BooleanOp::Join;
        doc.parts[0].extrusion = Extrusion::linear([0.0, 0.0, 2.0], 1.0);
        let codes = validate_document(&doc).codes();
        assert!(codes.contains(&ViolationCode::FirstNotNewBody));
        assert!(codes.contains(&ViolationCode::DirectionNotUnit));
        doc.parts[0].boolean = BooleanOp::NewBody;
        doc.parts[0].extrusion = Extrusion::rotated([0.0; 3], [0.0, 1.0, 0.0], 1.0, 1.0);
        assert_eq!(validate_document(&doc).codes(), vec![ViolationCode::SweepOutOfRange]);
        assert_eq!(validate_document(&Document::new(vec![])).codes(), vec![ViolationCode::EmptyDocument]);
    }

    #[test]
    fn fix_pin_length_checked() {
        let doc = square_doc();
        let mut c = Constraint::unary(ConstraintKind::Fix, "L1");
        c.pin = Some(vec![0.0, 0.0, 1.0, 0.0]);
        assert!(check_constraint(&c, &doc.parts[0].sketch).is_ok());
        c.pin = Some(vec![0.0]);
        assert_eq!(check_constraint(&c, &doc.parts[0].sketch).unwrap_err().0, ViolationCode::PinMismatch);
    }
}
