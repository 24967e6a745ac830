//! Domain types of the flat, constraint-aware modeling sequence.
//!
//! A [`Document`] is an ordered list of [`Part`]s. Each part pairs one planar
//! [`Sketch`] (an unordered set of primitives plus relational constraints) with
//! one [`Extrusion`] and one [`BooleanOp`]. Loops and faces are never stored;
//! they are inferred by the topology module.
//!
//! Values are plain data and immutable by convention: transformations build
//! new values.

mod bounds;
mod normalize;
mod validate;

use std::fmt;
use std::str::FromStr;

use crate::geom::{wrap_angle, ArcParams, Mat3, Vec2, Vec3};

pub use bounds::{document_bounds, part_bounds, sketch_extent};
pub use normalize::{normalize_document, NormalizeError};
pub use validate::{check_constraint, validate_document, ValidationReport, Violation, ViolationCode};

/// Relative tolerance for degeneracy tests: `ε_geom = GEOM_EPS_REL × model extent`.
pub const GEOM_EPS_REL: f64 = 1e-8;

/// Absolute degeneracy tolerance for a model of the given extent.
pub fn geom_eps(extent: f64) -> f64 {
    GEOM_EPS_REL * if extent > 0.0 && extent.is_finite() { extent } else { 1.0 }
}

/// Placement of a sketch in world space.
///
/// Rotation uses intrinsic X-Y-Z Euler angles: `R = Rx(a) · Ry(b) · Rz(c)`.
/// Sketch coordinates `(x, y)` map to `translation + R · (x, y, 0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SketchPlane {
    pub translation: Vec3,
    pub euler_angles: Vec3,
}

impl Default for SketchPlane {
    fn default() -> Self {
        Self { translation: Vec3::zeros(), euler_angles: Vec3::zeros() }
    }
}

impl SketchPlane {
    /// Builds a plane with each angle wrapped into `(-π, π]`.
    pub fn new(translation: Vec3, euler_angles: Vec3) -> Self {
        Self { translation, euler_angles: euler_angles.map(wrap_angle) }
    }

    pub fn rotation(&self) -> Mat3 {
        let [a, b, c] = [self.euler_angles.x, self.euler_angles.y, self.euler_angles.z];
        let (sa, ca) = a.sin_cos();
        let (sb, cb) = b.sin_cos();
        let (sc, cc) = c.sin_cos();
        let rx = Mat3::new(1.0, 0.0, 0.0, 0.0, ca, -sa, 0.0, sa, ca);
        let ry = Mat3::new(cb, 0.0, sb, 0.0, 1.0, 0.0, -sb, 0.0, cb);
        let rz = Mat3::new(cc, -sc, 0.0, sc, cc, 0.0, 0.0, 0.0, 1.0);
        rx * ry * rz
    }

    pub fn to_world(&self, p: Vec2) -> Vec3 {
        self.translation + self.rotation() * Vec3::new(p.x, p.y, 0.0)
    }

    pub fn normal(&self) -> Vec3 {
        self.rotation().column(2).into_owned()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PrimitiveKind {
    Line,
    Circle,
    Arc,
}

impl PrimitiveKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PrimitiveKind::Line => "line",
            PrimitiveKind::Circle => "circle",
            PrimitiveKind::Arc => "arc",
        }
    }

    /// Number of stored scalar parameters.
    pub fn param_count(self) -> usize {
        match self {
            PrimitiveKind::Line => 4,
            PrimitiveKind::Circle => 3,
            PrimitiveKind::Arc => 6,
        }
    }
}

/// Compact parametric curve geometry in sketch coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Geometry {
    Line { start: Vec2, end: Vec2 },
    Circle { center: Vec2, radius: f64 },
    Arc { start: Vec2, mid: Vec2, end: Vec2 },
}

impl Geometry {
    pub fn kind(&self) -> PrimitiveKind {
        match self {
            Geometry::Line { .. } => PrimitiveKind::Line,
            Geometry::Circle { .. } => PrimitiveKind::Circle,
            Geometry::Arc { .. } => PrimitiveKind::Arc,
        }
    }

    /// Stored parameters in a fixed order: line `[sx sy ex ey]`,
    /// circle `[cx cy r]`, arc `[sx sy mx my ex ey]`.
    pub fn params(&self) -> Vec<f64> {
        match *self {
            Geometry::Line { start, end } => vec![start.x, start.y, end.x, end.y],
            Geometry::Circle { center, radius } => vec![center.x, center.y, radius],
            Geometry::Arc { start, mid, end } => vec![start.x, start.y, mid.x, mid.y, end.x, end.y],
        }
    }

    pub fn from_params(kind: PrimitiveKind, p: &[f64]) -> Self {
        match kind {
            PrimitiveKind::Line => Geometry::Line {
                start: Vec2::new(p[0], p[1]),
                end: Vec2::new(p[2], p[3]),
            },
            PrimitiveKind::Circle => Geometry::Circle { center: Vec2::new(p[0], p[1]), radius: p[2] },
            PrimitiveKind::Arc => Geometry::Arc {
                start: Vec2::new(p[0], p[1]),
                mid: Vec2::new(p[2], p[3]),
                end: Vec2::new(p[4], p[5]),
            },
        }
    }

    /// Applies `f` to every point and `g` to the radius.
    pub fn map(&self, f: impl Fn(Vec2) -> Vec2, g: impl Fn(f64) -> f64) -> Self {
        match *self {
            Geometry::Line { start, end } => Geometry::Line { start: f(start), end: f(end) },
            Geometry::Circle { center, radius } => Geometry::Circle { center: f(center), radius: g(radius) },
            Geometry::Arc { start, mid, end } => Geometry::Arc { start: f(start), mid: f(mid), end: f(end) },
        }
    }

    /// Same curve traversed the other way.
    pub fn reversed(&self) -> Self {
        match *self {
            Geometry::Line { start, end } => Geometry::Line { start: end, end: start },
            Geometry::Arc { start, mid, end } => Geometry::Arc { start: end, mid, end: start },
            c @ Geometry::Circle { .. } => c,
        }
    }

    pub fn arc_params(&self) -> Option<ArcParams> {
        match *self {
            Geometry::Arc { start, mid, end } => ArcParams::from_three_points(start, mid, end),
            _ => None,
        }
    }

    pub fn endpoints(&self) -> Option<(Vec2, Vec2)> {
        match *self {
            Geometry::Line { start, end } | Geometry::Arc { start, end, .. } => Some((start, end)),
            Geometry::Circle { .. } => None,
        }
    }

    /// Center of a circle or arc.
    pub fn center(&self) -> Option<Vec2> {
        match *self {
            Geometry::Circle { center, .. } => Some(center),
            Geometry::Arc { .. } => self.arc_params().map(|a| a.center),
            Geometry::Line { .. } => None,
        }
    }

    pub fn radius(&self) -> Option<f64> {
        match *self {
            Geometry::Circle { radius, .. } => Some(radius),
            Geometry::Arc { .. } => self.arc_params().map(|a| a.radius),
            Geometry::Line { .. } => None,
        }
    }

    pub fn length(&self) -> f64 {
        match *self {
            Geometry::Line { start, end } => (end - start).norm(),
            Geometry::Circle { radius, .. } => std::f64::consts::TAU * radius,
            Geometry::Arc { .. } => self.arc_params().map_or(0.0, |a| a.length()),
        }
    }

    /// Point at an anchor, if the anchor names a point of this curve.
    pub fn anchor_point(&self, anchor: Anchor) -> Option<Vec2> {
        match (anchor, self) {
            (Anchor::Start, Geometry::Line { start, .. } | Geometry::Arc { start, .. }) => Some(*start),
            (Anchor::End, Geometry::Line { end, .. } | Geometry::Arc { end, .. }) => Some(*end),
            (Anchor::Center, Geometry::Circle { .. } | Geometry::Arc { .. }) => self.center(),
            _ => None,
        }
    }

    /// Polyline approximation with sagitta at most `chord_tol`. Circles are
    /// returned closed (first point repeated at the end) starting at angle 0, CCW.
    pub fn sample(&self, chord_tol: f64) -> Vec<Vec2> {
        match *self {
            Geometry::Line { start, end } => vec![start, end],
            Geometry::Circle { center, radius } => {
                let n = crate::geom::segments_for_sweep(radius, std::f64::consts::TAU, chord_tol);
                (0..=n)
                    .map(|i| {
                        let a = std::f64::consts::TAU * (i % n) as f64 / n as f64;
                        center + radius * Vec2::new(a.cos(), a.sin())
                    })
                    .collect()
            }
            Geometry::Arc { start, end, .. } => match self.arc_params() {
                Some(arc) => {
                    let n = arc.segments_for_tolerance(chord_tol);
                    let mut pts: Vec<Vec2> = (0..=n).map(|i| arc.point_at(i as f64 / n as f64)).collect();
                    pts[0] = start;
                    pts[n] = end;
                    pts
                }
                None => vec![start, end],
            },
        }
    }

    /// Lower-left and upper-right corners of the 2D bounds.
    pub fn bounds(&self) -> (Vec2, Vec2) {
        match *self {
            Geometry::Line { start, end } => (start.inf(&end), start.sup(&end)),
            Geometry::Circle { center, radius } => {
                (center - Vec2::repeat(radius), center + Vec2::repeat(radius))
            }
            Geometry::Arc { start, mid, end } => {
                let mut lo = start.inf(&end).inf(&mid);
                let mut hi = start.sup(&end).sup(&mid);
                if let Some(arc) = self.arc_params() {
                    for k in 0..4 {
                        let ang = k as f64 * std::f64::consts::FRAC_PI_2;
                        if arc.param_of_angle(ang, 0.0).is_some() {
                            let p = arc.center + arc.radius * Vec2::new(ang.cos(), ang.sin());
                            lo = lo.inf(&p);
                            hi = hi.sup(&p);
                        }
                    }
                }
                (lo, hi)
            }
        }
    }
}

/// A sketch curve with a stable identifier used by constraint references.
#[derive(Debug, Clone, PartialEq)]
pub struct Primitive {
    pub id: String,
    pub geometry: Geometry,
}

impl Primitive {
    pub fn new(id: impl Into<String>, geometry: Geometry) -> Self {
        Self { id: id.into(), geometry }
    }

    pub fn line(id: impl Into<String>, start: [f64; 2], end: [f64; 2]) -> Self {
        Self::new(id, Geometry::Line { start: start.into(), end: end.into() })
    }

    pub fn circle(id: impl Into<String>, center: [f64; 2], radius: f64) -> Self {
        Self::new(id, Geometry::Circle { center: center.into(), radius })
    }

    pub fn arc(id: impl Into<String>, start: [f64; 2], mid: [f64; 2], end: [f64; 2]) -> Self {
        Self::new(id, Geometry::Arc { start: start.into(), mid: mid.into(), end: end.into() })
    }

    pub fn kind(&self) -> PrimitiveKind {
        self.geometry.kind()
    }
}

/// Which part of a primitive a constraint reference addresses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Anchor {
    Whole,
    Start,
    End,
    Center,
}

impl Anchor {
    pub fn suffix(self) -> Option<&'static str> {
        match self {
            Anchor::Whole => None,
            Anchor::Start => Some("start"),
            Anchor::End => Some("end"),
            Anchor::Center => Some("center"),
        }
    }

    pub fn is_point(self) -> bool {
        self != Anchor::Whole
    }
}

/// A primitive id optionally qualified by an anchor, written `id` or `id.anchor`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Reference {
    pub id: String,
    pub anchor: Anchor,
}

impl Reference {
    pub fn whole(id: impl Into<String>) -> Self {
        Self { id: id.into(), anchor: Anchor::Whole }
    }

    pub fn at(id: impl Into<String>, anchor: Anchor) -> Self {
        Self { id: id.into(), anchor }
    }
}

impl fmt::Display for Reference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.anchor.suffix() {
            Some(s) => write!(f, "{}.{}", self.id, s),
            None => f.write_str(&self.id),
        }
    }
}

/// Error returned when a reference string cannot be parsed.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid reference `{0}`")]
pub struct ParseReferenceError(pub String);

impl FromStr for Reference {
    type Err = ParseReferenceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (id, anchor) = match s.rsplit_once('.') {
            Some((id, "start")) => (id, Anchor::Start),
            Some((id, "end")) => (id, Anchor::End),
            Some((id, "center")) => (id, Anchor::Center),
            Some(_) => return Err(ParseReferenceError(s.to_string())),
            None => (s, Anchor::Whole),
        };
        if !is_valid_id(id) {
            return Err(ParseReferenceError(s.to_string()));
        }
        Ok(Reference { id: id.to_string(), anchor })
    }
}

/// Identifiers are non-empty ASCII alphanumerics, `_` or `-`.
pub fn is_valid_id(id: &str) -> bool {
    !id.is_empty() && id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-')
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ConstraintKind {
    Coincident,
    Parallel,
    Perpendicular,
    Horizontal,
    Vertical,
    Tangent,
    Equal,
    Concentric,
    Fix,
    Normal,
}

impl ConstraintKind {
    pub const ALL: [ConstraintKind; 10] = [
        ConstraintKind::Coincident,
        ConstraintKind::Parallel,
        ConstraintKind::Perpendicular,
        ConstraintKind::Horizontal,
        ConstraintKind::Vertical,
        ConstraintKind::Tangent,
        ConstraintKind::Equal,
        ConstraintKind::Concentric,
        ConstraintKind::Fix,
        ConstraintKind::Normal,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ConstraintKind::Coincident => "coincident",
            ConstraintKind::Parallel => "parallel",
            ConstraintKind::Perpendicular => "perpendicular",
            ConstraintKind::Horizontal => "horizontal",
            ConstraintKind::Vertical => "vertical",
            ConstraintKind::Tangent => "tangent",
            ConstraintKind::Equal => "equal",
            ConstraintKind::Concentric => "concentric",
            ConstraintKind::Fix => "fix",
            ConstraintKind::Normal => "normal",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }

    pub fn arity(self) -> usize {
        match self {
            ConstraintKind::Horizontal | ConstraintKind::Vertical | ConstraintKind::Fix => 1,
            _ => 2,
        }
    }

    /// Whether swapping the two references describes the same relation.
    pub fn is_symmetric(self) -> bool {
        self.arity() == 2 && self != ConstraintKind::Normal
    }
}

impl fmt::Display for ConstraintKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A relation over one or two primitive references.
///
/// `pin` is only meaningful for [`ConstraintKind::Fix`]: the pinned parameter
/// values. Without it, Fix pins whatever geometry the sketch currently holds.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub kind: ConstraintKind,
    pub refs: Vec<Reference>,
    pub pin: Option<Vec<f64>>,
}

impl Constraint {
    pub fn new(kind: ConstraintKind, refs: Vec<Reference>) -> Self {
        Self { kind, refs, pin: None }
    }

    pub fn unary(kind: ConstraintKind, id: &str) -> Self {
        Self::new(kind, vec![Reference::whole(id)])
    }

    pub fn binary(kind: ConstraintKind, a: &str, b: &str) -> Self {
        Self::new(kind, vec![Reference::whole(a), Reference::whole(b)])
    }

    /// Key that identifies duplicates: symmetric kinds compare refs unordered.
    pub fn identity_key(&self) -> (ConstraintKind, Vec<Reference>, Option<Vec<u64>>) {
        let mut refs = self.refs.clone();
        if self.kind.is_symmetric() {
            refs.sort();
        }
        let pin = self.pin.as_ref().map(|p| p.iter().map(|v| v.to_bits()).collect());
        (self.kind, refs, pin)
    }
}

/// Extrusion of a sketch profile into a solid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Extrusion {
    /// Sweep along `direction` by `length`. `symmetric` centers the sweep on
    /// the sketch plane; `opposite_length` adds a second side against `direction`.
    /// Length is measured along the direction vector itself.
    Linear { direction: Vec3, length: f64, symmetric: bool, opposite_length: f64 },
    /// Revolution about the axis through `axis_point` along `axis_dir`.
    Rotated { axis_point: Vec3, axis_dir: Vec3, start_angle: f64, end_angle: f64 },
}

impl Extrusion {
    pub fn linear(direction: [f64; 3], length: f64) -> Self {
        Extrusion::Linear { direction: direction.into(), length, symmetric: false, opposite_length: 0.0 }
    }

    pub fn rotated(axis_point: [f64; 3], axis_dir: [f64; 3], start_angle: f64, end_angle: f64) -> Self {
        Extrusion::Rotated { axis_point: axis_point.into(), axis_dir: axis_dir.into(), start_angle, end_angle }
    }

    /// Signed offsets along the direction covered by a linear extrusion.
    pub fn linear_span(&self) -> Option<(f64, f64)> {
        match *self {
            Extrusion::Linear { length, symmetric: true, .. } => Some((-0.5 * length, 0.5 * length)),
            Extrusion::Linear { length, opposite_length, .. } => Some((-opposite_length, length)),
            Extrusion::Rotated { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BooleanOp {
    NewBody,
    Join,
    Subtract,
    Intersect,
}

impl BooleanOp {
    pub fn as_str(self) -> &'static str {
        match self {
            BooleanOp::NewBody => "new_body",
            BooleanOp::Join => "join",
            BooleanOp::Subtract => "subtract",
            BooleanOp::Intersect => "intersect",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [BooleanOp::NewBody, BooleanOp::Join, BooleanOp::Subtract, BooleanOp::Intersect]
            .into_iter()
            .find(|b| b.as_str() == s)
    }
}

/// Plane, primitives and constraints. Primitive and constraint order carries no meaning.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Sketch {
    pub plane: SketchPlane,
    pub primitives: Vec<Primitive>,
    pub constraints: Vec<Constraint>,
}

impl Sketch {
    pub fn new(plane: SketchPlane, primitives: Vec<Primitive>, constraints: Vec<Constraint>) -> Self {
        Self { plane, primitives, constraints }
    }

    pub fn primitive(&self, id: &str) -> Option<&Primitive> {
        self.primitives.iter().find(|p| p.id == id)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Part {
    pub sketch: Sketch,
    pub extrusion: Extrusion,
    pub boolean: BooleanOp,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metadata {
    pub source: String,
    /// Cumulative uniform scale applied by normalization.
    pub scale: f64,
}

impl Default for Metadata {
    fn default() -> Self {
        Self { source: String::new(), scale: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub parts: Vec<Part>,
    pub metadata: Metadata,
}

impl Document {
    pub fn new(parts: Vec<Part>) -> Self {
        Self { parts, metadata: Metadata::default() }
    }

    /// Longest edge of the global bounding box.
    pub fn extent(&self) -> f64 {
        document_bounds(self).longest_edge()
    }
}
