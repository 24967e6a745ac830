use crate::model::{check_constraint, Anchor, Constraint, ConstraintKind, PrimitiveKind, Sketch};

use super::dual::Real;
use super::ConstraintError;

/// Discrete choice a residual makes once, on the geometry it is built from,
/// so that the function stays smooth while the solver moves things around.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Branch {
    Plain,
    /// Tangent line–curve: signed side of the line the center lies on.
    Side(f64),
    /// Tangent curve–curve, touching from outside.
    External,
    /// Tangent curve–curve, one inside the other; sign of `r₁ − r₂`.
    Internal(f64),
    /// Normal: whether the line's end (rather than start) meets the curve.
    LineEnd(bool),
}

impl Branch {
    pub fn describe(&self) -> Option<&'static str> {
        match self {
            Branch::External => Some("external tangency"),
            Branch::Internal(_) => Some("internal tangency"),
            _ => None,
        }
    }
}

/// One constraint referent seen through generic scalars.
#[derive(Clone, Copy)]
pub(crate) struct Operand<'a, R> {
    pub anchor: Anchor,
    pub kind: PrimitiveKind,
    pub p: &'a [R],
}

type P2<R> = (R, R);

fn sub<R: Real>(a: P2<R>, b: P2<R>) -> P2<R> {
    (a.0 - b.0, a.1 - b.1)
}

fn dot<R: Real>(a: P2<R>, b: P2<R>) -> R {
    a.0 * b.0 + a.1 * b.1
}

fn cross<R: Real>(a: P2<R>, b: P2<R>) -> R {
    a.0 * b.1 - a.1 * b.0
}

fn norm<R: Real>(a: P2<R>) -> R {
    dot(a, a).sqrt()
}

fn undefined(why: &str) -> ConstraintError {
    ConstraintError::UndefinedResidual(why.to_string())
}

impl<'a, R: Real> Operand<'a, R> {
    fn pt(&self, i: usize) -> P2<R> {
        (self.p[i], self.p[i + 1])
    }

    fn start(&self) -> P2<R> {
        self.pt(0)
    }

    fn end(&self) -> P2<R> {
        match self.kind {
            PrimitiveKind::Arc => self.pt(4),
            _ => self.pt(2),
        }
    }

    fn unit_dir(&self) -> Result<P2<R>, ConstraintError> {
        let d = sub(self.end(), self.start());
        let n = norm(d);
        if !(n.val() > 0.0) || !n.val().is_finite() {
            return Err(undefined("zero-length line has no direction"));
        }
        Ok((d.0 / n, d.1 / n))
    }

    fn length(&self) -> Result<R, ConstraintError> {
        let n = norm(sub(self.end(), self.start()));
        if !(n.val() > 0.0) {
            return Err(undefined("zero-length line"));
        }
        Ok(n)
    }

    fn circle(&self) -> Result<(P2<R>, R), ConstraintError> {
        match self.kind {
            PrimitiveKind::Circle => Ok((self.pt(0), self.p[2])),
            PrimitiveKind::Arc => circumcircle(self.pt(0), self.pt(2), self.pt(4)),
            PrimitiveKind::Line => Err(undefined("a line has no center")),
        }
    }

    /// The point this operand names; Whole on a curve means its center.
    fn point(&self) -> Result<P2<R>, ConstraintError> {
        match (self.anchor, self.kind) {
            (Anchor::Start, _) => Ok(self.start()),
            (Anchor::End, _) => Ok(self.end()),
            (_, PrimitiveKind::Line) => Err(undefined("a line is not a point")),
            _ => self.circle().map(|c| c.0),
        }
    }
}

fn circumcircle<R: Real>(a: P2<R>, b: P2<R>, c: P2<R>) -> Result<(P2<R>, R), ConstraintError> {
    let two = R::cst(2.0);
    let d = two * (a.0 * (b.1 - c.1) + b.0 * (c.1 - a.1) + c.0 * (a.1 - b.1));
    let scale = norm(sub(b, a)).val() * norm(sub(c, a)).val();
    if !(d.val().abs() > 1e-12 * scale) {
        return Err(undefined("arc points are collinear"));
    }
    let (a2, b2, c2) = (dot(a, a), dot(b, b), dot(c, c));
    let ux = (a2 * (b.1 - c.1) + b2 * (c.1 - a.1) + c2 * (a.1 - b.1)) / d;
    let uy = (a2 * (c.0 - b.0) + b2 * (a.0 - c.0) + c2 * (b.0 - a.0)) / d;
    let center = (ux, uy);
    Ok((center, norm(sub(a, center))))
}

/// Picks the residual branch that fits the current geometry best.
pub(crate) fn choose_branch(kind: ConstraintKind, ops: &[Operand<'_, f64>]) -> Result<Branch, ConstraintError> {
    use PrimitiveKind as P;
    match kind {
        ConstraintKind::Tangent => {
            let (line, curve) = match (ops[0].kind, ops[1].kind) {
                (P::Line, _) => (Some(&ops[0]), &ops[1]),
                (_, P::Line) => (Some(&ops[1]), &ops[0]),
                _ => (None, &ops[0]),
            };
            if let Some(line) = line {
                let u = line.unit_dir()?;
                let (c, _) = curve.circle()?;
                let s = cross(u, sub(c, line.start()));
                return Ok(Branch::Side(if s < 0.0 { -1.0 } else { 1.0 }));
            }
            let (c1, r1) = ops[0].circle()?;
            let (c2, r2) = ops[1].circle()?;
            let d = norm(sub(c1, c2));
            let ext = (d - (r1 + r2)).abs();
            let int = (d - (r1 - r2).abs()).abs();
            Ok(if ext <= int { Branch::External } else { Branch::Internal(if r1 >= r2 { 1.0 } else { -1.0 }) })
        }
        ConstraintKind::Normal => {
            let (line, curve) = if ops[0].kind == P::Line { (&ops[0], &ops[1]) } else { (&ops[1], &ops[0]) };
            let (c, r) = curve.circle()?;
            let gap = |p: P2<f64>| (norm(sub(p, c)) - r).abs();
            let (s, e) = (line.start(), line.end());
            let use_end = gap(e) < gap(s) || norm(sub(s, c)) == 0.0;
            Ok(Branch::LineEnd(use_end))
        }
        _ => Ok(Branch::Plain),
    }
}

/// Residual components of one constraint. `pin` is what Fix compares against.
pub(crate) fn eval<R: Real>(
    kind: ConstraintKind,
    ops: &[Operand<'_, R>],
    pin: &[f64],
    branch: Branch,
) -> Result<Vec<R>, ConstraintError> {
    use ConstraintKind as K;
    use PrimitiveKind as P;
    Ok(match kind {
        K::Coincident | K::Concentric => {
            let d = sub(ops[0].point()?, ops[1].point()?);
            vec![d.0, d.1]
        }
        K::Parallel => vec![cross(ops[0].unit_dir()?, ops[1].unit_dir()?)],
        K::Perpendicular => vec![dot(ops[0].unit_dir()?, ops[1].unit_dir()?)],
        K::Horizontal => vec![ops[0].unit_dir()?.1],
        K::Vertical => vec![ops[0].unit_dir()?.0],
        K::Tangent => match branch {
            Branch::Side(s) => {
                let (line, curve) = if ops[0].kind == P::Line { (&ops[0], &ops[1]) } else { (&ops[1], &ops[0]) };
                let u = line.unit_dir()?;
                let (c, r) = curve.circle()?;
                vec![R::cst(s) * cross(u, sub(c, line.start())) - r]
            }
            Branch::Internal(s) => {
                let (c1, r1) = ops[0].circle()?;
                let (c2, r2) = ops[1].circle()?;
                vec![norm(sub(c1, c2)) - R::cst(s) * (r1 - r2)]
            }
            _ => {
                let (c1, r1) = ops[0].circle()?;
                let (c2, r2) = ops[1].circle()?;
                vec![norm(sub(c1, c2)) - (r1 + r2)]
            }
        },
        K::Equal => {
            if ops[0].kind == P::Line {
                vec![ops[0].length()? - ops[1].length()?]
            } else {
                vec![ops[0].circle()?.1 - ops[1].circle()?.1]
            }
        }
        K::Fix => {
            let op = &ops[0];
            if op.anchor == Anchor::Whole {
                op.p.iter().zip(pin).map(|(&v, &q)| v - R::cst(q)).collect()
            } else {
                let p = op.point()?;
                vec![p.0 - R::cst(pin[0]), p.1 - R::cst(pin[1])]
            }
        }
        K::Normal => {
            let (line, curve) = if ops[0].kind == P::Line { (&ops[0], &ops[1]) } else { (&ops[1], &ops[0]) };
            let u = line.unit_dir()?;
            let (c, _) = curve.circle()?;
            let e = if branch == Branch::LineEnd(true) { line.end() } else { line.start() };
            let v = sub(e, c);
            let n = norm(v);
            if !(n.val() > 0.0) {
                return Err(undefined("line meets the curve at its center"));
            }
            vec![cross(u, (v.0 / n, v.1 / n))]
        }
    })
}

/// Current pin for a Fix: its stored values, or the present geometry.
pub(crate) fn fix_target(con: &Constraint, sketch: &Sketch) -> Vec<f64> {
    if let Some(p) = &con.pin {
        return p.clone();
    }
    let prim = sketch.primitive(&con.refs[0].id).expect("checked reference");
    match con.refs[0].anchor {
        Anchor::Whole => prim.geometry.params(),
        a => prim.geometry.anchor_point(a).map_or_else(Vec::new, |p| vec![p.x, p.y]),
    }
}

/// Residual values of `c` on the sketch's current geometry, in sketch units
/// for positional kinds and as direction cosines/sines for angular ones.
pub fn residual(c: &Constraint, sketch: &Sketch) -> Result<Vec<f64>, ConstraintError> {
    check_constraint(c, sketch).map_err(|(code, msg)| ConstraintError::Invalid(format!("{}: {}", code.as_str(), msg)))?;
    let params: Vec<Vec<f64>> = c.refs.iter().map(|r| sketch.primitive(&r.id).unwrap().geometry.params()).collect();
    let ops: Vec<Operand<'_, f64>> = c
        .refs
        .iter()
        .zip(&params)
        .map(|(r, p)| Operand { anchor: r.anchor, kind: sketch.primitive(&r.id).unwrap().kind(), p })
        .collect();
    let branch = choose_branch(c.kind, &ops)?;
    eval(c.kind, &ops, &fix_target(c, sketch), branch)
}

/// Largest absolute residual component.
pub fn residual_norm(c: &Constraint, sketch: &Sketch) -> Result<f64, ConstraintError> {
    Ok(residual(c, sketch)?.iter().fold(0.0, |m, v| m.max(v.abs())))
}
