use std::f64::consts::TAU;

use super::{Document, Extrusion, Geometry, Part, Sketch, SketchPlane};
use crate::geom::{Aabb3, Vec2, Vec3};

/// Longest edge of the 2D bounding box of a sketch's primitives.
pub fn sketch_extent(sketch: &Sketch) -> f64 {
    let mut lo = Vec2::repeat(f64::INFINITY);
    let mut hi = Vec2::repeat(f64::NEG_INFINITY);
    for p in &sketch.primitives {
        let (a, b) = p.geometry.bounds();
        lo = lo.inf(&a);
        hi = hi.sup(&b);
    }
    if lo.x > hi.x {
        0.0
    } else {
        (hi - lo).max()
    }
}

/// Global bounding box of all parts' extruded extents.
pub fn document_bounds(doc: &Document) -> Aabb3 {
    let mut b = Aabb3::empty();
    for part in &doc.parts {
        b.merge(&part_bounds(part));
    }
    b
}

/// Bounding box of the solid swept by one part.
pub fn part_bounds(part: &Part) -> Aabb3 {
    let plane = &part.sketch.plane;
    match part.extrusion {
        Extrusion::Linear { direction, .. } => {
            let base = sketch_bounds_3d(&part.sketch);
            let (lo, hi) = part.extrusion.linear_span().unwrap_or((0.0, 0.0));
            let mut b = Aabb3::empty();
            if !base.is_empty() {
                for t in [lo, hi] {
                    b.include(base.min + direction * t);
                    b.include(base.max + direction * t);
                }
            }
            b
        }
        Extrusion::Rotated { axis_point, axis_dir, start_angle, end_angle } => {
            let axis = axis_dir.try_normalize(0.0).unwrap_or(Vec3::z());
            let mut b = Aabb3::empty();
            for prim in &part.sketch.primitives {
                for p in profile_points(&prim.geometry) {
                    revolve_bounds(plane.to_world(p), axis_point, axis, start_angle, end_angle, &mut b);
                }
            }
            b
        }
    }
}

fn sketch_bounds_3d(sketch: &Sketch) -> Aabb3 {
    let mut b = Aabb3::empty();
    for prim in &sketch.primitives {
        curve_bounds_3d(&prim.geometry, &sketch.plane, &mut b);
    }
    b
}

fn curve_bounds_3d(g: &Geometry, plane: &SketchPlane, b: &mut Aabb3) {
    let rot = plane.rotation();
    let u: Vec3 = rot.column(0).into_owned();
    let v: Vec3 = rot.column(1).into_owned();
    match *g {
        Geometry::Line { start, end } => {
            b.include(plane.to_world(start));
            b.include(plane.to_world(end));
        }
        Geometry::Circle { center, radius } => {
            let c = plane.to_world(center);
            let half = Vec3::from_fn(|k, _| radius * (u[k] * u[k] + v[k] * v[k]).sqrt());
            b.include(c - half);
            b.include(c + half);
        }
        Geometry::Arc { start, mid, end } => {
            b.include(plane.to_world(start));
            b.include(plane.to_world(mid));
            b.include(plane.to_world(end));
            if let Some(arc) = g.arc_params() {
                let c = plane.to_world(arc.center);
                for k in 0..3 {
                    let phi = v[k].atan2(u[k]);
                    for ang in [phi, phi + std::f64::consts::PI] {
                        if arc.param_of_angle(ang, 0.0).is_some() {
                            b.include(c + arc.radius * (u * ang.cos() + v * ang.sin()));
                        }
                    }
                }
            }
        }
    }
}

/// Points whose revolution bounds the revolved curve. For lines the
/// coordinates are linear along the segment, so the endpoints suffice.
fn profile_points(g: &Geometry) -> Vec<Vec2> {
    match *g {
        Geometry::Line { start, end } => vec![start, end],
        Geometry::Circle { center, radius } => (0..128)
            .map(|i| {
                let a = TAU * i as f64 / 128.0;
                center + radius * Vec2::new(a.cos(), a.sin())
            })
            .collect(),
        Geometry::Arc { start, end, .. } => match g.arc_params() {
            Some(arc) => {
                let n = ((arc.sweep.abs() / TAU) * 128.0).ceil().max(2.0) as usize;
                let mut pts: Vec<Vec2> = (0..=n).map(|i| arc.point_at(i as f64 / n as f64)).collect();
                pts.push(start);
                pts.push(end);
                pts
            }
            None => vec![start, end],
        },
    }
}

fn revolve_bounds(p: Vec3, axis_point: Vec3, axis: Vec3, a0: f64, a1: f64, b: &mut Aabb3) {
    let rel = p - axis_point;
    let along = axis * rel.dot(&axis);
    let radial = rel - along;
    let r = radial.norm();
    if r == 0.0 {
        b.include(p);
        return;
    }
    let e1 = radial / r;
    let e2 = axis.cross(&e1);
    let base = axis_point + along;
    let at = |t: f64| base + r * (e1 * t.cos() + e2 * t.sin());
    b.include(at(a0));
    b.include(at(a1));
    for k in 0..3 {
        let phi = e2[k].atan2(e1[k]);
        for cand in [phi, phi + std::f64::consts::PI] {
            // shift the candidate into [a0, a0 + 2π)
            let t = a0 + (cand - a0).rem_euclid(TAU);
            if t <= a1 {
                b.include(at(t));
            }
        }
    }
}
