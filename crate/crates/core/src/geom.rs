//! Small planar and spatial geometry helpers shared by every module.

use std::f64::consts::{PI, TAU};

pub type Vec2 = nalgebra::Vector2<f64>;
pub type Vec3 = nalgebra::Vector3<f64>;
pub type Mat3 = nalgebra::Matrix3<f64>;

/// z-component of the 2D cross product.
#[inline]
pub fn cross2(a: Vec2, b: Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    if a > -PI && a <= PI {
        return a;
    }
    let mut r = a.rem_euclid(TAU);
    if r > PI {
        r -= TAU;
    }
    // rem_euclid maps -π to π already, but guard the boundary after subtraction
    if r <= -PI {
        r += TAU;
    }
    r
}

/// Circle through three points, or `None` when they are (nearly) collinear.
pub fn circumcircle(a: Vec2, b: Vec2, c: Vec2) -> Option<(Vec2, f64)> {
    let d = 2.0 * (a.x * (b.y - c.y) + b.x * (c.y - a.y) + c.x * (a.y - b.y));
    let scale = (b - a).norm().max((c - a).norm()).max(1e-300);
    if d.abs() <= 1e-14 * scale * scale {
        return None;
    }
    let a2 = a.norm_squared();
    let b2 = b.norm_squared();
    let c2 = c.norm_squared();
    let ux = (a2 * (b.y - c.y) + b2 * (c.y - a.y) + c2 * (a.y - b.y)) / d;
    let uy = (a2 * (c.x - b.x) + b2 * (a.x - c.x) + c2 * (b.x - a.x)) / d;
    let center = Vec2::new(ux, uy);
    let radius = (a - center).norm();
    radius.is_finite().then_some((center, radius))
}

/// A circular arc in center / radius / angle form. `sweep` is signed: positive is CCW.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArcParams {
    pub center: Vec2,
    pub radius: f64,
    pub start_angle: f64,
    pub sweep: f64,
}

impl ArcParams {
    /// Arc from `start` through `mid` to `end`.
    pub fn from_three_points(start: Vec2, mid: Vec2, end: Vec2) -> Option<Self> {
        let (center, radius) = circumcircle(start, mid, end)?;
        let a0 = (start.y - center.y).atan2(start.x - center.x);
        let am = (mid.y - center.y).atan2(mid.x - center.x);
        let a1 = (end.y - center.y).atan2(end.x - center.x);
        let ccw = cross2(mid - start, end - start) > 0.0;
        let sweep = if ccw {
            let s = (a1 - a0).rem_euclid(TAU);
            if s == 0.0 {
                TAU
            } else {
                s
            }
        } else {
            let s = (a0 - a1).rem_euclid(TAU);
            -(if s == 0.0 { TAU } else { s })
        };
        debug_assert!({
            let m = if ccw { (am - a0).rem_euclid(TAU) } else { (a0 - am).rem_euclid(TAU) };
            m <= sweep.abs() + 1e-9
        });
        Some(Self { center, radius, start_angle: a0, sweep })
    }

    pub fn point_at(&self, t: f64) -> Vec2 {
        let a = self.start_angle + self.sweep * t;
        self.center + self.radius * Vec2::new(a.cos(), a.sin())
    }

    /// Unit tangent in the direction of travel at parameter `t`.
    pub fn tangent_at(&self, t: f64) -> Vec2 {
        let a = self.start_angle + self.sweep * t;
        let s = self.sweep.signum();
        Vec2::new(-a.sin() * s, a.cos() * s)
    }

    pub fn length(&self) -> f64 {
        self.radius * self.sweep.abs()
    }

    /// Parameter in `[0, 1]` of the point at polar angle `angle`, if it lies on the arc.
    pub fn param_of_angle(&self, angle: f64, tol: f64) -> Option<f64> {
        let d = if self.sweep > 0.0 {
            (angle - self.start_angle).rem_euclid(TAU)
        } else {
            (self.start_angle - angle).rem_euclid(TAU)
        };
        let span = self.sweep.abs();
        if d <= span + tol {
            Some((d / span).min(1.0))
        } else if TAU - d <= tol {
            Some(0.0)
        } else {
            None
        }
    }

    /// Number of chords needed to keep the sagitta under `chord_tol`.
    pub fn segments_for_tolerance(&self, chord_tol: f64) -> usize {
        segments_for_sweep(self.radius, self.sweep.abs(), chord_tol)
    }
}

/// Chord count for a circular sweep with sagitta bounded by `chord_tol`.
pub fn segments_for_sweep(radius: f64, sweep: f64, chord_tol: f64) -> usize {
    let ratio = (1.0 - chord_tol / radius).clamp(-1.0, 1.0);
    let max_step = 2.0 * ratio.acos();
    let n = if max_step > 0.0 { (sweep / max_step).ceil() as usize } else { 1 };
    let min = ((sweep / TAU) * 8.0).ceil() as usize;
    n.max(min).max(1)
}

/// Green's-theorem contribution `½∮(x dy − y dx)` of an oriented line segment.
pub fn line_area_term(a: Vec2, b: Vec2) -> f64 {
    0.5 * cross2(a, b)
}

/// Green's-theorem contribution of an arc traversed by its signed sweep.
pub fn arc_area_term(arc: &ArcParams) -> f64 {
    let r = arc.radius;
    let t0 = arc.start_angle;
    let t1 = arc.start_angle + arc.sweep;
    0.5 * (r * r * arc.sweep + r * arc.center.x * (t1.sin() - t0.sin())
        - r * arc.center.y * (t1.cos() - t0.cos()))
}

/// Signed shoelace area of a closed polygon.
pub fn polygon_area(pts: &[Vec2]) -> f64 {
    let n = pts.len();
    (0..n).map(|i| cross2(pts[i], pts[(i + 1) % n])).sum::<f64>() * 0.5
}

/// Even-odd ray-casting point-in-polygon test.
pub fn point_in_polygon(p: Vec2, poly: &[Vec2]) -> bool {
    let n = poly.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a.y > p.y) != (b.y > p.y) {
            let x = (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x;
            if p.x < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Distance from a point to a closed segment.
pub fn point_segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

/// Distance from `p` to the polygon boundary.
pub fn polygon_boundary_distance(p: Vec2, poly: &[Vec2]) -> f64 {
    let n = poly.len();
    (0..n)
        .map(|i| point_segment_distance(p, poly[i], poly[(i + 1) % n]))
        .fold(f64::INFINITY, f64::min)
}

fn orient(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    cross2(b - a, c - a)
}

/// Proper or touching intersection of closed segments `ab` and `cd`, with tolerance `eps`.
pub fn segments_intersect(a: Vec2, b: Vec2, c: Vec2, d: Vec2, eps: f64) -> bool {
    let scale = (b - a).norm().max((d - c).norm()).max(1e-300);
    let tol = eps * scale;
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > tol && d2 < -tol) || (d1 < -tol && d2 > tol))
        && ((d3 > tol && d4 < -tol) || (d3 < -tol && d4 > tol))
    {
        return true;
    }
    let on = |p: Vec2, q: Vec2, r: Vec2| point_segment_distance(r, p, q) <= eps;
    on(c, d, a) || on(c, d, b) || on(a, b, c) || on(a, b, d)
}

/// True when a closed polygon has no intersections between non-adjacent edges.
pub fn polygon_is_simple(poly: &[Vec2], eps: f64) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    let boxes: Vec<_> = (0..n)
        .map(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            (a.x.min(b.x) - eps, a.x.max(b.x) + eps, a.y.min(b.y) - eps, a.y.max(b.y) + eps)
        })
        .collect();
    for i in 0..n {
        for j in (i + 1)..n {
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            let (bi, bj) = (boxes[i], boxes[j]);
            if bi.1 < bj.0 || bj.1 < bi.0 || bi.3 < bj.2 || bj.3 < bi.2 {
                continue;
            }
            if segments_intersect(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n], eps) {
                return false;
            }
        }
    }
    true
}

/// Axis-aligned 3D bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb3 {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb3 {
    pub fn empty() -> Self {
        Self { min: Vec3::repeat(f64::INFINITY), max: Vec3::repeat(f64::NEG_INFINITY) }
    }

    pub fn is_empty(&self) -> bool {
        self.min.x > self.max.x
    }

    pub fn include(&mut self, p: Vec3) {
        self.min = self.min.inf(&p);
        self.max = self.max.sup(&p);
    }

    pub fn merge(&mut self, other: &Aabb3) {
        if !other.is_empty() {
            self.include(other.min);
            self.include(other.max);
        }
    }

    pub fn extents(&self) -> Vec3 {
        if self.is_empty() {
            Vec3::zeros()
        } else {
            self.max - self.min
        }
    }

    pub fn longest_edge(&self) -> f64 {
        self.extents().max()
    }
}
