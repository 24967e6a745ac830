use std::f64::consts::TAU;

use nalgebra::{Rotation3, Unit};

use crate::geom::{point_in_polygon, polygon_boundary_distance, Vec2, Vec3};
use crate::model::{geom_eps, SketchPlane};

use super::{ExecError, Mesh, Profile};

/// Angular steps of a full revolution.
pub const REVOLVE_STEPS: usize = 256;

/// Sweeps the profile through a sequence of placed copies (`rings`), adding
/// caps unless the sweep closes on itself. Ring `k` holds every profile vertex
/// in `Profile::vertices` order. The result is flipped if needed so that its
/// signed volume is positive.
fn sweep(profile: &Profile, rings: Vec<Vec<Vec3>>, closed: bool) -> Mesh {
    let n = rings[0].len();
    let steps = rings.len();
    let mut mesh = Mesh { vertices: rings.into_iter().flatten().collect(), triangles: Vec::new() };
    let at = |ring: usize, i: usize| (ring % steps) * n + i;
    let segments = if closed { steps } else { steps - 1 };
    for range in profile.ring_ranges() {
        let len = range.len();
        for i in 0..len {
            let a = range.start + i;
            let b = range.start + (i + 1) % len;
            for s in 0..segments {
                mesh.triangles.push([at(s, a), at(s, b), at(s + 1, b)]);
                mesh.triangles.push([at(s, a), at(s + 1, b), at(s + 1, a)]);
            }
        }
    }
    if !closed {
        for t in profile.triangulate() {
            mesh.triangles.push([at(0, t[0]), at(0, t[2]), at(0, t[1])]);
            mesh.triangles.push(t.map(|i| at(steps - 1, i)));
        }
    }
    if mesh.signed_volume() < 0.0 {
        mesh.flip();
    }
    mesh
}

fn world_vertices(profile: &Profile, plane: &SketchPlane) -> Vec<Vec3> {
    profile.vertices().into_iter().map(|p| plane.to_world(p)).collect()
}

/// Prism swept from offset `lo` to `hi` along the unit vector of `direction`.
/// Offsets are measured along the direction itself, so an oblique sweep is
/// thinner than its length by `|d · n|`.
pub fn extrude_span(profile: &Profile, plane: &SketchPlane, direction: Vec3, lo: f64, hi: f64) -> Result<Mesh, ExecError> {
    let d = direction.try_normalize(0.0).ok_or(ExecError::DegenerateDirection)?;
    if d.dot(&plane.normal()).abs() < 1e-9 {
        return Err(ExecError::DegenerateDirection);
    }
    if !(hi > lo) {
        return Err(ExecError::DegenerateExtrusion);
    }
    let base = world_vertices(profile, plane);
    let rings = [lo, hi].iter().map(|&t| base.iter().map(|p| p + d * t).collect()).collect();
    Ok(sweep(profile, rings, false))
}

/// Prism from the sketch plane to `length` along `direction`.
pub fn extrude_linear(profile: &Profile, plane: &SketchPlane, direction: Vec3, length: f64) -> Result<Mesh, ExecError> {
    extrude_span(profile, plane, direction, 0.0, length)
}

/// Whether the axis passes through the interior of the profile.
fn crosses_axis(profile: &Profile, plane: &SketchPlane, axis_point: Vec3, axis: Vec3) -> bool {
    let normal = plane.normal();
    let extent = profile
        .outer
        .iter()
        .fold((Vec2::repeat(f64::INFINITY), Vec2::repeat(f64::NEG_INFINITY)), |(lo, hi), p| (lo.inf(p), hi.sup(p)));
    let tol = geom_eps((extent.1 - extent.0).max());
    let along = axis.dot(&normal);
    if along.abs() < 1e-9 {
        // axis parallel to the plane: the profile must stay on one side of it
        let side = normal.cross(&axis);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for p in profile.rings().flatten() {
            let s = side.dot(&(plane.to_world(*p) - axis_point));
            lo = lo.min(s);
            hi = hi.max(s);
        }
        return lo < -tol && hi > tol;
    }
    let t = (plane.translation - axis_point).dot(&normal) / along;
    let hit = axis_point + axis * t;
    let local = plane.rotation().transpose() * (hit - plane.translation);
    let q = Vec2::new(local.x, local.y);
    let inside = |ring: &[Vec2]| point_in_polygon(q, ring) && polygon_boundary_distance(q, ring) > tol;
    inside(&profile.outer) && !profile.holes.iter().any(|h| point_in_polygon(q, h))
}

/// Revolution about the axis through `axis_point` along `axis_dir`, from
/// `start_angle` to `end_angle` (radians). A full turn uses `REVOLVE_STEPS`
/// steps and has no caps; partial sweeps use a proportional count.
pub fn extrude_rotated(
    profile: &Profile,
    plane: &SketchPlane,
    axis_point: Vec3,
    axis_dir: Vec3,
    start_angle: f64,
    end_angle: f64,
) -> Result<Mesh, ExecError> {
    let axis = axis_dir.try_normalize(0.0).ok_or(ExecError::DegenerateDirection)?;
    let sweep_angle = (end_angle - start_angle).clamp(-TAU, TAU);
    if sweep_angle == 0.0 || !sweep_angle.is_finite() {
        return Err(ExecError::DegenerateExtrusion);
    }
    if crosses_axis(profile, plane, axis_point, axis) {
        return Err(ExecError::ProfileCrossesAxis);
    }
    let full = sweep_angle.abs() >= TAU * (1.0 - 1e-12);
    let steps = ((REVOLVE_STEPS as f64 * sweep_angle.abs() / TAU).ceil() as usize).max(1);
    let base = world_vertices(profile, plane);
    let unit = Unit::new_unchecked(axis);
    let ring_count = if full { steps } else { steps + 1 };
    let rings = (0..ring_count)
        .map(|k| {
            let rot = Rotation3::from_axis_angle(&unit, start_angle + sweep_angle * k as f64 / steps as f64);
            base.iter().map(|p| axis_point + rot * (p - axis_point)).collect()
        })
        .collect();
    Ok(sweep(profile, rings, full))
}
