//! Seeded generators for hierarchical test models built from grid rectangles.

use std::f64::consts::{FRAC_PI_2, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::format::{Face, HierLoop, HierSegment, HierarchicalModel, HierarchicalSketch};
use crate::geom::{Vec2, Vec3};
use crate::model::{BooleanOp, Constraint, ConstraintKind, Extrusion, Geometry, SketchPlane};

/// Axis-aligned rectangle in grid cells: `(x0, y0, x1, y1)`.
pub type GridRect = (i32, i32, i32, i32);

/// Counter-clockwise rectangle loop with ids `{prefix}1..4` starting at the bottom edge.
pub fn rect_loop(prefix: &str, x0: f64, y0: f64, x1: f64, y1: f64) -> HierLoop {
    let c = [[x0, y0], [x1, y0], [x1, y1], [x0, y1]];
    let segments = (0..4)
        .map(|i| HierSegment {
            id: format!("{prefix}{}", i + 1),
            geometry: Geometry::Line { start: Vec2::from(c[i]), end: Vec2::from(c[(i + 1) % 4]) },
            reversed: false,
        })
        .collect();
    HierLoop { segments }
}

pub fn circle_loop(id: &str, center: [f64; 2], radius: f64) -> HierLoop {
    HierLoop {
        segments: vec![HierSegment {
            id: id.into(),
            geometry: Geometry::Circle { center: Vec2::from(center), radius },
            reversed: false,
        }],
    }
}

/// Faces of one or two random rectangles each, on a `size × size` grid.
pub fn random_grid_faces(rng: &mut impl Rng, max_faces: usize, size: i32) -> Vec<Vec<GridRect>> {
    let rect = |rng: &mut dyn rand::RngCore| {
        let (x, y) = (rng.gen_range(0..size), rng.gen_range(0..size));
        (x, y, x + rng.gen_range(1..4), y + rng.gen_range(1..4))
    };
    (0..rng.gen_range(1..=max_faces)).map(|_| (0..rng.gen_range(1..3)).map(|_| rect(rng)).collect()).collect()
}

/// Hierarchical sketch whose faces are the given grid rectangles scaled by `cell`.
/// Segment ids are `f{face}l{loop}s{n}`.
pub fn grid_sketch(faces: &[Vec<GridRect>], cell: f64) -> HierarchicalSketch {
    let faces = faces
        .iter()
        .enumerate()
        .map(|(f, rects)| Face {
            loops: rects
                .iter()
                .enumerate()
                .map(|(l, r)| {
                    let s = |v: i32| v as f64 * cell;
                    rect_loop(&format!("f{}l{}s", f + 1, l + 1), s(r.0), s(r.1), s(r.2), s(r.3))
                })
                .collect(),
        })
        .collect();
    HierarchicalSketch { plane: SketchPlane::default(), faces, constraints: Vec::new() }
}

/// A row of rectangles sharing full or partial vertical edges, one face each,
/// with an optional circular hole in the first and a few constraints.
fn strip_sketch(rng: &mut impl Rng, plane: SketchPlane, cell: f64) -> (HierarchicalSketch, f64) {
    let n = rng.gen_range(1..=3);
    let mut faces = Vec::new();
    let mut constraints = Vec::new();
    let mut x = 0;
    for f in 0..n {
        let (w, h) = (rng.gen_range(1..=3), rng.gen_range(1..=3));
        let prefix = format!("f{}s", f + 1);
        let mut loops = vec![rect_loop(&prefix, x as f64 * cell, 0.0, (x + w) as f64 * cell, h as f64 * cell)];
        if f == 0 && w >= 2 && h >= 2 && rng.gen_bool(0.5) {
            let c = [0.5 * w as f64 * cell, 0.5 * h as f64 * cell];
            loops.push(circle_loop("hole", c, 0.3 * cell));
        }
        constraints.push(Constraint::unary(ConstraintKind::Horizontal, &format!("{prefix}1")));
        constraints.push(Constraint::binary(ConstraintKind::Parallel, &format!("{prefix}1"), &format!("{prefix}3")));
        if f == 0 {
            constraints.push(Constraint::unary(ConstraintKind::Vertical, &format!("{prefix}4")));
            constraints.push(Constraint::binary(ConstraintKind::Perpendicular, &format!("{prefix}1"), &format!("{prefix}2")));
        }
        faces.push(Face { loops });
        x += w;
    }
    (HierarchicalSketch { plane, faces, constraints }, x as f64 * cell)
}

/// Random executable model: a base strip, optional joined strips on other
/// planes (linear or revolved), and optional through holes cut from the base.
pub fn random_model(rng: &mut impl Rng) -> HierarchicalModel {
    let cell = [0.5, 1.0, 2.0][rng.gen_range(0..3)];
    let mut model = HierarchicalModel::default();

    let base_len = cell * rng.gen_range(1..=3) as f64;
    let (base, _) = strip_sketch(rng, SketchPlane::default(), cell);
    model.sketches.push(base);
    model.extrusions.push(Extrusion::linear([0.0, 0.0, 1.0], base_len));
    model.booleans.push(BooleanOp::NewBody);

    for _ in 0..rng.gen_range(0..=2) {
        let plane = if rng.gen_bool(0.5) {
            SketchPlane::new(Vec3::new(0.0, 0.0, base_len), Vec3::zeros())
        } else {
            SketchPlane::new(Vec3::new(0.0, cell, 0.0), Vec3::new(FRAC_PI_2, 0.0, 0.0))
        };
        let (sketch, _) = strip_sketch(rng, plane, cell);
        let extrusion = if rng.gen_bool(0.3) {
            let axis_dir = plane.rotation() * Vec3::y();
            let sweep = if rng.gen_bool(0.5) { TAU } else { FRAC_PI_2 };
            Extrusion::Rotated { axis_point: plane.to_world(Vec2::new(-cell, 0.0)), axis_dir, start_angle: 0.0, end_angle: sweep }
        } else {
            let n = plane.normal();
            Extrusion::linear([n.x, n.y, n.z], cell * rng.gen_range(1..=2) as f64)
        };
        model.sketches.push(sketch);
        model.extrusions.push(extrusion);
        model.booleans.push(BooleanOp::Join);
    }

    if rng.gen_bool(0.4) {
        let plane = SketchPlane::new(Vec3::new(0.0, 0.0, -0.5 * cell), Vec3::zeros());
        let face = Face { loops: vec![circle_loop("bore", [0.5 * cell, 0.5 * cell], 0.25 * cell)] };
        model.sketches.push(HierarchicalSketch { plane, faces: vec![face], constraints: Vec::new() });
        model.extrusions.push(Extrusion::linear([0.0, 0.0, 1.0], base_len + cell));
        model.booleans.push(BooleanOp::Subtract);
    }
    model
}

/// `n` named models from one seed; names are `synth_000.hier` onwards.
pub fn corpus(n: usize, seed: u64) -> Vec<(String, HierarchicalModel)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|i| (format!("synth_{i:03}.hier"), random_model(&mut rng))).collect()
}
