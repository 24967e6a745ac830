//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::TAU;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use histcad::analysis::analyze_document;
use histcad::constraints::{check_satisfied, residual_norm, solve, Pin, ResidualSystem};
use histcad::flatten::{decompose, flatten_model, flatten_sketch, KeyQuantizer};
use histcad::format::{
    canonicalize, import_hierarchical, parse_document, serialize_document, write_hierarchical, HierarchicalModel,
};
use histcad::geom::{point_in_polygon, polygon_area, polygon_is_simple, Vec2, Vec3};
use histcad::geomexec::{
    batch_metrics, build_profile, chamfer_distance, execute_document, extrude_linear, extrude_rotated, part_mesh,
    DocumentStatus, MetricReport, Profile,
};
use histcad::model::{
    sketch_extent, validate_document, Anchor, BooleanOp, Constraint, ConstraintKind as K, Document, Extrusion,
    Geometry, Part, Primitive, Reference, Sketch, SketchPlane,
};
use histcad::nlt::{build_prompt, transcribe, Task, MULTI_PART_SUBJECT, NLT_PLACEHOLDER, SINGLE_PART_SUBJECT};
use histcad::relations::{build_relation_table, classify_relation, sat_test, RelType};
use histcad::synth::{corpus, grid_sketch, random_grid_faces};
use histcad::topology::{build_loop_dict, compute_loops, Obb};
use nalgebra::Rotation3;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn fixtures_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn fixture(name: &str) -> String {
    std::fs::read_to_string(fixtures_dir().join(name)).unwrap_or_else(|e| panic!("reading {name}: {e}"))
}

fn square(prefix: &str, x0: f64, y0: f64, x1: f64, y1: f64) -> Vec<Primitive> {
    let c = [[x0, y0], [x1, y0], [x1, y1], [x0, y1]];
    (0..4).map(|i| Primitive::line(format!("{prefix}{}", i + 1), c[i], c[(i + 1) % 4])).collect()
}

fn sketch(prims: Vec<Primitive>, cons: Vec<Constraint>) -> Sketch {
    Sketch::new(SketchPlane::default(), prims, cons)
}

fn within(start: Instant, limit: Duration, what: &str) -> Result<Duration, String> {
    let t = start.elapsed();
    ensure(t < limit, format!("{what} took {t:.2?}, limit {limit:?}"))?;
    Ok(t)
}

// 1. Flattening parity

/// Unit grid edges of odd total multiplicity.
fn unit_edge_oracle(faces: &[Vec<(i32, i32, i32, i32)>]) -> BTreeSet<((i32, i32), (i32, i32))> {
    let mut count: BTreeMap<((i32, i32), (i32, i32)), usize> = BTreeMap::new();
    for r in faces.iter().flatten() {
        for x in r.0..r.2 {
            *count.entry(((x, r.1), (x + 1, r.1))).or_default() += 1;
            *count.entry(((x, r.3), (x + 1, r.3))).or_default() += 1;
        }
        for y in r.1..r.3 {
            *count.entry(((r.0, y), (r.0, y + 1))).or_default() += 1;
            *count.entry(((r.2, y), (r.2, y + 1))).or_default() += 1;
        }
    }
    count.into_iter().filter(|(_, n)| n % 2 == 1).map(|(e, _)| e).collect()
}

fn unit_edges_of(flat: &Sketch) -> Result<BTreeSet<((i32, i32), (i32, i32))>, String> {
    let mut got = BTreeSet::new();
    for p in &flat.primitives {
        let (a, b) = p.geometry.endpoints().ok_or("non-line primitive in grid sketch")?;
        let (a, b) = ((a.x.round() as i32, a.y.round() as i32), (b.x.round() as i32, b.y.round() as i32));
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        let fresh = if a.1 == b.1 {
            (a.0..b.0).all(|x| got.insert(((x, a.1), (x + 1, a.1))))
        } else {
            (a.1..b.1).all(|y| got.insert(((a.0, y), (a.0, y + 1))))
        };
        ensure(fresh, format!("primitive {} overlaps another", p.id))?;
    }
    Ok(got)
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for case in 0..1000 {
        let faces = random_grid_faces(&mut rng, 4, 6);
        let hs = grid_sketch(&faces, 1.0);
        let flat = flatten_sketch(&hs).map_err(|e| format!("case {case}: {e}"))?;
        // parity per canonical key over every minimal fragment
        let mut count: BTreeMap<_, usize> = BTreeMap::new();
        for seg in decompose(&hs).map_err(|e| e.to_string())?.iter().flatten().flatten() {
            *count.entry(seg.key).or_default() += 1;
        }
        let want: BTreeSet<_> = count.into_iter().filter(|(_, n)| n % 2 == 1).map(|(k, _)| k).collect();
        let q = KeyQuantizer::for_extent(hs.extent());
        let got: Vec<_> = flat.primitives.iter().map(|p| q.key(&p.geometry)).collect();
        let got_set: BTreeSet<_> = got.iter().copied().collect();
        ensure(got.len() == got_set.len(), format!("case {case}: duplicate output segment"))?;
        ensure(got_set == want, format!("case {case}: key parity mismatch"))?;
        ensure(unit_edges_of(&flat)? == unit_edge_oracle(&faces), format!("case {case}: unit edge mismatch"))?;
    }
    let model = import_hierarchical(&fixture("shared_edge.hier")).map_err(|e| e.to_string())?;
    let (doc, _) = flatten_model(&model, "shared_edge").map_err(|e| e.to_string())?;
    let flat = &doc.parts[0].sketch;
    ensure(flat.primitives.len() == 6, format!("shared edge gave {} segments", flat.primitives.len()))?;
    let inner = |g: &Geometry| g.endpoints().is_some_and(|(a, b)| a.x == 1.0 && b.x == 1.0);
    ensure(!flat.primitives.iter().any(|p| inner(&p.geometry)), "shared edge survived")?;
    let t = within(start, Duration::from_secs(10), "parity run")?;
    Ok(format!("1000 grid sketches match both oracles, shared edge gives 6 segments, {t:.2?}"))
}

// 2. Loop dictionary

/// Axis-aligned squares whose boundaries never meet.
fn arrangement(rng: &mut ChaCha8Rng) -> Vec<(f64, f64, f64, f64)> {
    let mut out: Vec<(f64, f64, f64, f64)> = Vec::new();
    let target = rng.gen_range(1..8);
    for _ in 0..200 {
        if out.len() == target {
            break;
        }
        let s = rng.gen_range(0.5..8.0);
        let (x, y) = (rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0));
        let c = (x, y, x + s, y + s);
        let g = 0.05;
        let inside = |p: &(f64, f64, f64, f64), q: &(f64, f64, f64, f64)| {
            q.0 > p.0 + g && q.1 > p.1 + g && q.2 < p.2 - g && q.3 < p.3 - g
        };
        let apart = |a: &(f64, f64, f64, f64)| {
            a.2 + g < c.0 || c.2 + g < a.0 || a.3 + g < c.1 || c.3 + g < a.1 || inside(a, &c) || inside(&c, a)
        };
        if out.iter().all(apart) {
            out.push(c);
        }
    }
    out
}

fn criterion_2() -> Outcome {
    let mut prims = square("s", 0.0, 0.0, 1.0, 1.0);
    prims.push(Primitive::circle("c", [0.5, 0.5], 0.2));
    let dict = build_loop_dict(&compute_loops(&sketch(prims, vec![])).map_err(|e| e.to_string())?.loops);
    ensure(dict.outers.len() == 1 && dict.hole_count() == 1, "square with hole is not {1 outer, 1 hole}")?;

    // big square registers first; the circle and then the inner square each
    // find it as the first containing outer, so both become its holes
    let mut prims = square("a", 0.0, 0.0, 10.0, 10.0);
    prims.push(Primitive::circle("c", [5.0, 5.0], 3.0));
    prims.extend(square("s", 4.0, 4.0, 6.0, 6.0));
    let dict = build_loop_dict(&compute_loops(&sketch(prims, vec![])).map_err(|e| e.to_string())?.loops);
    ensure(dict.outers.len() == 1, "triple nesting: expected one outer")?;
    let holes: Vec<(&str, Vec<&str>)> = dict.outers[0]
        .holes
        .iter()
        .map(|h| {
            let mut ids = h.lp.ids();
            ids.sort();
            (h.name.as_str(), ids)
        })
        .collect();
    ensure(
        holes == vec![("hole_1_1", vec!["c"]), ("hole_1_2", vec!["s1", "s2", "s3", "s4"])],
        format!("triple nesting holes {holes:?}"),
    )?;

    let mut rng = ChaCha8Rng::seed_from_u64(202);
    for case in 0..500 {
        let squares = arrangement(&mut rng);
        let prims: Vec<Primitive> = squares
            .iter()
            .enumerate()
            .flat_map(|(i, &(a, b, c, d))| square(&format!("q{i}_"), a, b, c, d))
            .collect();
        let set = compute_loops(&sketch(prims, vec![])).map_err(|e| format!("case {case}: {e}"))?;
        ensure(set.loops.len() == squares.len(), format!("case {case}: loop count"))?;
        for l in &set.loops {
            ensure(l.area > 0.0 && polygon_is_simple(&l.polygon, 1e-12), format!("case {case}: loop not simple"))?;
            let n = l.edges.len();
            for i in 0..n {
                let (_, end) = l.edges[i].curve.endpoints().ok_or("unexpected full circle")?;
                let (start, _) = l.edges[(i + 1) % n].curve.endpoints().ok_or("unexpected full circle")?;
                ensure((end - start).norm() < 1e-9, format!("case {case}: loop not closed"))?;
            }
        }
        let dict = build_loop_dict(&set.loops);
        ensure(dict.outers.len() + dict.hole_count() == squares.len(), format!("case {case}: loops lost"))?;
        ensure(dict.outers.windows(2).all(|w| w[0].lp.area >= w[1].lp.area), format!("case {case}: outer order"))?;
        for o in &dict.outers {
            ensure(o.holes.windows(2).all(|w| w[0].lp.area >= w[1].lp.area), format!("case {case}: hole order"))?;
            for h in &o.holes {
                ensure(h.lp.area < o.lp.area, format!("case {case}: hole larger than outer"))?;
                ensure(
                    h.lp.polygon.iter().all(|&p| point_in_polygon(p, &o.lp.polygon)),
                    format!("case {case}: hole not strictly inside"),
                )?;
            }
        }
        for (i, a) in dict.outers.iter().enumerate() {
            for b in &dict.outers[i + 1..] {
                ensure(
                    !point_in_polygon(b.lp.polygon[0], &a.lp.polygon) && !point_in_polygon(a.lp.polygon[0], &b.lp.polygon),
                    format!("case {case}: nested outers"),
                )?;
            }
        }
    }
    Ok("square+hole and triple nesting as traced, 500 random arrangements hold".into())
}

// 3. Relations

fn random_obb(rng: &mut ChaCha8Rng) -> Obb {
    let m = Rotation3::from_euler_angles(rng.gen_range(-3.0..3.0), rng.gen_range(-1.5..1.5), rng.gen_range(-3.0..3.0))
        .into_inner();
    Obb {
        center: Vec3::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)),
        axes: [m.column(0).into_owned(), m.column(1).into_owned(), m.column(2).into_owned()],
        half_extents: Vec3::new(rng.gen_range(0.2..1.5), rng.gen_range(0.2..1.5), rng.gen_range(0.2..1.5)),
    }
}

/// Largest projection gap over the fifteen SAT axes: separation if positive, depth if negative.
fn sat_margin(a: &Obb, b: &Obb) -> f64 {
    let mut axes: Vec<Vec3> = a.axes.iter().chain(b.axes.iter()).copied().collect();
    for u in &a.axes {
        for v in &b.axes {
            if let Some(c) = u.cross(v).try_normalize(1e-9) {
                axes.push(c);
            }
        }
    }
    axes.iter()
        .map(|ax| (b.center - a.center).dot(ax).abs() - a.projected_radius(ax) - b.projected_radius(ax))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Whether any point of an `n³` lattice over `a` lies in `b`.
fn sampled_overlap(a: &Obb, b: &Obb, n: usize) -> bool {
    let t = |i: usize| 2.0 * i as f64 / (n - 1) as f64 - 1.0;
    (0..n * n * n).any(|idx| {
        let (i, j, k) = (idx / (n * n), (idx / n) % n, idx % n);
        let p = a.center
            + a.axes[0] * (t(i) * a.half_extents.x)
            + a.axes[1] * (t(j) * a.half_extents.y)
            + a.axes[2] * (t(k) * a.half_extents.z);
        b.contains(p, 0.0)
    })
}

fn cube(center: [f64; 3], size: f64) -> Obb {
    let c = Vec3::from(center);
    let h = Vec3::repeat(size / 2.0);
    Obb::axis_aligned(c - h, c + h)
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    // the lattice spacing bounds how shallow an overlap the oracle can see
    let band = 0.1;
    let (mut checked, mut banded) = (0, 0);
    for case in 0..1000 {
        let (a, b) = (random_obb(&mut rng), random_obb(&mut rng));
        if sat_margin(&a, &b).abs() < band {
            banded += 1;
            continue;
        }
        let oracle = sampled_overlap(&a, &b, 15) || sampled_overlap(&b, &a, 15);
        ensure(sat_test(&a, &b).collides == oracle, format!("pair {case}: SAT disagrees with sampling"))?;
        checked += 1;
    }
    let obbs: Vec<Obb> = (0..40).map(|_| random_obb(&mut rng)).chain([cube([0.0; 3], 6.0), cube([0.0; 3], 0.1)]).collect();
    let table = build_relation_table(&obbs);
    ensure(table.len() == obbs.len() * (obbs.len() - 1), "relation table is not complete")?;
    for (&(i, j), rel) in &table {
        let back = &table[&(j, i)];
        ensure(back.rel_type == rel.rel_type.dual(), format!("({i},{j}) type duality"))?;
        let flipped: BTreeSet<_> = rel.rel_pos.iter().map(|l| l.flipped()).collect();
        ensure(back.rel_pos == flipped, format!("({i},{j}) label duality"))?;
    }
    let unit = cube([0.0; 3], 1.0);
    let cases = [
        (cube([3.0, 0.0, 0.0], 1.0), RelType::Separate),
        (cube([1.0, 0.0, 0.0], 1.0), RelType::Touch),
        (cube([0.5, 0.0, 0.0], 1.0), RelType::Intersect),
    ];
    for (other, want) in cases {
        ensure(classify_relation(&unit, &other) == want, format!("fixture expected {want:?}"))?;
    }
    ensure(classify_relation(&cube([0.0; 3], 0.5), &unit) == RelType::Contained, "fixture expected Contained")?;
    let t = within(start, Duration::from_secs(30), "relation run")?;
    Ok(format!("{checked} pairs agree with sampling ({banded} inside the contact band), duality over {} entries, 4 fixtures, {t:.2?}", table.len()))
}

// 4. Constraint semantics

fn at(id: &str, a: Anchor) -> Reference {
    Reference::at(id, a)
}

fn characterization_cases() -> Vec<(Vec<Primitive>, Vec<Primitive>, Constraint)> {
    let arc = |id: &str, c: [f64; 2], r: f64| Primitive::arc(id, [c[0] + r, c[1]], [c[0], c[1] + r], [c[0] - r, c[1]]);
    let line = Primitive::line;
    let circle = Primitive::circle;
    vec![
        (
            vec![line("a", [0.0, 0.0], [1.0, 0.0]), line("b", [1.0, 0.0], [1.0, 2.0])],
            vec![line("a", [0.0, 0.0], [1.0, 0.0]), line("b", [1.1, 0.0], [1.0, 2.0])],
            Constraint::new(K::Coincident, vec![at("a", Anchor::End), at("b", Anchor::Start)]),
        ),
        (
            vec![line("a", [0.0, 0.0], [1.0, 2.0]), line("b", [3.0, 0.0], [2.0, -2.0])],
            vec![line("a", [0.0, 0.0], [1.0, 2.0]), line("b", [3.0, 0.0], [2.0, -2.5])],
            Constraint::binary(K::Parallel, "a", "b"),
        ),
        (
            vec![line("a", [0.0, 0.0], [1.0, 2.0]), line("b", [0.0, 0.0], [-2.0, 1.0])],
            vec![line("a", [0.0, 0.0], [1.0, 2.0]), line("b", [0.0, 0.0], [-2.0, 1.5])],
            Constraint::binary(K::Perpendicular, "a", "b"),
        ),
        (vec![line("a", [0.0, 3.0], [5.0, 3.0])], vec![line("a", [0.0, 3.0], [5.0, 3.1])], Constraint::unary(K::Horizontal, "a")),
        (vec![line("a", [2.0, 0.0], [2.0, -4.0])], vec![line("a", [2.0, 0.0], [2.1, -4.0])], Constraint::unary(K::Vertical, "a")),
        (
            vec![circle("c", [0.0, 0.0], 1.0), circle("d", [3.0, 0.0], 2.0)],
            vec![circle("c", [0.0, 0.0], 1.0), circle("d", [3.2, 0.0], 2.0)],
            Constraint::binary(K::Tangent, "c", "d"),
        ),
        (
            vec![line("l", [-1.0, 2.0], [4.0, 2.0]), arc("d", [1.0, 0.0], 2.0)],
            vec![line("l", [-1.0, 2.0], [4.0, 2.2]), arc("d", [1.0, 0.0], 2.0)],
            Constraint::binary(K::Tangent, "l", "d"),
        ),
        (
            vec![line("a", [0.0, 0.0], [3.0, 4.0]), line("b", [7.0, 0.0], [7.0, 5.0])],
            vec![line("a", [0.0, 0.0], [3.0, 4.0]), line("b", [7.0, 0.0], [7.0, 5.5])],
            Constraint::binary(K::Equal, "a", "b"),
        ),
        (
            vec![circle("c", [1.0, 1.0], 2.0), arc("d", [1.0, 1.0], 0.5)],
            vec![circle("c", [1.0, 1.0], 2.0), arc("d", [1.0, 1.2], 0.5)],
            Constraint::binary(K::Concentric, "c", "d"),
        ),
        (
            vec![line("a", [0.0, 0.0], [1.0, 0.0])],
            vec![line("a", [0.0, 0.0], [1.0, 0.1])],
            Constraint { pin: Some(vec![0.0, 0.0, 1.0, 0.0]), ..Constraint::unary(K::Fix, "a") },
        ),
        (
            vec![line("l", [3.0, 4.0], [6.0, 8.0]), circle("c", [0.0, 0.0], 5.0)],
            vec![line("l", [3.0, 4.0], [6.0, 8.5]), circle("c", [0.0, 0.0], 5.0)],
            Constraint::binary(K::Normal, "l", "c"),
        ),
    ]
}

/// Random sketch exercising every kind, away from degeneracies.
fn random_constrained_sketch(rng: &mut ChaCha8Rng) -> Sketch {
    let mut pt = || [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)];
    let (a0, a1, b0, b1, c0, d0) = (pt(), pt(), pt(), pt(), pt(), pt());
    let (rc, rd) = (rng.gen_range(0.5..3.0), rng.gen_range(0.5..3.0));
    let th: f64 = rng.gen_range(0.0..TAU);
    let arc_pt = |t: f64| [d0[0] + rd * t.cos(), d0[1] + rd * t.sin()];
    let prims = vec![
        Primitive::line("a", a0, a1),
        Primitive::line("b", b0, b1),
        Primitive::circle("c", c0, rc),
        Primitive::arc("d", arc_pt(th), arc_pt(th + 1.0), arc_pt(th + 2.0)),
    ];
    let cons = vec![
        Constraint::new(K::Coincident, vec![at("a", Anchor::End), at("d", Anchor::Start)]),
        Constraint::new(K::Coincident, vec![at("b", Anchor::Start), at("d", Anchor::Center)]),
        Constraint::binary(K::Parallel, "a", "b"),
        Constraint::binary(K::Perpendicular, "a", "b"),
        Constraint::unary(K::Horizontal, "a"),
        Constraint::unary(K::Vertical, "b"),
        Constraint::binary(K::Tangent, "a", "c"),
        Constraint::binary(K::Tangent, "c", "d"),
        Constraint::binary(K::Tangent, "d", "b"),
        Constraint::binary(K::Equal, "a", "b"),
        Constraint::binary(K::Equal, "c", "d"),
        Constraint::binary(K::Concentric, "c", "d"),
        Constraint::binary(K::Normal, "a", "c"),
        Constraint::binary(K::Normal, "d", "b"),
        Constraint { pin: Some(vec![0.0, 0.0]), ..Constraint::new(K::Fix, vec![at("d", Anchor::Center)]) },
    ];
    sketch(prims, cons)
}

fn jacobian_error(s: &Sketch) -> Result<f64, String> {
    let sys = ResidualSystem::new(s, &[]).map_err(|e| e.to_string())?;
    let x = sys.x0();
    let h = 1e-6 * sketch_extent(s);
    let analytic = sys.jacobian(&x).map_err(|e| e.to_string())?.to_dense();
    let mut worst: f64 = 0.0;
    for j in 0..x.len() {
        let (mut xp, mut xm) = (x.clone(), x.clone());
        xp[j] += h;
        xm[j] -= h;
        let rp = sys.residuals(&xp).map_err(|e| e.to_string())?;
        let rm = sys.residuals(&xm).map_err(|e| e.to_string())?;
        for i in 0..rp.len() {
            let fd = (rp[i] - rm[i]) / (2.0 * h);
            let a = analytic[(i, j)];
            worst = worst.max((a - fd).abs() / a.abs().max(fd.abs()).max(1.0));
        }
    }
    Ok(worst)
}

fn criterion_4() -> Outcome {
    let cases = characterization_cases();
    let kinds: BTreeSet<K> = cases.iter().map(|c| c.2.kind).collect();
    ensure(kinds.len() == 10, format!("only {} kinds covered", kinds.len()))?;
    for (good, bad, con) in &cases {
        let rg = residual_norm(con, &sketch(good.clone(), vec![])).map_err(|e| e.to_string())?;
        let rb = residual_norm(con, &sketch(bad.clone(), vec![])).map_err(|e| e.to_string())?;
        ensure(rg < 1e-12, format!("{}: satisfied residual {rg:e}", con.kind))?;
        ensure(rb > 0.0, format!("{}: violated residual is zero", con.kind))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let (mut checked, mut worst) = (0, 0.0f64);
    while checked < 100 {
        let s = random_constrained_sketch(&mut rng);
        let short = s.primitives.iter().any(|p| matches!(p.geometry, Geometry::Line { start, end } if (end - start).norm() < 0.5));
        if short {
            continue;
        }
        worst = worst.max(jacobian_error(&s)?);
        checked += 1;
    }
    ensure(worst < 1e-5, format!("Jacobian relative error {worst:e}"))?;
    Ok(format!("10 kinds characterized, Jacobian max relative error {worst:.1e} on 100 sketches"))
}

// 5. Solver editability

fn rectangle() -> Sketch {
    let ids = ["s", "e", "n", "w"];
    let c = [[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [0.0, 1.0]];
    let prims = (0..4).map(|i| Primitive::line(ids[i], c[i], c[(i + 1) % 4])).collect();
    let mut cons: Vec<Constraint> = (0..4)
        .map(|i| Constraint::new(K::Coincident, vec![at(ids[i], Anchor::End), at(ids[(i + 1) % 4], Anchor::Start)]))
        .collect();
    cons.extend([
        Constraint::unary(K::Horizontal, "s"),
        Constraint::unary(K::Horizontal, "n"),
        Constraint::unary(K::Vertical, "e"),
        Constraint::unary(K::Vertical, "w"),
    ]);
    sketch(prims, cons)
}

fn criterion_5() -> Outcome {
    let limit = Duration::from_secs(1);
    let doc = parse_document(&fixture("concentric_circles.hcad")).map_err(|e| e.to_string())?;
    let mut s = doc.parts[0].sketch.clone();
    s.constraints.push(Constraint::binary(K::Equal, "outer", "inner"));
    let start = Instant::now();
    let sol = solve(&s, &[Pin::parse("outer.radius", 2.0, &s).map_err(|e| e.to_string())?]).map_err(|e| e.to_string())?;
    let t1 = within(start, limit, "concentric solve")?;
    ensure(sol.report.converged, "concentric solve did not converge")?;
    ensure(check_satisfied(&sol.sketch, 1e-8).all_pass(), "concentric residuals above 1e-8")?;
    let r = sol.sketch.primitive("inner").and_then(|p| p.geometry.radius()).ok_or("inner circle lost")?;
    ensure((r - 2.0).abs() < 1e-8, format!("inner radius {r}"))?;

    let s = rectangle();
    let pins = [
        Pin::parse("n.start.x", 3.0, &s).map_err(|e| e.to_string())?,
        Pin::parse("n.start.y", 1.5, &s).map_err(|e| e.to_string())?,
    ];
    let start = Instant::now();
    let sol = solve(&s, &pins).map_err(|e| e.to_string())?;
    let t2 = within(start, limit, "rectangle solve")?;
    ensure(check_satisfied(&sol.sketch, 1e-6).all_pass(), "moved corner broke a constraint")?;
    let corner = sol.sketch.primitive("n").and_then(|p| p.geometry.endpoints()).ok_or("edge n lost")?.0;
    ensure((corner - Vec2::new(3.0, 1.5)).norm() < 1e-9, "moved corner is not at the pinned position")?;

    let s = sketch(
        vec![Primitive::line("l", [0.0, 0.0], [1.0, 1.0])],
        vec![Constraint::unary(K::Horizontal, "l"), Constraint::unary(K::Vertical, "l")],
    );
    let start = Instant::now();
    let err = solve(&s, &[]).err().ok_or("contradiction was solved")?;
    let t3 = within(start, limit, "contradiction solve")?;
    ensure(err.code() == "INFEASIBLE", format!("contradiction reported {}", err.code()))?;
    Ok(format!("concentric {t1:.1?}, moved corner {t2:.1?}, H and V INFEASIBLE {t3:.1?}"))
}

// 6. Geometry execution

fn profile_of(prims: Vec<Primitive>) -> Result<Profile, String> {
    let set = compute_loops(&sketch(prims, vec![])).map_err(|e| e.to_string())?;
    let dict = build_loop_dict(&set.loops);
    build_profile(dict.outers.first().ok_or("no outer loop")?).map_err(|e| e.to_string())
}

/// Star-shaped simple polygon around the origin.
fn star(rng: &mut ChaCha8Rng) -> Vec<Vec2> {
    let n = rng.gen_range(6..24);
    (0..n)
        .map(|i| {
            let a = (i as f64 + rng.gen_range(-0.4..0.4)) * TAU / n as f64;
            rng.gen_range(0.3..2.0) * Vec2::new(a.cos(), a.sin())
        })
        .collect()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut meshes = 0;
    let mut worst_linear: f64 = 0.0;
    for case in 0..100 {
        let pts = star(&mut rng);
        let n = pts.len();
        let prims = (0..n).map(|i| Primitive::line(format!("p{i}"), pts[i].into(), pts[(i + 1) % n].into())).collect();
        let length = rng.gen_range(0.1..5.0);
        let plane = SketchPlane::new(
            Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            Vec3::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)),
        );
        let m = extrude_linear(&profile_of(prims)?, &plane, plane.normal(), length).map_err(|e| e.to_string())?;
        ensure(m.is_watertight(), format!("prism {case} not watertight"))?;
        let err = rel(m.signed_volume(), polygon_area(&pts) * length);
        ensure(err < 1e-3, format!("prism {case}: volume off by {err:.2e}"))?;
        worst_linear = worst_linear.max(err);
        meshes += 1;
    }
    let mut worst_pappus: f64 = 0.0;
    for case in 0..50 {
        let x0 = rng.gen_range(0.05..2.0);
        let x1 = x0 + rng.gen_range(0.1..2.0);
        let y0 = rng.gen_range(-2.0..2.0);
        let y1 = y0 + rng.gen_range(0.1..2.0);
        let start = rng.gen_range(-3.0..3.0);
        let p = profile_of(square("r", x0, y0, x1, y1))?;
        let m = extrude_rotated(&p, &SketchPlane::default(), Vec3::zeros(), Vec3::y(), start, start + TAU)
            .map_err(|e| e.to_string())?;
        ensure(m.is_watertight(), format!("revolution {case} not watertight"))?;
        let pappus = TAU * 0.5 * (x0 + x1) * (x1 - x0) * (y1 - y0);
        let err = rel(m.signed_volume(), pappus);
        ensure(err < 0.01, format!("revolution {case}: volume off by {err:.2e}"))?;
        worst_pappus = worst_pappus.max(err);
        meshes += 1;
    }
    for name in ["square_extrude.hcad", "plate_with_hole.hcad", "block_minus_slot.hcad", "ring_revolve.hcad"] {
        let doc = parse_document(&fixture(name)).map_err(|e| e.to_string())?;
        for (k, part) in doc.parts.iter().enumerate() {
            let m = part_mesh(part).map_err(|e| format!("{name} part {}: {e}", k + 1))?;
            ensure(m.is_watertight(), format!("{name} part {} not watertight", k + 1))?;
            meshes += 1;
        }
    }
    Ok(format!(
        "linear worst {worst_linear:.1e}, Pappus worst {worst_pappus:.1e}, {meshes} meshes watertight"
    ))
}

// 7. Metrics

fn brute_chamfer(a: &[Vec3], b: &[Vec3]) -> f64 {
    let one = |x: &[Vec3], y: &[Vec3]| {
        let s: f64 = x.iter().map(|p| y.iter().map(|q| (q - p).norm_squared()).fold(f64::INFINITY, f64::min)).sum();
        s / x.len() as f64
    };
    one(a, b) + one(b, a)
}

fn square_doc(open: bool) -> Document {
    let mut prims = square("l", 0.0, 0.0, 1.0, 1.0);
    if open {
        prims.pop();
    }
    Document::new(vec![Part {
        sketch: sketch(prims, vec![]),
        extrusion: Extrusion::linear([0.0, 0.0, 1.0], 1.0),
        boolean: BooleanOp::NewBody,
    }])
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    for case in 0..30 {
        let mut cloud = |n: usize| -> Vec<Vec3> { (0..n).map(|_| Vec3::new(rng.gen(), rng.gen(), rng.gen())).collect() };
        let (n, m) = (1 + case * 16, 500 - case * 13);
        let (a, b) = (cloud(n), cloud(m));
        let cd = chamfer_distance(&a, &b).map_err(|e| e.to_string())?;
        ensure(cd == brute_chamfer(&a, &b), format!("case {case}: {cd} differs from brute force"))?;
    }
    let mut docs = vec![square_doc(false); 9];
    docs.push(square_doc(true));
    let report = batch_metrics(&docs, None);
    ensure(report.failures == 1 && (report.invalidity - 0.10).abs() < 1e-15, format!("IR {}", report.invalidity))?;
    let statuses = [2.0, 4.0, 9.0]
        .iter()
        .enumerate()
        .map(|(index, &c)| DocumentStatus { index, error: None, chamfer: Some(c) })
        .collect();
    let r = MetricReport::from_statuses(statuses);
    ensure(r.avg_chamfer == Some(5.0) && r.median_chamfer == Some(4.0), "average or median of {2,4,9} wrong")?;
    Ok("30 sets equal brute force, IR 0.10, {2,4,9} gives average 5 and median 4".into())
}

// 8. Format stability

const ID_CHARS: &[u8] = b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_-";

fn random_number(rng: &mut ChaCha8Rng) -> f64 {
    match rng.gen_range(0..6) {
        0 => rng.gen_range(-10i32..10) as f64,
        1 => rng.gen_range(-1e-9..1e-9),
        2 => rng.gen_range(-1e9..1e9),
        3 => 0.1 * rng.gen_range(-100i32..100) as f64,
        _ => rng.gen_range(-10.0..10.0),
    }
}

fn random_document(rng: &mut ChaCha8Rng) -> Document {
    let num = |rng: &mut ChaCha8Rng| random_number(rng);
    let parts = (0..rng.gen_range(0..4))
        .map(|_| {
            let mut prims: Vec<Primitive> = Vec::new();
            for i in 0..rng.gen_range(0..8) {
                let len = rng.gen_range(0..4);
                let suffix: String = (0..len).map(|_| ID_CHARS[rng.gen_range(0..ID_CHARS.len())] as char).collect();
                let id = format!("p{i}{suffix}");
                let p2 = |rng: &mut ChaCha8Rng| [num(rng), num(rng)];
                let geometry = match rng.gen_range(0..3) {
                    0 => Primitive::line(id, p2(rng), p2(rng)),
                    1 => Primitive::circle(id, p2(rng), rng.gen_range(1e-6..1e6)),
                    _ => Primitive::arc(id, p2(rng), p2(rng), p2(rng)),
                };
                prims.push(geometry);
            }
            let mut cons = Vec::new();
            if !prims.is_empty() {
                for _ in 0..rng.gen_range(0..6) {
                    let kind = K::ALL[rng.gen_range(0..K::ALL.len())];
                    let anchors = [Anchor::Whole, Anchor::Start, Anchor::End, Anchor::Center];
                    let r = |rng: &mut ChaCha8Rng| {
                        let id = prims.choose(rng).map(|p| p.id.clone()).unwrap_or_default();
                        Reference::at(id, *anchors.choose(rng).unwrap_or(&Anchor::Whole))
                    };
                    let refs = (0..kind.arity()).map(|_| r(rng)).collect();
                    let pin = (kind == K::Fix && rng.gen_bool(0.5)).then(|| (0..rng.gen_range(1..5)).map(|_| num(rng)).collect());
                    cons.push(Constraint { kind, refs, pin });
                }
            }
            let plane = SketchPlane {
                translation: Vec3::new(num(rng), num(rng), num(rng)),
                euler_angles: Vec3::new(rng.gen_range(-3.1..3.1), rng.gen_range(-3.1..3.1), rng.gen_range(-3.1..3.1)),
            };
            let extrusion = if rng.gen_bool(0.6) {
                Extrusion::Linear {
                    direction: Vec3::new(num(rng), num(rng), num(rng)),
                    length: num(rng),
                    symmetric: rng.gen_bool(0.3),
                    opposite_length: if rng.gen_bool(0.5) { 0.0 } else { num(rng) },
                }
            } else {
                Extrusion::Rotated {
                    axis_point: Vec3::new(num(rng), num(rng), num(rng)),
                    axis_dir: Vec3::new(num(rng), num(rng), num(rng)),
                    start_angle: num(rng),
                    end_angle: num(rng),
                }
            };
            let boolean = [BooleanOp::NewBody, BooleanOp::Join, BooleanOp::Subtract, BooleanOp::Intersect][rng.gen_range(0..4)];
            Part { sketch: Sketch::new(plane, prims, cons), extrusion, boolean }
        })
        .collect();
    let mut doc = Document::new(parts);
    doc.metadata.source = ["", "model \"7\"", "tab\there", "ünïcode ✓", "back\\slash"][rng.gen_range(0..5)].to_string();
    doc.metadata.scale = rng.gen_range(1e-3..1e3);
    doc
}

fn round_trips(doc: &Document) -> Result<(), String> {
    let text = serialize_document(doc);
    let back = parse_document(&text).map_err(|e| format!("{e}\n{text}"))?;
    ensure(back == canonicalize(doc), "parse(serialize(d)) differs from canonicalize(d)")?;
    ensure(serialize_document(&back) == text, "serialization is not a fixed point")
}

fn mutate(rng: &mut ChaCha8Rng, seed: &[u8]) -> Vec<u8> {
    let mut bytes = seed.to_vec();
    for _ in 0..rng.gen_range(1..8) {
        let pos = rng.gen_range(0..=bytes.len());
        match rng.gen_range(0..5) {
            0 if pos < bytes.len() => bytes[pos] = rng.gen(),
            1 => bytes.insert(pos, *b"{}[],:\"0-e.x\\".choose(rng).unwrap_or(&b'0')),
            2 if pos < bytes.len() => {
                bytes.remove(pos);
            }
            3 => bytes.truncate(pos),
            _ => {
                let len = rng.gen_range(0..16).min(bytes.len() - pos.min(bytes.len()));
                let chunk: Vec<u8> = bytes[pos..pos + len].to_vec();
                let at = rng.gen_range(0..=bytes.len());
                bytes.splice(at..at, chunk);
            }
        }
    }
    bytes
}

fn criterion_8() -> Outcome {
    let mut fixtures = 0;
    let mut seeds: Vec<Vec<u8>> = Vec::new();
    let mut entries: Vec<PathBuf> =
        std::fs::read_dir(fixtures_dir()).map_err(|e| e.to_string())?.filter_map(|e| e.ok().map(|e| e.path())).collect();
    entries.sort();
    for path in entries {
        let text = std::fs::read_to_string(&path).map_err(|e| e.to_string())?;
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string();
        match path.extension().and_then(|e| e.to_str()) {
            Some("hcad") => {
                let doc = parse_document(&text).map_err(|e| format!("{name}: {e}"))?;
                round_trips(&doc).map_err(|e| format!("{name}: {e}"))?;
            }
            Some("hier") => match import_hierarchical(&text) {
                Ok(model) => {
                    let again: HierarchicalModel =
                        import_hierarchical(&write_hierarchical(&model)).map_err(|e| format!("{name}: {e}"))?;
                    ensure(again == model, format!("{name}: hierarchical round trip differs"))?;
                    let (doc, _) = flatten_model(&model, &name).map_err(|e| format!("{name}: {e}"))?;
                    round_trips(&doc).map_err(|e| format!("{name} flattened: {e}"))?;
                }
                Err(e) => ensure(e.code() == "OPEN_LOOP" && name.starts_with("open"), format!("{name}: {e}"))?,
            },
            _ => continue,
        }
        seeds.push(text.into_bytes());
        fixtures += 1;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    for case in 0..1000 {
        let doc = random_document(&mut rng);
        round_trips(&doc).map_err(|e| format!("random document {case}: {e}"))?;
        if case < 20 {
            seeds.push(serialize_document(&doc).into_bytes());
        }
    }
    let mut rejected = 0;
    for case in 0..10_000 {
        let bytes = if case % 10 == 0 {
            (0..rng.gen_range(0..256)).map(|_| rng.gen()).collect()
        } else {
            let seed = seeds.choose(&mut rng).ok_or("no fuzz seeds")?.clone();
            mutate(&mut rng, &seed)
        };
        let text = String::from_utf8_lossy(&bytes);
        let outcome = catch_unwind(AssertUnwindSafe(|| {
            let hcad = parse_document(&text).is_err();
            let hier = import_hierarchical(&text).is_err();
            hcad && hier
        }))
        .map_err(|_| format!("parser panicked on fuzz case {case}"))?;
        rejected += usize::from(outcome);
    }
    Ok(format!("{fixtures} fixtures and 1000 random documents round-trip, 10000 fuzz inputs without panic ({rejected} rejected by both parsers)"))
}

// 9. Prompts and transcription

fn criterion_9() -> Outcome {
    let fragments = [
        (Task::FunctionalType, "concise, specific noun phrase such as 'hex head bolt'"),
        (Task::GeometricStructure, "Do not infer function, dimensions, or modeling steps."),
        (Task::ModelingProcess, "Output a continuous natural-language paragraph without lists or special characters."),
    ];
    let nlt = "Part 1 is a box.";
    for (task, fragment) in fragments {
        for multi in [true, false] {
            let prompt = build_prompt(nlt, task, multi);
            ensure(prompt.contains(fragment), format!("{task} prompt lacks its template fragment"))?;
            ensure(prompt.contains(nlt) && !prompt.contains(NLT_PLACEHOLDER), format!("{task} prompt not filled"))?;
            let template = task.template();
            let template = if multi { template.to_string() } else { template.replace(MULTI_PART_SUBJECT, SINGLE_PART_SUBJECT) };
            for piece in template.split(NLT_PLACEHOLDER) {
                ensure(prompt.contains(piece), format!("{task} prompt does not keep the template verbatim"))?;
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let docs: Vec<Document> = corpus(20, 99)
        .iter()
        .map(|(name, m)| flatten_model(m, name).map(|r| r.0).map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    for (i, doc) in docs.iter().enumerate() {
        let text = transcribe(doc).text();
        for _ in 0..3 {
            let mut shuffled = doc.clone();
            for p in &mut shuffled.parts {
                p.sketch.primitives.shuffle(&mut rng);
                p.sketch.constraints.shuffle(&mut rng);
            }
            ensure(transcribe(&shuffled).text() == text, format!("document {i}: transcription depends on order"))?;
        }
    }
    Ok("3 prompt templates verbatim in both variants, 20 documents byte-identical under 3 permutations each".into())
}

// 10. End to end

fn criterion_10() -> Outcome {
    let start = Instant::now();
    let models = corpus(50, 2024);
    let failures: Vec<String> = models
        .par_iter()
        .filter_map(|(name, model)| {
            let run = || -> Result<(), String> {
                let (doc, _) = flatten_model(model, name).map_err(|e| format!("flatten: {e}"))?;
                let doc = parse_document(&serialize_document(&doc)).map_err(|e| format!("reparse: {e}"))?;
                let report = validate_document(&doc);
                ensure(report.is_valid(), format!("validate: {:?}", report.codes()))?;
                let analysis = analyze_document(&doc);
                if let Some((i, p)) = analysis.parts.iter().enumerate().find(|(_, p)| p.error.is_some()) {
                    return Err(format!("analyze part {}: {:?}", i + 1, p.error));
                }
                let exec = execute_document(&doc).map_err(|e| format!("exec: {e}"))?;
                ensure(!exec.field.is_empty() && exec.meshes.iter().all(|m| m.is_watertight()), "exec: empty or leaky")?;
                let text = transcribe(&doc).text();
                ensure(text.lines().count() > doc.parts.len(), "nlt: transcription too short")
            };
            run().err().map(|e| format!("{name}: {e}"))
        })
        .collect();
    ensure(failures.is_empty(), failures.join("; "))?;
    let t = within(start, Duration::from_secs(60), "end-to-end run")?;
    Ok(format!("50 synthetic documents through flatten, validate, analyze, exec and nlt with no failures, {t:.2?}"))
}

fn main() {
    let criteria: [(u32, fn() -> Outcome); 10] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
        (10, criterion_10),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (n, f) in criteria {
        let outcome = catch_unwind(f).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        match outcome {
            Ok(detail) => println!("criterion {n:>2}: PASS  {detail}"),
            Err(why) => {
                failed += 1;
                println!("criterion {n:>2}: FAIL  {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
