use super::*;
use crate::geom::Vec2;
use crate::model::{Anchor, Constraint, ConstraintKind as K, Geometry, Primitive, Reference, SketchPlane};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sk(primitives: Vec<Primitive>, constraints: Vec<Constraint>) -> Sketch {
    Sketch::new(SketchPlane::default(), primitives, constraints)
}

fn r(c: &Constraint, s: &Sketch) -> f64 {
    residual_norm(c, s).unwrap()
}

fn at(id: &str, a: Anchor) -> Reference {
    Reference::at(id, a)
}

#[test]
fn spec_residual_values() {
    let s = sk(
        vec![
            Primitive::line("a", [0.0, 0.0], [1.0, 0.0]),
            Primitive::line("b", [0.0, 1.0], [1.0, 1.0]),
            Primitive::line("d", [0.0, 0.0], [1.0, 1.0]),
            Primitive::line("t", [-2.0, 1.0], [2.0, 1.0]),
            Primitive::circle("c1", [0.0, 0.0], 1.0),
            Primitive::circle("c2", [0.1, 0.0], 1.0),
        ],
        vec![],
    );
    assert_eq!(r(&Constraint::binary(K::Parallel, "a", "b"), &s), 0.0);
    assert_eq!(r(&Constraint::binary(K::Tangent, "t", "c1"), &s), 0.0);
    assert!((r(&Constraint::binary(K::Concentric, "c1", "c2"), &s) - 0.1).abs() < 1e-15);
    // independent: dot((1,0), (1,1)/√2)
    let expect = 1.0 / 2f64.sqrt();
    let got = r(&Constraint::binary(K::Perpendicular, "a", "d"), &s);
    assert!((got - expect).abs() < 1e-15);
    assert!((got - 0.70711).abs() < 1e-5);
}

/// (satisfied sketch, violated sketch, constraint) for every kind.
fn characterization_cases() -> Vec<(Sketch, Sketch, Constraint)> {
    let arc = |id: &str, c: [f64; 2], rad: f64| {
        Primitive::arc(id, [c[0] + rad, c[1]], [c[0], c[1] + rad], [c[0] - rad, c[1]])
    };
    let pair = |a: Vec<Primitive>, b: Vec<Primitive>, c: Constraint| (sk(a, vec![]), sk(b, vec![]), c);
    vec![
        pair(
            vec![Primitive::line("a", [0.0, 0.0], [1.0, 0.0]), Primitive::line("b", [1.0, 0.0], [1.0, 2.0])],
            vec![Primitive::line("a", [0.0, 0.0], [1.0, 0.0]), Primitive::line("b", [1.1, 0.0], [1.0, 2.0])],
            Constraint::new(K::Coincident, vec![at("a", Anchor::End), at("b", Anchor::Start)]),
        ),
        pair(
            vec![Primitive::line("a", [0.0, 0.0], [1.0, 2.0]), Primitive::line("b", [3.0, 0.0], [2.0, -2.0])],
            vec![Primitive::line("a", [0.0, 0.0], [1.0, 2.0]), Primitive::line("b", [3.0, 0.0], [2.0, -2.5])],
            Constraint::binary(K::Parallel, "a", "b"),
        ),
        pair(
            vec![Primitive::line("a", [0.0, 0.0], [1.0, 2.0]), Primitive::line("b", [0.0, 0.0], [-2.0, 1.0])],
            vec![Primitive::line("a", [0.0, 0.0], [1.0, 2.0]), Primitive::line("b", [0.0, 0.0], [-2.0, 1.5])],
            Constraint::binary(K::Perpendicular, "a", "b"),
        ),
        pair(
            vec![Primitive::line("a", [0.0, 3.0], [5.0, 3.0])],
            vec![Primitive::line("a", [0.0, 3.0], [5.0, 3.1])],
            Constraint::unary(K::Horizontal, "a"),
        ),
        pair(
            vec![Primitive::line("a", [2.0, 0.0], [2.0, -4.0])],
            vec![Primitive::line("a", [2.0, 0.0], [2.1, -4.0])],
            Constraint::unary(K::Vertical, "a"),
        ),
        pair(
            vec![Primitive::circle("c", [0.0, 0.0], 1.0), Primitive::circle("d", [3.0, 0.0], 2.0)],
            vec![Primitive::circle("c", [0.0, 0.0], 1.0), Primitive::circle("d", [3.2, 0.0], 2.0)],
            Constraint::binary(K::Tangent, "c", "d"),
        ),
        pair(
            vec![Primitive::circle("c", [0.0, 0.0], 3.0), arc("d", [1.0, 0.0], 2.0)],
            vec![Primitive::circle("c", [0.0, 0.0], 3.0), arc("d", [0.8, 0.0], 2.0)],
            Constraint::binary(K::Tangent, "c", "d"),
        ),
        pair(
            vec![Primitive::line("l", [-1.0, 2.0], [4.0, 2.0]), arc("d", [1.0, 0.0], 2.0)],
            vec![Primitive::line("l", [-1.0, 2.0], [4.0, 2.2]), arc("d", [1.0, 0.0], 2.0)],
            Constraint::binary(K::Tangent, "l", "d"),
        ),
        pair(
            vec![Primitive::line("a", [0.0, 0.0], [3.0, 4.0]), Primitive::line("b", [7.0, 0.0], [7.0, 5.0])],
            vec![Primitive::line("a", [0.0, 0.0], [3.0, 4.0]), Primitive::line("b", [7.0, 0.0], [7.0, 5.5])],
            Constraint::binary(K::Equal, "a", "b"),
        ),
        pair(
            vec![Primitive::circle("c", [0.0, 0.0], 2.0), arc("d", [5.0, 5.0], 2.0)],
            vec![Primitive::circle("c", [0.0, 0.0], 2.0), arc("d", [5.0, 5.0], 2.5)],
            Constraint::binary(K::Equal, "c", "d"),
        ),
        pair(
            vec![Primitive::circle("c", [1.0, 1.0], 2.0), arc("d", [1.0, 1.0], 0.5)],
            vec![Primitive::circle("c", [1.0, 1.0], 2.0), arc("d", [1.0, 1.2], 0.5)],
            Constraint::binary(K::Concentric, "c", "d"),
        ),
        pair(
            vec![Primitive::line("a", [0.0, 0.0], [1.0, 0.0])],
            vec![Primitive::line("a", [0.0, 0.0], [1.0, 0.1])],
            Constraint { pin: Some(vec![0.0, 0.0, 1.0, 0.0]), ..Constraint::unary(K::Fix, "a") },
        ),
        pair(
            vec![Primitive::line("l", [3.0, 4.0], [6.0, 8.0]), Primitive::circle("c", [0.0, 0.0], 5.0)],
            vec![Primitive::line("l", [3.0, 4.0], [6.0, 8.5]), Primitive::circle("c", [0.0, 0.0], 5.0)],
            Constraint::binary(K::Normal, "l", "c"),
        ),
    ]
}

#[test]
fn residual_is_zero_exactly_when_satisfied() {
    let cases = characterization_cases();
    let mut kinds: Vec<K> = cases.iter().map(|c| c.2.kind).collect();
    kinds.dedup();
    assert_eq!(kinds.len(), 10);
    for (good, bad, c) in &cases {
        let rg = r(c, good);
        let rb = r(c, bad);
        assert!(rg < 1e-12, "{:?} satisfied case residual {rg}", c.kind);
        assert!(rb > 1e-6, "{:?} violated case residual {rb}", c.kind);
    }
}

#[test]
fn zero_length_line_has_undefined_direction() {
    let s = sk(vec![Primitive::line("a", [1.0, 1.0], [1.0, 1.0])], vec![]);
    let err = residual(&Constraint::unary(K::Horizontal, "a"), &s).unwrap_err();
    assert_eq!(err.code(), "UNDEFINED_RESIDUAL");
}

fn transform(s: &Sketch, f: impl Fn(Vec2) -> Vec2, scale: f64) -> Sketch {
    let mut out = s.clone();
    for p in &mut out.primitives {
        p.geometry = p.geometry.map(&f, |r| r * scale);
    }
    out
}

#[test]
fn rigid_motion_invariance() {
    let (c, s) = (0.6f64, 0.8f64);
    let rot = |p: Vec2| Vec2::new(c * p.x - s * p.y + 2.0, s * p.x + c * p.y - 1.0);
    for (good, bad, con) in characterization_cases() {
        if matches!(con.kind, K::Horizontal | K::Vertical | K::Fix) {
            continue;
        }
        for base in [good, bad] {
            let moved = transform(&base, rot, 1.0);
            let (a, b) = (r(&con, &base), r(&con, &moved));
            // Coincident/Concentric report components; compare magnitudes
            let (na, nb) = match con.kind {
                K::Coincident | K::Concentric => {
                    let v = |x: &Sketch| residual(&con, x).unwrap().iter().map(|v| v * v).sum::<f64>().sqrt();
                    (v(&base), v(&moved))
                }
                _ => (a, b),
            };
            assert!((na - nb).abs() < 1e-12, "{:?}: {na} vs {nb}", con.kind);
        }
    }
}

#[test]
fn scale_covariance() {
    let k = 3.5;
    for (_, bad, con) in characterization_cases() {
        if con.kind == K::Fix {
            continue;
        }
        let scaled = transform(&bad, |p| p * k, k);
        let (a, b) = (r(&con, &bad), r(&con, &scaled));
        let angular = matches!(con.kind, K::Parallel | K::Perpendicular | K::Horizontal | K::Vertical | K::Normal);
        let expect = if angular { a } else { a * k };
        assert!((b - expect).abs() < 1e-12 * (1.0 + expect), "{:?}: {b} vs {expect}", con.kind);
    }
}

#[test]
fn concentric_derivative_along_axis() {
    let s = sk(
        vec![Primitive::circle("c1", [0.0, 0.0], 1.0), Primitive::circle("c2", [0.1, 0.0], 1.0)],
        vec![Constraint::binary(K::Concentric, "c1", "c2")],
    );
    let sys = ResidualSystem::new(&s, &[]).unwrap();
    let j = sys.jacobian(&sys.x0()).unwrap();
    // variables: c1.cx c1.cy c1.r c2.cx c2.cy c2.r; row 0 is the x difference
    assert_eq!(j.get(0, 0), 1.0);
    assert_eq!(j.get(0, 3), -1.0);
}

fn finite_difference(sys: &ResidualSystem, x: &[f64], h: f64) -> nalgebra::DMatrix<f64> {
    let m = sys.n_residuals();
    let mut out = nalgebra::DMatrix::zeros(m, x.len());
    for j in 0..x.len() {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[j] += h;
        xm[j] -= h;
        let (rp, rm) = (sys.residuals(&xp).unwrap(), sys.residuals(&xm).unwrap());
        for i in 0..m {
            out[(i, j)] = (rp[i] - rm[i]) / (2.0 * h);
        }
    }
    out
}

fn assert_jacobian_matches(s: &Sketch) {
    let sys = ResidualSystem::new(s, &[]).unwrap();
    let x = sys.x0();
    let scale = crate::model::sketch_extent(s);
    let analytic = sys.jacobian(&x).unwrap().to_dense();
    let numeric = finite_difference(&sys, &x, 1e-6 * scale);
    for (a, f) in analytic.iter().zip(numeric.iter()) {
        let denom = a.abs().max(f.abs()).max(1.0);
        assert!((a - f).abs() / denom < 1e-5, "analytic {a} vs numeric {f}");
    }
}

#[test]
fn parallel_jacobian_at_exact_parallel_is_finite() {
    let s = sk(
        vec![Primitive::line("a", [0.0, 0.0], [1.0, 0.0]), Primitive::line("b", [0.0, 1.0], [2.0, 1.0])],
        vec![Constraint::binary(K::Parallel, "a", "b")],
    );
    let sys = ResidualSystem::new(&s, &[]).unwrap();
    let j = sys.jacobian(&sys.x0()).unwrap().to_dense();
    assert!(j.iter().all(|v| v.is_finite()));
    assert_jacobian_matches(&s);
}

#[test]
fn zero_direction_gives_zero_directional_derivative() {
    let (good, _, _) = &characterization_cases()[5];
    let mut s = good.clone();
    s.constraints = vec![Constraint::binary(K::Tangent, "c", "d")];
    let sys = ResidualSystem::new(&s, &[]).unwrap();
    let j = sys.jacobian(&sys.x0()).unwrap().to_dense();
    let v = nalgebra::DVector::zeros(sys.n_vars());
    assert!((j * v).iter().all(|x| *x == 0.0));
}

/// A random sketch exercising every kind, away from degeneracies.
fn random_sketch(rng: &mut ChaCha8Rng) -> Sketch {
    let mut pt = || [rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0)];
    let (a0, a1, b0, b1) = (pt(), pt(), pt(), pt());
    let (c0, d0) = (pt(), pt());
    let mut rad = || rng.gen_range(0.5..3.0);
    let (rc, rd) = (rad(), rad());
    let th: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
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
    sk(prims, cons)
}

#[test]
fn jacobian_matches_finite_differences_on_random_sketches() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut checked = 0;
    while checked < 100 {
        let s = random_sketch(&mut rng);
        let near_degenerate = s.primitives.iter().any(|p| match p.geometry {
            Geometry::Line { start, end } => (end - start).norm() < 0.5,
            _ => false,
        });
        if near_degenerate {
            continue;
        }
        assert_jacobian_matches(&s);
        checked += 1;
    }
}

fn square() -> Sketch {
    let c = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
    let ids = ["s", "e", "n", "w"];
    let prims = (0..4).map(|i| Primitive::line(ids[i], c[i], c[(i + 1) % 4])).collect();
    let mut cons: Vec<Constraint> = (0..4)
        .map(|i| Constraint::new(K::Coincident, vec![at(ids[i], Anchor::End), at(ids[(i + 1) % 4], Anchor::Start)]))
        .collect();
    cons.push(Constraint::unary(K::Horizontal, "s"));
    cons.push(Constraint::unary(K::Horizontal, "n"));
    cons.push(Constraint::unary(K::Vertical, "e"));
    cons.push(Constraint::unary(K::Vertical, "w"));
    sk(prims, cons)
}

#[test]
fn check_satisfied_reports() {
    let s = square();
    assert!(check_satisfied(&s, 1e-6).all_pass());
    let mut moved = s.clone();
    moved.primitives[0].geometry = Geometry::Line { start: Vec2::new(0.0, 0.0), end: Vec2::new(1.01, 0.0) };
    let rep = check_satisfied(&moved, 1e-6);
    let fails: Vec<_> = rep.failures().collect();
    assert_eq!(fails.len(), 1);
    assert_eq!(fails[0].index, 0);
    assert!((fails[0].residual - 0.01).abs() < 1e-12);
    let empty = check_satisfied(&sk(vec![], vec![]), 1e-6);
    assert!(empty.checks.is_empty() && empty.all_pass());
}

#[test]
fn equal_radius_follows_pin() {
    let s = sk(
        vec![Primitive::circle("c1", [0.0, 0.0], 1.0), Primitive::circle("c2", [0.0, 0.0], 1.5)],
        vec![Constraint::binary(K::Equal, "c1", "c2"), Constraint::binary(K::Concentric, "c1", "c2")],
    );
    let pin = Pin::parse("c1.radius", 2.0, &s).unwrap();
    let sol = solve(&s, &[pin]).unwrap();
    let r2 = sol.sketch.primitive("c2").unwrap().geometry.radius().unwrap();
    assert!((r2 - 2.0).abs() < 1e-8, "{r2}");
    assert!(sol.report.converged);
}

#[test]
fn moved_corner_keeps_rectangle() {
    let s = square();
    let pins = [Pin::parse("s.start.x", 0.5, &s).unwrap(), Pin::parse("s.start.y", 0.0, &s).unwrap()];
    let sol = solve(&s, &pins).unwrap();
    let out = &sol.sketch;
    assert!(check_satisfied(out, 1e-8).all_pass());
    let w = out.primitive("w").unwrap().geometry;
    let (a, b) = w.endpoints().unwrap();
    assert!((a.x - 0.5).abs() < 1e-8 && (b.x - 0.5).abs() < 1e-8, "west side moved: {w:?}");
    let sides: Vec<f64> = ["s", "e", "n", "w"].iter().map(|id| out.primitive(id).unwrap().geometry.length()).collect();
    assert!((sides[0] - sides[2]).abs() < 1e-8 && (sides[1] - sides[3]).abs() < 1e-8);
}

#[test]
fn contradictory_pair_is_infeasible() {
    let s = sk(
        vec![Primitive::line("l", [0.0, 0.0], [1.0, 1.0])],
        vec![Constraint::unary(K::Horizontal, "l"), Constraint::unary(K::Vertical, "l")],
    );
    assert_eq!(solve(&s, &[]).unwrap_err().code(), "INFEASIBLE");
}

#[test]
fn converged_solutions_pass_checks() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let mut s = square();
        let dx: f64 = rng.gen_range(-0.5..0.5);
        let dy: f64 = rng.gen_range(-0.5..0.5);
        let pins = [Pin::parse("n.start.x", 1.0 + dx, &s).unwrap(), Pin::parse("n.start.y", 1.0 + dy, &s).unwrap()];
        s.constraints.push(Constraint::new(K::Fix, vec![at("s", Anchor::Start)]));
        if let Ok(sol) = solve(&s, &pins) {
            assert!(check_satisfied(&sol.sketch, 1e-6).all_pass());
        }
    }
}

#[test]
fn pin_paths() {
    let s = square();
    let p = Pin::parse("e.end.y", 3.0, &s).unwrap();
    assert_eq!((p.param, p.path()), (3, "e.end.y".to_string()));
    assert_eq!(Pin::parse("zz.start.x", 0.0, &s).unwrap_err().code(), "UNKNOWN_VARIABLE");
    assert_eq!(Pin::parse("e.radius", 0.0, &s).unwrap_err().code(), "UNKNOWN_VARIABLE");
}
