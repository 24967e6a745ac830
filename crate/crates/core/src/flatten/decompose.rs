use crate::format::HierarchicalSketch;
use crate::geom::{cross2, Vec2};
use crate::model::{geom_eps, Geometry};

use super::segment::{KeyQuantizer, MinimalSegment, Multiset, KEY_EPS_REL};
use super::FlattenError;

/// Splits every loop segment at the endpoints of the segments it overlaps,
/// so that any two fragments are either key-identical or interior-disjoint.
///
/// Lines split against collinear lines, arcs against arcs of the same circle.
/// Circles are never split. Output is indexed `[face][loop][fragment]`, each
/// loop's fragments in traversal order.
pub fn decompose(sketch: &HierarchicalSketch) -> Result<Vec<Vec<Vec<MinimalSegment>>>, FlattenError> {
    let extent = sketch.extent();
    let quant = KeyQuantizer::for_extent(extent);
    let tol = KEY_EPS_REL * if extent > 0.0 { extent } else { 1.0 };
    let eps = geom_eps(extent);

    let all: Vec<Geometry> = sketch.segments().map(|s| s.oriented()).collect();
    for (seg, g) in sketch.segments().zip(&all) {
        if is_degenerate(g, eps) {
            return Err(FlattenError::DegenerateSegment { id: seg.id.clone() });
        }
    }

    let mut idx = 0;
    let mut out = Vec::with_capacity(sketch.faces.len());
    for face in &sketch.faces {
        let mut loops = Vec::with_capacity(face.loops.len());
        for lp in &face.loops {
            let mut frags = Vec::new();
            for seg in &lp.segments {
                let g = all[idx];
                let breaks = breakpoints(&g, idx, &all, tol);
                for piece in split(&g, &breaks) {
                    if is_degenerate(&piece, eps) {
                        return Err(FlattenError::DegenerateSegment { id: seg.id.clone() });
                    }
                    frags.push(MinimalSegment { geometry: piece, source: seg.id.clone(), key: quant.key(&piece) });
                }
                idx += 1;
            }
            loops.push(frags);
        }
        out.push(loops);
    }
    Ok(out)
}

fn is_degenerate(g: &Geometry, eps: f64) -> bool {
    match *g {
        Geometry::Line { start, end } => (end - start).norm() <= eps,
        Geometry::Circle { radius, .. } => radius <= eps,
        Geometry::Arc { .. } => g.arc_params().map_or(true, |a| a.length() <= eps),
    }
}

/// Interior split points of `g` as (parameter, point), sorted and deduplicated.
fn breakpoints(g: &Geometry, own: usize, all: &[Geometry], tol: f64) -> Vec<(f64, Vec2)> {
    let mut pts = Vec::new();
    match *g {
        Geometry::Line { start: a, end: b } => {
            let d = b - a;
            let len = d.norm();
            for (j, o) in all.iter().enumerate() {
                let Geometry::Line { start: p, end: q } = *o else { continue };
                if j == own || !on_carrier(a, d, p, tol) || !on_carrier(a, d, q, tol) {
                    continue;
                }
                for x in [p, q] {
                    let s = (x - a).dot(&d) / len;
                    if s > tol && s < len - tol {
                        pts.push((s / len, x));
                    }
                }
            }
        }
        Geometry::Arc { .. } => {
            let Some(arc) = g.arc_params() else { return pts };
            let span = arc.length();
            for (j, o) in all.iter().enumerate() {
                if j == own || !matches!(o, Geometry::Arc { .. }) {
                    continue;
                }
                let Some(other) = o.arc_params() else { continue };
                if (other.center - arc.center).norm() > tol || (other.radius - arc.radius).abs() > tol {
                    continue;
                }
                let (p, q) = o.endpoints().expect("arc has endpoints");
                for x in [p, q] {
                    let v = x - arc.center;
                    if let Some(t) = arc.param_of_angle(v.y.atan2(v.x), 0.0) {
                        if t * span > tol && (1.0 - t) * span > tol {
                            pts.push((t, x));
                        }
                    }
                }
            }
        }
        Geometry::Circle { .. } => {}
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    pts.dedup_by(|b, a| (b.1 - a.1).norm() <= tol);
    pts
}

fn on_carrier(a: Vec2, d: Vec2, p: Vec2, tol: f64) -> bool {
    cross2(d, p - a).abs() <= tol * d.norm()
}

fn split(g: &Geometry, breaks: &[(f64, Vec2)]) -> Vec<Geometry> {
    if breaks.is_empty() {
        return vec![*g];
    }
    match *g {
        Geometry::Line { start, end } => {
            let mut pts = vec![start];
            pts.extend(breaks.iter().map(|b| b.1));
            pts.push(end);
            pts.windows(2).map(|w| Geometry::Line { start: w[0], end: w[1] }).collect()
        }
        Geometry::Arc { start, end, .. } => {
            let arc = g.arc_params().expect("non-degenerate arc");
            let mut knots = vec![(0.0, start)];
            knots.extend_from_slice(breaks);
            knots.push((1.0, end));
            knots
                .windows(2)
                .map(|w| Geometry::Arc { start: w[0].1, mid: arc.point_at(0.5 * (w[0].0 + w[1].0)), end: w[1].1 })
                .collect()
        }
        Geometry::Circle { .. } => vec![*g],
    }
}

/// Parity combination: a key survives iff its total multiplicity across all
/// operands is odd. Fails if two distinct keys partially overlap, which means
/// the operands were not decomposed against each other.
pub fn symmetric_difference(operands: &[Multiset]) -> Result<Multiset, FlattenError> {
    let mut total = Multiset::new();
    for m in operands {
        for (_, seg, n) in m.iter() {
            total.insert_n(seg.clone(), n);
        }
    }
    check_minimal(&total)?;
    let mut out = Multiset::new();
    for (_, seg, n) in total.iter() {
        if n % 2 == 1 {
            out.insert(seg.clone());
        }
    }
    Ok(out)
}

fn check_minimal(set: &Multiset) -> Result<(), FlattenError> {
    let segs: Vec<&MinimalSegment> = set.iter().map(|(_, s, _)| s).collect();
    let mut lo = Vec2::repeat(f64::INFINITY);
    let mut hi = Vec2::repeat(f64::NEG_INFINITY);
    for s in &segs {
        let (a, b) = s.geometry.bounds();
        lo = lo.inf(&a);
        hi = hi.sup(&b);
    }
    if segs.is_empty() {
        return Ok(());
    }
    let extent = (hi - lo).max();
    let tol = KEY_EPS_REL * if extent > 0.0 { extent } else { 1.0 };
    for i in 0..segs.len() {
        for j in i + 1..segs.len() {
            if partially_overlap(&segs[i].geometry, &segs[j].geometry, tol) {
                return Err(FlattenError::NonMinimalOperands {
                    first: segs[i].source.clone(),
                    second: segs[j].source.clone(),
                });
            }
        }
    }
    Ok(())
}

/// Whether two curves share a stretch of positive length. Touching at
/// endpoints does not count; a circle and an arc never count.
pub(crate) fn partially_overlap(a: &Geometry, b: &Geometry, tol: f64) -> bool {
    match (*a, *b) {
        (Geometry::Line { start: a0, end: a1 }, Geometry::Line { start: b0, end: b1 }) => {
            let d = a1 - a0;
            if !on_carrier(a0, d, b0, tol) || !on_carrier(a0, d, b1, tol) {
                return false;
            }
            let strictly_inside = |p: Vec2, s: Vec2, e: Vec2| {
                let d = e - s;
                let len = d.norm();
                let t = (p - s).dot(&d) / len;
                t > tol && t < len - tol
            };
            let (am, bm) = ((a0 + a1) * 0.5, (b0 + b1) * 0.5);
            [b0, b1, bm].iter().any(|&p| strictly_inside(p, a0, a1))
                || [a0, a1, am].iter().any(|&p| strictly_inside(p, b0, b1))
        }
        (Geometry::Circle { center: c1, radius: r1 }, Geometry::Circle { center: c2, radius: r2 }) => {
            (c1 - c2).norm() <= tol && (r1 - r2).abs() <= tol
        }
        (Geometry::Arc { .. }, Geometry::Arc { .. }) => {
            let (Some(p), Some(q)) = (a.arc_params(), b.arc_params()) else { return false };
            if (p.center - q.center).norm() > tol || (p.radius - q.radius).abs() > tol {
                return false;
            }
            let strictly_inside = |x: Vec2, arc: &crate::geom::ArcParams| {
                let v = x - arc.center;
                let span = arc.length();
                arc.param_of_angle(v.y.atan2(v.x), 0.0).is_some_and(|t| t * span > tol && (1.0 - t) * span > tol)
            };
            let pts = |arc: &crate::geom::ArcParams| [arc.point_at(0.0), arc.point_at(0.5), arc.point_at(1.0)];
            pts(&q).iter().any(|&x| strictly_inside(x, &p)) || pts(&p).iter().any(|&x| strictly_inside(x, &q))
        }
        _ => false,
    }
}
