use crate::geom::{cross2, polygon_area, polygon_is_simple, Vec2};
use crate::model::geom_eps;
use crate::topology::{Loop, LoopDict, OuterLoop, CHORD_TOL_REL};

use super::ExecError;

/// A planar region: one counter-clockwise outer polygon with clockwise holes.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub outer: Vec<Vec2>,
    pub holes: Vec<Vec<Vec2>>,
    /// Sagitta bound used when the outer loop was discretized.
    pub chord_tol: f64,
}

impl Profile {
    /// Net area, outer minus holes.
    pub fn area(&self) -> f64 {
        polygon_area(&self.outer) + self.holes.iter().map(|h| polygon_area(h)).sum::<f64>()
    }

    /// Outer polygon followed by every hole.
    pub fn rings(&self) -> impl Iterator<Item = &[Vec2]> {
        std::iter::once(self.outer.as_slice()).chain(self.holes.iter().map(|h| h.as_slice()))
    }

    /// All ring vertices in `rings()` order; triangle and ring indices refer to this list.
    pub fn vertices(&self) -> Vec<Vec2> {
        self.rings().flat_map(|r| r.iter().copied()).collect()
    }

    /// Index ranges of each ring within `vertices()`.
    pub fn ring_ranges(&self) -> Vec<std::ops::Range<usize>> {
        let mut start = 0;
        self.rings()
            .map(|r| {
                let range = start..start + r.len();
                start += r.len();
                range
            })
            .collect()
    }

    /// Triangles covering the region, counter-clockwise.
    ///
    /// Holes are bridged into the outer ring one at a time, rightmost first,
    /// then the single resulting polygon is ear-clipped.
    pub fn triangulate(&self) -> Vec<[usize; 3]> {
        let verts = self.vertices();
        let ranges = self.ring_ranges();
        let mut ring: Vec<usize> = ranges[0].clone().collect();
        let mut holes: Vec<Vec<usize>> = ranges[1..].iter().map(|r| r.clone().collect()).collect();
        let max_x = |h: &Vec<usize>| h.iter().map(|&i| verts[i].x).fold(f64::NEG_INFINITY, f64::max);
        holes.sort_by(|a, b| max_x(b).total_cmp(&max_x(a)));
        for hole in &holes {
            bridge(&mut ring, hole, &verts);
        }
        ear_clip(ring, &verts)
    }
}

fn discretize(lp: &Loop, chord_tol: f64) -> Vec<Vec2> {
    let mut pts = Vec::new();
    for e in &lp.edges {
        let s = e.curve.sample(chord_tol);
        pts.extend_from_slice(&s[..s.len() - 1]);
    }
    pts
}

fn oriented(mut pts: Vec<Vec2>, ccw: bool) -> Vec<Vec2> {
    if (polygon_area(&pts) > 0.0) != ccw {
        pts.reverse();
    }
    pts
}

fn ring_of(lp: &Loop, ccw: bool) -> Result<(Vec<Vec2>, f64), ExecError> {
    let extent = lp.extent();
    let tol = CHORD_TOL_REL * extent;
    let pts = discretize(lp, tol);
    if !polygon_is_simple(&pts, geom_eps(extent)) {
        return Err(ExecError::SelfIntersectingProfile);
    }
    Ok((oriented(pts, ccw), tol))
}

/// Profile of one outer loop and the holes directly inside it.
///
/// Holes nested inside other holes are islands and are left to
/// `build_profiles`.
pub fn build_profile(entry: &OuterLoop) -> Result<Profile, ExecError> {
    Ok(nested_profiles(entry)?.swap_remove(0))
}

/// Every solid region of a loop hierarchy under the even-odd rule: an island
/// inside a hole is solid again and becomes a profile of its own.
pub fn build_profiles(dict: &LoopDict) -> Result<Vec<Profile>, ExecError> {
    let mut out = Vec::new();
    for entry in &dict.outers {
        out.extend(nested_profiles(entry)?);
    }
    Ok(out)
}

fn nested_profiles(entry: &OuterLoop) -> Result<Vec<Profile>, ExecError> {
    let mut loops: Vec<&Loop> = vec![&entry.lp];
    loops.extend(entry.holes.iter().map(|h| &h.lp));
    let eps = geom_eps(entry.lp.extent());
    // parent = smallest other loop containing it; depth counts the chain
    let n = loops.len();
    let mut parent = vec![None; n];
    for i in 1..n {
        let mut best: Option<usize> = None;
        for j in 0..n {
            if i != j && (j == 0 || loops[j].contains(loops[i], eps)) {
                if best.is_none_or(|b| loops[j].area.abs() < loops[b].area.abs()) {
                    best = Some(j);
                }
            }
        }
        parent[i] = best;
    }
    let depth = |mut i: usize| {
        let mut d = 0;
        while let Some(p) = parent[i] {
            d += 1;
            i = p;
        }
        d
    };
    let mut profiles = Vec::new();
    for i in 0..n {
        if depth(i) % 2 == 1 {
            continue;
        }
        let (outer, chord_tol) = ring_of(loops[i], true)?;
        let mut holes = Vec::new();
        for j in 0..n {
            if parent[j] == Some(i) {
                holes.push(ring_of(loops[j], false)?.0);
            }
        }
        profiles.push(Profile { outer, holes, chord_tol });
    }
    Ok(profiles)
}

fn is_reflex(a: Vec2, p: Vec2, b: Vec2) -> bool {
    cross2(p - a, b - p) < 0.0
}

/// Whether direction `d` leaves vertex `p` into the polygon interior, given
/// its ring neighbours `a` (previous) and `b` (next) on a CCW ring.
fn sector_contains(a: Vec2, p: Vec2, b: Vec2, d: Vec2) -> bool {
    if is_reflex(a, p, b) {
        !(cross2(a - p, d) > 0.0 && cross2(d, b - p) > 0.0)
    } else {
        cross2(b - p, d) > 0.0 && cross2(d, a - p) > 0.0
    }
}

fn in_triangle(p: Vec2, a: Vec2, b: Vec2, c: Vec2) -> bool {
    cross2(b - a, p - a) >= 0.0 && cross2(c - b, p - b) >= 0.0 && cross2(a - c, p - c) >= 0.0
}

/// Splices a clockwise hole into the ring through a mutually visible pair.
fn bridge(ring: &mut Vec<usize>, hole: &[usize], v: &[Vec2]) {
    let hm = (0..hole.len()).max_by(|&a, &b| v[hole[a]].x.total_cmp(&v[hole[b]].x)).expect("non-empty hole");
    let m = v[hole[hm]];
    let n = ring.len();
    // nearest crossing of the ray from m towards +x
    let mut hit: Option<(f64, usize)> = None;
    for i in 0..n {
        let (a, b) = (v[ring[i]], v[ring[(i + 1) % n]]);
        if (a.y <= m.y && m.y <= b.y) || (b.y <= m.y && m.y <= a.y) {
            let x = if a.y == b.y { a.x.min(b.x) } else { a.x + (m.y - a.y) * (b.x - a.x) / (b.y - a.y) };
            if x >= m.x && hit.is_none_or(|(hx, _)| x < hx) {
                let k = if a.x >= b.x { i } else { (i + 1) % n };
                hit = Some((x, k));
            }
        }
    }
    let Some((hx, mut pk)) = hit else { return };
    let i_pt = Vec2::new(hx, m.y);
    let p = v[ring[pk]];
    if p != i_pt {
        // a reflex vertex inside (m, i, p) may block the view; take the one at the smallest angle
        let mut best = (f64::INFINITY, f64::INFINITY);
        for k in 0..n {
            let q = v[ring[k]];
            let (a, b) = (v[ring[(k + n - 1) % n]], v[ring[(k + 1) % n]]);
            if k != pk && is_reflex(a, q, b) && q.x >= m.x && (in_triangle(q, m, i_pt, p) || in_triangle(q, m, p, i_pt)) {
                let d = q - m;
                let score = ((d.y.abs() / d.x.max(1e-300)), d.norm());
                if score < best {
                    best = score;
                    pk = k;
                }
            }
        }
    }
    // a repeated position is valid only where its wedge faces the hole
    let target = v[ring[pk]];
    for k in 0..n {
        if v[ring[k]] == target {
            let (a, b) = (v[ring[(k + n - 1) % n]], v[ring[(k + 1) % n]]);
            if sector_contains(a, target, b, m - target) {
                pk = k;
                break;
            }
        }
    }
    let mut spliced = Vec::with_capacity(n + hole.len() + 2);
    spliced.extend_from_slice(&ring[..=pk]);
    for s in 0..=hole.len() {
        spliced.push(hole[(hm + s) % hole.len()]);
    }
    spliced.extend_from_slice(&ring[pk..]);
    *ring = spliced;
}

fn ear_clip(mut ring: Vec<usize>, v: &[Vec2]) -> Vec<[usize; 3]> {
    let mut tris = Vec::with_capacity(ring.len().saturating_sub(2));
    let mut start = 0;
    while ring.len() > 3 {
        let n = ring.len();
        let reflex: Vec<usize> = (0..n)
            .filter(|&k| is_reflex(v[ring[(k + n - 1) % n]], v[ring[k]], v[ring[(k + 1) % n]]))
            .collect();
        let is_ear = |k: usize| {
            let (ia, ip, ib) = (ring[(k + n - 1) % n], ring[k], ring[(k + 1) % n]);
            let (a, p, b) = (v[ia], v[ip], v[ib]);
            if cross2(p - a, b - p) <= 0.0 {
                return false;
            }
            !reflex.iter().any(|&r| {
                let q = v[ring[r]];
                q != a && q != p && q != b && in_triangle(q, a, p, b)
            })
        };
        let found = (0..n).map(|s| (start + s) % n).find(|&k| is_ear(k));
        // collinear or numerically stuck: clip the flattest convex-or-degenerate corner
        let k = found.unwrap_or_else(|| {
            (0..n)
                .max_by(|&x, &y| {
                    let c = |k: usize| cross2(v[ring[k]] - v[ring[(k + n - 1) % n]], v[ring[(k + 1) % n]] - v[ring[k]]);
                    c(x).total_cmp(&c(y))
                })
                .expect("ring has vertices")
        });
        tris.push([ring[(k + n - 1) % n], ring[k], ring[(k + 1) % n]]);
        ring.remove(k);
        start = if k == 0 { 0 } else { k - 1 };
    }
    if ring.len() == 3 {
        tris.push([ring[0], ring[1], ring[2]]);
    }
    tris
}
