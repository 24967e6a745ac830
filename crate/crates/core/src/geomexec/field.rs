use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::geom::{cross2, Aabb3, Vec2, Vec3};
use crate::model::BooleanOp;

use super::Mesh;

/// Rays per grid side in each direction.
pub const DEFAULT_RESOLUTION: usize = 256;

// Sub-cell offsets keep ray origins off the lattice so they avoid shared edges
// of axis-aligned geometry. They differ per axis so diagonals miss too.
const JITTER: [f64; 2] = [0.5 + 0.013_7, 0.5 - 0.029_1];

/// Solid segment along one ray, with the outward normal at each end.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Span {
    lo: f64,
    hi: f64,
    n_lo: Vec3,
    n_hi: Vec3,
}

/// Sampled solid: for each axis, a square grid of parallel rays, each holding
/// the sorted solid intervals it crosses (a tri-dexel field). Booleans are
/// exact along rays, so accuracy depends only on the grid spacing across them.
#[derive(Debug, Clone, PartialEq)]
pub struct SolidField {
    pub bounds: Aabb3,
    pub resolution: usize,
    rays: [Vec<Vec<Span>>; 3],
}

fn axes(k: usize) -> (usize, usize) {
    ((k + 1) % 3, (k + 2) % 3)
}

impl SolidField {
    /// Empty field over `bounds`.
    pub fn empty(bounds: Aabb3, resolution: usize) -> Self {
        let n = resolution * resolution;
        SolidField { bounds, resolution, rays: std::array::from_fn(|_| vec![Vec::new(); n]) }
    }

    /// Field of a closed, outward-oriented mesh.
    pub fn from_mesh(mesh: &Mesh, bounds: Aabb3, resolution: usize) -> Self {
        let mut f = Self::empty(bounds, resolution);
        for k in 0..3 {
            f.rays[k] = f.cast(mesh, k);
        }
        f
    }

    fn spacing(&self) -> Vec3 {
        self.bounds.extents() / self.resolution as f64
    }

    /// Ray origin coordinates `(u, v)` for cell `(i, j)` of axis `k`.
    fn ray_coords(&self, k: usize, i: usize, j: usize) -> (f64, f64) {
        let (u, v) = axes(k);
        let h = self.spacing();
        (
            self.bounds.min[u] + (i as f64 + JITTER[0]) * h[u],
            self.bounds.min[v] + (j as f64 + JITTER[1]) * h[v],
        )
    }

    fn cast(&self, mesh: &Mesh, k: usize) -> Vec<Vec<Span>> {
        let res = self.resolution;
        let (u, v) = axes(k);
        let h = self.spacing();
        let mut hits: Vec<Vec<(f64, Vec3)>> = vec![Vec::new(); res * res];
        if h[u] <= 0.0 || h[v] <= 0.0 {
            return vec![Vec::new(); res * res];
        }
        let cell_range = |lo: f64, hi: f64, axis: usize, jit: f64| {
            let a = ((lo - self.bounds.min[axis]) / h[axis] - jit).ceil().max(0.0) as usize;
            let b = ((hi - self.bounds.min[axis]) / h[axis] - jit).floor();
            if b < 0.0 {
                return a..a;
            }
            a..(b as usize + 1).min(res)
        };
        for t in &mesh.triangles {
            let [a, b, c] = t.map(|i| mesh.vertices[i]);
            let normal = (b - a).cross(&(c - a));
            let Some(normal) = normal.try_normalize(0.0) else { continue };
            let (pa, pb, pc) = (Vec2::new(a[u], a[v]), Vec2::new(b[u], b[v]), Vec2::new(c[u], c[v]));
            let area2 = cross2(pb - pa, pc - pa);
            if area2 == 0.0 {
                continue;
            }
            let lo = pa.inf(&pb).inf(&pc);
            let hi = pa.sup(&pb).sup(&pc);
            for i in cell_range(lo.x, hi.x, u, JITTER[0]) {
                for j in cell_range(lo.y, hi.y, v, JITTER[1]) {
                    let (x, y) = self.ray_coords(k, i, j);
                    let p = Vec2::new(x, y);
                    let w0 = cross2(pc - pb, p - pb) / area2;
                    let w1 = cross2(pa - pc, p - pc) / area2;
                    let w2 = cross2(pb - pa, p - pa) / area2;
                    if w0 >= 0.0 && w1 >= 0.0 && w2 >= 0.0 {
                        let depth = w0 * a[k] + w1 * b[k] + w2 * c[k];
                        hits[i * res + j].push((depth, normal));
                    }
                }
            }
        }
        hits.into_iter()
            .map(|mut h| {
                h.sort_by(|x, y| x.0.total_cmp(&y.0));
                spans_from_hits(&h, k)
            })
            .collect()
    }

    /// Combines with another field on the same grid.
    pub fn combine(&self, other: &SolidField, op: BooleanOp) -> SolidField {
        assert_eq!(self.resolution, other.resolution, "fields must share a grid");
        let keep: fn(bool, bool) -> bool = match op {
            BooleanOp::NewBody | BooleanOp::Join => |a, b| a || b,
            BooleanOp::Subtract => |a, b| a && !b,
            BooleanOp::Intersect => |a, b| a && b,
        };
        let rays = std::array::from_fn(|k| {
            self.rays[k].iter().zip(&other.rays[k]).map(|(a, b)| merge(a, b, keep)).collect()
        });
        SolidField { bounds: self.bounds, resolution: self.resolution, rays }
    }

    /// Enclosed volume, integrated along the z rays.
    pub fn volume(&self) -> f64 {
        let h = self.spacing();
        let len: f64 = self.rays[2].iter().flatten().map(|s| s.hi - s.lo).sum();
        len * h.x * h.y
    }

    pub fn is_empty(&self) -> bool {
        self.rays.iter().all(|r| r.iter().all(Vec::is_empty))
    }

    /// `n` surface points drawn uniformly by area.
    ///
    /// Every span end is a surface point with a known normal. Each is kept
    /// only by the axis its normal is closest to, weighted by the surface
    /// area its ray represents there.
    pub fn surface_samples(&self, n: usize, seed: u64) -> Vec<Vec3> {
        let h = self.spacing();
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for k in 0..3 {
            let (u, v) = axes(k);
            let cell = h[u] * h[v];
            for (idx, spans) in self.rays[k].iter().enumerate() {
                let (x, y) = self.ray_coords(k, idx / self.resolution, idx % self.resolution);
                for s in spans {
                    for (depth, nrm) in [(s.lo, s.n_lo), (s.hi, s.n_hi)] {
                        if nrm.iamax() != k || nrm[k] == 0.0 {
                            continue;
                        }
                        let mut p = Vec3::zeros();
                        p[k] = depth;
                        p[u] = x;
                        p[v] = y;
                        points.push(p);
                        weights.push(cell / nrm[k].abs());
                    }
                }
            }
        }
        let Ok(dist) = WeightedIndex::new(&weights) else { return Vec::new() };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| points[dist.sample(&mut rng)]).collect()
    }
}

/// Solid intervals of a sorted hit list by winding count: a hit whose normal
/// faces against the ray enters the solid.
fn spans_from_hits(hits: &[(f64, Vec3)], k: usize) -> Vec<Span> {
    let mut out = Vec::new();
    let mut winding = 0i32;
    let mut open: Option<(f64, Vec3)> = None;
    for &(depth, n) in hits {
        let before = winding > 0;
        winding += if n[k] < 0.0 { 1 } else { -1 };
        let after = winding > 0;
        if !before && after {
            open = Some((depth, n));
        } else if before && !after {
            if let Some((lo, n_lo)) = open.take() {
                if depth > lo {
                    out.push(Span { lo, hi: depth, n_lo, n_hi: n });
                }
            }
        }
    }
    // an unbalanced ray grazed an edge or met an open mesh; trust nothing on it
    if winding != 0 {
        return Vec::new();
    }
    out
}

/// Membership sweep over both span lists. A boundary of the result inherits
/// the normal of the event that caused it, negated when that event moved its
/// own set the opposite way.
fn merge(a: &[Span], b: &[Span], keep: fn(bool, bool) -> bool) -> Vec<Span> {
    // (depth, from_b, entering, normal)
    let mut events: Vec<(f64, bool, bool, Vec3)> = Vec::with_capacity(2 * (a.len() + b.len()));
    for (spans, from_b) in [(a, false), (b, true)] {
        for s in spans {
            events.push((s.lo, from_b, true, s.n_lo));
            events.push((s.hi, from_b, false, s.n_hi));
        }
    }
    events.sort_by(|x, y| x.0.total_cmp(&y.0));
    let (mut in_a, mut in_b) = (false, false);
    let mut out = Vec::new();
    let mut open: Option<(f64, Vec3)> = None;
    let mut i = 0;
    while i < events.len() {
        let before = keep(in_a, in_b);
        let depth = events[i].0;
        let mut last = events[i];
        while i < events.len() && events[i].0 == depth {
            let (_, from_b, entering, _) = events[i];
            if from_b {
                in_b = entering;
            } else {
                in_a = entering;
            }
            last = events[i];
            i += 1;
        }
        let after = keep(in_a, in_b);
        if before == after {
            continue;
        }
        let normal = if last.2 == after { last.3 } else { -last.3 };
        if after {
            open = Some((depth, normal));
        } else if let Some((lo, n_lo)) = open.take() {
            out.push(Span { lo, hi: depth, n_lo, n_hi: normal });
        }
    }
    out
}

/// Combines a body into the field: `NewBody` and `Join` take the union,
/// `Subtract` removes the body and `Intersect` keeps the overlap.
pub fn apply_boolean(current: &SolidField, new_body: &Mesh, op: BooleanOp) -> SolidField {
    let body = SolidField::from_mesh(new_body, current.bounds, current.resolution);
    current.combine(&body, op)
}
