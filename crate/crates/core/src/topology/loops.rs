use std::collections::{BTreeMap, BTreeSet};

use crate::format::canonical_sketch;
use crate::geom::{arc_area_term, line_area_term, point_in_polygon, polygon_boundary_distance, polygon_is_simple, segments_intersect, Vec2};
use crate::model::{geom_eps, sketch_extent, Geometry, Sketch};

use super::TopologyError;

/// Relative chord tolerance used whenever loops are discretized.
pub const CHORD_TOL_REL: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct LoopEdge {
    pub id: String,
    /// Traversed end to start.
    pub reversed: bool,
    /// Geometry in traversal direction.
    pub curve: Geometry,
}

/// A closed, simple, counter-clockwise cycle of primitives.
#[derive(Debug, Clone, PartialEq)]
pub struct Loop {
    pub edges: Vec<LoopEdge>,
    /// Exact signed area, positive.
    pub area: f64,
    pub perimeter: f64,
    pub bbox: (Vec2, Vec2),
    /// Counter-clockwise discretization without the closing point.
    pub polygon: Vec<Vec2>,
}

impl Loop {
    /// Loop over `edges`, discretized with sagitta at most `chord_tol`.
    pub fn new(edges: Vec<LoopEdge>, chord_tol: f64) -> Self {
        let area = edges.iter().map(|e| curve_area_term(&e.curve)).sum();
        let perimeter = edges.iter().map(|e| e.curve.length()).sum();
        let mut polygon = Vec::new();
        for e in &edges {
            let pts = e.curve.sample(chord_tol);
            polygon.extend_from_slice(&pts[..pts.len() - 1]);
        }
        let mut lo = Vec2::repeat(f64::INFINITY);
        let mut hi = Vec2::repeat(f64::NEG_INFINITY);
        for e in &edges {
            let (a, b) = e.curve.bounds();
            lo = lo.inf(&a);
            hi = hi.sup(&b);
        }
        Loop { edges, area, perimeter, bbox: (lo, hi), polygon }
    }

    pub fn ids(&self) -> Vec<&str> {
        self.edges.iter().map(|e| e.id.as_str()).collect()
    }

    /// Largest bounding-box side.
    pub fn extent(&self) -> f64 {
        (self.bbox.1 - self.bbox.0).max()
    }

    pub fn is_circle(&self) -> bool {
        self.edges.len() == 1 && matches!(self.edges[0].curve, Geometry::Circle { .. })
    }

    /// Whether every vertex of `other` is strictly inside this loop and the
    /// two boundaries never meet.
    pub fn contains(&self, other: &Loop, eps: f64) -> bool {
        let (a, b) = (&self.bbox, &other.bbox);
        if b.0.x < a.0.x - eps || b.0.y < a.0.y - eps || b.1.x > a.1.x + eps || b.1.y > a.1.y + eps {
            return false;
        }
        let inside = other
            .polygon
            .iter()
            .all(|&p| polygon_boundary_distance(p, &self.polygon) > eps && point_in_polygon(p, &self.polygon));
        inside && !boundaries_cross(&self.polygon, &other.polygon, eps)
    }
}

fn boundaries_cross(p: &[Vec2], q: &[Vec2], eps: f64) -> bool {
    let (n, m) = (p.len(), q.len());
    for i in 0..n {
        let (a, b) = (p[i], p[(i + 1) % n]);
        let (lo, hi) = (a.inf(&b), a.sup(&b));
        for j in 0..m {
            let (c, d) = (q[j], q[(j + 1) % m]);
            if c.x.max(d.x) < lo.x - eps || c.x.min(d.x) > hi.x + eps || c.y.max(d.y) < lo.y - eps || c.y.min(d.y) > hi.y + eps {
                continue;
            }
            if segments_intersect(a, b, c, d, eps) {
                return true;
            }
        }
    }
    false
}

/// Green's-theorem area contribution of an oriented curve.
pub fn curve_area_term(g: &Geometry) -> f64 {
    match *g {
        Geometry::Line { start, end } => line_area_term(start, end),
        Geometry::Circle { radius, .. } => std::f64::consts::PI * radius * radius,
        Geometry::Arc { .. } => g.arc_params().map_or(0.0, |a| arc_area_term(&a)),
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LoopSet {
    pub loops: Vec<Loop>,
    /// Primitives on no closed cycle: trees hanging off the graph and bridges.
    pub dangling: Vec<String>,
    /// Closed cycles dropped for crossing themselves, as primitive id lists.
    pub self_intersecting: Vec<Vec<String>>,
}

struct HalfEdge {
    edge: usize,
    from: usize,
    to: usize,
    reversed: bool,
}

/// Traces closed loops from the primitive connectivity.
///
/// Endpoints within `ε_geom` are merged into vertices. Trees and bridges are
/// reported as dangling. The remaining graph is walked face by face, always
/// taking the leftmost outgoing curve at a vertex (ties broken by curvature),
/// so every bounded face comes out counter-clockwise. Faces that revisit a
/// vertex are split there. A standalone circle is a loop by itself.
pub fn compute_loops(sketch: &Sketch) -> Result<LoopSet, TopologyError> {
    let sketch = canonical_sketch(sketch);
    let extent = sketch_extent(&sketch);
    let eps = geom_eps(extent);
    let chord = CHORD_TOL_REL * if extent > 0.0 { extent } else { 1.0 };
    let mut out = LoopSet::default();

    let mut edges: Vec<(&str, Geometry)> = Vec::new();
    for p in &sketch.primitives {
        match p.geometry {
            Geometry::Circle { .. } => out.loops.push(Loop::new(
                vec![LoopEdge { id: p.id.clone(), reversed: false, curve: p.geometry }],
                chord,
            )),
            g => edges.push((&p.id, g)),
        }
    }

    // vertices
    let mut verts: Vec<Vec2> = Vec::new();
    let mut vertex_of = |p: Vec2| -> usize {
        match verts.iter().position(|v| (v - p).norm() <= eps) {
            Some(i) => i,
            None => {
                verts.push(p);
                verts.len() - 1
            }
        }
    };
    let ends: Vec<(usize, usize)> = edges
        .iter()
        .map(|(_, g)| {
            let (a, b) = g.endpoints().expect("lines and arcs have endpoints");
            (vertex_of(a), vertex_of(b))
        })
        .collect();
    let nv = verts.len();

    let mut alive = vec![true; edges.len()];
    let mut dangling = BTreeSet::new();
    prune_trees(&ends, &mut alive, nv, &mut dangling);
    for e in bridges(&ends, &alive, nv) {
        alive[e] = false;
        dangling.insert(e);
    }
    prune_trees(&ends, &mut alive, nv, &mut dangling);

    // half-edges sorted counter-clockwise around each vertex
    let mut halves = Vec::new();
    for (e, &(a, b)) in ends.iter().enumerate() {
        if alive[e] {
            halves.push(HalfEdge { edge: e, from: a, to: b, reversed: false });
            halves.push(HalfEdge { edge: e, from: b, to: a, reversed: true });
        }
    }
    let oriented = |h: &HalfEdge| if h.reversed { edges[h.edge].1.reversed() } else { edges[h.edge].1 };
    let mut around: Vec<Vec<(f64, f64, usize)>> = vec![Vec::new(); nv];
    for (i, h) in halves.iter().enumerate() {
        let (angle, curvature) = departure(&oriented(h));
        around[h.from].push((angle, curvature, i));
    }
    for (v, list) in around.iter_mut().enumerate() {
        list.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        for w in list.windows(2) {
            if (w[0].0 - w[1].0).abs() <= 1e-12 && (w[0].1 - w[1].1).abs() <= 1e-12 * (1.0 + w[0].1.abs()) {
                return Err(TopologyError::AmbiguousTopology { vertex: (verts[v].x, verts[v].y) });
            }
        }
    }
    let twin = |i: usize| i ^ 1;
    // next half-edge: at the head, the outgoing edge just clockwise of the twin
    let next = |i: usize| -> usize {
        let h = &halves[i];
        let list = &around[h.to];
        let pos = list.iter().position(|x| x.2 == twin(i)).expect("twin leaves the head vertex");
        list[(pos + list.len() - 1) % list.len()].2
    };

    let mut used = vec![false; halves.len()];
    let mut seen_sets: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut in_loop = vec![false; edges.len()];
    let mut bad_edges = BTreeSet::new();
    for start in 0..halves.len() {
        if used[start] {
            continue;
        }
        let mut walk = Vec::new();
        let mut i = start;
        while !used[i] {
            used[i] = true;
            walk.push(i);
            i = next(i);
        }
        for cycle in split_at_repeats(&walk, &halves) {
            let les: Vec<LoopEdge> = cycle
                .iter()
                .map(|&i| LoopEdge {
                    id: edges[halves[i].edge].0.to_string(),
                    reversed: halves[i].reversed,
                    curve: oriented(&halves[i]),
                })
                .collect();
            let lp = Loop::new(les, chord);
            let mut key: Vec<usize> = cycle.iter().map(|&i| halves[i].edge).collect();
            key.sort_unstable();
            let simple = lp.polygon.len() >= 3 && polygon_is_simple(&lp.polygon, eps);
            if !simple {
                if seen_sets.insert(key.clone()) {
                    bad_edges.extend(key.iter().copied());
                    out.self_intersecting.push(lp.ids().iter().map(|s| s.to_string()).collect());
                }
                continue;
            }
            if lp.area > 0.0 && seen_sets.insert(key.clone()) {
                for &e in &key {
                    in_loop[e] = true;
                }
                out.loops.push(lp);
            }
        }
    }
    for e in 0..edges.len() {
        if alive[e] && !in_loop[e] && !bad_edges.contains(&e) {
            dangling.insert(e);
        }
    }
    out.dangling = dangling.into_iter().map(|e| edges[e].0.to_string()).collect();
    Ok(out)
}

/// Tangent angle and signed curvature where a curve leaves its start point.
fn departure(g: &Geometry) -> (f64, f64) {
    match *g {
        Geometry::Line { start, end } => {
            let d = end - start;
            (d.y.atan2(d.x), 0.0)
        }
        Geometry::Arc { .. } => match g.arc_params() {
            Some(a) => {
                let t = a.tangent_at(0.0);
                (t.y.atan2(t.x), a.sweep.signum() / a.radius)
            }
            None => (0.0, 0.0),
        },
        Geometry::Circle { .. } => (0.0, 0.0),
    }
}

fn prune_trees(ends: &[(usize, usize)], alive: &mut [bool], nv: usize, dangling: &mut BTreeSet<usize>) {
    loop {
        let mut degree = vec![0usize; nv];
        for (e, &(a, b)) in ends.iter().enumerate() {
            if alive[e] {
                degree[a] += 1;
                degree[b] += 1;
            }
        }
        let mut changed = false;
        for (e, &(a, b)) in ends.iter().enumerate() {
            if alive[e] && (degree[a] == 1 || degree[b] == 1 || a == b) {
                alive[e] = false;
                dangling.insert(e);
                changed = true;
            }
        }
        if !changed {
            return;
        }
    }
}

/// Bridges of the live multigraph (Tarjan low-link, parallel edges respected).
fn bridges(ends: &[(usize, usize)], alive: &[bool], nv: usize) -> Vec<usize> {
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nv];
    for (e, &(a, b)) in ends.iter().enumerate() {
        if alive[e] {
            adj[a].push((b, e));
            adj[b].push((a, e));
        }
    }
    let mut disc = vec![usize::MAX; nv];
    let mut low = vec![0; nv];
    let mut timer = 0;
    let mut out = Vec::new();
    for root in 0..nv {
        if disc[root] != usize::MAX || adj[root].is_empty() {
            continue;
        }
        // iterative DFS: (vertex, edge used to enter, next neighbour index)
        let mut stack = vec![(root, usize::MAX, 0usize)];
        disc[root] = timer;
        low[root] = timer;
        timer += 1;
        while let Some(&mut (v, via, ref mut k)) = stack.last_mut() {
            if *k < adj[v].len() {
                let (w, e) = adj[v][*k];
                *k += 1;
                if e == via {
                    continue;
                }
                if disc[w] == usize::MAX {
                    disc[w] = timer;
                    low[w] = timer;
                    timer += 1;
                    stack.push((w, e, 0));
                } else {
                    low[v] = low[v].min(disc[w]);
                }
            } else {
                stack.pop();
                if let Some(&(u, _, _)) = stack.last() {
                    low[u] = low[u].min(low[v]);
                    if low[v] > disc[u] {
                        out.push(via);
                    }
                }
            }
        }
    }
    out.sort_unstable();
    out
}

/// Splits a closed walk into simple cycles wherever it revisits a vertex.
fn split_at_repeats(walk: &[usize], halves: &[HalfEdge]) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut stack: Vec<usize> = Vec::new();
    let mut at: BTreeMap<usize, usize> = BTreeMap::new();
    if let Some(&first) = walk.first() {
        at.insert(halves[first].from, 0);
    }
    for &h in walk {
        stack.push(h);
        let v = halves[h].to;
        if let Some(&pos) = at.get(&v) {
            let cycle: Vec<usize> = stack.split_off(pos);
            for &c in &cycle {
                at.remove(&halves[c].to);
            }
            at.insert(v, stack.len());
            out.push(cycle);
        } else {
            at.insert(v, stack.len());
        }
    }
    out
}
