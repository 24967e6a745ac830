use std::collections::BTreeMap;

use crate::geom::Vec2;
use crate::model::Geometry;

/// Relative quantization for canonical keys: `ε_key = KEY_EPS_REL × sketch extent`.
pub const KEY_EPS_REL: f64 = 1e-6;

type QPoint = (i64, i64);

/// Direction-independent identity of a minimal segment on a quantized grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SegmentKey {
    Line { a: QPoint, b: QPoint },
    Circle { center: QPoint, radius: i64 },
    /// Arc endpoints sorted; the midpoint tells the two complementary arcs apart.
    Arc { a: QPoint, b: QPoint, mid: QPoint },
}

/// Quantizer for [`SegmentKey`]s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeyQuantizer {
    pub cell: f64,
}

impl KeyQuantizer {
    pub fn for_extent(extent: f64) -> Self {
        let e = if extent > 0.0 && extent.is_finite() { extent } else { 1.0 };
        Self { cell: KEY_EPS_REL * e }
    }

    fn q(&self, v: f64) -> i64 {
        (v / self.cell).round() as i64
    }

    fn qp(&self, p: Vec2) -> QPoint {
        (self.q(p.x), self.q(p.y))
    }

    pub fn key(&self, g: &Geometry) -> SegmentKey {
        match *g {
            Geometry::Line { start, end } => {
                let (a, b) = ordered(self.qp(start), self.qp(end));
                SegmentKey::Line { a, b }
            }
            Geometry::Circle { center, radius } => SegmentKey::Circle { center: self.qp(center), radius: self.q(radius) },
            Geometry::Arc { start, mid, end } => {
                let (a, b) = ordered(self.qp(start), self.qp(end));
                let m = g.arc_params().map_or(mid, |arc| arc.point_at(0.5));
                SegmentKey::Arc { a, b, mid: self.qp(m) }
            }
        }
    }
}

fn ordered(a: QPoint, b: QPoint) -> (QPoint, QPoint) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// An atomic curve fragment: identical to or interior-disjoint from every other
/// fragment of the same sketch. Geometry is oriented in loop traversal order.
#[derive(Debug, Clone, PartialEq)]
pub struct MinimalSegment {
    pub geometry: Geometry,
    /// Id of the hierarchical segment this fragment was cut from.
    pub source: String,
    pub key: SegmentKey,
}

/// Canonical key → (representative, multiplicity ≥ 1).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Multiset {
    entries: BTreeMap<SegmentKey, (MinimalSegment, usize)>,
}

impl Multiset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, seg: MinimalSegment) {
        self.insert_n(seg, 1);
    }

    pub fn insert_n(&mut self, seg: MinimalSegment, n: usize) {
        if n == 0 {
            return;
        }
        self.entries.entry(seg.key).and_modify(|e| e.1 += n).or_insert((seg, n));
    }

    pub fn multiplicity(&self, key: &SegmentKey) -> usize {
        self.entries.get(key).map_or(0, |e| e.1)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries in key order.
    pub fn iter(&self) -> impl Iterator<Item = (&SegmentKey, &MinimalSegment, usize)> {
        self.entries.iter().map(|(k, (s, n))| (k, s, *n))
    }

    pub fn keys(&self) -> impl Iterator<Item = &SegmentKey> {
        self.entries.keys()
    }
}

impl FromIterator<MinimalSegment> for Multiset {
    fn from_iter<T: IntoIterator<Item = MinimalSegment>>(iter: T) -> Self {
        let mut m = Multiset::new();
        for s in iter {
            m.insert(s);
        }
        m
    }
}
