//! Pairwise spatial relations between parts from their oriented bounding boxes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rayon::prelude::*;

use crate::geom::Vec3;
use crate::topology::Obb;

/// Significance threshold for directional labels, relative to the summed
/// projected half-widths of the two boxes.
pub const THETA_DIR: f64 = 0.25;

/// Cross-product axes shorter than this are skipped as parallel edges.
const MIN_CROSS_NORM: f64 = 1e-9;

/// Contact tolerance for a pair: `1e-6` of the mean box diagonal.
pub fn touch_eps(a: &Obb, b: &Obb) -> f64 {
    1e-6 * 0.5 * (a.diagonal() + b.diagonal())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RelType {
    Separate,
    Touch,
    Intersect,
    Contain,
    Contained,
}

impl RelType {
    pub fn as_str(self) -> &'static str {
        match self {
            RelType::Separate => "Separate",
            RelType::Touch => "Touch",
            RelType::Intersect => "Intersect",
            RelType::Contain => "Contain",
            RelType::Contained => "Contained",
        }
    }

    /// The relation seen from the other part.
    pub fn dual(self) -> Self {
        match self {
            RelType::Contain => RelType::Contained,
            RelType::Contained => RelType::Contain,
            r => r,
        }
    }
}

impl fmt::Display for RelType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// World-frame direction of one part's centroid relative to another's.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DirLabel {
    /// World axis index: 0 for X, 1 for Y, 2 for Z.
    pub axis: usize,
    pub positive: bool,
}

impl DirLabel {
    pub fn flipped(self) -> Self {
        DirLabel { axis: self.axis, positive: !self.positive }
    }
}

impl fmt::Display for DirLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.positive { '+' } else { '-' };
        write!(f, "{sign}{}", ['X', 'Y', 'Z'][self.axis])
    }
}

/// A candidate axis and the signed gap between the two projections on it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisGap {
    pub axis: Vec3,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SatResult {
    pub collides: bool,
    /// Axes whose gap is at least `-ε_touch`.
    pub sep_axes: Vec<AxisGap>,
}

/// Candidate separating axes: both boxes' face normals and the non-degenerate
/// pairwise edge crosses.
fn candidate_axes(a: &Obb, b: &Obb) -> Vec<Vec3> {
    let mut axes: Vec<Vec3> = a.axes.iter().chain(&b.axes).copied().collect();
    for x in &a.axes {
        for y in &b.axes {
            let c = x.cross(y);
            let n = c.norm();
            if n >= MIN_CROSS_NORM {
                axes.push(c / n);
            }
        }
    }
    axes
}

fn gap_on(a: &Obb, b: &Obb, axis: &Vec3) -> f64 {
    (b.center - a.center).dot(axis).abs() - a.projected_radius(axis) - b.projected_radius(axis)
}

/// Separating Axis Theorem over the 15 box axes.
pub fn sat_test(a: &Obb, b: &Obb) -> SatResult {
    let eps = touch_eps(a, b);
    let mut collides = true;
    let mut sep_axes = Vec::new();
    for axis in candidate_axes(a, b) {
        let gap = gap_on(a, b, &axis);
        if gap > eps {
            collides = false;
        }
        if gap >= -eps {
            sep_axes.push(AxisGap { axis, gap });
        }
    }
    SatResult { collides, sep_axes }
}

/// Whether every corner of `inner` lies strictly inside `outer` by more than `eps`.
fn corners_inside(inner: &Obb, outer: &Obb, eps: f64) -> bool {
    inner.corners().iter().all(|p| {
        let d = p - outer.center;
        (0..3).all(|k| d.dot(&outer.axes[k]).abs() < outer.half_extents[k] - eps)
    })
}

/// Relation of `a` to `b`, tested in the order separate, contained, contain,
/// touch, intersect.
pub fn classify_relation(a: &Obb, b: &Obb) -> RelType {
    let sat = sat_test(a, b);
    let eps = touch_eps(a, b);
    if !sat.collides {
        RelType::Separate
    } else if corners_inside(a, b, eps) {
        RelType::Contained
    } else if corners_inside(b, a, eps) {
        RelType::Contain
    } else if sat.sep_axes.iter().any(|g| g.gap.abs() <= eps) {
        RelType::Touch
    } else {
        RelType::Intersect
    }
}

/// Where `b` lies relative to `a`: a label per world axis whose centroid
/// offset exceeds `THETA_DIR` of the summed projected half-widths.
pub fn directional_labels(a: &Obb, b: &Obb) -> BTreeSet<DirLabel> {
    let offset = b.center - a.center;
    let mut out = BTreeSet::new();
    for axis in 0..3 {
        let e = Vec3::ith(axis, 1.0);
        let threshold = THETA_DIR * (a.projected_radius(&e) + b.projected_radius(&e));
        if offset[axis].abs() > threshold {
            out.insert(DirLabel { axis, positive: offset[axis] > 0.0 });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relation {
    pub rel_type: RelType,
    pub rel_pos: BTreeSet<DirLabel>,
}

/// Relations for every ordered pair of distinct parts, keyed by 0-based index.
pub type RelationTable = BTreeMap<(usize, usize), Relation>;

pub fn build_relation_table(obbs: &[Obb]) -> RelationTable {
    let n = obbs.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).collect();
    pairs
        .into_par_iter()
        .map(|(i, j)| {
            let rel = Relation {
                rel_type: classify_relation(&obbs[i], &obbs[j]),
                rel_pos: directional_labels(&obbs[i], &obbs[j]),
            };
            ((i, j), rel)
        })
        .collect()
}
