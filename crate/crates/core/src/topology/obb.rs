use nalgebra::SymmetricEigen;

use crate::geom::{cross2, Mat3, Vec2, Vec3};

use super::TopologyError;

/// Oriented bounding box. Axes are orthonormal and sorted by decreasing
/// half-extent; each axis is signed so its largest component is positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Obb {
    pub center: Vec3,
    pub axes: [Vec3; 3],
    pub half_extents: Vec3,
}

impl Obb {
    pub fn volume(&self) -> f64 {
        8.0 * self.half_extents.x * self.half_extents.y * self.half_extents.z
    }

    pub fn diagonal(&self) -> f64 {
        2.0 * self.half_extents.norm()
    }

    pub fn corners(&self) -> [Vec3; 8] {
        let mut out = [Vec3::zeros(); 8];
        for (i, c) in out.iter_mut().enumerate() {
            let s = |b: usize| if i >> b & 1 == 1 { 1.0 } else { -1.0 };
            *c = self.center
                + self.axes[0] * (s(0) * self.half_extents.x)
                + self.axes[1] * (s(1) * self.half_extents.y)
                + self.axes[2] * (s(2) * self.half_extents.z);
        }
        out
    }

    /// Whether `p` lies within the box grown by `slack` on every side.
    pub fn contains(&self, p: Vec3, slack: f64) -> bool {
        let d = p - self.center;
        (0..3).all(|k| d.dot(&self.axes[k]).abs() <= self.half_extents[k] + slack)
    }

    /// Half-width of the box's projection onto a unit direction.
    pub fn projected_radius(&self, dir: &Vec3) -> f64 {
        (0..3).map(|k| self.half_extents[k] * self.axes[k].dot(dir).abs()).sum()
    }

    /// Axis-aligned box from corner extremes.
    pub fn axis_aligned(min: Vec3, max: Vec3) -> Self {
        let he = (max - min) * 0.5;
        canonical(min + he, [Vec3::x(), Vec3::y(), Vec3::z()], he)
    }

    /// Applies a rigid motion `p ↦ R·p + t`.
    pub fn transformed(&self, r: &Mat3, t: &Vec3) -> Self {
        canonical(r * self.center + t, self.axes.map(|a| r * a), self.half_extents)
    }
}

fn canonical(center: Vec3, axes: [Vec3; 3], half: Vec3) -> Obb {
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&a, &b| half[b].total_cmp(&half[a]));
    let axes = idx.map(|i| {
        let a = axes[i];
        let k = a.iamax();
        if a[k] < 0.0 {
            -a
        } else {
            a
        }
    });
    Obb { center, axes, half_extents: Vec3::new(half[idx[0]], half[idx[1]], half[idx[2]]) }
}

/// Tight box of `points` in the frame whose columns are `frame`.
fn fit_in_frame(points: &[Vec3], frame: &Mat3) -> Obb {
    let axes = [frame.column(0).into_owned(), frame.column(1).into_owned(), frame.column(2).into_owned()];
    let mut lo = Vec3::repeat(f64::INFINITY);
    let mut hi = Vec3::repeat(f64::NEG_INFINITY);
    for p in points {
        let q = Vec3::new(p.dot(&axes[0]), p.dot(&axes[1]), p.dot(&axes[2]));
        lo = lo.inf(&q);
        hi = hi.sup(&q);
    }
    let mid = (lo + hi) * 0.5;
    let center = axes[0] * mid.x + axes[1] * mid.y + axes[2] * mid.z;
    canonical(center, axes, (hi - lo) * 0.5)
}

fn orthonormal(frame: Mat3) -> Mat3 {
    let a = frame.column(0).normalize();
    let b = (frame.column(1) - a * a.dot(&frame.column(1))).normalize();
    Mat3::from_columns(&[a, b, a.cross(&b)])
}

fn convex_hull(mut pts: Vec<Vec2>) -> Vec<Vec2> {
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<Vec2> = Vec::with_capacity(pts.len() * 2);
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Vec2>> = if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
        for &p in iter {
            while hull.len() >= start + 2 && cross2(hull[hull.len() - 1] - hull[hull.len() - 2], p - hull[hull.len() - 2]) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

/// In-plane direction minimizing the bounding rectangle area of `pts`,
/// by checking every hull edge direction (rotating calipers).
fn min_area_direction(pts: Vec<Vec2>) -> Vec2 {
    let hull = convex_hull(pts);
    let mut best = (f64::INFINITY, Vec2::x());
    for i in 0..hull.len() {
        let e = hull[(i + 1) % hull.len()] - hull[i];
        let n = e.norm();
        if n == 0.0 {
            continue;
        }
        let u = e / n;
        let v = Vec2::new(-u.y, u.x);
        let (mut a0, mut a1, mut b0, mut b1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for p in &hull {
            let (a, b) = (p.dot(&u), p.dot(&v));
            a0 = a0.min(a);
            a1 = a1.max(a);
            b0 = b0.min(b);
            b1 = b1.max(b);
        }
        let area = (a1 - a0) * (b1 - b0);
        if area < best.0 - 1e-15 * area.abs() {
            best = (area, u);
        }
    }
    best.1
}

/// Frames obtained by keeping axis `k` of `frame` and fitting the other two
/// to the minimum-area rectangle of the projected points.
fn caliper_frames(points: &[Vec3], frame: &Mat3) -> Vec<Mat3> {
    (0..3)
        .map(|k| {
            let n = frame.column(k).into_owned();
            let u0 = frame.column((k + 1) % 3).into_owned();
            let v0 = n.cross(&u0);
            let proj: Vec<Vec2> = points.iter().map(|p| Vec2::new(p.dot(&u0), p.dot(&v0))).collect();
            let d = min_area_direction(proj);
            let u = u0 * d.x + v0 * d.y;
            Mat3::from_columns(&[u, n.cross(&u), n])
        })
        .collect()
}

/// Principal axes of the point covariance.
fn pca_frame(points: &[Vec3]) -> Mat3 {
    let n = points.len() as f64;
    let mean = points.iter().fold(Vec3::zeros(), |a, p| a + p) / n;
    let mut cov = Mat3::zeros();
    for p in points {
        let d = p - mean;
        cov += d * d.transpose();
    }
    let eig = SymmetricEigen::new(cov / n);
    orthonormal(eig.eigenvectors)
}

/// Near-minimal-volume box around `points`.
///
/// Candidates are the principal axes, the world axes and any `hints`, each
/// refined by keeping one axis and fitting the other two exactly with
/// rotating calipers on the projected hull. The smallest volume wins, so the
/// result is never larger than the principal-axes box.
pub fn obb_from_points(points: &[Vec3], hints: &[Mat3]) -> Result<Obb, TopologyError> {
    if points.is_empty() {
        return Err(TopologyError::DegenerateModel);
    }
    let (mut lo, mut hi) = (points[0], points[0]);
    for p in points {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    if !((hi - lo).max() > 0.0) {
        return Err(TopologyError::DegenerateModel);
    }
    let mut bases = vec![pca_frame(points), Mat3::identity()];
    bases.extend(hints.iter().map(|h| orthonormal(*h)));
    let mut best: Option<Obb> = None;
    let score = |b: &Obb| (b.volume(), b.half_extents.sum());
    for base in &bases {
        let mut frames = vec![*base];
        frames.extend(caliper_frames(points, base));
        for f in frames {
            let cand = fit_in_frame(points, &f);
            let better = match &best {
                None => true,
                Some(b) => {
                    let (sv, ss) = score(&cand);
                    let (bv, bs) = score(b);
                    sv < bv * (1.0 - 1e-12) || (sv <= bv * (1.0 + 1e-12) && ss < bs * (1.0 - 1e-12))
                }
            };
            if better {
                best = Some(cand);
            }
        }
    }
    Ok(best.expect("at least one candidate"))
}
