use rayon::prelude::*;

use crate::geom::Vec3;
use crate::model::Document;

use super::{execute_document, execute_document_at, ExecError, DEFAULT_RESOLUTION};

/// Surface samples per solid for Chamfer Distance.
pub const DEFAULT_SAMPLES: usize = 2000;
/// Seed for surface sampling, shared by documents and references.
pub const SAMPLE_SEED: u64 = 0x5eed;
/// Display factor for Chamfer Distance in result tables.
pub const CHAMFER_DISPLAY_SCALE: f64 = 1e3;

/// Static 3-d tree over a point set for nearest-neighbour queries.
struct KdTree<'a> {
    points: &'a [Vec3],
    /// Implicit tree: the median of each index range is its node.
    order: Vec<usize>,
}

impl<'a> KdTree<'a> {
    fn new(points: &'a [Vec3]) -> Self {
        let mut order: Vec<usize> = (0..points.len()).collect();
        Self::build(points, &mut order, 0);
        KdTree { points, order }
    }

    fn build(points: &[Vec3], idx: &mut [usize], depth: usize) {
        if idx.len() <= 1 {
            return;
        }
        let axis = depth % 3;
        let mid = idx.len() / 2;
        idx.select_nth_unstable_by(mid, |&a, &b| points[a][axis].total_cmp(&points[b][axis]));
        let (left, right) = idx.split_at_mut(mid);
        Self::build(points, left, depth + 1);
        Self::build(points, &mut right[1..], depth + 1);
    }

    /// Smallest squared distance from `q` to the set.
    fn nearest_sq(&self, q: &Vec3) -> f64 {
        let mut best = f64::INFINITY;
        self.search(q, 0, self.order.len(), 0, &mut best);
        best
    }

    fn search(&self, q: &Vec3, lo: usize, hi: usize, depth: usize, best: &mut f64) {
        if lo >= hi {
            return;
        }
        let mid = lo + (hi - lo) / 2;
        let p = &self.points[self.order[mid]];
        let d = (p - q).norm_squared();
        if d < *best {
            *best = d;
        }
        let axis = depth % 3;
        let diff = q[axis] - p[axis];
        let (near, far) = if diff < 0.0 { ((lo, mid), (mid + 1, hi)) } else { ((mid + 1, hi), (lo, mid)) };
        self.search(q, near.0, near.1, depth + 1, best);
        if diff * diff < *best {
            self.search(q, far.0, far.1, depth + 1, best);
        }
    }
}

fn mean_nearest(from: &[Vec3], to: &[Vec3]) -> f64 {
    let tree = KdTree::new(to);
    let d: Vec<f64> = from.par_iter().map(|p| tree.nearest_sq(p)).collect();
    d.iter().sum::<f64>() / from.len() as f64
}

/// Symmetric Chamfer Distance with squared distances:
/// `mean_a min_b |a-b|² + mean_b min_a |a-b|²`.
pub fn chamfer_distance(a: &[Vec3], b: &[Vec3]) -> Result<f64, ExecError> {
    if a.is_empty() || b.is_empty() {
        return Err(ExecError::EmptySet);
    }
    Ok(mean_nearest(a, b) + mean_nearest(b, a))
}

/// Outcome of executing one document.
#[derive(Debug, Clone, PartialEq)]
pub struct DocumentStatus {
    pub index: usize,
    /// Error code and message when execution failed.
    pub error: Option<(String, String)>,
    /// Raw Chamfer Distance to the reference, when one was given.
    pub chamfer: Option<f64>,
}

impl DocumentStatus {
    pub fn ok(&self) -> bool {
        self.error.is_none()
    }
}

/// Invalidity ratio and Chamfer statistics over a batch.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub total: usize,
    pub failures: usize,
    /// Failed executions over total.
    pub invalidity: f64,
    /// Raw mean Chamfer Distance over successes with references.
    pub avg_chamfer: Option<f64>,
    pub median_chamfer: Option<f64>,
    pub statuses: Vec<DocumentStatus>,
}

impl MetricReport {
    pub fn from_statuses(statuses: Vec<DocumentStatus>) -> Self {
        let total = statuses.len();
        let failures = statuses.iter().filter(|s| !s.ok()).count();
        let invalidity = if total == 0 { 0.0 } else { failures as f64 / total as f64 };
        let mut cds: Vec<f64> = statuses.iter().filter(|s| s.ok()).filter_map(|s| s.chamfer).collect();
        cds.sort_by(f64::total_cmp);
        let avg_chamfer = (!cds.is_empty()).then(|| cds.iter().sum::<f64>() / cds.len() as f64);
        let median_chamfer = (!cds.is_empty()).then(|| {
            let m = cds.len() / 2;
            if cds.len() % 2 == 1 {
                cds[m]
            } else {
                0.5 * (cds[m - 1] + cds[m])
            }
        });
        MetricReport { total, failures, invalidity, avg_chamfer, median_chamfer, statuses }
    }

    /// Mean and median Chamfer Distance in display units.
    pub fn scaled_chamfer(&self) -> (Option<f64>, Option<f64>) {
        (self.avg_chamfer.map(|c| c * CHAMFER_DISPLAY_SCALE), self.median_chamfer.map(|c| c * CHAMFER_DISPLAY_SCALE))
    }
}

/// Surface samples of a document's executed solid.
pub fn document_samples(doc: &Document, n: usize, seed: u64) -> Result<Vec<Vec3>, ExecError> {
    document_samples_at(doc, n, seed, DEFAULT_RESOLUTION)
}

/// Surface samples at a given field resolution.
pub fn document_samples_at(doc: &Document, n: usize, seed: u64, resolution: usize) -> Result<Vec<Vec3>, ExecError> {
    let exec = execute_document_at(doc, resolution)?;
    let pts = exec.field.surface_samples(n, seed);
    if pts.is_empty() {
        return Err(ExecError::EmptySet);
    }
    Ok(pts)
}

/// Executes every document concurrently and scores it against the matching
/// reference point set, if any.
pub fn batch_metrics(docs: &[Document], references: Option<&[Vec<Vec3>]>) -> MetricReport {
    let statuses = docs
        .par_iter()
        .enumerate()
        .map(|(index, doc)| {
            let reference = references.and_then(|r| r.get(index));
            let result = match reference {
                Some(r) => document_samples(doc, DEFAULT_SAMPLES, SAMPLE_SEED).and_then(|p| chamfer_distance(&p, r).map(Some)),
                None => execute_document(doc).map(|_| None),
            };
            match result {
                Ok(chamfer) => DocumentStatus { index, error: None, chamfer },
                Err(e) => DocumentStatus { index, error: Some((e.code().to_string(), e.to_string())), chamfer: None },
            }
        })
        .collect();
    MetricReport::from_statuses(statuses)
}
