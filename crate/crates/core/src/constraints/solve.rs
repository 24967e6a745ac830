use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::model::{geom_eps, sketch_extent, ConstraintKind, PrimitiveKind, Sketch};

use super::system::{fixed_slots, ResidualSystem};
use super::{ConstraintError, Pin};

pub const MAX_ITERATIONS: usize = 200;
const LAMBDA0: f64 = 1e-3;
/// Step regularization: keeps unconstrained variables where they started.
const REGULARIZATION: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub converged: bool,
    pub iterations: usize,
    pub max_residual: f64,
    /// Convergence threshold actually used.
    pub tolerance: f64,
    pub variables: usize,
    pub residuals: usize,
    pub pins: usize,
    /// Pins left fewer free variables than residual rows.
    pub over_pinned: bool,
    /// Discrete branch choices, as (constraint index, description).
    pub branches: Vec<(usize, String)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub sketch: Sketch,
    pub report: SolveReport,
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn sum_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Damped least squares over the sketch's free parameters with `pins` held.
///
/// Fails with `INFEASIBLE` when the conflict detector finds a contradiction
/// and with `NO_CONVERGENCE` (carrying the best iterate) when the residual
/// does not fall below `1e-8 × extent` within the iteration budget.
pub fn solve(sketch: &Sketch, pins: &[Pin]) -> Result<Solution, ConstraintError> {
    let conflicts = detect_conflicts(sketch, pins);
    if !conflicts.is_empty() {
        return Err(ConstraintError::Infeasible(conflicts));
    }
    let sys = ResidualSystem::new(sketch, pins)?;
    let tol = geom_eps(sketch_extent(sketch));
    let n = sys.n_vars();
    let mut x = sys.x0();
    let mut r = sys.residuals(&x)?;
    let mut cost = sum_sq(&r);
    let mut lambda = LAMBDA0;
    let mut iterations = 0;

    while max_abs(&r) > tol && iterations < MAX_ITERATIONS && n > 0 {
        iterations += 1;
        let j = sys.jacobian(&x)?.to_dense();
        let jt = j.transpose();
        let jtj = &jt * &j;
        let g = &jt * DVector::from_column_slice(&r);
        let mut accepted = false;
        while lambda < 1e16 {
            let mut a = jtj.clone();
            for i in 0..n {
                a[(i, i)] += lambda * jtj[(i, i)] + REGULARIZATION;
            }
            let Some(step) = solve_spd(a, &g) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(xi, di)| xi - di).collect();
            match sys.residuals(&trial) {
                Ok(rt) if sum_sq(&rt) < cost => {
                    x = trial;
                    cost = sum_sq(&rt);
                    r = rt;
                    lambda = (lambda / 10.0).max(1e-12);
                    accepted = true;
                    break;
                }
                _ => lambda *= 10.0,
            }
        }
        if !accepted {
            break;
        }
    }

    let max_residual = max_abs(&r);
    let pinned = pins.len();
    let report = SolveReport {
        converged: max_residual <= tol,
        iterations,
        max_residual,
        tolerance: tol,
        variables: n,
        residuals: sys.n_residuals(),
        pins: pinned,
        over_pinned: pinned > 0 && n < sys.n_residuals(),
        branches: sys.branches().into_iter().map(|(k, d)| (k, d.to_string())).collect(),
    };
    let solution = Solution { sketch: sys.sketch_at(&x), report };
    if solution.report.converged {
        Ok(solution)
    } else {
        Err(ConstraintError::NoConvergence(Box::new(solution)))
    }
}

fn solve_spd(a: DMatrix<f64>, g: &DVector<f64>) -> Option<DVector<f64>> {
    let chol = a.cholesky()?;
    let s = chol.solve(g);
    s.iter().all(|v| v.is_finite()).then_some(s)
}

/// Contradictions provable from the constraint set alone: a direction class
/// (lines joined by Parallel) that is both horizontal and vertical, or
/// perpendicular to itself or to a class with the same axis label; and one
/// parameter pinned to two different values.
pub fn detect_conflicts(sketch: &Sketch, pins: &[Pin]) -> Vec<String> {
    use ConstraintKind as K;
    let mut out = Vec::new();
    let lines: Vec<&str> =
        sketch.primitives.iter().filter(|p| p.kind() == PrimitiveKind::Line).map(|p| p.id.as_str()).collect();
    let idx = |id: &str| lines.iter().position(|l| *l == id);
    let mut parent: Vec<usize> = (0..lines.len()).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        p[i] = r;
        r
    }
    let line_pair = |c: &crate::model::Constraint| -> Option<(usize, usize)> {
        Some((idx(&c.refs.first()?.id)?, idx(&c.refs.get(1)?.id)?))
    };
    for c in &sketch.constraints {
        if c.kind == K::Parallel {
            if let Some((a, b)) = line_pair(c) {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                parent[ra] = rb;
            }
        }
    }
    // class root → (horizontal, vertical)
    let mut axis: BTreeMap<usize, (bool, bool)> = BTreeMap::new();
    for c in &sketch.constraints {
        if matches!(c.kind, K::Horizontal | K::Vertical) {
            if let Some(a) = c.refs.first().and_then(|r| idx(&r.id)) {
                let e = axis.entry(find(&mut parent, a)).or_default();
                if c.kind == K::Horizontal {
                    e.0 = true;
                } else {
                    e.1 = true;
                }
            }
        }
    }
    for (&root, &(h, v)) in &axis {
        if h && v {
            out.push(format!("lines parallel to `{}` are required to be both horizontal and vertical", lines[root]));
        }
    }
    for c in &sketch.constraints {
        if c.kind != K::Perpendicular {
            continue;
        }
        let Some((a, b)) = line_pair(c) else { continue };
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        let (ha, va) = axis.get(&ra).copied().unwrap_or_default();
        let (hb, vb) = axis.get(&rb).copied().unwrap_or_default();
        if ra == rb {
            out.push(format!("`{}` and `{}` are required to be both parallel and perpendicular", lines[a], lines[b]));
        } else if (ha && hb) || (va && vb) {
            out.push(format!("`{}` and `{}` share an axis but are required to be perpendicular", lines[a], lines[b]));
        }
    }

    let tol = geom_eps(sketch_extent(sketch));
    let mut pinned: BTreeMap<(String, usize), f64> = BTreeMap::new();
    let mut record = |id: &str, slot: usize, v: f64, out: &mut Vec<String>| {
        match pinned.get(&(id.to_string(), slot)) {
            Some(&w) if (w - v).abs() > tol => out.push(format!("`{}` parameter {} pinned to both {} and {}", id, slot, w, v)),
            Some(_) => {}
            None => {
                pinned.insert((id.to_string(), slot), v);
            }
        }
    };
    for c in &sketch.constraints {
        if c.kind != K::Fix {
            continue;
        }
        let r = &c.refs[0];
        let Some(prim) = sketch.primitive(&r.id) else { continue };
        let target = super::residual::fix_target(c, sketch);
        let Some(slots) = fixed_slots(prim.kind(), r.anchor) else { continue };
        for (s, v) in slots.into_iter().zip(target) {
            record(&r.id, s, v, &mut out);
        }
    }
    for p in pins {
        record(&p.id, p.param, p.value, &mut out);
    }
    out
}
