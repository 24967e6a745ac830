use std::collections::BTreeSet;

use crate::constraints::residual_norm;
use crate::model::{Constraint, ConstraintKind, Sketch};

#[derive(Debug, Clone, PartialEq)]
pub enum PruneReason {
    Duplicate,
    /// Follows from the listed constraints.
    Implied(Vec<Constraint>),
    /// Contradicts `with`; the one fitting current geometry worse goes.
    Conflict { with: Constraint, dropped_residual: f64, kept_residual: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PruneEntry {
    pub constraint: Constraint,
    pub reason: PruneReason,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PruneLog {
    pub entries: Vec<PruneEntry>,
}

/// Removes duplicates, resolves contradictions and drops implied constraints.
///
/// The rule table is closed; anything it does not name is kept:
/// * duplicates, symmetric kinds compared unordered;
/// * Horizontal(x) with Vertical(x), and Parallel(a,b) with Perpendicular(a,b):
///   the one with the larger residual on current geometry is dropped
///   (Vertical and Perpendicular lose ties);
/// * Parallel(a,b) when a and b are both Horizontal or both Vertical;
/// * Perpendicular(a,b) when one is Horizontal and the other Vertical.
pub fn prune_constraints(sketch: &Sketch) -> (Sketch, PruneLog) {
    use ConstraintKind as K;
    let mut log = PruneLog::default();
    let mut seen = BTreeSet::new();
    let mut kept: Vec<Constraint> = Vec::new();
    for c in &sketch.constraints {
        if seen.insert(c.identity_key()) {
            kept.push(c.clone());
        } else {
            log.entries.push(PruneEntry { constraint: c.clone(), reason: PruneReason::Duplicate });
        }
    }

    let unary = |kind: K, id: &str| Constraint::unary(kind, id);
    let same_pair = |a: &Constraint, b: &Constraint| {
        let mut x: Vec<_> = a.refs.iter().collect();
        let mut y: Vec<_> = b.refs.iter().collect();
        x.sort();
        y.sort();
        x == y
    };

    // contradictions
    let mut drop = vec![false; kept.len()];
    for i in 0..kept.len() {
        for j in 0..kept.len() {
            if drop[i] || drop[j] || i == j {
                continue;
            }
            let (a, b) = (&kept[i], &kept[j]);
            let clash = match (a.kind, b.kind) {
                (K::Horizontal, K::Vertical) => a.refs == b.refs,
                (K::Parallel, K::Perpendicular) => same_pair(a, b),
                _ => false,
            };
            if !clash {
                continue;
            }
            let (Ok(ra), Ok(rb)) = (residual_norm(a, sketch), residual_norm(b, sketch)) else { continue };
            let (loser, winner, rl, rw) = if ra > rb { (i, j, ra, rb) } else { (j, i, rb, ra) };
            drop[loser] = true;
            log.entries.push(PruneEntry {
                constraint: kept[loser].clone(),
                reason: PruneReason::Conflict { with: kept[winner].clone(), dropped_residual: rl, kept_residual: rw },
            });
        }
    }
    let kept: Vec<Constraint> = kept.into_iter().zip(drop).filter(|(_, d)| !d).map(|(c, _)| c).collect();

    // implications
    let keys: BTreeSet<_> = kept.iter().map(Constraint::identity_key).collect();
    let has = |kind: K, id: &str| keys.contains(&unary(kind, id).identity_key());
    let mut out = Vec::with_capacity(kept.len());
    for c in kept.iter() {
        let implied_by = match c.kind {
            K::Parallel | K::Perpendicular => {
                let (a, b) = (c.refs[0].id.as_str(), c.refs[1].id.as_str());
                let pairs: &[(K, K)] = if c.kind == K::Parallel {
                    &[(K::Horizontal, K::Horizontal), (K::Vertical, K::Vertical)]
                } else {
                    &[(K::Horizontal, K::Vertical), (K::Vertical, K::Horizontal)]
                };
                pairs
                    .iter()
                    .find(|(ka, kb)| has(*ka, a) && has(*kb, b))
                    .map(|(ka, kb)| vec![unary(*ka, a), unary(*kb, b)])
            }
            _ => None,
        };
        match implied_by {
            Some(by) => log.entries.push(PruneEntry { constraint: c.clone(), reason: PruneReason::Implied(by) }),
            None => out.push(c.clone()),
        }
    }

    let mut pruned = sketch.clone();
    pruned.constraints = out;
    (pruned, log)
}
