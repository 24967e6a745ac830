//! Hierarchical face/loop sketches to flat primitive sets.
//!
//! Loops are decomposed into minimal segments, combined by parity within each
//! face and then across faces, and the source constraints are carried over to
//! the surviving fragments.

mod decompose;
mod prune;
mod segment;

use std::collections::{BTreeMap, BTreeSet};

use crate::format::{HierarchicalModel, HierarchicalSketch};
use crate::model::{
    check_constraint, geom_eps, sketch_extent, Anchor, Constraint, ConstraintKind, Document, Geometry, Metadata, Part, Primitive, Reference, Sketch,
};

pub use decompose::{decompose, symmetric_difference};
pub use prune::{prune_constraints, PruneEntry, PruneLog, PruneReason};
pub use segment::{KeyQuantizer, MinimalSegment, Multiset, SegmentKey, KEY_EPS_REL};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FlattenError {
    #[error("DEGENERATE_SEGMENT: `{id}` has a zero-length fragment")]
    DegenerateSegment { id: String },
    #[error("NON_MINIMAL_OPERANDS: `{first}` and `{second}` partially overlap")]
    NonMinimalOperands { first: String, second: String },
}

impl FlattenError {
    pub fn code(&self) -> &'static str {
        match self {
            FlattenError::DegenerateSegment { .. } => "DEGENERATE_SEGMENT",
            FlattenError::NonMinimalOperands { .. } => "NON_MINIMAL_OPERANDS",
        }
    }
}

/// Where one hierarchical segment ended up.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceRecord {
    /// The segment as stored, before traversal orientation.
    pub geometry: Geometry,
    /// Surviving flat primitive ids, ordered along the stored direction.
    pub fragments: Vec<String>,
}

/// Source segment id → record.
pub type Provenance = BTreeMap<String, SourceRecord>;

#[derive(Debug, Clone, PartialEq)]
pub struct Flattened {
    /// Flat sketch without constraints.
    pub sketch: Sketch,
    pub provenance: Provenance,
}

/// Flat primitive set of a hierarchical sketch, constraints not included.
pub fn flatten_sketch(sketch: &HierarchicalSketch) -> Result<Sketch, FlattenError> {
    flatten_with_provenance(sketch).map(|f| f.sketch)
}

pub fn flatten_with_provenance(sketch: &HierarchicalSketch) -> Result<Flattened, FlattenError> {
    let pieces = decompose(sketch)?;
    let faces = pieces
        .iter()
        .map(|face| {
            let loops: Vec<Multiset> = face.iter().map(|l| l.iter().cloned().collect()).collect();
            symmetric_difference(&loops)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let flat = symmetric_difference(&faces)?;

    let mut counters = [0usize; 3];
    let mut ids: BTreeMap<SegmentKey, String> = BTreeMap::new();
    let mut primitives = Vec::with_capacity(flat.len());
    for (key, seg, _) in flat.iter() {
        let (slot, prefix) = match key {
            SegmentKey::Line { .. } => (0, "L"),
            SegmentKey::Circle { .. } => (1, "C"),
            SegmentKey::Arc { .. } => (2, "A"),
        };
        counters[slot] += 1;
        let id = format!("{prefix}{}", counters[slot]);
        ids.insert(*key, id.clone());
        primitives.push(Primitive::new(id, seg.geometry));
    }

    let mut provenance = Provenance::new();
    let sources: BTreeMap<&str, _> = sketch.segments().map(|s| (s.id.as_str(), s)).collect();
    for seg in pieces.iter().flatten().flatten() {
        let src = sources[seg.source.as_str()];
        let rec = provenance
            .entry(seg.source.clone())
            .or_insert_with(|| SourceRecord { geometry: src.geometry, fragments: Vec::new() });
        if let Some(id) = ids.get(&seg.key) {
            if !rec.fragments.contains(id) {
                rec.fragments.push(id.clone());
            }
        }
    }
    for seg in sketch.segments() {
        if seg.reversed {
            if let Some(rec) = provenance.get_mut(&seg.id) {
                rec.fragments.reverse();
            }
        }
    }

    Ok(Flattened { sketch: Sketch::new(sketch.plane, primitives, Vec::new()), provenance })
}

/// Re-expresses each source constraint on every surviving fragment of its
/// referents. Point anchors follow the fragment that still holds that point;
/// a constraint loses nothing but its vanished referents, and is dropped once
/// any referent has no surviving fragment. Fix pins on split or reoriented
/// primitives fall back to pinning the fragment's current geometry.
pub fn migrate_constraints(source: &[Constraint], provenance: &Provenance, flat: &Sketch) -> Vec<Constraint> {
    let eps = geom_eps(sketch_extent(flat));
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for con in source {
        let choices: Vec<Vec<Reference>> = con.refs.iter().map(|r| map_reference(r, provenance, flat, eps)).collect();
        if choices.iter().any(|c| c.is_empty()) {
            continue;
        }
        for refs in cartesian(&choices) {
            let mut c = Constraint::new(con.kind, refs);
            c.pin = migrate_pin(con, &c, provenance, flat);
            if check_constraint(&c, flat).is_err() {
                continue;
            }
            if seen.insert(c.identity_key()) {
                out.push(c);
            }
        }
    }
    out
}

fn map_reference(r: &Reference, provenance: &Provenance, flat: &Sketch, eps: f64) -> Vec<Reference> {
    let Some(rec) = provenance.get(&r.id) else { return Vec::new() };
    match r.anchor {
        Anchor::Whole => rec.fragments.iter().map(Reference::whole).collect(),
        Anchor::Center => rec.fragments.iter().map(|id| Reference::at(id, Anchor::Center)).collect(),
        Anchor::Start | Anchor::End => {
            let Some(p) = rec.geometry.anchor_point(r.anchor) else { return Vec::new() };
            rec.fragments
                .iter()
                .filter_map(|id| {
                    let (s, e) = flat.primitive(id)?.geometry.endpoints()?;
                    if (s - p).norm() <= eps {
                        Some(Reference::at(id, Anchor::Start))
                    } else if (e - p).norm() <= eps {
                        Some(Reference::at(id, Anchor::End))
                    } else {
                        None
                    }
                })
                .take(1)
                .collect()
        }
    }
}

fn migrate_pin(source: &Constraint, target: &Constraint, provenance: &Provenance, flat: &Sketch) -> Option<Vec<f64>> {
    let pin = source.pin.as_ref()?;
    let (sref, tref) = (&source.refs[0], &target.refs[0]);
    if sref.anchor.is_point() {
        return Some(pin.clone());
    }
    let rec = provenance.get(&sref.id)?;
    let g = flat.primitive(&tref.id)?.geometry;
    (rec.fragments.len() == 1 && g == rec.geometry).then(|| pin.clone())
}

fn cartesian(choices: &[Vec<Reference>]) -> Vec<Vec<Reference>> {
    let mut acc: Vec<Vec<Reference>> = vec![Vec::new()];
    for opts in choices {
        acc = acc
            .iter()
            .flat_map(|prefix| {
                opts.iter().map(move |o| {
                    let mut v = prefix.clone();
                    v.push(o.clone());
                    v
                })
            })
            .collect();
    }
    acc
}

/// Continuity constraints between sibling fragments of one split source:
/// Coincident at shared endpoints, Parallel between line fragments and Equal
/// between arc fragments. Constraints already present are not repeated.
pub fn add_auxiliary_constraints(flat: &Sketch, provenance: &Provenance) -> Vec<Constraint> {
    let eps = geom_eps(sketch_extent(flat));
    let mut seen: BTreeSet<_> = flat.constraints.iter().map(Constraint::identity_key).collect();
    let mut out = Vec::new();
    let mut push = |c: Constraint, out: &mut Vec<Constraint>| {
        if seen.insert(c.identity_key()) {
            out.push(c);
        }
    };
    for rec in provenance.values() {
        for w in rec.fragments.windows(2) {
            let (Some(a), Some(b)) = (flat.primitive(&w[0]), flat.primitive(&w[1])) else { continue };
            if let Some((ea, eb)) = shared_endpoint(&a.geometry, &b.geometry, eps) {
                push(
                    Constraint::new(ConstraintKind::Coincident, vec![Reference::at(&a.id, ea), Reference::at(&b.id, eb)]),
                    &mut out,
                );
            }
            match (a.geometry, b.geometry) {
                (Geometry::Line { .. }, Geometry::Line { .. }) => {
                    push(Constraint::binary(ConstraintKind::Parallel, &a.id, &b.id), &mut out)
                }
                (Geometry::Arc { .. }, Geometry::Arc { .. }) => {
                    push(Constraint::binary(ConstraintKind::Equal, &a.id, &b.id), &mut out)
                }
                _ => {}
            }
        }
    }
    out
}

fn shared_endpoint(a: &Geometry, b: &Geometry, eps: f64) -> Option<(Anchor, Anchor)> {
    let (a0, a1) = a.endpoints()?;
    let (b0, b1) = b.endpoints()?;
    [(a1, Anchor::End, b0, Anchor::Start), (a1, Anchor::End, b1, Anchor::End), (a0, Anchor::Start, b0, Anchor::Start), (a0, Anchor::Start, b1, Anchor::End)]
        .into_iter()
        .find(|(p, _, q, _)| (p - q).norm() <= eps)
        .map(|(_, x, _, y)| (x, y))
}

/// Everything the full pipeline produced for one sketch.
#[derive(Debug, Clone, PartialEq)]
pub struct FlattenReport {
    pub sketch: Sketch,
    pub provenance: Provenance,
    pub migrated: usize,
    pub auxiliary: usize,
    pub prune_log: PruneLog,
}

/// Decompose, combine, migrate, augment and prune.
pub fn flatten_pipeline(sketch: &HierarchicalSketch) -> Result<FlattenReport, FlattenError> {
    let Flattened { sketch: mut flat, provenance } = flatten_with_provenance(sketch)?;
    let migrated = migrate_constraints(&sketch.constraints, &provenance, &flat);
    let migrated_count = migrated.len();
    flat.constraints = migrated;
    let aux = add_auxiliary_constraints(&flat, &provenance);
    let auxiliary = aux.len();
    flat.constraints.extend(aux);
    let (pruned, prune_log) = prune_constraints(&flat);
    Ok(FlattenReport { sketch: pruned, provenance, migrated: migrated_count, auxiliary, prune_log })
}

/// Flattens every sketch of a hierarchical model into one document part each.
pub fn flatten_model(model: &HierarchicalModel, source: &str) -> Result<(Document, Vec<FlattenReport>), FlattenError> {
    let mut parts = Vec::with_capacity(model.sketches.len());
    let mut reports = Vec::with_capacity(model.sketches.len());
    for (i, sk) in model.sketches.iter().enumerate() {
        let report = flatten_pipeline(sk)?;
        parts.push(Part { sketch: report.sketch.clone(), extrusion: model.extrusions[i], boolean: model.booleans[i] });
        reports.push(report);
    }
    let doc = Document { parts, metadata: Metadata { source: source.to_string(), ..Metadata::default() } };
    Ok((doc, reports))
}
