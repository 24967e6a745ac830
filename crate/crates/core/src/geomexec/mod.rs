//! Execution of documents to solids: profiles from loops, linear and rotated
//! extrusion to closed meshes, Booleans on a sampled field, and the
//! geometric evaluation metrics.

mod extrude;
mod field;
mod mesh;
mod metrics;
mod profile;

use crate::geom::Aabb3;
use crate::model::{Document, Extrusion, Part};
use crate::topology::{build_loop_dict, compute_loops, TopologyError};

pub use extrude::{extrude_linear, extrude_rotated, extrude_span, REVOLVE_STEPS};
pub use field::{apply_boolean, SolidField, DEFAULT_RESOLUTION};
pub use mesh::{read_xyz, write_xyz, Mesh};
pub use metrics::{
    batch_metrics, chamfer_distance, document_samples, document_samples_at, DocumentStatus, MetricReport, CHAMFER_DISPLAY_SCALE, DEFAULT_SAMPLES,
    SAMPLE_SEED,
};
pub use profile::{build_profile, build_profiles, Profile};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExecError {
    #[error("SELF_INTERSECTING_PROFILE: a profile boundary crosses itself")]
    SelfIntersectingProfile,
    #[error("DEGENERATE_DIRECTION: extrusion direction is zero or lies in the sketch plane")]
    DegenerateDirection,
    #[error("DEGENERATE_EXTRUSION: extrusion sweeps no length or angle")]
    DegenerateExtrusion,
    #[error("PROFILE_CROSSES_AXIS: revolution axis passes through the profile")]
    ProfileCrossesAxis,
    #[error("OPEN_PROFILE: sketch has no closed loop")]
    OpenProfile,
    #[error("DEGENERATE_MODEL: document has no 3D extent")]
    DegenerateModel,
    #[error("EMPTY_SET: point set is empty")]
    EmptySet,
    #[error("{0}")]
    Topology(#[from] TopologyError),
    #[error("EXECUTION_FAILED at part {part}: {source}")]
    ExecutionFailed { part: usize, source: Box<ExecError> },
}

impl ExecError {
    pub fn code(&self) -> &'static str {
        match self {
            ExecError::SelfIntersectingProfile => "SELF_INTERSECTING_PROFILE",
            ExecError::DegenerateDirection => "DEGENERATE_DIRECTION",
            ExecError::DegenerateExtrusion => "DEGENERATE_EXTRUSION",
            ExecError::ProfileCrossesAxis => "PROFILE_CROSSES_AXIS",
            ExecError::OpenProfile => "OPEN_PROFILE",
            ExecError::DegenerateModel => "DEGENERATE_MODEL",
            ExecError::EmptySet => "EMPTY_SET",
            ExecError::Topology(e) => e.code(),
            ExecError::ExecutionFailed { .. } => "EXECUTION_FAILED",
        }
    }

    /// The failure underneath any `ExecutionFailed` wrapper.
    pub fn root(&self) -> &ExecError {
        match self {
            ExecError::ExecutionFailed { source, .. } => source.root(),
            e => e,
        }
    }
}

/// Closed mesh of one part's own solid: every solid region of its sketch,
/// extruded. Regions are disjoint, so the shells are simply collected.
pub fn part_mesh(part: &Part) -> Result<Mesh, ExecError> {
    let loops = compute_loops(&part.sketch)?;
    if !loops.self_intersecting.is_empty() {
        return Err(ExecError::SelfIntersectingProfile);
    }
    if loops.loops.is_empty() {
        return Err(ExecError::OpenProfile);
    }
    let profiles = build_profiles(&build_loop_dict(&loops.loops))?;
    let plane = &part.sketch.plane;
    let mut mesh = Mesh::default();
    for profile in &profiles {
        let shell = match part.extrusion {
            Extrusion::Linear { direction, .. } => {
                let (lo, hi) = part.extrusion.linear_span().expect("linear extrusion has a span");
                extrude_span(profile, plane, direction, lo, hi)?
            }
            Extrusion::Rotated { axis_point, axis_dir, start_angle, end_angle } => {
                extrude_rotated(profile, plane, axis_point, axis_dir, start_angle, end_angle)?
            }
        };
        mesh.append(&shell);
    }
    Ok(mesh)
}

/// Result of a successful execution.
#[derive(Debug, Clone)]
pub struct Execution {
    pub field: SolidField,
    /// Each part's own solid, before Booleans.
    pub meshes: Vec<Mesh>,
}

/// Padded box around every part so no surface sits on the grid border.
fn scene_bounds(meshes: &[Mesh]) -> Result<Aabb3, ExecError> {
    let mut b = Aabb3::empty();
    for m in meshes {
        b.merge(&m.bounds());
    }
    let e = b.extents();
    if b.is_empty() || e.min() <= 0.0 {
        return Err(ExecError::DegenerateModel);
    }
    let pad = crate::geom::Vec3::repeat(0.01 * e.max());
    Ok(Aabb3 { min: b.min - pad, max: b.max + pad })
}

/// Executes parts in order at the default field resolution.
pub fn execute_document(doc: &Document) -> Result<Execution, ExecError> {
    execute_document_at(doc, DEFAULT_RESOLUTION)
}

/// Executes parts in order; the first failing part is reported 1-based.
pub fn execute_document_at(doc: &Document, resolution: usize) -> Result<Execution, ExecError> {
    let meshes = doc
        .parts
        .iter()
        .enumerate()
        .map(|(i, p)| part_mesh(p).map_err(|e| ExecError::ExecutionFailed { part: i + 1, source: Box::new(e) }))
        .collect::<Result<Vec<_>, _>>()?;
    if meshes.is_empty() {
        return Err(ExecError::DegenerateModel);
    }
    let bounds = scene_bounds(&meshes)?;
    let mut field = SolidField::empty(bounds, resolution);
    for (part, mesh) in doc.parts.iter().zip(&meshes) {
        field = apply_boolean(&field, mesh, part.boolean);
    }
    Ok(Execution { field, meshes })
}
