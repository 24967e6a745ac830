//! Loops, the outer/hole hierarchy and oriented bounding boxes of parts.

mod loops;
mod obb;

use crate::model::{geom_eps, Part};

pub use loops::{compute_loops, curve_area_term, Loop, LoopEdge, LoopSet, CHORD_TOL_REL};
pub use obb::{obb_from_points, Obb};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TopologyError {
    #[error("AMBIGUOUS_TOPOLOGY: indistinguishable curves leave vertex ({}, {})", .vertex.0, .vertex.1)]
    AmbiguousTopology { vertex: (f64, f64) },
    #[error("DEGENERATE_MODEL: part has no 3D extent")]
    DegenerateModel,
    /// A failure while building the part's solid, with that failure's code.
    #[error("{message}")]
    Execution { code: &'static str, message: String },
}

impl TopologyError {
    pub fn code(&self) -> &'static str {
        match self {
            TopologyError::AmbiguousTopology { .. } => "AMBIGUOUS_TOPOLOGY",
            TopologyError::DegenerateModel => "DEGENERATE_MODEL",
            TopologyError::Execution { code, .. } => code,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hole {
    pub name: String,
    pub lp: Loop,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OuterLoop {
    pub name: String,
    pub lp: Loop,
    pub holes: Vec<Hole>,
}

/// Outer contours with their holes, in the order they were registered.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LoopDict {
    pub outers: Vec<OuterLoop>,
}

impl LoopDict {
    pub fn hole_count(&self) -> usize {
        self.outers.iter().map(|o| o.holes.len()).sum()
    }

    pub fn get(&self, name: &str) -> Option<&OuterLoop> {
        self.outers.iter().find(|o| o.name == name)
    }
}

/// Organizes loops by descending area: each loop becomes a hole of the first
/// registered outer that contains it, otherwise a new outer. There is no
/// recursion, so an island inside a hole is a hole of the same outer.
pub fn build_loop_dict(loops: &[Loop]) -> LoopDict {
    let mut order: Vec<usize> = (0..loops.len()).collect();
    order.sort_by(|&a, &b| loops[b].area.abs().total_cmp(&loops[a].area.abs()));
    let extent = loops.iter().map(Loop::extent).fold(0.0, f64::max);
    let eps = geom_eps(extent);
    let mut dict = LoopDict::default();
    for i in order {
        let lp = &loops[i];
        let host = dict.outers.iter_mut().find(|o| o.lp.contains(lp, eps));
        match host {
            Some(outer) => {
                let k = dict_index(&outer.name);
                let name = format!("hole_{}_{}", k, outer.holes.len() + 1);
                outer.holes.push(Hole { name, lp: lp.clone() });
            }
            None => {
                let name = format!("outer_{}", dict.outers.len() + 1);
                dict.outers.push(OuterLoop { name, lp: lp.clone(), holes: Vec::new() });
            }
        }
    }
    dict
}

fn dict_index(outer_name: &str) -> usize {
    outer_name.trim_start_matches("outer_").parse().unwrap_or(0)
}

/// Oriented bounding box of a part's own solid, before any Boolean.
pub fn compute_obb(part: &Part) -> Result<Obb, TopologyError> {
    let mesh = crate::geomexec::part_mesh(part).map_err(|e| match e.code() {
        "DEGENERATE_MODEL" => TopologyError::DegenerateModel,
        code => TopologyError::Execution { code, message: e.to_string() },
    })?;
    obb_from_points(&mesh.vertices, &[part.sketch.plane.rotation()])
}
