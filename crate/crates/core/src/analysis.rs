//! Per-part loops, hierarchy and bounding boxes, plus inter-part relations.

use rayon::prelude::*;
use serde_json::{json, Value};

use crate::geom::Vec3;
use crate::model::Document;
use crate::relations::{build_relation_table, RelationTable};
use crate::topology::{build_loop_dict, compute_loops, compute_obb, Loop, LoopDict, Obb};

#[derive(Debug, Clone, PartialEq)]
pub struct PartAnalysis {
    pub dict: LoopDict,
    pub dangling: Vec<String>,
    pub self_intersecting: Vec<Vec<String>>,
    /// Absent when the part does not execute to a solid.
    pub obb: Option<Obb>,
    /// Code and message of the first failure met while analyzing the part.
    pub error: Option<(String, String)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DocumentAnalysis {
    pub parts: Vec<PartAnalysis>,
    /// Relations among the parts that have a bounding box, keyed by part index.
    pub relations: RelationTable,
}

fn analyze_part(part: &crate::model::Part) -> PartAnalysis {
    let mut out = PartAnalysis {
        dict: LoopDict::default(),
        dangling: Vec::new(),
        self_intersecting: Vec::new(),
        obb: None,
        error: None,
    };
    match compute_loops(&part.sketch) {
        Ok(set) => {
            out.dict = build_loop_dict(&set.loops);
            out.dangling = set.dangling;
            out.self_intersecting = set.self_intersecting;
        }
        Err(e) => {
            out.error = Some((e.code().to_string(), e.to_string()));
            return out;
        }
    }
    match compute_obb(part) {
        Ok(obb) => out.obb = Some(obb),
        Err(e) => out.error = Some((e.code().to_string(), e.to_string())),
    }
    out
}

/// Analyzes every part concurrently. Failures are recorded per part and
/// never abort the document.
pub fn analyze_document(doc: &Document) -> DocumentAnalysis {
    let parts: Vec<PartAnalysis> = doc.parts.par_iter().map(analyze_part).collect();
    let with_box: Vec<(usize, Obb)> = parts.iter().enumerate().filter_map(|(i, p)| p.obb.map(|o| (i, o))).collect();
    let obbs: Vec<Obb> = with_box.iter().map(|(_, o)| *o).collect();
    let relations = build_relation_table(&obbs)
        .into_iter()
        .map(|((i, j), r)| ((with_box[i].0, with_box[j].0), r))
        .collect();
    DocumentAnalysis { parts, relations }
}

fn vec3(v: &Vec3) -> Value {
    json!([v.x, v.y, v.z])
}

fn loop_json(lp: &Loop) -> Value {
    let edges: Vec<Value> = lp.edges.iter().map(|e| json!({"id": e.id, "reversed": e.reversed})).collect();
    json!({"edges": edges, "area": lp.area, "perimeter": lp.perimeter})
}

/// Machine-readable dump of an analysis; parts and relations are 1-based.
pub fn analysis_json(analysis: &DocumentAnalysis) -> Value {
    let parts: Vec<Value> = analysis
        .parts
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let outers: Vec<Value> = p
                .dict
                .outers
                .iter()
                .map(|o| {
                    let holes: Vec<Value> =
                        o.holes.iter().map(|h| json!({"name": h.name, "loop": loop_json(&h.lp)})).collect();
                    json!({"name": o.name, "loop": loop_json(&o.lp), "holes": holes})
                })
                .collect();
            let obb = p.obb.map(|b| {
                json!({
                    "center": vec3(&b.center),
                    "axes": b.axes.iter().map(vec3).collect::<Vec<_>>(),
                    "half_extents": vec3(&b.half_extents),
                })
            });
            json!({
                "part": i + 1,
                "outers": outers,
                "dangling": p.dangling,
                "self_intersecting": p.self_intersecting,
                "obb": obb,
                "error": p.error.as_ref().map(|(c, m)| json!({"code": c, "message": m})),
            })
        })
        .collect();
    let relations: Vec<Value> = analysis
        .relations
        .iter()
        .map(|(&(i, j), r)| {
            json!({
                "from": i + 1,
                "to": j + 1,
                "type": r.rel_type.as_str(),
                "labels": r.rel_pos.iter().map(|l| l.to_string()).collect::<Vec<_>>(),
            })
        })
        .collect();
    json!({"parts": parts, "relations": relations})
}
