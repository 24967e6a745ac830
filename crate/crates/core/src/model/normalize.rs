use super::{Constraint, Document, Extrusion, Part, Sketch, SketchPlane};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NormalizeError {
    #[error("DEGENERATE_MODEL: global bounding box has zero extent")]
    DegenerateModel,
    #[error("target extent must be positive, got {0}")]
    InvalidTarget(f64),
}

impl NormalizeError {
    pub fn code(&self) -> &'static str {
        match self {
            NormalizeError::DegenerateModel => "DEGENERATE_MODEL",
            NormalizeError::InvalidTarget(_) => "INVALID_TARGET",
        }
    }
}

/// Uniformly scales the document about the world origin so that the longest
/// edge of its global bounding box equals `target_extent`. Angles are kept;
/// the applied factor is multiplied into `metadata.scale`.
pub fn normalize_document(doc: &Document, target_extent: f64) -> Result<Document, NormalizeError> {
    if !(target_extent > 0.0 && target_extent.is_finite()) {
        return Err(NormalizeError::InvalidTarget(target_extent));
    }
    let extent = doc.extent();
    if !(extent > 0.0 && extent.is_finite()) {
        return Err(NormalizeError::DegenerateModel);
    }
    let s = target_extent / extent;
    if s == 1.0 {
        return Ok(doc.clone());
    }
    let mut out = doc.clone();
    out.metadata.scale *= s;
    for part in &mut out.parts {
        *part = scale_part(part, s);
    }
    Ok(out)
}

fn scale_part(part: &Part, s: f64) -> Part {
    let sketch = &part.sketch;
    let plane = SketchPlane { translation: sketch.plane.translation * s, euler_angles: sketch.plane.euler_angles };
    let primitives = sketch
        .primitives
        .iter()
        .map(|p| super::Primitive { id: p.id.clone(), geometry: p.geometry.map(|q| q * s, |r| r * s) })
        .collect();
    // Fix pins hold coordinates or radii: all length-typed.
    let constraints = sketch
        .constraints
        .iter()
        .map(|c| Constraint { pin: c.pin.as_ref().map(|v| v.iter().map(|x| x * s).collect()), ..c.clone() })
        .collect();
    let extrusion = match part.extrusion {
        Extrusion::Linear { direction, length, symmetric, opposite_length } => Extrusion::Linear {
            direction,
            length: length * s,
            symmetric,
            opposite_length: opposite_length * s,
        },
        Extrusion::Rotated { axis_point, axis_dir, start_angle, end_angle } => {
            Extrusion::Rotated { axis_point: axis_point * s, axis_dir, start_angle, end_angle }
        }
    };
    Part { sketch: Sketch::new(plane, primitives, constraints), extrusion, boolean: part.boolean }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Vec3;
    use crate::model::{document_bounds, BooleanOp, Primitive};

    fn rect_part(w: f64, h: f64, depth: f64) -> Part {
        Part {
            sketch: Sketch::new(
                SketchPlane::default(),
                vec![
                    Primitive::line("L1", [0.0, 0.0], [w, 0.0]),
                    Primitive::line("L2", [w, 0.0], [w, h]),
                    Primitive::line("L3", [w, h], [0.0, h]),
                    Primitive::line("L4", [0.0, h], [0.0, 0.0]),
                ],
                vec![],
            ),
            extrusion: Extrusion::linear([0.0, 0.0, 1.0], depth),
            boolean: BooleanOp::NewBody,
        }
    }

    #[test]
    fn cube_halved() {
        let doc = Document::new(vec![rect_part(2.0, 2.0, 2.0)]);
        let n = normalize_document(&doc, 1.0).unwrap();
        assert_eq!(n.metadata.scale, 0.5);
        match n.parts[0].extrusion {
            Extrusion::Linear { length, .. } => assert_eq!(length, 1.0),
            _ => unreachable!(),
        }
        assert_eq!(n.parts[0].sketch.primitives[1].geometry.params(), vec![1.0, 0.0, 1.0, 1.0]);
    }

    #[test]
    fn identity_when_already_at_target() {
        let doc = Document::new(vec![rect_part(1.0, 0.5, 0.25)]);
        assert_eq!(normalize_document(&doc, 1.0).unwrap(), doc);
    }

    #[test]
    fn l_bracket_extents() {
        // L-shaped profile 4 x 2, extruded by 1
        let sketch = Sketch::new(
            SketchPlane::default(),
            vec![
                Primitive::line("L1", [0.0, 0.0], [4.0, 0.0]),
                Primitive::line("L2", [4.0, 0.0], [4.0, 0.5]),
                Primitive::line("L3", [4.0, 0.5], [0.5, 0.5]),
                Primitive::line("L4", [0.5, 0.5], [0.5, 2.0]),
                Primitive::line("L5", [0.5, 2.0], [0.0, 2.0]),
                Primitive::line("L6", [0.0, 2.0], [0.0, 0.0]),
            ],
            vec![],
        );
        let doc = Document::new(vec![Part {
            sketch,
            extrusion: Extrusion::linear([0.0, 0.0, 1.0], 1.0),
            boolean: BooleanOp::NewBody,
        }]);
        assert!((document_bounds(&doc).extents() - Vec3::new(4.0, 2.0, 1.0)).norm() < 1e-12);
        let n = normalize_document(&doc, 1.0).unwrap();
        let e = document_bounds(&n).extents();
        assert!((e - Vec3::new(1.0, 0.5, 0.25)).norm() < 1e-12, "{:?}", e);
    }

    #[test]
    fn degenerate_model_rejected() {
        let mut part = rect_part(1.0, 1.0, 1.0);
        part.sketch.primitives.clear();
        assert_eq!(
            normalize_document(&Document::new(vec![part]), 1.0).unwrap_err(),
            NormalizeError::DegenerateModel
        );
    }
}
