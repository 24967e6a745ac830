use crate::model::{Constraint, Document, Extrusion, Primitive};

/// Default grid: 1/255 of the model extent, as in 8-bit parameter schemes.
pub const DEFAULT_QUANTIZATION_STEPS: u32 = 255;

/// Export-time quantizer: rounds every coordinate and length to a grid of
/// `extent / steps`. Angles and unit directions are left untouched. In-memory
/// documents are never quantized implicitly.
pub fn quantize_document(doc: &Document, steps: u32) -> Document {
    let extent = doc.extent();
    if !(extent > 0.0) || steps == 0 {
        return doc.clone();
    }
    let cell = extent / steps as f64;
    let q = |v: f64| (v / cell).round() * cell;
    let mut out = doc.clone();
    for part in &mut out.parts {
        let sk = &mut part.sketch;
        sk.plane.translation = sk.plane.translation.map(q);
        sk.primitives = sk
            .primitives
            .iter()
            .map(|p| Primitive { id: p.id.clone(), geometry: p.geometry.map(|v| v.map(q), q) })
            .collect();
        sk.constraints = sk
            .constraints
            .iter()
            .map(|c| Constraint { pin: c.pin.as_ref().map(|p| p.iter().map(|&v| q(v)).collect()), ..c.clone() })
            .collect();
        part.extrusion = match part.extrusion {
            Extrusion::Linear { direction, length, symmetric, opposite_length } => Extrusion::Linear {
                direction,
                length: q(length),
                symmetric,
                opposite_length: q(opposite_length),
            },
            Extrusion::Rotated { axis_point, axis_dir, start_angle, end_angle } => {
                Extrusion::Rotated { axis_point: axis_point.map(q), axis_dir, start_angle, end_angle }
            }
        };
    }
    out
}
