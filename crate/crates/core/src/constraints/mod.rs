//! Constraint residuals, satisfaction checks and a damped least-squares
//! solver that propagates parameter edits.

mod dual;
mod residual;
mod solve;
mod system;

use std::fmt;

use crate::model::{PrimitiveKind, Sketch};

pub use dual::{Dual, Real};
pub use residual::{residual, residual_norm, Branch};
pub use solve::{detect_conflicts, solve, Solution, SolveReport, MAX_ITERATIONS};
pub use system::{jacobian, ResidualSystem, SparseMatrix};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConstraintError {
    #[error("UNDEFINED_RESIDUAL: {0}")]
    UndefinedResidual(String),
    #[error("INVALID_CONSTRAINT: {0}")]
    Invalid(String),
    #[error("UNKNOWN_VARIABLE: `{0}`")]
    UnknownVariable(String),
    #[error("INFEASIBLE: {}", .0.join("; "))]
    Infeasible(Vec<String>),
    #[error("NO_CONVERGENCE: max residual {} after {} iterations", .0.report.max_residual, .0.report.iterations)]
    NoConvergence(Box<Solution>),
}

impl ConstraintError {
    pub fn code(&self) -> &'static str {
        match self {
            ConstraintError::UndefinedResidual(_) => "UNDEFINED_RESIDUAL",
            ConstraintError::Invalid(_) => "INVALID_CONSTRAINT",
            ConstraintError::UnknownVariable(_) => "UNKNOWN_VARIABLE",
            ConstraintError::Infeasible(_) => "INFEASIBLE",
            ConstraintError::NoConvergence(_) => "NO_CONVERGENCE",
        }
    }
}

/// A parameter held at a value during solving, addressed as `id.param`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pin {
    pub id: String,
    /// Index into the primitive's stored parameters.
    pub param: usize,
    /// Parameter name, as in [`param_names`].
    pub name: &'static str,
    pub value: f64,
}

const LINE_PARAMS: [&str; 4] = ["start.x", "start.y", "end.x", "end.y"];
const CIRCLE_PARAMS: [&str; 3] = ["center.x", "center.y", "radius"];
const ARC_PARAMS: [&str; 6] = ["start.x", "start.y", "mid.x", "mid.y", "end.x", "end.y"];

/// Names of a primitive kind's stored parameters, in storage order.
pub fn param_names(kind: PrimitiveKind) -> &'static [&'static str] {
    match kind {
        PrimitiveKind::Line => &LINE_PARAMS,
        PrimitiveKind::Circle => &CIRCLE_PARAMS,
        PrimitiveKind::Arc => &ARC_PARAMS,
    }
}

impl Pin {
    /// Resolves a path such as `L1.start.x` or `C2.radius` against a sketch.
    pub fn parse(path: &str, value: f64, sketch: &Sketch) -> Result<Pin, ConstraintError> {
        let unknown = || ConstraintError::UnknownVariable(path.to_string());
        let (id, rest) = path.split_once('.').ok_or_else(unknown)?;
        let prim = sketch.primitive(id).ok_or_else(unknown)?;
        let param = param_names(prim.kind()).iter().position(|n| *n == rest).ok_or_else(unknown)?;
        Ok(Pin { id: id.to_string(), param, name: param_names(prim.kind())[param], value })
    }

    pub fn path(&self) -> String {
        format!("{}.{}", self.id, self.name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintCheck {
    pub index: usize,
    /// Largest absolute residual component, NaN when undefined.
    pub residual: f64,
    pub pass: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SatisfactionReport {
    pub checks: Vec<ConstraintCheck>,
}

impl SatisfactionReport {
    /// Vacuously true for an unconstrained sketch.
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ConstraintCheck> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn max_residual(&self) -> f64 {
        self.checks.iter().fold(0.0, |m, c| m.max(c.residual))
    }
}

impl fmt::Display for SatisfactionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let failed = self.checks.iter().filter(|c| !c.pass).count();
        write!(f, "{} constraints, {} failing, max residual {:e}", self.checks.len(), failed, self.max_residual())
    }
}

/// Per-constraint pass/fail at `tol` on the current geometry.
pub fn check_satisfied(sketch: &Sketch, tol: f64) -> SatisfactionReport {
    let checks = sketch
        .constraints
        .iter()
        .enumerate()
        .map(|(index, c)| match residual_norm(c, sketch) {
            Ok(r) => ConstraintCheck { index, residual: r, pass: r <= tol, error: None },
            Err(e) => ConstraintCheck { index, residual: f64::NAN, pass: false, error: Some(e.to_string()) },
        })
        .collect();
    SatisfactionReport { checks }
}

#[cfg(test)]
mod tests;
