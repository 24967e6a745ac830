use nalgebra::DMatrix;

use crate::model::{check_constraint, Anchor, ConstraintKind, PrimitiveKind, Sketch};

use super::dual::{Dual, Real, MAX_LOCAL};
use super::residual::{choose_branch, eval, fix_target, Branch, Operand};
use super::{ConstraintError, Pin};

/// Coordinate-list sparse matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    pub nrows: usize,
    pub ncols: usize,
    /// (row, column, value), row-major, zeros omitted.
    pub entries: Vec<(usize, usize, f64)>,
}

impl SparseMatrix {
    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for &(i, j, v) in &self.entries {
            m[(i, j)] += v;
        }
        m
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries.iter().filter(|e| e.0 == i && e.1 == j).map(|e| e.2).sum()
    }
}

#[derive(Debug, Clone)]
struct Block {
    constraint: usize,
    kind: ConstraintKind,
    prims: Vec<usize>,
    /// (index into `prims`, anchor) per reference.
    refs: Vec<(usize, Anchor)>,
    pin: Vec<f64>,
    branch: Branch,
}

/// Stacked residuals of a sketch over its free parameters.
///
/// Parameters pinned by a whole or endpoint Fix, or by an explicit [`Pin`],
/// are held at their pinned values and are not variables. Every other
/// constraint contributes one row per residual component.
#[derive(Debug, Clone)]
pub struct ResidualSystem {
    template: Sketch,
    kinds: Vec<PrimitiveKind>,
    values: Vec<Vec<f64>>,
    var_index: Vec<Vec<Option<usize>>>,
    blocks: Vec<Block>,
    n_vars: usize,
    n_rows: usize,
}

/// Parameter slots an anchor pins, when a Fix on it can drop variables outright.
pub(crate) fn fixed_slots(kind: PrimitiveKind, anchor: Anchor) -> Option<Vec<usize>> {
    match (anchor, kind) {
        (Anchor::Whole, k) => Some((0..k.param_count()).collect()),
        (Anchor::Start, _) => Some(vec![0, 1]),
        (Anchor::End, PrimitiveKind::Arc) => Some(vec![4, 5]),
        (Anchor::End, _) => Some(vec![2, 3]),
        (Anchor::Center, PrimitiveKind::Circle) => Some(vec![0, 1]),
        (Anchor::Center, _) => None,
    }
}

impl ResidualSystem {
    pub fn new(sketch: &Sketch, pins: &[Pin]) -> Result<Self, ConstraintError> {
        let index_of = |id: &str| sketch.primitives.iter().position(|p| p.id == id);
        let kinds: Vec<PrimitiveKind> = sketch.primitives.iter().map(|p| p.kind()).collect();
        let original: Vec<Vec<f64>> = sketch.primitives.iter().map(|p| p.geometry.params()).collect();
        let mut values = original.clone();
        let mut fixed: Vec<Vec<bool>> = kinds.iter().map(|k| vec![false; k.param_count()]).collect();

        let mut fix_blocks = Vec::new();
        for (k, con) in sketch.constraints.iter().enumerate() {
            check_constraint(con, sketch)
                .map_err(|(code, msg)| ConstraintError::Invalid(format!("constraint {k}: {}: {msg}", code.as_str())))?;
            if con.kind != ConstraintKind::Fix {
                continue;
            }
            let r = &con.refs[0];
            let pi = index_of(&r.id).expect("checked reference");
            let target = fix_target(con, sketch);
            match fixed_slots(kinds[pi], r.anchor) {
                Some(slots) => {
                    for (s, v) in slots.into_iter().zip(target) {
                        values[pi][s] = v;
                        fixed[pi][s] = true;
                    }
                }
                None => fix_blocks.push(k),
            }
        }
        for pin in pins {
            let pi = index_of(&pin.id).ok_or_else(|| ConstraintError::UnknownVariable(pin.path()))?;
            if pin.param >= kinds[pi].param_count() {
                return Err(ConstraintError::UnknownVariable(pin.path()));
            }
            values[pi][pin.param] = pin.value;
            fixed[pi][pin.param] = true;
        }

        let mut n_vars = 0;
        let var_index: Vec<Vec<Option<usize>>> = fixed
            .iter()
            .map(|f| {
                f.iter()
                    .map(|&is_fixed| {
                        (!is_fixed).then(|| {
                            n_vars += 1;
                            n_vars - 1
                        })
                    })
                    .collect()
            })
            .collect();

        let mut blocks = Vec::new();
        let mut n_rows = 0;
        for (k, con) in sketch.constraints.iter().enumerate() {
            if con.kind == ConstraintKind::Fix && !fix_blocks.contains(&k) {
                continue;
            }
            let mut prims: Vec<usize> = Vec::new();
            let mut refs = Vec::new();
            for r in &con.refs {
                let pi = index_of(&r.id).expect("checked reference");
                let slot = prims.iter().position(|&q| q == pi).unwrap_or_else(|| {
                    prims.push(pi);
                    prims.len() - 1
                });
                refs.push((slot, r.anchor));
            }
            let ops: Vec<Operand<'_, f64>> = refs
                .iter()
                .map(|&(s, anchor)| Operand { anchor, kind: kinds[prims[s]], p: &original[prims[s]] })
                .collect();
            let branch = choose_branch(con.kind, &ops)?;
            let pin = fix_target(con, sketch);
            n_rows += eval(con.kind, &ops, &pin, branch)?.len();
            blocks.push(Block { constraint: k, kind: con.kind, prims, refs, pin, branch });
        }

        Ok(Self { template: sketch.clone(), kinds, values, var_index, blocks, n_vars, n_rows })
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn n_residuals(&self) -> usize {
        self.n_rows
    }

    /// Starting point: current geometry with pins applied.
    pub fn x0(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.n_vars];
        for (vals, idx) in self.values.iter().zip(&self.var_index) {
            for (v, i) in vals.iter().zip(idx) {
                if let Some(i) = i {
                    x[*i] = *v;
                }
            }
        }
        x
    }

    /// Constraint index → variable indices its residuals depend on.
    pub fn dependencies(&self) -> Vec<(usize, Vec<usize>)> {
        self.blocks
            .iter()
            .map(|b| (b.constraint, b.prims.iter().flat_map(|&p| self.var_index[p].iter().flatten().copied()).collect()))
            .collect()
    }

    /// Branch descriptions for constraints that made a discrete choice.
    pub fn branches(&self) -> Vec<(usize, &'static str)> {
        self.blocks.iter().filter_map(|b| b.branch.describe().map(|d| (b.constraint, d))).collect()
    }

    fn param(&self, x: &[f64], prim: usize, j: usize) -> f64 {
        self.var_index[prim][j].map_or(self.values[prim][j], |i| x[i])
    }

    fn eval_block<R: Real>(&self, b: &Block, local: &[R]) -> Result<Vec<R>, ConstraintError> {
        let mut offsets = Vec::with_capacity(b.prims.len());
        let mut off = 0;
        for &p in &b.prims {
            offsets.push(off);
            off += self.kinds[p].param_count();
        }
        let ops: Vec<Operand<'_, R>> = b
            .refs
            .iter()
            .map(|&(s, anchor)| {
                let kind = self.kinds[b.prims[s]];
                Operand { anchor, kind, p: &local[offsets[s]..offsets[s] + kind.param_count()] }
            })
            .collect();
        eval(b.kind, &ops, &b.pin, b.branch)
    }

    pub fn residuals(&self, x: &[f64]) -> Result<Vec<f64>, ConstraintError> {
        let mut r = Vec::with_capacity(self.n_rows);
        for b in &self.blocks {
            let local: Vec<f64> =
                b.prims.iter().flat_map(|&p| (0..self.kinds[p].param_count()).map(move |j| (p, j))).map(|(p, j)| self.param(x, p, j)).collect();
            r.extend(self.eval_block(b, &local)?);
        }
        Ok(r)
    }

    /// Analytic Jacobian of [`Self::residuals`] by forward-mode differentiation.
    pub fn jacobian(&self, x: &[f64]) -> Result<SparseMatrix, ConstraintError> {
        let mut entries = Vec::new();
        let mut row = 0;
        for b in &self.blocks {
            let mut local = Vec::with_capacity(MAX_LOCAL);
            let mut globals = Vec::with_capacity(MAX_LOCAL);
            for &p in &b.prims {
                for j in 0..self.kinds[p].param_count() {
                    let slot = local.len();
                    match self.var_index[p][j] {
                        Some(g) => {
                            local.push(Dual::var(x[g], slot));
                            globals.push(Some(g));
                        }
                        None => {
                            local.push(Dual::cst(self.values[p][j]));
                            globals.push(None);
                        }
                    }
                }
            }
            for r in self.eval_block(b, &local)? {
                for (slot, g) in globals.iter().enumerate() {
                    if let Some(g) = g {
                        if r.g[slot] != 0.0 {
                            entries.push((row, *g, r.g[slot]));
                        }
                    }
                }
                row += 1;
            }
        }
        Ok(SparseMatrix { nrows: self.n_rows, ncols: self.n_vars, entries })
    }

    /// The template sketch with parameters taken from `x`.
    pub fn sketch_at(&self, x: &[f64]) -> Sketch {
        let mut out = self.template.clone();
        for (p, prim) in out.primitives.iter_mut().enumerate() {
            let params: Vec<f64> = (0..self.kinds[p].param_count()).map(|j| self.param(x, p, j)).collect();
            prim.geometry = crate::model::Geometry::from_params(self.kinds[p], &params);
        }
        out
    }
}

/// Free function form of [`ResidualSystem::jacobian`].
pub fn jacobian(system: &ResidualSystem, x: &[f64]) -> Result<SparseMatrix, ConstraintError> {
    system.jacobian(x)
}
