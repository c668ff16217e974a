//! Problem container shared by the LP and MILP entry points.

use std::collections::HashMap;

use crate::{Error, Result};

/// Index of a variable in a [`MilpProblem`].
pub type VarId = usize;
/// Index of a row (linear constraint) in a [`MilpProblem`].
pub type RowId = usize;

/// Direction of a linear constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    /// Objective coefficient (always minimized).
    pub obj: f64,
    /// Integer restriction. Only binaries (bounds within [0, 1]) are supported
    /// by the branch-and-bound layer.
    pub is_integer: bool,
}

#[derive(Debug, Clone)]
pub struct Row {
    pub name: String,
    /// Sparse coefficients as (variable, value), one entry per variable.
    pub coeffs: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// A minimization problem `min c'x  s.t. rows, l <= x <= u`, with optional
/// integrality marks on variables.
#[derive(Debug, Clone, Default)]
pub struct MilpProblem {
    pub name: String,
    vars: Vec<Variable>,
    rows: Vec<Row>,
    names: HashMap<String, VarId>,
}

impl MilpProblem {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ..Self::default()
        }
    }

    /// Adds a continuous variable and returns its id.
    pub fn add_var(
        &mut self,
        name: impl Into<String>,
        lower: f64,
        upper: f64,
        obj: f64,
    ) -> Result<VarId> {
        self.push_var(name.into(), lower, upper, obj, false)
    }

    /// Adds a binary variable (bounds forced inside [0, 1]).
    pub fn add_binary(&mut self, name: impl Into<String>, obj: f64) -> Result<VarId> {
        self.push_var(name.into(), 0.0, 1.0, obj, true)
    }

    fn push_var(
        &mut self,
        name: String,
        lower: f64,
        upper: f64,
        obj: f64,
        is_integer: bool,
    ) -> Result<VarId> {
        if lower.is_nan() || upper.is_nan() || !obj.is_finite() {
            return Err(Error::InvalidProblem(format!(
                "variable {name} has NaN bounds or a non-finite cost"
            )));
        }
        if lower > upper {
            return Err(Error::InvalidProblem(format!(
                "variable {name} has empty bound interval [{lower}, {upper}]"
            )));
        }
        if is_integer && !(lower.is_finite() && upper.is_finite()) {
            return Err(Error::InvalidProblem(format!(
                "integer variable {name} must have finite bounds"
            )));
        }
        if self.names.contains_key(&name) {
            return Err(Error::InvalidProblem(format!("duplicate variable {name}")));
        }
        let id = self.vars.len();
        self.names.insert(name.clone(), id);
        self.vars.push(Variable {
            name,
            lower,
            upper,
            obj,
            is_integer,
        });
        Ok(id)
    }

    /// Adds a row. Coefficients with the same variable id are summed.
    pub fn add_row(
        &mut self,
        name: impl Into<String>,
        sense: Sense,
        rhs: f64,
        coeffs: Vec<(VarId, f64)>,
    ) -> Result<RowId> {
        let name = name.into();
        if !rhs.is_finite() {
            return Err(Error::InvalidProblem(format!("row {name} has non-finite rhs")));
        }
        let mut merged: Vec<(VarId, f64)> = Vec::with_capacity(coeffs.len());
        for (v, a) in coeffs {
            if v >= self.vars.len() {
                return Err(Error::InvalidProblem(format!(
                    "row {name} references unknown variable id {v}"
                )));
            }
            if !a.is_finite() {
                return Err(Error::InvalidProblem(format!(
                    "row {name} has a non-finite coefficient"
                )));
            }
            match merged.iter_mut().find(|(w, _)| *w == v) {
                Some((_, acc)) => *acc += a,
                None => merged.push((v, a)),
            }
        }
        merged.retain(|(_, a)| *a != 0.0);
        let id = self.rows.len();
        self.rows.push(Row {
            name,
            coeffs: merged,
            sense,
            rhs,
        });
        Ok(id)
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn var(&self, id: VarId) -> &Variable {
        &self.vars[id]
    }

    pub fn vars(&self) -> &[Variable] {
        &self.vars
    }

    pub fn row(&self, id: RowId) -> &Row {
        &self.rows[id]
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn var_id(&self, name: &str) -> Option<VarId> {
        self.names.get(name).copied()
    }

    /// Ids of integer-marked variables, in index order.
    pub fn integer_vars(&self) -> Vec<VarId> {
        (0..self.vars.len()).filter(|&i| self.vars[i].is_integer).collect()
    }

    /// Replaces a variable's objective coefficient (always minimized).
    pub fn set_objective(&mut self, id: VarId, obj: f64) -> Result<()> {
        if !obj.is_finite() {
            return Err(Error::InvalidProblem(format!(
                "variable {} gets a non-finite cost",
                self.vars[id].name
            )));
        }
        self.vars[id].obj = obj;
        Ok(())
    }

    /// Tightens a variable's bounds in place (used by presolve and tests).
    pub fn set_bounds(&mut self, id: VarId, lower: f64, upper: f64) -> Result<()> {
        if lower > upper {
            return Err(Error::InvalidProblem(format!(
                "variable {} gets empty bounds [{lower}, {upper}]",
                self.vars[id].name
            )));
        }
        self.vars[id].lower = lower;
        self.vars[id].upper = upper;
        Ok(())
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.vars.iter().zip(x).map(|(v, xi)| v.obj * xi).sum()
    }

    /// Structural sanity used before solving.
    pub fn validate(&self) -> Result<()> {
        for v in &self.vars {
            if v.is_integer && (v.lower < -1e-9 || v.upper > 1.0 + 1e-9) {
                return Err(Error::InvalidProblem(format!(
                    "integer variable {} is not binary (bounds [{}, {}])",
                    v.name, v.lower, v.upper
                )));
            }
        }
        Ok(())
    }

    /// Independent re-check of a candidate point against bounds, rows, and
    /// integrality. Callers treat violations above their own tolerance as a
    /// defect; the solver itself re-checks every solution it returns.
    pub fn check_solution(&self, x: &[f64]) -> SolutionCheck {
        let mut check = SolutionCheck {
            objective: self.objective_value(x),
            ..SolutionCheck::default()
        };
        for (v, &xi) in self.vars.iter().zip(x) {
            let below = (v.lower - xi).max(0.0);
            let above = (xi - v.upper).max(0.0);
            check.max_bound_violation = check.max_bound_violation.max(below).max(above);
            if v.is_integer {
                let frac = (xi - xi.round()).abs();
                check.max_integrality_violation = check.max_integrality_violation.max(frac);
            }
        }
        for row in &self.rows {
            let act: f64 = row.coeffs.iter().map(|&(v, a)| a * x[v]).sum();
            let viol = match row.sense {
                Sense::Le => (act - row.rhs).max(0.0),
                Sense::Ge => (row.rhs - act).max(0.0),
                Sense::Eq => (act - row.rhs).abs(),
            };
            check.max_row_violation = check.max_row_violation.max(viol);
        }
        check
    }
}

/// Result of [`MilpProblem::check_solution`].
#[derive(Debug, Clone, Default)]
pub struct SolutionCheck {
    pub objective: f64,
    pub max_bound_violation: f64,
    pub max_row_violation: f64,
    pub max_integrality_violation: f64,
}

impl SolutionCheck {
    pub fn max_violation(&self) -> f64 {
        self.max_bound_violation
            .max(self.max_row_violation)
            .max(self.max_integrality_violation)
    }
}
