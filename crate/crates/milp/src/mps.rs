//! MPS export and external-solution import.
//!
//! `write_mps` emits free-format MPS so a model can be handed to any
//! off-the-shelf solver; `read_solution_file` pulls back a `name value`
//! listing of variable assignments and `check_imported_solution` scores that
//! point against the original problem. Together these give an independent
//! route to validate the built-in solver.

use std::collections::HashMap;
use std::path::Path;

use crate::problem::MilpProblem;
use crate::{Error, Result};

/// Result of checking an externally produced point against a problem.
#[derive(Debug, Clone)]
pub struct ImportReport {
    pub objective: f64,
    pub max_bound_violation: f64,
    pub max_row_violation: f64,
    pub max_integrality_violation: f64,
    /// Variables matched by name.
    pub matched: usize,
    /// Entries in the file that name no variable.
    pub extra: usize,
}

impl ImportReport {
    pub fn max_violation(&self) -> f64 {
        self.max_bound_violation
            .max(self.max_row_violation)
            .max(self.max_integrality_violation)
    }
}

/// Renders the problem as free-format MPS with integer markers.
pub fn write_mps(p: &MilpProblem) -> Result<String> {
    p.validate()?;
    check_name(&p.name)?;
    for v in p.vars() {
        check_name(&v.name)?;
    }
    for r in p.rows() {
        check_name(&r.name)?;
    }

    let mut per_col: Vec<Vec<(usize, f64)>> = vec![Vec::new(); p.num_vars()];
    for (ri, row) in p.rows().iter().enumerate() {
        for &(v, a) in &row.coeffs {
            per_col[v].push((ri, a));
        }
    }

    let mut out = String::new();
    out.push_str(&format!("NAME          {}\n", p.name));
    out.push_str("ROWS\n N  COST\n");
    for row in p.rows() {
        let tag = match row.sense {
            crate::problem::Sense::Le => 'L',
            crate::problem::Sense::Ge => 'G',
            crate::problem::Sense::Eq => 'E',
        };
        out.push_str(&format!(" {}  {}\n", tag, row.name));
    }

    out.push_str("COLUMNS\n");
    let mut in_int = false;
    let mut marker = 0usize;
    for (j, var) in p.vars().iter().enumerate() {
        if var.is_integer != in_int {
            let kind = if var.is_integer { "INTORG" } else { "INTEND" };
            out.push_str(&format!("    M{marker:<9} 'MARKER'    '{kind}'\n"));
            marker += 1;
            in_int = var.is_integer;
        }
        let mut wrote = false;
        if var.obj != 0.0 {
            out.push_str(&format!("    {:<10} COST       {}\n", var.name, num(var.obj)));
            wrote = true;
        }
        for &(ri, a) in &per_col[j] {
            out.push_str(&format!(
                "    {:<10} {:<10} {}\n",
                var.name,
                p.row(ri).name,
                num(a)
            ));
            wrote = true;
        }
        if !wrote {
            // Declare the column even when it touches nothing.
            out.push_str(&format!("    {:<10} COST       0\n", var.name));
        }
    }
    if in_int {
        out.push_str(&format!("    M{marker:<9} 'MARKER'    'INTEND'\n"));
    }

    out.push_str("RHS\n");
    for row in p.rows() {
        if row.rhs != 0.0 {
            out.push_str(&format!("    RHS        {:<10} {}\n", row.name, num(row.rhs)));
        }
    }

    out.push_str("BOUNDS\n");
    for var in p.vars() {
        let (lo, hi) = (var.lower, var.upper);
        if lo == hi {
            out.push_str(&format!(" FX BND        {:<10} {}\n", var.name, num(lo)));
        } else if var.is_integer {
            // Explicit on both sides: readers disagree on integer defaults.
            out.push_str(&format!(" LO BND        {:<10} {}\n", var.name, num(lo)));
            out.push_str(&format!(" UP BND        {:<10} {}\n", var.name, num(hi)));
        } else if lo.is_infinite() && hi.is_infinite() {
            out.push_str(&format!(" FR BND        {}\n", var.name));
        } else {
            if lo.is_infinite() {
                out.push_str(&format!(" MI BND        {}\n", var.name));
            } else if lo != 0.0 {
                out.push_str(&format!(" LO BND        {:<10} {}\n", var.name, num(lo)));
            }
            if hi.is_finite() {
                out.push_str(&format!(" UP BND        {:<10} {}\n", var.name, num(hi)));
            }
        }
    }
    out.push_str("ENDATA\n");
    Ok(out)
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn check_name(name: &str) -> Result<()> {
    if name.is_empty() || name.chars().any(|c| c.is_whitespace() || c == '\'') {
        return Err(Error::InvalidProblem(format!(
            "name {name:?} cannot be written to MPS"
        )));
    }
    Ok(())
}

/// Parses a `name value` per line solution listing. Blank lines and lines
/// starting with `#` are skipped.
pub fn read_solution_file(path: &Path) -> Result<HashMap<String, f64>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = HashMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        let (Some(name), Some(val), None) = (it.next(), it.next(), it.next()) else {
            return Err(Error::SolutionImport(format!(
                "line {}: expected `name value`, got {line:?}",
                lineno + 1
            )));
        };
        let v: f64 = val.parse().map_err(|_| {
            Error::SolutionImport(format!("line {}: bad number {val:?}", lineno + 1))
        })?;
        if out.insert(name.to_string(), v).is_some() {
            return Err(Error::SolutionImport(format!(
                "line {}: duplicate variable {name:?}",
                lineno + 1
            )));
        }
    }
    Ok(out)
}

/// Scores an imported point against `p`. Every variable of `p` must be
/// assigned; entries naming nothing in `p` are counted but ignored.
pub fn check_imported_solution(
    p: &MilpProblem,
    values: &HashMap<String, f64>,
) -> Result<ImportReport> {
    let mut x = vec![0.0; p.num_vars()];
    for (j, var) in p.vars().iter().enumerate() {
        match values.get(&var.name) {
            Some(&v) => x[j] = v,
            None => {
                return Err(Error::SolutionImport(format!(
                    "no value for variable {:?}",
                    var.name
                )));
            }
        }
    }
    let check = p.check_solution(&x);
    Ok(ImportReport {
        objective: check.objective,
        max_bound_violation: check.max_bound_violation,
        max_row_violation: check.max_row_violation,
        max_integrality_violation: check.max_integrality_violation,
        matched: p.num_vars(),
        extra: values.len() - p.num_vars().min(values.len()),
    })
}
