//! Bounded-variable revised simplex.
//!
//! Two-phase method over columns `[structural | slacks | artificials]` with a
//! dense LU factorization of the basis and product-form eta updates between
//! refactorizations. Pricing is Dantzig's rule with lowest-index tie breaks;
//! a sustained run of degenerate pivots switches to Bland's rule, which
//! guarantees termination. All scans run in index order, so a given problem
//! always takes the same pivot sequence.

use crate::linalg::LuFactors;
use crate::problem::{MilpProblem, Sense};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct LpOptions {
    /// Hard iteration cap; 0 means `50 (m + n) + 10_000`.
    pub max_iters: usize,
    /// Primal feasibility tolerance.
    pub feas_tol: f64,
    /// Dual feasibility (reduced-cost) tolerance.
    pub opt_tol: f64,
    /// Eta updates between basis refactorizations.
    pub refactor_every: usize,
}

impl Default for LpOptions {
    fn default() -> Self {
        Self {
            max_iters: 0,
            feas_tol: 1e-9,
            opt_tol: 1e-9,
            refactor_every: 64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Values of the problem's own variables (empty unless optimal).
    pub x: Vec<f64>,
    /// `+inf` when infeasible, `-inf` when unbounded.
    pub objective: f64,
    /// Shadow price per row: change of the optimum per unit of rhs.
    pub row_duals: Vec<f64>,
    /// Reduced cost per problem variable.
    pub reduced_costs: Vec<f64>,
    pub iterations: usize,
}

/// Solves the LP relaxation of `p` (integrality marks are ignored).
pub fn solve_lp(p: &MilpProblem, opts: &LpOptions) -> Result<LpSolution> {
    solve_lp_with_bounds(p, opts, None)
}

/// Same as [`solve_lp`] but with overriding variable bounds, used by branch
/// and bound to impose node fixings without copying the problem.
///
/// A numerical failure retries with progressively more conservative
/// settings (Bland's rule from the start, then a short refactorization
/// cadence), so each attempt takes a genuinely different pivot path.
pub fn solve_lp_with_bounds(
    p: &MilpProblem,
    opts: &LpOptions,
    bounds: Option<(&[f64], &[f64])>,
) -> Result<LpSolution> {
    p.validate()?;
    let attempts = [
        (false, opts.refactor_every),
        (true, opts.refactor_every.min(16)),
        (true, 4),
    ];
    let mut last_err = None;
    for (bland, refactor_every) in attempts {
        let mut run_opts = opts.clone();
        run_opts.refactor_every = refactor_every.max(1);
        let mut w = Worker::new(p, &run_opts, bounds);
        w.bland_always = bland;
        match w.run() {
            Ok(sol) => return Ok(sol),
            Err(e @ Error::Numerical(_)) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last_err.unwrap_or_else(|| Error::Numerical("unreachable".into())))
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum ColState {
    Basic,
    AtLower,
    AtUpper,
    /// Nonbasic free column, parked at zero.
    Free,
}

struct Worker<'a> {
    p: &'a MilpProblem,
    opts: LpOptions,
    m: usize,
    ncols: usize,
    nstruct: usize,
    /// Sparse columns (structural only; slack/artificial columns are units).
    cols: Vec<Vec<(usize, f64)>>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    /// Active cost vector (phase 1: artificials; phase 2: problem costs).
    cost: Vec<f64>,
    cost2: Vec<f64>,
    b: Vec<f64>,
    /// Sign of each artificial column's unit coefficient, by row.
    art_sign: Vec<f64>,
    /// Row covered by each artificial column, in order of creation.
    art_rows: Vec<usize>,
    state: Vec<ColState>,
    basis: Vec<usize>,
    x_basic: Vec<f64>,
    lu: Option<LuFactors>,
    etas: Vec<(usize, Vec<f64>)>,
    iterations: usize,
    degenerate_streak: usize,
    bland: bool,
    /// Keep Bland's rule on for the whole solve (anti-cycling retry mode).
    bland_always: bool,
    max_iters: usize,
}

impl<'a> Worker<'a> {
    fn new(p: &'a MilpProblem, opts: &LpOptions, bounds: Option<(&[f64], &[f64])>) -> Self {
        let m = p.num_rows();
        let nstruct = p.num_vars();
        let ncols = nstruct + m;
        let mut cols = vec![Vec::new(); nstruct];
        for (ri, row) in p.rows().iter().enumerate() {
            for &(v, a) in &row.coeffs {
                cols[v].push((ri, a));
            }
        }
        let mut lower = Vec::with_capacity(ncols);
        let mut upper = Vec::with_capacity(ncols);
        for (i, v) in p.vars().iter().enumerate() {
            let (lo, hi) = match bounds {
                Some((l, u)) => (l[i], u[i]),
                None => (v.lower, v.upper),
            };
            lower.push(lo);
            upper.push(hi);
        }
        for row in p.rows() {
            match row.sense {
                Sense::Le => {
                    lower.push(0.0);
                    upper.push(f64::INFINITY);
                }
                Sense::Ge => {
                    lower.push(f64::NEG_INFINITY);
                    upper.push(0.0);
                }
                Sense::Eq => {
                    lower.push(0.0);
                    upper.push(0.0);
                }
            }
        }
        let mut cost2 = vec![0.0; ncols];
        for (i, v) in p.vars().iter().enumerate() {
            cost2[i] = v.obj;
        }
        let b: Vec<f64> = p.rows().iter().map(|r| r.rhs).collect();
        let max_iters = if opts.max_iters > 0 {
            opts.max_iters
        } else {
            50 * (m + ncols) + 10_000
        };
        Self {
            p,
            opts: opts.clone(),
            m,
            ncols,
            nstruct,
            cols,
            lower,
            upper,
            cost: Vec::new(),
            cost2,
            b,
            art_sign: vec![0.0; m],
            art_rows: Vec::new(),
            state: Vec::new(),
            basis: Vec::new(),
            x_basic: Vec::new(),
            lu: None,
            etas: Vec::new(),
            iterations: 0,
            degenerate_streak: 0,
            bland: false,
            bland_always: false,
            max_iters,
        }
    }

    fn nonbasic_value(&self, j: usize) -> f64 {
        match self.state[j] {
            ColState::AtLower => self.lower[j],
            ColState::AtUpper => self.upper[j],
            ColState::Free => 0.0,
            ColState::Basic => unreachable!("basic column has no parked value"),
        }
    }

    /// Column `j` of the full constraint matrix applied onto `out += s * A_j`.
    fn add_column(&self, j: usize, s: f64, out: &mut [f64]) {
        if j < self.nstruct {
            for &(r, a) in &self.cols[j] {
                out[r] += s * a;
            }
        } else if j < self.nstruct + self.m {
            out[j - self.nstruct] += s;
        } else {
            let r = self.art_row(j);
            out[r] += s * self.art_sign[r];
        }
    }

    fn art_row(&self, j: usize) -> usize {
        self.art_rows[j - self.nstruct - self.m]
    }

    fn column_dot(&self, j: usize, y: &[f64]) -> f64 {
        if j < self.nstruct {
            self.cols[j].iter().map(|&(r, a)| a * y[r]).sum()
        } else if j < self.nstruct + self.m {
            y[j - self.nstruct]
        } else {
            let r = self.art_row(j);
            self.art_sign[r] * y[r]
        }
    }

    fn run(&mut self) -> Result<LpSolution> {
        self.init_basis();
        self.bland = self.bland_always;
        let has_artificials = self.ncols > self.nstruct + self.m;
        if has_artificials {
            self.cost = vec![0.0; self.ncols];
            for j in (self.nstruct + self.m)..self.ncols {
                self.cost[j] = 1.0;
            }
            let status = self.iterate()?;
            if status == IterExit::Unbounded {
                return Err(Error::Numerical("phase 1 reported unbounded".into()));
            }
            let infeas: f64 = ((self.nstruct + self.m)..self.ncols)
                .map(|j| self.current_value(j).abs())
                .sum();
            let scale = 1.0 + self.b.iter().fold(0.0f64, |a, &v| a.max(v.abs()));
            if infeas > 1e-7 * scale {
                return Ok(LpSolution {
                    status: LpStatus::Infeasible,
                    x: Vec::new(),
                    objective: f64::INFINITY,
                    row_duals: Vec::new(),
                    reduced_costs: Vec::new(),
                    iterations: self.iterations,
                });
            }
            // Lock artificials at zero for phase 2.
            for j in (self.nstruct + self.m)..self.ncols {
                self.lower[j] = 0.0;
                self.upper[j] = 0.0;
                if self.state[j] != ColState::Basic {
                    self.state[j] = ColState::AtLower;
                }
            }
            self.refactor()?;
        }
        self.cost = self.cost2.clone();
        self.bland = self.bland_always;
        self.degenerate_streak = 0;
        let status = self.iterate()?;
        if status == IterExit::Unbounded {
            return Ok(LpSolution {
                status: LpStatus::Unbounded,
                x: Vec::new(),
                objective: f64::NEG_INFINITY,
                row_duals: Vec::new(),
                reduced_costs: Vec::new(),
                iterations: self.iterations,
            });
        }
        self.finish()
    }

    fn current_value(&self, j: usize) -> f64 {
        match self.state[j] {
            ColState::Basic => {
                let pos = self.basis.iter().position(|&c| c == j).unwrap();
                self.x_basic[pos]
            }
            _ => self.nonbasic_value(j),
        }
    }

    fn init_basis(&mut self) {
        self.state = Vec::with_capacity(self.ncols);
        for j in 0..self.nstruct {
            let (lo, hi) = (self.lower[j], self.upper[j]);
            let st = if lo.is_finite() && hi.is_finite() {
                if lo.abs() <= hi.abs() {
                    ColState::AtLower
                } else {
                    ColState::AtUpper
                }
            } else if lo.is_finite() {
                ColState::AtLower
            } else if hi.is_finite() {
                ColState::AtUpper
            } else {
                ColState::Free
            };
            self.state.push(st);
        }
        for _ in 0..self.m {
            self.state.push(ColState::AtLower); // placeholder, fixed below
        }
        // Row residuals with all structural columns parked.
        let mut r = self.b.clone();
        for j in 0..self.nstruct {
            let v = self.nonbasic_value(j);
            if v != 0.0 {
                for &(ri, a) in &self.cols[j] {
                    r[ri] -= a * v;
                }
            }
        }
        self.basis = Vec::with_capacity(self.m);
        self.x_basic = Vec::with_capacity(self.m);
        for ri in 0..self.m {
            let sj = self.nstruct + ri;
            let (slo, shi) = (self.lower[sj], self.upper[sj]);
            if r[ri] >= slo - 1e-12 && r[ri] <= shi + 1e-12 {
                self.state[sj] = ColState::Basic;
                self.basis.push(sj);
                self.x_basic.push(r[ri].clamp(slo, shi));
            } else {
                // Park the slack at its nearest bound; cover the gap with an
                // artificial column.
                let parked = r[ri].clamp(slo, shi);
                self.state[sj] = if parked == slo {
                    ColState::AtLower
                } else {
                    ColState::AtUpper
                };
                let resid = r[ri] - parked;
                let aj = self.ncols;
                self.ncols += 1;
                self.art_sign[ri] = resid.signum();
                self.art_rows.push(ri);
                self.lower.push(0.0);
                self.upper.push(f64::INFINITY);
                self.cost2.push(0.0);
                self.state.push(ColState::Basic);
                self.basis.push(aj);
                self.x_basic.push(resid.abs());
            }
        }
        self.etas.clear();
        self.lu = None;
    }

    fn refactor(&mut self) -> Result<()> {
        let m = self.m;
        let mut dense = vec![0.0; m * m];
        for (k, &j) in self.basis.iter().enumerate() {
            let mut col = vec![0.0; m];
            self.add_column(j, 1.0, &mut col);
            for i in 0..m {
                dense[i * m + k] = col[i];
            }
        }
        let lu = LuFactors::factor(&dense, m)
            .ok_or_else(|| Error::Numerical("singular basis at refactorization".into()))?;
        self.lu = Some(lu);
        self.etas.clear();
        self.recompute_x_basic();
        Ok(())
    }

    fn recompute_x_basic(&mut self) {
        let mut rhs = self.b.clone();
        for j in 0..self.ncols {
            if self.state[j] != ColState::Basic {
                let v = self.nonbasic_value(j);
                if v != 0.0 {
                    self.add_column(j, -v, &mut rhs);
                }
            }
        }
        self.ftran(&mut rhs);
        self.x_basic = rhs;
    }

    fn ftran(&self, v: &mut Vec<f64>) {
        if let Some(lu) = &self.lu {
            lu.solve(v);
        }
        for (r, w) in &self.etas {
            let t = v[*r] / w[*r];
            if t != 0.0 {
                for i in 0..self.m {
                    v[i] -= w[i] * t;
                }
            }
            v[*r] = t;
        }
    }

    fn btran(&self, u: &mut Vec<f64>) {
        for (r, w) in self.etas.iter().rev() {
            let dot: f64 = (0..self.m).map(|i| w[i] * u[i]).sum();
            u[*r] -= (dot - u[*r]) / w[*r];
        }
        if let Some(lu) = &self.lu {
            lu.solve_transpose(u);
        }
    }

    fn iterate(&mut self) -> Result<IterExit> {
        if self.lu.is_none() {
            self.refactor()?;
        }
        loop {
            self.iterations += 1;
            if self.iterations > self.max_iters {
                return Err(Error::IterationLimit(self.max_iters));
            }
            if self.etas.len() >= self.opts.refactor_every {
                self.refactor()?;
            }
            // Duals for the active cost vector.
            let mut y: Vec<f64> = self.basis.iter().map(|&j| self.cost[j]).collect();
            self.btran(&mut y);
            // Pricing.
            let mut pick: Option<(usize, f64, i8)> = None;
            for j in 0..self.ncols {
                if self.state[j] == ColState::Basic {
                    continue;
                }
                if self.upper[j] - self.lower[j] < 1e-14 && self.state[j] != ColState::Free {
                    continue; // fixed column can never move
                }
                let d = self.cost[j] - self.column_dot(j, &y);
                let dir: i8 = match self.state[j] {
                    ColState::AtLower if d < -self.opts.opt_tol => 1,
                    ColState::AtUpper if d > self.opts.opt_tol => -1,
                    ColState::Free if d < -self.opts.opt_tol => 1,
                    ColState::Free if d > self.opts.opt_tol => -1,
                    _ => continue,
                };
                if self.bland {
                    pick = Some((j, d, dir));
                    break;
                }
                match &pick {
                    Some((_, best, _)) if d.abs() <= best.abs() => {}
                    _ => pick = Some((j, d, dir)),
                }
            }
            let Some((q, _dq, dir)) = pick else {
                return Ok(IterExit::Optimal);
            };
            let sigma = dir as f64;
            let mut w = vec![0.0; self.m];
            self.add_column(q, 1.0, &mut w);
            self.ftran(&mut w);
            // Ratio test in two passes: the first finds the longest step every
            // basic column tolerates with at most a `feas_tol` bound
            // overshoot, the second picks the best-conditioned pivot row
            // (largest |w|) within that allowance. Trading a vanishing bound
            // violation for a large pivot keeps the basis well-conditioned.
            let span = self.upper[q] - self.lower[q];
            let span_cap = if span.is_finite() { span } else { f64::INFINITY };
            let bump = self.opts.feas_tol.max(1e-9);
            let mut t_allow = span_cap;
            for i in 0..self.m {
                let rate = sigma * w[i];
                if rate > 1e-11 {
                    let lo = self.lower[self.basis[i]];
                    if lo.is_finite() {
                        let allow = ((self.x_basic[i] - lo + bump) / rate).max(0.0);
                        if allow < t_allow {
                            t_allow = allow;
                        }
                    }
                } else if rate < -1e-11 {
                    let hi = self.upper[self.basis[i]];
                    if hi.is_finite() {
                        let allow = ((hi - self.x_basic[i] + bump) / -rate).max(0.0);
                        if allow < t_allow {
                            t_allow = allow;
                        }
                    }
                }
            }
            if t_allow.is_infinite() {
                return Ok(IterExit::Unbounded);
            }
            // (basis pos, hits_lower, exact ratio)
            let mut cand: Option<(usize, bool, f64)> = None;
            for i in 0..self.m {
                let rate = sigma * w[i];
                let (exact, hits_lower) = if rate > 1e-11 {
                    let lo = self.lower[self.basis[i]];
                    if !lo.is_finite() {
                        continue;
                    }
                    (((self.x_basic[i] - lo) / rate).max(0.0), true)
                } else if rate < -1e-11 {
                    let hi = self.upper[self.basis[i]];
                    if !hi.is_finite() {
                        continue;
                    }
                    (((hi - self.x_basic[i]) / -rate).max(0.0), false)
                } else {
                    continue;
                };
                if exact > t_allow {
                    continue;
                }
                let better = match cand {
                    None => true,
                    Some((p, _, prev_exact)) => {
                        if self.bland {
                            // Anti-cycling mode needs the strict minimum
                            // ratio, ties to the lowest basis column index.
                            exact < prev_exact - 1e-12
                                || ((exact - prev_exact).abs() <= 1e-12
                                    && self.basis[i] < self.basis[p])
                        } else {
                            w[i].abs() > w[p].abs() + 1e-12
                        }
                    }
                };
                if better {
                    cand = Some((i, hits_lower, exact));
                }
            }
            let (t_best, leave) = match cand {
                Some((r, hl, exact)) => (exact, Some((r, hl))),
                None => (span_cap, None),
            };
            if t_best.is_infinite() {
                return Ok(IterExit::Unbounded);
            }
            if t_best < 1e-10 {
                self.degenerate_streak += 1;
                if self.degenerate_streak > 100 + self.m && !self.bland {
                    self.bland = true;
                }
            } else {
                self.degenerate_streak = 0;
            }
            match leave {
                None => {
                    // Entering column runs to its opposite bound: bound flip.
                    for i in 0..self.m {
                        self.x_basic[i] -= sigma * t_best * w[i];
                    }
                    self.state[q] = match self.state[q] {
                        ColState::AtLower => ColState::AtUpper,
                        ColState::AtUpper => ColState::AtLower,
                        other => other,
                    };
                }
                Some((r, hits_lower)) => {
                    let entering_val = match self.state[q] {
                        ColState::AtLower => self.lower[q] + t_best,
                        ColState::AtUpper => self.upper[q] - t_best,
                        ColState::Free => sigma * t_best,
                        ColState::Basic => unreachable!(),
                    };
                    let leaving = self.basis[r];
                    for i in 0..self.m {
                        self.x_basic[i] -= sigma * t_best * w[i];
                    }
                    self.state[leaving] = if hits_lower {
                        ColState::AtLower
                    } else {
                        ColState::AtUpper
                    };
                    self.state[q] = ColState::Basic;
                    self.basis[r] = q;
                    self.x_basic[r] = entering_val;
                    if w[r].abs() < 1e-9 {
                        self.refactor()?;
                    } else {
                        self.etas.push((r, w));
                    }
                }
            }
        }
    }

    fn finish(&mut self) -> Result<LpSolution> {
        // Refresh the factorization once for an accurate final point.
        self.refactor()?;
        let assemble = |w: &Worker| -> Vec<f64> {
            (0..w.ncols).map(|j| w.current_value(j)).collect()
        };
        let mut full = assemble(self);
        let mut resid = self.residual(&full);
        if resid > 1e-7 {
            self.refactor()?;
            full = assemble(self);
            resid = self.residual(&full);
            if resid > 1e-6 {
                return Err(Error::Numerical(format!(
                    "final residual {resid:.3e} exceeds tolerance"
                )));
            }
        }
        let mut y: Vec<f64> = self.basis.iter().map(|&j| self.cost2[j]).collect();
        self.btran(&mut y);
        let x: Vec<f64> = full[..self.nstruct].to_vec();
        let reduced: Vec<f64> = (0..self.nstruct)
            .map(|j| self.cost2[j] - self.column_dot(j, &y))
            .collect();
        let objective = self.p.objective_value(&x);
        Ok(LpSolution {
            status: LpStatus::Optimal,
            x,
            objective,
            row_duals: y,
            reduced_costs: reduced,
            iterations: self.iterations,
        })
    }

    /// Max row residual |Ax - b| over all rows, with slacks included in x.
    fn residual(&self, full: &[f64]) -> f64 {
        let mut r = vec![0.0; self.m];
        for (j, &v) in full.iter().enumerate() {
            if v != 0.0 {
                self.add_column(j, v, &mut r);
            }
        }
        r.iter()
            .zip(&self.b)
            .fold(0.0f64, |acc, (lhs, rhs)| acc.max((lhs - rhs).abs()))
    }
}

#[derive(PartialEq, Eq, Clone, Copy)]
enum IterExit {
    Optimal,
    Unbounded,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{MilpProblem, Sense};

    fn opts() -> LpOptions {
        LpOptions::default()
    }

    #[test]
    fn solves_two_var_lp() {
        // max x + 2y s.t. x + y <= 4, x <= 3, y <= 2  ->  (2, 2), obj 6.
        let mut p = MilpProblem::new("two_var");
        let x = p.add_var("x", 0.0, 3.0, -1.0).unwrap();
        let y = p.add_var("y", 0.0, 2.0, -2.0).unwrap();
        p.add_row("cap", Sense::Le, 4.0, vec![(x, 1.0), (y, 1.0)]).unwrap();
        let s = solve_lp(&p, &opts()).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective + 6.0).abs() < 1e-9);
        assert!((s.x[0] - 2.0).abs() < 1e-9);
        assert!((s.x[1] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn detects_infeasible() {
        let mut p = MilpProblem::new("infeas");
        let x = p.add_var("x", 0.0, 1.0, 1.0).unwrap();
        p.add_row("lo", Sense::Ge, 2.0, vec![(x, 1.0)]).unwrap();
        let s = solve_lp(&p, &opts()).unwrap();
        assert_eq!(s.status, LpStatus::Infeasible);
        assert!(s.objective.is_infinite());
    }

    #[test]
    fn detects_unbounded() {
        let mut p = MilpProblem::new("unbounded");
        let x = p.add_var("x", 0.0, f64::INFINITY, -1.0).unwrap();
        let y = p.add_var("y", 0.0, f64::INFINITY, 0.0).unwrap();
        p.add_row("r", Sense::Le, 1.0, vec![(x, 1.0), (y, -1.0)]).unwrap();
        let s = solve_lp(&p, &opts()).unwrap();
        assert_eq!(s.status, LpStatus::Unbounded);
    }

    #[test]
    fn handles_equalities_and_negative_bounds() {
        // min x + y s.t. x + y = 1, x - y = 0.2 with x, y in [-5, 5].
        let mut p = MilpProblem::new("eq");
        let x = p.add_var("x", -5.0, 5.0, 1.0).unwrap();
        let y = p.add_var("y", -5.0, 5.0, 1.0).unwrap();
        p.add_row("sum", Sense::Eq, 1.0, vec![(x, 1.0), (y, 1.0)]).unwrap();
        p.add_row("diff", Sense::Eq, 0.2, vec![(x, 1.0), (y, -1.0)]).unwrap();
        let s = solve_lp(&p, &opts()).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x[0] - 0.6).abs() < 1e-9);
        assert!((s.x[1] - 0.4).abs() < 1e-9);
    }

    #[test]
    fn beale_cycling_example_terminates() {
        // Classic cycling example for Dantzig pricing without safeguards.
        let mut p = MilpProblem::new("beale");
        let x1 = p.add_var("x1", 0.0, f64::INFINITY, -0.75).unwrap();
        let x2 = p.add_var("x2", 0.0, f64::INFINITY, 150.0).unwrap();
        let x3 = p.add_var("x3", 0.0, f64::INFINITY, -0.02).unwrap();
        let x4 = p.add_var("x4", 0.0, f64::INFINITY, 6.0).unwrap();
        p.add_row(
            "r1",
            Sense::Le,
            0.0,
            vec![(x1, 0.25), (x2, -60.0), (x3, -0.04), (x4, 9.0)],
        )
        .unwrap();
        p.add_row(
            "r2",
            Sense::Le,
            0.0,
            vec![(x1, 0.5), (x2, -90.0), (x3, -0.02), (x4, 3.0)],
        )
        .unwrap();
        p.add_row("r3", Sense::Le, 1.0, vec![(x3, 1.0)]).unwrap();
        let s = solve_lp(&p, &opts()).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective + 0.05).abs() < 1e-9);
    }

    #[test]
    fn duals_price_the_binding_row() {
        // min 3x + 2y s.t. x + y >= 2, x, y >= 0 -> y = 2 at optimum,
        // dual of the covering row equals the cheaper cost.
        let mut p = MilpProblem::new("dual");
        let x = p.add_var("x", 0.0, f64::INFINITY, 3.0).unwrap();
        let y = p.add_var("y", 0.0, f64::INFINITY, 2.0).unwrap();
        p.add_row("cover", Sense::Ge, 2.0, vec![(x, 1.0), (y, 1.0)]).unwrap();
        let s = solve_lp(&p, &opts()).unwrap();
        assert!((s.objective - 4.0).abs() < 1e-9);
        assert!((s.row_duals[0] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn respects_fixed_variables() {
        let mut p = MilpProblem::new("fixed");
        let x = p.add_var("x", 2.0, 2.0, -1.0).unwrap();
        let y = p.add_var("y", 0.0, 10.0, -1.0).unwrap();
        p.add_row("r", Sense::Le, 5.0, vec![(x, 1.0), (y, 1.0)]).unwrap();
        let s = solve_lp(&p, &opts()).unwrap();
        assert!((s.x[0] - 2.0).abs() < 1e-12);
        assert!((s.x[1] - 3.0).abs() < 1e-9);
    }
}
