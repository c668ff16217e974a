//! Best-bound branch and bound over binary variables.
//!
//! Nodes are explored in fixed batches of eight, ordered by (relaxation
//! bound, node id). A batch is formed before any of its LPs are solved and
//! results are committed in batch order, so the search tree, incumbent
//! sequence, and final answer do not depend on how many worker threads solve
//! the batch.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use crate::problem::MilpProblem;
use crate::simplex::{solve_lp_with_bounds, LpOptions, LpSolution, LpStatus};
use crate::{Error, Result};

const BATCH: usize = 8;

#[derive(Debug, Clone)]
pub struct MilpOptions {
    pub lp: LpOptions,
    /// Absolute gap at which an incumbent counts as proven optimal.
    pub gap_tol: f64,
    /// How far from an integer a relaxation value may sit and still count
    /// as integral.
    pub int_tol: f64,
    pub max_nodes: usize,
    /// Wall-clock cutoff in seconds; `None` runs to completion.
    pub time_limit: Option<f64>,
    /// Threads used to solve each batch of node LPs. Any value produces the
    /// same solution; only wall time changes.
    pub workers: usize,
}

impl Default for MilpOptions {
    fn default() -> Self {
        Self {
            lp: LpOptions::default(),
            gap_tol: 1e-7,
            int_tol: 1e-7,
            max_nodes: 500_000,
            time_limit: None,
            workers: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MilpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NodeLimit,
    TimeLimit,
}

#[derive(Debug, Clone)]
pub struct MilpSolution {
    pub status: MilpStatus,
    /// Best integral point found (empty if none).
    pub x: Vec<f64>,
    pub objective: f64,
    /// Proven lower bound on the optimum.
    pub best_bound: f64,
    pub gap: f64,
    pub nodes: usize,
    pub lp_iterations: usize,
    /// Improving incumbents as (node id, objective), in discovery order.
    pub incumbent_history: Vec<(usize, f64)>,
}

struct Pending {
    bound: f64,
    id: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl PartialEq for Pending {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
    }
}
impl Eq for Pending {}
impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Pending {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed so the max-heap pops the lowest bound, lowest id first.
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.id.cmp(&self.id))
    }
}

pub fn solve_milp(p: &MilpProblem, opts: &MilpOptions) -> Result<MilpSolution> {
    p.validate()?;
    let ints = p.integer_vars();
    let lb0: Vec<f64> = p.vars().iter().map(|v| v.lower).collect();
    let ub0: Vec<f64> = p.vars().iter().map(|v| v.upper).collect();
    let start = Instant::now();
    let mut lp_iterations = 0usize;

    let root = solve_lp_with_bounds(p, &opts.lp, Some((&lb0, &ub0)))?;
    lp_iterations += root.iterations;
    match root.status {
        LpStatus::Infeasible => {
            return Ok(empty_solution(MilpStatus::Infeasible, 1, lp_iterations));
        }
        LpStatus::Unbounded => {
            return Ok(empty_solution(MilpStatus::Unbounded, 1, lp_iterations));
        }
        LpStatus::Optimal => {}
    }
    if ints.is_empty() {
        let obj = root.objective;
        return Ok(MilpSolution {
            status: MilpStatus::Optimal,
            x: root.x,
            objective: obj,
            best_bound: obj,
            gap: 0.0,
            nodes: 1,
            lp_iterations,
            incumbent_history: vec![(0, obj)],
        });
    }

    let mut heap: BinaryHeap<Pending> = BinaryHeap::new();
    let mut next_id = 1usize;
    let mut incumbent: Option<(Vec<f64>, f64)> = None;
    let mut history: Vec<(usize, f64)> = Vec::new();
    let mut nodes = 1usize;
    let mut status = MilpStatus::Optimal;
    let mut bound_at_stop = f64::NEG_INFINITY;
    let mut stopped_early = false;

    commit_node(
        p, &ints, opts, &root, 0, &lb0, &ub0, &mut heap, &mut next_id, &mut incumbent,
        &mut history,
    )?;

    loop {
        let Some(top) = heap.peek() else { break };
        let best_bound = top.bound;
        if let Some((_, inc)) = &incumbent {
            if best_bound >= inc - opts.gap_tol {
                break;
            }
        }
        if nodes >= opts.max_nodes {
            status = MilpStatus::NodeLimit;
            bound_at_stop = best_bound;
            stopped_early = true;
            break;
        }
        if let Some(limit) = opts.time_limit {
            if start.elapsed().as_secs_f64() > limit {
                status = MilpStatus::TimeLimit;
                bound_at_stop = best_bound;
                stopped_early = true;
                break;
            }
        }

        let cutoff = incumbent
            .as_ref()
            .map_or(f64::INFINITY, |(_, o)| o - opts.gap_tol);
        let mut batch: Vec<Pending> = Vec::with_capacity(BATCH);
        while batch.len() < BATCH {
            let Some(node) = heap.pop() else { break };
            if node.bound >= cutoff {
                continue;
            }
            batch.push(node);
        }
        if batch.is_empty() {
            continue;
        }
        nodes += batch.len();

        let results = solve_batch(p, &opts.lp, &batch, opts.workers);
        for (node, res) in batch.iter().zip(results) {
            let sol = res?;
            lp_iterations += sol.iterations;
            match sol.status {
                LpStatus::Infeasible => {}
                LpStatus::Unbounded => {
                    return Err(Error::Numerical(
                        "node relaxation unbounded below a bounded root".into(),
                    ));
                }
                LpStatus::Optimal => {
                    commit_node(
                        p, &ints, opts, &sol, node.id, &node.lower, &node.upper, &mut heap,
                        &mut next_id, &mut incumbent, &mut history,
                    )?;
                }
            }
        }
    }

    let (x, objective) = match incumbent {
        Some((x, o)) => (x, o),
        None => {
            let st = if stopped_early { status } else { MilpStatus::Infeasible };
            let mut s = empty_solution(st, nodes, lp_iterations);
            s.best_bound = if stopped_early { bound_at_stop } else { f64::INFINITY };
            return Ok(s);
        }
    };
    let best_bound = if stopped_early { bound_at_stop } else { objective };
    Ok(MilpSolution {
        status,
        x,
        objective,
        best_bound,
        gap: objective - best_bound,
        nodes,
        lp_iterations,
        incumbent_history: history,
    })
}

fn empty_solution(status: MilpStatus, nodes: usize, lp_iterations: usize) -> MilpSolution {
    MilpSolution {
        status,
        x: Vec::new(),
        objective: f64::INFINITY,
        best_bound: f64::INFINITY,
        gap: f64::INFINITY,
        nodes,
        lp_iterations,
        incumbent_history: Vec::new(),
    }
}

/// Records a solved node: prune, accept as incumbent, or branch.
#[allow(clippy::too_many_arguments)]
fn commit_node(
    p: &MilpProblem,
    ints: &[usize],
    opts: &MilpOptions,
    sol: &LpSolution,
    id: usize,
    lower: &[f64],
    upper: &[f64],
    heap: &mut BinaryHeap<Pending>,
    next_id: &mut usize,
    incumbent: &mut Option<(Vec<f64>, f64)>,
    history: &mut Vec<(usize, f64)>,
) -> Result<()> {
    let cutoff = incumbent
        .as_ref()
        .map_or(f64::INFINITY, |(_, o)| o - opts.gap_tol);
    if sol.objective >= cutoff {
        return Ok(());
    }
    if let Some(j) = most_fractional(&sol.x, ints, opts.int_tol) {
        let split = sol.x[j];
        let mut down_ub = upper.to_vec();
        down_ub[j] = split.floor();
        let mut up_lb = lower.to_vec();
        up_lb[j] = split.floor() + 1.0;
        heap.push(Pending {
            bound: sol.objective,
            id: *next_id,
            lower: lower.to_vec(),
            upper: down_ub,
        });
        heap.push(Pending {
            bound: sol.objective,
            id: *next_id + 1,
            lower: up_lb,
            upper: upper.to_vec(),
        });
        *next_id += 2;
        return Ok(());
    }
    // Integral within tolerance: snap and verify before accepting.
    let mut xr = sol.x.clone();
    for &j in ints {
        xr[j] = xr[j].round();
    }
    let check = p.check_solution(&xr);
    if check.max_violation() > 1e-6 {
        return Err(Error::Numerical(format!(
            "integral candidate at node {id} violates constraints by {:.3e}",
            check.max_violation()
        )));
    }
    let obj = check.objective;
    let better = incumbent.as_ref().map_or(true, |(_, o)| obj < o - 1e-12);
    if better {
        *incumbent = Some((xr, obj));
        history.push((id, obj));
    }
    Ok(())
}

/// Branching variable: the relaxation value closest to one half, lowest
/// index on ties. None when every integer variable is integral.
fn most_fractional(x: &[f64], ints: &[usize], tol: f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for &j in ints {
        let frac = x[j] - x[j].floor();
        if frac.min(1.0 - frac) <= tol {
            continue;
        }
        let score = (frac - 0.5).abs();
        match best {
            Some((_, s)) if score >= s => {}
            _ => best = Some((j, score)),
        }
    }
    best.map(|(j, _)| j)
}

fn solve_batch(
    p: &MilpProblem,
    lp_opts: &LpOptions,
    batch: &[Pending],
    workers: usize,
) -> Vec<Result<LpSolution>> {
    let solve_one = |nd: &Pending| solve_lp_with_bounds(p, lp_opts, Some((&nd.lower, &nd.upper)));
    if workers <= 1 || batch.len() == 1 {
        return batch.iter().map(solve_one).collect();
    }
    let w = workers.min(batch.len());
    let mut out: Vec<Option<Result<LpSolution>>> = (0..batch.len()).map(|_| None).collect();
    std::thread::scope(|s| {
        let mut handles = Vec::with_capacity(w);
        for t in 0..w {
            handles.push(s.spawn(move || {
                let mut mine = Vec::new();
                let mut i = t;
                while i < batch.len() {
                    mine.push((i, solve_lp_with_bounds(p, lp_opts, Some((&batch[i].lower, &batch[i].upper)))));
                    i += w;
                }
                mine
            }));
        }
        for h in handles {
            for (i, r) in h.join().expect("batch worker panicked") {
                out[i] = Some(r);
            }
        }
    });
    out.into_iter().map(|o| o.expect("batch slot filled")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::Sense;

    fn knapsack() -> MilpProblem {
        // max 5a + 4b + 3c s.t. 2a + 3b + c <= 4  ->  a = c = 1, obj 8.
        let mut p = MilpProblem::new("knapsack");
        let a = p.add_binary("a", -5.0).unwrap();
        let b = p.add_binary("b", -4.0).unwrap();
        let c = p.add_binary("c", -3.0).unwrap();
        p.add_row("w", Sense::Le, 4.0, vec![(a, 2.0), (b, 3.0), (c, 1.0)]).unwrap();
        p
    }

    #[test]
    fn solves_small_knapsack() {
        let s = solve_milp(&knapsack(), &MilpOptions::default()).unwrap();
        assert_eq!(s.status, MilpStatus::Optimal);
        assert!((s.objective + 8.0).abs() < 1e-9);
        assert_eq!(s.x.iter().map(|v| v.round() as i64).collect::<Vec<_>>(), vec![1, 0, 1]);
        assert!(s.gap <= 1e-9);
    }

    #[test]
    fn infeasible_binary_system() {
        let mut p = MilpProblem::new("infeas");
        let a = p.add_binary("a", 1.0).unwrap();
        let b = p.add_binary("b", 1.0).unwrap();
        p.add_row("lo", Sense::Ge, 3.0, vec![(a, 1.0), (b, 1.0)]).unwrap();
        let s = solve_milp(&p, &MilpOptions::default()).unwrap();
        assert_eq!(s.status, MilpStatus::Infeasible);
    }

    #[test]
    fn pure_lp_passes_through() {
        let mut p = MilpProblem::new("lp");
        let x = p.add_var("x", 0.0, 2.0, -1.0).unwrap();
        p.add_row("r", Sense::Le, 1.5, vec![(x, 1.0)]).unwrap();
        let s = solve_milp(&p, &MilpOptions::default()).unwrap();
        assert_eq!(s.status, MilpStatus::Optimal);
        assert!((s.x[0] - 1.5).abs() < 1e-9);
        assert_eq!(s.nodes, 1);
    }

    #[test]
    fn worker_count_does_not_change_the_answer() {
        let p = {
            // A problem with enough structure to open several nodes.
            let mut p = MilpProblem::new("multi");
            let mut vars = Vec::new();
            for i in 0..10 {
                vars.push(p.add_binary(&format!("b{i}"), -((i % 4) as f64 + 1.0)).unwrap());
            }
            let coeffs: Vec<(usize, f64)> =
                vars.iter().enumerate().map(|(i, &v)| (v, (i % 3) as f64 + 1.0)).collect();
            p.add_row("cap", Sense::Le, 7.5, coeffs).unwrap();
            let odd: Vec<(usize, f64)> =
                vars.iter().skip(1).step_by(2).map(|&v| (v, 1.0)).collect();
            p.add_row("odd", Sense::Le, 2.0, odd).unwrap();
            p
        };
        let mut o1 = MilpOptions::default();
        o1.workers = 1;
        let mut o8 = MilpOptions::default();
        o8.workers = 8;
        let s1 = solve_milp(&p, &o1).unwrap();
        let s8 = solve_milp(&p, &o8).unwrap();
        assert_eq!(s1.x, s8.x);
        assert_eq!(s1.objective, s8.objective);
        assert_eq!(s1.nodes, s8.nodes);
        assert_eq!(s1.incumbent_history, s8.incumbent_history);
    }
}
