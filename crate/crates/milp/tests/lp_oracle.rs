//! Cross-checks the simplex against brute-force vertex enumeration.
//!
//! A bounded LP attains its optimum at a vertex, and every vertex is the
//! intersection of n active constraints drawn from the rows and bounds. The
//! oracle enumerates all such intersections with its own Gaussian
//! elimination, so it shares no code path with the solver under test.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use visched_milp::{solve_lp, LpOptions, LpStatus, MilpProblem, Sense};

struct Cons {
    a: Vec<f64>,
    sense: Sense,
    rhs: f64,
}

fn satisfied(c: &Cons, x: &[f64], tol: f64) -> bool {
    let v: f64 = c.a.iter().zip(x).map(|(a, x)| a * x).sum();
    match c.sense {
        Sense::Le => v <= c.rhs + tol,
        Sense::Ge => v >= c.rhs - tol,
        Sense::Eq => (v - c.rhs).abs() <= tol,
    }
}

fn gauss(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for k in 0..n {
        let piv = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))?;
        if a[piv][k].abs() < 1e-9 {
            return None;
        }
        a.swap(k, piv);
        b.swap(k, piv);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            if f != 0.0 {
                for j in k..n {
                    a[i][j] -= f * a[k][j];
                }
                b[i] -= f * b[k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = b[i];
        for j in i + 1..n {
            s -= a[i][j] * x[j];
        }
        x[i] = s / a[i][i];
    }
    Some(x)
}

/// Minimum objective over all feasible vertices, or None when infeasible.
fn enumerate_vertices(n: usize, cons: &[Cons], cost: &[f64]) -> Option<(f64, Vec<f64>)> {
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut idx: Vec<usize> = (0..n).collect();
    loop {
        let a: Vec<Vec<f64>> = idx.iter().map(|&i| cons[i].a.clone()).collect();
        let b: Vec<f64> = idx.iter().map(|&i| cons[i].rhs).collect();
        if let Some(x) = gauss(a, b) {
            if cons.iter().all(|c| satisfied(c, &x, 1e-7)) {
                let obj: f64 = cost.iter().zip(&x).map(|(c, x)| c * x).sum();
                if best.as_ref().map_or(true, |(o, _)| obj < *o) {
                    best = Some((obj, x));
                }
            }
        }
        // Advance the combination in lexicographic order.
        let mut k = n;
        loop {
            if k == 0 {
                return best;
            }
            k -= 1;
            if idx[k] < cons.len() - (n - k) {
                idx[k] += 1;
                for j in k + 1..n {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Full constraint pool for a problem: rows plus finite bound rows.
fn constraint_pool(p: &MilpProblem) -> Vec<Cons> {
    let n = p.num_vars();
    let mut pool = Vec::new();
    for row in p.rows() {
        let mut a = vec![0.0; n];
        for &(j, v) in &row.coeffs {
            a[j] += v;
        }
        pool.push(Cons { a, sense: row.sense, rhs: row.rhs });
    }
    for (j, v) in p.vars().iter().enumerate() {
        if v.lower.is_finite() {
            let mut a = vec![0.0; n];
            a[j] = 1.0;
            pool.push(Cons { a, sense: Sense::Ge, rhs: v.lower });
        }
        if v.upper.is_finite() {
            let mut a = vec![0.0; n];
            a[j] = 1.0;
            pool.push(Cons { a, sense: Sense::Le, rhs: v.upper });
        }
    }
    pool
}

/// Random value on a 0.25 grid in [lo, hi].
fn grid(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    let steps = ((hi - lo) / 0.25).round() as i64;
    lo + 0.25 * rng.gen_range(0..=steps) as f64
}

fn random_lp(seed: u64) -> MilpProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=5);
    let m = rng.gen_range(1..=6);
    let mut p = MilpProblem::new("rand_lp");
    let mut mid = Vec::with_capacity(n);
    for j in 0..n {
        let lo = grid(&mut rng, -3.0, 0.0);
        let hi = grid(&mut rng, 0.5, 4.0);
        let c = grid(&mut rng, -3.0, 3.0);
        p.add_var(&format!("x{j}"), lo, hi, c).unwrap();
        mid.push((lo + hi) / 2.0);
    }
    for i in 0..m {
        let mut coeffs = Vec::new();
        for j in 0..n {
            if rng.gen_range(0.0..1.0) < 0.7 {
                let a = grid(&mut rng, -2.0, 2.0);
                if a != 0.0 {
                    coeffs.push((j, a));
                }
            }
        }
        if coeffs.is_empty() {
            coeffs.push((rng.gen_range(0..n), 1.0));
        }
        let sense = match rng.gen_range(0..10) {
            0..=4 => Sense::Le,
            5..=8 => Sense::Ge,
            _ => Sense::Eq,
        };
        let at_mid: f64 = coeffs.iter().map(|&(j, a)| a * mid[j]).sum();
        let off = if sense == Sense::Eq {
            grid(&mut rng, -0.5, 0.5)
        } else {
            grid(&mut rng, -1.5, 1.5)
        };
        p.add_row(&format!("r{i}"), sense, at_mid + off, coeffs).unwrap();
    }
    p
}

fn assert_primal_feasible(p: &MilpProblem, x: &[f64], tol: f64) {
    let check = p.check_solution(x);
    assert!(
        check.max_bound_violation <= tol && check.max_row_violation <= tol,
        "solver point violates constraints by {:.3e}",
        check.max_bound_violation.max(check.max_row_violation)
    );
}

#[test]
fn matches_vertex_enumeration_on_random_instances() {
    let opts = LpOptions::default();
    let mut optimal = 0;
    let mut infeasible = 0;
    for seed in 0..60u64 {
        let p = random_lp(seed);
        let pool = constraint_pool(&p);
        let cost: Vec<f64> = p.vars().iter().map(|v| v.obj).collect();
        let truth = enumerate_vertices(p.num_vars(), &pool, &cost);
        let sol = solve_lp(&p, &opts).unwrap();
        match (&truth, sol.status) {
            (Some((obj, _)), LpStatus::Optimal) => {
                assert!(
                    (obj - sol.objective).abs() <= 1e-6 * (1.0 + obj.abs()),
                    "seed {seed}: oracle {obj} vs solver {}",
                    sol.objective
                );
                assert_primal_feasible(&p, &sol.x, 1e-7);
                optimal += 1;
            }
            (None, LpStatus::Infeasible) => infeasible += 1,
            (t, s) => panic!("seed {seed}: oracle {:?} but solver {s:?}", t.as_ref().map(|x| x.0)),
        }
    }
    assert!(optimal >= 25, "only {optimal} optimal instances compared");
    assert!(infeasible >= 3, "only {infeasible} infeasible instances seen");
}

#[test]
fn shadow_prices_match_finite_differences() {
    // On instances with a clearly nondegenerate optimum, the reported row
    // duals must equal the sensitivity of the objective to the rhs.
    let opts = LpOptions::default();
    let mut checked = 0;
    for seed in 100..160u64 {
        let p = random_lp(seed);
        let sol = solve_lp(&p, &opts).unwrap();
        if sol.status != LpStatus::Optimal {
            continue;
        }
        // Degeneracy filter: skip if any variable sits within snapping
        // distance of a bound while its reduced cost is near zero, or any
        // nonbasic reduced cost is tiny.
        let mut degenerate = false;
        for (j, v) in p.vars().iter().enumerate() {
            let at_bound = (sol.x[j] - v.lower).abs() < 1e-6 || (sol.x[j] - v.upper).abs() < 1e-6;
            if at_bound && sol.reduced_costs[j].abs() < 1e-6 {
                degenerate = true;
            }
        }
        for (ri, row) in p.rows().iter().enumerate() {
            let v: f64 = row.coeffs.iter().map(|&(j, a)| a * sol.x[j]).sum();
            let slack = (v - row.rhs).abs();
            if slack < 1e-6 && sol.row_duals[ri].abs() < 1e-6 && row.sense != Sense::Eq {
                degenerate = true;
            }
        }
        if degenerate {
            continue;
        }
        let eps = 1e-5;
        for ri in 0..p.num_rows() {
            // Rebuild with a perturbed rhs on this row only.
            let mut q2 = MilpProblem::new("perturbed");
            for var in p.vars() {
                q2.add_var(&var.name, var.lower, var.upper, var.obj).unwrap();
            }
            for (i, r) in p.rows().iter().enumerate() {
                let rhs = if i == ri { r.rhs + eps } else { r.rhs };
                q2.add_row(&r.name, r.sense, rhs, r.coeffs.clone()).unwrap();
            }
            let sol2 = solve_lp(&q2, &opts).unwrap();
            if sol2.status != LpStatus::Optimal {
                continue;
            }
            let fd = (sol2.objective - sol.objective) / eps;
            assert!(
                (fd - sol.row_duals[ri]).abs() <= 1e-3 * (1.0 + sol.row_duals[ri].abs()),
                "seed {seed} row {ri}: fd {fd} vs dual {}",
                sol.row_duals[ri]
            );
            checked += 1;
        }
    }
    assert!(checked >= 30, "only {checked} dual sensitivities verified");
}

#[test]
fn bound_only_problem_parks_at_best_bounds() {
    let mut p = MilpProblem::new("bounds_only");
    p.add_var("a", -1.0, 2.0, 1.0).unwrap();
    p.add_var("b", -1.0, 2.0, -1.0).unwrap();
    p.add_var("c", -1.0, 2.0, 0.0).unwrap();
    let sol = solve_lp(&p, &LpOptions::default()).unwrap();
    assert_eq!(sol.status, LpStatus::Optimal);
    assert!((sol.x[0] + 1.0).abs() < 1e-12);
    assert!((sol.x[1] - 2.0).abs() < 1e-12);
    assert!((sol.objective + 3.0).abs() < 1e-12);
}

#[test]
fn square_equality_system_is_solved_exactly() {
    let mut p = MilpProblem::new("square");
    let x = p.add_var("x", -10.0, 10.0, 2.0).unwrap();
    let y = p.add_var("y", -10.0, 10.0, -1.0).unwrap();
    let z = p.add_var("z", -10.0, 10.0, 0.5).unwrap();
    p.add_row("e1", Sense::Eq, 6.0, vec![(x, 1.0), (y, 2.0), (z, 1.0)]).unwrap();
    p.add_row("e2", Sense::Eq, 1.0, vec![(x, 1.0), (y, -1.0)]).unwrap();
    p.add_row("e3", Sense::Eq, 3.0, vec![(y, 1.0), (z, 1.0)]).unwrap();
    // Unique point: y such that x = y + 1, z = 3 - y, (y+1) + 2y + (3-y) = 6.
    let sol = solve_lp(&p, &LpOptions::default()).unwrap();
    assert_eq!(sol.status, LpStatus::Optimal);
    assert!((sol.x[x] - 2.0).abs() < 1e-9);
    assert!((sol.x[y] - 1.0).abs() < 1e-9);
    assert!((sol.x[z] - 2.0).abs() < 1e-9);
}

#[test]
fn duplicate_and_redundant_rows_are_harmless() {
    let mut p = MilpProblem::new("redundant");
    let x = p.add_var("x", 0.0, 10.0, -1.0).unwrap();
    for i in 0..5 {
        p.add_row(&format!("r{i}"), Sense::Le, 4.0, vec![(x, 1.0)]).unwrap();
    }
    p.add_row("loose", Sense::Le, 100.0, vec![(x, 1.0)]).unwrap();
    let sol = solve_lp(&p, &LpOptions::default()).unwrap();
    assert!((sol.x[0] - 4.0).abs() < 1e-9);
}

#[test]
fn unbounded_directions_are_reported() {
    // Free variable with nonzero cost and no rows.
    let mut p = MilpProblem::new("ub1");
    p.add_var("x", f64::NEG_INFINITY, f64::INFINITY, 1.0).unwrap();
    assert_eq!(solve_lp(&p, &LpOptions::default()).unwrap().status, LpStatus::Unbounded);

    // Ray inside a cone.
    let mut q = MilpProblem::new("ub2");
    let a = q.add_var("a", 0.0, f64::INFINITY, -1.0).unwrap();
    let b = q.add_var("b", 0.0, f64::INFINITY, -1.0).unwrap();
    q.add_row("r", Sense::Ge, -1.0, vec![(a, 1.0), (b, -1.0)]).unwrap();
    assert_eq!(solve_lp(&q, &LpOptions::default()).unwrap().status, LpStatus::Unbounded);
}

#[test]
fn infeasible_equality_pair_detected() {
    let mut p = MilpProblem::new("contradiction");
    let x = p.add_var("x", -5.0, 5.0, 1.0).unwrap();
    let y = p.add_var("y", -5.0, 5.0, 1.0).unwrap();
    p.add_row("e1", Sense::Eq, 1.0, vec![(x, 1.0), (y, 1.0)]).unwrap();
    p.add_row("e2", Sense::Eq, 4.0, vec![(x, 1.0), (y, 1.0)]).unwrap();
    assert_eq!(solve_lp(&p, &LpOptions::default()).unwrap().status, LpStatus::Infeasible);
}

#[test]
fn reruns_are_bitwise_identical() {
    for seed in [3u64, 17, 41] {
        let p = random_lp(seed);
        let a = solve_lp(&p, &LpOptions::default()).unwrap();
        let b = solve_lp(&p, &LpOptions::default()).unwrap();
        assert_eq!(a.status, b.status);
        assert_eq!(a.x, b.x);
        assert_eq!(a.objective.to_bits(), b.objective.to_bits());
        assert_eq!(a.iterations, b.iterations);
    }
}
