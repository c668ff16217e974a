//! Cross-checks branch and bound against exhaustive enumeration.
//!
//! The oracle instances are pure binary programs small enough to evaluate
//! every assignment directly, so the reference optimum involves no LP
//! machinery at all.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use visched_milp::{solve_milp, MilpOptions, MilpProblem, MilpStatus, Sense};

fn grid(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    let steps = ((hi - lo) / 0.25).round() as i64;
    lo + 0.25 * rng.gen_range(0..=steps) as f64
}

fn random_binary_program(seed: u64) -> MilpProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nb = rng.gen_range(4..=10);
    let m = rng.gen_range(2..=6);
    let mut p = MilpProblem::new("rand_bin");
    for j in 0..nb {
        let c = grid(&mut rng, -5.0, 5.0);
        p.add_binary(&format!("b{j}"), c).unwrap();
    }
    for i in 0..m {
        let mut coeffs = Vec::new();
        for j in 0..nb {
            if rng.gen_range(0.0..1.0) < 0.7 {
                let a = grid(&mut rng, -3.0, 3.0);
                if a != 0.0 {
                    coeffs.push((j, a));
                }
            }
        }
        if coeffs.is_empty() {
            coeffs.push((rng.gen_range(0..nb), 1.0));
        }
        let sense = if rng.gen_range(0..2) == 0 { Sense::Le } else { Sense::Ge };
        let at_half: f64 = coeffs.iter().map(|&(_, a)| a * 0.5).sum();
        let rhs = at_half + grid(&mut rng, -2.0, 2.0);
        p.add_row(&format!("r{i}"), sense, rhs, coeffs).unwrap();
    }
    p
}

/// Best objective over all binary assignments, or None when infeasible.
fn enumerate_assignments(p: &MilpProblem) -> Option<f64> {
    let n = p.num_vars();
    assert!(n <= 16, "enumeration oracle limited to small problems");
    let mut best: Option<f64> = None;
    let mut x = vec![0.0; n];
    for mask in 0u32..(1 << n) {
        for (j, xv) in x.iter_mut().enumerate() {
            *xv = ((mask >> j) & 1) as f64;
        }
        let feasible = p.rows().iter().all(|row| {
            let v: f64 = row.coeffs.iter().map(|&(j, a)| a * x[j]).sum();
            match row.sense {
                Sense::Le => v <= row.rhs + 1e-9,
                Sense::Ge => v >= row.rhs - 1e-9,
                Sense::Eq => (v - row.rhs).abs() <= 1e-9,
            }
        });
        if feasible {
            let obj = p.objective_value(&x);
            if best.map_or(true, |b| obj < b) {
                best = Some(obj);
            }
        }
    }
    best
}

#[test]
fn matches_enumeration_on_random_binary_programs() {
    let opts = MilpOptions::default();
    let mut optimal = 0;
    let mut infeasible = 0;
    for seed in 0..40u64 {
        let p = random_binary_program(seed);
        let truth = enumerate_assignments(&p);
        let sol = solve_milp(&p, &opts).unwrap();
        match (truth, sol.status) {
            (Some(obj), MilpStatus::Optimal) => {
                assert!(
                    (obj - sol.objective).abs() <= 1e-6 * (1.0 + obj.abs()),
                    "seed {seed}: oracle {obj} vs solver {}",
                    sol.objective
                );
                let check = p.check_solution(&sol.x);
                assert!(check.max_violation() <= 1e-6, "seed {seed}: infeasible incumbent");
                assert!(check.max_integrality_violation == 0.0, "seed {seed}: fractional incumbent");
                assert!(
                    sol.best_bound <= sol.objective + 1e-9,
                    "seed {seed}: bound above incumbent"
                );
                optimal += 1;
            }
            (None, MilpStatus::Infeasible) => infeasible += 1,
            (t, s) => panic!("seed {seed}: oracle {t:?} but solver {s:?}"),
        }
    }
    assert!(optimal >= 20, "only {optimal} optimal instances compared");
    assert!(infeasible >= 2, "only {infeasible} infeasible instances seen");
}

#[test]
fn incumbent_history_improves_monotonically() {
    for seed in 0..40u64 {
        let p = random_binary_program(seed);
        let sol = solve_milp(&p, &MilpOptions::default()).unwrap();
        for w in sol.incumbent_history.windows(2) {
            assert!(w[1].1 < w[0].1, "seed {seed}: history not improving");
        }
        if sol.status == MilpStatus::Optimal {
            let last = sol.incumbent_history.last().expect("optimal run has an incumbent");
            assert_eq!(last.1, sol.objective);
        }
    }
}

#[test]
fn answers_are_identical_for_any_worker_count() {
    for seed in 0..20u64 {
        let p = random_binary_program(seed);
        let mut o1 = MilpOptions::default();
        o1.workers = 1;
        let mut o8 = MilpOptions::default();
        o8.workers = 8;
        let s1 = solve_milp(&p, &o1).unwrap();
        let s8 = solve_milp(&p, &o8).unwrap();
        assert_eq!(s1.status, s8.status, "seed {seed}");
        assert_eq!(s1.x, s8.x, "seed {seed}");
        assert_eq!(s1.objective.to_bits(), s8.objective.to_bits(), "seed {seed}");
        assert_eq!(s1.nodes, s8.nodes, "seed {seed}");
        assert_eq!(s1.incumbent_history, s8.incumbent_history, "seed {seed}");
    }
}

#[test]
fn mixed_integer_fixed_charge_network() {
    // Two suppliers with opening costs 10 and 12, unit costs 2 and 3,
    // capacity 8 each, demand 6. Cheapest plan opens only the first.
    let mut p = MilpProblem::new("fixed_charge");
    let y1 = p.add_binary("open1", 10.0).unwrap();
    let y2 = p.add_binary("open2", 12.0).unwrap();
    let x1 = p.add_var("ship1", 0.0, 8.0, 2.0).unwrap();
    let x2 = p.add_var("ship2", 0.0, 8.0, 3.0).unwrap();
    p.add_row("cap1", Sense::Le, 0.0, vec![(x1, 1.0), (y1, -8.0)]).unwrap();
    p.add_row("cap2", Sense::Le, 0.0, vec![(x2, 1.0), (y2, -8.0)]).unwrap();
    p.add_row("demand", Sense::Ge, 6.0, vec![(x1, 1.0), (x2, 1.0)]).unwrap();
    let sol = solve_milp(&p, &MilpOptions::default()).unwrap();
    assert_eq!(sol.status, MilpStatus::Optimal);
    assert!((sol.objective - 22.0).abs() < 1e-9);
    assert_eq!(sol.x[y1], 1.0);
    assert_eq!(sol.x[y2], 0.0);
    assert!((sol.x[x1] - 6.0).abs() < 1e-9);
}

#[test]
fn equal_cost_optima_resolve_the_same_way_every_run() {
    // Symmetric problem with two optimal solutions; the tie must resolve
    // identically across runs and worker counts.
    let mut p = MilpProblem::new("tie");
    let a = p.add_binary("a", -1.0).unwrap();
    let b = p.add_binary("b", -1.0).unwrap();
    p.add_row("pick_one", Sense::Le, 1.0, vec![(a, 1.0), (b, 1.0)]).unwrap();
    let mut runs = Vec::new();
    for workers in [1usize, 2, 8, 1] {
        let mut o = MilpOptions::default();
        o.workers = workers;
        runs.push(solve_milp(&p, &o).unwrap());
    }
    for r in &runs[1..] {
        assert_eq!(r.x, runs[0].x);
        assert_eq!(r.incumbent_history, runs[0].incumbent_history);
    }
    assert!((runs[0].objective + 1.0).abs() < 1e-12);
}

#[test]
fn node_limit_reports_partial_result() {
    let p = random_binary_program(7);
    let mut o = MilpOptions::default();
    o.max_nodes = 1;
    let sol = solve_milp(&p, &o).unwrap();
    if sol.status == MilpStatus::NodeLimit {
        assert!(sol.best_bound.is_finite());
    }
}
