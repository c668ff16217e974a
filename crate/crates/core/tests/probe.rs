//! Temporary probe: dissect one Method IV interval problem.

use visched_core::casedata::builtin_case;
use visched_core::dispatch::{build_interval_problem, MethodConfig};
use visched_core::pipeline::{feature_boxes, train_for_case, TrainingPlan};
use visched_core::surrogate::{encode_relu_milp, propagate_bounds};
use visched_milp::{solve_lp, solve_milp, LpOptions, MilpOptions};

#[test]
#[ignore]
fn probe_interval_problem() {
    let case = builtin_case();
    let models = train_for_case(&case, &TrainingPlan::standard(7)).unwrap();
    let sg = case.sg_aggregate().unwrap();
    let wsum: f64 = (0..case.ibrs.len()).map(|j| case.ibr_weight(j)).sum();
    let (nbox, _) = feature_boxes(&case, 0.06).unwrap();
    println!("nadir box {nbox:?}");

    let adpe = 0.004784057822393412; // interval 1 step
    let m_range = (sg.m, sg.m + wsum * 8.0);
    let d_range = (sg.d, sg.d + wsum * 6.0);

    let nb = propagate_bounds(
        &models.nadir,
        &[m_range, d_range, (adpe, adpe)],
    )
    .unwrap();
    let nfrag = encode_relu_milp(&models.nadir, &nb).unwrap();
    println!(
        "nadir frag: {} binaries, {} active, {} inactive",
        nfrag.n_binaries, nfrag.n_always_active, nfrag.n_always_inactive
    );
    let mut pfrags = Vec::new();
    for j in 0..case.ibrs.len() {
        let u = &case.ibrs[j].params;
        let pb = propagate_bounds(
            &models.peak,
            &[m_range, d_range, u.m_bounds, u.d_bounds, (adpe, adpe)],
        )
        .unwrap();
        let f = encode_relu_milp(&models.peak, &pb).unwrap();
        println!(
            "peak frag {j}: {} binaries, {} active, {} inactive",
            f.n_binaries, f.n_always_active, f.n_always_inactive
        );
        pfrags.push(f);
    }

    // interval-1 loads: proportional split of 5959.97 MW
    let total = 5959.972067028516;
    let nominal: f64 = case.network.loads.iter().map(|l| l.mw).sum();
    let loads: Vec<(u32, f64)> = case
        .network
        .loads
        .iter()
        .map(|l| (l.bus, l.mw / nominal * total))
        .collect();
    let cfg = MethodConfig::method_iv();
    let p = build_interval_problem(&case, &loads, adpe, &cfg, Some(&nfrag), &pfrags).unwrap();
    let nbin = p.vars().iter().filter(|v| v.is_integer).count();
    println!("problem: {} vars ({} binary), {} rows", p.vars().len(), nbin, p.num_rows());

    // Root LP relaxation
    let t0 = std::time::Instant::now();
    let lp = solve_lp(&p, &LpOptions::default());
    match &lp {
        Ok(s) => println!(
            "root LP: {:?} obj {:.4} in {:.1} ms, {} iters",
            s.status,
            s.objective,
            t0.elapsed().as_secs_f64() * 1e3,
            s.iterations
        ),
        Err(e) => println!("root LP error: {e}"),
    }

    // Full solve, moderate budget
    let mut opts = MilpOptions::default();
    opts.max_nodes = 3000;
    opts.time_limit = Some(30.0);
    let t1 = std::time::Instant::now();
    match solve_milp(&p, &opts) {
        Ok(s) => println!(
            "milp: {:?} obj {:.4} best_bound {:.4} gap {:.2e} nodes {} in {:.1} s, incumbent {}",
            s.status,
            s.objective,
            s.best_bound,
            s.gap,
            s.nodes,
            t1.elapsed().as_secs_f64(),
            !s.x.is_empty()
        ),
        Err(e) => println!("milp error: {e}"),
    }
}
