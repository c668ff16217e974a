//! Horizon scheduling: per-interval solves, solution extraction and
//! verification, stability re-fixing, and the fixed-(M, D) sizing search.

use serde::{Deserialize, Serialize};
use visched_milp::{solve_milp, MilpOptions, MilpStatus};

use crate::casedata::{Case, ForecastSet};
use crate::freq::stability_check;
use crate::surrogate::{encode_relu_milp, predict, propagate_bounds, Mlp, MilpFragment};
use crate::{Error, Result};

use super::build::{build_relaxed, Relax};
use super::pwl::{eval_segments, piecewise_cost};
use super::{build_interval_problem, IbrInertiaMode, MethodConfig, MethodVariant, COST_SEGMENTS};

/// Grid pitch of the fixed-(M, D) sizing search, p.u.
pub const FIXED_MD_GRID_STEP: f64 = 0.25;

/// The trained predictors the scheduling model encodes: one for the nadir
/// magnitude (inputs M, D, step) and one for an inverter's peak response
/// magnitude (inputs M, D, unit M, unit D, step).
#[derive(Clone, Debug)]
pub struct SurrogateModels {
    pub nadir: Mlp,
    pub peak: Mlp,
}

impl SurrogateModels {
    pub fn validate(&self) -> Result<()> {
        self.nadir.validate()?;
        self.peak.validate()?;
        if self.nadir.n_inputs() != 3 {
            return Err(Error::Params(format!(
                "nadir predictor takes {} inputs, expected 3 (M, D, step)",
                self.nadir.n_inputs()
            )));
        }
        if self.peak.n_inputs() != 5 {
            return Err(Error::Params(format!(
                "peak predictor takes {} inputs, expected 5 (M, D, unit M, unit D, step)",
                self.peak.n_inputs()
            )));
        }
        Ok(())
    }
}

/// How one interval's solve ended. Infeasible and unbounded outcomes raise
/// errors instead of being stored.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    /// Proven optimal within the gap tolerance.
    Optimal,
    /// Best incumbent at the node budget; `gap` records the proof shortfall.
    NodeLimit,
    /// Best incumbent at the wall-clock budget.
    TimeLimit,
}

/// One interval of the schedule, all power quantities in MW.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IntervalSolution {
    pub index: usize,
    pub total_load_mw: f64,
    /// Signed per-unit step entering the interval, dynamics base.
    pub d_pe: f64,
    pub p_sg_mw: Vec<f64>,
    pub ru_sg_mw: Vec<f64>,
    pub rd_sg_mw: Vec<f64>,
    pub p_ibr_mw: Vec<f64>,
    pub ru_ibr_mw: Vec<f64>,
    pub rd_ibr_mw: Vec<f64>,
    /// Transient headroom reserved per inverter; zero when not modeled.
    pub peak_mw: Vec<f64>,
    /// Virtual inertia in effect per inverter, p.u.·s on the unit base;
    /// zero in setpoint-only mode.
    pub m_ibr: Vec<f64>,
    /// Virtual damping in effect per inverter, p.u. on the unit base.
    pub d_ibr: Vec<f64>,
    /// Dollars: piecewise generation cost, and price × every reserve MW.
    pub generation_cost: f64,
    pub reserve_cost: f64,
    pub status: SolveStatus,
    pub gap: f64,
    pub nodes: usize,
    /// Binary variables in the interval's problem (surrogate neurons whose
    /// phase the bounds could not pin).
    pub binaries: usize,
    /// True when the scheduled response was unstable and the interval was
    /// re-solved with every inverter held at its default (M, D).
    pub refixed_for_stability: bool,
    /// Wall-clock milliseconds spent building and solving this interval,
    /// including any stability re-solve.
    #[serde(default)]
    pub solve_ms: f64,
}

impl IntervalSolution {
    pub fn objective(&self) -> f64 {
        self.generation_cost + self.reserve_cost
    }

    /// Aggregate inertia in effect, p.u.·s on the dynamics base.
    pub fn aggregate_inertia(&self, case: &Case) -> Result<f64> {
        if self.m_ibr.len() != case.ibrs.len() {
            return Err(Error::Params("interval belongs to a different case".into()));
        }
        let sg = case.sg_aggregate()?;
        Ok(sg.m
            + self
                .m_ibr
                .iter()
                .enumerate()
                .map(|(j, m)| m * case.ibr_weight(j))
                .sum::<f64>())
    }
}

/// A full horizon schedule.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DispatchSolution {
    pub method: MethodVariant,
    pub intervals: Vec<IntervalSolution>,
    /// Sum of the interval objectives, dollars.
    pub objective: f64,
    pub generation_cost: f64,
    pub reserve_cost: f64,
}

/// Schedules every forecast interval under one method.
///
/// Intervals are independent problems; each is built, solved, re-checked
/// against its own constraints, and (when virtual response is in play)
/// checked for a stable aggregate. An unstable scheduled response is
/// re-solved with every inverter collapsed to its default (M, D). `models`
/// may be `None` only for a configuration without frequency or headroom
/// constraints.
pub fn solve_horizon(
    case: &Case,
    forecast: &ForecastSet,
    cfg: &MethodConfig,
    models: Option<&SurrogateModels>,
    opts: &MilpOptions,
) -> Result<DispatchSolution> {
    cfg.validate()?;
    if forecast.n_intervals() == 0 {
        return Err(Error::Params("forecast has no intervals".into()));
    }
    let rel = (forecast.base_mva - case.system_mva).abs() / case.system_mva;
    if rel > 1e-6 {
        return Err(Error::Params(format!(
            "forecast per-unit base {} MVA differs from the case dynamics base {} MVA",
            forecast.base_mva, case.system_mva
        )));
    }
    let needs_models = cfg.freq_constraints || cfg.peak_reserve_constraints;
    let models = match models {
        Some(m) => {
            m.validate()?;
            Some(m)
        }
        None if needs_models => {
            return Err(Error::Params(format!(
                "method {:?} builds surrogate constraints and needs trained models",
                cfg.variant
            )));
        }
        None => None,
    };
    let fc;
    let forecast = if forecast.per_bus_mw.is_empty() {
        let mut f = forecast.clone();
        f.split_over(&case.network)?;
        fc = f;
        &fc
    } else {
        forecast
    };

    let mut intervals = Vec::with_capacity(forecast.n_intervals());
    for t in 0..forecast.n_intervals() {
        let started = std::time::Instant::now();
        let d_pe = forecast.d_pe[t];
        let loads: Vec<(u32, f64)> = forecast
            .load_buses
            .iter()
            .zip(&forecast.per_bus_mw[t])
            .map(|(&b, &mw)| (b, mw))
            .collect();
        let mut sol = solve_one(case, &loads, d_pe, cfg, models, opts, t)?;

        let pairs: Vec<(f64, f64)> =
            sol.m_ibr.iter().zip(&sol.d_ibr).map(|(&m, &d)| (m, d)).collect();
        let agg = case.aggregate_with(&pairs)?;
        if !stability_check(&agg) {
            match cfg.ibr_inertia {
                IbrInertiaMode::Scheduled => {
                    let refixed = collapse_to_defaults(case);
                    sol = solve_one(&refixed, &loads, d_pe, cfg, models, opts, t)?;
                    sol.refixed_for_stability = true;
                    let pairs: Vec<(f64, f64)> =
                        sol.m_ibr.iter().zip(&sol.d_ibr).map(|(&m, &d)| (m, d)).collect();
                    if !stability_check(&case.aggregate_with(&pairs)?) {
                        return Err(Error::Dispatch(format!(
                            "interval {t}: aggregate response unstable even with every \
                             inverter at its default (M, D)"
                        )));
                    }
                }
                _ => {
                    return Err(Error::Dispatch(format!(
                        "interval {t}: aggregate response with the configured (M, D) is \
                         unstable"
                    )));
                }
            }
        }
        sol.solve_ms = started.elapsed().as_secs_f64() * 1e3;
        intervals.push(sol);
    }

    let generation_cost = intervals.iter().map(|i| i.generation_cost).sum();
    let reserve_cost: f64 = intervals.iter().map(|i| i.reserve_cost).sum();
    Ok(DispatchSolution {
        method: cfg.variant,
        objective: generation_cost + reserve_cost,
        generation_cost,
        reserve_cost,
        intervals,
    })
}

/// Smallest fixed (M, D) every inverter can hold so the rate limit and the
/// nadir limit are met at the largest forecast step, searched on a 0.25-pitch
/// grid over the shared schedulable box and ranked by M+D, then M.
pub fn worst_case_fixed_md(
    case: &Case,
    max_dpe: f64,
    models: &SurrogateModels,
) -> Result<(f64, f64)> {
    models.validate()?;
    if case.ibrs.is_empty() {
        return Err(Error::Params("case has no inverters to size".into()));
    }
    let adpe = max_dpe.abs();
    let bx = models.nadir.input_box();
    if adpe < bx[2].0 - 1e-12 || adpe > bx[2].1 + 1e-12 {
        return Err(Error::Domain(format!(
            "surrogate out of domain: worst step {adpe} outside the trained box [{}, {}]",
            bx[2].0, bx[2].1
        )));
    }
    let mlo = case.ibrs.iter().map(|u| u.params.m_bounds.0).fold(f64::MIN, f64::max);
    let mhi = case.ibrs.iter().map(|u| u.params.m_bounds.1).fold(f64::MAX, f64::min);
    let dlo = case.ibrs.iter().map(|u| u.params.d_bounds.0).fold(f64::MIN, f64::max);
    let dhi = case.ibrs.iter().map(|u| u.params.d_bounds.1).fold(f64::MAX, f64::min);
    if mlo > mhi || dlo > dhi {
        return Err(Error::Params(
            "inverter schedulable boxes share no common (M, D) point".into(),
        ));
    }
    let sg = case.sg_aggregate()?;
    let wsum: f64 = (0..case.ibrs.len()).map(|j| case.ibr_weight(j)).sum();
    let need = case.f0 * adpe / case.limits.rocof_hz_per_s;
    let band = case.limits.nadir_band_hz / case.f0;

    let mut best: Option<(f64, f64)> = None;
    for &m in &grid(mlo, mhi, FIXED_MD_GRID_STEP) {
        for &d in &grid(dlo, dhi, FIXED_MD_GRID_STEP) {
            let m_tot = sg.m + wsum * m;
            let d_tot = sg.d + wsum * d;
            if m_tot + 1e-9 < need {
                continue;
            }
            if m_tot < bx[0].0 - 1e-9
                || m_tot > bx[0].1 + 1e-9
                || d_tot < bx[1].0 - 1e-9
                || d_tot > bx[1].1 + 1e-9
            {
                continue; // the predictor cannot certify this point
            }
            if predict(&models.nadir, &[m_tot, d_tot, adpe])? > band {
                continue;
            }
            let better = match best {
                None => true,
                Some((bm, bd)) => {
                    (m + d, m) < (bm + bd, bm)
                }
            };
            if better {
                best = Some((m, d));
            }
        }
    }
    best.ok_or_else(|| {
        Error::Dispatch(format!(
            "limits unattainable: no fixed (M, D) in the schedulable box meets the rate and \
             nadir limits at step {adpe}"
        ))
    })
}

fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step + 1e-9).floor() as i64;
    let mut v: Vec<f64> = (0..=n).map(|k| lo + k as f64 * step).collect();
    if hi - v.last().copied().unwrap_or(lo) > 1e-9 {
        v.push(hi);
    }
    v
}

/// Encodes the fragments one interval needs, with every input pinned as far
/// as the configuration allows: the step is always a point, and fixed-mode
/// (M, D) pin the inertia inputs too. Tight input boxes stabilize neuron
/// phases, so fixed-inertia intervals usually solve as pure linear programs.
fn frags_for(
    case: &Case,
    cfg: &MethodConfig,
    models: Option<&SurrogateModels>,
    d_pe: f64,
) -> Result<(Option<MilpFragment>, Vec<MilpFragment>)> {
    if d_pe == 0.0 || !(cfg.freq_constraints || cfg.peak_reserve_constraints) {
        return Ok((None, Vec::new()));
    }
    let models = models.expect("caller verified model presence");
    let adpe = d_pe.abs();
    let sg = case.sg_aggregate()?;
    let unit_box = |j: usize| -> ((f64, f64), (f64, f64)) {
        let u = &case.ibrs[j].params;
        match cfg.ibr_inertia {
            IbrInertiaMode::Fixed { m, d } => ((m, m), (d, d)),
            IbrInertiaMode::Scheduled => (u.m_bounds, u.d_bounds),
            IbrInertiaMode::None => unreachable!("validated configuration"),
        }
    };
    let mut m_range = (sg.m, sg.m);
    let mut d_range = (sg.d, sg.d);
    for j in 0..case.ibrs.len() {
        let w = case.ibr_weight(j);
        let (mb, db) = unit_box(j);
        m_range = (m_range.0 + w * mb.0, m_range.1 + w * mb.1);
        d_range = (d_range.0 + w * db.0, d_range.1 + w * db.1);
    }

    let nadir = if cfg.freq_constraints {
        let bx = models.nadir.input_box();
        let input_box = vec![
            fit(bx[0], m_range, "aggregate inertia")?,
            fit(bx[1], d_range, "aggregate damping")?,
            fit(bx[2], (adpe, adpe), "step size")?,
        ];
        let nb = propagate_bounds(&models.nadir, &input_box)?;
        Some(encode_relu_milp(&models.nadir, &nb)?)
    } else {
        None
    };
    let mut peaks = Vec::new();
    if cfg.peak_reserve_constraints {
        let bx = models.peak.input_box();
        for j in 0..case.ibrs.len() {
            let (mb, db) = unit_box(j);
            let id = &case.ibrs[j].params.id;
            let input_box = vec![
                fit(bx[0], m_range, "aggregate inertia")?,
                fit(bx[1], d_range, "aggregate damping")?,
                fit(bx[2], mb, &format!("virtual inertia of {id}"))?,
                fit(bx[3], db, &format!("virtual damping of {id}"))?,
                fit(bx[4], (adpe, adpe), "step size")?,
            ];
            let nb = propagate_bounds(&models.peak, &input_box)?;
            peaks.push(encode_relu_milp(&models.peak, &nb)?);
        }
    }
    Ok((nadir, peaks))
}

/// The needed range must sit inside the trained box (model preconditions);
/// the fragment is then built exactly on the needed range.
fn fit(trained: (f64, f64), needed: (f64, f64), what: &str) -> Result<(f64, f64)> {
    if needed.0 < trained.0 - 1e-9 || needed.1 > trained.1 + 1e-9 {
        return Err(Error::Domain(format!(
            "surrogate out of domain: {what} needs [{:.6}, {:.6}] but the model was trained \
             on [{:.6}, {:.6}]",
            needed.0, needed.1, trained.0, trained.1
        )));
    }
    Ok((needed.0.max(trained.0), needed.1.min(trained.1)))
}

fn collapse_to_defaults(case: &Case) -> Case {
    let mut c = case.clone();
    for u in &mut c.ibrs {
        u.params.m_bounds = (u.params.default_m, u.params.default_m);
        u.params.d_bounds = (u.params.default_d, u.params.default_d);
    }
    c
}

#[allow(clippy::too_many_arguments)]
fn solve_one(
    case: &Case,
    loads: &[(u32, f64)],
    d_pe: f64,
    cfg: &MethodConfig,
    models: Option<&SurrogateModels>,
    opts: &MilpOptions,
    t: usize,
) -> Result<IntervalSolution> {
    let (nfrag, pfrags) = frags_for(case, cfg, models, d_pe)?;
    let p = build_interval_problem(case, loads, d_pe, cfg, nfrag.as_ref(), &pfrags)?;
    let ms = solve_milp(&p, opts)?;
    let status = match ms.status {
        MilpStatus::Optimal => SolveStatus::Optimal,
        MilpStatus::Infeasible => {
            let hint = diagnose(case, loads, d_pe, cfg, nfrag.as_ref(), &pfrags, opts);
            return Err(Error::Dispatch(format!("interval {t} infeasible: {hint}")));
        }
        MilpStatus::Unbounded => {
            return Err(Error::Dispatch(format!(
                "interval {t}: unbounded problem (model defect)"
            )));
        }
        MilpStatus::NodeLimit | MilpStatus::TimeLimit if ms.x.is_empty() => {
            return Err(Error::Dispatch(format!(
                "interval {t}: no feasible schedule found within the solver budget"
            )));
        }
        MilpStatus::NodeLimit => SolveStatus::NodeLimit,
        MilpStatus::TimeLimit => SolveStatus::TimeLimit,
    };

    let chk = p.check_solution(&ms.x);
    if chk.max_violation() > 1e-6 {
        return Err(Error::Dispatch(format!(
            "interval {t}: solution fails the independent constraint re-check \
             (worst residual {:.3e})",
            chk.max_violation()
        )));
    }

    let sb = case.s_base_mva;
    let val = |name: &str| -> Result<f64> {
        let id = p
            .var_id(name)
            .ok_or_else(|| Error::Dispatch(format!("interval {t}: missing variable {name}")))?;
        Ok(ms.x[id])
    };
    let mw = |name: &str| -> Result<f64> { Ok(val(name)? * sb) };

    let mut sol = IntervalSolution {
        index: t,
        total_load_mw: loads.iter().map(|&(_, l)| l).sum(),
        d_pe,
        p_sg_mw: Vec::new(),
        ru_sg_mw: Vec::new(),
        rd_sg_mw: Vec::new(),
        p_ibr_mw: Vec::new(),
        ru_ibr_mw: Vec::new(),
        rd_ibr_mw: Vec::new(),
        peak_mw: Vec::new(),
        m_ibr: Vec::new(),
        d_ibr: Vec::new(),
        generation_cost: 0.0,
        reserve_cost: 0.0,
        status,
        gap: ms.gap,
        nodes: ms.nodes,
        binaries: p.vars().iter().filter(|v| v.is_integer).count(),
        refixed_for_stability: false,
        solve_ms: 0.0,
    };

    for u in &case.sgs {
        let id = &u.params.id;
        let pmw = mw(&format!("p:{id}"))?;
        let (ru, rd) = (mw(&format!("ru:{id}"))?, mw(&format!("rd:{id}"))?);
        let segs = piecewise_cost(&u.cost, u.pmin_mw, u.pmax_mw, COST_SEGMENTS)?;
        sol.generation_cost += eval_segments(&segs, pmw);
        sol.reserve_cost += u.cost.b_r * (ru + rd);
        sol.p_sg_mw.push(pmw);
        sol.ru_sg_mw.push(ru);
        sol.rd_sg_mw.push(rd);
    }
    for u in &case.ibrs {
        let id = &u.params.id;
        let pmw = mw(&format!("p:{id}"))?;
        let (ru, rd) = (mw(&format!("ru:{id}"))?, mw(&format!("rd:{id}"))?);
        let pk = if cfg.peak_reserve_constraints { mw(&format!("pk:{id}"))? } else { 0.0 };
        let segs = piecewise_cost(&u.cost, 0.0, u.capacity_mw, COST_SEGMENTS)?;
        sol.generation_cost += eval_segments(&segs, pmw);
        sol.reserve_cost += u.cost.b_r * (ru + rd + pk);
        sol.p_ibr_mw.push(pmw);
        sol.ru_ibr_mw.push(ru);
        sol.rd_ibr_mw.push(rd);
        sol.peak_mw.push(pk);
        match cfg.ibr_inertia {
            IbrInertiaMode::None => {
                sol.m_ibr.push(0.0);
                sol.d_ibr.push(0.0);
            }
            _ => {
                sol.m_ibr.push(val(&format!("m:{id}"))?);
                sol.d_ibr.push(val(&format!("d:{id}"))?);
            }
        }
    }

    let recomputed = sol.generation_cost + sol.reserve_cost;
    let scale = recomputed.abs().max(1.0);
    if (ms.objective - recomputed).abs() > 1e-6 * scale {
        return Err(Error::Dispatch(format!(
            "interval {t}: solver objective {} disagrees with the recomputed cost {recomputed}",
            ms.objective
        )));
    }
    let balance =
        (sol.p_sg_mw.iter().chain(&sol.p_ibr_mw).sum::<f64>() - sol.total_load_mw).abs() / sb;
    if balance > 1e-6 {
        return Err(Error::Dispatch(format!(
            "interval {t}: power balance residual {balance:.3e} p.u."
        )));
    }
    Ok(sol)
}

/// Re-solves with constraint families removed one at a time (most specific
/// first) and names the family whose removal restores feasibility.
fn diagnose(
    case: &Case,
    loads: &[(u32, f64)],
    d_pe: f64,
    cfg: &MethodConfig,
    nfrag: Option<&MilpFragment>,
    pfrags: &[MilpFragment],
    opts: &MilpOptions,
) -> String {
    let mut opts = opts.clone();
    opts.max_nodes = opts.max_nodes.min(20_000);
    let mut relax = Relax::default();
    let steps: [(&str, fn(&mut Relax)); 5] = [
        ("peak-headroom coupling", |r| r.peak = true),
        ("frequency-nadir bound", |r| r.nadir = true),
        ("inertia floor (rate limit)", |r| r.rocof = true),
        ("reserve adequacy", |r| r.reserve = true),
        ("line limits", |r| r.lines = true),
    ];
    for (label, apply) in steps {
        apply(&mut relax);
        let feasible = build_relaxed(case, loads, d_pe, cfg, nfrag, pfrags, relax)
            .and_then(|p| Ok(solve_milp(&p, &opts)?))
            .map(|s| !matches!(s.status, MilpStatus::Infeasible))
            .unwrap_or(false);
        if feasible {
            return format!("constraint family that failed last: {label}");
        }
    }
    "infeasible even with all security constraints relaxed (demand exceeds deliverable \
     capacity)"
        .to_string()
}
