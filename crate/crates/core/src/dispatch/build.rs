//! Assembly of one scheduling interval's optimization problem.
//!
//! Power variables are per-unit on the case's network base (`s_base_mva`);
//! cost terms are computed in MW and carried in dollars, so objective values
//! read directly as money. The disturbance `d_pe` is per-unit on the
//! dynamics base (`system_mva`), matching the frequency model.

use std::collections::HashMap;

use visched_milp::{MilpProblem, Sense, VarId};

use crate::casedata::Case;
use crate::surrogate::MilpFragment;
use crate::{Error, Result};

use super::pwl::{eval_segments, piecewise_cost};
use super::{GenCost, IbrInertiaMode, MethodConfig};

/// Segments per unit for the quadratic cost; the epigraph over-estimates by
/// at most `a·(range/COST_SEGMENTS)²/4` dollars.
pub const COST_SEGMENTS: usize = 8;

/// Constraint families that can be left out of a build, used to produce the
/// relaxed problems behind infeasibility diagnosis. All false = full build.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Relax {
    pub lines: bool,
    pub reserve: bool,
    pub rocof: bool,
    pub nadir: bool,
    pub peak: bool,
}

/// One interval's scheduling problem.
///
/// `loads` lists per-bus MW demand (buses must exist in the network; the
/// forecast split produces such rows). `d_pe` is the signed per-unit step
/// entering this interval on the dynamics base. `nadir_frag` is required
/// when the configuration builds frequency constraints and `d_pe != 0`;
/// `peak_frags` must then hold one fragment per inverter when peak headroom
/// is modeled. With `d_pe == 0` there is no transient, so the disturbance
/// constraints (inertia floor, nadir bound, headroom sizing, reserve
/// adequacy) degenerate and are omitted; scheduled (M, D) then rest at the
/// unit defaults.
///
/// Variable names follow `p:/th:/ru:/rd:/pk:/m:/d:` plus the unit id;
/// surrogate fragments live under the `nadir:` and `pk<j>:` prefixes. The
/// horizon solver extracts solutions by these names.
pub fn build_interval_problem(
    case: &Case,
    loads: &[(u32, f64)],
    d_pe: f64,
    cfg: &MethodConfig,
    nadir_frag: Option<&MilpFragment>,
    peak_frags: &[MilpFragment],
) -> Result<MilpProblem> {
    build_relaxed(case, loads, d_pe, cfg, nadir_frag, peak_frags, Relax::default())
}

pub(crate) fn build_relaxed(
    case: &Case,
    loads: &[(u32, f64)],
    d_pe: f64,
    cfg: &MethodConfig,
    nadir_frag: Option<&MilpFragment>,
    peak_frags: &[MilpFragment],
    relax: Relax,
) -> Result<MilpProblem> {
    cfg.validate()?;
    if !d_pe.is_finite() {
        return Err(Error::Params(format!("non-finite disturbance {d_pe}")));
    }
    let sb = case.s_base_mva;
    let adpe = d_pe.abs();
    let active = d_pe != 0.0;
    let want_nadir = cfg.freq_constraints && active && !relax.nadir;
    let want_rocof = cfg.freq_constraints && active && !relax.rocof;
    let want_peak = cfg.peak_reserve_constraints && active && !relax.peak;
    if want_nadir && nadir_frag.is_none() {
        return Err(Error::Params(
            "frequency constraints requested but no nadir surrogate fragment given".into(),
        ));
    }
    if want_peak && peak_frags.len() != case.ibrs.len() {
        return Err(Error::Params(format!(
            "peak headroom requested: need one fragment per inverter ({}), got {}",
            case.ibrs.len(),
            peak_frags.len()
        )));
    }

    let bus_index: HashMap<u32, usize> =
        case.network.buses.iter().enumerate().map(|(i, &b)| (b, i)).collect();
    for &(b, mw) in loads {
        if !bus_index.contains_key(&b) {
            return Err(Error::Params(format!("load on unknown bus {b}")));
        }
        if !mw.is_finite() {
            return Err(Error::Params(format!("non-finite load {mw} MW on bus {b}")));
        }
    }

    let mut p = MilpProblem::new(format!("interval-{:?}", cfg.variant));

    // Per-unit generation, cost epigraph, and reserve variables.
    let mut gen_vars: Vec<(usize, VarId)> = Vec::new(); // (bus index, setpoint var)
    let mut ru_vars: Vec<VarId> = Vec::new();
    let mut rd_vars: Vec<VarId> = Vec::new();
    for u in &case.sgs {
        let id = &u.params.id;
        let pv = p.add_var(format!("p:{id}"), u.pmin_mw / sb, u.pmax_mw / sb, 0.0)?;
        add_cost_epigraph(&mut p, id, pv, sb, &u.cost, u.pmin_mw, u.pmax_mw)?;
        let range = (u.pmax_mw - u.pmin_mw) / sb;
        let ru = p.add_var(format!("ru:{id}"), 0.0, range, u.cost.b_r * sb)?;
        let rd = p.add_var(format!("rd:{id}"), 0.0, range, u.cost.b_r * sb)?;
        p.add_row(format!("cap+:{id}"), Sense::Le, u.pmax_mw / sb, vec![(pv, 1.0), (ru, 1.0)])?;
        p.add_row(format!("cap-:{id}"), Sense::Ge, u.pmin_mw / sb, vec![(pv, 1.0), (rd, -1.0)])?;
        gen_vars.push((bus_index[&u.bus], pv));
        ru_vars.push(ru);
        rd_vars.push(rd);
    }

    let mut pk_vars: Vec<Option<VarId>> = Vec::new();
    let mut m_vars: Vec<Option<VarId>> = Vec::new();
    let mut d_vars: Vec<Option<VarId>> = Vec::new();
    for u in &case.ibrs {
        let id = &u.params.id;
        let cap = u.capacity_mw / sb;
        let pv = p.add_var(format!("p:{id}"), 0.0, cap, 0.0)?;
        add_cost_epigraph(&mut p, id, pv, sb, &u.cost, 0.0, u.capacity_mw)?;
        let ru = p.add_var(format!("ru:{id}"), 0.0, cap, u.cost.b_r * sb)?;
        let rd = p.add_var(format!("rd:{id}"), 0.0, cap, u.cost.b_r * sb)?;
        let pk = if cfg.peak_reserve_constraints {
            Some(p.add_var(format!("pk:{id}"), 0.0, cap, u.cost.b_r * sb)?)
        } else {
            None
        };
        let mut up = vec![(pv, 1.0), (ru, 1.0)];
        let mut dn = vec![(pv, 1.0), (rd, -1.0)];
        if let Some(pk) = pk {
            up.push((pk, 1.0));
            dn.push((pk, -1.0));
        }
        p.add_row(format!("cap+:{id}"), Sense::Le, cap, up)?;
        p.add_row(format!("cap-:{id}"), Sense::Ge, 0.0, dn)?;

        let (m, d) = match cfg.ibr_inertia {
            IbrInertiaMode::None => (None, None),
            IbrInertiaMode::Fixed { m, d } => {
                let (mlo, mhi) = u.params.m_bounds;
                let (dlo, dhi) = u.params.d_bounds;
                if !(m >= mlo && m <= mhi && d >= dlo && d <= dhi) {
                    return Err(Error::Params(format!(
                        "fixed virtual (M, D) = ({m}, {d}) outside the schedulable box \
                         [{mlo}, {mhi}] × [{dlo}, {dhi}] of {id}"
                    )));
                }
                (
                    Some(p.add_var(format!("m:{id}"), m, m, 0.0)?),
                    Some(p.add_var(format!("d:{id}"), d, d, 0.0)?),
                )
            }
            IbrInertiaMode::Scheduled => {
                // With no disturbance nothing constrains (M, D); rest them at
                // the unit defaults so the schedule is deterministic.
                let (mb, db) = if active {
                    (u.params.m_bounds, u.params.d_bounds)
                } else {
                    (
                        (u.params.default_m, u.params.default_m),
                        (u.params.default_d, u.params.default_d),
                    )
                };
                (
                    Some(p.add_var(format!("m:{id}"), mb.0, mb.1, 0.0)?),
                    Some(p.add_var(format!("d:{id}"), db.0, db.1, 0.0)?),
                )
            }
        };
        gen_vars.push((bus_index[&u.bus], pv));
        ru_vars.push(ru);
        rd_vars.push(rd);
        pk_vars.push(pk);
        m_vars.push(m);
        d_vars.push(d);
    }

    // Generation and load balance.
    let total_load_mw: f64 = loads.iter().map(|&(_, mw)| mw).sum();
    p.add_row(
        "bal",
        Sense::Eq,
        total_load_mw / sb,
        gen_vars.iter().map(|&(_, v)| (v, 1.0)).collect(),
    )?;

    // Line limits in both directions, loads moved to the right-hand side.
    if !relax.lines {
        for (l, line) in case.network.lines.iter().enumerate() {
            let row = &case.network.gsf[l];
            let load_mw: f64 = loads.iter().map(|&(b, mw)| row[bus_index[&b]] * mw).sum();
            let coeffs: Vec<(VarId, f64)> = gen_vars
                .iter()
                .filter(|&&(bi, _)| row[bi].abs() > 1e-12)
                .map(|&(bi, v)| (v, row[bi]))
                .collect();
            if coeffs.is_empty() {
                continue;
            }
            let tag = format!("{}-{}", line.from, line.to);
            p.add_row(
                format!("flow+:{tag}"),
                Sense::Le,
                (line.limit_mw + load_mw) / sb,
                coeffs.clone(),
            )?;
            p.add_row(
                format!("flow-:{tag}"),
                Sense::Ge,
                (-line.limit_mw + load_mw) / sb,
                coeffs,
            )?;
        }
    }

    // Reserve adequacy: enough regulation each way to cover the step.
    if active && !relax.reserve {
        let need = adpe * case.system_mva / sb;
        p.add_row("radq+", Sense::Ge, need, ru_vars.iter().map(|&v| (v, 1.0)).collect())?;
        p.add_row("radq-", Sense::Ge, need, rd_vars.iter().map(|&v| (v, 1.0)).collect())?;
    }

    let sg_agg = case.sg_aggregate()?;
    let weights: Vec<f64> = (0..case.ibrs.len()).map(|j| case.ibr_weight(j)).collect();

    // Inertia floor: the initial rate of change is f0·|d_pe|/M_t, so the
    // rate limit is exactly the linear bound M_t ≥ f0·|d_pe|/limit.
    if want_rocof {
        let need_m = case.f0 * adpe / case.limits.rocof_hz_per_s;
        let coeffs: Vec<(VarId, f64)> = m_vars
            .iter()
            .zip(&weights)
            .map(|(m, &w)| (m.expect("inertia mode gives every inverter an M var"), w))
            .collect();
        p.add_row("rocof", Sense::Ge, need_m - sg_agg.m, coeffs)?;
    }

    // Nadir bound through the encoded surrogate.
    if want_nadir {
        let frag = nadir_frag.expect("checked above");
        check_dpe_domain(frag, 2, adpe, "nadir")?;
        let (xin, y) = frag.append_to(&mut p, "nadir:")?;
        p.set_bounds(xin[2], adpe, adpe)?;
        link_aggregate(&mut p, "nadir:", xin[0], xin[1], &m_vars, &d_vars, &weights, &sg_agg)?;
        let band = case.limits.nadir_band_hz / case.f0;
        p.add_row("nadir:band", Sense::Le, band, vec![(y, 1.0)])?;
    }

    // Transient-headroom sizing per inverter through the peak surrogate.
    if want_peak {
        for (j, u) in case.ibrs.iter().enumerate() {
            let id = &u.params.id;
            let frag = &peak_frags[j];
            check_dpe_domain(frag, 4, adpe, id)?;
            let prefix = format!("pk{j}:");
            let (xin, y) = frag.append_to(&mut p, &prefix)?;
            p.set_bounds(xin[4], adpe, adpe)?;
            link_aggregate(&mut p, &prefix, xin[0], xin[1], &m_vars, &d_vars, &weights, &sg_agg)?;
            let mv = m_vars[j].expect("peak headroom needs inverter inertia variables");
            let dv = d_vars[j].expect("peak headroom needs inverter damping variables");
            check_link_domain(&p, xin[2], mv, &format!("virtual inertia of {id}"))?;
            check_link_domain(&p, xin[3], dv, &format!("virtual damping of {id}"))?;
            p.add_row(format!("{prefix}link:mi"), Sense::Eq, 0.0, vec![(xin[2], 1.0), (mv, -1.0)])?;
            p.add_row(format!("{prefix}link:di"), Sense::Eq, 0.0, vec![(xin[3], 1.0), (dv, -1.0)])?;
            let pk = pk_vars[j].expect("peak headroom variables exist in this mode");
            p.add_row(
                format!("{prefix}size"),
                Sense::Ge,
                0.0,
                vec![(pk, 1.0), (y, -u.params.mva_base / sb)],
            )?;
        }
    }

    p.validate()?;
    Ok(p)
}

/// Adds the cost variable for one unit and its epigraph rows. The epigraph
/// is in dollars over the MW range, tied to the per-unit setpoint variable.
fn add_cost_epigraph(
    p: &mut MilpProblem,
    id: &str,
    pv: VarId,
    sb: f64,
    cost: &GenCost,
    pmin_mw: f64,
    pmax_mw: f64,
) -> Result<VarId> {
    let segs = piecewise_cost(cost, pmin_mw, pmax_mw, COST_SEGMENTS)?;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for k in 0..=segs.len() {
        let pmw = pmin_mw + (pmax_mw - pmin_mw) * k as f64 / segs.len() as f64;
        let v = eval_segments(&segs, pmw);
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let th = p.add_var(format!("th:{id}"), lo - 1.0, hi + 1.0, 1.0)?;
    for (k, s) in segs.iter().enumerate() {
        p.add_row(
            format!("seg:{id}:{k}"),
            Sense::Ge,
            s.intercept,
            vec![(th, 1.0), (pv, -s.slope * sb)],
        )?;
    }
    Ok(th)
}

/// Ties a fragment's aggregate-inertia and aggregate-damping inputs to the
/// synchronous aggregate plus the weighted inverter contributions.
#[allow(clippy::too_many_arguments)]
fn link_aggregate(
    p: &mut MilpProblem,
    prefix: &str,
    xm: VarId,
    xd: VarId,
    m_vars: &[Option<VarId>],
    d_vars: &[Option<VarId>],
    weights: &[f64],
    sg_agg: &crate::freq::SyntheticParams,
) -> Result<()> {
    for (x, vars, base, what) in [
        (xm, m_vars, sg_agg.m, "aggregate inertia"),
        (xd, d_vars, sg_agg.d, "aggregate damping"),
    ] {
        let mut lo = base;
        let mut hi = base;
        let mut coeffs = vec![(x, 1.0)];
        for (v, &w) in vars.iter().zip(weights) {
            let v = v.expect("frequency constraints give every inverter (M, D) vars");
            lo += w * p.vars()[v].lower;
            hi += w * p.vars()[v].upper;
            coeffs.push((v, -w));
        }
        let (xlo, xhi) = (p.vars()[x].lower, p.vars()[x].upper);
        if hi < xlo - 1e-9 || lo > xhi + 1e-9 {
            return Err(Error::Domain(format!(
                "surrogate out of domain: {what} range [{lo:.4}, {hi:.4}] does not meet the \
                 trained box [{xlo:.4}, {xhi:.4}]"
            )));
        }
        p.add_row(format!("{prefix}link:{}", if x == xm { "m" } else { "d" }), Sense::Eq, base, coeffs)?;
    }
    Ok(())
}

/// The disturbance input of a fragment must cover the requested step.
fn check_dpe_domain(frag: &MilpFragment, input: usize, adpe: f64, who: &str) -> Result<()> {
    let v = &frag.vars[frag.inputs[input]];
    if adpe < v.lo - 1e-12 || adpe > v.hi + 1e-12 {
        return Err(Error::Domain(format!(
            "surrogate out of domain: step size {adpe} outside the {who} fragment's trained \
             box [{}, {}]",
            v.lo, v.hi
        )));
    }
    Ok(())
}

/// A fragment input equated to a unit variable must have overlapping range.
fn check_link_domain(p: &MilpProblem, x: VarId, v: VarId, what: &str) -> Result<()> {
    let (xlo, xhi) = (p.vars()[x].lower, p.vars()[x].upper);
    let (vlo, vhi) = (p.vars()[v].lower, p.vars()[v].upper);
    if vhi < xlo - 1e-9 || vlo > xhi + 1e-9 {
        return Err(Error::Domain(format!(
            "surrogate out of domain: {what} range [{vlo}, {vhi}] does not meet the trained \
             box [{xlo}, {xhi}]"
        )));
    }
    Ok(())
}
